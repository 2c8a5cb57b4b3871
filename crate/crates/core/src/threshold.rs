//! Finite-size crossings of logical error curves.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::MetricsRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Optimal-decoder `P_L`.
    LogicalError,
    /// MWPM failure rate.
    Mwpm,
}

impl Metric {
    fn value(&self, row: &MetricsRow) -> Option<(f64, f64)> {
        match self {
            Metric::LogicalError => Some((row.p_l, row.p_l_sem)),
            Metric::Mwpm => Some((row.p_l_mwpm?, row.p_l_mwpm_sem?)),
        }
    }
}

/// One curve `y(p)` at fixed `d`, sorted by `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub d: usize,
    pub p: Vec<f64>,
    pub mean: Vec<f64>,
    pub sem: Vec<f64>,
}

/// Curves of `metric` at `gamma`, ordered by `d`.
pub fn curves(rows: &[MetricsRow], gamma: f64, metric: Metric) -> Vec<Curve> {
    let mut ds: Vec<usize> = rows.iter().filter(|r| r.gamma == gamma).map(|r| r.d).collect();
    ds.sort_unstable();
    ds.dedup();
    ds.into_iter()
        .map(|d| {
            let mut pts: Vec<(f64, f64, f64)> = rows
                .iter()
                .filter(|r| r.d == d && r.gamma == gamma)
                .filter_map(|r| metric.value(r).map(|(m, s)| (r.p, m, s)))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Curve {
                d,
                p: pts.iter().map(|t| t.0).collect(),
                mean: pts.iter().map(|t| t.1).collect(),
                sem: pts.iter().map(|t| t.2).collect(),
            }
        })
        .collect()
}

/// Where the larger code's curve rises through the smaller one's.
///
/// Linear interpolation of `Δ = y_large − y_small` at every upward sign
/// change; with several, the median.
pub fn pair_crossing(p: &[f64], small: &[f64], large: &[f64]) -> Option<f64> {
    let delta: Vec<f64> = large.iter().zip(small).map(|(b, a)| b - a).collect();
    let mut found: Vec<f64> = delta
        .windows(2)
        .zip(p.windows(2))
        .filter(|(w, _)| w[0] < 0.0 && w[1] >= 0.0)
        .map(|(w, x)| x[0] + (x[1] - x[0]) * (-w[0]) / (w[1] - w[0]))
        .collect();
    if found.is_empty() {
        return None;
    }
    found.sort_by(f64::total_cmp);
    let k = found.len();
    Some(if k % 2 == 1 { found[k / 2] } else { 0.5 * (found[k / 2 - 1] + found[k / 2]) })
}

fn combined(p: &[f64], ys: &[Vec<f64>]) -> (Vec<Option<f64>>, Option<f64>) {
    let pairs: Vec<Option<f64>> = ys.windows(2).map(|w| pair_crossing(p, &w[0], &w[1])).collect();
    let hits: Vec<f64> = pairs.iter().flatten().copied().collect();
    let est = if hits.is_empty() { None } else { Some(hits.iter().sum::<f64>() / hits.len() as f64) };
    (pairs, est)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCrossing {
    pub d_small: usize,
    pub d_large: usize,
    pub crossing: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ThresholdEstimate {
    Crossing {
        estimate: f64,
        /// 2.5 and 97.5 percentiles of the bootstrap estimates.
        ci: (f64, f64),
        /// Fraction of bootstrap replicates that found a crossing.
        bootstrap_hit_rate: f64,
        pairs: Vec<PairCrossing>,
    },
    NoCrossing {
        pairs: Vec<PairCrossing>,
    },
}

impl ThresholdEstimate {
    pub fn estimate(&self) -> Option<f64> {
        match self {
            ThresholdEstimate::Crossing { estimate, .. } => Some(*estimate),
            ThresholdEstimate::NoCrossing { .. } => None,
        }
    }
}

/// Threshold of `metric` at `gamma` from the consecutive-`d` crossings,
/// averaged; the confidence interval comes from a parametric bootstrap that
/// redraws every point from `N(mean, sem²)`.
pub fn threshold_scan(
    rows: &[MetricsRow],
    gamma: f64,
    metric: Metric,
    n_bootstrap: usize,
    seed: u64,
) -> Result<ThresholdEstimate> {
    let cs = curves(rows, gamma, metric);
    if cs.len() < 3 {
        return Err(Error::InvalidInput(format!("{} distances at gamma = {gamma}; need 3", cs.len())));
    }
    let p = cs[0].p.clone();
    if p.len() < 5 || cs.iter().any(|c| c.p != p) {
        return Err(Error::InvalidInput("need the same 5 or more p values for every distance".into()));
    }
    let means: Vec<Vec<f64>> = cs.iter().map(|c| c.mean.clone()).collect();
    let (pair_values, estimate) = combined(&p, &means);
    let pairs = cs
        .windows(2)
        .zip(pair_values)
        .map(|(w, crossing)| PairCrossing { d_small: w[0].d, d_large: w[1].d, crossing })
        .collect();
    let Some(estimate) = estimate else {
        return Ok(ThresholdEstimate::NoCrossing { pairs });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot = Vec::with_capacity(n_bootstrap);
    for _ in 0..n_bootstrap {
        let ys: Vec<Vec<f64>> = cs
            .iter()
            .map(|c| {
                c.mean
                    .iter()
                    .zip(&c.sem)
                    .map(|(&m, &s)| match Normal::new(m, s) {
                        Ok(n) if s > 0.0 => n.sample(&mut rng),
                        _ => m,
                    })
                    .collect()
            })
            .collect();
        if let (_, Some(e)) = combined(&p, &ys) {
            boot.push(e);
        }
    }
    boot.sort_by(f64::total_cmp);
    let ci = if boot.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let at = |q: f64| boot[((q * (boot.len() - 1) as f64).round()) as usize];
        (at(0.025), at(0.975))
    };
    Ok(ThresholdEstimate::Crossing {
        estimate,
        ci,
        bootstrap_hit_rate: boot.len() as f64 / n_bootstrap.max(1) as f64,
        pairs,
    })
}

/// Location of the largest `y` when it is not at either end, refined by a
/// parabola through the peak and its neighbours.
pub fn interior_maximum(x: &[f64], y: &[f64]) -> Option<f64> {
    let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]))?;
    if k == 0 || k + 1 >= y.len() {
        return None;
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return Some(x1);
    }
    Some((x1 - 0.5 * num / den).clamp(x0, x2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{Mode, CSV_SCHEMA_VERSION};

    fn row(d: usize, p: f64, p_l: f64, sem: f64) -> MetricsRow {
        MetricsRow {
            schema_version: CSV_SCHEMA_VERSION,
            grid_index: 0,
            d,
            p,
            gamma: 0.05,
            mode: Mode::Sampled,
            seed: 0,
            n_samples: 2000,
            n_excluded: 0,
            p_l,
            p_l_sem: sem,
            p_l_mwpm: None,
            p_l_mwpm_sem: None,
            s_rel: None,
            s_rel_sem: None,
            s_rel_coherent: None,
            i_c: None,
            i_c_sem: None,
            gamma_l: None,
            gamma_l_sem: None,
            s_mid: None,
            s_mid_sem: None,
            sigma_s: None,
            max_truncation_error: 0.0,
            max_re_z01: 0.0,
            max_kappa: 0.0,
            retried: 0,
            clamp_events: 0,
        }
    }

    fn synthetic(p_star: f64, sem: f64) -> Vec<MetricsRow> {
        let mut rows = Vec::new();
        for d in [5, 7, 9] {
            for i in 0..7 {
                let p = 0.08 + 0.01 * i as f64;
                let y = 0.25 * (1.0 + ((p - p_star) * d as f64 * 8.0).tanh());
                rows.push(row(d, p, y, sem));
            }
        }
        rows
    }

    #[test]
    fn recovers_known_crossing() {
        let t = threshold_scan(&synthetic(0.111, 0.0), 0.05, Metric::LogicalError, 50, 1).unwrap();
        let ThresholdEstimate::Crossing { estimate, ci, .. } = t else { panic!("no crossing") };
        assert!((estimate - 0.111).abs() < 2e-3, "{estimate}");
        assert_eq!(ci, (estimate, estimate));

        let t = threshold_scan(&synthetic(0.111, 0.005), 0.05, Metric::LogicalError, 400, 1).unwrap();
        let ThresholdEstimate::Crossing { ci, bootstrap_hit_rate, .. } = t else { panic!("no crossing") };
        assert!(ci.0 < 0.111 && 0.111 < ci.1, "{ci:?}");
        assert!(bootstrap_hit_rate > 0.9);
    }

    #[test]
    fn monotone_curves_have_no_crossing() {
        let mut rows = Vec::new();
        for d in [5, 7, 9] {
            for i in 0..6 {
                let p = 0.05 + 0.01 * i as f64;
                rows.push(row(d, p, p / d as f64, 0.0));
            }
        }
        let t = threshold_scan(&rows, 0.05, Metric::LogicalError, 10, 0).unwrap();
        assert!(matches!(t, ThresholdEstimate::NoCrossing { .. }));
        assert_eq!(t.estimate(), None);
    }

    #[test]
    fn too_few_curves() {
        let rows: Vec<_> = synthetic(0.11, 0.0).into_iter().filter(|r| r.d != 9).collect();
        assert!(threshold_scan(&rows, 0.05, Metric::LogicalError, 10, 0).is_err());
        assert!(threshold_scan(&synthetic(0.11, 0.0), 0.05, Metric::Mwpm, 10, 0).is_err());
    }

    #[test]
    fn pair_crossing_interpolates() {
        let p = [0.0, 1.0, 2.0];
        assert_eq!(pair_crossing(&p, &[1.0, 1.0, 1.0], &[0.0, 0.5, 2.0]), Some(4.0 / 3.0));
        assert_eq!(pair_crossing(&p, &[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]), None);
    }

    #[test]
    fn parabola_peak() {
        let x: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| -(v - 1.3f64).powi(2)).collect();
        assert!((interior_maximum(&x, &y).unwrap() - 1.3).abs() < 1e-12);
        assert_eq!(interior_maximum(&x, &x), None);
    }
}
