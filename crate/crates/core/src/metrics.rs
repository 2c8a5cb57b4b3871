//! Syndrome-level observables and their ensemble averages.
//!
//! Every estimator is a mean of a per-syndrome quantity `f(s)`. In sampled
//! mode syndromes arrive with frequency `P(s)` and the plain sample mean is
//! used; in exhaustive mode each syndrome carries its exact weight.

use serde::Serialize;

use crate::circuit::ZMatrix;
use crate::error::{Error, Result};
use crate::lattice::Syndrome;

/// Smallest value passed to a logarithm.
pub const LOG_FLOOR: f64 = 1e-300;
/// Allowed negative determinant of a normalized block before it counts as a PSD fault.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Pairwise sum in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub mean: f64,
    /// Sample standard deviation over `√n`; zero for exact sums, NaN for `n < 2`.
    pub sem: f64,
    pub n: usize,
}

impl EstimateWithError {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, sem: f64::NAN, n };
        }
        let mean = pairwise_sum(values) / n as f64;
        let sem = if n < 2 { f64::NAN } else { (sample_variance(values, mean) / n as f64).sqrt() };
        Self { mean, sem, n }
    }

    /// `Σ w f / Σ w` with no statistical error.
    pub fn exact(values: &[f64], weights: &[f64]) -> Self {
        let total = pairwise_sum(weights);
        let products: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
        Self { mean: pairwise_sum(&products) / total, sem: 0.0, n: values.len() }
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn separation(&self, other: &Self) -> f64 {
        (self.mean - other.mean).abs() / self.sem.hypot(other.sem)
    }
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    pairwise_sum(&sq) / (values.len() - 1) as f64
}

/// `x ln x` with `0 ln 0 = 0`.
fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.max(LOG_FLOOR).ln()
    }
}

fn binary_entropy(a: f64) -> f64 {
    -x_ln_x(a) - x_ln_x(1.0 - a)
}

/// Eigenvalues `λ̃₀ ≤ λ̃₁` of the block divided by `P(s)`.
///
/// `λ̃₀` is taken as `det / λ̃₁`, which keeps it accurate near the coherent limit.
pub fn normalized_lambdas(z: &ZMatrix) -> Result<[f64; 2]> {
    let b = z.normalized();
    let disc = ((b.z00 - b.z11).powi(2) + 4.0 * b.z01.norm_sqr()).sqrt();
    let upper = 0.5 * (1.0 + disc);
    let det = b.z00 * b.z11 - b.z01.norm_sqr();
    if det < -PSD_TOLERANCE {
        return Err(Error::Numerical(format!("block not positive: det/P² = {det:e}")));
    }
    Ok([(det / upper).max(0.0), upper])
}

/// `λ_{n,s} = ½(P(s) ∓ √((Z00−Z11)² + 4|Z01|²))` in absolute units.
pub fn lambda_eigenvalues(z: &ZMatrix) -> Result<(f64, f64)> {
    let p = z.probability().re();
    let [l0, l1] = normalized_lambdas(z)?;
    Ok((l0 * p, l1 * p))
}

/// `4(Re Z01)² / ((Z00−Z11)² + 4|Z01|²)`, zero for a degenerate block.
pub fn kappa(z: &ZMatrix) -> f64 {
    let b = z.normalized();
    let den = (b.z00 - b.z11).powi(2) + 4.0 * b.z01.norm_sqr();
    if den == 0.0 {
        0.0
    } else {
        4.0 * b.z01.re.powi(2) / den
    }
}

/// `|Z01| / √(Z00 Z11)`, evaluated on log magnitudes.
pub fn block_coherence(z: &ZMatrix) -> Result<f64> {
    if z.z01.is_zero() {
        return Ok(0.0);
    }
    if z.z00.is_zero() || z.z11.is_zero() {
        return Err(Error::Numerical("zero diagonal with nonzero Z01".into()));
    }
    Ok((z.z01.log_magnitude - 0.5 * (z.z00.log_magnitude + z.z11.log_magnitude)).exp())
}

/// Per-syndrome quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyndromeObservables {
    pub syndrome: Syndrome,
    /// `ln P(s)`.
    pub log_probability: f64,
    pub lambda: [f64; 2],
    /// `Z11 / P(s)`.
    pub p_l: f64,
    /// `min_q Z_qq / P(s)`.
    pub min_infidelity: f64,
    pub gamma_l: f64,
    pub kappa: f64,
    /// `(1−κ) Σₙ λ̃ₙ ln(λ̃ₙ/λ̃₁₋ₙ)`; `None` for a rank-deficient block.
    pub s_rel: Option<f64>,
    pub i_c: f64,
    /// `|Re Z01| / P(s)`.
    pub re_z01: f64,
    pub mid_entropy: Option<f64>,
    /// `1 − Z_{qq} / P(s)` for the class `q` a decoder picked.
    pub decoder_failure: Option<f64>,
    pub flagged: bool,
}

impl SyndromeObservables {
    pub fn from_block(z: &ZMatrix) -> Result<Self> {
        let b = z.normalized();
        let lambda = normalized_lambdas(z)?;
        let kappa = kappa(z);
        let s_rel = if lambda[0] > LOG_FLOOR {
            Some((1.0 - kappa) * (lambda[1] - lambda[0]) * (lambda[1] / lambda[0]).ln())
        } else if lambda[1] - lambda[0] == 0.0 {
            Some(0.0)
        } else {
            None
        };
        let half_plus = (0.5 + b.z01.re).clamp(0.0, 1.0);
        let i_c = binary_entropy(half_plus) - binary_entropy(lambda[0]);
        Ok(Self {
            syndrome: z.syndrome.clone(),
            log_probability: z.probability().log_magnitude,
            lambda,
            p_l: b.z11,
            min_infidelity: b.z00.min(b.z11),
            gamma_l: block_coherence(z)?,
            kappa,
            s_rel,
            i_c,
            re_z01: b.z01.re.abs(),
            mid_entropy: None,
            decoder_failure: None,
            flagged: z.flagged,
        })
    }

    pub fn with_mid_entropy(mut self, s: Option<f64>) -> Self {
        self.mid_entropy = s;
        self
    }

    /// Records the outcome of decoding to class `q`.
    pub fn with_decoder_class(mut self, z: &ZMatrix, q: u8) -> Self {
        let b = z.normalized();
        self.decoder_failure = Some(1.0 - if q == 0 { b.z00 } else { b.z11 });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Sampled,
    Exhaustive,
}

/// Mean and spread of the mid-cut entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntanglementStatistics {
    pub mean: EstimateWithError,
    pub sigma: f64,
}

/// Observables of one ensemble of syndromes, with flagged contractions set aside.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    averaging: Averaging,
    items: Vec<SyndromeObservables>,
    weights: Vec<f64>,
    excluded: usize,
}

impl ObservableSet {
    pub fn new(averaging: Averaging, items: Vec<SyndromeObservables>) -> Self {
        let total = items.len();
        let items: Vec<_> = items.into_iter().filter(|o| !o.flagged).collect();
        let excluded = total - items.len();
        let weights = match averaging {
            Averaging::Sampled => vec![1.0; items.len()],
            Averaging::Exhaustive => {
                let top = items.iter().map(|o| o.log_probability).fold(f64::NEG_INFINITY, f64::max);
                items.iter().map(|o| (o.log_probability - top).exp()).collect()
            }
        };
        Self { averaging, items, weights, excluded }
    }

    pub fn averaging(&self) -> Averaging {
        self.averaging
    }

    pub fn items(&self) -> &[SyndromeObservables] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of flagged records left out.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    fn average(&self, values: &[f64]) -> EstimateWithError {
        match self.averaging {
            Averaging::Sampled => EstimateWithError::from_samples(values),
            Averaging::Exhaustive => EstimateWithError::exact(values, &self.weights),
        }
    }

    fn collect(&self, f: impl Fn(&SyndromeObservables) -> f64) -> Vec<f64> {
        self.items.iter().map(f).collect()
    }

    /// `P_L = ⟨min_q Z_qq / P(s)⟩`.
    pub fn logical_error_rate(&self) -> EstimateWithError {
        self.average(&self.collect(|o| o.min_infidelity))
    }

    /// `⟨Z11 / P(s)⟩`, the failure rate of never correcting the logical class.
    pub fn bare_error_rate(&self) -> EstimateWithError {
        self.average(&self.collect(|o| o.p_l))
    }

    /// Failure rate of the decoder recorded with each syndrome.
    pub fn decoder_error_rate(&self) -> Result<EstimateWithError> {
        let v: Option<Vec<f64>> = self.items.iter().map(|o| o.decoder_failure).collect();
        v.map(|v| self.average(&v)).ok_or_else(|| Error::InvalidInput("records without a decoder class".into()))
    }

    /// `S_rel = ⟨(1−κ) Σₙ λ̃ₙ ln(λ̃ₙ/λ̃₁₋ₙ)⟩`.
    pub fn relative_entropy(&self) -> Result<EstimateWithError> {
        let v: Option<Vec<f64>> = self.items.iter().map(|o| o.s_rel).collect();
        v.map(|v| self.average(&v)).ok_or_else(|| {
            let k = self.items.iter().filter(|o| o.s_rel.is_none()).count();
            Error::Numerical(format!("{k} rank-deficient blocks; relative entropy diverges"))
        })
    }

    /// `−Σ P(s) ln P(s)`, the coherent-limit relative entropy. Exhaustive mode only.
    pub fn coherent_limit_entropy(&self) -> Result<f64> {
        if self.averaging != Averaging::Exhaustive {
            return Err(Error::InvalidInput("coherent-limit entropy needs the exhaustive syndrome set".into()));
        }
        let total = pairwise_sum(&self.weights);
        let terms: Vec<f64> = self.weights.iter().map(|w| -x_ln_x(w / total)).collect();
        Ok(pairwise_sum(&terms))
    }

    /// `I_C = ⟨H(½ + Re Z̃01) − H(λ̃₀)⟩`.
    pub fn coherent_information(&self) -> EstimateWithError {
        self.average(&self.collect(|o| o.i_c))
    }

    /// `γ_L = ⟨|Z01| / √(Z00 Z11)⟩`.
    pub fn logical_coherence(&self) -> EstimateWithError {
        self.average(&self.collect(|o| o.gamma_l))
    }

    /// Mean and standard deviation of the mid-cut entropy over records that carry one.
    pub fn entanglement_statistics(&self) -> Option<EntanglementStatistics> {
        let (v, w): (Vec<f64>, Vec<f64>) = self
            .items
            .iter()
            .zip(&self.weights)
            .filter_map(|(o, w)| o.mid_entropy.map(|s| (s, *w)))
            .unzip();
        if v.is_empty() {
            return None;
        }
        let (mean, sigma) = match self.averaging {
            Averaging::Sampled => {
                let m = EstimateWithError::from_samples(&v);
                (m, if v.len() < 2 { f64::NAN } else { sample_variance(&v, m.mean).sqrt() })
            }
            Averaging::Exhaustive => {
                let m = EstimateWithError::exact(&v, &w);
                let sq: Vec<f64> = v.iter().map(|x| (x - m.mean).powi(2)).collect();
                (m, EstimateWithError::exact(&sq, &w).mean.sqrt())
            }
        };
        Some(EntanglementStatistics { mean, sigma })
    }

    pub fn max_re_z01(&self) -> f64 {
        self.items.iter().map(|o| o.re_z01).fold(0.0, f64::max)
    }

    pub fn max_kappa(&self) -> f64 {
        self.items.iter().map(|o| o.kappa).fold(0.0, f64::max)
    }
}

/// Least-squares fit of `ln y = ln A + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub log_prefactor: f64,
    pub rate: f64,
}

impl ExponentialFit {
    pub fn eval(&self, x: f64) -> f64 {
        (self.log_prefactor + self.rate * x).exp()
    }
}

/// Fits `y = A e^{b x}`; for `y = P₁/P₀` against `L`, `b = −1/(2ξ)`.
pub fn exponential_fit(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::InvalidInput("need two or more points with y > 0".into()));
    }
    let n = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(&ly) / n;
    let sxy: Vec<f64> = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx).powi(2)).collect();
    let den = pairwise_sum(&sxx);
    if den == 0.0 {
        return Err(Error::InvalidInput("all x equal".into()));
    }
    let rate = pairwise_sum(&sxy) / den;
    Ok(ExponentialFit { log_prefactor: my - rate * mx, rate })
}

/// Ensemble of exact blocks for every syndrome of a small code.
pub fn exhaustive_set(blocks: &[ZMatrix]) -> Result<ObservableSet> {
    let items = blocks.iter().map(SyndromeObservables::from_block).collect::<Result<Vec<_>>>()?;
    Ok(ObservableSet::new(Averaging::Exhaustive, items))
}

/// `KL(P_q,s ‖ P_{1−q,s}) = Σ_{q,s} P_qs ln(P_qs / P_{1−q,s})` over class probabilities.
pub fn class_kl_divergence(classes: &[[f64; 2]]) -> f64 {
    let terms: Vec<f64> = classes
        .iter()
        .flat_map(|[a, b]| [(a, b), (b, a)])
        .map(|(&x, &y)| if x <= 0.0 { 0.0 } else { x * (x / y.max(LOG_FLOOR)).ln() })
        .collect();
    pairwise_sum(&terms)
}
