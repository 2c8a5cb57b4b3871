//! Sequential sampling of error strings from the diagonal partition
//! functions.
//!
//! Qubit `j` is drawn from `P(η_j | η_<j) ∝ Re⟨ω_{j+1}|T_j(η_j)|φ_{j−1}⟩`,
//! where `φ_{j−1}` is the running MPS and `ω_{j+1}` is the exact sum over all
//! later signs. Summing a gate over `η = η̄` gives the parity projector
//! `δ(σσ' = σ̄σ̄')` for any couplings, so every `ω` is a product of `PlusPlus`
//! and `BellBell` sites that depends only on the layout.
//!
//! The per-sample RNG is a `ChaCha8Rng` seeded with [`sample_seed`]. Each
//! qubit consumes one uniform `u ∈ [0, 1)` and flips iff `u < P(η_j = −1)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CouplingTable;
use crate::circuit::{chain_len, layer_sites, qubit_gate, qubit_sites, restart_projector, QubitSites};
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, EtaConfiguration, Syndrome};
use crate::logc::LogComplex;
use crate::mps::{MpsConfig, MpsState, ProductState, SiteLabel};

/// Precomputed `⟨ω_{j+1}|` for every qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSchedule {
    /// `after[j]` absorbs everything following qubit `j`, including the
    /// restart layer when `j` ends a column.
    pub after: Vec<ProductState>,
    /// `⟨ω_1|`, the sum over every sign.
    pub start: ProductState,
}

fn absorb_field(omega: &mut ProductState, site: usize) {
    omega.sites[site] = SiteLabel::BellBell;
}

fn absorb_pair(omega: &mut ProductState, site: usize) -> Result<()> {
    match (omega.sites[site], omega.sites[site + 1]) {
        (SiteLabel::PlusPlus, SiteLabel::PlusPlus) => Err(Error::Numerical(format!(
            "omega recursion left sites {site} and {} both unpaired",
            site + 1
        ))),
        _ => {
            omega.sites[site] = SiteLabel::BellBell;
            omega.sites[site + 1] = SiteLabel::BellBell;
            Ok(())
        }
    }
}

/// `⟨Bell|J = 2⟨++|` and `⟨++|J = 4⟨++|` for the all-ones restart `J`.
fn absorb_layer(omega: &mut ProductState, sites: &[usize]) {
    for &k in sites {
        omega.log_scale += match omega.sites[k] {
            SiteLabel::BellBell => 2f64.ln(),
            SiteLabel::PlusPlus => 4f64.ln(),
        };
        omega.sites[k] = SiteLabel::PlusPlus;
    }
}

/// True when qubit `j` is the last of a column that is followed by a
/// restart layer; returns that column.
fn layer_after(layout: &CodeLayout, j: usize) -> Option<usize> {
    let (l, m) = layout.coords(j);
    (m == layout.m() && l < layout.l()).then_some(l)
}

pub fn build_omega_schedule(layout: &CodeLayout) -> Result<OmegaSchedule> {
    let n = layout.n_qubits();
    let mut cur = ProductState::uniform(chain_len(layout), SiteLabel::PlusPlus);
    let mut after = vec![cur.clone(); n];
    for j in (0..n).rev() {
        if let Some(l) = layer_after(layout, j) {
            absorb_layer(&mut cur, &layer_sites(layout, l));
        }
        after[j] = cur.clone();
        match qubit_sites(layout, j) {
            QubitSites::Field(k) => absorb_field(&mut cur, k),
            QubitSites::Pair(k) => absorb_pair(&mut cur, k)?,
        }
    }
    Ok(OmegaSchedule { after, start: cur })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub mps: MpsConfig,
    /// Negative `Re a` above `−tol·(|a₊| + |a₋|)` is clamped to zero.
    pub clamp_tolerance: f64,
    /// Retry a faulted sample once with doubled `chi_max`.
    pub retry: bool,
    /// Record the entanglement profile of the final state.
    pub entanglement: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { mps: MpsConfig::default(), clamp_tolerance: 1e-9, retry: true, entanglement: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub eta: EtaConfiguration,
    pub syndrome: Syndrome,
    pub class: u8,
    /// Probability of the drawn branch at each qubit.
    pub conditionals: Vec<f64>,
    pub seed: u64,
    pub truncation_error: f64,
    pub clamp_events: usize,
    /// Largest `|Im a| / |a|` seen among the branch amplitudes.
    pub max_imag_residue: f64,
    /// `⟨φ₀|M_η|φ₀⟩`, equal to `Z_{qq,s}` of the drawn class.
    pub class_weight: LogComplex,
    /// Entropy at each bond of the final chain state.
    pub entanglement: Vec<f64>,
    pub retried: bool,
}

impl SampleRecord {
    /// `Σ_j ln P(η_j | η_<j)`.
    pub fn log_path_probability(&self) -> f64 {
        self.conditionals.iter().map(|c| c.ln()).sum()
    }

    /// Entropy at the central bond.
    pub fn mid_entropy(&self) -> Option<f64> {
        if self.entanglement.is_empty() {
            return None;
        }
        Some(self.entanglement[(self.entanglement.len() - 1) / 2])
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(&SampleLine::from(self))?)
    }
}

/// Serialized form of a [`SampleRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub eta: String,
    pub syndrome: Vec<usize>,
    pub class: u8,
    pub seed: u64,
    pub log_path_probability: f64,
    pub class_weight_log: f64,
    pub truncation_error: f64,
    pub clamp_events: usize,
    pub max_imag_residue: f64,
    pub mid_entropy: Option<f64>,
    pub retried: bool,
}

impl From<&SampleRecord> for SampleLine {
    fn from(r: &SampleRecord) -> Self {
        Self {
            eta: r.eta.to_bitstring(),
            syndrome: r.syndrome.flipped().to_vec(),
            class: r.class,
            seed: r.seed,
            log_path_probability: r.log_path_probability(),
            class_weight_log: r.class_weight.log_magnitude,
            truncation_error: r.truncation_error,
            clamp_events: r.clamp_events,
            max_imag_residue: r.max_imag_residue,
            mid_entropy: r.mid_entropy(),
            retried: r.retried,
        }
    }
}

pub fn write_json_lines<W: Write>(mut out: W, records: &[SampleRecord]) -> Result<()> {
    for r in records {
        out.write_all(r.to_json_line()?.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `index`: `splitmix(master ⊕ splitmix(index))`, a bijection
/// in `index` for fixed `master`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix(master ^ splitmix(index))
}

/// Reference sampler: independent flips with probabilities `probs`, one
/// uniform per qubit.
pub fn bernoulli_eta(probs: &[f64], seed: u64) -> EtaConfiguration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs = probs.iter().map(|&p| if rng.random::<f64>() < p { -1 } else { 1 }).collect();
    EtaConfiguration::from_signs(signs).expect("signs are ±1")
}

struct Fault(String);

fn branch_probability(a_plus: LogComplex, a_minus: LogComplex, tol: f64, clamps: &mut usize) -> std::result::Result<f64, Fault> {
    let pivot = a_plus.log_magnitude.max(a_minus.log_magnitude);
    if pivot == f64::NEG_INFINITY {
        return Err(Fault("both branches vanish".into()));
    }
    let (ap, am) = (a_plus.to_complex_scaled(pivot), a_minus.to_complex_scaled(pivot));
    let scale = ap.norm() + am.norm();
    let mut clamp = |x: f64| -> std::result::Result<f64, Fault> {
        if x >= 0.0 {
            Ok(x)
        } else if x >= -tol * scale {
            *clamps += 1;
            Ok(0.0)
        } else {
            Err(Fault(format!("negative branch weight {x:.3e} (scale {scale:.3e})")))
        }
    };
    let (rp, rm) = (clamp(ap.re)?, clamp(am.re)?);
    if rp + rm == 0.0 {
        return Err(Fault("branch weights clamp to zero".into()));
    }
    Ok(rp / (rp + rm))
}

fn imag_residue(a: LogComplex) -> f64 {
    if a.is_zero() {
        0.0
    } else {
        a.phase.sin().abs()
    }
}

/// Draws one error string.
pub fn sample_eta(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    schedule: &OmegaSchedule,
    seed: u64,
    config: &SamplerConfig,
) -> Result<SampleRecord> {
    match sample_once(layout, couplings, schedule, seed, config) {
        Ok(r) => Ok(r),
        Err(Fault(first)) if config.retry => {
            let mut wider = *config;
            wider.mps.chi_max *= 2;
            let mut r = sample_once(layout, couplings, schedule, seed, &wider)
                .map_err(|Fault(again)| Error::Numerical(format!("{first}; after retry with chi {}: {again}", wider.mps.chi_max)))?;
            r.retried = true;
            Ok(r)
        }
        Err(Fault(msg)) => Err(Error::Numerical(msg)),
    }
}

fn sample_once(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    schedule: &OmegaSchedule,
    seed: u64,
    config: &SamplerConfig,
) -> std::result::Result<SampleRecord, Fault> {
    let n = layout.n_qubits();
    let fault = |e: Error| Fault(e.to_string());
    if couplings.len() != n || schedule.after.len() != n {
        return Err(fault(Error::LengthMismatch { expected: n, got: couplings.len().min(schedule.after.len()) }));
    }
    let bernoulli = couplings.single_species();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terminal = ProductState::uniform(chain_len(layout), SiteLabel::PlusPlus);
    let mut state = MpsState::from_product_state(&terminal, config.mps).map_err(fault)?;
    let projector = restart_projector();
    let mut signs = Vec::with_capacity(n);
    let mut conditionals = Vec::with_capacity(n);
    let mut clamp_events = 0;
    let mut max_imag_residue: f64 = 0.0;
    for j in 0..n {
        let w = couplings.weights(j);
        let p_minus = if bernoulli {
            couplings.flip_probability(j)
        } else {
            let plus = qubit_gate(layout, w, j, 1, 1);
            let minus = qubit_gate(layout, w, j, -1, -1);
            let a_plus = state.overlap_with_gate(&schedule.after[j], Some(&plus)).map_err(fault)?;
            let a_minus = state.overlap_with_gate(&schedule.after[j], Some(&minus)).map_err(fault)?;
            max_imag_residue = max_imag_residue.max(imag_residue(a_plus)).max(imag_residue(a_minus));
            let p_plus = branch_probability(a_plus, a_minus, config.clamp_tolerance, &mut clamp_events)
                .map_err(|Fault(m)| Fault(format!("qubit {j}: {m}")))?;
            1.0 - p_plus
        };
        let u: f64 = rng.random();
        let eta: i8 = if u < p_minus { -1 } else { 1 };
        signs.push(eta);
        conditionals.push(if eta < 0 { p_minus } else { 1.0 - p_minus });
        state.apply_gate(&qubit_gate(layout, w, j, eta, eta)).map_err(fault)?;
        if let Some(l) = layer_after(layout, j) {
            for k in layer_sites(layout, l).into_iter().rev() {
                match state.apply_single_site_projector(k, &projector) {
                    Err(Error::Annihilated { site }) => {
                        return Err(Fault(format!("state annihilated at site {site} after qubit {j}")))
                    }
                    r => r.map_err(fault)?,
                }
            }
        }
    }
    let eta = EtaConfiguration::from_signs(signs).map_err(fault)?;
    let (syndrome, class) = layout.classify(&eta).map_err(fault)?;
    let class_weight = state.overlap_with_product_state(&terminal).map_err(fault)?;
    let entanglement = if config.entanglement && state.n_sites() > 1 {
        state.entanglement_profile().map_err(fault)?
    } else {
        Vec::new()
    };
    Ok(SampleRecord {
        eta,
        syndrome,
        class,
        conditionals,
        seed,
        truncation_error: state.truncation_error(),
        clamp_events,
        max_imag_residue,
        class_weight,
        entanglement,
        retried: false,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BatchStats {
    pub clamp_events: usize,
    pub retried: usize,
    pub max_truncation_error: f64,
    pub max_imag_residue: f64,
}

#[derive(Clone, Debug)]
pub struct Batch {
    pub records: Vec<SampleRecord>,
    pub stats: BatchStats,
}

/// `n_samples` records with seeds `sample_seed(master_seed, i)`, in index
/// order regardless of scheduling.
pub fn sample_batch(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    n_samples: usize,
    master_seed: u64,
    config: &SamplerConfig,
) -> Result<Batch> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let schedule = build_omega_schedule(layout)?;
    let records = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| sample_eta(layout, couplings, &schedule, sample_seed(master_seed, i), config))
        .collect::<Result<Vec<_>>>()?;
    let stats = records.iter().fold(BatchStats::default(), |mut s, r| {
        s.clamp_events += r.clamp_events;
        s.retried += usize::from(r.retried);
        s.max_truncation_error = s.max_truncation_error.max(r.truncation_error);
        s.max_imag_residue = s.max_imag_residue.max(r.max_imag_residue);
        s
    });
    Ok(Batch { records, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_gate_plan, contract, ContractionMethod};
    use crate::dense::DenseChain;

    #[test]
    fn schedule_shapes() {
        let layout = CodeLayout::square(5).unwrap();
        let sched = build_omega_schedule(&layout).unwrap();
        let last_col_start = layout.n_qubits() - layout.m();
        let all_bell = &sched.after[last_col_start];
        assert!(all_bell.sites.iter().all(|&s| s == SiteLabel::BellBell));
        let restarted = &sched.after[last_col_start - 1];
        for (k, s) in restarted.sites.iter().enumerate() {
            let projected = layer_sites(&layout, layout.l() - 1).contains(&k);
            assert_eq!(*s == SiteLabel::PlusPlus, projected);
        }
        assert!((restarted.log_scale - 2.0 * 2f64.ln()).abs() < 1e-15);
        let start = DenseChain::from_product_state(&ProductState::uniform(4, SiteLabel::PlusPlus)).unwrap();
        let total = start.overlap_with_product_state(&sched.start).unwrap();
        let n_x = layout.x_stabilizers().len() as f64;
        assert!((total.log_magnitude - n_x * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn omega_equals_suffix_sum_d3() {
        let layout = CodeLayout::square(3).unwrap();
        let c = CouplingTable::uniform(9, 0.17, 0.6).unwrap();
        let sched = build_omega_schedule(&layout).unwrap();
        let prefix = EtaConfiguration::from_flips(9, [1, 3]);
        for j in 0..9 {
            let mut brute = LogComplex::ZERO;
            for tail in 0u32..1 << (8 - j) {
                let mut signs: Vec<i8> = (0..9).map(|i| prefix.sign(i)).collect();
                for (b, i) in (j + 1..9).enumerate() {
                    signs[i] = if tail >> b & 1 == 1 { -1 } else { 1 };
                }
                let eta = EtaConfiguration::from_signs(signs).unwrap();
                let plan = build_gate_plan(&layout, &c, &eta, &eta).unwrap();
                brute = brute + contract(&plan, &ContractionMethod::Dense).unwrap().value;
            }
            let mut chain = DenseChain::from_product_state(&ProductState::uniform(2, SiteLabel::PlusPlus)).unwrap();
            for i in 0..=j {
                chain.apply_gate(&qubit_gate(&layout, c.weights(i), i, prefix.sign(i), prefix.sign(i))).unwrap();
                if let Some(l) = layer_after(&layout, i).filter(|_| i < j) {
                    for k in layer_sites(&layout, l) {
                        chain.apply_single_site_operator(k, &restart_projector()).unwrap();
                    }
                }
            }
            let analytic = chain.overlap_with_product_state(&sched.after[j]).unwrap();
            assert!(brute.relative_deviation(&analytic) < 1e-12, "j={j}");
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for master in [0u64, 1, 42] {
            for i in 0..100_000u64 {
                assert!(seen.insert((master, sample_seed(master, i))));
            }
        }
        let a: std::collections::HashSet<u64> = (0..500_000).map(|i| sample_seed(7, i)).collect();
        assert!((500_000..1_000_000).all(|i| !a.contains(&sample_seed(7, i))));
    }

    #[test]
    fn zero_noise_gives_identity() {
        let layout = CodeLayout::square(3).unwrap();
        let c = CouplingTable::uniform(9, 0.0, 0.5).unwrap();
        let sched = build_omega_schedule(&layout).unwrap();
        for seed in 0..20 {
            let r = sample_eta(&layout, &c, &sched, seed, &SamplerConfig::default()).unwrap();
            assert_eq!(r.eta.weight(), 0);
        }
    }

    #[test]
    fn conditionals_multiply_to_class_weight() {
        let layout = CodeLayout::square(3).unwrap();
        let c = CouplingTable::uniform(9, 0.12, 0.8).unwrap();
        let sched = build_omega_schedule(&layout).unwrap();
        let n_x = layout.x_stabilizers().len() as f64;
        for seed in 0..20 {
            let r = sample_eta(&layout, &c, &sched, seed, &SamplerConfig::default()).unwrap();
            let path = r.log_path_probability() + n_x * 2f64.ln();
            assert!((path - r.class_weight.log_magnitude).abs() < 1e-10);
        }
    }
}
