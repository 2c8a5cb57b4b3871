//! Transfer-matrix circuit for the two-species partition functions.
//!
//! The X checks of column `l` and `l-1` are stacked into a chain of `M−1`
//! sites, one per row gap. Qubits are absorbed one at a time in index order:
//! a bulk qubit `(l, m)` couples sites `m−2` and `m−1`, the qubits on the top
//! and bottom rows act as fields on the first or last site. After each column
//! the sites whose check is complete are summed out and restarted by the
//! all-ones projector, which alternates between the two site parities.
//!
//! With the all-ones boundary vector on both ends the contraction returns the
//! partition function itself, `Z = Σ_{σ,σ̄} Π_j w_j(η_j σσ', η̄_j σ̄σ̄')`.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::channel::{BondWeights, CouplingTable};
use crate::dense::DenseChain;
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, EtaConfiguration, Syndrome};
use crate::logc::LogComplex;
use crate::mps::{DiagonalGate, MpsConfig, MpsState, ProductState, SiteLabel, LOCAL_DIM};

/// Default bound on the accumulated discarded weight before a result is
/// flagged.
pub const DEFAULT_ERROR_BOUND: f64 = 1e-6;

/// Chain sites touched by one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitSites {
    Field(usize),
    Pair(usize),
}

/// Sites of the chain for qubit `j`.
pub fn qubit_sites(layout: &CodeLayout, j: usize) -> QubitSites {
    let (_, m) = layout.coords(j);
    let last = layout.m();
    if m == 1 {
        QubitSites::Field(0)
    } else if m == last {
        QubitSites::Field(last - 2)
    } else {
        QubitSites::Pair(m - 2)
    }
}

/// Sites restarted between column `l` and `l + 1`.
pub fn layer_sites(layout: &CodeLayout, l: usize) -> Vec<usize> {
    (0..layout.m() - 1).filter(|k| (l + k).is_multiple_of(2)).collect()
}

/// Number of chain sites.
pub fn chain_len(layout: &CodeLayout) -> usize {
    layout.m() - 1
}

fn spins(s: usize) -> (i8, i8) {
    (if s & 1 == 0 { 1 } else { -1 }, if s & 2 == 0 { 1 } else { -1 })
}

/// Gate of qubit `j` for the sign pair `(η, η̄)`.
pub fn qubit_gate(layout: &CodeLayout, w: &BondWeights, j: usize, eta: i8, eta_bar: i8) -> DiagonalGate {
    match qubit_sites(layout, j) {
        QubitSites::Field(site) => {
            let diag = std::array::from_fn(|s| {
                let (a, b) = spins(s);
                w.get(eta * a, eta_bar * b)
            });
            DiagonalGate::Single { site, diag }
        }
        QubitSites::Pair(site) => {
            let diag = std::array::from_fn(|i| {
                let ((a, b), (c, d)) = (spins(i / LOCAL_DIM), spins(i % LOCAL_DIM));
                w.get(eta * a * c, eta_bar * b * d)
            });
            DiagonalGate::Pair { site, diag }
        }
    }
}

/// `(1 + τˣ)(1 + τ̄ˣ)` in the local basis.
pub fn restart_projector() -> Array2<C64> {
    Array2::from_elem((LOCAL_DIM, LOCAL_DIM), C64::new(1.0, 0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitElement {
    Gate { qubit: usize, signs: (i8, i8), gate: DiagonalGate },
    /// Restart of the listed sites after column `column`.
    Layer { column: usize, sites: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GatePlan {
    pub n_sites: usize,
    pub elements: Vec<CircuitElement>,
    pub initial: ProductState,
    pub terminal: ProductState,
}

impl GatePlan {
    pub fn gate_count(&self) -> usize {
        self.elements.iter().filter(|e| matches!(e, CircuitElement::Gate { .. })).count()
    }

    pub fn layer_count(&self) -> usize {
        self.elements.len() - self.gate_count()
    }
}

/// Circuit for `Z` with left signs `eta` and right signs `eta_bar`.
pub fn build_gate_plan(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    eta: &EtaConfiguration,
    eta_bar: &EtaConfiguration,
) -> Result<GatePlan> {
    let n = layout.n_qubits();
    for len in [eta.len(), eta_bar.len(), couplings.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    for j in 0..n {
        if eta.sign(j) != eta_bar.sign(j) && !layout.x_logical().contains(&j) {
            return Err(Error::InvalidInput(format!(
                "eta and eta_bar differ on qubit {j}, outside the X_L support"
            )));
        }
    }
    let sites = chain_len(layout);
    let mut elements = Vec::with_capacity(n + layout.l());
    for j in 0..n {
        let signs = (eta.sign(j), eta_bar.sign(j));
        let gate = qubit_gate(layout, couplings.weights(j), j, signs.0, signs.1);
        elements.push(CircuitElement::Gate { qubit: j, signs, gate });
        let (l, m) = layout.coords(j);
        if m == layout.m() && l < layout.l() {
            let mut restart = layer_sites(layout, l);
            restart.reverse();
            elements.push(CircuitElement::Layer { column: l, sites: restart });
        }
    }
    let boundary = ProductState::uniform(sites, SiteLabel::PlusPlus);
    Ok(GatePlan { n_sites: sites, elements, initial: boundary.clone(), terminal: boundary })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ContractionMethod {
    Dense,
    Mps { config: MpsConfig, error_bound: f64 },
}

impl ContractionMethod {
    pub fn mps(config: MpsConfig) -> Self {
        ContractionMethod::Mps { config, error_bound: DEFAULT_ERROR_BOUND }
    }
}

impl Default for ContractionMethod {
    fn default() -> Self {
        Self::mps(MpsConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contraction {
    pub value: LogComplex,
    /// Accumulated discarded weight.
    pub truncation_error: f64,
    /// Discarded weight per column.
    pub slice_errors: Vec<f64>,
    pub max_bond: usize,
    /// Truncation exceeded the configured bound.
    pub flagged: bool,
}

/// `⟨φ₀|M|φ₀⟩` for a plan.
pub fn contract(plan: &GatePlan, method: &ContractionMethod) -> Result<Contraction> {
    match method {
        ContractionMethod::Dense => contract_dense(plan),
        ContractionMethod::Mps { config, error_bound } => contract_mps(plan, *config, *error_bound),
    }
}

fn contract_dense(plan: &GatePlan) -> Result<Contraction> {
    let mut chain = DenseChain::from_product_state(&plan.initial)?;
    let projector = restart_projector();
    let mut slice_errors = vec![0.0];
    let zero = |slice_errors: Vec<f64>| Contraction {
        value: LogComplex::ZERO,
        truncation_error: 0.0,
        slice_errors,
        max_bond: 0,
        flagged: false,
    };
    for e in &plan.elements {
        match e {
            CircuitElement::Gate { gate, .. } => chain.apply_gate(gate)?,
            CircuitElement::Layer { sites, .. } => {
                for &k in sites {
                    match chain.apply_single_site_operator(k, &projector) {
                        Err(Error::Annihilated { .. }) => return Ok(zero(slice_errors)),
                        r => r?,
                    }
                }
                slice_errors.push(0.0);
            }
        }
        if chain.is_vanished() {
            return Ok(zero(slice_errors));
        }
    }
    let value = chain.overlap_with_product_state(&plan.terminal)?;
    let max_bond = LOCAL_DIM.pow((plan.n_sites / 2) as u32);
    Ok(Contraction { value, truncation_error: 0.0, slice_errors, max_bond, flagged: false })
}

fn contract_mps(plan: &GatePlan, config: MpsConfig, error_bound: f64) -> Result<Contraction> {
    let mut state = MpsState::from_product_state(&plan.initial, config)?;
    let projector = restart_projector();
    let mut slice_errors = vec![0.0];
    let mut max_bond = 1;
    for e in &plan.elements {
        match e {
            CircuitElement::Gate { gate, .. } => {
                let err = state.apply_gate(gate)?;
                *slice_errors.last_mut().expect("nonempty") += err;
                max_bond = max_bond.max(state.max_bond());
            }
            CircuitElement::Layer { sites, .. } => {
                for &k in sites {
                    match state.apply_single_site_projector(k, &projector) {
                        Err(Error::Annihilated { .. }) => break,
                        r => r?,
                    }
                }
                slice_errors.push(0.0);
            }
        }
        if state.is_vanished() {
            break;
        }
    }
    let value = state.overlap_with_product_state(&plan.terminal)?;
    let truncation_error = state.truncation_error();
    Ok(Contraction { value, truncation_error, slice_errors, max_bond, flagged: truncation_error > error_bound })
}

/// Writes one JSON line per column with its discarded weight.
pub fn write_slice_dump<W: Write>(mut out: W, label: &str, contraction: &Contraction) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        label: &'a str,
        column: usize,
        truncation_error: f64,
    }
    for (column, &truncation_error) in contraction.slice_errors.iter().enumerate() {
        serde_json::to_writer(&mut out, &Line { label, column: column + 1, truncation_error })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// The 2×2 block `Z_{qq̄,s}` of one syndrome; `Z10 = conj(Z01)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZMatrix {
    pub syndrome: Syndrome,
    pub z00: LogComplex,
    pub z11: LogComplex,
    pub z01: LogComplex,
    pub truncation_error: f64,
    pub flagged: bool,
}

/// Normalized block entries `Z/P(s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedBlock {
    pub z00: f64,
    pub z11: f64,
    pub z01: C64,
}

impl ZMatrix {
    pub fn z(&self, q: u8, q_bar: u8) -> LogComplex {
        match (q, q_bar) {
            (0, 0) => self.z00,
            (1, 1) => self.z11,
            (0, 1) => self.z01,
            _ => self.z01.conj(),
        }
    }

    /// `P(s) = Z00 + Z11`.
    pub fn probability(&self) -> LogComplex {
        self.z00 + self.z11
    }

    /// Entries divided by `P(s)`; real parts for the diagonal.
    pub fn normalized(&self) -> NormalizedBlock {
        let p = self.probability();
        NormalizedBlock {
            z00: self.z00.ratio(&p).re,
            z11: self.z11.ratio(&p).re,
            z01: self.z01.ratio(&p),
        }
    }

    /// `|Re Z01| / P(s)`.
    pub fn re_z01_relative(&self) -> f64 {
        self.normalized().z01.re.abs()
    }

    /// Largest imaginary residue of the diagonal relative to `P(s)`.
    pub fn diagonal_imag_residue(&self) -> f64 {
        let p = self.probability();
        self.z00.ratio(&p).im.abs().max(self.z11.ratio(&p).im.abs())
    }

    /// `|Z01|² − Z00·Z11` relative to `P(s)²`; nonpositive for a valid block.
    pub fn psd_violation(&self) -> f64 {
        let b = self.normalized();
        b.z01.norm_sqr() - b.z00 * b.z11
    }
}

/// Which entries of a [`ZMatrix`] to compute.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZRequest {
    /// Skip the `(0, 1)` contraction and report `Z01 = 0`.
    pub skip_off_diagonal: bool,
    /// Already known `Z_{qq,s}` for class `q`.
    pub known_diagonal: Option<(u8, LogComplex)>,
}

/// `Z00`, `Z11`, `Z01` of syndrome `s`.
pub fn z_matrix(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    s: &Syndrome,
    method: &ContractionMethod,
) -> Result<ZMatrix> {
    z_matrix_with(layout, couplings, s, method, ZRequest::default())
}

pub fn z_matrix_with(
    layout: &CodeLayout,
    couplings: &CouplingTable,
    s: &Syndrome,
    method: &ContractionMethod,
    request: ZRequest,
) -> Result<ZMatrix> {
    let reference = layout.reference_string(s)?;
    let shifted = layout.apply_x_logical(&reference);
    let mut truncation_error = 0.0;
    let mut flagged = false;
    let mut run = |a: &EtaConfiguration, b: &EtaConfiguration| -> Result<LogComplex> {
        let c = contract(&build_gate_plan(layout, couplings, a, b)?, method)?;
        truncation_error += c.truncation_error;
        flagged |= c.flagged;
        Ok(c.value)
    };
    let z00 = match request.known_diagonal {
        Some((0, z)) => z,
        _ => run(&reference, &reference)?,
    };
    let z11 = match request.known_diagonal {
        Some((1, z)) => z,
        _ => run(&shifted, &shifted)?,
    };
    let z01 = if request.skip_off_diagonal || couplings.single_species() {
        LogComplex::ZERO
    } else {
        run(&reference, &shifted)?
    };
    Ok(ZMatrix { syndrome: s.clone(), z00, z11, z01, truncation_error, flagged })
}
