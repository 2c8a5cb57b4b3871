//! Exact reference values for small codes.
//!
//! Two independent routes: evolving the full density matrix of
//! `|0_L⟩⟨0_L|` through the channel, and enumerating the pairs of error
//! strings in the cosets of a syndrome.

use std::io::Write;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::channel::{BondWeights, CouplingTable, ErrorChannelParams};
use crate::circuit::{z_matrix, ContractionMethod};
use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, EtaConfiguration, Syndrome};

/// Largest qubit count for the density-matrix route.
pub const MAX_ORACLE_QUBITS: usize = 13;
/// Largest number of X checks for coset enumeration.
pub const MAX_COSET_CHECKS: usize = 12;

fn mask_of(qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |m, &j| m | 1 << j)
}

fn eta_mask(eta: &EtaConfiguration) -> usize {
    mask_of(&eta.flipped().collect::<Vec<_>>())
}

/// All products of X stabilizers as bit masks over qubits.
pub fn x_stabilizer_group(layout: &CodeLayout) -> Result<Vec<usize>> {
    let faces: Vec<usize> = layout.x_stabilizers().iter().map(|f| mask_of(&f.qubits)).collect();
    if faces.len() > 20 || layout.n_qubits() >= usize::BITS as usize {
        return Err(Error::TooLarge(format!("{} X checks", faces.len())));
    }
    Ok((0usize..1 << faces.len())
        .map(|sel| faces.iter().enumerate().filter(|(i, _)| sel >> i & 1 == 1).fold(0, |m, (_, f)| m ^ f))
        .collect())
}

/// Density matrix over `N` qubits; bit `j` of a basis index is qubit `j`.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    rho: Array2<C64>,
}

impl DenseState {
    fn guard(n: usize) -> Result<()> {
        if n > MAX_ORACLE_QUBITS {
            return Err(Error::TooLarge(format!("{n} qubits exceed the oracle limit of {MAX_ORACLE_QUBITS}")));
        }
        Ok(())
    }

    /// `|0_L⟩⟨0_L|` with `|0_L⟩ = 2^{-N_x/2} Π_v (1 + S_v^X) |0…0⟩`.
    pub fn logical_zero(layout: &CodeLayout) -> Result<Self> {
        let n = layout.n_qubits();
        Self::guard(n)?;
        let psi = logical_zero_vector(layout)?;
        let rho = Array2::from_shape_fn((1 << n, 1 << n), |(r, c)| psi[r] * psi[c].conj());
        Ok(Self { n, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    /// Applies `⊗_j 𝓔_j`.
    pub fn apply_channel(&mut self, params: &ErrorChannelParams) -> Result<()> {
        if params.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: params.len() });
        }
        for j in 0..self.n {
            let w = params.qubit(j).coefficients();
            if w.0[0] == C64::new(1.0, 0.0) && w.0[3] == C64::new(0.0, 0.0) {
                continue;
            }
            self.rho = apply_qubit_channel(&self.rho, j, &w);
        }
        Ok(())
    }

    /// `⟨u|ρ|v⟩`.
    pub fn matrix_element(&self, u: &Array1<C64>, v: &Array1<C64>) -> C64 {
        u.mapv(|z| z.conj()).dot(&self.rho.dot(v))
    }

    /// `tr(ρ P)` for `P = X^{x_mask} Z^{z_mask}`-type Pauli strings without
    /// phases, i.e. `Σ_r ρ[r ^ x, r] (−1)^{popcount(r & z)}`.
    pub fn pauli_expectation(&self, x_mask: usize, z_mask: usize) -> C64 {
        (0..1usize << self.n)
            .map(|r| {
                let sign = if (r & z_mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                self.rho[[r ^ x_mask, r]] * sign
            })
            .sum()
    }
}

fn apply_qubit_channel(rho: &Array2<C64>, j: usize, w: &BondWeights) -> Array2<C64> {
    let b = 1usize << j;
    let [keep, left, right, both] = w.0;
    Array2::from_shape_fn(rho.dim(), |(r, c)| {
        keep * rho[[r, c]] + both * rho[[r ^ b, c ^ b]] + left * rho[[r ^ b, c]] + right * rho[[r, c ^ b]]
    })
}

/// `|0_L⟩` as a state vector.
pub fn logical_zero_vector(layout: &CodeLayout) -> Result<Array1<C64>> {
    let n = layout.n_qubits();
    DenseState::guard(n)?;
    let group = x_stabilizer_group(layout)?;
    let amp = C64::new((group.len() as f64).sqrt().recip(), 0.0);
    let mut psi = Array1::zeros(1 << n);
    for g in group {
        psi[g] += amp;
    }
    Ok(psi)
}

fn shifted_logical(layout: &CodeLayout, zero: &Array1<C64>, s: &Syndrome, q: u8) -> Result<Array1<C64>> {
    let mut flip = eta_mask(&layout.reference_string(s)?);
    if q == 1 {
        flip ^= mask_of(layout.x_logical());
    }
    let mut out = Array1::zeros(zero.len());
    for (i, a) in zero.iter().enumerate() {
        out[i ^ flip] = *a;
    }
    Ok(out)
}

/// Exact 2×2 blocks of one code and channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleBlock {
    pub syndrome: Syndrome,
    /// `z[q][q̄]`.
    pub z: [[C64; 2]; 2],
}

impl OracleBlock {
    pub fn probability(&self) -> f64 {
        (self.z[0][0] + self.z[1][1]).re
    }
}

/// `⟨0_L|X_L^q C_s 𝓔[ρ₀] C_s X_L^q̄|0_L⟩` for every syndrome, by density-matrix
/// evolution.
pub fn exact_blocks(layout: &CodeLayout, params: &ErrorChannelParams) -> Result<Vec<OracleBlock>> {
    let mut state = DenseState::logical_zero(layout)?;
    state.apply_channel(params)?;
    let zero = logical_zero_vector(layout)?;
    layout
        .all_syndromes()?
        .into_iter()
        .map(|s| {
            let v0 = shifted_logical(layout, &zero, &s, 0)?;
            let v1 = shifted_logical(layout, &zero, &s, 1)?;
            let vs = [&v0, &v1];
            let z = std::array::from_fn(|q| std::array::from_fn(|qb| state.matrix_element(vs[q], vs[qb])));
            Ok(OracleBlock { syndrome: s, z })
        })
        .collect()
}

/// Single entry by density-matrix evolution.
pub fn exact_z(layout: &CodeLayout, params: &ErrorChannelParams, s: &Syndrome, q: u8, q_bar: u8) -> Result<C64> {
    let mut state = DenseState::logical_zero(layout)?;
    state.apply_channel(params)?;
    let zero = logical_zero_vector(layout)?;
    let u = shifted_logical(layout, &zero, s, q)?;
    let v = shifted_logical(layout, &zero, s, q_bar)?;
    Ok(state.matrix_element(&u, &v))
}

/// `Σ_{a ∈ C_s X^q S} Σ_{ā ∈ C_s X^q̄ S} Π_j w_j(a_j, ā_j)` by direct
/// enumeration of the two cosets.
pub fn coset_z(layout: &CodeLayout, params: &ErrorChannelParams, s: &Syndrome, q: u8, q_bar: u8) -> Result<C64> {
    let n = layout.n_qubits();
    if params.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: params.len() });
    }
    if layout.x_stabilizers().len() > MAX_COSET_CHECKS {
        return Err(Error::TooLarge(format!("{} X checks exceed {MAX_COSET_CHECKS}", layout.x_stabilizers().len())));
    }
    let group = x_stabilizer_group(layout)?;
    let base = eta_mask(&layout.reference_string(s)?);
    let xl = mask_of(layout.x_logical());
    let left = base ^ if q == 1 { xl } else { 0 };
    let right = base ^ if q_bar == 1 { xl } else { 0 };
    let weights: Vec<BondWeights> = params.qubits().iter().map(|c| c.coefficients()).collect();
    let mut total = C64::new(0.0, 0.0);
    for g in &group {
        let a = left ^ g;
        for h in &group {
            let b = right ^ h;
            let mut prod = C64::new(1.0, 0.0);
            for (j, w) in weights.iter().enumerate() {
                prod *= w.0[(a >> j & 1) | (b >> j & 1) << 1];
                if prod == C64::new(0.0, 0.0) {
                    break;
                }
            }
            total += prod;
        }
    }
    Ok(total)
}

/// Probability of every `(s, q)` class, `Z_{qq,s}`, by coset enumeration.
pub fn class_probabilities(layout: &CodeLayout, params: &ErrorChannelParams) -> Result<Vec<(Syndrome, [f64; 2])>> {
    layout
        .all_syndromes()?
        .into_iter()
        .map(|s| {
            let z0 = coset_z(layout, params, &s, 0, 0)?.re;
            let z1 = coset_z(layout, params, &s, 1, 1)?.re;
            Ok((s, [z0, z1]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoldenEntry {
    pub d: usize,
    pub p: f64,
    pub gamma: f64,
    /// Bit mask of flipped Z checks.
    pub syndrome: u64,
    pub q: u8,
    pub q_bar: u8,
    pub re: f64,
    pub im: f64,
}

/// Exact values for every `(p, γ)` on a grid, all syndromes and the three
/// independent `(q, q̄)` pairs.
pub fn golden_table(d: usize, ps: &[f64], gammas: &[f64]) -> Result<Vec<GoldenEntry>> {
    let layout = CodeLayout::square(d)?;
    let mut out = Vec::new();
    for &p in ps {
        for &gamma in gammas {
            let params = ErrorChannelParams::uniform(layout.n_qubits(), p, gamma)?;
            for block in exact_blocks(&layout, &params)? {
                for (q, q_bar) in [(0u8, 0u8), (1, 1), (0, 1)] {
                    let z = block.z[q as usize][q_bar as usize];
                    out.push(GoldenEntry { d, p, gamma, syndrome: block.syndrome.to_mask(), q, q_bar, re: z.re, im: z.im });
                }
            }
        }
    }
    Ok(out)
}

pub fn write_golden<W: Write>(out: W, entries: &[GoldenEntry]) -> Result<()> {
    serde_json::to_writer_pretty(out, entries)?;
    Ok(())
}

/// Largest deviation of transfer-circuit blocks from the density-matrix
/// oracle, per entry and relative to `P(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub max_deviation: f64,
    /// Largest `|Re Z01| / P(s)` of the circuit values.
    pub max_re_z01: f64,
    pub entries: usize,
}

pub fn compare_with_circuit(
    layout: &CodeLayout,
    params: &ErrorChannelParams,
    method: &ContractionMethod,
) -> Result<OracleComparison> {
    let couplings = CouplingTable::from_params(params)?;
    let mut out = OracleComparison { max_deviation: 0.0, max_re_z01: 0.0, entries: 0 };
    for block in exact_blocks(layout, params)? {
        let z = z_matrix(layout, &couplings, &block.syndrome, method)?;
        let scale = block.probability();
        for (q, q_bar, got) in [(0, 0, z.z00), (1, 1, z.z11), (0, 1, z.z01)] {
            let dev = (got.to_complex() - block.z[q][q_bar]).norm() / scale;
            out.max_deviation = out.max_deviation.max(dev);
            out.entries += 1;
        }
        out.max_re_z01 = out.max_re_z01.max(z.re_z01_relative());
    }
    Ok(out)
}
