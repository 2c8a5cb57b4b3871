//! Physical noise parameters and their statistical-mechanics couplings.
//!
//! The single-qubit channel is
//! `E[ρ] = (1-p) ρ + p XρX + iγ√(p(1-p)) [X, ρ]`. Expanding it over the sign
//! patterns `(x, x̄) ∈ {±1}²` (whether `X` acts from the left/right of `ρ`)
//! gives weights `w(x, x̄) = exp(J0 + J1 x + J2 x̄ + J3 x x̄)`; these weights are
//! what the transfer-matrix gates are made of.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|γ|` the two Ising species are locked together and the
/// single-species path is used; the suppressed weight ratio `γ²` is then below
/// contraction tolerance.
pub const COHERENCE_FLOOR: f64 = 1e-6;

/// Channel parameters of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitChannel {
    /// Bit-flip probability.
    pub p: f64,
    /// Coherence fraction; `±1` is a unitary rotation, `0` a Pauli channel.
    pub gamma: f64,
}

impl QubitChannel {
    pub fn new(p: f64, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("p = {p} must lie in [0, 1)")));
        }
        if !gamma.is_finite() || gamma * gamma > 1.0 {
            return Err(Error::Domain(format!("gamma = {gamma} violates gamma^2 <= 1")));
        }
        Ok(Self { p, gamma })
    }

    /// Coefficients of `ρ`, `XρX`, `Xρ`, `ρX`, indexed like [`BondWeights`].
    pub fn coefficients(&self) -> BondWeights {
        let off = self.gamma * (self.p * (1.0 - self.p)).sqrt();
        BondWeights([
            C64::new(1.0 - self.p, 0.0),
            C64::new(0.0, off),
            C64::new(0.0, -off),
            C64::new(self.p, 0.0),
        ])
    }
}

/// Per-qubit channel table for a whole code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorChannelParams {
    qubits: Vec<QubitChannel>,
}

impl ErrorChannelParams {
    pub fn uniform(n: usize, p: f64, gamma: f64) -> Result<Self> {
        let q = QubitChannel::new(p, gamma)?;
        Ok(Self { qubits: vec![q; n] })
    }

    pub fn per_qubit(qubits: Vec<QubitChannel>) -> Result<Self> {
        for q in &qubits {
            QubitChannel::new(q.p, q.gamma)?;
        }
        Ok(Self { qubits })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn qubit(&self, j: usize) -> QubitChannel {
        self.qubits[j]
    }

    pub fn qubits(&self) -> &[QubitChannel] {
        &self.qubits
    }
}

/// Weights `w(x, x̄)` of the four sign patterns. Index `0` is `(+,+)`,
/// `1` is `(-,+)` (`X` on the left only), `2` is `(+,-)`, `3` is `(-,-)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondWeights(pub [C64; 4]);

impl BondWeights {
    #[inline]
    pub fn index(x: i8, x_bar: i8) -> usize {
        usize::from(x < 0) | usize::from(x_bar < 0) << 1
    }

    #[inline]
    pub fn get(&self, x: i8, x_bar: i8) -> C64 {
        self.0[Self::index(x, x_bar)]
    }
}

/// Log-weights of one bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BondCouplings {
    /// Two interacting species: `w = exp(J0 + J1 x + J2 x̄ + J3 x x̄)`.
    TwoSpecies { j0: f64, j1: C64, j2: C64, j3: f64 },
    /// `γ = 0`: the species coincide and `w(x, x) = exp(J0 + K x)`,
    /// with `e^{-2K} = p/(1-p)`; mixed patterns have zero weight.
    SingleSpecies { j0: f64, k: f64 },
}

impl BondCouplings {
    pub fn weights(&self) -> BondWeights {
        match *self {
            BondCouplings::TwoSpecies { j0, j1, j2, j3 } => {
                let mut w = [C64::new(0.0, 0.0); 4];
                for x in [1i8, -1] {
                    for xb in [1i8, -1] {
                        let (xf, xbf) = (f64::from(x), f64::from(xb));
                        let e = C64::new(j0 + j3 * xf * xbf, 0.0) + j1 * xf + j2 * xbf;
                        w[BondWeights::index(x, xb)] = e.exp();
                    }
                }
                BondWeights(w)
            }
            BondCouplings::SingleSpecies { j0, k } => BondWeights([
                C64::new((j0 + k).exp(), 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new((j0 - k).exp(), 0.0),
            ]),
        }
    }

    pub fn is_single_species(&self) -> bool {
        matches!(self, BondCouplings::SingleSpecies { .. })
    }
}

/// Couplings of one qubit's channel.
///
/// `0 < p < 1`. `|γ| < COHERENCE_FLOOR` selects the single-species form;
/// negative `γ` conjugates `J1`, `J2`.
pub fn bond_couplings(p: f64, gamma: f64) -> Result<BondCouplings> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("p = {p}: couplings need 0 < p < 1")));
    }
    QubitChannel::new(p, gamma)?;
    let logit = (p / (1.0 - p)).ln();
    if gamma.abs() < COHERENCE_FLOOR {
        return Ok(BondCouplings::SingleSpecies {
            j0: 0.5 * (p * (1.0 - p)).ln(),
            k: -0.5 * logit,
        });
    }
    let g = gamma.abs();
    let phase = if gamma > 0.0 { -FRAC_PI_4 } else { FRAC_PI_4 };
    let j1 = C64::new(-0.25 * logit, phase);
    Ok(BondCouplings::TwoSpecies {
        j0: 0.5 * (g * p * (1.0 - p)).ln(),
        j1,
        j2: j1.conj(),
        j3: -0.5 * g.ln(),
    })
}

/// Per-qubit couplings and the gate weights derived from them.
///
/// Error-free qubits (`p = 0`) have no finite couplings; they carry the
/// identity weights `(1, 0, 0, 0)` and no [`BondCouplings`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable {
    bonds: Vec<Option<BondCouplings>>,
    weights: Vec<BondWeights>,
    flip_probs: Vec<f64>,
}

impl CouplingTable {
    pub fn from_params(params: &ErrorChannelParams) -> Result<Self> {
        let mut bonds = Vec::with_capacity(params.len());
        let mut weights = Vec::with_capacity(params.len());
        let flip_probs = params.qubits().iter().map(|q| q.p).collect();
        for q in params.qubits() {
            if q.p == 0.0 {
                bonds.push(None);
                weights.push(q.coefficients());
            } else {
                let b = bond_couplings(q.p, q.gamma)?;
                weights.push(b.weights());
                bonds.push(Some(b));
            }
        }
        Ok(Self { bonds, weights, flip_probs })
    }

    pub fn uniform(n: usize, p: f64, gamma: f64) -> Result<Self> {
        Self::from_params(&ErrorChannelParams::uniform(n, p, gamma)?)
    }

    pub fn from_bonds(bonds: Vec<BondCouplings>) -> Self {
        let weights: Vec<BondWeights> = bonds.iter().map(BondCouplings::weights).collect();
        let flip_probs = weights.iter().map(|w| w.0[3].re / (w.0[0].re + w.0[3].re)).collect();
        Self { bonds: bonds.into_iter().map(Some).collect(), weights, flip_probs }
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    /// `None` for an error-free qubit.
    pub fn bond(&self, j: usize) -> Option<&BondCouplings> {
        self.bonds[j].as_ref()
    }

    pub fn weights(&self, j: usize) -> &BondWeights {
        &self.weights[j]
    }

    /// Bit-flip probability `p_j`.
    pub fn flip_probability(&self, j: usize) -> f64 {
        self.flip_probs[j]
    }

    /// True when no qubit couples the two species, so off-diagonal
    /// partition functions vanish identically.
    pub fn single_species(&self) -> bool {
        self.weights.iter().all(|w| w.0[1] == C64::new(0.0, 0.0) && w.0[2] == C64::new(0.0, 0.0))
    }
}

/// Couplings `κ⁽⁰⁾…κ⁽³⁾` of the vectorized channel on a horizontal bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorizedCouplings {
    pub k0: C64,
    pub k1: C64,
    pub k2: C64,
    pub k3: C64,
}

/// Horizontal-bond couplings for unflipped bonds (`η = η̄ = 1`).
pub fn vectorized_couplings(p: f64, gamma: f64) -> Result<VectorizedCouplings> {
    horizontal_couplings(p, gamma, 1, 1)
}

/// Horizontal-bond couplings with bond signs `η`, `η̄` for the smooth/rough
/// geometry. Requires `0 <= p < 1/2` and `0 <= γ <= 1`.
pub fn horizontal_couplings(
    p: f64,
    gamma: f64,
    eta: i8,
    eta_bar: i8,
) -> Result<VectorizedCouplings> {
    if p == 0.5 {
        return Err(Error::Domain("p = 1/2 is singular for the arctan branch".into()));
    }
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain(format!("p = {p} must lie in [0, 1/2)")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma = {gamma} must lie in [0, 1]")));
    }
    if eta.abs() != 1 || eta_bar.abs() != 1 {
        return Err(Error::InvalidInput("bond signs must be +1 or -1".into()));
    }
    let (e, eb) = (f64::from(eta), f64::from(eta_bar));
    let re = 0.25 * (1.0 - 4.0 * (1.0 - gamma * gamma) * p * (1.0 - p)).ln();
    let angle = 0.5 * (2.0 * gamma * (p * (1.0 - p)).sqrt() / (1.0 - 2.0 * p)).atan();
    Ok(VectorizedCouplings {
        k0: C64::new(re, FRAC_PI_4 * (e - eb)),
        k1: C64::new(0.0, angle + FRAC_PI_4 * (1.0 - e)),
        k2: C64::new(0.0, -angle - FRAC_PI_4 * (1.0 - eb)),
        k3: C64::new(-re, 0.0),
    })
}

/// Names of the sixteen couplings of the generic single-qubit expansion,
/// indexed by the character bitmask over `(x, z, x̄, z̄)` (bits 0..=3).
pub const GENERIC_COUPLING_NAMES: [&str; 16] = [
    "0", "x", "z", "y", "xbar", "x.xbar", "z.xbar", "y.xbar", "zbar", "x.zbar", "z.zbar",
    "y.zbar", "ybar", "x.ybar", "z.ybar", "y.ybar",
];

/// Log-linear expansion of a generic single-qubit process matrix over the
/// sign patterns `(x, z, x̄, z̄)` of `X^a Z^b ρ Z^b̄ X^ā`.
///
/// Patterns with zero weight are allowed when they leave a subgroup of
/// patterns as support; the characters that are constant on that support
/// are reported as `pinned` (formally infinite couplings enforcing the
/// constraint) and carry value zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericCouplings {
    pub values: [C64; 16],
    pub pinned: Vec<usize>,
    pub support: Vec<usize>,
}

fn pauli(mu: usize) -> [[C64; 2]; 2] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match mu {
        0 => [[l, o], [o, l]],
        1 => [[o, l], [l, o]],
        2 => [[o, -i], [i, o]],
        _ => [[l, o], [o, -l]],
    }
}

fn mat_mul2(a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Pauli index `μ` and phase such that `X^a Z^b = phase · O^μ` (left side).
fn left_pauli(a: usize, b: usize) -> (usize, C64) {
    match (a, b) {
        (0, 0) => (0, C64::new(1.0, 0.0)),
        (1, 0) => (1, C64::new(1.0, 0.0)),
        (0, 1) => (3, C64::new(1.0, 0.0)),
        // XZ = -iY
        _ => (2, C64::new(0.0, -1.0)),
    }
}

/// Same for `Z^b X^a` acting from the right.
fn right_pauli(a: usize, b: usize) -> (usize, C64) {
    match (a, b) {
        (1, 1) => (2, C64::new(0.0, 1.0)), // ZX = iY
        _ => left_pauli(a, b),
    }
}

#[inline]
fn character(mask: usize, pattern: usize) -> f64 {
    if (mask & pattern).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn pattern_bits(pattern: usize) -> (usize, usize, usize, usize) {
    (pattern & 1, pattern >> 1 & 1, pattern >> 2 & 1, pattern >> 3 & 1)
}

fn pattern_weights(eps: &[[C64; 4]; 4]) -> [C64; 16] {
    let mut w = [C64::new(0.0, 0.0); 16];
    for (pattern, slot) in w.iter_mut().enumerate() {
        let (a, b, ab, bb) = pattern_bits(pattern);
        let (mu, ph_l) = left_pauli(a, b);
        let (nu, ph_r) = right_pauli(ab, bb);
        // ε_{μν} O^μ ρ O^ν = ε_{μν} / (ph_l ph_r) · (X^a Z^b) ρ (Z^b̄ X^ā)
        *slot = eps[mu][nu] / (ph_l * ph_r);
    }
    w
}

/// Solves the 16-term expansion for a Hermitian, trace-preserving process
/// matrix `ε_{μν}` over `(1, X, Y, Z)`.
pub fn generic_channel_expansion(eps: &[[C64; 4]; 4]) -> Result<GenericCouplings> {
    let scale = eps.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for mu in 0..4 {
        for nu in 0..4 {
            if (eps[mu][nu] - eps[nu][mu].conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidInput("process matrix is not Hermitian".into()));
            }
        }
    }
    let mut tp = [[C64::new(0.0, 0.0); 2]; 2];
    for mu in 0..4 {
        for nu in 0..4 {
            let prod = mat_mul2(&pauli(nu), &pauli(mu));
            for i in 0..2 {
                for j in 0..2 {
                    tp[i][j] += eps[mu][nu] * prod[i][j];
                }
            }
        }
    }
    let tp_err = (tp[0][0] - 1.0).norm() + (tp[1][1] - 1.0).norm() + tp[0][1].norm() + tp[1][0].norm();
    if tp_err > 1e-10 * scale {
        return Err(Error::InvalidInput("process matrix is not trace preserving".into()));
    }

    let w = pattern_weights(eps);
    let tiny = 1e-300;
    let support: Vec<usize> = (0..16).filter(|&p| w[p].norm() > tiny).collect();
    if !support.contains(&0) {
        return Err(Error::NonInvertible("identity pattern has zero weight".into()));
    }
    for &a in &support {
        for &b in &support {
            if !support.contains(&(a ^ b)) {
                return Err(Error::NonInvertible(format!(
                    "zero-weight patterns do not leave a subgroup (patterns {a} and {b} present, {} absent)",
                    a ^ b
                )));
            }
        }
    }
    let annihilator: Vec<usize> =
        (0..16).filter(|&s| support.iter().all(|&p| character(s, p) > 0.0)).collect();
    let mut values = [C64::new(0.0, 0.0); 16];
    let mut seen = [false; 16];
    for rep in 0..16 {
        if seen[rep] {
            continue;
        }
        for &a in &annihilator {
            seen[rep ^ a] = true;
        }
        let acc: C64 = support.iter().map(|&p| w[p].ln() * character(rep, p)).sum();
        values[rep] = acc / support.len() as f64;
    }
    let pinned = annihilator.into_iter().filter(|&s| s != 0).collect();
    Ok(GenericCouplings { values, pinned, support })
}

impl GenericCouplings {
    /// Pattern weight `exp(h)` on the support, zero elsewhere.
    pub fn weight(&self, pattern: usize) -> C64 {
        if !self.support.contains(&pattern) {
            return C64::new(0.0, 0.0);
        }
        let h: C64 = (0..16).map(|s| self.values[s] * character(s, pattern)).sum();
        h.exp()
    }

    /// Process matrix rebuilt from the couplings.
    pub fn reconstruct(&self) -> [[C64; 4]; 4] {
        let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
        for pattern in 0..16 {
            let (a, b, ab, bb) = pattern_bits(pattern);
            let (mu, ph_l) = left_pauli(a, b);
            let (nu, ph_r) = right_pauli(ab, bb);
            eps[mu][nu] = self.weight(pattern) * ph_l * ph_r;
        }
        eps
    }

    pub fn by_name(&self, name: &str) -> Option<C64> {
        GENERIC_COUPLING_NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

/// Process matrix of the X-only channel over `(1, X, Y, Z)`.
pub fn x_channel_process_matrix(p: f64, gamma: f64) -> [[C64; 4]; 4] {
    let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
    let off = gamma * (p * (1.0 - p)).sqrt();
    eps[0][0] = C64::new(1.0 - p, 0.0);
    eps[1][1] = C64::new(p, 0.0);
    eps[1][0] = C64::new(0.0, off);
    eps[0][1] = C64::new(0.0, -off);
    eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn half_flip_fully_coherent() {
        let BondCouplings::TwoSpecies { j0, j1, j2, j3 } = bond_couplings(0.5, 1.0).unwrap() else {
            panic!("expected two species")
        };
        assert_abs_diff_eq!(j3, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j0, -2f64.ln(), epsilon = 1e-15);
        assert!(close(j1, C64::new(0.0, -FRAC_PI_4), 1e-15));
        assert!(close(j2, j1.conj(), 0.0));
    }

    #[test]
    fn j3_value() {
        let BondCouplings::TwoSpecies { j3, .. } = bond_couplings(0.1, 0.5).unwrap() else {
            panic!()
        };
        assert_abs_diff_eq!(j3, 0.346_573_590_279_972_6, epsilon = 1e-15);
    }

    #[test]
    fn reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p: f64 = rng.random_range(1e-6..0.999);
            let g: f64 = rng.random_range(-1.0..=1.0);
            let q = QubitChannel::new(p, g).unwrap();
            let w = bond_couplings(p, g).unwrap().weights();
            let c = q.coefficients();
            for k in 0..4 {
                assert!(close(w.0[k], c.0[k], 1e-12), "p={p} g={g} k={k}: {} vs {}", w.0[k], c.0[k]);
            }
        }
    }

    #[test]
    fn single_species_limit() {
        let b = bond_couplings(0.2, 1e-8).unwrap();
        let BondCouplings::SingleSpecies { k, .. } = b else { panic!() };
        assert_abs_diff_eq!((-2.0 * k).exp(), 0.2 / 0.8, epsilon = 1e-14);
        let w = b.weights();
        assert_abs_diff_eq!(w.get(1, 1).re, 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(w.get(-1, -1).re, 0.2, epsilon = 1e-14);
        assert_eq!(w.get(1, -1), C64::new(0.0, 0.0));
    }

    #[test]
    fn decoupling_at_unit_gamma() {
        for p in [0.01, 0.1, 0.3] {
            let BondCouplings::TwoSpecies { j3, .. } = bond_couplings(p, 1.0).unwrap() else {
                panic!()
            };
            assert_eq!(j3, 0.0);
            let BondCouplings::TwoSpecies { j3, .. } = bond_couplings(p, 0.5).unwrap() else {
                panic!()
            };
            assert!(j3 > 0.0);
        }
    }

    #[test]
    fn negative_gamma_is_conjugate() {
        let a = bond_couplings(0.1, 0.4).unwrap().weights();
        let b = bond_couplings(0.1, -0.4).unwrap().weights();
        for k in 0..4 {
            assert!(close(a.0[k].conj(), b.0[k], 1e-14));
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bond_couplings(0.0, 0.5).is_err());
        assert!(bond_couplings(1.0, 0.5).is_err());
        assert!(bond_couplings(0.1, 1.5).is_err());
        assert!(QubitChannel::new(-0.1, 0.0).is_err());
        assert!(vectorized_couplings(0.5, 0.3).is_err());
        assert!(vectorized_couplings(0.6, 0.3).is_err());
    }

    #[test]
    fn vectorized_values() {
        let k = vectorized_couplings(0.1, 0.5).unwrap();
        assert_abs_diff_eq!(k.k0.re, 0.25 * 0.73f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.k0.re, -0.078_677_686_2, epsilon = 1e-10);
        let one = vectorized_couplings(0.2, 1.0).unwrap();
        assert_eq!(one.k0.re, 0.0);
        assert_eq!(one.k3.re, 0.0);
        let zero = vectorized_couplings(0.0, 0.7).unwrap();
        for z in [zero.k0, zero.k1, zero.k2, zero.k3] {
            assert_eq!(z.norm(), 0.0);
        }
    }

    #[test]
    fn vectorized_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p: f64 = rng.random_range(0.0..0.499);
            let g: f64 = rng.random_range(0.0..=1.0);
            let k = vectorized_couplings(p, g).unwrap();
            assert_eq!(k.k0, -k.k3);
            assert_eq!(k.k1, -k.k2);
            assert_eq!(k.k0.im, 0.0);
            assert_eq!(k.k1.re, 0.0);
        }
    }

    #[test]
    fn horizontal_flipped_bonds_shift_phases() {
        let plain = horizontal_couplings(0.1, 0.5, 1, 1).unwrap();
        let flip = horizontal_couplings(0.1, 0.5, -1, 1).unwrap();
        assert_abs_diff_eq!(flip.k0.im - plain.k0.im, -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(flip.k1.im - plain.k1.im, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(flip.k2, plain.k2);
    }

    fn max_dev(a: &[[C64; 4]; 4], b: &[[C64; 4]; 4]) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((a[i][j] - b[i][j]).norm());
            }
        }
        m
    }

    #[test]
    fn generic_matches_x_channel() {
        let eps = x_channel_process_matrix(0.1, 0.6);
        let g = generic_channel_expansion(&eps).unwrap();
        let BondCouplings::TwoSpecies { j0, j1, j2, j3 } = bond_couplings(0.1, 0.6).unwrap() else {
            panic!()
        };
        assert!(close(g.values[0], C64::new(j0, 0.0), 1e-12));
        assert!(close(g.by_name("x").unwrap(), j1, 1e-12));
        assert!(close(g.by_name("xbar").unwrap(), j2, 1e-12));
        assert!(close(g.by_name("x.xbar").unwrap(), C64::new(j3, 0.0), 1e-12));
        for (s, v) in g.values.iter().enumerate() {
            if ![0, 1, 4, 5].contains(&s) {
                assert_eq!(v.norm(), 0.0, "coupling {}", GENERIC_COUPLING_NAMES[s]);
            }
        }
        assert_eq!(g.pinned, vec![2, 8, 10]);
        assert!(max_dev(&g.reconstruct(), &eps) < 1e-12);
    }

    #[test]
    fn generic_identity_channel() {
        let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
        eps[0][0] = C64::new(1.0, 0.0);
        let g = generic_channel_expansion(&eps).unwrap();
        assert!(g.values.iter().all(|v| v.norm() == 0.0));
        assert_eq!(g.pinned.len(), 15);
        assert!(max_dev(&g.reconstruct(), &eps) < 1e-15);
    }

    #[test]
    fn generic_depolarizing_round_trip() {
        let p = 0.1;
        let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
        eps[0][0] = C64::new(1.0 - p, 0.0);
        for mu in 1..4 {
            eps[mu][mu] = C64::new(p / 3.0, 0.0);
        }
        let g = generic_channel_expansion(&eps).unwrap();
        assert_eq!(g.support.len(), 4);
        assert!(max_dev(&g.reconstruct(), &eps) < 1e-10);
    }

    #[test]
    fn generic_full_support_round_trip() {
        // amplitude-damping-like mixture with every Pauli pair populated
        let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
        let a = [C64::new(0.9, 0.0), C64::new(0.05, 0.01), C64::new(0.02, -0.03), C64::new(0.1, 0.02)];
        // rank-one Kraus: ε = a a†, normalized to trace preservation below
        for mu in 0..4 {
            for nu in 0..4 {
                eps[mu][nu] = a[mu] * a[nu].conj();
            }
        }
        // not TP in general: expect rejection
        assert!(generic_channel_expansion(&eps).is_err());
        // unitary exp(-iθ n·σ) is TP with full support
        let (t, n) = (0.3f64, [0.48f64, 0.6, 0.64]);
        let k = [
            C64::new(t.cos(), 0.0),
            C64::new(0.0, -t.sin() * n[0]),
            C64::new(0.0, -t.sin() * n[1]),
            C64::new(0.0, -t.sin() * n[2]),
        ];
        for mu in 0..4 {
            for nu in 0..4 {
                eps[mu][nu] = k[mu] * k[nu].conj();
            }
        }
        let g = generic_channel_expansion(&eps).unwrap();
        assert_eq!(g.support.len(), 16);
        assert!(g.pinned.is_empty());
        assert!(max_dev(&g.reconstruct(), &eps) < 1e-12);
    }

    #[test]
    fn generic_rejects_non_subgroup_support() {
        // X and Z populated with no cross terms, but also an X-Z coherence:
        // support {I·I, X·X, Z·Z, X·I} is not closed.
        let mut eps = [[C64::new(0.0, 0.0); 4]; 4];
        eps[0][0] = C64::new(0.8, 0.0);
        eps[1][1] = C64::new(0.1, 0.0);
        eps[3][3] = C64::new(0.1, 0.0);
        eps[1][0] = C64::new(0.0, 0.05);
        eps[0][1] = C64::new(0.0, -0.05);
        assert!(matches!(generic_channel_expansion(&eps), Err(Error::NonInvertible(_))));
    }
}
