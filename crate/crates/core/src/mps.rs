//! Matrix product states on chains of 4-level sites.
//!
//! Each site carries the pair `(σ, σ̄)` of the two Ising species with local
//! index `s = b(σ) + 2·b(σ̄)`, where `b(+1) = 0` and `b(−1) = 1`. Tensors have
//! shape `(χ_left, 4, χ_right)` and are kept in mixed canonical form around
//! `center`. The center tensor has unit Frobenius norm; the magnitude of the
//! represented vector lives in `log_norm`.

use ndarray::{s, Array1, Array2, Array3, Axis};
use ndarray_linalg::{JobSvd, QR, SVD, SVDDC};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logc::LogComplex;

pub const LOCAL_DIM: usize = 4;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteLabel {
    /// `(1, 1, 1, 1)`, i.e. `2|++⟩`.
    PlusPlus,
    /// `(1, 0, 0, 1)`, i.e. `|00⟩ + |11⟩` across the two species.
    BellBell,
}

impl SiteLabel {
    pub fn vector(self) -> [C64; 4] {
        match self {
            SiteLabel::PlusPlus => [ONE; 4],
            SiteLabel::BellBell => [ONE, ZERO, ZERO, ONE],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub sites: Vec<SiteLabel>,
    /// The state is `exp(log_scale) · ⊗ sites`.
    pub log_scale: f64,
}

impl ProductState {
    pub fn uniform(n: usize, label: SiteLabel) -> Self {
        Self { sites: vec![label; n], log_scale: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn vectors(&self) -> Vec<[C64; 4]> {
        self.sites.iter().map(|s| s.vector()).collect()
    }
}

/// Diagonal operators in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalGate {
    Single { site: usize, diag: [C64; 4] },
    /// Entry `4·s + t` multiplies `|s⟩_site |t⟩_{site+1}`.
    Pair { site: usize, diag: [C64; 16] },
}

impl DiagonalGate {
    pub fn first_site(&self) -> usize {
        match self {
            DiagonalGate::Single { site, .. } | DiagonalGate::Pair { site, .. } => *site,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpsConfig {
    pub chi_max: usize,
    /// Schmidt weights `λ²/Σλ²` below this are discarded.
    pub svd_cutoff: f64,
}

impl Default for MpsConfig {
    fn default() -> Self {
        Self { chi_max: 64, svd_cutoff: 1e-12 }
    }
}

/// `−Σ λ² ln λ²` of normalized Schmidt values.
pub fn von_neumann(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .map(|l| l * l)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.ln())
        .sum()
}

#[derive(Clone, Debug)]
pub struct MpsState {
    tensors: Vec<Array3<C64>>,
    center: usize,
    log_norm: f64,
    config: MpsConfig,
    truncation_error: f64,
    vanished: bool,
}

fn linalg<E: std::fmt::Display>(e: E) -> Error {
    Error::Linalg(e.to_string())
}

fn reshape2(t: &Array3<C64>, rows: usize, cols: usize) -> Array2<C64> {
    t.as_standard_layout().into_owned().into_shape_with_order((rows, cols)).expect("contiguous reshape")
}

fn reshape3(m: Array2<C64>, a: usize, b: usize, c: usize) -> Array3<C64> {
    m.as_standard_layout().into_owned().into_shape_with_order((a, b, c)).expect("contiguous reshape")
}

fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

fn svd(m: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    match m.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        _ => {
            let (u, s, vt) = m.svd(true, true).map_err(linalg)?;
            let (u, vt) = (u.ok_or_else(|| linalg("missing U"))?, vt.ok_or_else(|| linalg("missing V"))?);
            let k = s.len();
            Ok((u.slice(s![.., ..k]).to_owned(), s, vt.slice(s![..k, ..]).to_owned()))
        }
    }
}

/// Number of Schmidt values to keep and the discarded normalized weight.
fn truncation_rank(s: &Array1<f64>, config: &MpsConfig) -> (usize, f64) {
    let total: f64 = s.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return (1, 0.0);
    }
    let mut keep = s.iter().take_while(|&&x| x * x / total >= config.svd_cutoff).count();
    keep = keep.clamp(1, config.chi_max.max(1));
    let discarded = s.iter().skip(keep).map(|x| x * x).sum::<f64>() / total;
    (keep, discarded)
}

impl MpsState {
    pub fn from_product(vectors: &[[C64; 4]], config: MpsConfig) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidInput("empty chain".into()));
        }
        let mut log_norm = 0.0;
        let mut vanished = false;
        let tensors = vectors
            .iter()
            .map(|v| {
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    vanished = true;
                    return Array3::zeros((1, LOCAL_DIM, 1));
                }
                log_norm += norm.ln();
                Array3::from_shape_fn((1, LOCAL_DIM, 1), |(_, s, _)| v[s] / norm)
            })
            .collect();
        Ok(Self { tensors, center: 0, log_norm, config, truncation_error: 0.0, vanished })
    }

    pub fn from_product_state(state: &ProductState, config: MpsConfig) -> Result<Self> {
        let mut mps = Self::from_product(&state.vectors(), config)?;
        mps.log_norm += state.log_scale;
        Ok(mps)
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn config(&self) -> MpsConfig {
        self.config
    }

    pub fn set_config(&mut self, config: MpsConfig) {
        self.config = config;
    }

    /// Sum of discarded normalized weights over all truncations so far.
    pub fn truncation_error(&self) -> f64 {
        self.truncation_error
    }

    /// True once the state has become exactly zero.
    pub fn is_vanished(&self) -> bool {
        self.vanished
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_site(&self, site: usize, width: usize) -> Result<()> {
        if site + width > self.n_sites() {
            return Err(Error::InvalidInput(format!("site {site} out of range for {} sites", self.n_sites())));
        }
        Ok(())
    }

    fn normalize_center(&mut self) {
        let t = &mut self.tensors[self.center];
        let norm = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            self.vanished = true;
            return;
        }
        t.mapv_inplace(|z| z / norm);
        self.log_norm += norm.ln();
    }

    /// Shifts the orthogonality center by QR sweeps.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        self.check_site(target, 1)?;
        while self.center < target {
            let c = self.center;
            let (l, r) = (self.tensors[c].shape()[0], self.tensors[c].shape()[2]);
            let (q, rr) = reshape2(&self.tensors[c], l * LOCAL_DIM, r).qr().map_err(linalg)?;
            let k = q.ncols();
            self.tensors[c] = reshape3(q, l, LOCAL_DIM, k);
            let next = &self.tensors[c + 1];
            let nr = next.shape()[2];
            let merged = rr.dot(&reshape2(next, r, LOCAL_DIM * nr));
            self.tensors[c + 1] = reshape3(merged, k, LOCAL_DIM, nr);
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            let (l, r) = (self.tensors[c].shape()[0], self.tensors[c].shape()[2]);
            let m = reshape2(&self.tensors[c], l, LOCAL_DIM * r);
            let (q, rr) = dagger(&m).qr().map_err(linalg)?;
            let k = q.ncols();
            self.tensors[c] = reshape3(dagger(&q), k, LOCAL_DIM, r);
            let prev = &self.tensors[c - 1];
            let pl = prev.shape()[0];
            let merged = reshape2(prev, pl * LOCAL_DIM, l).dot(&dagger(&rr));
            self.tensors[c - 1] = reshape3(merged, pl, LOCAL_DIM, k);
            self.center -= 1;
        }
        Ok(())
    }

    /// Applies a diagonal gate, returning the discarded weight of this step.
    pub fn apply_gate(&mut self, gate: &DiagonalGate) -> Result<f64> {
        match gate {
            DiagonalGate::Single { site, diag } => {
                self.apply_single_site_diagonal(*site, diag)?;
                Ok(0.0)
            }
            DiagonalGate::Pair { site, diag } => self.apply_diagonal_two_site_gate(*site, diag),
        }
    }

    pub fn apply_single_site_diagonal(&mut self, site: usize, diag: &[C64; 4]) -> Result<()> {
        self.check_site(site, 1)?;
        if self.vanished {
            return Ok(());
        }
        self.move_center(site)?;
        for (s, d) in diag.iter().enumerate() {
            self.tensors[site].index_axis_mut(Axis(1), s).mapv_inplace(|z| z * d);
        }
        self.normalize_center();
        Ok(())
    }

    /// Applies `diag` on sites `(site, site+1)`, splits by SVD and leaves the
    /// center on `site + 1`.
    pub fn apply_diagonal_two_site_gate(&mut self, site: usize, diag: &[C64; 16]) -> Result<f64> {
        self.check_site(site, 2)?;
        if self.vanished {
            return Ok(0.0);
        }
        if self.center < site {
            self.move_center(site)?;
        } else if self.center > site + 1 {
            self.move_center(site + 1)?;
        }
        let (a, b) = (&self.tensors[site], &self.tensors[site + 1]);
        let (l, mid, r) = (a.shape()[0], a.shape()[2], b.shape()[2]);
        let mut theta = reshape2(a, l * LOCAL_DIM, mid).dot(&reshape2(b, mid, LOCAL_DIM * r));
        for ((row, col), z) in theta.indexed_iter_mut() {
            *z *= diag[LOCAL_DIM * (row % LOCAL_DIM) + col / r];
        }
        let (u, sv, vt) = svd(&theta)?;
        let (keep, discarded) = truncation_rank(&sv, &self.config);
        let kept_norm = sv.iter().take(keep).map(|x| x * x).sum::<f64>().sqrt();
        if kept_norm == 0.0 || !kept_norm.is_finite() {
            self.vanished = true;
            return Ok(0.0);
        }
        let u = u.slice(s![.., ..keep]).to_owned();
        let mut svt = vt.slice(s![..keep, ..]).to_owned();
        for (i, mut row) in svt.axis_iter_mut(Axis(0)).enumerate() {
            let w = sv[i] / kept_norm;
            row.mapv_inplace(|z| z * w);
        }
        self.tensors[site] = reshape3(u, l, LOCAL_DIM, keep);
        self.tensors[site + 1] = reshape3(svt, keep, LOCAL_DIM, r);
        self.center = site + 1;
        self.log_norm += kept_norm.ln();
        self.truncation_error += discarded;
        Ok(discarded)
    }

    /// Applies a general 4×4 operator (`op[[out, in]]`) on one site.
    ///
    /// A state mapped to zero reports [`Error::Annihilated`] and stays marked
    /// as vanished.
    pub fn apply_single_site_projector(&mut self, site: usize, op: &Array2<C64>) -> Result<()> {
        self.check_site(site, 1)?;
        if op.shape() != [LOCAL_DIM, LOCAL_DIM] {
            return Err(Error::InvalidInput("single-site operator must be 4x4".into()));
        }
        if self.vanished {
            return Err(Error::Annihilated { site });
        }
        self.move_center(site)?;
        let t = &self.tensors[site];
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let mut out = Array3::zeros((l, LOCAL_DIM, r));
        for so in 0..LOCAL_DIM {
            let mut slice = out.index_axis_mut(Axis(1), so);
            for si in 0..LOCAL_DIM {
                let w = op[[so, si]];
                if w != ZERO {
                    slice.scaled_add(w, &t.index_axis(Axis(1), si));
                }
            }
        }
        self.tensors[site] = out;
        self.normalize_center();
        if self.vanished {
            return Err(Error::Annihilated { site });
        }
        Ok(())
    }

    /// `Σ_s conj(v_s) A[:, s, :]`.
    fn transfer(&self, site: usize, v: &[C64; 4]) -> Array2<C64> {
        let t = &self.tensors[site];
        let mut m = Array2::zeros((t.shape()[0], t.shape()[2]));
        for (s, w) in v.iter().enumerate() {
            if *w != ZERO {
                m.scaled_add(w.conj(), &t.index_axis(Axis(1), s));
            }
        }
        m
    }

    fn rescale(v: &mut Array1<C64>, log: &mut f64) -> bool {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return false;
        }
        v.mapv_inplace(|z| z / n);
        *log += n.ln();
        true
    }

    /// `⟨ω|ψ⟩` including both log scales.
    pub fn overlap_with_product_state(&self, omega: &ProductState) -> Result<LogComplex> {
        self.overlap_with_gate(omega, None)
    }

    /// `⟨ω|G|ψ⟩` for an optional diagonal insertion `G`, without touching the
    /// state.
    pub fn overlap_with_gate(&self, omega: &ProductState, gate: Option<&DiagonalGate>) -> Result<LogComplex> {
        let n = self.n_sites();
        if omega.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: omega.len() });
        }
        if let Some(g) = gate {
            let width = if matches!(g, DiagonalGate::Pair { .. }) { 2 } else { 1 };
            self.check_site(g.first_site(), width)?;
        }
        if self.vanished {
            return Ok(LogComplex::ZERO);
        }
        let vecs = omega.vectors();
        let mut log = self.log_norm + omega.log_scale;
        let mut env = Array1::from_elem(1, ONE);
        let mut k = 0;
        while k < n {
            match gate {
                Some(DiagonalGate::Single { site, diag }) if *site == k => {
                    let mut v = vecs[k];
                    for s in 0..LOCAL_DIM {
                        v[s] *= diag[s].conj();
                    }
                    env = env.dot(&self.transfer(k, &v));
                    k += 1;
                }
                Some(DiagonalGate::Pair { site, diag }) if *site == k => {
                    let (a, b) = (&self.tensors[k], &self.tensors[k + 1]);
                    let mut next = Array1::zeros(b.shape()[2]);
                    for s in 0..LOCAL_DIM {
                        if vecs[k][s] == ZERO {
                            continue;
                        }
                        let left = env.dot(&a.index_axis(Axis(1), s)) * vecs[k][s].conj();
                        let mut row = [ZERO; 4];
                        for t in 0..LOCAL_DIM {
                            row[t] = diag[LOCAL_DIM * s + t].conj() * vecs[k + 1][t];
                        }
                        next = next + left.dot(&self.transfer(k + 1, &row));
                    }
                    env = next;
                    k += 2;
                }
                _ => {
                    env = env.dot(&self.transfer(k, &vecs[k]));
                    k += 1;
                }
            }
            if !Self::rescale(&mut env, &mut log) {
                return Ok(LogComplex::ZERO);
            }
        }
        Ok(LogComplex::from_scaled(env[0], log))
    }

    /// Normalized Schmidt values across the bond right of `site`.
    pub fn schmidt_values(&mut self, site: usize) -> Result<Array1<f64>> {
        self.check_site(site, 2)?;
        self.move_center(site)?;
        let t = &self.tensors[site];
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let (_, s, _) = reshape2(t, l * LOCAL_DIM, r).svddc(JobSvd::None).map_err(linalg)?;
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(s);
        }
        Ok(s.mapv(|x| x / norm))
    }

    /// Von Neumann entropy across the bond right of `site`.
    pub fn entanglement_entropy(&mut self, site: usize) -> Result<f64> {
        Ok(von_neumann(self.schmidt_values(site)?.iter().copied()))
    }

    /// Entropy at every bond, left to right.
    pub fn entanglement_profile(&mut self) -> Result<Vec<f64>> {
        (0..self.n_sites() - 1).map(|b| self.entanglement_entropy(b)).collect()
    }

    /// Largest deviation from isometry among non-center tensors.
    pub fn isometry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, t) in self.tensors.iter().enumerate() {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let gram = if k < self.center {
                let m = reshape2(t, l * LOCAL_DIM, r);
                dagger(&m).dot(&m)
            } else if k > self.center {
                let m = reshape2(t, l, LOCAL_DIM * r);
                m.dot(&dagger(&m))
            } else {
                continue;
            };
            for ((i, j), z) in gram.indexed_iter() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((z - target).norm());
            }
        }
        worst
    }

    /// Normalized dense amplitudes (site 0 most significant); multiply by
    /// `exp(log_norm)` for the represented vector.
    pub fn to_dense(&self) -> Array1<C64> {
        let mut acc = Array2::from_elem((1, 1), ONE);
        for t in &self.tensors {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let rows = acc.nrows();
            acc = acc.dot(&reshape2(t, l, LOCAL_DIM * r));
            acc = acc.into_shape_with_order((rows * LOCAL_DIM, r)).expect("contiguous reshape");
        }
        acc.column(0).to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseChain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, LN_2};

    fn random_vec(rng: &mut ChaCha8Rng) -> [C64; 4] {
        std::array::from_fn(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_pair(rng: &mut ChaCha8Rng, site: usize) -> DiagonalGate {
        let diag = std::array::from_fn(|_| C64::from_polar(rng.random_range(0.2..2.0), rng.random_range(-3.0..3.0)));
        DiagonalGate::Pair { site, diag }
    }

    fn unbounded() -> MpsConfig {
        MpsConfig { chi_max: 4096, svd_cutoff: 0.0 }
    }

    fn assert_states_match(mps: &MpsState, dense: &DenseChain, tol: f64) {
        let shift = mps.log_norm() - dense.log_norm();
        let a = mps.to_dense();
        let scale = shift.exp();
        for (x, y) in a.iter().zip(dense.amplitudes()) {
            assert!((x * scale - y).norm() < tol, "{x} vs {y}");
        }
    }

    fn all_ones() -> Array2<C64> {
        Array2::from_elem((4, 4), ONE)
    }

    #[test]
    fn identity_gate_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vecs: Vec<_> = (0..4).map(|_| random_vec(&mut rng)).collect();
        let mut mps = MpsState::from_product(&vecs, MpsConfig::default()).unwrap();
        let before = mps.to_dense();
        let log_before = mps.log_norm();
        let err = mps.apply_diagonal_two_site_gate(1, &[ONE; 16]).unwrap();
        assert!(err < 1e-28);
        assert!((mps.log_norm() - log_before).abs() < 1e-12);
        let after = mps.to_dense();
        for (x, y) in before.iter().zip(after.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn zz_rotation_makes_one_ebit() {
        let pp = ProductState::uniform(2, SiteLabel::PlusPlus);
        let mut mps = MpsState::from_product_state(&pp, MpsConfig::default()).unwrap();
        assert!(mps.entanglement_entropy(0).unwrap().abs() < 1e-12);
        let diag = std::array::from_fn(|i| {
            let (s, t) = (i / 4, i % 4);
            let z = |x: usize| if x & 1 == 0 { 1.0 } else { -1.0 };
            C64::from_polar(1.0, -FRAC_PI_4 * z(s) * z(t))
        });
        mps.apply_diagonal_two_site_gate(0, &diag).unwrap();
        assert!((mps.entanglement_entropy(0).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn random_circuits_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=6 {
            let vecs: Vec<_> = (0..n).map(|_| random_vec(&mut rng)).collect();
            let mut mps = MpsState::from_product(&vecs, unbounded()).unwrap();
            let mut dense = DenseChain::from_product(&vecs).unwrap();
            for step in 0..30 {
                if step % 7 == 6 {
                    let site = rng.random_range(0..n);
                    mps.apply_single_site_projector(site, &all_ones()).unwrap();
                    dense.apply_single_site_operator(site, &all_ones()).unwrap();
                } else if n > 1 && step % 3 != 2 {
                    let site = rng.random_range(0..n - 1);
                    let g = random_pair(&mut rng, site);
                    assert_eq!(mps.apply_gate(&g).unwrap(), 0.0);
                    dense.apply_gate(&g).unwrap();
                } else {
                    let g = DiagonalGate::Single { site: rng.random_range(0..n), diag: random_vec(&mut rng) };
                    mps.apply_gate(&g).unwrap();
                    dense.apply_gate(&g).unwrap();
                }
                assert!(mps.isometry_residual() < 1e-10);
            }
            assert_states_match(&mps, &dense, 1e-12);
            let omega = ProductState {
                sites: (0..n).map(|k| if k % 2 == 0 { SiteLabel::PlusPlus } else { SiteLabel::BellBell }).collect(),
                log_scale: 0.7,
            };
            let a = mps.overlap_with_product_state(&omega).unwrap();
            let b = dense.overlap_with_product_state(&omega).unwrap();
            assert!(a.relative_deviation(&b) < 1e-12);
            if n > 1 {
                for b in 0..n - 1 {
                    let e1 = mps.entanglement_entropy(b).unwrap();
                    let e2 = dense.entanglement_entropy(b).unwrap();
                    assert!((e1 - e2).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gate_insertion_overlap_matches_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vecs: Vec<_> = (0..5).map(|_| random_vec(&mut rng)).collect();
        let mut mps = MpsState::from_product(&vecs, unbounded()).unwrap();
        for k in 0..4 {
            mps.apply_gate(&random_pair(&mut rng, k)).unwrap();
        }
        let omega = ProductState::uniform(5, SiteLabel::BellBell);
        for g in [
            random_pair(&mut rng, 2),
            DiagonalGate::Single { site: 4, diag: random_vec(&mut rng) },
            DiagonalGate::Single { site: 0, diag: random_vec(&mut rng) },
        ] {
            let inserted = mps.overlap_with_gate(&omega, Some(&g)).unwrap();
            let mut applied = mps.clone();
            applied.apply_gate(&g).unwrap();
            let direct = applied.overlap_with_product_state(&omega).unwrap();
            assert!(inserted.relative_deviation(&direct) < 1e-12);
        }
    }

    #[test]
    fn product_overlaps() {
        let pp = ProductState::uniform(5, SiteLabel::PlusPlus);
        let mps = MpsState::from_product_state(&pp, MpsConfig::default()).unwrap();
        let norm = mps.overlap_with_product_state(&pp).unwrap();
        assert!((norm.log_magnitude - 5.0 * 4f64.ln()).abs() < 1e-12);
        let bell = ProductState::uniform(5, SiteLabel::BellBell);
        let cross = mps.overlap_with_product_state(&bell).unwrap();
        assert!((cross.log_magnitude - 5.0 * LN_2).abs() < 1e-12);
        assert!(cross.phase.abs() < 1e-12);
    }

    #[test]
    fn projector_on_plusplus_and_bell() {
        let mut mps = MpsState::from_product_state(&ProductState::uniform(1, SiteLabel::PlusPlus), MpsConfig::default()).unwrap();
        let before = mps.log_norm();
        mps.apply_single_site_projector(0, &all_ones()).unwrap();
        assert!((mps.log_norm() - before - 4f64.ln()).abs() < 1e-12);

        let bell = ProductState::uniform(3, SiteLabel::BellBell);
        let mut mps = MpsState::from_product_state(&bell, MpsConfig::default()).unwrap();
        mps.apply_single_site_projector(1, &all_ones()).unwrap();
        let expected = ProductState {
            sites: vec![SiteLabel::BellBell, SiteLabel::PlusPlus, SiteLabel::BellBell],
            log_scale: LN_2,
        };
        let target = MpsState::from_product_state(&expected, MpsConfig::default()).unwrap();
        assert!((mps.log_norm() - target.log_norm()).abs() < 1e-12);
        for (x, y) in mps.to_dense().iter().zip(target.to_dense().iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn annihilation_is_reported() {
        let bell = ProductState::uniform(2, SiteLabel::BellBell);
        let mut mps = MpsState::from_product_state(&bell, MpsConfig::default()).unwrap();
        let mut kill = Array2::zeros((4, 4));
        kill[[1, 1]] = ONE;
        assert!(matches!(mps.apply_single_site_projector(0, &kill), Err(Error::Annihilated { site: 0 })));
        assert!(mps.overlap_with_product_state(&bell).unwrap().is_zero());
    }

    #[test]
    fn truncation_monotone_in_chi() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vecs: Vec<_> = (0..6).map(|_| random_vec(&mut rng)).collect();
        let mut base = MpsState::from_product(&vecs, unbounded()).unwrap();
        for i in 0..20 {
            base.apply_gate(&random_pair(&mut rng, i % 5)).unwrap();
        }
        let gate = random_pair(&mut rng, 2);
        let mut last = f64::INFINITY;
        for chi in [1, 2, 4, 8, 16, 64] {
            let mut mps = base.clone();
            mps.set_config(MpsConfig { chi_max: chi, svd_cutoff: 0.0 });
            let err = mps.apply_gate(&gate).unwrap();
            assert!(mps.bond_dims()[2] <= chi);
            assert!(err <= last + 1e-15);
            last = err;
        }
        assert!(last < 1e-20);
    }

    #[test]
    fn large_dynamic_range() {
        let tiny = [C64::new(1e-30, 0.0); 4];
        let vecs = vec![tiny; 6];
        let mut mps = MpsState::from_product(&vecs, MpsConfig::default()).unwrap();
        for _ in 0..5 {
            for k in 0..5 {
                mps.apply_diagonal_two_site_gate(k, &[C64::new(1e-5, 0.0); 16]).unwrap();
            }
        }
        let pp = ProductState::uniform(6, SiteLabel::PlusPlus);
        let ov = mps.overlap_with_product_state(&pp).unwrap();
        let expected = 6.0 * (4e-30f64).ln() + 25.0 * (1e-5f64).ln();
        assert!((ov.log_magnitude - expected).abs() < 1e-9);
    }
}
