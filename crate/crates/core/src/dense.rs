//! Dense state vectors on chains of 4-level sites.
//!
//! Site 0 is the most significant digit of the flat index. The vector is
//! kept normalized with its magnitude in `log_norm`, mirroring [`MpsState`].
//!
//! [`MpsState`]: crate::mps::MpsState

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::logc::LogComplex;
use crate::mps::{DiagonalGate, ProductState, LOCAL_DIM};

/// Largest chain handled densely (4^7 amplitudes).
pub const MAX_DENSE_SITES: usize = 7;

#[derive(Clone, Debug)]
pub struct DenseChain {
    amps: Array1<C64>,
    n_sites: usize,
    log_norm: f64,
    vanished: bool,
}

impl DenseChain {
    pub fn from_product(vectors: &[[C64; 4]]) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty chain".into()));
        }
        if n > MAX_DENSE_SITES {
            return Err(Error::TooLarge(format!("{n} sites exceed the dense limit of {MAX_DENSE_SITES}")));
        }
        let mut amps = Array1::from_elem(1, C64::new(1.0, 0.0));
        for v in vectors {
            let mut next = Array1::zeros(amps.len() * LOCAL_DIM);
            for (i, a) in amps.iter().enumerate() {
                for s in 0..LOCAL_DIM {
                    next[i * LOCAL_DIM + s] = a * v[s];
                }
            }
            amps = next;
        }
        let mut chain = Self { amps, n_sites: n, log_norm: 0.0, vanished: false };
        chain.renormalize();
        Ok(chain)
    }

    pub fn from_product_state(state: &ProductState) -> Result<Self> {
        let vecs: Vec<[C64; 4]> = state.sites.iter().map(|s| s.vector()).collect();
        let mut chain = Self::from_product(&vecs)?;
        chain.log_norm += state.log_scale;
        Ok(chain)
    }

    /// Wraps an explicit amplitude vector.
    pub fn from_amplitudes(amps: Array1<C64>) -> Result<Self> {
        let mut n = 0;
        let mut len = 1;
        while len < amps.len() {
            len *= LOCAL_DIM;
            n += 1;
        }
        if len != amps.len() || n == 0 {
            return Err(Error::InvalidInput(format!("length {} is not a power of 4", amps.len())));
        }
        let mut chain = Self { amps, n_sites: n, log_norm: 0.0, vanished: false };
        chain.renormalize();
        Ok(chain)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn is_vanished(&self) -> bool {
        self.vanished
    }

    /// Normalized amplitudes; multiply by `exp(log_norm)` for the state.
    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    fn renormalize(&mut self) {
        let norm = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            self.vanished = true;
            return;
        }
        self.amps.mapv_inplace(|a| a / norm);
        self.log_norm += norm.ln();
    }

    fn digit(&self, idx: usize, site: usize) -> usize {
        (idx / LOCAL_DIM.pow((self.n_sites - 1 - site) as u32)) % LOCAL_DIM
    }

    fn check_site(&self, site: usize, width: usize) -> Result<()> {
        if site + width > self.n_sites {
            return Err(Error::InvalidInput(format!("site {site} out of range for {} sites", self.n_sites)));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &DiagonalGate) -> Result<()> {
        match gate {
            DiagonalGate::Single { site, diag } => {
                self.check_site(*site, 1)?;
                for idx in 0..self.amps.len() {
                    let s = self.digit(idx, *site);
                    self.amps[idx] *= diag[s];
                }
            }
            DiagonalGate::Pair { site, diag } => {
                self.check_site(*site, 2)?;
                for idx in 0..self.amps.len() {
                    let s = self.digit(idx, *site);
                    let t = self.digit(idx, site + 1);
                    self.amps[idx] *= diag[LOCAL_DIM * s + t];
                }
            }
        }
        if !self.vanished {
            self.renormalize();
        }
        Ok(())
    }

    /// Applies a general 4×4 operator on one site.
    pub fn apply_single_site_operator(&mut self, site: usize, op: &Array2<C64>) -> Result<()> {
        self.check_site(site, 1)?;
        let stride = LOCAL_DIM.pow((self.n_sites - 1 - site) as u32);
        let mut out = Array1::zeros(self.amps.len());
        for idx in 0..self.amps.len() {
            let s = self.digit(idx, site);
            let base = idx - s * stride;
            for t in 0..LOCAL_DIM {
                out[base + t * stride] += op[[t, s]] * self.amps[idx];
            }
        }
        self.amps = out;
        if !self.vanished {
            self.renormalize();
        }
        if self.vanished {
            return Err(Error::Annihilated { site });
        }
        Ok(())
    }

    pub fn overlap_with_product_state(&self, omega: &ProductState) -> Result<LogComplex> {
        if omega.sites.len() != self.n_sites {
            return Err(Error::LengthMismatch { expected: self.n_sites, got: omega.sites.len() });
        }
        if self.vanished {
            return Ok(LogComplex::ZERO);
        }
        let vecs: Vec<[C64; 4]> = omega.sites.iter().map(|s| s.vector()).collect();
        let mut total = C64::new(0.0, 0.0);
        for idx in 0..self.amps.len() {
            let mut w = C64::new(1.0, 0.0);
            for (k, v) in vecs.iter().enumerate() {
                w *= v[self.digit(idx, k)].conj();
            }
            total += w * self.amps[idx];
        }
        Ok(LogComplex::from_scaled(total, self.log_norm + omega.log_scale))
    }

    /// Normalized Schmidt values across the bond right of `site`.
    pub fn schmidt_values(&self, site: usize) -> Result<Array1<f64>> {
        use ndarray_linalg::{JobSvd, SVDDC};
        self.check_site(site, 2)?;
        let rows = LOCAL_DIM.pow((site + 1) as u32);
        let cols = self.amps.len() / rows;
        let m = self.amps.to_shape((rows, cols)).map_err(|e| Error::Linalg(e.to_string()))?.to_owned();
        let (_, s, _) = m.svddc(JobSvd::None).map_err(|e| Error::Linalg(e.to_string()))?;
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(s.mapv(|x| x / norm))
    }

    pub fn entanglement_entropy(&self, site: usize) -> Result<f64> {
        Ok(crate::mps::von_neumann(self.schmidt_values(site)?.iter().copied()))
    }
}
