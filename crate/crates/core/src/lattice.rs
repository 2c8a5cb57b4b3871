//! Rotated surface-code geometry.
//!
//! Qubits sit on the vertices of an `L × M` grid, labelled `(l, m)` with
//! `l ∈ 1..=L` the column and `m ∈ 1..=M` the row. The qubit index is
//! column-major, `j = (l-1)·M + (m-1)`, which is also the order in which the
//! transfer-matrix circuit visits the qubits.
//!
//! Faces are labelled by their gap coordinates `(a, b)`, `a ∈ 0..=L`,
//! `b ∈ 0..=M`; face `(a, b)` touches the qubits `(a, b)`, `(a+1, b)`,
//! `(a, b+1)`, `(a+1, b+1)` that exist. Faces with `a + b` even carry `X`
//! checks, the others `Z` checks. Left/right boundary faces only exist when
//! they are `X` checks, top/bottom boundary faces only when they are `Z`
//! checks. `X`-type error strings therefore terminate on the left and right
//! boundaries, and the logical `X_L` runs horizontally.

use serde::Serialize;

use crate::error::{Error, Result};

/// Pauli check type of a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckKind {
    X,
    Z,
}

/// One stabilizer face: gap coordinates and qubit support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Face {
    pub a: usize,
    pub b: usize,
    pub qubits: Vec<usize>,
}

/// Geometry of a rotated surface code with path lengths `L` (for `X_L`) and
/// `M` (for `Z_L`).
#[derive(Clone, Debug, Serialize)]
pub struct CodeLayout {
    l: usize,
    m: usize,
    coords: Vec<(usize, usize)>,
    x_stabilizers: Vec<Face>,
    z_stabilizers: Vec<Face>,
    x_logical: Vec<usize>,
    z_logical: Vec<usize>,
    #[serde(skip)]
    z_of_qubit: Vec<Vec<usize>>,
}

/// Signs `η_j = ±1` per qubit; `-1` marks an `X` flip on that qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EtaConfiguration {
    signs: Vec<i8>,
}

/// Set of flipped `Z` checks, stored as sorted indices into
/// [`CodeLayout::z_stabilizers`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Syndrome {
    flipped: Vec<usize>,
}

impl EtaConfiguration {
    /// The identity string (all `+1`).
    pub fn identity(n: usize) -> Self {
        Self { signs: vec![1; n] }
    }

    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("eta signs must be +1 or -1".into()));
        }
        Ok(Self { signs })
    }

    /// Builds a configuration with `-1` on every listed qubit.
    pub fn from_flips(n: usize, flips: impl IntoIterator<Item = usize>) -> Self {
        let mut eta = Self::identity(n);
        for j in flips {
            eta.flip(j);
        }
        eta
    }

    /// Bit `j` of `mask` set means qubit `j` flipped.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self::from_flips(n, (0..n).filter(|j| mask >> j & 1 == 1))
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, j: usize) -> i8 {
        self.signs[j]
    }

    pub fn flip(&mut self, j: usize) {
        self.signs[j] = -self.signs[j];
    }

    /// Multiplies the string by `X` on every qubit of `support`.
    pub fn flip_support(&mut self, support: &[usize]) {
        for &j in support {
            self.flip(j);
        }
    }

    pub fn flipped(&self) -> impl Iterator<Item = usize> + '_ {
        self.signs.iter().enumerate().filter(|(_, &s)| s < 0).map(|(j, _)| j)
    }

    pub fn weight(&self) -> usize {
        self.flipped().count()
    }

    /// `'1'` for a flipped qubit, `'0'` otherwise, in qubit order.
    pub fn to_bitstring(&self) -> String {
        self.signs.iter().map(|&s| if s < 0 { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let signs = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(1),
                '1' => Ok(-1),
                _ => Err(Error::InvalidInput(format!("bad bit {c:?} in eta bitstring"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { signs })
    }
}

impl Syndrome {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn from_indices(mut flipped: Vec<usize>) -> Self {
        flipped.sort_unstable();
        flipped.dedup();
        Self { flipped }
    }

    /// Bit `i` of `mask` set means `Z` check `i` flipped.
    pub fn from_mask(mask: u64) -> Self {
        Self { flipped: (0..64).filter(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn flipped(&self) -> &[usize] {
        &self.flipped
    }

    pub fn is_trivial(&self) -> bool {
        self.flipped.is_empty()
    }

    pub fn len(&self) -> usize {
        self.flipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flipped.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.flipped.binary_search(&i).is_ok()
    }

    pub fn to_mask(&self) -> u64 {
        self.flipped.iter().fold(0u64, |acc, &i| acc | 1 << i)
    }
}

impl CodeLayout {
    /// Builds the layout. Both path lengths must be odd and at least 3.
    pub fn new(l: usize, m: usize) -> Result<Self> {
        for (name, v) in [("L", l), ("M", m)] {
            if v < 3 || v % 2 == 0 {
                return Err(Error::InvalidInput(format!(
                    "{name} = {v}: code dimensions must be odd and >= 3"
                )));
            }
        }
        let n = l * m;
        let coords = (1..=l).flat_map(|c| (1..=m).map(move |r| (c, r))).collect();
        let qubit = |c: usize, r: usize| (c - 1) * m + (r - 1);

        let mut x_stabilizers = Vec::new();
        let mut z_stabilizers = Vec::new();
        for a in 0..=l {
            for b in 0..=m {
                let kind = if (a + b) % 2 == 0 { CheckKind::X } else { CheckKind::Z };
                let side = a == 0 || a == l;
                let cap = b == 0 || b == m;
                if side && cap {
                    continue;
                }
                if side && kind == CheckKind::Z || cap && kind == CheckKind::X {
                    continue;
                }
                let mut qubits = Vec::with_capacity(4);
                for (c, r) in [(a, b), (a, b + 1), (a + 1, b), (a + 1, b + 1)] {
                    if (1..=l).contains(&c) && (1..=m).contains(&r) {
                        qubits.push(qubit(c, r));
                    }
                }
                qubits.sort_unstable();
                let face = Face { a, b, qubits };
                match kind {
                    CheckKind::X => x_stabilizers.push(face),
                    CheckKind::Z => z_stabilizers.push(face),
                }
            }
        }

        let mid_row = m.div_ceil(2);
        let mid_col = l.div_ceil(2);
        let x_logical = (1..=l).map(|c| qubit(c, mid_row)).collect();
        let z_logical = (1..=m).map(|r| qubit(mid_col, r)).collect();

        let mut z_of_qubit = vec![Vec::new(); n];
        for (i, f) in z_stabilizers.iter().enumerate() {
            for &j in &f.qubits {
                z_of_qubit[j].push(i);
            }
        }

        Ok(Self { l, m, coords, x_stabilizers, z_stabilizers, x_logical, z_logical, z_of_qubit })
    }

    /// Square code of distance `d`.
    pub fn square(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    /// Path length of `X_L` (number of columns).
    pub fn l(&self) -> usize {
        self.l
    }

    /// Path length of `Z_L` (number of rows).
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_qubits(&self) -> usize {
        self.l * self.m
    }

    pub fn qubit_index(&self, col: usize, row: usize) -> usize {
        debug_assert!((1..=self.l).contains(&col) && (1..=self.m).contains(&row));
        (col - 1) * self.m + (row - 1)
    }

    /// `(l, m)` coordinates of qubit `j`.
    pub fn coords(&self, j: usize) -> (usize, usize) {
        self.coords[j]
    }

    pub fn x_stabilizers(&self) -> &[Face] {
        &self.x_stabilizers
    }

    pub fn z_stabilizers(&self) -> &[Face] {
        &self.z_stabilizers
    }

    pub fn x_logical(&self) -> &[usize] {
        &self.x_logical
    }

    pub fn z_logical(&self) -> &[usize] {
        &self.z_logical
    }

    /// Indices of the `Z` checks containing qubit `j` (one or two).
    pub fn z_checks_of(&self, j: usize) -> &[usize] {
        &self.z_of_qubit[j]
    }

    fn check_len(&self, eta: &EtaConfiguration) -> Result<()> {
        if eta.len() != self.n_qubits() {
            return Err(Error::LengthMismatch { expected: self.n_qubits(), got: eta.len() });
        }
        Ok(())
    }

    fn check_syndrome(&self, s: &Syndrome) -> Result<()> {
        match s.flipped.last() {
            Some(&i) if i >= self.z_stabilizers.len() => Err(Error::InvalidInput(format!(
                "syndrome index {i} out of range ({} Z checks)",
                self.z_stabilizers.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Flipped `Z` checks of an `X` error string.
    pub fn syndrome_of(&self, eta: &EtaConfiguration) -> Result<Syndrome> {
        self.check_len(eta)?;
        let mut parity = vec![false; self.z_stabilizers.len()];
        for j in eta.flipped() {
            for &i in &self.z_of_qubit[j] {
                parity[i] ^= true;
            }
        }
        let flipped = parity.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i).collect();
        Ok(Syndrome { flipped })
    }

    /// Deterministic reference string `𝒳_s` consistent with `s`.
    ///
    /// Each flipped check is joined to the right boundary by flipping every
    /// qubit to its right on its upper qubit row. Segments shared between
    /// defects cancel.
    pub fn reference_string(&self, s: &Syndrome) -> Result<EtaConfiguration> {
        self.check_syndrome(s)?;
        let mut eta = EtaConfiguration::identity(self.n_qubits());
        for &i in &s.flipped {
            let f = &self.z_stabilizers[i];
            let row = f.b.max(1);
            for col in f.a + 1..=self.l {
                eta.flip(self.qubit_index(col, row));
            }
        }
        Ok(eta)
    }

    /// Homology class of `eta` relative to `reference_string(s)`: parity of
    /// the disagreements on the `Z_L` path.
    pub fn logical_class(&self, eta: &EtaConfiguration, s: &Syndrome) -> Result<u8> {
        let actual = self.syndrome_of(eta)?;
        if &actual != s {
            return Err(Error::SyndromeMismatch);
        }
        let reference = self.reference_string(s)?;
        Ok(self.class_relative_to(eta, &reference))
    }

    /// Intersection parity of `eta · other` with the `Z_L` path.
    pub fn class_relative_to(&self, eta: &EtaConfiguration, other: &EtaConfiguration) -> u8 {
        let diff = self.z_logical.iter().filter(|&&j| eta.sign(j) != other.sign(j)).count();
        (diff % 2) as u8
    }

    /// `(syndrome, class)` of an error string.
    pub fn classify(&self, eta: &EtaConfiguration) -> Result<(Syndrome, u8)> {
        let s = self.syndrome_of(eta)?;
        let reference = self.reference_string(&s)?;
        let q = self.class_relative_to(eta, &reference);
        Ok((s, q))
    }

    /// Multiplies `eta` by `X_L`.
    pub fn apply_x_logical(&self, eta: &EtaConfiguration) -> EtaConfiguration {
        let mut out = eta.clone();
        out.flip_support(&self.x_logical);
        out
    }

    /// All `2^{n_z}` syndromes; only sensible for small codes.
    pub fn all_syndromes(&self) -> Result<Vec<Syndrome>> {
        let nz = self.z_stabilizers.len();
        if nz > 20 {
            return Err(Error::TooLarge(format!("{nz} Z checks are too many to enumerate")));
        }
        Ok((0u64..1 << nz).map(Syndrome::from_mask).collect())
    }

    /// JSON document with coordinates and supports, for debugging and plotting.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}
