//! Minimum-weight perfect matching decoder for X errors.
//!
//! Defects are flipped Z checks. Shortest chains run over the Z-check graph,
//! whose edges are qubits; qubits in the first and last column touch a single
//! Z check and connect it to the boundary. Every defect gets a boundary twin,
//! twins are mutually joined at zero cost, and the minimum-weight perfect
//! matching of that graph is solved with the blossom algorithm.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use petgraph::graph::UnGraph;
use rustworkx_core::max_weight_matching::max_weight_matching;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CodeLayout, EtaConfiguration, Syndrome};

/// Integer units per unit of edge weight.
const SCALE: f64 = 1_000_000.0;

/// Edge weights of the decoding graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum EdgeWeighting {
    /// One per qubit flip.
    #[default]
    Uniform,
    /// `ln((1 − p_j)/p_j)` per qubit.
    LogLikelihood(Vec<f64>),
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    to: usize,
    qubit: usize,
    cost: u64,
}

/// Shortest-path structure of one code.
#[derive(Clone, Debug)]
pub struct Decoder {
    n_qubits: usize,
    n_checks: usize,
    adjacency: Vec<Vec<Edge>>,
    uniform: bool,
}

/// Pairwise defect distances and boundary distances.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchingGraph {
    pub defects: Vec<usize>,
    /// `pair[i][k]` for defects `i`, `k`; `None` when disconnected.
    pub pair: Vec<Vec<Option<f64>>>,
    pub boundary: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoding {
    pub class: u8,
    pub correction: EtaConfiguration,
    /// Total matching weight.
    pub weight: f64,
    /// Matched partners: `Some(k)` for a defect, `None` for the boundary.
    pub partners: Vec<Option<usize>>,
}

struct Paths {
    dist: Vec<u64>,
    via: Vec<Option<(usize, usize)>>,
}

impl Decoder {
    pub fn new(layout: &CodeLayout, weighting: &EdgeWeighting) -> Result<Self> {
        let n = layout.n_qubits();
        let n_checks = layout.z_stabilizers().len();
        let cost = |j: usize| -> Result<u64> {
            match weighting {
                EdgeWeighting::Uniform => Ok(1),
                EdgeWeighting::LogLikelihood(ps) => {
                    let p = *ps.get(j).ok_or(Error::LengthMismatch { expected: n, got: ps.len() })?;
                    if !(p > 0.0 && p < 0.5) {
                        return Err(Error::Domain(format!("p = {p}: log-likelihood weights need 0 < p < 1/2")));
                    }
                    Ok((((1.0 - p) / p).ln() * SCALE).round().max(1.0) as u64)
                }
            }
        };
        let boundary = n_checks;
        let mut adjacency = vec![Vec::new(); n_checks + 1];
        for j in 0..n {
            let c = cost(j)?;
            match *layout.z_checks_of(j) {
                [a, b] => {
                    adjacency[a].push(Edge { to: b, qubit: j, cost: c });
                    adjacency[b].push(Edge { to: a, qubit: j, cost: c });
                }
                [a] => {
                    adjacency[a].push(Edge { to: boundary, qubit: j, cost: c });
                    adjacency[boundary].push(Edge { to: a, qubit: j, cost: c });
                }
                _ => return Err(Error::InvalidInput(format!("qubit {j} touches no Z check"))),
            }
        }
        Ok(Self { n_qubits: n, n_checks, adjacency, uniform: matches!(weighting, EdgeWeighting::Uniform) })
    }

    fn to_weight(&self, units: u64) -> f64 {
        if self.uniform {
            units as f64
        } else {
            units as f64 / SCALE
        }
    }

    /// Dijkstra from one check; paths never pass through the boundary.
    fn paths_from(&self, source: usize) -> Paths {
        let nodes = self.n_checks + 1;
        let mut dist = vec![u64::MAX; nodes];
        let mut via = vec![None; nodes];
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0u64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] || u == self.n_checks {
                continue;
            }
            for e in &self.adjacency[u] {
                let nd = d + e.cost;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    via[e.to] = Some((u, e.qubit));
                    heap.push(Reverse((nd, e.to)));
                }
            }
        }
        Paths { dist, via }
    }

    fn chain(paths: &Paths, mut target: usize, out: &mut EtaConfiguration) {
        while let Some((prev, qubit)) = paths.via[target] {
            out.flip(qubit);
            target = prev;
        }
    }

    fn check_syndrome(&self, s: &Syndrome) -> Result<()> {
        match s.flipped().last() {
            Some(&i) if i >= self.n_checks => Err(Error::InvalidInput(format!("syndrome index {i} out of range"))),
            _ => Ok(()),
        }
    }

    pub fn matching_graph(&self, s: &Syndrome) -> Result<MatchingGraph> {
        self.check_syndrome(s)?;
        let defects = s.flipped().to_vec();
        let mut pair = vec![vec![None; defects.len()]; defects.len()];
        let mut boundary = Vec::with_capacity(defects.len());
        for (i, &a) in defects.iter().enumerate() {
            let paths = self.paths_from(a);
            for (k, &b) in defects.iter().enumerate() {
                if k != i && paths.dist[b] != u64::MAX {
                    pair[i][k] = Some(self.to_weight(paths.dist[b]));
                }
            }
            let db = paths.dist[self.n_checks];
            boundary.push((db != u64::MAX).then(|| self.to_weight(db)));
        }
        Ok(MatchingGraph { defects, pair, boundary })
    }

    /// Minimum-weight correction and its class.
    pub fn decode(&self, layout: &CodeLayout, s: &Syndrome) -> Result<Decoding> {
        self.check_syndrome(s)?;
        let k = s.len();
        let mut correction = EtaConfiguration::identity(self.n_qubits);
        if k == 0 {
            return Ok(Decoding { class: 0, correction, weight: 0.0, partners: Vec::new() });
        }
        let defects = s.flipped();
        let paths: Vec<Paths> = defects.iter().map(|&a| self.paths_from(a)).collect();
        let dist = |i: usize, t: usize| paths[i].dist[t];
        let mut max_cost = 0u64;
        for i in 0..k {
            for t in defects.iter().copied().chain([self.n_checks]) {
                if dist(i, t) != u64::MAX {
                    max_cost = max_cost.max(dist(i, t));
                }
            }
        }
        let offset = i128::from(max_cost) + 1;
        let mut graph: UnGraph<(), i128> = UnGraph::with_capacity(2 * k, k * k * 2);
        let nodes: Vec<_> = (0..2 * k).map(|_| graph.add_node(())).collect();
        for i in 0..k {
            for t in i + 1..k {
                let d = dist(i, defects[t]);
                if d != u64::MAX {
                    graph.add_edge(nodes[i], nodes[t], offset - i128::from(d));
                }
            }
            let db = dist(i, self.n_checks);
            if db != u64::MAX {
                graph.add_edge(nodes[i], nodes[k + i], offset - i128::from(db));
            }
            for t in i + 1..k {
                graph.add_edge(nodes[k + i], nodes[k + t], offset);
            }
        }
        let matching = max_weight_matching(&graph, true, |e| Ok::<i128, Error>(*e.weight()), false)?;
        let mut partners = vec![None; k];
        let mut matched = vec![false; k];
        let mut total = 0u64;
        for (a, b) in matching {
            let (a, b) = (a.min(b), a.max(b));
            if b < k {
                partners[a] = Some(b);
                partners[b] = Some(a);
                matched[a] = true;
                matched[b] = true;
                total += dist(a, defects[b]);
                Self::chain(&paths[a], defects[b], &mut correction);
            } else if a < k && b == k + a {
                matched[a] = true;
                total += dist(a, self.n_checks);
                Self::chain(&paths[a], self.n_checks, &mut correction);
            }
        }
        if matched.iter().any(|m| !m) {
            return Err(Error::Numerical("matching left a defect unpaired".into()));
        }
        let class = layout.logical_class(&correction, s)?;
        Ok(Decoding { class, correction, weight: self.to_weight(total), partners })
    }
}

/// Class chosen by uniform-weight matching.
pub fn decode(layout: &CodeLayout, s: &Syndrome) -> Result<(u8, EtaConfiguration)> {
    let d = Decoder::new(layout, &EdgeWeighting::Uniform)?.decode(layout, s)?;
    Ok((d.class, d.correction))
}

/// Optimal pairing weight by exhaustive search over all pairings; for tests
/// and small defect counts.
pub fn brute_force_weight(graph: &MatchingGraph) -> Option<f64> {
    let k = graph.defects.len();
    if k > 20 {
        return None;
    }
    let mut memo = vec![None; 1 << k];
    fn go(mask: usize, g: &MatchingGraph, memo: &mut Vec<Option<Option<f64>>>) -> Option<f64> {
        if mask == 0 {
            return Some(0.0);
        }
        if let Some(v) = memo[mask] {
            return v;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best: Option<f64> = None;
        let mut consider = |w: Option<f64>, sub: Option<f64>| {
            if let (Some(w), Some(sub)) = (w, sub) {
                best = Some(best.map_or(w + sub, |b: f64| b.min(w + sub)));
            }
        };
        let sub = go(rest, g, memo);
        consider(g.boundary[i], sub);
        let mut m = rest;
        while m != 0 {
            let t = m.trailing_zeros() as usize;
            m &= m - 1;
            let sub = go(rest & !(1 << t), g, memo);
            consider(g.pair[i][t], sub);
        }
        memo[mask] = Some(best);
        best
    }
    go((1 << k) - 1, graph, &mut memo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_syndrome() {
        let layout = CodeLayout::square(5).unwrap();
        let (q, c) = decode(&layout, &Syndrome::trivial()).unwrap();
        assert_eq!(q, 0);
        assert_eq!(c.weight(), 0);
        let dec = Decoder::new(&layout, &EdgeWeighting::Uniform).unwrap();
        assert!(dec.matching_graph(&Syndrome::trivial()).unwrap().defects.is_empty());
    }

    #[test]
    fn adjacent_defects_weight_one() {
        let layout = CodeLayout::square(5).unwrap();
        let dec = Decoder::new(&layout, &EdgeWeighting::Uniform).unwrap();
        let j = layout.qubit_index(3, 3);
        let s = layout.syndrome_of(&EtaConfiguration::from_flips(25, [j])).unwrap();
        assert_eq!(s.len(), 2);
        let g = dec.matching_graph(&s).unwrap();
        assert_eq!(g.pair[0][1], Some(1.0));
        let d = dec.decode(&layout, &s).unwrap();
        assert_eq!(d.weight, 1.0);
        assert_eq!(d.correction.flipped().collect::<Vec<_>>(), vec![j]);
    }

    #[test]
    fn boundary_weights_match_brute_force_d3() {
        let layout = CodeLayout::square(3).unwrap();
        let dec = Decoder::new(&layout, &EdgeWeighting::Uniform).unwrap();
        let mut best = vec![usize::MAX; layout.z_stabilizers().len()];
        for mask in 0u64..512 {
            let eta = EtaConfiguration::from_mask(9, mask);
            let s = layout.syndrome_of(&eta).unwrap();
            if s.len() == 1 {
                let i = s.flipped()[0];
                best[i] = best[i].min(eta.weight());
            }
        }
        for (i, &b) in best.iter().enumerate() {
            let g = dec.matching_graph(&Syndrome::from_indices(vec![i])).unwrap();
            assert_eq!(g.boundary[0], Some(b as f64));
            let d = dec.decode(&layout, &Syndrome::from_indices(vec![i])).unwrap();
            assert_eq!(d.partners, vec![None]);
        }
    }

    #[test]
    fn matching_is_optimal_on_random_syndromes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [3usize, 5, 7] {
            let layout = CodeLayout::square(d).unwrap();
            let dec = Decoder::new(&layout, &EdgeWeighting::Uniform).unwrap();
            let nz = layout.z_stabilizers().len();
            for _ in 0..300 {
                let k = rng.random_range(0..=12.min(nz));
                let mut picks: Vec<usize> = (0..nz).collect();
                for i in 0..k {
                    let t = rng.random_range(i..nz);
                    picks.swap(i, t);
                }
                let s = Syndrome::from_indices(picks[..k].to_vec());
                let out = dec.decode(&layout, &s).unwrap();
                let g = dec.matching_graph(&s).unwrap();
                assert_eq!(Some(out.weight), brute_force_weight(&g));
                assert_eq!(layout.syndrome_of(&out.correction).unwrap(), s);
                assert_eq!(out.correction.weight() as f64, out.weight);
            }
        }
    }

    #[test]
    fn log_likelihood_weights() {
        let layout = CodeLayout::square(3).unwrap();
        let ps = vec![0.1; 9];
        let dec = Decoder::new(&layout, &EdgeWeighting::LogLikelihood(ps)).unwrap();
        let s = Syndrome::from_indices(vec![0]);
        let out = dec.decode(&layout, &s).unwrap();
        assert!((out.weight - 9f64.ln() * out.correction.weight() as f64).abs() < 1e-5);
        assert!(Decoder::new(&layout, &EdgeWeighting::LogLikelihood(vec![0.6; 9])).is_err());
    }
}
