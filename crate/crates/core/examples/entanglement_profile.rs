//! Entanglement of the final sampler state along the chain, and its spread
//! across syndromes, for a few error rates.

use cohsurf::channel::CouplingTable;
use cohsurf::lattice::CodeLayout;
use cohsurf::metrics::{pairwise_sum, EstimateWithError};
use cohsurf::sampler::{sample_batch, SamplerConfig};

fn main() -> cohsurf::Result<()> {
    let layout = CodeLayout::square(7)?;
    for p in [0.02, 0.08, 0.11, 0.14, 0.2] {
        let c = CouplingTable::uniform(layout.n_qubits(), p, 0.5)?;
        let batch = sample_batch(&layout, &c, 200, 3, &SamplerConfig::default())?;
        let mid: Vec<f64> = batch.records.iter().filter_map(|r| r.mid_entropy()).collect();
        let e = EstimateWithError::from_samples(&mid);
        let sq: Vec<f64> = mid.iter().map(|s| (s - e.mean).powi(2)).collect();
        let sigma = (pairwise_sum(&sq) / (mid.len() - 1) as f64).sqrt();
        let profile: Vec<String> = batch.records[0].entanglement.iter().map(|s| format!("{s:.3}")).collect();
        println!("p={p:.2}: S = {:.4} +- {:.4}, sigma_S = {sigma:.4}, first profile {profile:?}", e.mean, e.sem);
    }
    Ok(())
}
