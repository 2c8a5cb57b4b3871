//! Exact d = 3 observables across the incoherent-to-coherent crossover.

use cohsurf::channel::CouplingTable;
use cohsurf::circuit::{z_matrix, ContractionMethod};
use cohsurf::lattice::CodeLayout;
use cohsurf::metrics::exhaustive_set;

fn main() -> cohsurf::Result<()> {
    let layout = CodeLayout::square(3)?;
    println!("{:>6} {:>9} {:>9} {:>9} {:>9} {:>9}", "gamma", "P_L", "S_rel", "I_C", "gamma_L", "H(P)");
    for gamma in [0.0, 0.5, 0.9, 0.99, 0.999, 1.0] {
        let c = CouplingTable::uniform(9, 0.1, gamma)?;
        let blocks = layout
            .all_syndromes()?
            .iter()
            .map(|s| z_matrix(&layout, &c, s, &ContractionMethod::Dense))
            .collect::<cohsurf::Result<Vec<_>>>()?;
        let set = exhaustive_set(&blocks)?;
        let s_rel = set.relative_entropy().map(|e| e.mean).unwrap_or(f64::INFINITY);
        println!(
            "{gamma:>6} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5}",
            set.logical_error_rate().mean,
            s_rel,
            set.coherent_information().mean,
            set.logical_coherence().mean,
            set.coherent_limit_entropy()?
        );
    }
    Ok(())
}
