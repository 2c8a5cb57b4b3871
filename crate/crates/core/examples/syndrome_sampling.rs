//! Draws error strings from the exact marginal law and prints them as JSON lines.

use cohsurf::channel::CouplingTable;
use cohsurf::lattice::CodeLayout;
use cohsurf::sampler::{sample_batch, write_json_lines, SamplerConfig};

fn main() -> cohsurf::Result<()> {
    let layout = CodeLayout::square(5)?;
    let couplings = CouplingTable::uniform(layout.n_qubits(), 0.1, 0.9)?;
    let batch = sample_batch(&layout, &couplings, 5, 42, &SamplerConfig::default())?;
    write_json_lines(std::io::stdout().lock(), &batch.records)?;
    for r in &batch.records {
        let flips = r.eta.flipped().count();
        println!("{flips} flips, class {}, ln P(eta) = {:.4}, mid-cut entropy {:.4}", r.class, r.log_path_probability(), r.mid_entropy().unwrap_or(0.0));
    }
    eprintln!("{:?}", batch.stats);
    Ok(())
}
