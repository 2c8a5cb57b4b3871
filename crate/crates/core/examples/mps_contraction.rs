//! Z-matrix of one syndrome by MPS contraction, with bond dimension and
//! truncation diagnostics for growing distance.

use std::time::Instant;

use cohsurf::channel::CouplingTable;
use cohsurf::circuit::{build_gate_plan, contract, z_matrix, ContractionMethod};
use cohsurf::lattice::{CodeLayout, EtaConfiguration};
use cohsurf::mps::MpsConfig;

fn main() -> cohsurf::Result<()> {
    let (p, gamma) = (0.1, 0.9);
    for d in [3, 5, 7, 9] {
        let layout = CodeLayout::square(d)?;
        let n = layout.n_qubits();
        let couplings = CouplingTable::uniform(n, p, gamma)?;
        let eta = EtaConfiguration::from_flips(n, (0..n).step_by(7));
        let s = layout.syndrome_of(&eta)?;
        let method = ContractionMethod::mps(MpsConfig::default());

        let t = Instant::now();
        let z = z_matrix(&layout, &couplings, &s, &method)?;
        let b = z.normalized();
        let plan = build_gate_plan(&layout, &couplings, &eta, &eta)?;
        let c = contract(&plan, &method)?;
        println!(
            "d={d}: ln P(s) = {:.6}, Z00/P = {:.6}, Z01/P = {:.3e}{:+.3e}i, max bond {}, truncation {:.1e} ({:?})",
            z.probability().log_magnitude,
            b.z00,
            b.z01.re,
            b.z01.im,
            c.max_bond,
            z.truncation_error,
            t.elapsed()
        );
        if d <= 5 {
            let dense = z_matrix(&layout, &couplings, &s, &ContractionMethod::Dense)?;
            println!("      dense agrees to {:.1e}", dense.z00.relative_deviation(&z.z00));
        }
    }
    Ok(())
}
