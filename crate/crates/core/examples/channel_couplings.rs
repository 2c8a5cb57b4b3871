//! Couplings of the X channel and the weights they reproduce.

use cohsurf::channel::{bond_couplings, vectorized_couplings, QubitChannel};

fn main() -> cohsurf::Result<()> {
    for (p, gamma) in [(0.1, 0.0), (0.1, 0.5), (0.1, 1.0), (0.3, 0.9)] {
        let exact = QubitChannel::new(p, gamma)?.coefficients();
        let expanded = bond_couplings(p, gamma)?;
        let err = exact.0.iter().zip(expanded.weights().0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        println!("p={p} gamma={gamma}");
        println!("  couplings {expanded:?}");
        println!("  weights [1-p, Xρ, ρX, p] = {:?} (max deviation {err:.1e})", exact.0);
        let k = vectorized_couplings(p, gamma)?;
        println!("  kappa0 = {:.10}, kappa1 = {:.10}i", k.k0.re, k.k1.im);
    }
    Ok(())
}
