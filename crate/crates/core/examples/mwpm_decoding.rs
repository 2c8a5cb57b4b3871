//! Minimum-weight matching of a random syndrome, compared with brute force.

use cohsurf::lattice::{CodeLayout, EtaConfiguration};
use cohsurf::mwpm::{brute_force_weight, Decoder, EdgeWeighting};

fn main() -> cohsurf::Result<()> {
    let layout = CodeLayout::square(7)?;
    let n = layout.n_qubits();
    let eta = EtaConfiguration::from_flips(n, [3, 10, 11, 24, 30, 45]);
    let (s, class) = layout.classify(&eta)?;
    let decoder = Decoder::new(&layout, &EdgeWeighting::Uniform)?;
    let d = decoder.decode(&layout, &s)?;
    println!("defects {:?}", s.flipped());
    println!("partners {:?}", d.partners);
    println!("weight {} (brute force {:?})", d.weight, brute_force_weight(&decoder.matching_graph(&s)?));
    println!("true class {class}, decoded class {} -> {}", d.class, if d.class == class { "success" } else { "logical error" });

    let weighted = Decoder::new(&layout, &EdgeWeighting::LogLikelihood(vec![0.1; n]))?;
    println!("log-likelihood weights: class {}", weighted.decode(&layout, &s)?.class);
    Ok(())
}
