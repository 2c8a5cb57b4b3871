//! Prints the stabilizers and logical operators of a distance-d code.
//!
//! cargo run --example lattice_layout -- 5

use cohsurf::lattice::{CodeLayout, EtaConfiguration};

fn main() -> cohsurf::Result<()> {
    let d: usize = std::env::args().nth(1).map_or(3, |a| a.parse().expect("distance"));
    let layout = CodeLayout::square(d)?;
    println!("d = {d}: {} qubits, {} X checks, {} Z checks", layout.n_qubits(), layout.x_stabilizers().len(), layout.z_stabilizers().len());
    println!("X_L on qubits {:?}", layout.x_logical());
    println!("Z_L on qubits {:?}", layout.z_logical());

    let centre = layout.qubit_index(d.div_ceil(2), d.div_ceil(2));
    let eta = EtaConfiguration::from_flips(layout.n_qubits(), [centre]);
    let (s, q) = layout.classify(&eta)?;
    println!("flip on qubit {centre} -> syndrome {:?}, class {q}", s.flipped());

    if d == 3 {
        println!("{}", layout.to_json());
    }
    Ok(())
}
