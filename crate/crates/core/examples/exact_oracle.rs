//! Exact 2x2 blocks of the d = 3 code by density-matrix evolution, checked
//! against the transfer circuit, plus a golden table on stdout.

use cohsurf::channel::ErrorChannelParams;
use cohsurf::circuit::ContractionMethod;
use cohsurf::lattice::CodeLayout;
use cohsurf::oracle::{compare_with_circuit, exact_blocks, golden_table, write_golden};

fn main() -> cohsurf::Result<()> {
    let layout = CodeLayout::square(3)?;
    let params = ErrorChannelParams::uniform(9, 0.1, 0.9)?;
    let blocks = exact_blocks(&layout, &params)?;
    for b in blocks.iter().take(4) {
        println!("s={:?} P={:.6} Z00={:.6} Z11={:.6} Z01={:.6}", b.syndrome.flipped(), b.probability(), b.z[0][0].re, b.z[1][1].re, b.z[0][1]);
    }
    let total: f64 = blocks.iter().map(|b| b.probability()).sum();
    println!("sum_s P(s) = {total:.15}");

    let c = compare_with_circuit(&layout, &params, &ContractionMethod::Dense)?;
    println!("circuit vs oracle: max deviation {:.2e}, max |Re Z01|/P {:.2e}", c.max_deviation, c.max_re_z01);

    let table = golden_table(3, &[0.1], &[0.5])?;
    write_golden(std::io::stdout().lock(), &table[..3])?;
    println!();
    Ok(())
}
