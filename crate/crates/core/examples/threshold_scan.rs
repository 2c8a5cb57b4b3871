//! Small grid run and curve-crossing estimate. Writes into a temp directory.

use cohsurf::experiment::{run, RunConfig};
use cohsurf::threshold::{threshold_scan, Metric};

fn main() -> cohsurf::Result<()> {
    let dir = std::env::temp_dir().join("cohsurf_threshold_example");
    let mut config = RunConfig::from_toml(
        r#"
        d = [3, 5, 7]
        p = [0.06, 0.08, 0.10, 0.12, 0.14, 0.16]
        gamma = [0.05]
        n_samples = 300
        master_seed = 1
        off_diagonal = false
        "#,
    )?;
    config.output = dir.clone();
    let report = run(&config)?;
    for r in &report.rows {
        println!("d={} p={:.2}: P_L = {:.4} +- {:.4}, MWPM = {:.4}", r.d, r.p, r.p_l, r.p_l_sem, r.p_l_mwpm.unwrap_or(f64::NAN));
    }
    for metric in [Metric::LogicalError, Metric::Mwpm] {
        let t = threshold_scan(&report.rows, 0.05, metric, 200, 1)?;
        println!("{metric:?}: {}", serde_json::to_string(&t).expect("json"));
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
