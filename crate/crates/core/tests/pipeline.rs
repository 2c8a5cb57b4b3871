use std::f64::consts::LN_2;

use cohsurf::channel::{CouplingTable, ErrorChannelParams};
use cohsurf::circuit::{build_gate_plan, restart_projector, CircuitElement, ZMatrix};
use cohsurf::dense::DenseChain;
use cohsurf::experiment::{compute_point, read_metrics, run, Mode, RunConfig, METRICS_FILE};
use cohsurf::lattice::CodeLayout;
use cohsurf::logc::LogComplex;
use cohsurf::metrics::exhaustive_set;
use cohsurf::oracle::exact_blocks;
use cohsurf::sampler::{sample_batch, SamplerConfig};

fn oracle_blocks(p: f64, gamma: f64) -> Vec<ZMatrix> {
    let layout = CodeLayout::square(3).unwrap();
    exact_blocks(&layout, &ErrorChannelParams::uniform(9, p, gamma).unwrap())
        .unwrap()
        .into_iter()
        .map(|b| ZMatrix {
            syndrome: b.syndrome,
            z00: LogComplex::from_complex(b.z[0][0]),
            z11: LogComplex::from_complex(b.z[1][1]),
            z01: LogComplex::from_complex(b.z[0][1]),
            truncation_error: 0.0,
            flagged: false,
        })
        .collect()
}

fn config(toml: &str, dir: &std::path::Path) -> RunConfig {
    let mut c = RunConfig::from_toml(toml).unwrap();
    c.output = dir.to_path_buf();
    c
}

#[test]
fn exhaustive_csv_equals_oracle_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("d = [3]\np = [0.05, 0.105]\ngamma = [0.0, 0.5, 0.99]\nmode = \"exhaustive\"", tmp.path());
    run(&c).unwrap();
    let rows = read_metrics(&tmp.path().join(METRICS_FILE)).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let set = exhaustive_set(&oracle_blocks(r.p, r.gamma)).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-10;
        assert!(close(r.p_l, set.logical_error_rate().mean), "{r:?}");
        assert!(close(r.i_c.unwrap(), set.coherent_information().mean));
        assert!(close(r.gamma_l.unwrap(), set.logical_coherence().mean));
        assert!(close(r.s_rel.unwrap(), set.relative_entropy().unwrap().mean));
        assert!(close(r.s_rel_coherent.unwrap(), set.coherent_limit_entropy().unwrap()));
        assert_eq!(r.p_l_sem, 0.0);
        assert!(r.max_re_z01 < 1e-10 && r.max_kappa < 1e-10);
    }
}

#[test]
fn coherent_limit_row() {
    let tmp = tempfile::tempdir().unwrap();
    let c = config("d = [3]\np = [0.1]\ngamma = [1.0]\nmode = \"exhaustive\"", tmp.path());
    let r = &run(&c).unwrap().rows[0];
    assert!((r.i_c.unwrap() - LN_2).abs() < 1e-12);
    assert!((r.gamma_l.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r.s_rel, None);
    assert!(r.s_rel_coherent.unwrap() > 0.0);
}

#[test]
fn sampled_metrics_agree_with_exhaustive() {
    let tmp = tempfile::tempdir().unwrap();
    let sampled = config("d = [3]\np = [0.105]\ngamma = [0.99]\nn_samples = 100000\nmaster_seed = 5", tmp.path());
    let mut exhaustive = sampled.clone();
    exhaustive.mode = Mode::Exhaustive;
    let point = sampled.grid()[0];
    let s = compute_point(&sampled, &point).unwrap().row;
    let e = compute_point(&exhaustive, &point).unwrap().row;
    let within = |name: &str, a: f64, sem: f64, b: f64| assert!((a - b).abs() < 3.0 * sem, "{name}: {a} +- {sem} vs {b}");
    within("p_l", s.p_l, s.p_l_sem, e.p_l);
    within("p_l_mwpm", s.p_l_mwpm.unwrap(), s.p_l_mwpm_sem.unwrap(), e.p_l_mwpm.unwrap());
    within("s_rel", s.s_rel.unwrap(), s.s_rel_sem.unwrap(), e.s_rel.unwrap());
    within("i_c", s.i_c.unwrap(), s.i_c_sem.unwrap(), e.i_c.unwrap());
    within("gamma_l", s.gamma_l.unwrap(), s.gamma_l_sem.unwrap(), e.gamma_l.unwrap());
}

#[test]
fn sampler_entropies_match_dense_chain() {
    let layout = CodeLayout::square(5).unwrap();
    let couplings = CouplingTable::uniform(25, 0.12, 0.7).unwrap();
    let batch = sample_batch(&layout, &couplings, 20, 3, &SamplerConfig::default()).unwrap();
    let projector = restart_projector();
    for r in &batch.records {
        let plan = build_gate_plan(&layout, &couplings, &r.eta, &r.eta).unwrap();
        let mut chain = DenseChain::from_product_state(&plan.initial).unwrap();
        for e in &plan.elements {
            match e {
                CircuitElement::Gate { gate, .. } => chain.apply_gate(gate).unwrap(),
                CircuitElement::Layer { sites, .. } => {
                    for &k in sites {
                        chain.apply_single_site_operator(k, &projector).unwrap();
                    }
                }
            }
        }
        assert_eq!(r.entanglement.len(), plan.n_sites - 1);
        for (cut, s) in r.entanglement.iter().enumerate() {
            let want = chain.entanglement_entropy(cut).unwrap();
            assert!((s - want).abs() < 1e-10, "cut {cut}: {s} vs {want}");
        }
        let z = chain.overlap_with_product_state(&plan.terminal).unwrap();
        assert!(z.relative_deviation(&r.class_weight) < 1e-10);
    }
}

#[test]
fn metrics_csv_header_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    run(&config("d = [3]\np = [0.1]\ngamma = [0.5]\nn_samples = 5", tmp.path())).unwrap();
    let text = std::fs::read_to_string(tmp.path().join(METRICS_FILE)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "schema_version,grid_index,d,p,gamma,mode,seed,n_samples,n_excluded,p_l,p_l_sem,p_l_mwpm,p_l_mwpm_sem,\
         s_rel,s_rel_sem,s_rel_coherent,i_c,i_c_sem,gamma_l,gamma_l_sem,s_mid,s_mid_sem,sigma_s,\
         max_truncation_error,max_re_z01,max_kappa,retried,clamp_events"
    );
}

#[test]
fn layout_json_describes_code() {
    let tmp = tempfile::tempdir().unwrap();
    run(&config("d = [3, 5]\np = [0.1]\ngamma = [0.5]\nn_samples = 5", tmp.path())).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("layout_d5.json")).unwrap()).unwrap();
    assert_eq!(v["coords"].as_array().unwrap().len(), 25);
    assert_eq!(v["x_stabilizers"].as_array().unwrap().len(), 12);
    assert_eq!(v["z_stabilizers"].as_array().unwrap().len(), 12);
    assert_eq!(v["x_logical"].as_array().unwrap().len(), 5);
    assert_eq!(v["z_stabilizers"][0]["qubits"].as_array().unwrap().len() % 2, 0);
}
