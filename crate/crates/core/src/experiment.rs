//! Grid runs over `(d, p, γ)` with CSV output, a manifest and resume.
//!
//! Output directory layout:
//!
//! ```text
//! metrics.csv          one row per finished grid point, ordered by grid index
//! manifest.json        config hash, code version, seeds, per-point status, wall time
//! layout_d{d}.json     code layout of every distance in the grid
//! samples/point_NNNN.jsonl   per-sample records when `keep_samples = true`
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::CouplingTable;
use crate::circuit::{z_matrix_with, ContractionMethod, ZRequest};
use crate::error::{Error, Result};
use crate::lattice::CodeLayout;
use crate::metrics::{Averaging, EstimateWithError, ObservableSet, SyndromeObservables};
use crate::mps::MpsConfig;
use crate::mwpm::{Decoder, EdgeWeighting};
use crate::sampler::{sample_batch, write_json_lines, SampleRecord, SamplerConfig};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sampled,
    /// Every syndrome with its exact weight; `d = 3` only.
    Exhaustive,
}

fn default_samples() -> usize {
    2000
}
fn default_chi() -> usize {
    MpsConfig::default().chi_max
}
fn default_cutoff() -> f64 {
    MpsConfig::default().svd_cutoff
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_workers() -> usize {
    1
}
fn yes() -> bool {
    true
}

/// Run configuration, read from TOML.
///
/// ```toml
/// d = [5, 7, 9]
/// p = [0.08, 0.10, 0.12]
/// gamma = [0.05]
/// n_samples = 2000
/// master_seed = 7
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub d: Vec<usize>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_chi")]
    pub chi_max: usize,
    #[serde(default = "default_cutoff")]
    pub svd_cutoff: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "mode_default")]
    pub mode: Mode,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Write per-sample JSON lines.
    #[serde(default)]
    pub keep_samples: bool,
    /// Contract `Z01`; without it `γ_L`, `I_C` and `S_rel` are left empty.
    #[serde(default = "yes")]
    pub off_diagonal: bool,
    /// Decode every syndrome with MWPM.
    #[serde(default = "yes")]
    pub decoder: bool,
}

fn mode_default() -> Mode {
    Mode::Sampled
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d.is_empty() || self.p.is_empty() || self.gamma.is_empty() {
            return bad("d, p and gamma must be non-empty".into());
        }
        if let Some(d) = self.d.iter().find(|&&d| d < 3 || d % 2 == 0) {
            return bad(format!("d = {d} is not an odd distance ≥ 3"));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("p = {p} outside [0, 1]"));
        }
        if let Some(g) = self.gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return bad(format!("gamma = {g} outside [0, 1]"));
        }
        if self.mode == Mode::Exhaustive && self.d.iter().any(|&d| d != 3) {
            return bad("exhaustive mode supports d = 3 only".into());
        }
        if self.mode == Mode::Sampled && self.n_samples == 0 {
            return bad("n_samples must be positive".into());
        }
        if self.chi_max == 0 || !(self.svd_cutoff >= 0.0) {
            return bad("chi_max must be positive and svd_cutoff nonnegative".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        Ok(())
    }

    /// Grid points in canonical order: `d`, then `γ`, then `p`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &gamma in &self.gamma {
                for &p in &self.p {
                    let index = out.len();
                    out.push(GridPoint { index, d, p, gamma, seed: point_seed(self.master_seed, d, p, gamma) });
                }
            }
        }
        out
    }

    /// SHA-256 over the fields that determine the results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        c.workers = 0;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(json))
    }

    pub fn mps_config(&self) -> MpsConfig {
        MpsConfig { chi_max: self.chi_max, svd_cutoff: self.svd_cutoff }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of one grid point, independent of the rest of the grid.
pub fn point_seed(master: u64, d: usize, p: f64, gamma: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((d as u64).to_le_bytes());
    h.update(p.to_bits().to_le_bytes());
    h.update(gamma.to_bits().to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("8 bytes"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub d: usize,
    pub p: f64,
    pub gamma: f64,
    pub seed: u64,
}

/// One line of `metrics.csv`. Empty fields mean "not computed".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub schema_version: u32,
    pub grid_index: usize,
    pub d: usize,
    pub p: f64,
    pub gamma: f64,
    pub mode: Mode,
    pub seed: u64,
    pub n_samples: usize,
    pub n_excluded: usize,
    pub p_l: f64,
    pub p_l_sem: f64,
    pub p_l_mwpm: Option<f64>,
    pub p_l_mwpm_sem: Option<f64>,
    pub s_rel: Option<f64>,
    pub s_rel_sem: Option<f64>,
    pub s_rel_coherent: Option<f64>,
    pub i_c: Option<f64>,
    pub i_c_sem: Option<f64>,
    pub gamma_l: Option<f64>,
    pub gamma_l_sem: Option<f64>,
    pub s_mid: Option<f64>,
    pub s_mid_sem: Option<f64>,
    pub sigma_s: Option<f64>,
    pub max_truncation_error: f64,
    pub max_re_z01: f64,
    pub max_kappa: f64,
    pub retried: usize,
    pub clamp_events: usize,
}

impl MetricsRow {
    fn from_set(point: &GridPoint, mode: Mode, set: &ObservableSet, off_diagonal: bool, extra: RowExtras) -> Self {
        let split = |e: EstimateWithError| (Some(e.mean), Some(e.sem));
        let none = (None, None);
        let p_l = set.logical_error_rate();
        let (p_l_mwpm, p_l_mwpm_sem) = set.decoder_error_rate().map(split).unwrap_or(none);
        let (s_rel, s_rel_sem) = if off_diagonal { set.relative_entropy().map(split).unwrap_or(none) } else { none };
        let (i_c, i_c_sem) = if off_diagonal { split(set.coherent_information()) } else { none };
        let (gamma_l, gamma_l_sem) = if off_diagonal { split(set.logical_coherence()) } else { none };
        let ent = set.entanglement_statistics();
        Self {
            schema_version: CSV_SCHEMA_VERSION,
            grid_index: point.index,
            d: point.d,
            p: point.p,
            gamma: point.gamma,
            mode,
            seed: point.seed,
            n_samples: set.len(),
            n_excluded: set.excluded(),
            p_l: p_l.mean,
            p_l_sem: p_l.sem,
            p_l_mwpm,
            p_l_mwpm_sem,
            s_rel,
            s_rel_sem,
            s_rel_coherent: if off_diagonal { set.coherent_limit_entropy().ok() } else { None },
            i_c,
            i_c_sem,
            gamma_l,
            gamma_l_sem,
            s_mid: ent.map(|e| e.mean.mean),
            s_mid_sem: ent.map(|e| e.mean.sem),
            sigma_s: ent.map(|e| e.sigma),
            max_truncation_error: extra.max_truncation_error,
            max_re_z01: set.max_re_z01(),
            max_kappa: set.max_kappa(),
            retried: extra.retried,
            clamp_events: extra.clamp_events,
        }
    }
}

#[derive(Default)]
struct RowExtras {
    max_truncation_error: f64,
    retried: usize,
    clamp_events: usize,
}

/// Result of one grid point.
pub struct PointOutput {
    pub row: MetricsRow,
    pub observables: ObservableSet,
    pub samples: Vec<SampleRecord>,
}

/// Samples (or enumerates) one grid point and reduces it to a CSV row.
pub fn compute_point(config: &RunConfig, point: &GridPoint) -> Result<PointOutput> {
    let layout = CodeLayout::square(point.d)?;
    let couplings = CouplingTable::uniform(layout.n_qubits(), point.p, point.gamma)?;
    let decoder = if config.decoder { Some(Decoder::new(&layout, &EdgeWeighting::Uniform)?) } else { None };
    let request = ZRequest { skip_off_diagonal: !config.off_diagonal, known_diagonal: None };
    let observe = |z: &crate::circuit::ZMatrix, mid: Option<f64>| -> Result<SyndromeObservables> {
        let mut o = SyndromeObservables::from_block(z)?.with_mid_entropy(mid);
        if let Some(dec) = &decoder {
            o = o.with_decoder_class(z, dec.decode(&layout, &z.syndrome)?.class);
        }
        Ok(o)
    };
    match config.mode {
        Mode::Exhaustive => {
            let items = layout
                .all_syndromes()?
                .par_iter()
                .map(|s| {
                    let z = z_matrix_with(&layout, &couplings, s, &ContractionMethod::Dense, request)?;
                    observe(&z, None)
                })
                .collect::<Result<Vec<_>>>()?;
            let set = ObservableSet::new(Averaging::Exhaustive, items);
            let row = MetricsRow::from_set(point, config.mode, &set, config.off_diagonal, RowExtras::default());
            Ok(PointOutput { row, observables: set, samples: Vec::new() })
        }
        Mode::Sampled => {
            let mps = config.mps_config();
            let sampler = SamplerConfig { mps, ..SamplerConfig::default() };
            let batch = sample_batch(&layout, &couplings, config.n_samples, point.seed, &sampler)?;
            let method = ContractionMethod::mps(mps);
            let pairs = batch
                .records
                .par_iter()
                .map(|r| {
                    let req = ZRequest { known_diagonal: Some((r.class, r.class_weight)), ..request };
                    let z = z_matrix_with(&layout, &couplings, &r.syndrome, &method, req)?;
                    Ok((observe(&z, r.mid_entropy())?, z.truncation_error))
                })
                .collect::<Result<Vec<_>>>()?;
            let contraction_err = pairs.iter().map(|(_, e)| *e).fold(0.0, f64::max);
            let extra = RowExtras {
                max_truncation_error: batch.stats.max_truncation_error.max(contraction_err),
                retried: batch.stats.retried,
                clamp_events: batch.stats.clamp_events,
            };
            let set = ObservableSet::new(Averaging::Sampled, pairs.into_iter().map(|(o, _)| o).collect());
            let row = MetricsRow::from_set(point, config.mode, &set, config.off_diagonal, extra);
            let samples = if config.keep_samples { batch.records } else { Vec::new() };
            Ok(PointOutput { row, observables: set, samples })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Done,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    Numerical,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    #[serde(flatten)]
    pub point: GridPoint,
    pub status: PointStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<FailureKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: RunConfig,
    pub points: Vec<PointEntry>,
    pub wall_seconds: f64,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&fs::read(path)?)?))
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointEntry> {
        self.points.iter().filter(|e| e.status == PointStatus::Failed)
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub rows: Vec<MetricsRow>,
    pub manifest: Manifest,
    /// Grid indices taken from a previous partial run.
    pub reused: Vec<usize>,
    pub output: PathBuf,
}

impl RunReport {
    pub fn failed(&self) -> usize {
        self.manifest.failures().count()
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows = reader.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
    if let Some(r) = rows.iter().find(|r| r.schema_version != CSV_SCHEMA_VERSION) {
        return Err(Error::InvalidInput(format!("CSV schema {} != {CSV_SCHEMA_VERSION}", r.schema_version)));
    }
    Ok(rows)
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    let mut w = csv::Writer::from_path(&tmp)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);
    fs::rename(tmp, path)?;
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, serde_json::to_vec_pretty(manifest)?)?;
    fs::rename(tmp, dir.join(MANIFEST_FILE))?;
    Ok(())
}

/// Runs every grid point of `config`, skipping points a previous run with the
/// same config hash already finished.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let dir = config.output.clone();
    fs::create_dir_all(&dir)?;
    for &d in &config.d {
        fs::write(dir.join(format!("layout_d{d}.json")), CodeLayout::square(d)?.to_json())?;
    }
    let hash = config.hash();
    let previous = Manifest::read(&dir)?;
    let mut rows: BTreeMap<usize, MetricsRow> = BTreeMap::new();
    let mut entries: BTreeMap<usize, PointEntry> = BTreeMap::new();
    let mut prior_seconds = 0.0;
    if let Some(m) = previous {
        if m.config_hash != hash {
            return Err(Error::Config(format!("{} holds a run with a different config", dir.display())));
        }
        prior_seconds = m.wall_seconds;
        let csv_path = dir.join(METRICS_FILE);
        let saved: BTreeMap<usize, MetricsRow> = if csv_path.exists() {
            read_metrics(&csv_path)?.into_iter().map(|r| (r.grid_index, r)).collect()
        } else {
            BTreeMap::new()
        };
        for e in m.points.into_iter().filter(|e| e.status == PointStatus::Done) {
            if let Some(r) = saved.get(&e.point.index) {
                rows.insert(e.point.index, r.clone());
                entries.insert(e.point.index, e);
            }
        }
    }
    let reused: Vec<usize> = rows.keys().copied().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: hash,
        master_seed: config.master_seed,
        config: config.clone(),
        points: Vec::new(),
        wall_seconds: prior_seconds,
    };
    for point in config.grid() {
        if rows.contains_key(&point.index) {
            continue;
        }
        let t = Instant::now();
        let entry = match pool.install(|| compute_point(config, &point)) {
            Ok(out) => {
                if config.keep_samples {
                    let sdir = dir.join("samples");
                    fs::create_dir_all(&sdir)?;
                    let f = fs::File::create(sdir.join(format!("point_{:04}.jsonl", point.index)))?;
                    write_json_lines(BufWriter::new(f), &out.samples)?;
                }
                rows.insert(point.index, out.row);
                PointEntry { point, status: PointStatus::Done, failure: None, error: None, wall_seconds: 0.0 }
            }
            Err(e) => {
                let failure = if matches!(e, Error::Numerical(_) | Error::Linalg(_)) {
                    FailureKind::Numerical
                } else {
                    FailureKind::Other
                };
                PointEntry {
                    point,
                    status: PointStatus::Failed,
                    failure: Some(failure),
                    error: Some(e.to_string()),
                    wall_seconds: 0.0,
                }
            }
        };
        entries.insert(point.index, PointEntry { wall_seconds: t.elapsed().as_secs_f64(), ..entry });
        let all_rows: Vec<MetricsRow> = rows.values().cloned().collect();
        write_metrics(&dir.join(METRICS_FILE), &all_rows)?;
        manifest.points = entries.values().cloned().collect();
        manifest.wall_seconds = prior_seconds + started.elapsed().as_secs_f64();
        write_manifest(&dir, &manifest)?;
    }
    manifest.points = entries.values().cloned().collect();
    manifest.wall_seconds = prior_seconds + started.elapsed().as_secs_f64();
    write_metrics(&dir.join(METRICS_FILE), &rows.values().cloned().collect::<Vec<_>>())?;
    write_manifest(&dir, &manifest)?;
    Ok(RunReport { rows: rows.into_values().collect(), manifest, reused, output: dir })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> RunConfig {
        RunConfig::from_toml(&format!(
            "d = [3]\np = [0.05, 0.1]\ngamma = [0.5]\nn_samples = 40\nmaster_seed = 3\noutput = {:?}\n",
            dir.display().to_string()
        ))
        .unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let c = RunConfig::from_toml("d = [3]\np = [0.1]\ngamma = [0.5]").unwrap();
        assert_eq!(c.n_samples, 2000);
        assert_eq!(c.chi_max, 64);
        assert_eq!(c.mode, Mode::Sampled);
        assert!(c.off_diagonal && c.decoder);
        for bad in [
            "d = [4]\np = [0.1]\ngamma = [0.5]",
            "d = [3]\np = [1.5]\ngamma = [0.5]",
            "d = [5]\np = [0.1]\ngamma = [0.5]\nmode = \"exhaustive\"",
            "d = [3]\np = [0.1]\ngamma = [0.5]\nunknown = 1",
            "d = [3]\np = [0.1]",
        ] {
            assert!(matches!(RunConfig::from_toml(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn seeds_depend_on_point_only() {
        assert_eq!(point_seed(1, 5, 0.1, 0.5), point_seed(1, 5, 0.1, 0.5));
        assert_ne!(point_seed(1, 5, 0.1, 0.5), point_seed(1, 5, 0.1, 0.6));
        assert_ne!(point_seed(1, 5, 0.1, 0.5), point_seed(2, 5, 0.1, 0.5));
        let c = RunConfig::from_toml("d = [3, 5]\np = [0.1, 0.2]\ngamma = [0.5]").unwrap();
        let g = c.grid();
        assert_eq!(g.len(), 4);
        assert_eq!(g[3].seed, point_seed(0, 5, 0.2, 0.5));
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = RunConfig::from_toml("d = [3]\np = [0.1]\ngamma = [0.5]").unwrap();
        let mut b = a.clone();
        b.output = "elsewhere".into();
        b.workers = 4;
        assert_eq!(a.hash(), b.hash());
        b.n_samples = 7;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rerun_is_identical_and_resumes() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config(tmp.path());
        let first = run(&c).unwrap();
        assert_eq!(first.rows.len(), 2);
        let csv1 = fs::read(tmp.path().join(METRICS_FILE)).unwrap();
        let again = run(&c).unwrap();
        assert_eq!(again.reused, vec![0, 1]);
        assert_eq!(fs::read(tmp.path().join(METRICS_FILE)).unwrap(), csv1);

        let other = tempfile::tempdir().unwrap();
        let mut c2 = c.clone();
        c2.output = other.path().to_path_buf();
        run(&c2).unwrap();
        assert_eq!(fs::read(other.path().join(METRICS_FILE)).unwrap(), csv1);

        let mut m = Manifest::read(other.path()).unwrap().unwrap();
        m.points.truncate(1);
        write_manifest(other.path(), &m).unwrap();
        let resumed = run(&c2).unwrap();
        assert_eq!(resumed.reused, vec![0]);
        assert_eq!(fs::read(other.path().join(METRICS_FILE)).unwrap(), csv1);
        assert!(other.path().join("layout_d3.json").exists());
    }

    #[test]
    fn foreign_manifest_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let c = config(tmp.path());
        run(&c).unwrap();
        let mut c2 = c.clone();
        c2.master_seed = 99;
        assert!(matches!(run(&c2), Err(Error::Config(_))));
    }

    #[test]
    fn csv_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = config(tmp.path());
        c.mode = Mode::Exhaustive;
        let rows = run(&c).unwrap().rows;
        assert_eq!(read_metrics(&tmp.path().join(METRICS_FILE)).unwrap(), rows);
        assert!(rows[0].s_mid.is_none());
        assert!(rows[0].s_rel_coherent.is_some());
    }
}
