//! Config-driven verification campaigns and their on-disk artifacts.
//!
//! A run writes one directory:
//!
//! * `config.json`: the resolved config, defaults filled in;
//! * `results.csv`: one row per grid point (columns documented in `report.json`);
//! * `report.json`: experiment name, resolved config, column docs and the summary;
//! * `fields/<tag>.csv` with `fields/<tag>.json` metadata, when `dump_fields` is set.

pub mod config;
pub mod invariants;
pub mod runners;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::lattice::{build_domain, Shape};

pub use config::{CheckCounts, ExperimentConfig, ExperimentKind, PotentialConfig};
pub use invariants::{
    flatnorm_rows, run_flatnorm_check, run_invariant_suite, CheckResult, FlatnormReport, FlatnormRow,
    InvariantReport,
};
pub use runners::{
    dipole_prescription, linear_fit, parabola_vertex, pinned_mask, run_core_energy, run_dipole_sweep, run_string_tension,
    run_vortex_scaling, scaling_prescription, wall_field, CoreEnergyReport, DipoleReport, DipoleRow, DipoleSweep,
    GapRow, LinearFit, ScalingReport, ScalingRow, TensionReport, TensionRow, Trend,
};

/// A relaxed or constructed field kept for `fields/<tag>.csv`.
#[derive(Debug, Clone)]
pub struct FieldDump {
    pub tag: String,
    pub n: u32,
    pub field: ScalarField,
}

impl FieldDump {
    pub fn new(tag: String, n: u32, field: ScalarField) -> Self {
        FieldDump { tag, n, field }
    }
}

/// Sidecar describing the lattice of a dumped field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMeta {
    pub shape: Shape,
    pub epsilon: f64,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Report {
    CoreEnergy(CoreEnergyReport),
    VortexScaling(ScalingReport),
    StringTension(TensionReport),
    DipoleSweep(DipoleReport),
    Invariants(InvariantReport),
    FlatnormCheck(FlatnormReport),
}

impl Report {
    /// Pass/fail for the check experiments; `None` for measurement campaigns.
    pub fn passed(&self) -> Option<bool> {
        match self {
            Report::Invariants(r) => Some(r.passed),
            Report::FlatnormCheck(r) => Some(r.passed),
            _ => None,
        }
    }
}

/// Run a resolved config.
pub fn run(cfg: &ExperimentConfig) -> Result<(Report, Vec<FieldDump>)> {
    let mut dumps = Vec::new();
    let report = match cfg.experiment {
        ExperimentKind::CoreEnergy => Report::CoreEnergy(run_core_energy(cfg, &mut dumps)?),
        ExperimentKind::VortexScaling => Report::VortexScaling(run_vortex_scaling(cfg, &mut dumps)?),
        ExperimentKind::StringTension => Report::StringTension(run_string_tension(cfg, &mut dumps)?),
        ExperimentKind::DipoleSweep => Report::DipoleSweep(run_dipole_sweep(cfg, &mut dumps)?),
        ExperimentKind::Invariants => Report::Invariants(run_invariant_suite(cfg)?),
        ExperimentKind::FlatnormCheck => Report::FlatnormCheck(run_flatnorm_check(cfg)?),
    };
    Ok((report, dumps))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub report: Report,
}

/// Resolve `cfg`, run it and write the artifacts into `dir`.
pub fn run_to_dir(cfg: ExperimentConfig, dir: &Path) -> Result<RunOutcome> {
    let cfg = cfg.resolve()?;
    let (report, dumps) = run(&cfg)?;
    write_artifacts(dir, &cfg, &report, &dumps)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        config: cfg,
        report,
    })
}

#[derive(Serialize)]
struct GammaRow {
    epsilon: f64,
    sigma: f64,
    energy: f64,
    gamma_minus_log: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn gamma_rows(rows: &[crate::solvers::CoreEnergy]) -> Vec<GammaRow> {
    rows.iter()
        .map(|r| GammaRow {
            epsilon: r.epsilon,
            sigma: r.sigma,
            energy: r.energy,
            gamma_minus_log: r.gamma_minus_log,
        })
        .collect()
}

type Columns = BTreeMap<&'static str, Vec<(&'static str, &'static str)>>;

fn columns(kind: ExperimentKind) -> Columns {
    let gamma = vec![
        ("epsilon", "lattice spacing"),
        ("sigma", "disk radius"),
        ("energy", "minimized energy on B_σ"),
        ("gamma_minus_log", "energy − π log(σ/ε)"),
    ];
    let mut c = Columns::new();
    match kind {
        ExperimentKind::CoreEnergy => {
            c.insert("results.csv", gamma.clone());
            c.insert("gamma_frac.csv", gamma);
        }
        ExperimentKind::VortexScaling => {
            c.insert(
                "results.csv",
                vec![
                    ("epsilon", "lattice spacing"),
                    ("log_inv_eps", "log(1/ε)"),
                    ("energy", "relaxed energy"),
                    ("atoms", "atoms of μ(nφ) after relaxation"),
                    ("termination", "how the relaxation stopped"),
                    ("iterations", "accepted relaxation steps"),
                ],
            );
        }
        ExperimentKind::StringTension => {
            c.insert(
                "results.csv",
                vec![
                    ("epsilon", "lattice spacing"),
                    ("angle_deg", "wall angle in degrees"),
                    ("energy", "energy of the pure jump field"),
                    ("jump_bonds", "bonds across the wall"),
                    ("chord", "wall length inside the sites' box grown by ε/2"),
                    ("tension", "energy / chord"),
                    ("predicted", "|cos α| + |sin α|"),
                    ("relative_error", "|tension − predicted| / predicted"),
                ],
            );
        }
        ExperimentKind::DipoleSweep => {
            c.insert(
                "results.csv",
                vec![
                    ("epsilon", "lattice spacing"),
                    ("separation", "requested core distance"),
                    ("actual_separation", "core distance after snapping to cell centers"),
                    ("energy", "relaxed energy with pinned cores"),
                    ("plateau", "energy carried by plateau bonds"),
                    ("termination", "how the relaxation stopped"),
                    ("iterations", "accepted relaxation steps"),
                ],
            );
        }
        ExperimentKind::Invariants => {
            c.insert(
                "results.csv",
                vec![
                    ("name", "check"),
                    ("trials", "number of random instances"),
                    ("violations", "instances outside tolerance"),
                    ("max_defect", "largest observed failure amount"),
                ],
            );
        }
        ExperimentKind::FlatnormCheck => {
            c.insert(
                "results.csv",
                vec![
                    ("instance", "instance index"),
                    ("atoms", "number of atoms"),
                    ("exact", "π × minimal connection"),
                    ("lp", "π × grid LP value"),
                    ("abs_diff", "|lp − exact|"),
                    ("allowed", "2% of exact plus grid quantization"),
                    ("ok", "abs_diff ≤ allowed"),
                ],
            );
        }
    }
    c
}

#[derive(Serialize)]
struct ReportFile<'a> {
    experiment: &'static str,
    passed: Option<bool>,
    config: &'a ExperimentConfig,
    columns: BTreeMap<&'static str, BTreeMap<&'static str, &'static str>>,
    summary: &'a Report,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, cfg: &ExperimentConfig, report: &Report, dumps: &[FieldDump]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("config.json"), cfg)?;
    let results = dir.join("results.csv");
    match report {
        Report::CoreEnergy(r) => {
            write_rows(&results, gamma_rows(&r.sym))?;
            if !r.frac.is_empty() {
                write_rows(&dir.join("gamma_frac.csv"), gamma_rows(&r.frac))?;
            }
        }
        Report::VortexScaling(r) => write_rows(&results, &r.rows)?,
        Report::StringTension(r) => write_rows(&results, &r.rows)?,
        Report::DipoleSweep(r) => write_rows(&results, &r.rows)?,
        Report::Invariants(r) => write_rows(&results, &r.checks)?,
        Report::FlatnormCheck(r) => write_rows(&results, &r.rows)?,
    }
    let columns = columns(cfg.experiment)
        .into_iter()
        .map(|(file, cols)| (file, cols.into_iter().collect()))
        .collect();
    write_json(
        &dir.join("report.json"),
        &ReportFile {
            experiment: cfg.experiment.name(),
            passed: report.passed(),
            config: cfg,
            columns,
            summary: report,
        },
    )?;
    if !dumps.is_empty() {
        let fdir = dir.join("fields");
        fs::create_dir_all(&fdir)?;
        for d in dumps {
            let dom = d.field.domain();
            let meta = FieldMeta {
                shape: *dom.shape(),
                epsilon: dom.epsilon(),
                n: d.n,
            };
            write_json(&fdir.join(format!("{}.json", d.tag)), &meta)?;
            let mut w = BufWriter::new(File::create(fdir.join(format!("{}.csv", d.tag)))?);
            d.field.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Tags of the fields dumped in a run directory, sorted.
pub fn dumped_tags(run_dir: &Path) -> Result<Vec<String>> {
    let fdir = run_dir.join("fields");
    if !fdir.is_dir() {
        return Ok(Vec::new());
    }
    let mut tags: Vec<String> = fs::read_dir(fdir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_suffix(".json").map(str::to_owned)
        })
        .collect();
    tags.sort();
    Ok(tags)
}

/// Reload a dumped field, rebuilding its lattice from the sidecar.
pub fn load_dump(run_dir: &Path, tag: &str) -> Result<(FieldMeta, ScalarField)> {
    let fdir = run_dir.join("fields");
    let meta_path = fdir.join(format!("{tag}.json"));
    if !meta_path.is_file() {
        return Err(Error::Config(format!("no field `{tag}` in {}", run_dir.display())));
    }
    let meta: FieldMeta = serde_json::from_reader(File::open(&meta_path)?)?;
    let dom = Arc::new(build_domain(meta.shape, meta.epsilon)?);
    let field = ScalarField::read_csv(dom, File::open(fdir.join(format!("{tag}.csv")))?)?;
    Ok((meta, field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tension_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::StringTension);
        cfg.potential.n = 2;
        cfg.epsilons = vec![1.0 / 8.0, 1.0 / 16.0];
        cfg.angles = vec![0.0, 30.0, 45.0];
        cfg.dump_fields = true;
        cfg
    }

    #[test]
    fn artifacts_layout_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_to_dir(tension_config(), dir.path()).unwrap();
        for f in ["config.json", "results.csv", "report.json"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let cfg: ExperimentConfig =
            serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
        assert_eq!(cfg, out.config);
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["experiment"], "string-tension");
        assert_eq!(report["config"]["potential"]["n"], 2);
        assert!(report["columns"]["results.csv"]["tension"].is_string());
        let tags = dumped_tags(dir.path()).unwrap();
        assert_eq!(tags.len(), 6);
        let (meta, field) = load_dump(dir.path(), "e1-a2").unwrap();
        assert_eq!(meta.n, 2);
        assert_eq!(field.domain().epsilon(), 1.0 / 16.0);
        assert!(load_dump(dir.path(), "nope").is_err());
    }

    #[test]
    fn csv_outputs_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_to_dir(tension_config(), a.path()).unwrap();
        run_to_dir(tension_config(), b.path()).unwrap();
        for f in ["results.csv", "fields/e0-a1.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}
