//! Run directories: `config.toml`, `experiments.csv`, `trajectory_<k>.csv`,
//! `summary.json` and `metadata.json`. Only the metadata file carries
//! timestamps and wall-clock timings; everything else is a pure function of
//! the configuration. Floats are written in shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{ExperimentRecord, PhaseTimings, RunRecord};
use crate::error::{Error, Result};
use crate::types::{ControlInput, Experiment, ObjectState, RobotState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub engine: String,
    pub seed: u64,
    pub k_max: usize,
    pub param_names: Vec<String>,
    pub theta_star: Vec<f64>,
    pub initial_mode: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub final_percent_error: Vec<f64>,
    pub final_abs_error: Vec<f64>,
    /// `‖%err‖₂` of the final estimate.
    pub final_error: f64,
    pub cumulative_trace_information: f64,
    /// `δ_k`, starting with the prior mode.
    pub distance: Vec<f64>,
    /// trace(Σ_θ), starting with the prior.
    pub trace_covariance: Vec<f64>,
    pub experiments: Vec<ExperimentRecord>,
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        let last = r.experiments.last();
        Self {
            scenario: r.config.scenario.name.to_string(),
            engine: r.config.engine.mode.to_string(),
            seed: r.config.seed,
            k_max: r.config.k_max,
            param_names: r.param_names.clone(),
            theta_star: r.theta_star.clone(),
            initial_mode: r.initial_mode.clone(),
            final_theta: r.final_theta().to_vec(),
            final_percent_error: last.map_or_else(Vec::new, |e| e.percent_error.clone()),
            final_abs_error: r.final_abs_error().to_vec(),
            final_error: r.final_error(),
            cumulative_trace_information: r.cumulative_information(),
            distance: r.distance_curve(),
            trace_covariance: std::iter::once(r.initial_trace_covariance)
                .chain(r.experiments.iter().map(|e| e.trace_covariance))
                .collect(),
            experiments: r.experiments.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    created_unix_s: f64,
    crate_version: &'static str,
    total_wall_clock_s: f64,
    timings: &'a [PhaseTimings],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub experiments: PathBuf,
    pub trajectories: Vec<PathBuf>,
    pub summary: PathBuf,
    pub metadata: PathBuf,
}

fn names(prefix: &str, params: &[String]) -> Vec<String> {
    params.iter().map(|p| format!("{prefix}{p}")).collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_experiments(path: &Path, r: &RunRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let p = &r.param_names;
    let mut header = vec!["k".to_string()];
    header.extend(names("theta_", p));
    header.extend(names("var_", p));
    header.extend(["trace_cov".into(), "trace_f".into()]);
    header.extend(names("pct_err_", p));
    header.extend(names("abs_err_", p));
    header.extend(["map_iters", "map_converged", "contact_steps", "plan_score"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for e in &r.experiments {
        let mut row = vec![e.k.to_string()];
        row.extend(e.theta_hat.iter().map(|v| num(*v)));
        row.extend(e.covariance_diag.iter().map(|v| num(*v)));
        row.extend([num(e.trace_covariance), num(e.trace_information)]);
        row.extend(e.percent_error.iter().map(|v| num(*v)));
        row.extend(e.abs_error.iter().map(|v| num(*v)));
        row.extend([
            e.map_iterations.to_string(),
            e.map_converged.to_string(),
            e.contact_steps.to_string(),
            num(e.plan_score),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, data: &Experiment, channels: &[String]) -> Result<()> {
    let states = &data.trajectory.states;
    let dof = states[0].position.len();
    let has_object = states[0].object.is_some();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..dof).map(|i| format!("q{i}")));
    header.extend((0..dof).map(|i| format!("qd{i}")));
    if has_object {
        header.extend(["obj_pos".to_string(), "obj_vel".to_string()]);
    }
    header.extend((0..dof).map(|i| format!("u{i}")));
    header.extend(channels.iter().map(|c| format!("y_{c}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, x) in states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(x.position.iter().map(|v| num(*v)));
        row.extend(x.velocity.iter().map(|v| num(*v)));
        if let Some(o) = x.object {
            row.extend([num(o.position), num(o.velocity)]);
        }
        match data.controls.get(t) {
            Some(u) => row.extend(u.command.iter().map(|v| num(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), dof)),
        }
        match data.measurements.get(t) {
            Some(y) => row.extend(y.forces.iter().map(|v| num(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), channels.len())),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_run(record: &RunRecord, dir: &Path) -> Result<RunFiles> {
    fs::create_dir_all(dir)?;
    let files = RunFiles {
        dir: dir.to_path_buf(),
        config: dir.join("config.toml"),
        experiments: dir.join("experiments.csv"),
        trajectories: (0..record.data.len()).map(|k| dir.join(format!("trajectory_{k}.csv"))).collect(),
        summary: dir.join("summary.json"),
        metadata: dir.join("metadata.json"),
    };
    fs::write(&files.config, record.config.to_toml()?)?;
    write_experiments(&files.experiments, record)?;
    let channels: Vec<String> = record.config.scenario.sensor.iter().map(|c| c.label()).collect();
    for (data, path) in record.data.iter().zip(&files.trajectories) {
        write_trajectory(path, data, &channels)?;
    }
    let mut summary = serde_json::to_string_pretty(&RunSummary::from(record))?;
    summary.push('\n');
    fs::write(&files.summary, summary)?;
    let meta = Metadata {
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
        crate_version: env!("CARGO_PKG_VERSION"),
        total_wall_clock_s: record.timings.iter().map(|t| t.plan + t.execute + t.estimate).sum(),
        timings: &record.timings,
    };
    fs::write(&files.metadata, serde_json::to_string_pretty(&meta)?)?;
    Ok(files)
}

/// A CSV file as header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err)?;
        Ok(Self { header, rows })
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("missing column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name)?;
        self.rows.iter().map(|r| parse(&r[i], name)).collect()
    }
}

fn parse(cell: &str, name: &str) -> Result<f64> {
    cell.parse().map_err(|_| Error::Config(format!("column `{name}`: cannot parse `{cell}`")))
}

pub fn read_experiments_csv(path: &Path) -> Result<CsvTable> {
    CsvTable::read(path)
}

/// One row of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedStep {
    pub state: RobotState,
    pub control: Option<ControlInput>,
    pub measurement: Option<Vec<f64>>,
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<RecordedStep>> {
    let table = CsvTable::read(path)?;
    let cols = |prefix: &str| -> Vec<usize> {
        table
            .header
            .iter()
            .enumerate()
            .filter(|(_, h)| {
                h.strip_prefix(prefix).is_some_and(|rest| prefix == "y_" || rest.chars().all(|c| c.is_ascii_digit()))
            })
            .map(|(i, _)| i)
            .collect()
    };
    let (q, qd, u, y) = (cols("q"), cols("qd"), cols("u"), cols("y_"));
    let obj = table.index("obj_pos").ok().zip(table.index("obj_vel").ok());
    let get = |row: &[String], idx: &[usize]| -> Result<Option<Vec<f64>>> {
        if idx.iter().all(|&i| row[i].is_empty()) {
            return Ok(None);
        }
        idx.iter().map(|&i| parse(&row[i], &table.header[i])).collect::<Result<Vec<_>>>().map(Some)
    };
    table
        .rows
        .iter()
        .map(|row| {
            let object = match obj {
                Some((p, v)) => Some(ObjectState {
                    position: parse(&row[p], "obj_pos")?,
                    velocity: parse(&row[v], "obj_vel")?,
                }),
                None => None,
            };
            Ok(RecordedStep {
                state: RobotState {
                    position: get(row, &q)?.unwrap_or_default(),
                    velocity: get(row, &qd)?.unwrap_or_default(),
                    object,
                },
                control: get(row, &u)?.map(|command| ControlInput { command }),
                measurement: get(row, &y)?,
            })
        })
        .collect()
}
