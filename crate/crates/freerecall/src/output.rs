//! CSV trajectory files and JSON reports.
//!
//! Trajectory CSVs carry a mandatory header. Full-network files use
//! `t,s_1_1,s_1_2,a_1_1,a_1_2,s_2_1,...` (hypercolumn-major) and reduced files
//! use `t,d,e`. Floats are written in the shortest form that parses back to
//! the same value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use freerecall_core::analysis::relative_states;
use freerecall_core::{NetworkParams, RecallDemo, ReducedParams, Trajectory};

use crate::error::{CliError, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Header of a full-network trajectory file.
pub fn network_header(n_hypercolumns: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 1..=n_hypercolumns {
        h.extend([
            format!("s_{i}_1"),
            format!("s_{i}_2"),
            format!("a_{i}_1"),
            format!("a_{i}_2"),
        ]);
    }
    h
}

pub const REDUCED_HEADER: [&str; 3] = ["t", "d", "e"];

/// Writes `header` followed by one row per item of `rows`.
pub fn write_table<H, R, I>(path: &Path, header: H, rows: R) -> Result<()>
where
    H: IntoIterator,
    H::Item: AsRef<[u8]>,
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = f64>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    let mut buf = Vec::new();
    for row in rows {
        buf.clear();
        buf.extend(row.into_iter().map(|v| v.to_string()));
        w.write_record(&buf).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn rows<P>(traj: &Trajectory<P>) -> impl Iterator<Item = Vec<f64>> + '_ {
    traj.times().iter().zip(traj.states()).map(|(&t, x)| {
        let mut row = Vec::with_capacity(x.len() + 1);
        row.push(t);
        row.extend_from_slice(x);
        row
    })
}

pub fn write_trajectory_csv(traj: &Trajectory<NetworkParams>, path: &Path) -> Result<()> {
    write_table(path, network_header(traj.n_hypercolumns()), rows(traj))
}

pub fn write_reduced_csv(traj: &Trajectory<ReducedParams>, path: &Path) -> Result<()> {
    write_table(path, REDUCED_HEADER, rows(traj))
}

/// Header and numeric rows of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| {
                    CliError::Runtime(format!("{}: bad number {f:?}: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Pretty-printed JSON with field names as keys.
pub fn write_report_json<T: Serialize + ?Sized>(report: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Files written by [`write_recall_datasets`].
#[derive(Debug, Clone, Serialize)]
pub struct RecallFiles {
    pub sync_errors: PathBuf,
    pub activations: PathBuf,
    pub outputs_adaptation: PathBuf,
    pub trajectory: PathBuf,
}

/// Writes the three plot datasets of a recall run plus the full trajectory into `dir`:
///
/// * `sync_errors.csv`: `t, max_error, D_1_2.., E_1_2..` relative to hypercolumn 1
/// * `hypercolumn1_activation.csv`: `t, s_1_1, s_1_2`
/// * `hypercolumn1_output_adaptation.csv`: `t, o_1_1, o_1_2, a_1_1, a_1_2`
pub fn write_recall_datasets(demo: &RecallDemo, dir: &Path) -> Result<RecallFiles> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let traj = &demo.trajectory;
    let n = traj.n_hypercolumns();
    let files = RecallFiles {
        sync_errors: dir.join("sync_errors.csv"),
        activations: dir.join("hypercolumn1_activation.csv"),
        outputs_adaptation: dir.join("hypercolumn1_output_adaptation.csv"),
        trajectory: dir.join("trajectory.csv"),
    };

    let mut header = vec!["t".to_string(), "max_error".to_string()];
    header.extend((2..=n).map(|l| format!("D_1_{l}")));
    header.extend((2..=n).map(|l| format!("E_1_{l}")));
    let sync_rows = (0..traj.len()).map(|k| {
        let rel = relative_states(&traj.network_state(k));
        let mut row = vec![traj.times()[k], demo.sync_error[k]];
        row.extend(rel.iter().map(|r| r.0));
        row.extend(rel.iter().map(|r| r.1));
        row
    });
    write_table(&files.sync_errors, &header, sync_rows)?;

    write_table(
        &files.activations,
        ["t", "s_1_1", "s_1_2"],
        traj.times()
            .iter()
            .zip(traj.states())
            .map(|(&t, x)| [t, x[0], x[1]]),
    )?;

    write_table(
        &files.outputs_adaptation,
        ["t", "o_1_1", "o_1_2", "a_1_1", "a_1_2"],
        traj.times()
            .iter()
            .zip(traj.states())
            .zip(&demo.outputs)
            .map(|((&t, x), o)| [t, o[0][0], o[0][1], x[2], x[3]]),
    )?;

    write_trajectory_csv(traj, &files.trajectory)?;
    Ok(files)
}
