//! Reading back the CSV artifacts of a run.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use mmfe_core::{PopulationDistribution, StateGrid};

use crate::CliError;

/// A CSV file with `#` metadata lines stripped.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: HashMap<String, String>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let meta = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| CliError::csv(path, e))?.iter().map(String::from).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::csv(path, e))?;
        Ok(Self { header, rows, meta })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Input(format!("{}: `{s}` is not a number", path.display())))
}

fn parse_usize(path: &Path, s: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::Input(format!("{}: `{s}` is not an index", path.display())))
}

fn missing(path: &Path, column: &str) -> CliError {
    CliError::Input(format!("{}: missing column `{column}`", path.display()))
}

/// The artifacts of one run directory.
/// Action labels and one probability row per state.
pub type PolicyTable = (Vec<i64>, Vec<Vec<f64>>);

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub trace: Table,
    pub populations: Vec<PopulationDistribution>,
    /// One table per type.
    pub policies: Vec<PolicyTable>,
}

impl RunArtifacts {
    /// Accepts a run directory or any file inside one.
    pub fn locate(path: &Path) -> PathBuf {
        if path.is_dir() {
            path.to_path_buf()
        } else {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let dir = Self::locate(path);
        let trace = Table::read(&dir.join("trace.csv"))?;
        let populations = read_populations(&dir.join("populations.csv"))?;
        let policies = read_policies(&dir.join("policy.csv"))?;
        Ok(Self { dir, trace, populations, policies })
    }

    /// `(m, residual)` of every outer row, one per outer iteration.
    pub fn residuals(&self) -> Result<Vec<(usize, f64)>, CliError> {
        let path = self.dir.join("trace.csv");
        let t = &self.trace;
        let (phase, m, ty, res) = (
            t.column("phase").ok_or_else(|| missing(&path, "phase"))?,
            t.column("m").ok_or_else(|| missing(&path, "m"))?,
            t.column("type").ok_or_else(|| missing(&path, "type"))?,
            t.column("joint_w1_residual").ok_or_else(|| missing(&path, "joint_w1_residual"))?,
        );
        let mut out = Vec::new();
        for row in &t.rows {
            if row[phase] == "outer" && (row[ty].is_empty() || row[ty] == "0") && !row[res].is_empty() {
                out.push((parse_usize(&path, &row[m])?, parse_f64(&path, &row[res])?));
            }
        }
        Ok(out)
    }

    /// `(m, mean of every type)` after each outer iteration.
    pub fn means(&self) -> Result<Vec<(usize, Vec<f64>)>, CliError> {
        let path = self.dir.join("trace.csv");
        let t = &self.trace;
        let phase = t.column("phase").ok_or_else(|| missing(&path, "phase"))?;
        let m = t.column("m").ok_or_else(|| missing(&path, "m"))?;
        let ty = t.column("type").ok_or_else(|| missing(&path, "type"))?;
        let cols: Vec<usize> = (0..).map_while(|j| t.column(&format!("mean_{j}"))).collect();
        let mut out = Vec::new();
        for row in &t.rows {
            if row[phase] == "outer" && (row[ty].is_empty() || row[ty] == "0") {
                let means = cols.iter().map(|c| parse_f64(&path, &row[*c])).collect::<Result<_, _>>()?;
                out.push((parse_usize(&path, &row[m])?, means));
            }
        }
        Ok(out)
    }
}

fn read_populations(path: &Path) -> Result<Vec<PopulationDistribution>, CliError> {
    let t = Table::read(path)?;
    let ty = t.column("type").ok_or_else(|| missing(path, "type"))?;
    let mass = t.column("mass").ok_or_else(|| missing(path, "mass"))?;
    let mut per_type: Vec<Vec<f64>> = Vec::new();
    for row in &t.rows {
        let j = parse_usize(path, &row[ty])?;
        if j >= per_type.len() {
            per_type.resize(j + 1, Vec::new());
        }
        per_type[j].push(parse_f64(path, &row[mass])?);
    }
    per_type
        .into_iter()
        .map(|m| {
            let grid = StateGrid::new(m.len().saturating_sub(1))?;
            // masses were rounded to 12 digits on the way out
            PopulationDistribution::from_weights(grid, m)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_policies(path: &Path) -> Result<Vec<PolicyTable>, CliError> {
    let t = Table::read(path)?;
    let ty = t.column("type").ok_or_else(|| missing(path, "type"))?;
    let labels: Vec<(usize, i64)> = t
        .header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("p_").and_then(|a| a.parse().ok()).map(|a| (i, a)))
        .collect();
    let mut out: Vec<PolicyTable> = Vec::new();
    for row in &t.rows {
        let j = parse_usize(path, &row[ty])?;
        if j >= out.len() {
            out.resize(j + 1, (Vec::new(), Vec::new()));
        }
        let present: Vec<(i64, f64)> = labels
            .iter()
            .filter(|(i, _)| !row[*i].is_empty())
            .map(|(i, a)| parse_f64(path, &row[*i]).map(|p| (*a, p)))
            .collect::<Result<_, _>>()?;
        out[j].0 = present.iter().map(|(a, _)| *a).collect();
        out[j].1.push(present.iter().map(|(_, p)| *p).collect());
    }
    Ok(out)
}
