use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::artifacts::RunArtifacts;
use crate::format::num;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// State against the probability of action 0, one series per type.
    Policy,
    /// Outer iteration against the joint W1 residual.
    Residual,
    /// Outer iteration against each type's mean state.
    MeanState,
}

impl FromStr for PlotKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "policy" => Ok(Self::Policy),
            "residual" => Ok(Self::Residual),
            "mean_state" => Ok(Self::MeanState),
            other => Err(CliError::Input(format!(
                "unknown plot kind `{other}` (expected policy, residual or mean_state)"
            ))),
        }
    }
}

/// Tidy `(x, series, value)` rows for one plot.
pub fn plot_rows(run: &RunArtifacts, kind: PlotKind) -> Result<Vec<(f64, String, f64)>, CliError> {
    let mut out = Vec::new();
    match kind {
        PlotKind::Policy => {
            for (j, (labels, rows)) in run.policies.iter().enumerate() {
                // action 0 when the type has it, otherwise its first action
                let col = labels.iter().position(|a| *a == 0).unwrap_or(0);
                let n = rows.len().saturating_sub(1).max(1) as f64;
                for (x, row) in rows.iter().enumerate() {
                    out.push((x as f64 / n, format!("type_{j}"), row[col]));
                }
            }
        }
        PlotKind::Residual => {
            for (m, r) in run.residuals()? {
                out.push((m as f64, "residual".to_string(), r));
            }
        }
        PlotKind::MeanState => {
            for (m, means) in run.means()? {
                for (j, v) in means.iter().enumerate() {
                    out.push((m as f64, format!("type_{j}"), *v));
                }
            }
        }
    }
    Ok(out)
}

pub fn write_plot<W: Write>(rows: &[(f64, String, f64)], sink: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    let fail = |e: csv::Error| CliError::Input(format!("writing plot data: {e}"));
    w.write_record(["x", "series", "value"]).map_err(fail)?;
    for (x, s, v) in rows {
        w.write_record([num(*x), s.clone(), num(*v)]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing plot data: {e}")))
}

pub fn plotdata(trace: &Path, kind: PlotKind, sink: impl Write) -> Result<(), CliError> {
    let run = RunArtifacts::load(trace)?;
    write_plot(&plot_rows(&run, kind)?, sink)
}
