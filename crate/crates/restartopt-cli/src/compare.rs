//! Align several runs on a shared evaluation-count axis.
//!
//! The table reports best-so-far objective and gradient norm against
//! cumulative evaluations (gradient plus function), on the union grid of all
//! methods' counts with the last value carried forward, and flags the counts
//! at which a method restarted. Suitable for external plotting.

use restartopt::RunResult64;

use crate::runner::RunArtifact;

#[derive(Debug, Clone)]
struct SeriesPoint {
    evals: u64,
    best_f: f64,
    best_grad: f64,
    restarted: bool,
}

#[derive(Debug, Clone)]
pub struct AlignedSeries {
    pub label: String,
    /// Best-so-far objective per grid point; empty before the first record.
    pub best_f: Vec<Option<f64>>,
    pub best_grad: Vec<Option<f64>>,
    pub restarted: Vec<bool>,
    /// Total evaluations the method actually spent.
    pub total_evals: u64,
}

#[derive(Debug, Clone)]
pub struct CompareTable {
    pub grid: Vec<u64>,
    pub series: Vec<AlignedSeries>,
}

fn collapse(result: &RunResult64) -> Vec<SeriesPoint> {
    let mut points: Vec<SeriesPoint> = Vec::with_capacity(result.trace.len());
    let mut best_f = f64::INFINITY;
    let mut best_grad = f64::INFINITY;
    for record in &result.trace {
        let evals = record.grad_evals + record.fn_evals;
        best_f = best_f.min(record.f_value);
        best_grad = best_grad.min(record.grad_norm);
        match points.last_mut() {
            // several iterations can share an evaluation count; keep the
            // latest state and remember any restart among them
            Some(last) if last.evals == evals => {
                last.best_f = best_f;
                last.best_grad = best_grad;
                last.restarted |= record.restarted;
            }
            _ => points.push(SeriesPoint {
                evals,
                best_f,
                best_grad,
                restarted: record.restarted,
            }),
        }
    }
    points
}

/// Build the aligned table from successful runs. Needs at least two.
pub fn build_compare(artifacts: &[&RunArtifact]) -> Result<CompareTable, String> {
    let mut inputs = Vec::new();
    for artifact in artifacts {
        match &artifact.outcome {
            Ok(result) => inputs.push((artifact.label.clone(), collapse(result))),
            Err(e) => {
                return Err(format!(
                    "compare error: run '{}' seed {} failed: {e}",
                    artifact.label, artifact.seed
                ))
            }
        }
    }
    if inputs.len() < 2 {
        return Err("compare error: need at least two methods".into());
    }

    let mut grid: Vec<u64> = inputs
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.evals))
        .collect();
    grid.sort_unstable();
    grid.dedup();

    let series = inputs
        .into_iter()
        .map(|(label, points)| {
            let mut best_f = Vec::with_capacity(grid.len());
            let mut best_grad = Vec::with_capacity(grid.len());
            let mut restarted = Vec::with_capacity(grid.len());
            let mut cursor = 0usize;
            let mut current: Option<(f64, f64)> = None;
            for &g in &grid {
                let mut restart_here = false;
                while cursor < points.len() && points[cursor].evals <= g {
                    current = Some((points[cursor].best_f, points[cursor].best_grad));
                    restart_here |= points[cursor].restarted && points[cursor].evals == g;
                    cursor += 1;
                }
                best_f.push(current.map(|c| c.0));
                best_grad.push(current.map(|c| c.1));
                restarted.push(restart_here);
            }
            AlignedSeries {
                label,
                best_f,
                best_grad,
                restarted,
                total_evals: points.last().map(|p| p.evals).unwrap_or(0),
            }
        })
        .collect();

    Ok(CompareTable { grid, series })
}

impl CompareTable {
    /// Largest evaluation count reached by every method.
    pub fn final_common_evals(&self) -> u64 {
        self.series
            .iter()
            .map(|s| s.total_evals)
            .min()
            .unwrap_or(0)
    }

    /// Best-so-far (objective, gradient norm) of a method at an evaluation
    /// count, last value carried forward.
    pub fn value_at(&self, label: &str, evals: u64) -> Option<(f64, f64)> {
        let series = self.series.iter().find(|s| s.label == label)?;
        let idx = match self.grid.binary_search(&evals) {
            Ok(i) => i,
            Err(0) => return None,
            Err(i) => i - 1,
        };
        match (series.best_f[idx], series.best_grad[idx]) {
            (Some(f), Some(g)) => Some((f, g)),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut header = String::from("evals");
        for s in &self.series {
            let sanitized: String = s
                .label
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect();
            header.push_str(&format!(
                ",{sanitized}_best_f,{sanitized}_best_grad_norm,{sanitized}_restarted"
            ));
        }
        let mut out = header + "\n";
        for (i, g) in self.grid.iter().enumerate() {
            let mut row = g.to_string();
            for s in &self.series {
                let f = s.best_f[i].map(|v| v.to_string()).unwrap_or_default();
                let gr = s.best_grad[i].map(|v| v.to_string()).unwrap_or_default();
                row.push_str(&format!(",{f},{gr},{}", u8::from(s.restarted[i])));
            }
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}
