use thiserror::Error;

use super::SimulationTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("traces have different time grids ({a} vs {b} samples)")]
    TimeGrid { a: usize, b: usize },
    #[error("traces disagree on time stamp {index}: {a} vs {b}")]
    TimeStamp { index: usize, a: f64, b: f64 },
    #[error("traces have different node sets")]
    Nodes,
}

/// A-minus-B comparison of two runs on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub node_ids: Vec<String>,
    pub head_node: usize,
    pub time: Vec<f64>,
    pub head_a: Vec<f64>,
    pub head_b: Vec<f64>,
    /// `differences[step][node] = |V_a| - |V_b|`.
    pub differences: Vec<Vec<f64>>,
    /// Trip events per protection type P1..P5 for A and B.
    pub trip_counts: [[usize; 5]; 2],
    /// Seconds from the end of the last sag until the head voltage is back in
    /// the 0.95 pu band for good.
    pub recovery_time: [Option<f64>; 2],
    pub sag_end: Option<f64>,
}

impl ComparisonReport {
    pub fn max_abs_difference(&self) -> f64 {
        self.differences
            .iter()
            .flatten()
            .fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Head-voltage ordering in `[from, from + window)`: the smallest A - B
    /// difference and the fraction of samples where A is strictly higher.
    pub fn head_ordering(&self, from: f64, window: f64) -> Option<(f64, f64)> {
        let eps = 1e-9;
        let idx: Vec<usize> = (0..self.time.len())
            .filter(|&k| self.time[k] >= from - eps && self.time[k] < from + window - eps)
            .collect();
        if idx.is_empty() {
            return None;
        }
        let diffs: Vec<f64> = idx
            .iter()
            .map(|&k| self.head_a[k] - self.head_b[k])
            .collect();
        let min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
        let strict = diffs.iter().filter(|&&d| d > 0.0).count() as f64 / diffs.len() as f64;
        Some((min, strict))
    }
}

/// Time after `sag_end` until `series` enters `[0.95, inf)` and stays there.
pub fn recovery_time(time: &[f64], series: &[f64], sag_end: f64) -> Option<f64> {
    let mut entered: Option<f64> = None;
    for (&t, &v) in time.iter().zip(series) {
        if t < sag_end - 1e-9 {
            continue;
        }
        if v >= 0.95 {
            entered.get_or_insert(t);
        } else {
            entered = None;
        }
    }
    entered.map(|t| t - sag_end)
}

pub fn compare_runs(
    a: &SimulationTrace,
    b: &SimulationTrace,
) -> Result<ComparisonReport, CompareError> {
    if a.time.len() != b.time.len() {
        return Err(CompareError::TimeGrid {
            a: a.time.len(),
            b: b.time.len(),
        });
    }
    for (index, (&ta, &tb)) in a.time.iter().zip(&b.time).enumerate() {
        if (ta - tb).abs() > 1e-9 {
            return Err(CompareError::TimeStamp {
                index,
                a: ta,
                b: tb,
            });
        }
    }
    if a.node_ids != b.node_ids || a.head_node != b.head_node {
        return Err(CompareError::Nodes);
    }
    let differences = a
        .voltages
        .iter()
        .zip(&b.voltages)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect();
    let head_a = a.head_voltage();
    let head_b = b.head_voltage();
    let sag_end = a.sag_end.or(b.sag_end);
    let rec = |h: &[f64]| sag_end.and_then(|s| recovery_time(&a.time, h, s));
    Ok(ComparisonReport {
        node_ids: a.node_ids.clone(),
        head_node: a.head_node,
        time: a.time.clone(),
        recovery_time: [rec(&head_a), rec(&head_b)],
        head_a,
        head_b,
        differences,
        trip_counts: [a.trip_counts(), b.trip_counts()],
        sag_end,
    })
}
