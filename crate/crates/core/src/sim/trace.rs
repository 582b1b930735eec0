use serde::{Deserialize, Serialize};

/// Sampled values of a fixed signal set, one row per cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub signals: Vec<String>,
    pub values: Vec<Vec<u64>>,
}

impl Trace {
    pub fn new(signals: Vec<String>) -> Self {
        Trace { signals, values: Vec::new() }
    }

    pub fn column(&self, signal: &str) -> Option<Vec<u64>> {
        let i = self.signals.iter().position(|s| s == signal)?;
        Some(self.values.iter().map(|row| row[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub diverged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<u64>,
    pub signals: Vec<String>,
}

impl DivergenceReport {
    pub fn none() -> Self {
        DivergenceReport { diverged: false, cycle: None, signals: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("traces record different signals")]
    Signals,
    #[error("traces have {0} and {1} cycles")]
    Length(usize, usize),
    #[error("row {0} does not match the signal list")]
    Row(usize),
}

/// First cycle at which the traces differ, with every signal that differs
/// at that cycle.
pub fn diff_runs(a: &Trace, b: &Trace) -> Result<DivergenceReport, DiffError> {
    if a.signals != b.signals {
        return Err(DiffError::Signals);
    }
    if a.values.len() != b.values.len() {
        return Err(DiffError::Length(a.values.len(), b.values.len()));
    }
    for (cycle, (ra, rb)) in a.values.iter().zip(&b.values).enumerate() {
        if ra.len() != a.signals.len() || rb.len() != a.signals.len() {
            return Err(DiffError::Row(cycle));
        }
        let signals: Vec<String> =
            a.signals.iter().zip(ra.iter().zip(rb)).filter(|(_, (x, y))| x != y).map(|(s, _)| s.clone()).collect();
        if !signals.is_empty() {
            return Ok(DivergenceReport { diverged: true, cycle: Some(cycle as u64), signals });
        }
    }
    Ok(DivergenceReport::none())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rows: &[[u64; 2]]) -> Trace {
        Trace { signals: vec!["a".into(), "b".into()], values: rows.iter().map(|r| r.to_vec()).collect() }
    }

    #[test]
    fn identical_traces() {
        let t = trace(&[[1, 2], [3, 4]]);
        assert_eq!(diff_runs(&t, &t).unwrap(), DivergenceReport::none());
    }

    #[test]
    fn first_divergence_reported() {
        let mut rows = vec![[0, 0]; 8];
        let a = trace(&rows);
        rows[5][1] = 9;
        rows[6][0] = 9;
        let r = diff_runs(&a, &trace(&rows)).unwrap();
        assert_eq!((r.cycle, r.signals), (Some(5), vec!["b".to_string()]));
    }

    #[test]
    fn shape_mismatch() {
        assert_eq!(diff_runs(&trace(&[[0, 0]]), &trace(&[])), Err(DiffError::Length(1, 0)));
    }

    #[test]
    fn report_json_shape() {
        assert_eq!(serde_json::to_string(&DivergenceReport::none()).unwrap(), r#"{"diverged":false,"signals":[]}"#);
    }
}
