//! Append-only per-step records.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("step {step} does not follow step {last}")]
    NonIncreasingStep { last: u64, step: u64 },
    #[error("row has {got} values, trace has {expected} columns")]
    Width { expected: usize, got: usize },
    #[error("no column named {0}")]
    MissingColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub values: Vec<f64>,
}

/// Column-named table of scalars, one row per step. Steps are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    columns: Vec<String>,
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, step: u64, values: Vec<f64>) -> Result<(), TraceError> {
        if values.len() != self.columns.len() {
            return Err(TraceError::Width { expected: self.columns.len(), got: values.len() });
        }
        if let Some(last) = self.rows.last() {
            if step <= last.step {
                return Err(TraceError::NonIncreasingStep { last: last.step, step });
            }
        }
        self.rows.push(TraceRow { step, values });
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Result<usize, TraceError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| TraceError::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, TraceError> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Overwrite a column in place (used for quantities only known once the
    /// run is over, such as `delta_h`).
    pub fn set_column(&mut self, name: &str, values: &[f64]) -> Result<(), TraceError> {
        let i = self.column_index(name)?;
        if values.len() != self.rows.len() {
            return Err(TraceError::Width { expected: self.rows.len(), got: values.len() });
        }
        for (row, v) in self.rows.iter_mut().zip(values) {
            row.values[i] = *v;
        }
        Ok(())
    }
}

/// `x - min(x)`, so the smallest entry is exactly zero.
pub fn delta_from_min(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    values.iter().map(|v| v - min).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn steps_must_increase() {
        let mut t = Trace::new(&["a"]);
        t.push(0, vec![1.0]).unwrap();
        t.push(3, vec![2.0]).unwrap();
        assert_eq!(t.push(3, vec![0.0]), Err(TraceError::NonIncreasingStep { last: 3, step: 3 }));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn width_is_checked() {
        let mut t = Trace::new(&["a", "b"]);
        assert!(matches!(t.push(0, vec![1.0]), Err(TraceError::Width { .. })));
    }

    #[test]
    fn delta_minimum_is_exactly_zero() {
        let d = delta_from_min(&[3.5, 1.25, 2.0, 1.25000001]);
        assert_eq!(d.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(d[0], 2.25);
    }

    #[test]
    fn missing_column_is_reported() {
        let t = Trace::new(&["a"]);
        assert_eq!(t.column("H"), Err(TraceError::MissingColumn("H".into())));
    }
}
