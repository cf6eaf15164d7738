//! Trace CSV files: a `step` column followed by the trace's named columns.
//! Missing values (NaN) are empty fields.

use std::io::Write;

use rad_core::Trace;

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes. NaN is the empty string.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-5 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Inverse of [`format_float`].
pub fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

pub fn write_trace<W: Write>(w: W, trace: &Trace) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["step"];
    header.extend(trace.columns().iter().map(String::as_str));
    out.write_record(&header)?;
    for row in trace.rows() {
        let mut record = vec![row.step.to_string()];
        record.extend(row.values.iter().map(|&v| format_float(v)));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}
