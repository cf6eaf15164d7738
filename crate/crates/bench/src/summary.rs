//! Per-optimizer summary files and their comparison.
//!
//! A summary is a CSV with header `seed,div,<metric>,<metric>_std,<extras>`,
//! one row per seed and a final `aggregate` row. Aggregates skip diverged
//! seeds; the aggregate row's `div` field counts them.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::BenchError;
use crate::output::{format_float, parse_float};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub diverged: bool,
    pub metric: f64,
    pub extras: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub metric: String,
    pub extras: Vec<String>,
    pub rows: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub div_count: usize,
    pub mean: f64,
    /// Sample standard deviation; NaN with fewer than two finished seeds.
    pub std: f64,
    /// Mean of each extra column over finished seeds, ignoring missing values.
    pub extras: Vec<f64>,
}

/// Mean and sample (n - 1) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl Summary {
    pub fn new(metric: impl Into<String>, extras: &[&str]) -> Self {
        Self { metric: metric.into(), extras: extras.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn finished(&self) -> impl Iterator<Item = &SeedResult> {
        self.rows.iter().filter(|r| !r.diverged)
    }

    pub fn aggregate(&self) -> Aggregate {
        let values: Vec<f64> = self.finished().map(|r| r.metric).collect();
        let (mean, std) = mean_std(&values);
        let extras = (0..self.extras.len())
            .map(|i| {
                let col: Vec<f64> = self.finished().map(|r| r.extras[i]).filter(|x| !x.is_nan()).collect();
                mean_std(&col).0
            })
            .collect();
        Aggregate { div_count: self.rows.len() - values.len(), mean, std, extras }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["seed".into(), "div".into(), self.metric.clone(), format!("{}_std", self.metric)];
        h.extend(self.extras.iter().cloned());
        h
    }

    pub fn write<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.seed.to_string(), u8::from(r.diverged).to_string(), format_float(r.metric), String::new()];
            rec.extend(r.extras.iter().map(|&x| format_float(x)));
            out.write_record(&rec)?;
        }
        let agg = self.aggregate();
        let mut rec = vec!["aggregate".into(), agg.div_count.to_string(), format_float(agg.mean), format_float(agg.std)];
        rec.extend(agg.extras.iter().map(|&x| format_float(x)));
        out.write_record(&rec)?;
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        buf
    }

    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| BenchError::Summary { path: path.into(), reason })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        if header.len() < 4 || header[0] != "seed" || header[1] != "div" || header[3] != format!("{}_std", header[2]) {
            return Err("header must start with seed,div,<metric>,<metric>_std".into());
        }
        let mut summary = Summary { metric: header[2].clone(), extras: header[4..].to_vec(), rows: Vec::new() };
        let mut saw_aggregate = false;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let line = i + 2;
            if saw_aggregate {
                return Err(format!("line {line}: rows after the aggregate row"));
            }
            if &rec[0] == "aggregate" {
                saw_aggregate = true;
                continue;
            }
            let seed = rec[0].parse().map_err(|_| format!("line {line}: bad seed `{}`", &rec[0]))?;
            let diverged = match &rec[1] {
                "0" => false,
                "1" => true,
                other => return Err(format!("line {line}: div must be 0 or 1, got `{other}`")),
            };
            let num = |j: usize| parse_float(&rec[j]).ok_or_else(|| format!("line {line}: bad number `{}`", &rec[j]));
            let metric = num(2)?;
            let extras = (4..rec.len()).map(num).collect::<Result<_, _>>()?;
            summary.rows.push(SeedResult { seed, diverged, metric, extras });
        }
        if !saw_aggregate {
            return Err("missing aggregate row".into());
        }
        Ok(summary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `(mean_a - mean_b) / |mean_b|`.
    pub relative: f64,
    /// `a - b` for seeds present and finished in both.
    pub paired: Vec<(u64, f64)>,
}

pub fn compare(a: &Summary, b: &Summary) -> Result<Comparison, BenchError> {
    if a.metric != b.metric {
        return Err(BenchError::MetricMismatch { a: a.metric.clone(), b: b.metric.clone() });
    }
    let mean_a = a.aggregate().mean;
    let mean_b = b.aggregate().mean;
    let relative = if mean_a == mean_b { 0.0 } else { (mean_a - mean_b) / mean_b.abs() };
    let paired = a
        .finished()
        .filter_map(|ra| b.finished().find(|rb| rb.seed == ra.seed).map(|rb| (ra.seed, ra.metric - rb.metric)))
        .collect();
    Ok(Comparison { metric: a.metric.clone(), mean_a, mean_b, relative, paired })
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "metric: {}", self.metric)?;
        writeln!(f, "mean A: {}", format_float(self.mean_a))?;
        writeln!(f, "mean B: {}", format_float(self.mean_b))?;
        writeln!(f, "relative improvement: {:+.1}%", 100.0 * self.relative)?;
        writeln!(f, "seed,delta")?;
        for (seed, d) in &self.paired {
            writeln!(f, "{seed},{}", format_float(*d))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(metric: &str, values: &[(u64, bool, f64)]) -> Summary {
        let mut s = Summary::new(metric, &["slope"]);
        for &(seed, diverged, metric) in values {
            s.rows.push(SeedResult { seed, diverged, metric, extras: vec![-1.0] });
        }
        s
    }

    #[test]
    fn aggregate_skips_diverged_seeds() {
        let s = summary("m", &[(0, false, 1.0), (1, true, 1e9), (2, false, 3.0)]);
        let agg = s.aggregate();
        assert_eq!(agg.div_count, 1);
        assert_eq!(agg.mean, 2.0);
        assert_eq!(agg.std, 2f64.sqrt());
        assert_eq!(agg.extras, vec![-1.0]);
    }

    #[test]
    fn file_round_trip() {
        let s = summary("final_J", &[(3, false, 0.125), (7, true, f64::NAN)]);
        let bytes = s.to_bytes();
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "seed,div,final_J,final_J_std,slope\n3,0,0.125,,-1\n7,1,,,-1\naggregate,1,0.125,,-1\n"
        );
        let back = Summary::from_bytes(&bytes).unwrap();
        assert_eq!(back.rows[0], s.rows[0]);
        assert!(back.rows[1].diverged && back.rows[1].metric.is_nan());
    }

    #[test]
    fn malformed_summaries() {
        assert!(Summary::from_bytes(b"seed,div,m\n").is_err());
        assert!(Summary::from_bytes(b"seed,div,m,m_std\n0,0,1,\n").is_err());
        assert!(Summary::from_bytes(b"seed,div,m,m_std\n0,2,1,\naggregate,0,1,\n").is_err());
    }

    #[test]
    fn relative_improvement() {
        let a = summary("r", &[(0, false, 228.0)]);
        let b = summary("r", &[(0, false, 125.0)]);
        let c = compare(&a, &b).unwrap();
        assert_eq!(format!("{:.1}", 100.0 * c.relative), "82.4");
        assert_eq!(c.paired, vec![(0, 103.0)]);
        assert_eq!(compare(&a, &a).unwrap().relative, 0.0);
        assert!(matches!(compare(&a, &summary("s", &[])), Err(BenchError::MetricMismatch { .. })));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
