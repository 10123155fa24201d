//! Per-iteration convergence records and run summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub used_surrogate: bool,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub rel_gap: f64,
    pub n_cuts_total: usize,
    pub wall_ms: f64,
}

impl TraceRecord {
    /// Equality on every column except the wall-clock time.
    pub fn same_progress(&self, other: &Self) -> bool {
        self.iteration == other.iteration
            && self.used_surrogate == other.used_surrogate
            && self.lower_bound.to_bits() == other.lower_bound.to_bits()
            && self.upper_bound.to_bits() == other.upper_bound.to_bits()
            && self.rel_gap.to_bits() == other.rel_gap.to_bits()
            && self.n_cuts_total == other.n_cuts_total
    }
}

/// `(UB − LB) / (1 + |UB|)`, infinite while either bound is missing.
pub fn relative_gap(lower: f64, upper: f64) -> f64 {
    if lower.is_finite() && upper.is_finite() {
        ((upper - lower) / (1.0 + upper.abs())).max(0.0)
    } else {
        f64::INFINITY
    }
}

pub const CSV_HEADER: &str = "iteration,used_surrogate,lower_bound,upper_bound,rel_gap,n_cuts_total,wall_ms";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn exact_calls(&self) -> usize {
        self.records.iter().filter(|r| !r.used_surrogate).count()
    }

    pub fn surrogate_calls(&self) -> usize {
        self.records.iter().filter(|r| r.used_surrogate).count()
    }

    /// Exact master solves performed up to the first record whose gap is at
    /// most `gap`, or `None` if the trace never gets there.
    pub fn exact_calls_to_gap(&self, gap: f64) -> Option<usize> {
        let mut exact = 0;
        for r in &self.records {
            if !r.used_surrogate {
                exact += 1;
            }
            if r.rel_gap <= gap {
                return Some(exact);
            }
        }
        None
    }

    /// Iterations up to the first record whose gap is at most `gap`.
    pub fn iterations_to_gap(&self, gap: f64) -> Option<usize> {
        self.records.iter().position(|r| r.rel_gap <= gap).map(|i| i + 1)
    }

    pub fn same_progress(&self, other: &Self) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| a.same_progress(b))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iteration,
                u8::from(r.used_surrogate),
                r.lower_bound,
                r.upper_bound,
                r.rel_gap,
                r.n_cuts_total,
                r.wall_ms
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => return Err(Error::Format(format!("unexpected trace header {other:?}"))),
        }
        let mut trace = Self::default();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Format(format!("trace line {} has {} fields", n + 2, f.len())));
            }
            let bad = |what: &str| Error::Format(format!("trace line {}: bad {what}", n + 2));
            trace.push(TraceRecord {
                iteration: f[0].parse().map_err(|_| bad("iteration"))?,
                used_surrogate: match f[1] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad("used_surrogate")),
                },
                lower_bound: f[2].parse().map_err(|_| bad("lower_bound"))?,
                upper_bound: f[3].parse().map_err(|_| bad("upper_bound"))?,
                rel_gap: f[4].parse().map_err(|_| bad("rel_gap"))?,
                n_cuts_total: f[5].parse().map_err(|_| bad("n_cuts_total"))?,
                wall_ms: f[6].parse().map_err(|_| bad("wall_ms"))?,
            });
        }
        Ok(trace)
    }
}
