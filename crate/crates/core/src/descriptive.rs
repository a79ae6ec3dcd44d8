//! Yearly cross-agency averages and whole-dataset summaries.
//!
//! Means are unweighted: every agency-year with a present value counts once.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::record::{DerivedRecord, Variable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearPoint {
    pub year: i32,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlySeries {
    pub metric: Variable,
    /// Ascending by year; years without a present value are absent.
    pub points: Vec<YearPoint>,
}

impl YearlySeries {
    pub fn point(&self, year: i32) -> Option<&YearPoint> {
        self.points.iter().find(|p| p.year == year)
    }

    /// `year,mean,n` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,mean,n\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.year, p.mean, p.count));
        }
        out
    }
}

pub fn yearly_mean(records: &[DerivedRecord], metric: &str) -> Result<YearlySeries> {
    let metric = Variable::from_name(metric)?;
    Ok(yearly_mean_of(records, metric))
}

pub fn yearly_mean_of(records: &[DerivedRecord], metric: Variable) -> YearlySeries {
    let mut acc: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for r in records {
        if let Some(v) = r.get(metric) {
            let slot = acc.entry(r.year()).or_default();
            slot.0 += v;
            slot.1 += 1;
        }
    }
    let points = acc
        .into_iter()
        .map(|(year, (sum, count))| YearPoint {
            year,
            mean: sum / count as f64,
            count,
        })
        .collect();
    YearlySeries { metric, points }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: Variable,
    pub count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

/// One row per known variable, over present values only.
pub fn summary_table(records: &[DerivedRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Variable::ALL
        .into_iter()
        .map(|metric| {
            let values: Vec<f64> = records.iter().filter_map(|r| r.get(metric)).collect();
            let count = values.len();
            let (min, max, mean) = if count == 0 {
                (None, None, None)
            } else {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // Clamp guards against the last-ulp drift of a summed mean.
                let mean = (values.iter().sum::<f64>() / count as f64).clamp(min, max);
                (Some(min), Some(max), Some(mean))
            };
            SummaryRow {
                metric,
                count,
                min,
                max,
                mean,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.metric.name().cmp(b.metric.name()));
    rows
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("metric,min,max,mean,n\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.metric.name(),
            cell(r.min),
            cell(r.max),
            cell(r.mean),
            r.count
        ));
    }
    out
}
