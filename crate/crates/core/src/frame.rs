//! Rectangular model frames built from derived records by listwise deletion.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ingest::{ExcludedRow, ExclusionReport, ExclusionRule};
use crate::record::{DerivedRecord, Variable};

/// Which variables are replaced by their natural logarithm.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LogPolicy {
    #[default]
    All,
    None,
    Only(BTreeSet<String>),
}

impl LogPolicy {
    pub fn only<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LogPolicy::Only(
            names
                .into_iter()
                .map(|s| s.into().to_ascii_lowercase())
                .collect(),
        )
    }

    pub fn is_logged(&self, name: &str) -> bool {
        match self {
            LogPolicy::All => true,
            LogPolicy::None => false,
            LogPolicy::Only(set) => set.contains(&name.to_ascii_lowercase()),
        }
    }
}

/// Where a frame row came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowLabel {
    /// Position in the record slice the frame was built from.
    pub index: usize,
    pub agency_id: String,
    pub year: i32,
}

/// Response column plus named regressor columns of uniform length, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFrame {
    response_name: String,
    response: Vec<f64>,
    regressor_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    rows: Vec<RowLabel>,
}

impl ModelFrame {
    pub fn new(
        response_name: impl Into<String>,
        response: Vec<f64>,
        regressor_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        rows: Vec<RowLabel>,
    ) -> Result<Self> {
        let n = response.len();
        if n == 0 {
            return Err(Error::DegenerateData("model frame has no rows".into()));
        }
        if regressor_names.len() != columns.len() {
            return Err(Error::Shape(format!(
                "{} regressor names for {} columns",
                regressor_names.len(),
                columns.len()
            )));
        }
        if rows.len() != n {
            return Err(Error::Shape(format!(
                "{} row labels for {n} rows",
                rows.len()
            )));
        }
        for (name, col) in regressor_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Shape(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
        }
        let all_finite = response
            .iter()
            .chain(columns.iter().flatten())
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::DegenerateData(
                "model frame contains non-finite values".into(),
            ));
        }
        Ok(Self {
            response_name: response_name.into(),
            response,
            regressor_names,
            columns,
            rows,
        })
    }

    /// Frame with synthetic row labels, for callers that have bare columns.
    pub fn from_columns(
        response_name: impl Into<String>,
        response: Vec<f64>,
        regressors: Vec<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let rows = (0..response.len())
            .map(|index| RowLabel {
                index,
                agency_id: String::new(),
                year: 0,
            })
            .collect();
        let (names, columns) = regressors.into_iter().unzip();
        Self::new(response_name, response, names, columns, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn regressor_names(&self) -> &[String] {
        &self.regressor_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.regressor_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> &[RowLabel] {
        &self.rows
    }

    /// Copy of this frame with one regressor column replaced.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self> {
        let i = self
            .regressor_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema(format!("frame has no column `{name}`")))?;
        let mut columns = self.columns.clone();
        columns[i] = values;
        Self::new(
            self.response_name.clone(),
            self.response.clone(),
            self.regressor_names.clone(),
            columns,
            self.rows.clone(),
        )
    }
}

/// A frame column: a record variable, or an externally supplied value per
/// record (`None` marks rows the supplier excluded). External columns are
/// taken as-is, never log-transformed.
#[derive(Debug, Clone, Copy)]
pub enum ColumnSource<'a> {
    Var(Variable),
    External {
        name: &'a str,
        values: &'a [Option<f64>],
    },
}

impl ColumnSource<'_> {
    fn name(&self) -> &str {
        match self {
            ColumnSource::Var(v) => v.name(),
            ColumnSource::External { name, .. } => name,
        }
    }
}

fn classify_missing(record: &DerivedRecord, var: Variable) -> ExclusionRule {
    match var.denominator().and_then(|d| record.get(d)) {
        Some(den) if den <= 0.0 => ExclusionRule::DivisionByZero,
        _ => ExclusionRule::MissingField,
    }
}

/// Builds a frame from arbitrary column sources. See [`build_model_frame`].
pub fn build_frame(
    records: &[DerivedRecord],
    response: ColumnSource<'_>,
    regressors: &[ColumnSource<'_>],
    log_policy: &LogPolicy,
) -> Result<(ModelFrame, ExclusionReport)> {
    for src in regressors {
        if src.name() == response.name() {
            return Err(Error::Schema(format!(
                "`{}` is both response and regressor",
                src.name()
            )));
        }
        if let ColumnSource::External { name, values } = src {
            if values.len() != records.len() {
                return Err(Error::Shape(format!(
                    "column `{name}` has {} values for {} records",
                    values.len(),
                    records.len()
                )));
            }
        }
    }

    let sources: Vec<ColumnSource<'_>> = std::iter::once(response)
        .chain(regressors.iter().copied())
        .collect();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); sources.len()];
    let mut rows = Vec::new();
    let mut report = ExclusionReport {
        rows_in: records.len(),
        ..Default::default()
    };
    let mut scratch = vec![0.0; sources.len()];

    'rows: for (index, record) in records.iter().enumerate() {
        for (slot, src) in scratch.iter_mut().zip(&sources) {
            let outcome = match *src {
                ColumnSource::Var(var) => match record.get(var) {
                    None => Err(classify_missing(record, var)),
                    Some(v) if log_policy.is_logged(var.name()) => {
                        if v > 0.0 {
                            Ok(v.ln())
                        } else {
                            Err(ExclusionRule::NonPositiveUnderLog)
                        }
                    }
                    Some(v) => Ok(v),
                },
                ColumnSource::External { values, .. } => {
                    values[index].ok_or(ExclusionRule::ExcludedAtSupplyStage)
                }
            };
            match outcome {
                Ok(v) => *slot = v,
                Err(rule) => {
                    report.excluded.push(ExcludedRow {
                        index,
                        agency_id: record.agency_id().to_string(),
                        year: Some(record.year()),
                        rule,
                        field: Some(src.name().to_string()),
                    });
                    continue 'rows;
                }
            }
        }
        for (col, v) in values.iter_mut().zip(&scratch) {
            col.push(*v);
        }
        rows.push(RowLabel {
            index,
            agency_id: record.agency_id().to_string(),
            year: record.year(),
        });
    }
    report.rows_out = rows.len();

    if rows.is_empty() {
        return Err(Error::DegenerateData(format!(
            "every one of {} rows was excluded for model of `{}`",
            records.len(),
            response.name()
        )));
    }

    let mut values = values.into_iter();
    let response_values = values.next().unwrap_or_default();
    let names = regressors.iter().map(|s| s.name().to_string()).collect();
    let frame = ModelFrame::new(
        response.name(),
        response_values,
        names,
        values.collect(),
        rows,
    )?;
    Ok((frame, report))
}

/// Selects `response` and `regressors` from the records, dropping any row
/// with a missing value or, for log-flagged variables, a nonpositive one.
pub fn build_model_frame(
    records: &[DerivedRecord],
    response: &str,
    regressors: &[&str],
    log_policy: &LogPolicy,
) -> Result<(ModelFrame, ExclusionReport)> {
    let response = ColumnSource::Var(Variable::from_name(response)?);
    let regressors = regressors
        .iter()
        .map(|name| Variable::from_name(name).map(ColumnSource::Var))
        .collect::<Result<Vec<_>>>()?;
    build_frame(records, response, &regressors, log_policy)
}
