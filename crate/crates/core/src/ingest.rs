//! Delimited-text ingestion of agency-year tables.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::record::{AgencyYearRecord, Variable};

pub const AGENCY_ID: &str = "agency_id";
pub const YEAR: &str = "year";

/// Maps logical field names to the header names of an input table.
///
/// Defaults to identity: each logical field is expected under its own name.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    agency_id: String,
    year: String,
    fields: BTreeMap<Variable, String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            agency_id: AGENCY_ID.to_string(),
            year: YEAR.to_string(),
            fields: Variable::RAW
                .into_iter()
                .map(|v| (v, v.name().to_string()))
                .collect(),
        }
    }
}

impl Schema {
    /// Overrides the defaults from `logical = Header Name` entries.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut schema = Schema::default();
        for (key, header) in kv.iter() {
            match key {
                AGENCY_ID => schema.agency_id = header.to_string(),
                YEAR => schema.year = header.to_string(),
                other => {
                    let var = Variable::from_name(other)?;
                    if var.is_derived() {
                        return Err(Error::Schema(format!(
                            "`{other}` is derived and cannot be mapped to an input column"
                        )));
                    }
                    schema.fields.insert(var, header.to_string());
                }
            }
        }
        Ok(schema)
    }

    pub fn header_for(&self, var: Variable) -> Option<&str> {
        self.fields.get(&var).map(String::as_str)
    }

    pub fn agency_id_header(&self) -> &str {
        &self.agency_id
    }

    pub fn year_header(&self) -> &str {
        &self.year
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub delimiter: u8,
    pub years: RangeInclusive<i32>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            years: 2002..=2018,
        }
    }
}

/// Why a row was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExclusionRule {
    MissingKey,
    YearOutOfRange,
    MissingField,
    NonPositiveUnderLog,
    DivisionByZero,
    ExcludedAtSupplyStage,
}

impl ExclusionRule {
    pub const ALL: [ExclusionRule; 6] = [
        ExclusionRule::MissingKey,
        ExclusionRule::YearOutOfRange,
        ExclusionRule::MissingField,
        ExclusionRule::NonPositiveUnderLog,
        ExclusionRule::DivisionByZero,
        ExclusionRule::ExcludedAtSupplyStage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExclusionRule::MissingKey => "missing_key",
            ExclusionRule::YearOutOfRange => "year_out_of_range",
            ExclusionRule::MissingField => "missing_field",
            ExclusionRule::NonPositiveUnderLog => "nonpositive_under_log",
            ExclusionRule::DivisionByZero => "division_by_zero",
            ExclusionRule::ExcludedAtSupplyStage => "excluded_at_supply_stage",
        }
    }
}

impl fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedRow {
    /// Zero-based position in the input the operation was given.
    pub index: usize,
    pub agency_id: String,
    pub year: Option<i32>,
    pub rule: ExclusionRule,
    /// The field that triggered the rule, when there is one.
    pub field: Option<String>,
}

/// Row accounting for any operation that drops rows.
///
/// `rows_in == rows_out + excluded.len()` always holds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExclusionReport {
    pub rows_in: usize,
    pub rows_out: usize,
    pub excluded: Vec<ExcludedRow>,
    /// Cells that were empty, malformed, non-finite or negative and were
    /// read as missing. These do not drop rows by themselves.
    pub missing_cells: usize,
}

impl ExclusionReport {
    pub fn count(&self, rule: ExclusionRule) -> usize {
        self.excluded.iter().filter(|r| r.rule == rule).count()
    }

    pub fn dropped(&self) -> usize {
        self.excluded.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.rows_in == self.rows_out + self.excluded.len()
    }

    /// `rule,count` table with every rule listed, prefixed by `prefix.` when
    /// a prefix is given.
    pub fn to_table(&self, prefix: Option<&str>) -> String {
        let mut out = String::from("rule,count\n");
        out.push_str(&self.table_rows(prefix));
        out
    }

    pub(crate) fn table_rows(&self, prefix: Option<&str>) -> String {
        let name = |n: &str| match prefix {
            Some(p) => format!("{p}.{n}"),
            None => n.to_string(),
        };
        let mut out = String::new();
        for rule in ExclusionRule::ALL {
            out.push_str(&format!("{},{}\n", name(rule.name()), self.count(rule)));
        }
        out.push_str(&format!(
            "{},{}\n",
            name("missing_cells"),
            self.missing_cells
        ));
        out.push_str(&format!("{},{}\n", name("rows_in"), self.rows_in));
        out.push_str(&format!("{},{}\n", name("rows_out"), self.rows_out));
        out
    }
}

const MISSING_TOKENS: [&str; 6] = ["", "na", "n/a", "nan", "null", "-"];

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if MISSING_TOKENS.iter().any(|t| cell.eq_ignore_ascii_case(t)) {
        return None;
    }
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0)
}

/// Reads a header-bearing delimited table into records.
///
/// Cells that cannot be read as a finite nonnegative number become missing
/// fields and are tallied in `missing_cells`. Rows without an agency id or a
/// parseable year, and rows outside `options.years`, are dropped and listed.
pub fn parse_dataset<R: Read>(
    source: R,
    schema: &Schema,
    options: &ParseOptions,
) -> Result<(Vec<AgencyYearRecord>, ExclusionReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h.trim() == name);

    let id_col = position(schema.agency_id_header()).ok_or_else(|| {
        Error::Schema(format!(
            "missing mandatory column `{}`",
            schema.agency_id_header()
        ))
    })?;
    let year_col = position(schema.year_header()).ok_or_else(|| {
        Error::Schema(format!(
            "missing mandatory column `{}`",
            schema.year_header()
        ))
    })?;
    let field_cols: Vec<(Variable, Option<usize>)> = Variable::RAW
        .into_iter()
        .map(|v| (v, schema.header_for(v).and_then(position)))
        .collect();

    let mut records = Vec::new();
    let mut report = ExclusionReport::default();

    for (index, row) in reader.records().enumerate() {
        let row = row?;
        report.rows_in += 1;
        let agency_id = row.get(id_col).unwrap_or("").trim().to_string();
        let year = row.get(year_col).and_then(|y| y.trim().parse::<i32>().ok());

        let rule = match year {
            _ if agency_id.is_empty() => Some((ExclusionRule::MissingKey, AGENCY_ID)),
            None => Some((ExclusionRule::MissingKey, YEAR)),
            Some(y) if !options.years.contains(&y) => Some((ExclusionRule::YearOutOfRange, YEAR)),
            Some(_) => None,
        };
        if let Some((rule, field)) = rule {
            report.excluded.push(ExcludedRow {
                index,
                agency_id,
                year,
                rule,
                field: Some(field.to_string()),
            });
            continue;
        }

        let mut record = AgencyYearRecord::new(agency_id, year.unwrap_or_default());
        for &(var, col) in &field_cols {
            let Some(col) = col else { continue };
            let value = row.get(col).and_then(parse_cell);
            if value.is_none() {
                report.missing_cells += 1;
            }
            record.set(var, value);
        }
        records.push(record);
    }
    report.rows_out = records.len();
    Ok((records, report))
}

fn format_value(v: Option<f64>) -> String {
    // `{}` on f64 prints the shortest string that parses back to the same value.
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes records in the layout `parse_dataset` reads, using the schema's
/// header names. Missing values become empty cells.
pub fn write_dataset<W: Write>(
    records: &[AgencyYearRecord],
    sink: W,
    schema: &Schema,
    delimiter: u8,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(sink);
    let mut header = vec![
        schema.agency_id_header().to_string(),
        schema.year_header().to_string(),
    ];
    let vars: Vec<Variable> = Variable::RAW
        .into_iter()
        .filter(|v| schema.header_for(*v).is_some())
        .collect();
    header.extend(
        vars.iter()
            .map(|v| schema.header_for(*v).unwrap().to_string()),
    );
    writer.write_record(&header)?;
    for r in records {
        let mut row = vec![r.agency_id.clone(), r.year.to_string()];
        row.extend(vars.iter().map(|v| format_value(r.get(*v))));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}
