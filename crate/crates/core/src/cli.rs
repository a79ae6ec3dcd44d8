//! Command-line runs tying ingestion, description, estimation and
//! validation together. Every output file is a pure function of the flags
//! and input files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::descriptive::{summary_csv, summary_table, yearly_mean_of};
use crate::error::{Error, Result};
use crate::frame::LogPolicy;
use crate::ingest::{parse_dataset, write_dataset, ExclusionReport, ParseOptions, Schema};
use crate::kv::KeyValues;
use crate::record::{derive_all, DerivedRecord, Variable};
use crate::regress::{CriticalValues, DEFAULT_INTERCEPT_CRITICAL, DEFAULT_SLOPE_CRITICAL};
use crate::report::{
    alignment_summary, fit_key_values, render_table, render_two_stage, DEMAND_TITLE, SUPPLY_TITLE,
};
use crate::synth::{
    bias_experiment, derive_seeds, generate, shipped_seeds, verdict, Estimator, SynthConfig,
    Thresholds,
};
use crate::tsls::{fit_supply, fit_two_stage, SeMode, StageSpec};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "transit-sls",
    version,
    about = "Two-stage least squares estimation of transit supply and demand"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Input table(s), one row per agency-year. Repeat to concatenate.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,

    /// Key-value file mapping logical field names to input headers.
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Seed for `synth`; for `validate`, expands into replication seeds
    /// instead of the shipped list.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long = "se-mode", global = true, value_enum, default_value_t = SeModeArg::Naive)]
    pub se_mode: SeModeArg,

    /// `all`, `none`, or a comma-separated list of variables to log.
    #[arg(long, global = true, default_value = "all")]
    pub log: String,

    #[arg(long = "critical-intercept", global = true, default_value_t = DEFAULT_INTERCEPT_CRITICAL)]
    pub critical_intercept: f64,

    #[arg(long = "critical-slope", global = true, default_value_t = DEFAULT_SLOPE_CRITICAL)]
    pub critical_slope: f64,

    /// Response of the equation being fit (fit-supply / fit-demand only).
    #[arg(long, global = true)]
    pub response: Option<String>,

    /// Comma-separated regressors (fit-supply / fit-demand only).
    #[arg(long, global = true)]
    pub regressors: Option<String>,

    #[arg(long, global = true, default_value_t = ',')]
    pub delimiter: char,

    #[arg(long = "year-min", global = true, default_value_t = 2002)]
    pub year_min: i32,

    #[arg(long = "year-max", global = true, default_value_t = 2018)]
    pub year_max: i32,

    /// Agencies to generate (synth).
    #[arg(long, global = true)]
    pub agencies: Option<usize>,

    /// Years per agency to generate (synth).
    #[arg(long, global = true)]
    pub years: Option<usize>,

    /// Disturbance correlation (synth, validate).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho: Option<f64>,

    /// Replications for validate; defaults to the full shipped seed list.
    #[arg(long, global = true)]
    pub replications: Option<usize>,

    /// Comma-separated sample sizes for validate.
    #[arg(long = "sample-sizes", global = true, default_value = "500,2000,10000")]
    pub sample_sizes: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Yearly means of the nine tracked metrics plus a summary table.
    Describe,
    /// Estimate the supply equation.
    FitSupply,
    /// Estimate the demand equation on first-stage fitted supply.
    FitDemand,
    /// Estimate both stages.
    #[command(name = "fit-2sls")]
    Fit2sls,
    /// Write a synthetic dataset and its ground-truth sidecar.
    Synth,
    /// Run the simultaneity bias experiment and check it against thresholds.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Describe => "describe",
            Command::FitSupply => "fit-supply",
            Command::FitDemand => "fit-demand",
            Command::Fit2sls => "fit-2sls",
            Command::Synth => "synth",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeModeArg {
    Naive,
    Corrected,
}

impl From<SeModeArg> for SeMode {
    fn from(v: SeModeArg) -> Self {
        match v {
            SeModeArg::Naive => SeMode::Naive,
            SeModeArg::Corrected => SeMode::Corrected,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    /// Text for standard output.
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// False only when `validate` finished but a check failed.
    pub passed: bool,
}

struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(|x| x.trim().to_string())
        .filter(|x| !x.is_empty())
        .collect()
}

impl RunConfig {
    fn log_policy(&self) -> Result<LogPolicy> {
        match self.log.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(LogPolicy::All),
            "none" => Ok(LogPolicy::None),
            list => {
                let names = split_list(list);
                for n in &names {
                    if !n.eq_ignore_ascii_case(crate::tsls::EVRH) {
                        Variable::from_name(n)
                            .map_err(|_| Error::Config(format!("--log: unknown variable `{n}`")))?;
                    }
                }
                Ok(LogPolicy::only(names))
            }
        }
    }

    fn critical(&self) -> CriticalValues {
        CriticalValues::Fixed {
            intercept: self.critical_intercept,
            slope: self.critical_slope,
        }
    }

    fn stage_specs(&self) -> Result<(StageSpec, StageSpec)> {
        let log = self.log_policy()?;
        let critical = self.critical();
        let mut supply = StageSpec::default_supply();
        let mut demand = StageSpec::default_demand();
        let target = match self.command {
            Command::FitSupply => Some(&mut supply),
            Command::FitDemand => Some(&mut demand),
            _ => None,
        };
        match target {
            Some(spec) => {
                if let Some(r) = &self.response {
                    spec.response = r.clone();
                }
                if let Some(r) = &self.regressors {
                    spec.regressors = split_list(r);
                }
            }
            None => {
                for (flag, set) in [
                    ("--response", self.response.is_some()),
                    ("--regressors", self.regressors.is_some()),
                ] {
                    if set {
                        return Err(Error::Config(format!(
                            "{flag} is only valid with fit-supply or fit-demand, not {}",
                            self.command.name()
                        )));
                    }
                }
            }
        }
        for spec in [&mut supply, &mut demand] {
            spec.log = log.clone();
            spec.critical = critical.clone();
        }
        Ok((supply, demand))
    }

    fn parse_options(&self) -> Result<ParseOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(
                "--delimiter must be a single ASCII character".into(),
            ));
        }
        if self.year_min > self.year_max {
            return Err(Error::Config("--year-min exceeds --year-max".into()));
        }
        Ok(ParseOptions {
            delimiter: self.delimiter as u8,
            years: self.year_min..=self.year_max,
        })
    }

    fn load(&self) -> Result<(Vec<DerivedRecord>, ExclusionReport)> {
        if self.input.is_empty() {
            return Err(Error::Config(format!(
                "--input is required for {}",
                self.command.name()
            )));
        }
        let schema = match &self.schema {
            Some(path) => {
                Schema::from_key_values(&fs::read_to_string(path)?.parse::<KeyValues>()?)?
            }
            None => Schema::default(),
        };
        let options = self.parse_options()?;
        let mut records = Vec::new();
        let mut report = ExclusionReport::default();
        for path in &self.input {
            let file = fs::File::open(path).map_err(|e| {
                Error::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?;
            let (mut recs, rep) = parse_dataset(file, &schema, &options)?;
            let offset = report.rows_in;
            report.rows_in += rep.rows_in;
            report.rows_out += rep.rows_out;
            report.missing_cells += rep.missing_cells;
            report
                .excluded
                .extend(rep.excluded.into_iter().map(|mut r| {
                    r.index += offset;
                    r
                }));
            records.append(&mut recs);
        }
        Ok((derive_all(&records), report))
    }
}

/// Executes one command, writing its artifacts under `config.out`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let stale = config.out.join("error.kv");
    if stale.exists() {
        fs::remove_file(&stale)?;
    }
    let mut out = Outputs {
        dir: &config.out,
        files: Vec::new(),
    };
    fs::create_dir_all(&config.out)?;
    let (summary, passed) = match config.command {
        Command::Describe => (describe(config, &mut out)?, true),
        Command::FitSupply => (fit_supply_cmd(config, &mut out)?, true),
        Command::FitDemand | Command::Fit2sls => (fit_both_cmd(config, &mut out)?, true),
        Command::Synth => (synth_cmd(config, &mut out)?, true),
        Command::Validate => validate_cmd(config, &mut out)?,
    };
    Ok(RunOutcome {
        summary,
        files: out.files,
        passed,
    })
}

fn describe(config: &RunConfig, out: &mut Outputs<'_>) -> Result<String> {
    let (records, parse_report) = config.load()?;
    let mut summary = String::new();
    for metric in Variable::TRACKED {
        let series = yearly_mean_of(&records, metric);
        out.write(
            &format!("descriptive/{}.csv", metric.name()),
            &series.to_csv(),
        )?;
        summary.push_str(&format!(
            "{:<18} {} year(s)\n",
            metric.name(),
            series.points.len()
        ));
    }
    let table = summary_csv(&summary_table(&records));
    out.write("descriptive/summary.csv", &table)?;
    out.write("exclusions.csv", &parse_report.to_table(Some("parse")))?;
    summary.push('\n');
    summary.push_str(&table);
    Ok(summary)
}

fn exclusions_table(parts: &[(&str, &ExclusionReport)]) -> String {
    let mut out = String::from("rule,count\n");
    for (prefix, report) in parts {
        out.push_str(&report.table_rows(Some(prefix)));
    }
    out
}

fn fit_supply_cmd(config: &RunConfig, out: &mut Outputs<'_>) -> Result<String> {
    let (supply_spec, _) = config.stage_specs()?;
    let (records, parse_report) = config.load()?;
    let stage =
        fit_supply(&records, &supply_spec).map_err(|e| e.in_stage(crate::error::Stage::Supply))?;
    let table = render_table(SUPPLY_TITLE, &stage.fit);
    out.write("supply.report", &table)?;
    out.write(
        "supply.kv",
        &fit_key_values("supply", &stage.fit).to_string(),
    )?;
    out.write(
        "exclusions.csv",
        &exclusions_table(&[("parse", &parse_report), ("supply", &stage.exclusions)]),
    )?;
    Ok(table)
}

fn fit_both_cmd(config: &RunConfig, out: &mut Outputs<'_>) -> Result<String> {
    let (supply_spec, demand_spec) = config.stage_specs()?;
    let (records, parse_report) = config.load()?;
    let result = fit_two_stage(&records, &supply_spec, &demand_spec, config.se_mode.into())?;

    let mut demand_kv = fit_key_values("demand", &result.demand.fit);
    demand_kv.push("se_mode", result.se_mode.name());
    if config.command == Command::Fit2sls {
        out.write(
            "supply.report",
            &render_table(SUPPLY_TITLE, &result.supply.fit),
        )?;
        out.write(
            "supply.kv",
            &fit_key_values("supply", &result.supply.fit).to_string(),
        )?;
    }
    out.write(
        "demand.report",
        &render_table(DEMAND_TITLE, &result.demand.fit),
    )?;
    out.write("demand.kv", &demand_kv.to_string())?;
    out.write(
        "exclusions.csv",
        &exclusions_table(&[
            ("parse", &parse_report),
            ("supply", &result.supply.exclusions),
            ("demand", &result.demand.exclusions),
        ]),
    )?;
    Ok(if config.command == Command::Fit2sls {
        render_two_stage(&result)
    } else {
        let mut s = render_table(DEMAND_TITLE, &result.demand.fit);
        s.push('\n');
        s.push_str(&alignment_summary(&result));
        s
    })
}

fn synth_cmd(config: &RunConfig, out: &mut Outputs<'_>) -> Result<String> {
    let defaults = SynthConfig::default();
    let synth = SynthConfig {
        n_agencies: config.agencies.unwrap_or(defaults.n_agencies),
        n_years: config.years.unwrap_or(defaults.n_years),
        rho: config.rho.unwrap_or(defaults.rho),
        seed: config.seed.unwrap_or(defaults.seed),
        ..defaults
    };
    let data = generate(&synth)?;
    let mut csv = Vec::new();
    write_dataset(
        &data.raw_records(),
        &mut csv,
        &Schema::default(),
        config.parse_options()?.delimiter,
    )?;
    out.write(
        "dataset.csv",
        &String::from_utf8(csv).expect("csv output is utf-8"),
    )?;
    out.write("truth.kv", &synth.to_key_values().to_string())?;
    Ok(format!(
        "wrote {} records (seed {}, rho {})\n",
        data.records.len(),
        synth.seed,
        synth.rho
    ))
}

fn validate_cmd(config: &RunConfig, out: &mut Outputs<'_>) -> Result<(String, bool)> {
    let sizes = split_list(&config.sample_sizes)
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Config(format!("--sample-sizes: bad entry `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let seeds = match (config.seed, config.replications) {
        (Some(base), reps) => derive_seeds(base, reps.unwrap_or(200)),
        (None, reps) => {
            let all = shipped_seeds();
            let n = reps.unwrap_or(all.len());
            if n > all.len() {
                return Err(Error::Config(format!(
                    "--replications {n} exceeds the {} shipped seeds; pass --seed to derive more",
                    all.len()
                )));
            }
            all[..n].to_vec()
        }
    };
    let synth = SynthConfig {
        rho: config.rho.unwrap_or(0.8),
        ..SynthConfig::default()
    };
    let table = bias_experiment(
        &synth,
        &[Estimator::OlsDirect, Estimator::TwoStage],
        &seeds,
        &sizes,
    )?;
    let checks = verdict(&table, &Thresholds::default());
    let passed = checks.iter().all(|c| c.passed);

    let mut report = format!(
        "Simultaneity experiment\n  true demand slope: {}\n  rho: {}\n  replications: {}\n\n",
        table.truth,
        table.rho,
        seeds.len()
    );
    report.push_str(&format!(
        "{:<12} {:>7} {:>12} {:>12} {:>12}\n",
        "estimator", "n", "mean_bias", "std_dev", "median_abs"
    ));
    for r in &table.rows {
        report.push_str(&format!(
            "{:<12} {:>7} {:>12.6} {:>12.6} {:>12.6}\n",
            r.estimator.name(),
            r.sample_size,
            r.mean_bias,
            r.std_dev,
            r.median_abs_error
        ));
    }
    report.push('\n');
    for c in &checks {
        report.push_str(&format!(
            "{} {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name
        ));
    }
    report.push_str(&format!(
        "verdict: {}\n",
        if passed { "PASS" } else { "FAIL" }
    ));
    out.write("validate.report", &report)?;
    out.write("validate.csv", &table.to_csv())?;
    Ok((report, passed))
}

/// Machine-readable error record.
pub fn error_record(command: Option<Command>, err: &Error) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.push("status", "error");
    kv.push("command", command.map_or("unknown", Command::name));
    kv.push("kind", err.kind());
    kv.push(
        "stage",
        err.stage().map_or("none".to_string(), |s| s.to_string()),
    );
    kv.push("message", err.to_string().replace('\n', " "));
    kv
}
