//! Synthetic agency-year panels with known coefficients and correlated
//! supply/demand disturbances, plus a Monte Carlo bias harness comparing
//! single-stage OLS against the two-stage estimator.
//!
//! Generation runs in log space:
//!
//! ```text
//! ln VRH  = a_s + b_acpt ln ACPT + b_sad ln SAD + b_voms ln VOMS + u_s
//! ln TUPT = a_d + b_vrh ln VRH + b_afpt ln AFPT + u_d
//! ```
//!
//! with `(u_s, u_d)` jointly normal, standard deviations `sigma_supply` and
//! `sigma_demand`, correlation `rho`. The demand equation uses the realized
//! (noisy) supply, which is what makes observed VRH endogenous when
//! `rho != 0`. Raw fields (cost, fares, population, area, ...) are then
//! back-solved so that the derived ratios match the drawn values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{build_model_frame, LogPolicy};
use crate::kv::KeyValues;
use crate::record::{derive_variables, AgencyYearRecord, DerivedRecord};
use crate::regress::{fit_ols, CriticalValues};
use crate::tsls::{fit_two_stage, SeMode, StageSpec, EVRH};

/// Seed of the shipped calibrated dataset.
pub const CALIBRATED_SEED: u64 = 20191203;

const SHIPPED_SEEDS: &str = include_str!("../data/seeds.txt");

/// Replication seeds shipped with the crate for the simultaneity experiment.
pub fn shipped_seeds() -> Vec<u64> {
    SHIPPED_SEEDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse().expect("shipped seed list is well formed"))
        .collect()
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `count` seeds expanded from `base`.
pub fn derive_seeds(base: u64, count: usize) -> Vec<u64> {
    let mut state = base;
    (0..count).map(|_| splitmix64(&mut state)).collect()
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut state = seed ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    pub mean_log: f64,
    pub sd_log: f64,
}

impl LogNormal {
    pub const fn new(mean_log: f64, sd_log: f64) -> Self {
        Self { mean_log, sd_log }
    }

    fn draw_log(&self, z: f64) -> f64 {
        self.mean_log + self.sd_log * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyCoefficients {
    pub intercept: f64,
    pub acpt: f64,
    pub sad: f64,
    pub voms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCoefficients {
    pub intercept: f64,
    pub evrh: f64,
    pub afpt: f64,
}

impl SupplyCoefficients {
    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.intercept, self.acpt, self.sad, self.voms]
    }
}

impl DemandCoefficients {
    pub fn as_vec(&self) -> Vec<f64> {
        vec![self.intercept, self.evrh, self.afpt]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_agencies: usize,
    pub n_years: usize,
    pub first_year: i32,
    pub supply: SupplyCoefficients,
    pub demand: DemandCoefficients,
    pub sigma_supply: f64,
    pub sigma_demand: f64,
    /// Correlation of the supply and demand disturbances.
    pub rho: f64,
    pub acpt: LogNormal,
    pub sad: LogNormal,
    pub voms: LogNormal,
    pub afpt: LogNormal,
    pub service_area: LogNormal,
    pub trip_length: LogNormal,
    /// Revenue miles per revenue hour.
    pub speed: LogNormal,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_agencies: 606,
            n_years: 17,
            first_year: 2002,
            supply: SupplyCoefficients {
                intercept: 4.06,
                acpt: 0.22,
                sad: 0.12,
                voms: 0.14,
            },
            demand: DemandCoefficients {
                intercept: 5.38,
                evrh: 0.98,
                afpt: -0.13,
            },
            sigma_supply: 0.5,
            sigma_demand: 0.5,
            rho: 0.5,
            // Roughly $8 per trip, 2,000 persons per square mile, a peak
            // fleet of 60 and $1.20 per trip, with wide agency spread.
            acpt: LogNormal::new(8f64.ln(), 0.8),
            sad: LogNormal::new(2000f64.ln(), 1.0),
            voms: LogNormal::new(60f64.ln(), 1.8),
            afpt: LogNormal::new(1.2f64.ln(), 0.8),
            service_area: LogNormal::new(150f64.ln(), 1.2),
            trip_length: LogNormal::new(5f64.ln(), 0.35),
            speed: LogNormal::new(14f64.ln(), 0.2),
            seed: CALIBRATED_SEED,
        }
    }
}

impl SynthConfig {
    pub fn n_rows(&self) -> usize {
        self.n_agencies * self.n_years
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_rows() == 0 {
            return bad("n_agencies * n_years must be at least 1".into());
        }
        if i32::try_from(self.n_years)
            .ok()
            .and_then(|n| self.first_year.checked_add(n))
            .is_none()
        {
            return bad("year range overflows".into());
        }
        for (name, s) in [
            ("sigma_supply", self.sigma_supply),
            ("sigma_demand", self.sigma_demand),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return bad(format!("{name} must be finite and nonnegative, got {s}"));
            }
        }
        if !(self.rho.abs() <= 1.0) {
            return bad(format!("rho must lie in [-1, 1], got {}", self.rho));
        }
        for (name, d) in self.distributions() {
            if !(d.sd_log >= 0.0 && d.sd_log.is_finite() && d.mean_log.is_finite()) {
                return bad(format!("{name} distribution is invalid: {d:?}"));
            }
        }
        let coefs = self.supply.as_vec().into_iter().chain(self.demand.as_vec());
        if coefs.into_iter().any(|c| !c.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        Ok(())
    }

    fn distributions(&self) -> [(&'static str, LogNormal); 7] {
        [
            ("acpt", self.acpt),
            ("sad", self.sad),
            ("voms", self.voms),
            ("afpt", self.afpt),
            ("service_area", self.service_area),
            ("trip_length", self.trip_length),
            ("speed", self.speed),
        ]
    }

    /// Ground-truth sidecar contents.
    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.push("seed", self.seed);
        kv.push("n_agencies", self.n_agencies);
        kv.push("n_years", self.n_years);
        kv.push("first_year", self.first_year);
        kv.push("supply.intercept", self.supply.intercept);
        kv.push("supply.acpt", self.supply.acpt);
        kv.push("supply.sad", self.supply.sad);
        kv.push("supply.voms", self.supply.voms);
        kv.push("demand.intercept", self.demand.intercept);
        kv.push("demand.evrh", self.demand.evrh);
        kv.push("demand.afpt", self.demand.afpt);
        kv.push("sigma_supply", self.sigma_supply);
        kv.push("sigma_demand", self.sigma_demand);
        kv.push("rho", self.rho);
        for (name, d) in self.distributions() {
            kv.push(format!("{name}.mean_log"), d.mean_log);
            kv.push(format!("{name}.sd_log"), d.sd_log);
        }
        kv
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let dist = |name: &str| -> Result<LogNormal> {
            Ok(LogNormal::new(
                kv.parse(&format!("{name}.mean_log"))?,
                kv.parse(&format!("{name}.sd_log"))?,
            ))
        };
        let config = Self {
            n_agencies: kv.parse("n_agencies")?,
            n_years: kv.parse("n_years")?,
            first_year: kv.parse("first_year")?,
            supply: SupplyCoefficients {
                intercept: kv.parse("supply.intercept")?,
                acpt: kv.parse("supply.acpt")?,
                sad: kv.parse("supply.sad")?,
                voms: kv.parse("supply.voms")?,
            },
            demand: DemandCoefficients {
                intercept: kv.parse("demand.intercept")?,
                evrh: kv.parse("demand.evrh")?,
                afpt: kv.parse("demand.afpt")?,
            },
            sigma_supply: kv.parse("sigma_supply")?,
            sigma_demand: kv.parse("sigma_demand")?,
            rho: kv.parse("rho")?,
            acpt: dist("acpt")?,
            sad: dist("sad")?,
            voms: dist("voms")?,
            afpt: dist("afpt")?,
            service_area: dist("service_area")?,
            trip_length: dist("trip_length")?,
            speed: dist("speed")?,
            seed: kv.parse("seed")?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub records: Vec<DerivedRecord>,
    /// `(u_s, u_d)` per record, in log space.
    pub disturbances: Vec<(f64, f64)>,
    pub config: SynthConfig,
}

impl SynthDataset {
    pub fn raw_records(&self) -> Vec<AgencyYearRecord> {
        self.records.iter().map(|r| r.base.clone()).collect()
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_rows();
    let mut records = Vec::with_capacity(n);
    let mut disturbances = Vec::with_capacity(n);
    let rho_c = (1.0 - config.rho * config.rho).max(0.0).sqrt();
    let s = &config.supply;
    let d = &config.demand;

    for agency in 0..config.n_agencies {
        let agency_id = format!("A{:05}", agency + 1);
        for t in 0..config.n_years {
            let mut z = [0.0f64; 9];
            for zi in &mut z {
                *zi = rng.sample(StandardNormal);
            }
            let l_acpt = config.acpt.draw_log(z[0]);
            let l_sad = config.sad.draw_log(z[1]);
            let l_voms = config.voms.draw_log(z[2]);
            let l_afpt = config.afpt.draw_log(z[3]);
            let l_area = config.service_area.draw_log(z[4]);
            let l_trip = config.trip_length.draw_log(z[5]);
            let l_speed = config.speed.draw_log(z[6]);
            let u_s = config.sigma_supply * z[7];
            let u_d = config.sigma_demand * (config.rho * z[7] + rho_c * z[8]);

            let l_vrh = s.intercept + s.acpt * l_acpt + s.sad * l_sad + s.voms * l_voms + u_s;
            let l_tupt = d.intercept + d.evrh * l_vrh + d.afpt * l_afpt + u_d;

            let vrh = l_vrh.exp();
            let tupt = l_tupt.exp();
            let area = l_area.exp();
            let trip_length = l_trip.exp();
            let mut r = AgencyYearRecord::new(agency_id.clone(), config.first_year + t as i32);
            r.vrh = Some(vrh);
            r.tupt = Some(tupt);
            r.voms = Some(l_voms.exp());
            r.passenger_miles = Some(tupt * trip_length);
            r.vrm = Some(vrh * l_speed.exp());
            r.avg_trip_length = Some(trip_length);
            r.service_area_population = Some(l_sad.exp() * area);
            r.service_area_sq_miles = Some(area);
            r.total_operating_cost = Some(l_acpt.exp() * tupt);
            r.total_fares = Some(l_afpt.exp() * tupt);

            records.push(derive_variables(&r));
            disturbances.push((u_s, u_d));
        }
    }
    Ok(SynthDataset {
        records,
        disturbances,
        config: config.clone(),
    })
}

/// Estimator of the demand response to supply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Estimator {
    /// Demand regressed on observed supply in one step.
    OlsDirect,
    /// Demand regressed on first-stage fitted supply.
    TwoStage,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::OlsDirect => "ols-direct",
            Estimator::TwoStage => "two-stage",
        }
    }

    /// Supply slope of the demand equation estimated on `records`.
    pub fn demand_slope(self, records: &[DerivedRecord]) -> Result<f64> {
        match self {
            Estimator::OlsDirect => {
                let (frame, _) =
                    build_model_frame(records, "tupt", &["vrh", "afpt"], &LogPolicy::All)?;
                let fit = fit_ols(&frame, &CriticalValues::default())?;
                Ok(fit.coefficient("vrh").expect("vrh is a regressor").estimate)
            }
            Estimator::TwoStage => {
                let res = fit_two_stage(
                    records,
                    &StageSpec::default_supply(),
                    &StageSpec::default_demand(),
                    SeMode::Naive,
                )?;
                Ok(res
                    .demand
                    .fit
                    .coefficient(EVRH)
                    .expect("evrh is a regressor")
                    .estimate)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub estimator: Estimator,
    pub sample_size: usize,
    pub replications: usize,
    pub mean_bias: f64,
    pub std_dev: f64,
    pub median_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasTable {
    pub truth: f64,
    pub rho: f64,
    pub rows: Vec<BiasRow>,
}

impl BiasTable {
    pub fn row(&self, estimator: Estimator, sample_size: usize) -> Option<&BiasRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.sample_size == sample_size)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("estimator,n,replications,mean_bias,std_dev,median_abs_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.estimator.name(),
                r.sample_size,
                r.replications,
                r.mean_bias,
                r.std_dev,
                r.median_abs_error
            ));
        }
        out
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

fn summarize(estimator: Estimator, sample_size: usize, truth: f64, estimates: &[f64]) -> BiasRow {
    let reps = estimates.len();
    let errors: Vec<f64> = estimates.iter().map(|e| e - truth).collect();
    let mean_bias = errors.iter().sum::<f64>() / reps as f64;
    let std_dev = if reps > 1 {
        let mean = estimates.iter().sum::<f64>() / reps as f64;
        let ss: f64 = estimates.iter().map(|e| (e - mean).powi(2)).sum();
        (ss / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    BiasRow {
        estimator,
        sample_size,
        replications: reps,
        mean_bias,
        std_dev,
        median_abs_error: median(&mut abs),
    }
}

/// Mean bias, spread and median absolute error of the demand slope for each
/// estimator and sample size.
///
/// Each replication draws a single-year panel of `sample_size` agencies from
/// `config`, seeded by mixing the replication seed with the sample size, and
/// every estimator is applied to the same draw. Replications run in
/// parallel; results do not depend on scheduling.
pub fn bias_experiment(
    config: &SynthConfig,
    estimators: &[Estimator],
    seeds: &[u64],
    sample_sizes: &[usize],
) -> Result<BiasTable> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("at least one replication is required".into()));
    }
    if sample_sizes.contains(&0) {
        return Err(Error::Config("sample sizes must be positive".into()));
    }
    let truth = config.demand.evrh;
    let mut rows = Vec::new();
    for &n in sample_sizes {
        let per_rep: Vec<Vec<f64>> = seeds
            .par_iter()
            .map(|&seed| {
                let cfg = SynthConfig {
                    n_agencies: n,
                    n_years: 1,
                    seed: mix(seed, n as u64),
                    ..config.clone()
                };
                let data = generate(&cfg)?;
                estimators
                    .iter()
                    .map(|e| e.demand_slope(&data.records))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        for (j, &estimator) in estimators.iter().enumerate() {
            let estimates: Vec<f64> = per_rep.iter().map(|v| v[j]).collect();
            rows.push(summarize(estimator, n, truth, &estimates));
        }
    }
    Ok(BiasTable {
        truth,
        rho: config.rho,
        rows,
    })
}

/// Pass/fail thresholds applied to a bias table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub max_two_stage_bias: f64,
    pub min_ols_bias: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_two_stage_bias: 0.05,
            min_ols_bias: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

/// Checks the largest sample size against the thresholds and, at every
/// sample size, that the two-stage bias is smaller than the OLS bias.
pub fn verdict(table: &BiasTable, thresholds: &Thresholds) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut sizes: Vec<usize> = table.rows.iter().map(|r| r.sample_size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for &n in &sizes {
        if let (Some(ts), Some(ols)) = (
            table.row(Estimator::TwoStage, n),
            table.row(Estimator::OlsDirect, n),
        ) {
            checks.push(Check {
                name: format!("n={n}: |two-stage bias| < |ols-direct bias|"),
                passed: ts.mean_bias.abs() < ols.mean_bias.abs(),
            });
        }
    }
    if let Some(&n) = sizes.last() {
        if let Some(ts) = table.row(Estimator::TwoStage, n) {
            checks.push(Check {
                name: format!(
                    "n={n}: |two-stage bias| < {}",
                    thresholds.max_two_stage_bias
                ),
                passed: ts.mean_bias.abs() < thresholds.max_two_stage_bias,
            });
        }
        if let Some(ols) = table.row(Estimator::OlsDirect, n) {
            checks.push(Check {
                name: format!("n={n}: |ols-direct bias| > {}", thresholds.min_ols_bias),
                passed: ols.mean_bias.abs() > thresholds.min_ols_bias,
            });
        }
    }
    checks
}
