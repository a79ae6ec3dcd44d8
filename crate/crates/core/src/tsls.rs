//! Two-stage estimation: a supply equation whose fitted values enter the
//! demand equation as the estimated supply regressor.

use crate::error::{Error, Result, Stage};
use crate::frame::{build_frame, ColumnSource, LogPolicy, ModelFrame};
use crate::ingest::ExclusionReport;
use crate::record::{DerivedRecord, Variable};
use crate::regress::{fit_ols, predict, CriticalValues, FitResult};

/// Name of the fitted-supply regressor in the demand equation.
pub const EVRH: &str = "evrh";

/// Response, regressors, transforms and critical values for one equation.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSpec {
    pub response: String,
    pub regressors: Vec<String>,
    pub log: LogPolicy,
    pub critical: CriticalValues,
}

impl StageSpec {
    pub fn new<S: Into<String>>(response: S, regressors: impl IntoIterator<Item = S>) -> Self {
        Self {
            response: response.into(),
            regressors: regressors.into_iter().map(Into::into).collect(),
            log: LogPolicy::All,
            critical: CriticalValues::default(),
        }
    }

    /// Vehicle revenue hours on cost per trip, service area density and
    /// peak fleet, all in logs.
    pub fn default_supply() -> Self {
        Self::new("vrh", ["acpt", "sad", "voms"])
    }

    /// Unlinked trips on fitted revenue hours and fare per trip, in logs.
    pub fn default_demand() -> Self {
        Self::new("tupt", [EVRH, "afpt"])
    }

    fn sources<'a>(
        &'a self,
        evrh: Option<&'a [Option<f64>]>,
    ) -> Result<(ColumnSource<'a>, Vec<ColumnSource<'a>>)> {
        let response_var = Variable::from_name(&self.response)?;
        let response = ColumnSource::Var(response_var);
        let mut regressors = Vec::with_capacity(self.regressors.len());
        for name in &self.regressors {
            if name.eq_ignore_ascii_case(EVRH) {
                let values = evrh.ok_or_else(|| {
                    Error::Schema(format!("`{EVRH}` is only available in the demand equation"))
                })?;
                regressors.push(ColumnSource::External { name: EVRH, values });
            } else {
                let var = Variable::from_name(name)?;
                if var == response_var {
                    return Err(Error::Schema(format!(
                        "`{name}` is both response and regressor"
                    )));
                }
                regressors.push(ColumnSource::Var(var));
            }
        }
        Ok((response, regressors))
    }
}

/// One estimated equation with the frame it was fitted on.
#[derive(Debug, Clone)]
pub struct StageFit {
    pub fit: FitResult,
    pub frame: ModelFrame,
    pub exclusions: ExclusionReport,
}

pub fn fit_supply(dataset: &[DerivedRecord], spec: &StageSpec) -> Result<StageFit> {
    let (response, regressors) = spec.sources(None)?;
    let (frame, exclusions) = build_frame(dataset, response, &regressors, &spec.log)?;
    let fit = fit_ols(&frame, &spec.critical)?;
    Ok(StageFit {
        fit,
        frame,
        exclusions,
    })
}

/// Fits the demand equation. `evrh` holds one entry per dataset record:
/// the fitted supply value, or `None` where the supply stage dropped the row.
pub fn fit_demand(
    dataset: &[DerivedRecord],
    evrh: &[Option<f64>],
    spec: &StageSpec,
) -> Result<StageFit> {
    if evrh.len() != dataset.len() {
        return Err(Error::Shape(format!(
            "{EVRH} column has {} entries for {} records",
            evrh.len(),
            dataset.len()
        )));
    }
    if !spec.regressors.iter().any(|r| r.eq_ignore_ascii_case(EVRH)) {
        return Err(Error::Schema(format!(
            "demand equation must include `{EVRH}`"
        )));
    }
    let (response, regressors) = spec.sources(Some(evrh))?;
    let (frame, exclusions) = build_frame(dataset, response, &regressors, &spec.log)?;
    let fit = fit_ols(&frame, &spec.critical)?;
    Ok(StageFit {
        fit,
        frame,
        exclusions,
    })
}

/// Standard errors reported for the demand equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeMode {
    /// Plain OLS errors of the second-stage regression.
    #[default]
    Naive,
    /// Residual variance recomputed with observed supply in place of the
    /// fitted values.
    Corrected,
}

impl SeMode {
    pub fn name(self) -> &'static str {
        match self {
            SeMode::Naive => "naive",
            SeMode::Corrected => "corrected",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoStageResult {
    pub supply: StageFit,
    pub demand: StageFit,
    /// Fitted supply for each demand-frame row.
    pub evrh: Vec<f64>,
    /// For each demand-frame row, its row position in the supply frame.
    pub alignment: Vec<usize>,
    pub se_mode: SeMode,
}

pub fn fit_two_stage(
    dataset: &[DerivedRecord],
    supply_spec: &StageSpec,
    demand_spec: &StageSpec,
    se_mode: SeMode,
) -> Result<TwoStageResult> {
    let supply = fit_supply(dataset, supply_spec).map_err(|e| e.in_stage(Stage::Supply))?;
    let supply_fitted =
        predict(&supply.fit, &supply.frame).map_err(|e| e.in_stage(Stage::Supply))?;

    let mut evrh_by_record = vec![None; dataset.len()];
    let mut supply_position = vec![None; dataset.len()];
    for (pos, (row, v)) in supply.frame.rows().iter().zip(&supply_fitted).enumerate() {
        evrh_by_record[row.index] = Some(*v);
        supply_position[row.index] = Some(pos);
    }

    let mut demand =
        fit_demand(dataset, &evrh_by_record, demand_spec).map_err(|e| e.in_stage(Stage::Demand))?;

    let alignment: Vec<usize> = demand
        .frame
        .rows()
        .iter()
        .map(|r| supply_position[r.index].expect("demand rows are a subset of supply rows"))
        .collect();
    let evrh = demand
        .frame
        .column(EVRH)
        .expect("demand frame carries the fitted supply column")
        .to_vec();

    if se_mode == SeMode::Corrected {
        correct_demand_errors(&mut demand, &supply, &alignment)
            .map_err(|e| e.in_stage(Stage::Demand))?;
    }

    Ok(TwoStageResult {
        supply,
        demand,
        evrh,
        alignment,
        se_mode,
    })
}

fn correct_demand_errors(
    demand: &mut StageFit,
    supply: &StageFit,
    alignment: &[usize],
) -> Result<()> {
    let observed: Vec<f64> = alignment
        .iter()
        .map(|&p| supply.frame.response()[p])
        .collect();
    let structural = demand.frame.with_column(EVRH, observed)?;
    let predicted = predict(&demand.fit, &structural)?;
    let sse: f64 = structural
        .response()
        .iter()
        .zip(&predicted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    let d = &demand.fit.diagnostics;
    demand.fit.rescale_standard_errors(sse / (d.n - d.k) as f64)
}
