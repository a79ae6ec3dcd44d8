//! Urban transit supply and demand estimation from agency-year records.
//!
//! The pipeline reads agency-year tables ([`ingest`]), derives ratio
//! variables ([`record`]), builds log-transformed model frames ([`frame`]),
//! estimates a supply equation by OLS and feeds its fitted values into a
//! demand equation ([`tsls`]). [`synth`] generates data with known
//! coefficients and simultaneity to check the estimators.

pub mod cli;
pub mod descriptive;
pub mod error;
pub mod frame;
pub mod ingest;
pub mod kv;
pub mod record;
pub mod regress;
pub mod report;
pub mod synth;
pub mod tsls;

pub use error::{Error, Result, Stage};
pub use frame::{build_model_frame, LogPolicy, ModelFrame};
pub use ingest::{parse_dataset, write_dataset, ExclusionReport, ParseOptions, Schema};
pub use record::{derive_all, derive_variables, AgencyYearRecord, DerivedRecord, Variable};
pub use regress::{fit_ols, predict, CriticalValues, FitResult};
pub use tsls::{fit_demand, fit_supply, fit_two_stage, SeMode, StageSpec, TwoStageResult};
