//! Agency-year records and the model variables derived from them.

use std::fmt;

use crate::error::{Error, Result};

/// Every numeric quantity a record can carry, raw or derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Vrh,
    Tupt,
    Voms,
    PassengerMiles,
    Vrm,
    AvgTripLength,
    ServiceAreaPopulation,
    ServiceAreaSqMiles,
    TotalOperatingCost,
    TotalFares,
    Sad,
    Acpt,
    Afpt,
}

impl Variable {
    /// Fields read directly from an input table.
    pub const RAW: [Variable; 10] = [
        Variable::Vrh,
        Variable::Tupt,
        Variable::Voms,
        Variable::PassengerMiles,
        Variable::Vrm,
        Variable::AvgTripLength,
        Variable::ServiceAreaPopulation,
        Variable::ServiceAreaSqMiles,
        Variable::TotalOperatingCost,
        Variable::TotalFares,
    ];

    pub const ALL: [Variable; 13] = [
        Variable::Vrh,
        Variable::Tupt,
        Variable::Voms,
        Variable::PassengerMiles,
        Variable::Vrm,
        Variable::AvgTripLength,
        Variable::ServiceAreaPopulation,
        Variable::ServiceAreaSqMiles,
        Variable::TotalOperatingCost,
        Variable::TotalFares,
        Variable::Sad,
        Variable::Acpt,
        Variable::Afpt,
    ];

    /// The nine metrics tracked over time by the descriptive tables.
    pub const TRACKED: [Variable; 9] = [
        Variable::Vrh,
        Variable::Tupt,
        Variable::AvgTripLength,
        Variable::Voms,
        Variable::PassengerMiles,
        Variable::Sad,
        Variable::Acpt,
        Variable::Afpt,
        Variable::Vrm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Vrh => "vrh",
            Variable::Tupt => "tupt",
            Variable::Voms => "voms",
            Variable::PassengerMiles => "passenger_miles",
            Variable::Vrm => "vrm",
            Variable::AvgTripLength => "avg_trip_length",
            Variable::ServiceAreaPopulation => "service_area_population",
            Variable::ServiceAreaSqMiles => "service_area_sq_miles",
            Variable::TotalOperatingCost => "total_operating_cost",
            Variable::TotalFares => "total_fares",
            Variable::Sad => "sad",
            Variable::Acpt => "acpt",
            Variable::Afpt => "afpt",
        }
    }

    /// Upper-case label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Variable::Vrh => "VRH",
            Variable::Tupt => "TUPT",
            Variable::Voms => "AVOMS",
            Variable::PassengerMiles => "PMT",
            Variable::Vrm => "VRM",
            Variable::AvgTripLength => "ATL",
            Variable::ServiceAreaPopulation => "POP",
            Variable::ServiceAreaSqMiles => "AREA",
            Variable::TotalOperatingCost => "COST",
            Variable::TotalFares => "FARES",
            Variable::Sad => "SAD",
            Variable::Acpt => "ACPT",
            Variable::Afpt => "AFPT",
        }
    }

    /// Case-insensitive lookup by name or table label (`avoms` maps to `voms`).
    pub fn from_name(name: &str) -> Result<Variable> {
        let lower = name.trim().to_ascii_lowercase();
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == lower || v.label().eq_ignore_ascii_case(&lower))
            .ok_or_else(|| Error::Schema(format!("unknown variable `{name}`")))
    }

    pub fn is_derived(self) -> bool {
        matches!(self, Variable::Sad | Variable::Acpt | Variable::Afpt)
    }

    /// Denominator of a derived ratio.
    pub fn denominator(self) -> Option<Variable> {
        match self {
            Variable::Sad => Some(Variable::ServiceAreaSqMiles),
            Variable::Acpt | Variable::Afpt => Some(Variable::Tupt),
            _ => None,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One agency's reported metrics for one fiscal year.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgencyYearRecord {
    pub agency_id: String,
    pub year: i32,
    pub vrh: Option<f64>,
    pub tupt: Option<f64>,
    pub voms: Option<f64>,
    pub passenger_miles: Option<f64>,
    pub vrm: Option<f64>,
    pub avg_trip_length: Option<f64>,
    pub service_area_population: Option<f64>,
    pub service_area_sq_miles: Option<f64>,
    pub total_operating_cost: Option<f64>,
    pub total_fares: Option<f64>,
}

impl AgencyYearRecord {
    pub fn new(agency_id: impl Into<String>, year: i32) -> Self {
        Self {
            agency_id: agency_id.into(),
            year,
            ..Default::default()
        }
    }

    /// Raw field value; derived variables always read as `None` here.
    pub fn get(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::Vrh => self.vrh,
            Variable::Tupt => self.tupt,
            Variable::Voms => self.voms,
            Variable::PassengerMiles => self.passenger_miles,
            Variable::Vrm => self.vrm,
            Variable::AvgTripLength => self.avg_trip_length,
            Variable::ServiceAreaPopulation => self.service_area_population,
            Variable::ServiceAreaSqMiles => self.service_area_sq_miles,
            Variable::TotalOperatingCost => self.total_operating_cost,
            Variable::TotalFares => self.total_fares,
            Variable::Sad | Variable::Acpt | Variable::Afpt => None,
        }
    }

    /// Sets a raw field. Panics on a derived variable.
    pub fn set(&mut self, var: Variable, value: Option<f64>) {
        let slot = match var {
            Variable::Vrh => &mut self.vrh,
            Variable::Tupt => &mut self.tupt,
            Variable::Voms => &mut self.voms,
            Variable::PassengerMiles => &mut self.passenger_miles,
            Variable::Vrm => &mut self.vrm,
            Variable::AvgTripLength => &mut self.avg_trip_length,
            Variable::ServiceAreaPopulation => &mut self.service_area_population,
            Variable::ServiceAreaSqMiles => &mut self.service_area_sq_miles,
            Variable::TotalOperatingCost => &mut self.total_operating_cost,
            Variable::TotalFares => &mut self.total_fares,
            Variable::Sad | Variable::Acpt | Variable::Afpt => {
                panic!("cannot set derived variable `{var}` on a raw record")
            }
        };
        *slot = value;
    }
}

/// A raw record plus service area density, cost per trip and fare per trip.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRecord {
    pub base: AgencyYearRecord,
    pub sad: Option<f64>,
    pub acpt: Option<f64>,
    pub afpt: Option<f64>,
}

impl DerivedRecord {
    pub fn get(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::Sad => self.sad,
            Variable::Acpt => self.acpt,
            Variable::Afpt => self.afpt,
            raw => self.base.get(raw),
        }
    }

    pub fn agency_id(&self) -> &str {
        &self.base.agency_id
    }

    pub fn year(&self) -> i32 {
        self.base.year
    }
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => Some(n / d),
        _ => None,
    }
}

/// Computes the ratio variables. Undefined divisions come back as `None`.
pub fn derive_variables(record: &AgencyYearRecord) -> DerivedRecord {
    DerivedRecord {
        base: record.clone(),
        sad: ratio(record.service_area_population, record.service_area_sq_miles),
        acpt: ratio(record.total_operating_cost, record.tupt),
        afpt: ratio(record.total_fares, record.tupt),
    }
}

pub fn derive_all(records: &[AgencyYearRecord]) -> Vec<DerivedRecord> {
    records.iter().map(derive_variables).collect()
}
