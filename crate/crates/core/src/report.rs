//! Table and key-value renderings of estimation results.

use std::fmt::Write;

use crate::kv::KeyValues;
use crate::record::Variable;
use crate::regress::FitResult;
use crate::tsls::{TwoStageResult, EVRH};

/// Table label for a regressor or response name.
pub fn display_label(name: &str) -> String {
    if name.eq_ignore_ascii_case(EVRH) {
        return "EVRH".to_string();
    }
    Variable::from_name(name)
        .map(|v| v.label().to_string())
        .unwrap_or_else(|_| name.to_string())
}

/// Parameter table: one row per coefficient with estimate, t-value,
/// critical value and decision, followed by the fit diagnostics.
pub fn render_table(title: &str, fit: &FitResult) -> String {
    let mut out = String::new();
    let d = &fit.diagnostics;
    writeln!(out, "{title} (response: {})", display_label(&fit.response)).unwrap();
    writeln!(
        out,
        "{:<14} {:>12} {:>10} {:>11}  {}",
        "Parameter", "Estimate", "t-value", "t-critical", "Decision"
    )
    .unwrap();
    for c in &fit.coefficients {
        writeln!(
            out,
            "{:<14} {:>12.4} {:>10.2} {:>11.2}  {}",
            display_label(&c.name),
            c.estimate,
            c.t_statistic,
            c.critical_value,
            c.decision()
        )
        .unwrap();
    }
    writeln!(out, "{:<14} {:>12.3}", "Adjusted R²", d.adjusted_r_squared).unwrap();
    writeln!(out, "{:<14} {:>12.4}", "MAE", d.mae).unwrap();
    writeln!(out, "{:<14} {:>12.4}", "RMSE", d.rmse).unwrap();
    writeln!(out, "{:<14} {:>12}", "Observations", d.n).unwrap();
    out
}

/// Full-precision key-value form of a fit.
pub fn fit_key_values(model: &str, fit: &FitResult) -> KeyValues {
    let mut kv = KeyValues::new();
    let d = &fit.diagnostics;
    kv.push("model", model);
    kv.push("response", &fit.response);
    kv.push("observations", d.n);
    kv.push("parameters", d.k);
    for c in &fit.coefficients {
        let p = format!("param.{}", display_label(&c.name));
        kv.push(format!("{p}.estimate"), c.estimate);
        kv.push(format!("{p}.std_error"), c.standard_error);
        kv.push(format!("{p}.t_value"), c.t_statistic);
        kv.push(format!("{p}.t_critical"), c.critical_value);
        kv.push(format!("{p}.decision"), c.decision());
    }
    kv.push("adjusted_r_squared", d.adjusted_r_squared);
    kv.push("r_squared", d.r_squared);
    kv.push("mae", d.mae);
    kv.push("rmse", d.rmse);
    kv
}

pub const SUPPLY_TITLE: &str = "Parameter Estimates for the Supply Model by Regression Analysis";
pub const DEMAND_TITLE: &str = "Parameter Estimates for the Demand Model by Regression Analysis";

pub fn alignment_summary(result: &TwoStageResult) -> String {
    let mut out = String::new();
    let s = &result.supply.exclusions;
    let d = &result.demand.exclusions;
    writeln!(out, "Row alignment").unwrap();
    writeln!(out, "  records in:                   {}", s.rows_in).unwrap();
    writeln!(out, "  supply rows:                  {}", s.rows_out).unwrap();
    writeln!(out, "  demand rows:                  {}", d.rows_out).unwrap();
    writeln!(
        out,
        "  dropped at supply stage:      {}",
        d.count(crate::ingest::ExclusionRule::ExcludedAtSupplyStage)
    )
    .unwrap();
    writeln!(
        out,
        "  demand standard errors:       {}",
        result.se_mode.name()
    )
    .unwrap();
    out
}

pub fn render_two_stage(result: &TwoStageResult) -> String {
    let mut out = render_table(SUPPLY_TITLE, &result.supply.fit);
    out.push('\n');
    out.push_str(&render_table(DEMAND_TITLE, &result.demand.fit));
    out.push('\n');
    out.push_str(&alignment_summary(result));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ModelFrame;
    use crate::regress::{fit_ols, CriticalValues};

    #[test]
    fn table_layout() {
        let frame = ModelFrame::from_columns(
            "tupt",
            vec![1.0, 3.0, 2.0],
            vec![("afpt".into(), vec![1.0, 2.0, 3.0])],
        )
        .unwrap();
        let fit = fit_ols(&frame, &CriticalValues::default()).unwrap();
        let table = render_table("Demo", &fit);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "Demo (response: TUPT)");
        assert!(lines[1].starts_with("Parameter"));
        assert!(lines[2].starts_with("Intercept"));
        assert!(lines[3].starts_with("AFPT"));
        assert!(lines[3].ends_with("Not significant"));
        assert_eq!(lines[7], "Observations              3");

        let kv = fit_key_values("demo", &fit);
        assert_eq!(
            kv.parse::<f64>("param.AFPT.estimate").unwrap(),
            fit.slopes()[0].estimate
        );
        assert_eq!(kv.get("param.AFPT.t_critical"), Some("1.65"));
    }
}
