//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! of them fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use transit_sls::descriptive::yearly_mean;
use transit_sls::frame::ModelFrame;
use transit_sls::ingest::{parse_dataset, ParseOptions, Schema};
use transit_sls::record::{derive_all, derive_variables, AgencyYearRecord, DerivedRecord};
use transit_sls::regress::{
    adjusted_r_squared, fit_ols, mae, rmse, solve_least_squares, t_test, CriticalValues,
    DesignMatrix,
};
use transit_sls::synth::{bias_experiment, generate, shipped_seeds, Estimator, SynthConfig};
use transit_sls::tsls::{fit_two_stage, SeMode, StageSpec};

const BIN: &str = env!("CARGO_BIN_EXE_transit-sls");
const PROPERTY_CASES: u32 = 1000;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within_time(started: Instant, limit: Duration) -> Outcome {
    let took = started.elapsed();
    check(
        took < limit,
        format!("{:.2?}", took),
        format!("took {:.2?}, limit {:?}", took, limit),
    )
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn hand_oracle_ols() -> Outcome {
    let started = Instant::now();
    let frame = ModelFrame::from_columns(
        "y",
        vec![1.0, 2.0, 4.0],
        vec![("x".into(), vec![1.0, 2.0, 3.0])],
    )
    .map_err(|e| e.to_string())?;
    let fit = fit_ols(&frame, &CriticalValues::default()).map_err(|e| e.to_string())?;
    let got = [
        ("intercept", fit.intercept().estimate, -2.0 / 3.0),
        ("slope", fit.slopes()[0].estimate, 1.5),
        ("adj_r2", fit.diagnostics.adjusted_r_squared, 13.0 / 14.0),
        ("mae", fit.diagnostics.mae, 2.0 / 9.0),
        ("rmse", fit.diagnostics.rmse, (1.0f64 / 18.0).sqrt()),
    ];
    for (name, g, w) in got {
        if (g - w).abs() > 1e-10 {
            return Err(format!("{name} = {g}, expected {w}"));
        }
    }
    within_time(started, Duration::from_secs(1))
}

fn noiseless_recovery() -> Outcome {
    let cfg = SynthConfig {
        n_agencies: 10_000,
        n_years: 1,
        sigma_supply: 0.0,
        sigma_demand: 0.0,
        ..Default::default()
    };
    let data = generate(&cfg).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let res = fit_two_stage(
        &data.records,
        &StageSpec::default_supply(),
        &StageSpec::default_demand(),
        SeMode::Naive,
    )
    .map_err(|e| e.to_string())?;
    let elapsed = within_time(started, Duration::from_secs(5))?;
    let pairs = res
        .supply
        .fit
        .estimates()
        .into_iter()
        .zip(cfg.supply.as_vec())
        .chain(
            res.demand
                .fit
                .estimates()
                .into_iter()
                .zip(cfg.demand.as_vec()),
        );
    let mut worst = 0.0f64;
    for (g, w) in pairs {
        worst = worst.max((g - w).abs() / w.abs());
    }
    check(
        worst <= 1e-8,
        format!("max rel error {worst:.1e}, fit {elapsed}"),
        format!("max rel error {worst:.1e} exceeds 1e-8"),
    )
}

fn simultaneity_oracle() -> Outcome {
    let started = Instant::now();
    let cfg = SynthConfig {
        rho: 0.8,
        ..Default::default()
    };
    let seeds = shipped_seeds();
    if seeds.len() != 200 {
        return Err(format!("shipped seed list has {} entries", seeds.len()));
    }
    let table = bias_experiment(
        &cfg,
        &[Estimator::OlsDirect, Estimator::TwoStage],
        &seeds,
        &[10_000],
    )
    .map_err(|e| e.to_string())?;
    let elapsed = within_time(started, Duration::from_secs(120))?;
    let ols = table
        .row(Estimator::OlsDirect, 10_000)
        .unwrap()
        .mean_bias
        .abs();
    let tsls = table
        .row(Estimator::TwoStage, 10_000)
        .unwrap()
        .mean_bias
        .abs();
    let summary = format!("|2sls bias| {tsls:.4}, |ols bias| {ols:.4}");
    check(
        tsls < 0.05 && tsls < ols && ols > 0.10,
        format!("{summary}, {elapsed}"),
        summary,
    )
}

fn sign_reproduction() -> Outcome {
    let file = fs::File::open(data_dir().join("calibrated.csv")).map_err(|e| e.to_string())?;
    let (records, _) = parse_dataset(file, &Schema::default(), &ParseOptions::default())
        .map_err(|e| e.to_string())?;
    let res = fit_two_stage(
        &derive_all(&records),
        &StageSpec::default_supply(),
        &StageSpec::default_demand(),
        SeMode::Naive,
    )
    .map_err(|e| e.to_string())?;
    let expected = [
        (&res.supply.fit, "acpt", 1.0),
        (&res.supply.fit, "sad", 1.0),
        (&res.supply.fit, "voms", 1.0),
        (&res.demand.fit, "evrh", 1.0),
        (&res.demand.fit, "afpt", -1.0),
    ];
    for (fit, name, sign) in expected {
        let c = fit
            .coefficient(name)
            .ok_or_else(|| format!("{name} missing"))?;
        if c.estimate * sign <= 0.0 {
            return Err(format!("{name} = {} has the wrong sign", c.estimate));
        }
    }
    for c in res
        .supply
        .fit
        .coefficients
        .iter()
        .chain(&res.demand.fit.coefficients)
    {
        if c.decision() != "Significant" {
            return Err(format!(
                "{} is {} (t = {:.3})",
                c.name,
                c.decision(),
                c.t_statistic
            ));
        }
    }
    Ok("signs and decisions match".into())
}

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner()
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

/// Exact normal-equation solution of small integer problems by Cramer's rule.
fn normal_equations(rows: &[Vec<i64>], y: &[i64]) -> Option<Vec<f64>> {
    let k = rows[0].len();
    let mut a = vec![vec![0i128; k]; k];
    let mut b = vec![0i128; k];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            b[i] += (r[i] * yi) as i128;
            for j in 0..k {
                a[i][j] += (r[i] * r[j]) as i128;
            }
        }
    }
    fn det(m: &[Vec<i128>]) -> i128 {
        match m.len() {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }
    let d = det(&a);
    if d == 0 {
        return None;
    }
    Some(
        (0..k)
            .map(|j| {
                let mut aj = a.clone();
                for i in 0..k {
                    aj[i][j] = b[i];
                }
                det(&aj) as f64 / d as f64
            })
            .collect(),
    )
}

fn diagnostics_invariants() -> Outcome {
    let pairs = prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..60);
    run_property("rmse >= mae", pairs, |pairs| {
        let (obs, fit): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = mae(&obs, &fit).unwrap();
        let r = rmse(&obs, &fit).unwrap();
        prop_assert!(r >= m * (1.0 - 1e-12), "rmse {} < mae {}", r, m);
        Ok(())
    })?;

    // Half the cases use exact fits so both directions of the equivalence
    // are exercised.
    let fits = (
        prop::collection::vec(-50i32..50, 4..30),
        prop::collection::vec(-3i32..=3, 4..30),
        any::<bool>(),
    );
    run_property(
        "adjusted r2 = 1 iff zero residuals",
        fits,
        |(obs, noise, exact)| {
            let n = obs.len().min(noise.len());
            let obs: Vec<f64> = obs[..n].iter().map(|&v| v as f64).collect();
            prop_assume!(obs.iter().any(|&v| v != obs[0]));
            let fit: Vec<f64> = if exact {
                obs.clone()
            } else {
                obs.iter().zip(&noise).map(|(o, &e)| o + e as f64).collect()
            };
            let zero = obs.iter().zip(&fit).all(|(o, f)| o == f);
            let r2 = adjusted_r_squared(&obs, &fit, 2).unwrap();
            prop_assert_eq!(r2 == 1.0, zero);
            Ok(())
        },
    )?;

    let problems = (1usize..=4).prop_flat_map(|k| {
        ((k + 2)..=40).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-100.0f64..100.0, k), n),
                prop::collection::vec(-100.0f64..100.0, n),
            )
        })
    });
    run_property("orthogonality", problems, |(rows, y)| {
        let design = DesignMatrix::from_rows(&rows).unwrap();
        let Ok(ls) = solve_least_squares(&design, &y) else {
            return Ok(());
        };
        let resid: Vec<f64> = rows
            .iter()
            .zip(&y)
            .map(|(r, yi)| {
                yi - r
                    .iter()
                    .zip(&ls.coefficients)
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
            })
            .collect();
        let max_x = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = max_x * max_y.max(1.0) * y.len() as f64;
        for col in design.columns() {
            let dot: f64 = col.iter().zip(&resid).map(|(x, e)| x * e).sum();
            prop_assert!(dot.abs() <= 1e-8 * scale, "|X'e| = {}", dot);
        }
        Ok(())
    })?;

    let tests = (-1e3f64..1e3, 1e-3f64..1e3, 0.5f64..3.0, 1e-3f64..1e3);
    run_property(
        "t_test scale invariance",
        tests,
        |(est, se, crit, scale)| {
            let a = t_test(est, se, crit).unwrap();
            let b = t_test(est * scale, se * scale, crit).unwrap();
            prop_assert_eq!(a.significant, b.significant);
            Ok(())
        },
    )?;

    let integer = (1usize..=3).prop_flat_map(|k| {
        ((k + 1)..=12).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-9i64..=9, k), n),
                prop::collection::vec(-20i64..=20, n),
            )
        })
    });
    run_property("qr vs normal equations", integer, |(rows, y)| {
        let Some(oracle) = normal_equations(&rows, &y) else {
            return Ok(());
        };
        let rows_f: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect();
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let ls = solve_least_squares(&DesignMatrix::from_rows(&rows_f).unwrap(), &yf).unwrap();
        for (g, w) in ls.coefficients.iter().zip(&oracle) {
            prop_assert!((g - w).abs() <= 1e-8 * w.abs().max(1.0), "{} vs {}", g, w);
        }
        Ok(())
    })?;
    Ok(format!("5 properties x {PROPERTY_CASES} cases"))
}

fn descriptive_oracle() -> Outcome {
    let datasets = prop::collection::vec((2002i32..=2018, prop::option::of(0.0f64..1e7)), 0..200);
    let mut runner = TestRunner::new(Config {
        cases: 500,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&datasets, |rows| {
            let records: Vec<DerivedRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, &(year, vrh))| {
                    let mut r = AgencyYearRecord::new(format!("A{i}"), year);
                    r.vrh = vrh;
                    derive_variables(&r)
                })
                .collect();
            let series = yearly_mean(&records, "vrh").unwrap();
            let mut expected = 0;
            for year in 2002..=2018 {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|(y, _)| *y == year)
                    .filter_map(|(_, v)| *v)
                    .collect();
                if vals.is_empty() {
                    prop_assert!(series.point(year).is_none());
                    continue;
                }
                expected += 1;
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let p = series.point(year).unwrap();
                prop_assert_eq!(p.count, vals.len());
                prop_assert!(
                    (p.mean - mean).abs() <= 1e-12 * mean.abs(),
                    "{} vs {}",
                    p.mean,
                    mean
                );
            }
            prop_assert_eq!(series.points.len(), expected);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("500 datasets".into())
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = data_dir().join("calibrated.csv");
    let commands: [&[&str]; 2] = [
        &["validate"],
        &["fit-2sls", "--input", input.to_str().unwrap()],
    ];
    let mut compared = 0;
    for args in commands {
        let mut runs = Vec::new();
        for i in 0..2 {
            let out = tmp.path().join(format!("{}-{i}", args[0]));
            let status = Command::new(BIN)
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "{} failed: {}",
                    args[0],
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            runs.push(snapshot(&out));
        }
        if runs[0].is_empty() {
            return Err(format!("{} wrote no files", args[0]));
        }
        if runs[0] != runs[1] {
            return Err(format!("{} outputs differ between runs", args[0]));
        }
        compared += runs[0].len();
    }
    Ok(format!("{compared} files identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("hand-oracle OLS", hand_oracle_ols),
        ("noiseless recovery", noiseless_recovery),
        ("simultaneity oracle", simultaneity_oracle),
        ("sign reproduction", sign_reproduction),
        ("diagnostics invariants", diagnostics_invariants),
        ("descriptive oracle", descriptive_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
