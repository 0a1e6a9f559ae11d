//! Config-driven experiment runner behind the `tbkit` binary.

mod config;

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::accretive::{check_system, CheckOptions, ConditionReport};
use crate::avgops::normalized_mexican_hat;
use crate::carleson::{theta_carleson, theta_divergence};
use crate::dyadic::subcubes;
use crate::error::{Error, Result};
use crate::paraproduct::{cz_sweep, test_cancellation, tb_condition, CzPlan, MultilinearOperator, Paraproduct, Scaled, TbOptions, ZeroOperator};
use crate::profile::{Profile, ProfileKind};
use crate::sqfn::bound_ratio;
use crate::stopping::{decompose, eta_bound, verify_lower_bound, StoppingOptions};

pub use config::*;

/// One checked inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), pass: value <= bound, value, bound }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), pass: value >= bound, value, bound }
    }
}

/// Discretisation parameters that bound the error of every number in a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorBudget {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_eps: Option<f64>,
    /// Weight `ln(t_max / t_min) / count` of each scale sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_res: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_arithmetic: Option<bool>,
    /// Finite-window truncation rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_truncation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub subcommand: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub error_budget: ErrorBudget,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// CSV detail written next to the summary.
    #[serde(skip)]
    pub csv: String,
}

impl Report {
    fn new(sub: &str, checks: Vec<Check>, error_budget: ErrorBudget, result: serde_json::Value, csv: String) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: "tbkit".into(),
            subcommand: sub.into(),
            pass: checks.iter().all(|c| c.pass),
            checks,
            error_budget,
            result,
            failure: None,
            csv,
        }
    }

    fn failed(sub: &str, err: &Error) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: "tbkit".into(),
            subcommand: sub.into(),
            pass: false,
            checks: Vec::new(),
            error_budget: ErrorBudget::default(),
            result: serde_json::Value::Null,
            failure: Some(err.to_string()),
            csv: String::new(),
        }
    }

    /// The JSON summary as written to disk.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Errors that mean a checked property failed rather than a bad config.
fn is_check_failure(e: &Error) -> bool {
    matches!(e, Error::NotAccretive { .. } | Error::Resource { .. })
}

/// Run a parsed config. `Err` means a usage or configuration problem.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Report> {
    let sub = cfg.subcommand();
    let out = match cfg {
        ExperimentConfig::CheckSystem(c) => run_check_system(c),
        ExperimentConfig::Decompose(c) => run_decompose(c),
        ExperimentConfig::Carleson(c) => run_carleson(c),
        ExperimentConfig::Sqfn(c) => run_sqfn(c),
        ExperimentConfig::Paraproduct(c) => run_paraproduct(c),
        ExperimentConfig::TbCondition(c) => run_tb(c),
    };
    match out {
        Err(e) if is_check_failure(&e) => Ok(Report::failed(sub, &e)),
        other => other,
    }
}

/// Load, run and write `<subcommand>.json` and `<subcommand>.csv` into `out`.
/// Returns the process exit code: 0 all checks pass, 1 a check failed,
/// 2 usage or configuration error.
pub fn run_cli(subcommand: &str, config: &Path, out: &Path) -> (i32, String) {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return (2, format!("config error: {e}")),
    };
    if cfg.subcommand() != subcommand {
        return (2, format!("config is for '{}', not '{subcommand}'", cfg.subcommand()));
    }
    let report = match run_config(&cfg) {
        Ok(r) => r,
        Err(e) => return (2, format!("config error: {e}")),
    };
    let write = || -> Result<()> {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join(format!("{subcommand}.json")), report.to_json())?;
        std::fs::write(out.join(format!("{subcommand}.csv")), &report.csv)?;
        Ok(())
    };
    if let Err(e) = write() {
        return (2, format!("cannot write reports: {e}"));
    }
    let mut summary = format!("{subcommand}: {}", if report.pass { "pass" } else { "FAIL" });
    for c in &report.checks {
        let _ = write!(summary, "\n  {} {}: {:?} (bound {:?})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
    }
    if let Some(f) = &report.failure {
        let _ = write!(summary, "\n  failure: {f}");
    }
    (report.exit_code(), summary)
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result serialises")
}

fn condition_checks(r: &ConditionReport, wanted: &[String]) -> Vec<Check> {
    let b = r.budgets;
    let all = [
        ("size", Check::at_most("size", r.b1, b.b1)),
        (
            "accretive_slots",
            Check {
                name: "accretive_slots".into(),
                pass: r.pass.accretive_slots,
                value: r.b2_slots.iter().cloned().fold(0.0, f64::max),
                bound: b.b2,
            },
        ),
        ("accretive_product", Check { name: "accretive_product".into(), pass: r.pass.accretive_product, value: r.b2, bound: b.b2 }),
        ("compatible", Check { name: "compatible".into(), pass: r.pass.compatible, value: r.b3_compat, bound: b.b3 }),
    ];
    all.into_iter().filter(|(k, _)| wanted.iter().any(|w| w == k)).map(|(_, c)| c).collect()
}

fn run_check_system(c: &CheckSystemConfig) -> Result<Report> {
    let sys = c.system.build()?;
    let opts = CheckOptions { h: c.h, floor: c.floor, budgets: c.budgets.budgets(), exact: c.exact, ..Default::default() };
    let r = check_system(&sys, &c.cube, &opts)?;
    let wanted: Vec<String> = c.checks.clone().unwrap_or_else(|| CHECK_NAMES.iter().map(|s| s.to_string()).collect());
    let mut csv = String::from("quantity,value\n");
    for (i, m) in r.slot_means.iter().enumerate() {
        let _ = writeln!(csv, "slot_mean_{},{:?}", i + 1, m);
    }
    let _ = writeln!(csv, "product_mean,{:?}\nb1,{:?}\nb2,{:?}\nb3,{:?}", r.product_mean, r.b1, r.b2, r.b3_compat);
    let budget = ErrorBudget { grid_spacing: (!r.exact).then_some(c.h), exact_arithmetic: Some(r.exact), ..Default::default() };
    Ok(Report::new("check-system", condition_checks(&r, &wanted), budget, to_value(&r), csv))
}

fn run_decompose(c: &DecomposeConfig) -> Result<Report> {
    let sys = c.system.build()?;
    let d = decompose(&sys, &c.cube, &StoppingOptions { h: c.h, floor: c.floor, exact: c.exact })?;
    let check = CheckOptions { h: c.h, floor: c.floor, exact: c.exact, ..Default::default() };
    let cond = check_system(&sys, &c.cube, &check)?;
    let q = crate::sqfn::IndexTuple::combined(&c.system.exponents)?;
    let eta = eta_bound(cond.b1, sys.len(), q);
    let mut checks = vec![Check::at_least("eta", d.eta_observed, eta)];
    let lower = match &c.lower_bound {
        Some(plan) => {
            let r = verify_lower_bound(&d, &sys, &check, plan)?;
            checks.push(Check::at_least("average_lower_bound", r.min_product, r.bound_power));
            Some(r)
        }
        None => None,
    };
    let mut csv = String::from("generation,corner,side\n");
    for cube in &d.selected {
        let corner: Vec<String> = cube.corner().iter().map(|k| k.to_string()).collect();
        let _ = writeln!(csv, "{},{},{:?}", cube.generation(), corner.join(" "), cube.side());
    }
    let budget = ErrorBudget { grid_spacing: Some(c.h), exact_arithmetic: Some(c.exact), ..Default::default() };
    let result = json!({ "decomposition": d, "b1": cond.b1, "eta_bound": eta, "q": q, "lower_bound": lower });
    Ok(Report::new("decompose", checks, budget, result, csv))
}

fn run_carleson(c: &CarlesonConfig) -> Result<Report> {
    let k = c.kernel.build()?;
    let family = subcubes(&c.family.root, c.family.depth, 1 << 16)?;
    let window = crate::gridfn::Grid::on_cube(&c.family.root, c.h)?;
    let r = theta_carleson(&k, &family, &window, &c.scales, None, c.tail_eps)?;
    let mut checks = Vec::new();
    if let Some(b) = c.budget {
        checks.push(Check::at_most("carleson_norm", r.norm, b));
    }
    let div = match c.divergence {
        Some(d) => Some(theta_divergence(&k, &c.family.root, d.octaves, d.per_octave, c.tail_eps)?),
        None => None,
    };
    let mut csv = String::from("generation,corner,mass,normalized\n");
    for t in &r.tents {
        let corner: Vec<String> = t.cube.corner().iter().map(|k| k.to_string()).collect();
        let _ = writeln!(csv, "{},{},{:?},{:?}", t.cube.generation(), corner.join(" "), t.mass, t.normalized);
    }
    let budget = ErrorBudget { grid_spacing: Some(c.h), tail_eps: Some(c.tail_eps), scale_weight: Some(c.scales.weight()), ..Default::default() };
    Ok(Report::new("carleson", checks, budget, json!({ "carleson": r, "divergence": div }), csv))
}

fn run_sqfn(c: &SqfnConfig) -> Result<Report> {
    let k = c.kernel.build()?;
    let mut rows = Vec::new();
    for &lambda in &c.dilations {
        let grid = c.window.dilated(lambda).grid()?;
        let fs = c
            .inputs
            .iter()
            .map(|f| if lambda == 1.0 { Ok(f.clone()) } else { f.dilated(lambda) })
            .map(|f| f?.sample(&grid))
            .collect::<Result<Vec<_>>>()?;
        let scales = c.scales.scaled(lambda);
        let ratio = bound_ratio(&k, &fs, &c.index, &scales, &grid, &c.apply)?;
        rows.push(json!({ "lambda": lambda, "ratio": ratio, "t_min": scales.t_min, "t_max": scales.t_max }));
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r["ratio"].as_f64().unwrap()).collect();
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let spread = hi / lo - 1.0;
    let checks = vec![Check::at_most("dilation_spread", spread, c.tolerance)];
    let mut csv = String::from("lambda,ratio\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{}", r["lambda"], r["ratio"]);
    }
    let budget = ErrorBudget {
        grid_spacing: Some(c.window.h),
        tail_eps: Some(c.apply.tail_eps),
        scale_weight: Some(c.scales.weight()),
        c_res: Some(c.apply.c_res),
        ..Default::default()
    };
    Ok(Report::new("sqfn", checks, budget, json!({ "index": c.index, "sweep": rows, "spread": spread }), csv))
}

fn build_paraproduct(window: &WindowConfig, beta: &FunctionConfig, scales: &crate::sqfn::ScaleGrid, m: usize, smoothing: crate::avgops::SmoothingOptions) -> Result<Paraproduct> {
    let grid = window.grid()?;
    let n = grid.dim();
    let beta = beta.sample(&grid)?;
    let psi = normalized_mexican_hat(n)?;
    let phi = Profile::unit_mass(ProfileKind::Bump, n)?;
    Paraproduct::new(beta, psi, phi, *scales, m, smoothing)
}

fn run_paraproduct(c: &ParaproductConfig) -> Result<Report> {
    let p = build_paraproduct(&c.window, &c.beta, &c.scales, c.m, c.smoothing)?;
    let phi = c.test_function.sample(p.window())?;
    let r = test_cancellation(&p, &phi)?;
    let mut checks = vec![Check::at_most("pairing_error", r.pairing_error, c.pairing_tolerance * r.reference)];
    for (i, t) in r.transpose_residuals.iter().enumerate() {
        checks.push(Check::at_most(&format!("transpose_{}", i + 1), *t, c.transpose_tolerance * r.transpose_scale));
    }
    let cz = match &c.cz {
        Some(z) => {
            let plan = CzPlan {
                seed: z.seed,
                samples: z.samples,
                d_min: z.d_min,
                d_max: z.d_max,
                spread: z.spread,
                gamma: z.gamma,
                size_constant: z.size_constant.unwrap_or(f64::INFINITY),
                regularity_constant: z.regularity_constant.unwrap_or(f64::INFINITY),
            };
            let rep = cz_sweep(&p, &z.center, &plan)?;
            checks.push(Check::at_most("cz_size", rep.size_measured, plan.size_constant));
            checks.push(Check::at_most("cz_regularity", rep.regularity_measured, plan.regularity_constant));
            Some(rep)
        }
        None => None,
    };
    let mut csv = String::from("quantity,value\n");
    let _ = writeln!(csv, "pairing_error,{:?}\nreference,{:?}", r.pairing_error, r.reference);
    for (i, t) in r.transpose_residuals.iter().enumerate() {
        let _ = writeln!(csv, "transpose_{},{:?}", i + 1, t);
    }
    let budget = ErrorBudget {
        grid_spacing: Some(c.window.h),
        tail_eps: Some(c.smoothing.tail_eps),
        scale_weight: Some(c.scales.weight()),
        c_res: Some(c.smoothing.c_res),
        window_truncation: Some(r.window_budget),
        ..Default::default()
    };
    Ok(Report::new("paraproduct", checks, budget, json!({ "cancellation": r, "cz": cz }), csv))
}

fn run_tb(c: &TbConfig) -> Result<Report> {
    let sys = c.system.build()?;
    let n = c.cube.dim();
    let psi = normalized_mexican_hat(n)?;
    let phi = Profile::unit_mass(ProfileKind::Bump, n)?;
    let opts = TbOptions { h: c.h, margin: c.margin, budget: c.budget.unwrap_or(f64::INFINITY), smoothing: c.smoothing };
    let op: Box<dyn MultilinearOperator> = match &c.operator {
        OperatorConfig::Zero => Box::new(ZeroOperator { arity: sys.len() }),
        OperatorConfig::Paraproduct { window, beta, scales, factor } => {
            let p = build_paraproduct(window, beta, scales, sys.len(), c.smoothing)?;
            Box::new(Scaled { c: num_complex::Complex64::new(*factor, 0.0), inner: p })
        }
    };
    let r = tb_condition(op.as_ref(), &sys, &c.cube, c.q, &c.scales, &psi, &phi, &opts)?;
    let checks = vec![Check::at_most("tb_condition", r.value, opts.budget)];
    let csv = format!("quantity,value\nvalue,{:?}\nscales_used,{}\n", r.value, r.scales_used);
    let budget = ErrorBudget {
        grid_spacing: Some(c.h),
        tail_eps: Some(c.smoothing.tail_eps),
        scale_weight: Some(c.scales.weight()),
        c_res: Some(c.smoothing.c_res),
        ..Default::default()
    };
    Ok(Report::new("tb-condition", checks, budget, to_value(&r), csv))
}
