//! One function per subcommand. Each returns the rendered output; writing
//! it is left to the caller.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde::Serialize;
use sta_core::energetics::{
    direct_time_average, instantaneous_energy, instantaneous_std, reduced_time_average, EnergyReport, EnergyUnits,
};
use sta_core::numerics::{decade_grid, geomspace, linspace};
use sta_core::trajectories::{omega_squared_from_b, TrajectoryKind};
use sta_core::verifier::{
    bang_bang_check, grid_fig1, hybrid_tau_scan, otto_scaling, roundtrip_check, scan_tf, scan_wf, variance_oracle,
    ScanResult, ScanRow, TimeLaw,
};

use crate::config::{CommonArgs, LawChoice, OttoArgs, OutputFormat, RunConfig, ScanArgs, ScanAxis, UsageError};
use crate::table::{write_csv, write_json};

/// Tolerance of the forward-integration endpoint checks.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

/// Default cap widths of the tau scan.
pub const DEFAULT_TAUS: [f64; 7] = [0.4, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005];

/// Rendered output and whether any check failed unexpectedly.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub failed: bool,
    /// Human-readable lines for standard error.
    pub notes: Vec<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            failed: false,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    command: &'static str,
    run: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

fn render(result: &ScanResult, prov: &Provenance, format: OutputFormat) -> Result<String> {
    Ok(match format {
        OutputFormat::Csv => write_csv(result, prov)?,
        OutputFormat::Json => write_json(result, prov)?,
    })
}

pub fn design(args: &CommonArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(args)?;
    let spec = cfg.spec()?;
    let traj = cfg.trajectory(&spec)?;
    let profile = omega_squared_from_b(&traj)?;
    let k = EnergyUnits::from(cfg.units).scale(&spec);
    let tf = traj.duration();
    let mut rows = Vec::with_capacity(cfg.samples as usize);
    for t in linspace(0.0, tf, cfg.samples as usize) {
        let st = traj.eval(t)?;
        rows.push(ScanRow {
            coords: vec![t],
            values: vec![
                t / tf,
                st.b,
                st.bdot,
                st.bddot,
                profile.omega_squared(t)?,
                k * instantaneous_energy(&spec, &traj, t)?,
                k * instantaneous_std(&spec, &traj, t)?,
            ],
        });
    }
    let result = ScanResult {
        axes: vec!["t_s".into()],
        columns: ["s", "b", "bdot", "bddot", "omega_sq", "energy", "std"]
            .map(String::from)
            .to_vec(),
        rows,
        fits: BTreeMap::new(),
    };
    let prov = Provenance {
        command: "design",
        run: &cfg,
        params: Some(serde_json::json!({ "repulsive": profile.has_repulsive_interval() })),
    };
    Ok(Outcome::ok(render(&result, &prov, cfg.format)?))
}

/// Named quantities of the analysis in a fixed order.
fn analysis_fields(cfg: &RunConfig) -> Result<Vec<(&'static str, f64)>> {
    let spec = cfg.spec()?;
    let traj = cfg.trajectory(&spec)?;
    let report = EnergyReport::compute(&spec, &traj, cfg.units.into())?;
    let trip = roundtrip_check(&spec, &traj, ROUNDTRIP_TOL)?;
    let mut f = vec![
        ("avg_energy", report.avg_energy),
        ("max_energy", report.max_energy),
        ("bound", report.bound),
        ("bound_asymptotic", report.bound_asymptotic),
        ("avg_std", report.avg_std),
    ];
    let optional = [
        ("aa_lower_bound", report.aa_lower_bound),
        ("fs_distance", report.fs_distance),
        ("fs_geodesic", report.fs_geodesic),
        ("final_fidelity", report.final_fidelity),
    ];
    f.extend(optional.into_iter().filter_map(|(name, v)| v.map(|v| (name, v))));
    let boundary = [
        "boundary_b0",
        "boundary_db0",
        "boundary_ddb0",
        "boundary_b1",
        "boundary_db1",
        "boundary_ddb1",
    ];
    f.extend(boundary.iter().copied().zip(report.boundary_residuals));
    f.push(("roundtrip_residual_b", trip.residual_b));
    f.push(("roundtrip_residual_bdot", trip.residual_bdot));
    f.push(("roundtrip_passed", if trip.passed { 1.0 } else { 0.0 }));
    Ok(f)
}

pub fn analyze(args: &CommonArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(args)?;
    let fields = analysis_fields(&cfg)?;
    let prov = Provenance {
        command: "analyze",
        run: &cfg,
        params: None,
    };
    let text = match cfg.format {
        OutputFormat::Csv => {
            let result = ScanResult {
                axes: Vec::new(),
                columns: fields.iter().map(|(n, _)| n.to_string()).collect(),
                rows: vec![ScanRow {
                    coords: Vec::new(),
                    values: fields.iter().map(|(_, v)| *v).collect(),
                }],
                fits: BTreeMap::new(),
            };
            write_csv(&result, &prov)?
        }
        OutputFormat::Json => {
            let mut map = serde_json::Map::new();
            for (name, v) in &fields {
                let value = if *name == "roundtrip_passed" {
                    serde_json::Value::Bool(*v == 1.0)
                } else {
                    serde_json::json!(v)
                };
                map.insert(name.to_string(), value);
            }
            map.insert("config".into(), serde_json::to_value(&prov)?);
            let mut s = serde_json::to_string_pretty(&map)?;
            s.push('\n');
            s
        }
    };
    Ok(Outcome::ok(text))
}

fn sweep_bounds(args: &ScanArgs, default: (f64, f64)) -> Result<(f64, f64)> {
    let lo = args.from.unwrap_or(default.0);
    let hi = args.to.unwrap_or(default.1);
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(UsageError(format!("sweep range [{lo}, {hi}] must be positive and increasing")).into());
    }
    if args.points_per_decade == 0 {
        return Err(UsageError("--points-per-decade must be positive".into()).into());
    }
    Ok((lo, hi))
}

pub fn scan(args: &ScanArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(&args.common)?;
    let spec = cfg.spec()?;
    let units: EnergyUnits = cfg.units.into();
    let (result, params) = match args.axis {
        ScanAxis::Tf => {
            let (lo, hi) = sweep_bounds(args, (2e-5, 2e-2))?;
            let tfs = decade_grid(lo, hi, args.points_per_decade);
            (
                scan_tf(&spec, &tfs, units)?,
                serde_json::json!({"axis": "tf", "from": lo, "to": hi, "points_per_decade": args.points_per_decade}),
            )
        }
        ScanAxis::Wf => {
            let (lo, hi) = sweep_bounds(args, (2.5e-3, 250.0))?;
            let wfs = decade_grid(cfg.angular_of(lo), cfg.angular_of(hi), args.points_per_decade);
            (
                scan_wf(&spec, &wfs, units)?,
                serde_json::json!({"axis": "wf", "from": lo, "to": hi, "points_per_decade": args.points_per_decade}),
            )
        }
        ScanAxis::Tau => {
            let taus = args.taus.clone().unwrap_or_else(|| DEFAULT_TAUS.to_vec());
            (
                hybrid_tau_scan(&spec, &taus, units)?,
                serde_json::json!({"axis": "tau", "taus": taus}),
            )
        }
        ScanAxis::Grid => {
            if args.grid_points < 2 {
                return Err(UsageError("--grid-points must be at least 2".into()).into());
            }
            let tfs = geomspace(1e-4, 5e-2, args.grid_points);
            let wfs = geomspace(cfg.angular_of(0.025), cfg.angular_of(250.0), args.grid_points);
            (
                grid_fig1(&spec, &tfs, &wfs, units)?,
                serde_json::json!({"axis": "grid", "grid_points": args.grid_points}),
            )
        }
    };
    let prov = Provenance {
        command: "scan",
        run: &cfg,
        params: Some(params),
    };
    Ok(Outcome::ok(render(&result, &prov, cfg.format)?))
}

pub fn otto(args: &OttoArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(&args.common)?;
    let spec = cfg.spec()?;
    if !(args.from > 0.0 && args.to > args.from) || args.points_per_decade == 0 {
        return Err(UsageError("otto range must be positive and increasing".into()).into());
    }
    let law = match args.law {
        LawChoice::Budget => {
            if !(args.budget > 0.0) {
                return Err(UsageError("--budget must be positive".into()).into());
            }
            TimeLaw::Budget {
                budget: args.budget * spec.e0_unit(),
            }
        }
        LawChoice::BangBang => TimeLaw::BangBangMinTime,
        LawChoice::Quarter => TimeLaw::QuarterPeriod,
        LawChoice::Power => TimeLaw::PowerLaw {
            prefactor: args.prefactor,
            exponent: args.exponent,
        },
    };
    let wfs = decade_grid(
        cfg.angular_of(args.from),
        cfg.angular_of(args.to),
        args.points_per_decade,
    );
    let result = otto_scaling(&spec, law, &wfs)?;
    let prov = Provenance {
        command: "otto",
        run: &cfg,
        params: Some(serde_json::to_value(law)?),
    };
    Ok(Outcome::ok(render(&result, &prov, cfg.format)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// A failure that follows from the construction rather than a bug.
    pub expected_failure: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: value <= tolerance,
            expected_failure: false,
            value,
            tolerance,
            detail: detail.into(),
        }
    }

    fn expect_failure(mut self, yes: bool) -> Self {
        self.expected_failure = yes && !self.passed;
        self
    }
}

/// Times at which the grid oracle is compared with the closed form.
const ORACLE_TIMES: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.spec()?;
    let traj = cfg.trajectory(&spec)?;
    let qopt = matches!(traj.kind(), TrajectoryKind::QuasiOptimal(_));
    let tf = traj.duration();
    let e0 = spec.e0_unit();
    let mut checks = Vec::new();

    let trip = roundtrip_check(&spec, &traj, ROUNDTRIP_TOL)?;
    let slope_note = if qopt {
        "the closed-form minimiser only fixes b at the ends, not its slope"
    } else {
        "forward Ermakov integration of the designed frequency"
    };
    checks.push(Check::new("roundtrip_b", trip.residual_b, ROUNDTRIP_TOL, slope_note).expect_failure(qopt));
    checks.push(Check::new("roundtrip_bdot", trip.residual_bdot, ROUNDTRIP_TOL, slope_note).expect_failure(qopt));

    let ends = instantaneous_std(&spec, &traj, 0.0)?.max(instantaneous_std(&spec, &traj, tf)?) / e0;
    checks.push(
        Check::new(
            "endpoint_std",
            ends,
            1e-9,
            "spread at t = 0 and t = tf in units of hbar omega0 / 2",
        )
        .expect_failure(qopt),
    );

    if spec.n <= sta_core::verifier::MAX_ORACLE_LEVEL {
        let mut worst = 0.0_f64;
        for s in ORACLE_TIMES {
            let t = s * tf;
            let oracle = variance_oracle(&spec, &traj, t)?;
            let exact = instantaneous_std(&spec, &traj, t)?;
            worst = worst.max(((oracle - exact) / exact).abs());
        }
        checks.push(Check::new(
            "variance_oracle",
            worst,
            1e-6,
            "grid oracle against the closed-form spread",
        ));
    }

    if !qopt {
        let direct = direct_time_average(&spec, &traj)?;
        let reduced = reduced_time_average(&spec, &traj)?;
        checks.push(Check::new(
            "integration_identity",
            ((direct - reduced) / direct).abs(),
            1e-8,
            "direct and integrated-by-parts time averages",
        ));
    }

    let report = EnergyReport::compute(&spec, &traj, EnergyUnits::Raw)?;
    // negative when the average sits above the bound
    let shortfall = (report.bound - report.avg_energy) / report.bound;
    checks.push(Check::new(
        "bound_dominance",
        shortfall,
        1e-9,
        "relative amount by which the average undercuts the bound",
    ));

    if let (Some(path), Some(geodesic)) = (report.fs_distance, report.fs_geodesic) {
        checks.push(Check::new(
            "aa_inequality",
            geodesic - path,
            1e-12,
            "geodesic minus path length",
        ));
    }

    let bang = bang_bang_check(&spec)?;
    checks.push(Check::new(
        "bang_bang_energy",
        bang.max_energy_deviation.max(bang.residual_b).max(bang.residual_bdot),
        1e-8,
        "single-step schedule: endpoint residuals and constant energy",
    ));
    Ok(checks)
}

pub fn verify(args: &CommonArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(args)?;
    let checks = verify_checks(&cfg).context("running checks")?;
    let failed = checks.iter().any(|c| !c.passed && !c.expected_failure);
    let notes = checks
        .iter()
        .map(|c| {
            let status = match (c.passed, c.expected_failure) {
                (true, _) => "PASS",
                (false, true) => "EXPECTED-FAIL",
                (false, false) => "FAIL",
            };
            format!(
                "{status:<13} {:<22} {:>12.3e} (tol {:.0e})  {}",
                c.name, c.value, c.tolerance, c.detail
            )
        })
        .collect();
    #[derive(Serialize)]
    struct Doc<'a> {
        config: Provenance<'a>,
        all_passed: bool,
        checks: &'a [Check],
    }
    let doc = Doc {
        config: Provenance {
            command: "verify",
            run: &cfg,
            params: None,
        },
        all_passed: !failed,
        checks: &checks,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(Outcome { text, failed, notes })
}
