use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use sympsteer::control::{end_point, BilinearSystem, ControlSignal, TimeGrid};
use sympsteer::geodesic::{build_system, CurvatureProfile};
use sympsteer::io::{self, loglog_slope, MatrixJson, SweepRow};
use sympsteer::steering::{random_target, steer, SteeringProblem, SteeringSolution};
use sympsteer::{Error, Result, SymplecticMatrix};

use crate::common::{parse_list, target, Globals, Outcome, SelfTest, SystemSource};

#[derive(Debug, Args)]
pub struct SteerArgs {
    #[command(flatten)]
    pub source: SystemSource,
    /// Target matrix file or `random:δ`.
    #[arg(long, required_unless_present_any = ["deltas", "selftest"])]
    pub target: Option<String>,
    /// Sweep mode: comma-separated distances; emits CSV.
    #[arg(long, conflicts_with = "target")]
    pub deltas: Option<String>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub selftest: bool,
}

struct Setup {
    sys: BilinearSystem,
    grid: TimeGrid,
    x0: SymplecticMatrix,
    reference: SymplecticMatrix,
}

fn setup(sys: BilinearSystem, t_final: f64) -> Result<Setup> {
    let grid = TimeGrid::with_default_steps(t_final)?;
    let x0 = SymplecticMatrix::identity(sys.m());
    let reference = end_point(&sys, &ControlSignal::zero(sys.k()), &x0, &grid)?;
    Ok(Setup { sys, grid, x0, reference })
}

fn solve(s: &Setup, target: &SymplecticMatrix) -> Result<SteeringSolution> {
    let problem = SteeringProblem::new(s.sys.clone(), s.x0.clone(), target.mat().clone(), s.grid.clone())?;
    steer(&problem)
}

pub fn run(a: &SteerArgs, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(selftest());
    }
    let loaded = a.source.load(g)?;
    let s = setup(loaded.sys, loaded.t_final)?;
    if let Some(list) = &a.deltas {
        return sweep(&s, &parse_list(list)?, g);
    }
    let spec = a.target.as_deref().ok_or_else(|| Error::InvalidInput("--target is required".into()))?;
    let target = target(spec, &s.reference, g)?;
    let sol = solve(&s, &target)?;
    let tol = 1e-6;
    let report = json!({
        "distance": sol.distance,
        "residual": sol.residual,
        "iterations": sol.iterations,
        "corank": sol.corank,
        "kernel_residual": sol.kernel_residual,
        "norms": sol.norms,
        "history": sol.history,
        "coefficients": sol.coefficients.as_slice(),
        "target": MatrixJson::from(target.mat()),
        "pass": sol.residual <= tol,
    });
    if let Some(path) = &a.report {
        io::write_json(path, &report)?;
    }
    g.emit(&report)?;
    Ok(Outcome::check(sol.residual <= tol, || format!("residual {:.3e} exceeds {tol:.0e}", sol.residual)))
}

fn sweep(s: &Setup, deltas: &[f64], g: &Globals) -> Result<Outcome> {
    if deltas.is_empty() {
        return Err(Error::InvalidInput("empty --deltas list".into()));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let target = random_target(&s.reference, d, g.seed)?;
        let sol = solve(s, &target)?;
        rows.push(SweepRow { delta: d, residual: sol.residual, norm_l2: sol.norms.l2, norm_c2: sol.norms.c2, iterations: sol.iterations });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norm_c2).collect();
    let exponent = if rows.len() > 1 { loglog_slope(&xs, &ys) } else { f64::NAN };
    let mut buf = Vec::new();
    io::write_sweep(&mut buf, &rows, exponent)?;
    g.emit_text(&String::from_utf8(buf).expect("csv output is utf-8"))?;
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(Outcome::check(worst <= 1e-6, || format!("worst residual {worst:.3e} exceeds 1e-6")))
}

fn selftest() -> Outcome {
    let mut st = SelfTest::new("steer");
    let trivial = build_system(&CurvatureProfile::flat(1)).and_then(|sys| {
        let s = setup(sys, 1.0)?;
        solve(&s, &s.reference.clone())
    });
    st.check("target = X̄(T) needs 0 iterations", trivial.is_ok_and(|sol| sol.iterations == 0 && sol.residual <= 1e-12));
    let far = build_system(&CurvatureProfile::flat(1)).and_then(|sys| {
        let s = setup(sys, 1.0)?;
        solve(&s, &random_target(&s.reference, 5.0, 0)?)
    });
    st.check("targets beyond the trust radius are rejected", matches!(far, Err(Error::TrustRadius { .. })));
    st.finish()
}
