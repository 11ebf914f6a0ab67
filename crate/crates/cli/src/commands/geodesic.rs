use clap::Args;
use serde_json::json;
use sympsteer::control::{
    bracket_sequence, first_order_certificate, second_order_certificate, BilinearSystem, ControlSignal, TimeGrid, DEFAULT_J_MAX,
};
use sympsteer::geodesic::{
    bracket_identities, build_system, curvature_update, e_sym, f_skew, jacobi_propagate, CurvatureProfile,
};
use sympsteer::io::MatrixJson;
use sympsteer::{Mat, Result};

use crate::common::{Globals, Outcome, SelfTest, SystemSource};

const BRACKET_TOL: f64 = 1e-9;

#[derive(Debug, Args)]
pub struct JacobiArgs {
    #[command(flatten)]
    pub source: SystemSource,
    #[arg(long)]
    pub selftest: bool,
}

pub fn jacobi(a: &JacobiArgs, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(jacobi_selftest());
    }
    let (r, t_final) = a.source.load_curvature(g)?;
    let map = jacobi_propagate(&r, t_final)?;
    g.emit(&json!({
        "horizon": map.horizon,
        "defect": map.matrix.defect(),
        "matrix": MatrixJson::from(map.matrix.mat()),
    }))?;
    Ok(Outcome::Pass)
}

fn jacobi_selftest() -> Outcome {
    let mut st = SelfTest::new("jacobi");
    for (m, t) in [(1, 1.0), (2, 0.7)] {
        let expect = Mat::from_fn(2 * m, 2 * m, |i, j| {
            if i == j {
                1.0
            } else if j == i + m {
                t
            } else {
                0.0
            }
        });
        let ok = jacobi_propagate(&CurvatureProfile::flat(m), t).is_ok_and(|p| (p.matrix.mat() - &expect).norm() <= 1e-10);
        st.check(&format!("flat m = {m} gives [[I, T·I], [0, I]]"), ok);
    }
    let r = CurvatureProfile::constant(2, 1.0);
    let same = curvature_update(&r, &ControlSignal::zero(3)).is_ok_and(|h| (h.at(0.4) - r.at(0.4)).norm() == 0.0);
    st.check("u = 0 leaves the curvature unchanged", same);
    let sys = build_system(&CurvatureProfile::flat(1));
    st.check(
        "m = 1 flat system has drift [[0, 1], [0, 0]] and one generator",
        sys.is_ok_and(|s| s.k() == 1 && s.drift().at(0.0) == Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])),
    );
    st.finish()
}

#[derive(Debug, Args)]
pub struct BracketsArgs {
    #[command(flatten)]
    pub source: SystemSource,
    /// Time at which the brackets are compared.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long)]
    pub selftest: bool,
}

pub fn brackets(a: &BracketsArgs, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(brackets_selftest());
    }
    let (r, _) = a.source.load_curvature(g)?;
    let report = bracket_identities(&r, a.t)?;
    let worst = report.max_deviation();
    g.emit(&json!({ "report": report, "max_deviation": worst, "tolerance": BRACKET_TOL, "pass": worst <= BRACKET_TOL }))?;
    Ok(Outcome::check(worst <= BRACKET_TOL, || format!("closed-form brackets deviate by {worst:.3e}")))
}

fn brackets_selftest() -> Outcome {
    let mut st = SelfTest::new("brackets");
    let c = e_sym(3, 0, 1) * e_sym(3, 0, 2) - e_sym(3, 0, 2) * e_sym(3, 0, 1);
    st.check("[E(12), E(13)] = F(23) exactly", c == f_skew(3, 1, 2));
    let sys = build_system(&CurvatureProfile::flat(2));
    st.check(
        "ℰ(ij)ℰ(kl) = 0 for all pairs",
        sys.is_ok_and(|s| s.generators().iter().all(|a| s.generators().iter().all(|b| (a * b).iter().all(|v| *v == 0.0)))),
    );
    let j0 = build_system(&CurvatureProfile::constant(2, 1.0)).and_then(|s| {
        let seq = bracket_sequence(&s, &[0.3], 1)?;
        Ok((0..s.k()).all(|i| seq.get(0, i, 0) == &s.generators()[i]))
    });
    st.check("j = 0 brackets are the generators", j0.unwrap_or(false));
    st.finish()
}

#[derive(Debug, Args)]
pub struct Certify1Args {
    #[command(flatten)]
    pub source: SystemSource,
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    pub j_max: usize,
    #[arg(long)]
    pub selftest: bool,
}

pub fn certify1(a: &Certify1Args, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(certify1_selftest());
    }
    let loaded = a.source.load(g)?;
    let grid = TimeGrid::with_default_steps(loaded.t_final)?;
    let report = first_order_certificate(&loaded.sys, &grid, a.j_max)?;
    g.emit(&report)?;
    Ok(Outcome::check(report.satisfied, || format!("bracket rank {} < {}", report.rank, report.expected)))
}

fn zero_generator_system() -> Result<BilinearSystem> {
    BilinearSystem::constant(Mat::zeros(2, 2), vec![Mat::zeros(2, 2)])
}

fn certify1_selftest() -> Outcome {
    let mut st = SelfTest::new("certify1");
    let ok = zero_generator_system()
        .and_then(|s| first_order_certificate(&s, &TimeGrid::new(1.0, 16)?, 4))
        .is_ok_and(|r| r.rank == 0 && !r.satisfied);
    st.check("single zero generator gives rank 0, not satisfied", ok);
    st.finish()
}

#[derive(Debug, Args)]
pub struct Certify2Args {
    #[command(flatten)]
    pub source: SystemSource,
    /// Time at which conditions are checked.
    #[arg(long, default_value_t = 0.0)]
    pub t_bar: f64,
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    pub j_max: usize,
    #[arg(long)]
    pub selftest: bool,
}

pub fn certify2(a: &Certify2Args, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(certify2_selftest());
    }
    let loaded = a.source.load(g)?;
    let report = second_order_certificate(&loaded.sys, a.t_bar, a.j_max)?;
    g.emit(&report)?;
    Ok(Outcome::check(report.satisfied, || {
        format!(
            "products zero: {}, membership: {}, span rank {} of {}",
            report.products_zero, report.membership_ok, report.span_rank, report.expected
        )
    }))
}

fn certify2_selftest() -> Outcome {
    let mut st = SelfTest::new("certify2");
    let ok = build_system(&CurvatureProfile::flat(2)).and_then(|s| second_order_certificate(&s, 0.0, 4)).is_ok_and(|r| r.products_zero);
    st.check("geodesic generators multiply to zero", ok);
    st.finish()
}
