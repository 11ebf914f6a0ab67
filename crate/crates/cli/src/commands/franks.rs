use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use nalgebra::DVector;
use serde_json::json;
use sympsteer::control::ControlSignal;
use sympsteer::franks::{
    bump_p, cutoff_q, select_window, sigma_field, synthesize_franks, ConformalFactorGrid, FermiBumpSpec, FieldResolution,
    FranksOptions,
};
use sympsteer::geodesic::jacobi_propagate;
use sympsteer::io::MatrixJson;
use sympsteer::{Error, Result};

use crate::common::{target, Globals, Outcome, SelfTest, SystemSource};

#[derive(Debug, Args)]
pub struct FranksArgs {
    #[command(flatten)]
    pub source: SystemSource,
    /// Injectivity radius along the geodesic.
    #[arg(long, required_unless_present = "selftest")]
    pub r_g: Option<f64>,
    /// Self-intersection time pairs `t:t',t:t',…`.
    #[arg(long, default_value = "")]
    pub intersections: String,
    /// Target matrix file or `random:δ`.
    #[arg(long, required_unless_present = "selftest")]
    pub target: Option<String>,
    /// Bump radius; defaults to min(ρ̄, 0.1).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 65)]
    pub axis_nodes: usize,
    /// Dump σ on the grid as CSV (t, x_1, …, x_m, sigma).
    #[arg(long)]
    pub sigma_csv: Option<PathBuf>,
    #[arg(long)]
    pub selftest: bool,
}

fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (a, b) = s.split_once(':').ok_or_else(|| Error::Parse(format!("intersection {s:?} is not t:t'")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {v:?}")));
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn sigma_csv(field: &ConformalFactorGrid) -> String {
    let mut out = String::from("t");
    for d in 0..field.m {
        write!(out, ",x_{}", d + 1).expect("string write");
    }
    out.push_str(",sigma\n");
    let slice = field.slice_len();
    for (a, t) in field.axis.iter().enumerate() {
        for idx in 0..slice {
            write!(out, "{t}").expect("string write");
            for x in field.x_of(idx) {
                write!(out, ",{x}").expect("string write");
            }
            writeln!(out, ",{}", field.value(a, idx)).expect("string write");
        }
    }
    out
}

pub fn run(a: &FranksArgs, g: &Globals) -> Result<Outcome> {
    if a.selftest {
        return Ok(selftest());
    }
    let (r, t_final) = a.source.load_curvature(g)?;
    let r_g = a.r_g.ok_or_else(|| Error::InvalidInput("--r-g is required".into()))?;
    let window = select_window(t_final, r_g, &parse_pairs(&a.intersections)?)?;
    let base = jacobi_propagate(&r, t_final)?.matrix;
    let spec = a.target.as_deref().ok_or_else(|| Error::InvalidInput("--target is required".into()))?;
    let target = target(spec, &base, g)?;
    let rho = a.rho.unwrap_or(window.rho_bar.min(0.1));
    let options = FranksOptions {
        resolution: Some(FieldResolution { axis_nodes: a.axis_nodes, h_x: rho / 64.0 }),
        ..FranksOptions::default()
    };
    let out = synthesize_franks(&r, &window, &target, rho, &options)?;
    if let Some(path) = &a.sigma_csv {
        fs::write(path, sigma_csv(&out.field))?;
    }
    let pass = out.report.pass && out.residual <= 1e-6;
    g.emit(&json!({
        "window": {
            "k": window.k,
            "n_intervals": window.n_intervals,
            "index": window.index,
            "t_bar": window.t_bar,
            "tau": window.tau,
            "rho_bar": window.rho_bar,
        },
        "rho": rho,
        "h_x": out.field.h_x,
        "delta": out.delta,
        "residual": out.residual,
        "route_gap": out.route_gap,
        "u_norms": out.u_norms,
        "sigma_norms": out.field.norms,
        "sigma_ratio": out.sigma_ratio,
        "checks": out.report.checks,
        "achieved": MatrixJson::from(out.achieved.matrix.mat()),
        "pass": pass,
    }))?;
    Ok(Outcome::check(pass, || {
        match out.report.checks.iter().find(|c| !c.pass) {
            Some(c) => format!("item ({}) {} failed: {:.3e}", c.item, c.name, c.value),
            None => format!("residual {:.3e} exceeds 1e-6", out.residual),
        }
    }))
}

fn selftest() -> Outcome {
    let mut st = SelfTest::new("franks");
    st.check("no self-intersections select t̄ = 0", select_window(2.0, 1.0, &[]).is_ok_and(|w| w.t_bar == 0.0 && w.index == 0));
    st.check("Q(0.2) = 1", cutoff_q(0.2) == 1.0);
    st.check("Q(0.9) = 0", cutoff_q(0.9) == 0.0);
    st.check("P_12(0) = 0", bump_p(0, 1, &[0.0, 0.0]).is_ok_and(|v| v == 0.0));
    let zero = FermiBumpSpec::new(2, 0.1, 1.0, ControlSignal::zero(3))
        .and_then(|spec| sigma_field(&spec, FieldResolution { axis_nodes: 9, h_x: 0.1 / 16.0 }));
    st.check("u = 0 gives σ ≡ 0", zero.is_ok_and(|f| f.values.iter().all(|v| *v == 0.0)));
    let single = ControlSignal::analytic(3, |t| DVector::from_vec(vec![0.0, (t * (1.0 - t)).max(0.0), 0.0]));
    let axis = FermiBumpSpec::new(2, 0.1, 1.0, single)
        .and_then(|spec| sigma_field(&spec, FieldResolution { axis_nodes: 9, h_x: 0.1 / 16.0 }))
        .is_ok_and(|f| (0..f.axis.len()).all(|a| f.value(a, f.center()) == 0.0));
    st.check("σ vanishes on the axis", axis);
    st.finish()
}
