use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde_json::json;
use sympsteer::io::read_family;
use sympsteer::persistence::{
    angle, domination_check, mane_exponents, shear_destabilize, smallest_dominating_block, splittings_along_orbit,
    stable_unstable_split, symplectic_block_check, uniformity_probe, PeriodicSymplecticSequence, MAX_BLOCK,
};
use sympsteer::symplectic::j_matrix;
use sympsteer::{Mat, Result};

use crate::common::{Globals, Outcome, SelfTest};

#[derive(Debug, Subcommand)]
pub enum PersistCommand {
    /// Stable/unstable splitting of the period product at one index.
    Split(SplitArgs),
    /// Domination of the splitting over blocks of m steps, or a Mañé scan over a family.
    Dominate(DominateArgs),
    /// Angle between stable and unstable bundles along the orbit.
    Angle(SequenceArgs),
    /// Sample symplectic shears of size ε and report the surviving hyperbolicity.
    Probe(ProbeArgs),
    /// Perturb ψ₀ by a symmetric shear to create eigenvalue 1.
    Shear(SequenceArgs),
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    #[arg(long, required_unless_present = "selftest")]
    pub sequence: Option<PathBuf>,
    #[arg(long)]
    pub selftest: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: SequenceArgs,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Debug, Args)]
pub struct DominateArgs {
    #[command(flatten)]
    pub input: SequenceArgs,
    #[arg(long, default_value_t = 1)]
    pub m_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// Treat the file as a family and find the smallest block giving Mañé's bounds.
    #[arg(long)]
    pub mane: bool,
    #[arg(long, default_value_t = MAX_BLOCK)]
    pub max_m: usize,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub input: SequenceArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

fn path(a: &SequenceArgs) -> &PathBuf {
    a.sequence.as_ref().expect("required by clap")
}

pub fn run(cmd: &PersistCommand, g: &Globals) -> Result<Outcome> {
    let selftest = match cmd {
        PersistCommand::Split(a) => a.input.selftest,
        PersistCommand::Dominate(a) => a.input.selftest,
        PersistCommand::Angle(a) | PersistCommand::Shear(a) => a.selftest,
        PersistCommand::Probe(a) => a.input.selftest,
    };
    if selftest {
        return Ok(run_selftest());
    }
    match cmd {
        PersistCommand::Split(a) => {
            let seq = g.sequence(path(&a.input))?;
            let (split, report) = stable_unstable_split(&seq, a.index)?;
            g.emit(&json!({ "report": report, "splitting": split }))?;
            Ok(Outcome::check(report.hyperbolic, || format!("not hyperbolic: {:?}, gap {:.3e}", report.status, report.gap)))
        }
        PersistCommand::Dominate(a) if a.mane => {
            let family = read_family(path(&a.input), g.tol())?;
            let found = smallest_dominating_block(&family, a.max_m)?;
            let pass = found.is_some();
            g.emit(&found)?;
            Ok(Outcome::check(pass, || format!("no block m ≤ {} satisfies the bounds", a.max_m)))
        }
        PersistCommand::Dominate(a) => {
            let seq = g.sequence(path(&a.input))?;
            let splittings = splittings_along_orbit(&seq)?;
            let report = domination_check(&seq, &splittings, a.m_steps, a.delta)?;
            g.emit(&report)?;
            Ok(Outcome::check(report.dominated, || format!("worst block ratio {:.3e} exceeds δ = {}", report.worst, a.delta)))
        }
        PersistCommand::Angle(a) => {
            let seq = g.sequence(path(a))?;
            let splittings = splittings_along_orbit(&seq)?;
            let angles = splittings.iter().map(|s| angle(&s.stable, &s.unstable)).collect::<Result<Vec<_>>>()?;
            g.emit(&json!({ "angles": angles }))?;
            Ok(Outcome::Pass)
        }
        PersistCommand::Probe(a) => {
            let seq = g.sequence(path(&a.input))?;
            g.emit(&uniformity_probe(&seq, a.epsilon, a.samples, g.seed)?)?;
            Ok(Outcome::Pass)
        }
        PersistCommand::Shear(a) => {
            let seq = g.sequence(path(a))?;
            let report = shear_destabilize(&seq)?;
            g.emit(&report)?;
            Ok(Outcome::check(report.pass, || {
                format!("fixed-vector residual {:.3e}, angle bound holds: {}", report.eigen_residual, report.angle_bound_holds)
            }))
        }
    }
}

fn single(entries: [f64; 4]) -> Result<PeriodicSymplecticSequence> {
    PeriodicSymplecticSequence::new(vec![Mat::from_row_slice(2, 2, &entries)], 1e-12)
}

fn run_selftest() -> Outcome {
    let mut st = SelfTest::new("persist");
    let hyper = single([2.0, 0.0, 0.0, 0.5]).and_then(|s| stable_unstable_split(&s, 0));
    st.check(
        "diag(2, 1/2) is hyperbolic with E_u = span e₁",
        hyper.is_ok_and(|(split, rep)| {
            rep.hyperbolic && split.is_some_and(|s| s.unstable[(1, 0)].abs() < 1e-12 && s.stable[(0, 0)].abs() < 1e-12)
        }),
    );
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let rot = single([c, -c, c, c]).and_then(|s| stable_unstable_split(&s, 0));
    st.check("rotation by π/4 is not hyperbolic", rot.is_ok_and(|(split, rep)| split.is_none() && !rep.hyperbolic));
    let id = single([1.0, 0.0, 0.0, 1.0]).and_then(|s| {
        let e = Mat::from_row_slice(2, 1, &[1.0, 0.0]);
        let f = Mat::from_row_slice(2, 1, &[0.0, 1.0]);
        let fake = sympsteer::persistence::Splitting { index: 0, stable: e, unstable: f, invariance_residual: 0.0, lagrangian_residual: 0.0 };
        domination_check(&s, &[fake], 1, 0.99)
    });
    st.check("identity gives product 1 and is not dominated", id.is_ok_and(|r| !r.dominated && (r.worst - 1.0).abs() < 1e-12));
    let j = symplectic_block_check(&j_matrix(2), 1e-12);
    st.check("𝕁 passes the block identities", j.is_ok_and(|b| b.blocks_pass && b.symplectic));
    let mane = single([0.5, 0.0, 0.0, 2.0]).and_then(|s| mane_exponents(&[s], 1));
    st.check("family {diag(1/2, 2)} has λ = 1/2 and K = 1", mane.is_ok_and(|r| (r.lambda - 0.5).abs() < 1e-12 && (r.k_const - 1.0).abs() < 1e-12));
    st.finish()
}
