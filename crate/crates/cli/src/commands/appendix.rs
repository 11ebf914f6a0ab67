use std::path::PathBuf;

use clap::{Args, Subcommand};
use sympsteer::appendix::{
    base_f, build_matrix_a, fallback_f, odot, rank_exact, solve_base_case_with, verify_membership_l, PolyPair, Rational,
    RationalPolynomial,
};
use sympsteer::io::{read_pair, PairJson};
use sympsteer::Result;

use crate::common::{Globals, Outcome, SelfTest};

#[derive(Debug, Subcommand)]
pub enum AppendixCommand {
    /// Exact rank of A(d); certified when it equals 7.
    Rank(RankArgs),
    /// Solve for g with the base-case constraints and (tf)⊙(sg) = 1.
    BaseCase(BaseCaseArgs),
    /// Check membership of a polynomial pair in 𝓛.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    #[arg(long)]
    pub selftest: bool,
}

#[derive(Debug, Args)]
pub struct BaseCaseArgs {
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    /// Use f = 2 − 26t + 96t² − 140t³ + 70t⁴ instead of 1 − 6t + 6t².
    #[arg(long)]
    pub fallback: bool,
    #[arg(long)]
    pub selftest: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "selftest")]
    pub pair: Option<PathBuf>,
    #[arg(long)]
    pub selftest: bool,
}

pub fn run(cmd: &AppendixCommand, g: &Globals) -> Result<Outcome> {
    match cmd {
        AppendixCommand::Rank(a) if a.selftest => Ok(selftest()),
        AppendixCommand::BaseCase(a) if a.selftest => Ok(selftest()),
        AppendixCommand::Verify(a) if a.selftest => Ok(selftest()),
        AppendixCommand::Rank(a) => {
            let rank = rank_exact(&build_matrix_a(a.d)?);
            g.emit_text(&format!("{rank}\n"))?;
            Ok(Outcome::check(rank == 7, || format!("rank(A({})) = {rank}, expected 7", a.d)))
        }
        AppendixCommand::BaseCase(a) => {
            let f = if a.fallback { fallback_f() } else { base_f() };
            let g_poly = solve_base_case_with(&f, a.d)?;
            let report = verify_membership_l(&f, &g_poly);
            g.emit(&PairJson::from(&PolyPair { f, g: g_poly }))?;
            Ok(Outcome::check(report.member, || "solution fails the membership re-check".into()))
        }
        AppendixCommand::Verify(a) => {
            let pair = read_pair(a.pair.as_ref().expect("required by clap"))?;
            let report = verify_membership_l(&pair.f, &pair.g);
            g.emit(&report)?;
            Ok(Outcome::check(report.member, || {
                let failed: Vec<&str> = report
                    .equalities
                    .iter()
                    .chain(std::iter::once(&report.positivity))
                    .filter(|c| !c.ok)
                    .map(|c| c.label.as_str())
                    .collect();
                format!("pair is not in 𝓛: {}", failed.join(", "))
            }))
        }
    }
}

fn selftest() -> Outcome {
    let mut st = SelfTest::new("appendix");
    let one = RationalPolynomial::one();
    st.check("1 ⊙ 1 = 1/2", odot(&one, &one) == Rational::new(1.into(), 2.into()));
    st.check("(t·1) ⊙ (s·1) = 1/8", odot(&one.times_t(1), &one.times_t(1)) == Rational::new(1.into(), 8.into()));
    st.check("rank of a zero matrix is 0", rank_exact(&vec![vec![Rational::from_integer(0.into()); 4]; 3]) == 0);
    let id: Vec<Vec<Rational>> =
        (0..7).map(|i| (0..7).map(|j| Rational::from_integer(i64::from(i == j).into())).collect()).collect();
    st.check("rank of the 7×7 identity is 7", rank_exact(&id) == 7);
    st.check("∫f = ∫sf = 0 for f = 1 − 6t + 6t²", base_f().moment(0) == Rational::from_integer(0.into()) && base_f().moment(1) == Rational::from_integer(0.into()));
    let zero = verify_membership_l(&RationalPolynomial::zero(), &RationalPolynomial::zero());
    st.check("(0, 0) passes the equalities and fails positivity", zero.equalities.iter().all(|c| c.ok) && !zero.positivity.ok);
    let ones = verify_membership_l(&one, &one);
    st.check("(1, 1) fails the moment constraints", !ones.equalities[0].ok);
    st.finish()
}
