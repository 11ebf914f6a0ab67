//! `sympsteer` command-line interface.

mod commands;
mod common;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sympsteer::Error;

use commands::{appendix, franks, geodesic, persist, steer};
use common::{Globals, Outcome};

#[derive(Debug, Parser)]
#[command(name = "sympsteer", version, about = "Second-order controllability tools on the symplectic group")]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linearized Poincaré map of a curvature profile.
    Jacobi(geodesic::JacobiArgs),
    /// Compare generated brackets with their closed forms.
    Brackets(geodesic::BracketsArgs),
    /// First-order bracket rank certificate.
    Certify1(geodesic::Certify1Args),
    /// Second-order certificate: products, membership and span.
    Certify2(geodesic::Certify2Args),
    /// Steer the End-Point map to a target.
    Steer(steer::SteerArgs),
    /// Synthesize a conformal bump realizing a target Poincaré map.
    Franks(franks::FranksArgs),
    /// Exact polynomial certificates.
    #[command(subcommand)]
    Appendix(appendix::AppendixCommand),
    /// Hyperbolicity, domination, angles and shear perturbations of periodic sequences.
    #[command(subcommand)]
    Persist(persist::PersistCommand),
}

/// 2 for malformed or out-of-domain input, 1 for everything that ran but did not certify.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Dimension(_)
        | Error::NotSymplectic { .. }
        | Error::NotHamiltonian(_)
        | Error::InvalidInput(_)
        | Error::UnsupportedBasepoint(_)
        | Error::Smoothness { .. }
        | Error::SupportViolation { .. }
        | Error::TrustRadius { .. }
        | Error::Inconsistent(_)
        | Error::Io(_)
        | Error::Parse(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.globals;
    let result = match &cli.command {
        Command::Jacobi(a) => geodesic::jacobi(a, g),
        Command::Brackets(a) => geodesic::brackets(a, g),
        Command::Certify1(a) => geodesic::certify1(a, g),
        Command::Certify2(a) => geodesic::certify2(a, g),
        Command::Steer(a) => steer::run(a, g),
        Command::Franks(a) => franks::run(a, g),
        Command::Appendix(c) => appendix::run(c, g),
        Command::Persist(c) => persist::run(c, g),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(msg)) => {
            eprintln!("sympsteer: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("sympsteer: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
