use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use sympsteer::control::BilinearSystem;
use sympsteer::geodesic::{build_system, CurvatureProfile};
use sympsteer::io::{self, SequenceJson, SystemConfig};
use sympsteer::persistence::PeriodicSymplecticSequence;
use sympsteer::symplectic::{resymplectify, DEFAULT_TOL};
use sympsteer::{Error, Mat, Result, SymplecticMatrix};

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Globals {
    /// Symplectic tolerance for inputs and propagation checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for random targets and samplers.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the main report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Project input matrices and propagated states back onto Sp(m).
    #[arg(long, global = true)]
    pub resymplectify: bool,
}

impl Globals {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    pub fn emit_text(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    pub fn emit<T: Serialize>(&self, report: &T) -> Result<()> {
        self.emit_text(&io::to_json(report)?)
    }

    /// Symplectic check of an input matrix, after optional re-projection.
    pub fn symplectic(&self, m: Mat) -> Result<SymplecticMatrix> {
        let m = if self.resymplectify { resymplectify(&m)? } else { m };
        SymplecticMatrix::new(m, self.tol())
    }

    pub fn sequence(&self, path: &Path) -> Result<PeriodicSymplecticSequence> {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let tag = |e: Error| located(path, e);
        let json: SequenceJson = serde_json::from_str(&text).map_err(|e| tag(Error::Parse(e.to_string())))?;
        if !self.resymplectify {
            return json.into_sequence(self.tol()).map_err(tag);
        }
        let maps = json.maps.iter().map(|m| Mat::try_from(m).and_then(|m| resymplectify(&m))).collect::<Result<Vec<_>>>().map_err(tag)?;
        if maps.len() != json.period {
            return Err(tag(Error::Parse(format!("period {} but {} maps", json.period, maps.len()))));
        }
        PeriodicSymplecticSequence::new(maps, self.tol()).map_err(tag)
    }
}

/// Prefix input-file errors with the file path.
pub fn located(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        e @ (Error::NotSymplectic { .. } | Error::Dimension(_)) => Error::Parse(format!("{}: {e}", path.display())),
        other => other,
    }
}

/// Where the control system comes from: a system file, a curvature preset or a curvature CSV.
#[derive(Debug, Clone, Args)]
pub struct SystemSource {
    /// System definition (TOML or JSON).
    #[arg(long, conflicts_with_all = ["preset", "curvature"])]
    pub system: Option<PathBuf>,
    /// Curvature preset: flat, constant:c, oscillatory:a,f.
    #[arg(long, conflicts_with = "curvature")]
    pub preset: Option<String>,
    /// Curvature CSV (t, r_11, r_12, …, r_mm).
    #[arg(long)]
    pub curvature: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Horizon; overrides the system file.
    #[arg(long = "T")]
    pub t_final: Option<f64>,
}

pub struct LoadedSystem {
    pub sys: BilinearSystem,
    pub curvature: Option<CurvatureProfile>,
    pub t_final: f64,
}

impl SystemSource {
    pub fn load(&self, g: &Globals) -> Result<LoadedSystem> {
        let (sys, curvature, t_file) = if let Some(path) = &self.system {
            let cfg = SystemConfig::read(path)?;
            (cfg.build()?, cfg.curvature()?, Some(cfg.t_final))
        } else {
            let r = self.profile()?;
            (build_system(&r)?, Some(r), None)
        };
        let t_final = self.t_final.or(t_file).unwrap_or(1.0);
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidInput(format!("T must be positive, got {t_final}")));
        }
        let sys = sys.with_tol(g.tol()).with_resymplectify(g.resymplectify);
        Ok(LoadedSystem { sys, curvature, t_final })
    }

    fn profile(&self) -> Result<CurvatureProfile> {
        if let Some(path) = &self.curvature {
            let file = fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            return io::read_curvature_csv(file).map_err(|e| located(path, e));
        }
        io::parse_preset(self.preset.as_deref().unwrap_or("flat"), self.m)
    }

    pub fn load_curvature(&self, g: &Globals) -> Result<(CurvatureProfile, f64)> {
        let loaded = self.load(g)?;
        let r = loaded
            .curvature
            .ok_or_else(|| Error::InvalidInput("this command needs a curvature drift, not a matrix drift".into()))?;
        Ok((r, loaded.t_final))
    }
}

/// `--target` values: a matrix file or `random:δ`.
pub fn target(spec: &str, reference: &SymplecticMatrix, g: &Globals) -> Result<SymplecticMatrix> {
    match spec.strip_prefix("random:") {
        Some(d) => {
            let delta = d.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad target distance {d:?}")))?;
            sympsteer::steering::random_target(reference, delta, g.seed)
        }
        None => {
            let path = Path::new(spec);
            io::read_matrix(path).and_then(|m| g.symplectic(m)).map_err(|e| located(path, e))
        }
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {s:?}"))))
        .collect()
}

/// Result of a subcommand that ran to completion.
pub enum Outcome {
    Pass,
    /// A certificate or verification did not hold.
    Fail(String),
}

impl Outcome {
    pub fn check(pass: bool, why: impl FnOnce() -> String) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail(why())
        }
    }
}

/// Collects selftest checks and reports them on stderr.
pub struct SelfTest {
    name: &'static str,
    failures: Vec<String>,
    count: usize,
}

impl SelfTest {
    pub fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), count: 0 }
    }

    pub fn check(&mut self, label: &str, ok: bool) {
        self.count += 1;
        if !ok {
            self.failures.push(label.to_string());
        }
    }

    pub fn finish(self) -> Outcome {
        if self.failures.is_empty() {
            eprintln!("selftest {}: {} checks ok", self.name, self.count);
            Outcome::Pass
        } else {
            Outcome::Fail(format!("selftest {} failed: {}", self.name, self.failures.join("; ")))
        }
    }
}
