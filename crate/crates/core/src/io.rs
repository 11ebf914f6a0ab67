//! File formats: matrix JSON, matrix-path and curvature CSV, system definitions, sequences and sweeps.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::appendix::{PolyPair, PolynomialJson, RationalPolynomial};
use crate::control::drift::ConstantDrift;
use crate::control::system::BilinearSystem;
use crate::error::{Error, Result};
use crate::geodesic::{self, CurvatureProfile, GeodesicDrift};
use crate::persistence::PeriodicSymplecticSequence;
use crate::symplectic::{Mat, DEFAULT_TOL};

fn tagged<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        Error::Io(io) => Error::Parse(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn read_text(path: &Path) -> Result<String> {
    tagged(path, fs::read_to_string(path).map_err(Error::from))
}

/// Square matrix as `{"dim": n, "data": [row-major entries]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl From<&Mat> for MatrixJson {
    fn from(m: &Mat) -> Self {
        Self { dim: m.nrows(), data: m.transpose().iter().copied().collect() }
    }
}

impl TryFrom<&MatrixJson> for Mat {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Mat> {
        if j.dim == 0 || j.data.len() != j.dim * j.dim {
            return Err(Error::Parse(format!("dim {} needs {} entries, found {}", j.dim, j.dim * j.dim, j.data.len())));
        }
        if j.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite matrix entry".into()));
        }
        Ok(Mat::from_row_slice(j.dim, j.dim, &j.data))
    }
}

pub fn parse_matrix(text: &str) -> Result<Mat> {
    let j: MatrixJson = serde_json::from_str(text)?;
    Mat::try_from(&j)
}

pub fn read_matrix(path: &Path) -> Result<Mat> {
    tagged(path, read_text(path).and_then(|t| parse_matrix(&t)))
}

pub fn matrix_json(m: &Mat) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MatrixJson::from(m))?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

/// One row per sample: `t, entries row-major`.
pub fn write_matrix_path<W: Write>(out: W, times: &[f64], mats: &[Mat]) -> Result<()> {
    if times.len() != mats.len() {
        return Err(Error::Dimension("times and matrices differ in length".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut header = vec!["t".to_string()];
    header.extend((0..n * n).map(|e| format!("m_{}_{}", e / n + 1, e % n + 1)));
    w.write_record(&header)?;
    for (t, m) in times.iter().zip(mats) {
        if m.shape() != (n, n) {
            return Err(Error::Dimension("matrices of differing shape".into()));
        }
        let mut row = vec![t.to_string()];
        row.extend(m.transpose().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn numeric_rows<R: Read>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("line {line}: not a number: {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok(rows)
}

pub fn read_matrix_path<R: Read>(input: R) -> Result<(Vec<f64>, Vec<Mat>)> {
    let rows = numeric_rows(input)?;
    let entries = rows[0].len().saturating_sub(1);
    let n = (entries as f64).sqrt().round() as usize;
    if n == 0 || n * n != entries {
        return Err(Error::Parse(format!("{entries} entry columns do not form a square matrix")));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut mats = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != entries + 1 {
            return Err(Error::Parse(format!("row {} has {} columns, expected {}", i + 1, row.len(), entries + 1)));
        }
        times.push(row[0]);
        mats.push(Mat::from_row_slice(n, n, &row[1..]));
    }
    Ok((times, mats))
}

fn triangle_dim(entries: usize) -> Option<usize> {
    (1..=64).find(|m| m * (m + 1) / 2 == entries)
}

/// `t, r_11, r_12, …, r_mm` (upper triangle, row-major), interpolated by cubic splines.
pub fn read_curvature_csv<R: Read>(input: R) -> Result<CurvatureProfile> {
    let rows = numeric_rows(input)?;
    let entries = rows[0].len().saturating_sub(1);
    let m = triangle_dim(entries).ok_or_else(|| Error::Parse(format!("{entries} entry columns are not m(m+1)/2")))?;
    let mut times = Vec::with_capacity(rows.len());
    let mut samples = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != entries + 1 {
            return Err(Error::Parse(format!("row {} has {} columns, expected {}", i + 1, row.len(), entries + 1)));
        }
        let mut r = Mat::zeros(m, m);
        let mut vals = row[1..].iter();
        for a in 0..m {
            for b in a..m {
                let v = *vals.next().expect("length checked");
                r[(a, b)] = v;
                r[(b, a)] = v;
            }
        }
        times.push(row[0]);
        samples.push(r);
    }
    CurvatureProfile::sampled(&times, &samples)
}

pub fn write_curvature_csv<W: Write>(out: W, profile: &CurvatureProfile, times: &[f64]) -> Result<()> {
    let m = profile.m();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for a in 0..m {
        for b in a..m {
            header.push(format!("r_{}{}", a + 1, b + 1));
        }
    }
    w.write_record(&header)?;
    for &t in times {
        let r = profile.at(t);
        let sym = (&r + r.transpose()) * 0.5;
        let mut row = vec![t.to_string()];
        for a in 0..m {
            for b in a..m {
                row.push(sym[(a, b)].to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Curvature preset strings: `flat`, `constant:c`, `oscillatory:amplitude,frequency`.
pub fn parse_preset(spec: &str, m: usize) -> Result<CurvatureProfile> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = || -> Result<Vec<f64>> {
        args.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("preset {spec:?}: bad number {s:?}"))))
            .collect()
    };
    match name.trim() {
        "flat" if args.is_empty() => Ok(CurvatureProfile::flat(m)),
        "constant" | "constant_curvature" => match nums()?.as_slice() {
            [c] => Ok(CurvatureProfile::constant(m, *c)),
            _ => Err(Error::Parse(format!("preset {spec:?}: expected constant:c"))),
        },
        "oscillatory" => match nums()?.as_slice() {
            [a, f] => Ok(CurvatureProfile::oscillatory(m, *a, *f)),
            [] => Ok(CurvatureProfile::oscillatory(m, 1.0, 3.0)),
            _ => Err(Error::Parse(format!("preset {spec:?}: expected oscillatory:amplitude,frequency"))),
        },
        _ => Err(Error::Parse(format!("unknown curvature preset {spec:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Flat {},
    ConstantCurvature { c: f64 },
    Oscillatory { amplitude: f64, frequency: f64 },
    /// Curvature CSV; relative paths resolve against the system file.
    Csv { path: PathBuf },
    /// Constant drift matrix for explicit generators.
    Matrix { matrix: MatrixJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    /// `"geodesic"`: the `ℰ(ij)` channels.
    Preset(String),
    Explicit(Vec<MatrixJson>),
}

/// System definition file (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m: usize,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub drift: DriftSpec,
    #[serde(default = "geodesic_generators")]
    pub generators: GeneratorSpec,
}

fn geodesic_generators() -> GeneratorSpec {
    GeneratorSpec::Preset("geodesic".into())
}

impl SystemConfig {
    pub fn parse(text: &str, toml_format: bool) -> Result<Self> {
        let cfg: SystemConfig = if toml_format { toml::from_str(text)? } else { serde_json::from_str(text)? };
        if cfg.m == 0 {
            return Err(Error::Parse("m must be positive".into()));
        }
        if !(cfg.t_final > 0.0 && cfg.t_final.is_finite()) {
            return Err(Error::Parse(format!("T must be positive, got {}", cfg.t_final)));
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let toml_format = path.extension().is_some_and(|e| e == "toml");
        let mut cfg = tagged(path, read_text(path).and_then(|t| Self::parse(&t, toml_format)))?;
        if let DriftSpec::Csv { path: p } = &mut cfg.drift {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Curvature behind a geodesic drift; `None` for a matrix drift.
    pub fn curvature(&self) -> Result<Option<CurvatureProfile>> {
        Ok(Some(match &self.drift {
            DriftSpec::Flat {} => CurvatureProfile::flat(self.m),
            DriftSpec::ConstantCurvature { c } => CurvatureProfile::constant(self.m, *c),
            DriftSpec::Oscillatory { amplitude, frequency } => CurvatureProfile::oscillatory(self.m, *amplitude, *frequency),
            DriftSpec::Csv { path } => {
                let file = tagged(path, fs::File::open(path).map_err(Error::from))?;
                let r = tagged(path, read_curvature_csv(file))?;
                if r.m() != self.m {
                    return Err(Error::Parse(format!("{}: curvature has m = {}, system declares m = {}", path.display(), r.m(), self.m)));
                }
                r
            }
            DriftSpec::Matrix { .. } => return Ok(None),
        }))
    }

    pub fn build(&self) -> Result<BilinearSystem> {
        let curvature = self.curvature()?;
        let sys = match (&self.generators, curvature) {
            (GeneratorSpec::Preset(name), Some(r)) if name == "geodesic" => geodesic::build_system(&r)?,
            (GeneratorSpec::Preset(name), _) => {
                return Err(Error::Parse(format!("generator preset {name:?} needs a curvature drift; known presets: geodesic")))
            }
            (GeneratorSpec::Explicit(list), curvature) => {
                let gens = list.iter().map(Mat::try_from).collect::<Result<Vec<_>>>()?;
                let drift: Arc<dyn crate::control::drift::Drift> = match (curvature, &self.drift) {
                    (Some(r), _) => Arc::new(GeodesicDrift(r)),
                    (None, DriftSpec::Matrix { matrix }) => Arc::new(ConstantDrift(Mat::try_from(matrix)?)),
                    (None, _) => unreachable!("only matrix drifts lack a curvature"),
                };
                BilinearSystem::new(drift, gens, DEFAULT_TOL)?
            }
        };
        if sys.m() != self.m {
            return Err(Error::Parse(format!("system has m = {}, file declares m = {}", sys.m(), self.m)));
        }
        if let Some(k) = self.k {
            if k != sys.k() {
                return Err(Error::Parse(format!("file declares k = {k}, generators give k = {}", sys.k())));
            }
        }
        Ok(sys)
    }
}

/// `{"period": n, "maps": [matrix, …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceJson {
    pub period: usize,
    pub maps: Vec<MatrixJson>,
}

impl SequenceJson {
    pub fn from_sequence(seq: &PeriodicSymplecticSequence) -> Self {
        Self { period: seq.period(), maps: seq.maps().iter().map(|m| MatrixJson::from(m.mat())).collect() }
    }

    pub fn into_sequence(&self, tol: f64) -> Result<PeriodicSymplecticSequence> {
        if self.period != self.maps.len() {
            return Err(Error::Parse(format!("period {} but {} maps", self.period, self.maps.len())));
        }
        let mats = self.maps.iter().map(Mat::try_from).collect::<Result<Vec<_>>>()?;
        PeriodicSymplecticSequence::new(mats, tol)
    }
}

pub fn read_sequence(path: &Path, tol: f64) -> Result<PeriodicSymplecticSequence> {
    tagged(
        path,
        read_text(path).and_then(|t| serde_json::from_str::<SequenceJson>(&t).map_err(Error::from)).and_then(|j| j.into_sequence(tol)),
    )
}

/// Sequence files may also hold a family: a JSON list of sequences.
pub fn read_family(path: &Path, tol: f64) -> Result<Vec<PeriodicSymplecticSequence>> {
    let text = read_text(path)?;
    let parsed = match serde_json::from_str::<Vec<SequenceJson>>(&text) {
        Ok(list) => list.iter().map(|j| j.into_sequence(tol)).collect(),
        Err(_) => serde_json::from_str::<SequenceJson>(&text).map_err(Error::from).and_then(|j| j.into_sequence(tol)).map(|s| vec![s]),
    };
    tagged(path, parsed)
}

pub fn read_polynomial(path: &Path) -> Result<RationalPolynomial> {
    tagged(path, read_text(path).and_then(|t| serde_json::from_str::<PolynomialJson>(&t).map_err(Error::from)).and_then(|j| RationalPolynomial::try_from(&j)))
}

/// `{"f": polynomial, "g": polynomial}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    pub f: PolynomialJson,
    pub g: PolynomialJson,
}

impl From<&PolyPair> for PairJson {
    fn from(p: &PolyPair) -> Self {
        Self { f: (&p.f).into(), g: (&p.g).into() }
    }
}

pub fn read_pair(path: &Path) -> Result<PolyPair> {
    tagged(
        path,
        read_text(path).and_then(|t| serde_json::from_str::<PairJson>(&t).map_err(Error::from)).and_then(|j| {
            Ok(PolyPair { f: RationalPolynomial::try_from(&j.f)?, g: RationalPolynomial::try_from(&j.g)? })
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub residual: f64,
    pub norm_l2: f64,
    pub norm_c2: f64,
    pub iterations: usize,
}

/// Sweep CSV with a `# fitted_exponent,<value>` footer.
pub fn write_sweep<W: Write>(mut out: W, rows: &[SweepRow], fitted_exponent: f64) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["delta", "residual", "norm_L2", "norm_C2", "iterations"])?;
        for r in rows {
            w.write_record(&[r.delta.to_string(), r.residual.to_string(), r.norm_l2.to_string(), r.norm_c2.to_string(), r.iterations.to_string()])?;
        }
        w.flush()?;
    }
    writeln!(out, "# fitted_exponent,{fitted_exponent}")?;
    Ok(())
}

pub fn read_sweep<R: Read>(input: R) -> Result<(Vec<SweepRow>, Option<f64>)> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let exponent = text
        .lines()
        .find_map(|l| l.strip_prefix("# fitted_exponent,"))
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad fitted exponent {v:?}"))))
        .transpose()?;
    let rows = numeric_rows(text.as_bytes())?
        .into_iter()
        .map(|r| match r.as_slice() {
            [d, res, l2, c2, it] => Ok(SweepRow { delta: *d, residual: *res, norm_l2: *l2, norm_c2: *c2, iterations: *it as usize }),
            _ => Err(Error::Parse(format!("sweep row has {} columns, expected 5", r.len()))),
        })
        .collect::<Result<_>>()?;
    Ok((rows, exponent))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
