//! Exact ⊙-calculus on polynomials over ℚ and the polynomial certificates built on it.
//!
//! `h₁ ⊙ h₂ = ∫₀¹ h₁(t) ∫₀ᵗ h₂(s) ds dt`; for monomials `tᵖ ⊙ s^q = α_{p,q} = 1/((q+1)(p+q+2))`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Polynomial with exact rational coefficients, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct RationalPolynomial {
    coeffs: Vec<Rational>,
}

impl fmt::Debug for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalPolynomial[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_ints(&[1])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, p: usize) -> Rational {
        self.coeffs.get(p).cloned().unwrap_or_else(Rational::zero)
    }

    /// `t^k · self`.
    pub fn times_t(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Rational::zero(); k];
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }

    pub fn scale(&self, a: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    /// `∫₀¹ sʳ f(s) ds`.
    pub fn moment(&self, r: usize) -> Rational {
        self.coeffs.iter().enumerate().map(|(p, a)| a / BigInt::from((p + r + 1) as u64)).sum()
    }

    pub fn integral(&self) -> Rational {
        self.moment(0)
    }

    /// Float coefficients (lowest degree first).
    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// `α_{p,q} = 1/((q+1)(p+q+2))`.
pub fn alpha(p: usize, q: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(((q + 1) * (p + q + 2)) as u64))
}

/// `f ⊙ g = Σ α_{p,q} a_p b_q`.
pub fn odot(f: &RationalPolynomial, g: &RationalPolynomial) -> Rational {
    let mut acc = Rational::zero();
    for (p, a) in f.coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (qq, b) in g.coeffs.iter().enumerate() {
            if !b.is_zero() {
                acc += alpha(p, qq) * a * b;
            }
        }
    }
    acc
}

/// `f = 1 − 6t + 6t²`.
pub fn base_f() -> RationalPolynomial {
    RationalPolynomial::from_ints(&[1, -6, 6])
}

/// `(1 − 6t + 6t²) + (1 − 20t + 90t² − 140t³ + 70t⁴)`: zero moments of order 0 and 1,
/// and, unlike any f of degree ≤ 3, admits a base-case `g`.
pub fn fallback_f() -> RationalPolynomial {
    RationalPolynomial::from_ints(&[2, -26, 96, -140, 70])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
}

/// The three integration-by-parts identities:
/// `f⊙(sf) = (∫f)(∫sf) − (tf)⊙f`, `(tf)⊙(sf) = ½(∫sf)²`, `(tg)⊙(sf) = (∫sf)(∫sg) − (tf)⊙(sg)`.
pub fn integration_by_parts_identities(f: &RationalPolynomial, g: &RationalPolynomial) -> Vec<IdentityCheck> {
    let tf = f.times_t(1);
    let tg = g.times_t(1);
    let sf = f.times_t(1);
    let sg = g.times_t(1);
    let mk = |name: &str, lhs: Rational, rhs: Rational| IdentityCheck {
        name: name.into(),
        holds: lhs == rhs,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
    };
    vec![
        mk("f⊙(sf) = (∫f)(∫sf) − (tf)⊙f", odot(f, &sf), f.integral() * f.moment(1) - odot(&tf, f)),
        mk("(tf)⊙(sf) = ½(∫sf)²", odot(&tf, &sf), q(1, 2) * f.moment(1) * f.moment(1)),
        mk("(tg)⊙(sf) = (∫sf)(∫sg) − (tf)⊙(sg)", odot(&tg, &sf), f.moment(1) * g.moment(1) - odot(&tf, &sg)),
    ]
}

/// Dense exact matrix, row-major.
pub type RationalMatrix = Vec<Vec<Rational>>;

/// The 7 × (d+1) matrix A(d) with rows as printed (shifted-kernel rows 5 and 6 carry the
/// printed sign and scaling).
pub fn build_matrix_a(d: usize) -> Result<RationalMatrix> {
    if d < 6 {
        return Err(Error::InvalidInput(format!("A(d) needs d ≥ 6, got {d}")));
    }
    let row = |f: &dyn Fn(i64) -> Rational| (0..=d as i64).map(f).collect::<Vec<_>>();
    Ok(vec![
        row(&|k| q(1, k + 1)),
        row(&|k| q(1, k + 2)),
        row(&|k| q(k + 1, (k + 3) * (k + 4) * (k + 5))),
        row(&|k| q(k + 2, (k + 4) * (k + 5) * (k + 6))),
        row(&|k| q(k + 2, (k + 3) * (k + 4) * (k + 5))),
        row(&|k| q(k * k - 16 * k - 60, (k + 4) * (k + 5) * (k + 6))),
        row(&|k| q(k + 3, (k + 4) * (k + 5) * (k + 6))),
    ])
}

/// Closed forms of the six base-case constraint rows and the target row (exact scaling).
pub fn closed_form_rows(d: usize) -> RationalMatrix {
    let row = |f: &dyn Fn(i64) -> Rational| (0..=d as i64).map(f).collect::<Vec<_>>();
    vec![
        row(&|k| q(1, k + 1)),
        row(&|k| q(1, k + 2)),
        row(&|k| q(k + 1, (k + 3) * (k + 4) * (k + 5))),
        row(&|k| q(k + 2, (k + 4) * (k + 5) * (k + 6))),
        row(&|k| -q(k + 2, (k + 3) * (k + 4) * (k + 5))),
        row(&|k| q(k * k - 16 * k - 60, 30 * (k + 4) * (k + 5) * (k + 6))),
        row(&|k| q(k + 3, (k + 4) * (k + 5) * (k + 6))),
    ]
}

fn monomial(k: usize) -> RationalPolynomial {
    RationalPolynomial::one().times_t(k)
}

/// A linear form on coefficient vectors of degree ≤ d, given by its values on monomials.
fn form_row(d: usize, phi: impl Fn(&RationalPolynomial) -> Rational) -> Vec<Rational> {
    (0..=d).map(|k| phi(&monomial(k))).collect()
}

/// Labelled linear constraints on a coefficient vector.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub labels: Vec<String>,
    pub rows: RationalMatrix,
}

/// The six conditions on `g` (degree ≤ d) given `f`, built directly from ⊙, then the target row `(tf)⊙(sg)`.
pub fn base_case_system(f: &RationalPolynomial, d: usize) -> (ConstraintSystem, Vec<Rational>) {
    let tf = f.times_t(1);
    let sf = f.times_t(1);
    let s2f = f.times_t(2);
    let rows = vec![
        form_row(d, |g| g.moment(0)),
        form_row(d, |g| g.moment(1)),
        form_row(d, |g| odot(f, &g.times_t(1))),
        form_row(d, |g| odot(f, &g.times_t(2))),
        form_row(d, |g| odot(g, &sf)),
        form_row(d, |g| odot(g, &s2f)),
    ];
    let labels = ["∫g", "∫sg", "f⊙(sg)", "f⊙(s²g)", "g⊙(sf)", "g⊙(s²f)"].iter().map(|s| s.to_string()).collect();
    let target = form_row(d, |g| odot(&tf, &g.times_t(1)));
    (ConstraintSystem { labels, rows }, target)
}

/// Rank by fraction-free (Bareiss) elimination after clearing denominators row by row.
pub fn rank_exact(m: &RationalMatrix) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
            row.iter().map(|c| (c * Rational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in (rank + 1)..rows {
            for c in (col + 1)..cols {
                let v = (&a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c]) / &prev;
                a[r][c] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &RationalMatrix) -> (RationalMatrix, Vec<usize>) {
    let mut a = m.clone();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let v = &a[r][j] * &f;
                    a[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of `{x : Mx = 0}` from the RREF (one vector per free column).
pub fn nullspace(m: &RationalMatrix, cols: usize) -> Vec<Vec<Rational>> {
    if m.is_empty() {
        return (0..cols).map(|k| (0..cols).map(|i| if i == k { Rational::one() } else { Rational::zero() }).collect()).collect();
    }
    let (r, piv) = rref(m);
    (0..cols)
        .filter(|c| !piv.contains(c))
        .map(|free| {
            let mut v = vec![Rational::zero(); cols];
            v[free] = Rational::one();
            for (row, &pc) in piv.iter().enumerate() {
                v[pc] = -r[row][free].clone();
            }
            v
        })
        .collect()
}

/// Solve the square system `G y = e` exactly; `None` if singular.
fn solve_square(g: &RationalMatrix, e: &[Rational]) -> Option<Vec<Rational>> {
    let n = g.len();
    let aug: RationalMatrix = g.iter().zip(e).map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect()).collect();
    let (r, piv) = rref(&aug);
    if piv.len() != n || piv.iter().any(|&p| p >= n) {
        return None;
    }
    Some((0..n).map(|i| r[i][n].clone()).collect())
}

/// Minimum-Euclidean-norm solution of `M x = e` via the normal equations `x = Mᵀ(MMᵀ)⁻¹e`;
/// `None` if the rows are dependent.
pub fn min_norm_solution(m: &RationalMatrix, e: &[Rational]) -> Option<Vec<Rational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let gram: RationalMatrix = (0..rows)
        .map(|i| (0..rows).map(|j| (0..cols).map(|k| &m[i][k] * &m[j][k]).sum()).collect())
        .collect();
    let y = solve_square(&gram, e)?;
    Some((0..cols).map(|k| (0..rows).map(|i| &m[i][k] * &y[i]).sum()).collect())
}

/// `g` of degree ≤ d with the six base-case constraints zero and `(tf)⊙(sg) = 1`, f = 1 − 6t + 6t².
pub fn solve_base_case(d: usize) -> Result<RationalPolynomial> {
    solve_base_case_with(&base_f(), d)
}

/// Same as [`solve_base_case`] for an arbitrary `f`.
pub fn solve_base_case_with(f: &RationalPolynomial, d: usize) -> Result<RationalPolynomial> {
    let (sys, target) = base_case_system(f, d);
    let mut m = sys.rows.clone();
    m.push(target);
    if rank_exact(&m) < m.len() {
        return Err(Error::Infeasible(format!("target form lies in the constraint span at d = {d}")));
    }
    let mut e = vec![Rational::zero(); m.len()];
    *e.last_mut().expect("non-empty") = Rational::one();
    let x = min_norm_solution(&m, &e).ok_or_else(|| Error::Infeasible(format!("singular normal equations at d = {d}")))?;
    Ok(RationalPolynomial::new(x))
}

/// Base-case pair at degree `d`: `f = 1 − 6t + 6t²` when it admits a `g`, else [`fallback_f`].
pub fn base_pair(d: usize) -> Result<PolyPair> {
    match solve_base_case(d) {
        Ok(g) => Ok(PolyPair { f: base_f(), g }),
        Err(Error::Infeasible(_)) => {
            let f = fallback_f();
            let g = solve_base_case_with(&f, d)?;
            Ok(PolyPair { f, g })
        }
        Err(e) => Err(e),
    }
}

/// Smallest `d ≥ 6` for which the base-case system of `f` has full rank 7, scanning up to `d_max`.
pub fn minimal_degree(f: &RationalPolynomial, d_max: usize) -> Option<usize> {
    (6..=d_max).find(|&d| {
        let (sys, target) = base_case_system(f, d);
        let mut m = sys.rows;
        m.push(target);
        rank_exact(&m) == 7
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintValue {
    pub label: String,
    pub value: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembershipReport {
    pub equalities: Vec<ConstraintValue>,
    pub positivity: ConstraintValue,
    pub member: bool,
}

/// Evaluate the eight equalities and the positivity condition defining 𝓛.
pub fn verify_membership_l(f: &RationalPolynomial, g: &RationalPolynomial) -> MembershipReport {
    let eq = |label: &str, v: Rational| ConstraintValue { label: label.into(), ok: v.is_zero(), value: v.to_string() };
    let equalities = vec![
        eq("∫f", f.moment(0)),
        eq("∫sf", f.moment(1)),
        eq("∫g", g.moment(0)),
        eq("∫sg", g.moment(1)),
        eq("f⊙(sg)", odot(f, &g.times_t(1))),
        eq("g⊙(sf)", odot(g, &f.times_t(1))),
        eq("f⊙(s²g)", odot(f, &g.times_t(2))),
        eq("g⊙(s²f)", odot(g, &f.times_t(2))),
    ];
    let p = odot(&f.times_t(1), &g.times_t(1));
    let positivity = ConstraintValue { label: "(tf)⊙(sg) > 0".into(), ok: p.is_positive(), value: p.to_string() };
    let member = equalities.iter().all(|c| c.ok) && positivity.ok;
    MembershipReport { equalities, positivity, member }
}

/// A pair `(f, g)` spanning one direction of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPair {
    pub f: RationalPolynomial,
    pub g: RationalPolynomial,
}

/// The cross conditions between a new pair and an existing one: the left system of (21nov3)
/// constrains `f`, the right one `g`.
fn cross_rows_for_f(d: usize, gl: &RationalPolynomial) -> Vec<Vec<Rational>> {
    vec![
        form_row(d, |f| odot(f, &gl.times_t(1))),
        form_row(d, |f| odot(f, &gl.times_t(2))),
        form_row(d, |f| odot(gl, &f.times_t(1))),
        form_row(d, |f| odot(gl, &f.times_t(2))),
        form_row(d, |f| odot(&f.times_t(1), &gl.times_t(1))),
    ]
}

fn cross_rows_for_g(d: usize, fl: &RationalPolynomial) -> Vec<Vec<Rational>> {
    vec![
        form_row(d, |g| odot(fl, &g.times_t(1))),
        form_row(d, |g| odot(fl, &g.times_t(2))),
        form_row(d, |g| odot(g, &fl.times_t(1))),
        form_row(d, |g| odot(g, &fl.times_t(2))),
        form_row(d, |g| odot(&fl.times_t(1), &g.times_t(1))),
    ]
}

/// Pair `(f, g)` of degree ≤ d such that the span of `basis ∪ {(f, g)}` stays in 𝓛 ∪ {0},
/// normalized by `(tf)⊙(sg) = 1`.
pub fn extend_space(basis: &[PolyPair], d: usize) -> Result<PolyPair> {
    if basis.is_empty() {
        return base_pair(d);
    }
    let mut f_rows = vec![form_row(d, |f| f.moment(0)), form_row(d, |f| f.moment(1))];
    for pair in basis {
        f_rows.extend(cross_rows_for_f(d, &pair.g));
    }
    let candidates = nullspace(&f_rows, d + 1);
    if candidates.is_empty() {
        return Err(Error::Infeasible(format!("no f of degree ≤ {d} satisfies the {} hyperplane conditions", f_rows.len())));
    }
    for cand in candidates {
        let f = RationalPolynomial::new(cand);
        let (sys, target) = base_case_system(&f, d);
        let mut m = sys.rows;
        for pair in basis {
            m.extend(cross_rows_for_g(d, &pair.f));
        }
        m.push(target);
        if rank_exact(&m) < m.len() {
            continue;
        }
        let mut e = vec![Rational::zero(); m.len()];
        *e.last_mut().expect("non-empty") = Rational::one();
        if let Some(x) = min_norm_solution(&m, &e) {
            return Ok(PolyPair { f, g: RationalPolynomial::new(x) });
        }
    }
    Err(Error::Infeasible(format!("no admissible g at degree {d}; increase d")))
}

/// `β·new + Σ αₗ·basisₗ` for each probe coefficient vector `(α₁, …, α_N, β)`; every combination
/// must satisfy the eight equalities and have `(tf)⊙(sg) = β² + Σ αₗ² · (tfₗ)⊙(sgₗ) ≠ 0` unless zero.
pub fn probe_span(pairs: &[PolyPair], probes: &[Vec<i64>]) -> Vec<MembershipReport> {
    probes
        .iter()
        .map(|c| {
            let mut f = RationalPolynomial::zero();
            let mut g = RationalPolynomial::zero();
            for (pair, &a) in pairs.iter().zip(c) {
                let a = Rational::from_integer(BigInt::from(a));
                f = f.add(&pair.f.scale(&a));
                g = g.add(&pair.g.scale(&a));
            }
            verify_membership_l(&f, &g)
        })
        .collect()
}

/// `{"num": [...], "den": [...]}` with decimal-string integers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub num: Vec<serde_json::Value>,
    pub den: Vec<serde_json::Value>,
}

fn parse_int(v: &serde_json::Value) -> Result<BigInt> {
    match v {
        serde_json::Value::String(s) => s.trim().parse().map_err(|_| Error::Parse(format!("not an integer: {s:?}"))),
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Parse(format!("not an integer: {n}"))),
        other => Err(Error::Parse(format!("not an integer: {other}"))),
    }
}

impl From<&RationalPolynomial> for PolynomialJson {
    fn from(p: &RationalPolynomial) -> Self {
        Self {
            num: p.coeffs.iter().map(|c| serde_json::Value::String(c.numer().to_string())).collect(),
            den: p.coeffs.iter().map(|c| serde_json::Value::String(c.denom().to_string())).collect(),
        }
    }
}

impl TryFrom<&PolynomialJson> for RationalPolynomial {
    type Error = Error;

    fn try_from(j: &PolynomialJson) -> Result<Self> {
        if j.num.len() != j.den.len() {
            return Err(Error::Parse("num and den arrays differ in length".into()));
        }
        let coeffs = j
            .num
            .iter()
            .zip(&j.den)
            .map(|(n, d)| {
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(Error::Parse("zero denominator".into()));
                }
                Ok(Rational::new(parse_int(n)?, d))
            })
            .collect::<Result<_>>()?;
        Ok(RationalPolynomial::new(coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odot_examples() {
        let one = RationalPolynomial::one();
        assert_eq!(odot(&one, &one), q(1, 2));
        assert_eq!(odot(&one.times_t(1), &one.times_t(1)), q(1, 8));
        assert_eq!(odot(&base_f(), &one.times_t(1)), q(1, 60));
    }

    #[test]
    fn base_f_moments_vanish() {
        assert!(base_f().moment(0).is_zero());
        assert!(base_f().moment(1).is_zero());
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_exact(&vec![vec![Rational::zero(); 3]; 2]), 0);
        let id: RationalMatrix =
            (0..7).map(|i| (0..7).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
        assert_eq!(rank_exact(&id), 7);
    }

    #[test]
    fn membership_trivial_cases() {
        let zero = RationalPolynomial::zero();
        let r = verify_membership_l(&zero, &zero);
        assert!(r.equalities.iter().all(|c| c.ok) && !r.positivity.ok);
        let one = RationalPolynomial::one();
        assert!(!verify_membership_l(&one, &one).equalities[0].ok);
    }
}
