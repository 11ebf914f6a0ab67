use nalgebra::DVector;

use super::grid::TimeGrid;
use super::signal::{ControlBasis, ControlSignal};
use super::system::BilinearSystem;
use crate::error::{Error, Result};
use crate::symplectic::{self, Mat, SymplecticMatrix};

/// Controls are sampled this fraction of a step inside each step, so signals with a jump at a
/// grid node are integrated with their one-sided values.
const CONTROL_NUDGE: f64 = 1e-10;

/// Classical RK4 on a list of matrices: `ẏ = rhs(t_drift, t_control, y)`.
pub(crate) fn rk4<F, O>(grid: &TimeGrid, mut y: Vec<Mat>, rhs: F, mut observe: O) -> Vec<Mat>
where
    F: Fn(f64, f64, &[Mat]) -> Vec<Mat>,
    O: FnMut(usize, &mut Vec<Mat>),
{
    let h = grid.step();
    observe(0, &mut y);
    for n in 0..grid.n_steps() {
        let t = grid.node(n);
        let t1 = grid.node(n + 1);
        let tm = 0.5 * (t + t1);
        let k1 = rhs(t, t + CONTROL_NUDGE * h, &y);
        let y2: Vec<Mat> = y.iter().zip(&k1).map(|(a, k)| a + k * (0.5 * h)).collect();
        let k2 = rhs(tm, tm, &y2);
        let y3: Vec<Mat> = y.iter().zip(&k2).map(|(a, k)| a + k * (0.5 * h)).collect();
        let k3 = rhs(tm, tm, &y3);
        let y4: Vec<Mat> = y.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
        let k4 = rhs(t1, t1 - CONTROL_NUDGE * h, &y4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += (&k1[i] + (&k2[i] + &k3[i]) * 2.0 + &k4[i]) * (h / 6.0);
        }
        observe(n + 1, &mut y);
    }
    y
}

fn check_channels(sys: &BilinearSystem, u: &ControlSignal) -> Result<()> {
    if u.k() != sys.k() {
        return Err(Error::Dimension(format!("control has {} channels, system has {}", u.k(), sys.k())));
    }
    Ok(())
}

fn check_defect(sys: &BilinearSystem, x: &Mat, t: f64) -> Result<f64> {
    let defect = symplectic::symplectic_defect(x)?;
    if !(defect <= sys.tol()) {
        return Err(Error::IntegrationAccuracy { defect, time: t });
    }
    Ok(defect)
}

fn retract_if(sys: &BilinearSystem, x: &mut Mat) {
    if sys.resymplectifies() {
        if let Ok(y) = symplectic::resymplectify(x) {
            *x = y;
        }
    }
}

/// `S(t)` with `Ṡ = A(t)S`, `S(0) = I`, and cached inverses.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub times: Vec<f64>,
    pub samples: Vec<SymplecticMatrix>,
    pub inverses: Vec<Mat>,
    pub max_defect: f64,
}

impl FundamentalSolution {
    pub fn final_state(&self) -> &SymplecticMatrix {
        self.samples.last().expect("non-empty grid")
    }
}

/// States of a controlled trajectory at the grid nodes.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Mat>,
    pub max_defect: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> Result<SymplecticMatrix> {
        SymplecticMatrix::new_unchecked(self.states.last().expect("non-empty grid").clone())
    }
}

pub fn propagate_fundamental(sys: &BilinearSystem, grid: &TimeGrid) -> Result<FundamentalSolution> {
    let traj = propagate_controlled(sys, &ControlSignal::zero(sys.k()), &SymplecticMatrix::identity(sys.m()), grid)?;
    let mut samples = Vec::with_capacity(traj.states.len());
    let mut inverses = Vec::with_capacity(traj.states.len());
    for s in traj.states {
        let inv = s.clone().try_inverse().ok_or_else(|| Error::IntegrationAccuracy { defect: f64::INFINITY, time: 0.0 })?;
        inverses.push(inv);
        samples.push(SymplecticMatrix::new_unchecked(s)?);
    }
    Ok(FundamentalSolution { times: traj.times, samples, inverses, max_defect: traj.max_defect })
}

pub fn propagate_controlled(sys: &BilinearSystem, u: &ControlSignal, x0: &SymplecticMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    check_channels(sys, u)?;
    let zero = u.is_zero();
    let rhs = |t: f64, tc: f64, y: &[Mat]| {
        let m = if zero { sys.drift().at(t) } else { sys.vector_field(t, u.value(tc).as_slice()) };
        vec![m * &y[0]]
    };
    let mut states = Vec::with_capacity(grid.n_steps() + 1);
    rk4(grid, vec![x0.mat().clone()], rhs, |_, y| {
        retract_if(sys, &mut y[0]);
        states.push(y[0].clone());
    });
    let times = grid.nodes();
    let mut max_defect: f64 = 0.0;
    for (x, t) in states.iter().zip(&times) {
        max_defect = max_defect.max(check_defect(sys, x, *t)?);
    }
    Ok(Trajectory { times, states, max_defect })
}

/// `E^{X0,T}(u)`.
pub fn end_point(sys: &BilinearSystem, u: &ControlSignal, x0: &SymplecticMatrix, grid: &TimeGrid) -> Result<SymplecticMatrix> {
    check_channels(sys, u)?;
    let zero = u.is_zero();
    let rhs = |t: f64, tc: f64, y: &[Mat]| {
        let m = if zero { sys.drift().at(t) } else { sys.vector_field(t, u.value(tc).as_slice()) };
        vec![m * &y[0]]
    };
    let y = rk4(grid, vec![x0.mat().clone()], rhs, |_, y| retract_if(sys, &mut y[0]));
    let x = y.into_iter().next().expect("one state");
    check_defect(sys, &x, grid.t_final())?;
    SymplecticMatrix::new_unchecked(x)
}

/// End point and its derivatives with respect to every basis coefficient, exact for the
/// discrete RK4 map.
pub fn basis_jacobian(
    sys: &BilinearSystem,
    basis: &ControlBasis,
    coeffs: &DVector<f64>,
    x0: &SymplecticMatrix,
    grid: &TimeGrid,
) -> Result<(SymplecticMatrix, Vec<Mat>)> {
    if basis.channels() != sys.k() || coeffs.len() != basis.len() {
        return Err(Error::Dimension("basis does not match the system or coefficient vector".into()));
    }
    let n = sys.dim();
    let nb = basis.len();
    let per = basis.per_channel();
    let rhs = |t: f64, tc: f64, y: &[Mat]| {
        let phi = basis.profile_values(tc, 0);
        let u = basis.combine(coeffs, tc, 0);
        let m = sys.vector_field(t, u.as_slice());
        let bx: Vec<Mat> = sys.generators().iter().map(|b| b * &y[0]).collect();
        let mut out = Vec::with_capacity(nb + 1);
        out.push(&m * &y[0]);
        for b in 0..nb {
            out.push(&m * &y[b + 1] + &bx[b / per] * phi[b % per]);
        }
        out
    };
    let mut init = vec![Mat::zeros(n, n); nb + 1];
    init[0] = x0.mat().clone();
    let mut y = rk4(grid, init, rhs, |_, _| {});
    let x = y.remove(0);
    check_defect(sys, &x, grid.t_final())?;
    Ok((SymplecticMatrix::new_unchecked(x)?, y))
}
