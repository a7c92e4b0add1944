//! Reference solvers for the three benchmark systems.
//!
//! All three use classical RK4 in time. The PDEs use second-order finite
//! differences on a uniform grid whose nodes include the 100 output points;
//! the time step is a whole fraction of the output spacing so every output
//! time is hit exactly.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedFunction, SensorGrid};
use crate::error::{Error, Result};

pub const OUTPUT_POINTS: usize = 100;

/// `u₁` of the forced pendulum on an equidistant time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub grid: SensorGrid,
    pub u1: Vec<f64>,
}

/// `u(x, t)` with `values[[i, j]] = u(xᵢ, tⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub x: SensorGrid,
    pub t: SensorGrid,
    pub values: Array2<f64>,
}

impl Field2D {
    pub fn max_abs_diff(&self, other: &Field2D) -> Result<f64> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::dim(
                "field shape",
                format!("{:?}", self.values.dim()),
                format!("{:?}", other.values.dim()),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, y: &mut [f64], t: f64, dt: f64, rhs: &impl Fn(f64, &[f64], &mut [f64])) {
        let h2 = 0.5 * dt;
        rhs(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h2 * self.k1[i];
        }
        rhs(t + h2, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h2 * self.k2[i];
        }
        rhs(t + h2, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        rhs(t + dt, &self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn sample_nodes(f: &EncodedFunction, n: usize) -> Result<Vec<f64>> {
    SensorGrid::new(n)?.points().iter().map(|&x| f.sample_at(x)).collect()
}

fn blow_up(t: f64, y: &[f64]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Solver {
            time: t,
            message: "state became non-finite".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumOptions {
    /// RK4 steps per output interval.
    pub substeps: usize,
}

impl Default for PendulumOptions {
    fn default() -> Self {
        Self { substeps: 100 }
    }
}

/// `u₁′ = u₂, u₂′ = −f₁(t) sin u₁ + f₂(t)`, `u(0) = 0`, on `t ∈ [0, 1]`.
pub fn solve_pendulum(f1: &EncodedFunction, f2: &EncodedFunction) -> Result<OdeSolution> {
    solve_pendulum_with(f1, f2, PendulumOptions::default())
}

pub fn solve_pendulum_with(f1: &EncodedFunction, f2: &EncodedFunction, opts: PendulumOptions) -> Result<OdeSolution> {
    if opts.substeps == 0 {
        return Err(Error::config("substeps", "must be at least 1"));
    }
    let grid = SensorGrid::new(OUTPUT_POINTS)?;
    let intervals = OUTPUT_POINTS - 1;
    let dt = 1.0 / (intervals * opts.substeps) as f64;
    // Forcing is piecewise linear, so evaluation never leaves [0, 1].
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let t = t.clamp(0.0, 1.0);
        let a = f1.sample_at(t).unwrap_or(f64::NAN);
        let b = f2.sample_at(t).unwrap_or(f64::NAN);
        dy[0] = y[1];
        dy[1] = -a * y[0].sin() + b;
    };
    let mut rk = Rk4::new(2);
    let mut y = [0.0, 0.0];
    let mut u1 = Vec::with_capacity(OUTPUT_POINTS);
    u1.push(0.0);
    for j in 0..intervals {
        for s in 0..opts.substeps {
            let t = (j * opts.substeps + s) as f64 * dt;
            rk.step(&mut y, t, dt, &rhs);
            blow_up(t + dt, &y)?;
        }
        u1.push(y[0]);
    }
    Ok(OdeSolution { grid, u1 })
}

/// Shared options of the two PDE solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeOptions {
    /// Interior refinement: the solver grid has `99·refine + 1` nodes.
    pub refine: usize,
    /// Safety factor in `dt ≤ cfl · dx² / (2 max D)`.
    pub cfl: f64,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self { refine: 1, cfl: 0.4 }
    }
}

impl PdeOptions {
    fn validate(&self) -> Result<()> {
        if self.refine == 0 {
            return Err(Error::config("refine", "must be at least 1"));
        }
        // RK4 is stable for the diffusion operator up to roughly cfl = 1.39.
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config("cfl", format!("{} is outside the stable range (0, 1]", self.cfl)));
        }
        Ok(())
    }
}

fn steps_per_output(dt_max: f64) -> usize {
    let out_dt = 1.0 / (OUTPUT_POINTS - 1) as f64;
    (out_dt / dt_max).ceil().max(1.0) as usize
}

fn positive_max(d: &[f64], name: &str) -> Result<f64> {
    if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("{name} must be positive, found {} at node {i}", d[i])));
    }
    Ok(d.iter().cloned().fold(0.0, f64::max))
}

pub const REACTION_RATE: f64 = 0.01;

/// `u_t = (D u_x)_x + k u² + g(x)` with zero initial and boundary values.
pub fn solve_diffusion_reaction(d: &EncodedFunction, g: &EncodedFunction) -> Result<Field2D> {
    solve_diffusion_reaction_with(d, g, REACTION_RATE, PdeOptions::default())
}

pub fn solve_diffusion_reaction_with(d: &EncodedFunction, g: &EncodedFunction, k: f64, opts: PdeOptions) -> Result<Field2D> {
    opts.validate()?;
    let nx = (OUTPUT_POINTS - 1) * opts.refine + 1;
    let dx = 1.0 / (nx - 1) as f64;
    let dn = sample_nodes(d, nx)?;
    let gn = sample_nodes(g, nx)?;
    let dmax = positive_max(&dn, "D")?;
    // D at cell midpoints, arithmetic mean of the two nodes
    let dmid: Vec<f64> = dn.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let sub = steps_per_output(opts.cfl * dx * dx / (2.0 * dmax));
    let dt = 1.0 / ((OUTPUT_POINTS - 1) * sub) as f64;
    let inv_dx2 = 1.0 / (dx * dx);
    let rhs = |_t: f64, u: &[f64], du: &mut [f64]| {
        du[0] = 0.0;
        du[nx - 1] = 0.0;
        for i in 1..nx - 1 {
            let flux = dmid[i] * (u[i + 1] - u[i]) - dmid[i - 1] * (u[i] - u[i - 1]);
            du[i] = flux * inv_dx2 + k * u[i] * u[i] + gn[i];
        }
    };
    let mut u = vec![0.0; nx];
    let mut rk = Rk4::new(nx);
    let mut values = Array2::zeros((OUTPUT_POINTS, OUTPUT_POINTS));
    for j in 1..OUTPUT_POINTS {
        for s in 0..sub {
            let t = ((j - 1) * sub + s) as f64 * dt;
            rk.step(&mut u, t, dt, &rhs);
            blow_up(t + dt, &u)?;
        }
        for i in 0..OUTPUT_POINTS {
            values[[i, j]] = u[i * opts.refine];
        }
    }
    Ok(Field2D {
        x: SensorGrid::new(OUTPUT_POINTS)?,
        t: SensorGrid::new(OUTPUT_POINTS)?,
        values,
    })
}

/// `u_t + u_x − D(x) u_xx = 0` on the unit circle, `u(x, 0) = u₀(x)`.
pub fn solve_advection_diffusion(d: &EncodedFunction, u0: &EncodedFunction) -> Result<Field2D> {
    solve_advection_diffusion_with(d, u0, PdeOptions::default())
}

pub fn solve_advection_diffusion_with(d: &EncodedFunction, u0: &EncodedFunction, opts: PdeOptions) -> Result<Field2D> {
    opts.validate()?;
    let ends = (u0.values()[0], *u0.values().last().unwrap());
    if (ends.0 - ends.1).abs() > 1e-9 * (1.0 + ends.0.abs()) {
        return Err(Error::Domain(format!("initial condition is not periodic: u0(0) = {}, u0(1) = {}", ends.0, ends.1)));
    }
    // Periodic grid: x = 1 is identified with x = 0.
    let n = (OUTPUT_POINTS - 1) * opts.refine;
    let dx = 1.0 / n as f64;
    let mut dn = sample_nodes(d, n + 1)?;
    dn.pop();
    let mut u = sample_nodes(u0, n + 1)?;
    u.pop();
    let dmax = positive_max(&dn, "D")?;
    let dt_max = (opts.cfl * dx * dx / (2.0 * dmax)).min(0.5 * dx);
    let sub = steps_per_output(dt_max);
    let dt = 1.0 / ((OUTPUT_POINTS - 1) * sub) as f64;
    let (c1, c2) = (1.0 / (2.0 * dx), 1.0 / (dx * dx));
    let rhs = |_t: f64, u: &[f64], du: &mut [f64]| {
        for i in 0..n {
            let l = u[(i + n - 1) % n];
            let r = u[(i + 1) % n];
            du[i] = -(r - l) * c1 + dn[i] * (r - 2.0 * u[i] + l) * c2;
        }
    };
    let mut rk = Rk4::new(n);
    let mut values = Array2::zeros((OUTPUT_POINTS, OUTPUT_POINTS));
    let store = |values: &mut Array2<f64>, u: &[f64], j: usize| {
        for i in 0..OUTPUT_POINTS - 1 {
            values[[i, j]] = u[i * opts.refine];
        }
        values[[OUTPUT_POINTS - 1, j]] = u[0];
    };
    store(&mut values, &u, 0);
    for j in 1..OUTPUT_POINTS {
        for s in 0..sub {
            let t = ((j - 1) * sub + s) as f64 * dt;
            rk.step(&mut u, t, dt, &rhs);
            blow_up(t + dt, &u)?;
        }
        store(&mut values, &u, j);
    }
    Ok(Field2D {
        x: SensorGrid::new(OUTPUT_POINTS)?,
        t: SensorGrid::new(OUTPUT_POINTS)?,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn constant(c: f64) -> EncodedFunction {
        EncodedFunction::from_fn(SensorGrid::new(1000).unwrap(), |_| c).unwrap()
    }

    fn smooth(f: impl Fn(f64) -> f64) -> EncodedFunction {
        EncodedFunction::from_fn(SensorGrid::new(20_001).unwrap(), f).unwrap()
    }

    #[test]
    fn pendulum_equilibrium() {
        let f1 = smooth(|t| 1.0 + (3.0 * t).sin());
        let sol = solve_pendulum(&f1, &constant(0.0)).unwrap();
        assert!(sol.u1.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn pendulum_constant_forcing_closed_form() {
        let sol = solve_pendulum(&constant(0.0), &constant(1.0)).unwrap();
        assert_eq!(sol.u1[0], 0.0);
        for (t, u) in sol.grid.points().iter().zip(&sol.u1) {
            assert!((u - t * t / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn pendulum_fourth_order_in_time() {
        let (f1, f2) = (constant(3.0), constant(2.0));
        let run = |s| solve_pendulum_with(&f1, &f2, PendulumOptions { substeps: s }).unwrap().u1;
        let (a, b, c) = (run(1), run(2), run(4));
        let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!(ratio > 12.0, "observed ratio {ratio}");
    }

    #[test]
    fn diffusion_reaction_zero_source() {
        let d = smooth(|x| 0.01 * (1.0 + x));
        let u = solve_diffusion_reaction(&d, &constant(0.0)).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diffusion_reaction_boundaries_and_initial_row() {
        let d = smooth(|x| 0.01 * (1.5 + (4.0 * x).sin().abs()));
        let g = smooth(|x| (6.0 * x).cos());
        let u = solve_diffusion_reaction(&d, &g).unwrap();
        for j in 0..OUTPUT_POINTS {
            assert_eq!(u.values[[0, j]], 0.0);
            assert_eq!(u.values[[OUTPUT_POINTS - 1, j]], 0.0);
        }
        assert!((0..OUTPUT_POINTS).all(|i| u.values[[i, 0]] == 0.0));
    }

    #[test]
    fn diffusion_reaction_linear_sine_mode() {
        let dc = 0.02;
        let d = constant(dc);
        let g = smooth(|x| (PI * x).sin());
        let u = solve_diffusion_reaction_with(&d, &g, 0.0, PdeOptions::default()).unwrap();
        let lam = dc * PI * PI;
        let mut err = 0.0f64;
        for (i, x) in u.x.points().iter().enumerate() {
            for (j, t) in u.t.points().iter().enumerate() {
                let exact = (PI * x).sin() * (1.0 - (-lam * t).exp()) / lam;
                err = err.max((u.values[[i, j]] - exact).abs());
            }
        }
        assert!(err < 1e-4, "max error {err}");
    }

    #[test]
    fn invalid_cfl_rejected() {
        let d = constant(0.01);
        let opts = PdeOptions { refine: 1, cfl: 2.0 };
        assert!(matches!(
            solve_diffusion_reaction_with(&d, &d, 0.01, opts),
            Err(Error::Config { .. })
        ));
        assert!(matches!(solve_diffusion_reaction(&constant(0.0), &d), Err(Error::Domain(_))));
    }

    #[test]
    fn advection_diffusion_constant_state() {
        let d = smooth(|x| 0.05 + 0.1 * (PI * x).sin().powi(2));
        let u = solve_advection_diffusion(&d, &constant(1.75)).unwrap();
        assert!(u.values.iter().all(|&v| (v - 1.75).abs() < 1e-12));
    }

    #[test]
    fn advection_diffusion_fourier_mode() {
        let dc = 0.05;
        let u0 = smooth(|x| (2.0 * PI * x).sin());
        let u = solve_advection_diffusion(&constant(dc), &u0).unwrap();
        let mut err = 0.0f64;
        for (i, x) in u.x.points().iter().enumerate() {
            for (j, t) in u.t.points().iter().enumerate() {
                let exact = (-4.0 * PI * PI * dc * t).exp() * (2.0 * PI * (x - t)).sin();
                err = err.max((u.values[[i, j]] - exact).abs());
            }
        }
        assert!(err < 1e-3, "max error {err}");
    }

    #[test]
    fn advection_diffusion_periodic_output_and_mean() {
        let u0 = smooth(|x| (2.0 * PI * x).cos() + 0.3 * (6.0 * PI * x).sin());
        let u = solve_advection_diffusion(&constant(0.08), &u0).unwrap();
        for j in 0..OUTPUT_POINTS {
            assert_eq!(u.values[[0, j]], u.values[[OUTPUT_POINTS - 1, j]]);
            let mean: f64 = (0..OUTPUT_POINTS - 1).map(|i| u.values[[i, j]]).sum::<f64>() / 99.0;
            assert!(mean.abs() < 1e-8, "mean {mean} at column {j}");
        }
    }

    #[test]
    fn non_periodic_initial_condition_rejected() {
        let u0 = smooth(|x| x);
        assert!(matches!(solve_advection_diffusion(&constant(0.1), &u0), Err(Error::Domain(_))));
    }
}
