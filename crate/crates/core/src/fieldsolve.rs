//! Method-of-lines solver for the vibrating string written as a k = 2
//! Hamilton–De Donder–Weyl system in `(u; pt, px)` over parameters `(t, x)`.
//!
//! The evolved unknowns are `u` and `pt`:
//!
//! ```text
//! u_t  = pt / ρ
//! pt_t = −∂_x px,   px = −τ ∂_x u
//! ```
//!
//! `px` is diagnosed from `u` at every stored time level, so `∂_x u = −px/τ`
//! holds to rounding error. Space uses the 3-point second-order stencil,
//! time the classical 4-stage Runge–Kutta method, and both ends are clamped
//! to zero.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, PointBinding};
use crate::geometry::{axis_derivative, Axis, SectionGrid};
use crate::ksymplectic::KSymplecticSystem;

/// Upper bound on `c·Δt/Δx`.
pub const CFL_LIMIT: f64 = 1.0;
pub const DEFAULT_CFL: f64 = 0.5;
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    #[default]
    DirichletZero,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dirichlet" | "dirichletzero" => Ok(Self::DirichletZero),
            _ => Err(Error::InvalidConfig(format!(
                "unsupported boundary condition `{s}` (only dirichlet-zero)"
            ))),
        }
    }
}

/// A string problem on `[0, L]` with `N` intervals (`N + 1` nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct StringConfig {
    pub rho: f64,
    pub tau: f64,
    pub length: f64,
    pub intervals: usize,
    pub final_time: f64,
    pub dt: f64,
    /// Initial displacement as an expression of `x`.
    pub u0: Expr,
    /// Initial `pt` as an expression of `x`.
    pub pt0: Expr,
    pub bc: BoundaryCondition,
    /// Evolve `px` as a third unknown instead of diagnosing it.
    pub evolve_px: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct StringConfigFile {
    rho: f64,
    tau: f64,
    L: f64,
    N: usize,
    T: f64,
    dt: f64,
    u0: String,
    pt0: String,
    #[serde(default = "default_bc")]
    bc: String,
    #[serde(default)]
    evolve_px: bool,
}

fn default_bc() -> String {
    "dirichlet".into()
}

impl StringConfig {
    /// Standing mode `m` initial data with `Δt` chosen for the given CFL number.
    pub fn standing_wave(rho: f64, tau: f64, length: f64, mode: u32, intervals: usize, final_time: f64, cfl: f64) -> Self {
        let dx = length / intervals as f64;
        let c = (tau / rho).sqrt();
        let u0 = Expr::parse(&format!("sin({}*x)", mode as f64 * std::f64::consts::PI / length))
            .expect("valid standing-wave expression");
        Self {
            rho,
            tau,
            length,
            intervals,
            final_time,
            dt: cfl * dx / c,
            u0,
            pt0: Expr::zero(),
            bc: BoundaryCondition::DirichletZero,
            evolve_px: false,
        }
    }

    /// Parses the TOML form with keys `rho, tau, L, N, T, dt, u0, pt0, bc`.
    pub fn from_toml(source: &str) -> Result<Self> {
        let raw: StringConfigFile = toml::from_str(source).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let cfg = Self {
            rho: raw.rho,
            tau: raw.tau,
            length: raw.L,
            intervals: raw.N,
            final_time: raw.T,
            dt: raw.dt,
            u0: Expr::parse(&raw.u0)?,
            pt0: Expr::parse(&raw.pt0)?,
            bc: raw.bc.parse()?,
            evolve_px: raw.evolve_px,
        };
        cfg.validate_fields()?;
        Ok(cfg)
    }

    pub fn wave_speed(&self) -> f64 {
        (self.tau / self.rho).sqrt()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn cfl(&self) -> f64 {
        self.wave_speed() * self.dt / self.dx()
    }

    pub fn with_intervals(&self, intervals: usize) -> Self {
        Self {
            intervals,
            dt: self.dt * self.intervals as f64 / intervals as f64,
            ..self.clone()
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..self.clone() }
    }

    /// Checks everything except the CFL bound.
    fn validate_fields(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("tau", self.tau),
            ("L", self.length),
            ("T", self.final_time),
            ("dt", self.dt),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
        }
        if self.intervals < MIN_NODES {
            return Err(Error::InvalidConfig(format!(
                "N must be at least {MIN_NODES}, got {}",
                self.intervals
            )));
        }
        for (name, e) in [("u0", &self.u0), ("pt0", &self.pt0)] {
            if let Some(v) = e.free_variables().into_iter().find(|v| !matches!(v.as_str(), "x" | "rho" | "tau" | "L")) {
                return Err(Error::InvalidConfig(format!(
                    "{name} may only use x, rho, tau and L, found `{v}`"
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        let cfl = self.cfl();
        if cfl > CFL_LIMIT {
            return Err(Error::CflViolated { cfl });
        }
        Ok(())
    }

    fn initial_binding(&self) -> PointBinding {
        PointBinding::new()
            .with("rho", self.rho)
            .with("tau", self.tau)
            .with("L", self.length)
    }

    fn sample(&self, e: &Expr, axis: &Axis) -> Result<Vec<f64>> {
        let mut b = self.initial_binding();
        (0..axis.nodes)
            .map(|j| {
                b.insert("x", axis.value(j));
                e.evaluate(&b)
            })
            .collect()
    }

    /// The k-symplectic system whose field equations this problem solves.
    pub fn system(&self) -> KSymplecticSystem {
        KSymplecticSystem::vibrating_string(self.rho, self.tau)
    }
}

/// One time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StringState {
    pub u: Vec<f64>,
    pub pt: Vec<f64>,
    pub px: Vec<f64>,
}

impl StringState {
    pub fn zeros(nodes: usize) -> Self {
        Self {
            u: vec![0.0; nodes],
            pt: vec![0.0; nodes],
            px: vec![0.0; nodes],
        }
    }
}

/// `∫ [pt²/(2ρ) + px²/(2τ)] dx`, trapezoidal.
pub fn energy(state: &StringState, cfg: &StringConfig) -> f64 {
    let density: Vec<f64> = state
        .pt
        .iter()
        .zip(&state.px)
        .map(|(pt, px)| pt * pt / (2.0 * cfg.rho) + px * px / (2.0 * cfg.tau))
        .collect();
    trapezoid(&density, cfg.dx())
}

fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values {
        [] => 0.0,
        [only] => only * dx,
        [first, inner @ .., last] => dx * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

fn d_dx(values: &[f64], dx: f64) -> Vec<f64> {
    axis_derivative(values, &[values.len()], 0, dx).expect("at least MIN_NODES nodes")
}

/// `px = −τ ∂_x u`: centered in the interior and, at the clamped ends, the
/// centered difference against the odd reflection `u_{−1} = 2u_0 − u_1`.
fn diagnose_px(u: &[f64], dx: f64, tau: f64) -> Vec<f64> {
    let n = u.len();
    let mut du = vec![0.0; n];
    for i in 1..n - 1 {
        du[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
    }
    du[0] = (u[1] - u[0]) / dx;
    du[n - 1] = (u[n - 1] - u[n - 2]) / dx;
    du.iter().map(|d| -tau * d).collect()
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostic {
    pub t: f64,
    pub energy: f64,
    /// Max over interior `x` of the three HDW equation residuals at this level.
    pub hdw_residual_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// Section over `(t, x)` with coordinates `u, pt, px`.
    pub grid: SectionGrid,
    pub diagnostics: Vec<Diagnostic>,
    /// Max over interior nodes of each HDW equation:
    /// `u_t − pt/ρ`, `u_x + px/τ`, `pt_t + px_x`.
    pub hdw_residuals: [f64; 3],
    /// Time step actually taken (`T / ceil(T / dt)`).
    pub dt: f64,
    pub cfl: f64,
}

impl Simulation {
    pub fn steps(&self) -> usize {
        self.grid.axes()[0].nodes - 1
    }

    pub fn final_time(&self) -> f64 {
        self.grid.axes()[0].end()
    }

    pub fn state(&self, level: usize) -> StringState {
        let m = self.grid.axes()[1].nodes;
        let row = |name: &str| self.grid.coordinate(name).expect("string coordinates")[level * m..(level + 1) * m].to_vec();
        StringState {
            u: row("u"),
            pt: row("pt"),
            px: row("px"),
        }
    }

    pub fn final_state(&self) -> StringState {
        self.state(self.steps())
    }

    /// Max relative deviation `|E(t) − E(0)| / E(0)` over all levels.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.diagnostics[0].energy;
        let worst = self
            .diagnostics
            .iter()
            .fold(0.0_f64, |m, d| m.max((d.energy - e0).abs()));
        if e0 == 0.0 {
            worst
        } else {
            worst / e0
        }
    }

    pub fn write_diagnostics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "energy", "hdw_residual_max"])?;
        for d in &self.diagnostics {
            w.write_record([d.t.to_string(), d.energy.to_string(), d.hdw_residual_max.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_diagnostics_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_diagnostics_csv(&mut buf)?;
        crate::io::write_atomic(path, &buf)
    }
}

struct Rhs<'a> {
    cfg: &'a StringConfig,
    dx: f64,
}

impl Rhs<'_> {
    /// Time derivative of `[u, pt]` or `[u, pt, px]`.
    fn eval(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (rho, tau, dx) = (self.cfg.rho, self.cfg.tau, self.dx);
        let n = y[0].len();
        let mut du = vec![0.0; n];
        let mut dpt = vec![0.0; n];
        for i in 1..n - 1 {
            du[i] = y[1][i] / rho;
        }
        if self.cfg.evolve_px {
            let dpx_dx = d_dx(&y[2], dx);
            for i in 1..n - 1 {
                dpt[i] = -dpx_dx[i];
            }
            let dpt_dx = d_dx(&y[1], dx);
            let dpx = dpt_dx.iter().map(|d| -tau / rho * d).collect();
            vec![du, dpt, dpx]
        } else {
            let u = &y[0];
            for i in 1..n - 1 {
                dpt[i] = tau * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
            }
            vec![du, dpt]
        }
    }
}

fn axpy(y: &[Vec<f64>], a: f64, k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    y.iter()
        .zip(k)
        .map(|(yi, ki)| yi.iter().zip(ki).map(|(v, d)| v + a * d).collect())
        .collect()
}

fn rk4_step(rhs: &Rhs<'_>, y: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let k1 = rhs.eval(y);
    let k2 = rhs.eval(&axpy(y, 0.5 * dt, &k1));
    let k3 = rhs.eval(&axpy(y, 0.5 * dt, &k2));
    let k4 = rhs.eval(&axpy(y, dt, &k3));
    y.iter()
        .enumerate()
        .map(|(c, yc)| {
            yc.iter()
                .enumerate()
                .map(|(i, v)| v + dt / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]))
                .collect()
        })
        .collect()
}

/// Integrates the string from `t = 0` to `T` and returns the space-time section.
pub fn simulate_string(cfg: &StringConfig) -> Result<Simulation> {
    cfg.validate()?;
    let dx = cfg.dx();
    let nodes = cfg.intervals + 1;
    let x_axis = Axis::new(0.0, dx, nodes);
    let steps = ((cfg.final_time / cfg.dt) - 1e-9).ceil().max(2.0) as usize;
    let dt = cfg.final_time / steps as f64;

    let mut u = cfg.sample(&cfg.u0, &x_axis)?;
    let mut pt = cfg.sample(&cfg.pt0, &x_axis)?;
    for v in [&mut u, &mut pt] {
        v[0] = 0.0;
        v[nodes - 1] = 0.0;
    }
    let mut y = vec![u, pt];
    if cfg.evolve_px {
        let du0 = cfg.u0.differentiate("x");
        let px0 = (Expr::Const(-cfg.tau) * du0).simplify();
        y.push(cfg.sample(&px0, &x_axis)?);
    }

    let rhs = Rhs { cfg, dx };
    let mut values = vec![Vec::with_capacity((steps + 1) * nodes); 3];
    let record = |y: &[Vec<f64>], values: &mut Vec<Vec<f64>>| {
        values[0].extend_from_slice(&y[0]);
        values[1].extend_from_slice(&y[1]);
        if cfg.evolve_px {
            values[2].extend_from_slice(&y[2]);
        } else {
            values[2].extend(diagnose_px(&y[0], dx, cfg.tau));
        }
    };
    record(&y, &mut values);
    for step in 1..=steps {
        y = rk4_step(&rhs, &y, dt);
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        record(&y, &mut values);
    }

    let grid = SectionGrid::new(
        vec![Axis::new(0.0, dt, steps + 1), x_axis],
        vec!["u".into(), "pt".into(), "px".into()],
        values,
    )?;
    let (diagnostics, hdw_residuals) = diagnose(cfg, &grid)?;
    Ok(Simulation {
        grid,
        diagnostics,
        hdw_residuals,
        dt,
        cfl: cfg.wave_speed() * dt / dx,
    })
}

fn diagnose(cfg: &StringConfig, grid: &SectionGrid) -> Result<(Vec<Diagnostic>, [f64; 3])> {
    let shape = grid.shape();
    let (t_axis, x_axis) = (grid.axes()[0], grid.axes()[1]);
    let u = grid.coordinate("u").expect("u");
    let pt = grid.coordinate("pt").expect("pt");
    let px = grid.coordinate("px").expect("px");
    let u_t = axis_derivative(u, &shape, 0, t_axis.spacing)?;
    let u_x = axis_derivative(u, &shape, 1, x_axis.spacing)?;
    let pt_t = axis_derivative(pt, &shape, 0, t_axis.spacing)?;
    let px_x = axis_derivative(px, &shape, 1, x_axis.spacing)?;

    let m = x_axis.nodes;
    let mut overall = [0.0_f64; 3];
    let mut diagnostics = Vec::with_capacity(t_axis.nodes);
    for j in 0..t_axis.nodes {
        let mut row_max = 0.0_f64;
        for i in 1..m - 1 {
            let f = j * m + i;
            let r = [
                (u_t[f] - pt[f] / cfg.rho).abs(),
                (u_x[f] + px[f] / cfg.tau).abs(),
                (pt_t[f] + px_x[f]).abs(),
            ];
            let level_max = r.iter().fold(0.0_f64, |a, &b| a.max(b));
            row_max = row_max.max(level_max);
            if j > 0 && j + 1 < t_axis.nodes {
                for (o, v) in overall.iter_mut().zip(r) {
                    *o = o.max(v);
                }
            }
        }
        let state = StringState {
            u: u[j * m..(j + 1) * m].to_vec(),
            pt: pt[j * m..(j + 1) * m].to_vec(),
            px: px[j * m..(j + 1) * m].to_vec(),
        };
        diagnostics.push(Diagnostic {
            t: t_axis.value(j),
            energy: energy(&state, cfg),
            hdw_residual_max: row_max,
        });
    }
    Ok((diagnostics, overall))
}

/// Max over interior nodes of `|δ_tt u − c² δ_xx u|` with 3-point second
/// differences in both directions.
pub fn wave_equation_residual(sim: &Simulation, cfg: &StringConfig) -> f64 {
    let (t_axis, x_axis) = (sim.grid.axes()[0], sim.grid.axes()[1]);
    let u = sim.grid.coordinate("u").expect("u");
    let m = x_axis.nodes;
    let c2 = cfg.tau / cfg.rho;
    let (dt2, dx2) = (t_axis.spacing * t_axis.spacing, x_axis.spacing * x_axis.spacing);
    let mut worst = 0.0_f64;
    for j in 1..t_axis.nodes - 1 {
        for i in 1..m - 1 {
            let f = j * m + i;
            let utt = (u[f + m] - 2.0 * u[f] + u[f - m]) / dt2;
            let uxx = (u[f + 1] - 2.0 * u[f] + u[f - 1]) / dx2;
            worst = worst.max((utt - c2 * uxx).abs());
        }
    }
    worst
}

/// A displacement field `u(t, x)` to compare simulations against.
pub trait Reference {
    /// `u(t, ·)` at the nodes of `x`.
    fn displacement(&self, t: f64, x: &Axis) -> Result<Vec<f64>>;
}

/// `u = cos(c·mπt/L)·sin(mπx/L)`, `pt = ρ u_t`, `px = −τ u_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandingWave {
    pub rho: f64,
    pub tau: f64,
    pub mode: u32,
    pub length: f64,
}

pub fn analytic_standing_wave(rho: f64, tau: f64, mode: u32, length: f64) -> Result<StandingWave> {
    if mode == 0 {
        return Err(Error::InvalidConfig("standing-wave mode must be at least 1".into()));
    }
    Ok(StandingWave { rho, tau, mode, length })
}

impl StandingWave {
    fn k(&self) -> f64 {
        self.mode as f64 * std::f64::consts::PI / self.length
    }

    fn omega(&self) -> f64 {
        (self.tau / self.rho).sqrt() * self.k()
    }

    /// `(u, pt, px)` at `(t, x)`.
    pub fn at(&self, t: f64, x: f64) -> [f64; 3] {
        let (k, w) = (self.k(), self.omega());
        let u = (w * t).cos() * (k * x).sin();
        let u_t = -w * (w * t).sin() * (k * x).sin();
        let u_x = k * (w * t).cos() * (k * x).cos();
        [u, self.rho * u_t, -self.tau * u_x]
    }

    /// Samples the section on a `(t, x)` grid.
    pub fn sample(&self, t: Axis, x: Axis) -> Result<SectionGrid> {
        SectionGrid::from_fn(vec![t, x], vec!["u".into(), "pt".into(), "px".into()], |p| self.at(p[0], p[1]).to_vec())
    }

    /// The same section as symbolic expressions of `t` and `x`.
    pub fn expressions(&self) -> [Expr; 3] {
        let (k, w) = (Expr::Const(self.k()), Expr::Const(self.omega()));
        let u = (w * Expr::var("t")).cos() * (k * Expr::var("x")).sin();
        let pt = (Expr::Const(self.rho) * u.differentiate("t")).simplify();
        let px = (Expr::Const(-self.tau) * u.differentiate("x")).simplify();
        [u.simplify(), pt, px]
    }
}

impl Reference for StandingWave {
    fn displacement(&self, t: f64, x: &Axis) -> Result<Vec<f64>> {
        Ok((0..x.nodes).map(|i| self.at(t, x.value(i))[0]).collect())
    }
}

/// The identically zero solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ZeroSolution;

impl Reference for ZeroSolution {
    fn displacement(&self, _t: f64, x: &Axis) -> Result<Vec<f64>> {
        Ok(vec![0.0; x.nodes])
    }
}

/// A stored `(t, x)` section, queried at one of its own time levels.
impl Reference for SectionGrid {
    fn displacement(&self, t: f64, x: &Axis) -> Result<Vec<f64>> {
        if self.k() != 2 {
            return Err(Error::DomainMismatch("reference section must have parameters (t, x)".into()));
        }
        let (ta, xa) = (self.axes()[0], self.axes()[1]);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * ta.spacing.min(xa.spacing).min(1.0);
        if xa.nodes != x.nodes || !close(xa.start, x.start) || !close(xa.end(), x.end()) {
            return Err(Error::DomainMismatch("spatial axes differ".into()));
        }
        let level = ((t - ta.start) / ta.spacing).round();
        if !(level >= 0.0 && (level as usize) < ta.nodes && close(ta.value(level as usize), t)) {
            return Err(Error::DomainMismatch(format!("reference has no time level at t = {t}")));
        }
        let u = self
            .coordinate("u")
            .ok_or_else(|| Error::DomainMismatch("reference has no `u` coordinate".into()))?;
        let j = level as usize;
        Ok(u[j * x.nodes..(j + 1) * x.nodes].to_vec())
    }
}

fn level_difference(sim: &SectionGrid, reference: &dyn Reference, level: usize) -> Result<(Vec<f64>, Axis)> {
    if sim.k() != 2 {
        return Err(Error::DomainMismatch("simulation must have parameters (t, x)".into()));
    }
    let (t, x) = (sim.axes()[0], sim.axes()[1]);
    let u = sim
        .coordinate("u")
        .ok_or_else(|| Error::DomainMismatch("simulation has no `u` coordinate".into()))?;
    let row = &u[level * x.nodes..(level + 1) * x.nodes];
    let r = reference.displacement(t.value(level), &x)?;
    Ok((row.iter().zip(&r).map(|(a, b)| a - b).collect(), x))
}

fn final_level(sim: &SectionGrid) -> usize {
    sim.axes()[0].nodes - 1
}

/// Trapezoidal L² norm of the displacement error at the final time.
pub fn l2_error(sim: &SectionGrid, reference: &dyn Reference) -> Result<f64> {
    let (diff, x) = level_difference(sim, reference, final_level(sim))?;
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    Ok(trapezoid(&sq, x.spacing).sqrt())
}

/// Max-norm of the displacement error at the final time.
pub fn linf_error(sim: &SectionGrid, reference: &dyn Reference) -> Result<f64> {
    let (diff, _) = level_difference(sim, reference, final_level(sim))?;
    Ok(max_abs(&diff))
}

/// Max-norm of the displacement error over every stored time level.
pub fn space_time_linf_error(sim: &SectionGrid, reference: &dyn Reference) -> Result<f64> {
    (0..=final_level(sim)).try_fold(0.0_f64, |m, level| {
        Ok(m.max(max_abs(&level_difference(sim, reference, level)?.0)))
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, d| m.max(d.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub intervals: usize,
    pub dx: f64,
    /// Displacement error over the whole space-time grid.
    pub linf: f64,
    /// Displacement error at the final time only.
    pub final_linf: f64,
    /// `log2(e(2Δx) / e(Δx))` from `linf`; `None` on the first level or when
    /// either error is 0.
    pub order: Option<f64>,
}

/// Runs `levels` simulations, doubling `N` each time at a fixed CFL number.
pub fn convergence_study(base: &StringConfig, levels: usize, reference: &dyn Reference) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(Error::InvalidConfig(format!("convergence study needs at least 2 levels, got {levels}")));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let cfg = base.with_intervals(base.intervals << level);
        let sim = simulate_string(&cfg)?;
        let linf = space_time_linf_error(&sim.grid, reference)?;
        let order = rows
            .last()
            .filter(|prev| prev.linf > 0.0 && linf > 0.0)
            .map(|prev| (prev.linf / linf).log2());
        rows.push(ConvergenceRow {
            intervals: cfg.intervals,
            dx: cfg.dx(),
            linf,
            final_linf: linf_error(&sim.grid, reference)?,
            order,
        });
    }
    Ok(rows)
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["N", "dx", "linf_error", "final_linf_error", "observed_order"])?;
    for r in rows {
        w.write_record([
            r.intervals.to_string(),
            r.dx.to_string(),
            r.linf.to_string(),
            r.final_linf.to_string(),
            r.order.map_or_else(|| "n/a".to_string(), |o| o.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
