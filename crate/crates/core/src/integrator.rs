//! Semi-implicit time stepping.
//!
//! One step from `(u, v)` with step size `dt`:
//!
//! 1. limited velocity `F` from the face gradients of `v`;
//! 2. donor-cell divergence `D = div(chi u F)`;
//! 3. explicit update `b = u + dt (-D + mu u (1 - u))`;
//! 4. implicit diffusion `(I - dt Lap_h) u' = b`;
//! 5. new signal `(I - Lap_h) v' = u'`.
//!
//! The step size keeps `b` nonnegative whenever `u` is, and the implicit
//! diffusion operator is an M-matrix, so nonnegative data stay nonnegative.
//! Steps 2 and 4 conserve the integral, so the discrete mass changes only
//! through the logistic source.

use std::fmt;
use std::str::FromStr;

use crate::elliptic::{EllipticOptions, HelmholtzSolver};
use crate::error::{Error, Result};
use crate::flux::{chemotactic_velocity, upwind_divergence, LimiterParams};
use crate::grid::{FaceVectorField, Grid, ScalarField};
use crate::monitors::{gradient_energy, record, MonitorRecord};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// Chemotactic sensitivity.
    pub chi: T,
    /// Logistic growth rate.
    pub mu: T,
    pub limiter: LimiterParams<T>,
    pub elliptic: EllipticOptions<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn new(chi: T, mu: T, p: T) -> Self {
        ModelParams { chi, mu, limiter: LimiterParams::new(p), elliptic: EllipticOptions::default() }
    }

    pub fn validate(&self) -> Result<()> {
        // chi = 0 is accepted: it switches chemotaxis off for reference runs
        if !(self.chi >= T::zero()) || !self.chi.is_finite() {
            return Err(Error::InvalidParameter(format!("chi = {} must be >= 0", self.chi)));
        }
        if !(self.mu >= T::zero()) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {} must be >= 0", self.mu)));
        }
        self.limiter.validate()?;
        self.elliptic.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtPolicy<T> {
    pub dt_max: T,
    pub safety: T,
    pub dt_min: T,
    /// Runs stop with [`RunVerdict::BlowupAbort`] once `max u` reaches this.
    pub blowup_threshold: T,
}

impl<T: Real> Default for DtPolicy<T> {
    fn default() -> Self {
        DtPolicy { dt_max: T::lit(1e-2), safety: T::lit(0.9), dt_min: T::lit(1e-12), blowup_threshold: T::lit(1e6) }
    }
}

impl<T: Real> DtPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > T::zero() && self.dt_min < self.dt_max) || !self.dt_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time step bounds need 0 < dt_min ({}) < dt_max ({})",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.safety > T::zero() && self.safety < T::one()) {
            return Err(Error::InvalidParameter(format!("safety factor {} must lie in (0, 1)", self.safety)));
        }
        if !(self.blowup_threshold > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "blow-up threshold {} must be positive",
                self.blowup_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub u: ScalarField<T>,
    /// Always the Helmholtz solve of `u`.
    pub v: ScalarField<T>,
    pub step_count: usize,
    /// Size of the step that produced this state (0 initially).
    pub last_dt: T,
    /// Running `sum_k dt_k ||grad u^k||^2`.
    pub grad_energy_cum: T,
}

impl<T: Real> SimState<T> {
    /// State at `t = 0`; the signal is computed from `u0`.
    pub fn initial(u0: ScalarField<T>, g: &Grid<T>, params: &ModelParams<T>) -> Result<Self> {
        g.check(u0.grid_id())?;
        u0.check_finite()?;
        // starting from u0 keeps spatially constant data exactly constant
        let (v, _) = HelmholtzSolver::new(g).solve(g, &u0, T::one(), T::one(), Some(&u0), &params.elliptic)?;
        Ok(SimState { t: T::zero(), u: u0, v, step_count: 0, last_dt: T::zero(), grad_energy_cum: T::zero() })
    }
}

/// Step size from precomputed face velocities.
fn dt_from_rates<T: Real>(max_velocity: T, max_u: T, params: &ModelParams<T>, g: &Grid<T>, pol: &DtPolicy<T>) -> T {
    // outflow and logistic rates are summed so one step cannot drive b below zero
    let advective = params.chi * max_velocity * g.max_area_per_volume();
    let logistic = params.mu * (max_u - T::one()).max(T::zero());
    let rate = advective + logistic;
    let dt = if rate > T::zero() { pol.dt_max.min(rate.recip()) } else { pol.dt_max };
    (pol.safety * dt).max(pol.dt_min)
}

/// Largest step that keeps the explicit part positivity-preserving, capped
/// by the policy; returns `dt_min` when the constraint is tighter than that.
pub fn stable_dt<T: Real>(state: &SimState<T>, params: &ModelParams<T>, g: &Grid<T>, pol: &DtPolicy<T>) -> Result<T> {
    let (flux, _) = chemotactic_velocity(&state.v, g, &params.limiter)?;
    Ok(dt_from_rates(flux.max_abs(), state.u.max(), params, g, pol))
}

/// Advances one step with a fresh solver workspace. Time loops should use a
/// [`Stepper`] instead.
pub fn step<T: Real>(state: &SimState<T>, params: &ModelParams<T>, g: &Grid<T>, dt: T) -> Result<SimState<T>> {
    let mut stepper = Stepper::new(g, params.clone())?;
    stepper.step(state, dt)
}

/// Time stepper bound to one grid, holding the elliptic workspace.
pub struct Stepper<'g, T: Real> {
    grid: &'g Grid<T>,
    params: ModelParams<T>,
    solver: HelmholtzSolver<T>,
}

impl<'g, T: Real> Stepper<'g, T> {
    pub fn new(grid: &'g Grid<T>, params: ModelParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Stepper { grid, params, solver: HelmholtzSolver::new(grid) })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// Limited chemotactic velocity of the current signal.
    pub fn velocity(&self, state: &SimState<T>) -> Result<FaceVectorField<T>> {
        chemotactic_velocity(&state.v, self.grid, &self.params.limiter).map(|(f, _)| f)
    }

    pub fn stable_dt(&self, state: &SimState<T>, velocity: &FaceVectorField<T>, pol: &DtPolicy<T>) -> T {
        dt_from_rates(velocity.max_abs(), state.u.max(), &self.params, self.grid, pol)
    }

    pub fn step(&mut self, state: &SimState<T>, dt: T) -> Result<SimState<T>> {
        let velocity = self.velocity(state)?;
        self.step_with(state, &velocity, dt)
    }

    /// One step using a velocity already computed from `state.v`.
    pub fn step_with(&mut self, state: &SimState<T>, velocity: &FaceVectorField<T>, dt: T) -> Result<SimState<T>> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        let g = self.grid;
        let p = &self.params;
        let d = upwind_divergence(&state.u, velocity, p.chi, g)?;
        let b: Vec<T> = state
            .u
            .values()
            .iter()
            .zip(d.values())
            .map(|(&u, &div)| u + dt * (p.mu * u * (T::one() - u) - div))
            .collect();
        let b = ScalarField::from_raw(g.id(), b);
        b.check_finite()?;
        let (u, _) = self.solver.solve(g, &b, T::one(), dt, Some(&state.u), &p.elliptic)?;
        let (v, _) = self.solver.solve(g, &u, T::one(), T::one(), Some(&state.v), &p.elliptic)?;
        let energy = gradient_energy(&u, g)?;
        Ok(SimState {
            t: state.t + dt,
            u,
            v,
            step_count: state.step_count + 1,
            last_dt: dt,
            grad_energy_cum: state.grad_energy_cum + dt * energy,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunVerdict {
    Completed,
    BlowupAbort,
    DtUnderflow,
    SolverFailure,
}

impl RunVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            RunVerdict::Completed => "completed",
            RunVerdict::BlowupAbort => "blowup_abort",
            RunVerdict::DtUnderflow => "dt_underflow",
            RunVerdict::SolverFailure => "solver_failure",
        }
    }
}

impl fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunVerdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "completed" => Ok(RunVerdict::Completed),
            "blowup_abort" => Ok(RunVerdict::BlowupAbort),
            "dt_underflow" => Ok(RunVerdict::DtUnderflow),
            "solver_failure" => Ok(RunVerdict::SolverFailure),
            other => Err(Error::InvalidParameter(format!("unknown run verdict `{other}`"))),
        }
    }
}

/// Receives checkpoint records and, optionally, every step.
pub trait Observer<T: Real> {
    fn checkpoint(&mut self, record: MonitorRecord<T>);

    fn step(&mut self, _before: &SimState<T>, _after: &SimState<T>) {}
}

impl<T: Real, F: FnMut(MonitorRecord<T>)> Observer<T> for F {
    fn checkpoint(&mut self, record: MonitorRecord<T>) {
        self(record)
    }
}

/// Time horizon and checkpoint schedule of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T> {
    pub t_end: T,
    pub monitor_every: T,
    /// Exponents `q` of the monitored `L^{2q}` norms.
    pub q_list: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub state: SimState<T>,
    pub verdict: RunVerdict,
    /// Diagnostic for aborted runs.
    pub message: Option<String>,
}

/// Integrates from `u0` to `schedule.t_end`.
///
/// Checkpoints are emitted at `t = 0`, at every multiple of
/// `monitor_every` and at the final time; steps are shortened to land on
/// them exactly. Aborts are reported through the verdict. `Err` is
/// returned only for invalid inputs or a failed initial signal solve.
pub fn run<T: Real>(
    u0: ScalarField<T>,
    params: &ModelParams<T>,
    g: &Grid<T>,
    pol: &DtPolicy<T>,
    schedule: &Schedule<T>,
    observer: &mut dyn Observer<T>,
) -> Result<RunOutcome<T>> {
    pol.validate()?;
    if !(schedule.t_end > T::zero()) || !schedule.t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("t_end = {} must be positive", schedule.t_end)));
    }
    if !(schedule.monitor_every > T::zero()) {
        return Err(Error::InvalidParameter(format!("monitor_every = {} must be positive", schedule.monitor_every)));
    }
    if let Some(q) = schedule.q_list.iter().find(|&&q| !(q >= T::one())) {
        return Err(Error::InvalidParameter(format!("monitored exponent q = {q} must be >= 1")));
    }
    let mut stepper = Stepper::new(g, params.clone())?;
    let mut state = SimState::initial(u0, g, params)?;
    let q = &schedule.q_list;
    observer.checkpoint(record(&state, g, q)?);
    let mut last_emit = state.t;

    let mut k = 1usize;
    let mut next = schedule.monitor_every;
    let (verdict, message) = loop {
        if state.t >= schedule.t_end {
            break (RunVerdict::Completed, None);
        }
        let velocity = match stepper.velocity(&state) {
            Ok(f) => f,
            Err(e) => break (RunVerdict::SolverFailure, Some(e.to_string())),
        };
        let mut dt = stepper.stable_dt(&state, &velocity, pol);
        if dt <= pol.dt_min {
            break (RunVerdict::DtUnderflow, Some(format!("stable step fell to {:e} at t = {}", dt.as_f64(), state.t)));
        }
        let target = next.min(schedule.t_end);
        let landed = state.t + dt >= target;
        if landed {
            dt = target - state.t;
        }
        let mut new = match stepper.step_with(&state, &velocity, dt) {
            Ok(s) => s,
            Err(e) => break (RunVerdict::SolverFailure, Some(e.to_string())),
        };
        if landed {
            new.t = target;
        }
        observer.step(&state, &new);
        state = new;

        if state.u.max() >= pol.blowup_threshold {
            break (
                RunVerdict::BlowupAbort,
                Some(format!("max u = {} reached the threshold at t = {}", state.u.max(), state.t)),
            );
        }
        if landed && target == next {
            observer.checkpoint(record(&state, g, q)?);
            last_emit = state.t;
            k += 1;
            next = schedule.monitor_every * T::from_count(k);
        }
    };
    if state.t != last_emit {
        observer.checkpoint(record(&state, g, q)?);
    }
    Ok(RunOutcome { state, verdict, message })
}
