//! Trajectory diagnostics and invariant checks.
//!
//! The a priori bounds for the model come with non-explicit constants, so
//! the checks here compare against computable quantities: the mass bound
//! `max(m0, |Omega|)`, exact per-step mass balance, a sign tolerance, and
//! linear-in-time growth of the accumulated gradient energy.

use std::fmt;

use crate::elliptic::relative_residual;
use crate::error::{Error, Result};
use crate::flux::face_gradient_magnitude;
use crate::grid::{integrate, lq_norm, Grid, ScalarField};
use crate::integrator::{Observer, SimState};
use crate::scalar::Real;

/// Diagnostics at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorRecord<T> {
    pub t: T,
    pub dt: T,
    pub mass: T,
    pub min_u: T,
    pub max_u: T,
    /// `(q, ||u||_{L^{2q}})` for each configured `q`.
    pub lq: Vec<(T, T)>,
    /// Largest face gradient magnitude of `v`.
    pub grad_v_max: T,
    pub grad_energy_cum: T,
    /// `||(I - Lap_h) v - u||_2 / ||u||_2`.
    pub elliptic_residual: T,
}

/// `sum_faces area * h * ((u_j - u_i) / h)^2`, the discrete `||grad u||_2^2`.
pub fn gradient_energy<T: Real>(u: &ScalarField<T>, g: &Grid<T>) -> Result<T> {
    g.check(u.grid_id())?;
    let x = u.values();
    Ok(g.interior_faces()
        .iter()
        .map(|f| {
            let d = x[f.right] - x[f.left];
            f.transmissibility() * d * d
        })
        .sum())
}

/// Evaluates the diagnostics of `state`.
pub fn record<T: Real>(state: &SimState<T>, g: &Grid<T>, q_list: &[T]) -> Result<MonitorRecord<T>> {
    let u = &state.u;
    let two = T::lit(2.0);
    let lq = q_list.iter().map(|&q| Ok((q, lq_norm(u, g, two * q)?))).collect::<Result<Vec<_>>>()?;
    Ok(MonitorRecord {
        t: state.t,
        dt: state.last_dt,
        mass: integrate(u, g)?,
        min_u: u.min(),
        max_u: u.max(),
        lq,
        grad_v_max: face_gradient_magnitude(&state.v, g)?.max_abs(),
        grad_energy_cum: state.grad_energy_cum,
        elliptic_residual: relative_residual(&state.v, u, g, T::one(), T::one())?,
    })
}

/// Outcome of one invariant over a trajectory.
///
/// `worst_margin` is observed minus allowed at the worst point, so the
/// invariant holds iff it is `<= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantEntry<T> {
    pub name: String,
    pub pass: bool,
    pub worst_margin: T,
    pub time_of_worst: T,
}

impl<T: Real> InvariantEntry<T> {
    fn from_margins(name: &str, margins: impl Iterator<Item = (T, T)>) -> Self {
        let (time_of_worst, worst_margin) =
            margins.fold((T::zero(), T::neg_infinity()), |best, (t, m)| if m > best.1 { (t, m) } else { best });
        InvariantEntry { name: name.to_string(), pass: worst_margin <= T::zero(), worst_margin, time_of_worst }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantReport<T> {
    pub entries: Vec<InvariantEntry<T>>,
}

impl<T: Real> InvariantReport<T> {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&InvariantEntry<T>> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl<T: Real> fmt::Display for InvariantReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{:<20} {:<4} worst margin {:+.3e} at t = {}",
                e.name,
                if e.pass { "PASS" } else { "FAIL" },
                e.worst_margin.as_f64(),
                e.time_of_worst
            )?;
        }
        Ok(())
    }
}

/// `sup mass <= max(m0, |Omega|) (1 + 1e-10)`.
pub fn check_mass_bound<T: Real>(series: &[MonitorRecord<T>], m0: T, vol: T) -> InvariantEntry<T> {
    let bound = m0.max(vol) * (T::one() + T::lit(1e-10));
    InvariantEntry::from_margins("mass_bound", series.iter().map(|r| (r.t, r.mass - bound)))
}

/// `min_u >= -1e-12 max(1, max_u)` at every record.
pub fn check_nonnegativity<T: Real>(series: &[MonitorRecord<T>]) -> InvariantEntry<T> {
    let tol = T::lit(1e-12);
    InvariantEntry::from_margins(
        "nonnegativity",
        series.iter().map(|r| (r.t, -tol * r.max_u.max(T::one()) - r.min_u)),
    )
}

/// The accumulated gradient energy never decreases.
pub fn check_grad_energy_monotone<T: Real>(series: &[MonitorRecord<T>]) -> InvariantEntry<T> {
    InvariantEntry::from_margins(
        "grad_energy_monotone",
        series.windows(2).map(|w| (w[1].t, w[0].grad_energy_cum - w[1].grad_energy_cum)),
    )
}

/// Least-squares fit `E(t) ~ a + b (t - tc) + c (t - tc)^2` over records
/// with `t` in `[t_from, t_to]`, `tc` the window midpoint. Returns `(b, c)`.
pub fn fit_grad_energy<T: Real>(series: &[MonitorRecord<T>], t_from: T, t_to: T) -> Result<(T, T)> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.t >= t_from && r.t <= t_to)
        .map(|r| (r.t.as_f64(), r.grad_energy_cum.as_f64()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!("{} records in the fit window, at least 3 needed", pts.len())));
    }
    let tc = 0.5 * (t_from.as_f64() + t_to.as_f64());
    // normal equations for the basis 1, s, s^2
    let mut m = [[0.0f64; 4]; 3];
    for &(t, e) in &pts {
        let s = t - tc;
        let basis = [1.0, s, s * s];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            m[i][3] += basis[i] * e;
        }
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap_or(col);
        m.swap(col, pivot);
        if m[col][col] == 0.0 {
            return Err(Error::InvalidParameter("degenerate fit window".into()));
        }
        for row in 0..3 {
            if row != col {
                let factor = m[row][col] / m[col][col];
                let pivot_row = m[col];
                for (x, &p) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    Ok((T::lit(m[1][3] / m[1][1]), T::lit(m[2][3] / m[2][2])))
}

/// Linear growth of the gradient energy over a window: `|c| <= 1e-3 |b|`.
pub fn check_grad_energy_linear<T: Real>(series: &[MonitorRecord<T>], t_from: T, t_to: T) -> InvariantEntry<T> {
    let margin = match fit_grad_energy(series, t_from, t_to) {
        Ok((b, c)) => c.abs() - T::lit(1e-3) * b.abs(),
        Err(_) => T::infinity(),
    };
    InvariantEntry { name: "grad_energy_linear".into(), pass: margin <= T::zero(), worst_margin: margin, time_of_worst: t_to }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundedness {
    Bounded,
    Growing,
    Inconclusive,
}

impl Boundedness {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundedness::Bounded => "bounded",
            Boundedness::Growing => "growing",
            Boundedness::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Minimum series length for [`boundedness_verdict`].
pub const MIN_VERDICT_RECORDS: usize = 10;

/// Compares `sup max_u` before and after `split * T`.
///
/// Bounded when the late supremum is within 5% of the early one, growing
/// when it at least doubled, inconclusive otherwise.
pub fn boundedness_verdict<T: Real>(series: &[MonitorRecord<T>], window_split: T) -> Result<Boundedness> {
    if series.len() < MIN_VERDICT_RECORDS {
        return Err(Error::InvalidParameter(format!(
            "boundedness verdict needs {MIN_VERDICT_RECORDS} records, got {}",
            series.len()
        )));
    }
    if !(window_split > T::zero() && window_split < T::one()) {
        return Err(Error::InvalidParameter(format!("window split {window_split} must lie in (0, 1)")));
    }
    let t_split = window_split * series[series.len() - 1].t;
    let sup = |early: bool| {
        series.iter().filter(|r| (r.t < t_split) == early).fold(T::neg_infinity(), |m, r| m.max(r.max_u))
    };
    let (early, late) = (sup(true), sup(false));
    Ok(if late <= T::lit(1.05) * early {
        Boundedness::Bounded
    } else if late >= T::lit(2.0) * early {
        Boundedness::Growing
    } else {
        Boundedness::Inconclusive
    })
}

/// Observer that keeps every checkpoint record and audits every step.
///
/// Per step it tracks the mass balance `m' - m - dt mu sum u (1 - u) vol`,
/// growth of the mass while it exceeds `|Omega|`, the sign of `u` and the
/// residual of the signal solve.
pub struct Recorder<'g, T: Real> {
    grid: &'g Grid<T>,
    mu: T,
    rel_tol: T,
    pub records: Vec<MonitorRecord<T>>,
    mass_identity: Vec<(T, T)>,
    mass_growth: Vec<(T, T)>,
    step_sign: Vec<(T, T)>,
    v_consistency: Vec<(T, T)>,
}

impl<'g, T: Real> Recorder<'g, T> {
    pub fn new(grid: &'g Grid<T>, mu: T, rel_tol: T) -> Self {
        Recorder {
            grid,
            mu,
            rel_tol,
            records: Vec::new(),
            mass_identity: Vec::new(),
            mass_growth: Vec::new(),
            step_sign: Vec::new(),
            v_consistency: Vec::new(),
        }
    }

    /// Worst per-step mass-balance margin (observed minus allowed).
    pub fn worst_mass_identity(&self) -> Option<T> {
        self.mass_identity.iter().map(|&(_, m)| m).reduce(T::max)
    }

    pub fn steps_audited(&self) -> usize {
        self.mass_identity.len()
    }

    /// Full report; `m0` is the initial mass.
    pub fn report(&self, m0: T) -> InvariantReport<T> {
        let per_step = |name: &str, v: &[(T, T)]| InvariantEntry::from_margins(name, v.iter().copied());
        InvariantReport {
            entries: vec![
                per_step("mass_identity", &self.mass_identity),
                check_mass_bound(&self.records, m0, self.grid.total_volume()),
                per_step("mass_growth", &self.mass_growth),
                check_nonnegativity(&self.records),
                per_step("step_nonnegativity", &self.step_sign),
                per_step("v_consistency", &self.v_consistency),
                check_grad_energy_monotone(&self.records),
            ],
        }
    }
}

impl<'g, T: Real> Observer<T> for Recorder<'g, T> {
    fn checkpoint(&mut self, record: MonitorRecord<T>) {
        self.records.push(record);
    }

    fn step(&mut self, before: &SimState<T>, after: &SimState<T>) {
        let g = self.grid;
        let (Ok(m0), Ok(m1)) = (integrate(&before.u, g), integrate(&after.u, g)) else {
            return;
        };
        let one = T::one();
        let source: T =
            before.u.values().iter().zip(g.cell_volumes()).map(|(&u, &vol)| u * (one - u) * vol).sum();
        let defect = (m1 - m0 - after.last_dt * self.mu * source).abs();
        self.mass_identity.push((after.t, defect - T::lit(1e-11) * m0.abs().max(one)));
        if m0 > g.total_volume() {
            self.mass_growth.push((after.t, m1 - m0 * (one + T::lit(1e-12))));
        }
        let tol = T::lit(1e-12) * after.u.max().abs().max(one);
        self.step_sign.push((after.t, -tol - after.u.min()));
        if let Ok(r) = relative_residual(&after.v, &after.u, g, one, one) {
            self.v_consistency.push((after.t, r - self.rel_tol));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};
    use crate::integrator::ModelParams;
    use approx::assert_relative_eq;

    fn rec(t: f64, mass: f64, min_u: f64, max_u: f64) -> MonitorRecord<f64> {
        MonitorRecord {
            t,
            dt: 0.0,
            mass,
            min_u,
            max_u,
            lq: vec![],
            grad_v_max: 0.0,
            grad_energy_cum: t,
            elliptic_residual: 0.0,
        }
    }

    fn state(g: &Grid<f64>, u: ScalarField<f64>) -> SimState<f64> {
        SimState::initial(u, g, &ModelParams::new(1.0, 1.0, 1.4)).unwrap()
    }

    #[test]
    fn record_of_constant_and_zero() {
        let g = make_grid(GridSpec::unit_square(4)).unwrap();
        let r = record(&state(&g, ScalarField::constant(&g, 1.0)), &g, &[1.0, 2.0, 4.0]).unwrap();
        assert_relative_eq!(r.mass, 1.0);
        assert_eq!((r.min_u, r.max_u), (1.0, 1.0));
        for &(_, n) in &r.lq {
            assert_relative_eq!(n, 1.0, max_relative = 1e-14);
        }
        assert_eq!(r.grad_v_max, 0.0);

        let z = record(&state(&g, ScalarField::zeros(&g)), &g, &[1.0]).unwrap();
        assert_eq!((z.mass, z.min_u, z.max_u, z.lq[0].1, z.grad_v_max), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn record_of_single_cell_indicator() {
        let g = make_grid(GridSpec::unit_square(4)).unwrap();
        let mut u = ScalarField::zeros(&g);
        u.values_mut()[6] = 2.0;
        let r = record(&state(&g, u), &g, &[1.0]).unwrap();
        assert_relative_eq!(r.mass, 0.125);
        assert_eq!(r.max_u, 2.0);
        assert_relative_eq!(r.lq[0].1, 0.5, max_relative = 1e-14);
        assert!(r.elliptic_residual <= 1e-10);
    }

    #[test]
    fn record_is_pure() {
        let g = make_grid(GridSpec::radial(1.0, 16, 3)).unwrap();
        let s = state(&g, ScalarField::from_fn(&g, |[r, _]| 1.0 + r * r).unwrap());
        assert_eq!(record(&s, &g, &[1.0, 2.0]).unwrap(), record(&s, &g, &[1.0, 2.0]).unwrap());
    }

    #[test]
    fn mass_bound_examples() {
        let flat: Vec<_> = (0..5).map(|k| rec(k as f64, 0.5, 0.0, 1.0)).collect();
        assert!(check_mass_bound(&flat, 0.5, 1.0).pass);
        let peak = vec![rec(0.0, 1.0, 0.0, 1.0), rec(1.0, 2.0, 0.0, 1.0), rec(2.0, 1.5, 0.0, 1.0)];
        let e = check_mass_bound(&peak, 1.0, 1.0);
        assert!(!e.pass);
        assert_relative_eq!(e.worst_margin, 1.0, max_relative = 1e-9);
        assert_eq!(e.time_of_worst, 1.0);
    }

    #[test]
    fn nonnegativity_examples() {
        let zeros: Vec<_> = (0..3).map(|k| rec(k as f64, 0.0, 0.0, 0.0)).collect();
        assert!(check_nonnegativity(&zeros).pass);
        let neg = vec![rec(0.0, 1.0, 0.0, 1.0), rec(1.0, 1.0, -1e-3, 1.0)];
        assert!(!check_nonnegativity(&neg).pass);
    }

    #[test]
    fn boundedness_examples() {
        let flat: Vec<_> = (0..12).map(|k| rec(k as f64, 1.0, 0.0, 3.0)).collect();
        assert_eq!(boundedness_verdict(&flat, 0.5).unwrap(), Boundedness::Bounded);
        let doubling: Vec<_> = (0..12).map(|k| rec(k as f64, 1.0, 0.0, 2f64.powi(k))).collect();
        assert_eq!(boundedness_verdict(&doubling, 0.5).unwrap(), Boundedness::Growing);
        let mild: Vec<_> = (0..12).map(|k| rec(k as f64, 1.0, 0.0, 1.0 + 0.05 * k as f64)).collect();
        assert_eq!(boundedness_verdict(&mild, 0.5).unwrap(), Boundedness::Inconclusive);
        assert!(boundedness_verdict(&flat[..5], 0.5).is_err());
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let series: Vec<_> = (0..=30)
            .map(|k| {
                let t = 5.0 + 0.5 * k as f64;
                let s = t - 12.5;
                MonitorRecord { grad_energy_cum: 2.0 + 3.0 * s + 0.01 * s * s, ..rec(t, 0.0, 0.0, 0.0) }
            })
            .collect();
        let (b, c) = fit_grad_energy(&series, 5.0, 20.0).unwrap();
        assert_relative_eq!(b, 3.0, max_relative = 1e-10);
        assert_relative_eq!(c, 0.01, max_relative = 1e-8);
        assert!(!check_grad_energy_linear(&series, 5.0, 20.0).pass);
        let linear: Vec<_> = series
            .iter()
            .map(|r| MonitorRecord { grad_energy_cum: 4.0 * r.t, ..r.clone() })
            .collect();
        assert!(check_grad_energy_linear(&linear, 5.0, 20.0).pass);
    }

    #[test]
    fn gradient_energy_of_linear_profile() {
        // u = x on the unit interval: ||u'||^2 = 1 on the (n - 1) h long interior dual mesh
        let g = make_grid(GridSpec::cartesian1d(1.0, 10)).unwrap();
        let u = ScalarField::from_fn(&g, |[x, _]| x).unwrap();
        assert_relative_eq!(gradient_energy(&u, &g).unwrap(), 0.9, max_relative = 1e-12);
    }
}
