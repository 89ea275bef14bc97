//! Initial data generators and the prepackaged studies.
//!
//! * [`regularization_study`]: distance between regularized runs and the
//!   unregularized one as the regularization index grows.
//! * [`exponent_sweep`]: boundedness classification across exponents and grids.
//! * [`mesh_convergence`]: observed order under factor-2 refinement.
//!
//! Every study is a pure function of its inputs. Failed runs show up as
//! rows with a failure verdict rather than being dropped.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{lq_norm, make_grid, Grid, GridKind, GridSpec, ScalarField};
use crate::integrator::{run, RunOutcome, RunVerdict, Schedule};
use crate::io::config::RunConfig;
use crate::monitors::{boundedness_verdict, InvariantReport, MonitorRecord, Recorder};

/// Nonnegative initial densities compatible with zero-flux boundaries.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Constant {
        base: f64,
    },
    /// `base + amplitude * exp(-|x - center|^2 / (2 width^2))`; the center
    /// defaults to the middle of a box and to the origin of a ball.
    GaussianBump {
        amplitude: f64,
        width: f64,
        center: Option<Vec<f64>>,
        base: f64,
    },
    /// `base + amplitude * prod_i cos(k_i pi x_i / L_i)` with `|amplitude| < base`.
    PerturbedConstant {
        base: f64,
        amplitude: f64,
        modes: Vec<usize>,
    },
}

/// Largest admissible normal derivative of a Gaussian at the boundary.
pub const GAUSSIAN_BOUNDARY_SLOPE: f64 = 1e-12;

impl InitialData {
    pub fn kind_name(&self) -> &'static str {
        match self {
            InitialData::Constant { .. } => "constant",
            InitialData::GaussianBump { .. } => "gaussian",
            InitialData::PerturbedConstant { .. } => "perturbed_constant",
        }
    }

    fn center(&self, spec: &GridSpec<f64>) -> Vec<f64> {
        match self {
            InitialData::GaussianBump { center: Some(c), .. } => c.clone(),
            _ if spec.kind == GridKind::Radial => vec![0.0],
            _ => spec.extents.iter().map(|l| 0.5 * l).collect(),
        }
    }

    pub fn validate(&self, spec: &GridSpec<f64>) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInitialData(m));
        match self {
            InitialData::Constant { base } => {
                if !(*base >= 0.0 && base.is_finite()) {
                    return bad(format!("constant level {base} must be finite and >= 0"));
                }
            }
            InitialData::GaussianBump { amplitude, width, base, .. } => {
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return bad(format!("amplitude {amplitude} must be finite and >= 0"));
                }
                if !(*width > 0.0 && width.is_finite()) {
                    return bad(format!("width {width} must be positive"));
                }
                if !(*base >= 0.0 && base.is_finite()) {
                    return bad(format!("base {base} must be finite and >= 0"));
                }
                let center = self.center(spec);
                if center.len() != spec.kind.axes() {
                    return bad(format!("center needs {} coordinate(s)", spec.kind.axes()));
                }
                // distance from the center to each boundary piece; for a ball the
                // origin counts as one so the profile stays smooth there
                let mut distances = Vec::new();
                for (&c, &l) in center.iter().zip(&spec.extents) {
                    if !(0.0..=l).contains(&c) {
                        return bad(format!("center coordinate {c} outside [0, {l}]"));
                    }
                    distances.push(c);
                    distances.push(l - c);
                }
                let slope = distances
                    .iter()
                    .map(|&d| amplitude * d / (width * width) * (-d * d / (2.0 * width * width)).exp())
                    .fold(0.0, f64::max);
                if slope > GAUSSIAN_BOUNDARY_SLOPE {
                    return bad(format!(
                        "boundary-normal derivative {slope:e} exceeds {GAUSSIAN_BOUNDARY_SLOPE:e}; narrow the bump or move it"
                    ));
                }
            }
            InitialData::PerturbedConstant { base, amplitude, modes } => {
                if !(*base > 0.0 && base.is_finite()) {
                    return bad(format!("base {base} must be positive"));
                }
                if !(amplitude.abs() < *base) {
                    return bad(format!("|amplitude| = {} must be below base {base}", amplitude.abs()));
                }
                if modes.len() != spec.kind.axes() {
                    return bad(format!("modes need {} entries", spec.kind.axes()));
                }
            }
        }
        Ok(())
    }
}

/// Samples the initial density at the cell centers.
pub fn make_initial(data: &InitialData, g: &Grid<f64>) -> Result<ScalarField<f64>> {
    let spec = g.spec();
    data.validate(spec)?;
    let axes = spec.kind.axes();
    match data {
        InitialData::Constant { base } => Ok(ScalarField::constant(g, *base)),
        InitialData::GaussianBump { amplitude, width, base, .. } => {
            let c = data.center(spec);
            let s2 = 2.0 * width * width;
            ScalarField::from_fn(g, |x| {
                let r2: f64 = (0..axes).map(|a| (x[a] - c[a]).powi(2)).sum();
                base + amplitude * (-r2 / s2).exp()
            })
        }
        InitialData::PerturbedConstant { base, amplitude, modes } => ScalarField::from_fn(g, |x| {
            let prod: f64 = (0..axes)
                .map(|a| (modes[a] as f64 * std::f64::consts::PI * x[a] / spec.extents[a]).cos())
                .product();
            base + amplitude * prod
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    /// The full model with the configured parameters.
    Full,
    /// Heat equation (chi = mu = 0) with dt proportional to h^2.
    Diffusion,
    /// Manufactured cosine solution of `-Lap v + v = b`.
    Elliptic,
}

impl MeshKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshKind::Full => "full",
            MeshKind::Diffusion => "diffusion",
            MeshKind::Elliptic => "elliptic",
        }
    }

    /// Accepted range of observed orders.
    pub fn order_window(self) -> (f64, f64) {
        match self {
            MeshKind::Full => (0.8, 1.5),
            MeshKind::Diffusion | MeshKind::Elliptic => (1.8, 2.2),
        }
    }
}

impl FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MeshKind::Full),
            "diffusion" => Ok(MeshKind::Diffusion),
            "elliptic" => Ok(MeshKind::Elliptic),
            other => Err(Error::InvalidParameter(format!("unknown mesh study `{other}` (full, diffusion, elliptic)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyVerdict {
    Pass,
    Fail,
    Inconclusive,
    /// Exploratory study without a pass criterion.
    Recorded,
}

impl fmt::Display for StudyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyVerdict::Pass => "pass",
            StudyVerdict::Fail => "fail",
            StudyVerdict::Inconclusive => "inconclusive",
            StudyVerdict::Recorded => "recorded",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub config: Vec<(String, String)>,
    pub outcomes: Vec<(String, f64)>,
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub name: String,
    pub rows: Vec<StudyRow>,
    pub verdict: StudyVerdict,
    /// Rendered base configuration.
    pub stamp: String,
}

impl StudyResult {
    pub fn outcome(&self, row: usize, name: &str) -> Option<f64> {
        self.rows.get(row)?.outcomes.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

/// A finished simulation with its checkpoint series and invariant report.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub outcome: RunOutcome<f64>,
    pub records: Vec<MonitorRecord<f64>>,
    pub report: InvariantReport<f64>,
    pub initial_mass: f64,
    pub initial_max: f64,
    /// Worst per-step mass-balance margin, if any step was taken.
    pub worst_mass_identity: Option<f64>,
    pub steps: usize,
}

/// Runs `cfg` as configured.
pub fn simulate(cfg: &RunConfig) -> Result<Trajectory> {
    let g = make_grid(cfg.grid.clone())?;
    let u0 = make_initial(&cfg.init, &g)?;
    let initial_mass = crate::grid::integrate(&u0, &g)?;
    let initial_max = u0.max();
    let schedule = Schedule { t_end: cfg.t_end, monitor_every: cfg.monitor_every, q_list: cfg.q_list.clone() };
    let mut recorder = Recorder::new(&g, cfg.model.mu, cfg.model.elliptic.rel_tol);
    let outcome = run(u0, &cfg.model, &g, &cfg.dt, &schedule, &mut recorder)?;
    let report = recorder.report(initial_mass);
    Ok(Trajectory {
        worst_mass_identity: recorder.worst_mass_identity(),
        steps: recorder.steps_audited(),
        records: recorder.records,
        outcome,
        report,
        initial_mass,
        initial_max,
    })
}

fn final_state_at(cfg: &RunConfig, t: f64) -> Result<RunOutcome<f64>> {
    let mut c = cfg.clone();
    c.t_end = t;
    c.monitor_every = t;
    let g = make_grid(c.grid.clone())?;
    let u0 = make_initial(&c.init, &g)?;
    let schedule = Schedule { t_end: t, monitor_every: t, q_list: Vec::new() };
    run(u0, &c.model, &g, &c.dt, &schedule, &mut |_: MonitorRecord<f64>| {})
}

fn fmt_n(n: f64) -> String {
    if n.is_infinite() {
        "inf".into()
    } else {
        n.to_string()
    }
}

/// Distance of regularized solutions to the unregularized one at `t_eval`.
///
/// Passes when the error is nonincreasing over the sorted finite indices
/// and the error at the largest index is at most a quarter of the error at
/// the smallest. Increases within 1e-10 make the study inconclusive.
pub fn regularization_study(base: &RunConfig, n_list: &[f64], t_eval: f64) -> Result<StudyResult> {
    let stamp = base.render();
    let g = make_grid(base.grid.clone())?;
    let with_n = |n: f64| {
        let mut c = base.clone();
        c.model.limiter.n_reg = n;
        c
    };
    let reference = final_state_at(&with_n(f64::INFINITY), t_eval)?;
    let mut sorted = n_list.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut rows = Vec::new();
    let mut finite_errors = Vec::new();
    let mut failed = reference.verdict != RunVerdict::Completed;
    for &n in &sorted {
        let out =
            if n.is_infinite() { reference.clone() } else { final_state_at(&with_n(n), t_eval)? };
        let diff = out.state.u.combine(1.0, &reference.state.u, -1.0)?;
        let (e_inf, e_2) = (crate::grid::linf_norm(&diff), lq_norm(&diff, &g, 2.0)?);
        if out.verdict != RunVerdict::Completed {
            failed = true;
        } else if n.is_finite() {
            finite_errors.push(e_inf);
        }
        rows.push(StudyRow {
            config: vec![("n_reg".into(), fmt_n(n))],
            outcomes: vec![("e_linf".into(), e_inf), ("e_l2".into(), e_2), ("t".into(), out.state.t)],
            verdict: out.verdict.to_string(),
        });
    }
    let verdict = if failed {
        StudyVerdict::Fail
    } else if finite_errors.len() < 2 {
        StudyVerdict::Inconclusive
    } else {
        let increases: Vec<f64> = finite_errors.windows(2).map(|w| w[1] - w[0]).collect();
        let ratio_ok = finite_errors[finite_errors.len() - 1] <= 0.25 * finite_errors[0];
        if increases.iter().all(|&d| d <= 0.0) && ratio_ok {
            StudyVerdict::Pass
        } else if increases.iter().all(|&d| d <= 1e-10) && ratio_ok {
            StudyVerdict::Inconclusive
        } else {
            StudyVerdict::Fail
        }
    };
    Ok(StudyResult { name: "regularization".into(), rows, verdict, stamp })
}

/// Boundedness classification for every `(p, grid)` pair; exploratory.
pub fn exponent_sweep(base: &RunConfig, p_list: &[f64], grids: &[GridSpec<f64>], t_end: f64) -> Result<StudyResult> {
    let stamp = base.render();
    let mut rows = Vec::new();
    for &p in p_list {
        for spec in grids {
            let mut c = base.clone();
            c.model.limiter.p = p;
            c.grid = spec.clone();
            c.t_end = t_end;
            c.model.validate()?;
            let traj = simulate(&c)?;
            let peak = traj.records.iter().map(|r| r.max_u).fold(traj.initial_max, f64::max);
            let verdict = match traj.outcome.verdict {
                RunVerdict::Completed => boundedness_verdict(&traj.records, base.study.window_split)
                    .map(|b| b.to_string())
                    .unwrap_or_else(|_| "inconclusive".into()),
                other => other.to_string(),
            };
            rows.push(StudyRow {
                config: vec![
                    ("p".into(), p.to_string()),
                    ("grid".into(), spec.kind.to_string()),
                    ("cells".into(), spec.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x")),
                    ("dim".into(), spec.dim.to_string()),
                    ("run_verdict".into(), traj.outcome.verdict.to_string()),
                ],
                outcomes: vec![
                    ("initial_max_u".into(), traj.initial_max),
                    ("peak_max_u".into(), peak),
                    ("t_final".into(), traj.outcome.state.t),
                ],
                verdict,
            });
        }
    }
    Ok(StudyResult { name: "exponent_sweep".into(), rows, verdict: StudyVerdict::Recorded, stamp })
}

/// Volume-weighted average of a field onto the grid with half as many
/// cells per axis.
pub fn restrict(fine: &ScalarField<f64>, fine_grid: &Grid<f64>, coarse_grid: &Grid<f64>) -> Result<ScalarField<f64>> {
    let fs = fine_grid.spec();
    let cs = coarse_grid.spec();
    if fs.kind != cs.kind || fs.extents != cs.extents || fs.dim != cs.dim
        || fs.cells.iter().zip(&cs.cells).any(|(&f, &c)| f != 2 * c)
    {
        return Err(Error::InvalidGrid("restriction needs the same domain with doubled cells".into()));
    }
    let fv = fine.values();
    let fvol = fine_grid.cell_volumes();
    let mut sum = vec![0.0; coarse_grid.cell_count()];
    let mut vol = vec![0.0; coarse_grid.cell_count()];
    for (k, (&u, &w)) in fv.iter().zip(fvol).enumerate() {
        let parent = match fs.kind {
            GridKind::Cartesian2d => {
                let (i, j) = (k % fs.cells[0], k / fs.cells[0]);
                (j / 2) * cs.cells[0] + i / 2
            }
            _ => k / 2,
        };
        sum[parent] += u * w;
        vol[parent] += w;
    }
    ScalarField::from_values(coarse_grid, sum.iter().zip(&vol).map(|(s, v)| s / v).collect())
}

type Profile = Box<dyn Fn([f64; 2]) -> f64>;

fn manufactured_error(spec: &GridSpec<f64>, opts: &crate::elliptic::EllipticOptions<f64>) -> Result<f64> {
    use std::f64::consts::PI;
    let g = make_grid(spec.clone())?;
    let k = 2.0;
    let (exact, rhs): (Profile, Profile) = match spec.kind {
        GridKind::Cartesian1d => {
            let l = spec.extents[0];
            let w = k * PI / l;
            (Box::new(move |x| (w * x[0]).cos()), Box::new(move |x| (1.0 + w * w) * (w * x[0]).cos()))
        }
        GridKind::Cartesian2d => {
            let (wx, wy) = (k * PI / spec.extents[0], k * PI / spec.extents[1]);
            let f = move |x: [f64; 2]| (wx * x[0]).cos() * (wy * x[1]).cos();
            (Box::new(f), Box::new(move |x| (1.0 + wx * wx + wy * wy) * f(x)))
        }
        GridKind::Radial => {
            let (r0, n) = (spec.extents[0], spec.dim as f64);
            let f = move |r: f64| r * r * (r0 - r).powi(2);
            let rhs = move |r: f64| {
                let d1 = 2.0 * r * (r0 - r).powi(2) - 2.0 * r * r * (r0 - r);
                let d2 = 2.0 * (r0 - r).powi(2) - 8.0 * r * (r0 - r) + 2.0 * r * r;
                f(r) - d2 - (n - 1.0) / r * d1
            };
            (Box::new(move |x| f(x[0])), Box::new(move |x| rhs(x[0])))
        }
    };
    let b = ScalarField::from_fn(&g, rhs)?;
    let v = crate::elliptic::solve_v(&b, &g, opts)?;
    let e = ScalarField::from_fn(&g, exact)?.combine(1.0, &v, -1.0)?;
    lq_norm(&e, &g, 2.0)
}

/// Observed convergence order under factor-2 refinement.
///
/// For [`MeshKind::Full`] and [`MeshKind::Diffusion`] the errors are
/// self-convergence differences `||R u_{2h} ... ||`: the finer solution is
/// averaged onto the coarser grid. For [`MeshKind::Elliptic`] they are true
/// errors against the manufactured solution.
pub fn mesh_convergence(base: &RunConfig, cells_list: &[usize], t_eval: f64, kind: MeshKind) -> Result<StudyResult> {
    if cells_list.len() < 3 {
        return Err(Error::InvalidParameter(format!("{} grid levels, at least 3 needed", cells_list.len())));
    }
    if cells_list.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter("grid levels must refine by a factor of 2".into()));
    }
    let stamp = base.render();
    let axes = base.grid.kind.axes();
    let specs: Vec<GridSpec<f64>> =
        cells_list.iter().map(|&n| GridSpec { cells: vec![n; axes], ..base.grid.clone() }).collect();
    let h0 = base.grid.extents[0] / cells_list[0] as f64;

    let mut errors = Vec::new();
    let mut verdicts = Vec::new();
    match kind {
        MeshKind::Elliptic => {
            for spec in &specs {
                errors.push(manufactured_error(spec, &base.model.elliptic)?);
                verdicts.push(RunVerdict::Completed);
            }
        }
        MeshKind::Full | MeshKind::Diffusion => {
            let mut finals = Vec::new();
            for spec in &specs {
                let mut c = base.clone();
                c.grid = spec.clone();
                if kind == MeshKind::Diffusion {
                    c.model.chi = 0.0;
                    c.model.mu = 0.0;
                    let h = spec.extents[0] / spec.cells[0] as f64;
                    c.dt.dt_max = base.dt.dt_max * (h / h0).powi(2);
                    c.dt.dt_min = c.dt.dt_min.min(0.5 * c.dt.dt_max);
                }
                let out = final_state_at(&c, t_eval)?;
                verdicts.push(out.verdict);
                finals.push((make_grid(spec.clone())?, out.state.u));
            }
            for w in finals.windows(2) {
                let (cg, cu) = &w[0];
                let (fg, fu) = &w[1];
                let diff = restrict(fu, fg, cg)?.combine(1.0, cu, -1.0)?;
                errors.push(lq_norm(&diff, cg, 2.0)?);
            }
        }
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let (lo, hi) = kind.order_window();
    let verdict = if verdicts.iter().any(|&v| v != RunVerdict::Completed) {
        StudyVerdict::Fail
    } else if errors.windows(2).any(|w| !(w[1] < w[0])) {
        StudyVerdict::Inconclusive
    } else if orders.iter().all(|&o| o >= lo && o <= hi) {
        StudyVerdict::Pass
    } else {
        StudyVerdict::Fail
    };
    let rows = specs
        .iter()
        .enumerate()
        .map(|(i, spec)| StudyRow {
            config: vec![
                ("kind".into(), kind.as_str().into()),
                ("cells".into(), spec.cells[0].to_string()),
            ],
            outcomes: vec![
                ("h".into(), spec.extents[0] / spec.cells[0] as f64),
                ("error".into(), errors.get(i).copied().unwrap_or(f64::NAN)),
                ("order".into(), orders.get(i).copied().unwrap_or(f64::NAN)),
            ],
            verdict: verdicts[i].to_string(),
        })
        .collect();
    Ok(StudyResult { name: format!("mesh_{}", kind.as_str()), rows, verdict, stamp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use crate::io::config::parse_config;
    use approx::assert_relative_eq;

    #[test]
    fn constant_and_perturbed_profiles() {
        let g = make_grid(GridSpec::cartesian1d(1.0, 64)).unwrap();
        let c = make_initial(&InitialData::Constant { base: 1.0 }, &g).unwrap();
        assert!(c.values().iter().all(|&x| x == 1.0));
        let p = make_initial(&InitialData::PerturbedConstant { base: 1.0, amplitude: 0.1, modes: vec![1] }, &g).unwrap();
        assert!(p.values().iter().all(|&x| (0.9..=1.1).contains(&x)));
        assert!(p.values()[0] > 1.09 && p.values()[63] < 0.91);
        let bad = InitialData::PerturbedConstant { base: 1.0, amplitude: 1.5, modes: vec![1] };
        assert!(make_initial(&bad, &g).is_err());
    }

    #[test]
    fn gaussian_mass() {
        // 4 * 2 pi sigma^2 for the analytic integral over the plane
        let g = make_grid(GridSpec::unit_square(128)).unwrap();
        let data = InitialData::GaussianBump { amplitude: 4.0, width: 0.05, center: None, base: 0.0 };
        let u = make_initial(&data, &g).unwrap();
        let exact = 4.0 * 2.0 * std::f64::consts::PI * 0.05f64.powi(2);
        let m = integrate(&u, &g).unwrap();
        assert!((m - exact).abs() < 0.01 * exact, "{m} vs {exact}");
        assert!(u.min() >= 0.0);
    }

    #[test]
    fn wide_gaussian_is_not_neumann_compatible() {
        let g = make_grid(GridSpec::unit_square(16)).unwrap();
        let data = InitialData::GaussianBump { amplitude: 4.0, width: 0.2, center: None, base: 0.0 };
        assert!(matches!(make_initial(&data, &g), Err(Error::InvalidInitialData(_))));
        let off = InitialData::GaussianBump { amplitude: 4.0, width: 0.05, center: Some(vec![0.9, 0.5]), base: 0.0 };
        assert!(make_initial(&off, &g).is_err());
    }

    #[test]
    fn restriction_preserves_integral() {
        let fine = make_grid(GridSpec::unit_square(16)).unwrap();
        let coarse = make_grid(GridSpec::unit_square(8)).unwrap();
        let u = ScalarField::from_fn(&fine, |[x, y]| x * x + 3.0 * y).unwrap();
        let r = restrict(&u, &fine, &coarse).unwrap();
        assert_relative_eq!(integrate(&r, &coarse).unwrap(), integrate(&u, &fine).unwrap(), max_relative = 1e-14);
        let rf = make_grid(GridSpec::radial(1.0, 16, 3)).unwrap();
        let rc = make_grid(GridSpec::radial(1.0, 8, 3)).unwrap();
        let ur = ScalarField::from_fn(&rf, |[r, _]| 1.0 + r).unwrap();
        let rr = restrict(&ur, &rf, &rc).unwrap();
        assert_relative_eq!(integrate(&rr, &rc).unwrap(), integrate(&ur, &rf).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn regularization_is_inert_without_chemotaxis() {
        let cfg = parse_config(
            "grid.kind = cartesian1d\ngrid.cells = 32\nmodel.p = 1.4\nmodel.chi = 0\ninit.kind = perturbed_constant\n",
        )
        .unwrap();
        let res = regularization_study(&cfg, &[1.0, 4.0, f64::INFINITY], 0.2).unwrap();
        assert_eq!(res.rows.len(), 3);
        for row in 0..3 {
            assert!(res.outcome(row, "e_linf").unwrap() <= 1e-12);
        }
        assert_eq!(res.verdict, StudyVerdict::Pass);
    }

    #[test]
    fn small_gradients_make_the_limiter_inert() {
        // max |grad v|^(p-1) stays far below 1e-8 * n for every n in the list
        let cfg = parse_config(
            "grid.kind = cartesian1d\ngrid.cells = 32\nmodel.p = 1.9\nmodel.chi = 1\n\
             init.kind = perturbed_constant\ninit.amplitude = 1e-12\n",
        )
        .unwrap();
        let res = regularization_study(&cfg, &[1.0, 4.0, 16.0], 0.1).unwrap();
        for row in 0..3 {
            assert!(res.outcome(row, "e_linf").unwrap() <= 1e-8);
        }
    }

    #[test]
    fn elliptic_mesh_study_is_second_order() {
        for kind in ["cartesian1d", "cartesian2d"] {
            let cfg = parse_config(&format!("grid.kind = {kind}\nmodel.p = 1.4\n")).unwrap();
            let res = mesh_convergence(&cfg, &[16, 32, 64], 1.0, MeshKind::Elliptic).unwrap();
            assert_eq!(res.verdict, StudyVerdict::Pass, "{res:?}");
        }
    }

    #[test]
    fn diffusion_mesh_study_is_second_order() {
        let cfg = parse_config(
            "grid.kind = cartesian1d\nmodel.p = 1.4\ninit.kind = perturbed_constant\ninit.amplitude = 0.5\ndt.max = 1e-3\n",
        )
        .unwrap();
        let res = mesh_convergence(&cfg, &[16, 32, 64, 128], 0.05, MeshKind::Diffusion).unwrap();
        assert_eq!(res.verdict, StudyVerdict::Pass, "{res:?}");
    }

    #[test]
    fn mesh_study_input_checks() {
        let cfg = RunConfig::benchmark();
        assert!(mesh_convergence(&cfg, &[16, 32], 0.1, MeshKind::Full).is_err());
        assert!(mesh_convergence(&cfg, &[16, 32, 48], 0.1, MeshKind::Full).is_err());
    }

    #[test]
    fn sweep_has_one_row_per_pair() {
        let cfg = parse_config(
            "grid.kind = cartesian1d\ngrid.cells = 16\nmodel.p = 1.4\nmodel.chi = 1\ninit.kind = perturbed_constant\nrun.monitor_every = 0.05\n",
        )
        .unwrap();
        let grids = vec![GridSpec::cartesian1d(1.0, 16), GridSpec::cartesian1d(1.0, 32)];
        let res = exponent_sweep(&cfg, &[1.2, 1.4], &grids, 1.0).unwrap();
        assert_eq!(res.rows.len(), 4);
        assert_eq!(res.verdict, StudyVerdict::Recorded);
        assert!(res.rows.iter().all(|r| r.verdict == "bounded"), "{res:?}");
        // pure function of the inputs
        assert_eq!(exponent_sweep(&cfg, &[1.2, 1.4], &grids, 1.0).unwrap(), res);
    }
}
