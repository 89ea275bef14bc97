//! Flux-limited chemotactic transport.
//!
//! The chemotactic velocity is `|grad v|^(p-2) grad v`, optionally damped by
//! `1 + |grad v|^(p-1) / n`. For `p < 2` the factor `|grad v|^(p-2)` is
//! singular at critical points of `v`, so it is never formed on its own:
//! faces carry the bounded composite `|grad v|^(p-1)` times the unit
//! direction, and faces whose gradient magnitude is at or below the floor
//! carry exactly zero flux.

use crate::error::{Error, Result};
use crate::grid::{FaceData, FaceVectorField, Grid, GridKind, ScalarField};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct LimiterParams<T> {
    /// Exponent `p` in `(1, 2)`.
    pub p: T,
    /// Regularization index `n > 0`; `T::infinity()` disables the damping.
    pub n_reg: T,
    /// Gradient magnitudes at or below this value produce zero flux.
    pub grad_floor: T,
}

impl<T: Real> LimiterParams<T> {
    pub fn new(p: T) -> Self {
        LimiterParams { p, n_reg: T::infinity(), grad_floor: T::lit(1e-14) }
    }

    pub fn with_regularization(mut self, n_reg: T) -> Self {
        self.n_reg = n_reg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > T::one() && self.p < T::lit(2.0)) {
            return Err(Error::InvalidParameter(format!("p = {} must lie in (1, 2)", self.p)));
        }
        if !(self.n_reg > T::zero()) {
            return Err(Error::InvalidParameter(format!("n_reg = {} must be positive or inf", self.n_reg)));
        }
        if !(self.grad_floor >= T::zero()) || !self.grad_floor.is_finite() {
            return Err(Error::InvalidParameter(format!("grad_floor = {} must be >= 0", self.grad_floor)));
        }
        Ok(())
    }
}

/// Face-normal component of the limited velocity for one face.
///
/// `gnorm` is the full gradient magnitude at the face and `g_normal` its
/// normal component. Equal to `gnorm^(p-1) / (1 + gnorm^(p-1) / n)` times
/// `g_normal / gnorm`, evaluated so that neither an infinite `n` nor a tiny
/// `n` overflows.
#[inline]
pub fn limited_component<T: Real>(gnorm: T, g_normal: T, lp: &LimiterParams<T>) -> T {
    if !(gnorm > lp.grad_floor) || gnorm == T::zero() {
        return T::zero();
    }
    let s = gnorm.powf(lp.p - T::one());
    let n = lp.n_reg;
    let magnitude = if s <= n { s / (T::one() + s / n) } else { n / (T::one() + n / s) };
    let direction = (g_normal / gnorm).max(-T::one()).min(T::one());
    magnitude * direction
}

/// Normal gradient `(v_right - v_left) / h` on interior faces, 0 on the boundary.
pub fn face_gradient<T: Real>(v: &ScalarField<T>, g: &Grid<T>) -> Result<FaceVectorField<T>> {
    g.check(v.grid_id())?;
    let x = v.values();
    let mut out = FaceData::zeros(g);
    for f in g.interior_faces() {
        out.set(f.axis, f.index, (x[f.right] - x[f.left]) / f.spacing);
    }
    Ok(out)
}

/// Cell-centered derivative along one axis of a 2D grid: central in the
/// interior, one-sided in the first and last cell.
fn cell_derivative<T: Real>(x: &[T], nx: usize, ny: usize, h: T, axis: usize) -> Vec<T> {
    let mut d = vec![T::zero(); nx * ny];
    let two = T::lit(2.0);
    for j in 0..ny {
        for i in 0..nx {
            let (k, n, stride) = if axis == 0 { (i, nx, 1) } else { (j, ny, nx) };
            let c = j * nx + i;
            d[c] = if k == 0 {
                (x[c + stride] - x[c]) / h
            } else if k == n - 1 {
                (x[c] - x[c - stride]) / h
            } else {
                (x[c + stride] - x[c - stride]) / (two * h)
            };
        }
    }
    d
}

#[inline]
fn magnitude<T: Real>(a: T, b: T) -> T {
    let m = (a * a + b * b).sqrt();
    if m.is_finite() && m > T::min_positive_value() {
        m
    } else {
        a.hypot(b)
    }
}

/// Full gradient magnitude on each face.
///
/// On 2D grids the tangential component at a face is the mean of the
/// cell-centered tangential derivatives of its two cells. Boundary faces
/// carry no flux and are reported as 0.
pub fn face_gradient_magnitude<T: Real>(v: &ScalarField<T>, g: &Grid<T>) -> Result<FaceData<T>> {
    gradient_parts(v, g).map(|(_, m)| m)
}

/// Normal components and full magnitudes of the face gradients.
fn gradient_parts<T: Real>(v: &ScalarField<T>, g: &Grid<T>) -> Result<(FaceVectorField<T>, FaceData<T>)> {
    let normal = face_gradient(v, g)?;
    let mut out = FaceData::zeros(g);
    match g.kind() {
        GridKind::Cartesian1d | GridKind::Radial => {
            for f in g.interior_faces() {
                out.set(f.axis, f.index, normal.get(f.axis, f.index).abs());
            }
        }
        GridKind::Cartesian2d => {
            let (nx, ny) = (g.spec().cells[0], g.spec().cells[1]);
            let x = v.values();
            let dx = cell_derivative(x, nx, ny, g.h()[0], 0);
            let dy = cell_derivative(x, nx, ny, g.h()[1], 1);
            let half = T::lit(0.5);
            let xs = out.axis_mut(0);
            for j in 0..ny {
                for i in 1..nx {
                    let c = j * nx + i;
                    let t = half * (dy[c - 1] + dy[c]);
                    xs[j * (nx + 1) + i] = magnitude(normal.axis(0)[j * (nx + 1) + i], t);
                }
            }
            let ys = out.axis_mut(1);
            for j in 1..ny {
                for i in 0..nx {
                    let c = j * nx + i;
                    let t = half * (dx[c - nx] + dx[c]);
                    ys[c] = magnitude(normal.axis(1)[c], t);
                }
            }
        }
    }
    Ok((normal, out))
}

/// Applies [`limited_component`] face by face.
pub fn limited_flux<T: Real>(
    gnorm: &FaceData<T>,
    gdir: &FaceVectorField<T>,
    lp: &LimiterParams<T>,
) -> Result<FaceVectorField<T>> {
    lp.validate()?;
    if gnorm.grid_id() != gdir.grid_id() {
        return Err(Error::GridMismatch);
    }
    let mut out = gdir.clone();
    for axis in 0..out.axis_count() {
        for (f, (&m, &n)) in out.axis_mut(axis).iter_mut().zip(gnorm.axis(axis).iter().zip(gdir.axis(axis))) {
            if m < T::zero() {
                return Err(Error::InvalidParameter(format!("negative gradient magnitude {m}")));
            }
            *f = limited_component(m, n, lp);
        }
    }
    Ok(out)
}

/// Limited chemotactic velocity of a signal `v`, with the face gradient magnitudes.
pub fn chemotactic_velocity<T: Real>(
    v: &ScalarField<T>,
    g: &Grid<T>,
    lp: &LimiterParams<T>,
) -> Result<(FaceVectorField<T>, FaceData<T>)> {
    lp.validate()?;
    let (mut flux, gnorm) = gradient_parts(v, g)?;
    for axis in 0..flux.axis_count() {
        for (f, &m) in flux.axis_mut(axis).iter_mut().zip(gnorm.axis(axis)) {
            *f = limited_component(m, *f, lp);
        }
    }
    Ok((flux, gnorm))
}

/// Donor-cell divergence `D = div(chi u F)` as cell averages.
///
/// Each interior face moves `area * chi * F * u_donor`, where the donor is
/// the cell the flow leaves. Boundary faces are never read, so the total
/// `sum_i D_i vol_i` telescopes to zero.
pub fn upwind_divergence<T: Real>(
    u: &ScalarField<T>,
    flux: &FaceVectorField<T>,
    chi: T,
    g: &Grid<T>,
) -> Result<ScalarField<T>> {
    g.check(u.grid_id())?;
    g.check(flux.grid_id())?;
    let x = u.values();
    let mut d = vec![T::zero(); g.cell_count()];
    for f in g.interior_faces() {
        let vel = flux.get(f.axis, f.index);
        let donor = if vel > T::zero() { x[f.left] } else { x[f.right] };
        let q = f.area * chi * vel * donor;
        d[f.left] = d[f.left] + q;
        d[f.right] = d[f.right] - q;
    }
    for (di, &vol) in d.iter_mut().zip(g.cell_volumes()) {
        *di = *di / vol;
    }
    let out = ScalarField::from_raw(g.id(), d);
    out.check_finite()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, GridSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_of_constant_and_linear() {
        let g = make_grid(GridSpec::cartesian1d(1.0, 8)).unwrap();
        let c = ScalarField::constant(&g, 4.0);
        assert!(face_gradient(&c, &g).unwrap().iter().all(|&x| x == 0.0));
        let lin = ScalarField::from_fn(&g, |[x, _]| x).unwrap();
        let grad = face_gradient(&lin, &g).unwrap();
        let a = grad.axis(0);
        assert_eq!(a[0], 0.0);
        assert_eq!(a[8], 0.0);
        for &v in &a[1..8] {
            assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn magnitude_of_linear_fields_in_2d() {
        let g = make_grid(GridSpec::<f64>::unit_square(16)).unwrap();
        for (alpha, beta) in [(3.0, 0.0), (1.5, -2.0), (0.0, 0.7)] {
            let v = ScalarField::from_fn(&g, |[x, y]| alpha * x + beta * y).unwrap();
            let m = face_gradient_magnitude(&v, &g).unwrap();
            let expected = f64::hypot(alpha, beta);
            for f in g.interior_faces() {
                assert!((m.get(f.axis, f.index) - expected).abs() < 1e-12, "{alpha} {beta}");
            }
        }
        let c = ScalarField::constant(&g, 2.0);
        assert!(face_gradient_magnitude(&c, &g).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn limiter_examples() {
        let lp = LimiterParams::new(1.5).with_regularization(1.0);
        // sqrt(2) / (1 + sqrt(2)) from direct evaluation
        assert_relative_eq!(limited_component(2.0, 2.0, &lp), 0.585_786_437_626_905, max_relative = 1e-15);
        assert_eq!(limited_component(0.0, 0.0, &lp), 0.0);
        let unreg = LimiterParams::new(1.3);
        assert_eq!(limited_component(1.0, -1.0, &unreg), -1.0);
        assert_eq!(limited_component(1.0, 0.6, &unreg), 0.6);
        assert!(LimiterParams::new(2.0).validate().is_err());
        assert!(LimiterParams::new(1.0).validate().is_err());
        assert!(LimiterParams::new(1.5).with_regularization(0.0).validate().is_err());
    }

    #[test]
    fn limiter_is_monotone_in_regularization() {
        let ns = [0.5, 1.0, 4.0, 16.0, 64.0, 1e3, f64::INFINITY];
        for &gn in &[1e-6, 0.3, 1.0, 7.0, 1e4] {
            let vals: Vec<f64> =
                ns.iter().map(|&n| limited_component(gn, gn, &LimiterParams::new(1.4).with_regularization(n))).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
            let limit = gn.powf(1.4 - 1.0);
            assert!((vals.last().unwrap() - limit).abs() <= 1e-14 * limit);
            let big = limited_component(gn, gn, &LimiterParams::new(1.4).with_regularization(1e12));
            assert!((big - limit).abs() <= 1e-10 * limit.max(1.0));
        }
    }

    #[test]
    fn upwind_divergence_examples() {
        let g = make_grid(GridSpec::cartesian1d(1.0, 8)).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        let zero = FaceData::zeros(&g);
        assert!(upwind_divergence(&u, &zero, 3.0, &g).unwrap().values().iter().all(|&x| x == 0.0));

        let mut f = FaceData::zeros(&g);
        for k in 1..8 {
            f.set(0, k, 1.0);
        }
        let d = upwind_divergence(&u, &f, 1.0, &g).unwrap();
        let h = 0.125;
        // first cell only loses, last only gains, the bulk is balanced
        assert_relative_eq!(d.values()[0], 1.0 / h);
        assert_relative_eq!(d.values()[7], -1.0 / h);
        assert!(d.values()[1..7].iter().all(|&x| x == 0.0));
        let total: f64 = d.values().iter().zip(g.cell_volumes()).map(|(a, b)| a * b).sum();
        assert_eq!(total, 0.0);
    }

    #[test]
    fn upwind_divergence_is_conservative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let grids = [
            make_grid(GridSpec::unit_square(20)).unwrap(),
            make_grid(GridSpec::radial(1.0, 50, 3)).unwrap(),
            make_grid(GridSpec::cartesian1d(2.0, 30)).unwrap(),
        ];
        for g in &grids {
            for _ in 0..20 {
                let u = ScalarField::from_values(g, (0..g.cell_count()).map(|_| rng.gen_range(0.0..5.0)).collect())
                    .unwrap();
                let mut f = FaceData::zeros(g);
                let mut scale = 0.0f64;
                for face in g.interior_faces() {
                    let v: f64 = rng.gen_range(-3.0..3.0);
                    f.set(face.axis, face.index, v);
                    scale = scale.max((face.area * 2.0 * v).abs() * 5.0);
                }
                let d = upwind_divergence(&u, &f, 2.0, g).unwrap();
                let total: f64 = d.values().iter().zip(g.cell_volumes()).map(|(a, b)| a * b).sum();
                assert!(total.abs() <= 1e-13 * scale * g.cell_count() as f64, "{total}");
            }
        }
    }

    #[test]
    fn positive_flux_moves_mass_right() {
        let g = make_grid(GridSpec::cartesian1d(1.0, 4)).unwrap();
        let u = ScalarField::from_values(&g, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut f = FaceData::zeros(&g);
        f.set(0, 1, 0.5);
        let d = upwind_divergence(&u, &f, 1.0, &g).unwrap();
        assert!(d.values()[0] > 0.0 && d.values()[1] < 0.0);
        // a flux pointing into an empty donor moves nothing
        let mut back = FaceData::zeros(&g);
        back.set(0, 1, -0.5);
        let d = upwind_divergence(&u, &back, 1.0, &g).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
    }
}
