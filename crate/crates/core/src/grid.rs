//! Discrete domains, cell-centered fields and face-based fields.
//!
//! Three geometries are supported: a uniform interval, a uniform rectangle and
//! a radially symmetric ball in ambient dimension `N`. All of them are
//! finite-volume grids: unknowns live at cell centers, fluxes live on faces,
//! and the domain boundary is a set of zero-flux faces, so homogeneous
//! Neumann conditions hold by construction.
//!
//! Cell storage is row-major with the x index fastest: cell `(i, j)` of a
//! 2D grid sits at `j * nx + i`.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum number of cells along every axis.
pub const MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GridKind {
    Cartesian1d,
    Cartesian2d,
    Radial,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::Cartesian1d => "cartesian1d",
            GridKind::Cartesian2d => "cartesian2d",
            GridKind::Radial => "radial",
        }
    }

    /// Number of storage axes (1 for the interval and the ball, 2 for the rectangle).
    pub fn axes(self) -> usize {
        match self {
            GridKind::Cartesian2d => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian1d" => Ok(GridKind::Cartesian1d),
            "cartesian2d" => Ok(GridKind::Cartesian2d),
            "radial" => Ok(GridKind::Radial),
            other => Err(Error::InvalidGrid(format!(
                "unknown grid kind `{other}` (expected cartesian1d, cartesian2d or radial)"
            ))),
        }
    }
}

/// Description of a grid before construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub kind: GridKind,
    /// Length per storage axis; for the ball this is the radius `R`.
    pub extents: Vec<T>,
    pub cells: Vec<usize>,
    /// Ambient spatial dimension `N`.
    pub dim: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn cartesian1d(extent: T, cells: usize) -> Self {
        GridSpec { kind: GridKind::Cartesian1d, extents: vec![extent], cells: vec![cells], dim: 1 }
    }

    pub fn cartesian2d(extent_x: T, extent_y: T, cells_x: usize, cells_y: usize) -> Self {
        GridSpec {
            kind: GridKind::Cartesian2d,
            extents: vec![extent_x, extent_y],
            cells: vec![cells_x, cells_y],
            dim: 2,
        }
    }

    /// Unit square with `cells` cells per side.
    pub fn unit_square(cells: usize) -> Self {
        Self::cartesian2d(T::one(), T::one(), cells, cells)
    }

    pub fn radial(radius: T, cells: usize, dim: usize) -> Self {
        GridSpec { kind: GridKind::Radial, extents: vec![radius], cells: vec![cells], dim }
    }

    pub fn validate(&self) -> Result<()> {
        let axes = self.kind.axes();
        if self.extents.len() != axes || self.cells.len() != axes {
            return Err(Error::InvalidGrid(format!(
                "{} needs {axes} extent(s) and cell count(s), got {} and {}",
                self.kind,
                self.extents.len(),
                self.cells.len()
            )));
        }
        for (&n, &l) in self.cells.iter().zip(&self.extents) {
            if n < MIN_CELLS {
                return Err(Error::InvalidGrid(format!("{n} cells on an axis, at least {MIN_CELLS} required")));
            }
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!("extent {l} must be positive and finite")));
            }
        }
        match self.kind {
            GridKind::Cartesian1d if self.dim != 1 => {
                Err(Error::InvalidGrid(format!("cartesian1d has dimension 1, got {}", self.dim)))
            }
            GridKind::Cartesian2d if self.dim != 2 => {
                Err(Error::InvalidGrid(format!("cartesian2d has dimension 2, got {}", self.dim)))
            }
            GridKind::Radial if self.dim < 2 => {
                Err(Error::InvalidGrid(format!("radial grids need dimension >= 2, got {}", self.dim)))
            }
            _ => Ok(()),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    /// Tag shared by every grid built from an equal spec.
    pub fn id(&self) -> GridId {
        let mut hasher = DefaultHasher::new();
        self.kind.hash(&mut hasher);
        self.cells.hash(&mut hasher);
        for e in &self.extents {
            e.as_f64().to_bits().hash(&mut hasher);
        }
        self.dim.hash(&mut hasher);
        GridId(hasher.finish())
    }
}

/// Identity tag carried by fields to catch mixed-grid misuse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridId(u64);

/// Face between two cells, with the geometric coefficient of the two-point
/// flux `area * (x_right - x_left) / spacing`.
#[derive(Clone, Copy, Debug)]
pub struct InteriorFace<T> {
    pub axis: usize,
    /// Index into the per-axis face array of a [`FaceData`].
    pub index: usize,
    pub left: usize,
    pub right: usize,
    pub area: T,
    pub spacing: T,
}

impl<T: Real> InteriorFace<T> {
    /// `area / spacing`, the off-diagonal weight of the Laplacian.
    #[inline]
    pub fn transmissibility(&self) -> T {
        self.area / self.spacing
    }
}

/// Surface measure of the unit sphere in `R^dim`.
pub fn unit_sphere_area<T: Real>(dim: usize) -> T {
    // A(1) = 2, A(2) = 2 pi, A(d + 2) = 2 pi A(d) / d
    let two_pi = T::lit(2.0) * T::PI();
    let (mut d, mut area) = if dim % 2 == 1 { (1, T::lit(2.0)) } else { (2, two_pi) };
    while d < dim {
        area = two_pi * area / T::from_count(d);
        d += 2;
    }
    area
}

/// Volume of the ball of radius `r` in `R^dim`.
pub fn ball_volume<T: Real>(dim: usize, r: T) -> T {
    unit_sphere_area::<T>(dim) * r.powi(dim as i32) / T::from_count(dim)
}

#[derive(Clone, Debug)]
pub struct Grid<T> {
    spec: GridSpec<T>,
    id: GridId,
    h: Vec<T>,
    cell_volume: Vec<T>,
    /// Per-axis face areas, laid out like [`FaceData`].
    face_area: Vec<Vec<T>>,
    interior: Vec<InteriorFace<T>>,
    total_volume: T,
    /// max over cells of (sum of interior face areas) / volume.
    max_area_per_volume: T,
}

/// Builds the grid described by `spec`.
pub fn make_grid<T: Real>(spec: GridSpec<T>) -> Result<Grid<T>> {
    spec.validate()?;
    let id = spec.id();
    let h: Vec<T> = spec.extents.iter().zip(&spec.cells).map(|(&l, &n)| l / T::from_count(n)).collect();

    let (cell_volume, face_area, interior, total_volume) = match spec.kind {
        GridKind::Cartesian1d => {
            let n = spec.cells[0];
            let vol = vec![h[0]; n];
            let area = vec![T::one(); n + 1];
            let interior = (1..n)
                .map(|f| InteriorFace { axis: 0, index: f, left: f - 1, right: f, area: T::one(), spacing: h[0] })
                .collect();
            (vol, vec![area], interior, spec.extents[0])
        }
        GridKind::Cartesian2d => {
            let (nx, ny) = (spec.cells[0], spec.cells[1]);
            let (hx, hy) = (h[0], h[1]);
            let vol = vec![hx * hy; nx * ny];
            let ax = vec![hy; (nx + 1) * ny];
            let ay = vec![hx; nx * (ny + 1)];
            let mut interior = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
            for j in 0..ny {
                for i in 1..nx {
                    interior.push(InteriorFace {
                        axis: 0,
                        index: j * (nx + 1) + i,
                        left: j * nx + i - 1,
                        right: j * nx + i,
                        area: hy,
                        spacing: hx,
                    });
                }
            }
            for j in 1..ny {
                for i in 0..nx {
                    interior.push(InteriorFace {
                        axis: 1,
                        index: j * nx + i,
                        left: (j - 1) * nx + i,
                        right: j * nx + i,
                        area: hx,
                        spacing: hy,
                    });
                }
            }
            (vol, vec![ax, ay], interior, spec.extents[0] * spec.extents[1])
        }
        GridKind::Radial => {
            let n = spec.cells[0];
            let radius = spec.extents[0];
            let dim = spec.dim;
            let omega = unit_sphere_area::<T>(dim);
            let nd = T::from_count(dim);
            // r_k = R k / n keeps the outer face exactly at R
            let face_r: Vec<T> = (0..=n).map(|k| radius * T::from_count(k) / T::from_count(n)).collect();
            let face_pow: Vec<T> = face_r.iter().map(|r| r.powi(dim as i32)).collect();
            let vol = (0..n).map(|i| omega * (face_pow[i + 1] - face_pow[i]) / nd).collect();
            let area: Vec<T> = face_r.iter().map(|r| omega * r.powi(dim as i32 - 1)).collect();
            let interior = (1..n)
                .map(|f| InteriorFace { axis: 0, index: f, left: f - 1, right: f, area: area[f], spacing: h[0] })
                .collect();
            (vol, vec![area], interior, omega * face_pow[n] / nd)
        }
    };

    let mut area_sum = vec![T::zero(); cell_volume.len()];
    for f in &interior {
        area_sum[f.left] = area_sum[f.left] + f.area;
        area_sum[f.right] = area_sum[f.right] + f.area;
    }
    let max_area_per_volume =
        area_sum.iter().zip(&cell_volume).map(|(&a, &v)| a / v).fold(T::zero(), |m, x| m.max(x));

    Ok(Grid { spec, id, h, cell_volume, face_area, interior, total_volume, max_area_per_volume })
}

impl<T: Real> Grid<T> {
    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn id(&self) -> GridId {
        self.id
    }

    pub fn kind(&self) -> GridKind {
        self.spec.kind
    }

    pub fn cell_count(&self) -> usize {
        self.cell_volume.len()
    }

    /// Cell spacing per storage axis.
    pub fn h(&self) -> &[T] {
        &self.h
    }

    pub fn cell_volumes(&self) -> &[T] {
        &self.cell_volume
    }

    pub fn face_areas(&self, axis: usize) -> &[T] {
        &self.face_area[axis]
    }

    pub fn interior_faces(&self) -> &[InteriorFace<T>] {
        &self.interior
    }

    /// |Omega| from the analytic formula.
    pub fn total_volume(&self) -> T {
        self.total_volume
    }

    /// Largest ratio of a cell's interior face area to its volume; equals
    /// `2d / h` on uniform Cartesian grids.
    pub fn max_area_per_volume(&self) -> T {
        self.max_area_per_volume
    }

    /// Number of faces (interior and boundary) per storage axis.
    pub fn face_counts(&self) -> Vec<usize> {
        self.face_area.iter().map(Vec::len).collect()
    }

    /// Center of a cell: `(x, 0)` in 1D, `(x, y)` in 2D and `(r, 0)` for the ball.
    pub fn center(&self, cell: usize) -> [T; 2] {
        let half = T::lit(0.5);
        match self.spec.kind {
            GridKind::Cartesian1d | GridKind::Radial => [(T::from_count(cell) + half) * self.h[0], T::zero()],
            GridKind::Cartesian2d => {
                let nx = self.spec.cells[0];
                let (i, j) = (cell % nx, cell / nx);
                [(T::from_count(i) + half) * self.h[0], (T::from_count(j) + half) * self.h[1]]
            }
        }
    }

    pub(crate) fn check(&self, id: GridId) -> Result<()> {
        if id == self.id {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Cell-centered scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    values: Vec<T>,
    grid: GridId,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        ScalarField { values: vec![c; grid.cell_count()], grid: grid.id() }
    }

    /// Wraps `values`; rejects wrong lengths and non-finite entries.
    pub fn from_values(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::LengthMismatch { expected: grid.cell_count(), got: values.len() });
        }
        let field = ScalarField { values, grid: grid.id() };
        field.check_finite()?;
        Ok(field)
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn([T; 2]) -> T) -> Result<Self> {
        let values = (0..grid.cell_count()).map(|c| f(grid.center(c))).collect();
        Self::from_values(grid, values)
    }

    pub(crate) fn from_raw(grid: GridId, values: Vec<T>) -> Self {
        ScalarField { values, grid }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Mutable access; call [`ScalarField::check_finite`] afterwards if the
    /// edit can produce NaN or infinity.
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(index) => Err(Error::NonFinite { index, value: self.values[index].as_f64() }),
        }
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| alpha * a + beta * b).collect();
        Ok(ScalarField { values, grid: self.grid })
    }
}

/// Per-face data, one array per storage axis.
///
/// Axis 0 of a 2D grid holds the x-faces, `(nx + 1) * ny` entries indexed
/// `j * (nx + 1) + i`; axis 1 holds the y-faces, `nx * (ny + 1)` entries
/// indexed `j * nx + i`. 1D and radial grids have a single axis of `n + 1`
/// faces. Boundary entries stay 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceData<T> {
    axes: Vec<Vec<T>>,
    grid: GridId,
}

/// Face-normal vector components (gradients, fluxes).
pub type FaceVectorField<T> = FaceData<T>;

impl<T: Real> FaceData<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        FaceData { axes: grid.face_counts().into_iter().map(|n| vec![T::zero(); n]).collect(), grid: grid.id() }
    }

    pub fn grid_id(&self) -> GridId {
        self.grid
    }

    pub fn axis(&self, axis: usize) -> &[T] {
        &self.axes[axis]
    }

    pub fn axis_mut(&mut self, axis: usize) -> &mut [T] {
        &mut self.axes[axis]
    }

    pub fn axis_count(&self) -> usize {
        self.axes.len()
    }

    #[inline]
    pub fn get(&self, axis: usize, index: usize) -> T {
        self.axes[axis][index]
    }

    #[inline]
    pub fn set(&mut self, axis: usize, index: usize, value: T) {
        self.axes[axis][index] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.axes.iter().flatten()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// `sum_i f_i vol_i`.
pub fn integrate<T: Real>(f: &ScalarField<T>, g: &Grid<T>) -> Result<T> {
    g.check(f.grid_id())?;
    Ok(f.values.iter().zip(&g.cell_volume).map(|(&v, &w)| v * w).sum())
}

/// Discrete `L^q` norm `(sum_i |f_i|^q vol_i)^(1/q)` for `q >= 1`.
pub fn lq_norm<T: Real>(f: &ScalarField<T>, g: &Grid<T>, q: T) -> Result<T> {
    g.check(f.grid_id())?;
    if !(q >= T::one()) {
        return Err(Error::InvalidParameter(format!("norm exponent q = {q} must be >= 1")));
    }
    if q.is_infinite() {
        return Ok(linf_norm(f));
    }
    // scale by the max so large q neither overflows nor underflows
    let scale = linf_norm(f);
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let sum: T = f.values.iter().zip(&g.cell_volume).map(|(&v, &w)| (v.abs() / scale).powf(q) * w).sum();
    Ok(scale * sum.powf(q.recip()))
}

/// `max_i |f_i|`.
pub fn linf_norm<T: Real>(f: &ScalarField<T>) -> T {
    f.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}
