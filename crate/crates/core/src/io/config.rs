//! Run configuration documents.
//!
//! A document is a list of `key = value` lines with dotted keys
//! (`model.p = 1.4`). A `[section]` line prefixes the keys that follow it
//! with `section.`; `#` starts a comment. Lists are comma separated, with
//! optional brackets. Unknown and duplicated keys are errors.
//!
//! | key | default |
//! |-----|---------|
//! | `grid.kind` | required: `cartesian1d`, `cartesian2d`, `radial` |
//! | `grid.cells` | 128 per axis |
//! | `grid.extent` | 1 per axis (radius for `radial`) |
//! | `grid.dim` | 3 for `radial`; fixed to 1 / 2 for Cartesian grids |
//! | `model.p` | required, in (1, 2) |
//! | `model.chi` | 10 |
//! | `model.mu` | 1 |
//! | `model.n_reg` | `inf` |
//! | `model.grad_floor` | 1e-14 |
//! | `elliptic.rel_tol` | 1e-10 |
//! | `elliptic.max_iter` | `auto` (ten times the cell count) |
//! | `elliptic.preconditioner` | `exact` |
//! | `dt.max`, `dt.safety`, `dt.min` | 1e-2, 0.9, 1e-12 |
//! | `dt.blowup_threshold` | 1e6 |
//! | `init.kind` | `gaussian` (also `constant`, `perturbed_constant`) |
//! | `init.amplitude` | 4 (gaussian), 0.1 (perturbed_constant) |
//! | `init.width` | 0.05 |
//! | `init.center` | domain center; the origin for `radial` |
//! | `init.base` | 0 (gaussian), 1 otherwise |
//! | `init.modes` | 1 per axis |
//! | `run.t_end`, `run.monitor_every` | 20, 0.1 |
//! | `run.q_list` | 1, 2, 4 |
//! | `run.output_dir` | `out` |
//! | `study.n_list` | 1, 4, 16, 64, inf |
//! | `study.p_list` | 1.2, 1.4, 1.45 |
//! | `study.cells_list` | 64, 128, 256 |
//! | `study.t_eval` | 1 |
//! | `study.window_split` | 0.5 |
//! | `study.mesh_kind` | `full` (also `diffusion`, `elliptic`) |

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use thiserror::Error;

use crate::elliptic::{EllipticOptions, Preconditioner};
use crate::experiments::{InitialData, MeshKind};
use crate::flux::LimiterParams;
use crate::grid::{GridKind, GridSpec};
use crate::integrator::{DtPolicy, ModelParams};

/// Where a configuration value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(l) => write!(f, "line {l}"),
            Origin::Override => f.write_str("--override"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("config error ({origin}) at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub origin: Origin,
    pub message: String,
}

type CResult<T> = Result<T, ConfigError>;

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Parsed but untyped key-value document.
#[derive(Clone, Debug, Default)]
pub struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    pub fn parse(text: &str) -> CResult<Self> {
        let mut doc = Document::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError {
                    key: line.to_string(),
                    origin: Origin::Line(line_no),
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError {
                key: line.to_string(),
                origin: Origin::Line(line_no),
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            doc.insert(full, value.trim(), Origin::Line(line_no))?;
        }
        Ok(doc)
    }

    fn insert(&mut self, key: String, value: &str, origin: Origin) -> CResult<()> {
        if key.is_empty() || key.split('.').any(|p| p.is_empty()) {
            return Err(ConfigError { key, origin, message: "malformed key".into() });
        }
        if let Some(prev) = self.entries.get(&key) {
            return Err(ConfigError { key, origin, message: format!("duplicate key, first set at {}", prev.origin) });
        }
        self.entries.insert(key, Entry { value: value.to_string(), origin });
        Ok(())
    }

    /// Applies a `key=value` override, replacing any value from the document.
    pub fn apply_override(&mut self, assignment: &str) -> CResult<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError {
            key: assignment.to_string(),
            origin: Origin::Override,
            message: "expected key=value".into(),
        })?;
        self.entries.remove(key.trim());
        self.insert(key.trim().to_string(), value.trim(), Origin::Override)
    }
}

/// Typed reads from a [`Document`] that remember which keys were consumed.
struct Reader {
    entries: BTreeMap<String, Entry>,
}

impl Reader {
    fn origin(&self, key: &str) -> Origin {
        self.entries.get(key).map(|e| e.origin).unwrap_or(Origin::Default)
    }

    fn take(&mut self, key: &str) -> Option<(String, Origin)> {
        self.entries.remove(key).map(|e| (e.value, e.origin))
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn parse_f64(key: &str, s: &str, origin: Origin) -> CResult<f64> {
        s.trim().parse::<f64>().map_err(|_| ConfigError {
            key: key.into(),
            origin,
            message: format!("expected a number, got `{}`", s.trim()),
        })
    }

    fn parse_usize(key: &str, s: &str, origin: Origin) -> CResult<usize> {
        s.trim().parse::<usize>().map_err(|_| ConfigError {
            key: key.into(),
            origin,
            message: format!("expected a nonnegative integer, got `{}`", s.trim()),
        })
    }

    fn split_list(s: &str) -> Vec<&str> {
        let s = s.trim();
        let s = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')).unwrap_or(s);
        if s.trim().is_empty() {
            return Vec::new();
        }
        s.split(',').map(str::trim).collect()
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CResult<f64> {
        match self.take(key) {
            Some((v, o)) => Self::parse_f64(key, &v, o),
            None => Ok(default),
        }
    }

    fn required_f64(&mut self, key: &str) -> CResult<f64> {
        match self.take(key) {
            Some((v, o)) => Self::parse_f64(key, &v, o),
            None => Err(ConfigError { key: key.into(), origin: Origin::Default, message: "required key missing".into() }),
        }
    }

    fn f64_list_or(&mut self, key: &str, default: &[f64]) -> CResult<Vec<f64>> {
        match self.take(key) {
            Some((v, o)) => Self::split_list(&v).into_iter().map(|s| Self::parse_f64(key, s, o)).collect(),
            None => Ok(default.to_vec()),
        }
    }

    fn usize_list_or(&mut self, key: &str, default: &[usize]) -> CResult<Vec<usize>> {
        match self.take(key) {
            Some((v, o)) => Self::split_list(&v).into_iter().map(|s| Self::parse_usize(key, s, o)).collect(),
            None => Ok(default.to_vec()),
        }
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        self.take(key).map(|(v, _)| v).unwrap_or_else(|| default.to_string())
    }

    fn finish(self) -> CResult<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, e)) => Err(ConfigError { key, origin: e.origin, message: "unknown key".into() }),
        }
    }
}

/// Lists used by the prepackaged studies.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub n_list: Vec<f64>,
    pub p_list: Vec<f64>,
    /// Cells per axis for each grid level.
    pub cells_list: Vec<usize>,
    pub t_eval: f64,
    pub window_split: f64,
    pub mesh_kind: MeshKind,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_list: vec![1.0, 4.0, 16.0, 64.0, f64::INFINITY],
            p_list: vec![1.2, 1.4, 1.45],
            cells_list: vec![64, 128, 256],
            t_eval: 1.0,
            window_split: 0.5,
            mesh_kind: MeshKind::Full,
        }
    }
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec<f64>,
    pub model: ModelParams<f64>,
    pub dt: DtPolicy<f64>,
    pub init: InitialData,
    pub t_end: f64,
    pub monitor_every: f64,
    pub q_list: Vec<f64>,
    pub output_dir: PathBuf,
    pub study: StudyConfig,
}

impl RunConfig {
    /// The reference benchmark: unit square, 128^2 cells, chi = 10, mu = 1,
    /// p = 1.4, Gaussian bump of height 4 and width 0.05, up to t = 20.
    pub fn benchmark() -> Self {
        parse_config("grid.kind = cartesian2d\nmodel.p = 1.4\n").expect("benchmark config is valid")
    }

    /// Canonical document; `parse_config(&c.render()) == c`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let ulist = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "grid.kind = {}", self.grid.kind);
        let _ = writeln!(s, "grid.cells = {}", ulist(&self.grid.cells));
        let _ = writeln!(s, "grid.extent = {}", list(&self.grid.extents));
        let _ = writeln!(s, "grid.dim = {}", self.grid.dim);
        let m = &self.model;
        let _ = writeln!(s, "model.p = {}", m.limiter.p);
        let _ = writeln!(s, "model.chi = {}", m.chi);
        let _ = writeln!(s, "model.mu = {}", m.mu);
        let _ = writeln!(s, "model.n_reg = {}", m.limiter.n_reg);
        let _ = writeln!(s, "model.grad_floor = {}", m.limiter.grad_floor);
        let _ = writeln!(s, "elliptic.rel_tol = {}", m.elliptic.rel_tol);
        match m.elliptic.max_iter {
            Some(n) => writeln!(s, "elliptic.max_iter = {n}"),
            None => writeln!(s, "elliptic.max_iter = auto"),
        }
        .ok();
        let _ = writeln!(s, "elliptic.preconditioner = {}", m.elliptic.preconditioner.as_str());
        let _ = writeln!(s, "dt.max = {}", self.dt.dt_max);
        let _ = writeln!(s, "dt.safety = {}", self.dt.safety);
        let _ = writeln!(s, "dt.min = {}", self.dt.dt_min);
        let _ = writeln!(s, "dt.blowup_threshold = {}", self.dt.blowup_threshold);
        let _ = writeln!(s, "init.kind = {}", self.init.kind_name());
        match &self.init {
            InitialData::Constant { base } => {
                let _ = writeln!(s, "init.base = {base}");
            }
            InitialData::GaussianBump { amplitude, width, center, base } => {
                let _ = writeln!(s, "init.amplitude = {amplitude}");
                let _ = writeln!(s, "init.width = {width}");
                if let Some(c) = center {
                    let _ = writeln!(s, "init.center = {}", list(c));
                }
                let _ = writeln!(s, "init.base = {base}");
            }
            InitialData::PerturbedConstant { base, amplitude, modes } => {
                let _ = writeln!(s, "init.base = {base}");
                let _ = writeln!(s, "init.amplitude = {amplitude}");
                let _ = writeln!(s, "init.modes = {}", ulist(modes));
            }
        }
        let _ = writeln!(s, "run.t_end = {}", self.t_end);
        let _ = writeln!(s, "run.monitor_every = {}", self.monitor_every);
        let _ = writeln!(s, "run.q_list = {}", list(&self.q_list));
        let _ = writeln!(s, "run.output_dir = {}", self.output_dir.display());
        let st = &self.study;
        let _ = writeln!(s, "study.n_list = {}", list(&st.n_list));
        let _ = writeln!(s, "study.p_list = {}", list(&st.p_list));
        let _ = writeln!(s, "study.cells_list = {}", ulist(&st.cells_list));
        let _ = writeln!(s, "study.t_eval = {}", st.t_eval);
        let _ = writeln!(s, "study.window_split = {}", st.window_split);
        let _ = writeln!(s, "study.mesh_kind = {}", st.mesh_kind.as_str());
        s
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> CResult<RunConfig> {
    parse_config_with_overrides::<&str>(text, &[])
}

/// Like [`parse_config`], applying `key=value` overrides first.
pub fn parse_config_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> CResult<RunConfig> {
    let mut doc = Document::parse(text)?;
    for o in overrides {
        doc.apply_override(o.as_ref())?;
    }
    from_document(doc)
}

fn invalid(r: &Reader, key: &str, origin: Option<Origin>, message: String) -> ConfigError {
    ConfigError { key: key.into(), origin: origin.unwrap_or_else(|| r.origin(key)), message }
}

fn from_document(doc: Document) -> CResult<RunConfig> {
    let mut r = Reader { entries: doc.entries };

    // grid
    let (kind_s, kind_o) = r.take("grid.kind").ok_or_else(|| ConfigError {
        key: "grid.kind".into(),
        origin: Origin::Default,
        message: "required key missing".into(),
    })?;
    let kind: GridKind =
        kind_s.parse().map_err(|e: crate::Error| ConfigError { key: "grid.kind".into(), origin: kind_o, message: e.to_string() })?;
    let axes = kind.axes();
    let cells_o = r.origin("grid.cells");
    let mut cells = r.usize_list_or("grid.cells", &[128])?;
    if cells.len() == 1 && axes == 2 {
        cells.push(cells[0]);
    }
    let extent_o = r.origin("grid.extent");
    let mut extents = r.f64_list_or("grid.extent", &[1.0])?;
    if extents.len() == 1 && axes == 2 {
        extents.push(extents[0]);
    }
    let default_dim = match kind {
        GridKind::Cartesian1d => 1,
        GridKind::Cartesian2d => 2,
        GridKind::Radial => 3,
    };
    let dim_o = r.origin("grid.dim");
    let dim = match r.take("grid.dim") {
        Some((v, o)) => Reader::parse_usize("grid.dim", &v, o)?,
        None => default_dim,
    };
    if cells.len() != axes {
        return Err(invalid(&r, "grid.cells", Some(cells_o), format!("{kind} needs {axes} cell count(s)")));
    }
    if extents.len() != axes {
        return Err(invalid(&r, "grid.extent", Some(extent_o), format!("{kind} needs {axes} extent(s)")));
    }
    if let Some(&n) = cells.iter().find(|&&n| n < crate::grid::MIN_CELLS) {
        return Err(invalid(&r, "grid.cells", Some(cells_o), format!("{n} cells, at least {} required", crate::grid::MIN_CELLS)));
    }
    if let Some(&e) = extents.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(invalid(&r, "grid.extent", Some(extent_o), format!("extent {e} must be positive")));
    }
    match kind {
        GridKind::Radial if dim < 2 => {
            return Err(invalid(&r, "grid.dim", Some(dim_o), format!("radial grids need dim >= 2, got {dim}")))
        }
        GridKind::Cartesian1d | GridKind::Cartesian2d if dim != default_dim => {
            return Err(invalid(&r, "grid.dim", Some(dim_o), format!("{kind} has dim {default_dim}, got {dim}")))
        }
        _ => {}
    }
    let grid = GridSpec { kind, extents, cells, dim };

    // model
    let p_o = r.origin("model.p");
    let p = r.required_f64("model.p")?;
    if !(p > 1.0 && p < 2.0) {
        return Err(invalid(&r, "model.p", Some(p_o), format!("p ∈ (1,2) required, got {p}")));
    }
    let chi_o = r.origin("model.chi");
    let chi = r.f64_or("model.chi", 10.0)?;
    if !(chi >= 0.0 && chi.is_finite()) {
        return Err(invalid(&r, "model.chi", Some(chi_o), format!("chi must be >= 0, got {chi}")));
    }
    let mu_o = r.origin("model.mu");
    let mu = r.f64_or("model.mu", 1.0)?;
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid(&r, "model.mu", Some(mu_o), format!("mu must be >= 0, got {mu}")));
    }
    let n_o = r.origin("model.n_reg");
    let n_reg = r.f64_or("model.n_reg", f64::INFINITY)?;
    if !(n_reg > 0.0) {
        return Err(invalid(&r, "model.n_reg", Some(n_o), format!("n_reg must be positive or inf, got {n_reg}")));
    }
    let gf_o = r.origin("model.grad_floor");
    let grad_floor = r.f64_or("model.grad_floor", 1e-14)?;
    if !(grad_floor >= 0.0 && grad_floor.is_finite()) {
        return Err(invalid(&r, "model.grad_floor", Some(gf_o), format!("grad_floor must be >= 0, got {grad_floor}")));
    }

    let tol_o = r.origin("elliptic.rel_tol");
    let rel_tol = r.f64_or("elliptic.rel_tol", 1e-10)?;
    if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
        return Err(invalid(&r, "elliptic.rel_tol", Some(tol_o), format!("rel_tol must lie in (0, 1e-4], got {rel_tol}")));
    }
    let max_iter = match r.take("elliptic.max_iter") {
        None => None,
        Some((v, _)) if v == "auto" => None,
        Some((v, o)) => {
            let n = Reader::parse_usize("elliptic.max_iter", &v, o)?;
            if n < 10 {
                return Err(invalid(&r, "elliptic.max_iter", Some(o), format!("max_iter must be >= 10, got {n}")));
            }
            Some(n)
        }
    };
    let pc_o = r.origin("elliptic.preconditioner");
    let preconditioner: Preconditioner = r
        .str_or("elliptic.preconditioner", "exact")
        .parse()
        .map_err(|e: crate::Error| invalid(&r, "elliptic.preconditioner", Some(pc_o), e.to_string()))?;
    let model = ModelParams {
        chi,
        mu,
        limiter: LimiterParams { p, n_reg, grad_floor },
        elliptic: EllipticOptions { rel_tol, max_iter, preconditioner },
    };

    // time step policy
    let dt_o = r.origin("dt.max");
    let dt = DtPolicy {
        dt_max: r.f64_or("dt.max", 1e-2)?,
        safety: r.f64_or("dt.safety", 0.9)?,
        dt_min: r.f64_or("dt.min", 1e-12)?,
        blowup_threshold: r.f64_or("dt.blowup_threshold", 1e6)?,
    };
    dt.validate().map_err(|e| invalid(&r, "dt", Some(dt_o), e.to_string()))?;

    // initial data
    let init_o = r.origin("init.kind");
    let init_kind = r.str_or("init.kind", "gaussian");
    let init = match init_kind.as_str() {
        "constant" => InitialData::Constant { base: r.f64_or("init.base", 1.0)? },
        "gaussian" => {
            let center_o = r.origin("init.center");
            let center = if r.has("init.center") { Some(r.f64_list_or("init.center", &[])?) } else { None };
            if let Some(c) = &center {
                if c.len() != axes {
                    return Err(invalid(&r, "init.center", Some(center_o), format!("{kind} needs {axes} coordinate(s)")));
                }
            }
            InitialData::GaussianBump {
                amplitude: r.f64_or("init.amplitude", 4.0)?,
                width: r.f64_or("init.width", 0.05)?,
                center,
                base: r.f64_or("init.base", 0.0)?,
            }
        }
        "perturbed_constant" => {
            let mut modes = r.usize_list_or("init.modes", &[1])?;
            if modes.len() == 1 && axes == 2 {
                modes.push(modes[0]);
            }
            InitialData::PerturbedConstant {
                base: r.f64_or("init.base", 1.0)?,
                amplitude: r.f64_or("init.amplitude", 0.1)?,
                modes,
            }
        }
        other => {
            return Err(invalid(
                &r,
                "init.kind",
                Some(init_o),
                format!("unknown initial data `{other}` (constant, gaussian, perturbed_constant)"),
            ))
        }
    };
    init.validate(&grid).map_err(|e| invalid(&r, "init", Some(init_o), e.to_string()))?;

    // run
    let t_end_o = r.origin("run.t_end");
    let t_end = r.f64_or("run.t_end", 20.0)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(&r, "run.t_end", Some(t_end_o), format!("t_end must be positive, got {t_end}")));
    }
    let every_o = r.origin("run.monitor_every");
    let monitor_every = r.f64_or("run.monitor_every", 0.1)?;
    if !(monitor_every > 0.0 && monitor_every.is_finite()) {
        return Err(invalid(&r, "run.monitor_every", Some(every_o), format!("monitor_every must be positive, got {monitor_every}")));
    }
    let q_o = r.origin("run.q_list");
    let q_list = r.f64_list_or("run.q_list", &[1.0, 2.0, 4.0])?;
    if let Some(q) = q_list.iter().find(|&&q| !(q >= 1.0 && q.is_finite())) {
        return Err(invalid(&r, "run.q_list", Some(q_o), format!("q = {q} must be finite and >= 1")));
    }
    let output_dir = PathBuf::from(r.str_or("run.output_dir", "out"));

    // studies
    let defaults = StudyConfig::default();
    let nl_o = r.origin("study.n_list");
    let n_list = r.f64_list_or("study.n_list", &defaults.n_list)?;
    if let Some(n) = n_list.iter().find(|&&n| !(n > 0.0)) {
        return Err(invalid(&r, "study.n_list", Some(nl_o), format!("n = {n} must be positive or inf")));
    }
    let pl_o = r.origin("study.p_list");
    let p_list = r.f64_list_or("study.p_list", &defaults.p_list)?;
    if let Some(p) = p_list.iter().find(|&&p| !(p > 1.0 && p < 2.0)) {
        return Err(invalid(&r, "study.p_list", Some(pl_o), format!("p ∈ (1,2) required, got {p}")));
    }
    let cl_o = r.origin("study.cells_list");
    let cells_list = r.usize_list_or("study.cells_list", &defaults.cells_list)?;
    if let Some(n) = cells_list.iter().find(|&&n| n < crate::grid::MIN_CELLS) {
        return Err(invalid(&r, "study.cells_list", Some(cl_o), format!("{n} cells, at least {} required", crate::grid::MIN_CELLS)));
    }
    let te_o = r.origin("study.t_eval");
    let t_eval = r.f64_or("study.t_eval", defaults.t_eval)?;
    if !(t_eval > 0.0 && t_eval.is_finite()) {
        return Err(invalid(&r, "study.t_eval", Some(te_o), format!("t_eval must be positive, got {t_eval}")));
    }
    let ws_o = r.origin("study.window_split");
    let window_split = r.f64_or("study.window_split", defaults.window_split)?;
    if !(window_split > 0.0 && window_split < 1.0) {
        return Err(invalid(&r, "study.window_split", Some(ws_o), format!("window_split must lie in (0, 1), got {window_split}")));
    }
    let mk_o = r.origin("study.mesh_kind");
    let mesh_kind = r
        .str_or("study.mesh_kind", defaults.mesh_kind.as_str())
        .parse()
        .map_err(|e: crate::Error| invalid(&r, "study.mesh_kind", Some(mk_o), e.to_string()))?;

    r.finish()?;
    Ok(RunConfig {
        grid,
        model,
        dt,
        init,
        t_end,
        monitor_every,
        q_list,
        output_dir,
        study: StudyConfig { n_list, p_list, cells_list, t_eval, window_split, mesh_kind },
    })
}
