//! Periodic fields U(q) on the circle [0, 1), their derivatives, regime maps
//! and critical-value fields.

use std::f64::consts::TAU;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polycore::{
    classify_regime, companion_roots, maclane_forward, CoeffVector, Coeffs, PolyError, Regime,
    RegimeTolerance,
};

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid needs at least {MIN_CELLS} cells, got {0}")]
    InvalidGrid(usize),
    #[error("bad initial-data spec: {0}")]
    BadSpec(String),
    #[error("field shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    cells: usize,
}

impl TorusGrid {
    pub fn new(cells: usize) -> Result<Self, FieldError> {
        if cells < MIN_CELLS {
            return Err(FieldError::InvalidGrid(cells));
        }
        Ok(TorusGrid { cells })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    /// q_j = (j + 1/2) h
    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }

    /// Periodic index.
    pub fn wrap(&self, j: isize) -> usize {
        j.rem_euclid(self.cells as isize) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub grid: TorusGrid,
    pub t: f64,
    pub u: Vec<CoeffVector>,
}

impl FieldState {
    pub fn new(grid: TorusGrid, t: f64, u: Vec<CoeffVector>) -> Result<Self, FieldError> {
        if u.len() != grid.cells() {
            return Err(FieldError::Shape(format!(
                "{} cells for a grid of {}",
                u.len(),
                grid.cells()
            )));
        }
        let n = u[0].n();
        if u.iter().any(|c| c.n() != n) {
            return Err(FieldError::Shape("cells disagree on n".into()));
        }
        if !t.is_finite() {
            return Err(FieldError::Poly(PolyError::NonFinite));
        }
        Ok(FieldState { grid, t, u })
    }

    /// System size n.
    pub fn n(&self) -> usize {
        self.u[0].n()
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.u.iter().map(|c| c[k]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    /// Same field with cells shifted by `shift` (cell j moves to j + shift).
    pub fn rotated(&self, shift: usize) -> FieldState {
        let n = self.grid.cells();
        let mut u = self.u.clone();
        u.rotate_right(shift % n);
        FieldState { u, ..self.clone() }
    }
}

/// Built-in initial-data families (n = 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Constant {
        u1: f64,
        u2: f64,
        u3: f64,
    },
    /// u_1 = b - a cos(2 pi q), u_2 = 0, u_3 = u_1^2 + c
    Traveling {
        a: f64,
        b: f64,
        c: f64,
    },
    /// The traveling profile with u_2 = delta sin(2 pi q).
    Perturbed {
        a: f64,
        b: f64,
        c: f64,
        delta: f64,
    },
    /// u_1 = -a cos(2 pi q), u_2 = 0, u_3 = u_1^2 + c: hyperbolic where
    /// cos > 0, elliptic where cos < 0, stationary throughout.
    EllipticBump {
        a: f64,
        c: f64,
    },
    /// Rows (q, u_1, u_2, u_3), interpolated linearly and periodically.
    CustomTable {
        rows: Vec<[f64; 4]>,
    },
}

pub const PRESETS: [&str; 4] = ["constant", "traveling", "perturbed", "elliptic-bump"];

impl InitialData {
    pub fn preset(name: &str) -> Option<InitialData> {
        Some(match name {
            "constant" => InitialData::Constant {
                u1: -0.5,
                u2: 0.0,
                u3: 0.0,
            },
            "traveling" => InitialData::Traveling {
                a: 0.1,
                b: -0.3,
                c: 0.0,
            },
            "perturbed" => InitialData::Perturbed {
                a: 0.1,
                b: -0.3,
                c: 0.0,
                delta: 0.05,
            },
            "elliptic-bump" => InitialData::EllipticBump { a: 0.1, c: 0.0 },
            _ => return None,
        })
    }

    /// Reads a custom table from CSV with header `q,u1,u2,u3`.
    pub fn from_csv<R: Read>(reader: R) -> Result<InitialData, FieldError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let want = ["q", "u1", "u2", "u3"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(FieldError::BadSpec(format!(
                "custom table header must be q,u1,u2,u3, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<[f64; 4]>() {
            rows.push(rec?);
        }
        let data = InitialData::CustomTable { rows };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |m: &str| Err(FieldError::BadSpec(m.into()));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            InitialData::Constant { u1, u2, u3 } if !finite(&[*u1, *u2, *u3]) => {
                bad("non-finite constant")
            }
            InitialData::Traveling { a, b, c } if !finite(&[*a, *b, *c]) => {
                bad("non-finite parameter")
            }
            InitialData::Perturbed { a, b, c, delta } if !finite(&[*a, *b, *c, *delta]) => {
                bad("non-finite parameter")
            }
            InitialData::EllipticBump { a, c } if !finite(&[*a, *c]) => bad("non-finite parameter"),
            InitialData::CustomTable { rows } => {
                if rows.is_empty() {
                    return bad("custom table has no rows");
                }
                if rows.iter().any(|r| !finite(r)) {
                    return bad("custom table has non-finite entries");
                }
                if rows.iter().any(|r| !(0.0..1.0).contains(&r[0])) {
                    return bad("custom table q must lie in [0, 1)");
                }
                if rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return bad("custom table q must be strictly increasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, q: f64) -> CoeffVector {
        let wave = |a: f64, b: f64| b - a * (TAU * q).cos();
        match self {
            InitialData::Constant { u1, u2, u3 } => CoeffVector::n3(*u1, *u2, *u3),
            InitialData::Traveling { a, b, c } => {
                let u1 = wave(*a, *b);
                CoeffVector::n3(u1, 0.0, u1 * u1 + c)
            }
            InitialData::Perturbed { a, b, c, delta } => {
                let u1 = wave(*a, *b);
                CoeffVector::n3(u1, delta * (TAU * q).sin(), u1 * u1 + c)
            }
            InitialData::EllipticBump { a, c } => {
                let u1 = wave(*a, 0.0);
                CoeffVector::n3(u1, 0.0, u1 * u1 + c)
            }
            InitialData::CustomTable { rows } => interpolate_periodic(rows, q),
        }
    }
}

fn interpolate_periodic(rows: &[[f64; 4]], q: f64) -> CoeffVector {
    let q = q.rem_euclid(1.0);
    let m = rows.len();
    if m == 1 {
        return CoeffVector::n3(rows[0][1], rows[0][2], rows[0][3]);
    }
    // first row at or after q; wrap through the last row otherwise
    let k = rows.partition_point(|r| r[0] <= q);
    let (lo, hi) = match k {
        0 => (rows[m - 1], rows[0]),
        k if k == m => (rows[m - 1], rows[0]),
        k => (rows[k - 1], rows[k]),
    };
    let span = (hi[0] - lo[0]).rem_euclid(1.0);
    let off = (q - lo[0]).rem_euclid(1.0);
    let w = if span > 0.0 { off / span } else { 0.0 };
    let v = |i: usize| lo[i] + w * (hi[i] - lo[i]);
    CoeffVector::n3(v(1), v(2), v(3))
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Constant { u1, u2, u3 } => {
                write!(f, "constant(u1={u1}, u2={u2}, u3={u3})")
            }
            InitialData::Traveling { a, b, c } => write!(f, "traveling(a={a}, b={b}, c={c})"),
            InitialData::Perturbed { a, b, c, delta } => {
                write!(f, "perturbed(a={a}, b={b}, c={c}, delta={delta})")
            }
            InitialData::EllipticBump { a, c } => write!(f, "elliptic-bump(a={a}, c={c})"),
            InitialData::CustomTable { rows } => write!(f, "custom-table({} rows)", rows.len()),
        }
    }
}

/// Text form `family(key=value, ...)`; a bare family name takes the preset
/// parameters, and listed keys override them. `custom-table(path=FILE)`
/// reads a CSV table.
impl FromStr for InitialData {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) => {
                let body = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| FieldError::BadSpec(format!("missing ')' in {s:?}")))?;
                (s[..i].trim(), body)
            }
            None => (s, ""),
        };
        let mut pairs = Vec::new();
        for item in args.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| FieldError::BadSpec(format!("expected key=value, got {item:?}")))?;
            pairs.push((k.trim(), v.trim()));
        }
        if name == "custom-table" {
            let path = match pairs.as_slice() {
                [("path", p)] => PathBuf::from(p),
                _ => {
                    return Err(FieldError::BadSpec(
                        "custom-table takes exactly path=FILE".into(),
                    ))
                }
            };
            let file = std::fs::File::open(&path)
                .map_err(|e| FieldError::BadSpec(format!("cannot open {}: {e}", path.display())))?;
            return InitialData::from_csv(file);
        }
        let mut data = InitialData::preset(name)
            .ok_or_else(|| FieldError::BadSpec(format!("unknown family {name:?}")))?;
        for (k, v) in pairs {
            let x: f64 = v
                .parse()
                .map_err(|_| FieldError::BadSpec(format!("{k}: not a number: {v:?}")))?;
            let slot = match (&mut data, k) {
                (InitialData::Constant { u1, .. }, "u1") => u1,
                (InitialData::Constant { u2, .. }, "u2") => u2,
                (InitialData::Constant { u3, .. }, "u3") => u3,
                (InitialData::Traveling { a, .. }, "a")
                | (InitialData::Perturbed { a, .. }, "a")
                | (InitialData::EllipticBump { a, .. }, "a") => a,
                (InitialData::Traveling { b, .. }, "b")
                | (InitialData::Perturbed { b, .. }, "b") => b,
                (InitialData::Traveling { c, .. }, "c")
                | (InitialData::Perturbed { c, .. }, "c")
                | (InitialData::EllipticBump { c, .. }, "c") => c,
                (InitialData::Perturbed { delta, .. }, "delta") => delta,
                _ => {
                    return Err(FieldError::BadSpec(format!(
                        "{name} has no parameter {k:?}"
                    )))
                }
            };
            *slot = x;
        }
        data.validate()?;
        Ok(data)
    }
}

pub fn sample_field(spec: &InitialData, grid: TorusGrid) -> Result<FieldState, FieldError> {
    spec.validate()?;
    let u = grid.centers().into_iter().map(|q| spec.eval(q)).collect();
    FieldState::new(grid, 0.0, u)
}

/// Fourth-order periodic central difference of a sampled function.
pub fn d_dq_values(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len() as isize;
    let at = |j: isize| values[j.rem_euclid(n) as usize];
    (0..n)
        .map(|j| (8.0 * (at(j + 1) - at(j - 1)) - (at(j + 2) - at(j - 2))) / (12.0 * h))
        .collect()
}

pub fn d_dq(state: &FieldState, component: usize) -> Vec<f64> {
    d_dq_values(&state.component(component), state.grid.h())
}

/// Contiguous run of cells sharing a regime, possibly wrapping past N - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Component {
    pub regime: Regime,
    pub start: usize,
    pub len: usize,
}

impl Component {
    pub fn contains(&self, j: usize, cells: usize) -> bool {
        (j + cells - self.start) % cells < self.len
    }
}

/// A Degenerate or MaxDegenerate cell with the 1-based indices of its
/// closest pair of roots (for MaxDegenerate all roots meet; the outer pair
/// is reported).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryCell {
    pub cell: usize,
    pub regime: Regime,
    pub pair: (usize, usize),
    pub u1: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeMap {
    pub cells: Vec<Regime>,
    pub components: Vec<Component>,
    pub boundary: Vec<BoundaryCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub hyperbolic_cells: usize,
    pub elliptic_cells: usize,
    pub degenerate_cells: usize,
    pub max_degenerate_cells: usize,
    pub components: Vec<Component>,
}

impl RegimeMap {
    pub fn summary(&self) -> RegimeSummary {
        let count = |r: Regime| self.cells.iter().filter(|&&c| c == r).count();
        RegimeSummary {
            hyperbolic_cells: count(Regime::Hyperbolic),
            elliptic_cells: count(Regime::Elliptic),
            degenerate_cells: count(Regime::Degenerate),
            max_degenerate_cells: count(Regime::MaxDegenerate),
            components: self.components.clone(),
        }
    }
}

pub fn circular_components(cells: &[Regime]) -> Vec<Component> {
    let n = cells.len();
    let Some(first_break) = (0..n).find(|&j| cells[j] != cells[(j + n - 1) % n]) else {
        return vec![Component {
            regime: cells[0],
            start: 0,
            len: n,
        }];
    };
    let mut out: Vec<Component> = Vec::new();
    for k in 0..n {
        let j = (first_break + k) % n;
        match out.last_mut() {
            Some(c) if c.regime == cells[j] => c.len += 1,
            _ => out.push(Component {
                regime: cells[j],
                start: j,
                len: 1,
            }),
        }
    }
    out.sort_by_key(|c| c.start);
    out
}

fn colliding_pair(u: &CoeffVector, regime: Regime) -> (usize, usize) {
    let n = u.n();
    if regime == Regime::MaxDegenerate {
        return (1, n);
    }
    let Ok(roots) = companion_roots(u) else {
        return (1, n);
    };
    let mut best = (1, 2, f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let d = (roots[i] - roots[j]).norm();
            if d < best.2 {
                best = (i + 1, j + 1, d);
            }
        }
    }
    (best.0, best.1)
}

pub fn regime_map(state: &FieldState, tol: RegimeTolerance) -> RegimeMap {
    let cells: Vec<Regime> = state
        .u
        .par_iter()
        .map(|u| classify_regime(u, tol))
        .collect();
    let boundary = cells
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_degenerate())
        .map(|(j, &regime)| BoundaryCell {
            cell: j,
            regime,
            pair: colliding_pair(&state.u[j], regime),
            u1: state.u[j][0],
            u2: state.u[j].get(1).copied().unwrap_or(0.0),
        })
        .collect();
    RegimeMap {
        components: circular_components(&cells),
        cells,
        boundary,
    }
}

/// Critical values per cell; `valid[j]` is false (and `r[j]` NaN) outside
/// the strictly hyperbolic region.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannFields {
    pub r: Vec<Coeffs>,
    pub valid: Vec<bool>,
}

impl RiemannFields {
    pub fn family(&self, i: usize) -> Vec<f64> {
        self.r.iter().map(|r| r[i]).collect()
    }
}

pub fn riemann_fields(state: &FieldState) -> RiemannFields {
    let n = state.n();
    let per_cell: Vec<Option<Coeffs>> = state
        .u
        .par_iter()
        .map(|u| maclane_forward(u).ok())
        .collect();
    let valid = per_cell.iter().map(Option::is_some).collect();
    let r = per_cell
        .into_iter()
        .map(|r| r.unwrap_or_else(|| std::iter::repeat_n(f64::NAN, n).collect()))
        .collect();
    RiemannFields { r, valid }
}

/// Writes snapshot rows `t,q,u1..un,regime,r1..rn`; r is left blank outside
/// the hyperbolic region.
pub fn write_snapshots_csv<W: Write>(
    states: &[FieldState],
    tol: RegimeTolerance,
    out: W,
) -> Result<(), FieldError> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = states.first() else {
        w.flush()?;
        return Ok(());
    };
    let n = first.n();
    let mut header = vec!["t".to_string(), "q".to_string()];
    header.extend((1..=n).map(|i| format!("u{i}")));
    header.push("regime".into());
    header.extend((1..=n).map(|i| format!("r{i}")));
    w.write_record(&header)?;
    for state in states {
        let regimes = regime_map(state, tol).cells;
        let rf = riemann_fields(state);
        #[allow(clippy::needless_range_loop)]
        for j in 0..state.grid.cells() {
            let mut rec = vec![state.t.to_string(), state.grid.center(j).to_string()];
            rec.extend(state.u[j].iter().map(f64::to_string));
            rec.push(regimes[j].label().to_string());
            let show = rf.valid[j] && regimes[j] == Regime::Hyperbolic;
            rec.extend(
                rf.r[j]
                    .iter()
                    .map(|x| if show { x.to_string() } else { String::new() }),
            );
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn grid_basics() {
        assert!(matches!(TorusGrid::new(7), Err(FieldError::InvalidGrid(7))));
        let g = grid(8);
        assert_eq!(g.center(0), 0.0625);
        assert_eq!(g.wrap(-1), 7);
        assert_eq!(g.wrap(9), 1);
    }

    #[test]
    fn constant_spec_is_uniform() {
        let s = sample_field(&InitialData::preset("constant").unwrap(), grid(64)).unwrap();
        assert!(s.u.iter().all(|u| u.as_slice() == [-0.5, 0.0, 0.0]));
        assert_eq!(s.t, 0.0);
    }

    #[test]
    fn traveling_spec_profile() {
        let s = sample_field(&InitialData::preset("traveling").unwrap(), grid(32)).unwrap();
        for (j, u) in s.u.iter().enumerate() {
            let q = s.grid.center(j);
            let u1 = -0.3 - 0.1 * (TAU * q).cos();
            assert_abs_diff_eq!(u[0], u1, epsilon = 1e-15);
            assert_eq!(u[1], 0.0);
            assert_abs_diff_eq!(u[2], u1 * u1, epsilon = 1e-15);
        }
    }

    #[test]
    fn perturbed_spec_is_hyperbolic() {
        let s = sample_field(&InitialData::preset("perturbed").unwrap(), grid(512)).unwrap();
        let m = regime_map(&s, RegimeTolerance::default());
        assert_eq!(m.components.len(), 1);
        assert_eq!(m.components[0].regime, Regime::Hyperbolic);
        assert!(s.u.iter().any(|u| u[1].abs() > 0.04));
    }

    #[test]
    fn spec_parsing() {
        let d: InitialData = "traveling(a=0.2, b=-0.5)".parse().unwrap();
        assert_eq!(
            d,
            InitialData::Traveling {
                a: 0.2,
                b: -0.5,
                c: 0.0
            }
        );
        let d: InitialData = "perturbed".parse().unwrap();
        assert_eq!(d, InitialData::preset("perturbed").unwrap());
        let d: InitialData = " constant( u1 = 1 , u3=2 ) ".parse().unwrap();
        assert_eq!(
            d,
            InitialData::Constant {
                u1: 1.0,
                u2: 0.0,
                u3: 2.0
            }
        );
        for bad in [
            "wave(a=1)",
            "traveling(delta=1)",
            "traveling(a=x)",
            "traveling(a=1",
            "constant(u1)",
            "constant(u1=inf)",
        ] {
            assert!(
                matches!(bad.parse::<InitialData>(), Err(FieldError::BadSpec(_))),
                "{bad}"
            );
        }
        for name in PRESETS {
            let d = InitialData::preset(name).unwrap();
            assert_eq!(d.to_string().parse::<InitialData>().unwrap(), d);
        }
    }

    #[test]
    fn custom_table_round_trip() {
        let csv = "q,u1,u2,u3\n0.0,-1,0,0\n0.5,-0.5,0.1,0\n";
        let d = InitialData::from_csv(csv.as_bytes()).unwrap();
        let at = |q: f64| d.eval(q);
        assert_abs_diff_eq!(at(0.25)[0], -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(at(0.75)[0], -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(at(0.75)[1], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(at(0.0)[0], -1.0, epsilon = 1e-15);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, csv).unwrap();
        let parsed: InitialData = format!("custom-table(path={})", path.display())
            .parse()
            .unwrap();
        assert_eq!(parsed, d);
        assert!(InitialData::from_csv("q,u1,u2\n0,1,2\n".as_bytes()).is_err());
        assert!(InitialData::from_csv("q,u1,u2,u3\n0.5,1,2,3\n0.1,1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let s = sample_field(&InitialData::preset("constant").unwrap(), grid(16)).unwrap();
        assert!(d_dq(&s, 0).iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn derivative_fourth_order() {
        let err = |n: usize| {
            let g = grid(n);
            let v: Vec<f64> = g.centers().iter().map(|q| (TAU * q).cos()).collect();
            d_dq_values(&v, g.h())
                .iter()
                .zip(g.centers())
                .map(|(d, q)| (d + TAU * (TAU * q).sin()).abs())
                .fold(0.0, f64::max)
        };
        // truncation is h^4 (2 pi)^5 / 30, about 1.2e-6 at N = 128;
        // relative to the amplitude 2 pi it is below 1e-6
        assert!(err(128) / TAU < 1e-6);
        let ratio = err(64) / err(128);
        assert!((14.0..18.0).contains(&ratio), "{ratio}");
    }

    fn mixed_state(n: usize) -> FieldState {
        let g = grid(n);
        let u = g
            .centers()
            .iter()
            .map(|q| CoeffVector::n3(-(TAU * q).cos(), 0.0, 0.0))
            .collect();
        FieldState::new(g, 0.0, u).unwrap()
    }

    #[test]
    fn mixed_regime_map() {
        // N = 4k + 2 puts cell centres at q = 1/4 and 3/4 exactly
        let s = mixed_state(66);
        let m = regime_map(&s, RegimeTolerance::default());
        for (j, r) in m.cells.iter().enumerate() {
            let u1 = s.u[j][0];
            let want = if u1 < -1e-3 {
                Regime::Hyperbolic
            } else if u1 > 1e-3 {
                Regime::Elliptic
            } else {
                Regime::MaxDegenerate
            };
            assert_eq!(*r, want, "cell {j}, u1 = {u1}");
        }
        assert_eq!(m.boundary.len(), 2);
        assert!(m.boundary.iter().all(|b| b.regime == Regime::MaxDegenerate));
        let kinds: Vec<Regime> = m.components.iter().map(|c| c.regime).collect();
        assert_eq!(kinds.len(), 4);
        assert_eq!(m.components.iter().map(|c| c.len).sum::<usize>(), 66);
    }

    #[test]
    fn degenerate_cell_reports_its_pair() {
        // u1 < 0 with u2 at the discriminant locus: double root at the top
        let u1 = -0.5f64;
        let u2 = (-32.0 * u1.powi(3) / 27.0).sqrt();
        let g = grid(8);
        let mut u = vec![CoeffVector::n3(-0.5, 0.0, 0.0); 8];
        u[3] = CoeffVector::n3(u1, u2, 0.0);
        let s = FieldState::new(g, 0.0, u).unwrap();
        let m = regime_map(&s, RegimeTolerance::default());
        assert_eq!(m.cells[3], Regime::Degenerate);
        assert_eq!(m.boundary.len(), 1);
        let b = m.boundary[0];
        assert_eq!(b.cell, 3);
        assert!(b.pair.1 == b.pair.0 + 1);
    }

    #[test]
    fn elliptic_and_constant_maps() {
        let g = grid(16);
        let ell = FieldState::new(g, 0.0, vec![CoeffVector::n3(0.5, 0.0, 0.0); 16]).unwrap();
        let m = regime_map(&ell, RegimeTolerance::default());
        assert_eq!(
            m.components,
            vec![Component {
                regime: Regime::Elliptic,
                start: 0,
                len: 16
            }]
        );
        let hyp = sample_field(&InitialData::preset("constant").unwrap(), g).unwrap();
        let m = regime_map(&hyp, RegimeTolerance::default());
        assert_eq!(
            m.components,
            vec![Component {
                regime: Regime::Hyperbolic,
                start: 0,
                len: 16
            }]
        );
    }

    #[test]
    fn riemann_fields_examples() {
        let s = sample_field(&InitialData::preset("constant").unwrap(), grid(16)).unwrap();
        let rf = riemann_fields(&s);
        assert!(rf.valid.iter().all(|&v| v));
        for r in &rf.r {
            assert_abs_diff_eq!(
                r.as_slice(),
                [-0.25, 0.0, -0.25].as_slice(),
                epsilon = 1e-15
            );
        }
        let s = sample_field(&InitialData::preset("traveling").unwrap(), grid(64)).unwrap();
        let rf = riemann_fields(&s);
        let r1 = rf.family(0);
        let r3 = rf.family(2);
        for j in 0..64 {
            assert_abs_diff_eq!(r1[j], r1[0], epsilon = 1e-10);
            assert_abs_diff_eq!(r3[j], r1[0], epsilon = 1e-10);
        }
        let mixed = mixed_state(66);
        let rf = riemann_fields(&mixed);
        let m = regime_map(&mixed, RegimeTolerance::default());
        for j in 0..66 {
            assert_eq!(rf.valid[j], m.cells[j] == Regime::Hyperbolic, "cell {j}");
            assert_eq!(rf.valid[j], rf.r[j].iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn riemann_fields_match_pointwise() {
        let s = sample_field(&InitialData::preset("perturbed").unwrap(), grid(32)).unwrap();
        let rf = riemann_fields(&s);
        for (j, u) in s.u.iter().enumerate() {
            assert_eq!(rf.r[j], maclane_forward(u).unwrap());
        }
    }

    #[test]
    fn snapshot_csv_layout() {
        let mut s = mixed_state(10);
        s.t = 0.5;
        let mut buf = Vec::new();
        write_snapshots_csv(&[s], RegimeTolerance::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,q,u1,u2,u3,regime,r1,r2,r3");
        assert_eq!(lines.len(), 11);
        let hyp = lines.iter().find(|l| l.contains(",hyperbolic,")).unwrap();
        assert!(!hyp.ends_with(",,"));
        let ell = lines.iter().find(|l| l.contains(",elliptic,")).unwrap();
        assert!(ell.ends_with(",,,"));
        assert!(ell.starts_with("0.5,"));
    }

    proptest! {
        #[test]
        fn regime_components_rotate_with_the_field(shift in 0usize..66) {
            let s = mixed_state(66);
            let tol = RegimeTolerance::default();
            let a = regime_map(&s, tol);
            let b = regime_map(&s.rotated(shift), tol);
            let mut moved: Vec<Component> = a
                .components
                .iter()
                .map(|c| Component { start: (c.start + shift) % 66, ..*c })
                .collect();
            moved.sort_by_key(|c| c.start);
            prop_assert_eq!(moved, b.components);
        }
    }
}
