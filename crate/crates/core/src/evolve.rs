//! Time integration of U_t + A(U) U_q = 0 on the circle.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{d_dq_values, riemann_fields, FieldState};
use crate::polycore::{
    classify_regime, companion_roots, depressed_cubic_roots, hyperbolic_roots, maclane_forward,
    maclane_inverse, CoeffVector, Coeffs, Regime, RegimeTolerance,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("cell {cell} left the hyperbolic region at t = {t}: {reason}")]
    RegimeChangeBlocked { cell: usize, t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Lax-Friedrichs average plus centred flux on the quasi-linear form.
    CentralViscous,
    /// Upwinded critical values, mapped back to U cell by cell.
    RiemannUpwind,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::CentralViscous => "central",
            Scheme::RiemannUpwind => "riemann",
        })
    }
}

impl FromStr for Scheme {
    type Err = EvolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central" | "central-viscous" => Ok(Scheme::CentralViscous),
            "riemann" | "riemann-upwind" => Ok(Scheme::RiemannUpwind),
            other => Err(EvolveError::InvalidConfig(format!(
                "unknown scheme {other:?}"
            ))),
        }
    }
}

/// Gradient level at which a run is stopped as blown up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BlowupThreshold {
    Absolute {
        value: f64,
    },
    /// `max(factor * g0, floor)` with g0 the initial maximum gradient.
    Relative {
        factor: f64,
        floor: f64,
    },
}

impl BlowupThreshold {
    pub fn resolve(&self, g0: f64) -> f64 {
        match *self {
            BlowupThreshold::Absolute { value } => value,
            BlowupThreshold::Relative { factor, floor } => (factor * g0).max(floor),
        }
    }

    fn validate(&self) -> Result<(), EvolveError> {
        let ok = match *self {
            BlowupThreshold::Absolute { value } => value > 0.0,
            BlowupThreshold::Relative { factor, floor } => factor > 1.0 && floor > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(EvolveError::InvalidConfig(format!(
                "blow-up threshold {self:?} must be positive (relative factor > 1)"
            )))
        }
    }
}

impl Default for BlowupThreshold {
    fn default() -> Self {
        BlowupThreshold::Relative {
            factor: 3.0,
            floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub cfl: f64,
    pub t_end: f64,
    pub blowup_threshold: BlowupThreshold,
    /// Keep every k-th step as a snapshot (the first and last are always kept).
    pub snapshot_every: usize,
    /// Heun (two-stage) time stepping for the upwind scheme.
    pub rk2: bool,
    /// Newton tolerance for the per-cell inverse; 0 means the round-off floor.
    pub newton_tol: f64,
    /// The upwind scheme refuses cells whose closest roots are nearer than this.
    pub gap_min: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::CentralViscous,
            // at 0.5 the averaging stencil carries a step-to-step odd-even
            // oscillation that spoils du/dt estimates
            cfl: 0.9,
            t_end: 1.0,
            blowup_threshold: BlowupThreshold::default(),
            snapshot_every: 1,
            rk2: false,
            newton_tol: 0.0,
            gap_min: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: String| Err(EvolveError::InvalidConfig(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if [self.newton_tol, self.gap_min]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return bad("newton_tol and gap_min must be non-negative".into());
        }
        self.blowup_threshold.validate()
    }
}

fn spectral_radius(u: &CoeffVector) -> f64 {
    if u.n() == 3 {
        return depressed_cubic_roots(2.0 * u[0], u[1])
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    companion_roots(u)
        .map(|roots| roots.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY)
}

/// dt = cfl h / max spectral radius of A(U), never more than h.
pub fn cfl_dt(state: &FieldState, cfl: f64) -> f64 {
    let h = state.grid.h();
    let rho = state
        .u
        .par_iter()
        .map(spectral_radius)
        .reduce(|| 0.0, f64::max);
    if rho > 0.0 {
        (cfl * h / rho).min(h)
    } else {
        h
    }
}

/// A(U) v without forming the matrix.
pub fn apply_a(u: &[f64], v: &[f64]) -> Coeffs {
    let n = u.len();
    (0..n)
        .map(|k| {
            let up = if k + 1 < n { v[k + 1] } else { 0.0 };
            if k == 0 {
                up
            } else {
                up - (n - k) as f64 * u[k - 1] * v[0]
            }
        })
        .collect()
}

/// U_j <- (U_{j-1} + U_{j+1})/2 - dt/(2h) A(U_j)(U_{j+1} - U_{j-1}).
pub fn step_central(state: &FieldState, dt: f64) -> FieldState {
    let g = state.grid;
    let k = dt / (2.0 * g.h());
    let u = &state.u;
    let next = (0..g.cells())
        .into_par_iter()
        .map(|j| {
            let um = &u[g.wrap(j as isize - 1)];
            let up = &u[g.wrap(j as isize + 1)];
            let diff: Coeffs = up.iter().zip(um.iter()).map(|(a, b)| a - b).collect();
            let flux = apply_a(&u[j], &diff);
            let c: Coeffs = (0..u[j].n())
                .map(|i| 0.5 * (um[i] + up[i]) - k * flux[i])
                .collect();
            CoeffVector::new(&c).unwrap_or_else(|_| nan_like(&u[j]))
        })
        .collect();
    FieldState {
        grid: g,
        t: state.t + dt,
        u: next,
    }
}

fn nan_like(u: &CoeffVector) -> CoeffVector {
    let mut c = u.clone();
    c.as_mut_slice().fill(f64::NAN);
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannOptions {
    pub gap_min: f64,
    pub newton_tol: f64,
    pub rk2: bool,
}

impl Default for RiemannOptions {
    fn default() -> Self {
        let c = SolverConfig::default();
        RiemannOptions {
            gap_min: c.gap_min,
            newton_tol: c.newton_tol,
            rk2: c.rk2,
        }
    }
}

struct Diagonal {
    lambdas: Vec<Coeffs>,
    r: Vec<Coeffs>,
}

fn diagonalize(state: &FieldState, gap_min: f64) -> Result<Diagonal, EvolveError> {
    let tol = RegimeTolerance::default();
    let per_cell: Vec<Result<(Coeffs, Coeffs), (usize, String)>> = state
        .u
        .par_iter()
        .enumerate()
        .map(|(j, u)| {
            let l = hyperbolic_roots(u, tol).map_err(|e| (j, e.to_string()))?;
            let gap = l
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            if gap <= gap_min {
                return Err((j, format!("root gap {gap:e} below {gap_min:e}")));
            }
            let r = maclane_forward(u).map_err(|e| (j, e.to_string()))?;
            Ok((l, r))
        })
        .collect();
    let mut lambdas = Vec::with_capacity(per_cell.len());
    let mut r = Vec::with_capacity(per_cell.len());
    for c in per_cell {
        match c {
            Ok((l, rr)) => {
                lambdas.push(l);
                r.push(rr);
            }
            Err((cell, reason)) => {
                return Err(EvolveError::RegimeChangeBlocked {
                    cell,
                    t: state.t,
                    reason,
                })
            }
        }
    }
    Ok(Diagonal { lambdas, r })
}

/// One upwind step of every r_i with its own wind sign.
fn upwind(r: &[Coeffs], lambdas: &[Coeffs], dt: f64, h: f64) -> Vec<Coeffs> {
    let cells = r.len();
    (0..cells)
        .into_par_iter()
        .map(|j| {
            let jm = (j + cells - 1) % cells;
            let jp = (j + 1) % cells;
            (0..r[j].len())
                .map(|i| {
                    let l = lambdas[j][i];
                    let slope = if l > 0.0 {
                        r[j][i] - r[jm][i]
                    } else {
                        r[jp][i] - r[j][i]
                    };
                    r[j][i] - dt / h * l * slope
                })
                .collect()
        })
        .collect()
}

fn invert_cells(
    state: &FieldState,
    old_r: &[Coeffs],
    new_r: &[Coeffs],
    opts: &RiemannOptions,
    t: f64,
) -> Result<Vec<CoeffVector>, EvolveError> {
    state
        .u
        .par_iter()
        .enumerate()
        .map(|(j, u)| {
            if new_r[j] == old_r[j] {
                return Ok(u.clone());
            }
            maclane_inverse(&new_r[j], u, opts.newton_tol).map_err(|e| {
                EvolveError::RegimeChangeBlocked {
                    cell: j,
                    t,
                    reason: e.to_string(),
                }
            })
        })
        .collect()
}

pub fn step_riemann(state: &FieldState, dt: f64) -> Result<FieldState, EvolveError> {
    step_riemann_with(state, dt, &RiemannOptions::default())
}

pub fn step_riemann_with(
    state: &FieldState,
    dt: f64,
    opts: &RiemannOptions,
) -> Result<FieldState, EvolveError> {
    let h = state.grid.h();
    let t_new = state.t + dt;
    let d0 = diagonalize(state, opts.gap_min)?;
    let r1 = upwind(&d0.r, &d0.lambdas, dt, h);
    let u1 = invert_cells(state, &d0.r, &r1, opts, t_new)?;
    if !opts.rk2 {
        return Ok(FieldState {
            grid: state.grid,
            t: t_new,
            u: u1,
        });
    }
    let stage = FieldState {
        grid: state.grid,
        t: t_new,
        u: u1,
    };
    let d1 = diagonalize(&stage, opts.gap_min)?;
    let r2 = upwind(&d1.r, &d1.lambdas, dt, h);
    let r_new: Vec<Coeffs> =
        d0.r.iter()
            .zip(&r2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect())
            .collect();
    let u = invert_cells(&stage, &d0.r, &r_new, opts, t_new)?;
    Ok(FieldState {
        grid: state.grid,
        t: t_new,
        u,
    })
}

/// Largest |d r_i / dq| over cells whose stencil lies in the hyperbolic
/// region, and |d u_k / dq| at the other cells.
pub fn max_gradient(state: &FieldState) -> f64 {
    let h = state.grid.h();
    let rf = riemann_fields(state);
    let n = state.n();
    let r_grad: Vec<Vec<f64>> = (0..n).map(|i| d_dq_values(&rf.family(i), h)).collect();
    let u_grad: Vec<Vec<f64>> = (0..n)
        .map(|k| d_dq_values(&state.component(k), h))
        .collect();
    let mut g = 0.0f64;
    for j in 0..state.grid.cells() {
        let from_r: Option<f64> = r_grad
            .iter()
            .map(|d| d[j])
            .try_fold(0.0f64, |m, v| v.is_finite().then(|| m.max(v.abs())));
        let v = match from_r {
            Some(v) => v,
            None => u_grad.iter().map(|d| d[j].abs()).fold(0.0, f64::max),
        };
        if v.is_nan() {
            return f64::INFINITY;
        }
        g = g.max(v);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ReachedTEnd,
    BlowupDetected,
    RegimeChangeBlocked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    pub stopped_reason: StopReason,
    /// Crossing time of the threshold, interpolated linearly between steps.
    pub blowup_time_observed: Option<f64>,
    pub max_gradient_history: Vec<(f64, f64)>,
    /// The resolved gradient threshold.
    pub threshold: f64,
    /// Set when any step saw an elliptic cell, where the initial-value
    /// problem is ill-posed.
    pub ill_posed_region: bool,
    pub blocked: Option<EvolveError>,
    pub scheme: Scheme,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub stopped_reason: StopReason,
    pub t_final: f64,
    pub blowup_time_observed: Option<f64>,
    pub threshold: f64,
    pub ill_posed_region: bool,
    pub scheme: Scheme,
    pub cells: usize,
    pub steps: usize,
    pub blocked: Option<String>,
    pub max_gradient_history: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn t_final(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn first(&self) -> &FieldState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots
            .last()
            .expect("trajectory has at least one snapshot")
    }

    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            stopped_reason: self.stopped_reason,
            t_final: self.t_final(),
            blowup_time_observed: self.blowup_time_observed,
            threshold: self.threshold,
            ill_posed_region: self.ill_posed_region,
            scheme: self.scheme,
            cells: self.first().grid.cells(),
            steps: self.steps,
            blocked: self.blocked.as_ref().map(ToString::to_string),
            max_gradient_history: self.max_gradient_history.clone(),
        }
    }
}

fn has_elliptic(state: &FieldState) -> bool {
    let tol = RegimeTolerance::default();
    state
        .u
        .par_iter()
        .any(|u| classify_regime(u, tol) == Regime::Elliptic)
}

/// Advances to `t_end` or until the gradient monitor trips.
pub fn run(state0: &FieldState, config: &SolverConfig) -> Result<Trajectory, EvolveError> {
    config.validate()?;
    let opts = RiemannOptions {
        gap_min: config.gap_min,
        newton_tol: config.newton_tol,
        rk2: config.rk2,
    };
    let g0 = max_gradient(state0);
    let threshold = config.blowup_threshold.resolve(g0);
    let mut traj = Trajectory {
        snapshots: vec![state0.clone()],
        stopped_reason: StopReason::ReachedTEnd,
        blowup_time_observed: None,
        max_gradient_history: vec![(state0.t, g0)],
        threshold,
        ill_posed_region: has_elliptic(state0),
        blocked: None,
        scheme: config.scheme,
        steps: 0,
    };
    if !state0.is_finite() || g0 > threshold {
        traj.stopped_reason = StopReason::BlowupDetected;
        traj.blowup_time_observed = Some(state0.t);
        return Ok(traj);
    }
    let t_end = state0.t + config.t_end;
    let mut state = state0.clone();
    let mut g_prev = g0;
    // the final partial step lands on t_end exactly
    while state.t < t_end {
        let dt = cfl_dt(&state, config.cfl).min(t_end - state.t);
        let next = match config.scheme {
            Scheme::CentralViscous => Ok(step_central(&state, dt)),
            Scheme::RiemannUpwind => step_riemann_with(&state, dt, &opts),
        };
        let next = match next {
            Ok(s) => s,
            Err(e) => {
                traj.stopped_reason = StopReason::RegimeChangeBlocked;
                traj.blocked = Some(e);
                break;
            }
        };
        traj.steps += 1;
        let last = next.t >= t_end || dt <= 0.0;
        if !next.is_finite() {
            traj.stopped_reason = StopReason::BlowupDetected;
            traj.blowup_time_observed = Some(next.t);
            traj.max_gradient_history.push((next.t, f64::INFINITY));
            break;
        }
        let g = max_gradient(&next);
        traj.max_gradient_history.push((next.t, g));
        traj.ill_posed_region |= has_elliptic(&next);
        if g > threshold {
            let w = if g.is_finite() {
                (threshold - g_prev) / (g - g_prev)
            } else {
                1.0
            };
            traj.blowup_time_observed = Some(state.t + w.clamp(0.0, 1.0) * (next.t - state.t));
            traj.stopped_reason = StopReason::BlowupDetected;
            traj.snapshots.push(next);
            return Ok(traj);
        }
        g_prev = g;
        state = next;
        if last || traj.steps.is_multiple_of(config.snapshot_every) {
            traj.snapshots.push(state.clone());
        }
        if last {
            break;
        }
    }
    if traj.last().t < state.t {
        traj.snapshots.push(state);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{sample_field, InitialData, TorusGrid};
    use crate::polycore::matrix_a;
    use approx::assert_abs_diff_eq;

    fn field(name: &str, n: usize) -> FieldState {
        sample_field(
            &InitialData::preset(name).unwrap(),
            TorusGrid::new(n).unwrap(),
        )
        .unwrap()
    }

    fn drift(a: &FieldState, b: &FieldState) -> f64 {
        a.u.iter()
            .zip(&b.u)
            .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn apply_a_matches_matrix() {
        for u in [
            vec![-0.5, 0.3, 0.2],
            vec![1.0, -2.0],
            vec![-1.0, 0.1, 0.05, 0.3],
        ] {
            let cv = CoeffVector::new(&u).unwrap();
            let v: Vec<f64> = (0..u.len()).map(|i| 0.3 * i as f64 - 0.7).collect();
            let dense = matrix_a(&cv) * nalgebra::DVector::from_vec(v.clone());
            let fast = apply_a(&u, &v);
            for i in 0..u.len() {
                assert_abs_diff_eq!(fast[i], dense[i], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cfl_examples() {
        let s = field("constant", 64);
        assert_abs_diff_eq!(cfl_dt(&s, 0.5), 1.0 / 128.0, epsilon = 1e-15);
        let zero = FieldState::new(s.grid, 0.0, vec![CoeffVector::n3(0.0, 0.0, 0.0); 64]).unwrap();
        assert_eq!(cfl_dt(&zero, 0.5), 1.0 / 64.0);
        let fine = field("constant", 128);
        assert_abs_diff_eq!(cfl_dt(&fine, 0.5), 0.5 * cfl_dt(&s, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let s = field("constant", 32);
        let c = step_central(&s, cfl_dt(&s, 0.5));
        assert_eq!(c.u, s.u);
        let r = step_riemann(&s, cfl_dt(&s, 0.5)).unwrap();
        assert_eq!(r.u, s.u);
        let rk = step_riemann_with(
            &s,
            0.01,
            &RiemannOptions {
                rk2: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rk.u, s.u);
    }

    #[test]
    fn riemann_refuses_elliptic_cells() {
        let g = TorusGrid::new(8).unwrap();
        let mut u = vec![CoeffVector::n3(-0.5, 0.0, 0.0); 8];
        u[5] = CoeffVector::n3(0.5, 0.0, 0.0);
        let s = FieldState::new(g, 0.0, u).unwrap();
        match step_riemann(&s, 0.01) {
            Err(EvolveError::RegimeChangeBlocked { cell, .. }) => assert_eq!(cell, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn traveling_wave_drift_is_first_order() {
        let run_to = |n: usize| {
            let s = field("traveling", n);
            let cfg = SolverConfig {
                t_end: 0.5,
                blowup_threshold: BlowupThreshold::Absolute { value: 1e3 },
                ..SolverConfig::default()
            };
            let traj = run(&s, &cfg).unwrap();
            assert_eq!(traj.stopped_reason, StopReason::ReachedTEnd);
            assert_abs_diff_eq!(traj.t_final(), 0.5, epsilon = 1e-12);
            drift(traj.last(), &s)
        };
        let ratio = run_to(64) / run_to(128);
        assert!((1.5..=3.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn traveling_wave_upwind_stays_put() {
        let s = field("traveling", 128);
        let cfg = SolverConfig {
            scheme: Scheme::RiemannUpwind,
            t_end: 0.5,
            ..SolverConfig::default()
        };
        let traj = run(&s, &cfg).unwrap();
        assert_eq!(traj.stopped_reason, StopReason::ReachedTEnd);
        // r_1 = r_3 are constant and the middle speed vanishes
        assert!(drift(traj.last(), &s) < 1e-10, "{}", drift(traj.last(), &s));
    }

    #[test]
    fn schemes_agree_at_first_order() {
        let gap = |n: usize| {
            let s = field("perturbed", n);
            let base = SolverConfig {
                t_end: 0.2,
                blowup_threshold: BlowupThreshold::Absolute { value: 1e3 },
                ..SolverConfig::default()
            };
            let c = run(&s, &base).unwrap();
            let r = run(
                &s,
                &SolverConfig {
                    scheme: Scheme::RiemannUpwind,
                    ..base
                },
            )
            .unwrap();
            drift(c.last(), r.last())
        };
        let (a, b) = (gap(64), gap(128));
        assert!(b < a && a / b > 1.4, "{a} {b}");
    }

    #[test]
    fn run_records_history_and_snapshots() {
        let s = field("constant", 16);
        let cfg = SolverConfig {
            t_end: 10.0,
            snapshot_every: 50,
            ..SolverConfig::default()
        };
        let traj = run(&s, &cfg).unwrap();
        assert_eq!(traj.stopped_reason, StopReason::ReachedTEnd);
        assert!(traj.max_gradient_history.iter().all(|&(_, g)| g == 0.0));
        assert!(traj.snapshots.windows(2).all(|w| w[1].t > w[0].t));
        assert_abs_diff_eq!(traj.t_final(), 10.0, epsilon = 1e-12);
        assert!(!traj.ill_posed_region);
        assert_eq!(traj.summary().steps, traj.steps);
    }

    #[test]
    fn elliptic_data_is_flagged() {
        let s = field("elliptic-bump", 64);
        let cfg = SolverConfig {
            t_end: 0.05,
            ..SolverConfig::default()
        };
        let traj = run(&s, &cfg).unwrap();
        assert!(traj.ill_posed_region);
    }

    #[test]
    fn perturbed_data_blows_up() {
        let s = field("perturbed", 256);
        let cfg = SolverConfig {
            scheme: Scheme::RiemannUpwind,
            cfl: 0.9,
            t_end: 3.0,
            ..SolverConfig::default()
        };
        let traj = run(&s, &cfg).unwrap();
        assert_eq!(traj.stopped_reason, StopReason::BlowupDetected);
        let t = traj.blowup_time_observed.unwrap();
        assert!(t > 0.3 && t < 1.5, "{t}");
        assert!(traj.max_gradient_history.last().unwrap().1 > traj.threshold);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SolverConfig {
                cfl: 0.0,
                ..Default::default()
            },
            SolverConfig {
                cfl: 1.5,
                ..Default::default()
            },
            SolverConfig {
                t_end: -1.0,
                ..Default::default()
            },
            SolverConfig {
                snapshot_every: 0,
                ..Default::default()
            },
            SolverConfig {
                blowup_threshold: BlowupThreshold::Absolute { value: 0.0 },
                ..Default::default()
            },
            SolverConfig {
                blowup_threshold: BlowupThreshold::Relative {
                    factor: 0.5,
                    floor: 1.0,
                },
                ..Default::default()
            },
        ];
        let s = field("constant", 8);
        for c in bad {
            assert!(
                matches!(run(&s, &c), Err(EvolveError::InvalidConfig(_))),
                "{c:?}"
            );
        }
        assert_eq!("central".parse::<Scheme>().unwrap(), Scheme::CentralViscous);
        assert!("weno".parse::<Scheme>().is_err());
    }
}
