//! Post-processing that tests trajectories against the structure of smooth
//! periodic solutions: stationary waves with u_2 = 0 and u_3 = u_1^2 + c,
//! and regions that form strips parallel to the t-axis.

use serde::Serialize;

use crate::evolve::{run, EvolveError, SolverConfig, StopReason, Trajectory};
use crate::fields::{
    regime_map, sample_field, FieldState, InitialData, RegimeSummary, TorusGrid, MIN_CELLS,
};
use crate::polycore::{Regime, RegimeTolerance};

/// Default ratio between a classification tolerance and the measured drift
/// of the stationary family.
pub const DRIFT_SAFETY: f64 = 5.0;

/// Lowest tolerance handed out by [`drift_tolerance`]; schemes that keep
/// the stationary family exact still carry round-off in the inverse map.
pub const TOLERANCE_FLOOR: f64 = 1e-9;

/// Strip and degeneracy listings in reports are truncated to this length.
const MAX_LISTED: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    TravelingWave,
    Constant,
    NonClassical,
}

/// Shift-based estimate of a translation speed, computed only when the
/// trajectory is not stationary within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveSpeed {
    pub mu: f64,
    /// Sup-norm mismatch between the final state shifted back and the first.
    pub shift_residual: f64,
    /// max |u_2 + 2 mu u_1 + mu^3| on the first snapshot.
    pub relation_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    /// max |du/dt| from consecutive snapshots.
    pub dt_residual: f64,
    /// max |u_2| over snapshots (n = 3 only, else NaN).
    pub u2_residual: f64,
    /// max |u_3 - u_1^2 - c*| with c* the per-snapshot mean (n = 3 only).
    pub square_residual: f64,
    /// max |u_k - mean u_k| over snapshots.
    pub spatial_variation: f64,
    pub stopped_reason: StopReason,
    pub strip_summary: RegimeSummary,
    pub wave_speed: Option<WaveSpeed>,
}

fn sup_diff(a: &FieldState, b: &FieldState) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn square_parts(state: &FieldState) -> (f64, f64) {
    let gap: Vec<f64> = state.u.iter().map(|u| u[2] - u[0] * u[0]).collect();
    let c = mean(&gap);
    let u2 = state
        .component(1)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let sq = gap.iter().fold(0.0f64, |m, g| m.max((g - c).abs()));
    (u2, sq)
}

/// max over cells of max(|u_2|, |u_3 - u_1^2 - c*|), zero exactly when
/// every cell polynomial is (p^2/2 + u_1)^2 plus one shared constant.
/// NaN unless n = 3.
pub fn f_square_check(state: &FieldState) -> f64 {
    if state.n() != 3 {
        return f64::NAN;
    }
    let (u2, sq) = square_parts(state);
    u2.max(sq)
}

fn spatial_variation(state: &FieldState) -> f64 {
    (0..state.n())
        .map(|k| {
            let v = state.component(k);
            let m = mean(&v);
            v.iter().fold(0.0f64, |acc, x| acc.max((x - m).abs()))
        })
        .fold(0.0, f64::max)
}

fn wave_speed(traj: &Trajectory) -> Option<WaveSpeed> {
    let (first, last) = (traj.first(), traj.last());
    let span = last.t - first.t;
    if span <= 0.0 {
        return None;
    }
    let cells = first.grid.cells();
    let (shift, shift_residual) = (0..cells)
        .map(|s| (s, sup_diff(&last.rotated(s), first)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))?;
    // rotated(s) moves data s cells to the left; signed shifts lie in (-N/2, N/2]
    let signed = if shift > cells / 2 {
        shift as f64 - cells as f64
    } else {
        shift as f64
    };
    let mu = signed * first.grid.h() / span;
    let relation_residual = if first.n() == 3 {
        first
            .u
            .iter()
            .map(|u| (u[1] + 2.0 * mu * u[0] + mu.powi(3)).abs())
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    Some(WaveSpeed {
        mu,
        shift_residual,
        relation_residual,
    })
}

/// Classifies a trajectory as constant, a stationary wave of the
/// u_2 = 0, u_3 = u_1^2 + c family, or neither.
pub fn classify_trajectory(traj: &Trajectory, tol: f64) -> ClassificationReport {
    let snaps = &traj.snapshots;
    let dt_residual = snaps
        .windows(2)
        .filter(|w| w[1].t > w[0].t)
        .map(|w| sup_diff(&w[1], &w[0]) / (w[1].t - w[0].t))
        .fold(0.0, f64::max);
    let n3 = traj.first().n() == 3;
    let (u2_residual, square_residual) = if n3 {
        snaps
            .iter()
            .map(square_parts)
            .fold((0.0f64, 0.0f64), |(a, b), (x, y)| (a.max(x), b.max(y)))
    } else {
        (f64::NAN, f64::NAN)
    };
    let spatial = snaps.iter().map(spatial_variation).fold(0.0, f64::max);
    let finite = snaps.iter().all(FieldState::is_finite);
    let clean = traj.stopped_reason == StopReason::ReachedTEnd && finite && snaps.len() >= 2;
    let stationary = clean && dt_residual <= tol;
    let verdict = if stationary && spatial <= tol {
        Verdict::Constant
    } else if stationary && n3 && u2_residual <= tol && square_residual <= tol {
        Verdict::TravelingWave
    } else {
        Verdict::NonClassical
    };
    let wave = if clean && dt_residual > tol {
        wave_speed(traj)
    } else {
        None
    };
    ClassificationReport {
        verdict,
        tolerance: tol,
        dt_residual,
        u2_residual,
        square_residual,
        spatial_variation: spatial,
        stopped_reason: traj.stopped_reason,
        strip_summary: regime_map(traj.last(), RegimeTolerance::default()).summary(),
        wave_speed: wave,
    }
}

/// Largest of the residuals that a stationary wave must keep small.
pub fn stationary_residual(report: &ClassificationReport) -> f64 {
    [
        report.dt_residual,
        report.u2_residual,
        report.square_residual,
    ]
    .into_iter()
    .filter(|v| !v.is_nan())
    .fold(0.0, f64::max)
}

/// Classification tolerance for runs on `cells` cells: the stationary
/// traveling-wave preset is run on half the grid with the same solver
/// settings, and its largest residual, halved for first-order convergence,
/// is scaled by [`DRIFT_SAFETY`].
pub fn drift_tolerance(cells: usize, config: &SolverConfig) -> Result<f64, EvolveError> {
    let half = TorusGrid::new((cells / 2).max(MIN_CELLS))
        .map_err(|e| EvolveError::InvalidConfig(e.to_string()))?;
    let spec = InitialData::preset("traveling").expect("built-in preset");
    let state = sample_field(&spec, half).map_err(|e| EvolveError::InvalidConfig(e.to_string()))?;
    let traj = run(&state, config)?;
    let measured = stationary_residual(&classify_trajectory(&traj, f64::INFINITY));
    Ok((DRIFT_SAFETY * measured / 2.0).max(TOLERANCE_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeChange {
    pub t: f64,
    pub cell: usize,
    pub from: Regime,
    pub to: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonMaximalCell {
    pub t: f64,
    pub cell: usize,
    pub u1: f64,
    pub u2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripReport {
    pub passed: bool,
    /// No cell changed regime except within one cell of an initial
    /// component boundary.
    pub strips_invariant: bool,
    /// Every degenerate cell, and every cell that was degenerate at the
    /// start, keeps |u_1|, |u_2| <= eps.
    pub degenerate_are_maximal: bool,
    pub eps: f64,
    pub snapshots: usize,
    pub initial: RegimeSummary,
    pub last: RegimeSummary,
    pub moved_cells: usize,
    pub moved: Vec<RegimeChange>,
    pub non_maximal_cells: usize,
    pub non_maximal: Vec<NonMaximalCell>,
}

/// Checks that regions stay strips parallel to the t-axis and that the
/// degenerate set contains only points of maximal degeneration.
pub fn strip_check(traj: &Trajectory, tol: RegimeTolerance) -> StripReport {
    let init = regime_map(traj.first(), tol);
    let cells = init.cells.len();
    let near_edge: Vec<bool> = (0..cells)
        .map(|j| {
            let c = init.cells[j];
            c.is_degenerate()
                || init.cells[(j + cells - 1) % cells] != c
                || init.cells[(j + 1) % cells] != c
        })
        .collect();
    let mut moved = Vec::new();
    let mut non_maximal = Vec::new();
    let mut last = init.summary();
    for s in &traj.snapshots {
        let map = regime_map(s, tol);
        for (j, (&now, &was)) in map.cells.iter().zip(&init.cells).enumerate() {
            if now != was && !near_edge[j] {
                moved.push(RegimeChange {
                    t: s.t,
                    cell: j,
                    from: was,
                    to: now,
                });
            }
        }
        // initial boundary cells must stay maximally degenerate too, so the
        // check cannot pass just because they were reclassified
        let eps = tol.eps_zero;
        let offending = map
            .boundary
            .iter()
            .filter(|b| b.regime == Regime::Degenerate)
            .map(|b| b.cell);
        let drifted = init.boundary.iter().map(|b| b.cell).filter(|&j| {
            let u = &s.u[j];
            u[0].abs() > eps || u.get(1).is_some_and(|v| v.abs() > eps)
        });
        let mut bad: Vec<usize> = offending.chain(drifted).collect();
        bad.sort_unstable();
        bad.dedup();
        non_maximal.extend(bad.into_iter().map(|j| NonMaximalCell {
            t: s.t,
            cell: j,
            u1: s.u[j][0],
            u2: s.u[j].get(1).copied().unwrap_or(0.0),
        }));
        last = map.summary();
    }
    let (moved_cells, non_maximal_cells) = (moved.len(), non_maximal.len());
    moved.truncate(MAX_LISTED);
    non_maximal.truncate(MAX_LISTED);
    StripReport {
        passed: moved_cells == 0 && non_maximal_cells == 0,
        strips_invariant: moved_cells == 0,
        degenerate_are_maximal: non_maximal_cells == 0,
        eps: tol.eps_zero,
        snapshots: traj.snapshots.len(),
        initial: init.summary(),
        last,
        moved_cells,
        moved,
        non_maximal_cells,
        non_maximal,
    }
}
