//! Characteristic curves dq/dt = lambda_i and the blow-up ODE z' = -K z^2
//! transported along them.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::eigenstructure::{derivative_table, n3_from_roots};
use crate::evolve::Trajectory;
use crate::fields::{d_dq_values, riemann_fields, FieldState};
use crate::polycore::{hyperbolic_roots, RegimeTolerance};

/// |z| below this (relative to the largest |z| on the grid, floored at 1)
/// is treated as zero when seeding predictions.
pub const Z_NOISE_FLOOR: f64 = 1e-9;

/// Seeds are placed at every `SEED_STRIDE`-th cell.
pub const SEED_STRIDE: usize = 4;

#[derive(Debug, Error)]
pub enum CharError {
    #[error("({q}, {t}) is not inside the hyperbolic region")]
    OutsideHyperbolic { q: f64, t: f64 },
    #[error("no characteristic predicts a finite blow-up time")]
    NoBlowupPredicted,
    #[error("family {family} out of range 1..={n}")]
    BadFamily { family: usize, n: usize },
    #[error("t0 = {t0} lies outside the trajectory span [{start}, {end}]")]
    TimeOutOfRange { t0: f64, start: f64, end: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One characteristic with the quantities sampled along it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPath {
    /// 1-based family index.
    pub family: usize,
    /// (t, q mod 1), times strictly monotone.
    pub points: Vec<(f64, f64)>,
    pub lambda: Vec<f64>,
    pub r: Vec<f64>,
    /// z_i = |F_pp(lambda_i)|^{1/2} (r_i)_q as measured from the field.
    pub z: Vec<f64>,
    pub k: Vec<f64>,
    pub predicted_tstar: Option<f64>,
}

impl CharPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CharError> {
        let mut w = csv::Writer::from_writer(out);
        let i = self.family;
        w.write_record([
            "t".to_string(),
            "q".into(),
            format!("lambda_{i}"),
            format!("r_{i}"),
            format!("z_{i}"),
            format!("K_{i}"),
        ])?;
        for (j, &(t, q)) in self.points.iter().enumerate() {
            w.write_record(
                [t, q, self.lambda[j], self.r[j], self.z[j], self.k[j]].map(|v| v.to_string()),
            )?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Per-snapshot cell values of one family; NaN outside the hyperbolic region.
#[derive(Debug, Clone)]
pub struct FamilyField {
    family: usize,
    times: Vec<f64>,
    h: f64,
    lambda: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    lambda: f64,
    r: f64,
    z: f64,
    k: f64,
}

fn check_family(family: usize, n: usize) -> Result<usize, CharError> {
    if family == 0 || family > n {
        return Err(CharError::BadFamily { family, n });
    }
    Ok(family - 1)
}

/// lambda_i, r_i, z_i and K_i at every cell of one state.
fn family_cells(state: &FieldState, i: usize) -> [Vec<f64>; 4] {
    let tol = RegimeTolerance::default();
    let rf = riemann_fields(state);
    let r = rf.family(i);
    let rq = d_dq_values(&r, state.grid.h());
    let per: Vec<(f64, f64, f64)> = state
        .u
        .par_iter()
        .map(|u| {
            let nan = (f64::NAN, f64::NAN, f64::NAN);
            if u.n() == 3 {
                let Ok(l) = hyperbolic_roots(u, tol) else {
                    return nan;
                };
                let s = n3_from_roots([l[0], l[1], l[2]]);
                (l[i], s.fpp[i], s.k[i])
            } else {
                let Ok(d) = derivative_table(u) else {
                    return nan;
                };
                let fpp = d.fpp[i];
                (d.lambdas[i], fpp, d.dlam[(i, i)] / fpp.abs().sqrt())
            }
        })
        .collect();
    let lambda = per.iter().map(|p| p.0).collect();
    let z = per
        .iter()
        .zip(&rq)
        .map(|(p, q)| p.1.abs().sqrt() * q)
        .collect();
    let k = per.iter().map(|p| p.2).collect();
    [lambda, r, z, k]
}

impl FamilyField {
    pub fn new(traj: &Trajectory, family: usize) -> Result<Self, CharError> {
        Self::from_states(&traj.snapshots, family)
    }

    pub fn from_states(states: &[FieldState], family: usize) -> Result<Self, CharError> {
        let n = states.first().map_or(0, FieldState::n);
        let i = check_family(family, n)?;
        let mut f = FamilyField {
            family,
            times: Vec::with_capacity(states.len()),
            h: states[0].grid.h(),
            lambda: Vec::new(),
            r: Vec::new(),
            z: Vec::new(),
            k: Vec::new(),
        };
        for s in states {
            // repeated times would make the time interpolation singular
            if f.times.last().is_some_and(|&t| s.t <= t) {
                continue;
            }
            let [l, r, z, k] = family_cells(s, i);
            f.times.push(s.t);
            f.lambda.push(l);
            f.r.push(r);
            f.z.push(z);
            f.k.push(k);
        }
        Ok(f)
    }

    pub fn family(&self) -> usize {
        self.family
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("at least one snapshot")
    }

    /// Cell values at snapshot `s` (lambda, r, z, K).
    fn at_cell(&self, s: usize, j: usize) -> Sample {
        Sample {
            lambda: self.lambda[s][j],
            r: self.r[s][j],
            z: self.z[s][j],
            k: self.k[s][j],
        }
    }

    fn cells(&self) -> usize {
        self.lambda[0].len()
    }

    /// Periodic cubic Lagrange interpolation through the four nearest centres.
    fn interp_q(&self, s: usize, q: f64) -> Sample {
        let cells = self.cells();
        let x = q.rem_euclid(1.0) / self.h - 0.5;
        let j0 = x.floor();
        let f = x - j0;
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        let mut acc = [0.0; 4];
        for (m, wm) in w.iter().enumerate() {
            let j = (j0 as isize - 1 + m as isize).rem_euclid(cells as isize) as usize;
            let c = self.at_cell(s, j);
            for (a, v) in acc.iter_mut().zip([c.lambda, c.r, c.z, c.k]) {
                *a += wm * v;
            }
        }
        Sample {
            lambda: acc[0],
            r: acc[1],
            z: acc[2],
            k: acc[3],
        }
    }

    /// Cubic in q, linear in t.
    fn sample(&self, t: f64, q: f64) -> Sample {
        let last = self.times.len() - 1;
        if last == 0 {
            return self.interp_q(0, q);
        }
        let s = self.times.partition_point(|&ts| ts <= t).clamp(1, last) - 1;
        let w = ((t - self.times[s]) / (self.times[s + 1] - self.times[s])).clamp(0.0, 1.0);
        let a = self.interp_q(s, q);
        let b = self.interp_q(s + 1, q);
        let mix = |x: f64, y: f64| (1.0 - w) * x + w * y;
        Sample {
            lambda: mix(a.lambda, b.lambda),
            r: mix(a.r, b.r),
            z: mix(a.z, b.z),
            k: mix(a.k, b.k),
        }
    }

    /// Integrates dq/dt = lambda_i from (q0, t0) until `t_limit`, the end of
    /// the data, or the path leaves the hyperbolic region.
    pub fn trace(
        &self,
        q0: f64,
        t0: f64,
        forward: bool,
        t_limit: f64,
    ) -> Result<CharPath, CharError> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(start..=end).contains(&t0) {
            return Err(CharError::TimeOutOfRange { t0, start, end });
        }
        let first = self.sample(t0, q0);
        if ![first.lambda, first.r, first.z, first.k]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(CharError::OutsideHyperbolic { q: q0, t: t0 });
        }
        let stop = if forward {
            t_limit.min(end)
        } else {
            t_limit.max(start)
        };
        let mut path = CharPath {
            family: self.family,
            points: vec![(t0, q0.rem_euclid(1.0))],
            lambda: vec![first.lambda],
            r: vec![first.r],
            z: vec![first.z],
            k: vec![first.k],
            predicted_tstar: None,
        };
        let speed = |t: f64, q: f64| self.sample(t, q).lambda;
        let (mut t, mut q) = (t0, q0);
        // step at most one cell width and never across a snapshot
        while if forward { t < stop } else { t > stop } {
            let s = self.times.partition_point(|&ts| ts <= t);
            let next_snapshot = if forward {
                self.times.get(s).copied().unwrap_or(end)
            } else {
                let below = self.times[..s].iter().rev().find(|&&ts| ts < t);
                below.copied().unwrap_or(start)
            };
            let target = if forward {
                next_snapshot.min(stop)
            } else {
                next_snapshot.max(stop)
            };
            let span = target - t;
            if span == 0.0 {
                break;
            }
            let pieces = (span.abs() / self.h).ceil().max(1.0);
            let dt = span / pieces;
            let mut left = false;
            for m in 0..pieces as usize {
                let tn = if m + 1 == pieces as usize {
                    target
                } else {
                    t + dt
                };
                let dt = tn - t;
                let k1 = speed(t, q);
                let k2 = speed(t + dt / 2.0, q + dt / 2.0 * k1);
                let k3 = speed(t + dt / 2.0, q + dt / 2.0 * k2);
                let k4 = speed(tn, q + dt * k3);
                let qn = q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                let smp = self.sample(tn, qn);
                if ![qn, smp.lambda, smp.r, smp.z, smp.k]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    left = true;
                    break;
                }
                t = tn;
                q = qn;
                path.points.push((t, q.rem_euclid(1.0)));
                path.lambda.push(smp.lambda);
                path.r.push(smp.r);
                path.z.push(smp.z);
                path.k.push(smp.k);
            }
            if left {
                break;
            }
        }
        Ok(path)
    }
}

/// Traces one characteristic of `family` (1-based) through a trajectory.
pub fn trace(
    traj: &Trajectory,
    family: usize,
    q0: f64,
    t0: f64,
    forward: bool,
    t_limit: f64,
) -> Result<CharPath, CharError> {
    FamilyField::new(traj, family)?.trace(q0, t0, forward, t_limit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZTransport {
    /// z(t) = z0 / (1 + z0 int K), infinite past the crossing.
    pub z_closed: Vec<f64>,
    pub tstar: Option<f64>,
}

/// Means of the two halves of the trailing window may differ by this much
/// relative to the window mean before extrapolation is refused.
const K_WINDOW_SPREAD: f64 = 0.25;

fn trailing_k_average(path: &CharPath) -> Option<f64> {
    let len = path.k.len();
    let w = (len / 4).max(2);
    if len < w {
        return None;
    }
    let win = &path.k[len - w..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let all = mean(win);
    let (a, b) = win.split_at(w / 2);
    let stable = all != 0.0 && (mean(a) - mean(b)).abs() <= K_WINDOW_SPREAD * all.abs();
    stable.then_some(all)
}

/// Closed-form solution of z' = -K z^2 along the path with the K integral by
/// the trapezoid rule. The blow-up time is the first zero of 1 + z0 int K,
/// interpolated inside the path or extrapolated past its end with the mean K
/// of the trailing quarter.
pub fn z_transport(path: &CharPath) -> ZTransport {
    let z0 = path.z.first().copied().unwrap_or(0.0);
    let mut z_closed = Vec::with_capacity(path.points.len());
    let mut integral = 0.0;
    let mut denom_prev = 1.0;
    let mut tstar = None;
    for (j, &(t, _)) in path.points.iter().enumerate() {
        if j > 0 {
            let dt = t - path.points[j - 1].0;
            integral += 0.5 * dt * (path.k[j] + path.k[j - 1]);
        }
        let denom = 1.0 + z0 * integral;
        if tstar.is_none() && denom <= 0.0 && z0 != 0.0 {
            let t_prev = path.points[j - 1].0;
            tstar = Some(t_prev + (t - t_prev) * denom_prev / (denom_prev - denom));
        }
        z_closed.push(if tstar.is_some() {
            f64::INFINITY
        } else {
            z0 / denom
        });
        denom_prev = denom;
    }
    if tstar.is_none() && z0 != 0.0 {
        if let (Some(kbar), Some(&(t_end, _))) = (trailing_k_average(path), path.points.last()) {
            // the direction of travel sets the sign of the remaining time
            let dir = match path.points.len() {
                0 | 1 => 1.0,
                _ => (t_end - path.points[0].0).signum(),
            };
            let remaining = -denom_prev / (z0 * kbar * dir);
            if remaining > 0.0 && remaining.is_finite() {
                tstar = Some(t_end + dir * remaining);
            }
        }
    }
    ZTransport { z_closed, tstar }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupPrediction {
    pub tstar: f64,
    /// 1-based family index.
    pub family: usize,
    pub q0: f64,
    pub t0: f64,
    pub z0: f64,
    pub k0: f64,
}

fn seed_cells(cells: usize) -> impl Iterator<Item = usize> {
    (0..cells).step_by(SEED_STRIDE)
}

fn z_floor(z: &[f64]) -> f64 {
    Z_NOISE_FLOOR
        * z.iter()
            .filter(|v| v.is_finite())
            .fold(1.0f64, |m, v| m.max(v.abs()))
}

fn min_prediction(
    cands: impl Iterator<Item = BlowupPrediction>,
) -> Result<BlowupPrediction, CharError> {
    cands
        .filter(|p| p.tstar.is_finite())
        .min_by(|a, b| {
            a.tstar
                .total_cmp(&b.tstar)
                .then(a.family.cmp(&b.family))
                .then(a.q0.total_cmp(&b.q0))
        })
        .ok_or(CharError::NoBlowupPredicted)
}

fn outer_families(n: usize) -> Vec<usize> {
    if n == 1 {
        vec![1]
    } else {
        vec![1, n]
    }
}

/// Frozen-coefficient estimate t0 - 1/(z0 K0) from a single state, using the
/// outer families at every fourth cell.
pub fn predict_blowup(state: &FieldState) -> Result<BlowupPrediction, CharError> {
    let tol = RegimeTolerance::default();
    if let Some(j) = state
        .u
        .iter()
        .position(|u| hyperbolic_roots(u, tol).is_err())
    {
        return Err(CharError::OutsideHyperbolic {
            q: state.grid.center(j),
            t: state.t,
        });
    }
    let mut cands = Vec::new();
    for family in outer_families(state.n()) {
        let [_, _, z, k] = family_cells(state, family - 1);
        let floor = z_floor(&z);
        for j in seed_cells(state.grid.cells()) {
            let (z0, k0) = (z[j], k[j]);
            if z0.abs() > floor && z0 * k0 < 0.0 {
                cands.push(BlowupPrediction {
                    tstar: state.t - 1.0 / (z0 * k0),
                    family,
                    q0: state.grid.center(j),
                    t0: state.t,
                    z0,
                    k0,
                });
            }
        }
    }
    min_prediction(cands.into_iter())
}

/// Like [`predict_blowup`] but transports z along characteristics traced
/// through the evolving solution, so K is re-evaluated as the data changes.
pub fn predict_blowup_along(traj: &Trajectory) -> Result<BlowupPrediction, CharError> {
    let state = traj.first();
    let tol = RegimeTolerance::default();
    if let Some(j) = state
        .u
        .iter()
        .position(|u| hyperbolic_roots(u, tol).is_err())
    {
        return Err(CharError::OutsideHyperbolic {
            q: state.grid.center(j),
            t: state.t,
        });
    }
    let mut cands = Vec::new();
    for family in outer_families(state.n()) {
        let field = FamilyField::new(traj, family)?;
        let floor = z_floor(&field.z[0]);
        let t0 = field.t_start();
        let found: Vec<BlowupPrediction> = seed_cells(state.grid.cells())
            .collect::<Vec<_>>()
            .into_par_iter()
            .filter_map(|j| {
                let q0 = state.grid.center(j);
                let path = field.trace(q0, t0, true, f64::INFINITY).ok()?;
                let (z0, k0) = (path.z[0], path.k[0]);
                if z0.abs() <= floor {
                    return None;
                }
                let tstar = z_transport(&path).tstar?;
                (tstar > t0).then_some(BlowupPrediction {
                    tstar,
                    family,
                    q0,
                    t0,
                    z0,
                    k0,
                })
            })
            .collect();
        cands.extend(found);
    }
    min_prediction(cands.into_iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{run, BlowupThreshold, Scheme, SolverConfig};
    use crate::fields::{sample_field, InitialData, TorusGrid};
    use approx::assert_abs_diff_eq;

    fn run_preset(spec: &InitialData, cells: usize, scheme: Scheme, t_end: f64) -> Trajectory {
        let s = sample_field(spec, TorusGrid::new(cells).unwrap()).unwrap();
        let cfg = SolverConfig {
            scheme,
            t_end,
            blowup_threshold: BlowupThreshold::Absolute { value: 1e3 },
            ..SolverConfig::default()
        };
        run(&s, &cfg).unwrap()
    }

    fn preset(name: &str) -> InitialData {
        InitialData::preset(name).unwrap()
    }

    fn synthetic(z0: f64, k0: f64, t0: f64, len: f64, steps: usize) -> CharPath {
        let ts: Vec<f64> = (0..=steps)
            .map(|m| t0 + len * m as f64 / steps as f64)
            .collect();
        CharPath {
            family: 1,
            points: ts.iter().map(|&t| (t, 0.5)).collect(),
            lambda: vec![0.0; ts.len()],
            r: vec![0.0; ts.len()],
            z: std::iter::once(z0)
                .chain(std::iter::repeat(f64::NAN))
                .take(ts.len())
                .collect(),
            k: vec![k0; ts.len()],
            predicted_tstar: None,
        }
    }

    #[test]
    fn constant_field_paths_are_straight() {
        let traj = run_preset(&preset("constant"), 32, Scheme::CentralViscous, 1.0);
        let path = trace(&traj, 3, 0.3, 0.0, true, 1.0).unwrap();
        assert_abs_diff_eq!(path.points.last().unwrap().0, 1.0, epsilon = 1e-12);
        for &(t, q) in &path.points {
            assert_abs_diff_eq!(q, (0.3 + t).rem_euclid(1.0), epsilon = 1e-12);
        }
        assert!(path.lambda.iter().all(|&l| (l - 1.0).abs() < 1e-12));
        // backward
        let back = trace(&traj, 1, 0.3, 1.0, false, 0.25).unwrap();
        let &(t, q) = back.points.last().unwrap();
        assert_abs_diff_eq!(t, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(q, 0.05, epsilon = 1e-12);
        assert!(back.points.windows(2).all(|w| w[1].0 < w[0].0));
    }

    #[test]
    fn traveling_wave_middle_family_is_vertical() {
        let traj = run_preset(&preset("traveling"), 64, Scheme::RiemannUpwind, 1.0);
        let path = trace(&traj, 2, 0.37, 0.0, true, 1.0).unwrap();
        assert!(path.points.iter().all(|&(_, q)| (q - 0.37).abs() < 1e-10));
    }

    #[test]
    fn riemann_invariant_is_constant_along_paths() {
        let spread = |cells: usize| {
            let traj = run_preset(&preset("perturbed"), cells, Scheme::RiemannUpwind, 0.3);
            let path = trace(&traj, 1, 0.1, 0.0, true, 0.3).unwrap();
            let (lo, hi) = path
                .r
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            hi - lo
        };
        let (a, b) = (spread(128), spread(256));
        assert!(a < 2e-3 && b < 0.7 * a, "{a} {b}");
    }

    #[test]
    fn trace_rejects_bad_starts() {
        let traj = run_preset(&preset("constant"), 16, Scheme::CentralViscous, 0.1);
        assert!(matches!(
            trace(&traj, 4, 0.1, 0.0, true, 1.0),
            Err(CharError::BadFamily { .. })
        ));
        assert!(matches!(
            trace(&traj, 1, 0.1, 2.0, true, 3.0),
            Err(CharError::TimeOutOfRange { .. })
        ));
        let ell = run_preset(&preset("elliptic-bump"), 64, Scheme::CentralViscous, 0.05);
        assert!(matches!(
            trace(&ell, 1, 0.5, 0.0, true, 1.0),
            Err(CharError::OutsideHyperbolic { .. })
        ));
    }

    #[test]
    fn z_transport_exact_for_constant_k() {
        for (z0, k0, t0) in [(-0.5, 2.0, 0.0), (-1.3, 0.7, 0.25), (0.4, -3.0, 1.0)] {
            let exact = t0 - 1.0 / (z0 * k0);
            // crossing inside the path and extrapolated past its end
            for len in [2.0 * (exact - t0), 0.5 * (exact - t0)] {
                let out = z_transport(&synthetic(z0, k0, t0, len, 37));
                assert_abs_diff_eq!(out.tstar.unwrap(), exact, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn z_transport_trivial_cases() {
        let zero = z_transport(&synthetic(0.0, 2.0, 0.0, 5.0, 10));
        assert!(zero.tstar.is_none() && zero.z_closed.iter().all(|&z| z == 0.0));
        let flat = z_transport(&synthetic(0.7, 0.0, 0.0, 5.0, 10));
        assert!(flat.tstar.is_none() && flat.z_closed.iter().all(|&z| z == 0.7));
        // decaying sign: z K > 0
        let decay = z_transport(&synthetic(0.5, 2.0, 0.0, 5.0, 10));
        assert!(decay.tstar.is_none());
        assert_abs_diff_eq!(*decay.z_closed.last().unwrap(), 0.5 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn csv_header_and_rows() {
        let p = synthetic(-0.5, 2.0, 0.0, 1.0, 2);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,q,lambda_1,r_1,z_1,K_1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn no_prediction_for_stationary_data() {
        for name in ["constant", "traveling"] {
            let s = sample_field(&preset(name), TorusGrid::new(128).unwrap()).unwrap();
            assert!(
                matches!(predict_blowup(&s), Err(CharError::NoBlowupPredicted)),
                "{name}"
            );
        }
        let s = sample_field(&preset("elliptic-bump"), TorusGrid::new(64).unwrap()).unwrap();
        assert!(matches!(
            predict_blowup(&s),
            Err(CharError::OutsideHyperbolic { .. })
        ));
    }

    #[test]
    fn frozen_prediction_scales_inversely_with_delta() {
        let tstar = |delta: f64| {
            let spec = InitialData::Perturbed {
                a: 0.1,
                b: -0.3,
                c: 0.0,
                delta,
            };
            let s = sample_field(&spec, TorusGrid::new(256).unwrap()).unwrap();
            predict_blowup(&s).unwrap().tstar
        };
        let (a, b, c) = (tstar(0.025), tstar(0.05), tstar(0.1));
        assert!(a > b && b > c);
        for ratio in [a / b, b / c] {
            assert!((1.6..=2.4).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn outer_family_k_signs() {
        let s = sample_field(&preset("perturbed"), TorusGrid::new(64).unwrap()).unwrap();
        let [_, _, _, k1] = family_cells(&s, 0);
        let [_, _, _, k3] = family_cells(&s, 2);
        assert!(k1.iter().all(|&k| k > 0.0));
        assert!(k3.iter().all(|&k| k < 0.0));
    }
}
