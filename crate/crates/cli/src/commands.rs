//! One function per subcommand. Each returns its report together with the
//! exit code, and writes files only under the configured output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use benney_core::{
    admissibility_violations, classify_trajectory, drift_tolerance, inverse_seed, maclane_forward,
    maclane_inverse, predict_blowup, predict_blowup_along, round_trip_report, run,
    run_identity_suite_with, sample_field, strip_check, trace, write_snapshots_csv,
    BlowupPrediction, BlowupThreshold, CharError, ClassificationReport, FieldState, OracleReport,
    SampleBox, Scheme, SolverConfig, StopReason, StripReport, SuiteConfig, TorusGrid, Trajectory,
    TrajectorySummary, Verdict,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

/// Relative gap between observed and predicted blow-up times that still
/// counts as agreement.
pub const BLOWUP_AGREEMENT: f64 = 0.25;
/// Largest relative change of the observed blow-up time under N -> 2N.
pub const REFINEMENT_AGREEMENT: f64 = 0.1;

pub const INTERIOR_ROUND_TRIP_BOUND: f64 = 1e-9;
pub const BAND_ROUND_TRIP_BOUND: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Outcome<R> {
    pub code: i32,
    pub report: R,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

/// Files land in `dir` only; without a directory nothing is written.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: &Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output { dir: dir.clone() })
    }

    fn file(&self, name: &str) -> Result<Option<BufWriter<File>>, CliError> {
        match &self.dir {
            Some(d) => Ok(Some(BufWriter::new(File::create(d.join(name))?))),
            None => Ok(None),
        }
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if let Some(mut w) = self.file(name)? {
            serde_json::to_writer_pretty(&mut w, value)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        Ok(())
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_deref().map(|d: &Path| d.join(name))
    }
}

fn initial_state(cfg: &RunConfig) -> Result<FieldState, CliError> {
    let grid = TorusGrid::new(cfg.grid).map_err(|e| CliError::Config(format!("grid: {e}")))?;
    sample_field(&cfg.initial, grid).map_err(|e| CliError::Config(format!("initial: {e}")))
}

fn solver(cfg: &RunConfig, scheme: Scheme) -> SolverConfig {
    SolverConfig {
        scheme,
        cfl: cfg.cfl,
        t_end: cfg.t_end,
        blowup_threshold: cfg.blowup_threshold,
        snapshot_every: cfg.snapshot_every,
        ..SolverConfig::default()
    }
}

fn simulate_with(state: &FieldState, solver: &SolverConfig) -> Result<Trajectory, CliError> {
    run(state, solver).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub band: bool,
    pub pass: bool,
    pub identities: Vec<OracleReport>,
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome<VerifyReport>, CliError> {
    let mut suite = if cfg.band {
        SuiteConfig::near_degenerate()
    } else {
        SuiteConfig::default()
    };
    if cfg.tolerance.is_some() {
        suite.tolerance = cfg.tolerance;
    }
    let identities = run_identity_suite_with(cfg.samples, cfg.seed, &suite);
    let pass = identities.iter().all(|r| r.pass);
    let report = VerifyReport {
        seed: cfg.seed,
        samples: cfg.samples,
        band: cfg.band,
        pass,
        identities,
    };
    Output::new(&cfg.out)?.json("verify_report.json", &report)?;
    let mut summary: Vec<String> = report
        .identities
        .iter()
        .map(|r| {
            let mark = if r.pass { "ok  " } else { "FAIL" };
            format!(
                "{mark} {:<26} max rel err {:.3e} (tol {:.1e})",
                r.identity.label(),
                r.max_rel_err,
                r.tolerance
            )
        })
        .collect();
    summary.push(format!(
        "{} identities, {} samples, seed {}",
        report.identities.len(),
        cfg.samples,
        cfg.seed
    ));
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_FAILURE },
        report,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum MaclaneReport {
    RoundTrip {
        seed: u64,
        samples: usize,
        band: bool,
        bound: f64,
        pass: bool,
        report: OracleReport,
    },
    Direct {
        r: Vec<f64>,
        admissible: bool,
        violations: Vec<String>,
        u: Option<Vec<f64>>,
        /// max |F(lambda_i) - r_i| after inversion.
        forward_error: Option<f64>,
        error: Option<String>,
    },
}

pub fn cmd_maclane(cfg: &RunConfig) -> Result<Outcome<MaclaneReport>, CliError> {
    let out = Output::new(&cfg.out)?;
    if let Some(r) = &cfg.r {
        let violations = admissibility_violations(r);
        let mut summary: Vec<String> = violations
            .iter()
            .map(|v| format!("inadmissible: {v}"))
            .collect();
        let (u, forward_error, error) = if violations.is_empty() {
            let inverted = inverse_seed(r).and_then(|s| maclane_inverse(r, &s, 0.0));
            match inverted.and_then(|u| maclane_forward(&u).map(|back| (u, back))) {
                Ok((u, back)) => {
                    let err = back
                        .iter()
                        .zip(r)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    summary.push(format!("u = {:?}", u.as_slice()));
                    summary.push(format!("forward error {err:.3e}"));
                    (Some(u.to_vec()), Some(err), None)
                }
                Err(e) => {
                    summary.push(format!("inversion failed: {e}"));
                    (None, None, Some(e.to_string()))
                }
            }
        } else {
            (None, None, None)
        };
        let ok = violations.is_empty() && error.is_none();
        let report = MaclaneReport::Direct {
            r: r.clone(),
            admissible: violations.is_empty(),
            violations,
            u,
            forward_error,
            error,
        };
        out.json("maclane_report.json", &report)?;
        return Ok(Outcome {
            code: if ok { EXIT_OK } else { EXIT_FAILURE },
            report,
            summary,
        });
    }
    let (sample_box, default_bound) = if cfg.band {
        (SampleBox::NEAR_DEGENERATE, BAND_ROUND_TRIP_BOUND)
    } else {
        (SampleBox::INTERIOR, INTERIOR_ROUND_TRIP_BOUND)
    };
    let bound = cfg.tolerance.unwrap_or(default_bound);
    let rep = round_trip_report(cfg.samples, cfg.seed, sample_box, bound);
    let pass = rep.pass;
    let summary = vec![format!(
        "round trip over {} samples (seed {}): max rel err {:.3e}, bound {:.1e}, {}",
        rep.n_samples,
        cfg.seed,
        rep.max_rel_err,
        bound,
        if pass { "ok" } else { "FAIL" }
    )];
    let report = MaclaneReport::RoundTrip {
        seed: cfg.seed,
        samples: cfg.samples,
        band: cfg.band,
        bound,
        pass,
        report: rep,
    };
    out.json("maclane_report.json", &report)?;
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_FAILURE },
        report,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub initial: String,
    pub grid: usize,
    pub trajectory: TrajectorySummary,
    pub classification: ClassificationReport,
    pub strips: StripReport,
}

fn simulate_and_classify(cfg: &RunConfig) -> Result<(Trajectory, SimulateReport), CliError> {
    let state = initial_state(cfg)?;
    let solver = solver(cfg, cfg.scheme.resolve(&state));
    let traj = simulate_with(&state, &solver)?;
    let tol = match cfg.tolerance {
        Some(t) => t,
        None => drift_tolerance(cfg.grid, &solver).map_err(|e| CliError::Config(e.to_string()))?,
    };
    let report = SimulateReport {
        initial: cfg.initial_label.clone(),
        grid: cfg.grid,
        trajectory: traj.summary(),
        classification: classify_trajectory(&traj, tol),
        strips: strip_check(&traj, cfg.regime_tolerance()),
    };
    Ok((traj, report))
}

fn simulate_summary(rep: &SimulateReport) -> Vec<String> {
    let t = &rep.trajectory;
    let mut lines = vec![format!(
        "{} on {} cells with the {} scheme: {:?} at t = {:.4} after {} steps",
        rep.initial, rep.grid, t.scheme, t.stopped_reason, t.t_final, t.steps
    )];
    if let Some(tb) = t.blowup_time_observed {
        lines.push(format!(
            "blow-up observed at t = {tb:.4} (gradient threshold {:.3})",
            t.threshold
        ));
    }
    if let Some(why) = &t.blocked {
        lines.push(format!("stopped: {why}"));
    }
    if t.ill_posed_region {
        lines.push(
            "warning: data entered the elliptic region, where the evolution is ill-posed".into(),
        );
    }
    let c = &rep.classification;
    lines.push(format!(
        "verdict {:?}: dt residual {:.3e}, u2 {:.3e}, square {:.3e} (tol {:.3e})",
        c.verdict, c.dt_residual, c.u2_residual, c.square_residual, c.tolerance
    ));
    lines.push(format!(
        "strips {}: {} moved cells, {} non-maximal degenerate cells",
        if rep.strips.passed { "ok" } else { "broken" },
        rep.strips.moved_cells,
        rep.strips.non_maximal_cells
    ));
    lines
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome<SimulateReport>, CliError> {
    let (traj, report) = simulate_and_classify(cfg)?;
    let out = Output::new(&cfg.out)?;
    if let Some(w) = out.file("snapshots.csv")? {
        write_snapshots_csv(&traj.snapshots, cfg.regime_tolerance(), w)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    out.json("trajectory.json", &report.trajectory)?;
    out.json("classification.json", &report.classification)?;
    out.json("strips.json", &report.strips)?;
    let summary = simulate_summary(&report);
    Ok(Outcome {
        code: EXIT_OK,
        report,
        summary,
    })
}

/// Like simulate without the snapshot file. Fails when a run that reached
/// its end time without blowing up breaks the strip structure.
pub fn cmd_classify(cfg: &RunConfig) -> Result<Outcome<SimulateReport>, CliError> {
    let (_, report) = simulate_and_classify(cfg)?;
    let out = Output::new(&cfg.out)?;
    out.json("classification.json", &report.classification)?;
    out.json("strips.json", &report.strips)?;
    let informational = report.trajectory.stopped_reason != StopReason::ReachedTEnd
        || report.classification.verdict == Verdict::NonClassical;
    let code = if report.strips.passed || informational {
        EXIT_OK
    } else {
        EXIT_FAILURE
    };
    let summary = simulate_summary(&report);
    Ok(Outcome {
        code,
        report,
        summary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub scheme: Scheme,
    pub t_end: f64,
    pub threshold: f64,
    pub stopped_reason: StopReason,
    pub observed: Option<f64>,
    /// Observed time on the doubled grid.
    pub observed_refined: Option<f64>,
    pub refinement_change: Option<f64>,
    pub refinement_confirmed: bool,
    /// Prediction transported along characteristics of the evolving solution.
    pub traced: Option<BlowupPrediction>,
    pub relative_error: Option<f64>,
    pub relative_error_refined: Option<f64>,
    pub within_tolerance: bool,
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub initial: String,
    pub grid: usize,
    /// Frozen-coefficient estimate from the initial state.
    pub frozen: Option<BlowupPrediction>,
    pub comparison: Option<Comparison>,
}

fn prediction_or_none(
    p: Result<BlowupPrediction, CharError>,
) -> Result<Option<BlowupPrediction>, CliError> {
    match p {
        Ok(p) => Ok(Some(p)),
        Err(CharError::NoBlowupPredicted) => Ok(None),
        Err(e) => Err(CliError::Runtime(e.to_string())),
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn cmd_blowup(cfg: &RunConfig) -> Result<Outcome<BlowupReport>, CliError> {
    let state = initial_state(cfg)?;
    if let Some(j) = benney_core::riemann_fields(&state)
        .valid
        .iter()
        .position(|v| !v)
    {
        return Err(CliError::Config(format!(
            "initial: data must be strictly hyperbolic everywhere (cell {j} at q = {} is not)",
            state.grid.center(j)
        )));
    }
    let frozen = prediction_or_none(predict_blowup(&state))?;
    let mut summary = vec![match &frozen {
        Some(p) => format!(
            "frozen-coefficient estimate t* = {:.4} (family {}, q0 = {:.4})",
            p.tstar, p.family, p.q0
        ),
        None => "frozen-coefficient estimate: no blow-up predicted".into(),
    }];
    let out = Output::new(&cfg.out)?;
    let comparison = if cfg.simulate {
        let scheme = cfg.scheme.resolve(&state);
        let observe = |s: &FieldState| simulate_with(s, &solver(cfg, scheme));
        let obs = observe(&state)?;
        let fine_grid =
            TorusGrid::new(2 * cfg.grid).map_err(|e| CliError::Config(e.to_string()))?;
        let fine =
            sample_field(&cfg.initial, fine_grid).map_err(|e| CliError::Config(e.to_string()))?;
        let obs_fine = observe(&fine)?;
        // the prediction needs the solution past the gradient trigger
        let long_cfg = SolverConfig {
            blowup_threshold: BlowupThreshold::Absolute {
                value: f64::INFINITY,
            },
            snapshot_every: 1,
            ..solver(cfg, scheme)
        };
        let long = simulate_with(&state, &long_cfg)?;
        let traced = prediction_or_none(predict_blowup_along(&long))?;
        let observed = obs.blowup_time_observed;
        let observed_refined = obs_fine.blowup_time_observed;
        let refinement_change = observed.zip(observed_refined).map(|(a, b)| rel_gap(a, b));
        let relative_error = observed
            .zip(traced.as_ref())
            .map(|(t, p)| rel_gap(t, p.tstar));
        let relative_error_refined = observed_refined
            .zip(traced.as_ref())
            .map(|(t, p)| rel_gap(t, p.tstar));
        let blew_up = obs.stopped_reason == StopReason::BlowupDetected;
        let predicted_in_window = traced
            .as_ref()
            .is_some_and(|p| p.tstar <= state.t + cfg.t_end);
        let consistent = !(traced.is_none() && blew_up)
            && !(predicted_in_window && obs.stopped_reason == StopReason::ReachedTEnd);
        if let (Some(p), Some(w)) = (&traced, out.file("characteristic.csv")?) {
            let path = trace(&long, p.family, p.q0, p.t0, true, f64::INFINITY)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            path.write_csv(w)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        summary.push(format!(
            "{} on {} cells: {:?} at t = {:.4}",
            cfg.initial_label,
            cfg.grid,
            obs.stopped_reason,
            obs.t_final()
        ));
        if let Some(t) = observed {
            summary.push(format!(
                "observed blow-up t_obs = {t:.4} (threshold {:.3})",
                obs.threshold
            ));
        }
        if let (Some(t), Some(c)) = (observed_refined, refinement_change) {
            summary.push(format!(
                "on {} cells t_obs = {t:.4}, change {:.1}%{}",
                2 * cfg.grid,
                100.0 * c,
                if c <= REFINEMENT_AGREEMENT {
                    ""
                } else {
                    " (not confirmed)"
                }
            ));
        }
        match &traced {
            Some(p) => summary.push(format!(
                "traced prediction t* = {:.4} (family {}, q0 = {:.4})",
                p.tstar, p.family, p.q0
            )),
            None => summary.push("traced prediction: no blow-up predicted".into()),
        }
        if let Some(e) = relative_error {
            summary.push(format!("|t_obs - t*| / t* = {:.3}", e));
        }
        if !consistent {
            summary.push(
                "inconsistent: prediction and simulation disagree on whether blow-up happens"
                    .into(),
            );
        }
        Some(Comparison {
            scheme,
            t_end: cfg.t_end,
            threshold: obs.threshold,
            stopped_reason: obs.stopped_reason,
            observed,
            observed_refined,
            refinement_change,
            refinement_confirmed: refinement_change.is_some_and(|c| c <= REFINEMENT_AGREEMENT),
            traced,
            relative_error,
            relative_error_refined,
            within_tolerance: relative_error.is_some_and(|e| e <= BLOWUP_AGREEMENT),
            consistent,
        })
    } else {
        None
    };
    let report = BlowupReport {
        initial: cfg.initial_label.clone(),
        grid: cfg.grid,
        frozen,
        comparison,
    };
    out.json("blowup_report.json", &report)?;
    if let Some(p) = out.path("blowup_report.json") {
        summary.push(format!("report written to {}", p.display()));
    }
    let code = match &report.comparison {
        Some(c) if !c.consistent => EXIT_INCONSISTENT,
        _ => EXIT_OK,
    };
    Ok(Outcome {
        code,
        report,
        summary,
    })
}
