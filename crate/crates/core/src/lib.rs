//! Numerical laboratory for the dispersionless Lax reduction of the Benney
//! moment chain, U_t + A(U) U_q = 0 on the circle.

pub mod characteristics;
pub mod classify;
pub mod eigenstructure;
pub mod evolve;
pub mod fields;
pub mod polycore;
pub mod verify;

pub use characteristics::{
    predict_blowup, predict_blowup_along, trace, z_transport, BlowupPrediction, CharError,
    CharPath, FamilyField, ZTransport,
};
pub use classify::{
    classify_trajectory, drift_tolerance, f_square_check, stationary_residual, strip_check,
    ClassificationReport, NonMaximalCell, RegimeChange, StripReport, Verdict, WaveSpeed,
    DRIFT_SAFETY,
};
pub use eigenstructure::{
    blowup_coeffs, derivative_table, genuine_nonlinearity, n3_simplified, BlowupCoeffs,
    DerivativeTable, EigenError, N3Simplified,
};
pub use evolve::{
    apply_a, cfl_dt, max_gradient, run, step_central, step_riemann, step_riemann_with,
    BlowupThreshold, EvolveError, RiemannOptions, Scheme, SolverConfig, StopReason, Trajectory,
    TrajectorySummary,
};
pub use fields::{
    d_dq, d_dq_values, regime_map, riemann_fields, sample_field, write_snapshots_csv, Component,
    FieldError, FieldState, InitialData, RegimeMap, RegimeSummary, RiemannFields, TorusGrid,
    PRESETS,
};
pub use polycore::{
    admissibility_violations, admissible, build_poly, classify_regime, discriminant_n3, eigen_data,
    hyperbolic_roots, inverse_seed, maclane_forward, maclane_inverse, matrix_a, CoeffVector,
    Coeffs, EigenData, PolyError, PolyF, Regime, RegimeTolerance,
};
pub use verify::{
    round_trip_report, run_identity_suite, run_identity_suite_with, sample_hyperbolic, Identity,
    OracleReport, SampleBox, SuiteConfig, VerifyError,
};
