//! Pinned acceptance thresholds. The CLI's CI mode (exit code 1) and the
//! acceptance test target both read these constants, so a threshold change
//! is a single visible diff.

/// Deficit magnitude allowed on exact rigidity inputs (geodesic spheres)
/// at the reference 64 x 128 resolution.
pub const RIGIDITY_ABS: f64 = 1e-6;
/// Reference resolution for the rigidity battery.
pub const RIGIDITY_RESOLUTION: [usize; 2] = [64, 128];

/// Relative Hsiung residual at the reference resolution.
pub const HSIUNG_REL: f64 = 1e-6;
/// Required residual shrink factor when the grid doubles.
pub const HSIUNG_CONVERGENCE_FACTOR: f64 = 4.0;

/// Both sides of the closed-form ball case of the weighted Reilly identity
/// must match the exact value to this.
pub const REILLY_CLOSED_FORM_ABS: f64 = 1e-8;
/// Residual cap for the random polynomial battery.
pub const REILLY_BATTERY_REL: f64 = 1e-6;
/// Members of the random polynomial battery.
pub const REILLY_BATTERY_SIZE: usize = 10;

/// Torsion boundary-gradient closed forms.
pub const TORSION_ABS: f64 = 1e-12;

/// Serrin residual for the linear (quadratic-solution) pair.
pub const SERRIN_LINEAR_ABS: f64 = 1e-8;
/// Serrin residual for the manufactured nonlinear pairs.
pub const SERRIN_NONLINEAR_ABS: f64 = 1e-6;

/// Steklov identity residual on generic domains.
pub const STEKLOV_REL: f64 = 1e-6;
/// Ball extremality: Rayleigh quotient and deficit.
pub const STEKLOV_BALL_ABS: f64 = 1e-8;

/// Newton-Maclaurin sampling: cone samples per `(n, k)` pair.
pub const NEWTON_SAMPLES: usize = 100_000;
/// Exactness of the two-dimensional pinching ratio.
pub const NEWTON_RATIO_ABS: f64 = 1e-12;

/// Hessian-vs-second-fundamental-form residual on exact quadratic cases.
pub const SFF_QUADRATIC_ABS: f64 = 1e-8;
/// Agreement between the co-area band integral and direct volume
/// quadrature.
pub const COAREA_REL: f64 = 1e-3;

/// Flow: relative drift allowed on the conserved quermassintegral.
pub const FLOW_DRIFT_REL: f64 = 1e-4;
/// Flow: terminal umbilicity.
pub const FLOW_FINAL_AMAX: f64 = 1e-3;
/// Flow: relative gap of the global deficit-drop balance.
pub const FLOW_BALANCE_REL: f64 = 1e-2;

/// Sweeps: fitted slope may undershoot the theorem exponent by this.
pub const SWEEP_SLOPE_MARGIN: f64 = 0.05;
/// Sweeps: relative wobble allowed on the fitted constant across the two
/// reference resolutions.
pub const SWEEP_CONSTANT_STABILITY: f64 = 0.2;

/// Theorem exponents (surface dimension n = 2, norm exponent p = n + 1).
pub const EXPONENT_HK: f64 = 0.25;
pub const EXPONENT_CMC: f64 = 0.25;
pub const EXPONENT_CFC: f64 = 1.0 / 3.0;
pub const EXPONENT_AF: f64 = 1.0 / 6.0;
