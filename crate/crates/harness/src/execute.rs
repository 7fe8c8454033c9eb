//! Command execution: run a validated plan, emit JSON/CSV reports, and
//! map the outcome to the exit-code contract (0 success, 1 threshold
//! violation, 2 configuration error, 3 numerical failure).

use std::sync::Arc;

use serde::Serialize;
use umbilic_core::deficits::{
    alexandrov_fenchel, cfc_deficit, cmc_deficit, heintze_karcher,
};
use umbilic_core::elliptic::{
    hopf_gradient_check, serrin_identity_residual, serrin_pair_manufacture,
    steklov_identity_residual, HopfReport, SerrinResidual, SteklovReport,
};
use umbilic_core::flow::{flow_run, FlowParams, FlowRun, StopCriteria};
use umbilic_core::levelset::{
    best_slice, covariant_hessian, extract_level, hessian_vs_sff_residual,
    levelset_stability_pipeline, BandSpec,
};
use umbilic_core::{fit_sphere_distance, Hypersurface, Spaceform, SphereGrid};

use crate::config::{Command, DeficitKind, FlowPlan, Plan, SerrinProfile};
use crate::identities::{run_identities, serrin_profile, serrin_threshold};
use crate::report::{emit_csv, emit_json};
use crate::surfaces::{FieldSpec, SurfaceSpec};
use crate::sweep::{run_sweep, SweepJob};
use crate::thresholds;
use crate::CliError;

/// Size the global rayon pool. The environment variable
/// `UMBILIC_LAB_THREADS` caps whatever the plan requests; without either,
/// rayon picks its default. Later calls are no-ops (the pool is global), so
/// repeated in-process runs keep the first sizing.
pub fn init_thread_pool(requested: Option<usize>) {
    let env_cap = std::env::var("UMBILIC_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let threads = match (requested.filter(|&n| n > 0), env_cap) {
        (Some(r), Some(c)) => Some(r.min(c)),
        (r, c) => r.or(c),
    };
    if let Some(n) = threads {
        // AlreadyInitialized is fine: keep the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(plan: &Plan) -> Result<i32, CliError> {
    match &plan.command {
        Command::VerifyIdentities { which, resolution } => {
            cmd_verify(plan, which, *resolution)
        }
        Command::Deficit { kind, surface, cfc_k, cfc_l } => {
            cmd_deficit(plan, *kind, surface, *cfc_k, *cfc_l)
        }
        Command::LevelsetPipeline { field, level_cap, n_levels } => {
            cmd_levelset(plan, field, *level_cap, *n_levels)
        }
        Command::Flow { surface, flow, series_csv } => {
            cmd_flow(plan, surface, flow, series_csv.as_deref())
        }
        Command::Sweep { deficit, eps, resolutions, cfc_k, cfc_l } => {
            cmd_sweep(plan, *deficit, eps, resolutions, *cfc_k, *cfc_l)
        }
        Command::Serrin { profile, r0, resolution } => {
            cmd_serrin(plan, *profile, *r0, *resolution)
        }
        Command::Steklov { surface, field } => cmd_steklov(plan, surface, field.as_ref()),
    }
}

fn numerical(e: umbilic_core::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn make_grid(res: [usize; 2]) -> Result<Arc<SphereGrid>, CliError> {
    Ok(Arc::new(SphereGrid::new(res[0], res[1]).map_err(numerical)?))
}

fn build_surface(
    spec: &SurfaceSpec,
    space: Spaceform,
    res: [usize; 2],
) -> Result<Hypersurface, CliError> {
    spec.build(space, make_grid(res)?).map_err(CliError::Config)
}

fn res_label(res: [usize; 2]) -> String {
    format!("{}x{}", res[0], res[1])
}

// ---------------------------------------------------------------------
// verify-identities

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    resolution: String,
    seed: u64,
    rows: Vec<crate::identities::IdentityRow>,
    failures: usize,
    pass: bool,
}

fn cmd_verify(
    plan: &Plan,
    which: &[crate::config::IdentityKind],
    resolution: [usize; 2],
) -> Result<i32, CliError> {
    let battery = run_identities(which, resolution, plan.seed)?;
    let csv_rows: Vec<_> = battery.rows.iter().map(|r| r.csv()).collect();
    let report = VerifyReport {
        command: "verify-identities",
        resolution: res_label(resolution),
        seed: plan.seed,
        failures: battery.failures,
        pass: battery.failures == 0,
        rows: battery.rows,
    };
    emit_json(&report, plan.out_json.as_deref()).map_err(CliError::Config)?;
    if let Some(path) = &plan.out_csv {
        emit_csv(&csv_rows, path).map_err(CliError::Config)?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// deficit

#[derive(Serialize)]
struct DeficitReport {
    command: &'static str,
    kind: &'static str,
    spaceform: f64,
    surface: String,
    resolution: String,
    /// Uniform geodesic distance to the best-fit sphere.
    sphere_distance: f64,
    report: serde_json::Value,
    violations: Vec<String>,
    pass: bool,
}

fn cmd_deficit(
    plan: &Plan,
    kind: DeficitKind,
    surface: &SurfaceSpec,
    cfc_k: usize,
    cfc_l: usize,
) -> Result<i32, CliError> {
    let m = build_surface(surface, plan.space, plan.resolution)?;
    let cf = m.curvature_field().map_err(numerical)?;
    let mut violations = Vec::new();
    let report = match kind {
        DeficitKind::Hk => {
            let rep = heintze_karcher(&m, &cf).map_err(numerical)?;
            // Mean-convex embedded surfaces cannot have a genuinely
            // negative deficit; anything beyond round-off is a failure.
            if rep.deficit < -1e-9 {
                violations.push(format!("negative deficit {:.3e}", rep.deficit));
            }
            serde_json::to_value(rep)
        }
        DeficitKind::Cmc => {
            let rep = cmc_deficit(&m, &cf, plan.n_radial, plan.literal_cmc);
            serde_json::to_value(rep)
        }
        DeficitKind::Cfc => {
            let rep = cfc_deficit(&m, &cf, cfc_k, cfc_l).map_err(numerical)?;
            serde_json::to_value(rep)
        }
        DeficitKind::Af => {
            let rep = alexandrov_fenchel(&m, &cf, 1, plan.n_radial).map_err(numerical)?;
            if rep.value < -1e-6 {
                violations.push(format!("negative deficit {:.3e}", rep.value));
            }
            serde_json::to_value(rep)
        }
    }
    .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))?;
    let fit = fit_sphere_distance(&m).map_err(numerical)?;
    let out = DeficitReport {
        command: "deficit",
        kind: kind.name(),
        spaceform: plan.space.k(),
        surface: surface.label(),
        resolution: res_label(plan.resolution),
        sphere_distance: fit.dist,
        report,
        pass: violations.is_empty(),
        violations,
    };
    emit_json(&out, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if out.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// levelset-pipeline

#[derive(Serialize)]
struct LevelsetReport {
    command: &'static str,
    field: String,
    spaceform: f64,
    resolution: String,
    level_cap: f64,
    n_levels: usize,
    dist: f64,
    dist_normalized: f64,
    bound_rhs: f64,
    ratio: f64,
    band_integral: f64,
    t0_effective: f64,
    best_level: f64,
    slice_norm: f64,
    min_grad: f64,
    area: f64,
    foliation_margin: f64,
    /// Direct volume quadrature of the band integrand (co-area cross-check).
    coarea_direct: Option<f64>,
    coarea_rel: Option<f64>,
    pigeonhole_lhs: f64,
    pigeonhole_rhs: f64,
    sff_residual: f64,
    violations: Vec<String>,
    pass: bool,
}

fn cmd_levelset(
    plan: &Plan,
    field: &FieldSpec,
    level_cap: f64,
    n_levels: usize,
) -> Result<i32, CliError> {
    let space = plan.space;
    let f = field.build(space, None).map_err(CliError::Config)?;
    let grid = make_grid(plan.resolution)?;
    let outer = extract_level(space, &f, 0.0, Arc::clone(&grid)).map_err(numerical)?;
    let band = BandSpec::new(outer.clone(), level_cap, n_levels);
    let p = band.p;
    let pipeline = levelset_stability_pipeline(space, &f, &band).map_err(numerical)?;

    let mut violations = Vec::new();

    // Pigeonhole on the effective band: the best slice's p-norm must sit
    // under the band average (with the co-area gradient weight).
    let (pigeonhole_lhs, pigeonhole_rhs) = if pipeline.t0_effective > 0.0 {
        let eff = BandSpec::new(outer.clone(), pipeline.t0_effective, n_levels);
        let slice = best_slice(space, &f, &eff).map_err(numerical)?;
        (slice.slice_norm.powf(p), slice.pigeonhole_bound)
    } else {
        (0.0, 0.0)
    };
    if pigeonhole_lhs > pigeonhole_rhs * (1.0 + 1e-9) {
        violations.push(format!(
            "pigeonhole violated: slice {pigeonhole_lhs:.6e} above bound {pigeonhole_rhs:.6e}"
        ));
    }

    // Co-area cross-check: the band integral, computed by direct volume
    // quadrature of |tr-less hess f|^p between the two enclosing levels.
    let (coarea_direct, coarea_rel) = if pipeline.t0_effective > 0.0 {
        let enclosed = |level: f64| -> Result<f64, CliError> {
            let m = extract_level(space, &f, level, Arc::clone(&grid)).map_err(numerical)?;
            Ok(m.integrate_domain(plan.n_radial, |r, xi| {
                let s = space.chart_radius(r).unwrap_or(f64::NAN);
                match covariant_hessian(space, &f, s * xi) {
                    Ok(ch) => ch.cs_deficit.max(0.0).powf(0.5 * p),
                    Err(_) => f64::NAN,
                }
            }))
        };
        // Absolute difference: the band sits outside the zero level when
        // the field increases outward, inside otherwise.
        let direct = (enclosed(pipeline.t0_effective)? - enclosed(0.0)?).abs();
        let rel = (direct - pipeline.band_integral).abs() / pipeline.band_integral.abs();
        if !(rel <= thresholds::COAREA_REL) {
            violations.push(format!(
                "co-area mismatch: direct {direct:.6e} vs band {:.6e} (rel {rel:.3e})",
                pipeline.band_integral
            ));
        }
        (Some(direct), Some(rel))
    } else {
        (None, None)
    };

    // Level-set extraction must reproduce the second fundamental form from
    // the ambient Hessian; exact for fields with constant Hessian.
    let sff = hessian_vs_sff_residual(space, &f, &outer).map_err(numerical)?;
    let gate_sff = !matches!(field, FieldSpec::Polynomial { .. });
    if gate_sff && sff.max() > thresholds::SFF_QUADRATIC_ABS {
        violations.push(format!(
            "second-fundamental-form residual {:.3e} above {:.1e}",
            sff.max(),
            thresholds::SFF_QUADRATIC_ABS
        ));
    }

    let out = LevelsetReport {
        command: "levelset-pipeline",
        field: field.label(),
        spaceform: space.k(),
        resolution: res_label(plan.resolution),
        level_cap,
        n_levels,
        dist: pipeline.dist,
        dist_normalized: pipeline.dist_normalized,
        bound_rhs: pipeline.bound_rhs,
        ratio: pipeline.ratio,
        band_integral: pipeline.band_integral,
        t0_effective: pipeline.t0_effective,
        best_level: pipeline.best_level,
        slice_norm: pipeline.slice_norm,
        min_grad: pipeline.min_grad,
        area: pipeline.area,
        foliation_margin: pipeline.foliation_margin,
        coarea_direct,
        coarea_rel,
        pigeonhole_lhs,
        pigeonhole_rhs,
        sff_residual: sff.max(),
        pass: violations.is_empty(),
        violations,
    };
    emit_json(&out, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if out.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// flow

/// One row of the flow time series CSV.
#[derive(Serialize)]
struct FlowCsvRow {
    t: f64,
    #[serde(rename = "W1")]
    w1: f64,
    #[serde(rename = "W2")]
    w2: f64,
    #[serde(rename = "W3")]
    w3: f64,
    #[serde(rename = "A_traceless_max")]
    a_traceless_max: f64,
    dt: f64,
    cone_margin: f64,
}

#[derive(Serialize)]
struct FlowBalance {
    /// Initial isoperimetric-type deficit.
    eps: f64,
    /// Trapezoid time integral of `int_M (H_k - H_{k+1} H_{k-1}/H_k) dA`.
    deficit_time_integral: f64,
    /// The exact variational constant.
    c_analytic: f64,
    /// The same constant re-measured by a short calibration run on a
    /// near-ball (the quermassintegral drop against the deficit integral).
    c_calibrated: f64,
    /// `|c * integral - eps| / eps` over the full run.
    residual_rel: f64,
}

#[derive(Serialize)]
struct FlowReport {
    command: &'static str,
    surface: String,
    k: usize,
    resolution: String,
    steps: usize,
    final_time: f64,
    stopped_on_umbilic: bool,
    final_a_traceless_max: f64,
    final_cone_margin: f64,
    /// Relative drift of the conserved quermassintegral.
    conserved_drift_rel: f64,
    /// Largest single-step increase of the monitored (k+1)-st
    /// quermassintegral (must stay at round-off).
    max_w_next_increase: f64,
    final_sphere_distance: f64,
    w_tilde_initial: [f64; 4],
    w_tilde_final: [f64; 4],
    balance: Option<FlowBalance>,
    violations: Vec<String>,
    pass: bool,
}

/// Trapezoid rule over the recorded samples of the Newton deficit
/// integral.
fn deficit_time_integral(run: &FlowRun) -> f64 {
    let s = &run.samples;
    let mut total = 0.0;
    for w in s.windows(2) {
        total += 0.5 * (w[1].time - w[0].time) * (w[0].newton_deficit + w[1].newton_deficit);
    }
    total
}

/// Ball sanity run: measure the variational constant `c` numerically as
/// (drop of the (k+1)-st normalized quermassintegral) / (time integral of
/// the Newton deficit) over a short flow of a slightly squashed ball.
fn calibrate_constant(k: usize, n_radial: usize) -> Result<f64, CliError> {
    let grid = make_grid([16, 32])?;
    let m = Hypersurface::ellipsoid(Spaceform::Euclidean, grid, 1.05, 1.0, 0.96)
        .map_err(numerical)?;
    let params = FlowParams {
        dt_initial: 2e-3,
        dt_max: 2e-3,
        w_drift_tol: 1e-5,
        n_radial,
    };
    let stop = StopCriteria { umbilic_tol: 0.0, t_max: 0.04, max_steps: 200 };
    let run = flow_run(m, k, &stop, &params).map_err(numerical)?;
    let drop = run.samples[0].w_tilde[k + 1]
        - run.samples.last().map(|s| s.w_tilde[k + 1]).unwrap_or(f64::NAN);
    let integral = deficit_time_integral(&run);
    if !(integral > 0.0) {
        return Err(CliError::Numerical(
            "calibration run accumulated no deficit integral".into(),
        ));
    }
    Ok(drop / integral)
}

fn cmd_flow(
    plan: &Plan,
    surface: &SurfaceSpec,
    fp: &FlowPlan,
    series_csv: Option<&std::path::Path>,
) -> Result<i32, CliError> {
    let m = build_surface(surface, plan.space, plan.resolution)?;
    let params = FlowParams {
        dt_initial: fp.dt_initial,
        dt_max: fp.dt_max,
        w_drift_tol: fp.w_drift_tol,
        n_radial: plan.n_radial,
    };
    let stop = StopCriteria {
        umbilic_tol: fp.umbilic_tol,
        t_max: fp.t_max,
        max_steps: fp.max_steps,
    };
    let k = fp.k;
    let run = flow_run(m, k, &stop, &params).map_err(numerical)?;

    let mut violations = Vec::new();
    let w0 = run.samples[0].w_tilde;
    let w_ref = w0[k].abs().max(f64::MIN_POSITIVE);
    let drift_rel = run.conserved_drift / w_ref;
    if drift_rel > thresholds::FLOW_DRIFT_REL {
        violations.push(format!(
            "conserved quermassintegral drifted {:.3e} (limit {:.1e})",
            drift_rel,
            thresholds::FLOW_DRIFT_REL
        ));
    }
    // Monotonicity is only meaningful while the monitored index carries
    // curvature content; for k = n it is the topological constant.
    let max_w_next_increase = if k + 1 < 3 {
        run.samples
            .windows(2)
            .map(|w| w[1].w_tilde[k + 1] - w[0].w_tilde[k + 1])
            .fold(0.0_f64, f64::max)
    } else {
        0.0
    };
    if max_w_next_increase > 1e-10 {
        violations.push(format!(
            "monitored quermassintegral increased by {max_w_next_increase:.3e} in a step"
        ));
    }
    let final_amax = run.final_state.monitors.a_traceless_max;
    if !run.stopped_on_umbilic {
        violations.push(format!(
            "flow ended at t = {:.4} with |A0|_inf = {final_amax:.3e} above the umbilic \
             tolerance {:.1e}",
            run.final_state.time, fp.umbilic_tol
        ));
    }

    // Global conservation balance (k < n only: for k = n the monitored
    // integral is topological and the deficit vanishes identically).
    let balance = if k == 1 {
        let eps = w0[k + 1] - w0[k].powf((2.0 - k as f64) / (3.0 - k as f64));
        if eps > 1e-10 {
            let c_analytic = 1.0 / ((3.0) * (4.0 * std::f64::consts::PI / 3.0));
            let c_cal = calibrate_constant(k, plan.n_radial)?;
            let integral = deficit_time_integral(&run);
            let residual_rel = (c_cal * integral - eps).abs() / eps;
            if run.stopped_on_umbilic && residual_rel > thresholds::FLOW_BALANCE_REL {
                violations.push(format!(
                    "conservation balance off by {:.3e} (limit {:.1e})",
                    residual_rel,
                    thresholds::FLOW_BALANCE_REL
                ));
            }
            Some(FlowBalance {
                eps,
                deficit_time_integral: integral,
                c_analytic,
                c_calibrated: c_cal,
                residual_rel,
            })
        } else {
            None
        }
    } else {
        None
    };

    if let Some(path) = series_csv.or(plan.out_csv.as_deref()) {
        let rows: Vec<FlowCsvRow> = run
            .samples
            .iter()
            .map(|s| FlowCsvRow {
                t: s.time,
                w1: s.w_tilde[1],
                w2: s.w_tilde[2],
                w3: s.w_tilde[3],
                a_traceless_max: s.a_traceless_max,
                dt: s.dt,
                cone_margin: s.cone_margin,
            })
            .collect();
        emit_csv(&rows, path).map_err(CliError::Config)?;
    }

    let final_fit = fit_sphere_distance(&run.final_state.surface).map_err(numerical)?;
    let out = FlowReport {
        command: "flow",
        surface: surface.label(),
        k,
        resolution: res_label(plan.resolution),
        steps: run.samples.len() - 1,
        final_time: run.final_state.time,
        stopped_on_umbilic: run.stopped_on_umbilic,
        final_a_traceless_max: final_amax,
        final_cone_margin: run.final_state.monitors.cone_margin,
        conserved_drift_rel: drift_rel,
        max_w_next_increase,
        final_sphere_distance: final_fit.dist,
        w_tilde_initial: w0,
        w_tilde_final: run.final_state.monitors.w_tilde,
        balance,
        pass: violations.is_empty(),
        violations,
    };
    emit_json(&out, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if out.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// sweep

fn cmd_sweep(
    plan: &Plan,
    kind: DeficitKind,
    eps: &[f64],
    resolutions: &[[usize; 2]],
    cfc_k: usize,
    cfc_l: usize,
) -> Result<i32, CliError> {
    if kind == DeficitKind::Af && plan.space != Spaceform::Euclidean {
        return Err(CliError::Config(crate::config::ConfigError(
            "the quermassintegral sweep runs in the flat spaceform only".into(),
        )));
    }
    let job = SweepJob {
        kind,
        space: plan.space,
        n_radial: plan.n_radial,
        literal_cmc: plan.literal_cmc,
        cfc_k,
        cfc_l,
    };
    let report = run_sweep(&job, eps, resolutions)?;
    if let Some(path) = &plan.out_csv {
        // CSV carries the finest (last) resolution's rows.
        if let Some(result) = report.results.last() {
            emit_csv(&result.rows, path).map_err(CliError::Config)?;
        }
    }
    emit_json(&report, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if report.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// serrin

#[derive(Serialize)]
struct SerrinReport {
    command: &'static str,
    profile: &'static str,
    r0: f64,
    resolution: usize,
    residual: SerrinResidual,
    residual_coarse: f64,
    order_estimate: f64,
    hopf: HopfReport,
    threshold: f64,
    violations: Vec<String>,
    pass: bool,
}

fn cmd_serrin(
    plan: &Plan,
    profile: SerrinProfile,
    r0: f64,
    resolution: usize,
) -> Result<i32, CliError> {
    let pair =
        serrin_pair_manufacture(serrin_profile(profile, r0), r0).map_err(numerical)?;
    let fine = serrin_identity_residual(&pair, resolution).map_err(numerical)?;
    let coarse =
        serrin_identity_residual(&pair, (resolution / 2).max(8)).map_err(numerical)?;
    let hopf = hopf_gradient_check(&pair);
    let threshold = serrin_threshold(profile);
    let mut violations = Vec::new();
    if fine.residual > threshold {
        violations.push(format!(
            "identity residual {:.3e} above {threshold:.1e}",
            fine.residual
        ));
    }
    if !hopf.positive {
        violations.push("boundary gradient is not strictly positive".into());
    }
    let order = if fine.residual.abs() < 1e-13 {
        crate::identities::ORDER_RESOLVED
    } else {
        (coarse.residual.abs() / fine.residual.abs()).log2()
    };
    let out = SerrinReport {
        command: "serrin",
        profile: profile.name(),
        r0,
        resolution,
        residual: fine,
        residual_coarse: coarse.residual,
        order_estimate: order,
        hopf,
        threshold,
        pass: violations.is_empty(),
        violations,
    };
    emit_json(&out, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if out.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
// steklov

#[derive(Serialize)]
struct SteklovCliReport {
    command: &'static str,
    surface: String,
    field: String,
    resolution: String,
    report: SteklovReport,
    /// Present on balls with the torsion field: the exact Rayleigh quotient.
    expected_rayleigh: Option<f64>,
    violations: Vec<String>,
    pass: bool,
}

fn cmd_steklov(
    plan: &Plan,
    surface: &SurfaceSpec,
    field: Option<&FieldSpec>,
) -> Result<i32, CliError> {
    let default_field = match surface {
        SurfaceSpec::Sphere { r } => FieldSpec::Torsion { r0: *r },
        _ => FieldSpec::BoundaryQuadric,
    };
    let field = field.cloned().unwrap_or(default_field);
    let m = build_surface(surface, plan.space, plan.resolution)?;
    let w = field.build(plan.space, Some(surface)).map_err(CliError::Config)?;
    let rep = steklov_identity_residual(&m, &w, plan.n_radial).map_err(numerical)?;

    let mut violations = Vec::new();
    if rep.residual > thresholds::STEKLOV_REL {
        violations.push(format!(
            "identity residual {:.3e} above {:.1e}",
            rep.residual,
            thresholds::STEKLOV_REL
        ));
    }
    // The ball with its torsion potential is the extremal pair: the
    // Rayleigh quotient collapses to 3/r and the deficit to zero.
    let expected_rayleigh = match (surface, &field) {
        (SurfaceSpec::Sphere { r }, FieldSpec::Torsion { .. }) => Some(3.0 / r),
        _ => None,
    };
    if let Some(expected) = expected_rayleigh {
        if (rep.rayleigh - expected).abs() > thresholds::STEKLOV_BALL_ABS {
            violations.push(format!(
                "ball Rayleigh quotient {:.12} differs from {expected:.12}",
                rep.rayleigh
            ));
        }
        if rep.deficit.abs() > thresholds::STEKLOV_BALL_ABS {
            violations.push(format!("ball deficit {:.3e} is not zero", rep.deficit));
        }
    }
    let out = SteklovCliReport {
        command: "steklov",
        surface: surface.label(),
        field: field.label(),
        resolution: res_label(plan.resolution),
        report: rep,
        expected_rayleigh,
        pass: violations.is_empty(),
        violations,
    };
    emit_json(&out, plan.out_json.as_deref()).map_err(CliError::Config)?;
    Ok(if out.pass { 0 } else { 1 })
}

// ---------------------------------------------------------------------
