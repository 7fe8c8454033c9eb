//! Acceptance battery: one test per shipping criterion, each printing a
//! single `[acceptance] criterion N (<name>): PASS|FAIL` line (visible under
//! `cargo test -- --nocapture`, or in the captured output on failure).
//!
//! Tolerances and runtime budgets are pinned here and in
//! `umbilic_lab::thresholds`; they are the product contract, not knobs.

use std::sync::Arc;
use std::time::Instant;

use umbilic_lab::config::{Command, DeficitKind, IdentityKind, Plan, SerrinProfile};
use umbilic_lab::identities::{self, newton_scan, random_polynomial, serrin_profile};
use umbilic_lab::surfaces::{FieldSpec, SurfaceSpec};
use umbilic_lab::sweep::{run_sweep, SweepJob};
use umbilic_lab::thresholds::*;
use umbilic_lab::config::FlowPlan;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use umbilic_core::deficits::{alexandrov_fenchel, cfc_deficit, cmc_deficit, heintze_karcher};
use umbilic_core::elliptic::{
    hopf_gradient_check, reilly_residual, serrin_identity_residual, serrin_pair_manufacture,
    steklov_identity_residual, torsion_solve_ball,
};
use umbilic_core::hypersurface::grid::SphereGrid;
use umbilic_core::levelset::{extract_level, hessian_vs_sff_residual};
use umbilic_core::{Hypersurface, Spaceform};

const SPACES: [Spaceform; 3] = [Spaceform::Hyperbolic, Spaceform::Euclidean, Spaceform::Spherical];

fn grid(res: [usize; 2]) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::new(res[0], res[1]).expect("grid"))
}

/// Print the verdict line and enforce the criterion.
fn conclude(number: usize, name: &str, started: Instant, budget_s: f64, violations: Vec<String>) {
    let elapsed = started.elapsed().as_secs_f64();
    let ok = violations.is_empty() && elapsed <= budget_s;
    println!(
        "[acceptance] criterion {number} ({name}): {} ({elapsed:.1}s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        violations.is_empty(),
        "criterion {number} ({name}):\n  {}",
        violations.join("\n  ")
    );
    assert!(
        elapsed <= budget_s,
        "criterion {number} ({name}) runtime {elapsed:.1}s exceeds budget {budget_s}s"
    );
}

fn check(violations: &mut Vec<String>, ok: bool, what: String) {
    if !ok {
        violations.push(what);
    }
}

/// Run a plan through the CLI executor, capturing its JSON report.
fn execute_to_json(plan: Plan) -> (i32, serde_json::Value) {
    let path = std::env::temp_dir().join(format!(
        "umbilic-acceptance-{}-{:x}.json",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    let mut plan = plan;
    plan.out_json = Some(path.clone());
    let code = umbilic_lab::execute(&plan).expect("command should execute");
    let value = serde_json::from_slice(&std::fs::read(&path).expect("report file"))
        .expect("report should be JSON");
    let _ = std::fs::remove_file(&path);
    (code, value)
}

fn base_plan(command: Command, space: Spaceform, resolution: [usize; 2]) -> Plan {
    Plan {
        command,
        space,
        resolution,
        n_radial: resolution[0].max(24),
        seed: 0,
        threads: None,
        literal_cmc: false,
        out_json: None,
        out_csv: None,
    }
}

// --- 1. Rigidity values -----------------------------------------------------

#[test]
fn criterion_01_rigidity_values() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let res = RIGIDITY_RESOLUTION;
    let n_radial = 48;
    // Geodesic radii per spaceform; the K = 1 chart covers the open
    // hemisphere, so all spherical radii stay below pi/2.
    let radii = [0.5, 0.9, 1.3];
    for space in SPACES {
        for r0 in radii {
            let label = format!("K={} r0={r0}", space.k());
            let m = Hypersurface::geodesic_sphere(space, grid(res), r0).expect("sphere");
            let cf = m.curvature_field().expect("curvature");
            let hk = heintze_karcher(&m, &cf).expect("hk");
            check(
                &mut violations,
                hk.deficit.abs() <= RIGIDITY_ABS,
                format!("{label}: hk deficit {:.3e}", hk.deficit),
            );
            let cmc = cmc_deficit(&m, &cf, n_radial, false);
            check(
                &mut violations,
                cmc.deficit.abs() <= RIGIDITY_ABS,
                format!("{label}: cmc deficit {:.3e}", cmc.deficit),
            );
            for (k, l) in [(1usize, 0usize), (1, 1)] {
                let cfc = cfc_deficit(&m, &cf, k, l).expect("cfc");
                check(
                    &mut violations,
                    cfc.deficit.abs() <= RIGIDITY_ABS,
                    format!("{label}: cfc({k},{l}) deficit {:.3e}", cfc.deficit),
                );
            }
            if space == Spaceform::Euclidean {
                for k in [1usize, 2] {
                    let af = alexandrov_fenchel(&m, &cf, k, n_radial).expect("af");
                    check(
                        &mut violations,
                        af.value.abs() <= RIGIDITY_ABS,
                        format!("{label}: af(k={k}) value {:.3e}", af.value),
                    );
                }
                let w = torsion_solve_ball(space, r0).expect("torsion").ambient_field();
                let steklov = steklov_identity_residual(&m, &w, n_radial).expect("steklov");
                check(
                    &mut violations,
                    steklov.deficit.abs() <= RIGIDITY_ABS,
                    format!("{label}: steklov deficit {:.3e}", steklov.deficit),
                );
            }
        }
    }
    conclude(1, "rigidity-values", t0, 30.0, violations);
}

// --- 2. Hsiung identity ------------------------------------------------------

#[test]
fn criterion_02_hsiung_identity() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    // Residual gate at the rigidity resolution, on sphere / ellipsoid /
    // perturbed sphere across all three spaceforms.
    let battery = identities::run_identities(&[IdentityKind::Hsiung], RIGIDITY_RESOLUTION, 0)
        .expect("battery");
    for row in &battery.rows {
        check(
            &mut violations,
            row.pass,
            format!("{} residual {:.3e} > {:.1e}", row.identity, row.residual, row.threshold),
        );
    }
    // Convergence gate: each residual drops by >= 4x when the resolution
    // doubles, measured where truncation error is visible ([8,16] -> [16,32]);
    // rows already at the quadrature floor report the resolved sentinel.
    let coarse = identities::run_identities(&[IdentityKind::Hsiung], [16, 32], 0).expect("battery");
    for row in &coarse.rows {
        check(
            &mut violations,
            row.order_estimate >= HSIUNG_CONVERGENCE_FACTOR.log2(),
            format!(
                "{} order {:.2} under doubling (residual {:.3e})",
                row.identity, row.order_estimate, row.residual
            ),
        );
    }
    conclude(2, "hsiung-identity", t0, 30.0, violations);
}

// --- 3. Reilly formula -------------------------------------------------------

#[test]
fn criterion_03_reilly_formula() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let space = Spaceform::Euclidean;
    let res = [48, 96];
    let n_radial = 64;

    // Closed form: unit ball with the torsion field f = (r^2 - 1)/6; both
    // sides of the identity equal 8*pi/9.
    let exact = 2.792_526_803_190_927_3_f64;
    let ball = Hypersurface::geodesic_sphere(space, grid(res), 1.0).expect("ball");
    let f = torsion_solve_ball(space, 1.0).expect("torsion").ambient_field();
    let reilly = reilly_residual(&ball, &f, n_radial).expect("reilly");
    check(
        &mut violations,
        (reilly.lhs - exact).abs() <= REILLY_CLOSED_FORM_ABS,
        format!("ball lhs {:.15} vs {exact:.15}", reilly.lhs),
    );
    check(
        &mut violations,
        (reilly.rhs - exact).abs() <= REILLY_CLOSED_FORM_ABS,
        format!("ball rhs {:.15} vs {exact:.15}", reilly.rhs),
    );

    // Random polynomial battery on the ball and on an ellipsoid.
    let ellipsoid = Hypersurface::ellipsoid(space, grid(res), 1.2, 1.0, 0.9).expect("ellipsoid");
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    for i in 0..REILLY_BATTERY_SIZE {
        let poly = random_polynomial(&mut rng);
        let domain = if i % 2 == 0 { &ball } else { &ellipsoid };
        let rep = reilly_residual(domain, &poly, n_radial).expect("reilly");
        check(
            &mut violations,
            rep.residual <= REILLY_BATTERY_REL,
            format!("random polynomial {i}: residual {:.3e}", rep.residual),
        );
    }
    conclude(3, "reilly-formula", t0, 60.0, violations);
}

// --- 4. Torsion closed forms ---------------------------------------------------

#[test]
fn criterion_04_torsion_closed_forms() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let cases = [
        (Spaceform::Euclidean, 1.0, 1.0 / 3.0),
        (Spaceform::Hyperbolic, 1.0, (1.0_f64).tanh() / 3.0),
        (Spaceform::Spherical, std::f64::consts::FRAC_PI_4, (std::f64::consts::FRAC_PI_4).tan() / 3.0),
    ];
    for (space, r0, expected) in cases {
        let torsion = torsion_solve_ball(space, r0).expect("torsion");
        let got = torsion.normal_derivative();
        check(
            &mut violations,
            (got - expected).abs() <= TORSION_ABS,
            format!("K={} r0={r0}: normal derivative {got:.16} vs {expected:.16}", space.k()),
        );
        let hopf = hopf_gradient_check(&torsion);
        check(
            &mut violations,
            hopf.positive && hopf.precondition_ok,
            format!("K={} r0={r0}: Hopf positivity flag false", space.k()),
        );
    }
    conclude(4, "torsion-closed-forms", t0, 1.0, violations);
}

// --- 5. Serrin identity --------------------------------------------------------

#[test]
fn criterion_05_serrin_identity() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let cases = [
        (SerrinProfile::Linear, SERRIN_LINEAR_ABS),
        (SerrinProfile::Quartic, SERRIN_NONLINEAR_ABS),
        (SerrinProfile::Exp, SERRIN_NONLINEAR_ABS),
    ];
    for (profile, tol) in cases {
        let r0 = 1.0;
        let pair = serrin_pair_manufacture(serrin_profile(profile, r0), r0).expect("pair");
        let fine = serrin_identity_residual(&pair, 48).expect("residual");
        check(
            &mut violations,
            fine.residual <= tol,
            format!("{:?}: residual {:.3e} > {tol:.1e}", profile, fine.residual),
        );
        // Quadrature-order convergence under refinement (or already resolved).
        let coarse = serrin_identity_residual(&pair, 12).expect("residual");
        check(
            &mut violations,
            fine.residual <= coarse.residual || fine.residual <= 1e-12,
            format!(
                "{:?}: residual not decreasing under refinement ({:.3e} -> {:.3e})",
                profile, coarse.residual, fine.residual
            ),
        );
    }
    conclude(5, "serrin-identity", t0, 30.0, violations);
}

// --- 6. Steklov identity --------------------------------------------------------

#[test]
fn criterion_06_steklov_identity() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let space = Spaceform::Euclidean;
    let res = [48, 96];
    let n_radial = 64;

    let spec = SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 1.0 };
    let ellipsoid = spec.build(space, grid(res)).expect("ellipsoid");
    let quadric = FieldSpec::BoundaryQuadric.build(space, Some(&spec)).expect("field");
    let rep = steklov_identity_residual(&ellipsoid, &quadric, n_radial).expect("steklov");
    check(
        &mut violations,
        rep.residual <= STEKLOV_REL,
        format!("ellipsoid residual {:.3e}", rep.residual),
    );

    let ball = Hypersurface::geodesic_sphere(space, grid(res), 1.0).expect("ball");
    let torsion = torsion_solve_ball(space, 1.0).expect("torsion").ambient_field();
    let rep = steklov_identity_residual(&ball, &torsion, n_radial).expect("steklov");
    check(
        &mut violations,
        (rep.rayleigh - 3.0).abs() <= STEKLOV_BALL_ABS,
        format!("ball rayleigh {:.12}", rep.rayleigh),
    );
    check(
        &mut violations,
        rep.deficit.abs() <= STEKLOV_BALL_ABS,
        format!("ball deficit {:.3e}", rep.deficit),
    );
    conclude(6, "steklov-identity", t0, 30.0, violations);
}

// --- 7. Newton gap ---------------------------------------------------------------

#[test]
fn criterion_07_newton_gap() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    for (n, k) in [(2usize, 1usize), (3, 1), (3, 2), (4, 2)] {
        let scan = newton_scan(n, k, NEWTON_SAMPLES, 0);
        check(
            &mut violations,
            scan.min_gap >= 0.0,
            format!("(n,k)=({n},{k}): min gap {:.3e}", scan.min_gap),
        );
        check(
            &mut violations,
            scan.min_h_next > 0.0 && scan.min_subtuple > 0.0,
            format!(
                "(n,k)=({n},{k}): H_{{k+1}} positivity violated (min {:.3e}, subtuple {:.3e})",
                scan.min_h_next, scan.min_subtuple
            ),
        );
        if n == 2 {
            check(
                &mut violations,
                scan.max_ratio_dev <= NEWTON_RATIO_ABS,
                format!("(n,k)=({n},{k}): ratio deviation {:.3e}", scan.max_ratio_dev),
            );
        }
    }
    conclude(7, "newton-gap", t0, 30.0, violations);
}

// --- 8. Level-set machinery -------------------------------------------------------

#[test]
fn criterion_08_levelset_machinery() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let space = Spaceform::Euclidean;

    // Exact cases: quadratic fields resolve the tangential Hessian identity
    // to the quadrature floor.
    let quadratics = [
        FieldSpec::Torsion { r0: 1.0 },
        FieldSpec::Anisotropic { eps: 0.15, r0: 1.0 },
    ];
    for spec in &quadratics {
        let f = spec.build(space, None).expect("field");
        let m = extract_level(space, &f, 0.0, grid([32, 64])).expect("level");
        let sff = hessian_vs_sff_residual(space, &f, &m).expect("sff");
        check(
            &mut violations,
            sff.hessian_residual <= SFF_QUADRATIC_ABS && sff.pointwise_residual <= SFF_QUADRATIC_ABS,
            format!(
                "{}: sff residuals {:.3e} / {:.3e}",
                spec.label(),
                sff.hessian_residual,
                sff.pointwise_residual
            ),
        );
    }

    // Scheme-order convergence on the anisotropic case, measured where the
    // fit truncation error is visible (below ~[16,32] it hits the floor).
    let f = FieldSpec::Anisotropic { eps: 0.15, r0: 1.0 }.build(space, None).expect("field");
    let ladder: Vec<f64> = [[8usize, 16usize], [12, 24], [16, 32]]
        .iter()
        .map(|&res| {
            let m = extract_level(space, &f, 0.0, grid(res)).expect("level");
            let sff = hessian_vs_sff_residual(space, &f, &m).expect("sff");
            sff.hessian_residual.max(sff.pointwise_residual)
        })
        .collect();
    for w in ladder.windows(2) {
        check(
            &mut violations,
            w[1] <= w[0] / 4.0,
            format!("anisotropic refinement stalled: {:.3e} -> {:.3e}", w[0], w[1]),
        );
    }

    // Band pipeline: co-area consistency and the best-slice pigeonhole bound
    // on every tested band.
    for eps in [0.1, 0.15, 0.2] {
        let plan = base_plan(
            Command::LevelsetPipeline {
                field: FieldSpec::Anisotropic { eps, r0: 1.0 },
                level_cap: 0.1,
                n_levels: 8,
            },
            space,
            [32, 64],
        );
        let (code, rep) = execute_to_json(plan);
        check(&mut violations, code == 0, format!("eps={eps}: exit code {code}"));
        let coarea_rel = rep["coarea_rel"].as_f64().unwrap_or(f64::NAN);
        check(
            &mut violations,
            coarea_rel <= COAREA_REL,
            format!("eps={eps}: co-area relative gap {coarea_rel:.3e}"),
        );
        let lhs = rep["pigeonhole_lhs"].as_f64().unwrap_or(f64::NAN);
        let rhs = rep["pigeonhole_rhs"].as_f64().unwrap_or(f64::NAN);
        check(
            &mut violations,
            lhs <= rhs * (1.0 + 1e-9),
            format!("eps={eps}: pigeonhole {lhs:.6e} > {rhs:.6e}"),
        );
    }
    conclude(8, "levelset-machinery", t0, 120.0, violations);
}

// --- 9. Constrained curvature flow ---------------------------------------------------

#[test]
fn criterion_09_flow() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let plan = base_plan(
        Command::Flow {
            surface: SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 0.9 },
            flow: FlowPlan::default(),
            series_csv: None,
        },
        Spaceform::Euclidean,
        [32, 64],
    );
    let (code, rep) = execute_to_json(plan);
    check(&mut violations, code == 0, format!("exit code {code}"));
    check(
        &mut violations,
        rep["stopped_on_umbilic"].as_bool() == Some(true),
        "flow did not reach the umbilicity tolerance".into(),
    );
    let drift = rep["conserved_drift_rel"].as_f64().unwrap_or(f64::NAN);
    check(
        &mut violations,
        drift <= FLOW_DRIFT_REL,
        format!("conserved quermassintegral drift {drift:.3e}"),
    );
    let bump = rep["max_w_next_increase"].as_f64().unwrap_or(f64::NAN);
    check(
        &mut violations,
        bump <= 1e-10,
        format!("monotone quermassintegral increased by {bump:.3e}"),
    );
    let amax = rep["final_a_traceless_max"].as_f64().unwrap_or(f64::NAN);
    check(
        &mut violations,
        amax <= FLOW_FINAL_AMAX,
        format!("final traceless norm {amax:.3e}"),
    );
    let balance = rep["balance"]["residual_rel"].as_f64().unwrap_or(f64::NAN);
    check(
        &mut violations,
        balance <= FLOW_BALANCE_REL,
        format!("global balance residual {balance:.3e}"),
    );
    conclude(9, "flow", t0, 300.0, violations);
}

// --- 10. Stability sweeps --------------------------------------------------------------

#[test]
fn criterion_10_stability_sweeps() {
    let t0 = Instant::now();
    let mut violations = Vec::new();
    let eps = umbilic_lab::config::DEFAULT_EPS;
    let resolutions = umbilic_lab::config::DEFAULT_SWEEP_RESOLUTIONS;
    for kind in [DeficitKind::Hk, DeficitKind::Cmc, DeficitKind::Cfc, DeficitKind::Af] {
        let job = SweepJob {
            kind,
            space: Spaceform::Euclidean,
            n_radial: 32,
            literal_cmc: false,
            cfc_k: 1,
            cfc_l: 1,
        };
        let report = run_sweep(&job, &eps, &resolutions).expect("sweep");
        for v in &report.violations {
            violations.push(format!("{}: {v}", kind.name()));
        }
        for result in &report.results {
            check(
                &mut violations,
                result.fitted_slope >= report.exponent - SWEEP_SLOPE_MARGIN,
                format!(
                    "{} at {}: slope {:.3} below exponent {:.3} - {SWEEP_SLOPE_MARGIN}",
                    kind.name(),
                    result.resolution,
                    result.fitted_slope,
                    report.exponent
                ),
            );
        }
        check(
            &mut violations,
            report.constant_drift_rel.abs() <= SWEEP_CONSTANT_STABILITY,
            format!(
                "{}: fitted constant drifts {:.1}% across resolutions",
                kind.name(),
                100.0 * report.constant_drift_rel
            ),
        );
        check(&mut violations, report.pass, format!("{}: report failed", kind.name()));
    }
    conclude(10, "stability-sweeps", t0, 600.0, violations);
}
