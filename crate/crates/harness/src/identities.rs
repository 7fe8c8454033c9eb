//! The verify-identities battery: Hsiung-Minkowski, weighted Reilly,
//! Serrin, and Steklov integral identities plus Newton-Maclaurin cone
//! sampling, each reported as a row with a residual, the resolution it ran
//! at, and a convergence-order estimate from a half-resolution companion
//! run.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use umbilic_core::deficits::hsiung_residual;
use umbilic_core::elliptic::{
    reilly_residual, serrin_identity_residual, serrin_pair_manufacture,
    steklov_identity_residual, torsion_solve_ball,
};
use umbilic_core::symfunc::{in_garding_cone, normalized_all};
use umbilic_core::{AmbientField, Hypersurface, Poly3, Spaceform, SphereGrid};

use crate::config::{IdentityKind, SerrinProfile};
use crate::surfaces::{recorded_modes, SurfaceSpec};
use crate::thresholds;
use crate::CliError;

/// Sentinel order estimate for residuals already at round-off on the fine
/// grid (no measurable convergence left).
pub const ORDER_RESOLVED: f64 = 99.0;

/// One battery row.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub domain: String,
    pub field: String,
    pub residual: f64,
    pub resolution: String,
    pub order_estimate: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// CSV projection of a row (fixed schema: identity, residual, resolution,
/// order).
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCsvRow {
    pub identity: String,
    pub residual: f64,
    pub resolution: String,
    pub order: f64,
}

impl IdentityRow {
    pub fn csv(&self) -> IdentityCsvRow {
        IdentityCsvRow {
            identity: format!("{}:{}:{}", self.identity, self.domain, self.field),
            residual: self.residual,
            resolution: self.resolution.clone(),
            order: self.order_estimate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityBattery {
    pub rows: Vec<IdentityRow>,
    pub failures: usize,
}

fn order_estimate(coarse: f64, fine: f64) -> f64 {
    if fine.abs() < 1e-13 {
        // Fine grid already at round-off: converged past measurability.
        ORDER_RESOLVED
    } else {
        (coarse.abs() / fine.abs()).log2()
    }
}

fn res_label(res: [usize; 2]) -> String {
    format!("{}x{}", res[0], res[1])
}

fn half(res: [usize; 2]) -> [usize; 2] {
    [(res[0] / 2).max(8), (res[1] / 2).max(16)]
}

fn build(spec: &SurfaceSpec, space: Spaceform, res: [usize; 2]) -> Result<Hypersurface, CliError> {
    let grid = Arc::new(
        SphereGrid::new(res[0], res[1]).map_err(|e| CliError::Numerical(e.to_string()))?,
    );
    spec.build(space, grid).map_err(CliError::Config)
}

/// The cross-curvature shape battery for surface identities.
fn hsiung_domains() -> Vec<(&'static str, Spaceform, SurfaceSpec)> {
    let perturbed = |r0: f64| SurfaceSpec::PerturbedSphere {
        r0,
        eps: 0.1,
        modes: recorded_modes(),
    };
    vec![
        ("flat-sphere", Spaceform::Euclidean, SurfaceSpec::Sphere { r: 1.0 }),
        (
            "flat-ellipsoid",
            Spaceform::Euclidean,
            SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 0.85 },
        ),
        ("flat-perturbed", Spaceform::Euclidean, perturbed(1.0)),
        ("hyp-sphere", Spaceform::Hyperbolic, SurfaceSpec::Sphere { r: 0.8 }),
        (
            "hyp-ellipsoid",
            Spaceform::Hyperbolic,
            SurfaceSpec::Ellipsoid { a: 0.45, b: 0.40, c: 0.35 },
        ),
        ("hyp-perturbed", Spaceform::Hyperbolic, perturbed(0.7)),
        ("sph-sphere", Spaceform::Spherical, SurfaceSpec::Sphere { r: 0.9 }),
        (
            "sph-ellipsoid",
            Spaceform::Spherical,
            SurfaceSpec::Ellipsoid { a: 0.45, b: 0.40, c: 0.35 },
        ),
        ("sph-perturbed", Spaceform::Spherical, perturbed(0.8)),
    ]
}

fn hsiung_relative(m: &Hypersurface, k: usize) -> Result<f64, CliError> {
    let cf = m.curvature_field().map_err(|e| CliError::Numerical(e.to_string()))?;
    let residual = hsiung_residual(m, &cf, k).map_err(|e| CliError::Numerical(e.to_string()))?;
    let scale: f64 = {
        let vals: Vec<f64> = cf
            .hk
            .iter()
            .enumerate()
            .map(|(i, hk)| m.space.theta_prime(m.rho[i]) * hk[k])
            .collect();
        cf.integrate(&vals).abs().max(1.0)
    };
    Ok(residual.abs() / scale)
}

fn hsiung_rows(resolution: [usize; 2]) -> Result<Vec<IdentityRow>, CliError> {
    let cases: Vec<_> = hsiung_domains()
        .into_iter()
        .flat_map(|(name, space, spec)| {
            [0usize, 1].map(|k| (name, space, spec.clone(), k))
        })
        .collect();
    cases
        .into_par_iter()
        .map(|(name, space, spec, k)| {
            let fine = hsiung_relative(&build(&spec, space, resolution)?, k)?;
            let coarse = hsiung_relative(&build(&spec, space, half(resolution))?, k)?;
            Ok(IdentityRow {
                identity: format!("hsiung[k={k}]"),
                domain: name.to_string(),
                field: "-".to_string(),
                residual: fine,
                resolution: res_label(resolution),
                order_estimate: order_estimate(coarse, fine),
                threshold: thresholds::HSIUNG_REL,
                pass: fine <= thresholds::HSIUNG_REL,
            })
        })
        .collect()
}

/// Random polynomial field of total degree at most 4, with coefficients
/// shrinking in the degree so that values stay order-one on the unit ball.
pub fn random_polynomial(rng: &mut impl Rng) -> AmbientField {
    let mut terms = Vec::new();
    for i in 0..=4u8 {
        for j in 0..=(4 - i) {
            for k in 0..=(4 - i - j) {
                let deg = (i + j + k) as f64;
                let coeff = rng.gen_range(-1.0..1.0) / (1.0 + deg);
                terms.push((coeff, [i, j, k]));
            }
        }
    }
    AmbientField::polynomial(Poly3::new(terms))
}

fn reilly_rel(
    spec: &SurfaceSpec,
    space: Spaceform,
    field: &AmbientField,
    res: [usize; 2],
) -> Result<f64, CliError> {
    let m = build(spec, space, res)?;
    let report =
        reilly_residual(&m, field, res[0]).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(report.residual)
}

fn reilly_rows(resolution: [usize; 2], seed: u64) -> Result<Vec<IdentityRow>, CliError> {
    enum Case {
        Torsion(Spaceform, f64, &'static str),
        Random(SurfaceSpec, &'static str, u64),
    }
    let mut cases = vec![
        Case::Torsion(Spaceform::Hyperbolic, 0.8, "hyp-ball"),
        Case::Torsion(Spaceform::Euclidean, 1.0, "flat-ball"),
        Case::Torsion(Spaceform::Spherical, 0.9, "sph-ball"),
    ];
    for i in 0..3u64 {
        cases.push(Case::Random(SurfaceSpec::Sphere { r: 1.0 }, "flat-ball", i));
        cases.push(Case::Random(
            SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 0.9 },
            "flat-ellipsoid",
            i,
        ));
    }
    cases
        .into_par_iter()
        .map(|case| {
            let (space, spec, field, field_name, threshold) = match &case {
                Case::Torsion(space, r0, _) => {
                    let t = torsion_solve_ball(*space, *r0)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    (
                        *space,
                        SurfaceSpec::Sphere { r: *r0 },
                        t.ambient_field(),
                        "torsion".to_string(),
                        thresholds::REILLY_CLOSED_FORM_ABS,
                    )
                }
                Case::Random(spec, _, i) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37 + i));
                    (
                        Spaceform::Euclidean,
                        spec.clone(),
                        random_polynomial(&mut rng),
                        format!("poly#{i}"),
                        thresholds::REILLY_BATTERY_REL,
                    )
                }
            };
            let domain = match &case {
                Case::Torsion(_, _, d) | Case::Random(_, d, _) => d.to_string(),
            };
            let fine = reilly_rel(&spec, space, &field, resolution)?;
            let coarse = reilly_rel(&spec, space, &field, half(resolution))?;
            Ok(IdentityRow {
                identity: "reilly".to_string(),
                domain,
                field: field_name,
                residual: fine,
                resolution: res_label(resolution),
                order_estimate: order_estimate(coarse, fine),
                threshold,
                pass: fine <= threshold,
            })
        })
        .collect()
}

/// The manufactured Serrin profiles on the ball of radius `r0`, normalized
/// to vanish on the boundary. `linear` is the torsion solution itself
/// (constant nonlinearity), the other two have genuinely nonlinear
/// level-dependent Laplacians.
pub fn serrin_profile(profile: SerrinProfile, r0: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| match profile {
        SerrinProfile::Linear => (r * r - r0 * r0) / 6.0,
        SerrinProfile::Quartic => {
            (r * r - r0 * r0) / 6.0 + (r.powi(4) - r0.powi(4)) / 60.0
        }
        SerrinProfile::Exp => ((r * r).exp() - (r0 * r0).exp()) / 4.0,
    }
}

pub fn serrin_threshold(profile: SerrinProfile) -> f64 {
    match profile {
        SerrinProfile::Linear => thresholds::SERRIN_LINEAR_ABS,
        _ => thresholds::SERRIN_NONLINEAR_ABS,
    }
}

fn serrin_rows(resolution: [usize; 2]) -> Result<Vec<IdentityRow>, CliError> {
    [SerrinProfile::Linear, SerrinProfile::Quartic, SerrinProfile::Exp]
        .into_par_iter()
        .map(|profile| {
            let pair = serrin_pair_manufacture(serrin_profile(profile, 1.0), 1.0)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let fine = serrin_identity_residual(&pair, resolution[0])
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let coarse = serrin_identity_residual(&pair, half(resolution)[0])
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let threshold = serrin_threshold(profile);
            Ok(IdentityRow {
                identity: "serrin".to_string(),
                domain: "flat-ball".to_string(),
                field: profile.name().to_string(),
                residual: fine.residual,
                resolution: res_label(resolution),
                order_estimate: order_estimate(coarse.residual, fine.residual),
                threshold,
                pass: fine.residual <= threshold,
            })
        })
        .collect()
}

fn steklov_rows(resolution: [usize; 2]) -> Result<Vec<IdentityRow>, CliError> {
    let cases = vec![
        (
            SurfaceSpec::Sphere { r: 1.0 },
            "flat-ball",
            "torsion",
            thresholds::STEKLOV_BALL_ABS,
        ),
        (
            SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 1.0 },
            "flat-ellipsoid",
            "quadric",
            thresholds::STEKLOV_REL,
        ),
    ];
    cases
        .into_par_iter()
        .map(|(spec, domain, field_name, threshold)| {
            let field = match field_name {
                "torsion" => torsion_solve_ball(Spaceform::Euclidean, 1.0)
                    .map_err(|e| CliError::Numerical(e.to_string()))?
                    .ambient_field(),
                _ => crate::surfaces::FieldSpec::BoundaryQuadric
                    .build(Spaceform::Euclidean, Some(&spec))
                    .map_err(CliError::Config)?,
            };
            let run = |res: [usize; 2]| -> Result<f64, CliError> {
                let m = build(&spec, Spaceform::Euclidean, res)?;
                let rep = steklov_identity_residual(&m, &field, res[0])
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                Ok(rep.residual)
            };
            let fine = run(resolution)?;
            let coarse = run(half(resolution))?;
            Ok(IdentityRow {
                identity: "steklov".to_string(),
                domain: domain.to_string(),
                field: field_name.to_string(),
                residual: fine,
                resolution: res_label(resolution),
                order_estimate: order_estimate(coarse, fine),
                threshold,
                pass: fine <= threshold,
            })
        })
        .collect()
}

/// Outcome of a Newton-Maclaurin sampling scan over a Garding cone.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonScan {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// Smallest `H_k^2 - H_{k-1} H_{k+1}` over the samples.
    pub min_gap: f64,
    /// Smallest `H_{k+1}` over the samples.
    pub min_h_next: f64,
    /// Smallest subtuple value `H_k(kappa with one entry removed)`.
    pub min_subtuple: f64,
    /// For n = 2: largest deviation of the pinching ratio from 1/2.
    pub max_ratio_dev: f64,
}

/// Rejection-sample `kappa` in `Gamma_{k+1} subset R^n` from `[-2, 4]^n`
/// and scan the Newton-Maclaurin quantities. Deterministic per seed.
pub fn newton_scan(n: usize, k: usize, samples: usize, seed: u64) -> NewtonScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32 | k as u64));
    let mut scan = NewtonScan {
        n,
        k,
        samples,
        min_gap: f64::INFINITY,
        min_h_next: f64::INFINITY,
        min_subtuple: f64::INFINITY,
        max_ratio_dev: 0.0,
    };
    let mut kappa = vec![0.0_f64; n];
    let mut sub = vec![0.0_f64; n - 1];
    let mut accepted = 0usize;
    while accepted < samples {
        for v in kappa.iter_mut() {
            *v = rng.gen_range(-2.0..4.0);
        }
        if !in_garding_cone(&kappa, k + 1) {
            continue;
        }
        accepted += 1;
        let h = normalized_all(&kappa);
        // For n = 2 the gap H_1^2 - H_2 H_0 collapses algebraically to the
        // discriminant ((a - b)/2)^2; evaluating it in that form avoids the
        // catastrophic cancellation the difference-of-products suffers at
        // near-umbilic samples (which otherwise floors the check at ~1e-6).
        let gap = if n == 2 {
            let d = 0.5 * (kappa[0] - kappa[1]);
            d * d
        } else {
            h[k] * h[k] - h[k - 1] * h[k + 1]
        };
        scan.min_gap = scan.min_gap.min(gap);
        scan.min_h_next = scan.min_h_next.min(h[k + 1]);
        for skip in 0..n {
            let mut idx = 0;
            for (i, &v) in kappa.iter().enumerate() {
                if i != skip {
                    sub[idx] = v;
                    idx += 1;
                }
            }
            scan.min_subtuple = scan.min_subtuple.min(normalized_all(&sub)[k]);
        }
        if n == 2 {
            // Exact two-dimensional pinching: gap / |traceless|^2 = 1/2.
            let dev_sq = umbilic_core::symfunc::traceless_norm_sq(&kappa);
            if dev_sq > 0.0 {
                scan.max_ratio_dev = scan.max_ratio_dev.max((gap / dev_sq - 0.5).abs());
            }
        }
    }
    scan
}

fn newton_rows(seed: u64) -> Vec<IdentityRow> {
    let pairs = [(2usize, 1usize), (3, 1), (3, 2), (4, 2)];
    let mut rows: Vec<IdentityRow> = pairs
        .into_par_iter()
        .map(|(n, k)| {
            let scan = newton_scan(n, k, thresholds::NEWTON_SAMPLES, seed);
            // Any negative minimum is a violation; clamp positives to zero.
            let residual = (-scan.min_gap).max(-scan.min_h_next).max(-scan.min_subtuple).max(0.0);
            IdentityRow {
                identity: format!("newton[n={n},k={k}]"),
                domain: "cone-samples".to_string(),
                field: "-".to_string(),
                residual,
                resolution: format!("{} samples", scan.samples),
                order_estimate: 0.0,
                threshold: 0.0,
                pass: residual <= 0.0,
            }
        })
        .collect();
    let scan = newton_scan(2, 1, thresholds::NEWTON_SAMPLES, seed);
    rows.push(IdentityRow {
        identity: "newton-ratio[n=2]".to_string(),
        domain: "cone-samples".to_string(),
        field: "-".to_string(),
        residual: scan.max_ratio_dev,
        resolution: format!("{} samples", scan.samples),
        order_estimate: 0.0,
        threshold: thresholds::NEWTON_RATIO_ABS,
        pass: scan.max_ratio_dev <= thresholds::NEWTON_RATIO_ABS,
    });
    rows
}

/// Run the selected batteries at the given resolution. Rows come back in a
/// fixed order (battery order, then case order) regardless of parallelism.
pub fn run_identities(
    which: &[IdentityKind],
    resolution: [usize; 2],
    seed: u64,
) -> Result<IdentityBattery, CliError> {
    let mut rows = Vec::new();
    for kind in IdentityKind::ALL {
        if !which.contains(&kind) {
            continue;
        }
        match kind {
            IdentityKind::Hsiung => rows.extend(hsiung_rows(resolution)?),
            IdentityKind::Reilly => rows.extend(reilly_rows(resolution, seed)?),
            IdentityKind::Serrin => rows.extend(serrin_rows(resolution)?),
            IdentityKind::Steklov => rows.extend(steklov_rows(resolution)?),
            IdentityKind::Newton => rows.extend(newton_rows(seed)),
        }
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    Ok(IdentityBattery { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_scan_is_clean_and_deterministic() {
        let a = newton_scan(2, 1, 2000, 11);
        let b = newton_scan(2, 1, 2000, 11);
        assert_eq!(a.min_gap, b.min_gap);
        assert!(a.min_gap >= 0.0);
        assert!(a.min_h_next > 0.0);
        assert!(a.min_subtuple > 0.0);
        assert!(a.max_ratio_dev <= 1e-12);
    }

    #[test]
    fn order_estimate_handles_the_floor() {
        assert_eq!(order_estimate(1e-5, 0.0), ORDER_RESOLVED);
        assert!((order_estimate(8e-6, 1e-6) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hsiung_battery_passes_at_a_small_resolution() {
        let rows = hsiung_rows([16, 32]).unwrap();
        assert_eq!(rows.len(), 18);
        // At 16 x 32 the asymmetric shapes carry visible truncation, so the
        // threshold check is exercised for real; all should still pass.
        for row in &rows {
            assert!(row.pass, "{}: {:.3e}", row.domain, row.residual);
        }
    }
}
