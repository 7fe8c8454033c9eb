//! Stability sweeps: drive a one-parameter family of near-spherical
//! surfaces through a deficit functional, measure the geodesic distance to
//! the best-fit sphere, and fit the empirical stability law
//! `distance <= C * deficit^q` against the pinned exponent `q`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use umbilic_core::deficits::{alexandrov_fenchel, cfc_deficit, cmc_deficit, heintze_karcher};
use umbilic_core::{fit_sphere_distance, Hypersurface, Spaceform, SphereGrid};

use crate::config::DeficitKind;
use crate::surfaces::{recorded_modes, SurfaceSpec};
use crate::thresholds;
use crate::CliError;

/// One sweep data point. `slope_partial` is the least-squares slope of
/// `log(distance)` against `log(deficit)` over all rows up to and
/// including this one (0.0 until two positive rows exist).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub deficit: f64,
    pub distance: f64,
    pub slope_partial: f64,
}

/// Sweep outcome at one resolution.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub resolution: String,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log(distance)` vs `log(deficit)`.
    pub fitted_slope: f64,
    /// `max_i distance_i / deficit_i^q` with the pinned exponent `q`.
    pub fitted_c: f64,
    /// The pinned stability exponent `q` the fit is measured against.
    pub theorem_exponent: f64,
    /// Rows skipped because a functional precondition failed, with reasons.
    pub skipped: Vec<String>,
}

/// Full sweep report across resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub deficit: String,
    pub family: String,
    pub exponent: f64,
    pub results: Vec<SweepResult>,
    /// Relative drift of `fitted_c` between the first and last resolution.
    pub constant_drift_rel: f64,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Everything needed to evaluate one sweep member.
#[derive(Debug, Clone, Copy)]
pub struct SweepJob {
    pub kind: DeficitKind,
    pub space: Spaceform,
    pub n_radial: usize,
    pub literal_cmc: bool,
    pub cfc_k: usize,
    pub cfc_l: usize,
}

impl SweepJob {
    pub fn exponent(&self) -> f64 {
        match self.kind {
            DeficitKind::Hk => thresholds::EXPONENT_HK,
            DeficitKind::Cmc => thresholds::EXPONENT_CMC,
            DeficitKind::Cfc => thresholds::EXPONENT_CFC,
            DeficitKind::Af => thresholds::EXPONENT_AF,
        }
    }

    /// The surface family swept for this deficit: the recorded perturbed
    /// sphere for the curvature-integral deficits, a prolate ellipsoid for
    /// the quermassintegral one (where the perturbation family's
    /// odd-harmonic content would leave the flow cone too early).
    pub fn member(&self, eps: f64) -> SurfaceSpec {
        match self.kind {
            DeficitKind::Af => SurfaceSpec::Ellipsoid { a: 1.0 + eps, b: 1.0, c: 1.0 },
            _ => SurfaceSpec::PerturbedSphere { r0: 1.0, eps, modes: recorded_modes() },
        }
    }

    pub fn family_label(&self) -> String {
        match self.kind {
            DeficitKind::Af => "ellipsoid(1+eps,1,1)".to_string(),
            _ => "perturbed-sphere(r0=1, recorded modes)".to_string(),
        }
    }

    fn deficit_value(&self, m: &Hypersurface) -> Result<f64, CliError> {
        let cf = m.curvature_field().map_err(|e| CliError::Numerical(e.to_string()))?;
        let value = match self.kind {
            DeficitKind::Hk => {
                heintze_karcher(m, &cf).map_err(|e| CliError::Numerical(e.to_string()))?.deficit
            }
            DeficitKind::Cmc => cmc_deficit(m, &cf, self.n_radial, self.literal_cmc).deficit,
            DeficitKind::Cfc => cfc_deficit(m, &cf, self.cfc_k, self.cfc_l)
                .map_err(|e| CliError::Numerical(e.to_string()))?
                .deficit,
            DeficitKind::Af => alexandrov_fenchel(m, &cf, 1, self.n_radial)
                .map_err(|e| CliError::Numerical(e.to_string()))?
                .value,
        };
        Ok(value)
    }
}

/// Least-squares slope of `log(distance)` against `log(deficit)` over the
/// rows with positive deficit and distance.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, x)| *d > 0.0 && *x > 0.0)
        .map(|(d, x)| (d.ln(), x.ln()))
        .collect();
    if logs.len() < 2 {
        return 0.0;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(a, _)| a).sum::<f64>() / n;
    let my = logs.iter().map(|(_, b)| b).sum::<f64>() / n;
    let var: f64 = logs.iter().map(|(a, _)| (a - mx) * (a - mx)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = logs.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    cov / var
}

fn sweep_at_resolution(
    job: &SweepJob,
    eps_list: &[f64],
    resolution: [usize; 2],
) -> Result<SweepResult, CliError> {
    let grid = Arc::new(
        SphereGrid::new(resolution[0], resolution[1])
            .map_err(|e| CliError::Numerical(e.to_string()))?,
    );
    // Members are independent; evaluate them in parallel, keep list order.
    let outcomes: Vec<(f64, Result<(f64, f64), String>)> = eps_list
        .par_iter()
        .map(|&eps| {
            if eps == 0.0 {
                return (eps, Ok((0.0, 0.0)));
            }
            let run = || -> Result<(f64, f64), CliError> {
                let m = job
                    .member(eps)
                    .build(job.space, Arc::clone(&grid))
                    .map_err(CliError::Config)?;
                let deficit = job.deficit_value(&m)?;
                let fit = fit_sphere_distance(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
                Ok((deficit, fit.dist))
            };
            (eps, run().map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut points = Vec::new();
    for (eps, outcome) in outcomes {
        match outcome {
            Ok((deficit, distance)) => {
                if eps > 0.0 {
                    points.push((deficit, distance));
                }
                rows.push(SweepRow {
                    eps,
                    deficit,
                    distance,
                    slope_partial: log_log_slope(&points),
                });
            }
            Err(reason) => skipped.push(format!("eps={eps}: {reason}")),
        }
    }

    let fitted_slope = log_log_slope(&points);
    let q = job.exponent();
    let fitted_c = points
        .iter()
        .filter(|(d, _)| *d > 0.0)
        .map(|(d, x)| x / d.powf(q))
        .fold(0.0_f64, f64::max);
    Ok(SweepResult {
        resolution: format!("{}x{}", resolution[0], resolution[1]),
        rows,
        fitted_slope,
        fitted_c,
        theorem_exponent: q,
        skipped,
    })
}

/// Run the sweep at every requested resolution and check the invariants:
/// positive deficits away from the sphere, fitted slope at least the pinned
/// exponent (within margin), every row under the fitted constant, and the
/// fitted constant stable across resolutions.
pub fn run_sweep(
    job: &SweepJob,
    eps_list: &[f64],
    resolutions: &[[usize; 2]],
) -> Result<SweepReport, CliError> {
    let results: Vec<SweepResult> = resolutions
        .iter()
        .map(|&res| sweep_at_resolution(job, eps_list, res))
        .collect::<Result<_, _>>()?;

    let q = job.exponent();
    let mut violations = Vec::new();
    for result in &results {
        for row in &result.rows {
            if row.eps > 0.0 && row.deficit <= 0.0 {
                violations.push(format!(
                    "{}: deficit {:.3e} not positive at eps={}",
                    result.resolution, row.deficit, row.eps
                ));
            }
        }
        if result.fitted_slope < q - thresholds::SWEEP_SLOPE_MARGIN {
            violations.push(format!(
                "{}: fitted slope {:.4} below exponent {:.4} - {:.2}",
                result.resolution,
                result.fitted_slope,
                q,
                thresholds::SWEEP_SLOPE_MARGIN
            ));
        }
        for row in &result.rows {
            if row.eps > 0.0
                && row.deficit > 0.0
                && row.distance > result.fitted_c * row.deficit.powf(q) * (1.0 + 1e-12)
            {
                violations.push(format!(
                    "{}: row eps={} exceeds fitted bound",
                    result.resolution, row.eps
                ));
            }
        }
        if !result.skipped.is_empty() {
            violations.push(format!(
                "{}: {} member(s) skipped: {}",
                result.resolution,
                result.skipped.len(),
                result.skipped.join("; ")
            ));
        }
    }

    let constant_drift_rel = if results.len() >= 2 {
        let first = results.first().map(|r| r.fitted_c).unwrap_or(0.0);
        let last = results.last().map(|r| r.fitted_c).unwrap_or(0.0);
        if first > 0.0 {
            (last - first).abs() / first
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    };
    if constant_drift_rel > thresholds::SWEEP_CONSTANT_STABILITY {
        violations.push(format!(
            "fitted constant drifts {:.1}% across resolutions (limit {:.0}%)",
            100.0 * constant_drift_rel,
            100.0 * thresholds::SWEEP_CONSTANT_STABILITY
        ));
    }

    let pass = violations.is_empty();
    Ok(SweepReport {
        deficit: job.kind.name().to_string(),
        family: job.family_label(),
        exponent: q,
        results,
        constant_drift_rel,
        violations,
        pass,
    })
}
