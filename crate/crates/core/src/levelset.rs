//! Level-set machinery: covariant Hessians and the Cauchy-Schwarz deficit,
//! extraction of level sets as radial graphs, the Hessian /
//! second-fundamental-form relation on level sets, co-area band norms,
//! gradient-flow foliation, best-slice selection, and the assembled
//! stability pipeline.
//!
//! The central objects: for an ambient function `f`, the traceless ambient
//! Hessian controls how far the level sets are from umbilic, and a co-area
//! band integral of its `p`-th power bounds (a) the traceless second
//! fundamental form of some slice and (b) the geodesic drift of the
//! foliation between levels. Combining both with a best-sphere fit of the
//! zero level produces a computable distance bound.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::Serialize;

use crate::ambient::AmbientField;
use crate::error::{Error, Result};
use crate::hypersurface::fit::{fit_sphere_distance, SphereFit};
use crate::hypersurface::{CurvatureField, Hypersurface, SphereGrid};
use crate::quad::gauss_legendre;
use crate::spaceform::Spaceform;

/// Surface dimension (level sets of a scalar field on a 3-manifold).
const N: f64 = 2.0;

/// Gradient floor below which foliation trajectories abort.
pub const GRADIENT_FLOOR: f64 = 1e-8;

/// Adaptive integrator tolerance for the foliation flow.
pub const FOLIATION_TOL: f64 = 1e-10;

/// Band integrals below this floor carry no signal: the Cauchy-Schwarz
/// deficit of an exactly-umbilic configuration evaluates to ~1e-16 per node
/// from rounding alone, so its 3/2 power integrates to ~1e-24. Pipelines
/// treat such bands as rigid.
pub const RIGIDITY_FLOOR: f64 = 1e-18;

/// A band of level sets `{0 < f < level_cap}` over an outer surface
/// `M = {f = 0}`.
#[derive(Debug, Clone)]
pub struct BandSpec {
    /// The zero level set, as a radial graph.
    pub outer: Hypersurface,
    /// Band height `t0`.
    pub level_cap: f64,
    /// Number of Gauss-Legendre levels sampled inside the band.
    pub n_levels: usize,
    /// Norm exponent (defaults to `n + 1 = 3`).
    pub p: f64,
}

impl BandSpec {
    pub fn new(outer: Hypersurface, level_cap: f64, n_levels: usize) -> Self {
        BandSpec { outer, level_cap, n_levels, p: N + 1.0 }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.level_cap >= 0.0 && self.level_cap.is_finite()) {
            return Err(Error::Domain(format!(
                "band level_cap must be finite and nonnegative, got {}",
                self.level_cap
            )));
        }
        if self.n_levels == 0 {
            return Err(Error::Domain("band needs at least one level".into()));
        }
        Ok(())
    }
}

/// Covariant Hessian data of an ambient field at a chart point.
#[derive(Debug, Clone, Copy)]
pub struct CovariantHessian {
    /// Chart components of the ambient covariant Hessian.
    pub hess: Matrix3<f64>,
    /// Metric trace (ambient Laplacian).
    pub laplacian: f64,
    /// Cauchy-Schwarz deficit `|hess|^2 - laplacian^2 / (n+1) >= 0`; equals
    /// the squared norm of the traceless Hessian.
    pub cs_deficit: f64,
}

/// Covariant Hessian, Laplacian, and Cauchy-Schwarz deficit of `f` at `x`.
/// Coordinate second derivatives are corrected by the conformal
/// Christoffels; norms and traces are taken in the ambient metric.
pub fn covariant_hessian(
    space: Spaceform,
    f: &AmbientField,
    x: Vector3<f64>,
) -> Result<CovariantHessian> {
    if space.k() != 0.0 && x.norm() >= 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "point |x| = {:.6} outside the conformal chart",
            x.norm()
        )));
    }
    let grad = f.gradient(x);
    let hess = f.hessian(x) - space.christoffel_correction(x, grad);
    let ef = space.conf_factor(x);
    let inv2 = 1.0 / (ef * ef);
    let laplacian = hess.trace() * inv2;
    let norm_sq = hess.iter().map(|t| t * t).sum::<f64>() * inv2 * inv2;
    let cs_deficit = norm_sq - laplacian * laplacian / (N + 1.0);
    Ok(CovariantHessian { hess, laplacian, cs_deficit })
}

/// Extract the level set `{f = level}` as a radial graph on `grid`: per-ray
/// scan for a sign change followed by bisection to full precision.
pub fn extract_level(
    space: Spaceform,
    f: &AmbientField,
    level: f64,
    grid: Arc<SphereGrid>,
) -> Result<Hypersurface> {
    const SCAN: usize = 128;
    let r_max = space.domain_radius_cap().min(8.0) * (1.0 - 1e-9);
    let r_min = 1e-6;
    let value_at = |r: f64, xi: Vector3<f64>| -> f64 {
        let s = space.chart_radius(r).unwrap_or(f64::NAN);
        f.value(s * xi)
    };
    let mut rho = vec![0.0; grid.len()];
    for (i, &xi) in grid.nodes.iter().enumerate() {
        let mut lo = r_min;
        let mut glo = value_at(lo, xi) - level;
        let mut bracket = None;
        for j in 1..=SCAN {
            let hi = r_min + (r_max - r_min) * j as f64 / SCAN as f64;
            let ghi = value_at(hi, xi) - level;
            if glo == 0.0 {
                bracket = Some((lo, lo));
                break;
            }
            if glo * ghi <= 0.0 && ghi.is_finite() && glo.is_finite() {
                bracket = Some((lo, hi));
                break;
            }
            lo = hi;
            glo = ghi;
        }
        let (mut a, mut b) = bracket.ok_or(Error::NonStarshaped {
            ray: i,
            dir: [xi.x, xi.y, xi.z],
        })?;
        if a != b {
            let mut ga = value_at(a, xi) - level;
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                let gm = value_at(mid, xi) - level;
                if ga * gm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ga = gm;
                }
                if b - a < 1e-15 * (1.0 + b) {
                    break;
                }
            }
        }
        rho[i] = 0.5 * (a + b);
    }
    Hypersurface::new(space, grid, rho)
}

/// Residuals of the level-set Hessian relations on a surface `M` contained
/// in a level set of `f`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SffResidual {
    /// Max-node Frobenius-norm residual of
    /// `hess f (tan, tan) = -|grad f| h` (`h` oriented by `-grad f`).
    pub hessian_residual: f64,
    /// Max-node residual of the pointwise relation
    /// `|grad f|^2 |A0|^2 = |traceless hess (tan,tan)|^2
    ///  - (1/n) (traceless hess (nu,nu))^2`.
    pub pointwise_residual: f64,
    /// Whether `-grad f / |grad f|` opposed the outward normal, so the
    /// stored second fundamental form was sign-flipped for the comparison.
    pub orientation_flipped: bool,
}

impl SffResidual {
    pub fn max(&self) -> f64 {
        self.hessian_residual.max(self.pointwise_residual)
    }
}

/// Check, node by node, that the ambient Hessian of `f` restricted to the
/// tangent spaces of `m` equals `-|grad f| h` (with `h` taken with respect
/// to `nu = -grad f / |grad f|`), and the induced pointwise identity for
/// the traceless parts. `m` must lie in a level set of `f` with nonzero
/// gradient.
pub fn hessian_vs_sff_residual(
    space: Spaceform,
    f: &AmbientField,
    m: &Hypersurface,
) -> Result<SffResidual> {
    let cf = m.curvature_field()?;
    let n = cf.grid.len();

    // Orientation: does -grad f point along the outward normal?
    let mut sign_sum = 0.0;
    let mut grads = Vec::with_capacity(n);
    for i in 0..n {
        let g = f.gradient(cf.pos[i]);
        let gn = g.norm();
        if gn * space.conf_factor(cf.pos[i]).recip() < GRADIENT_FLOOR {
            return Err(Error::GradientFloor {
                value: gn,
                floor: GRADIENT_FLOOR,
                where_: format!("level-set node {i}"),
            });
        }
        sign_sum += (-g).dot(&cf.normal_chart[i]).signum();
        grads.push(g);
    }
    let flipped = sign_sum < 0.0;
    if sign_sum.abs() < n as f64 - 0.5 {
        return Err(Error::Degenerate(
            "level-set gradient orientation is not uniform over the surface".into(),
        ));
    }

    let mut r6 = 0.0_f64;
    let mut r2 = 0.0_f64;
    for i in 0..n {
        let x = cf.pos[i];
        let ch = covariant_hessian(space, f, x)?;
        let ef = cf.conf[i];
        let grad_norm = grads[i].norm() / ef; // metric norm of grad f

        let xt = cf.x_theta[i];
        let xp = cf.x_phi[i];
        let contract = |t: &Matrix3<f64>| {
            Matrix2::new(
                (xt.transpose() * t * xt)[(0, 0)],
                (xt.transpose() * t * xp)[(0, 0)],
                (xp.transpose() * t * xt)[(0, 0)],
                (xp.transpose() * t * xp)[(0, 0)],
            )
        };
        let g = cf.g[i];
        let ginv = g.try_inverse().ok_or_else(|| {
            Error::Degenerate(format!("singular induced metric at node {i}"))
        })?;
        let frob = |s: &Matrix2<f64>| {
            let b = ginv * s;
            (b * b).trace()
        };

        // Tangential Hessian block vs -|grad f| h.
        let s_tan = contract(&ch.hess);
        let h = if flipped { -cf.h[i] } else { cf.h[i] };
        let res6 = frob(&(s_tan + grad_norm * h)).max(0.0).sqrt();
        r6 = r6.max(res6);

        // Pointwise traceless relation.
        let tr_less = ch.hess - (ch.laplacian / (N + 1.0)) * (ef * ef) * Matrix3::identity();
        let s_ring = contract(&tr_less);
        let nu_nu = (cf.normal_chart[i].transpose() * tr_less * cf.normal_chart[i])[(0, 0)]
            / (ef * ef);
        let lhs = grad_norm * grad_norm * cf.a_traceless_sq[i];
        let rhs = frob(&s_ring) - nu_nu * nu_nu / N;
        r2 = r2.max((lhs - rhs).abs());
    }
    Ok(SffResidual { hessian_residual: r6, pointwise_residual: r2, orientation_flipped: flipped })
}

/// One sampled level of a band.
struct LevelSample {
    level: f64,
    cf: CurvatureField,
}

/// Sample the band `{0 < f < cap}` at Gauss-Legendre levels; returns the
/// samples, the band integral `int_band |tr-less hess|^p` (by co-area), and
/// the minimum metric gradient norm over all sampled nodes.
fn sample_band(
    space: Spaceform,
    f: &AmbientField,
    grid: &Arc<SphereGrid>,
    cap: f64,
    n_levels: usize,
    p: f64,
) -> Result<(Vec<LevelSample>, f64, f64)> {
    let (qx, qw) = gauss_legendre(n_levels);
    let mut samples = Vec::with_capacity(n_levels);
    let mut band_integral = 0.0;
    let mut min_grad = f64::INFINITY;
    for (x, w) in qx.iter().zip(&qw) {
        let level = 0.5 * cap * (x + 1.0);
        let weight = 0.5 * cap * w;
        let m = extract_level(space, f, level, Arc::clone(grid))?;
        let cf = m.curvature_field()?;
        let n = cf.grid.len();
        let mut cs = vec![0.0; n];
        let mut grad_norm = vec![0.0; n];
        let mut coarea = vec![0.0; n];
        for i in 0..n {
            let ch = covariant_hessian(space, f, cf.pos[i])?;
            cs[i] = ch.cs_deficit.max(0.0);
            let gn = f.gradient(cf.pos[i]).norm() / cf.conf[i];
            if gn < GRADIENT_FLOOR {
                return Err(Error::GradientFloor {
                    value: gn,
                    floor: GRADIENT_FLOOR,
                    where_: format!("band level {level:.6}, node {i}"),
                });
            }
            grad_norm[i] = gn;
            min_grad = min_grad.min(gn);
            coarea[i] = cs[i].powf(0.5 * p) / gn;
        }
        band_integral += weight * cf.integrate(&coarea);
        samples.push(LevelSample { level, cf });
    }
    Ok((samples, band_integral, min_grad))
}

/// Co-area band norm: the `p`-th root of
/// `int_0^{t0} int_{M_s} |tr-less hess f|^p / |grad f| dA ds`.
pub fn band_norm(space: Spaceform, f: &AmbientField, band: &BandSpec) -> Result<f64> {
    band.validate()?;
    let (_, integral, _) =
        sample_band(space, f, &band.outer.grid, band.level_cap, band.n_levels, band.p)?;
    Ok(integral.max(0.0).powf(1.0 / band.p))
}

/// Result of foliating between two levels.
#[derive(Debug, Clone)]
pub struct FoliationResult {
    /// Geodesic arc length of each trajectory.
    pub arc_lengths: Vec<f64>,
    /// Final chart positions.
    pub end_points: Vec<Vector3<f64>>,
    pub max_arc: f64,
}

/// Flow seeds along `x' = grad f / |grad f|^2` (metric gradient over squared
/// metric norm; in chart components the conformal factors cancel) from
/// `from_level` to `to_level`, accumulating geodesic arc length.
/// The parameter of the flow is the value of `f` itself; each trajectory's
/// final `f`-value is verified against `to_level`.
pub fn foliate(
    space: Spaceform,
    f: &AmbientField,
    from_level: f64,
    to_level: f64,
    seeds: &[Vector3<f64>],
) -> Result<FoliationResult> {
    let span = to_level - from_level;
    let mut out = FoliationResult {
        arc_lengths: vec![0.0; seeds.len()],
        end_points: seeds.to_vec(),
        max_arc: 0.0,
    };
    if span == 0.0 {
        return Ok(out);
    }

    for (idx, &seed) in seeds.iter().enumerate() {
        let mut pos = seed;
        let mut arc = 0.0;
        let mut t = 0.0; // progress along the f-parameter
        let mut dt: f64 = span / 16.0;
        let deriv = |x: Vector3<f64>| -> Result<(Vector3<f64>, f64)> {
            let g = f.gradient(x);
            let ef = space.conf_factor(x);
            let metric_norm = g.norm() / ef;
            if metric_norm < GRADIENT_FLOOR {
                return Err(Error::GradientFloor {
                    value: metric_norm,
                    floor: GRADIENT_FLOOR,
                    where_: format!("foliation trajectory {idx} at |x| = {:.6}", x.norm()),
                });
            }
            Ok((g / g.norm_squared(), ef / g.norm()))
        };
        let mut steps = 0usize;
        while (span - t).abs() > 1e-14 * (1.0 + span.abs()) {
            steps += 1;
            if steps > 100_000 {
                return Err(Error::FlowStall {
                    t,
                    min_dt: dt.abs(),
                    reason: format!("foliation trajectory {idx} exceeded step budget"),
                });
            }
            if dt.abs() > (span - t).abs() {
                dt = span - t;
            }
            match rk45_step(&deriv, pos, arc, dt)? {
                StepOutcome::Accept { pos: p2, arc: a2, dt_next } => {
                    pos = p2;
                    arc = a2;
                    t += dt;
                    dt = dt_next;
                }
                StepOutcome::Reject { dt_next } => {
                    if dt_next.abs() < 1e-14 * (1.0 + span.abs()) {
                        return Err(Error::FlowStall {
                            t,
                            min_dt: dt_next.abs(),
                            reason: format!("foliation step underflow on trajectory {idx}"),
                        });
                    }
                    dt = dt_next;
                }
            }
        }
        // The flow parameter is the f-value: verify the level was reached.
        let reached = f.value(pos);
        if (reached - to_level).abs() > 1e-8 * (1.0 + to_level.abs()) {
            return Err(Error::Inversion(format!(
                "foliation trajectory {idx} ended at f = {reached:.3e}, expected {to_level:.3e}"
            )));
        }
        out.arc_lengths[idx] = arc;
        out.end_points[idx] = pos;
        out.max_arc = out.max_arc.max(arc);
    }
    Ok(out)
}

enum StepOutcome {
    Accept { pos: Vector3<f64>, arc: f64, dt_next: f64 },
    Reject { dt_next: f64 },
}

/// One Dormand-Prince 5(4) step of the augmented (position, arc-length)
/// system with PI-free step control at [`FOLIATION_TOL`].
fn rk45_step(
    deriv: &impl Fn(Vector3<f64>) -> Result<(Vector3<f64>, f64)>,
    pos: Vector3<f64>,
    arc: f64,
    dt: f64,
) -> Result<StepOutcome> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] =
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let mut k = [(Vector3::zeros(), 0.0); 7];
    k[0] = deriv(pos)?;
    for s in 1..7 {
        let mut xp = pos;
        for (j, kj) in k.iter().enumerate().take(s) {
            xp += dt * A[s - 1][j] * kj.0;
        }
        k[s] = deriv(xp)?;
    }
    let mut x5 = pos;
    let mut l5 = arc;
    let mut x4 = pos;
    let mut l4 = arc;
    for s in 0..7 {
        x5 += dt * B5[s] * k[s].0;
        l5 += dt * B5[s] * k[s].1;
        x4 += dt * B4[s] * k[s].0;
        l4 += dt * B4[s] * k[s].1;
    }
    let mut err = 0.0_f64;
    for a in 0..3 {
        let scale = FOLIATION_TOL * (1.0 + pos[a].abs().max(x5[a].abs()));
        err = err.max((x5[a] - x4[a]).abs() / scale);
    }
    let scale_l = FOLIATION_TOL * (1.0 + arc.abs().max(l5.abs()));
    err = err.max((l5 - l4).abs() / scale_l);

    let factor = if err > 0.0 {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    } else {
        5.0
    };
    if err <= 1.0 {
        Ok(StepOutcome::Accept { pos: x5, arc: l5, dt_next: dt * factor })
    } else {
        Ok(StepOutcome::Reject { dt_next: dt * factor })
    }
}

/// The band slice with the smallest traceless-curvature norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BestSlice {
    /// Sampled level attaining the minimum.
    pub level: f64,
    /// `( int_{M_s} |A0|^p dA )^{1/p}` at that level.
    pub slice_norm: f64,
    /// Pigeonhole bound on `slice_norm^p`:
    /// `(2 / (t0 min|grad f|^{p-1})) int_band |tr-less hess|^p`.
    pub pigeonhole_bound: f64,
}

/// Scan the sampled band levels for the slice minimizing the traceless
/// second-fundamental-form norm, and verify the co-area pigeonhole bound.
pub fn best_slice(space: Spaceform, f: &AmbientField, band: &BandSpec) -> Result<BestSlice> {
    band.validate()?;
    let (samples, band_integral, min_grad) =
        sample_band(space, f, &band.outer.grid, band.level_cap, band.n_levels, band.p)?;
    let p = band.p;
    let mut best_level = 0.0;
    let mut best_p_integral = f64::INFINITY;
    for s in &samples {
        let vals: Vec<f64> = s.cf.a_traceless_sq.iter().map(|a| a.powf(0.5 * p)).collect();
        let integral = s.cf.integrate(&vals);
        if integral < best_p_integral {
            best_p_integral = integral;
            best_level = s.level;
        }
    }
    let bound = if band.level_cap > 0.0 {
        2.0 * band_integral / (band.level_cap * min_grad.powf(p - 1.0))
    } else {
        0.0
    };
    Ok(BestSlice {
        level: best_level,
        slice_norm: best_p_integral.max(0.0).powf(1.0 / p),
        pigeonhole_bound: bound,
    })
}

/// Full report of the level-set stability pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    /// Geodesic distance bound: best-sphere distance of the zero level plus
    /// the maximal foliation drift up to the chosen slice.
    pub dist: f64,
    /// `dist` in the area-normalized scale (`|M| = 1`).
    pub dist_normalized: f64,
    /// Deficit side of the stability inequality, same normalization.
    pub bound_rhs: f64,
    /// `dist_normalized / bound_rhs` (0 when both vanish).
    pub ratio: f64,
    /// Best-sphere fit of the zero level.
    #[serde(skip)]
    pub fit: SphereFit,
    /// `int_band |tr-less hess|^p` over the effective band.
    pub band_integral: f64,
    /// Effective band height used (capped by the requested one).
    pub t0_effective: f64,
    /// Level and norm of the chosen slice.
    pub best_level: f64,
    pub slice_norm: f64,
    pub min_grad: f64,
    /// Area of the zero level.
    pub area: f64,
    /// Max foliation arc length from the zero level to the chosen slice.
    pub foliation_margin: f64,
}

/// Run the assembled stability pipeline for the level-set configuration:
/// fit the zero level by a sphere, choose an effective band height from the
/// band integral, pick the best slice, and transfer its distance back to
/// the zero level along the foliation. Reports the distance, the
/// theorem-shaped right-hand side, and their ratio, all in the `|M| = 1`
/// normalization handled by explicit scale factors.
pub fn levelset_stability_pipeline(
    space: Spaceform,
    f: &AmbientField,
    band: &BandSpec,
) -> Result<PipelineReport> {
    band.validate()?;
    let p = band.p;
    let cf0 = band.outer.curvature_field()?;
    let area = cf0.area();
    let lambda = area.sqrt();
    let fit = fit_sphere_distance(&band.outer)?;

    // First pass over the requested band to size the effective one.
    let (_, b_full, min_grad_full) =
        sample_band(space, f, &band.outer.grid, band.level_cap, band.n_levels, p)?;
    let t0_eff = if b_full <= RIGIDITY_FLOOR {
        0.0
    } else {
        band.level_cap
            .min(2.0 * (min_grad_full.min(band.level_cap) * b_full).powf(1.0 / (p + 1.0)))
    };

    // Second pass over the effective band.
    let (band_integral, min_grad, slice) = if t0_eff > 0.0 && b_full > 0.0 {
        let eff = BandSpec {
            outer: band.outer.clone(),
            level_cap: t0_eff,
            n_levels: band.n_levels,
            p,
        };
        let (_, b_eff, g_eff) =
            sample_band(space, f, &band.outer.grid, t0_eff, band.n_levels, p)?;
        let slice = best_slice(space, f, &eff)?;
        (b_eff, g_eff.min(min_grad_full), slice)
    } else {
        (0.0, min_grad_full, BestSlice { level: 0.0, slice_norm: 0.0, pigeonhole_bound: 0.0 })
    };

    let foliation = if slice.level > 0.0 {
        foliate(space, f, 0.0, slice.level, &band.outer.positions())?
    } else {
        FoliationResult {
            arc_lengths: vec![0.0; band.outer.grid.len()],
            end_points: band.outer.positions(),
            max_arc: 0.0,
        }
    };

    let dist = fit.dist + foliation.max_arc;
    let dist_normalized = dist / lambda;
    let denom = (t0_eff.max(f64::MIN_POSITIVE)).min(lambda * min_grad);
    let bound_rhs = if band_integral > 0.0 {
        (lambda.powf(2.0 * p - 3.0) * band_integral).powf(1.0 / (p + 1.0))
            / denom.powf(p / (p + 1.0))
    } else {
        0.0
    };
    let ratio = if bound_rhs > 0.0 { dist_normalized / bound_rhs } else { 0.0 };

    Ok(PipelineReport {
        dist,
        dist_normalized,
        bound_rhs,
        ratio,
        fit,
        band_integral,
        t0_effective: t0_eff,
        best_level: slice.level,
        slice_norm: slice.slice_norm,
        min_grad,
        area,
        foliation_margin: foliation.max_arc,
    })
}
