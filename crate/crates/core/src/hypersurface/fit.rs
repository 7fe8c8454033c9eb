//! Best-fit geodesic sphere and the induced distance of a surface from the
//! space of geodesic spheres.
//!
//! For a candidate center `c` the optimal radius is the midrange of the
//! geodesic node distances, so the objective reduces to
//! `(max_i d_i(c) - min_i d_i(c)) / 2`, minimized over `c` by cyclic
//! coordinate descent with golden-section line searches. The objective is
//! piecewise smooth but unimodal in the starshaped regime this crate
//! targets; failure to converge is reported, never silently accepted.

use nalgebra::Vector3;

use super::Hypersurface;
use crate::error::{Error, Result};
use crate::spaceform::Spaceform;

/// Result of a best-sphere fit.
#[derive(Debug, Clone, Copy)]
pub struct SphereFit {
    /// Center in chart coordinates.
    pub center: Vector3<f64>,
    /// Geodesic radius of the best sphere.
    pub radius: f64,
    /// Uniform geodesic distance to that sphere: `(max d - min d) / 2`.
    pub dist: f64,
    /// Coordinate-descent sweeps used.
    pub iters: usize,
}

const MAX_SWEEPS: usize = 160;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn golden_min(mut a: f64, mut b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..90 {
        if (b - a).abs() < 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Min/max geodesic distance from `c` to the points.
fn spread(space: Spaceform, points: &[Vector3<f64>], c: Vector3<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in points {
        let d = space.geodesic_distance(p, c).unwrap_or(f64::INFINITY);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Fit the best geodesic sphere to a chart point cloud with initial center
/// guess `c0`.
pub fn fit_sphere_to_points(
    space: Spaceform,
    points: &[Vector3<f64>],
    c0: Vector3<f64>,
) -> Result<SphereFit> {
    if points.is_empty() {
        return Err(Error::Construction("cannot fit a sphere to no points".into()));
    }
    let norms: Vec<f64> = points.iter().map(|p| p.norm()).collect();
    let scale = norms.iter().sum::<f64>() / norms.len() as f64;
    let band = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - norms.iter().cloned().fold(f64::INFINITY, f64::min);

    let admissible = |c: Vector3<f64>| space.k() == 0.0 || c.norm() < 0.999_999;
    let obj = |c: Vector3<f64>| -> f64 {
        if !admissible(c) {
            return f64::INFINITY;
        }
        let (lo, hi) = spread(space, points, c);
        0.5 * (hi - lo)
    };

    let mut center = if admissible(c0) { c0 } else { Vector3::zeros() };
    let mut best = obj(center);
    let mut h = (0.5 * band + 0.05 * scale).max(1e-6 * (1.0 + scale));

    let mut converged = false;
    let mut iters = 0;
    for sweep in 0..MAX_SWEEPS {
        iters = sweep + 1;
        let before = best;
        for axis in 0..3 {
            let (t, ft) = golden_min(center[axis] - h, center[axis] + h, &mut |t| {
                let mut c = center;
                c[axis] = t;
                obj(c)
            });
            if ft < best {
                best = ft;
                center[axis] = t;
            }
        }
        let gain = before - best;
        h *= if gain < 1e-15 * (1.0 + best) { 0.35 } else { 0.7 };
        if h < 1e-11 * (1.0 + scale) {
            converged = true;
            break;
        }
    }

    let (lo, hi) = spread(space, points, center);
    let radius = 0.5 * (hi + lo);
    let dist = 0.5 * (hi - lo);
    if !converged {
        return Err(Error::FitNonConvergence {
            iters,
            best_objective: dist,
            center: [center.x, center.y, center.z],
            radius,
        });
    }
    Ok(SphereFit { center, radius, dist, iters })
}

/// Distance of a surface from the nearest geodesic sphere, together with
/// that sphere. Nodes are weighted uniformly (the distance is a sup-type
/// quantity, not an average).
pub fn fit_sphere_distance(m: &Hypersurface) -> Result<SphereFit> {
    let points = m.positions();
    // Area-weighted centroid is a robust starting center.
    let cf = m.curvature_field()?;
    let mut c0 = Vector3::zeros();
    let mut total = 0.0;
    for i in 0..points.len() {
        let w = m.grid.weights[i] * cf.area_element[i];
        c0 += w * points[i];
        total += w;
    }
    c0 /= total;
    fit_sphere_to_points(m.space, &points, c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::SphereGrid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid(nt: usize, np: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(nt, np).unwrap())
    }

    #[test]
    fn centered_sphere_fits_exactly() {
        for space in [Spaceform::Euclidean, Spaceform::Hyperbolic, Spaceform::Spherical] {
            let m = Hypersurface::geodesic_sphere(space, grid(12, 24), 0.9).unwrap();
            let fit = fit_sphere_distance(&m).unwrap();
            assert!(fit.dist <= 1e-9, "dist = {:.3e}", fit.dist);
            assert_relative_eq!(fit.radius, 0.9, epsilon = 1e-9);
            assert!(fit.center.norm() <= 1e-9);
        }
    }

    #[test]
    fn translated_euclidean_sphere_recovers_center() {
        // Sphere |x - c| = 1 with c = (0.2, 0, 0), expressed as a radial
        // graph over the origin.
        let c = Vector3::new(0.2, 0.0, 0.0);
        let m = Hypersurface::build(Spaceform::Euclidean, grid(16, 32), |xi| {
            let b = xi.dot(&c);
            b + (1.0 - c.norm_squared() + b * b).sqrt()
        })
        .unwrap();
        let fit = fit_sphere_distance(&m).unwrap();
        assert!(fit.dist <= 1e-8, "dist = {:.3e}", fit.dist);
        assert_relative_eq!(fit.center.x, 0.2, epsilon = 1e-7);
        assert!(fit.center.yz().norm() <= 1e-7);
        assert_relative_eq!(fit.radius, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn offset_chart_sphere_is_a_hyperbolic_geodesic_sphere() {
        // A Euclidean sphere inside the chart ball is a geodesic sphere of
        // the hyperbolic metric. Its radius oracle: half the geodesic
        // distance between the two x-axis antipodes of the chart sphere.
        let e = Vector3::new(0.1, 0.0, 0.0);
        let re = 0.5;
        let space = Spaceform::Hyperbolic;
        let m = Hypersurface::build(space, grid(16, 32), |xi| {
            let b = xi.dot(&e);
            let s = b + (re * re - e.norm_squared() + b * b).sqrt();
            space.geodesic_radius(s).unwrap()
        })
        .unwrap();
        let fit = fit_sphere_distance(&m).unwrap();
        assert!(fit.dist <= 1e-8, "dist = {:.3e}", fit.dist);
        let r_oracle = 0.5
            * space
                .geodesic_distance(Vector3::new(-0.4, 0.0, 0.0), Vector3::new(0.6, 0.0, 0.0))
                .unwrap();
        assert_relative_eq!(fit.radius, r_oracle, epsilon = 1e-8);
        // Self-consistency: every node is at distance `radius` from center.
        for p in m.positions() {
            assert_relative_eq!(
                space.geodesic_distance(p, fit.center).unwrap(),
                fit.radius,
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn ellipsoid_distance_is_half_the_axis_gap() {
        // Axes (1.2, 1, 1): the best sphere is centered at the origin with
        // radius 1.1, so the distance is 0.1 up to pole sampling (grid nodes
        // do not hit the exact poles).
        let m =
            Hypersurface::ellipsoid(Spaceform::Euclidean, grid(32, 64), 1.2, 1.0, 1.0).unwrap();
        let fit = fit_sphere_distance(&m).unwrap();
        assert!(fit.center.norm() <= 1e-6, "center = {:?}", fit.center);
        assert!((fit.dist - 0.1).abs() <= 2e-3, "dist = {}", fit.dist);
        assert!((fit.radius - 1.1).abs() <= 2e-3, "radius = {}", fit.radius);
    }
}
