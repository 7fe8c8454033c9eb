//! The three simply connected constant-curvature ambient spaces in dimension
//! three, presented two ways at once:
//!
//! * as warped products `dr^2 + theta(r)^2 sigma` over the unit sphere, where
//!   `theta` is `r`, `sin r`, or `sinh r` for curvature `K = 0, +1, -1`;
//! * as conformally flat charts `gbar = e^{2 psi} <.,.>` on a coordinate ball
//!   (identity chart for `K = 0`, Poincare ball for `K = -1`, stereographic
//!   hemisphere chart for `K = +1`).
//!
//! Everything downstream (surface curvature, domain quadrature, level-set
//! transport) works in the chart and converts with the closed-form bridges
//! `s = r`, `tanh(r/2)`, `tan(r/2)` between geodesic radius `r` and
//! coordinate radius `s`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Guard distance kept between admissible radii and the equator of the
/// hemisphere chart at `K = +1`, where the graph construction degenerates.
pub const HEMISPHERE_RADIUS_MARGIN: f64 = 1e-6;

/// A simply connected spaceform of curvature `K` in `{-1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Spaceform {
    /// Hyperbolic space, `K = -1`.
    Hyperbolic,
    /// Euclidean space, `K = 0`.
    Euclidean,
    /// The open hemisphere of the round sphere, `K = +1`.
    Spherical,
}

impl Spaceform {
    /// Construct from the curvature constant. Anything other than -1, 0, +1
    /// is rejected.
    pub fn from_curvature(k: i32) -> Result<Self> {
        match k {
            -1 => Ok(Spaceform::Hyperbolic),
            0 => Ok(Spaceform::Euclidean),
            1 => Ok(Spaceform::Spherical),
            other => Err(Error::Domain(format!(
                "curvature must be -1, 0 or +1, got {other}"
            ))),
        }
    }

    /// The sectional curvature `K` as a float (enters formulas directly).
    #[inline]
    pub fn k(self) -> f64 {
        match self {
            Spaceform::Hyperbolic => -1.0,
            Spaceform::Euclidean => 0.0,
            Spaceform::Spherical => 1.0,
        }
    }

    /// Largest admissible geodesic radius: `+inf` for `K <= 0`, just short of
    /// the hemisphere equator `pi/2` for `K = +1`.
    #[inline]
    pub fn domain_radius_cap(self) -> f64 {
        match self {
            Spaceform::Spherical => std::f64::consts::FRAC_PI_2 - HEMISPHERE_RADIUS_MARGIN,
            _ => f64::INFINITY,
        }
    }

    fn check_radius(self, r: f64) -> Result<()> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Domain(format!("radius must be finite and >= 0, got {r}")));
        }
        if r > self.domain_radius_cap() {
            return Err(Error::Domain(format!(
                "radius {r} exceeds the domain cap {:.6} for K = {}",
                self.domain_radius_cap(),
                self.k()
            )));
        }
        Ok(())
    }

    /// Warp function `theta`, its derivative `theta'`, and the primitive
    /// `Theta` with `Theta(0) = 0`, evaluated at geodesic radius `r`.
    ///
    /// `K = 0`: `(r, 1, r^2/2)`; `K = +1`: `(sin r, cos r, 1 - cos r)`;
    /// `K = -1`: `(sinh r, cosh r, cosh r - 1)`.
    pub fn warp_eval(self, r: f64) -> Result<(f64, f64, f64)> {
        self.check_radius(r)?;
        Ok(match self {
            Spaceform::Euclidean => (r, 1.0, 0.5 * r * r),
            Spaceform::Spherical => (r.sin(), r.cos(), 1.0 - r.cos()),
            Spaceform::Hyperbolic => (r.sinh(), r.cosh(), r.cosh() - 1.0),
        })
    }

    /// `theta(r)` without the tuple (validated like [`Spaceform::warp_eval`]).
    #[inline]
    pub fn theta(self, r: f64) -> f64 {
        match self {
            Spaceform::Euclidean => r,
            Spaceform::Spherical => r.sin(),
            Spaceform::Hyperbolic => r.sinh(),
        }
    }

    /// `theta'(r)`.
    #[inline]
    pub fn theta_prime(self, r: f64) -> f64 {
        match self {
            Spaceform::Euclidean => 1.0,
            Spaceform::Spherical => r.cos(),
            Spaceform::Hyperbolic => r.cosh(),
        }
    }

    /// `theta''(r) = -K theta(r)`.
    #[inline]
    pub fn theta_second(self, r: f64) -> f64 {
        -self.k() * self.theta(r)
    }

    /// Coordinate (chart) radius of the geodesic sphere of radius `r`:
    /// `s = r`, `tan(r/2)`, `tanh(r/2)` for `K = 0, +1, -1`.
    pub fn chart_radius(self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self {
            Spaceform::Euclidean => r,
            Spaceform::Spherical => (0.5 * r).tan(),
            Spaceform::Hyperbolic => (0.5 * r).tanh(),
        })
    }

    /// Inverse of [`Spaceform::chart_radius`].
    pub fn geodesic_radius(self, s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::Domain(format!("chart radius must be >= 0, got {s}")));
        }
        match self {
            Spaceform::Euclidean => Ok(s),
            Spaceform::Spherical => {
                if s >= 1.0 {
                    return Err(Error::Domain(format!(
                        "chart radius {s} is outside the open unit-ball hemisphere chart"
                    )));
                }
                Ok(2.0 * s.atan())
            }
            Spaceform::Hyperbolic => {
                if s >= 1.0 {
                    return Err(Error::Domain(format!(
                        "chart radius {s} is outside the open Poincare ball"
                    )));
                }
                Ok(2.0 * s.atanh())
            }
        }
    }

    /// `d s / d r` of the chart-radius bridge; equals `e^{-psi}` on the ray.
    #[inline]
    pub fn chart_radius_deriv(self, s: f64) -> f64 {
        match self {
            Spaceform::Euclidean => 1.0,
            // s = tan(r/2) => ds/dr = (1 + s^2)/2 ; s = tanh(r/2) => (1 - s^2)/2.
            Spaceform::Spherical => 0.5 * (1.0 + s * s),
            Spaceform::Hyperbolic => 0.5 * (1.0 - s * s),
        }
    }

    /// Chart point of the geodesic polar coordinates `(r, xi)`, with `xi` a
    /// unit direction.
    pub fn point_from_polar(self, r: f64, xi: Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.chart_radius(r)? * xi)
    }

    /// Geodesic polar coordinates `(r, xi)` of a chart point (origin maps to
    /// `r = 0` with an arbitrary fixed direction).
    pub fn polar_from_point(self, x: Vector3<f64>) -> Result<(f64, Vector3<f64>)> {
        let s = x.norm();
        if s == 0.0 {
            return Ok((0.0, Vector3::new(1.0, 0.0, 0.0)));
        }
        Ok((self.geodesic_radius(s)?, x / s))
    }

    /// Conformal factor `psi(x)` with `gbar = e^{2 psi} <.,.>`: zero for
    /// `K = 0`, `log(2/(1 - |x|^2))` for `K = -1`, `log(2/(1 + |x|^2))` for
    /// `K = +1`.
    #[inline]
    pub fn psi(self, x: Vector3<f64>) -> f64 {
        match self {
            Spaceform::Euclidean => 0.0,
            _ => (2.0 / (1.0 + self.k() * x.norm_squared())).ln(),
        }
    }

    /// `e^{psi(x)}`.
    #[inline]
    pub fn conf_factor(self, x: Vector3<f64>) -> f64 {
        match self {
            Spaceform::Euclidean => 1.0,
            _ => 2.0 / (1.0 + self.k() * x.norm_squared()),
        }
    }

    /// Coordinate gradient of `psi`.
    #[inline]
    pub fn psi_gradient(self, x: Vector3<f64>) -> Vector3<f64> {
        match self {
            Spaceform::Euclidean => Vector3::zeros(),
            _ => {
                let k = self.k();
                (-2.0 * k / (1.0 + k * x.norm_squared())) * x
            }
        }
    }

    /// Coordinate Hessian of `psi`.
    pub fn psi_hessian(self, x: Vector3<f64>) -> Matrix3<f64> {
        match self {
            Spaceform::Euclidean => Matrix3::zeros(),
            _ => {
                let k = self.k();
                let q = 1.0 + k * x.norm_squared();
                let outer = x * x.transpose();
                Matrix3::identity() * (-2.0 * k / q) + outer * (4.0 * k * k / (q * q))
            }
        }
    }

    /// Christoffel symbols of `gbar = e^{2 psi} <.,.>` contracted with a
    /// vector of partial derivatives: returns the correction matrix
    /// `C_{ab} = Gamma^c_{ab} d_c f` so that the covariant Hessian is the
    /// coordinate Hessian minus `C`.
    pub fn christoffel_correction(self, x: Vector3<f64>, df: Vector3<f64>) -> Matrix3<f64> {
        // Gamma^c_{ab} = delta^c_a psi_b + delta^c_b psi_a - delta_{ab} psi^c.
        let p = self.psi_gradient(x);
        let mut c = df * p.transpose() + p * df.transpose();
        let dot = p.dot(&df);
        for i in 0..3 {
            c[(i, i)] -= dot;
        }
        c
    }

    /// Geodesic distance between two chart points, by the closed chordal
    /// formulas of the three model charts.
    pub fn geodesic_distance(self, a: Vector3<f64>, b: Vector3<f64>) -> Result<f64> {
        let check = |x: Vector3<f64>| -> Result<()> {
            if self != Spaceform::Euclidean && x.norm() >= 1.0 {
                return Err(Error::Domain(format!(
                    "chart point with |x| = {} is outside the unit-ball chart",
                    x.norm()
                )));
            }
            Ok(())
        };
        check(a)?;
        check(b)?;
        let d2 = (a - b).norm_squared();
        Ok(match self {
            Spaceform::Euclidean => d2.sqrt(),
            Spaceform::Hyperbolic => {
                // sinh(d/2) = |a-b| / sqrt((1-|a|^2)(1-|b|^2))
                let qa = 1.0 - a.norm_squared();
                let qb = 1.0 - b.norm_squared();
                2.0 * (d2 / (qa * qb)).sqrt().asinh()
            }
            Spaceform::Spherical => {
                // sin(d/2) = |a-b| / sqrt((1+|a|^2)(1+|b|^2))
                let qa = 1.0 + a.norm_squared();
                let qb = 1.0 + b.norm_squared();
                2.0 * (d2 / (qa * qb)).sqrt().clamp(0.0, 1.0).asin()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Taylor-series oracle for sinh/cosh, independent of `f64::sinh`.
    fn series_sinh_cosh(r: f64) -> (f64, f64) {
        let (mut s, mut c) = (0.0_f64, 0.0_f64);
        let mut term = 1.0_f64; // r^0 / 0!
        for n in 0..40 {
            if n % 2 == 0 {
                c += term;
            } else {
                s += term;
            }
            term *= r / (n as f64 + 1.0);
        }
        (s, c)
    }

    /// Same oracle trick for sin/cos (alternating signs).
    fn series_sin_cos(r: f64) -> (f64, f64) {
        let (mut s, mut c) = (0.0_f64, 0.0_f64);
        let mut term = 1.0_f64;
        for n in 0..40 {
            let signed = if (n / 2) % 2 == 0 { term } else { -term };
            if n % 2 == 0 {
                c += signed;
            } else {
                s += signed;
            }
            term *= r / (n as f64 + 1.0);
        }
        (s, c)
    }

    #[test]
    fn warp_eval_matches_series_oracle() {
        // K = -1, r = 1: (sinh 1, cosh 1, cosh 1 - 1).
        let (th, tp, big) = Spaceform::Hyperbolic.warp_eval(1.0).unwrap();
        let (s, c) = series_sinh_cosh(1.0);
        assert_relative_eq!(th, s, max_relative = 1e-14);
        assert_relative_eq!(tp, c, max_relative = 1e-14);
        assert_relative_eq!(big, c - 1.0, max_relative = 1e-13);
        assert_relative_eq!(th, 1.175201, max_relative = 1e-6);
        assert_relative_eq!(tp, 1.543081, max_relative = 1e-6);
        assert_relative_eq!(big, 0.543081, max_relative = 1e-5);

        // K = +1, r = pi/4.
        let (th, tp, big) = Spaceform::Spherical
            .warp_eval(std::f64::consts::FRAC_PI_4)
            .unwrap();
        let (s, c) = series_sin_cos(std::f64::consts::FRAC_PI_4);
        assert_relative_eq!(th, s, max_relative = 1e-14);
        assert_relative_eq!(tp, c, max_relative = 1e-14);
        assert_relative_eq!(th, 0.707107, max_relative = 1e-6);
        assert_relative_eq!(big, 0.292893, max_relative = 1e-5);
        assert_relative_eq!(big, 1.0 - c, max_relative = 1e-13);

        // K = 0, r = 2.
        let (th, tp, big) = Spaceform::Euclidean.warp_eval(2.0).unwrap();
        assert_eq!((th, tp, big), (2.0, 1.0, 2.0));
    }

    #[test]
    fn warp_eval_rejects_past_hemisphere_cap() {
        assert!(Spaceform::Spherical.warp_eval(1.6).is_err());
        assert!(Spaceform::Spherical
            .warp_eval(std::f64::consts::FRAC_PI_2)
            .is_err());
        // K <= 0 accepts large radii.
        assert!(Spaceform::Hyperbolic.warp_eval(30.0).is_ok());
    }

    proptest! {
        /// theta'' + K theta = 0 and Theta' = theta, checked with central
        /// differences against the closed forms at random radii.
        #[test]
        fn warp_ode_and_primitive(r in 0.01_f64..1.5, kind in 0..3) {
            let space = [Spaceform::Hyperbolic, Spaceform::Euclidean, Spaceform::Spherical][kind as usize];
            let ode = space.theta_second(r) + space.k() * space.theta(r);
            prop_assert!(ode.abs() <= 1e-12);
            let h = 1e-5;
            let (_, _, bp) = space.warp_eval(r + h).unwrap();
            let (_, _, bm) = space.warp_eval(r - h).unwrap();
            let fd = (bp - bm) / (2.0 * h);
            prop_assert!((fd - space.theta(r)).abs() <= 1e-9);
        }

        /// Pulling the conformal metric back to polar coordinates reproduces
        /// the warped product: e^psi * ds/dr = 1 and e^psi * s = theta(r).
        #[test]
        fn chart_and_warp_agree(r in 0.01_f64..1.5, kind in 0..3) {
            let space = [Spaceform::Hyperbolic, Spaceform::Euclidean, Spaceform::Spherical][kind as usize];
            let s = space.chart_radius(r).unwrap();
            let x = Vector3::new(s, 0.0, 0.0);
            let ef = space.conf_factor(x);
            prop_assert!((ef * space.chart_radius_deriv(s) - 1.0).abs() <= 1e-12);
            prop_assert!((ef * s - space.theta(r)).abs() <= 1e-10 * (1.0 + space.theta(r)));
        }

        /// Triangle inequality for the closed-form geodesic distances.
        /// Coordinates stay in (-0.5, 0.5) so every sampled point lies inside
        /// the unit-ball chart common to all three spaceforms
        /// (max norm 0.5 * sqrt(3) < 1).
        #[test]
        fn distance_triangle_inequality(
            ax in -0.5_f64..0.5, ay in -0.5_f64..0.5, az in -0.5_f64..0.5,
            bx in -0.5_f64..0.5, by in -0.5_f64..0.5, bz in -0.5_f64..0.5,
            cx in -0.5_f64..0.5, cy in -0.5_f64..0.5, cz in -0.5_f64..0.5,
            kind in 0..3)
        {
            let space = [Spaceform::Hyperbolic, Spaceform::Euclidean, Spaceform::Spherical][kind as usize];
            let a = Vector3::new(ax, ay, az);
            let b = Vector3::new(bx, by, bz);
            let c = Vector3::new(cx, cy, cz);
            let ab = space.geodesic_distance(a, b).unwrap();
            let bc = space.geodesic_distance(b, c).unwrap();
            let ac = space.geodesic_distance(a, c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn poincare_distance_matches_path_quadrature() {
        // d(0, (1/2, 0, 0)) in the Poincare ball is ln 3; the oracle
        // integrates the conformal factor 2/(1 - t^2) along the segment with
        // 48-node Gauss-Legendre quadrature.
        let space = Spaceform::Hyperbolic;
        let d = space
            .geodesic_distance(Vector3::zeros(), Vector3::new(0.5, 0.0, 0.0))
            .unwrap();
        let (nodes, weights) = crate::quad::gauss_legendre(48);
        let mut oracle = 0.0;
        for (t, w) in nodes.iter().zip(&weights) {
            // map [-1, 1] -> [0, 1/2]
            let u = 0.25 * (t + 1.0);
            oracle += 0.25 * w * 2.0 / (1.0 - u * u);
        }
        assert_relative_eq!(d, oracle, max_relative = 1e-12);
        assert_relative_eq!(d, 3.0_f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(d, 1.098612, max_relative = 1e-6);
    }

    #[test]
    fn chart_values_at_origin_and_midpoint() {
        assert_relative_eq!(
            Spaceform::Hyperbolic.psi(Vector3::zeros()),
            2.0_f64.ln(),
            max_relative = 1e-15
        );
        assert_eq!(Spaceform::Euclidean.psi(Vector3::new(0.3, 0.1, 0.0)), 0.0);
        // K = +1 chart at |x| = 1 would be the equator: factor 1.
        let near = Vector3::new(0.999_999, 0.0, 0.0);
        assert_relative_eq!(Spaceform::Spherical.conf_factor(near), 1.0, max_relative = 1e-5);
    }

    #[test]
    fn psi_hessian_matches_finite_differences() {
        let x = Vector3::new(0.21, -0.35, 0.4);
        let h = 1e-5;
        for space in [Spaceform::Hyperbolic, Spaceform::Spherical] {
            let hess = space.psi_hessian(x);
            for i in 0..3 {
                let mut e = Vector3::zeros();
                e[i] = h;
                let fd = (space.psi_gradient(x + e) - space.psi_gradient(x - e)) / (2.0 * h);
                for j in 0..3 {
                    assert_relative_eq!(hess[(j, i)], fd[j], epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn spherical_chart_covers_hemisphere_as_unit_ball() {
        // r near pi/2 maps to s near tan(pi/4) = 1 from below.
        let cap = Spaceform::Spherical.domain_radius_cap();
        let s = Spaceform::Spherical.chart_radius(cap).unwrap();
        assert!(s < 1.0 && s > 0.999_999);
        let r = Spaceform::Spherical.geodesic_radius(s).unwrap();
        assert_relative_eq!(r, cap, max_relative = 1e-12);
    }
}
