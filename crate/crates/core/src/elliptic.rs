//! Elliptic building blocks: torsion potentials on geodesic balls, the
//! weighted Reilly identity, manufactured Serrin pairs with their integral
//! identity, the Steklov-type boundary identity, and Hopf-lemma gradient
//! checks.
//!
//! These are the PDE-side counterparts of the curvature deficits: each
//! identity here is checked as an exact integral statement whose residual
//! must sit at quadrature accuracy, and whose deficit terms feed the
//! stability estimates.

use std::sync::Arc;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::ambient::AmbientField;
use crate::error::{Error, Result};
use crate::hypersurface::{tangential_calculus, Hypersurface};
use crate::levelset::covariant_hessian;
use crate::quad::gauss_legendre;
use crate::spaceform::Spaceform;

/// Surface dimension.
const N: f64 = 2.0;

/// Radial sample count for manufactured profiles.
const SERRIN_SAMPLES: usize = 512;

// ---------------------------------------------------------------------------
// Torsion potential
// ---------------------------------------------------------------------------

/// Solution of the torsion problem `lap f + 3 K f = 1` on a geodesic ball,
/// with `f = 0` on the boundary sphere and `f < 0` inside.
#[derive(Debug, Clone, Copy)]
pub struct TorsionSolution {
    pub space: Spaceform,
    pub r0: f64,
}

/// Solve the torsion problem on the geodesic ball of radius `r0`.
///
/// The radial reduction `f'' + 2 (theta'/theta) f' + 3 K f = 1` admits the
/// closed forms used here; [`TorsionSolution::ode_residual`] verifies them
/// against the ODE pointwise.
pub fn torsion_solve_ball(space: Spaceform, r0: f64) -> Result<TorsionSolution> {
    if !(r0 > 0.0) || r0 >= space.domain_radius_cap() {
        return Err(Error::Domain(format!(
            "ball radius {r0} outside (0, {})",
            space.domain_radius_cap()
        )));
    }
    Ok(TorsionSolution { space, r0 })
}

impl TorsionSolution {
    pub fn value(&self, r: f64) -> f64 {
        let k = self.space.k();
        if k == 0.0 {
            (r * r - self.r0 * self.r0) / 6.0
        } else {
            (1.0 - self.space.theta_prime(r) / self.space.theta_prime(self.r0)) / (3.0 * k)
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        if self.space.k() == 0.0 {
            r / 3.0
        } else {
            self.space.theta(r) / (3.0 * self.space.theta_prime(self.r0))
        }
    }

    pub fn second_derivative(&self, r: f64) -> f64 {
        if self.space.k() == 0.0 {
            1.0 / 3.0
        } else {
            self.space.theta_prime(r) / (3.0 * self.space.theta_prime(self.r0))
        }
    }

    /// Outward normal derivative on the boundary sphere:
    /// `theta(r0) / (3 theta'(r0))`.
    pub fn normal_derivative(&self) -> f64 {
        self.space.theta(self.r0) / (3.0 * self.space.theta_prime(self.r0))
    }

    /// The solution as an ambient radial field on the conformal chart.
    pub fn ambient_field(&self) -> AmbientField {
        let sol = *self;
        AmbientField::radial(self.space, move |r| {
            [sol.value(r), sol.derivative(r), sol.second_derivative(r)]
        })
    }

    /// Max residual of `f'' + 2 (theta'/theta) f' + 3 K f - 1` over
    /// `samples` interior radii.
    pub fn ode_residual(&self, samples: usize) -> f64 {
        let k = self.space.k();
        let mut worst = 0.0_f64;
        for i in 1..=samples {
            let r = self.r0 * i as f64 / (samples as f64 + 1.0);
            let lap = self.second_derivative(r)
                + 2.0 * self.space.theta_prime(r) / self.space.theta(r) * self.derivative(r);
            worst = worst.max((lap + 3.0 * k * self.value(r) - 1.0).abs());
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Reilly identity
// ---------------------------------------------------------------------------

/// Both sides of the weighted Reilly identity and their normalized gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReillyReport {
    /// `int_Omega theta' [ (lap f + 3 K f)^2 - |hess f + K f g|^2 ]`.
    pub lhs: f64,
    /// Boundary side: see [`reilly_residual`].
    pub rhs: f64,
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)`.
    pub residual: f64,
}

/// Evaluate the weighted Reilly identity for an arbitrary ambient field `f`
/// on the domain bounded by `m`:
///
/// `int_Omega theta' [(lap f + (n+1) K f)^2 - |hess f + K f g|^2]`
/// `  = int_M theta' [2 dnu(f) lap_M f + n H_1 dnu(f)^2 + h(grad_M f, grad_M f)`
/// `      + 2 n K f dnu(f)] + int_M dnu(theta') [ |grad_M f|^2 - n K f^2 ]`,
///
/// where `dnu(theta') = -K u` with `u` the support function.
pub fn reilly_residual(m: &Hypersurface, f: &AmbientField, n_radial: usize) -> Result<ReillyReport> {
    let space = m.space;
    let k = space.k();
    let cf = m.curvature_field()?;

    let lhs = m.integrate_domain(n_radial, |r, xi| {
        let s = space.chart_radius(r).expect("interior radius stays in the chart");
        let x = s * xi;
        let ch = covariant_hessian(space, f, x).expect("interior point stays in the chart");
        let ef = space.conf_factor(x);
        let fv = f.value(x);
        let op = ch.hess + k * fv * (ef * ef) * Matrix3::identity();
        let op_sq = op.iter().map(|t| t * t).sum::<f64>() / (ef * ef * ef * ef);
        let lap_part = ch.laplacian + (N + 1.0) * k * fv;
        space.theta_prime(r) * (lap_part * lap_part - op_sq)
    });

    let td = tangential_calculus(m, &cf, f);
    let n_nodes = cf.grid.len();
    let mut integrand = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let r = m.rho[i];
        let tp = space.theta_prime(r);
        let dn = td.normal_deriv[i];
        let fv = td.value[i];
        let h1 = cf.hk[i][1];
        let main = 2.0 * dn * td.laplacian[i]
            + N * h1 * dn * dn
            + td.h_grad_grad[i]
            + 2.0 * N * k * fv * dn;
        // dnu(theta') = theta'' dnu(r) = -K theta <xi, nu> = -K u.
        let dn_tp = -k * cf.support[i];
        integrand[i] = tp * main + dn_tp * (td.grad_sq[i] - N * k * fv * fv);
    }
    let rhs = cf.integrate(&integrand);
    Ok(ReillyReport { lhs, rhs, residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0) })
}

// ---------------------------------------------------------------------------
// Cubic splines (clamped) for manufactured profiles
// ---------------------------------------------------------------------------

/// Clamped cubic spline on a strictly increasing grid.
#[derive(Debug, Clone)]
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
}

impl CubicSpline {
    /// Build with prescribed end slopes.
    fn clamped(xs: Vec<f64>, ys: Vec<f64>, slope_left: f64, slope_right: f64) -> Self {
        let n = xs.len();
        assert!(n >= 3);
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        // Tridiagonal system for the knot second derivatives.
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut lower = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        upper[0] = h[0];
        rhs[0] = 6.0 * ((ys[1] - ys[0]) / h[0] - slope_left);
        for i in 1..n - 1 {
            lower[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            upper[i] = h[i];
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        lower[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope_right - (ys[n - 1] - ys[n - 2]) / h[n - 2]);
        // Thomas algorithm.
        for i in 1..n {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = (rhs[i] - upper[i] * m2[i + 1]) / diag[i];
        }
        CubicSpline { xs, ys, m2 }
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 2] {
            return n - 2;
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m2[i] + (b * b * b - b) * self.m2[i + 1]) * h * h / 6.0
    }

    /// Exact integral of the cubic pieces over one knot interval.
    fn integral_segment(&self, i: usize) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        0.5 * h * (self.ys[i] + self.ys[i + 1]) - h * h * h * (self.m2[i] + self.m2[i + 1]) / 24.0
    }
}

/// Fourth-order one-sided slope estimate at either end of a sampled array.
fn end_slope(h: f64, ys: &[f64], left: bool) -> f64 {
    let n = ys.len();
    if left {
        (-25.0 * ys[0] + 48.0 * ys[1] - 36.0 * ys[2] + 16.0 * ys[3] - 3.0 * ys[4]) / (12.0 * h)
    } else {
        (25.0 * ys[n - 1] - 48.0 * ys[n - 2] + 36.0 * ys[n - 3] - 16.0 * ys[n - 4]
            + 3.0 * ys[n - 5])
            / (12.0 * h)
    }
}

// ---------------------------------------------------------------------------
// Serrin pairs
// ---------------------------------------------------------------------------

/// A manufactured Serrin configuration on a flat ball: the radial solution
/// `f` of `lap f = phi(f)` with `f = 0` on the boundary, together with the
/// nonlinearity `phi`, its primitive `Phi` (vanishing at 0), and the
/// overdetermined boundary constant `R`.
#[derive(Debug, Clone)]
pub struct SerrinPair {
    pub r0: f64,
    /// `phi(0)`, the Laplacian on the boundary level.
    pub phi0: f64,
    /// `R` as the (constant) boundary normal derivative.
    pub r_boundary: f64,
    /// `R` recomputed as `(1/|M|) int_Omega phi(f)`.
    pub r_volume: f64,
    f_spline: CubicSpline,
    fp_spline: CubicSpline,
    fpp_spline: CubicSpline,
    /// `lap f` as a function of radius.
    phi_spline: CubicSpline,
    /// `Phi(f(r))` as a function of radius (`Phi(0) = 0` at `r = r0`).
    bigphi_spline: CubicSpline,
    f_min: f64,
}

/// Build a Serrin pair from a radial profile `f(r)` on `[0, r0]` (flat
/// ambient space): the profile is sampled, differentiated by five-point
/// central differences with even reflection through the origin, checked for
/// strict monotonicity, and inverted through a cubic spline so that the
/// nonlinearity `phi` is a genuine function of the solution value.
pub fn serrin_pair_manufacture(
    profile: impl Fn(f64) -> f64,
    r0: f64,
) -> Result<SerrinPair> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("ball radius {r0} must be positive")));
    }
    let n = SERRIN_SAMPLES;
    let h = r0 / (n - 1) as f64;
    let rs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let fs: Vec<f64> = rs.iter().map(|&r| profile(r)).collect();
    for i in 1..n {
        if !(fs[i] > fs[i - 1]) {
            return Err(Error::Inversion(format!(
                "profile is not strictly increasing near r = {:.6}",
                rs[i]
            )));
        }
        if !fs[i].is_finite() {
            return Err(Error::Inversion(format!("profile not finite at r = {:.6}", rs[i])));
        }
    }
    // Five-point central differences; radial profiles extend evenly through
    // the origin and smoothly past r0.
    let sample = |r: f64| profile(r.abs());
    let mut fp = vec![0.0; n];
    let mut fpp = vec![0.0; n];
    for i in 0..n {
        let r = rs[i];
        let (m2, m1, p1, p2) =
            (sample(r - 2.0 * h), sample(r - h), sample(r + h), sample(r + 2.0 * h));
        fp[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        fpp[i] = (-p2 + 16.0 * p1 - 30.0 * fs[i] + 16.0 * m1 - m2) / (12.0 * h * h);
    }
    let mut phi = vec![0.0; n];
    for i in 0..n {
        phi[i] = if rs[i] == 0.0 { 3.0 * fpp[i] } else { fpp[i] + 2.0 * fp[i] / rs[i] };
    }

    let f_spline = CubicSpline::clamped(rs.clone(), fs.clone(), fp[0], fp[n - 1]);
    let fp_spline =
        CubicSpline::clamped(rs.clone(), fp.clone(), end_slope(h, &fp, true), end_slope(h, &fp, false));
    let fpp_spline = CubicSpline::clamped(
        rs.clone(),
        fpp.clone(),
        end_slope(h, &fpp, true),
        end_slope(h, &fpp, false),
    );
    let phi_spline = CubicSpline::clamped(
        rs.clone(),
        phi.clone(),
        end_slope(h, &phi, true),
        end_slope(h, &phi, false),
    );

    // Phi(f(r)) = int_{r0}^{r} phi(s) f'(s) ds, accumulated segment-exactly
    // on a spline of the integrand.
    let integrand: Vec<f64> = (0..n).map(|i| phi[i] * fp[i]).collect();
    let g_spline = CubicSpline::clamped(
        rs.clone(),
        integrand.clone(),
        end_slope(h, &integrand, true),
        end_slope(h, &integrand, false),
    );
    let mut bigphi = vec![0.0; n];
    for i in (0..n - 1).rev() {
        bigphi[i] = bigphi[i + 1] - g_spline.integral_segment(i);
    }
    let bigphi_slope_left = integrand[0];
    let bigphi_slope_right = integrand[n - 1];
    let bigphi_spline =
        CubicSpline::clamped(rs.clone(), bigphi, bigphi_slope_left, bigphi_slope_right);

    // R by both routes: boundary mean and volume mean of phi(f).
    let r_boundary = fp[n - 1];
    let (qx, qw) = gauss_legendre(64);
    let mut vol = 0.0;
    for (x, w) in qx.iter().zip(&qw) {
        let r = 0.5 * r0 * (x + 1.0);
        vol += 0.5 * r0 * w * phi_spline.eval(r) * r * r;
    }
    let r_volume = vol / (r0 * r0);

    Ok(SerrinPair {
        r0,
        phi0: phi[n - 1],
        r_boundary,
        r_volume,
        f_spline,
        fp_spline,
        fpp_spline,
        phi_spline,
        bigphi_spline,
        f_min: fs[0],
    })
}

impl SerrinPair {
    pub fn f(&self, r: f64) -> f64 {
        self.f_spline.eval(r)
    }

    pub fn f_prime(&self, r: f64) -> f64 {
        self.fp_spline.eval(r)
    }

    /// Invert the profile: the radius where `f = v` (bisection on the
    /// monotone spline).
    pub fn invert(&self, v: f64) -> f64 {
        let v = v.clamp(self.f_min, 0.0);
        let (mut lo, mut hi) = (0.0, self.r0);
        let flo = self.f_min - v;
        let mut ga = flo;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            let gm = self.f_spline.eval(mid) - v;
            if ga * gm <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                ga = gm;
            }
        }
        0.5 * (lo + hi)
    }

    /// The nonlinearity as a function of the solution value.
    pub fn phi(&self, v: f64) -> f64 {
        self.phi_spline.eval(self.invert(v))
    }

    /// Primitive of `phi` vanishing at `v = 0`.
    pub fn big_phi(&self, v: f64) -> f64 {
        self.bigphi_spline.eval(self.invert(v))
    }

    /// Disagreement between the two routes to `R`.
    pub fn r_discrepancy(&self) -> f64 {
        (self.r_boundary - self.r_volume).abs()
    }

    /// The solution as an ambient radial field.
    pub fn ambient_field(&self) -> AmbientField {
        let f = self.f_spline.clone();
        let fp = self.fp_spline.clone();
        let fpp = self.fpp_spline.clone();
        AmbientField::radial(Spaceform::Euclidean, move |r| {
            [f.eval(r), fp.eval(r), fpp.eval(r)]
        })
    }
}

/// Term-by-term evaluation of the Serrin integral identity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SerrinResidual {
    /// `int_Omega (-f) |tr-less hess f|^2`.
    pub lhs: f64,
    /// Sum of the boundary term and the three volume terms.
    pub rhs: f64,
    pub residual: f64,
    pub boundary_term: f64,
    pub volume_terms: [f64; 3],
    /// Cross-check gap between the two computations of `R`.
    pub r_discrepancy: f64,
}

/// Verify the Serrin-type identity for a manufactured pair on the flat ball
/// of radius `pair.r0`:
///
/// `int_Omega (-f) |tr-less hess f|^2`
/// ` = 1/2 int_M (dnu f - dnu q)(|grad f|^2 - R^2)`
/// `  + R^2/2 int_Omega (phi(f) - phi(0))`
/// `  + int_Omega (phi(f) - phi(0)) (3/2 Phi(f) - 2/3 f phi(f))`
/// `  + phi(0)/2 int_Omega (Phi(f) - f phi(f))`,
///
/// with `q = phi(0) |x|^2 / 6` the torsion-type comparison and
/// `R` the overdetermined boundary gradient.
pub fn serrin_identity_residual(pair: &SerrinPair, resolution: usize) -> Result<SerrinResidual> {
    let space = Spaceform::Euclidean;
    let grid = Arc::new(crate::hypersurface::SphereGrid::new(resolution, 2 * resolution)?);
    let m = Hypersurface::geodesic_sphere(space, grid, pair.r0)?;
    let cf = m.curvature_field()?;
    let field = pair.ambient_field();
    let rr = pair.r_boundary;

    // Boundary term against the torsion-type comparison q = phi0 r^2 / 6.
    let phi0 = pair.phi0;
    let q = AmbientField::radial(space, move |r| {
        [phi0 * r * r / 6.0, phi0 * r / 3.0, phi0 / 3.0]
    });
    let td_f = tangential_calculus(&m, &cf, &field);
    let td_q = tangential_calculus(&m, &cf, &q);
    let n_nodes = cf.grid.len();
    let mut bvals = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let grad_sq = {
            let g = field.gradient(cf.pos[i]);
            g.norm_squared()
        };
        bvals[i] = 0.5 * (td_f.normal_deriv[i] - td_q.normal_deriv[i]) * (grad_sq - rr * rr);
    }
    let boundary_term = cf.integrate(&bvals);

    let n_radial = resolution.max(16);
    let lhs = m.integrate_domain(n_radial, |r, xi| {
        let ch = covariant_hessian(space, &field, r * xi).expect("flat chart");
        (-field.value(r * xi)) * ch.cs_deficit.max(0.0)
    });
    let t2 = m.integrate_domain(n_radial, |r, xi| {
        let v = field.value(r * xi);
        0.5 * rr * rr * (pair.phi(v) - phi0)
    });
    let t3 = m.integrate_domain(n_radial, |r, xi| {
        let v = field.value(r * xi);
        let pv = pair.phi(v);
        (pv - phi0) * (1.5 * pair.big_phi(v) - (2.0 / 3.0) * v * pv)
    });
    let t4 = m.integrate_domain(n_radial, |r, xi| {
        let v = field.value(r * xi);
        0.5 * phi0 * (pair.big_phi(v) - v * pair.phi(v))
    });
    let rhs = boundary_term + t2 + t3 + t4;
    Ok(SerrinResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0),
        boundary_term,
        volume_terms: [t2, t3, t4],
        r_discrepancy: pair.r_discrepancy(),
    })
}

// ---------------------------------------------------------------------------
// Steklov identity
// ---------------------------------------------------------------------------

/// Rayleigh quotient, identity residual, and positive-part deficit for the
/// Steklov-type boundary identity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteklovReport {
    /// `|lhs - rhs| / (|lhs| + |rhs| + 1)` for
    /// `3 int_Omega |tr-less hess w|^2 = 2 int_M (p - 3 H_1) dnu(w)^2`.
    pub residual: f64,
    /// `p = int_Omega (lap w)^2 / int_M dnu(w)^2`.
    pub rayleigh: f64,
    /// `int_M (p - 3 H_1)_+ dA`.
    pub deficit: f64,
    /// `int_Omega |tr-less hess w|^2`.
    pub traceless_volume: f64,
}

/// Evaluate the Steklov-type identity on a flat domain for a field `w`
/// vanishing on the boundary `m` (max node value at most 1e-8).
pub fn steklov_identity_residual(
    m: &Hypersurface,
    w: &AmbientField,
    n_radial: usize,
) -> Result<SteklovReport> {
    if m.space.k() != 0.0 {
        return Err(Error::Unsupported(
            "the Steklov identity is implemented for the flat ambient space".into(),
        ));
    }
    let cf = m.curvature_field()?;
    let td = tangential_calculus(m, &cf, w);
    let worst = td.value.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if worst > 1e-8 {
        return Err(Error::BoundaryValue(format!(
            "field does not vanish on the boundary: max |w| = {worst:.3e}"
        )));
    }

    let lap_sq = m.integrate_domain(n_radial, |r, xi| {
        let ch = covariant_hessian(m.space, w, r * xi).expect("flat chart");
        ch.laplacian * ch.laplacian
    });
    let traceless_volume = m.integrate_domain(n_radial, |r, xi| {
        let ch = covariant_hessian(m.space, w, r * xi).expect("flat chart");
        ch.cs_deficit.max(0.0)
    });

    let n_nodes = cf.grid.len();
    let dn_sq: Vec<f64> = td.normal_deriv.iter().map(|d| d * d).collect();
    let dn_total = cf.integrate(&dn_sq);
    if dn_total <= 0.0 {
        return Err(Error::Degenerate("vanishing boundary flux".into()));
    }
    let rayleigh = lap_sq / dn_total;

    let mut rhs_vals = vec![0.0; n_nodes];
    let mut def_vals = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        let gap = rayleigh - 3.0 * cf.hk[i][1];
        rhs_vals[i] = 2.0 * gap * dn_sq[i];
        def_vals[i] = gap.max(0.0);
    }
    let rhs = cf.integrate(&rhs_vals);
    let lhs = 3.0 * traceless_volume;
    Ok(SteklovReport {
        residual: (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + 1.0),
        rayleigh,
        deficit: cf.integrate(&def_vals),
        traceless_volume,
    })
}

// ---------------------------------------------------------------------------
// Hopf gradient check
// ---------------------------------------------------------------------------

/// Radial solutions of `lap f + a f = const` on a geodesic ball that admit
/// a Hopf-lemma boundary-gradient bound.
pub trait HopfCandidate {
    fn space(&self) -> Spaceform;
    fn ball_radius(&self) -> f64;
    fn radial_derivative(&self, r: f64) -> f64;
    /// Zeroth-order coefficient `a` of the governing operator.
    fn zeroth_order_coefficient(&self) -> f64;
}

impl HopfCandidate for TorsionSolution {
    fn space(&self) -> Spaceform {
        self.space
    }
    fn ball_radius(&self) -> f64 {
        self.r0
    }
    fn radial_derivative(&self, r: f64) -> f64 {
        self.derivative(r)
    }
    fn zeroth_order_coefficient(&self) -> f64 {
        3.0 * self.space.k()
    }
}

impl HopfCandidate for SerrinPair {
    fn space(&self) -> Spaceform {
        Spaceform::Euclidean
    }
    fn ball_radius(&self) -> f64 {
        self.r0
    }
    fn radial_derivative(&self, r: f64) -> f64 {
        self.f_prime(r)
    }
    fn zeroth_order_coefficient(&self) -> f64 {
        0.0
    }
}

/// Hopf-lemma diagnostics for a radial candidate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HopfReport {
    /// Outward gradient on the boundary sphere.
    pub min_boundary_gradient: f64,
    pub positive: bool,
    /// Whether `a <= (n+1) max(0, K)`, the regime in which the boundary
    /// gradient of a subsolution must be strictly positive.
    pub precondition_ok: bool,
}

pub fn hopf_gradient_check(candidate: &impl HopfCandidate) -> HopfReport {
    let r0 = candidate.ball_radius();
    // Sample approaching the boundary from inside; the minimum guards
    // against a grazing (degenerate) touch.
    let mut min_grad = f64::INFINITY;
    for i in 0..8 {
        let r = r0 * (1.0 - 1e-6 * i as f64);
        min_grad = min_grad.min(candidate.radial_derivative(r));
    }
    let a = candidate.zeroth_order_coefficient();
    let cap = (N + 1.0) * candidate.space().k().max(0.0);
    HopfReport {
        min_boundary_gradient: min_grad,
        positive: min_grad > 0.0,
        precondition_ok: a <= cap + 1e-14,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::SphereGrid;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn grid(nt: usize, np: usize) -> Arc<SphereGrid> {
        Arc::new(SphereGrid::new(nt, np).unwrap())
    }

    fn sphere(space: Spaceform, r: f64, nt: usize, np: usize) -> Hypersurface {
        Hypersurface::geodesic_sphere(space, grid(nt, np), r).unwrap()
    }

    #[test]
    fn torsion_closed_forms() {
        // Flat: f = (r^2 - 1)/6, f(0) = -1/6, boundary gradient 1/3.
        let flat = torsion_solve_ball(Spaceform::Euclidean, 1.0).unwrap();
        assert_relative_eq!(flat.value(0.0), -1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(flat.normal_derivative(), 1.0 / 3.0, epsilon = 1e-15);

        // Hyperbolic ball of radius 1: dnu f = tanh(1)/3, f(0) = (1 - sech 1)/(-3).
        let hyp = torsion_solve_ball(Spaceform::Hyperbolic, 1.0).unwrap();
        assert_relative_eq!(hyp.normal_derivative(), 0.25386471865192165, epsilon = 1e-14);
        assert_relative_eq!(hyp.value(0.0), -0.11731524211203818, epsilon = 1e-14);

        // Spherical ball of radius pi/4: dnu f = tan(pi/4)/3 = 1/3.
        let sph = torsion_solve_ball(Spaceform::Spherical, std::f64::consts::FRAC_PI_4).unwrap();
        assert_relative_eq!(sph.normal_derivative(), 1.0 / 3.0, epsilon = 1e-14);

        for sol in [flat, hyp, sph] {
            assert!(sol.ode_residual(200) <= 1e-10);
            assert!(sol.value(0.5 * sol.r0) < 0.0, "interior must be negative");
            assert_relative_eq!(sol.value(sol.r0), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn torsion_rejects_bad_radii() {
        assert!(torsion_solve_ball(Spaceform::Euclidean, 0.0).is_err());
        assert!(torsion_solve_ball(Spaceform::Spherical, 1.6).is_err());
    }

    #[test]
    fn reilly_vanishes_for_linear_fields() {
        // f = x_1 in flat space: both sides vanish identically.
        let m = sphere(Spaceform::Euclidean, 1.0, 24, 48);
        let f = AmbientField::linear(Vector3::new(1.0, 0.0, 0.0), 0.0);
        let rep = reilly_residual(&m, &f, 24).unwrap();
        assert!(rep.lhs.abs() <= 1e-10, "lhs = {:.3e}", rep.lhs);
        assert!(rep.rhs.abs() <= 1e-10, "rhs = {:.3e}", rep.rhs);
    }

    #[test]
    fn reilly_flat_torsion_value() {
        // f = (r^2-1)/6 on the unit ball: lap f = 1, |hess f|^2 = 1/3, so
        // the volume side is (2/3) |B| = 8 pi / 9.
        let m = sphere(Spaceform::Euclidean, 1.0, 24, 48);
        let f = torsion_solve_ball(Spaceform::Euclidean, 1.0).unwrap().ambient_field();
        let rep = reilly_residual(&m, &f, 32).unwrap();
        assert_relative_eq!(rep.lhs, 2.7925268031909273, max_relative = 1e-10);
        assert!(rep.residual <= 1e-8, "residual = {:.3e}", rep.residual);
    }

    #[test]
    fn reilly_holds_on_curved_balls() {
        for (space, r0) in [(Spaceform::Hyperbolic, 1.0), (Spaceform::Spherical, 0.8)] {
            let m = sphere(space, r0, 24, 48);
            let f = torsion_solve_ball(space, r0).unwrap().ambient_field();
            let rep = reilly_residual(&m, &f, 32).unwrap();
            assert!(
                rep.residual <= 1e-7,
                "{space:?}: residual = {:.3e}",
                rep.residual
            );
            assert!(rep.lhs > 0.0);
        }
    }

    #[test]
    fn reilly_holds_for_polynomials_on_ellipsoids() {
        // An arbitrary low-degree polynomial on a flat ellipsoid: the
        // identity holds with no symmetry to lean on.
        let g = grid(28, 56);
        let m = Hypersurface::ellipsoid(Spaceform::Euclidean, g, 1.2, 1.0, 0.9).unwrap();
        let p = crate::ambient::Poly3::new(vec![
            (0.4, [2, 1, 0]),
            (-0.3, [0, 3, 0]),
            (0.2, [1, 1, 1]),
            (0.7, [1, 0, 0]),
            (-0.1, [0, 0, 4]),
        ]);
        let f = AmbientField::polynomial(p);
        let rep = reilly_residual(&m, &f, 32).unwrap();
        assert!(rep.residual <= 1e-6, "residual = {:.3e}", rep.residual);
    }

    #[test]
    fn serrin_manufacture_recovers_torsion() {
        let pair = serrin_pair_manufacture(|r| (r * r - 1.0) / 6.0, 1.0).unwrap();
        for v in [-0.16, -0.1, -0.05, -0.01, 0.0] {
            assert_relative_eq!(pair.phi(v), 1.0, epsilon = 1e-9);
            assert_relative_eq!(pair.big_phi(v), v, epsilon = 1e-9);
        }
        assert_relative_eq!(pair.r_boundary, 1.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(pair.r_volume, 1.0 / 3.0, epsilon = 1e-8);
        assert_relative_eq!(pair.phi0, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn serrin_manufacture_quartic_and_exponential() {
        // f = (r^2-1)/6 + (r^4-1)/60 gives lap f = 1 + r^2/3.
        let quartic =
            serrin_pair_manufacture(|r| (r * r - 1.0) / 6.0 + (r.powi(4) - 1.0) / 60.0, 1.0)
                .unwrap();
        for r in [0.15_f64, 0.4, 0.65, 0.9] {
            let v = (r * r - 1.0) / 6.0 + (r.powi(4) - 1.0) / 60.0;
            assert_relative_eq!(quartic.phi(v), 1.0 + r * r / 3.0, epsilon = 1e-8);
        }
        // f = (e^{r^2} - e)/4 gives lap f = (3/2 + r^2) e^{r^2}.
        let exp = serrin_pair_manufacture(|r| ((r * r).exp() - 1.0_f64.exp()) / 4.0, 1.0).unwrap();
        for r in [0.2_f64, 0.5, 0.8] {
            let v = ((r * r).exp() - 1.0_f64.exp()) / 4.0;
            assert_relative_eq!(exp.phi(v), (1.5 + r * r) * (r * r).exp(), epsilon = 1e-7);
        }
        assert!(quartic.r_discrepancy() <= 1e-8);
    }

    #[test]
    fn serrin_manufacture_rejects_non_monotone_profiles() {
        match serrin_pair_manufacture(|r| (3.0 * r).sin(), 2.0) {
            Err(Error::Inversion(_)) => {}
            other => panic!("expected inversion error, got {other:?}"),
        }
    }

    #[test]
    fn serrin_identity_torsion_is_exactly_rigid() {
        let pair = serrin_pair_manufacture(|r| (r * r - 1.0) / 6.0, 1.0).unwrap();
        let rep = serrin_identity_residual(&pair, 16).unwrap();
        assert!(rep.lhs.abs() <= 1e-12, "lhs = {:.3e}", rep.lhs);
        assert!(rep.boundary_term.abs() <= 1e-12);
        for t in rep.volume_terms {
            assert!(t.abs() <= 1e-9, "volume term = {t:.3e}");
        }
    }

    #[test]
    fn serrin_identity_quartic_profile() {
        let pair =
            serrin_pair_manufacture(|r| (r * r - 1.0) / 6.0 + (r.powi(4) - 1.0) / 60.0, 1.0)
                .unwrap();
        let rep = serrin_identity_residual(&pair, 20).unwrap();
        // Frozen from 1d quadrature of the same profile.
        assert_relative_eq!(rep.lhs, 9.169624647963793e-4, max_relative = 1e-6);
        assert!(rep.residual <= 1e-8, "residual = {:.3e}", rep.residual);
    }

    #[test]
    fn serrin_identity_scales_with_the_profile() {
        // Doubling the profile doubles phi and R consistently; the identity
        // must keep holding with the same normalized accuracy.
        let pair = serrin_pair_manufacture(
            |r| 2.0 * ((r * r - 1.0) / 6.0 + (r.powi(4) - 1.0) / 60.0),
            1.0,
        )
        .unwrap();
        let rep = serrin_identity_residual(&pair, 20).unwrap();
        assert!(rep.residual <= 1e-8, "residual = {:.3e}", rep.residual);
        assert_relative_eq!(rep.lhs, 8.0 * 9.169624647963793e-4, max_relative = 1e-6);
    }

    #[test]
    fn steklov_balls_are_critical() {
        // Unit ball, w = (1-|x|^2)/2: rayleigh = 3 = 3 H_1, all deficits 0.
        let m = sphere(Spaceform::Euclidean, 1.0, 20, 40);
        let w = AmbientField::quadratic(
            -0.5 * Matrix3::identity(),
            Vector3::zeros(),
            0.5,
        );
        let rep = steklov_identity_residual(&m, &w, 24).unwrap();
        assert_relative_eq!(rep.rayleigh, 3.0, max_relative = 1e-10);
        assert!(rep.residual <= 1e-10);
        assert!(rep.deficit <= 1e-8);

        // Radius-2 ball, w = (4-|x|^2)/4: rayleigh = 3/2 = 3 H_1.
        let m2 = sphere(Spaceform::Euclidean, 2.0, 20, 40);
        let w2 = AmbientField::quadratic(
            -0.25 * Matrix3::identity(),
            Vector3::zeros(),
            1.0,
        );
        let rep2 = steklov_identity_residual(&m2, &w2, 24).unwrap();
        assert_relative_eq!(rep2.rayleigh, 1.5, max_relative = 1e-10);
        assert!(rep2.residual <= 1e-10);
    }

    #[test]
    fn steklov_ellipsoid_identity_and_deficit() {
        // w = (1 - x^2/a^2 - y^2 - z^2)/2 on the ellipsoid (1.2, 1, 1):
        // |tr-less hess w|^2 is the constant 0.06224..., and the deficit is
        // genuinely positive.
        let g = grid(28, 56);
        let m = Hypersurface::ellipsoid(Spaceform::Euclidean, g, 1.2, 1.0, 1.0).unwrap();
        let w = AmbientField::quadratic(
            -0.5 * Matrix3::from_diagonal(&Vector3::new(1.0 / 1.44, 1.0, 1.0)),
            Vector3::zeros(),
            0.5,
        );
        let rep = steklov_identity_residual(&m, &w, 32).unwrap();
        assert!(rep.residual <= 1e-6, "residual = {:.3e}", rep.residual);
        assert!(rep.deficit > 1e-3);
        assert_relative_eq!(rep.traceless_volume, 0.3128664288760188, max_relative = 1e-6);
    }

    #[test]
    fn steklov_guards() {
        let m = sphere(Spaceform::Euclidean, 1.0, 12, 24);
        // Non-vanishing boundary values are rejected.
        let bad = AmbientField::constant(1.0);
        assert!(matches!(
            steklov_identity_residual(&m, &bad, 16),
            Err(Error::BoundaryValue(_))
        ));
        // Curved ambient spaces are not supported.
        let mh = sphere(Spaceform::Hyperbolic, 1.0, 12, 24);
        let w = AmbientField::quadratic(-0.5 * Matrix3::identity(), Vector3::zeros(), 0.5);
        assert!(matches!(
            steklov_identity_residual(&mh, &w, 16),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn hopf_checks_for_torsion_and_serrin() {
        for (space, r0) in [
            (Spaceform::Euclidean, 1.0),
            (Spaceform::Hyperbolic, 1.3),
            (Spaceform::Spherical, 0.7),
        ] {
            let sol = torsion_solve_ball(space, r0).unwrap();
            let rep = hopf_gradient_check(&sol);
            assert!(rep.positive, "{space:?}");
            assert!(rep.precondition_ok, "{space:?}");
            assert!(rep.min_boundary_gradient > 0.1);
        }
        let pair =
            serrin_pair_manufacture(|r| (r * r - 1.0) / 6.0 + (r.powi(4) - 1.0) / 60.0, 1.0)
                .unwrap();
        let rep = hopf_gradient_check(&pair);
        assert!(rep.positive);
        // The check samples slightly inside the boundary, so the minimum
        // sits below f'(r0) = 0.4 by about f'' * 7e-6.
        assert_relative_eq!(rep.min_boundary_gradient, 0.4, epsilon = 1e-5);
    }
}
