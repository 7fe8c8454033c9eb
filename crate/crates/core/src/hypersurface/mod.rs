//! Closed starshaped surfaces as radial graphs over the spectral sphere grid,
//! and the curvature data extracted from them.
//!
//! A surface is `xi -> exp(rho(xi) * d/dr)` in geodesic polar coordinates; in
//! the conformal chart it is the embedding `X = s(rho) * xi` with the
//! chart-radius bridge `s`. All curvature is computed in the chart: Euclidean
//! first/second fundamental forms from spectral derivatives of `X`, then the
//! conformal Weingarten transform `A = e^{-psi} (Ahat + dpsi(Nhat) id)` and
//! `g = e^{2 psi} ghat`, which is exact rather than a discretization of the
//! ambient connection.

pub mod fit;
pub mod grid;

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::ambient::AmbientField;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::spaceform::Spaceform;
use crate::symfunc;
pub use grid::SphereGrid;

/// Metric determinants below this are treated as a degenerate graph.
pub const METRIC_DET_FLOOR: f64 = 1e-14;

/// A closed starshaped hypersurface: geodesic radius per grid node.
#[derive(Debug, Clone)]
pub struct Hypersurface {
    pub space: Spaceform,
    pub grid: Arc<SphereGrid>,
    /// Geodesic radius of the graph at each node (row-major theta-then-phi).
    pub rho: Vec<f64>,
}

/// Pointwise curvature data of a surface, stored node-parallel.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub space: Spaceform,
    pub grid: Arc<SphereGrid>,
    /// Chart position of each node.
    pub pos: Vec<Vector3<f64>>,
    /// Coordinate tangent vectors of the embedding.
    pub x_theta: Vec<Vector3<f64>>,
    pub x_phi: Vec<Vector3<f64>>,
    /// Euclidean first fundamental form in the chart.
    pub ghat: Vec<Matrix2<f64>>,
    /// Induced ambient metric `g = e^{2 psi} ghat`.
    pub g: Vec<Matrix2<f64>>,
    /// Ambient second fundamental form (outward normal).
    pub h: Vec<Matrix2<f64>>,
    /// Principal curvatures, ascending.
    pub kappa: Vec<[f64; 2]>,
    /// Normalized mean curvatures `[H_0, H_1, H_2]`.
    pub hk: Vec<[f64; 3]>,
    /// `|A0|^2`, the squared norm of the traceless shape operator.
    pub a_traceless_sq: Vec<f64>,
    /// Support function `u = gbar(theta d/dr, nu)`.
    pub support: Vec<f64>,
    /// Euclidean-unit outward normal in the chart (`nu = e^{-psi} * this`).
    pub normal_chart: Vec<Vector3<f64>>,
    /// Conformal factor `e^{psi}` at each node.
    pub conf: Vec<f64>,
    /// Area density against the round measure: `dA = area_element * d sigma`.
    pub area_element: Vec<f64>,
}

/// Per-node output of [`tangential_calculus`].
#[derive(Debug, Clone)]
pub struct TangentialData {
    /// Restriction of the field to the surface.
    pub value: Vec<f64>,
    /// `d f(nu)` against the outward ambient unit normal.
    pub normal_deriv: Vec<f64>,
    /// `|grad_M f|^2` in the induced metric.
    pub grad_sq: Vec<f64>,
    /// Surface Laplacian of the restriction.
    pub laplacian: Vec<f64>,
    /// `h(grad_M f, grad_M f)`.
    pub h_grad_grad: Vec<f64>,
}

impl Hypersurface {
    /// Validate and wrap a radius table. Radii must be positive, finite, and
    /// below the spaceform's domain cap.
    pub fn new(space: Spaceform, grid: Arc<SphereGrid>, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != grid.len() {
            return Err(Error::Construction(format!(
                "radius table has {} entries for a grid of {} nodes",
                rho.len(),
                grid.len()
            )));
        }
        let cap = space.domain_radius_cap();
        let bad: Vec<usize> = rho
            .iter()
            .enumerate()
            .filter(|(_, &r)| !(r.is_finite() && r > 0.0 && r <= cap))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::Precondition {
                op: "Hypersurface::new",
                what: format!("radius outside (0, {cap:.6})"),
                nodes: bad,
            });
        }
        Ok(Hypersurface { space, grid, rho })
    }

    /// Build from a radial function of the unit direction.
    pub fn build(
        space: Spaceform,
        grid: Arc<SphereGrid>,
        radial: impl Fn(Vector3<f64>) -> f64,
    ) -> Result<Self> {
        let rho = grid.nodes.iter().map(|&xi| radial(xi)).collect();
        Self::new(space, grid, rho)
    }

    /// Geodesic sphere of radius `r0` about the star center.
    pub fn geodesic_sphere(space: Spaceform, grid: Arc<SphereGrid>, r0: f64) -> Result<Self> {
        Self::build(space, grid, |_| r0)
    }

    /// Euclidean ellipsoid with semi-axes `(a, b, c)` as a radial graph
    /// (admissible for any spaceform whose cap exceeds the largest radius;
    /// the quadric is read in chart coordinates).
    pub fn ellipsoid(
        space: Spaceform,
        grid: Arc<SphereGrid>,
        a: f64,
        b: f64,
        c: f64,
    ) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(Error::Construction("ellipsoid semi-axes must be positive".into()));
        }
        Self::build(space, grid, |xi| {
            let q = (xi.x / a).powi(2) + (xi.y / b).powi(2) + (xi.z / c).powi(2);
            let s = 1.0 / q.sqrt();
            // chart radius -> geodesic radius
            space.geodesic_radius(s).unwrap_or(f64::NAN)
        })
    }

    /// Chart positions of all nodes.
    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.grid
            .nodes
            .iter()
            .zip(&self.rho)
            .map(|(&xi, &r)| self.space.chart_radius(r).map(|s| s * xi).unwrap_or(xi))
            .collect()
    }

    /// Full curvature data. One spectral differentiation pass over the
    /// embedding plus pointwise 2x2 algebra.
    pub fn curvature_field(&self) -> Result<CurvatureField> {
        let grid = &self.grid;
        let n = grid.len();
        let space = self.space;

        // Embedding components as node fields.
        let pos = self.positions();
        let comps: [Vec<f64>; 3] = [
            pos.iter().map(|p| p.x).collect(),
            pos.iter().map(|p| p.y).collect(),
            pos.iter().map(|p| p.z).collect(),
        ];
        let mut dth = Vec::with_capacity(3);
        let mut dph = Vec::with_capacity(3);
        let mut dthth = Vec::with_capacity(3);
        let mut dthph = Vec::with_capacity(3);
        let mut dphph = Vec::with_capacity(3);
        for c in &comps {
            dth.push(grid.d_theta(c));
            dph.push(grid.d_phi(c));
            dthth.push(grid.d_theta_theta(c));
            dthph.push(grid.d_theta_phi(c));
            dphph.push(grid.d_phi_phi(c));
        }
        let vec_at = |f: &[Vec<f64>], i: usize| Vector3::new(f[0][i], f[1][i], f[2][i]);

        let mut out = CurvatureField {
            space,
            grid: Arc::clone(grid),
            pos,
            x_theta: Vec::with_capacity(n),
            x_phi: Vec::with_capacity(n),
            ghat: Vec::with_capacity(n),
            g: Vec::with_capacity(n),
            h: Vec::with_capacity(n),
            kappa: Vec::with_capacity(n),
            hk: Vec::with_capacity(n),
            a_traceless_sq: Vec::with_capacity(n),
            support: Vec::with_capacity(n),
            normal_chart: Vec::with_capacity(n),
            conf: Vec::with_capacity(n),
            area_element: Vec::with_capacity(n),
        };

        let mut flipped = 0usize;
        for i in 0..n {
            let xt = vec_at(&dth, i);
            let xp = vec_at(&dph, i);
            let x = out.pos[i];
            let xi = grid.nodes[i];

            let e = xt.dot(&xt);
            let f = xt.dot(&xp);
            let gg = xp.dot(&xp);
            let det = e * gg - f * f;
            if det.abs() < METRIC_DET_FLOOR {
                return Err(Error::Degenerate(format!(
                    "metric determinant {det:.3e} below floor at node {i}"
                )));
            }
            let w = det.sqrt();
            let mut nhat = xt.cross(&xp) / w;
            if nhat.dot(&xi) < 0.0 {
                nhat = -nhat;
                flipped += 1;
            }

            // Euclidean second fundamental form with the outward normal and
            // the sign convention that makes the unit sphere have kappa = +1.
            let hhat = Matrix2::new(
                -vec_at(&dthth, i).dot(&nhat),
                -vec_at(&dthph, i).dot(&nhat),
                -vec_at(&dthph, i).dot(&nhat),
                -vec_at(&dphph, i).dot(&nhat),
            );
            let ghat = Matrix2::new(e, f, f, gg);

            // Conformal transform: h = e^{psi} (hhat + dpsi(Nhat) ghat),
            // g = e^{2 psi} ghat; both are exact identities of the chart.
            let ef = space.conf_factor(x);
            let dpsi_n = space.psi_gradient(x).dot(&nhat);
            let h = ef * (hhat + dpsi_n * ghat);
            let g = ef * ef * ghat;

            // Principal curvatures: whiten with the Cholesky factor of g so
            // the eigenproblem is symmetric (guaranteed real).
            let l11 = g[(0, 0)].sqrt();
            let l21 = g[(0, 1)] / l11;
            let l22 = (g[(1, 1)] - l21 * l21).max(METRIC_DET_FLOOR).sqrt();
            // B = L^{-1} h L^{-T} for lower-triangular L.
            let b11 = h[(0, 0)] / (l11 * l11);
            let b21 = (h[(0, 1)] / l11 - l21 * b11) / l22;
            let b22 = (h[(1, 1)] - 2.0 * l21 * (h[(0, 1)] / l11) + l21 * l21 * b11) / (l22 * l22);
            let mean = 0.5 * (b11 + b22);
            let dev = (0.25 * (b11 - b22).powi(2) + b21 * b21).max(0.0).sqrt();
            let kappa = [mean - dev, mean + dev];

            let hk = symfunc::normalized_all(&kappa);
            let r = self.rho[i];
            let support = space.theta(r) * xi.dot(&nhat);

            out.x_theta.push(xt);
            out.x_phi.push(xp);
            out.ghat.push(ghat);
            out.g.push(g);
            out.h.push(h);
            out.kappa.push(kappa);
            out.hk.push([hk[0], hk[1], hk[2]]);
            out.a_traceless_sq.push(symfunc::traceless_norm_sq(&kappa));
            out.support.push(support);
            out.normal_chart.push(nhat);
            out.conf.push(ef);
            out.area_element.push(ef * ef * w / grid.sin_theta(i));
        }
        if flipped != 0 && flipped != n {
            return Err(Error::Degenerate(format!(
                "inconsistent orientation: {flipped} of {n} normals flipped"
            )));
        }
        Ok(out)
    }

    /// Integrate `integrand(r, xi)` over the enclosed domain against the
    /// warped volume element `theta(r)^2 dr dsigma`, with an `n_radial`-point
    /// Gauss-Legendre rule along every ray.
    pub fn integrate_domain(
        &self,
        n_radial: usize,
        integrand: impl Fn(f64, Vector3<f64>) -> f64,
    ) -> f64 {
        let (qx, qw) = gauss_legendre(n_radial);
        let mut total = 0.0;
        for (i, &xi) in self.grid.nodes.iter().enumerate() {
            let rho = self.rho[i];
            let half = 0.5 * rho;
            let mut ray = 0.0;
            for (x, w) in qx.iter().zip(&qw) {
                let r = half * (x + 1.0);
                let th = self.space.theta(r);
                ray += half * w * th * th * integrand(r, xi);
            }
            total += self.grid.weights[i] * ray;
        }
        total
    }
}

impl CurvatureField {
    /// Integrate a node field over the surface.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.grid.len());
        values
            .iter()
            .zip(&self.area_element)
            .zip(&self.grid.weights)
            .map(|((v, a), w)| v * a * w)
            .sum()
    }

    /// Surface area `|M|`.
    pub fn area(&self) -> f64 {
        self.area_element
            .iter()
            .zip(&self.grid.weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    /// Max-norm of the traceless shape operator over the surface.
    pub fn a_traceless_max(&self) -> f64 {
        self.a_traceless_sq
            .iter()
            .map(|s| s.sqrt())
            .fold(0.0, f64::max)
    }

    /// Nodes where the principal curvatures leave the Garding cone
    /// `Gamma_k`; empty means the cone condition holds everywhere.
    pub fn cone_violations(&self, k: usize) -> Vec<usize> {
        self.kappa
            .iter()
            .enumerate()
            .filter(|(_, ka)| !symfunc::in_garding_cone(&ka[..], k))
            .map(|(i, _)| i)
            .collect()
    }

    /// Smallest `H_j` margin over `j = 1..=k` and all nodes.
    pub fn cone_margin(&self, k: usize) -> f64 {
        let mut m = f64::INFINITY;
        for hk in &self.hk {
            for j in 1..=k.min(2) {
                m = m.min(hk[j]);
            }
        }
        m
    }
}

/// Surface integral of a node field (spec-level alias for
/// [`CurvatureField::integrate`]).
pub fn integrate_surface(cf: &CurvatureField, values: &[f64]) -> f64 {
    cf.integrate(values)
}

/// Restriction of an ambient field to the surface together with its first
/// tangential calculus: normal derivative, tangential gradient norm, surface
/// Laplacian, and `h(grad f, grad f)`.
///
/// The surface Laplacian is computed in the Euclidean chart (divergence of
/// the chart-tangential gradient via spectral derivatives) and converted with
/// the two-dimensional conformal identity `Delta_g = e^{-2 psi} Delta_ghat`.
pub fn tangential_calculus(
    m: &Hypersurface,
    cf: &CurvatureField,
    field: &AmbientField,
) -> TangentialData {
    let grid = &m.grid;
    let n = grid.len();

    let value: Vec<f64> = cf.pos.iter().map(|&x| field.value(x)).collect();
    let rest_t = grid.d_theta(&value);
    let rest_p = grid.d_phi(&value);

    // Chart-tangential gradient V = alpha X_theta + beta X_phi.
    let mut vx = vec![0.0; n];
    let mut vy = vec![0.0; n];
    let mut vz = vec![0.0; n];
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for i in 0..n {
        let gh = &cf.ghat[i];
        let det = gh[(0, 0)] * gh[(1, 1)] - gh[(0, 1)] * gh[(0, 1)];
        let a = (gh[(1, 1)] * rest_t[i] - gh[(0, 1)] * rest_p[i]) / det;
        let b = (-gh[(0, 1)] * rest_t[i] + gh[(0, 0)] * rest_p[i]) / det;
        let v = a * cf.x_theta[i] + b * cf.x_phi[i];
        vx[i] = v.x;
        vy[i] = v.y;
        vz[i] = v.z;
        alpha[i] = a;
        beta[i] = b;
    }
    let vxt = grid.d_theta(&vx);
    let vxp = grid.d_phi(&vx);
    let vyt = grid.d_theta(&vy);
    let vyp = grid.d_phi(&vy);
    let vzt = grid.d_theta(&vz);
    let vzp = grid.d_phi(&vz);

    let mut out = TangentialData {
        value,
        normal_deriv: vec![0.0; n],
        grad_sq: vec![0.0; n],
        laplacian: vec![0.0; n],
        h_grad_grad: vec![0.0; n],
    };
    for i in 0..n {
        let gh = &cf.ghat[i];
        let det = gh[(0, 0)] * gh[(1, 1)] - gh[(0, 1)] * gh[(0, 1)];
        let inv = Matrix2::new(gh[(1, 1)], -gh[(0, 1)], -gh[(0, 1)], gh[(0, 0)]) / det;
        let ef = cf.conf[i];

        let gf = field.gradient(cf.pos[i]);
        out.normal_deriv[i] = gf.dot(&cf.normal_chart[i]) / ef;

        let rt = Vector2::new(rest_t[i], rest_p[i]);
        out.grad_sq[i] = (rt.transpose() * inv * rt)[(0, 0)] / (ef * ef);

        let vt = Vector3::new(vxt[i], vyt[i], vzt[i]);
        let vp = Vector3::new(vxp[i], vyp[i], vzp[i]);
        let lap_hat = inv[(0, 0)] * vt.dot(&cf.x_theta[i])
            + inv[(0, 1)] * (vt.dot(&cf.x_phi[i]) + vp.dot(&cf.x_theta[i]))
            + inv[(1, 1)] * vp.dot(&cf.x_phi[i]);
        out.laplacian[i] = lap_hat / (ef * ef);

        // Contravariant gradient components against the ambient metric.
        let a = alpha[i] / (ef * ef);
        let b = beta[i] / (ef * ef);
        let hm = &cf.h[i];
        out.h_grad_grad[i] =
            hm[(0, 0)] * a * a + 2.0 * hm[(0, 1)] * a * b + hm[(1, 1)] * b * b;
    }
    out
}
