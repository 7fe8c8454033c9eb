//! Spectral collocation grid on the unit 2-sphere.
//!
//! Nodes are Gauss-Legendre in the polar angle (in `x = cos(theta)`) crossed
//! with a uniform periodic grid in azimuth, so the poles are never sampled
//! and the product quadrature integrates band-limited functions exactly.
//!
//! Azimuthal derivatives are discrete Fourier differentiation. Polar
//! derivatives are spectral differentiation matrices built *per azimuthal
//! mode* from normalized associated Legendre functions: a smooth function on
//! the sphere with azimuthal mode `m` carries a `sin^m(theta)` factor, so a
//! single polynomial differentiation matrix in `cos(theta)` would lose
//! spectral accuracy for odd `m`; the per-mode bases absorb that factor
//! exactly. First derivatives use the standard lowering recurrence, second
//! derivatives the associated Legendre ODE.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

/// Collocation grid with cached quadrature weights and differentiation
/// operators. Construction is `O(n_theta^2 * n_phi)`; all operators are
/// immutable afterwards, so a grid can be shared freely across threads.
#[derive(Debug)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Polar angles, ascending in `(0, pi)`.
    pub thetas: Vec<f64>,
    /// Azimuths `2 pi j / n_phi`.
    pub phis: Vec<f64>,
    /// Unit direction of every node, row-major theta-then-phi.
    pub nodes: Vec<Vector3<f64>>,
    /// Quadrature weights against the round measure; they sum to `4 pi`.
    pub weights: Vec<f64>,
    sin_thetas: Vec<f64>,
    /// Azimuthal analysis matrices (cos / sin), synthesis matrices, and the
    /// two periodic differentiation matrices, all applied from the right.
    ca: DMatrix<f64>,
    sa: DMatrix<f64>,
    cs: DMatrix<f64>,
    ss: DMatrix<f64>,
    dphi_t: DMatrix<f64>,
    dphi2_t: DMatrix<f64>,
    /// Per-mode polar differentiation matrices, index = azimuthal mode `m`.
    d1: Vec<DMatrix<f64>>,
    d2: Vec<DMatrix<f64>>,
    /// Per-mode low-pass projection matrices (see [`SphereGrid::low_pass`]).
    lp: Vec<DMatrix<f64>>,
}

/// Smooth spectral roll-off for [`SphereGrid::low_pass`]: unity through
/// `2 lmax / 3`, then `exp(-36 xi^4)` on the normalized remainder, reaching
/// ~1e-16 at `l = lmax`.
fn rolloff(l: usize, lmax: usize) -> f64 {
    let l0 = 2 * lmax / 3;
    if l <= l0 {
        1.0
    } else {
        let xi = (l - l0) as f64 / (lmax - l0) as f64;
        (-36.0 * xi.powi(4)).exp()
    }
}

/// Normalized associated Legendre values `Pbar_l^m(x)` for `l = m ..= lmax`,
/// orthonormal in `int_{-1}^{1} Pbar^2 dx = 1`.
fn legendre_column(lmax: usize, m: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1 - m);
    let sx = (1.0 - x * x).max(0.0).sqrt();
    // Pbar_m^m by the diagonal recurrence.
    let mut pmm = (0.5_f64).sqrt();
    for k in 1..=m {
        pmm *= ((2.0 * k as f64 + 1.0) / (2.0 * k as f64)).sqrt() * sx;
    }
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mut pm1 = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
    out.push(pm1);
    let mut pm2 = pmm;
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
            .sqrt();
        let p = a * (x * pm1 - b * pm2);
        out.push(p);
        pm2 = pm1;
        pm1 = p;
    }
    out
}

impl SphereGrid {
    /// Build the grid. `n_theta >= 4`, `n_phi >= 8` and even.
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 4 {
            return Err(Error::Construction(format!(
                "n_theta must be >= 4, got {n_theta}"
            )));
        }
        if n_phi < 8 || n_phi % 2 != 0 {
            return Err(Error::Construction(format!(
                "n_phi must be even and >= 8, got {n_phi}"
            )));
        }
        let (xs_asc, ws) = gauss_legendre(n_theta);
        // theta ascending means x = cos(theta) descending.
        let thetas: Vec<f64> = xs_asc.iter().rev().map(|x| x.acos()).collect();
        let theta_weights: Vec<f64> = ws.iter().rev().copied().collect();
        let xs: Vec<f64> = thetas.iter().map(|t| t.cos()).collect();
        let sin_thetas: Vec<f64> = thetas.iter().map(|t| t.sin()).collect();
        let phis: Vec<f64> = (0..n_phi)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
            .collect();

        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let wphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        for i in 0..n_theta {
            let (st, ct) = (sin_thetas[i], xs[i]);
            for &phi in &phis {
                nodes.push(Vector3::new(st * phi.cos(), st * phi.sin(), ct));
                weights.push(theta_weights[i] * wphi);
            }
        }

        // Azimuthal Fourier matrices. Modes m = 0..=M with M = n_phi/2; the
        // Nyquist sine vanishes at the nodes and is omitted.
        let m_max = n_phi / 2;
        let ca = DMatrix::from_fn(n_phi, m_max + 1, |j, m| {
            let norm = if m == 0 || m == m_max { 1.0 } else { 2.0 };
            norm / n_phi as f64 * (m as f64 * phis[j]).cos()
        });
        let sa = DMatrix::from_fn(n_phi, m_max.saturating_sub(1), |j, m| {
            2.0 / n_phi as f64 * ((m + 1) as f64 * phis[j]).sin()
        });
        let cs = DMatrix::from_fn(n_phi, m_max + 1, |j, m| (m as f64 * phis[j]).cos());
        let ss = DMatrix::from_fn(n_phi, m_max.saturating_sub(1), |j, m| {
            ((m + 1) as f64 * phis[j]).sin()
        });

        // Periodic differentiation matrices, synthesized mode by mode so they
        // share the analysis convention exactly. First derivative drops the
        // Nyquist cosine (its derivative vanishes at the nodes); the second
        // derivative keeps it with factor -M^2.
        let mut dphi = DMatrix::zeros(n_phi, n_phi);
        let mut dphi2 = DMatrix::zeros(n_phi, n_phi);
        for j in 0..n_phi {
            for jp in 0..n_phi {
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for m in 1..=m_max {
                    let mf = m as f64;
                    let norm = if m == m_max { 1.0 } else { 2.0 };
                    let c = norm / n_phi as f64;
                    let (sj, cj) = (mf * phis[j]).sin_cos();
                    let (sjp, cjp) = (mf * phis[jp]).sin_cos();
                    if m < m_max {
                        // cos-mode: -m sin(m phi_j) cos(m phi_jp); sin-mode: m cos * sin.
                        d1 += c * mf * (-sj * cjp + cj * sjp);
                    }
                    d2 += c * mf * mf * (-cj * cjp - if m < m_max { sj * sjp } else { 0.0 });
                }
                dphi[(j, jp)] = d1;
                dphi2[(j, jp)] = d2;
            }
        }

        // Per-mode polar differentiation. Analysis projects onto
        // Pbar_l^m with Gauss-Legendre weights (exact through l <= n_theta-1
        // because the products are polynomials of degree <= 2 n_theta - 2),
        // synthesis evaluates d/dtheta resp. d^2/dtheta^2 of the basis.
        let lmax = n_theta - 1;
        let mut d1_ops = Vec::with_capacity(m_max + 1);
        let mut d2_ops = Vec::with_capacity(m_max + 1);
        let mut lp_ops = Vec::with_capacity(m_max + 1);
        for m in 0..=m_max {
            if m > lmax {
                d1_ops.push(DMatrix::zeros(n_theta, n_theta));
                d2_ops.push(DMatrix::zeros(n_theta, n_theta));
                lp_ops.push(DMatrix::zeros(n_theta, n_theta));
                continue;
            }
            let nl = lmax + 1 - m;
            let mut analysis = DMatrix::zeros(nl, n_theta);
            let mut synth0 = DMatrix::zeros(n_theta, nl);
            let mut synth1 = DMatrix::zeros(n_theta, nl);
            let mut synth2 = DMatrix::zeros(n_theta, nl);
            for i in 0..n_theta {
                let x = xs[i];
                let st = sin_thetas[i];
                let col = legendre_column(lmax, m, x);
                // dPbar_l^m/dtheta = (l x Pbar_l^m - c_lm Pbar_{l-1}^m)/sin,
                // c_lm = sqrt((2l+1)(l^2-m^2)/(2l-1));
                // the second derivative follows from the Legendre ODE.
                for (idx, &p) in col.iter().enumerate() {
                    let l = (m + idx) as f64;
                    let mf = m as f64;
                    analysis[(idx, i)] = p * theta_weights[i];
                    let pm1 = if idx == 0 { 0.0 } else { col[idx - 1] };
                    let c = if idx == 0 {
                        0.0
                    } else {
                        ((2.0 * l + 1.0) * (l * l - mf * mf) / (2.0 * l - 1.0)).sqrt()
                    };
                    let dp = (l * x * p - c * pm1) / st;
                    synth0[(i, idx)] = p * rolloff(m + idx, lmax);
                    synth1[(i, idx)] = dp;
                    synth2[(i, idx)] =
                        -(x / st) * dp - (l * (l + 1.0) - mf * mf / (st * st)) * p;
                }
            }
            d1_ops.push(&synth1 * &analysis);
            d2_ops.push(&synth2 * &analysis);
            lp_ops.push(&synth0 * &analysis);
        }

        Ok(SphereGrid {
            n_theta,
            n_phi,
            thetas,
            phis,
            nodes,
            weights,
            sin_thetas,
            ca,
            sa,
            cs,
            ss,
            dphi_t: dphi.transpose(),
            dphi2_t: dphi2.transpose(),
            d1: d1_ops,
            d2: d2_ops,
            lp: lp_ops,
        })
    }

    /// Number of nodes (`n_theta * n_phi`).
    #[inline]
    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of node `(i_theta, j_phi)`.
    #[inline]
    pub fn node_index(&self, i_theta: usize, j_phi: usize) -> usize {
        i_theta * self.n_phi + j_phi
    }

    /// `sin(theta)` at a flat node index (never zero: poles are excluded).
    #[inline]
    pub fn sin_theta(&self, node: usize) -> f64 {
        self.sin_thetas[node / self.n_phi]
    }

    /// Quadrature of a node field against the round measure.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn to_matrix(&self, f: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(f.len(), self.len());
        DMatrix::from_fn(self.n_theta, self.n_phi, |i, j| f[i * self.n_phi + j])
    }

    fn from_matrix(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n_theta {
            for j in 0..self.n_phi {
                out[i * self.n_phi + j] = m[(i, j)];
            }
        }
        out
    }

    fn apply_polar(&self, f: &[f64], ops: &[DMatrix<f64>]) -> Vec<f64> {
        let fm = self.to_matrix(f);
        let fc = &fm * &self.ca;
        let fs = &fm * &self.sa;
        let mut gc = DMatrix::zeros(self.n_theta, fc.ncols());
        let mut gs = DMatrix::zeros(self.n_theta, fs.ncols());
        for m in 0..fc.ncols() {
            gc.set_column(m, &(&ops[m] * fc.column(m)));
        }
        for ms in 0..fs.ncols() {
            gs.set_column(ms, &(&ops[ms + 1] * fs.column(ms)));
        }
        let g = &gc * self.cs.transpose() + &gs * self.ss.transpose();
        self.from_matrix(&g)
    }

    /// First polar derivative `d f / d theta` at every node.
    pub fn d_theta(&self, f: &[f64]) -> Vec<f64> {
        self.apply_polar(f, &self.d1)
    }

    /// Second polar derivative `d^2 f / d theta^2`.
    pub fn d_theta_theta(&self, f: &[f64]) -> Vec<f64> {
        self.apply_polar(f, &self.d2)
    }

    /// First azimuthal derivative `d f / d phi`.
    pub fn d_phi(&self, f: &[f64]) -> Vec<f64> {
        let g = self.to_matrix(f) * &self.dphi_t;
        self.from_matrix(&g)
    }

    /// Second azimuthal derivative.
    pub fn d_phi_phi(&self, f: &[f64]) -> Vec<f64> {
        let g = self.to_matrix(f) * &self.dphi2_t;
        self.from_matrix(&g)
    }

    /// Mixed derivative `d^2 f / d theta d phi` (azimuthal differentiation is
    /// exact per theta-row, so the order of application does not matter).
    pub fn d_theta_phi(&self, f: &[f64]) -> Vec<f64> {
        self.d_phi(&self.d_theta(f))
    }

    /// Spectral low-pass projection: expand in spherical-harmonic modes,
    /// scale degree `l` by a smooth roll-off (unity through `2 lmax / 3`,
    /// ~1e-16 at `lmax`), and synthesize back.
    ///
    /// Collocation differentiation is exact on resolved modes but its
    /// near-pole rows amplify the unresolved tail by `~ l^2 / sin^2(theta)`,
    /// which turns time-stepping on the grid into a spurious instability:
    /// round-off seeded at the last polar rows grows at a rate that halving
    /// the step cannot cure. Applying this projection once per accepted step
    /// removes the tail while perturbing smooth resolved fields at the level
    /// of their own spectral truncation error.
    pub fn low_pass(&self, f: &[f64]) -> Vec<f64> {
        self.apply_polar(f, &self.lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(grid: &SphereGrid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        for &t in &grid.thetas {
            for &p in &grid.phis {
                out.push(f(t, p));
            }
        }
        out
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        for (nt, np) in [(4, 8), (16, 32), (64, 128)] {
            let g = SphereGrid::new(nt, np).unwrap();
            assert_relative_eq!(
                g.weights.iter().sum::<f64>(),
                4.0 * std::f64::consts::PI,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = SphereGrid::new(16, 32).unwrap();
        let f = vec![3.25; g.len()];
        // Pole rows of the second-derivative operator amplify round-off by
        // ~l^2 / sin^2(theta); ~1e-12 leakage on a unit constant is the floor.
        for d in [g.d_theta(&f), g.d_phi(&f), g.d_theta_theta(&f), g.d_phi_phi(&f)] {
            assert!(d.iter().all(|v| v.abs() <= 1e-11), "max {:?}",
                d.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn low_degree_harmonics_integrate_exactly() {
        let g = SphereGrid::new(16, 32).unwrap();
        // Y ~ cos(theta), sin(theta)cos(phi), (3cos^2-1)/2, sin^2 cos(2phi):
        // all integrate to zero; the constant integrates to 4 pi.
        for f in [
            field(&g, |t, _| t.cos()),
            field(&g, |t, p| t.sin() * p.cos()),
            field(&g, |t, _| 0.5 * (3.0 * t.cos().powi(2) - 1.0)),
            field(&g, |t, p| t.sin().powi(2) * (2.0 * p).cos()),
        ] {
            assert!(g.integrate(&f).abs() <= 1e-10);
        }
    }

    #[test]
    fn derivatives_exact_on_band_limited_fields() {
        let g = SphereGrid::new(12, 24).unwrap();
        // f = cos(theta): d_theta = -sin, d_theta_theta = -cos.
        let f = field(&g, |t, _| t.cos());
        assert!(max_err(&g.d_theta(&f), &field(&g, |t, _| -t.sin())) <= 1e-12);
        assert!(max_err(&g.d_theta_theta(&f), &field(&g, |t, _| -t.cos())) <= 1e-11);

        // f = sin(theta) cos(phi) (degree-1 harmonic, odd azimuthal mode:
        // the case a plain cos(theta)-polynomial scheme gets wrong).
        let f = field(&g, |t, p| t.sin() * p.cos());
        assert!(max_err(&g.d_theta(&f), &field(&g, |t, p| t.cos() * p.cos())) <= 1e-12);
        assert!(max_err(&g.d_phi(&f), &field(&g, |t, p| -t.sin() * p.sin())) <= 1e-12);
        assert!(
            max_err(&g.d_theta_theta(&f), &field(&g, |t, p| -t.sin() * p.cos())) <= 1e-11
        );
        assert!(
            max_err(&g.d_theta_phi(&f), &field(&g, |t, p| -t.cos() * p.sin())) <= 1e-11
        );

        // f = sin^2(theta) sin(2 phi) cos(theta) (degree-3, m = 2).
        let f = field(&g, |t, p| t.sin().powi(2) * t.cos() * (2.0 * p).sin());
        let ft = field(&g, |t, p| {
            (2.0 * t.sin() * t.cos().powi(2) - t.sin().powi(3)) * (2.0 * p).sin()
        });
        assert!(max_err(&g.d_theta(&f), &ft) <= 1e-11);
        let fpp = field(&g, |t, p| -4.0 * t.sin().powi(2) * t.cos() * (2.0 * p).sin());
        assert!(max_err(&g.d_phi_phi(&f), &fpp) <= 1e-11);
    }

    #[test]
    fn low_pass_is_identity_on_resolved_smooth_fields() {
        let g = SphereGrid::new(16, 32).unwrap();
        // Degree <= 3 harmonics sit far below the roll-off shoulder (l = 10
        // at n_theta = 16), so the projection must reproduce them exactly.
        let f = field(&g, |t, p| {
            1.0 + 0.4 * t.cos() + 0.3 * t.sin().powi(2) * (2.0 * p).cos()
                + 0.2 * t.sin().powi(2) * t.cos() * (2.0 * p).sin()
        });
        // The m = 0 analysis/synthesis round trip accumulates ~100 eps.
        assert!(max_err(&g.low_pass(&f), &f) <= 1e-12);
    }

    #[test]
    fn low_pass_scales_each_degree_by_the_rolloff() {
        let g = SphereGrid::new(16, 32).unwrap();
        let lmax = 15;
        for l in [11usize, 12, 15] {
            let f = field(&g, |t, _| {
                let col = legendre_column(lmax, 0, t.cos());
                col[l]
            });
            let lp = g.low_pass(&f);
            let sigma = rolloff(l, lmax);
            let err: f64 = f
                .iter()
                .zip(&lp)
                .map(|(v, w)| (w - sigma * v).abs())
                .fold(0.0, f64::max);
            assert!(err <= 1e-11, "degree {l}: |lp - sigma f| = {err:.3e}");
        }
        // The top degree is crushed to round-off.
        let f = field(&g, |t, _| legendre_column(lmax, 0, t.cos())[lmax]);
        let peak = g.low_pass(&f).iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
        assert!(peak <= 1e-12, "top degree survived at {peak:.3e}");
    }

    #[test]
    fn smooth_nonpolynomial_field_converges_spectrally() {
        // f = exp(cos theta) * (1 + 0.3 sin^2 theta cos 2 phi) is analytic but
        // not band-limited; the derivative error must collapse as the grid
        // refines (far faster than the factor-4 of a second-order scheme).
        let exact = |t: f64, p: f64| {
            -t.sin() * t.cos().exp() * (1.0 + 0.3 * t.sin().powi(2) * (2.0 * p).cos())
                + t.cos().exp() * 0.6 * t.sin() * t.cos() * (2.0 * p).cos()
        };
        let mut errs = Vec::new();
        for (nt, np) in [(8, 16), (16, 32), (32, 64)] {
            let g = SphereGrid::new(nt, np).unwrap();
            let f = field(&g, |t, p| {
                t.cos().exp() * (1.0 + 0.3 * t.sin().powi(2) * (2.0 * p).cos())
            });
            errs.push(max_err(&g.d_theta(&f), &field(&g, exact)));
        }
        assert!(errs[1] <= errs[0] / 50.0, "errs = {errs:?}");
        assert!(errs[2] <= 1e-10, "errs = {errs:?}");
    }
}
