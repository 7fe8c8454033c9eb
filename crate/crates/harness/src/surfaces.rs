//! Surface and field construction from validated specs, including the
//! recorded perturbation family used by the stability sweeps.

use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use umbilic_core::{AmbientField, Hypersurface, Poly3, Spaceform, SphereGrid};

use crate::config::ConfigError;

/// One real spherical-harmonic mode of the perturbation family:
/// the Ferrers function `P_l^{|m|}(cos theta)` times `cos(m phi)`
/// (`sin(|m| phi)` for negative `m`), scaled to unit sup norm so that
/// coefficients read as amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub l: u32,
    pub m: i32,
    pub coeff: f64,
}

/// The recorded sweep family
/// `Y = 0.35 P_2(cos t) + 0.2 sin^2 t cos 2p + 0.15 P_3(cos t)`:
/// even and odd polar content plus a genuinely azimuthal mode, so every
/// shipped deficit is generically positive along `r = r0 (1 + eps Y)`.
pub fn recorded_modes() -> Vec<Mode> {
    vec![
        Mode { l: 2, m: 0, coeff: 0.35 },
        Mode { l: 2, m: 2, coeff: 0.2 },
        Mode { l: 3, m: 0, coeff: 0.15 },
    ]
}

/// Ferrers associated Legendre `P_l^m(x)` for `0 <= m <= l` (no
/// Condon-Shortley phase).
fn ferrers(l: u32, m: u32, x: f64) -> f64 {
    debug_assert!(m <= l);
    let sx = (1.0 - x * x).max(0.0).sqrt();
    // P_m^m = (2m-1)!! sx^m, then lift l with the standard recurrence.
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * sx;
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p = (2 * m + 1) as f64 * x * pmm;
    for ll in (m + 2)..=l {
        let (lf, mf) = (ll as f64, m as f64);
        let next = ((2.0 * lf - 1.0) * x * p - (lf + mf - 1.0) * p_prev) / (lf - mf);
        p_prev = p;
        p = next;
    }
    p
}

/// Sup norm of `P_l^m` over `[-1, 1]`, by dense sampling including the
/// endpoints (for `m = 0` the max is exactly 1 at the endpoints).
fn ferrers_sup(l: u32, m: u32) -> f64 {
    let n = 2048;
    let mut sup = 0.0_f64;
    for i in 0..=n {
        let x = -1.0 + 2.0 * i as f64 / n as f64;
        sup = sup.max(ferrers(l, m, x).abs());
    }
    sup
}

impl Mode {
    /// Evaluate the sup-normalized mode at `(theta, phi)`.
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        let ma = self.m.unsigned_abs();
        let polar = ferrers(self.l, ma, theta.cos()) / ferrers_sup(self.l, ma);
        let azim = if self.m >= 0 {
            (self.m as f64 * phi).cos()
        } else {
            (ma as f64 * phi).sin()
        };
        self.coeff * polar * azim
    }
}

/// Validated surface description.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    PerturbedSphere { r0: f64, eps: f64, modes: Vec<Mode> },
    Table { rho: Vec<f64> },
}

impl SurfaceSpec {
    /// Build the radial graph on the given grid.
    pub fn build(
        &self,
        space: Spaceform,
        grid: Arc<SphereGrid>,
    ) -> Result<Hypersurface, ConfigError> {
        let built = match self {
            SurfaceSpec::Sphere { r } => Hypersurface::geodesic_sphere(space, grid, *r),
            SurfaceSpec::Ellipsoid { a, b, c } => {
                Hypersurface::ellipsoid(space, grid, *a, *b, *c)
            }
            SurfaceSpec::PerturbedSphere { r0, eps, modes } => {
                let sups: Vec<f64> = modes
                    .iter()
                    .map(|m| ferrers_sup(m.l, m.m.unsigned_abs()))
                    .collect();
                let mut rho = Vec::with_capacity(grid.len());
                for &theta in &grid.thetas {
                    for &phi in &grid.phis {
                        let y: f64 = modes
                            .iter()
                            .zip(&sups)
                            .map(|(mo, sup)| {
                                let ma = mo.m.unsigned_abs();
                                let polar = ferrers(mo.l, ma, theta.cos()) / sup;
                                let azim = if mo.m >= 0 {
                                    (mo.m as f64 * phi).cos()
                                } else {
                                    (ma as f64 * phi).sin()
                                };
                                mo.coeff * polar * azim
                            })
                            .sum();
                        rho.push(r0 * (1.0 + eps * y));
                    }
                }
                Hypersurface::new(space, grid, rho)
            }
            SurfaceSpec::Table { rho } => {
                if rho.len() != grid.len() {
                    return Err(ConfigError(format!(
                        "radius table holds {} entries but the grid needs {}",
                        rho.len(),
                        grid.len()
                    )));
                }
                Hypersurface::new(space, grid, rho.clone())
            }
        };
        built.map_err(|e| ConfigError(format!("surface construction failed: {e}")))
    }

    /// Short descriptor for reports.
    pub fn label(&self) -> String {
        match self {
            SurfaceSpec::Sphere { r } => format!("sphere(r={r})"),
            SurfaceSpec::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
            SurfaceSpec::PerturbedSphere { r0, eps, .. } => {
                format!("perturbed_sphere(r0={r0},eps={eps})")
            }
            SurfaceSpec::Table { rho } => format!("table({} nodes)", rho.len()),
        }
    }
}

/// Inline command-line surface syntax: `sphere:1.0`, `ellipsoid:1.2,1,1`,
/// `perturbed:1.0,0.1` (recorded modes).
impl FromStr for SurfaceSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        ConfigError(format!("cannot parse '{t}' in surface spec '{s}'"))
                    })
                })
                .collect::<Result<_, _>>()?
        };
        match (kind, nums.as_slice()) {
            ("sphere", [r]) => Ok(SurfaceSpec::Sphere { r: *r }),
            ("ellipsoid", [a, b, c]) => Ok(SurfaceSpec::Ellipsoid { a: *a, b: *b, c: *c }),
            ("perturbed", [r0, eps]) => Ok(SurfaceSpec::PerturbedSphere {
                r0: *r0,
                eps: *eps,
                modes: recorded_modes(),
            }),
            ("perturbed", [eps]) => Ok(SurfaceSpec::PerturbedSphere {
                r0: 1.0,
                eps: *eps,
                modes: recorded_modes(),
            }),
            _ => Err(ConfigError(format!(
                "cannot parse surface '{s}' (expected sphere:R, ellipsoid:A,B,C, or perturbed:R0,EPS)"
            ))),
        }
    }
}

/// Validated ambient-field description.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    /// The torsion potential of the geodesic ball of radius `r0`.
    Torsion { r0: f64 },
    /// `((1 + eps) x^2 + y^2 + z^2 - r0^2) / 6`: the anisotropic
    /// deformation of the torsion potential (flat).
    Anisotropic { eps: f64, r0: f64 },
    /// `x^T A x + b . x + c`.
    Quadratic {
        matrix: [[f64; 3]; 3],
        linear: [f64; 3],
        constant: f64,
    },
    Polynomial { terms: Vec<(f64, [u8; 3])> },
    /// The quadric `sum (x_i / a_i)^2 - 1` vanishing on the configured
    /// sphere or ellipsoid boundary (flat).
    BoundaryQuadric,
}

impl FieldSpec {
    /// Build the field. `BoundaryQuadric` needs the surface it vanishes on.
    pub fn build(
        &self,
        space: Spaceform,
        surface: Option<&SurfaceSpec>,
    ) -> Result<AmbientField, ConfigError> {
        match self {
            FieldSpec::Torsion { r0 } => {
                let t = umbilic_core::elliptic::torsion_solve_ball(space, *r0)
                    .map_err(|e| ConfigError(format!("torsion field: {e}")))?;
                Ok(t.ambient_field())
            }
            FieldSpec::Anisotropic { eps, r0 } => {
                if space != Spaceform::Euclidean {
                    return Err(ConfigError(
                        "the anisotropic field is defined in the flat spaceform".into(),
                    ));
                }
                Ok(AmbientField::polynomial(Poly3::new(vec![
                    ((1.0 + eps) / 6.0, [2, 0, 0]),
                    (1.0 / 6.0, [0, 2, 0]),
                    (1.0 / 6.0, [0, 0, 2]),
                    (-r0 * r0 / 6.0, [0, 0, 0]),
                ])))
            }
            FieldSpec::Quadratic { matrix, linear, constant } => {
                let mut terms = vec![(*constant, [0u8, 0, 0])];
                let pow = |i: usize, j: usize| -> [u8; 3] {
                    let mut p = [0u8; 3];
                    p[i] += 1;
                    p[j] += 1;
                    p
                };
                for i in 0..3 {
                    for j in 0..3 {
                        if matrix[i][j] != 0.0 {
                            terms.push((matrix[i][j], pow(i, j)));
                        }
                    }
                }
                for (i, b) in linear.iter().enumerate() {
                    if *b != 0.0 {
                        let mut p = [0u8; 3];
                        p[i] = 1;
                        terms.push((*b, p));
                    }
                }
                Ok(AmbientField::polynomial(Poly3::new(terms)))
            }
            FieldSpec::Polynomial { terms } => {
                Ok(AmbientField::polynomial(Poly3::new(terms.clone())))
            }
            FieldSpec::BoundaryQuadric => {
                let (a, b, c) = match surface {
                    Some(SurfaceSpec::Sphere { r }) => (*r, *r, *r),
                    Some(SurfaceSpec::Ellipsoid { a, b, c }) => (*a, *b, *c),
                    _ => {
                        return Err(ConfigError(
                            "boundary_quadric needs a sphere or ellipsoid surface".into(),
                        ))
                    }
                };
                Ok(AmbientField::polynomial(Poly3::new(vec![
                    (1.0 / (a * a), [2, 0, 0]),
                    (1.0 / (b * b), [0, 2, 0]),
                    (1.0 / (c * c), [0, 0, 2]),
                    (-1.0, [0, 0, 0]),
                ])))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            FieldSpec::Torsion { r0 } => format!("torsion(r0={r0})"),
            FieldSpec::Anisotropic { eps, r0 } => format!("anisotropic(eps={eps},r0={r0})"),
            FieldSpec::Quadratic { .. } => "quadratic".into(),
            FieldSpec::Polynomial { terms } => format!("polynomial({} terms)", terms.len()),
            FieldSpec::BoundaryQuadric => "boundary_quadric".into(),
        }
    }
}
