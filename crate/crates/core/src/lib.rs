//! Numerical core for stability-deficit experiments on closed hypersurfaces
//! of the three constant-curvature spaceforms.
//!
//! The crate provides:
//!
//! - [`spaceform`]: warp functions, conformal charts, and geodesic geometry
//!   of the hyperbolic, Euclidean, and spherical model spaces;
//! - [`hypersurface`]: starshaped radial graphs over a spectral sphere grid,
//!   curvature extraction, surface/domain quadrature, tangential calculus,
//!   and best-sphere fitting;
//! - [`ambient`]: scalar fields on the chart with exact or finite-difference
//!   derivatives;
//! - [`symfunc`]: normalized elementary symmetric functions, Garding cones,
//!   and Newton-inequality utilities;
//! - [`deficits`]: integral stability deficits (Heintze-Karcher, constant
//!   mean curvature, constant fractional curvature, Alexandrov-Fenchel) and
//!   pinching diagnostics;
//! - [`levelset`]: covariant Hessian calculus, level-set extraction,
//!   co-area band norms, gradient-flow foliation, and the level-set
//!   stability pipeline;
//! - [`elliptic`]: torsion-type ambient solutions, Reilly/Serrin/Steklov
//!   integral identities and residuals;
//! - [`flow`]: locally constrained curvature flows in the Euclidean
//!   spaceform driving isoperimetric-type monotone quantities.
//!
//! All numerics are double precision over explicit tensor-product grids;
//! every nontrivial routine carries tests against closed forms or
//! independent oracles.

pub mod ambient;
pub mod deficits;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod hypersurface;
pub mod levelset;
pub mod quad;
pub mod spaceform;
pub mod symfunc;

pub use ambient::{AmbientField, Poly3, TrilinearTable};
pub use error::{Error, Result};
pub use hypersurface::fit::{fit_sphere_distance, fit_sphere_to_points, SphereFit};
pub use hypersurface::{
    integrate_surface, tangential_calculus, CurvatureField, Hypersurface, SphereGrid,
    TangentialData,
};
pub use spaceform::Spaceform;
