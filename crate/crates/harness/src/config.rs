//! Configuration: TOML file schema, command-line overrides, and the
//! validated run plan. Unknown keys are rejected; validation failures carry
//! the offending key and map to exit code 2.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use umbilic_core::Spaceform;

use crate::surfaces::{FieldSpec, Mode, SurfaceSpec};

/// Default sweep amplitudes, spanning the reference range.
pub const DEFAULT_EPS: [f64; 7] = [0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.2];

/// Default pair of sweep resolutions used for the constant-stability check.
pub const DEFAULT_SWEEP_RESOLUTIONS: [[usize; 2]; 2] = [[32, 64], [48, 96]];

/// Errors surfacing from configuration ingestion (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Raw file schema. Every section rejects unknown keys so typos fail loudly
/// instead of silently running defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Ambient curvature: -1, 0, or 1.
    pub spaceform: Option<i32>,
    /// Grid `[n_theta, n_phi]`.
    pub resolution: Option<[usize; 2]>,
    /// Radial quadrature order for enclosed-domain integrals.
    pub n_radial: Option<usize>,
    pub seed: Option<u64>,
    /// Worker cap; the `UMBILIC_LAB_THREADS` environment variable caps it
    /// further.
    pub threads: Option<usize>,
    /// Report the CMC deficit against the literal (unnormalized) constant.
    pub literal_cmc_constant: Option<bool>,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub surface: Option<SurfaceConfig>,
    pub field: Option<FieldConfig>,
    pub sweep: Option<SweepConfig>,
    pub flow: Option<FlowConfig>,
    pub levelset: Option<LevelsetConfig>,
    pub identities: Option<IdentitiesConfig>,
    pub serrin: Option<SerrinConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    /// `sphere`, `ellipsoid`, `perturbed_sphere`, or `table`.
    pub kind: String,
    pub radius: Option<f64>,
    pub semi_axes: Option<[f64; 3]>,
    pub r0: Option<f64>,
    pub eps: Option<f64>,
    pub modes: Option<Vec<ModeConfig>>,
    /// Path to a JSON array of radii, row-major theta-then-phi.
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub l: u32,
    /// Azimuthal order; negative selects the sine branch.
    pub m: i32,
    pub coeff: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    /// `torsion`, `anisotropic`, `quadratic`, `polynomial`, or
    /// `boundary_quadric`.
    pub kind: String,
    pub r0: Option<f64>,
    pub eps: Option<f64>,
    /// Row-major symmetric 3x3 matrix for `quadratic`.
    pub matrix: Option<[[f64; 3]; 3]>,
    pub linear: Option<[f64; 3]>,
    pub constant: Option<f64>,
    /// Monomial terms for `polynomial`.
    pub terms: Option<Vec<TermConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coeff: f64,
    pub powers: [u8; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Option<Vec<f64>>,
    /// `hk`, `cmc`, `cfc`, or `af`.
    pub deficit: Option<String>,
    pub resolutions: Option<Vec<[usize; 2]>>,
    pub cfc_k: Option<usize>,
    pub cfc_l: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub k: Option<usize>,
    pub t_max: Option<f64>,
    pub umbilic_tol: Option<f64>,
    pub dt_max: Option<f64>,
    pub dt_initial: Option<f64>,
    pub w_drift_tol: Option<f64>,
    pub max_steps: Option<usize>,
    /// Time-series CSV path (separate from the report CSV).
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsetConfig {
    pub level_cap: Option<f64>,
    pub n_levels: Option<usize>,
    /// Anisotropy of the default field.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesConfig {
    /// Battery selection from `hsiung`, `reilly`, `serrin`, `steklov`,
    /// `newton`.
    pub which: Option<Vec<String>>,
    pub resolution: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerrinConfig {
    /// `linear`, `quartic`, or `exp`.
    pub profile: Option<String>,
    pub r0: Option<f64>,
    pub resolution: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

/// The battery identities, in their fixed report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    Hsiung,
    Reilly,
    Serrin,
    Steklov,
    Newton,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 5] = [
        IdentityKind::Hsiung,
        IdentityKind::Reilly,
        IdentityKind::Serrin,
        IdentityKind::Steklov,
        IdentityKind::Newton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::Hsiung => "hsiung",
            IdentityKind::Reilly => "reilly",
            IdentityKind::Serrin => "serrin",
            IdentityKind::Steklov => "steklov",
            IdentityKind::Newton => "newton",
        }
    }

    pub fn parse(s: &str) -> Result<IdentityKind, ConfigError> {
        IdentityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                ConfigError(format!(
                    "unknown identity '{s}' (expected hsiung, reilly, serrin, steklov, or newton)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeficitKind {
    Hk,
    Cmc,
    Cfc,
    Af,
}

impl DeficitKind {
    pub fn name(self) -> &'static str {
        match self {
            DeficitKind::Hk => "hk",
            DeficitKind::Cmc => "cmc",
            DeficitKind::Cfc => "cfc",
            DeficitKind::Af => "af",
        }
    }

    pub fn parse(s: &str) -> Result<DeficitKind, ConfigError> {
        match s {
            "hk" => Ok(DeficitKind::Hk),
            "cmc" => Ok(DeficitKind::Cmc),
            "cfc" => Ok(DeficitKind::Cfc),
            "af" => Ok(DeficitKind::Af),
            other => err(format!("unknown deficit '{other}' (expected hk, cmc, cfc, or af)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerrinProfile {
    Linear,
    Quartic,
    Exp,
}

impl SerrinProfile {
    pub fn name(self) -> &'static str {
        match self {
            SerrinProfile::Linear => "linear",
            SerrinProfile::Quartic => "quartic",
            SerrinProfile::Exp => "exp",
        }
    }

    pub fn parse(s: &str) -> Result<SerrinProfile, ConfigError> {
        match s {
            "linear" => Ok(SerrinProfile::Linear),
            "quartic" => Ok(SerrinProfile::Quartic),
            "exp" => Ok(SerrinProfile::Exp),
            other => err(format!(
                "unknown Serrin profile '{other}' (expected linear, quartic, or exp)"
            )),
        }
    }
}

/// Flow-run parameters, resolved.
#[derive(Debug, Clone, Copy)]
pub struct FlowPlan {
    pub k: usize,
    pub t_max: f64,
    pub umbilic_tol: f64,
    pub dt_max: f64,
    pub dt_initial: f64,
    pub w_drift_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowPlan {
    fn default() -> Self {
        FlowPlan {
            k: 1,
            t_max: 10.0,
            umbilic_tol: 1e-3,
            dt_max: 0.05,
            dt_initial: 1e-3,
            w_drift_tol: 1e-6,
            max_steps: 20_000,
        }
    }
}

/// One fully resolved command.
#[derive(Debug, Clone)]
pub enum Command {
    VerifyIdentities {
        which: Vec<IdentityKind>,
        resolution: [usize; 2],
    },
    Deficit {
        kind: DeficitKind,
        surface: SurfaceSpec,
        cfc_k: usize,
        cfc_l: usize,
    },
    LevelsetPipeline {
        field: FieldSpec,
        level_cap: f64,
        n_levels: usize,
    },
    Flow {
        surface: SurfaceSpec,
        flow: FlowPlan,
        series_csv: Option<PathBuf>,
    },
    Sweep {
        deficit: DeficitKind,
        eps: Vec<f64>,
        resolutions: Vec<[usize; 2]>,
        cfc_k: usize,
        cfc_l: usize,
    },
    Serrin {
        profile: SerrinProfile,
        r0: f64,
        resolution: usize,
    },
    Steklov {
        surface: SurfaceSpec,
        field: Option<FieldSpec>,
    },
}

/// Validated run plan: global settings plus the resolved command.
#[derive(Debug, Clone)]
pub struct Plan {
    pub command: Command,
    pub space: Spaceform,
    pub resolution: [usize; 2],
    pub n_radial: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub literal_cmc: bool,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
}

pub fn validate_spaceform(k: Option<i32>) -> Result<Spaceform, ConfigError> {
    match k.unwrap_or(0) {
        -1 => Ok(Spaceform::Hyperbolic),
        0 => Ok(Spaceform::Euclidean),
        1 => Ok(Spaceform::Spherical),
        other => err(format!("spaceform must be -1, 0, or 1, got {other}")),
    }
}

pub fn validate_resolution(res: [usize; 2]) -> Result<[usize; 2], ConfigError> {
    if res[0] < 4 || res[1] < 8 || res[1] % 2 != 0 {
        return err(format!(
            "resolution needs n_theta >= 4 and even n_phi >= 8, got [{}, {}]",
            res[0], res[1]
        ));
    }
    Ok(res)
}

/// Check surface admissibility against the spaceform as far as the static
/// description allows (the K = 1 chart covers the open hemisphere).
pub fn validate_surface(
    spec: &SurfaceSpec,
    space: Spaceform,
) -> Result<(), ConfigError> {
    let cap = space.domain_radius_cap();
    match spec {
        SurfaceSpec::Sphere { r } => {
            if !(*r > 0.0) {
                return err(format!("sphere radius must be positive, got {r}"));
            }
            if *r >= cap {
                return err(format!(
                    "sphere radius {r} reaches the domain cap {cap:.6} of the spaceform"
                ));
            }
        }
        SurfaceSpec::Ellipsoid { a, b, c } => {
            for v in [a, b, c] {
                if !(*v > 0.0) {
                    return err(format!("ellipsoid semi-axes must be positive, got {v}"));
                }
            }
            if space != Spaceform::Euclidean {
                let max_chart = a.max(*b).max(*c);
                let geo = space.geodesic_radius(max_chart).map_err(|e| {
                    ConfigError(format!("semi-axis {max_chart} leaves the chart: {e}"))
                })?;
                if geo >= cap {
                    return err(format!(
                        "semi-axis {max_chart} reaches geodesic radius {geo:.6} >= cap {cap:.6}"
                    ));
                }
            }
        }
        SurfaceSpec::PerturbedSphere { r0, eps, modes } => {
            if !(*r0 > 0.0) {
                return err(format!("base radius must be positive, got {r0}"));
            }
            let amp: f64 = modes.iter().map(|m| m.coeff.abs()).sum();
            let reach = r0 + eps.abs() * amp * r0;
            if reach >= cap {
                return err(format!(
                    "perturbed sphere can reach radius {reach:.6} >= cap {cap:.6}"
                ));
            }
            if eps.abs() * amp >= 1.0 {
                return err("perturbation amplitude reaches the origin".to_string());
            }
            for m in modes {
                if m.l == 0 || m.l > 8 || m.m.unsigned_abs() > m.l {
                    return err(format!(
                        "mode (l, m) = ({}, {}) outside 1 <= l <= 8, |m| <= l",
                        m.l, m.m
                    ));
                }
            }
        }
        SurfaceSpec::Table { rho } => {
            if rho.is_empty() {
                return err("radius table is empty".to_string());
            }
            if let Some(bad) = rho.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return err(format!("radius table holds a non-positive entry {bad}"));
            }
            if rho.iter().any(|v| *v >= cap) {
                return err(format!("radius table exceeds the domain cap {cap:.6}"));
            }
        }
    }
    Ok(())
}

impl SurfaceConfig {
    pub fn resolve(&self) -> Result<SurfaceSpec, ConfigError> {
        match self.kind.as_str() {
            "sphere" => Ok(SurfaceSpec::Sphere {
                r: self.radius.ok_or(ConfigError("sphere needs `radius`".into()))?,
            }),
            "ellipsoid" => {
                let [a, b, c] = self
                    .semi_axes
                    .ok_or(ConfigError("ellipsoid needs `semi_axes`".into()))?;
                Ok(SurfaceSpec::Ellipsoid { a, b, c })
            }
            "perturbed_sphere" => {
                let modes = match &self.modes {
                    Some(list) if !list.is_empty() => list
                        .iter()
                        .map(|m| Mode { l: m.l, m: m.m, coeff: m.coeff })
                        .collect(),
                    _ => crate::surfaces::recorded_modes(),
                };
                Ok(SurfaceSpec::PerturbedSphere {
                    r0: self.r0.unwrap_or(1.0),
                    eps: self.eps.ok_or(ConfigError("perturbed_sphere needs `eps`".into()))?,
                    modes,
                })
            }
            "table" => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or(ConfigError("table surface needs `table` (a JSON path)".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ConfigError(format!("cannot read {}: {e}", path.display()))
                })?;
                let rho: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
                    ConfigError(format!("{} is not a JSON array of radii: {e}", path.display()))
                })?;
                Ok(SurfaceSpec::Table { rho })
            }
            other => err(format!(
                "unknown surface kind '{other}' (expected sphere, ellipsoid, perturbed_sphere, or table)"
            )),
        }
    }
}

impl FieldConfig {
    pub fn resolve(&self) -> Result<FieldSpec, ConfigError> {
        match self.kind.as_str() {
            "torsion" => Ok(FieldSpec::Torsion { r0: self.r0.unwrap_or(1.0) }),
            "anisotropic" => Ok(FieldSpec::Anisotropic {
                eps: self.eps.unwrap_or(0.1),
                r0: self.r0.unwrap_or(1.0),
            }),
            "quadratic" => Ok(FieldSpec::Quadratic {
                matrix: self
                    .matrix
                    .ok_or(ConfigError("quadratic field needs `matrix`".into()))?,
                linear: self.linear.unwrap_or([0.0; 3]),
                constant: self.constant.unwrap_or(0.0),
            }),
            "polynomial" => {
                let terms = self
                    .terms
                    .as_ref()
                    .ok_or(ConfigError("polynomial field needs `terms`".into()))?;
                Ok(FieldSpec::Polynomial {
                    terms: terms.iter().map(|t| (t.coeff, t.powers)).collect(),
                })
            }
            "boundary_quadric" => Ok(FieldSpec::BoundaryQuadric),
            other => err(format!(
                "unknown field kind '{other}' (expected torsion, anisotropic, quadratic, polynomial, or boundary_quadric)"
            )),
        }
    }
}

/// Validate an epsilon list for sweeping: finite, nonnegative, strictly
/// increasing, and at least two positive members for the log-log fit.
pub fn validate_eps_list(eps: &[f64]) -> Result<(), ConfigError> {
    if eps.is_empty() {
        return err("sweep needs a nonempty eps list".to_string());
    }
    for pair in eps.windows(2) {
        if !(pair[1] > pair[0]) {
            return err(format!(
                "eps list must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            ));
        }
    }
    if eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return err("eps values must be finite and nonnegative".to_string());
    }
    if eps.iter().filter(|e| **e > 0.0).count() < 2 {
        return err("sweep needs at least two positive eps values".to_string());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sphere_config_fills_defaults() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [surface]
            kind = "sphere"
            radius = 1.0
            "#,
        )
        .unwrap();
        let spec = cfg.surface.unwrap().resolve().unwrap();
        assert!(matches!(spec, SurfaceSpec::Sphere { r } if r == 1.0));
        assert!(cfg.resolution.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let res: Result<FileConfig, _> = toml::from_str("volume = 3\n");
        assert!(res.is_err());
        let res: Result<FileConfig, _> = toml::from_str(
            "[surface]\nkind = \"sphere\"\nradius = 1.0\nradiuss = 2.0\n",
        );
        assert!(res.is_err());
    }

    #[test]
    fn hemisphere_cap_is_enforced() {
        let spec = SurfaceSpec::Sphere { r: 1.6 };
        assert!(validate_surface(&spec, Spaceform::Spherical).is_err());
        assert!(validate_surface(&spec, Spaceform::Euclidean).is_ok());
    }

    #[test]
    fn sweep_config_produces_the_requested_jobs() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [sweep]
            eps = [0.02, 0.05, 0.08, 0.11, 0.14, 0.17]
            deficit = "hk"
            "#,
        )
        .unwrap();
        let eps = cfg.sweep.unwrap().eps.unwrap();
        assert_eq!(eps.len(), 6);
        validate_eps_list(&eps).unwrap();
    }

    #[test]
    fn eps_list_validation_rejects_bad_lists() {
        assert!(validate_eps_list(&[]).is_err());
        assert!(validate_eps_list(&[0.1, 0.1]).is_err());
        assert!(validate_eps_list(&[0.2, 0.1]).is_err());
        assert!(validate_eps_list(&[0.0, 0.1]).is_err());
        assert!(validate_eps_list(&[0.0, 0.1, 0.2]).is_ok());
    }
}
