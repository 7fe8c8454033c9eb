//! `umbilic-lab`: numerical laboratory for geometric stability deficits on
//! hypersurfaces of constant-curvature ambient spaces.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use umbilic_lab::config::{
    validate_eps_list, validate_resolution, validate_spaceform, validate_surface, Command,
    ConfigError, DeficitKind, FileConfig, FlowPlan, IdentityKind, Plan, SerrinProfile,
    DEFAULT_EPS, DEFAULT_SWEEP_RESOLUTIONS,
};
use umbilic_lab::surfaces::{FieldSpec, SurfaceSpec};
use umbilic_lab::CliError;

#[derive(Parser)]
#[command(
    name = "umbilic-lab",
    version,
    about = "Stability deficits, integral identities, and curvature flows \
             on hypersurfaces of spaceforms"
)]
struct Cli {
    /// TOML configuration file; CLI flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Ambient curvature: -1 (hyperbolic), 0 (flat), or 1 (spherical).
    #[arg(long, global = true, allow_hyphen_values = true)]
    spaceform: Option<i32>,
    /// Polar grid size n; the grid is n x 2n.
    #[arg(long, global = true, value_name = "N")]
    resolution: Option<usize>,
    /// Seed for every randomized battery.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker cap (the UMBILIC_LAB_THREADS environment variable caps it
    /// further).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out_json: Option<PathBuf>,
    /// Write the CSV table here (commands with a table schema).
    #[arg(long, global = true, value_name = "PATH")]
    out_csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the integral-identity batteries and report residuals.
    VerifyIdentities {
        /// Run every battery (the default when --which is absent).
        #[arg(long)]
        all: bool,
        /// Comma-separated subset of hsiung,reilly,serrin,steklov,newton.
        #[arg(long, value_name = "LIST", conflicts_with = "all")]
        which: Option<String>,
    },
    /// Evaluate one stability deficit on a surface.
    Deficit {
        /// One of hk, cmc, cfc, af.
        kind: String,
        /// Inline surface: sphere:R | ellipsoid:A,B,C | perturbed:R0,EPS.
        #[arg(long, value_name = "SPEC")]
        surface: Option<String>,
        /// Curvature order k for the cfc quotient.
        #[arg(short = 'k', long)]
        k: Option<usize>,
        /// Lower order l for the cfc quotient.
        #[arg(short = 'l', long)]
        l: Option<usize>,
        /// Compare the cmc deficit against the literal (unnormalized)
        /// reference constant.
        #[arg(long)]
        literal_constant: bool,
    },
    /// Run the level-set stability pipeline on an ambient field.
    LevelsetPipeline {
        /// Anisotropy of the default quadratic field.
        #[arg(long)]
        eps: Option<f64>,
        /// Band height above the zero level.
        #[arg(long)]
        level_cap: Option<f64>,
        /// Gauss-Legendre levels sampled in the band.
        #[arg(long)]
        n_levels: Option<usize>,
    },
    /// Flow a starshaped surface by the constrained curvature flow.
    Flow {
        /// Curvature order k of the speed (1 or 2).
        #[arg(short = 'k', long)]
        k: Option<usize>,
        /// Inline surface spec (see `deficit`).
        #[arg(long, value_name = "SPEC")]
        surface: Option<String>,
        #[arg(long)]
        t_max: Option<f64>,
        /// Stop once max |A0| falls below this.
        #[arg(long)]
        umbilic_tol: Option<f64>,
        /// Time-series CSV path.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Sweep a perturbation family and fit the stability power law.
    Sweep {
        /// One of hk, cmc, cfc, af.
        #[arg(long)]
        deficit: Option<String>,
    },
    /// Verify the Serrin identity for a manufactured radial pair.
    Serrin {
        /// One of linear, quartic, exp.
        #[arg(long)]
        profile: Option<String>,
        /// Ball radius.
        #[arg(long)]
        r0: Option<f64>,
        /// Radial/angular quadrature order.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Verify the Steklov identity on a flat domain.
    Steklov {
        /// Inline surface spec (see `deficit`).
        #[arg(long, value_name = "SPEC")]
        surface: Option<String>,
    },
}

fn parse_surface_arg(
    arg: Option<&str>,
    cfg: &FileConfig,
    default: SurfaceSpec,
) -> Result<SurfaceSpec, ConfigError> {
    match arg {
        Some(s) => s.parse(),
        None => match &cfg.surface {
            Some(sc) => sc.resolve(),
            None => Ok(default),
        },
    }
}

fn assemble(cli: &Cli, cfg: &FileConfig) -> Result<Plan, ConfigError> {
    let space = validate_spaceform(cli.spaceform.or(cfg.spaceform))?;
    let resolution = validate_resolution(
        cli.resolution
            .map(|n| [n, 2 * n])
            .or(cfg.resolution)
            .unwrap_or([32, 64]),
    )?;
    let n_radial = cfg.n_radial.unwrap_or_else(|| resolution[0].max(24));
    if n_radial == 0 {
        return Err(ConfigError("n_radial must be positive".into()));
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let mut literal_cmc = cfg.literal_cmc_constant.unwrap_or(false);

    let command = match &cli.command {
        Cmd::VerifyIdentities { all, which } => {
            let which_list = match (which, &cfg.identities) {
                (Some(list), _) => list
                    .split(',')
                    .map(|s| IdentityKind::parse(s.trim()))
                    .collect::<Result<Vec<_>, _>>()?,
                (None, Some(ic)) if !*all && ic.which.is_some() => ic
                    .which
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|s| IdentityKind::parse(s))
                    .collect::<Result<Vec<_>, _>>()?,
                _ => IdentityKind::ALL.to_vec(),
            };
            if which_list.is_empty() {
                return Err(ConfigError("identity battery selection is empty".into()));
            }
            let id_res = if cli.resolution.is_some() {
                resolution
            } else {
                cfg.identities
                    .as_ref()
                    .and_then(|ic| ic.resolution)
                    .map(validate_resolution)
                    .transpose()?
                    .unwrap_or(resolution)
            };
            Command::VerifyIdentities { which: which_list, resolution: id_res }
        }
        Cmd::Deficit { kind, surface, k, l, literal_constant } => {
            let kind = DeficitKind::parse(kind)?;
            let spec =
                parse_surface_arg(surface.as_deref(), cfg, SurfaceSpec::Sphere { r: 1.0 })?;
            validate_surface(&spec, space)?;
            literal_cmc |= *literal_constant;
            let cfc_k = k.or(cfg.sweep.as_ref().and_then(|s| s.cfc_k)).unwrap_or(1);
            let cfc_l = l.or(cfg.sweep.as_ref().and_then(|s| s.cfc_l)).unwrap_or(1);
            Command::Deficit { kind, surface: spec, cfc_k, cfc_l }
        }
        Cmd::LevelsetPipeline { eps, level_cap, n_levels } => {
            let field = match (eps, &cfg.field) {
                (Some(e), _) => FieldSpec::Anisotropic { eps: *e, r0: 1.0 },
                (None, Some(fc)) => fc.resolve()?,
                (None, None) => FieldSpec::Anisotropic {
                    eps: cfg.levelset.as_ref().and_then(|l| l.eps).unwrap_or(0.1),
                    r0: 1.0,
                },
            };
            let level_cap = level_cap
                .or(cfg.levelset.as_ref().and_then(|l| l.level_cap))
                .unwrap_or(0.1);
            if !(level_cap > 0.0 && level_cap.is_finite()) {
                return Err(ConfigError(format!(
                    "level_cap must be positive and finite, got {level_cap}"
                )));
            }
            let n_levels = n_levels
                .or(cfg.levelset.as_ref().and_then(|l| l.n_levels))
                .unwrap_or(8);
            if n_levels == 0 {
                return Err(ConfigError("n_levels must be positive".into()));
            }
            Command::LevelsetPipeline { field, level_cap, n_levels }
        }
        Cmd::Flow { k, surface, t_max, umbilic_tol, csv } => {
            let defaults = FlowPlan::default();
            let fc = cfg.flow.as_ref();
            let flow = FlowPlan {
                k: k.or(fc.and_then(|f| f.k)).unwrap_or(defaults.k),
                t_max: t_max.or(fc.and_then(|f| f.t_max)).unwrap_or(defaults.t_max),
                umbilic_tol: umbilic_tol
                    .or(fc.and_then(|f| f.umbilic_tol))
                    .unwrap_or(defaults.umbilic_tol),
                dt_max: fc.and_then(|f| f.dt_max).unwrap_or(defaults.dt_max),
                dt_initial: fc.and_then(|f| f.dt_initial).unwrap_or(defaults.dt_initial),
                w_drift_tol: fc
                    .and_then(|f| f.w_drift_tol)
                    .unwrap_or(defaults.w_drift_tol),
                max_steps: fc.and_then(|f| f.max_steps).unwrap_or(defaults.max_steps),
            };
            if !(1..=2).contains(&flow.k) {
                return Err(ConfigError(format!(
                    "flow curvature order must be 1 or 2, got {}",
                    flow.k
                )));
            }
            for (name, v) in [
                ("t_max", flow.t_max),
                ("umbilic_tol", flow.umbilic_tol),
                ("dt_max", flow.dt_max),
                ("dt_initial", flow.dt_initial),
                ("w_drift_tol", flow.w_drift_tol),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(ConfigError(format!(
                        "flow {name} must be finite and nonnegative, got {v}"
                    )));
                }
            }
            let spec = parse_surface_arg(
                surface.as_deref(),
                cfg,
                SurfaceSpec::Ellipsoid { a: 1.2, b: 1.0, c: 0.9 },
            )?;
            validate_surface(&spec, space)?;
            let series_csv = csv.clone().or(fc.and_then(|f| f.csv.clone()));
            Command::Flow { surface: spec, flow, series_csv }
        }
        Cmd::Sweep { deficit } => {
            let sc = cfg.sweep.as_ref();
            let kind = match deficit.as_deref().or(sc.and_then(|s| s.deficit.as_deref())) {
                Some(name) => DeficitKind::parse(name)?,
                None => DeficitKind::Hk,
            };
            let eps = sc
                .and_then(|s| s.eps.clone())
                .unwrap_or_else(|| DEFAULT_EPS.to_vec());
            validate_eps_list(&eps)?;
            let resolutions = sc
                .and_then(|s| s.resolutions.clone())
                .unwrap_or_else(|| DEFAULT_SWEEP_RESOLUTIONS.to_vec());
            if resolutions.is_empty() {
                return Err(ConfigError("sweep needs at least one resolution".into()));
            }
            for res in &resolutions {
                validate_resolution(*res)?;
            }
            let cfc_k = sc.and_then(|s| s.cfc_k).unwrap_or(1);
            let cfc_l = sc.and_then(|s| s.cfc_l).unwrap_or(1);
            Command::Sweep { deficit: kind, eps, resolutions, cfc_k, cfc_l }
        }
        Cmd::Serrin { profile, r0, resolution: res } => {
            let sc = cfg.serrin.as_ref();
            let profile = match profile.as_deref().or(sc.and_then(|s| s.profile.as_deref()))
            {
                Some(name) => SerrinProfile::parse(name)?,
                None => SerrinProfile::Linear,
            };
            let r0 = r0.or(sc.and_then(|s| s.r0)).unwrap_or(1.0);
            if !(r0 > 0.0 && r0.is_finite()) {
                return Err(ConfigError(format!(
                    "Serrin ball radius must be positive, got {r0}"
                )));
            }
            let res = res
                .or(sc.and_then(|s| s.resolution))
                .unwrap_or_else(|| resolution[0].max(32));
            if res < 8 {
                return Err(ConfigError(format!(
                    "Serrin quadrature order must be at least 8, got {res}"
                )));
            }
            Command::Serrin { profile, r0, resolution: res }
        }
        Cmd::Steklov { surface } => {
            let spec =
                parse_surface_arg(surface.as_deref(), cfg, SurfaceSpec::Sphere { r: 1.0 })?;
            validate_surface(&spec, space)?;
            Command::Steklov { surface: spec, field: cfg.field.as_ref().map(|f| f.resolve()).transpose()? }
        }
    };

    Ok(Plan {
        command,
        space,
        resolution,
        n_radial,
        seed,
        threads: cli.threads.or(cfg.threads),
        literal_cmc,
        out_json: cli.out_json.clone().or(cfg.out_json.clone()),
        out_csv: cli.out_csv.clone().or(cfg.out_csv.clone()),
    })
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let plan = assemble(cli, &cfg)?;
    umbilic_lab::init_thread_pool(plan.threads);
    umbilic_lab::execute(&plan)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
