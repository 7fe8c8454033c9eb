//! Integral stability deficits and the pinching diagnostics they rest on.
//!
//! Every deficit here is an integral quantity that vanishes exactly on
//! geodesic spheres and is nonnegative on the admissible class of surfaces;
//! the stability theory bounds the distance to a sphere by a power of the
//! deficit. The module also exposes the structural integral identities
//! (Hsiung-Minkowski, divergence) whose residuals validate the quadrature
//! and curvature pipeline end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypersurface::{CurvatureField, Hypersurface};
use crate::spaceform::Spaceform;
use crate::symfunc::{self, GAMMA_STRICT};

/// Surface dimension targeted by this crate.
pub const N: usize = 2;

/// Default radial quadrature order for enclosed-domain integrals.
pub const N_RADIAL_DEFAULT: usize = 48;

fn theta_prime_nodes(m: &Hypersurface) -> Vec<f64> {
    m.rho.iter().map(|&r| m.space.theta_prime(r)).collect()
}

/// `int_M u dA - (n+1) int_Omega theta' dV`: the divergence-theorem residual
/// of the conformal position field. Zero in exact arithmetic for any closed
/// embedded starshaped surface.
pub fn divergence_residual(m: &Hypersurface, cf: &CurvatureField, n_radial: usize) -> f64 {
    let surf = cf.integrate(&cf.support);
    let vol = m.integrate_domain(n_radial, |r, _| m.space.theta_prime(r));
    surf - (N as f64 + 1.0) * vol
}

/// Hsiung-Minkowski residual `int_M theta' H_k dA - int_M u H_{k+1} dA`
/// for `k = 0` or `k = 1`. Zero in exact arithmetic.
pub fn hsiung_residual(m: &Hypersurface, cf: &CurvatureField, k: usize) -> Result<f64> {
    if k >= N {
        return Err(Error::Domain(format!("Hsiung identity needs k < {N}, got {k}")));
    }
    let tp = theta_prime_nodes(m);
    let n = cf.grid.len();
    let mut lhs = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        lhs[i] = tp[i] * cf.hk[i][k];
        rhs[i] = cf.support[i] * cf.hk[i][k + 1];
    }
    Ok(cf.integrate(&lhs) - cf.integrate(&rhs))
}

/// Heintze-Karcher data: `lhs = int_M theta'/H_1`, `rhs = int_M u`,
/// `deficit = lhs - rhs >= 0` for mean-convex embedded surfaces.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HkReport {
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub min_h1: f64,
}

/// Heintze-Karcher deficit. Requires mean convexity (`H_1 > 0` at every
/// node); violating nodes are reported in the error.
pub fn heintze_karcher(m: &Hypersurface, cf: &CurvatureField) -> Result<HkReport> {
    let bad: Vec<usize> = cf
        .hk
        .iter()
        .enumerate()
        .filter(|(_, hk)| hk[1] <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Precondition {
            op: "heintze_karcher",
            what: "mean convexity H_1 > 0".into(),
            nodes: bad,
        });
    }
    let tp = theta_prime_nodes(m);
    let n = cf.grid.len();
    let mut integrand = vec![0.0; n];
    let mut min_h1 = f64::INFINITY;
    for i in 0..n {
        integrand[i] = tp[i] / cf.hk[i][1];
        min_h1 = min_h1.min(cf.hk[i][1]);
    }
    let lhs = cf.integrate(&integrand);
    let rhs = cf.integrate(&cf.support);
    Ok(HkReport { lhs, rhs, deficit: lhs - rhs, min_h1 })
}

/// Constant-mean-curvature deficit data.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CmcReport {
    /// Reference constant compared against `H_1`.
    pub reference: f64,
    /// `int_M theta' (reference - H_1)_+ dA`.
    pub deficit: f64,
}

/// CMC stability deficit `int_M theta' (H* - H_1)_+ dA`.
///
/// The default reference constant is `H* = int_M theta' / ((n+1) int_Omega
/// theta')`, the unique constant compatible with the Hsiung identity (it
/// equals `H_1` exactly when `H_1` is constant, for any such surface, not
/// only spheres). With `literal_constant` the reference is `n H*`, matching
/// sources that state the theorem against the unnormalized mean curvature
/// scale; note that convention does not vanish on spheres when compared to
/// the normalized `H_1`.
pub fn cmc_deficit(
    m: &Hypersurface,
    cf: &CurvatureField,
    n_radial: usize,
    literal_constant: bool,
) -> CmcReport {
    let tp = theta_prime_nodes(m);
    let surf = cf.integrate(&tp);
    let vol = m.integrate_domain(n_radial, |r, _| m.space.theta_prime(r));
    let mut reference = surf / ((N as f64 + 1.0) * vol);
    if literal_constant {
        reference *= N as f64;
    }
    let integrand: Vec<f64> = (0..cf.grid.len())
        .map(|i| tp[i] * (reference - cf.hk[i][1]).max(0.0))
        .collect();
    CmcReport { reference, deficit: cf.integrate(&integrand) }
}

/// Constant-fractional-curvature deficit data for the quotient
/// `H_{k+1} / H_l`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CfcReport {
    pub k: usize,
    pub l: usize,
    /// Reference constant `int theta' H_k / int theta' H_{l-1}`.
    pub reference: f64,
    /// `int_M theta' H_{l-1} (reference - H_{k+1}/H_l)_+ dA`.
    pub deficit: f64,
}

/// CFC deficit for the curvature quotient `H_{k+1} / H_l`, `0 <= l <= k`,
/// `1 <= k <= n-1` (so `k = 1` for surfaces). `H_{-1} := 1 / H_1`.
///
/// Cone preconditions: `kappa` in `Gamma_k` everywhere, and additionally in
/// `Gamma_{k+1}` when `l <= k - 1`.
pub fn cfc_deficit(
    m: &Hypersurface,
    cf: &CurvatureField,
    k: usize,
    l: usize,
) -> Result<CfcReport> {
    if !(1..N).contains(&k) || l > k {
        return Err(Error::Domain(format!(
            "cfc quotient needs 1 <= k <= {} and 0 <= l <= k, got (k, l) = ({k}, {l})",
            N - 1
        )));
    }
    let cone_order = if l + 1 <= k { k + 1 } else { k };
    let bad = cf.cone_violations(cone_order);
    if !bad.is_empty() {
        return Err(Error::Precondition {
            op: "cfc_deficit",
            what: format!("kappa in Gamma_{cone_order}"),
            nodes: bad,
        });
    }

    let tp = theta_prime_nodes(m);
    let n = cf.grid.len();
    // H_{l-1} with the convention H_{-1} = 1 / H_1.
    let h_lm1: Vec<f64> = (0..n)
        .map(|i| if l == 0 { 1.0 / cf.hk[i][1] } else { cf.hk[i][l - 1] })
        .collect();
    let num: Vec<f64> = (0..n).map(|i| tp[i] * cf.hk[i][k]).collect();
    let den: Vec<f64> = (0..n).map(|i| tp[i] * h_lm1[i]).collect();
    let reference = cf.integrate(&num) / cf.integrate(&den);

    let integrand: Vec<f64> = (0..n)
        .map(|i| {
            let quotient = cf.hk[i][k + 1] / cf.hk[i][l];
            tp[i] * h_lm1[i] * (reference - quotient).max(0.0)
        })
        .collect();
    Ok(CfcReport { k, l, reference, deficit: cf.integrate(&integrand) })
}

/// Alexandrov-Fenchel deficit data (flat spaceform only).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AfReport {
    pub k: usize,
    /// Quermassintegrals `W_0..W_3` of the enclosed domain.
    pub w: [f64; 4],
    /// Ball-normalized quermassintegrals (`W_j(B) = 4 pi / 3` for all `j`).
    pub w_tilde: [f64; 4],
    /// `w_tilde[k+1] - w_tilde[k]^{(n-k)/(n-k+1)}`.
    pub value: f64,
}

/// Quermassintegrals of the enclosed domain: `W_0 = |Omega|`,
/// `W_j = (1/(n+1)) int_M H_{j-1} dA` for `j >= 1`. Flat spaceform only.
pub fn quermassintegrals(
    m: &Hypersurface,
    cf: &CurvatureField,
    n_radial: usize,
) -> Result<[f64; 4]> {
    if m.space != Spaceform::Euclidean {
        return Err(Error::Unsupported(
            "quermassintegrals are computed in the flat spaceform only".into(),
        ));
    }
    let vol = m.integrate_domain(n_radial, |_, _| 1.0);
    let mut w = [vol, 0.0, 0.0, 0.0];
    for j in 1..=3 {
        let vals: Vec<f64> = cf.hk.iter().map(|hk| hk[j - 1]).collect();
        w[j] = cf.integrate(&vals) / (N as f64 + 1.0);
    }
    Ok(w)
}

/// Alexandrov-Fenchel deficit
/// `W~_{k+1} - W~_k^{(n-k)/(n-k+1)}` for `1 <= k <= n`, where `W~` is the
/// ball-normalized quermassintegral. Requires `kappa` in `Gamma_k`.
/// For `k = n` the exponent is zero and the value is identically
/// `W~_{n+1} - 1 = 0` by the total-curvature (Gauss-Bonnet) identity; it is
/// reported but carries no information.
pub fn alexandrov_fenchel(
    m: &Hypersurface,
    cf: &CurvatureField,
    k: usize,
    n_radial: usize,
) -> Result<AfReport> {
    if !(1..=N).contains(&k) {
        return Err(Error::Domain(format!("af deficit needs 1 <= k <= {N}, got {k}")));
    }
    let bad = cf.cone_violations(k);
    if !bad.is_empty() {
        return Err(Error::Precondition {
            op: "alexandrov_fenchel",
            what: format!("kappa in Gamma_{k}"),
            nodes: bad,
        });
    }
    let w = quermassintegrals(m, cf, n_radial)?;
    let wb = 4.0 * std::f64::consts::PI / 3.0;
    let w_tilde = [w[0] / wb, w[1] / wb, w[2] / wb, w[3] / wb];
    let expo = (N - k) as f64 / (N - k + 1) as f64;
    let value = w_tilde[k + 1] - w_tilde[k].powf(expo);
    Ok(AfReport { k, w, w_tilde, value })
}

/// Newton-Maclaurin gap `H_k^2 - H_{k+1} H_{k-1}` (nonnegative on
/// `Gamma_k`).
pub fn newton_gap(kappa: &[f64], k: usize) -> f64 {
    let h = symfunc::normalized_all(kappa);
    h[k] * h[k] - h[k + 1] * h[k - 1]
}

/// Pinching ratio `(H_k^2 - H_{k+1} H_{k-1}) / (|A0|^2 H_{k+1,n1}^2)`.
/// Returns `+inf` at umbilic points (both numerator and denominator vanish;
/// the ratio is bounded below, not above). For `n = 2` the ratio is exactly
/// `1/2` at every non-umbilic point.
pub fn newton_ratio(kappa: &[f64], k: usize) -> f64 {
    let gap = newton_gap(kappa, k);
    let mut sorted = kappa.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mixed = symfunc::h_mixed_second(&sorted, k);
    let denom = symfunc::traceless_norm_sq(kappa) * mixed * mixed;
    if denom < 1e-300 {
        return f64::INFINITY;
    }
    gap / denom
}

/// Monte-Carlo estimate of the sharp constant in the strict Newton
/// inequality over the Garding cone.
#[derive(Debug, Clone, Serialize)]
pub struct NewtonEstimate {
    /// Smallest observed pinching ratio.
    pub constant: f64,
    /// Curvature vector attaining it (sorted ascending).
    pub argmin: Vec<f64>,
    pub accepted: usize,
    pub samples: usize,
}

/// Estimate `inf { newton_ratio }` over `Gamma_k` by rejection sampling of
/// curvature vectors in `[-2, 4]^n` (strict cone margin [`GAMMA_STRICT`]).
/// Deterministic for a fixed `seed`. Requires `samples >= 1000` and at
/// least 100 accepted vectors.
pub fn newton_constant_estimate(
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<NewtonEstimate> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::Domain(format!(
            "newton constant needs n >= 2 and 1 <= k <= n-1, got (n, k) = ({n}, {k})"
        )));
    }
    if samples < 1000 {
        return Err(Error::Sampling { accepted: 0, requested: samples, min: 1000 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted = 0usize;
    let mut best = f64::INFINITY;
    let mut argmin = vec![0.0; n];
    for _ in 0..samples {
        let mut kappa: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..4.0)).collect();
        kappa.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h = symfunc::elementary_all(&kappa);
        let strict = (1..=k).all(|j| h[j] > GAMMA_STRICT);
        if !strict {
            continue;
        }
        accepted += 1;
        let ratio = newton_ratio(&kappa, k);
        if ratio < best {
            best = ratio;
            argmin.copy_from_slice(&kappa);
        }
    }
    if accepted < 100 {
        return Err(Error::Sampling { accepted, requested: samples, min: 100 });
    }
    Ok(NewtonEstimate { constant: best, argmin, accepted, samples })
}
