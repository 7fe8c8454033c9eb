//! Normalized elementary symmetric functions of principal curvatures and the
//! Garding cone tests built on them.
//!
//! `H_k = sigma_k(kappa) / C(n, k)` with `H_0 = 1`; the cone `Gamma_k` is
//! where `H_1, ..., H_k` are all positive. Partial derivatives of `sigma_k`
//! reduce to symmetric functions of the remaining entries, which is how the
//! mixed second derivative `H_{k+1, n1}` is evaluated.

/// Strictness floor for Garding cone membership: `H_j > GAMMA_STRICT` for
/// `j = 1..=k` rather than `>= 0`, so boundary-of-cone samples are rejected.
pub const GAMMA_STRICT: f64 = 1e-12;

/// Binomial coefficient as a float (small arguments only).
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// All elementary symmetric polynomials `sigma_0..=sigma_n` of the entries,
/// by the stable one-pass product recurrence.
pub fn elementary_all(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &x) in kappa.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Normalized mean curvatures `H_0..=H_n`.
pub fn normalized_all(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    elementary_all(kappa)
        .into_iter()
        .enumerate()
        .map(|(k, s)| s / binom(n, k))
        .collect()
}

/// `true` when `kappa` lies in the open Garding cone `Gamma_k`
/// (`H_1, ..., H_k > GAMMA_STRICT`).
pub fn in_garding_cone(kappa: &[f64], k: usize) -> bool {
    let h = normalized_all(kappa);
    (1..=k.min(kappa.len())).all(|j| h[j] > GAMMA_STRICT)
}

/// Squared norm of the traceless second fundamental form from principal
/// curvatures: `|A0|^2 = sum kappa_i^2 - (sum kappa_i)^2 / n`.
pub fn traceless_norm_sq(kappa: &[f64]) -> f64 {
    // Deviation form: summing (kappa_i - mean)^2 avoids the catastrophic
    // cancellation of s2 - s1^2/n near umbilic points.
    let n = kappa.len() as f64;
    let mean: f64 = kappa.iter().sum::<f64>() / n;
    kappa.iter().map(|k| (k - mean) * (k - mean)).sum()
}

/// Mixed second partial `d^2 H_{k+1} / d kappa_n d kappa_1` for sorted
/// curvatures (indices 1 and n are the smallest and largest entry): equals
/// `sigma_{k-1}` of the middle `n - 2` entries over `C(n, k+1)`.
pub fn h_mixed_second(kappa_sorted: &[f64], k: usize) -> f64 {
    let n = kappa_sorted.len();
    assert!(n >= 2 && k >= 1 && k + 1 <= n);
    let middle = &kappa_sorted[1..n - 1];
    elementary_all(middle)[k - 1] / binom(n, k + 1)
}
