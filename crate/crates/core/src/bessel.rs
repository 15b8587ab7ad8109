//! Riccati–Bessel functions `ŝ_ℓ(x) = x j_ℓ(x)` and `ĉ_ℓ(x) = -x y_ℓ(x)`.
//!
//! Both obey `f_{ℓ+1} = (2ℓ+1)/x · f_ℓ - f_{ℓ-1}`. The recurrence is stable
//! upward for `ĉ` and downward for `ŝ`, so `ŝ` is obtained by Miller's method
//! and normalized against `ŝ₀ = sin x` or `ŝ₁`.

/// `ŝ_0(x), ..., ŝ_lmax(x)` for `x > 0`.
pub fn riccati_s(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "Riccati–Bessel argument must be positive");
    let start = lmax + 20 + x.ceil() as usize + (x.sqrt() * 10.0) as usize;
    let mut f = vec![0.0_f64; start + 2];
    f[start] = 1e-30;
    for l in (1..=start).rev() {
        f[l - 1] = (2 * l + 1) as f64 / x * f[l] - f[l + 1];
        if f[l - 1].abs() > 1e250 {
            let s = 1.0 / f[l - 1].abs();
            f[l - 1..].iter_mut().for_each(|v| *v *= s);
        }
    }
    let s0 = x.sin();
    let s1 = x.sin() / x - x.cos();
    let scale = if s0.abs() >= s1.abs() { s0 / f[0] } else { s1 / f[1] };
    f.truncate(lmax + 1);
    f.iter_mut().for_each(|v| *v *= scale);
    f
}

/// `ĉ_0(x), ..., ĉ_lmax(x)` for `x > 0`.
pub fn riccati_c(lmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "Riccati–Bessel argument must be positive");
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(x.cos());
    if lmax >= 1 {
        out.push(x.cos() / x + x.sin());
    }
    for l in 1..lmax {
        let next = (2 * l + 1) as f64 / x * out[l] - out[l - 1];
        out.push(next);
    }
    out
}

/// Derivatives from `f'_ℓ = f_{ℓ-1} - (ℓ/x) f_ℓ`, with `ŝ₀' = cos x` and
/// `ĉ₀' = -sin x`.
pub fn riccati_derivatives(f: &[f64], x: f64, first: f64) -> Vec<f64> {
    let mut d = Vec::with_capacity(f.len());
    if f.is_empty() {
        return d;
    }
    d.push(first);
    for l in 1..f.len() {
        d.push(f[l - 1] - l as f64 / x * f[l]);
    }
    d
}

/// `ĉ_ℓ ŝ_ℓ' - ĉ_ℓ' ŝ_ℓ` for `ℓ = 0..=lmax`; identically 1.
pub fn wronskians(lmax: usize, x: f64) -> Vec<f64> {
    let s = riccati_s(lmax, x);
    let c = riccati_c(lmax, x);
    let ds = riccati_derivatives(&s, x, x.cos());
    let dc = riccati_derivatives(&c, x, -x.sin());
    (0..=lmax).map(|l| c[l] * ds[l] - dc[l] * s[l]).collect()
}
