//! Infinite-volume scattering predictions of the decay exponent `γ(E)`.
//!
//! In 1D the 2×2 S-matrix comes from a transfer matrix across a piecewise
//! constant version of `V`; in 3D with a radial `V` the phase shifts come from
//! Numerov integration of the reduced radial equation matched to
//! Riccati–Bessel functions. Both require `V₀ ≡ 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{riccati_c, riccati_s};
use crate::error::{Error, Result};
use crate::model::{GeometryKind, GridSpec, LmaxPolicy, Perturbation, PhysicsConfig, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SMatrix1D {
    pub energy: f64,
    /// `(re, im)` of the transmission amplitude.
    #[serde(serialize_with = "ser_complex")]
    pub t: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub r_left: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub r_right: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl SMatrix1D {
    /// Largest deviation of `|t|² + |r|²` from 1 over both incidences.
    pub fn unitarity_defect(&self) -> f64 {
        let t2 = self.t.norm_sqr();
        (t2 + self.r_left.norm_sqr() - 1.0)
            .abs()
            .max((t2 + self.r_right.norm_sqr() - 1.0).abs())
    }
}

fn require_positive(energy: f64) -> Result<()> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Domain(format!(
            "scattering needs a positive energy, got {energy}"
        )));
    }
    Ok(())
}

/// Real transfer matrix of `(u, u')` across a cell of width `d` where
/// `u'' = (v - E) u`.
fn cell_transfer(q2: f64, d: f64) -> [[f64; 2]; 2] {
    // q2 = E - v
    let z = q2 * d * d;
    if z.abs() < 1e-8 {
        // second-order series in z keeps full precision near q = 0
        let c = 1.0 - z / 2.0 + z * z / 24.0;
        let s_over_q = d * (1.0 - z / 6.0 + z * z / 120.0);
        let q_s = -q2 * d * (1.0 - z / 6.0);
        return [[c, s_over_q], [q_s, c]];
    }
    if q2 > 0.0 {
        let q = q2.sqrt();
        let (s, c) = (q * d).sin_cos();
        [[c, s / q], [-q * s, c]]
    } else {
        let kappa = (-q2).sqrt();
        let (s, c) = ((kappa * d).sinh(), (kappa * d).cosh());
        [[c, s / kappa], [kappa * s, c]]
    }
}

fn mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Transmission and reflection amplitudes of `V` at energy `E`, using cells
/// no wider than `max_cell` across `[-R_V, R_V]`.
///
/// With plane-wave amplitudes `(A, B)` of `A e^{ikx} + B e^{-ikx}` on the
/// left and `(C, D)` on the right, `(C, D) = K (A, B)`, and
/// `t = 1/K₂₂`, `r_left = -K₂₁/K₂₂`, `r_right = K₁₂/K₂₂`.
pub fn s_matrix_1d(v: &Perturbation, energy: f64, max_cell: f64) -> Result<SMatrix1D> {
    require_positive(energy)?;
    if max_cell.is_nan() || max_cell <= 0.0 {
        return Err(Error::Domain(format!("cell width must be positive, got {max_cell}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if v.is_zero() {
        return Ok(SMatrix1D {
            energy,
            t: one,
            r_left: zero,
            r_right: zero,
        });
    }
    let support = v.support_radius();
    let cells = (2.0 * support / max_cell).ceil().max(1.0) as usize;
    let d = 2.0 * support / cells as f64;
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..cells {
        let mid = -support + (i as f64 + 0.5) * d;
        m = mul(&cell_transfer(energy - v.value(mid), d), &m);
    }
    let k = energy.sqrt();
    let ik = Complex64::new(0.0, k);
    // W(x) maps (A, B) to (u, u') at x
    let w = |x: f64| {
        let p = (ik * x).exp();
        let n = (-ik * x).exp();
        [[p, n], [ik * p, -ik * n]]
    };
    let wl = w(-support);
    let wr = w(support);
    let det_r = wr[0][0] * wr[1][1] - wr[0][1] * wr[1][0];
    let wr_inv = [
        [wr[1][1] / det_r, -wr[0][1] / det_r],
        [-wr[1][0] / det_r, wr[0][0] / det_r],
    ];
    let mc = |i: usize, j: usize| Complex64::new(m[i][j], 0.0);
    let mut mw = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            mw[i][j] = mc(i, 0) * wl[0][j] + mc(i, 1) * wl[1][j];
        }
    }
    let mut kk = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            kk[i][j] = wr_inv[i][0] * mw[0][j] + wr_inv[i][1] * mw[1][j];
        }
    }
    Ok(SMatrix1D {
        energy,
        t: one / kk[1][1],
        r_left: -kk[1][0] / kk[1][1],
        r_right: kk[0][1] / kk[1][1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GammaMethod {
    #[serde(rename = "HS_1D")]
    HilbertSchmidt1D,
    #[serde(rename = "PartialWave3D")]
    PartialWave3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPrediction {
    pub energy: f64,
    pub gamma: f64,
    /// Total cross section in 3D.
    pub sigma_total: Option<f64>,
    /// `|t|²` in 1D.
    pub transmission: Option<f64>,
    /// `|r_left|²` in 1D.
    pub reflection: Option<f64>,
    pub method: GammaMethod,
}

/// `γ = (2π)⁻² (2|t-1|² + |r_left|² + |r_right|²)`.
pub fn gamma_1d(s: &SMatrix1D, tol: &Tolerances) -> Result<GammaPrediction> {
    let defect = s.unitarity_defect();
    if defect > tol.unitarity {
        return Err(Error::Numerical(format!(
            "S-matrix at E = {} violates unitarity by {defect:.3e}",
            s.energy
        )));
    }
    let hs = 2.0 * (s.t - 1.0).norm_sqr() + s.r_left.norm_sqr() + s.r_right.norm_sqr();
    Ok(GammaPrediction {
        energy: s.energy,
        gamma: hs / (4.0 * PI * PI),
        sigma_total: None,
        transmission: Some(s.t.norm_sqr()),
        reflection: Some(s.r_left.norm_sqr()),
        method: GammaMethod::HilbertSchmidt1D,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseShiftTable {
    pub energy: f64,
    /// `δ_ℓ` reduced to `(-π/2, π/2]`, `ℓ = 0, 1, ...`.
    pub shifts: Vec<f64>,
    /// Largest `sin² δ_ℓ` among the trailing partial waves that closed the table.
    pub tail_bound: f64,
}

impl PhaseShiftTable {
    pub fn lmax(&self) -> usize {
        self.shifts.len().saturating_sub(1)
    }
}

fn reduce_mod_pi(d: f64) -> f64 {
    let mut r = d.rem_euclid(PI);
    if r > 0.5 * PI {
        r -= PI;
    }
    r
}

/// Uniform radial grid with a node on `R_V`, step at most `max_step`.
fn radial_step(support: f64, max_step: f64) -> (f64, usize) {
    let m = (support / max_step).ceil().max(1.0) as usize;
    (support / m as f64, m)
}

/// Outward Numerov solution of `u'' = [ℓ(ℓ+1)/r² + V - E] u`, returned at
/// the node indices `at` (ascending), up to a common factor.
fn numerov(v: &Perturbation, l: usize, energy: f64, h: f64, m_support: usize, at: &[usize]) -> Vec<f64> {
    let last = *at.last().expect("at least one sampling node");
    let support = v.support_radius();
    let cent = (l * (l + 1)) as f64;
    let pot = |i: usize| -> f64 {
        if i == m_support {
            v.node_value(support)
        } else if i > m_support {
            0.0
        } else {
            v.value(i as f64 * h)
        }
    };
    let f = |i: usize| -> f64 {
        let r = i as f64 * h;
        let barrier = if cent > 0.0 { cent / (r * r) } else { 0.0 };
        barrier + pot(i) - energy
    };
    // series start u ∝ r^{ℓ+1}(1 + a r²), scaled by h^{-(ℓ+1)}; the s-wave
    // starts from the exact u(0) = 0 instead, where f(0) is finite
    let a = (v.value(0.0) - energy) / (4 * l + 6) as f64;
    let series = |i: usize| {
        let r = i as f64 * h;
        (i as f64).powi(l as i32 + 1) * (1.0 + a * r * r)
    };
    let first = if l == 0 { 0 } else { 1 };
    let mut prev = series(first);
    let mut here = series(first + 1);
    let c = h * h / 12.0;
    let mut out = vec![0.0; at.len()];
    let mut next_at = 0;
    let record = |i: usize, u: f64, out: &mut Vec<f64>, next_at: &mut usize| {
        while *next_at < at.len() && at[*next_at] == i {
            out[*next_at] = u;
            *next_at += 1;
        }
    };
    record(first, prev, &mut out, &mut next_at);
    record(first + 1, here, &mut out, &mut next_at);
    let (mut f_prev, mut f_here) = (f(first), f(first + 1));
    for i in first + 1..last {
        let f_next = f(i + 1);
        let next = (2.0 * here * (1.0 + 5.0 * c * f_here) - prev * (1.0 - c * f_prev)) / (1.0 - c * f_next);
        prev = here;
        here = next;
        f_prev = f_here;
        f_here = f_next;
        if here.abs() > 1e200 {
            let s = 1e-200;
            prev *= s;
            here *= s;
            out[..next_at].iter_mut().for_each(|u| *u *= s);
        }
        record(i + 1, here, &mut out, &mut next_at);
    }
    out
}

/// Matching attempts with successively shifted radii.
const MATCH_ATTEMPTS: usize = 6;

/// `δ_ℓ` from the Numerov solution sampled at two radii beyond `R_V`.
///
/// Outside the support `u ∝ ŝ_ℓ(kr) + tan δ ĉ_ℓ(kr)`, so two samples give
/// `tan δ = [ŝ(kR₁)u(R₂) - ŝ(kR₂)u(R₁)] / [ĉ(kR₂)u(R₁) - ĉ(kR₁)u(R₂)]`.
/// Radii are rounded to grid nodes.
pub fn phase_shift_at(v: &Perturbation, l: usize, energy: f64, max_step: f64, radii: (f64, f64)) -> Result<f64> {
    require_positive(energy)?;
    if v.is_zero() {
        return Ok(0.0);
    }
    let support = v.support_radius();
    let (h, m) = radial_step(support, max_step);
    let k = energy.sqrt();
    let shift = PI / (8.0 * k);
    for attempt in 0..MATCH_ATTEMPTS {
        let extra = attempt as f64 * shift;
        let i1 = ((radii.0 + extra) / h).round() as usize;
        let i2 = ((radii.1 + extra) / h).round() as usize;
        if i1 <= m || i2 <= i1 {
            return Err(Error::Domain(format!(
                "matching radii ({}, {}) must exceed R_V = {support} and be distinct",
                radii.0, radii.1
            )));
        }
        let u = numerov(v, l, energy, h, m, &[i1, i2]);
        let (x1, x2) = (k * i1 as f64 * h, k * i2 as f64 * h);
        let (s1, s2) = (riccati_s(l, x1)[l], riccati_s(l, x2)[l]);
        let (c1, c2) = (riccati_c(l, x1)[l], riccati_c(l, x2)[l]);
        let num = s1 * u[1] - s2 * u[0];
        let den = c2 * u[0] - c1 * u[1];
        let scale = (c2 * u[0]).abs() + (c1 * u[1]).abs();
        if den.abs() > 1e-8 * scale {
            return Ok(reduce_mod_pi(num.atan2(den)));
        }
    }
    Err(Error::Numerical(format!(
        "phase shift matching for ℓ = {l} at E = {energy} failed at {MATCH_ATTEMPTS} radius pairs"
    )))
}

/// Default matching radii `R₁ = R_V + π/(4k)`, `R₂ = R₁ + π/(2k)`.
pub fn default_radii(support: f64, energy: f64) -> (f64, f64) {
    let k = energy.sqrt();
    let r1 = support + PI / (4.0 * k);
    (r1, r1 + PI / (2.0 * k))
}

/// Give up raising `ℓ_max` beyond this.
pub const LMAX_CEILING: usize = 400;

/// Phase shifts for `ℓ = 0..`, stopping once two consecutive partial waves
/// have `sin² δ_ℓ` below `tol.tail`, but never before a fixed policy cutoff.
pub fn phase_shifts_3d(
    v: &Perturbation,
    energy: f64,
    policy: LmaxPolicy,
    grid: &GridSpec,
    tol: &Tolerances,
) -> Result<PhaseShiftTable> {
    require_positive(energy)?;
    let floor = match policy {
        LmaxPolicy::Fixed(l) => l as usize,
        LmaxPolicy::Automatic => 0,
    };
    if v.is_zero() {
        return Ok(PhaseShiftTable {
            energy,
            shifts: vec![0.0; floor + 1],
            tail_bound: 0.0,
        });
    }
    let radii = default_radii(v.support_radius(), energy);
    let mut shifts: Vec<f64> = Vec::new();
    // evaluate in parallel batches; each ℓ is independent
    let batch = 8;
    loop {
        let start = shifts.len();
        let fresh: Vec<f64> = (start..start + batch)
            .into_par_iter()
            .map(|l| phase_shift_at(v, l, energy, grid.numerov_step, radii))
            .collect::<Result<_>>()?;
        shifts.extend(fresh);
        let small = |d: f64| d.sin().powi(2) < tol.tail;
        let done = (1..shifts.len()).find(|&l| l >= floor && small(shifts[l]) && small(shifts[l - 1]));
        if let Some(l) = done {
            shifts.truncate(l + 1);
            let tail_bound = shifts[l].sin().powi(2).max(shifts[l - 1].sin().powi(2));
            return Ok(PhaseShiftTable {
                energy,
                shifts,
                tail_bound,
            });
        }
        if shifts.len() > LMAX_CEILING {
            return Err(Error::Numerical(format!(
                "phase shifts at E = {energy} still exceed the tail tolerance at ℓ = {LMAX_CEILING}"
            )));
        }
    }
}

/// Relative tolerance of the two-route consistency check.
pub const TWO_ROUTE_TOLERANCE: f64 = 1e-12;

/// `γ = π⁻² Σ (2ℓ+1) sin² δ_ℓ`, cross-checked against `E σ / (4π³)`.
pub fn gamma_3d(table: &PhaseShiftTable) -> Result<GammaPrediction> {
    let sum: f64 = table
        .shifts
        .iter()
        .enumerate()
        .map(|(l, d)| (2 * l + 1) as f64 * d.sin().powi(2))
        .sum();
    let gamma = sum / (PI * PI);
    let sigma = 4.0 * PI / table.energy * sum;
    let via_sigma = table.energy * sigma / (4.0 * PI.powi(3));
    if (gamma - via_sigma).abs() > TWO_ROUTE_TOLERANCE * gamma.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "partial-wave γ = {gamma} disagrees with the cross-section route {via_sigma}"
        )));
    }
    Ok(GammaPrediction {
        energy: table.energy,
        gamma,
        sigma_total: Some(sigma),
        transmission: None,
        reflection: None,
        method: GammaMethod::PartialWave3D,
    })
}

/// Why a configuration has no scattering prediction, if it has none.
pub fn require_scattering_setting(cfg: &PhysicsConfig) -> Result<()> {
    match crate::model::scattering_diagnostic(cfg) {
        Some(msg) => Err(Error::Domain(msg)),
        None => Ok(()),
    }
}

/// The prediction of `γ(E)` for a configuration's geometry and potential.
pub fn predict_gamma(cfg: &PhysicsConfig, energy: f64) -> Result<GammaPrediction> {
    require_scattering_setting(cfg)?;
    let v = &cfg.potential.perturbation;
    match cfg.geometry.kind {
        GeometryKind::Interval1D => {
            let s = s_matrix_1d(v, energy, cfg.grid.scattering_step())?;
            gamma_1d(&s, &cfg.tolerances)
        }
        GeometryKind::RadialChannels3D => {
            let table = phase_shifts_3d(v, energy, cfg.sweep.lmax, &cfg.grid, &cfg.tolerances)?;
            gamma_3d(&table)
        }
    }
}
