//! Physical and numerical configuration of a laboratory run.
//!
//! Units are fixed throughout the crate: ħ = 1 and 2m = 1, so the one-particle
//! operators read `H = -Δ + V₀` and `H' = H + V`, and energies carry units of
//! inverse length squared.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the finite box and how it is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryKind {
    /// The symmetric interval `[-L/2, L/2]`.
    #[serde(rename = "interval")]
    Interval1D,
    /// The ball of radius `L/2`, decomposed into radial channels `ℓ = 0, 1, ...`.
    #[serde(rename = "radial")]
    RadialChannels3D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GeometryKind,
}

impl Geometry {
    pub fn interval() -> Self {
        Geometry {
            kind: GeometryKind::Interval1D,
        }
    }

    pub fn radial() -> Self {
        Geometry {
            kind: GeometryKind::RadialChannels3D,
        }
    }

    /// Half-width of the interval or radius of the ball for box length `length`.
    pub fn half_extent(&self, length: f64) -> f64 {
        0.5 * length
    }

    pub fn domain(&self, length: f64) -> BoxDomain {
        BoxDomain {
            kind: self.kind,
            half_extent: self.half_extent(length),
        }
    }
}

/// Region on which potentials may be sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub kind: GeometryKind,
    pub half_extent: f64,
}

impl BoxDomain {
    pub fn contains(&self, coord: f64) -> bool {
        match self.kind {
            GeometryKind::Interval1D => coord.abs() <= self.half_extent,
            GeometryKind::RadialChannels3D => (0.0..=self.half_extent).contains(&coord),
        }
    }
}

/// Bounded background potential `V₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · cos(2π x / period)`.
    Periodic {
        amplitude: f64,
        period: f64,
    },
    /// Piecewise-linear through `(x, value)` points, constant beyond the ends.
    Tabulated {
        points: Vec<[f64; 2]>,
    },
}

impl Background {
    pub fn is_zero(&self) -> bool {
        match self {
            Background::Zero => true,
            Background::Constant { value } => *value == 0.0,
            Background::Periodic { amplitude, .. } => *amplitude == 0.0,
            Background::Tabulated { points } => points.iter().all(|p| p[1] == 0.0),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::Constant { value } => *value,
            Background::Periodic { amplitude, period } => amplitude * (2.0 * PI * x / period).cos(),
            Background::Tabulated { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first[0] {
                    first[1]
                } else if x >= last[0] {
                    last[1]
                } else {
                    interpolate(points, x).unwrap_or(0.0)
                }
            }
        }
    }

    /// Lower bound of `V₀` over all of space.
    pub fn infimum(&self) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::Constant { value } => *value,
            Background::Periodic { amplitude, .. } => -amplitude.abs(),
            Background::Tabulated { points } if points.is_empty() => 0.0,
            Background::Tabulated { points } => points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::Constant { value } => value.abs(),
            Background::Periodic { amplitude, .. } => amplitude.abs(),
            Background::Tabulated { points } => points.iter().map(|p| p[1].abs()).fold(0.0, f64::max),
        }
    }
}

/// The compactly supported, non-negative perturbation `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `V ≡ 0`, the trivial pair `H' = H`.
    Zero,
    SquareBarrier {
        amplitude: f64,
        radius: f64,
    },
    /// `amplitude · exp(-x² / (2 width²))` cut off at `truncation`.
    TruncatedGaussian {
        amplitude: f64,
        width: f64,
        truncation: f64,
    },
    /// Piecewise-linear through `(x, value)` points; zero outside the sampled
    /// range and beyond `support_radius`.
    Tabulated {
        support_radius: f64,
        points: Vec<[f64; 2]>,
    },
}

impl Perturbation {
    pub fn is_zero(&self) -> bool {
        match self {
            Perturbation::Zero => true,
            Perturbation::SquareBarrier { amplitude, .. } => *amplitude == 0.0,
            Perturbation::TruncatedGaussian { amplitude, .. } => *amplitude == 0.0,
            Perturbation::Tabulated { points, .. } => points.iter().all(|p| p[1] == 0.0),
        }
    }

    /// Declared support radius `R_V`.
    pub fn support_radius(&self) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::SquareBarrier { radius, .. } => *radius,
            Perturbation::TruncatedGaussian { truncation, .. } => *truncation,
            Perturbation::Tabulated { support_radius, .. } => *support_radius,
        }
    }

    /// Pointwise value; exactly zero for `|x| > R_V`.
    pub fn value(&self, x: f64) -> f64 {
        let r = x.abs();
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::SquareBarrier { amplitude, radius } => {
                if r <= *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            Perturbation::TruncatedGaussian {
                amplitude,
                width,
                truncation,
            } => {
                if r <= *truncation {
                    amplitude * (-0.5 * (x / width).powi(2)).exp()
                } else {
                    0.0
                }
            }
            Perturbation::Tabulated { support_radius, points } => {
                if r > *support_radius {
                    0.0
                } else {
                    interpolate(points, x).unwrap_or(0.0)
                }
            }
        }
    }

    /// Average of the inner and outer limits at the support boundary, the
    /// plain value elsewhere. Used by integrators that put a node on `R_V`.
    pub fn node_value(&self, r: f64) -> f64 {
        let support = self.support_radius();
        if support > 0.0 && r == support {
            0.5 * self.value(r)
        } else {
            self.value(r)
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Perturbation::Zero => 0.0,
            Perturbation::SquareBarrier { amplitude, .. } => amplitude.abs(),
            Perturbation::TruncatedGaussian { amplitude, .. } => amplitude.abs(),
            Perturbation::Tabulated { points, .. } => points.iter().map(|p| p[1].abs()).fold(0.0, f64::max),
        }
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> Option<f64> {
    let idx = points.partition_point(|p| p[0] < x);
    if idx < points.len() && points[idx][0] == x {
        return Some(points[idx][1]);
    }
    if idx == 0 || idx == points.len() {
        return None;
    }
    let [x0, y0] = points[idx - 1];
    let [x1, y1] = points[idx];
    let t = (x - x0) / (x1 - x0);
    Some(y0 + t * (y1 - y0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub background: Background,
    pub perturbation: Perturbation,
}

impl PotentialSpec {
    pub fn square_barrier(amplitude: f64, radius: f64) -> Self {
        PotentialSpec {
            background: Background::Zero,
            perturbation: Perturbation::SquareBarrier { amplitude, radius },
        }
    }

    pub fn free() -> Self {
        PotentialSpec {
            background: Background::Zero,
            perturbation: Perturbation::Zero,
        }
    }
}

/// Which multiplication operator to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialPart {
    Background,
    Perturbation,
    Total,
}

/// Evaluate a potential at the given coordinates (signed `x` in 1D, `r ≥ 0`
/// in 3D).
pub fn sample_potential(
    spec: &PotentialSpec,
    which: PotentialPart,
    coords: &[f64],
    domain: &BoxDomain,
) -> Result<Vec<f64>> {
    if let Some(bad) = coords.iter().find(|&&c| !domain.contains(c)) {
        return Err(Error::Domain(format!(
            "coordinate {bad} lies outside the box of half-extent {}",
            domain.half_extent
        )));
    }
    let values = match which {
        PotentialPart::Background => coords.iter().map(|&x| spec.background.value(x)).collect(),
        PotentialPart::Perturbation => coords.iter().map(|&x| spec.perturbation.value(x)).collect(),
        PotentialPart::Total => coords
            .iter()
            .map(|&x| spec.background.value(x) + spec.perturbation.value(x))
            .collect(),
    };
    Ok(values)
}

fn default_refinement() -> f64 {
    4.0
}

fn default_numerov_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Finite-difference spacing `h`, fixed across the whole sweep.
    pub spacing: f64,
    /// The 1D transfer-matrix cells are `h / refinement` wide.
    #[serde(default = "default_refinement")]
    pub scattering_refinement: f64,
    /// Target step of the radial Numerov integration.
    #[serde(default = "default_numerov_step")]
    pub numerov_step: f64,
}

impl GridSpec {
    pub fn new(spacing: f64) -> Self {
        GridSpec {
            spacing,
            scattering_refinement: default_refinement(),
            numerov_step: default_numerov_step(),
        }
    }

    /// Interior point count `n(L)`: `round(L/h) - 1` on the interval,
    /// `round(L/(2h)) - 1` per radial channel. Zero if the box is too small.
    pub fn interior_points(&self, kind: GeometryKind, length: f64) -> usize {
        let cells = match kind {
            GeometryKind::Interval1D => (length / self.spacing).round(),
            GeometryKind::RadialChannels3D => (0.5 * length / self.spacing).round(),
        };
        if cells.is_finite() && cells >= 2.0 {
            cells as usize - 1
        } else {
            0
        }
    }

    /// Interior grid coordinates. The interval grid is laid out symmetrically
    /// as integer multiples of `h` around the origin, so the box actually used
    /// has length `(n + 1) h`.
    pub fn coordinates(&self, kind: GeometryKind, length: f64) -> Vec<f64> {
        let n = self.interior_points(kind, length);
        let h = self.spacing;
        match kind {
            GeometryKind::Interval1D => {
                let center = 0.5 * (n as f64 + 1.0);
                (1..=n).map(|i| (i as f64 - center) * h).collect()
            }
            GeometryKind::RadialChannels3D => (1..=n).map(|i| i as f64 * h).collect(),
        }
    }

    /// Transfer-matrix cell width `h_s`.
    pub fn scattering_step(&self) -> f64 {
        self.spacing / self.scattering_refinement
    }
}

/// How many partial waves enter the 3D scattering sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LmaxPolicy {
    Fixed(u32),
    /// Stop once `sin²δ_ℓ` falls below the tail tolerance twice in a row.
    #[default]
    Automatic,
}

fn d_eigenvalue() -> f64 {
    1e-12
}
fn d_cluster() -> f64 {
    1e-8
}
fn d_degeneracy() -> f64 {
    1e-10
}
fn d_residual() -> f64 {
    1e-10
}
fn d_orthogonality() -> f64 {
    1e-8
}
fn d_max_iter() -> usize {
    8
}
fn d_determinant() -> f64 {
    1e-8
}
fn d_unitarity() -> f64 {
    1e-8
}
fn d_tail() -> f64 {
    1e-10
}
fn d_margin() -> f64 {
    10.0
}
fn d_scaling() -> f64 {
    0.2
}
fn d_zero_slope() -> f64 {
    0.02
}

/// Numerical tolerances. Eigenvalue, cluster, degeneracy and residual
/// tolerances are relative to `‖T‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "d_eigenvalue")]
    pub eigenvalue: f64,
    #[serde(default = "d_cluster")]
    pub cluster: f64,
    #[serde(default = "d_degeneracy")]
    pub degeneracy: f64,
    #[serde(default = "d_residual")]
    pub residual: f64,
    #[serde(default = "d_orthogonality")]
    pub orthogonality: f64,
    #[serde(default = "d_max_iter")]
    pub max_inverse_iterations: usize,
    /// Per-particle slack for determinant inequalities (`tol_det = value · N`).
    #[serde(default = "d_determinant")]
    pub determinant: f64,
    #[serde(default = "d_unitarity")]
    pub unitarity: f64,
    /// Phase-shift tail tolerance on `sin²δ_ℓ`.
    #[serde(default = "d_tail")]
    pub tail: f64,
    /// Working-threshold margin above the largest Fermi energy, in mean level spacings.
    #[serde(default = "d_margin")]
    pub level_margin: f64,
    /// Relative band for fitted slopes against predicted exponents.
    #[serde(default = "d_scaling")]
    pub scaling: f64,
    /// Absolute slope band used when the predicted exponent vanishes.
    #[serde(default = "d_zero_slope")]
    pub zero_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eigenvalue: d_eigenvalue(),
            cluster: d_cluster(),
            degeneracy: d_degeneracy(),
            residual: d_residual(),
            orthogonality: d_orthogonality(),
            max_inverse_iterations: d_max_iter(),
            determinant: d_determinant(),
            unitarity: d_unitarity(),
            tail: d_tail(),
            level_margin: d_margin(),
            scaling: d_scaling(),
            zero_slope: d_zero_slope(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Fermi energies `E`.
    pub energies: Vec<f64>,
    /// Box lengths `L`, strictly increasing.
    pub lengths: Vec<f64>,
    /// Window width `ε` of the smeared estimators; `None` disables them.
    #[serde(default)]
    pub smear_width: Option<f64>,
    #[serde(default)]
    pub lmax: LmaxPolicy,
    /// Worker threads for the sweep; `None` uses the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub geometry: Geometry,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl PhysicsConfig {
    pub fn max_energy(&self) -> f64 {
        self.sweep.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The 1D square-barrier reference scenario used throughout the tests.
    pub fn reference_1d() -> Self {
        PhysicsConfig {
            geometry: Geometry::interval(),
            potential: PotentialSpec::square_barrier(1.0, 0.5),
            grid: GridSpec::new(0.05),
            sweep: SweepSpec {
                energies: vec![2.0],
                lengths: vec![50.0, 100.0, 200.0, 400.0, 800.0, 1600.0],
                smear_width: None,
                lmax: LmaxPolicy::Automatic,
                workers: None,
            },
            tolerances: Tolerances::default(),
        }
    }

    /// Small 1D instance with `n = 60` interior points and `N = 6` particles:
    /// a barrier of height 10 and radius 0.5 in a box of length 3.05 at `E = 40`.
    pub fn small_1d() -> Self {
        PhysicsConfig {
            potential: PotentialSpec::square_barrier(10.0, 0.5),
            sweep: SweepSpec {
                energies: vec![40.0],
                lengths: vec![3.05],
                smear_width: None,
                lmax: LmaxPolicy::Automatic,
                workers: None,
            },
            ..PhysicsConfig::reference_1d()
        }
    }
}

/// Mean spacing of neighbouring levels near `energy`: `2π√E / L` on the
/// interval and `4π√E / L` within one radial channel of radius `L/2`.
pub fn mean_level_spacing(kind: GeometryKind, length: f64, energy: f64) -> f64 {
    let k = energy.max(0.0).sqrt();
    match kind {
        GeometryKind::Interval1D => 2.0 * PI * k / length,
        GeometryKind::RadialChannels3D => 4.0 * PI * k / length,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// Every violated invariant of a configuration; empty on success.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: &'static str, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let text: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::Validation(text.join("; ")))
        }
    }
}

// negated comparisons reject NaN along with out-of-range values
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_config(cfg: &PhysicsConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let kind = cfg.geometry.kind;
    let h = cfg.grid.spacing;
    let lengths = &cfg.sweep.lengths;
    let energies = &cfg.sweep.energies;

    // lengths
    if lengths.is_empty() {
        report.push("empty_schedule", "the L schedule is empty");
    }
    for &l in lengths {
        if !(l.is_finite() && l > 1.0) {
            report.push("length_too_small", format!("L = {l} violates L > 1"));
        }
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        report.push("schedule_not_increasing", "the L schedule must be strictly increasing");
    }

    // perturbation V
    let pert = &cfg.potential.perturbation;
    let support = pert.support_radius();
    match pert {
        Perturbation::Zero => {}
        Perturbation::SquareBarrier { amplitude, radius } => {
            if !(*amplitude >= 0.0) {
                report.push(
                    "perturbation_negative",
                    format!("V ≥ 0 violated: barrier amplitude {amplitude}"),
                );
            }
            if !(*radius > 0.0) {
                report.push("support_radius", format!("support radius {radius} must be positive"));
            }
        }
        Perturbation::TruncatedGaussian {
            amplitude,
            width,
            truncation,
        } => {
            if !(*amplitude >= 0.0) {
                report.push(
                    "perturbation_negative",
                    format!("V ≥ 0 violated: Gaussian amplitude {amplitude}"),
                );
            }
            if !(*width > 0.0) {
                report.push("gaussian_width", format!("Gaussian width {width} must be positive"));
            }
            if !(*truncation > 0.0) {
                report.push(
                    "support_radius",
                    format!("truncation radius {truncation} must be positive"),
                );
            }
        }
        Perturbation::Tabulated { support_radius, points } => {
            if points.is_empty() {
                report.push("tabulated_empty", "tabulated perturbation has no samples");
            }
            if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                report.push("tabulated_order", "tabulated perturbation coordinates must increase");
            }
            if let Some(p) = points.iter().find(|p| p[1] < 0.0) {
                report.push(
                    "perturbation_negative",
                    format!("V ≥ 0 violated: sample {} at x = {}", p[1], p[0]),
                );
            }
            if !(*support_radius > 0.0) {
                report.push(
                    "support_radius",
                    format!("support radius {support_radius} must be positive"),
                );
            }
        }
    }
    if support > 0.5 {
        report.push(
            "support_outside_unit_cell",
            format!("supp(V) ⊆ Λ₁ violated: R_V = {support} > 1/2"),
        );
    }
    if !pert.sup_norm().is_finite() {
        report.push("unbounded", "V must have a finite sup-norm");
    }
    if !cfg.potential.background.sup_norm().is_finite() {
        report.push("unbounded", "V₀ must have a finite sup-norm");
    }
    if let Background::Periodic { period, .. } = cfg.potential.background {
        if !(period > 0.0) {
            report.push("background_period", format!("period {period} must be positive"));
        }
    }

    // grid
    if !(h.is_finite() && h > 0.0) {
        report.push("grid_spacing", format!("grid spacing h = {h} must be positive"));
    } else {
        for &l in lengths {
            let n = cfg.grid.interior_points(kind, l);
            if n < 8 {
                report.push("grid_too_coarse", format!("n(L) = {n} < 8 interior points at L = {l}"));
            }
        }
        if !(cfg.grid.scattering_refinement >= 4.0) {
            report.push("scattering_step", "transfer-matrix cells must satisfy h_s ≤ h/4");
        }
        if !(cfg.grid.numerov_step > 0.0) {
            report.push("scattering_step", "Numerov step must be positive");
        }
    }

    // energies
    if energies.is_empty() {
        report.push("no_energies", "no Fermi energies requested");
    }
    let v0_inf = cfg.potential.background.infimum();
    let band_top = 4.0 / (h * h) + v0_inf;
    for &e in energies {
        if !(e.is_finite() && e > v0_inf && e < band_top) {
            report.push(
                "energy_out_of_range",
                format!("E = {e} must lie strictly inside ({v0_inf}, {band_top})"),
            );
        }
    }
    let e_max = cfg.max_energy();
    if e_max.is_finite() && h > 0.0 {
        let kh = (e_max - v0_inf).max(0.0).sqrt() * h;
        if kh >= 0.5 {
            report.push("dispersion", format!("k·h = {kh:.3} ≥ 0.5 at E_max = {e_max}"));
        }
    }

    // smearing window
    if let Some(eps) = cfg.sweep.smear_width {
        if !(eps > 0.0) {
            report.push("smear_width", format!("ε = {eps} must be positive"));
        } else if let Some(&l0) = lengths.first() {
            for &e in energies {
                let spacing = mean_level_spacing(kind, l0, e);
                if eps <= 5.0 * spacing {
                    report.push(
                        "smear_statistics",
                        format!(
                            "ε = {eps} is not larger than 5 level spacings ({:.4}) at L = {l0}, E = {e}",
                            5.0 * spacing
                        ),
                    );
                }
            }
        }
    }

    // 3D uses spherical symmetry; a periodic background is not radial
    if kind == GeometryKind::RadialChannels3D && matches!(cfg.potential.background, Background::Periodic { .. }) {
        report.push("background_not_radial", "periodic V₀ is not spherically symmetric");
    }

    let t = &cfg.tolerances;
    let positive = [
        ("eigenvalue", t.eigenvalue),
        ("cluster", t.cluster),
        ("degeneracy", t.degeneracy),
        ("residual", t.residual),
        ("orthogonality", t.orthogonality),
        ("determinant", t.determinant),
        ("unitarity", t.unitarity),
        ("tail", t.tail),
        ("level_margin", t.level_margin),
        ("scaling", t.scaling),
        ("zero_slope", t.zero_slope),
    ];
    for (name, value) in positive {
        if !(value > 0.0) {
            report.push("tolerance", format!("tolerance {name} = {value} must be positive"));
        }
    }
    if t.max_inverse_iterations == 0 {
        report.push("tolerance", "max_inverse_iterations must be at least 1");
    }
    if cfg.sweep.workers == Some(0) {
        report.push("workers", "worker count must be at least 1");
    }

    report
}

/// Diagnostic explaining why scattering predictions do not apply, if they don't.
pub fn scattering_diagnostic(cfg: &PhysicsConfig) -> Option<String> {
    if cfg.potential.background.is_zero() {
        None
    } else {
        Some("scattering predictions assume V₀ ≡ 0; only finite-volume statistics are available".into())
    }
}
