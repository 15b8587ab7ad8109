//! Discretized operator pairs and their spectra below a working threshold.
//!
//! In 1D the box `[-L/2, L/2]` carries one channel. In 3D a spherically
//! symmetric problem in the ball of radius `L/2` splits into radial channels
//! `ℓ = 0, 1, ...`, each a tridiagonal operator for the reduced wavefunction
//! `u(r) = r R(r)` with `u = 0` at both ends, entering with weight `2ℓ + 1`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{mean_level_spacing, sample_potential, GeometryKind, LmaxPolicy, PhysicsConfig, PotentialPart};
use crate::tridiag::{degenerate_near, eigs_below, sturm_count, EigenPairs, SymTridiag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ChannelKey {
    pub l: u32,
}

impl ChannelKey {
    pub fn new(l: u32) -> Self {
        ChannelKey { l }
    }

    /// The single channel of the 1D problem.
    pub fn line() -> Self {
        ChannelKey { l: 0 }
    }

    pub fn multiplicity(&self) -> usize {
        2 * self.l as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Operator {
    /// `H = -Δ + V₀`
    Unperturbed,
    /// `H' = H + V`
    Perturbed,
}

fn checked_grid(cfg: &PhysicsConfig, key: ChannelKey, length: f64) -> Result<Vec<f64>> {
    let kind = cfg.geometry.kind;
    if kind == GeometryKind::Interval1D && key.l != 0 {
        return Err(Error::Domain(format!("the interval has no channel ℓ = {}", key.l)));
    }
    let x = cfg.grid.coordinates(kind, length);
    if x.is_empty() {
        return Err(Error::Validation(format!(
            "box length {length} leaves no interior grid points at h = {}",
            cfg.grid.spacing
        )));
    }
    Ok(x)
}

/// Finite-difference matrix of `which` in channel `key` for box length `length`.
pub fn assemble_operator(cfg: &PhysicsConfig, which: Operator, key: ChannelKey, length: f64) -> Result<SymTridiag> {
    let x = checked_grid(cfg, key, length)?;
    let domain = cfg.geometry.domain(length);
    let part = match which {
        Operator::Unperturbed => PotentialPart::Background,
        Operator::Perturbed => PotentialPart::Total,
    };
    let potential = sample_potential(&cfg.potential, part, &x, &domain)?;
    let h = cfg.grid.spacing;
    let kinetic = 2.0 / (h * h);
    let centrifugal = (key.l as f64) * (key.l as f64 + 1.0);
    let diag = x
        .iter()
        .zip(&potential)
        .map(|(&r, &v)| {
            let mut d = kinetic + v;
            if centrifugal > 0.0 {
                d += centrifugal / (r * r);
            }
            d
        })
        .collect();
    SymTridiag::new(diag, vec![-1.0 / (h * h); x.len() - 1])
}

/// Samples of the perturbation `V` on the channel grid.
pub fn perturbation_samples(cfg: &PhysicsConfig, key: ChannelKey, length: f64) -> Result<Vec<f64>> {
    let x = checked_grid(cfg, key, length)?;
    sample_potential(
        &cfg.potential,
        PotentialPart::Perturbation,
        &x,
        &cfg.geometry.domain(length),
    )
}

/// `E_max` plus half the smearing window, if any, plus `level_margin` mean
/// level spacings at this length.
pub fn working_threshold(cfg: &PhysicsConfig, length: f64) -> f64 {
    let e_max = cfg.max_energy();
    let half_window = cfg.sweep.smear_width.map_or(0.0, |w| 0.5 * w);
    e_max + half_window + cfg.tolerances.level_margin * mean_level_spacing(cfg.geometry.kind, length, e_max)
}

/// Eigenpairs of one channel operator, normalized so that `h Σ v_i² = 1`.
#[derive(Debug, Clone)]
pub struct ChannelSpectrum {
    pub key: ChannelKey,
    pub which: Operator,
    pub length: f64,
    pub spacing: f64,
    pub pairs: EigenPairs,
}

impl ChannelSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.pairs.values
    }

    pub fn count_at_or_below(&self, energy: f64) -> usize {
        self.pairs.count_at_or_below(energy)
    }

    /// Discrete inner product with weight `h`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.spacing * crate::tridiag::dot(a, b)
    }
}

fn solve_channel(t: &SymTridiag, cfg: &PhysicsConfig, threshold: f64) -> Result<EigenPairs> {
    let mut pairs = if sturm_count(t, threshold) == 0 {
        let mut empty = EigenPairs::from_parts(Vec::new(), Vec::new(), t.dim(), threshold)?;
        empty.degenerate_at_threshold = degenerate_near(t, threshold, &cfg.tolerances);
        empty
    } else {
        eigs_below(t, threshold, &cfg.tolerances)?
    };
    pairs.scale_vectors(1.0 / cfg.grid.spacing.sqrt());
    Ok(pairs)
}

pub fn spectrum_below(
    cfg: &PhysicsConfig,
    which: Operator,
    key: ChannelKey,
    length: f64,
    threshold: f64,
) -> Result<ChannelSpectrum> {
    let t = assemble_operator(cfg, which, key, length)?;
    Ok(ChannelSpectrum {
        key,
        which,
        length,
        spacing: cfg.grid.spacing,
        pairs: solve_channel(&t, cfg, threshold)?,
    })
}

/// Partial-wave cutoff of the automatic policy: the smallest `ℓ` whose
/// centrifugal barrier at the edge of the support exceeds `4 E_max`.
pub fn policy_lmax(cfg: &PhysicsConfig) -> u32 {
    match cfg.sweep.lmax {
        LmaxPolicy::Fixed(l) => l,
        LmaxPolicy::Automatic => {
            let r = cfg.potential.perturbation.support_radius();
            let bound = 4.0 * cfg.max_energy().max(0.0) * r * r;
            let mut l = 0u32;
            while (l as f64) * (l as f64 + 1.0) <= bound {
                l += 1;
            }
            l
        }
    }
}

/// Channels that must be diagonalized at this length: every `ℓ` whose
/// unperturbed channel has a level at or below `threshold`, and at least
/// `0..=policy_lmax`. Since `V ≥ 0` the perturbed channels are never lower.
pub fn channel_keys(cfg: &PhysicsConfig, length: f64, threshold: f64) -> Result<Vec<ChannelKey>> {
    if cfg.geometry.kind == GeometryKind::Interval1D {
        return Ok(vec![ChannelKey::line()]);
    }
    let floor = policy_lmax(cfg);
    let mut keys = Vec::new();
    let mut l = 0u32;
    loop {
        let key = ChannelKey::new(l);
        let occupied = sturm_count(&assemble_operator(cfg, Operator::Unperturbed, key, length)?, threshold) > 0;
        if !occupied && l > floor {
            break;
        }
        keys.push(key);
        l += 1;
    }
    Ok(keys)
}

/// Particle number `N_L(E)` from Sturm counts of `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleNumber {
    pub total: usize,
    /// `(channel, levels ≤ E)`; the total weighs each count by the multiplicity.
    pub channels: Vec<(ChannelKey, usize)>,
    pub degenerate_at_energy: bool,
}

fn counted(cfg: &PhysicsConfig, which: Operator, length: f64, energy: f64) -> Result<ParticleNumber> {
    let keys = channel_keys(cfg, length, energy)?;
    let per: Vec<(ChannelKey, usize, bool)> = keys
        .par_iter()
        .map(|&key| {
            let t = assemble_operator(cfg, which, key, length)?;
            Ok((
                key,
                sturm_count(&t, energy),
                degenerate_near(&t, energy, &cfg.tolerances),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(ParticleNumber {
        total: per.iter().map(|(k, c, _)| k.multiplicity() * c).sum(),
        degenerate_at_energy: per.iter().any(|p| p.2),
        channels: per.into_iter().map(|(k, c, _)| (k, c)).collect(),
    })
}

pub fn particle_number(cfg: &PhysicsConfig, length: f64, energy: f64) -> Result<ParticleNumber> {
    counted(cfg, Operator::Unperturbed, length, energy)
}

/// `#{μ ≤ E}` with multiplicity, the perturbed counterpart of [`particle_number`].
pub fn perturbed_count(cfg: &PhysicsConfig, length: f64, energy: f64) -> Result<ParticleNumber> {
    counted(cfg, Operator::Perturbed, length, energy)
}

/// Both spectra of one channel together with the perturbation samples.
#[derive(Debug, Clone)]
pub struct ChannelPair {
    pub key: ChannelKey,
    pub unperturbed: ChannelSpectrum,
    pub perturbed: ChannelSpectrum,
    pub h_matrix: SymTridiag,
    pub h_prime_matrix: SymTridiag,
    pub v: Vec<f64>,
}

/// All channel spectra of `H` and `H'` at one box length.
#[derive(Debug, Clone)]
pub struct SpectrumPair {
    pub kind: GeometryKind,
    pub length: f64,
    pub spacing: f64,
    pub threshold: f64,
    pub channels: Vec<ChannelPair>,
}

impl SpectrumPair {
    pub fn is_free(&self) -> bool {
        self.channels.iter().all(|c| c.v.iter().all(|&x| x == 0.0))
    }
}

/// Diagonalize `H` and `H'` in every needed channel below `threshold`.
pub fn spectrum_pair(cfg: &PhysicsConfig, length: f64, threshold: f64) -> Result<SpectrumPair> {
    let keys = channel_keys(cfg, length, threshold)?;
    let channels = keys
        .par_iter()
        .map(|&key| {
            let h_matrix = assemble_operator(cfg, Operator::Unperturbed, key, length)?;
            let h_prime_matrix = assemble_operator(cfg, Operator::Perturbed, key, length)?;
            let make = |t: &SymTridiag, which| -> Result<ChannelSpectrum> {
                Ok(ChannelSpectrum {
                    key,
                    which,
                    length,
                    spacing: cfg.grid.spacing,
                    pairs: solve_channel(t, cfg, threshold)?,
                })
            };
            Ok(ChannelPair {
                key,
                unperturbed: make(&h_matrix, Operator::Unperturbed)?,
                perturbed: make(&h_prime_matrix, Operator::Perturbed)?,
                v: perturbation_samples(cfg, key, length)?,
                h_matrix,
                h_prime_matrix,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumPair {
        kind: cfg.geometry.kind,
        length,
        spacing: cfg.grid.spacing,
        threshold,
        channels,
    })
}
