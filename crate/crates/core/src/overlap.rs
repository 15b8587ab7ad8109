//! Finite-volume overlap statistics of the two Fermi seas.
//!
//! All inner products are discrete with weight `h`. Different channels are
//! orthogonal by symmetry, so every matrix here is kept as one block per
//! channel and cross-channel entries are never formed. A channel of angular
//! momentum `ℓ` stands for `2ℓ + 1` identical copies.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Tolerances;
use crate::spectra::{ChannelKey, ChannelPair, SpectrumPair};
use crate::tridiag::{degenerate_near, sturm_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FillingRule {
    /// Rows `λ ≤ E`, columns the lowest `N_L(E)` perturbed states overall.
    GlobalN,
    /// Both sides cut at `E`.
    FixedEnergy,
}

/// Overlaps `M_jk = ⟨φ_j, ψ_k⟩` of one channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapBlock {
    pub key: ChannelKey,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Copies of each column that are filled. A full column carries the
    /// channel multiplicity; only the last column of a split multiplet
    /// carries less.
    pub col_weights: Vec<usize>,
}

impl OverlapBlock {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[j * self.cols + k]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    fn is_square_and_full(&self) -> bool {
        let m = self.key.multiplicity();
        self.rows == self.cols && self.col_weights.iter().all(|&w| w == m)
    }

    fn truncated(&self, cols: usize, weight: usize) -> OverlapBlock {
        let mut data = Vec::with_capacity(self.rows * cols);
        for j in 0..self.rows {
            data.extend_from_slice(&self.row(j)[..cols]);
        }
        OverlapBlock {
            key: self.key,
            rows: self.rows,
            cols,
            data,
            col_weights: vec![weight; cols],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub rule: FillingRule,
    pub energy: f64,
    pub blocks: Vec<OverlapBlock>,
    /// The last filled perturbed level is degenerate with the first empty
    /// one, or a multiplet was split; the overlap then depends on the basis.
    pub tie_at_fermi_level: bool,
}

impl OverlapMatrix {
    /// Filled rows counted with multiplicity.
    pub fn filled_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.rows * b.key.multiplicity()).sum()
    }

    /// Filled columns counted with multiplicity.
    pub fn filled_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.col_weights.iter().sum::<usize>()).sum()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.data.iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// The full matrix with every channel expanded into its copies, rows and
    /// columns ordered channel by channel. Only defined when every channel
    /// is square and unsplit.
    pub fn assembled(&self) -> Result<(usize, Vec<f64>)> {
        if !self.blocks.iter().all(OverlapBlock::is_square_and_full) {
            return Err(Error::Domain(
                "channel occupations differ; the full matrix is not square".into(),
            ));
        }
        let n = self.filled_rows();
        let mut a = vec![0.0; n * n];
        let mut at = 0;
        for b in &self.blocks {
            for _ in 0..b.key.multiplicity() {
                for j in 0..b.rows {
                    for k in 0..b.cols {
                        a[(at + j) * n + at + k] = b.get(j, k);
                    }
                }
                at += b.rows;
            }
        }
        Ok((n, a))
    }
}

/// `h Σ_i a_i b_i` for every pair of rows: `out = h A Bᵀ`.
fn weighted_gram(a: &[f64], rows: usize, b: &[f64], cols: usize, dim: usize, h: f64) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    if rows == 0 || cols == 0 {
        return out;
    }
    // SAFETY: the slices hold rows·dim, cols·dim and rows·cols elements and
    // the strides describe exactly those row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            rows,
            dim,
            cols,
            h,
            a.as_ptr(),
            dim as isize,
            1,
            b.as_ptr(),
            1,
            dim as isize,
            0.0,
            out.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
    out
}

/// Overlaps of the first `rows` unperturbed with the first `cols` perturbed
/// states of one channel. Identical operators give the identity exactly.
fn channel_block(c: &ChannelPair, rows: usize, cols: usize) -> Result<OverlapBlock> {
    let (u, p) = (&c.unperturbed, &c.perturbed);
    if u.spacing != p.spacing || u.pairs.dim() != p.pairs.dim() || u.length != p.length {
        return Err(Error::Mismatch(format!(
            "channel ℓ = {} spectra come from different grids",
            c.key.l
        )));
    }
    if rows > u.pairs.len() || cols > p.pairs.len() {
        return Err(Error::Numerical(format!(
            "channel ℓ = {} needs {rows} × {cols} states but only {} × {} lie below the working threshold",
            c.key.l,
            u.pairs.len(),
            p.pairs.len()
        )));
    }
    let dim = u.pairs.dim();
    let data = if c.h_matrix == c.h_prime_matrix {
        let mut id = vec![0.0; rows * cols];
        for j in 0..rows.min(cols) {
            id[j * cols + j] = 1.0;
        }
        id
    } else {
        weighted_gram(
            &u.pairs.vector_block()[..rows * dim],
            rows,
            &p.pairs.vector_block()[..cols * dim],
            cols,
            dim,
            u.spacing,
        )
    };
    Ok(OverlapBlock {
        key: c.key,
        rows,
        cols,
        data,
        col_weights: vec![c.key.multiplicity(); cols],
    })
}

fn check_pair(pair: &SpectrumPair) -> Result<()> {
    for c in &pair.channels {
        if c.unperturbed.length != pair.length || c.perturbed.length != pair.length {
            return Err(Error::Mismatch("spectra belong to different box lengths".into()));
        }
    }
    Ok(())
}

struct Selection {
    /// Filled perturbed levels per channel, the last one possibly split.
    cols: Vec<usize>,
    /// Copies filled of the last level when split.
    partial: Vec<Option<usize>>,
    tie: bool,
}

/// Lowest `n` perturbed states across channels, ties broken by `(μ, ℓ, index)`.
fn select_global(pair: &SpectrumPair, n: usize, tol: &Tolerances) -> Result<Selection> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, c) in pair.channels.iter().enumerate() {
        for (k, &mu) in c.perturbed.values().iter().enumerate() {
            cand.push((mu, ci, k));
        }
    }
    cand.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(pair.channels[a.1].key.cmp(&pair.channels[b.1].key))
            .then(a.2.cmp(&b.2))
    });
    let mut cols = vec![0; pair.channels.len()];
    let mut partial = vec![None; pair.channels.len()];
    let mut filled = 0;
    let mut last = None;
    let mut split = false;
    for (i, &(_, ci, _)) in cand.iter().enumerate() {
        if filled == n {
            break;
        }
        let m = pair.channels[ci].key.multiplicity();
        cols[ci] += 1;
        if filled + m > n {
            partial[ci] = Some(n - filled);
            split = true;
            filled = n;
        } else {
            filled += m;
        }
        last = Some(i);
    }
    if filled < n {
        return Err(Error::Numerical(format!(
            "only {filled} of {n} perturbed states lie below the working threshold {}",
            pair.threshold
        )));
    }
    let mut tie = split;
    if let Some(i) = last {
        if let Some(next) = cand.get(i + 1) {
            let (mu, ci, _) = cand[i];
            let scale = pair.channels[ci].h_prime_matrix.norm();
            tie |= next.0 - mu <= tol.degeneracy * scale;
        }
    }
    Ok(Selection { cols, partial, tie })
}

/// Per-channel row counts `#{λ ≤ E}` from Sturm sequences.
fn filled_rows(pair: &SpectrumPair, energy: f64) -> Vec<usize> {
    pair.channels.iter().map(|c| sturm_count(&c.h_matrix, energy)).collect()
}

fn filled_fixed_cols(pair: &SpectrumPair, energy: f64) -> Vec<usize> {
    pair.channels
        .iter()
        .map(|c| sturm_count(&c.h_prime_matrix, energy))
        .collect()
}

fn check_energy(pair: &SpectrumPair, energy: f64) -> Result<()> {
    if !(energy.is_finite() && energy < pair.threshold) {
        return Err(Error::Domain(format!(
            "energy {energy} must lie below the working threshold {}",
            pair.threshold
        )));
    }
    Ok(())
}

fn build(pair: &SpectrumPair, energy: f64, rule: FillingRule, tol: &Tolerances) -> Result<OverlapMatrix> {
    check_pair(pair)?;
    check_energy(pair, energy)?;
    let rows = filled_rows(pair, energy);
    let (cols, partial, tie) = match rule {
        FillingRule::FixedEnergy => (filled_fixed_cols(pair, energy), vec![None; rows.len()], false),
        FillingRule::GlobalN => {
            let n = pair
                .channels
                .iter()
                .zip(&rows)
                .map(|(c, r)| c.key.multiplicity() * r)
                .sum();
            let s = select_global(pair, n, tol)?;
            (s.cols, s.partial, s.tie)
        }
    };
    let blocks = pair
        .channels
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut b = channel_block(c, rows[i], cols[i])?;
            if let Some(p) = partial[i] {
                *b.col_weights.last_mut().expect("split level is a column") = p;
            }
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapMatrix {
        rule,
        energy,
        blocks,
        tie_at_fermi_level: tie,
    })
}

pub fn overlap_matrix(pair: &SpectrumPair, energy: f64, rule: FillingRule, tol: &Tolerances) -> Result<OverlapMatrix> {
    build(pair, energy, rule, tol)
}

/// `ln |det A|` of a row-major `n × n` matrix by LU with partial pivoting.
/// Returns `(-∞, true)` on an exactly zero pivot.
pub fn log_abs_det(a: &mut [f64], n: usize) -> (f64, bool) {
    let mut sum = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .expect("nonempty column");
        let pivot = a[p * n + c];
        if pivot == 0.0 {
            return (f64::NEG_INFINITY, true);
        }
        if p != c {
            for k in 0..n {
                a.swap(c * n + k, p * n + k);
            }
        }
        sum += pivot.abs().ln();
        let (top, rest) = a.split_at_mut((c + 1) * n);
        let prow = &top[c * n..];
        for row in rest.chunks_exact_mut(n) {
            let f = row[c] / pivot;
            if f != 0.0 {
                for k in c + 1..n {
                    row[k] -= f * prow[k];
                }
            }
        }
    }
    (sum, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogOverlap {
    /// `ln |S_L(E)|`, `-∞` when the overlap vanishes.
    pub value: f64,
    /// Some channel holds different numbers of filled states on the two
    /// sides, so the determinant vanishes by symmetry.
    pub occupancy_mismatch: bool,
    /// An exactly zero pivot was met.
    pub singular: bool,
}

/// `ln |det M|` for the GlobalN overlap matrix, `Σ_ℓ (2ℓ+1) ln |det M^(ℓ)|`.
pub fn log_abs_overlap(m: &OverlapMatrix) -> Result<LogOverlap> {
    if m.rule != FillingRule::GlobalN {
        return Err(Error::Domain(
            "the ground-state overlap needs the GlobalN filling".into(),
        ));
    }
    let mut out = LogOverlap {
        value: 0.0,
        occupancy_mismatch: false,
        singular: false,
    };
    if m.blocks.iter().any(|b| !b.is_square_and_full()) {
        out.value = f64::NEG_INFINITY;
        out.occupancy_mismatch = true;
        return Ok(out);
    }
    for b in m.blocks.iter().filter(|b| b.rows > 0) {
        let mut a = b.data.clone();
        let (ld, singular) = log_abs_det(&mut a, b.rows);
        if singular {
            out.value = f64::NEG_INFINITY;
            out.singular = true;
            return Ok(out);
        }
        out.value += b.key.multiplicity() as f64 * ld;
    }
    Ok(out)
}

/// `Σ_j (1 - Σ_k |M_jk|²)` over the filled rows and columns of `m`, each
/// term counted with its number of copies.
pub fn parseval_integral(m: &OverlapMatrix) -> f64 {
    let mut total = 0.0;
    for b in &m.blocks {
        let mult = b.key.multiplicity() as f64;
        for j in 0..b.rows {
            let captured: f64 = b
                .row(j)
                .iter()
                .zip(&b.col_weights)
                .map(|(x, &w)| w as f64 * x * x)
                .sum();
            total += mult - captured;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelOccupation {
    pub l: u32,
    pub multiplicity: usize,
    /// `#{λ ≤ E}` in this channel.
    pub filled: usize,
    /// `#{μ ≤ E}` in this channel.
    pub perturbed_below: usize,
    /// Perturbed levels filled under the GlobalN rule.
    pub global_columns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapReport {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "N")]
    pub particles: usize,
    pub log_abs_overlap: f64,
    #[serde(rename = "I")]
    pub anderson_integral: f64,
    #[serde(rename = "F")]
    pub fixed_energy_integral: f64,
    pub xi: i64,
    pub hadamard_ok: bool,
    pub degenerate_at_e: bool,
    pub tie_at_fermi_level: bool,
    pub occupancy_mismatch: bool,
    pub singular: bool,
    pub channels: Vec<ChannelOccupation>,
}

/// All overlap statistics of one `(L, E)` instance.
pub fn anderson_report(pair: &SpectrumPair, energy: f64, tol: &Tolerances) -> Result<OverlapReport> {
    let global = build(pair, energy, FillingRule::GlobalN, tol)?;
    let fixed_cols = filled_fixed_cols(pair, energy);
    // the fixed-energy matrix is a column subset of the global one unless
    // the perturbed sea at E is larger, which V ≥ 0 excludes channel-wise
    // but not across channels
    let fixed = if global.blocks.iter().zip(&fixed_cols).all(|(b, &c)| c <= b.cols) {
        OverlapMatrix {
            rule: FillingRule::FixedEnergy,
            energy,
            blocks: global
                .blocks
                .iter()
                .zip(&fixed_cols)
                .map(|(b, &c)| b.truncated(c, b.key.multiplicity()))
                .collect(),
            tie_at_fermi_level: false,
        }
    } else {
        build(pair, energy, FillingRule::FixedEnergy, tol)?
    };

    let particles = global.filled_rows();
    let perturbed: usize = pair
        .channels
        .iter()
        .zip(&fixed_cols)
        .map(|(c, &n)| c.key.multiplicity() * n)
        .sum();
    let log = log_abs_overlap(&global)?;
    let anderson_integral = parseval_integral(&global);
    let degenerate = pair
        .channels
        .iter()
        .any(|c| degenerate_near(&c.h_matrix, energy, tol) || degenerate_near(&c.h_prime_matrix, energy, tol));
    let slack = tol.determinant * particles as f64;
    let channels = pair
        .channels
        .iter()
        .zip(&global.blocks)
        .zip(&fixed_cols)
        .map(|((c, b), &below)| ChannelOccupation {
            l: c.key.l,
            multiplicity: c.key.multiplicity(),
            filled: b.rows,
            perturbed_below: below,
            global_columns: b.cols,
        })
        .collect();
    Ok(OverlapReport {
        length: pair.length,
        energy,
        particles,
        log_abs_overlap: log.value,
        anderson_integral,
        fixed_energy_integral: parseval_integral(&fixed),
        xi: particles as i64 - perturbed as i64,
        hadamard_ok: log.value <= -0.5 * anderson_integral + slack,
        degenerate_at_e: degenerate,
        tie_at_fermi_level: global.tie_at_fermi_level,
        occupancy_mismatch: log.occupancy_mismatch,
        singular: log.singular,
        channels,
    })
}

/// Couplings `⟨φ_j, V ψ_k⟩` for the listed rows and columns of one channel,
/// summed over the support of `V` only.
fn couplings(c: &ChannelPair, rows: &[usize], cols: &[usize]) -> Vec<f64> {
    let support: Vec<usize> = (0..c.v.len()).filter(|&i| c.v[i] != 0.0).collect();
    let h = c.unperturbed.spacing;
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &j in rows {
        let phi = c.unperturbed.pairs.vector(j);
        for &k in cols {
            let psi = c.perturbed.pairs.vector(k);
            out.push(h * support.iter().map(|&i| phi[i] * c.v[i] * psi[i]).sum::<f64>());
        }
    }
    out
}

/// Relative size below which a coupling is measured against the floor
/// instead of itself, as a fraction of the largest coupling in the sample.
pub const COUPLING_FLOOR_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingCheck {
    pub max_residual: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Largest violation of `|⟨φ_j,ψ_k⟩| |μ_k - λ_j| = |⟨φ_j, V ψ_k⟩|` over all
/// pairs of held states with `|μ_k - λ_j| > min_gap`, relative to
/// `max(|⟨φ_j, V ψ_k⟩|, floor)`.
pub fn coupling_identity_residual(pair: &SpectrumPair, min_gap: f64) -> Result<CouplingCheck> {
    check_pair(pair)?;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut skipped = 0;
    for c in &pair.channels {
        let (nu, np) = (c.unperturbed.pairs.len(), c.perturbed.pairs.len());
        let block = channel_block(c, nu, np)?;
        let rows: Vec<usize> = (0..nu).collect();
        let cols: Vec<usize> = (0..np).collect();
        let v = couplings(c, &rows, &cols);
        for j in 0..nu {
            for k in 0..np {
                let gap = (c.perturbed.values()[k] - c.unperturbed.values()[j]).abs();
                if gap <= min_gap {
                    skipped += 1;
                    continue;
                }
                samples.push((block.get(j, k).abs() * gap, v[j * np + k].abs()));
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no eigenvalue pair is separated by more than {min_gap}"
        )));
    }
    let largest = samples.iter().fold(0.0_f64, |m, s| m.max(s.1));
    let floor = (COUPLING_FLOOR_FRACTION * largest).max(f64::MIN_POSITIVE);
    let max_residual = samples
        .iter()
        .map(|&(lhs, rhs)| (lhs - rhs).abs() / rhs.max(floor))
        .fold(0.0, f64::max);
    Ok(CouplingCheck {
        max_residual,
        pairs_used: samples.len(),
        pairs_skipped: skipped,
    })
}

/// Windows with fewer levels than this are flagged as low statistics.
pub const MIN_WINDOW_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirmanEstimate {
    pub energy: f64,
    pub energy_prime: f64,
    pub width: f64,
    pub gamma2d: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Unperturbed levels in the window around `E`, with multiplicity.
    pub levels_unperturbed: usize,
    /// Perturbed levels in the window around `E'`, with multiplicity.
    pub levels_perturbed: usize,
    pub low_statistics: bool,
}

fn window(values: &[f64], center: f64, width: f64) -> Vec<usize> {
    let (lo, hi) = (center - 0.5 * width, center + 0.5 * width);
    (0..values.len())
        .filter(|&i| values[i] >= lo && values[i] <= hi)
        .collect()
}

/// Smeared finite-volume surrogates of `γ⁽²⁾(E, E')`, `γ₁(E)` and `γ₂(E')`
/// from spectral windows of width `width`.
pub fn birman_estimate(pair: &SpectrumPair, energy: f64, energy_prime: f64, width: f64) -> Result<BirmanEstimate> {
    check_pair(pair)?;
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Domain(format!("window width must be positive, got {width}")));
    }
    for e in [energy, energy_prime] {
        if !(e - 0.5 * width > 0.0 && e + 0.5 * width < pair.threshold) {
            return Err(Error::Domain(format!(
                "window around {e} of width {width} leaves (0, {})",
                pair.threshold
            )));
        }
    }
    let mut est = BirmanEstimate {
        energy,
        energy_prime,
        width,
        gamma2d: 0.0,
        gamma1: 0.0,
        gamma2: 0.0,
        levels_unperturbed: 0,
        levels_perturbed: 0,
        low_statistics: false,
    };
    for c in &pair.channels {
        let m = c.key.multiplicity();
        let rows = window(c.unperturbed.values(), energy, width);
        let cols = window(c.perturbed.values(), energy_prime, width);
        est.levels_unperturbed += m * rows.len();
        est.levels_perturbed += m * cols.len();
        if c.v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let cross = couplings(c, &rows, &cols);
        est.gamma2d += m as f64 * cross.iter().map(|x| x * x).sum::<f64>();
        for &j in &rows {
            let phi = c.unperturbed.pairs.vector(j);
            est.gamma1 += m as f64 * weighted_v(c, phi, phi);
        }
        for &k in &cols {
            let psi = c.perturbed.pairs.vector(k);
            est.gamma2 += m as f64 * weighted_v(c, psi, psi);
        }
    }
    est.gamma2d /= width * width;
    est.gamma1 /= width;
    est.gamma2 /= width;
    est.low_statistics = est.levels_unperturbed < MIN_WINDOW_LEVELS || est.levels_perturbed < MIN_WINDOW_LEVELS;
    Ok(est)
}

fn weighted_v(c: &ChannelPair, a: &[f64], b: &[f64]) -> f64 {
    c.unperturbed.spacing
        * c.v
            .iter()
            .zip(a.iter().zip(b))
            .map(|(v, (x, y))| v * x * y)
            .sum::<f64>()
}
