//! Windowed eigensolver for real symmetric tridiagonal matrices.
//!
//! Eigenvalues below a threshold are located by Sturm-sequence bisection and
//! the matching eigenvectors by inverse iteration, so the cost is `O(n·m)` for
//! `m` requested pairs instead of `O(n²)` for a full decomposition.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Domain("tridiagonal matrix must have n ≥ 1".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "off-diagonal length {} does not match n - 1 = {}",
                offdiag.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(&offdiag).any(|v| !v.is_finite()) {
            return Err(Error::Domain("tridiagonal entries must be finite".into()));
        }
        Ok(SymTridiag { diag, offdiag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Infinity norm, an upper bound on the spectral norm.
    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// `T + diag(shift)`.
    pub fn with_diagonal_shift(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::Mismatch("diagonal shift has the wrong length".into()));
        }
        let diag = self.diag.iter().zip(shift).map(|(d, s)| d + s).collect();
        SymTridiag::new(diag, self.offdiag.clone())
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn pivot_floor(&self) -> f64 {
        let emax = self.offdiag.iter().fold(0.0_f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax.max(1.0)
    }
}

fn count_with_floor(t: &SymTridiag, threshold: f64, pivmin: f64) -> usize {
    let d = &t.diag;
    let e = &t.offdiag;
    let mut count = 0;
    let mut q = d[0] - threshold;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q <= 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - threshold - e[i - 1] * e[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q <= 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of eigenvalues `≤ threshold`, from the signs of the `LDLᵀ` pivots
/// of `T - threshold·I`. Tiny pivots are replaced by `-pivmin`.
pub fn sturm_count(t: &SymTridiag, threshold: f64) -> usize {
    count_with_floor(t, threshold, t.pivot_floor())
}

/// True if some eigenvalue lies within `tol.degeneracy · ‖T‖` of `energy`.
pub fn degenerate_near(t: &SymTridiag, energy: f64, tol: &Tolerances) -> bool {
    let delta = tol.degeneracy * t.norm();
    sturm_count(t, energy - delta) != sturm_count(t, energy + delta)
}

/// Eigenpairs below a threshold, vectors stored row by row in one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    dim: usize,
    pub threshold: f64,
    /// Some eigenvalue lies within the degeneracy tolerance of the threshold.
    pub degenerate_at_threshold: bool,
}

impl EigenPairs {
    pub fn from_parts(values: Vec<f64>, vectors: Vec<f64>, dim: usize, threshold: f64) -> Result<Self> {
        if vectors.len() != values.len() * dim {
            return Err(Error::Mismatch("eigenvector buffer has the wrong size".into()));
        }
        Ok(EigenPairs {
            values,
            vectors,
            dim,
            threshold,
            degenerate_at_threshold: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    /// Row-major `len × dim` block of all vectors.
    pub fn vector_block(&self) -> &[f64] {
        &self.vectors
    }

    /// Multiply every vector by `factor`.
    pub fn scale_vectors(&mut self, factor: f64) {
        self.vectors.iter_mut().for_each(|v| *v *= factor);
    }

    /// Number of eigenvalues `≤ energy` among those held.
    pub fn count_at_or_below(&self, energy: f64) -> usize {
        self.values.partition_point(|&v| v <= energy)
    }

    /// `max_j ‖T v_j - λ_j v_j‖₂ / ‖T‖` for unit vectors.
    pub fn max_relative_residual(&self, t: &SymTridiag) -> f64 {
        let mut y = vec![0.0; self.dim];
        let mut worst = 0.0_f64;
        for j in 0..self.len() {
            let v = self.vector(j);
            let norm = dot(v, v).sqrt();
            t.apply(v, &mut y);
            let r: f64 = y
                .iter()
                .zip(v)
                .map(|(a, b)| (a - self.values[j] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r / norm / t.norm());
        }
        worst
    }

    /// `max_{i≠j} |⟨v_i, v_j⟩| / (‖v_i‖‖v_j‖)`.
    pub fn max_orthogonality_defect(&self) -> f64 {
        let norms: Vec<f64> = (0..self.len())
            .map(|j| dot(self.vector(j), self.vector(j)).sqrt())
            .collect();
        let mut worst = 0.0_f64;
        for i in 0..self.len() {
            for j in 0..i {
                let c = dot(self.vector(i), self.vector(j)) / (norms[i] * norms[j]);
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Isolate eigenvalues with index in `[lo_idx, hi_idx)` inside `(lo, hi]`,
/// where `count(lo) = lo_idx` and `count(hi) = hi_idx`.
fn isolate(
    t: &SymTridiag,
    pivmin: f64,
    lo: f64,
    hi: f64,
    lo_idx: usize,
    hi_idx: usize,
    abs_tol: f64,
    out: &mut Vec<(usize, f64, f64)>,
) {
    if hi_idx == lo_idx {
        return;
    }
    if hi_idx == lo_idx + 1 || hi - lo <= abs_tol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
        for idx in lo_idx..hi_idx {
            out.push((idx, lo, hi));
        }
        return;
    }
    let mid = 0.5 * (lo + hi);
    if mid <= lo || mid >= hi {
        for idx in lo_idx..hi_idx {
            out.push((idx, lo, hi));
        }
        return;
    }
    let c = count_with_floor(t, mid, pivmin).clamp(lo_idx, hi_idx);
    isolate(t, pivmin, lo, mid, lo_idx, c, abs_tol, out);
    isolate(t, pivmin, mid, hi, c, hi_idx, abs_tol, out);
}

/// Bisect a bracket `(lo, hi]` holding the eigenvalue with index `idx`.
fn refine(t: &SymTridiag, pivmin: f64, idx: usize, mut lo: f64, mut hi: f64, abs_tol: f64) -> (f64, f64) {
    loop {
        let width = hi - lo;
        if width <= abs_tol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
            return (lo, hi);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return (lo, hi);
        }
        if count_with_floor(t, mid, pivmin) > idx {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// LU factorization of `T - λI` with partial pivoting, the tridiagonal
/// analogue of LAPACK's `dlagtf`.
struct ShiftedLu {
    // U has up to two superdiagonals
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &SymTridiag, lambda: f64, floor: f64) -> Self {
        let n = t.dim();
        let d = &t.diag;
        let e = &t.offdiag;
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];

        // working row i: (a, b, c) at columns (i, i+1, i+2)
        let mut a = d[0] - lambda;
        let mut b = if n > 1 { e[0] } else { 0.0 };
        for i in 0..n.saturating_sub(1) {
            let sub = e[i];
            let next_diag = d[i + 1] - lambda;
            let next_sup = if i + 2 < n { e[i + 1] } else { 0.0 };
            if a.abs() >= sub.abs() {
                let a_safe = if a == 0.0 { floor } else { a };
                let m = sub / a_safe;
                u0[i] = a_safe;
                u1[i] = b;
                u2[i] = 0.0;
                mult[i] = m;
                a = next_diag - m * b;
                b = next_sup;
            } else {
                let m = a / sub;
                u0[i] = sub;
                u1[i] = next_diag;
                u2[i] = next_sup;
                mult[i] = m;
                swapped[i] = true;
                a = b - m * next_diag;
                b = -m * next_sup;
            }
        }
        u0[n - 1] = if a.abs() < floor {
            floor.copysign(if a == 0.0 { 1.0 } else { a })
        } else {
            a
        };
        for p in u0.iter_mut() {
            if p.abs() < floor {
                *p = floor.copysign(if *p == 0.0 { 1.0 } else { *p });
            }
        }
        ShiftedLu {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= self.u2[i] * x[i + 2];
            }
            x[i] = acc / self.u0[i];
        }
    }
}

fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    // deterministic, well spread entries in [-1, 1)
    let mut state = (seed as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    (0..n)
        .map(|_| {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let bits = state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11;
            bits as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn residual_norm(t: &SymTridiag, v: &[f64], lambda: f64, work: &mut [f64]) -> f64 {
    t.apply(v, work);
    work.iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Inverse iteration for one cluster of close eigenvalues, with modified
/// Gram–Schmidt against the cluster's earlier vectors.
fn cluster_vectors(
    t: &SymTridiag,
    values: &[f64],
    first_index: usize,
    tnorm: f64,
    tol: &Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let n = t.dim();
    let floor = f64::EPSILON * tnorm;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut work = vec![0.0; n];
    let mut prev_shift = f64::NEG_INFINITY;
    for (offset, &value) in values.iter().enumerate() {
        // separate coincident shifts so the solves differ
        let mut shift = value;
        if shift - prev_shift < 10.0 * f64::EPSILON * tnorm {
            shift = prev_shift + 10.0 * f64::EPSILON * tnorm;
        }
        prev_shift = shift;
        let lu = ShiftedLu::new(t, shift, floor);
        let mut v = start_vector(n, first_index + offset);
        normalize(&mut v);
        let mut converged = false;
        // two extra solves after the residual test passes sharpen the angle
        // to nearby but unclustered eigenvectors
        let mut extra = 0;
        for _ in 0..tol.max_inverse_iterations + 2 {
            lu.solve(&mut v);
            for q in &out {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
            if normalize(&mut v) == 0.0 {
                v = start_vector(n, first_index + offset + 7919);
                normalize(&mut v);
                continue;
            }
            if converged || residual_norm(t, &v, value, &mut work) <= tol.residual * tnorm {
                converged = true;
                extra += 1;
                if extra > 2 {
                    break;
                }
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "inverse iteration did not converge for eigenvalue #{} ({value:.12e}) in the cluster of indices {}..{}",
                first_index + offset,
                first_index,
                first_index + values.len()
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// Index ranges of the unreduced blocks of `T`, split where an off-diagonal
/// entry is negligible against its neighbouring diagonal entries.
fn unreduced_blocks(t: &SymTridiag) -> Vec<(usize, usize)> {
    let d = &t.diag;
    let e = &t.offdiag;
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 0..e.len() {
        let scale = (d[i].abs() * d[i + 1].abs()).sqrt();
        if e[i].abs() <= f64::EPSILON * scale || e[i] == 0.0 {
            blocks.push((start, i + 1));
            start = i + 1;
        }
    }
    blocks.push((start, d.len()));
    blocks
}

/// Eigenpairs of one unreduced block below `threshold`, vectors local to the block.
fn block_pairs(block: &SymTridiag, threshold: f64, tnorm: f64, tol: &Tolerances) -> Result<Vec<(f64, Vec<f64>)>> {
    let pivmin = block.pivot_floor();
    let abs_tol = tol.eigenvalue * tnorm;
    let m = count_with_floor(block, threshold, pivmin);
    if m == 0 {
        return Ok(Vec::new());
    }
    let (glo, _) = block.gershgorin();
    let lo = glo - abs_tol - f64::EPSILON * tnorm;
    let mut brackets = Vec::with_capacity(m);
    isolate(block, pivmin, lo, threshold, 0, m, abs_tol, &mut brackets);
    brackets.sort_by_key(|b| b.0);

    let refined: Vec<(f64, f64)> = brackets
        .par_iter()
        .map(|&(idx, a, b)| refine(block, pivmin, idx, a, b, abs_tol))
        .collect();
    let mids: Vec<f64> = refined.iter().map(|&(a, b)| 0.5 * (a + b)).collect();

    // group into clusters of nearly equal eigenvalues
    let cluster_gap = tol.cluster * tnorm;
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for j in 1..=m {
        if j == m || mids[j] - mids[j - 1] >= cluster_gap {
            clusters.push((start, j));
            start = j;
        }
    }

    let vectors: Vec<Vec<Vec<f64>>> = clusters
        .par_iter()
        .map(|&(s, e)| cluster_vectors(block, &mids[s..e], s, tnorm, tol))
        .collect::<Result<_>>()?;

    let mut work = vec![0.0; block.dim()];
    Ok(vectors
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(j, v)| {
            block.apply(&v, &mut work);
            let (a, b) = refined[j];
            (dot(&v, &work).clamp(a, b), v)
        })
        .collect())
}

/// All eigenpairs with eigenvalue `≤ threshold`, ascending, with unit
/// Euclidean vectors.
///
/// The matrix is split into unreduced blocks first. Eigenvalues are bisected
/// to `tol.eigenvalue · ‖T‖` and then replaced by the Rayleigh quotient of the
/// converged vector, clamped to the bisection bracket.
pub fn eigs_below(t: &SymTridiag, threshold: f64, tol: &Tolerances) -> Result<EigenPairs> {
    let (glo, ghi) = t.gershgorin();
    if !(threshold > glo && threshold < ghi) {
        return Err(Error::Domain(format!(
            "threshold {threshold} outside the Gershgorin interval ({glo}, {ghi})"
        )));
    }
    let n = t.dim();
    let tnorm = t.norm();

    let mut found: Vec<(f64, usize, Vec<f64>)> = Vec::new();
    for (s, e) in unreduced_blocks(t) {
        let block = SymTridiag {
            diag: t.diag[s..e].to_vec(),
            offdiag: t.offdiag[s..e - 1].to_vec(),
        };
        for (value, v) in block_pairs(&block, threshold, tnorm, tol)? {
            found.push((value, s, v));
        }
    }
    // Rayleigh quotients inside a cluster may cross by rounding
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut values = Vec::with_capacity(found.len());
    let mut vectors = vec![0.0; found.len() * n];
    for (j, (value, offset, v)) in found.into_iter().enumerate() {
        values.push(value);
        vectors[j * n + offset..j * n + offset + v.len()].copy_from_slice(&v);
    }

    let mut pairs = EigenPairs::from_parts(values, vectors, n, threshold)?;
    pairs.degenerate_at_threshold = degenerate_near(t, threshold, tol);
    Ok(pairs)
}
