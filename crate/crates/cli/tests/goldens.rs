//! The frozen outputs of the built-in instance against a dense oracle.

use anderson_cli::check::golden;
use anderson_core::model::PhysicsConfig;
use anderson_core::spectra::perturbation_samples;
use anderson_core::spectra::{assemble_operator, ChannelKey, Operator};
use nalgebra::{DMatrix, SymmetricEigen};

fn dense(cfg: &PhysicsConfig, which: Operator) -> (Vec<f64>, DMatrix<f64>) {
    let t = assemble_operator(cfg, which, ChannelKey::line(), cfg.sweep.lengths[0]).unwrap();
    let n = t.dim();
    let m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => t.diag()[i],
        1 => t.offdiag()[i.min(j)],
        _ => 0.0,
    });
    let e = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

#[test]
fn goldens_match_dense_diagonalization() {
    let cfg = PhysicsConfig::small_1d();
    let e = cfg.sweep.energies[0];
    let (lam, phi) = dense(&cfg, Operator::Unperturbed);
    let (mu, psi) = dense(&cfg, Operator::Perturbed);
    let n = lam.len();
    let np = lam.iter().filter(|&&x| x <= e).count();
    let nq = mu.iter().filter(|&&x| x <= e).count();
    // Euclidean unit vectors: the grid weight cancels in every overlap
    let overlap = phi.transpose() * &psi;
    let mut i_sum = 0.0;
    let mut f_sum = 0.0;
    for j in 0..np {
        for k in 0..n {
            let w = overlap[(j, k)].powi(2);
            if k >= np {
                i_sum += w;
            }
            if mu[k] > e {
                f_sum += w;
            }
        }
    }
    let det = overlap.view((0, 0), (np, np)).into_owned().determinant();

    assert_eq!(np, golden::PARTICLES);
    assert_eq!(np as i64 - nq as i64, golden::XI);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(i_sum, golden::ANDERSON_INTEGRAL) < 1e-9, "{i_sum}");
    assert!(rel(f_sum, golden::FIXED_ENERGY_INTEGRAL) < 1e-9, "{f_sum}");
    assert!(
        rel(det.abs().ln(), golden::LOG_ABS_OVERLAP) < 1e-9,
        "{}",
        det.abs().ln()
    );
    // the instance does exercise the perturbation
    let v = perturbation_samples(&cfg, ChannelKey::line(), cfg.sweep.lengths[0]).unwrap();
    assert!(v.iter().filter(|&&x| x > 0.0).count() >= 10);
}
