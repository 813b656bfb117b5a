//! Oracles shared by the integration tests. Each one is computed from the
//! received signal or by brute force, never from the library's assembly.
#![allow(dead_code)]

use std::f64::consts::PI;

use ciblp::assembly::BlockProblem;
use ciblp::Modulation;
use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

/// `(α_A, α_B)` with `r = α_A·a + α_B·b`, where `a`, `b` run along the
/// symbol's decision boundaries.
pub fn alpha_oracle(r: Complex64, s: Complex64, modulation: Modulation) -> (f64, f64) {
    let (a, b) = if modulation.is_psk() {
        let half = PI / modulation.order() as f64;
        let len = s.norm() / (2.0 * half.cos());
        (Complex64::from_polar(len, s.arg() - half), Complex64::from_polar(len, s.arg() + half))
    } else {
        (Complex64::new(s.re, 0.0), Complex64::new(0.0, s.im))
    };
    let basis = Matrix2::new(a.re, b.re, a.im, b.im);
    let x = basis.lu().solve(&Vector2::new(r.re, r.im)).unwrap();
    (x[0], x[1])
}

/// The real parameters of `W`: entry `i` of `Re W` then of `Im W`.
pub fn unit_precoder(n_t: usize, k: usize, i: usize) -> DMatrix<Complex64> {
    let mut w = DMatrix::zeros(n_t, k);
    let cells = n_t * k;
    w[i % cells] = if i < cells { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
    w
}

/// `Σ_n Σ_k δ·α` for the received signal `H W s^n`, in the component order
/// `[A of users 0..K, B of users 0..K]` per slot.
pub fn dual_functional(block: &BlockProblem, w: &DMatrix<Complex64>, delta: &DVector<f64>) -> f64 {
    let k = block.users();
    let rx = &block.h * w * &block.s;
    let mut total = 0.0;
    for n in 0..block.slots() {
        for user in 0..k {
            let (aa, ab) = alpha_oracle(rx[(user, n)], block.s[(user, n)], block.modulation);
            total += delta[n * 2 * k + user] * aa + delta[n * 2 * k + k + user] * ab;
        }
    }
    total
}

/// `ℓᵀP⁺ℓ`, where `ℓ` is the gradient of `W ↦ Σ δ·α` and `P` the block
/// power quadratic form, both over the real parameters of `W`. `ℓ` always
/// lies in the range of `P`, so the pseudo-inverse covers rank-deficient
/// symbol blocks too.
pub fn power_dual(block: &BlockProblem, delta: &DVector<f64>) -> f64 {
    let (n_t, k) = (block.antennas(), block.users());
    let dim = 2 * n_t * k;
    let ell = DVector::from_fn(dim, |i, _| dual_functional(block, &unit_precoder(n_t, k, i), delta));
    let images: Vec<DMatrix<Complex64>> = (0..dim).map(|i| unit_precoder(n_t, k, i) * &block.s).collect();
    let p = DMatrix::from_fn(dim, dim, |i, j| {
        images[i].iter().zip(images[j].iter()).map(|(a, c)| (a.conj() * c).re).sum::<f64>()
    });
    let eig = SymmetricEigen::new(p);
    let cutoff = 1e-10 * eig.eigenvalues.amax();
    let proj = eig.eigenvectors.transpose() * &ell;
    proj.iter().zip(eig.eigenvalues.iter()).filter(|(_, &l)| l > cutoff).map(|(c, l)| c * c / l).sum()
}

/// Brute-force projection: try every subset of sign-constrained indices as
/// the zero set, shift the rest, keep the closest feasible candidate.
pub fn projection_oracle(v: &DVector<f64>, sign: &[bool]) -> DVector<f64> {
    let n = v.len();
    let signed: Vec<usize> = (0..n).filter(|&i| sign[i]).collect();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << signed.len()) {
        let zero: Vec<usize> = signed.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
        let free: Vec<usize> = (0..n).filter(|i| !zero.contains(i)).collect();
        if free.is_empty() {
            continue;
        }
        let shift = (free.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / free.len() as f64;
        let mut x = DVector::zeros(n);
        for &i in &free {
            x[i] = v[i] - shift;
        }
        if signed.iter().any(|&i| x[i] < -1e-12) {
            continue;
        }
        let d = (&x - v).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, x));
        }
    }
    best.unwrap().1
}
