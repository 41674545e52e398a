//! Brute-force references used by `verify` and the acceptance suite.
//!
//! Everything here works from plain `±1` / level values element by element
//! and never calls into the kernels it checks.

use lowbit::tensor::DenseMatrix;
use rand::Rng;

/// `Σ (2u_i − 1)(2v_i − 1)` over the low `n` bits of the given words.
pub fn dot_pm1(u: &[u64], v: &[u64], n: usize) -> i64 {
    (0..n)
        .map(|i| {
            let a = (u[i / 64] >> (i % 64)) & 1;
            let b = (v[i / 64] >> (i % 64)) & 1;
            if a == b {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// `Σ_{i : z_i = 1} (2x_i − 1)(2y_i − 1)`.
pub fn masked_dot_pm1(x: &[u64], y: &[u64], z: &[u64], n: usize) -> i64 {
    (0..n)
        .filter(|&i| (z[i / 64] >> (i % 64)) & 1 == 1)
        .map(|i| {
            let a = (x[i / 64] >> (i % 64)) & 1;
            let b = (y[i / 64] >> (i % 64)) & 1;
            (2 * a as i64 - 1) * (2 * b as i64 - 1)
        })
        .sum()
}

/// Same as [`dot_pm1`] for operands given as one word each (`n ≤ 64`).
#[inline]
pub fn dot_pm1_word(u: u64, v: u64, n: u32) -> i64 {
    let mut s = 0;
    for i in 0..n {
        s += if (u >> i) & 1 == (v >> i) & 1 { 1 } else { -1 };
    }
    s
}

#[inline]
pub fn masked_dot_pm1_word(x: u64, y: u64, z: u64, n: u32) -> i64 {
    let mut s = 0;
    for i in 0..n {
        if (z >> i) & 1 == 1 {
            s += if (x >> i) & 1 == (y >> i) & 1 { 1 } else { -1 };
        }
    }
    s
}

/// `rows × cols` matrix of random `±1`.
pub fn random_signs(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Random 2-bit levels, row-major.
pub fn random_levels(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<u8> {
    (0..rows * cols).map(|_| rng.random_range(0..4u8)).collect()
}

/// Levels as the dense matrix of `f(p)` values.
pub fn levels_dense(levels: &[u8], rows: usize, cols: usize, f: impl Fn(u8) -> f32) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |r, c| f(levels[r * cols + c]))
}

/// Random word row of logical length `n` with zeroed padding.
pub fn random_row(rng: &mut impl Rng, n: usize, words: usize) -> Vec<u64> {
    let mut row: Vec<u64> = (0..words).map(|_| rng.random()).collect();
    for (w, word) in row.iter_mut().enumerate() {
        let start = w * 64;
        if start >= n {
            *word = 0;
        } else if n - start < 64 {
            *word &= (1u64 << (n - start)) - 1;
        }
    }
    row
}

/// Word count a default (512-bit lane) row of `n` bits occupies.
pub fn lane_words(n: usize) -> usize {
    n.div_ceil(512).max(1) * 8
}

/// `Σ_i g_i·sign(w_i)·χ_i`-style scalar loops for the APB gradients.
pub fn apb_grads(g: &[f32], w: &[f32], alpha: f64, delta: f64) -> (f64, f64) {
    let n = w.len() as f64;
    let (mut sa, mut sd) = (0.0f64, 0.0f64);
    for i in 0..w.len() {
        let wi = f64::from(w[i]);
        let inside = wi.abs() <= alpha + delta;
        if !inside {
            continue;
        }
        let s = if wi >= 0.0 { 1.0 } else { -1.0 };
        let gi = f64::from(g[i]);
        sa += gi * s;
        sd += gi * s * (alpha - wi.abs());
    }
    (-sa / n, sd / (delta * n))
}

/// Surrogate loss whose partial derivatives are the APB interval gradients:
/// `L̃(α, δ) = (1/n) Σ_{i ∈ B} c_i · ŵ_i(α, δ)`, where `c_i = δ₀·g_i·sign(w_i)`
/// is `∂L/∂ŵ_i` at the evaluation point and `B` is the binarized set there.
pub fn surrogate_loss(g: &[f32], w: &[f32], inside: &[bool], delta0: f64, alpha: f64, delta: f64) -> f64 {
    let n = w.len() as f64;
    let mut s = 0.0;
    for i in 0..w.len() {
        if !inside[i] {
            continue;
        }
        let wi = f64::from(w[i]);
        let sign = if wi >= 0.0 { 1.0 } else { -1.0 };
        let c = delta0 * f64::from(g[i]) * sign;
        s += c * (wi.abs() - alpha) / delta;
    }
    s / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_and_slice_oracles_agree() {
        assert_eq!(dot_pm1(&[0b1011], &[0b0001], 4), 0);
        assert_eq!(dot_pm1_word(0b1011, 0b0001, 4), 0);
        assert_eq!(masked_dot_pm1(&[0b0101], &[0b0011], &[0b1001], 4), 2);
        assert_eq!(masked_dot_pm1_word(0b0101, 0b0011, 0b1001, 4), 2);
    }

    #[test]
    fn grad_oracle_hand_values() {
        let (ga, gd) = apb_grads(&[0.2, 0.4], &[0.5, -2.0], 1.0, 0.5);
        assert!((ga + 0.1).abs() < 1e-7);
        assert!((gd - 0.1).abs() < 1e-7);
    }
}
