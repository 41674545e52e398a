//! Word-level popcount primitives shared by the dot products and GEMMs.
//!
//! Every primitive streams whole rows, padding included. Rows carry zero
//! padding, so `x ⊕ y` and every mask are zero there and padding never
//! contributes to a count.

use super::simd;
use crate::error::{ensure_dims, Error, Result};

/// `popcount(x ⊕ y)` over two equally long word slices.
#[inline]
pub fn xor_popcount(x: &[u64], y: &[u64]) -> u32 {
    debug_assert_eq!(x.len(), y.len());
    if simd::lanes_ok(x.len()) {
        // SAFETY: lanes_ok checked the CPU features and the lane multiple.
        return unsafe { simd::xor_popcount(x, y) };
    }
    x.iter().zip(y).map(|(a, b)| (a ^ b).count_ones()).sum()
}

/// `popcount((x ⊕ y) ∧ z)`.
#[inline]
pub fn xor_and_popcount(x: &[u64], y: &[u64], z: &[u64]) -> u32 {
    debug_assert!(x.len() == y.len() && y.len() == z.len());
    x.iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), m)| ((a ^ b) & m).count_ones())
        .sum()
}

/// Word rows of one binary weight row against one column's `{t, h, m, m̄}`.
pub(crate) struct Planes1x2<'a> {
    pub t: &'a [u64],
    pub h: &'a [u64],
    pub m: &'a [u64],
    pub m_bar: &'a [u64],
}

/// Returns `(popcount((w⊕t)∧m), popcount((w⊕h)∧m̄))`.
#[inline]
pub(crate) fn counts_1x2(w: &[u64], a: &Planes1x2<'_>) -> (u32, u32) {
    if simd::lanes_ok(w.len()) {
        // SAFETY: see xor_popcount.
        return unsafe { simd::counts_1x2(w, a) };
    }
    let mut qt = 0;
    let mut qh = 0;
    for (i, &wi) in w.iter().enumerate() {
        qt += ((wi ^ a.t[i]) & a.m[i]).count_ones();
        qh += ((wi ^ a.h[i]) & a.m_bar[i]).count_ones();
    }
    (qt, qh)
}

/// The four `mbm` terms of a 2-bit × 2-bit dot product.
///
/// Masks: `z₁ = m_w∧m_a`, `z₂ = m_w∧m̄_a`, `z₃ = m̄_w∧m_a`, `z₄ = m̄_w∧m̄_a`.
/// Pairs: `(t_w, t_a)`, `(t_w, h_a)`, `(h_w, t_a)`, `(h_w, h_a)`.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counts2x2 {
    /// `popcount(z_i)`.
    pub active: [u32; 4],
    /// `popcount((x_i ⊕ y_i) ∧ z_i)`.
    pub mismatched: [u32; 4],
}

impl Counts2x2 {
    /// `mbm_i = popcount(z_i) − 2·popcount((x_i ⊕ y_i) ∧ z_i)`.
    #[inline]
    pub fn mbm(&self) -> [i32; 4] {
        std::array::from_fn(|i| self.active[i] as i32 - 2 * self.mismatched[i] as i32)
    }

    /// `4 · w̄·ā / (s_w·s_a) = 9·mbm₁ + 3·mbm₂ + 3·mbm₃ + mbm₄`.
    #[inline]
    pub fn weighted(&self) -> i32 {
        let [a, b, c, d] = self.mbm();
        9 * a + 3 * b + 3 * c + d
    }
}

pub(crate) struct Planes2x2<'a> {
    pub t: &'a [u64],
    pub h: &'a [u64],
    pub m: &'a [u64],
    pub m_bar: &'a [u64],
}

#[inline]
pub(crate) fn counts_2x2(w: &Planes2x2<'_>, a: &Planes2x2<'_>) -> Counts2x2 {
    if simd::lanes_ok(w.t.len()) {
        // SAFETY: see xor_popcount.
        return unsafe { simd::counts_2x2(w, a) };
    }
    let mut c = Counts2x2::default();
    for i in 0..w.t.len() {
        let z = [
            w.m[i] & a.m[i],
            w.m[i] & a.m_bar[i],
            w.m_bar[i] & a.m[i],
            w.m_bar[i] & a.m_bar[i],
        ];
        let d = [w.t[i] ^ a.t[i], w.t[i] ^ a.h[i], w.h[i] ^ a.t[i], w.h[i] ^ a.h[i]];
        for j in 0..4 {
            c.active[j] += z[j].count_ones();
            c.mismatched[j] += (d[j] & z[j]).count_ones();
        }
    }
    c
}

fn check_rows(n: usize, rows: &[&[u64]]) -> Result<()> {
    let len = rows[0].len();
    ensure_dims!(
        rows.iter().all(|r| r.len() == len),
        "operand rows have different word counts: {:?}",
        rows.iter().map(|r| r.len()).collect::<Vec<_>>()
    );
    ensure_dims!(n <= len * 64, "logical length {n} exceeds {} stored bits", len * 64);
    Ok(())
}

/// Rejects set bits at positions `≥ n`.
fn check_padding(n: usize, rows: &[&[u64]]) -> Result<()> {
    for row in rows {
        let dirty = row.iter().enumerate().skip(n / 64).any(|(i, &w)| {
            let keep = n.saturating_sub(i * 64);
            if keep >= 64 {
                false
            } else {
                w >> keep != 0
            }
        });
        if dirty {
            return Err(Error::InvalidData(format!("set bits past logical length {n}")));
        }
    }
    Ok(())
}

/// `±1` dot product of two packed rows of logical length `n`:
/// `n − 2·popcount(u ⊕ v)`.
///
/// Both rows must have identical word counts and zero padding past `n`.
pub fn dot_binary(u: &[u64], v: &[u64], n: usize) -> Result<i64> {
    check_rows(n, &[u, v])?;
    check_padding(n, &[u, v])?;
    Ok(n as i64 - 2 * i64::from(xor_popcount(u, v)))
}

/// Masked binary multiply: the `±1` dot product of `x` and `y` restricted to
/// the positions where `z` is set, `popcount(z) − 2·popcount((x ⊕ y) ∧ z)`.
///
/// Only the mask needs zero padding past `n`.
pub fn mbm(x: &[u64], y: &[u64], z: &[u64], n: usize) -> Result<i64> {
    check_rows(n, &[x, y, z])?;
    check_padding(n, &[z])?;
    let active: u32 = z.iter().map(|w| w.count_ones()).sum();
    Ok(i64::from(active) - 2 * i64::from(xor_and_popcount(x, y, z)))
}
