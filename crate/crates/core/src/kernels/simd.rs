//! AVX-512 inner loops (`VPOPCNTQ` + `VPTERNLOGQ`).
//!
//! Callers check [`lanes_ok`] first; the portable loops in `bitops` are the
//! fallback and must produce identical counts.

use super::bitops::{Counts2x2, Planes1x2, Planes2x2};

#[cfg(target_arch = "x86_64")]
fn detected() -> bool {
    use std::sync::OnceLock;
    static AVX512: OnceLock<bool> = OnceLock::new();
    *AVX512.get_or_init(|| {
        std::env::var_os("LOWBIT_NO_SIMD").is_none()
            && is_x86_feature_detected!("avx512f")
            && is_x86_feature_detected!("avx512vpopcntdq")
    })
}

#[cfg(not(target_arch = "x86_64"))]
fn detected() -> bool {
    false
}

/// True when the 512-bit path can run over rows of `words` u64s.
#[inline]
pub(crate) fn lanes_ok(words: usize) -> bool {
    words.is_multiple_of(8) && detected()
}

/// Name of the inner-loop implementation in use, for reports.
pub fn backend() -> &'static str {
    if detected() {
        "avx512-vpopcntdq"
    } else {
        "portable-u64"
    }
}

// and(xor(a, b), c) as a VPTERNLOGQ truth table: (0xF0 ^ 0xCC) & 0xAA
#[cfg(target_arch = "x86_64")]
const XOR_AND: i32 = 0x28;

#[cfg(target_arch = "x86_64")]
mod imp {
    use super::*;
    use std::arch::x86_64::*;

    #[inline(always)]
    unsafe fn load(s: &[u64], i: usize) -> __m512i {
        _mm512_loadu_si512(s.as_ptr().add(i).cast())
    }

    #[target_feature(enable = "avx512f,avx512vpopcntdq")]
    pub unsafe fn xor_popcount(x: &[u64], y: &[u64]) -> u32 {
        let mut acc = _mm512_setzero_si512();
        let mut i = 0;
        while i < x.len() {
            let d = _mm512_xor_si512(load(x, i), load(y, i));
            acc = _mm512_add_epi64(acc, _mm512_popcnt_epi64(d));
            i += 8;
        }
        _mm512_reduce_add_epi64(acc) as u32
    }

    #[target_feature(enable = "avx512f,avx512vpopcntdq")]
    pub unsafe fn counts_1x2(w: &[u64], a: &Planes1x2<'_>) -> (u32, u32) {
        let mut qt = _mm512_setzero_si512();
        let mut qh = _mm512_setzero_si512();
        let mut i = 0;
        while i < w.len() {
            let wv = load(w, i);
            let t = _mm512_ternarylogic_epi64::<XOR_AND>(wv, load(a.t, i), load(a.m, i));
            let h = _mm512_ternarylogic_epi64::<XOR_AND>(wv, load(a.h, i), load(a.m_bar, i));
            qt = _mm512_add_epi64(qt, _mm512_popcnt_epi64(t));
            qh = _mm512_add_epi64(qh, _mm512_popcnt_epi64(h));
            i += 8;
        }
        (
            _mm512_reduce_add_epi64(qt) as u32,
            _mm512_reduce_add_epi64(qh) as u32,
        )
    }

    #[target_feature(enable = "avx512f,avx512vpopcntdq")]
    pub unsafe fn counts_2x2(w: &Planes2x2<'_>, a: &Planes2x2<'_>) -> Counts2x2 {
        let mut active = [_mm512_setzero_si512(); 4];
        let mut mismatched = [_mm512_setzero_si512(); 4];
        let mut i = 0;
        while i < w.t.len() {
            let (tw, hw, mw, nw) = (load(w.t, i), load(w.h, i), load(w.m, i), load(w.m_bar, i));
            let (ta, ha, ma, na) = (load(a.t, i), load(a.h, i), load(a.m, i), load(a.m_bar, i));
            let z = [
                _mm512_and_si512(mw, ma),
                _mm512_and_si512(mw, na),
                _mm512_and_si512(nw, ma),
                _mm512_and_si512(nw, na),
            ];
            let q = [
                _mm512_ternarylogic_epi64::<XOR_AND>(tw, ta, z[0]),
                _mm512_ternarylogic_epi64::<XOR_AND>(tw, ha, z[1]),
                _mm512_ternarylogic_epi64::<XOR_AND>(hw, ta, z[2]),
                _mm512_ternarylogic_epi64::<XOR_AND>(hw, ha, z[3]),
            ];
            for j in 0..4 {
                active[j] = _mm512_add_epi64(active[j], _mm512_popcnt_epi64(z[j]));
                mismatched[j] = _mm512_add_epi64(mismatched[j], _mm512_popcnt_epi64(q[j]));
            }
            i += 8;
        }
        Counts2x2 {
            active: active.map(|v| _mm512_reduce_add_epi64(v) as u32),
            mismatched: mismatched.map(|v| _mm512_reduce_add_epi64(v) as u32),
        }
    }
}

#[cfg(target_arch = "x86_64")]
pub(crate) use imp::{counts_1x2, counts_2x2, xor_popcount};

#[cfg(not(target_arch = "x86_64"))]
mod imp {
    use super::*;

    pub unsafe fn xor_popcount(_: &[u64], _: &[u64]) -> u32 {
        unreachable!("no SIMD backend on this target")
    }

    pub unsafe fn counts_1x2(_: &[u64], _: &Planes1x2<'_>) -> (u32, u32) {
        unreachable!("no SIMD backend on this target")
    }

    pub unsafe fn counts_2x2(_: &Planes2x2<'_>, _: &Planes2x2<'_>) -> Counts2x2 {
        unreachable!("no SIMD backend on this target")
    }
}

#[cfg(not(target_arch = "x86_64"))]
pub(crate) use imp::{counts_1x2, counts_2x2, xor_popcount};
