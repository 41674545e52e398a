use std::borrow::Cow;

use super::bitops::{counts_1x2, counts_2x2, xor_popcount, Planes1x2, Planes2x2};
use super::MAX_K;
use crate::error::{ensure_dims, Error, Result};
use crate::tensor::{complement_mask, BitMatrix, DenseMatrix, ThmPlanes};
use crate::transform::{corrections_2x2, row_correction_1x2};

/// Exact per-cell integer accumulators of a bitwise GEMM, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accumulators {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl Accumulators {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i32 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.data
    }
}

/// Runs the bitwise GEMMs, optionally splitting output rows across threads.
///
/// Each thread owns a disjoint block of output rows, so results are
/// bit-identical for every thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    threads: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Self { threads: 1 }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k > MAX_K {
        return Err(Error::AccumulatorBound { k, max: MAX_K });
    }
    Ok(())
}

/// `b` re-laid out to `a`'s row stride when the lane widths differ.
fn aligned<'a>(b: &'a BitMatrix, like: &BitMatrix) -> Result<Cow<'a, BitMatrix>> {
    if b.words_per_row() == like.words_per_row() {
        Ok(Cow::Borrowed(b))
    } else {
        Ok(Cow::Owned(b.with_lane(like.lane_bits())?))
    }
}

fn aligned_planes<'a>(p: &'a ThmPlanes, like: &BitMatrix) -> Result<Cow<'a, ThmPlanes>> {
    if p.t().words_per_row() == like.words_per_row() {
        return Ok(Cow::Borrowed(p));
    }
    let lane = like.lane_bits();
    Ok(Cow::Owned(ThmPlanes::new(
        p.t().with_lane(lane)?,
        p.h().with_lane(lane)?,
        p.m().with_lane(lane)?,
        p.scale(),
        p.gamma(),
    )?))
}

impl Executor {
    pub fn new(threads: usize) -> Self {
        Self {
            threads: threads.max(1),
        }
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Fills an `rows × cols` buffer by calling `f(row, out_row)` for every row.
    pub(crate) fn fill_rows<T, F>(&self, rows: usize, cols: usize, f: F) -> Vec<T>
    where
        T: Copy + Default + Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        let mut out = vec![T::default(); rows * cols];
        if cols == 0 || rows == 0 {
            return out;
        }
        let threads = self.threads.min(rows);
        if threads <= 1 {
            for (r, row) in out.chunks_mut(cols).enumerate() {
                f(r, row);
            }
            return out;
        }
        let rows_per = rows.div_ceil(threads);
        std::thread::scope(|scope| {
            for (i, block) in out.chunks_mut(rows_per * cols).enumerate() {
                let f = &f;
                scope.spawn(move || {
                    for (j, row) in block.chunks_mut(cols).enumerate() {
                        f(i * rows_per + j, row);
                    }
                });
            }
        });
        out
    }

    /// `±1` dot products of every row of `a` (`M × K`) with every row of
    /// `b_cols` (`N × K`, the column-packed second operand).
    pub fn gemm_1x1_int(&self, a: &BitMatrix, b_cols: &BitMatrix) -> Result<Accumulators> {
        ensure_dims!(
            a.cols() == b_cols.cols(),
            "1/1: first operand has K = {}, second has K = {}",
            a.cols(),
            b_cols.cols()
        );
        check_k(a.cols())?;
        let b = aligned(b_cols, a)?;
        let k = a.cols() as i32;
        let data = self.fill_rows(a.rows(), b.rows(), |r, out| {
            let ar = a.row(r);
            for (c, cell) in out.iter_mut().enumerate() {
                *cell = k - 2 * xor_popcount(ar, b.row(c)) as i32;
            }
        });
        Ok(Accumulators {
            rows: a.rows(),
            cols: b.rows(),
            data,
        })
    }

    /// Binary × binary GEMM: `C[r][c] = γ_a·γ_b·(a_r · b_c)`.
    pub fn gemm_1x1(
        &self,
        a: &BitMatrix,
        b_cols: &BitMatrix,
        scales: Option<(f32, f32)>,
    ) -> Result<DenseMatrix> {
        let acc = self.gemm_1x1_int(a, b_cols)?;
        let (ga, gb) = scales.unwrap_or((1.0, 1.0));
        let scale = f64::from(ga) * f64::from(gb);
        let data = acc.data.iter().map(|&v| (scale * f64::from(v)) as f32).collect();
        Ok(DenseMatrix::from_raw(acc.rows, acc.cols, data))
    }

    /// Integer part of binary × 2-bit: `3·mbm(w, t, m) + mbm(w, h, m̄)`,
    /// which equals `2·(w·ā)/(γ·s)`.
    pub fn gemm_1x2_int(&self, w: &BitMatrix, a: &ThmPlanes) -> Result<Accumulators> {
        ensure_dims!(
            w.cols() == a.cols(),
            "1/2: weights have K = {}, activation planes have K = {}",
            w.cols(),
            a.cols()
        );
        check_k(w.cols())?;
        let a = aligned_planes(a, w)?;
        let m_bar = complement_mask(a.m());
        // popcount of each column's masks, hoisted out of the row loop
        let active: Vec<(i32, i32)> = (0..a.rows())
            .map(|c| (a.m().count_ones_row(c) as i32, m_bar.count_ones_row(c) as i32))
            .collect();
        let columns: Vec<Planes1x2> = (0..a.rows())
            .map(|c| Planes1x2 {
                t: a.t().row(c),
                h: a.h().row(c),
                m: a.m().row(c),
                m_bar: m_bar.row(c),
            })
            .collect();
        let data = self.fill_rows(w.rows(), a.rows(), |r, out| {
            let wr = w.row(r);
            for ((cell, planes), &(pm, pm_bar)) in out.iter_mut().zip(&columns).zip(&active) {
                let (qt, qh) = counts_1x2(wr, planes);
                *cell = 3 * (pm - 2 * qt as i32) + (pm_bar - 2 * qh as i32);
            }
        });
        Ok(Accumulators {
            rows: w.rows(),
            cols: a.rows(),
            data,
        })
    }

    /// Binary weights (`±γ`) × uncentered 2-bit activations.
    ///
    /// `a` holds the activation planes column-packed (`N × K`). The output
    /// starts from the per-row correction `γ·μ·Σ sign` and adds
    /// `γ·s·((3/2)·mbm(w, t, m) + (1/2)·mbm(w, h, m̄))`.
    pub fn gemm_1x2(&self, w: &BitMatrix, gamma: f32, a: &ThmPlanes) -> Result<DenseMatrix> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        let acc = self.gemm_1x2_int(w, a)?;
        let s = a.scale();
        let init = row_correction_1x2(w, gamma, 1.5 * s);
        let half_scale = f64::from(gamma) * f64::from(s) / 2.0;
        let data = acc
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| (init[i / acc.cols] + half_scale * f64::from(v)) as f32)
            .collect();
        Ok(DenseMatrix::from_raw(acc.rows, acc.cols, data))
    }

    /// Integer part of 2-bit × 2-bit:
    /// `9·mbm(t_w, t_a, z₁) + 3·mbm(t_w, h_a, z₂) + 3·mbm(h_w, t_a, z₃) + mbm(h_w, h_a, z₄)`,
    /// which equals `4·(w̄·ā)/(s_w·s_a)`.
    pub fn gemm_2x2_int(&self, w: &ThmPlanes, a: &ThmPlanes) -> Result<Accumulators> {
        ensure_dims!(
            w.cols() == a.cols(),
            "2/2: weight planes have K = {}, activation planes have K = {}",
            w.cols(),
            a.cols()
        );
        check_k(w.cols())?;
        let a = aligned_planes(a, w.t())?;
        let w_bar = complement_mask(w.m());
        let a_bar = complement_mask(a.m());
        let columns: Vec<Planes2x2> = (0..a.rows())
            .map(|c| Planes2x2 {
                t: a.t().row(c),
                h: a.h().row(c),
                m: a.m().row(c),
                m_bar: a_bar.row(c),
            })
            .collect();
        let data = self.fill_rows(w.rows(), a.rows(), |r, out| {
            let wp = Planes2x2 {
                t: w.t().row(r),
                h: w.h().row(r),
                m: w.m().row(r),
                m_bar: w_bar.row(r),
            };
            for (cell, ap) in out.iter_mut().zip(&columns) {
                *cell = counts_2x2(&wp, ap).weighted();
            }
        });
        Ok(Accumulators {
            rows: w.rows(),
            cols: a.rows(),
            data,
        })
    }

    /// Uncentered 2-bit weights × uncentered 2-bit activations. The output
    /// starts from the broadcast row/column/constant corrections.
    pub fn gemm_2x2(&self, w: &ThmPlanes, a: &ThmPlanes) -> Result<DenseMatrix> {
        let acc = self.gemm_2x2_int(w, a)?;
        let corr = corrections_2x2(w, a)?;
        let quarter = f64::from(w.scale()) * f64::from(a.scale()) / 4.0;
        let data = acc
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| (corr.at(i / acc.cols, i % acc.cols) + quarter * f64::from(v)) as f32)
            .collect();
        Ok(DenseMatrix::from_raw(acc.rows, acc.cols, data))
    }
}

pub fn gemm_1x1(a: &BitMatrix, b_cols: &BitMatrix, scales: Option<(f32, f32)>) -> Result<DenseMatrix> {
    Executor::default().gemm_1x1(a, b_cols, scales)
}

pub fn gemm_1x2(w: &BitMatrix, gamma: f32, a: &ThmPlanes) -> Result<DenseMatrix> {
    Executor::default().gemm_1x2(w, gamma, a)
}

pub fn gemm_2x2(w: &ThmPlanes, a: &ThmPlanes) -> Result<DenseMatrix> {
    Executor::default().gemm_2x2(w, a)
}
