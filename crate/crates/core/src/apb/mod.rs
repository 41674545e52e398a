//! Automatic prune-binarization.
//!
//! A weight is replaced by `sign(w)·α` when `|w| ≤ α + δ` and kept at full
//! precision otherwise. Training uses a straight-through estimator for the
//! weights and the gradients [`grad_alpha`] / [`grad_delta`] for the two
//! interval parameters. Inference splits the result into a scaled bit matrix
//! plus a sparse set of surviving full-precision weights ([`ApbLayer`]).

mod layer;
mod memory;
mod train;

pub use layer::{decompose_apb, layer_forward, load_layer, store_layer, ApbLayer};
pub use memory::{memory_bits, position_bits, MemoryBits};
pub use train::{ToyTrainer, TrainStep};

use crate::error::{Error, Result};
use crate::tensor::{BitMatrix, DenseMatrix};

/// Smallest admissible `δ`; the gradients divide by it.
pub const DELTA_MIN: f64 = 1e-8;

/// Binarization magnitude `α` and interval margin `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApbParams {
    alpha: f64,
    delta: f64,
}

impl ApbParams {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(delta.is_finite() && delta >= DELTA_MIN) {
            return Err(Error::InvalidParameter(format!(
                "delta must be at least {DELTA_MIN:e}, got {delta}"
            )));
        }
        Ok(Self { alpha, delta })
    }

    /// Like [`ApbParams::new`] but raises `δ` to [`DELTA_MIN`] instead of failing.
    pub fn clamped(alpha: f64, delta: f64) -> Result<Self> {
        if delta.is_nan() {
            return Err(Error::InvalidParameter("delta is NaN".into()));
        }
        Self::new(alpha, delta.max(DELTA_MIN))
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Upper end of the binarization interval, `α + δ`.
    #[inline]
    pub fn threshold(&self) -> f64 {
        self.alpha + self.delta
    }

    /// `|w| ≤ α + δ` (inclusive).
    #[inline]
    pub fn binarizes(&self, w: f32) -> bool {
        f64::from(w).abs() <= self.threshold()
    }

    /// Normalized distance from the interval, `ŵ = (|w| − α) / δ`.
    #[inline]
    pub fn w_hat(&self, w: f32) -> f64 {
        (f64::from(w).abs() - self.alpha) / self.delta
    }
}

#[inline]
fn sign(w: f32) -> f64 {
    if w >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn same_shape(a: &DenseMatrix, b: &DenseMatrix, what: &str) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Element-wise APB: `sign(w)·α` inside the interval, `w` outside.
pub fn apb_forward(w: &DenseMatrix, p: &ApbParams) -> DenseMatrix {
    let alpha = p.alpha as f32;
    w.map(|v| {
        if p.binarizes(v) {
            if v >= 0.0 {
                alpha
            } else {
                -alpha
            }
        } else {
            v
        }
    })
}

/// Indicator of the binarized set, `χ_B = 1(ŵ ≤ 1)`.
pub fn chi_b(w: &DenseMatrix, p: &ApbParams) -> BitMatrix {
    BitMatrix::from_fn(w.rows(), w.cols(), |r, c| p.binarizes(w.get(r, c)))
}

/// Stand-in function whose derivative replaces that of the binarizer.
pub trait Surrogate {
    fn derivative(&self, w: f64) -> f64;
}

/// `g(x) = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Surrogate for Identity {
    fn derivative(&self, _w: f64) -> f64 {
        1.0
    }
}

/// `∂APB/∂w`: the surrogate's derivative inside the interval, 1 outside.
pub fn ste_multiplier(w: &DenseMatrix, p: &ApbParams, g: &dyn Surrogate) -> DenseMatrix {
    w.map(|v| {
        if p.binarizes(v) {
            g.derivative(f64::from(v)) as f32
        } else {
            1.0
        }
    })
}

/// Weight gradient through APB with the identity surrogate.
pub fn ste_weight_grad(upstream: &DenseMatrix, w: &DenseMatrix, p: &ApbParams) -> Result<DenseMatrix> {
    ste_weight_grad_with(upstream, w, p, &Identity)
}

pub fn ste_weight_grad_with(
    upstream: &DenseMatrix,
    w: &DenseMatrix,
    p: &ApbParams,
    g: &dyn Surrogate,
) -> Result<DenseMatrix> {
    same_shape(upstream, w, "upstream vs weights")?;
    let mult = ste_multiplier(w, p, g);
    Ok(DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| {
        upstream.get(r, c) * mult.get(r, c)
    }))
}

/// `∂L/∂α = −(1/(δn)) Σ ∂L/∂ŵ · χ_B`.
///
/// `g_w` is the weight gradient `∂L/∂w`; since `∂L/∂w = (1/δ)·∂L/∂ŵ·sign(w)`
/// this is `−(1/n) Σ g_w·sign(w)·χ_B`. The `1/n` average over all `n`
/// weights is kept as written.
pub fn grad_alpha(g_w: &DenseMatrix, w: &DenseMatrix, p: &ApbParams) -> Result<f64> {
    same_shape(g_w, w, "gradient vs weights")?;
    if w.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = g_w
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .filter(|(_, &wi)| p.binarizes(wi))
        .map(|(&g, &wi)| f64::from(g) * sign(wi))
        .sum();
    Ok(-sum / w.len() as f64)
}

/// `∂L/∂δ = (1/(δ²n)) Σ ∂L/∂ŵ · (α − |w|) · χ_B`
/// `= (1/(δn)) Σ g_w·sign(w)·(α − |w|)·χ_B`.
pub fn grad_delta(g_w: &DenseMatrix, w: &DenseMatrix, p: &ApbParams) -> Result<f64> {
    same_shape(g_w, w, "gradient vs weights")?;
    if w.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = g_w
        .as_slice()
        .iter()
        .zip(w.as_slice())
        .filter(|(_, &wi)| p.binarizes(wi))
        .map(|(&g, &wi)| f64::from(g) * sign(wi) * (p.alpha - f64::from(wi).abs()))
        .sum();
    Ok(sum / (p.delta * w.len() as f64))
}

/// `α = mean |w|`, `δ = 3·σ(w)` with the population standard deviation,
/// clamped to [`DELTA_MIN`].
pub fn init_alpha_delta(w: &DenseMatrix) -> Result<ApbParams> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("cannot initialize from an empty matrix".into()));
    }
    let n = w.len() as f64;
    let vals = w.as_slice().iter().map(|&v| f64::from(v));
    let mean_abs = vals.clone().map(f64::abs).sum::<f64>() / n;
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    ApbParams::clamped(mean_abs, 3.0 * var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f32]) -> DenseMatrix {
        DenseMatrix::new(1, v.len(), v.to_vec()).unwrap()
    }

    fn p(alpha: f64, delta: f64) -> ApbParams {
        ApbParams::new(alpha, delta).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ApbParams::new(0.0, 1.0).is_err());
        assert!(ApbParams::new(1.0, 0.0).is_err());
        assert!(ApbParams::new(1.0, f64::NAN).is_err());
        assert_eq!(ApbParams::clamped(1.0, 0.0).unwrap().delta(), DELTA_MIN);
    }

    #[test]
    fn forward_examples() {
        let out = apb_forward(&row(&[0.8, -0.3, -2.0, 1.5, 0.0]), &p(1.0, 0.5));
        assert_eq!(out.as_slice(), &[1.0, -1.0, -2.0, 1.0, 1.0]);
    }

    #[test]
    fn chi_b_examples() {
        let w = row(&[0.5, -2.0]);
        let m = chi_b(&w, &p(1.0, 0.5));
        assert_eq!(m.row(0)[0], 0b01);
        assert_eq!(chi_b(&w, &p(1.0, 100.0)).row(0)[0], 0b11);
        assert!(chi_b(&row(&[-1.0]), &p(1.0, 0.5)).get(0, 0));
        assert!(p(1.0, 0.5).w_hat(-1.0) <= 0.0);
    }

    #[test]
    fn ste_passes_gradient_through() {
        let w = row(&[0.5, -2.0, 0.1]);
        let up = row(&[0.3, -0.7, 2.0]);
        let params = p(1.0, 0.5);
        assert_eq!(ste_weight_grad(&up, &w, &params).unwrap(), up);
        let zero = DenseMatrix::zeros(1, 3);
        assert_eq!(ste_weight_grad(&zero, &w, &params).unwrap(), zero);
        assert!(ste_multiplier(&w, &params, &Identity).as_slice().iter().all(|&v| v == 1.0));
        assert!(ste_weight_grad(&row(&[1.0]), &w, &params).is_err());
    }

    #[test]
    fn custom_surrogate_only_touches_interval() {
        struct Half;
        impl Surrogate for Half {
            fn derivative(&self, _: f64) -> f64 {
                0.5
            }
        }
        let w = row(&[0.5, -2.0]);
        let m = ste_multiplier(&w, &p(1.0, 0.5), &Half);
        assert_eq!(m.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn gradient_examples() {
        let w = row(&[0.5, -2.0]);
        let g = row(&[0.2, 0.4]);
        let params = p(1.0, 0.5);
        assert!((grad_alpha(&g, &w, &params).unwrap() + 0.1).abs() < 1e-7);
        assert!((grad_delta(&g, &w, &params).unwrap() - 0.1).abs() < 1e-7);

        let g2 = g.map(|v| 2.0 * v);
        let ga = grad_alpha(&g, &w, &params).unwrap();
        assert_eq!(grad_alpha(&g2, &w, &params).unwrap(), 2.0 * ga);

        let outside = row(&[5.0, -7.0]);
        assert_eq!(grad_alpha(&g, &outside, &params).unwrap(), 0.0);
        assert_eq!(grad_delta(&g, &outside, &params).unwrap(), 0.0);
        let on_alpha = row(&[1.0, -1.0]);
        assert_eq!(grad_delta(&g, &on_alpha, &params).unwrap(), 0.0);
        assert!(grad_alpha(&row(&[1.0]), &w, &params).is_err());
    }

    #[test]
    fn init_examples() {
        let params = init_alpha_delta(&row(&[1.0, -1.0, 1.0, -1.0])).unwrap();
        assert_eq!((params.alpha(), params.delta()), (1.0, 3.0));
        let params = init_alpha_delta(&row(&[0.7; 5])).unwrap();
        assert!((params.alpha() - 0.7).abs() < 1e-7);
        assert_eq!(params.delta(), DELTA_MIN);
        let w = row(&[0.3, -1.2, 2.5, 0.1]);
        let a = init_alpha_delta(&w).unwrap();
        let b = init_alpha_delta(&w.map(|v| 2.0 * v)).unwrap();
        assert!((b.alpha() - 2.0 * a.alpha()).abs() < 1e-12);
        assert!((b.delta() - 2.0 * a.delta()).abs() < 1e-12);
        assert!(init_alpha_delta(&DenseMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn binarized_count_monotone_in_delta() {
        let w = DenseMatrix::from_fn(8, 16, |r, c| ((r * 16 + c) as f32 * 0.37).sin() * 3.0);
        let mut last = 0;
        for d in [1e-8, 0.1, 0.5, 1.0, 2.0, 5.0] {
            let count = chi_b(&w, &p(0.5, d)).count_ones();
            assert!(count >= last);
            last = count;
        }
    }
}
