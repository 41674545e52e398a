use super::{apb_forward, grad_alpha, grad_delta, ste_weight_grad, ApbParams};
use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Plain gradient descent of `L = (1/2n)·‖APB(w) − target‖²` over the latent
/// weights and the interval parameters.
///
/// Weight decay applies to `w` only, never to `α` or `δ`. With
/// `freeze_at_half` the interval parameters stop moving after half of the
/// epochs so the surviving weights can settle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTrainer {
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub freeze_at_half: bool,
}

impl Default for ToyTrainer {
    fn default() -> Self {
        Self {
            lr: 0.1,
            weight_decay: 0.0,
            epochs: 100,
            freeze_at_half: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStep {
    pub epoch: usize,
    pub loss: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Share of weights inside the binarization interval.
    pub binarized: f64,
}

impl ToyTrainer {
    pub fn fit(
        &self,
        mut w: DenseMatrix,
        target: &DenseMatrix,
        mut p: ApbParams,
    ) -> Result<(DenseMatrix, ApbParams, Vec<TrainStep>)> {
        if w.rows() != target.rows() || w.cols() != target.cols() || w.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "weights {}x{} vs target {}x{}",
                w.rows(),
                w.cols(),
                target.rows(),
                target.cols()
            )));
        }
        let n = w.len() as f64;
        let mut history = Vec::with_capacity(self.epochs);
        for epoch in 0..self.epochs {
            let out = apb_forward(&w, &p);
            let diff = DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| {
                ((f64::from(out.get(r, c)) - f64::from(target.get(r, c))) / n) as f32
            });
            let loss = out
                .as_slice()
                .iter()
                .zip(target.as_slice())
                .map(|(&o, &t)| (f64::from(o) - f64::from(t)).powi(2))
                .sum::<f64>()
                / (2.0 * n);
            let binarized = w.as_slice().iter().filter(|&&v| p.binarizes(v)).count() as f64 / n;
            history.push(TrainStep {
                epoch,
                loss,
                alpha: p.alpha(),
                delta: p.delta(),
                binarized,
            });

            let g_w = ste_weight_grad(&diff, &w, &p)?;
            if !(self.freeze_at_half && epoch >= self.epochs / 2) {
                let ga = grad_alpha(&g_w, &w, &p)?;
                let gd = grad_delta(&g_w, &w, &p)?;
                let alpha = (p.alpha() - self.lr * ga).max(f64::EPSILON);
                p = ApbParams::clamped(alpha, p.delta() - self.lr * gd)?;
            }
            let (lr, wd) = (self.lr, self.weight_decay);
            w = DenseMatrix::from_fn(w.rows(), w.cols(), |r, c| {
                let v = f64::from(w.get(r, c));
                (v - lr * (f64::from(g_w.get(r, c)) + wd * v)) as f32
            });
        }
        Ok((w, p, history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (DenseMatrix, DenseMatrix, ApbParams) {
        let w = DenseMatrix::from_fn(4, 32, |r, c| ((r * 32 + c) as f32 * 0.913).sin() * 1.5);
        let target = w.map(|v| if v.abs() > 1.0 { v } else { 0.4 * v.signum() });
        (w, target, ApbParams::new(0.5, 0.3).unwrap())
    }

    #[test]
    fn freeze_keeps_interval_fixed_in_second_half() {
        let (w, t, p) = setup();
        let trainer = ToyTrainer { epochs: 20, lr: 0.5, ..Default::default() };
        let (_, _, hist) = trainer.fit(w, &t, p).unwrap();
        let frozen = &hist[11..];
        assert!(frozen.windows(2).all(|s| s[0].alpha == s[1].alpha && s[0].delta == s[1].delta));
        assert!(hist[..10].windows(2).any(|s| s[0].alpha != s[1].alpha || s[0].delta != s[1].delta));
    }

    #[test]
    fn weight_decay_raises_binarized_share() {
        let (w, t, p) = setup();
        let base = ToyTrainer { epochs: 60, lr: 0.5, freeze_at_half: true, weight_decay: 0.0 };
        let decayed = ToyTrainer { weight_decay: 0.2, ..base };
        let (_, _, h0) = base.fit(w.clone(), &t, p).unwrap();
        let (_, _, h1) = decayed.fit(w, &t, p).unwrap();
        assert!(h1.last().unwrap().binarized > h0.last().unwrap().binarized);
    }

    #[test]
    fn shape_mismatch() {
        let (w, _, p) = setup();
        assert!(ToyTrainer::default().fit(w, &DenseMatrix::zeros(1, 1), p).is_err());
    }
}
