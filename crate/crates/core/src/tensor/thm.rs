use super::BitMatrix;
use crate::error::{Error, Result};

/// The `{t, h, m}` bit planes of a zero-centered 2-bit matrix.
///
/// Per element the planes take one of four columns:
///
/// | centered value | t | h | m |
/// |----------------|---|---|---|
/// | −3/2 · s       | 0 | 0 | 1 |
/// | −1/2 · s       | 0 | 0 | 0 |
/// | +1/2 · s       | 0 | 1 | 0 |
/// | +3/2 · s       | 1 | 0 | 1 |
///
/// `t` is only meaningful where `m = 1`, `h` only where `m = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThmPlanes {
    t: BitMatrix,
    h: BitMatrix,
    m: BitMatrix,
    scale: f32,
    gamma: Option<f32>,
}

fn check_scale(name: &str, v: f32) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ThmPlanes {
    /// Validates shapes, scales, and the per-element plane exclusivity.
    pub fn new(
        t: BitMatrix,
        h: BitMatrix,
        m: BitMatrix,
        scale: f32,
        gamma: Option<f32>,
    ) -> Result<Self> {
        check_scale("scale", scale)?;
        if let Some(g) = gamma {
            check_scale("gamma", g)?;
        }
        let shape = (t.rows(), t.cols(), t.words_per_row());
        for (name, p) in [("h", &h), ("m", &m)] {
            if (p.rows(), p.cols(), p.words_per_row()) != shape {
                return Err(Error::DimensionMismatch(format!(
                    "plane {name} is {}x{} ({} words/row), t is {}x{} ({} words/row)",
                    p.rows(),
                    p.cols(),
                    p.words_per_row(),
                    shape.0,
                    shape.1,
                    shape.2
                )));
            }
        }
        for (name, p) in [("t", &t), ("h", &h), ("m", &m)] {
            if !p.padding_is_clean() {
                return Err(Error::InvalidData(format!("plane {name} has nonzero padding")));
            }
        }
        let planes = Self {
            t,
            h,
            m,
            scale,
            gamma,
        };
        planes.check_exclusive()?;
        Ok(planes)
    }

    /// Finds the first element whose `(t, h, m)` triple is not a table column.
    fn check_exclusive(&self) -> Result<()> {
        for r in 0..self.t.rows() {
            let rows = (self.t.row(r), self.h.row(r), self.m.row(r));
            for (w, ((&t, &h), &m)) in rows.0.iter().zip(rows.1).zip(rows.2).enumerate() {
                // bad: t∧h, t∧¬m, h∧m
                let bad = (t & h) | (t & !m) | (h & m);
                if bad != 0 {
                    let c = w * 64 + bad.trailing_zeros() as usize;
                    return Err(Error::InvalidEncoding {
                        row: r,
                        col: c,
                        t: self.t.get(r, c),
                        h: self.h.get(r, c),
                        m: self.m.get(r, c),
                    });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(
        t: BitMatrix,
        h: BitMatrix,
        m: BitMatrix,
        scale: f32,
        gamma: Option<f32>,
    ) -> Self {
        Self {
            t,
            h,
            m,
            scale,
            gamma,
        }
    }

    #[inline]
    pub fn t(&self) -> &BitMatrix {
        &self.t
    }

    #[inline]
    pub fn h(&self) -> &BitMatrix {
        &self.h
    }

    #[inline]
    pub fn m(&self) -> &BitMatrix {
        &self.m
    }

    /// Distance between adjacent quantization levels.
    #[inline]
    pub fn scale(&self) -> f32 {
        self.scale
    }

    #[inline]
    pub fn gamma(&self) -> Option<f32> {
        self.gamma
    }

    pub fn with_gamma(mut self, gamma: Option<f32>) -> Result<Self> {
        if let Some(g) = gamma {
            check_scale("gamma", g)?;
        }
        self.gamma = gamma;
        Ok(self)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.t.rows()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.t.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(bits: &[bool]) -> BitMatrix {
        BitMatrix::from_fn(1, bits.len(), |_, c| bits[c])
    }

    #[test]
    fn accepts_table_columns() {
        let t = plane(&[false, false, false, true]);
        let h = plane(&[false, false, true, false]);
        let m = plane(&[true, false, false, true]);
        assert!(ThmPlanes::new(t, h, m, 1.0, None).is_ok());
    }

    #[test]
    fn rejects_excluded_triples() {
        // t=1 with m=0
        let err = ThmPlanes::new(plane(&[false, true]), plane(&[false, false]), plane(&[false, false]), 1.0, None)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidEncoding { row: 0, col: 1, .. }));
        // h=1 with m=1
        assert!(ThmPlanes::new(plane(&[false]), plane(&[true]), plane(&[true]), 1.0, None).is_err());
        // t=h=1
        assert!(ThmPlanes::new(plane(&[true]), plane(&[true]), plane(&[true]), 1.0, None).is_err());
    }

    #[test]
    fn rejects_bad_scale_and_shape() {
        let p = plane(&[false; 3]);
        assert!(ThmPlanes::new(p.clone(), p.clone(), p.clone(), 0.0, None).is_err());
        assert!(ThmPlanes::new(p.clone(), p.clone(), p.clone(), 1.0, Some(-1.0)).is_err());
        assert!(ThmPlanes::new(p.clone(), p.clone(), plane(&[false; 4]), 1.0, None).is_err());
    }
}
