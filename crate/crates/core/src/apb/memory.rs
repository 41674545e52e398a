use crate::error::{Error, Result};

/// Storage cost of an APB matrix with `n` entries, `s` of them full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryBits {
    /// `(n − s) + s·(b_v + b_p)`.
    pub exact: u64,
    /// `n + s·(b_v + b_p)`: the bit matrix is stored in full.
    pub approx: u64,
    pub avg_exact: f64,
    pub avg_approx: f64,
}

pub fn memory_bits(n: usize, s: usize, value_bits: u32, position_bits: u32) -> Result<MemoryBits> {
    if n == 0 {
        return Err(Error::InvalidParameter("matrix has no entries".into()));
    }
    if s > n {
        return Err(Error::InvalidParameter(format!(
            "{s} full-precision entries exceed the {n} total"
        )));
    }
    let (n, s) = (n as u64, s as u64);
    let per_survivor = u64::from(value_bits) + u64::from(position_bits);
    let exact = (n - s) + s * per_survivor;
    let approx = n + s * per_survivor;
    Ok(MemoryBits {
        exact,
        approx,
        avg_exact: exact as f64 / n as f64,
        avg_approx: approx as f64 / n as f64,
    })
}

/// Bits to address a position: `max_i ⌊log₂(k_i − 1)⌋ + 1` over layer dimensions.
pub fn position_bits(dims: &[usize]) -> Result<u32> {
    if dims.is_empty() {
        return Err(Error::InvalidParameter("no layer dimensions given".into()));
    }
    dims.iter()
        .map(|&k| {
            if k < 2 {
                Err(Error::InvalidParameter(format!("layer dimension {k} is below 2")))
            } else {
                Ok(usize::BITS - (k - 1).leading_zeros())
            }
        })
        .try_fold(0, |acc, b| b.map(|b| acc.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_examples() {
        let m = memory_bits(1000, 10, 32, 10).unwrap();
        assert_eq!((m.exact, m.approx), (1410, 1420));
        assert_eq!((m.avg_exact, m.avg_approx), (1.41, 1.42));
        let m = memory_bits(500, 0, 32, 9).unwrap();
        assert_eq!((m.exact, m.avg_exact), (500, 1.0));
        let m = memory_bits(64, 64, 32, 6).unwrap();
        assert_eq!(m.exact, 64 * 38);
        assert_eq!(m.approx - m.exact, 64);
        assert!(memory_bits(10, 11, 32, 4).is_err());
    }

    #[test]
    fn position_examples() {
        assert_eq!(position_bits(&[512]).unwrap(), 9);
        assert_eq!(position_bits(&[2]).unwrap(), 1);
        assert_eq!(position_bits(&[512, 1024]).unwrap(), 10);
        assert_eq!(position_bits(&[3]).unwrap(), 2);
        assert_eq!(position_bits(&[513]).unwrap(), 10);
        assert!(position_bits(&[1]).is_err());
        assert!(position_bits(&[]).is_err());
    }
}
