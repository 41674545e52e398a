//! The `BTSR` v1 tensor container.
//!
//! All integers are little-endian:
//!
//! ```text
//! magic "BTSR" | version u32 = 1 | kind u8 | rows u64 | cols u64 | payload
//! ```
//!
//! * kind 0 (dense f32): `rows·cols` raw `f32` values, row-major.
//! * kind 1 (bit): `words_per_row u64`, then `rows·words_per_row` raw `u64` words.
//! * kind 2 (csr): `nnz u64`, `row_ptr u64[rows+1]`, `col_idx u64[nnz]`, `vals f32[nnz]`.
//!
//! Composite values ({t, h, m} planes, APB layers) are stored as several
//! containers next to a small JSON sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BitMatrix, CsrMatrix, DenseMatrix, ThmPlanes};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BTSR";
pub const VERSION: u32 = 1;

const KIND_DENSE: u8 = 0;
const KIND_BIT: u8 = 1;
const KIND_CSR: u8 = 2;

/// Any tensor the container can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Dense(DenseMatrix),
    Bits(BitMatrix),
    Csr(CsrMatrix),
}

impl Tensor {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Tensor::Dense(_) => "dense",
            Tensor::Bits(_) => "bit",
            Tensor::Csr(_) => "csr",
        }
    }
}

impl From<DenseMatrix> for Tensor {
    fn from(m: DenseMatrix) -> Self {
        Tensor::Dense(m)
    }
}

impl From<BitMatrix> for Tensor {
    fn from(m: BitMatrix) -> Self {
        Tensor::Bits(m)
    }
}

impl From<CsrMatrix> for Tensor {
    fn from(m: CsrMatrix) -> Self {
        Tensor::Csr(m)
    }
}

fn put_u64(w: &mut impl Write, v: usize) -> Result<()> {
    w.write_all(&(v as u64).to_le_bytes())?;
    Ok(())
}

pub fn write_tensor(w: &mut impl Write, tensor: &Tensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let (kind, rows, cols) = match tensor {
        Tensor::Dense(m) => (KIND_DENSE, m.rows(), m.cols()),
        Tensor::Bits(m) => (KIND_BIT, m.rows(), m.cols()),
        Tensor::Csr(m) => (KIND_CSR, m.rows(), m.cols()),
    };
    w.write_all(&[kind])?;
    put_u64(w, rows)?;
    put_u64(w, cols)?;
    match tensor {
        Tensor::Dense(m) => {
            for v in m.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Tensor::Bits(m) => {
            put_u64(w, m.words_per_row())?;
            for v in m.words() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Tensor::Csr(m) => {
            put_u64(w, m.nnz())?;
            for &p in m.row_ptr() {
                put_u64(w, p)?;
            }
            for &c in m.col_idx() {
                put_u64(w, c)?;
            }
            for v in m.vals() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn exact<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
            _ => Error::Io(e),
        })?;
        Ok(buf)
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.exact::<8>(what)?);
        usize::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} overflows")))
    }

    /// Reads `count` fixed-size items without trusting `count` for allocation.
    fn block(&mut self, count: usize, item: usize, what: &str) -> Result<Vec<u8>> {
        let len = count
            .checked_mul(item)
            .filter(|&n| n <= isize::MAX as usize)
            .ok_or_else(|| Error::Format(format!("{what} size overflows")))?;
        let mut buf = Vec::new();
        (&mut self.inner).take(len as u64).read_to_end(&mut buf)?;
        if buf.len() != len {
            return Err(Error::Format(format!(
                "truncated {what}: expected {len} bytes, found {}",
                buf.len()
            )));
        }
        Ok(buf)
    }

    fn u64s(&mut self, count: usize, what: &str) -> Result<Vec<usize>> {
        self.block(count, 8, what)?
            .chunks_exact(8)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().unwrap());
                usize::try_from(v).map_err(|_| Error::Format(format!("{what} entry {v} overflows")))
            })
            .collect()
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        Ok(self
            .block(count, 4, what)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn format_err(e: Error) -> Error {
    match e {
        Error::InvalidData(msg) | Error::DimensionMismatch(msg) => Error::Format(msg),
        other => other,
    }
}

pub fn read_tensor(r: impl Read) -> Result<Tensor> {
    let mut r = Reader { inner: r };
    let magic = r.exact::<4>("magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}")));
    }
    let version = u32::from_le_bytes(r.exact::<4>("version")?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [kind] = r.exact::<1>("kind")?;
    let rows = r.u64("rows")?;
    let cols = r.u64("cols")?;
    match kind {
        KIND_DENSE => {
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Format(format!("{rows}x{cols} overflows")))?;
            let data = r.f32s(n, "dense payload")?;
            Ok(Tensor::Dense(DenseMatrix::new(rows, cols, data).map_err(format_err)?))
        }
        KIND_BIT => {
            let wpr = r.u64("words_per_row")?;
            let n = rows
                .checked_mul(wpr)
                .ok_or_else(|| Error::Format(format!("{rows}x{wpr} words overflows")))?;
            let words = r
                .block(n, 8, "bit payload")?
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(Tensor::Bits(
                BitMatrix::from_words(rows, cols, wpr, words).map_err(format_err)?,
            ))
        }
        KIND_CSR => {
            let nnz = r.u64("nnz")?;
            let ptr_len = rows
                .checked_add(1)
                .ok_or_else(|| Error::Format("row count overflows".into()))?;
            let row_ptr = r.u64s(ptr_len, "row_ptr")?;
            let col_idx = r.u64s(nnz, "col_idx")?;
            let vals = r.f32s(nnz, "vals")?;
            Ok(Tensor::Csr(
                CsrMatrix::new(rows, cols, row_ptr, col_idx, vals).map_err(format_err)?,
            ))
        }
        other => Err(Error::Format(format!("unknown tensor kind {other}"))),
    }
}

pub fn store_tensor(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, tensor)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor(BufReader::new(File::open(path)?))
}

fn expect_kind<T>(t: Tensor, want: &str, pick: impl FnOnce(Tensor) -> Option<T>) -> Result<T> {
    let got = t.kind_name();
    pick(t).ok_or_else(|| Error::Format(format!("expected a {want} tensor, found {got}")))
}

pub fn load_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    expect_kind(load_tensor(path)?, "dense", |t| match t {
        Tensor::Dense(m) => Some(m),
        _ => None,
    })
}

pub fn load_bits(path: impl AsRef<Path>) -> Result<BitMatrix> {
    expect_kind(load_tensor(path)?, "bit", |t| match t {
        Tensor::Bits(m) => Some(m),
        _ => None,
    })
}

pub fn load_csr(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    expect_kind(load_tensor(path)?, "csr", |t| match t {
        Tensor::Csr(m) => Some(m),
        _ => None,
    })
}

/// `stem` + `suffix`, keeping any directory and dots in the stem.
pub(crate) fn sibling(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct ThmSidecar {
    s: f32,
    gamma: Option<f32>,
}

/// Writes `<stem>.t.btsr`, `<stem>.h.btsr`, `<stem>.m.btsr` and `<stem>.json`.
pub fn store_thm(stem: impl AsRef<Path>, planes: &ThmPlanes) -> Result<()> {
    let stem = stem.as_ref();
    for (suffix, p) in [(".t.btsr", planes.t()), (".h.btsr", planes.h()), (".m.btsr", planes.m())] {
        store_tensor(sibling(stem, suffix), &Tensor::Bits(p.clone()))?;
    }
    let sidecar = ThmSidecar {
        s: planes.scale(),
        gamma: planes.gamma(),
    };
    std::fs::write(sibling(stem, ".json"), serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

pub fn load_thm(stem: impl AsRef<Path>) -> Result<ThmPlanes> {
    let stem = stem.as_ref();
    let t = load_bits(sibling(stem, ".t.btsr"))?;
    let h = load_bits(sibling(stem, ".h.btsr"))?;
    let m = load_bits(sibling(stem, ".m.btsr"))?;
    let sidecar: ThmSidecar = serde_json::from_slice(&std::fs::read(sibling(stem, ".json"))?)?;
    ThmPlanes::new(t, h, m, sidecar.s, sidecar.gamma)
}
