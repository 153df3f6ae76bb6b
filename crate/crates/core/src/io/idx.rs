use std::path::Path;

use ndarray::Array2;

use crate::error::{Location, ParseError, Result};

const UNSIGNED_BYTE: u8 = 0x08;

/// An unsigned-byte IDX tensor: `dims[0]` items of `dims[1..]` bytes each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn count(&self) -> usize {
        self.dims[0]
    }

    pub fn item_len(&self) -> usize {
        self.dims[1..].iter().product()
    }

    /// One row per item, pixels row-major and scaled by 1/255.
    pub fn to_features(&self) -> Array2<f64> {
        let w = self.item_len();
        Array2::from_shape_fn((self.count(), w), |(i, k)| self.data[i * w + k] as f64 / 255.0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0, 0, UNSIGNED_BYTE, self.dims.len() as u8];
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_be_bytes());
        }
        out.extend_from_slice(&self.data);
        out
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, ParseError> {
    let err = |at: usize, msg: String| ParseError::new(Location::Offset(at), msg);
    if bytes.len() < 4 {
        return Err(err(bytes.len(), format!("header needs 4 bytes, found {}", bytes.len())));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(err(0, format!("bad magic {:02x} {:02x}, expected 00 00", bytes[0], bytes[1])));
    }
    if bytes[2] != UNSIGNED_BYTE {
        return Err(err(2, format!("unsupported element type 0x{:02x}, only 0x08 is read", bytes[2])));
    }
    let ndim = bytes[3] as usize;
    if !(1..=3).contains(&ndim) {
        return Err(err(3, format!("dimension count {ndim} outside 1..=3")));
    }
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(err(
            bytes.len(),
            format!("header needs {header} bytes, found {}", bytes.len()),
        ));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|k| {
            let at = 4 + 4 * k;
            u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
        })
        .collect();
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| err(4, "dimension sizes overflow".into()))?;
    let payload = bytes.len() - header;
    if payload != total {
        return Err(err(
            header,
            format!("expected {total} payload bytes, found {payload}"),
        ));
    }
    Ok(IdxTensor {
        dims,
        data: bytes[header..].to_vec(),
    })
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxTensor> {
    let path = path.as_ref();
    let bytes = super::read_bytes(path)?;
    parse_idx(&bytes).map_err(|e| crate::error::Error::from(e).in_file(path))
}

pub fn write_idx(path: impl AsRef<Path>, tensor: &IdxTensor) -> Result<()> {
    super::write_bytes(path.as_ref(), &tensor.to_bytes())
}
