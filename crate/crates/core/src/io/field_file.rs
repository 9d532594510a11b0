//! The `VFF1` field container.
//!
//! ```text
//! offset  size  content
//! 0       4     "VFF1"
//! 4       32    u32 LE: version, T, H, W, C, N, dc_index, reserved (0)
//! 36      ...   f32 LE: bank (N x 3, [x, y, t]), then coefficients
//!               (T x H x W x C x N x 2, (c, d) pairs)
//! ```

use std::path::Path;

use super::IoError;
use crate::error::{io_at, Error, Result};
use crate::field::{FieldGrid, FrequencyBank, Real};

pub const FIELD_MAGIC: [u8; 4] = *b"VFF1";
pub const FIELD_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldHeader {
    pub version: u32,
    /// `[T, H, W]`.
    pub dims: [u32; 3],
    pub channels: u32,
    pub n_basis: u32,
    pub dc_index: u32,
}

impl FieldHeader {
    pub fn of<S: Real>(grid: &FieldGrid<S>) -> Result<Self> {
        let to_u32 = |v: usize, what: &str| {
            u32::try_from(v).map_err(|_| Error::structural(format!("{what} = {v} does not fit the field header")))
        };
        let [t, h, w] = grid.dims();
        Ok(Self {
            version: FIELD_VERSION,
            dims: [to_u32(t, "T")?, to_u32(h, "H")?, to_u32(w, "W")?],
            channels: to_u32(grid.channels(), "C")?,
            n_basis: to_u32(grid.n_basis(), "N")?,
            dc_index: to_u32(grid.bank().dc_index(), "dc_index")?,
        })
    }

    /// Number of `f32` values following the header, `None` on overflow.
    pub fn payload_values(&self) -> Option<u64> {
        payload_values(self.dims.map(u64::from), self.channels as u64, self.n_basis as u64)
    }

    fn file_len(&self) -> Option<u64> {
        self.payload_values()?.checked_mul(4)?.checked_add(HEADER_BYTES as u64)
    }
}

/// `T H W C N 2 + N 3`, the float count of a field file's payload.
pub fn payload_values(dims: [u64; 3], channels: u64, n_basis: u64) -> Option<u64> {
    let coeffs = dims.iter().try_fold(channels, |acc, &d| acc.checked_mul(d))?.checked_mul(n_basis)?.checked_mul(2)?;
    coeffs.checked_add(n_basis.checked_mul(3)?)
}

pub fn encode_field<S: Real>(grid: &FieldGrid<S>) -> Result<Vec<u8>> {
    let header = FieldHeader::of(grid)?;
    let len = header
        .file_len()
        .and_then(|l| usize::try_from(l).ok())
        .ok_or_else(|| Error::structural("field too large to encode"))?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&FIELD_MAGIC);
    for v in [
        header.version,
        header.dims[0],
        header.dims[1],
        header.dims[2],
        header.channels,
        header.n_basis,
        header.dc_index,
        0,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for w in grid.bank().omegas() {
        for &v in w {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    for &v in grid.coeffs() {
        out.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
    }
    debug_assert_eq!(out.len(), len);
    Ok(out)
}

fn read_u32(bytes: &[u8], k: usize) -> u32 {
    let o = 4 + 4 * k;
    u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap())
}

/// Parses and validates the header of a field file.
pub fn decode_header(bytes: &[u8]) -> Result<FieldHeader, IoError> {
    if bytes.len() < 4 {
        return Err(IoError::LengthMismatch { expected: HEADER_BYTES as u64, found: bytes.len() as u64 });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != FIELD_MAGIC {
        return Err(IoError::BadMagic { found: magic });
    }
    if bytes.len() < HEADER_BYTES {
        return Err(IoError::LengthMismatch { expected: HEADER_BYTES as u64, found: bytes.len() as u64 });
    }
    let version = read_u32(bytes, 0);
    if version != FIELD_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let header = FieldHeader {
        version,
        dims: [read_u32(bytes, 1), read_u32(bytes, 2), read_u32(bytes, 3)],
        channels: read_u32(bytes, 4),
        n_basis: read_u32(bytes, 5),
        dc_index: read_u32(bytes, 6),
    };
    if read_u32(bytes, 7) != 0 {
        return Err(IoError::InvalidHeader("reserved field is nonzero".into()));
    }
    if header.n_basis == 0 || header.dc_index >= header.n_basis {
        return Err(IoError::InvalidHeader(format!("dc_index {} not below N = {}", header.dc_index, header.n_basis)));
    }
    let expected = header.file_len().ok_or_else(|| IoError::InvalidHeader("payload size overflows".into()))?;
    if expected != bytes.len() as u64 {
        return Err(IoError::LengthMismatch { expected, found: bytes.len() as u64 });
    }
    Ok(header)
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldGrid<f32>> {
    let header = decode_header(bytes)?;
    let floats = bytes[HEADER_BYTES..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()));
    let n = header.n_basis as usize;
    let mut floats = floats.peekable();
    let omegas: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let mut w = [0.0; 3];
            for v in &mut w {
                *v = floats.next().unwrap() as f64;
            }
            w
        })
        .collect();
    let bank = FrequencyBank::new(omegas, header.dc_index as usize)
        .map_err(|e| IoError::InvalidHeader(format!("frequency bank: {e}")))?;
    let coeffs: Vec<f32> = floats.collect();
    if let Some(k) = coeffs.iter().position(|v| !v.is_finite()) {
        return Err(IoError::InvalidHeader(format!("non-finite coefficient at index {k}")).into());
    }
    let dims = header.dims.map(|d| d as usize);
    FieldGrid::from_coeffs(dims, header.channels as usize, bank, coeffs)
}

pub fn save_field<S: Real>(grid: &FieldGrid<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_field(grid)?;
    std::fs::write(path, bytes).map_err(io_at(path))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<FieldGrid<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_at(path))?;
    decode_field(&bytes)
}
