//! Binary matrix fixtures.
//!
//! Layout: `b"MFMX"`, version `u16`, dtype code `u8`, rows `u32`, cols
//! `u32`, layout code `u8`, then row-major little-endian elements. All
//! header integers are little-endian. The layout code records which GEMM
//! operand role the matrix is intended for; the payload is always
//! row-major.

use std::io::{Read, Write};

use super::matrix::Matrix;
use super::tiling::Layout;
use crate::dtype::DataType;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"MFMX";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 16;

/// Operand role recorded in a fixture header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureLayout {
    RowMajor,
    Tiled(Layout),
}

impl FixtureLayout {
    fn code(self) -> u8 {
        match self {
            FixtureLayout::RowMajor => 0,
            FixtureLayout::Tiled(Layout::ALayout) => 1,
            FixtureLayout::Tiled(Layout::BLayout) => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(FixtureLayout::RowMajor),
            1 => Some(FixtureLayout::Tiled(Layout::ALayout)),
            2 => Some(FixtureLayout::Tiled(Layout::BLayout)),
            _ => None,
        }
    }
}

pub fn write_fixture<W: Write>(out: &mut W, m: &Matrix, layout: FixtureLayout) -> Result<()> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Fixture("rows exceed u32".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Fixture("cols exceed u32".into()))?;
    let mut buf = Vec::with_capacity(HEADER_BYTES + m.rows() * m.cols() * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(m.dtype().code());
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    buf.push(layout.code());
    buf.extend_from_slice(&m.to_le_bytes());
    out.write_all(&buf)
        .map_err(|e| Error::Fixture(format!("write failed: {e}")))
}

pub fn read_fixture<R: Read>(input: &mut R) -> Result<(Matrix, FixtureLayout)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Fixture(format!("read failed: {e}")))?;
    decode_fixture(&bytes)
}

pub fn decode_fixture(bytes: &[u8]) -> Result<(Matrix, FixtureLayout)> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Fixture("truncated header".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Fixture("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Fixture(format!("unsupported version {version}")));
    }
    let dtype = DataType::from_code(bytes[6])
        .ok_or_else(|| Error::Fixture(format!("unknown dtype code {}", bytes[6])))?;
    let rows = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    let layout = FixtureLayout::from_code(bytes[15])
        .ok_or_else(|| Error::Fixture(format!("unknown layout code {}", bytes[15])))?;
    let payload = &bytes[HEADER_BYTES..];
    let m = Matrix::from_le_bytes(rows, cols, dtype, payload)
        .map_err(|e| Error::Fixture(e.to_string()))?;
    Ok((m, layout))
}
