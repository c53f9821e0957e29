use half::f16;

use super::matrix::{Elements, Matrix};
use super::tiling::{Layout, TiledMatrix, PAGE_BYTES};
use crate::dtype::DataType;
use crate::error::{Error, Result};

/// Partial-sum type of the array: `i32` (wrapping) or `f32`.
pub trait Accumulator: Copy + Default + PartialEq + std::fmt::Debug + Send + Sync {
    fn mac(self, a: Self, b: Self) -> Self;
    /// Decodes one little-endian element of `dtype` into accumulator width.
    fn decode(dtype: DataType, bytes: &[u8]) -> Self;
}

impl Accumulator for i32 {
    #[inline]
    fn mac(self, a: i32, b: i32) -> i32 {
        self.wrapping_add(a.wrapping_mul(b))
    }

    fn decode(dtype: DataType, b: &[u8]) -> i32 {
        match dtype {
            DataType::Int8 => b[0] as i8 as i32,
            DataType::Int16 => i16::from_le_bytes([b[0], b[1]]) as i32,
            DataType::Int32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            _ => unreachable!("float element in integer accumulator"),
        }
    }
}

impl Accumulator for f32 {
    #[inline]
    fn mac(self, a: f32, b: f32) -> f32 {
        self + a * b
    }

    fn decode(dtype: DataType, b: &[u8]) -> f32 {
        match dtype {
            DataType::Fp16 => f16::from_le_bytes([b[0], b[1]]).to_f32(),
            DataType::Fp32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            _ => unreachable!("integer element in float accumulator"),
        }
    }
}

/// Decodes a whole tile into accumulator-width values, preserving order.
pub fn decode_tile<A: Accumulator>(tile: &[u8; PAGE_BYTES], dtype: DataType) -> Vec<A> {
    tile.chunks_exact(dtype.element_size())
        .map(|c| A::decode(dtype, c))
        .collect()
}

/// `res += a_blk × b_blk` for a `w × l` A block and an `l × w` B block.
/// Each output accumulates its `l` products in increasing reduction order.
pub fn multi_acc<A: Accumulator>(a_blk: &[A], b_blk: &[A], res: &mut [A], w: usize, l: usize) {
    debug_assert_eq!(a_blk.len(), w * l);
    debug_assert_eq!(b_blk.len(), l * w);
    debug_assert_eq!(res.len(), w * w);
    for r in 0..w {
        let a_row = &a_blk[r * l..(r + 1) * l];
        for c in 0..w {
            let mut acc = res[r * w + c];
            for (kk, &a) in a_row.iter().enumerate() {
                acc = acc.mac(a, b_blk[kk * w + c]);
            }
            res[r * w + c] = acc;
        }
    }
}

pub(crate) fn check_operands(a: &TiledMatrix, b: &TiledMatrix) -> Result<()> {
    if a.layout() != Layout::ALayout {
        return Err(Error::Layout {
            expected: Layout::ALayout.name(),
            got: a.layout().name(),
        });
    }
    if b.layout() != Layout::BLayout {
        return Err(Error::Layout {
            expected: Layout::BLayout.name(),
            got: b.layout().name(),
        });
    }
    if a.dtype() != b.dtype() {
        return Err(Error::DimensionMismatch(format!(
            "operand dtypes differ: {} vs {}",
            a.dtype(),
            b.dtype()
        )));
    }
    if a.source_dims().1 != b.source_dims().0 || a.grid_dims().1 != b.grid_dims().0 {
        return Err(Error::DimensionMismatch(format!(
            "reduction dims differ: A is {:?}, B is {:?}",
            a.source_dims(),
            b.source_dims()
        )));
    }
    Ok(())
}

fn block_multiply_typed<A: Accumulator>(a: &TiledMatrix, b: &TiledMatrix) -> Vec<A> {
    let dtype = a.dtype();
    let geo = a.geometry();
    let (w, l) = (geo.rows, geo.cols);
    let (m, _) = a.source_dims();
    let (_, n) = b.source_dims();
    let (m_tiles, k_tiles) = a.grid_dims();
    let n_tiles = b.grid_dims().1;

    let a_dec: Vec<Vec<A>> = a.tiles().iter().map(|t| decode_tile(t, dtype)).collect();
    let b_dec: Vec<Vec<A>> = b.tiles().iter().map(|t| decode_tile(t, dtype)).collect();

    let mut res = vec![A::default(); m * n];
    let mut block = vec![A::default(); w * w];
    for i in 0..m_tiles {
        for j in 0..n_tiles {
            block.fill(A::default());
            for k in 0..k_tiles {
                let a_blk = &a_dec[a.tile_index(i, k)];
                let b_blk = &b_dec[b.tile_index(k, j)];
                multi_acc(a_blk, b_blk, &mut block, w, l);
            }
            // SetBlock, clipped to the unpadded result.
            for r in 0..w.min(m - i * w) {
                let row = (i * w + r) * n + j * w;
                let cols = w.min(n - j * w);
                res[row..row + cols].copy_from_slice(&block[r * w..r * w + cols]);
            }
        }
    }
    res
}

pub(crate) fn finish_i32(m: usize, n: usize, values: Vec<i32>) -> Matrix {
    Matrix::from_elements(m, n, Elements::Int32(values)).expect("sized by construction")
}

pub(crate) fn finish_f32(m: usize, n: usize, dtype: DataType, values: Vec<f32>) -> Matrix {
    let elements = match dtype {
        DataType::Fp16 => Elements::Fp16(values.into_iter().map(f16::from_f32).collect()),
        _ => Elements::Fp32(values),
    };
    Matrix::from_elements(m, n, elements).expect("sized by construction")
}

/// Tile-by-tile GEMM over page-aligned operands.
///
/// Walks the output in `W × W` blocks (`i`, `j`), zeroes a block
/// accumulator, accumulates one `W × L` by `L × W` tile pair per reduction
/// step `k`, and writes the block back once.
pub fn block_matrix_multiply(a: &TiledMatrix, b: &TiledMatrix) -> Result<Matrix> {
    check_operands(a, b)?;
    let (m, n) = (a.source_dims().0, b.source_dims().1);
    let dtype = a.dtype();
    Ok(if dtype.is_float() {
        finish_f32(m, n, dtype, block_multiply_typed::<f32>(a, b))
    } else {
        finish_i32(m, n, block_multiply_typed::<i32>(a, b))
    })
}

/// Reference triple-loop product; the oracle for every tiled kernel.
///
/// Integers accumulate in `i64` and are reduced modulo 2³², which equals
/// wrapping 32-bit accumulation. Floats accumulate in `f32` in increasing
/// `k` order.
pub fn naive_gemm(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} · {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.dtype() != b.dtype() {
        return Err(Error::DimensionMismatch(format!(
            "operand dtypes differ: {} vs {}",
            a.dtype(),
            b.dtype()
        )));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let out = match (a.elements(), b.elements()) {
        (Elements::Int8(x), Elements::Int8(y)) => finish_i32(m, n, naive_int(x, y, m, k, n)),
        (Elements::Int16(x), Elements::Int16(y)) => finish_i32(m, n, naive_int(x, y, m, k, n)),
        (Elements::Int32(x), Elements::Int32(y)) => finish_i32(m, n, naive_int(x, y, m, k, n)),
        (Elements::Fp16(x), Elements::Fp16(y)) => {
            let x: Vec<f32> = x.iter().map(|v| v.to_f32()).collect();
            let y: Vec<f32> = y.iter().map(|v| v.to_f32()).collect();
            finish_f32(m, n, DataType::Fp16, naive_float(&x, &y, m, k, n))
        }
        (Elements::Fp32(x), Elements::Fp32(y)) => {
            finish_f32(m, n, DataType::Fp32, naive_float(x, y, m, k, n))
        }
        _ => unreachable!("dtypes checked above"),
    };
    Ok(out)
}

fn naive_int<T: Copy + Into<i64>>(x: &[T], y: &[T], m: usize, k: usize, n: usize) -> Vec<i32> {
    let mut out = vec![0i32; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc: i64 = 0;
            for p in 0..k {
                let prod = (x[i * k + p].into()).wrapping_mul(y[p * n + j].into());
                // Reduce each product so i32×i32 inputs wrap like 32-bit hardware.
                acc = acc.wrapping_add(prod as i32 as i64);
            }
            out[i * n + j] = acc as i32;
        }
    }
    out
}

fn naive_float(x: &[f32], y: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0f32; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0f32;
            for p in 0..k {
                acc += x[i * k + p] * y[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Distance in units in the last place between two floats, treating
/// `+0` and `-0` as equal.
pub fn ulp_distance(a: f32, b: f32) -> u32 {
    if a == b {
        return 0;
    }
    if a.is_nan() || b.is_nan() {
        return u32::MAX;
    }
    fn ordered(x: f32) -> i64 {
        let bits = x.to_bits() as i32 as i64;
        if bits < 0 {
            i32::MIN as i64 - bits
        } else {
            bits
        }
    }
    (ordered(a) - ordered(b)).unsigned_abs().min(u32::MAX as u64) as u32
}

/// Largest per-element ulp distance between two equally shaped float
/// matrices; `0` for identical integer matrices and `u32::MAX` on any
/// integer mismatch.
pub fn max_ulp_error(x: &Matrix, y: &Matrix) -> u32 {
    if x.rows() != y.rows() || x.cols() != y.cols() || x.dtype() != y.dtype() {
        return u32::MAX;
    }
    match (x.elements(), y.elements()) {
        (Elements::Fp32(p), Elements::Fp32(q)) => p
            .iter()
            .zip(q)
            .map(|(&a, &b)| ulp_distance(a, b))
            .max()
            .unwrap_or(0),
        (Elements::Fp16(p), Elements::Fp16(q)) => p
            .iter()
            .zip(q)
            .map(|(a, b)| {
                // Compare on the Fp16 grid.
                let (a, b) = (a.to_bits() as i16, b.to_bits() as i16);
                let ord = |v: i16| if v < 0 { i16::MIN as i32 - v as i32 } else { v as i32 };
                if a == b || (a & 0x7fff == 0 && b & 0x7fff == 0) {
                    0
                } else {
                    (ord(a) - ord(b)).unsigned_abs()
                }
            })
            .max()
            .unwrap_or(0),
        (p, q) if p == q => 0,
        _ => u32::MAX,
    }
}
