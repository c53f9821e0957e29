use half::f16;

use crate::dtype::DataType;
use crate::error::{Error, Result};

/// Typed, row-major element storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Elements {
    Int8(Vec<i8>),
    Int16(Vec<i16>),
    Int32(Vec<i32>),
    Fp16(Vec<f16>),
    Fp32(Vec<f32>),
}

impl Elements {
    pub fn dtype(&self) -> DataType {
        match self {
            Elements::Int8(_) => DataType::Int8,
            Elements::Int16(_) => DataType::Int16,
            Elements::Int32(_) => DataType::Int32,
            Elements::Fp16(_) => DataType::Fp16,
            Elements::Fp32(_) => DataType::Fp32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Elements::Int8(v) => v.len(),
            Elements::Int16(v) => v.len(),
            Elements::Int32(v) => v.len(),
            Elements::Fp16(v) => v.len(),
            Elements::Fp32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(dtype: DataType, len: usize) -> Elements {
        match dtype {
            DataType::Int8 => Elements::Int8(vec![0; len]),
            DataType::Int16 => Elements::Int16(vec![0; len]),
            DataType::Int32 => Elements::Int32(vec![0; len]),
            DataType::Fp16 => Elements::Fp16(vec![f16::ZERO; len]),
            DataType::Fp32 => Elements::Fp32(vec![0.0; len]),
        }
    }

    /// Writes element `idx` as little-endian bytes into `out`.
    pub(crate) fn write_le(&self, idx: usize, out: &mut [u8]) {
        match self {
            Elements::Int8(v) => out[0] = v[idx] as u8,
            Elements::Int16(v) => out.copy_from_slice(&v[idx].to_le_bytes()),
            Elements::Int32(v) => out.copy_from_slice(&v[idx].to_le_bytes()),
            Elements::Fp16(v) => out.copy_from_slice(&v[idx].to_le_bytes()),
            Elements::Fp32(v) => out.copy_from_slice(&v[idx].to_le_bytes()),
        }
    }

    pub(crate) fn from_le_bytes(dtype: DataType, bytes: &[u8]) -> Elements {
        let s = dtype.element_size();
        let chunks = bytes.chunks_exact(s);
        match dtype {
            DataType::Int8 => Elements::Int8(bytes.iter().map(|&b| b as i8).collect()),
            DataType::Int16 => {
                Elements::Int16(chunks.map(|c| i16::from_le_bytes([c[0], c[1]])).collect())
            }
            DataType::Int32 => Elements::Int32(
                chunks
                    .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
            DataType::Fp16 => {
                Elements::Fp16(chunks.map(|c| f16::from_le_bytes([c[0], c[1]])).collect())
            }
            DataType::Fp32 => Elements::Fp32(
                chunks
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
        }
    }
}

/// Element types that can back a [`Matrix`].
pub trait Element: Copy + private::Sealed {
    const DTYPE: DataType;
    fn wrap(values: Vec<Self>) -> Elements;
    fn view(elements: &Elements) -> Option<&[Self]>;
}

mod private {
    pub trait Sealed {}
    impl Sealed for i8 {}
    impl Sealed for i16 {}
    impl Sealed for i32 {}
    impl Sealed for half::f16 {}
    impl Sealed for f32 {}
}

macro_rules! element {
    ($t:ty, $variant:ident) => {
        impl Element for $t {
            const DTYPE: DataType = DataType::$variant;
            fn wrap(values: Vec<Self>) -> Elements {
                Elements::$variant(values)
            }
            fn view(elements: &Elements) -> Option<&[Self]> {
                match elements {
                    Elements::$variant(v) => Some(v),
                    _ => None,
                }
            }
        }
    };
}

element!(i8, Int8);
element!(i16, Int16);
element!(i32, Int32);
element!(f16, Fp16);
element!(f32, Fp32);

/// A dense row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    elements: Elements,
}

impl Matrix {
    pub fn new<T: Element>(rows: usize, cols: usize, values: Vec<T>) -> Result<Matrix> {
        Matrix::from_elements(rows, cols, T::wrap(values))
    }

    pub fn from_elements(rows: usize, cols: usize, elements: Elements) -> Result<Matrix> {
        if elements.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                elements.len()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            elements,
        })
    }

    pub fn zeros(rows: usize, cols: usize, dtype: DataType) -> Matrix {
        Matrix {
            rows,
            cols,
            elements: Elements::zeros(dtype, rows * cols),
        }
    }

    /// Identity matrix; `n × n`.
    pub fn identity(n: usize, dtype: DataType) -> Matrix {
        let mut m = Matrix::zeros(n, n, dtype);
        for i in 0..n {
            m.set_one(i * n + i);
        }
        m
    }

    fn set_one(&mut self, idx: usize) {
        match &mut self.elements {
            Elements::Int8(v) => v[idx] = 1,
            Elements::Int16(v) => v[idx] = 1,
            Elements::Int32(v) => v[idx] = 1,
            Elements::Fp16(v) => v[idx] = f16::ONE,
            Elements::Fp32(v) => v[idx] = 1.0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dtype(&self) -> DataType {
        self.elements.dtype()
    }

    pub fn elements(&self) -> &Elements {
        &self.elements
    }

    pub fn into_elements(self) -> Elements {
        self.elements
    }

    pub fn values<T: Element>(&self) -> Option<&[T]> {
        T::view(&self.elements)
    }

    /// Element `(r, c)` widened to `f64`, for diagnostics and tests.
    pub fn get_f64(&self, r: usize, c: usize) -> f64 {
        let i = r * self.cols + c;
        match &self.elements {
            Elements::Int8(v) => v[i] as f64,
            Elements::Int16(v) => v[i] as f64,
            Elements::Int32(v) => v[i] as f64,
            Elements::Fp16(v) => v[i].to_f64(),
            Elements::Fp32(v) => v[i] as f64,
        }
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let s = self.dtype().element_size();
        let mut out = vec![0u8; self.elements.len() * s];
        for (i, chunk) in out.chunks_exact_mut(s).enumerate() {
            self.elements.write_le(i, chunk);
        }
        out
    }

    pub fn from_le_bytes(rows: usize, cols: usize, dtype: DataType, bytes: &[u8]) -> Result<Matrix> {
        if bytes.len() != rows * cols * dtype.element_size() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} {dtype} needs {} bytes, got {}",
                rows * cols * dtype.element_size(),
                bytes.len()
            )));
        }
        Matrix::from_elements(rows, cols, Elements::from_le_bytes(dtype, bytes))
    }
}
