use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Element precision supported by the array and the tiled layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DataType {
    Int8,
    Int16,
    Int32,
    Fp16,
    Fp32,
}

impl DataType {
    pub const ALL: [DataType; 5] = [
        DataType::Int8,
        DataType::Int16,
        DataType::Int32,
        DataType::Fp16,
        DataType::Fp32,
    ];

    /// Bytes per stored element.
    pub const fn element_size(self) -> usize {
        match self {
            DataType::Int8 => 1,
            DataType::Int16 | DataType::Fp16 => 2,
            DataType::Int32 | DataType::Fp32 => 4,
        }
    }

    /// Kind used for partial sums: 32-bit integer for integer inputs,
    /// 32-bit float for float inputs.
    pub const fn accumulator(self) -> DataType {
        match self {
            DataType::Int8 | DataType::Int16 | DataType::Int32 => DataType::Int32,
            DataType::Fp16 | DataType::Fp32 => DataType::Fp32,
        }
    }

    /// Element kind of a GEMM result. Integer products are kept at
    /// accumulator width; Fp16 rounds the Fp32 accumulator back to Fp16.
    pub const fn output(self) -> DataType {
        match self {
            DataType::Fp16 => DataType::Fp16,
            other => other.accumulator(),
        }
    }

    pub const fn is_float(self) -> bool {
        matches!(self, DataType::Fp16 | DataType::Fp32)
    }

    /// Code used by the binary matrix fixture format.
    pub const fn code(self) -> u8 {
        match self {
            DataType::Int8 => 0,
            DataType::Int16 => 1,
            DataType::Int32 => 2,
            DataType::Fp16 => 3,
            DataType::Fp32 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<DataType> {
        DataType::ALL.into_iter().find(|d| d.code() == code)
    }

    pub const fn name(self) -> &'static str {
        match self {
            DataType::Int8 => "int8",
            DataType::Int16 => "int16",
            DataType::Int32 => "int32",
            DataType::Fp16 => "fp16",
            DataType::Fp32 => "fp32",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DataType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        DataType::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown dtype `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_accumulators() {
        let sizes: Vec<_> = DataType::ALL.iter().map(|d| d.element_size()).collect();
        assert_eq!(sizes, [1, 2, 4, 2, 4]);
        for d in DataType::ALL {
            let acc = d.accumulator();
            assert_eq!(acc.element_size(), 4);
            assert_eq!(acc.is_float(), d.is_float());
        }
    }

    #[test]
    fn codes_round_trip() {
        for d in DataType::ALL {
            assert_eq!(DataType::from_code(d.code()), Some(d));
            assert_eq!(d.name().parse::<DataType>().unwrap(), d);
        }
        assert_eq!(DataType::from_code(9), None);
    }
}
