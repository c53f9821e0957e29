//! Output-stationary `W × W` systolic array.

use serde::{Deserialize, Serialize};

use crate::dtype::DataType;
use crate::error::{Error, Result};
use crate::gemm::{tile_geometry, Accumulator, ARRAY_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub width: usize,
    pub freq_hz: f64,
    pub dtype: DataType,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig { width: ARRAY_WIDTH, freq_hz: 1e9, dtype: DataType::Int8 }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("array width must be at least 1".into()));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::Config("array frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn macs_per_cycle(&self) -> usize {
        self.width * self.width
    }

    /// Reduction length of one page tile at this precision.
    pub fn tile_length(&self) -> usize {
        tile_geometry(self.dtype).cols
    }
}

/// Cycles for one `W × L` by `L × W` tile pair, including fill and drain.
pub fn tile_compute_cycles(cfg: &ArrayConfig, l: usize) -> u64 {
    (l + 2 * (cfg.width.max(1) - 1)) as u64
}

/// Peak throughput in ops per second, counting a MAC as two ops.
pub fn peak_gops(cfg: &ArrayConfig) -> f64 {
    2.0 * (cfg.width * cfg.width) as f64 * cfg.freq_hz
}

/// Runs one tile pair through the array, accumulating into `c_block`.
///
/// Operands enter skewed: PE `(r, c)` sees reduction index `t - r - c` at
/// cycle `t`. Returns the number of cycles the wavefront took.
pub fn sa_compute_tile<A: Accumulator>(
    a_tile: &[A],
    b_tile: &[A],
    c_block: &mut [A],
    w: usize,
    l: usize,
) -> Result<u64> {
    if w == 0 || l == 0 {
        return Err(Error::DimensionMismatch("empty tile".into()));
    }
    if a_tile.len() != w * l || b_tile.len() != l * w || c_block.len() != w * w {
        return Err(Error::DimensionMismatch(format!(
            "tile shapes {}/{}/{} do not fit a {w}x{w} array with L={l}",
            a_tile.len(),
            b_tile.len(),
            c_block.len()
        )));
    }
    let cycles = l + 2 * (w - 1);
    for t in 0..cycles {
        let r_lo = (t + 1).saturating_sub(l + w - 1).min(w);
        for r in r_lo..w.min(t + 1) {
            for c in 0..w {
                let Some(kk) = t.checked_sub(r + c) else { break };
                if kk >= l {
                    continue;
                }
                let idx = r * w + c;
                c_block[idx] = c_block[idx].mac(a_tile[r * l + kk], b_tile[kk * w + c]);
            }
        }
    }
    Ok(cycles as u64)
}
