//! Closed-form bandwidth bounds and the roofline sweep.

use serde::{Deserialize, Serialize};

use crate::dtype::DataType;
use crate::engine::simulate_gemm;
use crate::error::{Error, Result};
use crate::link::raw_bandwidth;
use crate::system::SystemConfig;
use crate::time::Ps;

/// Link bandwidth in bytes per second needed for tile transfers to hide
/// behind compute on a `w × w` array at `f` Hz with `s`-byte elements and
/// reduction length `l`.
pub fn overlap_bound(w: usize, f: f64, s: usize, l: usize, eta_io: f64, eta_sa: f64) -> Result<f64> {
    if w == 0 || l == 0 || s == 0 || !(f > 0.0) {
        return Err(Error::InvalidInput("array width, length, element size and clock must be positive".into()));
    }
    if !(eta_io > 0.0 && eta_io <= 1.0 && eta_sa > 0.0 && eta_sa <= 1.0) {
        return Err(Error::InvalidInput("utilization factors must be in (0, 1]".into()));
    }
    let (w, l, s) = (w as f64, l as f64, s as f64);
    let bytes_per_tile = 2.0 * w * l + w * w;
    let cycles_per_tile = l + 2.0 * (w - 1.0);
    Ok(s * f * bytes_per_tile / cycles_per_tile * (eta_sa / eta_io))
}

/// The `l → ∞` limit of [`overlap_bound`].
pub fn overlap_asymptote(w: usize, f: f64, s: usize, eta_io: f64, eta_sa: f64) -> f64 {
    2.0 * s as f64 * w as f64 * f * (eta_sa / eta_io)
}

/// Relative change in the bound when tiles grow `multiplier`-fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SramSensitivity {
    pub base: f64,
    pub scaled: f64,
    pub relative_change: f64,
}

pub fn srams_sensitivity(w: usize, f: f64, s: usize, l: usize, multiplier: f64) -> Result<SramSensitivity> {
    if !(multiplier >= 1.0) {
        return Err(Error::InvalidInput("multiplier must be at least 1".into()));
    }
    let base = overlap_bound(w, f, s, l, 1.0, 1.0)?;
    let scaled = if multiplier.is_infinite() {
        overlap_asymptote(w, f, s, 1.0, 1.0)
    } else {
        overlap_bound(w, f, s, (l as f64 * multiplier).round() as usize, 1.0, 1.0)?
    };
    Ok(SramSensitivity { base, scaled, relative_change: scaled / base - 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    pub ideal_gops: f64,
    /// Attainable rate under the link roof, `min(peak, BW × intensity)`.
    pub bound_gops: f64,
    pub achieved_gops: f64,
    pub time: Ps,
}

/// Ops per byte moved over the link by the tile schedule.
pub fn arithmetic_intensity(dtype: DataType) -> f64 {
    let geo = crate::gemm::tile_geometry(dtype);
    let ops = 2.0 * (geo.rows * geo.rows * geo.cols) as f64;
    ops / (2 * geo.bytes) as f64
}

/// Simulates one GEMM at each ideal compute rate by rescaling the array
/// clock.
pub fn roofline(
    cfg: &SystemConfig,
    (m, n, k): (usize, usize, usize),
    dtype: DataType,
    gops_sweep: &[f64],
) -> Result<Vec<RooflinePoint>> {
    let bw = raw_bandwidth(&cfg.link);
    if !(bw > 0.0) {
        return Err(Error::Config("link bandwidth must be positive".into()));
    }
    let macs = (cfg.array.width * cfg.array.width) as f64;
    let ops = 2.0 * (m * n * k) as f64;
    gops_sweep
        .iter()
        .map(|&gops| {
            if !(gops > 0.0) {
                return Err(Error::InvalidInput("compute rates must be positive".into()));
            }
            let mut c = cfg.clone();
            c.array.freq_hz = gops * 1e9 / (2.0 * macs);
            let r = simulate_gemm(m, n, k, dtype, &c)?;
            Ok(RooflinePoint {
                ideal_gops: gops,
                bound_gops: gops.min(bw * arithmetic_intensity(dtype) / 1e9),
                achieved_gops: ops / r.total.as_secs() / 1e9,
                time: r.total,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymptotes() {
        for (s, gbps) in [(1, 32e9), (2, 64e9), (4, 128e9)] {
            let a = overlap_asymptote(16, 1e9, s, 1.0, 1.0);
            assert_eq!(a, gbps);
            let far = overlap_bound(16, 1e9, s, 1 << 40, 1.0, 1.0).unwrap();
            assert!((far / gbps - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn int8_tile_bound() {
        let b = overlap_bound(16, 1e9, 1, 256, 1.0, 1.0).unwrap();
        assert_eq!(b, 8448e9 / 286.0);
        let tighter = overlap_bound(16, 1e9, 1, 256, 0.5, 1.0).unwrap();
        assert_eq!(tighter, 2.0 * b);
        assert!(overlap_bound(16, 1e9, 1, 256, 0.0, 1.0).is_err());
    }

    #[test]
    fn sram_doubling() {
        let d = srams_sensitivity(16, 1e9, 1, 256, 2.0).unwrap();
        assert!((d.base / 1e9 - 29.538).abs() < 1e-3);
        assert_eq!(d.scaled, 16640e9 / 542.0);
        assert!((d.relative_change - 0.0394).abs() < 1e-4);
        assert_eq!(srams_sensitivity(16, 1e9, 1, 256, 1.0).unwrap().relative_change, 0.0);
        assert_eq!(srams_sensitivity(16, 1e9, 1, 256, f64::INFINITY).unwrap().scaled, 32e9);
        assert!(srams_sensitivity(16, 1e9, 1, 256, 0.5).is_err());
    }

    #[test]
    fn intensity_per_dtype() {
        assert_eq!(arithmetic_intensity(DataType::Int8), 16.0);
        assert_eq!(arithmetic_intensity(DataType::Fp32), 4.0);
    }
}
