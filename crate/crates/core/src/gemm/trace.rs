use serde::{Deserialize, Serialize};

use super::multiply::check_operands;
use super::tiling::{tile_geometry, TiledMatrix};
use crate::dtype::DataType;
use crate::error::Result;

/// One step of the tile-level schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileEvent {
    ReadA { i: usize, k: usize },
    ReadB { j: usize, k: usize },
    Compute { i: usize, j: usize, k: usize },
    WriteC { i: usize, j: usize },
}

/// The ordered tile accesses of a blocked GEMM over an
/// `m_tiles × n_tiles` grid of `W × W` output blocks with `k_tiles`
/// reduction steps each.
///
/// Iterating yields, for every `(i, j)` in row-major order, `k_tiles`
/// triples `ReadA(i,k), ReadB(j,k), Compute(i,j,k)` followed by
/// `WriteC(i,j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileAccessTrace {
    pub m_tiles: usize,
    pub n_tiles: usize,
    pub k_tiles: usize,
}

impl TileAccessTrace {
    /// Trace for an `m × k` by `k × n` product in `dtype`.
    pub fn for_dims(m: usize, n: usize, k: usize, dtype: DataType) -> Self {
        let geo = tile_geometry(dtype);
        TileAccessTrace {
            m_tiles: m.div_ceil(geo.rows),
            n_tiles: n.div_ceil(geo.rows),
            k_tiles: k.div_ceil(geo.cols),
        }
    }

    pub fn output_blocks(&self) -> usize {
        self.m_tiles * self.n_tiles
    }

    pub fn compute_events(&self) -> usize {
        self.output_blocks() * self.k_tiles
    }

    pub fn len(&self) -> usize {
        self.compute_events() * 3 + self.output_blocks()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = TileEvent> + '_ {
        let (nt, kt) = (self.n_tiles, self.k_tiles);
        (0..self.output_blocks()).flat_map(move |blk| {
            let (i, j) = (blk / nt, blk % nt);
            (0..kt)
                .flat_map(move |k| {
                    [
                        TileEvent::ReadA { i, k },
                        TileEvent::ReadB { j, k },
                        TileEvent::Compute { i, j, k },
                    ]
                })
                .chain(std::iter::once(TileEvent::WriteC { i, j }))
        })
    }
}

/// Tile access trace for multiplying two tiled operands.
pub fn trace_tile_accesses(a: &TiledMatrix, b: &TiledMatrix) -> Result<TileAccessTrace> {
    check_operands(a, b)?;
    Ok(TileAccessTrace {
        m_tiles: a.grid_dims().0,
        n_tiles: b.grid_dims().1,
        k_tiles: a.grid_dims().1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gemm::{pack_a, pack_b, Matrix};
    use std::collections::HashMap;

    #[test]
    fn single_tile_trace() {
        let a = pack_a(&Matrix::zeros(16, 256, DataType::Int8)).unwrap();
        let b = pack_b(&Matrix::zeros(256, 16, DataType::Int8)).unwrap();
        let events: Vec<_> = trace_tile_accesses(&a, &b).unwrap().iter().collect();
        assert_eq!(
            events,
            [
                TileEvent::ReadA { i: 0, k: 0 },
                TileEvent::ReadB { j: 0, k: 0 },
                TileEvent::Compute { i: 0, j: 0, k: 0 },
                TileEvent::WriteC { i: 0, j: 0 },
            ]
        );
    }

    #[test]
    fn two_by_two_blocks() {
        let t = TileAccessTrace::for_dims(32, 32, 256, DataType::Int8);
        let computes = t.iter().filter(|e| matches!(e, TileEvent::Compute { .. })).count();
        let writes = t.iter().filter(|e| matches!(e, TileEvent::WriteC { .. })).count();
        assert_eq!((computes, writes), (4, 4));
    }

    #[test]
    fn large_grid_compute_count() {
        let t = TileAccessTrace::for_dims(2048, 2048, 2048, DataType::Int8);
        assert_eq!(t.k_tiles, 8);
        assert_eq!(t.output_blocks(), 128 * 128);
        assert_eq!(t.compute_events(), 131_072);
    }

    #[test]
    fn reads_and_write_once() {
        let t = TileAccessTrace::for_dims(50, 70, 300, DataType::Int8);
        let mut a_reads = HashMap::new();
        let mut b_reads = HashMap::new();
        let mut computes = HashMap::new();
        let mut writes = HashMap::new();
        let mut n = 0;
        for e in t.iter() {
            n += 1;
            match e {
                TileEvent::ReadA { i, k } => *a_reads.entry((i, k)).or_insert(0) += 1,
                TileEvent::ReadB { j, k } => *b_reads.entry((j, k)).or_insert(0) += 1,
                TileEvent::Compute { i, j, .. } => {
                    assert!(!writes.contains_key(&(i, j)), "compute after write-back");
                    *computes.entry((i, j)).or_insert(0) += 1;
                }
                TileEvent::WriteC { i, j } => {
                    assert_eq!(computes[&(i, j)], t.k_tiles);
                    assert!(writes.insert((i, j), ()).is_none());
                }
            }
        }
        assert_eq!(n, t.len());
        assert!(a_reads.values().all(|&c| c == t.n_tiles));
        assert!(b_reads.values().all(|&c| c == t.m_tiles));
        assert_eq!(writes.len(), t.output_blocks());
    }
}
