//! Page-aligned tile layouts.
//!
//! Every tile is one 4 KiB page. A-operand tiles hold a `W × L` row-major
//! block of `A`. B-operand tiles hold the `L × W` block of `B` rows that one
//! reduction step needs, stored row-of-B-major so the whole block is a single
//! contiguous page ("row-striped"). Ragged edges are zero padded.

use serde::{Deserialize, Serialize};

use super::matrix::{Elements, Matrix};
use crate::dtype::DataType;
use crate::error::{Error, Result};

pub const PAGE_BYTES: usize = 4096;
/// Systolic array width the tile layouts are built around.
pub const ARRAY_WIDTH: usize = 16;

pub type Tile = Box<[u8; PAGE_BYTES]>;

/// Shape of one page-sized tile for a given precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGeometry {
    /// Rows of an A tile; equals the array width `W`.
    pub rows: usize,
    /// Reduction length `L` held by one tile.
    pub cols: usize,
    pub bytes: usize,
}

pub fn tile_geometry(dtype: DataType) -> TileGeometry {
    TileGeometry {
        rows: ARRAY_WIDTH,
        cols: PAGE_BYTES / (ARRAY_WIDTH * dtype.element_size()),
        bytes: PAGE_BYTES,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    /// `W × L` blocks of the left operand, row-major inside the tile.
    ALayout,
    /// `L × W` blocks of the right operand, row-striped inside the tile.
    BLayout,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::ALayout => "A-layout",
            Layout::BLayout => "B-layout",
        }
    }
}

/// A matrix reorganized into a grid of page-aligned tiles.
#[derive(Debug, Clone, PartialEq)]
pub struct TiledMatrix {
    source_rows: usize,
    source_cols: usize,
    grid_rows: usize,
    grid_cols: usize,
    layout: Layout,
    dtype: DataType,
    tiles: Vec<Tile>,
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// `(tile rows, tile cols)` of a single tile in matrix coordinates.
fn tile_extent(layout: Layout, geo: TileGeometry) -> (usize, usize) {
    match layout {
        Layout::ALayout => (geo.rows, geo.cols),
        Layout::BLayout => (geo.cols, geo.rows),
    }
}

impl TiledMatrix {
    /// Assembles a tiled matrix from raw parts, validating the grid.
    pub fn from_parts(
        source_rows: usize,
        source_cols: usize,
        grid_rows: usize,
        grid_cols: usize,
        layout: Layout,
        dtype: DataType,
        tiles: Vec<Tile>,
    ) -> Result<TiledMatrix> {
        let t = TiledMatrix {
            source_rows,
            source_cols,
            grid_rows,
            grid_cols,
            layout,
            dtype,
            tiles,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        if self.source_rows == 0 || self.source_cols == 0 {
            return Err(Error::InvalidInput("zero-dimension tiled matrix".into()));
        }
        let (tr, tc) = tile_extent(self.layout, tile_geometry(self.dtype));
        let want = (ceil_div(self.source_rows, tr), ceil_div(self.source_cols, tc));
        if (self.grid_rows, self.grid_cols) != want {
            return Err(Error::InvalidInput(format!(
                "grid {}x{} does not cover {}x{} with {tr}x{tc} tiles (expected {}x{})",
                self.grid_rows, self.grid_cols, self.source_rows, self.source_cols, want.0, want.1
            )));
        }
        if self.tiles.len() != self.grid_rows * self.grid_cols {
            return Err(Error::InvalidInput(format!(
                "grid {}x{} needs {} tiles, found {}",
                self.grid_rows,
                self.grid_cols,
                self.grid_rows * self.grid_cols,
                self.tiles.len()
            )));
        }
        Ok(())
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.source_rows, self.source_cols)
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dtype(&self) -> DataType {
        self.dtype
    }

    pub fn geometry(&self) -> TileGeometry {
        tile_geometry(self.dtype)
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    /// Storage index of the tile at grid position `(gr, gc)`.
    ///
    /// A tiles are stored row-block-major; B tiles are stored
    /// column-block-major so a column strip of `B` is a run of pages.
    pub fn tile_index(&self, gr: usize, gc: usize) -> usize {
        match self.layout {
            Layout::ALayout => gr * self.grid_cols + gc,
            Layout::BLayout => gc * self.grid_rows + gr,
        }
    }

    /// Tile `(i, k)` of an A-layout matrix.
    pub fn a_tile(&self, i: usize, k: usize) -> &[u8; PAGE_BYTES] {
        &self.tiles[self.tile_index(i, k)]
    }

    /// Tile covering output column block `j` and reduction block `k` of a
    /// B-layout matrix.
    pub fn b_tile(&self, j: usize, k: usize) -> &[u8; PAGE_BYTES] {
        &self.tiles[self.tile_index(k, j)]
    }
}

fn pack(m: &Matrix, layout: Layout) -> Result<TiledMatrix> {
    if m.rows() == 0 || m.cols() == 0 {
        return Err(Error::InvalidInput(format!(
            "cannot tile a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let dtype = m.dtype();
    let s = dtype.element_size();
    let (tr, tc) = tile_extent(layout, tile_geometry(dtype));
    let grid_rows = ceil_div(m.rows(), tr);
    let grid_cols = ceil_div(m.cols(), tc);
    let mut tiles: Vec<Tile> = (0..grid_rows * grid_cols)
        .map(|_| Box::new([0u8; PAGE_BYTES]))
        .collect();
    let elements = m.elements();
    let mut out = TiledMatrix {
        source_rows: m.rows(),
        source_cols: m.cols(),
        grid_rows,
        grid_cols,
        layout,
        dtype,
        tiles: Vec::new(),
    };
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let tile = &mut tiles[out.tile_index(gr, gc)];
            let rows = tr.min(m.rows() - gr * tr);
            let cols = tc.min(m.cols() - gc * tc);
            for r in 0..rows {
                let src_row = (gr * tr + r) * m.cols() + gc * tc;
                for c in 0..cols {
                    let off = (r * tc + c) * s;
                    elements.write_le(src_row + c, &mut tile[off..off + s]);
                }
            }
        }
    }
    out.tiles = tiles;
    Ok(out)
}

/// Tiles the left operand of a GEMM.
pub fn pack_a(m: &Matrix) -> Result<TiledMatrix> {
    pack(m, Layout::ALayout)
}

/// Tiles the right operand of a GEMM in the row-striped layout.
pub fn pack_b(m: &Matrix) -> Result<TiledMatrix> {
    pack(m, Layout::BLayout)
}

/// Inverse of [`pack_a`] / [`pack_b`]; strips padding.
pub fn unpack(t: &TiledMatrix) -> Result<Matrix> {
    t.validate()?;
    let s = t.dtype.element_size();
    let (tr, tc) = tile_extent(t.layout, t.geometry());
    let (rows, cols) = (t.source_rows, t.source_cols);
    let mut bytes = vec![0u8; rows * cols * s];
    for gr in 0..t.grid_rows {
        for gc in 0..t.grid_cols {
            let tile = &t.tiles[t.tile_index(gr, gc)];
            let tile_rows = tr.min(rows - gr * tr);
            let tile_cols = tc.min(cols - gc * tc);
            for r in 0..tile_rows {
                let dst = ((gr * tr + r) * cols + gc * tc) * s;
                let src = r * tc * s;
                bytes[dst..dst + tile_cols * s].copy_from_slice(&tile[src..src + tile_cols * s]);
            }
        }
    }
    Matrix::from_elements(rows, cols, Elements::from_le_bytes(t.dtype, &bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_per_dtype() {
        let dims: Vec<_> = DataType::ALL
            .iter()
            .map(|&d| {
                let g = tile_geometry(d);
                assert_eq!(g.rows * g.cols * d.element_size(), PAGE_BYTES);
                (g.rows, g.cols)
            })
            .collect();
        assert_eq!(dims, [(16, 256), (16, 128), (16, 64), (16, 128), (16, 64)]);
    }

    #[test]
    fn exact_page_is_one_tile() {
        let m = Matrix::zeros(16, 256, DataType::Int8);
        let t = pack_a(&m).unwrap();
        assert_eq!(t.grid_dims(), (1, 1));
        assert_eq!(t.tiles().len(), 1);
    }

    #[test]
    fn ragged_rows_are_zero_padded() {
        let m = Matrix::new(17, 256, vec![1i8; 17 * 256]).unwrap();
        let t = pack_a(&m).unwrap();
        assert_eq!(t.grid_dims(), (2, 1));
        let second = t.a_tile(1, 0);
        assert!(second[..256].iter().all(|&b| b == 1));
        assert!(second[256..].iter().all(|&b| b == 0));
    }

    #[test]
    fn large_grid_counts() {
        let m = Matrix::zeros(2048, 2048, DataType::Int8);
        let a = pack_a(&m).unwrap();
        assert_eq!(a.grid_dims(), (128, 8));
        assert_eq!(a.tiles().len(), 1024);
        let b = pack_b(&m).unwrap();
        assert_eq!(b.grid_dims(), (8, 128));
        assert_eq!(b.tiles().len(), 1024);
    }

    #[test]
    fn b_tile_is_row_striped() {
        // B[r][c] = r * 16 + c over a 256x16 int16 B: tile (j=0,k=1) holds rows 128..256.
        let vals: Vec<i16> = (0..256 * 16).map(|v| v as i16).collect();
        let t = pack_b(&Matrix::new(256, 16, vals).unwrap()).unwrap();
        assert_eq!(t.grid_dims(), (2, 1));
        let tile = t.b_tile(0, 1);
        let first = i16::from_le_bytes([tile[0], tile[1]]);
        let next_row = i16::from_le_bytes([tile[32], tile[33]]);
        assert_eq!(first, 128 * 16);
        assert_eq!(next_row, 129 * 16);
    }

    #[test]
    fn identity_fp32_b_round_trips() {
        let m = Matrix::identity(64, DataType::Fp32);
        let t = pack_b(&m).unwrap();
        assert_eq!(t.grid_dims(), (1, 4));
        assert_eq!(unpack(&t).unwrap(), m);
    }

    #[test]
    fn zero_dims_rejected() {
        let m = Matrix::zeros(0, 5, DataType::Int8);
        assert!(matches!(pack_a(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn corrupted_grid_rejected() {
        let t = pack_a(&Matrix::zeros(40, 40, DataType::Int8)).unwrap();
        let bad = TiledMatrix {
            grid_rows: 2,
            ..t.clone()
        };
        assert!(matches!(unpack(&bad), Err(Error::InvalidInput(_))));
        let mut short = t;
        short.tiles.pop();
        assert!(unpack(&short).is_err());
    }
}
