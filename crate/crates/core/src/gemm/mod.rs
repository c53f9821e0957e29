//! Bit-exact blocked GEMM over page-aligned tiles.

mod fixture;
mod matrix;
mod multiply;
mod tiling;
mod trace;

pub use fixture::{decode_fixture, read_fixture, write_fixture, FixtureLayout};
pub use matrix::{Element, Elements, Matrix};
pub use multiply::{
    block_matrix_multiply, decode_tile, max_ulp_error, multi_acc, naive_gemm, ulp_distance,
    Accumulator,
};
pub use tiling::{
    pack_a, pack_b, tile_geometry, unpack, Layout, Tile, TileGeometry, TiledMatrix, ARRAY_WIDTH,
    PAGE_BYTES,
};
pub use trace::{trace_tile_accesses, TileAccessTrace, TileEvent};
