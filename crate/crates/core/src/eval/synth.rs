//! Block-structured synthetic matrices with known cluster labels.

use crate::error::{Error, Result};
use crate::matrix::RelationMatrix;
use crate::registry::{Registry, TypeId};

/// Four ground-truth clusters of five consecutive entities each.
pub const CLUSTER_NAMES: [&str; 4] = ["R", "G", "B", "K"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    pub blocks: Vec<Block>,
}

impl BlockSpec {
    /// Dense cells in row-major order. Blocks must lie inside the shape, be
    /// nonempty with a positive finite value, and not overlap.
    pub fn cells(&self) -> Result<Vec<(usize, usize, f64)>> {
        let mut filled = vec![false; self.n_rows * self.n_cols];
        for b in &self.blocks {
            if b.height == 0 || b.width == 0 || b.row + b.height > self.n_rows || b.col + b.width > self.n_cols {
                return Err(Error::InvalidArgument(format!("block {b:?} outside {}x{}", self.n_rows, self.n_cols)));
            }
            if !(b.value.is_finite() && b.value > 0.0) {
                return Err(Error::InvalidArgument(format!("block value {} must be positive", b.value)));
            }
            for r in b.row..b.row + b.height {
                for c in b.col..b.col + b.width {
                    let slot = &mut filled[r * self.n_cols + c];
                    if *slot {
                        return Err(Error::InvalidArgument(format!("blocks overlap at ({r}, {c})")));
                    }
                    *slot = true;
                }
            }
        }
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for b in &self.blocks {
            for r in b.row..b.row + b.height {
                for c in b.col..b.col + b.width {
                    cells.push((r, c, b.value));
                }
            }
        }
        cells.sort_by_key(|&(r, c, _)| (r, c));
        Ok(cells)
    }

    /// Registers entities `0..n` of both types (names are indices) and builds
    /// the matrix.
    pub fn build(&self, registry: &mut Registry, row_type: &str, col_type: &str) -> Result<RelationMatrix> {
        let cells = self.cells()?;
        let rt = register_range(registry, row_type, self.n_rows)?;
        let ct = register_range(registry, col_type, self.n_cols)?;
        RelationMatrix::build(registry, rt, ct, cells)
    }
}

fn register_range(registry: &mut Registry, type_name: &str, n: usize) -> Result<TypeId> {
    let t = registry.ensure_type_by_convention(type_name)?;
    for i in 0..n {
        registry.register(t, &i.to_string())?;
    }
    Ok(t)
}

fn square(row: usize, col: usize, side: usize, value: f64) -> Block {
    Block { row, col, height: side, width: side, value }
}

/// 20x20 with four 5x5 all-ones diagonal blocks.
pub fn four_block() -> BlockSpec {
    BlockSpec { n_rows: 20, n_cols: 20, blocks: (0..4).map(|i| square(5 * i, 5 * i, 5, 1.0)).collect() }
}

/// 20x20 with two 10x10 all-ones diagonal blocks, joining R with G and B with K.
pub fn two_block_ab() -> BlockSpec {
    BlockSpec { n_rows: 20, n_cols: 20, blocks: vec![square(0, 0, 10, 1.0), square(10, 10, 10, 1.0)] }
}

/// 20x20 of 0.1 on a central 10x10 block and the four 5x5 corners, joining G
/// with B and R with K.
pub fn center_corner_ac() -> BlockSpec {
    let blocks = vec![
        square(5, 5, 10, 0.1),
        square(0, 0, 5, 0.1),
        square(0, 15, 5, 0.1),
        square(15, 0, 5, 0.1),
        square(15, 15, 5, 0.1),
    ];
    BlockSpec { n_rows: 20, n_cols: 20, blocks }
}

/// Index into [`CLUSTER_NAMES`] for each of the 20 entities.
pub fn four_cluster_labels() -> Vec<usize> {
    (0..20).map(|i| i / 5).collect()
}

/// The {R,G} / {B,K} merge produced by the A x B blocks alone.
pub fn rg_bk_labels() -> Vec<usize> {
    (0..20).map(|i| i / 10).collect()
}

/// The {G,B} / {R,K} merge produced by the A x C blocks alone.
pub fn gb_rk_labels() -> Vec<usize> {
    (0..20).map(|i| usize::from((5..15).contains(&i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_block_mass_and_rows() {
        let mut reg = Registry::new();
        let m = four_block().build(&mut reg, "A", "B").unwrap();
        assert_eq!(m.total_mass(), 100.0);
        assert!(m.row_sums().iter().all(|&s| s == 5.0));
        assert!(m.col_sums().iter().all(|&s| s == 5.0));
    }

    #[test]
    fn center_corner_ac_cells() {
        let cells = center_corner_ac().cells().unwrap();
        assert_eq!(cells.len(), 200);
        assert!(cells.iter().all(|c| c.2 == 0.1));
        let mass: f64 = cells.iter().map(|c| c.2).sum();
        assert!((mass - 20.0).abs() < 1e-12);
    }

    #[test]
    fn two_block_ab_cells() {
        let cells = two_block_ab().cells().unwrap();
        assert_eq!(cells.len(), 200);
        assert!(cells.iter().all(|&(r, c, _)| r / 10 == c / 10));
    }

    #[test]
    fn labels() {
        let l = four_cluster_labels();
        assert_eq!(CLUSTER_NAMES[l[0]], "R");
        assert_eq!(CLUSTER_NAMES[l[7]], "G");
        assert_eq!(CLUSTER_NAMES[l[12]], "B");
        assert_eq!(CLUSTER_NAMES[l[19]], "K");
        assert_eq!(gb_rk_labels()[0], gb_rk_labels()[19]);
        assert_eq!(gb_rk_labels()[5], gb_rk_labels()[14]);
        assert_ne!(gb_rk_labels()[0], gb_rk_labels()[5]);
    }

    #[test]
    fn inconsistent_specs() {
        let outside = BlockSpec { n_rows: 4, n_cols: 4, blocks: vec![square(2, 2, 3, 1.0)] };
        assert!(outside.cells().is_err());
        let overlap = BlockSpec { n_rows: 4, n_cols: 4, blocks: vec![square(0, 0, 2, 1.0), square(1, 1, 2, 1.0)] };
        assert!(overlap.cells().is_err());
        let zero = BlockSpec { n_rows: 4, n_cols: 4, blocks: vec![square(0, 0, 2, 0.0)] };
        assert!(zero.cells().is_err());
    }
}
