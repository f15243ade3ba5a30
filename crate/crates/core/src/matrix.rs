//! Sparse nonnegative entity-relation matrices.

use crate::error::{Error, Result};
use crate::registry::{EntityId, Registry, TypeId};

/// One stored (nonzero) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub row: EntityId,
    pub col: EntityId,
    pub weight: f64,
}

/// Affinity between the entities of a row type and a column type.
///
/// Cells are sorted by `(row, col)`, strictly positive, and unique. The matrix
/// is immutable once built; `alpha` is the only field callers may retune.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix {
    row_type: TypeId,
    col_type: TypeId,
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Cell>,
    total_mass: f64,
    alpha: f64,
}

impl RelationMatrix {
    /// Builds a matrix from raw triplets. Zero weights are dropped and repeated
    /// cells are summed. Shape is taken from the registry's current type sizes.
    pub fn build<I>(registry: &Registry, row_type: TypeId, col_type: TypeId, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (EntityId, EntityId, f64)>,
    {
        let n_rows = registry.get(row_type).len();
        let n_cols = registry.get(col_type).len();
        let mut raw = Vec::new();
        for (row, col, weight) in triplets {
            if row >= n_rows {
                return Err(Error::IdOutOfRange {
                    type_name: registry.get(row_type).name.clone(),
                    id: row,
                    len: n_rows,
                });
            }
            if col >= n_cols {
                return Err(Error::IdOutOfRange {
                    type_name: registry.get(col_type).name.clone(),
                    id: col,
                    len: n_cols,
                });
            }
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight { row, col });
            }
            if weight < 0.0 {
                return Err(Error::NegativeWeight { row, col, weight });
            }
            if weight > 0.0 {
                raw.push(Cell { row, col, weight });
            }
        }
        raw.sort_by_key(|c| (c.row, c.col));
        let mut cells: Vec<Cell> = Vec::with_capacity(raw.len());
        for c in raw {
            match cells.last_mut() {
                Some(last) if last.row == c.row && last.col == c.col => last.weight += c.weight,
                _ => cells.push(c),
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let total_mass = cells.iter().map(|c| c.weight).sum();
        Ok(Self { row_type, col_type, n_rows, n_cols, cells, total_mass, alpha: 1.0 })
    }

    /// New matrix over the same types and shape with each weight replaced by
    /// `f(cell)`. Cells mapped to zero are dropped.
    pub fn map_weights(&self, mut f: impl FnMut(&Cell) -> f64) -> Result<Self> {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let weight = f(c);
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight { row: c.row, col: c.col });
            }
            if weight < 0.0 {
                return Err(Error::NegativeWeight { row: c.row, col: c.col, weight });
            }
            if weight > 0.0 {
                cells.push(Cell { weight, ..*c });
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let total_mass = cells.iter().map(|c| c.weight).sum();
        Ok(Self { cells, total_mass, ..self.clone() })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.set_alpha(alpha)?;
        Ok(self)
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
        }
        self.alpha = alpha;
        Ok(())
    }

    pub fn row_type(&self) -> TypeId {
        self.row_type
    }

    pub fn col_type(&self) -> TypeId {
        self.col_type
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn nnz(&self) -> usize {
        self.cells.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn get(&self, row: EntityId, col: EntityId) -> f64 {
        self.cells.binary_search_by_key(&(row, col), |c| (c.row, c.col)).map(|i| self.cells[i].weight).unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_rows];
        for c in &self.cells {
            sums[c.row] += c.weight;
        }
        sums
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for c in &self.cells {
            sums[c.col] += c.weight;
        }
        sums
    }
}

/// Ordered set of matrices over one registry. Training visits them in this order.
#[derive(Debug, Clone, Default)]
pub struct MatrixSet {
    matrices: Vec<RelationMatrix>,
}

impl MatrixSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: RelationMatrix) {
        self.matrices.push(m);
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RelationMatrix> {
        self.matrices.iter()
    }

    pub fn get(&self, i: usize) -> &RelationMatrix {
        &self.matrices[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut RelationMatrix {
        &mut self.matrices[i]
    }

    /// Checks that every matrix refers to registered types and in-range ids.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        for m in &self.matrices {
            for t in [m.row_type, m.col_type] {
                if t.0 >= registry.n_types() {
                    return Err(Error::UnknownType(format!("#{}", t.0)));
                }
            }
            if m.n_rows > registry.get(m.row_type).len() || m.n_cols > registry.get(m.col_type).len() {
                return Err(Error::InvalidArgument("matrix shape exceeds registered entity counts".into()));
            }
        }
        Ok(())
    }
}

impl FromIterator<RelationMatrix> for MatrixSet {
    fn from_iter<T: IntoIterator<Item = RelationMatrix>>(iter: T) -> Self {
        Self { matrices: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a MatrixSet {
    type Item = &'a RelationMatrix;
    type IntoIter = std::slice::Iter<'a, RelationMatrix>;

    fn into_iter(self) -> Self::IntoIter {
        self.matrices.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(n: usize) -> (Registry, TypeId, TypeId) {
        let mut r = Registry::new();
        let a = r.add_type("A").unwrap();
        let b = r.add_type("B").unwrap();
        for i in 0..n {
            r.register(a, &format!("a{i}")).unwrap();
            r.register(b, &format!("b{i}")).unwrap();
        }
        (r, a, b)
    }

    #[test]
    fn duplicates_are_summed() {
        let (r, a, b) = reg(2);
        let m = RelationMatrix::build(&r, a, b, [(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(m.cells(), &[Cell { row: 0, col: 0, weight: 2.0 }]);
        assert_eq!(m.total_mass(), 2.0);
    }

    #[test]
    fn zeros_are_dropped() {
        let (r, a, b) = reg(2);
        let m = RelationMatrix::build(&r, a, b, [(0, 1, 0.5), (1, 0, 0.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), 0.5);
        assert_eq!(m.total_mass(), 0.5);
    }

    #[test]
    fn negative_weight_names_the_cell() {
        let (r, a, b) = reg(1);
        let err = RelationMatrix::build(&r, a, b, [(0, 0, -1.0)]).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { row: 0, col: 0, .. }));
    }

    #[test]
    fn all_zero_is_rejected() {
        let (r, a, b) = reg(1);
        let err = RelationMatrix::build(&r, a, b, [(0, 0, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::EmptyMatrix));
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let (r, a, b) = reg(1);
        assert!(RelationMatrix::build(&r, a, b, [(1, 0, 1.0)]).is_err());
        assert!(RelationMatrix::build(&r, a, b, [(0, 3, 1.0)]).is_err());
    }

    #[test]
    fn single_cell_mass() {
        let (r, a, b) = reg(1);
        let m = RelationMatrix::build(&r, a, b, [(0, 0, 3.5)]).unwrap();
        assert_eq!(m.total_mass(), 3.5);
    }

    #[test]
    fn four_blocks_of_ones() {
        let (r, a, b) = reg(20);
        let trip =
            (0..4).flat_map(|blk| (0..5).flat_map(move |i| (0..5).map(move |j| (blk * 5 + i, blk * 5 + j, 1.0))));
        let m = RelationMatrix::build(&r, a, b, trip).unwrap();
        assert_eq!(m.total_mass(), 100.0);
    }

    #[test]
    fn alpha_is_bounded() {
        let (r, a, b) = reg(1);
        let m = RelationMatrix::build(&r, a, b, [(0, 0, 1.0)]).unwrap();
        assert!(m.clone().with_alpha(1.5).is_err());
        assert_eq!(m.with_alpha(0.25).unwrap().alpha(), 0.25);
    }
}
