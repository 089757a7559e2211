//! Dense matrices over a [`Field`] with exact Gaussian elimination.
//!
//! Pivoting always takes the first nonzero entry in column order, and
//! particular solutions set every free variable to zero, so results are
//! reproducible bit for bit.

use std::fmt;

use thiserror::Error;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::field::{Field, FieldElement};
use crate::modular::{self, IntMatrix};

/// Entry count from which rational systems are solved modulo primes.
const MODULAR_MIN_ENTRIES: usize = 400;

pub type Vector = Vec<FieldElement>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinearError {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
}

/// Output of [`Matrix::rank_nullspace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankNullspace {
    pub rank: usize,
    pub nullspace: Vec<Vector>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Debug, Clone)]
struct Echelon {
    rows: Vec<Vec<FieldElement>>,
    pivots: Vec<usize>,
}

/// Reduces `rows` in place; only the first `ncols` columns are used for pivots.
fn reduce(mut rows: Vec<Vec<FieldElement>>, ncols: usize) -> Echelon {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..ncols {
        if next == rows.len() {
            break;
        }
        let Some(found) = (next..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(next, found);
        let inv = rows[next][col].inv().expect("pivot is nonzero");
        if !inv.is_one() {
            for x in rows[next][col..].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let support: Vec<usize> = (col..rows[next].len())
            .filter(|&c| !rows[next][c].is_zero())
            .collect();
        let pivot_row = rows[next].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for &c in &support {
                let delta = &factor * &pivot_row[c];
                row[c] -= &delta;
            }
        }
        pivots.push(col);
        next += 1;
    }
    Echelon { rows, pivots }
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Builds a matrix from explicit rows; all rows must have length `cols`.
    pub fn from_rows(field: Field, cols: usize, rows: Vec<Vec<FieldElement>>) -> Result<Self, LinearError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(LinearError::DimensionMismatch {
                    expected: cols,
                    actual: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Matrix {
            field,
            rows: nrows,
            cols,
            entries,
        })
    }

    /// Convenience constructor from small integers.
    pub fn from_i64(field: Field, rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&x| field.from_i64(x)).collect())
            .collect();
        Self::from_rows(field, cols, rows).expect("ragged integer matrix")
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &FieldElement {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: FieldElement) {
        self.entries[r * self.cols + c] = value;
    }

    /// Adds `value` to entry `(r, c)`.
    pub fn add_to(&mut self, r: usize, c: usize, value: &FieldElement) {
        if !value.is_zero() {
            self.entries[r * self.cols + c] += value;
        }
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(FieldElement::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinearError> {
        if self.cols != other.rows {
            return Err(LinearError::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.field, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        out.entries[r * other.cols + c] += &(a * b);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[FieldElement]) -> Result<Vector, LinearError> {
        if v.len() != self.cols {
            return Err(LinearError::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        let mut out = vec![self.field.zero(); self.rows];
        for (r, slot) in out.iter_mut().enumerate() {
            for (a, x) in self.row(r).iter().zip(v) {
                if !a.is_zero() && !x.is_zero() {
                    *slot += &(a * x);
                }
            }
        }
        Ok(out)
    }

    fn row_vecs(&self) -> Vec<Vec<FieldElement>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Rational matrices this large go through [`crate::modular`].
    fn prefers_modular(&self) -> bool {
        self.field == Field::Rationals && self.rows * self.cols >= MODULAR_MIN_ENTRIES
    }

    /// Rows as rationals, with `extra` appended as a last column.
    fn int_rows(&self, extra: Option<&[FieldElement]>) -> (IntMatrix, Vec<BigInt>) {
        let rows: Vec<Vec<&BigRational>> = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .chain(extra.map(|b| &b[r]))
                    .map(|x| x.as_rational().expect("rational matrix"))
                    .collect()
            })
            .collect();
        IntMatrix::from_rational_rows(&rows, self.cols + usize::from(extra.is_some()))
    }

    pub fn rank(&self) -> usize {
        if self.prefers_modular() {
            return self.rank_nullspace().rank;
        }
        reduce(self.row_vecs(), self.cols).pivots.len()
    }

    /// Exact rank and a basis of the right nullspace, one vector per free column.
    pub fn rank_nullspace(&self) -> RankNullspace {
        self.rank_nullspace_via(self.prefers_modular())
    }

    fn rank_nullspace_via(&self, modular: bool) -> RankNullspace {
        if modular {
            let k = modular::kernel(&self.int_rows(None).0);
            return RankNullspace {
                rank: k.pivots.len(),
                nullspace: k
                    .basis
                    .into_iter()
                    .map(|v| v.into_iter().map(FieldElement::Rational).collect())
                    .collect(),
            };
        }
        let ech = reduce(self.row_vecs(), self.cols);
        let rank = ech.pivots.len();
        let mut is_pivot = vec![false; self.cols];
        for &p in &ech.pivots {
            is_pivot[p] = true;
        }
        let nullspace = (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![self.field.zero(); self.cols];
                v[free] = self.field.one();
                for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                    v[p] = -&row[free];
                }
                v
            })
            .collect();
        RankNullspace { rank, nullspace }
    }

    /// Some `x` with `self * x = b`, or `None` when the system is inconsistent.
    ///
    /// Free variables are set to zero, so the answer is deterministic.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Option<Vector>, LinearError> {
        self.solve_via(b, self.prefers_modular())
    }

    fn solve_via(&self, b: &[FieldElement], modular: bool) -> Result<Option<Vector>, LinearError> {
        if b.len() != self.rows {
            return Err(LinearError::DimensionMismatch {
                expected: self.rows,
                actual: b.len(),
            });
        }
        if modular {
            let (mut a, _) = self.int_rows(Some(b));
            let rhs = a.split_last_column();
            let x = modular::solve(&a, &rhs);
            return Ok(x.map(|v| v.into_iter().map(FieldElement::Rational).collect()));
        }
        let augmented = (0..self.rows)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.push(b[r].clone());
                row
            })
            .collect();
        let ech = reduce(augmented, self.cols);
        let rank = ech.pivots.len();
        if ech.rows[rank..].iter().any(|row| !row[self.cols].is_zero()) {
            return Ok(None);
        }
        let mut x = vec![self.field.zero(); self.cols];
        for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
            x[p] = row[self.cols].clone();
        }
        Ok(Some(x))
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let augmented = (0..n)
            .map(|r| {
                let mut row = self.row(r).to_vec();
                row.extend((0..n).map(|c| if c == r { self.field.one() } else { self.field.zero() }));
                row
            })
            .collect();
        let ech = reduce(augmented, n);
        if ech.pivots.len() < n {
            return None;
        }
        let rows = ech.rows.into_iter().map(|row| row[n..].to_vec()).collect();
        Some(Matrix::from_rows(self.field, n, rows).expect("square"))
    }

    /// A covector `y` with `y * self = 0` and `y . b != 0`, certifying that
    /// `self * x = b` has no solution. `None` when the system is consistent.
    pub fn inconsistency_witness(&self, b: &[FieldElement]) -> Result<Option<Vector>, LinearError> {
        if b.len() != self.rows {
            return Err(LinearError::DimensionMismatch {
                expected: self.rows,
                actual: b.len(),
            });
        }
        let left = self.transpose().rank_nullspace().nullspace;
        Ok(left.into_iter().find(|y| !dot(y, b).is_zero()))
    }
}

/// Inner product of two equal-length vectors over a shared field.
pub fn dot(a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
    assert_eq!(a.len(), b.len(), "dot of unequal lengths");
    let mut acc = match a.first() {
        Some(x) => x.field().zero(),
        None => return Field::Rationals.zero(),
    };
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += &(x * y);
        }
    }
    acc
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: Field = Field::Rationals;

    fn ints(field: Field, xs: &[i64]) -> Vector {
        xs.iter().map(|&x| field.from_i64(x)).collect()
    }

    #[test]
    fn identity_has_full_rank() {
        let rn = Matrix::identity(Q, 2).rank_nullspace();
        assert_eq!(rn.rank, 2);
        assert!(rn.nullspace.is_empty());
    }

    #[test]
    fn zero_matrix_over_f5() {
        let f5 = Field::Prime(5);
        let rn = Matrix::zeros(f5, 2, 2).rank_nullspace();
        assert_eq!(rn.rank, 0);
        assert_eq!(rn.nullspace.len(), 2);
    }

    #[test]
    fn rank_one_nullspace() {
        let m = Matrix::from_i64(Q, &[&[1, 2], &[2, 4]]);
        let rn = m.rank_nullspace();
        assert_eq!(rn.rank, 1);
        assert_eq!(rn.nullspace, vec![ints(Q, &[-2, 1])]);
    }

    #[test]
    fn empty_matrix() {
        let m = Matrix::zeros(Q, 0, 3);
        let rn = m.rank_nullspace();
        assert_eq!(rn.rank, 0);
        assert_eq!(rn.nullspace.len(), 3);
        assert_eq!(Matrix::zeros(Q, 0, 0).rank(), 0);
        assert_eq!(Matrix::zeros(Q, 0, 2).solve(&[]).unwrap(), Some(ints(Q, &[0, 0])));
    }

    #[test]
    fn solve_examples() {
        let id = Matrix::identity(Q, 2);
        assert_eq!(id.solve(&ints(Q, &[3, 4])).unwrap(), Some(ints(Q, &[3, 4])));

        let zero = Matrix::zeros(Q, 2, 2);
        assert_eq!(zero.solve(&ints(Q, &[1, 0])).unwrap(), None);

        let m = Matrix::from_i64(Q, &[&[1, 1], &[0, 0]]);
        assert_eq!(m.solve(&ints(Q, &[5, 0])).unwrap(), Some(ints(Q, &[5, 0])));
    }

    #[test]
    fn solve_reports_dimension_mismatch() {
        let id = Matrix::identity(Q, 2);
        assert_eq!(
            id.solve(&ints(Q, &[1])),
            Err(LinearError::DimensionMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn inverse_of_small_matrices() {
        let m = Matrix::from_i64(Q, &[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(Q, 2));
        assert_eq!(Matrix::from_i64(Q, &[&[1, 2], &[2, 4]]).inverse(), None);
        assert_eq!(Matrix::identity(Q, 0).inverse(), Some(Matrix::identity(Q, 0)));
    }

    #[test]
    fn witness_separates_inconsistent_rhs() {
        let m = Matrix::from_i64(Q, &[&[1, 1], &[2, 2]]);
        let b = ints(Q, &[1, 3]);
        assert_eq!(m.solve(&b).unwrap(), None);
        let y = m.inconsistency_witness(&b).unwrap().unwrap();
        assert!(m.transpose().apply(&y).unwrap().iter().all(FieldElement::is_zero));
        assert!(!dot(&y, &b).is_zero());
        assert_eq!(m.inconsistency_witness(&ints(Q, &[1, 2])).unwrap(), None);
    }

    fn small_matrix(p: u64) -> impl Strategy<Value = (Matrix, Vector)> {
        (1usize..6, 1usize..6).prop_flat_map(move |(r, c)| {
            (
                proptest::collection::vec(-3i64..4, r * c),
                proptest::collection::vec(-3i64..4, r),
                Just((r, c)),
            )
                .prop_map(move |(xs, bs, (_, c))| {
                    let field = if p == 0 { Q } else { Field::Prime(p) };
                    let rows = xs.chunks(c).map(|ch| ints(field, ch)).collect();
                    (Matrix::from_rows(field, c, rows).unwrap(), ints(field, &bs))
                })
        })
    }

    proptest! {
        #[test]
        fn nullspace_vectors_are_killed((m, _) in small_matrix(0)) {
            let rn = m.rank_nullspace();
            prop_assert_eq!(rn.rank + rn.nullspace.len(), m.cols());
            prop_assert!(rn.rank <= m.rows().min(m.cols()));
            for v in &rn.nullspace {
                prop_assert!(m.apply(v).unwrap().iter().all(FieldElement::is_zero));
            }
        }

        #[test]
        fn solutions_are_exact((m, b) in small_matrix(7)) {
            match m.solve(&b).unwrap() {
                Some(x) => prop_assert_eq!(m.apply(&x).unwrap(), b),
                None => prop_assert!(m.inconsistency_witness(&b).unwrap().is_some()),
            }
        }

        #[test]
        fn rank_ignores_row_order((m, _) in small_matrix(0), seed in 0u64..1000) {
            let mut rows: Vec<Vec<FieldElement>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
            // deterministic shuffle
            let n = rows.len();
            for i in (1..n).rev() {
                let j = ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64)) >> 7) as usize % (i + 1);
                rows.swap(i, j);
            }
            let shuffled = Matrix::from_rows(m.field(), m.cols(), rows).unwrap();
            prop_assert_eq!(shuffled.rank(), m.rank());
        }
    
        #[test]
        fn modular_path_agrees_with_direct(
            (m, b) in small_matrix(0),
            den in proptest::collection::vec(1i64..5, 36),
        ) {
            // rescale entries so that fractions appear
            let rows = (0..m.rows())
                .map(|r| {
                    (0..m.cols())
                        .map(|c| m.get(r, c).div(&Q.from_i64(den[(r * m.cols() + c) % den.len()])))
                        .collect()
                })
                .collect();
            let m = Matrix::from_rows(Q, m.cols(), rows).unwrap();
            let direct = m.rank_nullspace_via(false);
            let modular = m.rank_nullspace_via(true);
            prop_assert_eq!(direct.rank, modular.rank);
            for v in &modular.nullspace {
                prop_assert!(m.apply(v).unwrap().iter().all(FieldElement::is_zero));
            }
            let x = m.solve_via(&b, true).unwrap();
            prop_assert_eq!(x.is_some(), m.solve_via(&b, false).unwrap().is_some());
            if let Some(x) = x {
                prop_assert_eq!(m.apply(&x).unwrap(), b);
            }
        }
    }
}
