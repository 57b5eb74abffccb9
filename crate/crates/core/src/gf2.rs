//! Sparse binary matrices and the little GF(2) linear algebra the code needs:
//! rank, syndromes, and solving for unknown bits when the rest are known.
//!
//! Bit vectors are `u8` slices holding 0 or 1.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Row-major sparse binary matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinMatrix {
    rows: usize,
    cols: usize,
    row_support: Vec<Vec<usize>>,
}

impl SparseBinMatrix {
    /// Builds a matrix from per-row column lists. Each list is sorted and
    /// checked for duplicates and range.
    pub fn new(rows: usize, cols: usize, mut row_support: Vec<Vec<usize>>) -> Result<Self> {
        if row_support.len() != rows {
            return Err(Error::InvalidMatrix(format!(
                "{} row lists given for {rows} rows",
                row_support.len()
            )));
        }
        for (r, support) in row_support.iter_mut().enumerate() {
            support.sort_unstable();
            if support.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMatrix(format!("duplicate entry in row {r}")));
            }
            if support.last().is_some_and(|&c| c >= cols) {
                return Err(Error::InvalidMatrix(format!("column out of range in row {r}")));
            }
        }
        Ok(Self { rows, cols, row_support })
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, row_support: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_support: vec![Vec::new(); rows] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.row_support[r]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.row_support
    }

    pub fn nnz(&self) -> usize {
        self.row_support.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row_support[r].binary_search(&c).is_ok()
    }

    /// Per-column lists of the rows holding a 1.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.cols];
        for (r, support) in self.row_support.iter().enumerate() {
            for &c in support {
                cols[c].push(r);
            }
        }
        cols
    }

    /// The first `n` rows.
    pub fn top_rows(&self, n: usize) -> Self {
        let n = n.min(self.rows);
        Self { rows: n, cols: self.cols, row_support: self.row_support[..n].to_vec() }
    }

    /// GF(2) rank by Gaussian elimination on a packed dense copy.
    pub fn rank(&self) -> usize {
        let mut dense = DenseRows::from_sparse(self);
        dense.eliminate(None)
    }

    /// Computes `self * word` over GF(2).
    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        assert_eq!(word.len(), self.cols, "word length must equal column count");
        self.row_support
            .iter()
            .map(|support| support.iter().fold(0u8, |acc, &c| acc ^ (word[c] & 1)))
            .collect()
    }

    /// Solves `self * x = rhs` for the entries of `x` that are `None` in
    /// `knowns`, returning the full completed vector.
    ///
    /// Rows with no unknowns whose known bits do not match `rhs` give
    /// [`Error::Inconsistent`]; an underdetermined system gives
    /// [`Error::InsufficientRank`].
    pub fn solve_noiseless(&self, rhs: &[u8], knowns: &[Option<u8>]) -> Result<Vec<u8>> {
        assert_eq!(rhs.len(), self.rows, "rhs length must equal row count");
        assert_eq!(knowns.len(), self.cols, "knowns length must equal column count");

        let unknown_cols: Vec<usize> = (0..self.cols).filter(|&c| knowns[c].is_none()).collect();
        let mut slot = vec![usize::MAX; self.cols];
        for (j, &c) in unknown_cols.iter().enumerate() {
            slot[c] = j;
        }

        // move the known columns to the right-hand side
        let mut reduced_rhs = Vec::with_capacity(self.rows);
        for (r, support) in self.row_support.iter().enumerate() {
            let mut bit = rhs[r] & 1;
            let mut free = false;
            for &c in support {
                match knowns[c] {
                    Some(v) => bit ^= v & 1,
                    None => free = true,
                }
            }
            if !free && bit != 0 {
                return Err(Error::Inconsistent { row: r });
            }
            reduced_rhs.push(bit);
        }

        let n = unknown_cols.len();
        let mut dense = DenseRows::with_width(n + 1);
        for (r, support) in self.row_support.iter().enumerate() {
            let mut row = dense.blank();
            for &c in support {
                if knowns[c].is_none() {
                    set_bit(&mut row, slot[c]);
                }
            }
            if reduced_rhs[r] != 0 {
                set_bit(&mut row, n);
            }
            dense.push(row);
        }
        let rank = dense.eliminate(Some(n));
        if let Some(row) = dense.inconsistent_row(n) {
            return Err(Error::Inconsistent { row });
        }
        if rank < n {
            return Err(Error::InsufficientRank { rank, unknowns: n });
        }

        let mut out: Vec<u8> = knowns.iter().map(|k| k.unwrap_or(0) & 1).collect();
        for (pivot_col, row) in dense.pivots() {
            out[unknown_cols[pivot_col]] = get_bit(row, n) as u8;
        }
        Ok(out)
    }

    /// Text dump: one `row: c1 c2 ...` line per row (0-based indices).
    pub fn dump_rows(&self) -> String {
        let mut s = String::new();
        for (r, support) in self.row_support.iter().enumerate() {
            let _ = write!(s, "{r}:");
            for c in support {
                let _ = write!(s, " {c}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses the `row: c1 c2 ...` lines written by [`Self::dump_rows`].
    pub fn parse_rows(text: &str, cols: usize) -> Result<Self> {
        let mut supports = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {}: missing ':'", lineno + 1)))?;
            let r: usize = head
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad row index", lineno + 1)))?;
            if r != supports.len() {
                return Err(Error::Parse(format!("line {}: rows out of order", lineno + 1)));
            }
            let support = tail
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("line {}: bad column index", lineno + 1)))?;
            supports.push(support);
        }
        Self::new(supports.len(), cols, supports)
    }
}

fn set_bit(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

fn get_bit(row: &[u64], i: usize) -> bool {
    (row[i / 64] >> (i % 64)) & 1 == 1
}

/// Dense packed rows used as an elimination scratch space.
struct DenseRows {
    words: usize,
    width: usize,
    rows: Vec<Vec<u64>>,
    pivots: Vec<(usize, usize)>,
}

impl DenseRows {
    fn with_width(width: usize) -> Self {
        Self { words: width.div_ceil(64).max(1), width, rows: Vec::new(), pivots: Vec::new() }
    }

    fn from_sparse(m: &SparseBinMatrix) -> Self {
        let mut d = Self::with_width(m.cols);
        for support in &m.row_support {
            let mut row = d.blank();
            for &c in support {
                set_bit(&mut row, c);
            }
            d.push(row);
        }
        d
    }

    fn blank(&self) -> Vec<u64> {
        vec![0; self.words]
    }

    fn push(&mut self, row: Vec<u64>) {
        self.rows.push(row);
    }

    /// Reduced row echelon form over the first `limit` columns (all columns
    /// when `None`). Returns the rank.
    fn eliminate(&mut self, limit: Option<usize>) -> usize {
        let limit = limit.unwrap_or(self.width);
        let mut rank = 0;
        self.pivots.clear();
        for col in 0..limit {
            let Some(p) = (rank..self.rows.len()).find(|&r| get_bit(&self.rows[r], col)) else {
                continue;
            };
            self.rows.swap(rank, p);
            let pivot = self.rows[rank].clone();
            for r in 0..self.rows.len() {
                if r != rank && get_bit(&self.rows[r], col) {
                    for (w, pw) in self.rows[r].iter_mut().zip(&pivot) {
                        *w ^= pw;
                    }
                }
            }
            self.pivots.push((col, rank));
            rank += 1;
        }
        rank
    }

    fn inconsistent_row(&self, rhs_col: usize) -> Option<usize> {
        let rank = self.pivots.len();
        (rank..self.rows.len()).find(|&r| get_bit(&self.rows[r], rhs_col))
    }

    fn pivots(&self) -> impl Iterator<Item = (usize, &[u64])> {
        self.pivots.iter().map(|&(col, r)| (col, self.rows[r].as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rank() {
        assert_eq!(SparseBinMatrix::identity(3).rank(), 3);
    }

    #[test]
    fn zero_rank() {
        assert_eq!(SparseBinMatrix::zeros(4, 6).rank(), 0);
    }

    #[test]
    fn dependent_rows() {
        let m = SparseBinMatrix::new(3, 3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_across_word_boundary() {
        let rows: Vec<Vec<usize>> = (0..130).map(|i| vec![i, (i + 1) % 130]).collect();
        let m = SparseBinMatrix::new(130, 130, rows).unwrap();
        // a cycle of xor pairs loses exactly one dimension
        assert_eq!(m.rank(), 129);
    }

    #[test]
    fn rejects_duplicates_and_range() {
        assert!(SparseBinMatrix::new(1, 3, vec![vec![1, 1]]).is_err());
        assert!(SparseBinMatrix::new(1, 3, vec![vec![3]]).is_err());
        assert!(SparseBinMatrix::new(2, 3, vec![vec![1]]).is_err());
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let m = SparseBinMatrix::identity(4);
        let rhs = [1, 0, 1, 1];
        let x = m.solve_noiseless(&rhs, &[None; 4]).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn solve_uses_knowns() {
        // x0 ^ x2 = 0, x1 ^ x2 = 0, x2 known = 1
        let m = SparseBinMatrix::new(2, 3, vec![vec![0, 2], vec![1, 2]]).unwrap();
        let x = m.solve_noiseless(&[0, 0], &[None, None, Some(1)]).unwrap();
        assert_eq!(x, vec![1, 1, 1]);
    }

    #[test]
    fn solve_detects_rank_deficiency() {
        let m = SparseBinMatrix::new(1, 2, vec![vec![0, 1]]).unwrap();
        assert!(matches!(
            m.solve_noiseless(&[0], &[None, None]),
            Err(Error::InsufficientRank { rank: 1, unknowns: 2 })
        ));
    }

    #[test]
    fn solve_detects_inconsistent_knowns() {
        let m = SparseBinMatrix::new(1, 2, vec![vec![0, 1]]).unwrap();
        assert!(matches!(
            m.solve_noiseless(&[0], &[Some(1), Some(0)]),
            Err(Error::Inconsistent { row: 0 })
        ));
        // contradiction only visible after elimination
        let m = SparseBinMatrix::new(2, 2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert!(matches!(
            m.solve_noiseless(&[0, 1], &[None, None]),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn syndrome_of_zero_word() {
        let m = SparseBinMatrix::new(2, 4, vec![vec![0, 1, 3], vec![2, 3]]).unwrap();
        assert_eq!(m.syndrome(&[0; 4]), vec![0, 0]);
        assert_eq!(m.syndrome(&[0, 0, 0, 1]), vec![1, 1]);
    }

    #[test]
    fn dump_round_trip() {
        let m = SparseBinMatrix::new(3, 5, vec![vec![0, 4], vec![], vec![1, 2, 3]]).unwrap();
        let text = m.dump_rows();
        assert_eq!(text, "0: 0 4\n1:\n2: 1 2 3\n");
        assert_eq!(SparseBinMatrix::parse_rows(&text, 5).unwrap(), m);
    }

    #[test]
    fn column_supports_transpose() {
        let m = SparseBinMatrix::new(2, 3, vec![vec![0, 2], vec![2]]).unwrap();
        assert_eq!(m.column_supports(), vec![vec![0], vec![], vec![0, 1]]);
    }
}
