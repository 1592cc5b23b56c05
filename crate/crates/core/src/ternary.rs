//! Dense matrices with entries restricted to {-1, 0, +1}.
//!
//! Template matrices of decision machines live here. Entries are stored one
//! byte each in row-major order; rows render to and parse from compact
//! strings over `{-, 0, +}` so serialized matrices stay human-auditable.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TernaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl TernaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TernaryMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    /// Builds a matrix from explicit rows, validating shape and entry range.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {} but row 0 has length {cols}",
                    row.len()
                )));
            }
            for &v in row {
                if !matches!(v, -1 | 0 | 1) {
                    return Err(Error::DimensionMismatch(format!(
                        "row {i} contains entry {v} outside {{-1, 0, 1}}"
                    )));
                }
                data.push(v);
            }
        }
        Ok(TernaryMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Parses rows from strings over `{-, 0, +}`, e.g. `"--0-0"`.
    pub fn from_row_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("matrix needs at least one row".into()));
        }
        let cols = rows[0].as_ref().chars().count();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.chars().count() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row string {i} has length {} but row 0 has length {cols}",
                    row.chars().count()
                )));
            }
            for ch in row.chars() {
                data.push(match ch {
                    '-' => -1,
                    '0' => 0,
                    '+' => 1,
                    other => {
                        return Err(Error::DimensionMismatch(format!(
                            "row string {i} contains '{other}'; expected one of '-', '0', '+'"
                        )))
                    }
                });
            }
        }
        Ok(TernaryMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: i8) {
        debug_assert!(matches!(value, -1 | 0 | 1));
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[i8]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// L1 norm of a row; equals the nonzero count for ternary entries.
    pub fn row_l1_norm(&self, row: usize) -> u32 {
        self.row(row).iter().filter(|&&v| v != 0).count() as u32
    }

    /// Nonzero positions of a row with their signs.
    pub fn row_support(&self, row: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.row(row)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(j, &v)| (j, v))
    }

    /// Exact integer dot product of a row against a vector of the same length.
    pub fn row_dot(&self, row: usize, other: &[i8]) -> i64 {
        debug_assert_eq!(other.len(), self.cols);
        self.row(row)
            .iter()
            .zip(other)
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }

    pub fn rows_distinct(&self) -> bool {
        let mut seen: Vec<&[i8]> = self.iter_rows().collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    pub fn row_string(&self, row: usize) -> String {
        self.row(row)
            .iter()
            .map(|&v| match v {
                -1 => '-',
                0 => '0',
                _ => '+',
            })
            .collect()
    }

    pub fn row_strings(&self) -> Vec<String> {
        (0..self.rows).map(|r| self.row_string(r)).collect()
    }
}

impl fmt::Display for TernaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            writeln!(f, "{}", self.row_string(r))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_strings_round_trip() {
        let m = TernaryMatrix::from_rows(&[vec![-1, 0, 1], vec![1, 1, -1]]).unwrap();
        assert_eq!(m.row_strings(), vec!["-0+", "++-"]);
        let back = TernaryMatrix::from_row_strings(&m.row_strings()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn norms_and_support() {
        let m = TernaryMatrix::from_rows(&[vec![-1, -1, 0, -1, 0]]).unwrap();
        assert_eq!(m.row_l1_norm(0), 3);
        let support: Vec<_> = m.row_support(0).collect();
        assert_eq!(support, vec![(0, -1), (1, -1), (3, -1)]);
    }

    #[test]
    fn rejects_out_of_range_entries() {
        assert!(TernaryMatrix::from_rows(&[vec![2]]).is_err());
        assert!(TernaryMatrix::from_row_strings(&["-x"]).is_err());
    }

    #[test]
    fn dot_is_exact() {
        let m = TernaryMatrix::from_rows(&[vec![-1, -1, 0, -1, 0]]).unwrap();
        let h = [1, -1, -1, -1, -1];
        assert_eq!(m.row_dot(0, &h), 1);
    }

    #[test]
    fn duplicate_rows_detected() {
        let m = TernaryMatrix::from_rows(&[vec![-1, 1], vec![-1, 1]]).unwrap();
        assert!(!m.rows_distinct());
        let m = TernaryMatrix::from_rows(&[vec![-1, 1], vec![1, -1]]).unwrap();
        assert!(m.rows_distinct());
    }
}
