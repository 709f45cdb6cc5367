use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rational::{format_rational, parse_rational, primitive_integer, to_f64, Rational};
use super::{ExactError, Subspace};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

/// Row echelon data produced by fraction-free elimination.
struct Echelon {
    /// Integer rows after Bareiss elimination (row-scaled copy of the input).
    rows: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self, ExactError> {
        if entries.len() != rows * cols {
            return Err(ExactError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Rational::one();
        }
        m
    }

    /// Builds a matrix from integer rows. Panics on ragged input.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| Rational::from_integer(BigInt::from(v))))
            .collect();
        Self {
            rows: rows.len(),
            cols,
            entries,
        }
    }

    /// Matrix whose columns are the given vectors (all of length `rows`).
    pub fn from_columns(rows: usize, columns: &[Vec<Rational>]) -> Result<Self, ExactError> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(ExactError::Shape("column length mismatch".into()));
        }
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m.entries[i * cols + j] = v.clone();
            }
        }
        Ok(m)
    }

    /// The canonical projection onto coordinate block `block` of `partition`.
    pub fn canonical_projection(partition: &[usize], block: usize) -> Self {
        let n: usize = partition.iter().sum();
        let start: usize = partition[..block].iter().sum();
        let mut m = Self::zeros(n, n);
        for i in start..start + partition[block] {
            m.entries[i * n + i] = Rational::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, ExactError> {
        if self.cols != rhs.rows {
            return Err(ExactError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, ExactError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(ExactError::Shape("cannot add matrices of different shapes".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.rows)
    }

    /// Fraction-free (Bareiss) forward elimination. Each row is first scaled
    /// to integers; the pivot in each column is the entry of largest magnitude.
    fn echelon(&self) -> Echelon {
        let mut rows: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter().map(|x| (x * &lcm).to_integer()).collect()
            })
            .collect();
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows)
                .filter(|&i| !rows[i][c].is_zero())
                .max_by(|&a, &b| rows[a][c].abs().cmp(&rows[b][c].abs()).then(b.cmp(&a)))
            else {
                continue;
            };
            rows.swap(r, p);
            for i in r + 1..self.rows {
                for j in c + 1..self.cols {
                    let num = &rows[r][c] * &rows[i][j] - &rows[i][c] * &rows[r][j];
                    let (q, rem) = num.div_rem(&prev);
                    debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                    rows[i][j] = q;
                }
                rows[i][c] = BigInt::zero();
            }
            prev = rows[r][c].clone();
            pivots.push(c);
            r += 1;
        }
        Echelon { rows, pivots }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Reduced row echelon form together with its pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let ech = self.echelon();
        let rank = ech.pivots.len();
        let mut m = Self::zeros(rank, self.cols);
        for (i, row) in ech.rows.iter().take(rank).enumerate() {
            let lead = Rational::from_integer(row[ech.pivots[i]].clone());
            for j in 0..self.cols {
                m.entries[i * self.cols + j] = Rational::from_integer(row[j].clone()) / &lead;
            }
        }
        // back substitution, bottom pivot first
        for i in (0..rank).rev() {
            let pc = ech.pivots[i];
            for k in 0..i {
                let factor = m.get(k, pc).clone();
                if factor.is_zero() {
                    continue;
                }
                for j in pc..self.cols {
                    let delta = &factor * m.get(i, j);
                    m.entries[k * self.cols + j] -= delta;
                }
            }
        }
        (m, ech.pivots)
    }

    /// Kernel basis from the RREF parametrization, one vector per free column,
    /// scaled to a primitive integer vector with positive leading entry.
    pub fn null_space(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let basis = free
            .iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (i, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r.get(i, f).clone();
                }
                primitive_integer(&v)
            })
            .collect();
        Subspace::from_independent(self.cols, basis)
    }

    pub fn determinant(&self) -> Result<Rational, ExactError> {
        if !self.is_square() {
            return Err(ExactError::Shape("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(Rational::one());
        }
        // Gaussian elimination over the rationals; swaps tracked for the sign
        let mut a = self.entries.clone();
        let mut det = Rational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[i * n + c].is_zero()) else {
                return Ok(Rational::zero());
            };
            if p != c {
                for j in 0..n {
                    a.swap(c * n + j, p * n + j);
                }
                det = -det;
            }
            let pivot = a[c * n + c].clone();
            det *= &pivot;
            for i in c + 1..n {
                let factor = &a[i * n + c] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for j in c..n {
                    let delta = &factor * &a[c * n + j];
                    a[i * n + j] -= delta;
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, Rational::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    /// Row-major floating-point shadow, round-to-nearest per entry.
    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(to_f64).collect()
    }

    /// Parses the `a,b,c; d,e,f` text format.
    pub fn parse(text: &str) -> Result<Self, ExactError> {
        let row_texts: Vec<&str> = text
            .trim()
            .trim_end_matches(';')
            .split(';')
            .map(str::trim)
            .collect();
        if row_texts.iter().any(|r| r.is_empty()) {
            return Err(ExactError::Parse {
                input: text.to_string(),
                reason: "empty row".into(),
            });
        }
        let mut entries = Vec::new();
        let mut cols = None;
        for (i, row) in row_texts.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            match cols {
                None => cols = Some(cells.len()),
                Some(c) if c != cells.len() => {
                    return Err(ExactError::Parse {
                        input: text.to_string(),
                        reason: format!("row {} has {} entries, expected {c}", i + 1, cells.len()),
                    })
                }
                _ => {}
            }
            for (j, cell) in cells.iter().enumerate() {
                let v = parse_rational(cell).map_err(|_| ExactError::Parse {
                    input: text.to_string(),
                    reason: format!("bad entry '{}' at row {}, column {}", cell.trim(), i + 1, j + 1),
                })?;
                entries.push(v);
            }
        }
        Self::new(row_texts.len(), cols.unwrap_or(0), entries)
    }
}

impl FromStr for RationalMatrix {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for RationalMatrix {
    /// Writes the same `a,b; c,d` format accepted by [`RationalMatrix::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            if i > 0 {
                f.write_str("; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(format_rational).collect();
            f.write_str(&row.join(","))?;
        }
        Ok(())
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalMatrix[{}x{}]({self})", self.rows, self.cols)
    }
}

impl Serialize for RationalMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}
