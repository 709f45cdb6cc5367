use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::rational::{format_rational, primitive_integer, Rational};
use super::{ExactError, RationalMatrix};

/// A linear subspace of Q^n described by a basis of independent vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<Rational>>,
}

impl Subspace {
    /// Wraps a basis already known to be independent.
    pub(crate) fn from_independent(ambient_dim: usize, basis: Vec<Vec<Rational>>) -> Self {
        Self { ambient_dim, basis }
    }

    /// Checks independence and lengths.
    pub fn new(ambient_dim: usize, basis: Vec<Vec<Rational>>) -> Result<Self, ExactError> {
        if basis.iter().any(|v| v.len() != ambient_dim) {
            return Err(ExactError::Shape("basis vector length differs from ambient dimension".into()));
        }
        let s = Self { ambient_dim, basis };
        if s.span_rank() != s.basis.len() {
            return Err(ExactError::DependentBasis);
        }
        Ok(s)
    }

    /// Span of arbitrary vectors, in canonical form: the nonzero rows of the
    /// RREF of the stacked vectors, each scaled to a primitive integer vector.
    pub fn span(ambient_dim: usize, vectors: &[Vec<Rational>]) -> Result<Self, ExactError> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(ExactError::Shape("vector length differs from ambient dimension".into()));
        }
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        let stacked = RationalMatrix::new(
            vectors.len(),
            ambient_dim,
            vectors.iter().flatten().cloned().collect(),
        )?;
        let (r, pivots) = stacked.rref();
        let basis = (0..pivots.len()).map(|i| primitive_integer(r.row(i))).collect();
        Ok(Self { ambient_dim, basis })
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        RationalMatrix::zeros(ambient_dim, ambient_dim).null_space()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    fn span_rank(&self) -> usize {
        if self.basis.is_empty() {
            return 0;
        }
        RationalMatrix::new(
            self.basis.len(),
            self.ambient_dim,
            self.basis.iter().flatten().cloned().collect(),
        )
        .map(|m| m.rank())
        .unwrap_or(0)
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        if v.iter().all(Zero::is_zero) {
            return true;
        }
        let mut vectors = self.basis.clone();
        vectors.push(v.to_vec());
        Self::span(self.ambient_dim, &vectors)
            .map(|s| s.dim() == self.dim())
            .unwrap_or(false)
    }

    pub fn same_span(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.dim() == other.dim()
            && other.basis.iter().all(|v| self.contains(v))
    }

    /// Canonical basis of the same span (see [`Subspace::span`]).
    pub fn canonical(&self) -> Self {
        Self::span(self.ambient_dim, &self.basis).expect("lengths already checked")
    }

    /// Exact intersection via the kernel of `[U | -V]`.
    pub fn intersect(&self, other: &Self) -> Result<Self, ExactError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ExactError::DimensionMismatch {
                left: self.ambient_dim,
                right: other.ambient_dim,
            });
        }
        let n = self.ambient_dim;
        let (du, dv) = (self.dim(), other.dim());
        if du == 0 || dv == 0 {
            return Ok(Self::zero(n));
        }
        let mut m = RationalMatrix::zeros(n, du + dv);
        for (j, u) in self.basis.iter().enumerate() {
            for i in 0..n {
                m.set(i, j, u[i].clone());
            }
        }
        for (j, v) in other.basis.iter().enumerate() {
            for i in 0..n {
                m.set(i, du + j, -v[i].clone());
            }
        }
        let coefficients = m.null_space();
        let vectors: Vec<Vec<Rational>> = coefficients
            .basis()
            .iter()
            .map(|c| {
                (0..n)
                    .map(|i| {
                        self.basis
                            .iter()
                            .zip(c)
                            .fold(Rational::zero(), |acc, (u, a)| acc + &u[i] * a)
                    })
                    .collect()
            })
            .collect();
        Self::span(n, &vectors)
    }

    /// Sum `U + V` (not necessarily direct).
    pub fn sum(&self, other: &Self) -> Result<Self, ExactError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ExactError::DimensionMismatch {
                left: self.ambient_dim,
                right: other.ambient_dim,
            });
        }
        let mut vectors = self.basis.clone();
        vectors.extend(other.basis.iter().cloned());
        Self::span(self.ambient_dim, &vectors)
    }

    /// Renders as `<(1,0,4), (0,1,4)>`.
    pub fn describe(&self) -> String {
        let vs: Vec<String> = self
            .basis
            .iter()
            .map(|v| {
                let es: Vec<String> = v.iter().map(format_rational).collect();
                format!("({})", es.join(","))
            })
            .collect();
        format!("<{}>", vs.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::super::rational::int;
    use super::*;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn dependent_basis_rejected() {
        assert!(matches!(
            Subspace::new(3, vec![v(&[1, 2, 3]), v(&[2, 4, 6])]),
            Err(ExactError::DependentBasis)
        ));
    }

    #[test]
    fn intersection_dimension_mismatch() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert!(matches!(a.intersect(&b), Err(ExactError::DimensionMismatch { .. })));
    }

    #[test]
    fn idempotent_intersection() {
        let u = Subspace::new(3, vec![v(&[1, 0, 4]), v(&[0, 1, 4])]).unwrap();
        assert!(u.intersect(&u).unwrap().same_span(&u));
    }

    #[test]
    fn canonical_form_is_primitive() {
        let s = Subspace::span(3, &[v(&[8, -6, 8])]).unwrap();
        assert_eq!(s.basis(), &[v(&[4, -3, 4])]);
        assert_eq!(s.describe(), "<(4,-3,4)>");
    }
}
