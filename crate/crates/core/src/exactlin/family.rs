use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rational::{int, Rational};
use super::{ExactError, RationalMatrix, Subspace};

/// A family `A_1..A_m` of `n x n` matrices with the block partition `n = n_1 + .. + n_m`.
///
/// Construction only checks shapes. Whether the family satisfies the rank,
/// invertibility and direct-sum hypotheses is answered by [`validate_family`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    n: usize,
    partition: Vec<usize>,
    matrices: Vec<RationalMatrix>,
}

impl FamilySpec {
    pub fn new(partition: Vec<usize>, matrices: Vec<RationalMatrix>) -> Result<Self, ExactError> {
        let n = matrices.first().map_or(0, |m| m.rows());
        if matrices.len() != partition.len() {
            return Err(ExactError::Shape(format!(
                "{} matrices for a partition with {} blocks",
                matrices.len(),
                partition.len()
            )));
        }
        if n == 0 || matrices.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(ExactError::Shape("family matrices must all be n x n with n > 0".into()));
        }
        Ok(Self {
            n,
            partition,
            matrices,
        })
    }

    /// The canonical projections `P_1..P_m` for `partition`.
    pub fn canonical(partition: &[usize]) -> Self {
        let matrices = (0..partition.len())
            .map(|j| RationalMatrix::canonical_projection(partition, j))
            .collect();
        Self::new(partition.to_vec(), matrices).expect("canonical projections are square")
    }

    /// The 3x3 rank-one example family with partition (1,1,1).
    pub fn paper_example() -> Self {
        let a1 = RationalMatrix::from_i64_rows(&[&[4, 4, -1], &[0, 0, 0], &[-4, -4, 1]]);
        let a2 = RationalMatrix::from_i64_rows(&[&[1, -1, 0], &[-2, 2, 0], &[0, 0, 0]]);
        let a3 = RationalMatrix::from_i64_rows(&[&[1, 0, -1], &[-3, 0, 3], &[-1, 0, 1]]);
        Self::new(vec![1, 1, 1], vec![a1, a2, a3]).expect("fixed shapes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn matrices(&self) -> &[RationalMatrix] {
        &self.matrices
    }

    /// First coordinate of block `j`.
    pub fn block_start(&self, j: usize) -> usize {
        self.partition[..j].iter().sum()
    }

    pub fn matrix_sum(&self) -> RationalMatrix {
        self.matrices
            .iter()
            .skip(1)
            .fold(self.matrices[0].clone(), |acc, m| acc.add(m).expect("same shape"))
    }

    /// `N_j = ker A_j` for every `j`.
    pub fn null_spaces(&self) -> Vec<Subspace> {
        self.matrices.iter().map(RationalMatrix::null_space).collect()
    }

    /// `\bigcap_{j != k} N_j` for every `k`, in canonical basis form.
    pub fn block_intersections(&self) -> Vec<Subspace> {
        let nulls = self.null_spaces();
        (0..self.m())
            .map(|k| {
                nulls
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != k)
                    .fold(Subspace::full(self.n), |acc, (_, s)| {
                        acc.intersect(s).expect("same ambient dimension")
                    })
            })
            .collect()
    }

    /// True when every matrix equals the canonical projection of its block.
    pub fn is_canonical(&self) -> bool {
        self.matrices
            .iter()
            .enumerate()
            .all(|(j, a)| *a == RationalMatrix::canonical_projection(&self.partition, j))
    }
}

/// One hypothesis check in a [`ValidationReport`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Per-hypothesis outcome of [`validate_family`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckEntry>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckEntry {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Checks every hypothesis on the family; failures become report entries.
pub fn validate_family(spec: &FamilySpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (n, m) = (spec.n(), spec.m());
    report.push("family size", 1 < m && m <= n, format!("m = {m}, n = {n}, need 1 < m <= n"));
    let total: usize = spec.partition().iter().sum();
    let positive = spec.partition().iter().all(|&k| k > 0);
    report.push(
        "partition",
        positive && total == n,
        format!("blocks {:?} sum to {total}, need positive blocks summing to {n}", spec.partition()),
    );

    let nulls = spec.null_spaces();
    for (j, (a, nj)) in spec.matrices().iter().zip(&nulls).enumerate() {
        let want = n.saturating_sub(spec.partition()[j]);
        let rank = a.rank();
        report.push(
            format!("null space dim A{}", j + 1),
            nj.dim() == want && rank + nj.dim() == n,
            format!("dim N{} = {} (rank {rank}), need {want}", j + 1, nj.dim()),
        );
    }

    let sum = spec.matrix_sum();
    let det = sum.determinant().unwrap_or_else(|_| Rational::zero());
    report.push(
        "sum invertible",
        !det.is_zero(),
        format!("det(A1+...+Am) = {det}"),
    );

    let blocks = spec.block_intersections();
    for (k, block) in blocks.iter().enumerate() {
        report.push(
            format!("block intersection dim {}", k + 1),
            block.dim() == spec.partition()[k],
            format!(
                "dim of intersection of N_j over j != {} is {}, need {}",
                k + 1,
                block.dim(),
                spec.partition()[k]
            ),
        );
    }
    let all: Vec<Vec<Rational>> = blocks.iter().flat_map(|b| b.basis().iter().cloned()).collect();
    let total_dim = all.len();
    let span_dim = Subspace::span(n, &all).map(|s| s.dim()).unwrap_or(0);
    report.push(
        "direct sum",
        total_dim == n && span_dim == n,
        format!("block intersections have total dim {total_dim} spanning dim {span_dim}, need {n}"),
    );
    report
}

/// Output of [`build_normalization`]: `B^{-1} A_j C = P_j` for every block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub c: RationalMatrix,
    pub b: RationalMatrix,
    pub b_inv: RationalMatrix,
    pub projections: Vec<RationalMatrix>,
}

/// Builds `C` from bases of the block intersections and `B = (A_1+..+A_m) C`.
///
/// `basis_choice[k]` replaces the default canonical basis of block `k`; the
/// vectors must lie in the block intersection and be independent.
pub fn build_normalization(
    spec: &FamilySpec,
    basis_choice: Option<&[Vec<Vec<Rational>>]>,
) -> Result<Normalization, ExactError> {
    let report = validate_family(spec);
    if !report.passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(ExactError::InvalidFamily(names.join(", ")));
    }
    let n = spec.n();
    let blocks = spec.block_intersections();
    let mut columns = Vec::with_capacity(n);
    match basis_choice {
        None => {
            for b in &blocks {
                columns.extend(b.basis().iter().cloned());
            }
        }
        Some(choice) => {
            if choice.len() != spec.m() {
                return Err(ExactError::InvalidBasisChoice {
                    block: choice.len().min(spec.m()) + 1,
                    reason: format!("{} blocks supplied, family has {}", choice.len(), spec.m()),
                });
            }
            for (k, (vectors, block)) in choice.iter().zip(&blocks).enumerate() {
                let invalid = |reason: String| ExactError::InvalidBasisChoice { block: k + 1, reason };
                if vectors.len() != spec.partition()[k] {
                    return Err(invalid(format!(
                        "{} vectors, block dimension is {}",
                        vectors.len(),
                        spec.partition()[k]
                    )));
                }
                if let Some(bad) = vectors.iter().position(|v| !block.contains(v)) {
                    return Err(invalid(format!("vector {} is not in the block intersection", bad + 1)));
                }
                if Subspace::new(n, vectors.clone()).is_err() {
                    return Err(invalid("vectors are linearly dependent".into()));
                }
                columns.extend(vectors.iter().cloned());
            }
        }
    }
    let c = RationalMatrix::from_columns(n, &columns)?;
    let b = spec.matrix_sum().mul(&c)?;
    let b_inv = b.inverse().ok_or(ExactError::Singular("B"))?;
    let projections = spec
        .matrices()
        .iter()
        .map(|a| b_inv.mul(a).and_then(|t| t.mul(&c)))
        .collect::<Result<_, _>>()?;
    Ok(Normalization {
        c,
        b,
        b_inv,
        projections,
    })
}

/// Exact certificate check: `B B^{-1} = I` and `B^{-1} A_j C = P_j` for all `j`.
pub fn verify_projections(norm: &Normalization, spec: &FamilySpec) -> bool {
    let n = spec.n();
    let square = |m: &RationalMatrix| m.rows() == n && m.cols() == n;
    if !(square(&norm.c) && square(&norm.b) && square(&norm.b_inv)) {
        return false;
    }
    if !norm.b.mul(&norm.b_inv).map(|p| p.is_identity()).unwrap_or(false) {
        return false;
    }
    spec.matrices().iter().enumerate().all(|(j, a)| {
        norm.b_inv
            .mul(a)
            .and_then(|t| t.mul(&norm.c))
            .map(|p| p == RationalMatrix::canonical_projection(spec.partition(), j))
            .unwrap_or(false)
    })
}

/// `A_j = B0 P_j C0^{-1}`; valid whenever `B0` and `C0` are invertible.
pub fn family_from_conjugation(
    b0: &RationalMatrix,
    c0: &RationalMatrix,
    partition: &[usize],
) -> Result<FamilySpec, ExactError> {
    let c0_inv = c0.inverse().ok_or(ExactError::Singular("C0"))?;
    let matrices = (0..partition.len())
        .map(|j| {
            b0.mul(&RationalMatrix::canonical_projection(partition, j))
                .and_then(|t| t.mul(&c0_inv))
        })
        .collect::<Result<_, _>>()?;
    FamilySpec::new(partition.to_vec(), matrices)
}

const RANDOM_FAMILY_RETRIES: usize = 64;

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> Option<RationalMatrix> {
    (0..RANDOM_FAMILY_RETRIES).find_map(|_| {
        let entries = (0..n * n).map(|_| int(rng.random_range(-3..=3))).collect();
        let m = RationalMatrix::new(n, n, entries).expect("n*n entries");
        (!m.determinant().expect("square").is_zero()).then_some(m)
    })
}

/// Random valid family: small-integer invertible `B0`, `C0` and `A_j = B0 P_j C0^{-1}`.
pub fn random_family(n: usize, partition: &[usize], seed: u64) -> Result<FamilySpec, ExactError> {
    if partition.iter().sum::<usize>() != n || partition.contains(&0) {
        return Err(ExactError::Shape(format!("partition {partition:?} does not split n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b0 = random_invertible(&mut rng, n).ok_or(ExactError::SeedExhausted { seed })?;
    let c0 = random_invertible(&mut rng, n).ok_or(ExactError::SeedExhausted { seed })?;
    family_from_conjugation(&b0, &c0, partition)
}
