use serde::{Deserialize, Serialize};

use crate::dense::Mat;
use crate::exactlin::FamilySpec;

use super::jet::JetSpace;
use super::KernelError;

/// Largest derivative order supported by the jet machinery.
pub const MAX_DERIVATIVE_ORDER: usize = 3;

/// `y -> prod_i |t - M_i y|^{e_i}` for a fixed set of matrices and exponents.
///
/// The kernel of `T_r` is the case `M_i = A_i`, `t = x`; the conjugated form
/// uses `M_i = B P_i`, `t = B x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductKernel {
    n: usize,
    matrices: Vec<Mat>,
    exponents: Vec<f64>,
    /// Shared exponent when all factors agree; lets evaluation use one `powf`.
    uniform: Option<f64>,
}

impl ProductKernel {
    pub fn new(matrices: Vec<Mat>, exponents: Vec<f64>) -> Self {
        assert_eq!(matrices.len(), exponents.len());
        let n = matrices.first().map_or(0, Mat::cols);
        let uniform = exponents
            .first()
            .copied()
            .filter(|e| exponents.iter().all(|x| x == e));
        Self {
            n,
            matrices,
            exponents,
            uniform,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrices(&self) -> &[Mat] {
        &self.matrices
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `|t - M_i y|^2`.
    #[inline]
    pub fn factor_sq(&self, i: usize, t: &[f64], y: &[f64]) -> f64 {
        let m = &self.matrices[i];
        let mut s = 0.0;
        for (k, tk) in t.iter().enumerate().take(m.rows()) {
            let row = m.row(k);
            let mut my = 0.0;
            for (a, b) in row.iter().zip(y) {
                my += a * b;
            }
            let d = tk - my;
            s += d * d;
        }
        s
    }

    #[inline]
    pub fn eval(&self, t: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        if let Some(e) = self.uniform {
            let mut prod = 1.0;
            for i in 0..self.matrices.len() {
                let s = self.factor_sq(i, t, y);
                if s == 0.0 {
                    return Err(KernelError::Singular { factor: i });
                }
                prod *= s;
            }
            if prod.is_normal() {
                return Ok(prod.powf(0.5 * e));
            }
        }
        let mut value = 1.0;
        for (i, e) in self.exponents.iter().enumerate() {
            let s = self.factor_sq(i, t, y);
            if s == 0.0 {
                return Err(KernelError::Singular { factor: i });
            }
            value *= s.powf(0.5 * e);
        }
        Ok(value)
    }

    /// Taylor coefficients of `h -> K(t, z + h)` up to total degree `order`.
    pub fn jet(&self, t: &[f64], z: &[f64], order: usize) -> Result<Vec<f64>, KernelError> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(KernelError::OrderTooHigh {
                order,
                max: MAX_DERIVATIVE_ORDER,
            });
        }
        let n = self.n;
        let space = JetSpace::cached(n, order);
        let linear: Vec<usize> = if order == 0 {
            Vec::new()
        } else {
            (0..n)
                .map(|k| {
                    let mut e = vec![0; n];
                    e[k] = 1;
                    space.index(&e).expect("order >= 1")
                })
                .collect()
        };
        let mut result = space.constant(1.0);
        for (i, (m, e)) in self.matrices.iter().zip(&self.exponents).enumerate() {
            // s(h) = |w - M h|^2 with w = t - M z
            let w: Vec<f64> = t.iter().zip(m.mul_vec(z)).map(|(a, b)| a - b).collect();
            let s0: f64 = w.iter().map(|v| v * v).sum();
            if s0 == 0.0 {
                return Err(KernelError::Singular { factor: i });
            }
            let mut s = space.constant(s0);
            if order >= 1 {
                let mtw = m.transpose().mul_vec(&w);
                for k in 0..n {
                    s[linear[k]] = -2.0 * mtw[k];
                }
            }
            if order >= 2 {
                let gram = m.transpose().mul(m);
                for k in 0..n {
                    for l in k..n {
                        let mut e = vec![0u32; n];
                        e[k] += 1;
                        e[l] += 1;
                        let idx = space.index(&e).expect("degree 2 present");
                        s[idx] = if k == l { gram.get(k, k) } else { 2.0 * gram.get(k, l) };
                    }
                }
            }
            let factor = space.powf(&s, 0.5 * e);
            result = space.mul(&result, &factor);
        }
        Ok(result)
    }
}

/// Parameters of `T_r`: the float shadow of a family and the exponents
/// `e_i = -n_i + alpha_i` with `alpha_i = r n_i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelParams {
    family: FamilySpec,
    r: f64,
    alphas: Vec<f64>,
    kernel: ProductKernel,
    canonical: bool,
}

impl KernelParams {
    pub fn new(family: FamilySpec, r: f64) -> Result<Self, KernelError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(KernelError::InvalidR(r));
        }
        let alphas: Vec<f64> = family.partition().iter().map(|&k| r * k as f64).collect();
        let exponents: Vec<f64> = family
            .partition()
            .iter()
            .zip(&alphas)
            .map(|(&k, a)| -(k as f64) + a)
            .collect();
        let n = family.n();
        let matrices = family
            .matrices()
            .iter()
            .map(|a| Mat::new(n, n, a.to_f64()))
            .collect();
        let canonical = family.is_canonical();
        Ok(Self {
            kernel: ProductKernel::new(matrices, exponents),
            family,
            r,
            alphas,
            canonical,
        })
    }

    pub fn family(&self) -> &FamilySpec {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }

    pub fn m(&self) -> usize {
        self.family.m()
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn partition(&self) -> &[usize] {
        self.family.partition()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn exponents(&self) -> &[f64] {
        self.kernel.exponents()
    }

    /// `beta_i = n_i - alpha_i`, the exponents of the `T_{beta,m}` form.
    pub fn betas(&self) -> Vec<f64> {
        self.exponents().iter().map(|e| -e).collect()
    }

    /// `beta = n r`.
    pub fn beta(&self) -> f64 {
        self.n() as f64 * self.r
    }

    /// `sum_i e_i`, computed from the stored exponents.
    pub fn total_exponent(&self) -> f64 {
        self.exponents().iter().sum()
    }

    /// Closed form `-n (1 - r)` of [`Self::total_exponent`].
    pub fn homogeneity_degree(&self) -> f64 {
        -(self.n() as f64) * (1.0 - self.r)
    }

    pub fn matrices(&self) -> &[Mat] {
        self.kernel.matrices()
    }

    pub fn kernel(&self) -> &ProductKernel {
        &self.kernel
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Coordinate range of block `j`.
    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.family.block_start(j);
        start..start + self.partition()[j]
    }
}
