use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use crate::dense::dist;
use crate::Exec;

use super::{adaptive_integrate, IntegrationBox, QuadError, QuadOptions, QuadResult, SingularSet};

/// A kernel `K(x, y)` on one coordinate block.
pub trait BlockKernel: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
    /// `s` when `K` behaves like `|x - y|^{-s}` at `y = x`.
    fn point_singularity(&self) -> Option<f64>;
}

/// Unnormalized Riesz kernel `|x - y|^{alpha - d}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RieszKernel {
    pub alpha: f64,
    pub dim: usize,
}

impl RieszKernel {
    pub fn new(alpha: f64, dim: usize) -> Result<Self, QuadError> {
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(QuadError::InvalidAlpha { alpha, dim });
        }
        Ok(Self { alpha, dim })
    }
}

impl BlockKernel for RieszKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = dist(x, y);
        if r == 0.0 {
            return f64::NAN;
        }
        r.powf(self.alpha - self.dim as f64)
    }

    fn point_singularity(&self) -> Option<f64> {
        Some(self.dim as f64 - self.alpha)
    }
}

/// `K = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitKernel {
    pub dim: usize,
}

impl BlockKernel for UnitKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _: &[f64], _: &[f64]) -> f64 {
        1.0
    }

    fn point_singularity(&self) -> Option<f64> {
        None
    }
}

/// `int |x - y|^{alpha - d} g(y) dy` over `support`, which must contain the support of `g`.
pub fn riesz_block_apply<G>(
    alpha: f64,
    g: &G,
    support: &IntegrationBox,
    x: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let d = support.dim();
    if x.len() != d {
        return Err(QuadError::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let kernel = RieszKernel::new(alpha, d)?;
    let integrand = |y: &[f64]| kernel.eval(x, y) * g(y);
    let sets = [SingularSet::point(x, d as f64 - alpha)];
    Ok(adaptive_integrate(&integrand, support, opts, &sets))
}

/// `(K_1 ⊗ ... ⊗ K_m) f (x)` by iterated integration, one block at a time,
/// over a product support box.
pub fn tensor_apply<F>(
    kernels: &[&dyn BlockKernel],
    f: &F,
    support: &IntegrationBox,
    x: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n: usize = kernels.iter().map(|k| k.dim()).sum();
    if n != support.dim() || n != x.len() {
        return Err(QuadError::DimensionMismatch {
            expected: support.dim(),
            got: n.max(x.len()),
        });
    }
    let starts: Vec<usize> = kernels
        .iter()
        .scan(0, |acc, k| {
            let s = *acc;
            *acc += k.dim();
            Some(s)
        })
        .collect();
    let ctx = Tensor {
        kernels,
        starts,
        f,
        support,
        x,
        opts,
        inner_opts: QuadOptions {
            rel_tol: 0.25 * opts.rel_tol,
            abs_tol: 0.25 * opts.abs_tol,
            l1_rel_tol: opts.l1_rel_tol.map(|t| 0.25 * t),
            exec: Exec::Sequential,
            ..opts.clone()
        },
        evals: AtomicUsize::new(0),
        converged: AtomicBool::new(true),
    };
    let mut outer = ctx.level(0, &[]);
    outer.evals += ctx.evals.load(Ordering::Relaxed);
    outer.converged &= ctx.converged.load(Ordering::Relaxed);
    Ok(outer)
}

struct Tensor<'a, F> {
    kernels: &'a [&'a dyn BlockKernel],
    starts: Vec<usize>,
    f: &'a F,
    support: &'a IntegrationBox,
    x: &'a [f64],
    opts: &'a QuadOptions,
    inner_opts: QuadOptions,
    evals: AtomicUsize,
    converged: AtomicBool,
}

impl<F> Tensor<'_, F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn level(&self, j: usize, prefix: &[f64]) -> QuadResult {
        let k = self.kernels[j];
        let range = self.starts[j]..self.starts[j] + k.dim();
        let xj = &self.x[range.clone()];
        let bx = self.support.slice(range);
        let last = j + 1 == self.kernels.len();
        let sets: Vec<SingularSet> = k
            .point_singularity()
            .map(|s| SingularSet::point(xj, s))
            .into_iter()
            .collect();
        let integrand = |yj: &[f64]| {
            let kv = k.eval(xj, yj);
            if !kv.is_finite() {
                return kv;
            }
            let mut y = prefix.to_vec();
            y.extend_from_slice(yj);
            let rest = if last {
                (self.f)(&y)
            } else {
                let r = self.level(j + 1, &y);
                self.evals.fetch_add(r.evals, Ordering::Relaxed);
                if !r.converged {
                    self.converged.store(false, Ordering::Relaxed);
                }
                r.value
            };
            kv * rest
        };
        let opts = if j == 0 { self.opts } else { &self.inner_opts };
        adaptive_integrate(&integrand, &bx, opts, &sets)
    }
}
