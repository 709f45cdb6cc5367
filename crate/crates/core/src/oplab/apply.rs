use crate::atoms::Atom;
use crate::dense::Mat;
use crate::exactlin::rational::to_f64;
use crate::exactlin::Normalization;
use crate::kernelops::{KernelParams, ProductKernel};
use crate::quadrature::{adaptive_integrate, IntegrationBox, QuadOptions, QuadResult, SingularSet};

use super::OplabError;

/// A compactly supported function that `T_r` can be applied to.
pub trait Source: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64]) -> f64;
    /// Box containing the support.
    fn support(&self) -> IntegrationBox;
}

impl Source for Atom {
    fn dim(&self) -> usize {
        self.n()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        Atom::eval(self, y)
    }

    fn support(&self) -> IntegrationBox {
        self.support_box()
    }
}

/// `height (1 - |y - c|^2 / rho^2)^8` on the ball, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothBump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

impl SmoothBump {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self {
            center,
            radius,
            height: 1.0,
        }
    }
}

impl Source for SmoothBump {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        let r2: f64 = y
            .iter()
            .zip(&self.center)
            .map(|(a, b)| ((a - b) / self.radius).powi(2))
            .sum();
        if r2 >= 1.0 {
            0.0
        } else {
            self.height * (1.0 - r2).powi(8)
        }
    }

    fn support(&self) -> IntegrationBox {
        IntegrationBox::cube(&self.center, self.radius).expect("positive radius")
    }
}

/// `|f|`.
pub struct Abs<'a, S: ?Sized>(pub &'a S);

impl<S: Source + ?Sized> Source for Abs<'_, S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.0.eval(y).abs()
    }

    fn support(&self) -> IntegrationBox {
        self.0.support()
    }
}

/// `f_C(y) = f(C^{-1} y)`, supported in the image of `f`'s box under `C`.
pub struct PushForward<'a, S: ?Sized> {
    inner: &'a S,
    c: Mat,
    c_inv: Mat,
}

impl<'a, S: Source + ?Sized> PushForward<'a, S> {
    pub fn new(inner: &'a S, c: Mat) -> Result<Self, OplabError> {
        let n = c.rows();
        let inv = nalgebra::DMatrix::from_row_slice(n, n, c.data())
            .try_inverse()
            .ok_or_else(|| OplabError::Numerical("C is not invertible".into()))?;
        let c_inv = Mat::new(n, n, inv.transpose().as_slice().to_vec());
        Ok(Self { inner, c, c_inv })
    }
}

impl<S: Source + ?Sized> Source for PushForward<'_, S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, y: &[f64]) -> f64 {
        self.inner.eval(&self.c_inv.mul_vec(y))
    }

    fn support(&self) -> IntegrationBox {
        let inner = self.inner.support();
        let n = inner.dim();
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for corner in 0..1usize << n {
            let p: Vec<f64> = (0..n)
                .map(|i| if corner >> i & 1 == 1 { inner.upper[i] } else { inner.lower[i] })
                .collect();
            for (i, v) in self.c.mul_vec(&p).into_iter().enumerate() {
                lower[i] = lower[i].min(v);
                upper[i] = upper[i].max(v);
            }
        }
        IntegrationBox::new(lower, upper).expect("image of a box under an invertible map")
    }
}

fn check_dims(params: &KernelParams, f: &(impl Source + ?Sized), x: &[f64]) -> Result<(), OplabError> {
    let n = params.n();
    for got in [f.dim(), x.len()] {
        if got != n {
            return Err(OplabError::Dimension { expected: n, got });
        }
    }
    Ok(())
}

/// `int K(t, y) f(y) dy` with singular sets `{y : M_i y = t}`.
pub(crate) fn integrate_kernel(
    kernel: &ProductKernel,
    f: &(impl Source + ?Sized),
    support: &IntegrationBox,
    t: &[f64],
    opts: &QuadOptions,
) -> QuadResult {
    let sets: Vec<SingularSet> = kernel
        .matrices()
        .iter()
        .zip(kernel.exponents())
        .map(|(m, e)| SingularSet::affine(m, t, -e))
        .collect();
    let integrand = |y: &[f64]| {
        let v = f.eval(y);
        if v == 0.0 {
            return 0.0;
        }
        kernel.eval(t, y).map_or(f64::NAN, |k| k * v)
    };
    adaptive_integrate(&integrand, support, opts, &sets)
}

/// `T_r f(x) = int prod_i |x - A_i y|^{e_i} f(y) dy`.
pub fn apply_tr(
    params: &KernelParams,
    f: &(impl Source + ?Sized),
    x: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult, OplabError> {
    check_dims(params, f, x)?;
    Ok(integrate_kernel(params.kernel(), f, &f.support(), x, opts))
}

/// Both sides of the change of variables `A_j = B P_j C^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugatedValues {
    /// `|det C| int prod_j |B(x - P_j y)|^{e_j} f(y) dy`.
    pub normalized: QuadResult,
    /// `[T_r(f_C)]_{B^{-1}}(x) = T_r(f_C)(B x)` by direct quadrature.
    pub direct: QuadResult,
}

impl ConjugatedValues {
    pub fn relative_gap(&self) -> f64 {
        (self.normalized.value - self.direct.value).abs() / self.direct.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Evaluates both paths of the conjugation identity at `x`.
pub fn conjugated_apply(
    params: &KernelParams,
    norm: &Normalization,
    f: &(impl Source + ?Sized),
    x: &[f64],
    opts: &QuadOptions,
) -> Result<ConjugatedValues, OplabError> {
    check_dims(params, f, x)?;
    let normalized = normalized_apply(params, norm, f, x, opts)?;
    let n = params.n();
    let b = Mat::new(n, n, norm.b.to_f64());
    let c = Mat::new(n, n, norm.c.to_f64());
    let bx = b.mul_vec(x);
    let pushed = PushForward::new(f, c)?;
    let direct = integrate_kernel(params.kernel(), &pushed, &pushed.support(), &bx, opts);
    Ok(ConjugatedValues { normalized, direct })
}

/// The first expression of [`conjugated_apply`] alone; it reads `B`, the
/// projections and `det C` from `norm`.
pub fn normalized_apply(
    params: &KernelParams,
    norm: &Normalization,
    f: &(impl Source + ?Sized),
    x: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult, OplabError> {
    check_dims(params, f, x)?;
    let n = params.n();
    let b = Mat::new(n, n, norm.b.to_f64());
    let det_c = to_f64(&norm.c.determinant().map_err(|e| OplabError::Numerical(e.to_string()))?).abs();
    let matrices: Vec<Mat> = norm
        .projections
        .iter()
        .map(|p| b.mul(&Mat::new(n, n, p.to_f64())))
        .collect();
    let kernel = ProductKernel::new(matrices, params.exponents().to_vec());
    let mut out = integrate_kernel(&kernel, f, &f.support(), &b.mul_vec(x), opts);
    out.value *= det_c;
    out.error_estimate *= det_c;
    Ok(out)
}
