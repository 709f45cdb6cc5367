use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{dist, Mat};
use crate::exactlin::FamilySpec;
use crate::sampling;

use super::{kernel_eval, taylor_eval, KernelError, KernelParams};

/// Ball `B(z, delta)` of an atom together with the family constant `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomGeometry {
    pub center: Vec<f64>,
    pub radius: f64,
    pub d: f64,
    /// Radius `4 D delta` of the inflated balls `B(A_i z, 4 D delta)`.
    pub inflation: f64,
}

impl AtomGeometry {
    pub fn new(center: Vec<f64>, radius: f64, d: f64) -> Self {
        assert!(radius > 0.0 && d > 0.0, "radius and D must be positive");
        Self {
            center,
            radius,
            d,
            inflation: 4.0 * d * radius,
        }
    }

    /// The points `A_i z`.
    pub fn images(&self, params: &KernelParams) -> Vec<Vec<f64>> {
        params.matrices().iter().map(|a| a.mul_vec(&self.center)).collect()
    }
}

/// Near/far label for a point `x` relative to an atom geometry. Block indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionLabel {
    /// Inside the inflated ball around `A_i z` (smallest such `i`).
    Near(usize),
    /// Outside every inflated ball; `A_k z` is the closest image (smallest index on ties).
    Far(usize),
}

/// Upper bound on `max_i max_{|y|=1} |A_i y|`, i.e. the largest singular value
/// over the family, inflated by a relative `1e-12` to cover rounding.
pub fn estimate_d(family: &FamilySpec) -> f64 {
    let n = family.n();
    family
        .matrices()
        .iter()
        .map(|a| Mat::new(n, n, a.to_f64()).spectral_norm())
        .fold(0.0, f64::max)
        * (1.0 + 1e-12)
}

/// Smallest singular value of `B`, the best `c` with `c|x| <= |Bx|`.
pub fn lower_frame_constant(b: &Mat) -> f64 {
    b.singular_values().last().copied().unwrap_or(0.0)
}

pub fn classify_region(geom: &AtomGeometry, params: &KernelParams, x: &[f64]) -> RegionLabel {
    let distances: Vec<f64> = geom.images(params).iter().map(|p| dist(x, p)).collect();
    if let Some(i) = distances.iter().position(|&d| d < geom.inflation) {
        return RegionLabel::Near(i);
    }
    let mut best = 0;
    for (k, &d) in distances.iter().enumerate() {
        if d < distances[best] {
            best = k;
        }
    }
    RegionLabel::Far(best)
}

/// `|y - z|^N |x - A_k z|^{-n(1-r) - N}` for `x` in `Far(k_star)` and `y` in the atom ball.
pub fn remainder_rhs(
    params: &KernelParams,
    geom: &AtomGeometry,
    x: &[f64],
    y: &[f64],
    order: usize,
    k_star: usize,
) -> Result<f64, KernelError> {
    match classify_region(geom, params, x) {
        RegionLabel::Far(k) if k == k_star => {}
        label => {
            return Err(KernelError::RegionPrecondition(format!(
                "x is labelled {label:?}, expected Far({k_star})"
            )))
        }
    }
    let dy = dist(y, &geom.center);
    if dy > geom.radius * (1.0 + 1e-12) {
        return Err(KernelError::RegionPrecondition(format!(
            "|y - z| = {dy} exceeds the atom radius {}",
            geom.radius
        )));
    }
    let dx = dist(x, &params.matrices()[k_star].mul_vec(&geom.center));
    Ok(remainder_rhs_value(params, dy, dx, order))
}

/// The bare formula `dy^N dx^{sum e_i - N}`.
pub fn remainder_rhs_value(params: &KernelParams, dy: f64, dx: f64, order: usize) -> f64 {
    dy.powi(order as i32) * dx.powf(params.total_exponent() - order as f64)
}

/// `|x - A_i xi| >= (3/4)|x - A_i z|` for every `i`.
pub fn geometric_comparability_check(
    geom: &AtomGeometry,
    params: &KernelParams,
    x: &[f64],
    xi: &[f64],
) -> bool {
    params.matrices().iter().all(|a| {
        let lhs = dist(x, &a.mul_vec(xi));
        let rhs = 0.75 * dist(x, &a.mul_vec(&geom.center));
        lhs >= rhs * (1.0 - 1e-12)
    })
}

/// For canonical families: `k(x, y) <= prod_j |x^j - y^j|^{e_j}`.
pub fn tensor_domination_check(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<bool, KernelError> {
    if !params.is_canonical() {
        return Err(KernelError::NotCanonical);
    }
    let lhs = kernel_eval(params, x, y)?;
    let rhs = tensor_kernel(params, x, y)?;
    Ok(lhs <= rhs * (1.0 + 1e-13))
}

/// `prod_j |x^j - y^j|^{e_j}` over the coordinate blocks.
pub fn tensor_kernel(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    let mut value = 1.0;
    for (j, e) in params.exponents().iter().enumerate() {
        let range = params.block_range(j);
        let d = dist(&x[range.clone()], &y[range]);
        if d == 0.0 {
            return Err(KernelError::Singular { factor: j });
        }
        value *= d.powf(*e);
    }
    Ok(value)
}

/// Constant fitted to the far-field Taylor remainder estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderFit {
    /// `margin * max_ratio`.
    pub constant: f64,
    pub max_ratio: f64,
    pub margin: f64,
    pub samples: usize,
    pub order: usize,
}

/// Safety factor applied to the largest sampled ratio.
pub const REMAINDER_MARGIN: f64 = 2.0;

/// Far distances are drawn log-uniformly in `[1, FAR_SPAN] * 4 D delta`.
const FAR_SPAN: f64 = 4096.0;

/// Draws a far-region point and a point of the atom ball.
pub fn sample_far_pair(
    params: &KernelParams,
    geom: &AtomGeometry,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>, usize) {
    let images = geom.images(params);
    loop {
        let k = rand::Rng::random_range(rng, 0..images.len());
        let rho = sampling::log_uniform(rng, geom.inflation, geom.inflation * FAR_SPAN);
        let dir = sampling::unit_vector(rng, params.n());
        let x: Vec<f64> = images[k].iter().zip(&dir).map(|(c, d)| c + rho * d).collect();
        if let RegionLabel::Far(k_star) = classify_region(geom, params, &x) {
            let y = sampling::in_ball(rng, &geom.center, geom.radius);
            return (x, y, k_star);
        }
    }
}

/// `|k - q_N| / rhs` at one sample; `None` when the point is degenerate.
pub fn remainder_ratio(
    params: &KernelParams,
    geom: &AtomGeometry,
    x: &[f64],
    y: &[f64],
    order: usize,
    k_star: usize,
) -> Result<Option<f64>, KernelError> {
    let rhs = remainder_rhs(params, geom, x, y, order, k_star)?;
    if rhs == 0.0 {
        return Ok(None);
    }
    let k = kernel_eval(params, x, y)?;
    let q = taylor_eval(params, x, &geom.center, y, order - 1)?;
    Ok(Some((k - q).abs() / rhs))
}

/// Fits `C` in `|k(x,y) - q_N(x,y)| <= C |y-z|^N |x - A_k z|^{-n(1-r)-N}` on
/// `samples` random far pairs.
pub fn fit_remainder_constant(
    params: &KernelParams,
    geom: &AtomGeometry,
    order: usize,
    samples: usize,
    seed: u64,
) -> Result<RemainderFit, KernelError> {
    if order == 0 {
        return Err(KernelError::OrderTooHigh { order, max: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let (x, y, k) = sample_far_pair(params, geom, &mut rng);
        if let Some(ratio) = remainder_ratio(params, geom, &x, &y, order, k)? {
            max_ratio = max_ratio.max(ratio);
        }
    }
    Ok(RemainderFit {
        constant: REMAINDER_MARGIN * max_ratio,
        max_ratio,
        margin: REMAINDER_MARGIN,
        samples,
        order,
    })
}

/// Counts samples violating the fitted remainder bound.
pub fn remainder_violations(
    params: &KernelParams,
    geom: &AtomGeometry,
    fit: &RemainderFit,
    samples: usize,
    seed: u64,
) -> Result<usize, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..samples {
        let (x, y, k) = sample_far_pair(params, geom, &mut rng);
        if let Some(ratio) = remainder_ratio(params, geom, &x, &y, fit.order, k)? {
            if ratio > fit.constant {
                violations += 1;
            }
        }
    }
    Ok(violations)
}
