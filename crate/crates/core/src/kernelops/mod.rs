//! Pointwise kernel machinery for `T_r`.
//!
//! `k(x, y) = prod_i |x - A_i y|^{e_i}` with `e_i = -n_i (1 - r)`. Derivatives
//! in `y` come from jet arithmetic on the closed-form factors rather than
//! finite differences.

mod geometry;
pub mod jet;
mod params;

pub use geometry::{
    classify_region, estimate_d, fit_remainder_constant, geometric_comparability_check,
    lower_frame_constant, remainder_ratio, remainder_rhs, remainder_rhs_value,
    remainder_violations, sample_far_pair, tensor_domination_check, tensor_kernel, AtomGeometry,
    RegionLabel, RemainderFit, REMAINDER_MARGIN,
};
pub use params::{KernelParams, ProductKernel, MAX_DERIVATIVE_ORDER};

use jet::JetSpace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("r = {0} must lie in (0, 1)")]
    InvalidR(f64),
    #[error("evaluation point lies on the singular set of factor {factor}")]
    Singular { factor: usize },
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("region precondition violated: {0}")]
    RegionPrecondition(String),
    #[error("family is not the canonical projection family")]
    NotCanonical,
}

pub fn kernel_eval(params: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    params.kernel().eval(x, y)
}

/// All `y`-partials of `k(x, .)` at `y = z` up to total order `order`.
#[derive(Clone, Debug)]
pub struct DerivativeTower {
    space: &'static JetSpace,
    taylor: Vec<f64>,
}

impl DerivativeTower {
    pub fn order(&self) -> usize {
        self.space.order()
    }

    /// Taylor coefficients in the graded multi-index order of [`Self::multi_indices`].
    pub fn taylor_coefficients(&self) -> &[f64] {
        &self.taylor
    }

    pub fn multi_indices(&self) -> &[Vec<u32>] {
        self.space.exponents()
    }

    pub fn value(&self) -> f64 {
        self.taylor[0]
    }

    /// `d^beta k / dy^beta`, or `None` when `|beta|` exceeds the order.
    pub fn partial(&self, beta: &[u32]) -> Option<f64> {
        let i = self.space.index(beta)?;
        let fact: u32 = beta.iter().map(|&k| (1..=k).product::<u32>()).product();
        Some(self.taylor[i] * fact as f64)
    }

    pub fn gradient(&self) -> Vec<f64> {
        let n = self.space.nvars();
        (0..n)
            .map(|k| {
                let mut e = vec![0; n];
                e[k] = 1;
                self.partial(&e).unwrap_or(0.0)
            })
            .collect()
    }
}

pub fn kernel_derivatives(
    params: &KernelParams,
    x: &[f64],
    z: &[f64],
    order: usize,
) -> Result<DerivativeTower, KernelError> {
    let taylor = params.kernel().jet(x, z, order)?;
    Ok(DerivativeTower {
        space: JetSpace::cached(params.n(), order),
        taylor,
    })
}

/// Degree-`degree` Taylor polynomial of `y -> k(x, y)` around `z`, evaluated at `y`.
pub fn taylor_eval(
    params: &KernelParams,
    x: &[f64],
    z: &[f64],
    y: &[f64],
    degree: usize,
) -> Result<f64, KernelError> {
    let tower = kernel_derivatives(params, x, z, degree)?;
    let h: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
    Ok(tower.space.eval(&tower.taylor, &h, degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::FamilySpec;

    fn canonical2() -> KernelParams {
        KernelParams::new(FamilySpec::canonical(&[1, 1]), 0.5).unwrap()
    }

    #[test]
    fn unit_distance_example() {
        let p = canonical2();
        assert!((kernel_eval(&p, &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_distance_example() {
        // |(1,0)|^{-1/2} * |(2,-1)|^{-1/2} = 5^{-1/4}
        let p = canonical2();
        let v = kernel_eval(&p, &[2.0, 0.0], &[1.0, 1.0]).unwrap();
        let want = 5f64.powf(-0.25);
        assert!((v - want).abs() < 1e-15, "{v} vs {want}");
        assert!((v - 0.668740).abs() < 5e-7);
    }

    #[test]
    fn singular_point_is_tagged() {
        let p = KernelParams::new(FamilySpec::paper_example(), 0.5).unwrap();
        let y = [1.0, 0.5, 2.0];
        let x = p.matrices()[0].mul_vec(&y);
        assert_eq!(kernel_eval(&p, &x, &y), Err(KernelError::Singular { factor: 0 }));
        assert!(kernel_derivatives(&p, &x, &y, 1).is_err());
    }

    #[test]
    fn rejects_bad_r_and_order() {
        assert_eq!(
            KernelParams::new(FamilySpec::canonical(&[1, 1]), 1.0).unwrap_err(),
            KernelError::InvalidR(1.0)
        );
        let p = canonical2();
        assert!(matches!(
            kernel_derivatives(&p, &[3.0, 1.0], &[0.0, 0.0], 4),
            Err(KernelError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn exponent_identity() {
        for (partition, r) in [(vec![1, 1], 0.25), (vec![2, 1], 0.5), (vec![1, 2, 1], 0.75)] {
            let p = KernelParams::new(FamilySpec::canonical(&partition), r).unwrap();
            assert!((p.total_exponent() - p.homogeneity_degree()).abs() < 1e-14);
            let beta_sum: f64 = p.betas().iter().sum();
            assert!((beta_sum - (p.n() as f64 - p.beta())).abs() < 1e-14);
            for (a, &k) in p.alphas().iter().zip(p.partition()) {
                assert_eq!(a / k as f64, r);
            }
        }
    }

    #[test]
    fn region_labels() {
        let p = KernelParams::new(FamilySpec::canonical(&[1, 1, 1]), 0.5).unwrap();
        let geom = AtomGeometry::new(vec![0.0; 3], 1.0, 1.0);
        assert_eq!(classify_region(&geom, &p, &[0.0, 0.0, 0.0]), RegionLabel::Near(0));
        assert_eq!(classify_region(&geom, &p, &[10.0, 0.0, 0.0]), RegionLabel::Far(0));

        let geom = AtomGeometry::new(vec![1.0, 2.0, 3.0], 0.1, 1.0);
        // images are (1,0,0), (0,2,0), (0,0,3); the point below is closest to the second
        assert_eq!(classify_region(&geom, &p, &[0.0, 9.0, 0.0]), RegionLabel::Far(1));
        assert_eq!(classify_region(&geom, &p, &[0.0, 2.1, 0.0]), RegionLabel::Near(1));
    }

    #[test]
    fn remainder_rhs_contract() {
        let p = canonical2();
        let geom = AtomGeometry::new(vec![0.0, 0.0], 1.0, 1.0);
        assert_eq!(remainder_rhs(&p, &geom, &[10.0, 0.0], &[0.0, 0.0], 1, 0).unwrap(), 0.0);
        assert!(remainder_rhs(&p, &geom, &[1.0, 0.0], &[0.0, 0.0], 1, 0).is_err());
        assert!(remainder_rhs(&p, &geom, &[10.0, 0.0], &[2.0, 0.0], 1, 0).is_err());
        for order in 1..=3 {
            let a = remainder_rhs_value(&p, 0.5, 10.0, order);
            let b = remainder_rhs_value(&p, 0.5, 20.0, order);
            let expected = 2f64.powf(p.n() as f64 * (1.0 - p.r()) + order as f64);
            assert!((a / b - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn estimate_d_simple_cases() {
        assert!((estimate_d(&FamilySpec::canonical(&[1, 2])) - 1.0).abs() < 1e-9);
        let diag = crate::exactlin::RationalMatrix::from_i64_rows(&[&[3, 0], &[0, 0]]);
        let other = crate::exactlin::RationalMatrix::from_i64_rows(&[&[0, 0], &[0, 1]]);
        let fam = FamilySpec::new(vec![1, 1], vec![diag, other]).unwrap();
        assert!((estimate_d(&fam) - 3.0).abs() < 3e-9);
        assert!(estimate_d(&fam) >= 3.0);
    }
}
