//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A jet of order `N` in `d` variables stores the Taylor coefficients
//! `c_beta` for every multi-index `|beta| <= N`; products are truncated at
//! total degree `N`. Partial derivatives are `beta! * c_beta`.

use std::sync::OnceLock;

/// Largest supported dimension and order for cached spaces.
const MAX_VARS: usize = 4;
const MAX_ORDER: usize = 3;

/// Index bookkeeping for jets of a fixed `(nvars, order)`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exponents: Vec<Vec<u32>>,
    /// `(i, j, k)` with `exponents[i] + exponents[j] = exponents[k]`.
    products: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> Self {
        let mut exponents = Vec::new();
        for degree in 0..=order {
            compositions(nvars, degree as u32, &mut Vec::new(), &mut exponents);
        }
        let mut products = Vec::new();
        for (i, a) in exponents.iter().enumerate() {
            for (j, b) in exponents.iter().enumerate() {
                let sum: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(k) = exponents.iter().position(|e| *e == sum) {
                    products.push((i, j, k));
                }
            }
        }
        Self {
            nvars,
            order,
            exponents,
            products,
        }
    }

    /// Shared instance for small spaces; builds a fresh one otherwise.
    pub fn cached(nvars: usize, order: usize) -> &'static JetSpace {
        static CACHE: [[OnceLock<JetSpace>; MAX_ORDER + 1]; MAX_VARS + 1] =
            [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; MAX_VARS + 1];
        assert!(nvars <= MAX_VARS && order <= MAX_ORDER, "jet space too large");
        CACHE[nvars][order].get_or_init(|| JetSpace::new(nvars, order))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Multi-indices in graded order.
    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn index(&self, beta: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|e| e.as_slice() == beta)
    }

    pub fn constant(&self, c: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        v[0] = c;
        v
    }

    pub fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &(i, j, k) in &self.products {
            out[k] += a[i] * b[j];
        }
        out
    }

    /// `g(u) = u^gamma` composed with the jet `u`, whose constant term must be positive.
    pub fn powf(&self, u: &[f64], gamma: f64) -> Vec<f64> {
        let u0 = u[0];
        let mut delta = u.to_vec();
        delta[0] = 0.0;
        let mut out = self.constant(u0.powf(gamma));
        let mut power = self.constant(1.0);
        // coefficient binom(gamma, k) * u0^(gamma - k)
        let mut coeff = u0.powf(gamma);
        for k in 1..=self.order {
            power = self.mul(&power, &delta);
            coeff *= (gamma - (k as f64 - 1.0)) / (k as f64 * u0);
            for (o, p) in out.iter_mut().zip(&power) {
                *o += coeff * p;
            }
        }
        out
    }

    /// Evaluates the polynomial `sum c_beta h^beta`, truncated at `degree`.
    pub fn eval(&self, coeffs: &[f64], h: &[f64], degree: usize) -> f64 {
        self.exponents
            .iter()
            .zip(coeffs)
            .filter(|(e, _)| e.iter().sum::<u32>() as usize <= degree)
            .map(|(e, c)| c * e.iter().zip(h).map(|(&k, x)| x.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// `beta!` for each multi-index.
    pub fn factorials(&self) -> Vec<f64> {
        self.exponents
            .iter()
            .map(|e| e.iter().map(|&k| (1..=k).product::<u32>() as f64).product())
            .collect()
    }
}

fn compositions(parts: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if total == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(parts - 1, total - first, prefix, out);
        prefix.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_enumeration() {
        let s = JetSpace::new(2, 2);
        assert_eq!(
            s.exponents(),
            &[vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(JetSpace::new(3, 3).len(), 20);
        assert_eq!(JetSpace::new(4, 3).len(), 35);
    }

    #[test]
    fn one_dimensional_power_series() {
        // (1 + h)^(-1/2) = 1 - h/2 + 3h^2/8 - 5h^3/16
        let s = JetSpace::new(1, 3);
        let u = vec![1.0, 1.0, 0.0, 0.0];
        let p = s.powf(&u, -0.5);
        let want = [1.0, -0.5, 0.375, -0.3125];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn product_truncates() {
        let s = JetSpace::new(2, 1);
        let x = vec![0.0, 1.0, 0.0];
        let y = vec![0.0, 0.0, 1.0];
        assert_eq!(s.mul(&x, &y), vec![0.0; 3]);
    }
}
