use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{adaptive_integrate, GaussRule, IntegrationBox, QuadOptions, QuadResult, SingularSet};

/// Fixed product rule on the unit ball in hyperspherical coordinates:
/// Gauss–Legendre in the radius and the polar angles, trapezoid in the
/// azimuth. Exact to rounding for polynomial integrands of moderate degree.
#[derive(Clone, Debug)]
pub struct BallRule {
    n: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl BallRule {
    pub fn new(n: usize, radial: usize, polar: usize, azimuthal: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let dirs = sphere_rule(n, polar, azimuthal);
        for (r, wr) in GaussRule::cached(radial).on(0.0, 1.0) {
            let jac = r.powi(n as i32 - 1);
            for (u, wu) in &dirs {
                nodes.push(u.iter().map(|c| r * c).collect());
                weights.push(wr * jac * wu);
            }
        }
        Self { n, nodes, weights }
    }

    /// Default rule per dimension, shared.
    pub fn standard(n: usize) -> &'static BallRule {
        static CACHE: [OnceLock<BallRule>; 5] = [const { OnceLock::new() }; 5];
        assert!((1..=4).contains(&n));
        CACHE[n].get_or_init(|| match n {
            1 => BallRule::new(1, 40, 1, 1),
            2 => BallRule::new(2, 32, 1, 64),
            3 => BallRule::new(3, 24, 24, 48),
            _ => BallRule::new(4, 16, 16, 32),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int_{B(center, radius)} f`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64, center: &[f64], radius: f64) -> f64 {
        let mut y = vec![0.0; self.n];
        let scale = radius.powi(self.n as i32);
        let mut sum = 0.0;
        for (u, w) in self.nodes.iter().zip(&self.weights) {
            for ((yi, c), ui) in y.iter_mut().zip(center).zip(u) {
                *yi = c + radius * ui;
            }
            sum += w * f(&y);
        }
        sum * scale
    }
}

/// Directions and weights on `S^{n-1}`.
fn sphere_rule(n: usize, polar: usize, azimuthal: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)],
        2 => (0..azimuthal)
            .map(|j| {
                let th = 2.0 * PI * j as f64 / azimuthal as f64;
                (vec![th.cos(), th.sin()], 2.0 * PI / azimuthal as f64)
            })
            .collect(),
        _ => {
            // u = (cos phi, sin phi * v), v on S^{n-2}, weight sin^{n-2} phi
            let inner = sphere_rule(n - 1, polar, azimuthal);
            let mut out = Vec::new();
            for (phi, w) in GaussRule::cached(polar).on(0.0, PI) {
                let (s, c) = phi.sin_cos();
                let jac = s.powi(n as i32 - 2);
                for (v, wv) in &inner {
                    let mut u = Vec::with_capacity(n);
                    u.push(c);
                    u.extend(v.iter().map(|x| s * x));
                    out.push((u, w * jac * wv));
                }
            }
            out
        }
    }
}

/// Adaptive integral over `B(center, radius)` in hyperspherical coordinates.
///
/// `center_exponent = Some(s)` declares an `|y - center|^{-s}` singularity;
/// after the Jacobian `r^{n-1}` it becomes a power `r^{n-1-s}` at the `r = 0`
/// face, which the line rule grades toward.
pub fn integrate_ball<F>(
    f: &F,
    center: &[f64],
    radius: f64,
    opts: &QuadOptions,
    center_exponent: Option<f64>,
) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = center.len();
    if n == 1 {
        let bx = IntegrationBox::cube(center, radius).expect("positive radius");
        let sets: Vec<SingularSet> = center_exponent
            .map(|s| SingularSet::point(center, s))
            .into_iter()
            .collect();
        return adaptive_integrate(f, &bx, opts, &sets);
    }
    let mut lower = vec![0.0; n];
    let mut upper = vec![radius];
    upper.extend(std::iter::repeat_n(PI, n - 2));
    upper.push(2.0 * PI);
    lower[0] = 0.0;
    let bx = IntegrationBox::new(lower, upper).expect("valid polar box");
    let sets: Vec<SingularSet> = center_exponent
        .map(|s| s - (n as f64 - 1.0))
        .filter(|s| *s > 0.0)
        .map(|s| SingularSet::axis_plane(n, 0, 0.0, s))
        .into_iter()
        .collect();
    let polar = |p: &[f64]| {
        let r = p[0];
        let mut y = vec![0.0; n];
        let mut jac = r.powi(n as i32 - 1);
        let mut s = r;
        for k in 0..n - 2 {
            let (sn, cs) = p[k + 1].sin_cos();
            y[k] = center[k] + s * cs;
            s *= sn;
            jac *= sn.powi((n - 2 - k) as i32);
        }
        let th = p[n - 1];
        y[n - 2] = center[n - 2] + s * th.cos();
        y[n - 1] = center[n - 1] + s * th.sin();
        if jac == 0.0 {
            return 0.0;
        }
        jac * f(&y)
    };
    adaptive_integrate(&polar, &bx, opts, &sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_volume(n: usize) -> f64 {
        [2.0, PI, 4.0 * PI / 3.0, PI * PI / 2.0][n - 1]
    }

    #[test]
    fn volumes_and_second_moments() {
        for n in 1..=4 {
            let rule = BallRule::standard(n);
            let vol = rule.integrate(|_| 1.0, &vec![0.0; n], 1.0);
            assert!((vol - ball_volume(n)).abs() < 1e-12, "n={n}");
            // int |y|^2 over the unit ball = n |B| / (n + 2)
            let m2 = rule.integrate(|y| y.iter().map(|v| v * v).sum(), &vec![0.0; n], 1.0);
            assert!((m2 - n as f64 * ball_volume(n) / (n as f64 + 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_ball() {
        let rule = BallRule::standard(3);
        let v = rule.integrate(|y| y[2], &[1.0, 2.0, 3.0], 0.5);
        assert!((v - 3.0 * 4.0 * PI / 3.0 * 0.125).abs() < 1e-12);
    }
}
