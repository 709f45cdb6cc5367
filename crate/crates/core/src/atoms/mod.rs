//! p-atoms: bounded profiles on a ball with vanishing low-order moments.
//!
//! Profiles are `P(u) (1 - |u|^2)^3` with `u = (y - z) / delta`. The random
//! polynomial `P` of degree `N + 2` is projected, in the bump-weighted inner
//! product, off the monomials of degree `<= N - 1`, which makes every moment
//! of that order vanish. Gram entries are closed-form Gamma products.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::quadrature::{BallRule, IntegrationBox};

/// Power of the radial bump `(1 - |u|^2)^k`; `k = 3` makes the profile C².
pub const BUMP_POWER: i32 = 3;

/// Largest `N` supported (the kernel jets stop at order 3).
pub const MAX_ORDER: usize = 3;

const MAX_RETRIES: u64 = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AtomError {
    #[error("p = {0} must lie in (0, 1]")]
    InvalidP(f64),
    #[error("radius {0} must be positive and finite")]
    InvalidRadius(f64),
    #[error("center has {got} coordinates, dimension is {n}")]
    CenterDimension { n: usize, got: usize },
    #[error("dimension {0} is outside 1..=4")]
    Dimension(usize),
    #[error("moment order N = {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("profile vanished after projection for seed {seed} and {tries} retries")]
    Degenerate { seed: u64, tries: u64 },
    #[error("dilation is about the origin only; atom is centered at {0:?}")]
    NotOriginCentered(Vec<f64>),
    #[error("dilation factor {0} must be positive and finite")]
    InvalidDilation(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub n: usize,
    pub p: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub seed: u64,
}

impl AtomSpec {
    pub fn new(n: usize, p: f64, center: Vec<f64>, radius: f64, seed: u64) -> Result<Self, AtomError> {
        let spec = Self {
            n,
            p,
            center,
            radius,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), AtomError> {
        if !(1..=4).contains(&self.n) {
            return Err(AtomError::Dimension(self.n));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(AtomError::InvalidP(self.p));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(AtomError::InvalidRadius(self.radius));
        }
        if self.center.len() != self.n {
            return Err(AtomError::CenterDimension {
                n: self.n,
                got: self.center.len(),
            });
        }
        if self.order() > MAX_ORDER {
            return Err(AtomError::OrderTooHigh {
                order: self.order(),
                max: MAX_ORDER,
            });
        }
        Ok(())
    }

    /// `N - 1 = floor(n (1/p - 1))`, snapped so that e.g. `p = 3/4, n = 3` gives 1.
    pub fn moment_degree(&self) -> usize {
        moment_degree(self.n, self.p)
    }

    /// `N`, the first order whose moments need not vanish.
    pub fn order(&self) -> usize {
        self.moment_degree() + 1
    }

    /// `|B(z, delta)|`.
    pub fn ball_volume(&self) -> f64 {
        unit_ball_volume(self.n) * self.radius.powi(self.n as i32)
    }

    /// `|B|^{-1/p}`, the sup bound required of a p-atom.
    pub fn sup_limit(&self) -> f64 {
        self.ball_volume().powf(-1.0 / self.p)
    }
}

pub fn moment_degree(n: usize, p: f64) -> usize {
    (n as f64 * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize
}

pub fn unit_ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n as u32 + 2)
}

/// `Gamma(m / 2)` for a positive integer `m`.
pub fn gamma_half(m: u32) -> f64 {
    assert!(m > 0);
    let (mut g, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `int_{|u|<1} u^gamma (1 - |u|^2)^k du`.
pub fn ball_moment(gamma: &[u32], k: u32) -> f64 {
    if gamma.iter().any(|g| g % 2 == 1) {
        return 0.0;
    }
    let n = gamma.len() as u32;
    let total: u32 = gamma.iter().sum();
    let num: f64 = gamma.iter().map(|&g| gamma_half(g + 1)).product::<f64>() * gamma_half(2 * k + 2);
    num / gamma_half(total + n + 2 * k + 2)
}

/// Multi-indices of total degree `<= max_degree`, graded.
pub fn monomials(n: usize, max_degree: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=left).rev() {
            prefix.push(first);
            rec(n, left - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=max_degree as u32 {
        rec(n, d, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub spec: AtomSpec,
    /// Monomial exponents of `P` in the local variable `u`.
    pub exponents: Vec<Vec<u32>>,
    /// Coefficients of `P`, including the normalization.
    pub coefficients: Vec<f64>,
    /// Certified bound on `sup |a|`.
    pub sup_bound: f64,
    /// False for the negative-control profile built without moment projection.
    pub projected: bool,
}

impl Atom {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn center(&self) -> &[f64] {
        &self.spec.center
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    pub fn polynomial_degree(&self) -> usize {
        self.exponents.iter().map(|e| e.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    /// `P(u)` without the bump.
    pub fn polynomial(&self, u: &[f64]) -> f64 {
        let deg = self.polynomial_degree() + 1;
        let mut powers = [[1.0; 8]; 4];
        for (i, &ui) in u.iter().enumerate() {
            for k in 1..deg.min(8) {
                powers[i][k] = powers[i][k - 1] * ui;
            }
        }
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, c)| c * e.iter().enumerate().map(|(i, &k)| powers[i][k as usize]).product::<f64>())
            .sum()
    }

    /// Profile in local coordinates, zero outside the unit ball.
    pub fn profile(&self, u: &[f64]) -> f64 {
        let r2: f64 = u.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return 0.0;
        }
        self.polynomial(u) * (1.0 - r2).powi(BUMP_POWER)
    }

    /// Profile and its gradient in local coordinates.
    pub fn profile_with_gradient(&self, u: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n();
        let r2: f64 = u.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return (0.0, vec![0.0; n]);
        }
        let mut p = 0.0;
        let mut dp = vec![0.0; n];
        for (e, c) in self.exponents.iter().zip(&self.coefficients) {
            p += c * u.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product::<f64>();
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let term: f64 = (0..n)
                    .map(|j| if j == i { e[j] as f64 * u[j].powi(e[j] as i32 - 1) } else { u[j].powi(e[j] as i32) })
                    .product();
                dp[i] += c * term;
            }
        }
        let s = 1.0 - r2;
        let w = s.powi(BUMP_POWER);
        let dw = -2.0 * BUMP_POWER as f64 * s.powi(BUMP_POWER - 1);
        let grad = (0..n).map(|i| w * dp[i] + p * dw * u[i]).collect();
        (p * w, grad)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut u = [0.0; 4];
        for (i, (yi, zi)) in y.iter().zip(&self.spec.center).enumerate() {
            u[i] = (yi - zi) / self.spec.radius;
        }
        self.profile(&u[..self.n()])
    }

    /// Bounding box of the support ball.
    pub fn support_box(&self) -> IntegrationBox {
        IntegrationBox::cube(&self.spec.center, self.spec.radius).expect("positive radius")
    }

    /// `int |a|^q` to the power `1/q`, by the fixed ball rule.
    pub fn lp_norm(&self, q: f64) -> f64 {
        let rule = BallRule::standard(self.n());
        rule.integrate(|y| self.eval(y).abs().powf(q), &self.spec.center, self.spec.radius)
            .powf(1.0 / q)
    }

    /// Natural size of the `beta` moment: `|B|^{-1/p} delta^{n + |beta|}`.
    pub fn moment_scale(&self, beta: &[u32]) -> f64 {
        let k: u32 = beta.iter().sum();
        self.spec.sup_limit() * self.spec.radius.powi(self.n() as i32 + k as i32)
    }
}

/// Builds a p-atom; deterministic in `spec.seed`.
pub fn build_atom(spec: &AtomSpec) -> Result<Atom, AtomError> {
    build(spec, true)
}

/// The same random profile without the moment projection: a bounded bump
/// whose mean is generically nonzero.
pub fn build_unprojected(spec: &AtomSpec) -> Result<Atom, AtomError> {
    build(spec, false)
}

fn build(spec: &AtomSpec, project: bool) -> Result<Atom, AtomError> {
    spec.validate()?;
    let n = spec.n;
    let order = spec.order();
    let exponents = monomials(n, order + 2);
    let low = monomials(n, order - 1).len();
    for attempt in 0..MAX_RETRIES {
        let seed = spec.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<f64> = exponents.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let before: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if project {
            project_low_moments(&exponents, &mut coeffs, low);
        }
        let after: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if after <= 1e-8 * before {
            continue;
        }
        let mut atom = Atom {
            spec: spec.clone(),
            exponents: exponents.clone(),
            coefficients: coeffs,
            sup_bound: 0.0,
            projected: project,
        };
        let bound = certify_unit_sup(&atom);
        let target = 0.5 * spec.sup_limit();
        let scale = target / bound;
        for c in atom.coefficients.iter_mut() {
            *c *= scale;
        }
        atom.sup_bound = target;
        return Ok(atom);
    }
    Err(AtomError::Degenerate {
        seed: spec.seed,
        tries: MAX_RETRIES,
    })
}

/// Subtracts the weighted least-squares fit by the first `low` monomials.
fn project_low_moments(exponents: &[Vec<u32>], coeffs: &mut [f64], low: usize) {
    let k = BUMP_POWER as u32;
    let sum = |a: &[u32], b: &[u32]| -> Vec<u32> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let gram = DMatrix::from_fn(low, low, |i, j| ball_moment(&sum(&exponents[i], &exponents[j]), k));
    let rhs = DVector::from_fn(low, |i, _| {
        exponents
            .iter()
            .zip(coeffs.iter())
            .map(|(e, c)| c * ball_moment(&sum(&exponents[i], e), k))
            .sum()
    });
    let d = gram.cholesky().expect("monomial Gram matrix is positive definite").solve(&rhs);
    for (c, di) in coeffs.iter_mut().zip(d.iter()) {
        *c -= di;
    }
}

/// Branch and bound stops once the certificate is within this factor of the
/// best sampled value.
const CERT_SLACK: f64 = 1.01;
const CERT_MAX_CUBES: usize = 400_000;

struct Cube {
    upper: f64,
    center: Vec<f64>,
    half: f64,
}

impl PartialEq for Cube {
    fn eq(&self, other: &Self) -> bool {
        self.upper.total_cmp(&other.upper).is_eq()
    }
}
impl Eq for Cube {}
impl PartialOrd for Cube {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cube {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Certified bound on `sup_{|u|<1} |P(u) (1 - |u|^2)^3|`.
///
/// Branch and bound over cubes covering `[-1, 1]^n`. On a cube of
/// half-diagonal `h` around `c`, `|f| <= |f(c)| + |grad f(c)| h + H h^2 / 2`
/// with `H` an interval bound on the Hessian over the cube, and also
/// `|f| <= max|P| max w`. The truncated profile is C², so both hold across
/// the sphere.
pub fn certify_unit_sup(atom: &Atom) -> f64 {
    let n = atom.n();
    let root_n = (n as f64).sqrt();
    let mut best: f64 = 0.0;
    let make = |center: Vec<f64>, half: f64, best: &mut f64| -> Cube {
        let (value, grad) = atom.profile_with_gradient(&center);
        *best = best.max(value.abs());
        let h = half * root_n;
        let upper = match CubeBounds::new(atom, &center, half) {
            None => 0.0,
            Some(b) => {
                let gn: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                (value.abs() + gn * h + 0.5 * b.hessian * h * h).min(b.value)
            }
        };
        Cube { upper, center, half }
    };
    let per_axis = 4usize;
    let half0 = 1.0 / per_axis as f64;
    let mut heap = std::collections::BinaryHeap::new();
    for idx in 0..per_axis.pow(n as u32) {
        let center: Vec<f64> = (0..n)
            .map(|i| -1.0 + half0 * (2 * ((idx / per_axis.pow(i as u32)) % per_axis) + 1) as f64)
            .collect();
        heap.push(make(center, half0, &mut best));
    }
    let mut cubes = heap.len();
    while let Some(top) = heap.pop() {
        if top.upper <= CERT_SLACK * best || cubes >= CERT_MAX_CUBES {
            return top.upper.max(best);
        }
        let half = top.half / 2.0;
        for corner in 0..1usize << n {
            let center: Vec<f64> = top
                .center
                .iter()
                .enumerate()
                .map(|(i, c)| if corner >> i & 1 == 1 { c + half } else { c - half })
                .collect();
            heap.push(make(center, half, &mut best));
            cubes += 1;
        }
    }
    best
}

/// Interval bounds for the profile on one cube.
struct CubeBounds {
    value: f64,
    hessian: f64,
}

impl CubeBounds {
    /// `None` when the cube misses the open unit ball.
    fn new(atom: &Atom, center: &[f64], half: f64) -> Option<Self> {
        let n = atom.n();
        let mut m = [0.0f64; 4];
        let mut r2_min = 0.0;
        for i in 0..n {
            let (lo, hi) = (center[i] - half, center[i] + half);
            m[i] = lo.abs().max(hi.abs()).min(1.0);
            let near = if lo > 0.0 { lo } else if hi < 0.0 { -hi } else { 0.0 };
            r2_min += near * near;
        }
        if r2_min >= 1.0 {
            return None;
        }
        let s = 1.0 - r2_min;
        let mono = |e: &[u32], skip: &[usize]| -> f64 {
            let mut prod = 1.0;
            for i in 0..n {
                let k = e[i] as i32 - skip.iter().filter(|&&j| j == i).count() as i32;
                prod *= m[i].powi(k);
            }
            prod
        };
        let mut p0 = 0.0;
        let mut p1 = [0.0; 4];
        let mut p2 = [[0.0; 4]; 4];
        for (e, c) in atom.exponents.iter().zip(&atom.coefficients) {
            let c = c.abs();
            p0 += c * mono(e, &[]);
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                p1[i] += c * e[i] as f64 * mono(e, &[i]);
                for j in 0..n {
                    let fall = if i == j { e[i] - 1 } else { e[j] };
                    if fall > 0 {
                        p2[i][j] += c * e[i] as f64 * fall as f64 * mono(e, &[i, j]);
                    }
                }
            }
        }
        let w = s.powi(BUMP_POWER);
        let dw = |i: usize| 6.0 * m[i] * s * s;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let ddw = 24.0 * m[i] * m[j] * s + if i == j { 6.0 * s * s } else { 0.0 };
                let b = w * p2[i][j] + p1[i] * dw(j) + p1[j] * dw(i) + p0 * ddw;
                sum += b * b;
            }
        }
        Some(Self {
            value: p0 * w,
            hessian: sum.sqrt(),
        })
    }
}

/// `int y^beta a(y) dy` over the support ball.
pub fn moment_check(atom: &Atom, beta: &[u32]) -> f64 {
    let rule = BallRule::standard(atom.n());
    rule.integrate(
        |y| {
            let mono: f64 = y.iter().zip(beta).map(|(v, &k)| v.powi(k as i32)).product();
            mono * atom.eval(y)
        },
        atom.center(),
        atom.radius(),
    )
}

/// `int (y - z)^beta a(y) dy`, the moment about the atom's own center.
pub fn central_moment(atom: &Atom, beta: &[u32]) -> f64 {
    let rule = BallRule::standard(atom.n());
    let z = atom.center();
    rule.integrate(
        |y| {
            let mono: f64 = y.iter().zip(z).zip(beta).map(|((v, c), &k)| (v - c).powi(k as i32)).product();
            mono * atom.eval(y)
        },
        z,
        atom.radius(),
    )
}

/// `a_t(y) = t^{n/p} a(t y)` for an origin-centered atom.
pub fn dilate_atom(atom: &Atom, t: f64) -> Result<Atom, AtomError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(AtomError::InvalidDilation(t));
    }
    if atom.center().iter().any(|&c| c != 0.0) {
        return Err(AtomError::NotOriginCentered(atom.center().to_vec()));
    }
    if t == 1.0 {
        return Ok(atom.clone());
    }
    let factor = t.powf(atom.n() as f64 / atom.spec.p);
    let mut out = atom.clone();
    out.spec.radius = atom.radius() / t;
    for c in out.coefficients.iter_mut() {
        *c *= factor;
    }
    out.sup_bound = atom.sup_bound * factor;
    Ok(out)
}
