use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::atoms::{unit_ball_volume, Atom};
use crate::dense::{norm, Mat};
use crate::kernelops::{estimate_d, fit_remainder_constant, AtomGeometry, KernelParams, MAX_DERIVATIVE_ORDER};
use crate::quadrature::{adaptive_integrate_cells, IntegrationBox, QuadOptions, SingularSet};
use crate::Exec;

use super::apply::integrate_kernel;
use super::OplabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Relative tolerance for each dyadic shell of the near region.
    pub tol: f64,
    /// Tolerance of each pointwise `T_r a(x)`, relative to `int |k a|`.
    pub inner_tol: f64,
    /// Evaluation budget per shell; every outer node is one inner integral.
    pub outer_evals: usize,
    pub inner_evals: usize,
    /// Samples for the far-field remainder constant.
    pub fit_samples: usize,
    pub fit_seed: u64,
    pub exec: Exec,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            inner_tol: 1e-5,
            outer_evals: 60_000,
            inner_evals: 1_000_000,
            fit_samples: 500,
            fit_seed: 0x5eed,
            exec: Exec::Parallel,
        }
    }
}

impl NormOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.inner_tol = (tol * 1e-2).max(1e-10);
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// `||T_r a||_q` split into a quadrature part over `[-R, R]^n` and an analytic
/// bound for `|x| > R`. The cube contains the ball, so `total_upper` is an
/// upper bound for the full norm up to quadrature error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub q: f64,
    pub near_value: f64,
    /// Error estimate of `near_value`.
    pub near_error: f64,
    pub tail_bound: f64,
    pub total_upper: f64,
    /// Achieved relative tolerance of `near_value`.
    pub tol: f64,
    pub r_max: f64,
    pub c_fit: f64,
    pub shells: usize,
    pub outer_evals: usize,
    /// Pointwise or shell integrals that missed their tolerance.
    pub flagged: usize,
}

impl NormEstimate {
    pub fn is_flagged(&self) -> bool {
        self.flagged > 0
    }
}

/// `1/q = 1/p - r`.
pub fn critical_q(p: f64, r: f64) -> Result<f64, OplabError> {
    let inv = 1.0 / p - r;
    if !(p > 0.0 && inv > 0.0) {
        return Err(OplabError::Unsupported(format!("p = {p} must lie in (0, 1/r) for r = {r}")));
    }
    Ok(1.0 / inv)
}

/// `||T_r a||_q` at the index `q = (1/p - r)^{-1}` of the atom's `p`.
pub fn lq_norm_tr_atom(
    params: &KernelParams,
    atom: &Atom,
    q: f64,
    opts: &NormOptions,
) -> Result<NormEstimate, OplabError> {
    let expected = critical_q(atom.spec.p, params.r())?;
    if (1.0 / q - 1.0 / expected).abs() > 1e-9 {
        return Err(OplabError::Unsupported(format!(
            "q = {q} is not the critical index {expected} for p = {}, r = {}; use lq_norm_tr",
            atom.spec.p,
            params.r()
        )));
    }
    lq_norm_tr(params, atom, q, opts)
}

/// `||T_r a||_q` for any `q` satisfying the tail condition `q (n(1-r) + N) > n`.
pub fn lq_norm_tr(params: &KernelParams, atom: &Atom, q: f64, opts: &NormOptions) -> Result<NormEstimate, OplabError> {
    let n = params.n();
    if atom.n() != n {
        return Err(OplabError::Dimension { expected: n, got: atom.n() });
    }
    if !atom.projected {
        return Err(OplabError::Unsupported(
            "the far-field bound needs vanishing moments; profile was not projected".into(),
        ));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(OplabError::Unsupported(format!("q = {q} must be at least 1")));
    }
    let order = atom.spec.order();
    if order > MAX_DERIVATIVE_ORDER {
        return Err(OplabError::Unsupported(format!(
            "N = {order} exceeds the jet order {MAX_DERIVATIVE_ORDER}"
        )));
    }
    let decay = n as f64 * (1.0 - params.r()) + order as f64;
    if q * decay <= n as f64 {
        return Err(OplabError::Unsupported(format!(
            "tail diverges: q (n(1-r) + N) = {} <= n = {n}",
            q * decay
        )));
    }
    let delta = atom.radius();
    let d = estimate_d(params.family());
    let geom = AtomGeometry::new(atom.center().to_vec(), delta, d);
    let fit = fit_remainder_constant(params, &geom, order, opts.fit_samples, opts.fit_seed)?;
    let spread = geom.images(params).iter().map(|p| norm(p)).fold(0.0, f64::max);
    let r_max = (8.0 * d * delta + spread).max(2.0);

    let shells = cube_shells(n, r_max, spread + d * delta);
    let kinks = kink_sets(params);
    let inner = QuadOptions::rel(0.0)
        .with_l1_rel_tol(opts.inner_tol)
        .with_max_evals(opts.inner_evals);
    let inner_flags = AtomicUsize::new(0);
    let kernel = params.kernel();
    let support = atom.support_box();
    let integrand = |x: &[f64]| {
        let res = integrate_kernel(kernel, atom, &support, x, &inner);
        if res.flagged() {
            inner_flags.fetch_add(1, Ordering::Relaxed);
        }
        res.value.abs().powf(q)
    };
    let outer = QuadOptions::rel(opts.tol)
        .with_max_evals(opts.outer_evals)
        .with_exec(opts.exec);
    let results = opts.exec.map(&shells, |cells| adaptive_integrate_cells(&integrand, cells, &outer, &kinks));

    let mut sum = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    let mut flagged = inner_flags.load(Ordering::Relaxed);
    for r in &results {
        sum += r.value;
        err += r.error_estimate;
        evals += r.evals;
        flagged += usize::from(r.flagged());
    }
    let near_value = sum.powf(1.0 / q);

    let scale = fit.constant * delta.powi(order as i32) * atom.lp_norm(1.0);
    let omega = n as f64 * unit_ball_volume(n);
    let gap = r_max - spread;
    let tail_q = scale.powf(q) * omega * (r_max / gap).powi(n as i32 - 1) * gap.powf(n as f64 - decay * q)
        / (decay * q - n as f64);
    let tail_bound = tail_q.powf(1.0 / q);
    Ok(NormEstimate {
        q,
        near_value,
        near_error: err,
        tail_bound,
        total_upper: (sum + tail_q).powf(1.0 / q),
        tol: if sum > 0.0 { err / sum / q } else { 0.0 },
        r_max,
        c_fit: fit.constant,
        shells: shells.len(),
        outer_evals: evals,
        flagged,
    })
}

/// `[-R, R]^n` as a central cube of half-width `>= core` (halved down from
/// `R`) and dyadic cube shells, each split into `4^n - 2^n` boxes.
fn cube_shells(n: usize, r_max: f64, core: f64) -> Vec<Vec<IntegrationBox>> {
    let mut halves = vec![r_max];
    while halves.last().unwrap() / 2.0 >= core.max(1e-300) && halves.len() < 60 {
        let h = halves.last().unwrap() / 2.0;
        halves.push(h);
    }
    let h0 = *halves.last().unwrap();
    let mut out = Vec::new();
    // central cube split at the origin
    let origin = vec![0.0; n];
    out.push(grid_boxes(n, &origin, h0, 2, None));
    for &h in halves.iter().rev().skip(1) {
        out.push(grid_boxes(n, &origin, h, 4, Some(1..3)));
    }
    out
}

/// Splits `[c - h, c + h]^n` into `k^n` boxes, dropping those whose every
/// index lies in `hole`.
fn grid_boxes(n: usize, c: &[f64], h: f64, k: usize, hole: Option<std::ops::Range<usize>>) -> Vec<IntegrationBox> {
    let side = 2.0 * h / k as f64;
    let mut out = Vec::new();
    for idx in 0..k.pow(n as u32) {
        let digits: Vec<usize> = (0..n).map(|i| (idx / k.pow(i as u32)) % k).collect();
        if let Some(hole) = &hole {
            if digits.iter().all(|d| hole.contains(d)) {
                continue;
            }
        }
        let lower: Vec<f64> = digits.iter().zip(c).map(|(&d, ci)| ci - h + side * d as f64).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + side).collect();
        out.push(IntegrationBox::new(lower, upper).expect("positive side"));
    }
    out
}

/// `T_r a` has a `|dist|^{n_i r}` kink across `range(A_i)`; passed to the
/// outer quadrature when that range is a hyperplane.
fn kink_sets(params: &KernelParams) -> Vec<SingularSet> {
    let n = params.n();
    params
        .matrices()
        .iter()
        .zip(params.partition())
        .filter(|(_, &k)| k + 1 == n)
        .filter_map(|(a, &k)| {
            let m = DMatrix::from_row_slice(n, n, a.data());
            let svd = m.svd(true, false);
            let u = svd.u?;
            let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
            let j = svd.singular_values.iter().position(|&s| s <= 1e-12 * smax)?;
            let normal: Vec<f64> = u.column(j).iter().copied().collect();
            Some(SingularSet::affine(&Mat::new(1, n, normal), &[0.0], -(k as f64) * params.r()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shells_tile_the_cube() {
        for n in 1..=3 {
            let shells = cube_shells(n, 8.0, 0.7);
            let vol: f64 = shells.iter().flatten().map(IntegrationBox::volume).sum();
            assert!((vol - 16f64.powi(n as i32)).abs() < 1e-9);
            // halves 8, 4, 2, 1; 1 >= 0.7 > 0.5
            assert_eq!(shells.len(), 4);
        }
    }

    #[test]
    fn critical_index() {
        assert_eq!(critical_q(1.0, 0.5).unwrap(), 2.0);
        assert!((critical_q(0.75, 0.25).unwrap() - 1.0 / (4.0 / 3.0 - 0.25)).abs() < 1e-15);
        assert!(critical_q(3.0, 0.5).is_err());
    }
}
