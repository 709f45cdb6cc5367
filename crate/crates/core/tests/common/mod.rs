//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls the code paths it is used to check.
#![allow(dead_code)]

use fracop::dense::Mat;
use fracop::kernelops::KernelParams;

/// Direct product formula for the kernel, written out independently.
pub fn kernel_direct(params: &KernelParams, x: &[f64], y: &[f64]) -> f64 {
    params
        .matrices()
        .iter()
        .zip(params.exponents())
        .map(|(a, e)| {
            let d: f64 = (0..x.len())
                .map(|i| {
                    let ay: f64 = (0..y.len()).map(|j| a.get(i, j) * y[j]).sum();
                    (x[i] - ay).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            d.powf(*e)
        })
        .product()
}

/// Closed-form gradient: each factor contributes `-e |w|^{e-2} A^T w`.
pub fn gradient_closed_form(params: &KernelParams, x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let k = kernel_direct(params, x, y);
    let mut g = vec![0.0; n];
    for (a, e) in params.matrices().iter().zip(params.exponents()) {
        let w: Vec<f64> = (0..n)
            .map(|i| x[i] - (0..n).map(|j| a.get(i, j) * y[j]).sum::<f64>())
            .collect();
        let w2: f64 = w.iter().map(|v| v * v).sum();
        for l in 0..n {
            let atw: f64 = (0..n).map(|i| a.get(i, l) * w[i]).sum();
            // grad f / f = -e A^T w / |w|^2
            g[l] += -e * atw / w2 * k;
        }
    }
    g
}

/// Central difference of `f` along coordinate `i`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, y: &[f64], i: usize, h: f64) -> f64 {
    let mut p = y.to_vec();
    let mut m = y.to_vec();
    p[i] += h;
    m[i] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

/// Second central difference for `d^2 f / dy_i dy_j`.
pub fn second_diff(f: impl Fn(&[f64]) -> f64, y: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let at = |si: f64, sj: f64| {
        let mut p = y.to_vec();
        p[i] += si * h;
        p[j] += sj * h;
        f(&p)
    };
    if i == j {
        let mut p = y.to_vec();
        let c = f(&p);
        p[i] += h;
        let plus = f(&p);
        p[i] -= 2.0 * h;
        let minus = f(&p);
        (plus - 2.0 * c + minus) / (h * h)
    } else {
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
    }
}

/// Largest singular value by power iteration on the Gram matrix `A^T A`.
pub fn sigma_max_power_iteration(a: &Mat) -> f64 {
    let gram = a.transpose().mul(a);
    let n = gram.rows();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = gram.mul_vec(&v);
        let len = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len == 0.0 {
            return 0.0;
        }
        lambda = len / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / len).collect();
    }
    lambda.sqrt()
}

/// Least-squares slope of `ys` against `xs` and its standard error.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let se = if xs.len() > 2 { (resid / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, se)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton's method on the
/// three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let q2 = ((2.0 * k - 1.0) * x * q1 - (k - 1.0) * q0) / k;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (x * q1 - q0) / (x * x - 1.0);
                nodes[i] = x;
                weights[i] = 2.0 / ((1.0 - x * x) * dq * dq);
                break;
            }
        }
    }
    (nodes, weights)
}

/// Composite tensor Gauss-Legendre over a box: `panels` equal pieces per axis.
pub fn composite_box(f: impl Fn(&[f64]) -> f64, lower: &[f64], upper: &[f64], panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let d = lower.len();
    let axis: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|i| {
            let h = (upper[i] - lower[i]) / panels as f64;
            (0..panels)
                .flat_map(|p| {
                    let a = lower[i] + h * p as f64;
                    x.iter().zip(&w).map(move |(t, wt)| (a + 0.5 * h * (t + 1.0), 0.5 * h * wt))
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut wt = 1.0;
        for i in 0..d {
            y[i] = axis[i][idx[i]].0;
            wt *= axis[i][idx[i]].1;
        }
        total += wt * f(&y);
        let mut i = 0;
        loop {
            if i == d {
                return total;
            }
            idx[i] += 1;
            if idx[i] < axis[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}
