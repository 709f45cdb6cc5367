//! Seeded random points used by property sweeps and experiment generators.

use rand::Rng;
use rand_distr::StandardNormal;

/// Uniform direction on the unit sphere of `R^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = crate::dense::norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Uniform point in the ball `B(center, radius)`.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir = unit_vector(rng, n);
    let rho = radius * rng.random::<f64>().powf(1.0 / n as f64);
    center.iter().zip(dir).map(|(c, d)| c + rho * d).collect()
}

/// Uniform point in the cube `[-half, half]^n`.
pub fn in_cube<R: Rng + ?Sized>(rng: &mut R, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half..half)).collect()
}

/// Log-uniform value in `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}
