mod common;

use std::f64::consts::PI;

use common::fit_slope;
use fracop::quadrature::*;
use fracop::Exec;

fn unit_box(d: usize) -> IntegrationBox {
    IntegrationBox::cube(&vec![0.0; d], 1.0).unwrap()
}

fn bump(y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powi(3)
    }
}

#[test]
fn inverse_square_root_on_unit_interval() {
    let bx = IntegrationBox::new(vec![0.0], vec![1.0]).unwrap();
    let sets = [SingularSet::axis_plane(1, 0, 0.0, 0.5)];
    let r = adaptive_integrate(&|y: &[f64]| y[0].powf(-0.5), &bx, &QuadOptions::rel(1e-8), &sets);
    assert!((r.value - 2.0).abs() <= 1e-6, "{r:?}");
    assert!(r.converged && r.error_estimate >= 0.0 && r.cells >= 1);
}

#[test]
fn inverse_radius_on_unit_disc() {
    let f = |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt().recip();
    let r = integrate_ball(&f, &[0.0, 0.0], 1.0, &QuadOptions::rel(1e-8), Some(1.0));
    assert!((r.value - 2.0 * PI).abs() <= 1e-6, "{r:?}");
    // same integral on the square with a point singularity: disc part only
    let sq = adaptive_integrate(
        &|y: &[f64]| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            if r == 0.0 { f64::NAN } else { 1.0 / r }
        },
        &unit_box(2),
        &QuadOptions::rel(1e-6),
        &[SingularSet::point(&[0.0, 0.0], 1.0)],
    );
    // int_{[-1,1]^2} 1/|y| = 8 asinh(1)
    assert!((sq.value - 8.0 * 1f64.asinh()).abs() <= 1e-5 * sq.value, "{sq:?}");
}

#[test]
fn product_of_inverse_square_roots() {
    let f = |y: &[f64]| y[0].abs().powf(-0.5) * y[1].abs().powf(-0.5);
    let sets = [SingularSet::axis_plane(2, 0, 0.0, 0.5), SingularSet::axis_plane(2, 1, 0.0, 0.5)];
    let r = adaptive_integrate(&f, &unit_box(2), &QuadOptions::rel(1e-8), &sets);
    assert!((r.value - 16.0).abs() <= 1e-6, "{r:?}");
    assert!(r.singular_cells >= 1);
}

#[test]
fn riesz_of_indicator() {
    let r = riesz_block_apply(0.5, &|_: &[f64]| 1.0, &unit_box(1), &[0.0], &QuadOptions::rel(1e-8)).unwrap();
    assert!((r.value - 4.0).abs() <= 1e-5, "{r:?}");
    // off-center: int_{-1}^{1} |0.3 - y|^{-1/2} dy = 2 (sqrt(1.3) + sqrt(0.7))
    let r = riesz_block_apply(0.5, &|_: &[f64]| 1.0, &unit_box(1), &[0.3], &QuadOptions::rel(1e-8)).unwrap();
    let want = 2.0 * (1.3f64.sqrt() + 0.7f64.sqrt());
    assert!((r.value - want).abs() <= 1e-7 * want);
}

#[test]
fn riesz_rejects_bad_alpha() {
    let g = |_: &[f64]| 1.0;
    assert!(matches!(
        riesz_block_apply(1.0, &g, &unit_box(1), &[0.0], &QuadOptions::rel(1e-6)),
        Err(QuadError::InvalidAlpha { .. })
    ));
    assert!(riesz_block_apply(0.5, &g, &unit_box(2), &[0.0], &QuadOptions::rel(1e-6)).is_err());
}

#[test]
fn oblique_ridge_matches_rotated_closed_form() {
    // |y1 + y2|^{-1/2} over the unit square [0,1]^2:
    // int_0^1 int_0^1 (y1+y2)^{-1/2} = (4/3)(2^{3/2} - 2)
    let bx = IntegrationBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let m = fracop::dense::Mat::new(1, 2, vec![1.0, 1.0]);
    let sets = [SingularSet::affine(&m, &[0.0], 0.5)];
    let f = |y: &[f64]| (y[0] + y[1]).powf(-0.5);
    let r = adaptive_integrate(&f, &bx, &QuadOptions::rel(1e-7), &sets);
    let want = 4.0 / 3.0 * (2f64.powf(1.5) - 2.0);
    assert!((r.value - want).abs() <= 1e-7 * want, "{} vs {want}", r.value);
    assert!(r.converged);

    // interior oblique crossing: |y1 - y2|^{-1/2} on [0,1]^2 = 2 * int_0^1 int_0^{y1} (y1-y2)^{-1/2} = 8/3
    let m = fracop::dense::Mat::new(1, 2, vec![1.0, -1.0]);
    let sets = [SingularSet::affine(&m, &[0.0], 0.5)];
    let f = |y: &[f64]| (y[0] - y[1]).abs().powf(-0.5);
    let r = adaptive_integrate(&f, &bx, &QuadOptions::rel(1e-7), &sets);
    assert!((r.value - 8.0 / 3.0).abs() <= 1e-7, "{r:?}");
    assert!(r.converged);
}

#[test]
fn linearity() {
    let sets = [SingularSet::axis_plane(2, 0, 0.2, 0.5), SingularSet::axis_plane(2, 1, -0.4, 0.5)];
    let f = |y: &[f64]| (y[0] - 0.2).abs().powf(-0.5) * (1.0 + y[1] * y[1]);
    let g = |y: &[f64]| (y[1] + 0.4).abs().powf(-0.5) * y[0].cos();
    let (a, b) = (2.5, -1.25);
    let h = |y: &[f64]| a * f(y) + b * g(y);
    let opts = QuadOptions::rel(1e-9);
    let rf = adaptive_integrate(&f, &unit_box(2), &opts, &sets);
    let rg = adaptive_integrate(&g, &unit_box(2), &opts, &sets);
    let rh = adaptive_integrate(&h, &unit_box(2), &opts, &sets);
    let combined = a.abs() * rf.error_estimate + b.abs() * rg.error_estimate + rh.error_estimate;
    let diff = (rh.value - (a * rf.value + b * rg.value)).abs();
    assert!(diff <= combined.max(1e-12), "{diff} vs {combined}");
}

#[test]
fn refinement_monotonicity() {
    // int_{[0,1]^2} 1/|y| = 2 asinh(1)
    let bx = IntegrationBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let sets = [SingularSet::point(&[0.0, 0.0], 1.0)];
    let f = |y: &[f64]| (y[0] * y[0] + y[1] * y[1]).sqrt().recip();
    let exact = 2.0 * 1f64.asinh();
    let mut prev = f64::INFINITY;
    let mut tol = 1e-2;
    for _ in 0..14 {
        let r = adaptive_integrate(&f, &bx, &QuadOptions::rel(tol), &sets);
        let err = (r.value - exact).abs();
        assert!(err <= prev * (1.0 + 1e-9) + 1e-15, "tol {tol}: {err} > {prev}");
        assert!(err <= tol * exact, "tol {tol}: {err}");
        prev = err;
        tol *= 0.5;
    }
}

#[test]
fn riesz_far_field_expansion() {
    // radial g: first moment vanishes, so the relative error decays like |x|^{-2}
    let support = unit_box(2);
    let mass = PI / 4.0; // int (1 - |y|^2)^3 over the unit disc
    let mut prev = f64::INFINITY;
    for rho in [4.0, 8.0, 16.0, 32.0, 64.0] {
        let x = [rho * 0.6, rho * 0.8];
        let r = riesz_block_apply(1.0, &bump, &support, &x, &QuadOptions::rel(1e-10)).unwrap();
        let approx = rho.powf(-1.0) * mass;
        let rel = (r.value / approx - 1.0).abs();
        assert!(rel < prev, "rho {rho}: {rel}");
        prev = rel;
    }
    assert!(prev < 1e-3);
}

#[test]
fn riesz_mean_zero_decay_slope() {
    let g = |y: &[f64]| y[0] * bump(y);
    let support = unit_box(2);
    let dir = [0.8, 0.6];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 3..=8 {
        let rho = 2f64.powi(k);
        let x = [rho * dir[0], rho * dir[1]];
        let r = riesz_block_apply(1.0, &g, &support, &x, &QuadOptions::rel(1e-10).with_abs_tol(1e-16)).unwrap();
        xs.push(rho.ln());
        ys.push(r.value.abs().ln());
    }
    let (slope, _) = fit_slope(&xs, &ys);
    // alpha - d - 1 = -2
    assert!((slope + 2.0).abs() < 0.02, "slope {slope}");
}

#[test]
fn tensor_of_unit_kernels() {
    let k = UnitKernel { dim: 1 };
    let bx = IntegrationBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let r = tensor_apply(&[&k, &k], &|_: &[f64]| 1.0, &bx, &[0.5, 0.5], &QuadOptions::rel(1e-10)).unwrap();
    assert!((r.value - 1.0).abs() < 1e-14);
}

#[test]
fn tensor_matches_product_for_separable_data() {
    let g1 = |y: &[f64]| 1.0 - y[0] * y[0];
    let g2 = |y: &[f64]| (2.0 * y[0]).cos() + 1.5;
    let f = |y: &[f64]| g1(&y[..1]) * g2(&y[1..]);
    let k1 = RieszKernel::new(0.5, 1).unwrap();
    let k2 = RieszKernel::new(0.25, 1).unwrap();
    let x = [0.3, -0.45];
    let opts = QuadOptions::rel(1e-8);
    let t = tensor_apply(&[&k1, &k2], &f, &unit_box(2), &x, &opts).unwrap();
    let a = riesz_block_apply(0.5, &g1, &unit_box(1), &x[..1], &opts).unwrap();
    let b = riesz_block_apply(0.25, &g2, &unit_box(1), &x[1..], &opts).unwrap();
    let prod = a.value * b.value;
    assert!((t.value - prod).abs() <= 1e-6 * prod.abs(), "{} vs {prod}", t.value);
    assert!(t.converged);
}

#[test]
fn tensor_matches_direct_quadrature() {
    let f = |y: &[f64]| (-(y[0] * y[0] + y[0] * y[1] + y[1] * y[1])).exp() * (1.0 + 0.5 * y[0] * y[1]);
    let k1 = RieszKernel::new(0.5, 1).unwrap();
    let k2 = RieszKernel::new(0.5, 1).unwrap();
    let x = [0.3, -0.2];
    let opts = QuadOptions::rel(1e-8);
    let t = tensor_apply(&[&k1, &k2], &f, &unit_box(2), &x, &opts).unwrap();
    let sets = [SingularSet::axis_plane(2, 0, x[0], 0.5), SingularSet::axis_plane(2, 1, x[1], 0.5)];
    let direct = adaptive_integrate(
        &|y: &[f64]| k1.eval(&x[..1], &y[..1]) * k2.eval(&x[1..], &y[1..]) * f(y),
        &unit_box(2),
        &opts,
        &sets,
    );
    assert!((t.value - direct.value).abs() <= 1e-4 * direct.value.abs());
}

#[test]
fn tensor_with_two_dimensional_block() {
    // radial block kernel on R^2 times a 1-d block, separable data
    let k1 = RieszKernel::new(1.0, 2).unwrap();
    let k2 = RieszKernel::new(0.5, 1).unwrap();
    let f = |y: &[f64]| bump(&y[..2]) * (1.0 - y[2] * y[2]);
    let x = [0.2, 0.1, 0.0];
    let opts = QuadOptions::rel(1e-6);
    let t = tensor_apply(&[&k1, &k2], &f, &unit_box(3), &x, &opts).unwrap();
    let a = riesz_block_apply(1.0, &bump, &unit_box(2), &x[..2], &opts).unwrap();
    let b = riesz_block_apply(0.5, &|y: &[f64]| 1.0 - y[0] * y[0], &unit_box(1), &x[2..], &opts).unwrap();
    let prod = a.value * b.value;
    assert!((t.value - prod).abs() <= 1e-5 * prod, "{} vs {prod}", t.value);
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let sets = [SingularSet::point(&[0.1, 0.2], 1.0)];
    let f = |y: &[f64]| ((y[0] - 0.1).powi(2) + (y[1] - 0.2).powi(2)).sqrt().recip() * (y[0] + 2.0);
    let a = adaptive_integrate(&f, &unit_box(2), &QuadOptions::rel(1e-7).with_exec(Exec::Sequential), &sets);
    let b = adaptive_integrate(&f, &unit_box(2), &QuadOptions::rel(1e-7).with_exec(Exec::Parallel), &sets);
    assert_eq!(a, b);
}
