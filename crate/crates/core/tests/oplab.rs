mod common;

use std::process::Command;

use common::{composite_box, gauss_legendre, kernel_direct};
use fracop::atoms::{build_atom, build_unprojected, dilate_atom, AtomSpec};
use fracop::exactlin::{build_normalization, FamilySpec, RationalMatrix};
use fracop::kernelops::KernelParams;
use fracop::oplab::experiments::{reproduce_against, reproduce_example, uniform_atom_experiment, PaperExample};
use fracop::oplab::*;
use fracop::quadrature::{tensor_apply, BlockKernel, QuadOptions, RieszKernel};
use fracop::Exec;

fn canonical(partition: &[usize]) -> KernelParams {
    KernelParams::new(FamilySpec::canonical(partition), 0.5).unwrap()
}

fn atom(n: usize, seed: u64) -> fracop::atoms::Atom {
    build_atom(&AtomSpec::new(n, 1.0, vec![0.0; n], 1.0, seed).unwrap()).unwrap()
}

#[test]
fn gauss_legendre_oracle_is_exact_for_polynomials() {
    let (x, w) = gauss_legendre(6);
    let s: f64 = x.iter().zip(&w).map(|(t, wt)| wt * t.powi(10)).sum();
    assert!((s - 2.0 / 11.0).abs() < 1e-14);
}

#[test]
fn apply_matches_plain_quadrature_away_from_ridges() {
    // ridges of the canonical family sit at y1 = x1 and y2 = x2 with widths
    // |x2| and |x1|; both are wide here, so plain panels converge
    let p = canonical(&[1, 1]);
    let a = atom(2, 3);
    for x in [[3.0, 2.5], [-1.7, 2.2], [0.4, 1.8]] {
        // the atom has mean zero, so the value is small against int |k a|
        let got = apply_tr(&p, &a, &x, &QuadOptions::rel(0.0).with_l1_rel_tol(1e-10)).unwrap();
        assert!(got.converged);
        let want = composite_box(|y| kernel_direct(&p, &x, y) * a.eval(y), &[-1.0, -1.0], &[1.0, 1.0], 40, 8);
        assert!((got.value - want).abs() <= 1e-7 * a.lp_norm(1.0), "{x:?}: {} vs {want}", got.value);
    }
}

#[test]
fn conjugation_paths_agree() {
    let family = FamilySpec::paper_example();
    let p = KernelParams::new(family.clone(), 0.5).unwrap();
    let norm = build_normalization(&family, None).unwrap();
    let f = SmoothBump::new(vec![0.0; 3], 1.0);
    let opts = QuadOptions::rel(1e-6).with_max_evals(40_000_000);
    for x in [[0.3, -0.2, 0.5], [1.2, 0.4, -0.9], [-0.1, 0.05, 0.2]] {
        let v = conjugated_apply(&p, &norm, &f, &x, &opts).unwrap();
        assert!(!v.normalized.flagged() && !v.direct.flagged());
        assert!(v.relative_gap() < 1e-5, "{x:?}: {v:?}");
    }
}

#[test]
fn positivity_and_absolute_domination() {
    let p = canonical(&[1, 1]);
    let a = atom(2, 5);
    let bump = SmoothBump::new(vec![0.2, -0.1], 0.8);
    let opts = QuadOptions::rel(1e-8);
    for x in [[0.0, 0.0], [0.5, -0.3], [2.0, 1.0], [-0.9, 0.01]] {
        let b = apply_tr(&p, &bump, &x, &opts).unwrap();
        assert!(b.value > 0.0);
        let signed = apply_tr(&p, &a, &x, &opts).unwrap().value;
        let abs = apply_tr(&p, &Abs(&a), &x, &opts).unwrap().value;
        assert!(signed.abs() <= abs * (1.0 + 1e-8), "{x:?}");
    }
}

#[test]
fn tensor_riesz_dominates_for_canonical_families() {
    for partition in [vec![1, 1], vec![1, 2]] {
        let p = canonical(&partition);
        let n = p.n();
        let a = atom(n, 11);
        let kernels: Vec<RieszKernel> = partition
            .iter()
            .map(|&nj| RieszKernel::new(0.5 * nj as f64, nj).unwrap())
            .collect();
        let refs: Vec<&dyn BlockKernel> = kernels.iter().map(|k| k as &dyn BlockKernel).collect();
        let opts = QuadOptions::rel(1e-6).with_max_evals(20_000_000);
        let x: Vec<f64> = (0..n).map(|i| 0.3 + 0.4 * i as f64).collect();
        let lhs = apply_tr(&p, &Abs(&a), &x, &opts).unwrap().value;
        let rhs = tensor_apply(&refs, &|y: &[f64]| a.eval(y).abs(), &a.support_box(), &x, &opts).unwrap().value;
        assert!(lhs <= rhs * (1.0 + 1e-5), "{partition:?}: {lhs} > {rhs}");
    }
}

#[test]
fn pointwise_homogeneity() {
    // T a_t(x) = t^{n/p - n r} (T a)(t x) with n = 2, p = 1, r = 1/2
    let p = canonical(&[1, 1]);
    let a = atom(2, 2);
    let opts = QuadOptions::rel(1e-9).with_max_evals(5_000_000);
    let x = [0.45, -0.8];
    for t in [0.25, 3.0] {
        let at = dilate_atom(&a, t).unwrap();
        let lhs = apply_tr(&p, &at, &x, &opts).unwrap().value;
        let tx = [t * x[0], t * x[1]];
        let rhs = t.powf(2.0 - 1.0) * apply_tr(&p, &a, &tx, &opts).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-7 * rhs.abs(), "t = {t}: {lhs} vs {rhs}");
    }
}

#[test]
fn pushforward_moves_support() {
    let f = SmoothBump::new(vec![0.0, 0.0], 1.0);
    let c = fracop::dense::Mat::new(2, 2, vec![2.0, 1.0, 0.0, 1.0]);
    let g = PushForward::new(&f, c).unwrap();
    // f_C(C y) = f(y)
    assert!((g.eval(&[2.0 * 0.3 + 0.1, 0.1]) - f.eval(&[0.3, 0.1])).abs() < 1e-15);
    let s = g.support();
    assert_eq!((s.lower.clone(), s.upper.clone()), (vec![-3.0, -1.0], vec![3.0, 1.0]));
}

#[test]
fn norm_estimate_near_part_matches_grid_oracle() {
    let p = canonical(&[1, 1]);
    let a = atom(2, 1);
    let e = lq_norm_tr_atom(&p, &a, 2.0, &NormOptions::default()).unwrap();
    assert!(!e.is_flagged() && e.tail_bound > 0.0);
    // |T a|^2 over [-R, R]^2 with x_i = +-R u^2 on each half axis, which
    // absorbs the |x_i|^{-1/2} kinks on the coordinate axes
    let r = e.r_max;
    let (u, w) = gauss_legendre(6);
    let panels = 5;
    let mut axis = Vec::new();
    for side in [-1.0, 1.0] {
        for k in 0..panels {
            let (a0, a1) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
            for (t, wt) in u.iter().zip(&w) {
                let v = a0 + 0.5 * (a1 - a0) * (t + 1.0);
                axis.push((side * r * v * v, 0.5 * (a1 - a0) * wt * 2.0 * r * v));
            }
        }
    }
    let opts = QuadOptions::rel(0.0).with_l1_rel_tol(1e-7).with_max_evals(2_000_000);
    let mut total = 0.0;
    for (x0, w0) in &axis {
        for (x1, w1) in &axis {
            let v = apply_tr(&p, &a, &[*x0, *x1], &opts).unwrap().value;
            total += w0 * w1 * v * v;
        }
    }
    let oracle = total.sqrt();
    assert!((e.near_value - oracle).abs() <= 5e-3 * oracle, "{} vs {oracle}", e.near_value);
    assert!(e.total_upper >= e.near_value);
}

#[test]
fn norm_estimate_is_identical_across_execution_modes() {
    let p = canonical(&[1, 1]);
    let a = build_atom(&AtomSpec::new(2, 1.0, vec![0.1, -0.2], 0.5, 4).unwrap()).unwrap();
    let opts = NormOptions::default().with_tol(1e-2);
    let seq = lq_norm_tr_atom(&p, &a, 2.0, &opts.clone().with_exec(Exec::Sequential)).unwrap();
    let par = lq_norm_tr_atom(&p, &a, 2.0, &opts.with_exec(Exec::Parallel)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn norm_errors() {
    let p = canonical(&[1, 1]);
    let a = atom(2, 1);
    let opts = NormOptions::default();
    assert!(matches!(lq_norm_tr_atom(&p, &a, 3.0, &opts), Err(OplabError::Unsupported(_))));
    let bad = build_unprojected(&AtomSpec::new(2, 1.0, vec![0.0; 2], 1.0, 1).unwrap()).unwrap();
    assert!(lq_norm_tr(&p, &bad, 2.0, &opts).is_err());
    let a3 = atom(3, 1);
    assert!(matches!(
        apply_tr(&p, &a3, &[0.0, 0.0], &QuadOptions::rel(1e-6)),
        Err(OplabError::Dimension { expected: 2, got: 3 })
    ));
    assert!(critical_q(1.0, 1.0).is_err());
}

#[test]
fn reproduction_passes_and_names_mismatches() {
    let report = reproduce_example().unwrap();
    assert!(report.passed(), "{report}");
    let mut wrong = PaperExample::displayed();
    wrong.b = RationalMatrix::from_i64_rows(&[&[7, 7, -7], &[0, -14, 21], &[-7, 1, 7]]);
    match reproduce_against(&FamilySpec::paper_example(), &wrong) {
        Err(OplabError::Mismatch { what, entry, .. }) => assert_eq!((what.as_str(), entry.as_str()), ("B", "(3, 2)")),
        other => panic!("{other:?}"),
    }
    let mut wrong = PaperExample::displayed();
    wrong.null_spaces[2][0] = [1, 0, 2].map(fracop::exactlin::rational::int).to_vec();
    let e = reproduce_against(&FamilySpec::paper_example(), &wrong).unwrap_err().to_string();
    assert!(e.contains("N_3") && e.contains("generator 1"), "{e}");
}

#[test]
fn uniform_csv_is_identical_sequential_and_parallel() {
    let mut cfg = ExperimentConfig {
        atoms: 3,
        radii: vec![0.25, 2.0],
        tol: 1e-2,
        fit_samples: 100,
        exec: Exec::Sequential,
        ..ExperimentConfig::default()
    };
    let seq = uniform_atom_experiment(&cfg).unwrap();
    cfg.exec = Exec::Parallel;
    let par = uniform_atom_experiment(&cfg).unwrap();
    assert_eq!(seq.to_csv_string(), par.to_csv_string());
    assert_eq!(seq.records.len(), 9);
    assert!(seq.passed());
}

fn fracop(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fracop")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_reproduce_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("example.csv");
    let (code, out, _) = fracop(&["reproduce-example", "--output", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("overall: PASS"));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("experiment,case,seed,params,quantity"));

    let (code, out, _) = fracop(&["check", "--family", "random:1,1,2:3"]);
    assert_eq!(code, 0, "{out}");
    let (code, _, err) = fracop(&["check", "--family", "canonical:1,0"]);
    assert_eq!(code, 2);
    assert!(err.contains("family.canonical"), "{err}");
}

#[test]
fn cli_config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "r = 0.5\natoms = 2\nradius = [1.0]\n").unwrap();
    let (code, _, err) = fracop(&["experiment", "uniform", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("radius"), "{err}");
    std::fs::write(&path, "r = 0.5\np = [1.5]\n").unwrap();
    let (code, _, err) = fracop(&["experiment", "uniform", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("p = 1.5"), "{err}");
}

#[test]
fn cli_apply_and_atom() {
    let (code, out, _) = fracop(&["apply", "--family", "canonical:1,1", "--x", "0.3,0.4", "--source", "atom"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("T_r f(0.3 0.4) = "));
    let (code, out, _) = fracop(&["atom", "--n", "3", "--p", "0.75"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("N = 2") && !out.contains("FAIL"));
    let (code, _, err) = fracop(&["apply", "--x", "0.3,0.4"]);
    assert_eq!(code, 2);
    assert!(err.contains("expected 3"), "{err}");
}
