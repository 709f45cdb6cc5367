use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::atoms::{build_atom, build_unprojected, dilate_atom, moment_check, monomials, Atom, AtomSpec};
use crate::exactlin::rational::{frac, int};
use crate::exactlin::{build_normalization, validate_family, verify_projections, FamilySpec, Rational, RationalMatrix, Subspace};
use crate::kernelops::KernelParams;
use crate::quadrature::QuadOptions;
use crate::sampling;

use super::config::ExperimentConfig;
use super::report::{loglog_slope, Report};
use super::{apply_tr, conjugated_apply, critical_q, lq_norm_tr, NormEstimate, OplabError, SmoothBump};

fn flag_of(e: &NormEstimate) -> String {
    if e.is_flagged() {
        format!("{} unconverged integrals", e.flagged)
    } else {
        String::new()
    }
}

fn norm_records(report: &mut Report, case: usize, seed: u64, params: &str, e: &NormEstimate) {
    let flag = flag_of(e);
    report.record(case, seed, params, "near_value", e.near_value, e.near_value * e.tol, &flag);
    report.record(case, seed, params, "tail_bound", e.tail_bound, 0.0, &flag);
    report.record(case, seed, params, "total_upper", e.total_upper, e.near_value * e.tol, &flag);
}

/// One atom of the uniform suite: radius cycles through `radii`, the center
/// is `delta * u` with `u` uniform in the unit ball.
pub fn uniform_suite_spec(cfg: &ExperimentConfig, n: usize, p: f64, case: usize) -> Result<AtomSpec, OplabError> {
    let delta = cfg.radii[case % cfg.radii.len()];
    let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(case as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = sampling::in_ball(&mut rng, &vec![0.0; n], 1.0);
    let center = u.iter().map(|v| v * delta).collect();
    Ok(AtomSpec::new(n, p, center, delta, seed)?)
}

/// `||T_r a||_q` over a suite of atoms; passes when max/min stays below the
/// threshold for every `p`.
pub fn uniform_atom_experiment(cfg: &ExperimentConfig) -> Result<Report, OplabError> {
    cfg.validate()?;
    let params = KernelParams::new(cfg.family.resolve()?, cfg.r)?;
    let n = params.n();
    let opts = cfg.norm_options();
    let mut report = Report::new("uniform");
    for &p in &cfg.p {
        let q = critical_q(p, cfg.r)?;
        let specs = (0..cfg.atoms)
            .map(|i| uniform_suite_spec(cfg, n, p, i))
            .collect::<Result<Vec<_>, _>>()?;
        let results = cfg.exec.map(&specs, |s| {
            let atom = build_atom(s)?;
            lq_norm_tr(&params, &atom, q, &opts)
        });
        let mut totals = Vec::new();
        for (i, (s, e)) in specs.iter().zip(results).enumerate() {
            let e = e?;
            let label = format!(
                "family={};r={};p={p};q={q};delta={};center={}",
                cfg.family.describe(),
                cfg.r,
                s.radius,
                join(&s.center)
            );
            norm_records(&mut report, i, s.seed, &label, &e);
            totals.push(e.total_upper);
        }
        let max = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = totals.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        report.stat(&format!("max_total_p{p}"), max);
        report.stat(&format!("min_total_p{p}"), min);
        report.stat(&format!("ratio_p{p}"), ratio);
        report.check(
            &format!("uniform_ratio_p{p}"),
            ratio < cfg.threshold,
            format!("max/min = {ratio:.4} over {} atoms (threshold {})", totals.len(), cfg.threshold),
        );
    }
    Ok(report)
}

/// Homogeneity and index criticality for one origin-centered atom `a`:
/// `||T_r f_t||_q` with `f_t(y) = a(t y)` must scale like `t^{-(nr + n/q)}`,
/// the normalized `||T_r a_t||_q` must not depend on `t`, and at a perturbed
/// `q'` the ratio `||T_r f_t||_{q'} / ||f_t||_p` drifts like `t^{n(1/q - 1/q')}`.
pub fn scaling_exponent_experiment(cfg: &ExperimentConfig) -> Result<Report, OplabError> {
    cfg.validate()?;
    let params = KernelParams::new(cfg.family.resolve()?, cfg.r)?;
    let n = params.n();
    let nf = n as f64;
    let p = cfg.p[0];
    let q = critical_q(p, cfg.r)?;
    let base = build_atom(&AtomSpec::new(n, p, vec![0.0; n], 1.0, cfg.seed)?)?;
    let opts = cfg.norm_options();
    let mut report = Report::new("scaling");
    let label = |q: f64, t: f64| format!("family={};r={};p={p};q={q};t={t}", cfg.family.describe(), cfg.r);

    let mut exponents = vec![q];
    exponents.extend(cfg.q_perturbed);
    let jobs: Vec<(f64, f64)> = exponents
        .iter()
        .flat_map(|&qq| cfg.dilations.iter().map(move |&t| (qq, t)))
        .collect();
    let results = cfg.exec.map(&jobs, |&(qq, t)| -> Result<NormEstimate, OplabError> {
        let at = dilate_atom(&base, t)?;
        lq_norm_tr(&params, &at, qq, &opts)
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let lp = base.lp_norm(p);

    for (qi, &qq) in exponents.iter().enumerate() {
        let ests = &results[qi * cfg.dilations.len()..(qi + 1) * cfg.dilations.len()];
        let mut norms_ft = Vec::new();
        let mut ratios = Vec::new();
        for (k, (&t, e)) in cfg.dilations.iter().zip(ests).enumerate() {
            let case = qi * cfg.dilations.len() + k;
            // f_t = t^{-n/p} a_t, and ||f_t||_p = t^{-n/p} ||a||_p
            let ft = t.powf(-nf / p) * e.total_upper;
            let ratio = e.total_upper / lp;
            let flag = flag_of(e);
            let l = label(qq, t);
            report.record(case, cfg.seed, &l, "norm_atom_t", e.total_upper, e.near_value * e.tol, &flag);
            report.record(case, cfg.seed, &l, "norm_f_t", ft, ft * e.tol, &flag);
            report.record(case, cfg.seed, &l, "ratio", ratio, ratio * e.tol, &flag);
            norms_ft.push(ft);
            ratios.push(ratio);
        }
        let (slope, se) = loglog_slope(&cfg.dilations, &norms_ft);
        let (drift, drift_se) = loglog_slope(&cfg.dilations, &ratios);
        let expected = -(nf * cfg.r + nf / qq);
        let tag = if qi == 0 { String::new() } else { format!("_q{qq}") };
        report.record(usize::MAX, cfg.seed, &label(qq, f64::NAN), &format!("slope{tag}"), slope, se, "");
        report.record(usize::MAX, cfg.seed, &label(qq, f64::NAN), &format!("drift{tag}"), drift, drift_se, "");
        report.stat(&format!("slope{tag}"), slope);
        report.stat(&format!("slope_se{tag}"), se);
        report.stat(&format!("expected_slope{tag}"), expected);
        report.stat(&format!("drift{tag}"), drift);
        report.stat(&format!("drift_se{tag}"), drift_se);
        if qi == 0 {
            let spread = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                / ratios.iter().copied().fold(f64::INFINITY, f64::min)
                - 1.0;
            report.stat("invariance_spread", spread);
            report.check(
                "homogeneity_slope",
                ((slope - expected) / expected).abs() < 0.01,
                format!("slope {slope:.5} vs {expected:.5}"),
            );
            report.check(
                "atom_norm_invariance",
                spread < 0.02,
                format!("max/min - 1 = {spread:.2e} over t in {:?}", cfg.dilations),
            );
        } else {
            let predicted = nf * (1.0 / q - 1.0 / qq);
            report.stat(&format!("predicted_drift{tag}"), predicted);
            report.check(
                &format!("criticality{tag}"),
                drift.abs() > 5.0 * drift_se && (drift - predicted).abs() < 0.1 * predicted.abs(),
                format!("drift {drift:.5} +- {drift_se:.1e}, predicted {predicted:.5}"),
            );
        }
    }
    Ok(report)
}

/// `|T_r f(rho d)|` along a ray, and the log-log slope against `rho`.
pub fn far_field_slope(
    params: &KernelParams,
    f: &Atom,
    direction: &[f64],
    rhos: &[f64],
    tol: f64,
) -> Result<(f64, f64, Vec<f64>), OplabError> {
    let len = crate::dense::norm(direction);
    let opts = QuadOptions::rel(0.0).with_l1_rel_tol(tol).with_max_evals(2_000_000);
    let mut values = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let x: Vec<f64> = direction.iter().map(|d| rho * d / len).collect();
        values.push(apply_tr(params, f, &x, &opts)?.value);
    }
    let (slope, se) = loglog_slope(rhos, &values);
    Ok((slope, se, values))
}

/// Far-field decay of a projected atom against the same profile without the
/// moment projection. At `p = 1` the exponents are `-n(1-r) - 1` and `-n(1-r)`.
pub fn negative_control_experiment(cfg: &ExperimentConfig) -> Result<Report, OplabError> {
    cfg.validate()?;
    let params = KernelParams::new(cfg.family.resolve()?, cfg.r)?;
    let n = params.n();
    let spec = AtomSpec::new(n, 1.0, vec![0.0; n], 1.0, cfg.seed)?;
    let good = build_atom(&spec)?;
    let bad = build_unprojected(&spec)?;
    // an irrational direction avoids the kink planes of canonical families
    let direction: Vec<f64> = (0..n).map(|i| 1.0 + 0.618_033_988_75 * i as f64).collect();
    let rhos: Vec<f64> = (3..=8).map(|k| 2f64.powi(k)).collect();
    let mut report = Report::new("negative_control");
    let base = -(n as f64) * (1.0 - cfg.r);
    let mut slopes = Vec::new();
    for (case, (name, atom)) in [("projected", &good), ("unprojected", &bad)].into_iter().enumerate() {
        let mean = moment_check(atom, &vec![0; n]);
        let (slope, se, values) = far_field_slope(&params, atom, &direction, &rhos, 1e-11)?;
        let label = format!("family={};r={};profile={name}", cfg.family.describe(), cfg.r);
        report.record(case, cfg.seed, &label, "mean", mean, 0.0, "");
        for (rho, v) in rhos.iter().zip(&values) {
            report.record(case, cfg.seed, &format!("{label};rho={rho}"), "abs_Tf", v.abs(), 0.0, "");
        }
        report.record(case, cfg.seed, &label, "decay_slope", slope, se, "");
        report.stat(&format!("slope_{name}"), slope);
        slopes.push(slope);
    }
    let separation = slopes[1] - slopes[0];
    report.stat("separation", separation);
    report.check(
        "projected_decay",
        (slopes[0] - (base - 1.0)).abs() < 0.1,
        format!("slope {:.4} vs {:.4}", slopes[0], base - 1.0),
    );
    report.check(
        "unprojected_decay",
        (slopes[1] - base).abs() < 0.1,
        format!("slope {:.4} vs {base:.4}", slopes[1]),
    );
    report.check("decay_separation", separation > 0.5, format!("{separation:.4}"));
    Ok(report)
}

/// Both conjugation paths at `points` random `x` in `[-1.5, 1.5]^n` for a
/// bump of radius 1 at the origin.
pub fn conjugation_experiment(
    family: &FamilySpec,
    r: f64,
    points: usize,
    seed: u64,
    tol: f64,
    exec: crate::Exec,
) -> Result<Report, OplabError> {
    let params = KernelParams::new(family.clone(), r)?;
    let norm = build_normalization(family, None)?;
    let n = params.n();
    let f = SmoothBump::new(vec![0.0; n], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..points).map(|_| sampling::in_cube(&mut rng, n, 1.5)).collect();
    let opts = QuadOptions::rel(tol).with_max_evals(40_000_000);
    let results = exec.map(&xs, |x| conjugated_apply(&params, &norm, &f, x, &opts));
    let mut report = Report::new("conjugation");
    let mut worst: f64 = 0.0;
    for (i, (x, res)) in xs.iter().zip(results).enumerate() {
        let res = res?;
        let flag = if res.normalized.flagged() || res.direct.flagged() { "unconverged" } else { "" };
        let label = format!("r={r};x={}", join(x));
        report.record(i, seed, &label, "normalized", res.normalized.value, res.normalized.error_estimate, flag);
        report.record(i, seed, &label, "direct", res.direct.value, res.direct.error_estimate, flag);
        report.record(i, seed, &label, "relative_gap", res.relative_gap(), 0.0, flag);
        worst = worst.max(res.relative_gap());
    }
    report.stat("max_relative_gap", worst);
    report.check("conjugation_identity", worst < 1e-4, format!("max relative gap {worst:.2e}"));
    Ok(report)
}

/// The values displayed in the paper's 3x3 example.
#[derive(Clone, Debug, PartialEq)]
pub struct PaperExample {
    pub null_spaces: Vec<Vec<Vec<Rational>>>,
    /// `N_1 ∩ N_2`, `N_1 ∩ N_3`, `N_2 ∩ N_3`.
    pub intersections: Vec<Vec<Rational>>,
    pub c: RationalMatrix,
    pub b: RationalMatrix,
    pub b_inv: RationalMatrix,
}

fn ints(xs: &[i64]) -> Vec<Rational> {
    xs.iter().map(|&x| int(x)).collect()
}

impl PaperExample {
    pub fn displayed() -> Self {
        Self {
            null_spaces: vec![
                vec![ints(&[1, 0, 4]), ints(&[0, 1, 4])],
                vec![ints(&[1, 1, 0]), ints(&[0, 0, 1])],
                vec![ints(&[1, 0, 1]), ints(&[0, 1, 0])],
            ],
            intersections: vec![ints(&[1, 1, 8]), ints(&[4, -3, 4]), ints(&[1, 1, 1])],
            c: RationalMatrix::from_i64_rows(&[&[1, 4, 1], &[1, -3, 1], &[1, 4, 8]]),
            b: RationalMatrix::from_i64_rows(&[&[7, 7, -7], &[0, -14, 21], &[-7, 0, 7]]),
            b_inv: RationalMatrix::new(
                3,
                3,
                vec![
                    frac(2, 21),
                    frac(1, 21),
                    frac(-1, 21),
                    frac(1, 7),
                    int(0),
                    frac(1, 7),
                    frac(2, 21),
                    frac(1, 21),
                    frac(2, 21),
                ],
            )
            .expect("3x3"),
        }
    }
}

fn mismatch(what: &str, entry: String, expected: String, got: String) -> OplabError {
    OplabError::Mismatch {
        what: what.to_string(),
        entry,
        expected,
        got,
    }
}

/// Exact comparison; the error names the first differing entry (1-based).
pub fn compare_matrix(what: &str, got: &RationalMatrix, expected: &RationalMatrix) -> Result<(), OplabError> {
    if got.rows() != expected.rows() || got.cols() != expected.cols() {
        return Err(mismatch(
            what,
            "shape".into(),
            format!("{}x{}", expected.rows(), expected.cols()),
            format!("{}x{}", got.rows(), got.cols()),
        ));
    }
    for i in 0..got.rows() {
        for j in 0..got.cols() {
            if got.get(i, j) != expected.get(i, j) {
                return Err(mismatch(
                    what,
                    format!("({}, {})", i + 1, j + 1),
                    expected.get(i, j).to_string(),
                    got.get(i, j).to_string(),
                ));
            }
        }
    }
    Ok(())
}

fn show(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// Runs exactlin on the paper's family and compares every displayed value
/// exactly, then applies `T_{1/2}` to a bump at a safe point.
pub fn reproduce_example() -> Result<Report, OplabError> {
    reproduce_against(&FamilySpec::paper_example(), &PaperExample::displayed())
}

pub fn reproduce_against(family: &FamilySpec, expected: &PaperExample) -> Result<Report, OplabError> {
    let mut report = Report::new("reproduce_example");
    let validation = validate_family(family);
    if !validation.passed() {
        let failed: Vec<&str> = validation.failures().map(|c| c.name.as_str()).collect();
        return Err(OplabError::Config(format!("family fails {}", failed.join(", "))));
    }
    report.check("hypotheses", true, "ranks, direct sum and invertible sum hold");

    for (j, (got, want)) in family.null_spaces().iter().zip(&expected.null_spaces).enumerate() {
        let what = format!("N_{}", j + 1);
        // the displayed generators fix a span, not a basis
        let want_span = Subspace::span(got.ambient_dim(), want)?;
        if let Some(k) = (0..want.len()).find(|&k| !got.contains(&want[k])) {
            return Err(mismatch(&what, format!("generator {}", k + 1), show(&want[k]), got.describe()));
        }
        if !want_span.same_span(got) {
            return Err(mismatch(&what, "dimension".into(), want_span.dim().to_string(), got.dim().to_string()));
        }
        let g: Vec<String> = want.iter().map(|v| show(v)).collect();
        report.check(&what, true, format!("<{}>", g.join(", ")));
    }

    let nulls = family.null_spaces();
    let pairs = [(0, 1), (0, 2), (1, 2)];
    for ((i, j), want) in pairs.iter().zip(&expected.intersections) {
        let what = format!("N_{} ∩ N_{}", i + 1, j + 1);
        let got = nulls[*i].intersect(&nulls[*j])?;
        if !got.same_span(&Subspace::span(got.ambient_dim(), std::slice::from_ref(want))?) {
            return Err(mismatch(&what, "generator 1".into(), show(want), got.describe()));
        }
        report.check(&what, true, format!("<{}>", show(want)));
    }

    let norm = build_normalization(family, None)?;
    compare_matrix("C", &norm.c, &expected.c)?;
    report.check("C", true, norm.c.to_string());
    compare_matrix("B", &norm.b, &expected.b)?;
    report.check("B", true, norm.b.to_string());
    compare_matrix("B^-1", &norm.b_inv, &expected.b_inv)?;
    report.check("B^-1", true, norm.b_inv.to_string());
    for (j, p) in norm.projections.iter().enumerate() {
        let want = RationalMatrix::canonical_projection(family.partition(), j);
        let what = format!("B^-1 A_{} C", j + 1);
        compare_matrix(&what, p, &want)?;
        report.check(&what, true, p.to_string());
    }
    report.check("verify_projections", verify_projections(&norm, family), "exact certificate");

    let r = 0.5;
    let params = KernelParams::new(family.clone(), r)?;
    let x = [0.3, -0.2, 0.5];
    let bump = SmoothBump::new(vec![0.0; 3], 1.0);
    let res = apply_tr(&params, &bump, &x, &QuadOptions::rel(1e-5).with_max_evals(20_000_000))?;
    let label = format!("r={r};x={}", join(&x));
    let flag = if res.flagged() { "unconverged" } else { "" };
    report.record(0, 0, &label, "T_r_bump", res.value, res.error_estimate, flag);
    report.check(
        "smoke_apply",
        res.value > 0.0 && res.value.is_finite() && !res.flagged(),
        format!("T_1/2 bump at ({}) = {:.8}", join(&x), res.value),
    );
    report.notes.push("T_r is bounded from H^p(R^3) into L^q(R^3) for 0 < p < 1/r, 1/q = 1/p - r".into());
    Ok(report)
}

/// `(p, q, N)` rows where the tail condition `q (n(1-r) + N) > n` holds.
pub fn supported_indices(n: usize, r: f64, ps: &[f64]) -> Vec<(f64, f64, usize)> {
    ps.iter()
        .filter_map(|&p| {
            let q = critical_q(p, r).ok()?;
            let big_n = crate::atoms::moment_degree(n, p) + 1;
            (q * (n as f64 * (1.0 - r) + big_n as f64) > n as f64).then_some((p, q, big_n))
        })
        .collect()
}

/// Moment report of one atom: `(beta, value, scale)` for every `|beta| <= N - 1 + extra`.
pub fn atom_moment_table(atom: &Atom, extra: usize) -> Vec<(Vec<u32>, f64, f64)> {
    monomials(atom.n(), atom.spec.moment_degree() + extra)
        .into_iter()
        .map(|b| {
            let v = moment_check(atom, &b);
            let s = atom.moment_scale(&b);
            (b, v, s)
        })
        .collect()
}

pub(crate) fn join(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    parts.join(" ")
}
