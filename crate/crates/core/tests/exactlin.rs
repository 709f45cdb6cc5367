use fracop::exactlin::rational::{frac, int};
use fracop::exactlin::{
    build_normalization, family_from_conjugation, random_family, validate_family,
    verify_projections, ExactError, FamilySpec, Rational, RationalMatrix, Subspace,
};
use proptest::prelude::*;

fn v(xs: &[i64]) -> Vec<Rational> {
    xs.iter().map(|&x| int(x)).collect()
}

fn span(vectors: &[&[i64]]) -> Subspace {
    Subspace::new(3, vectors.iter().map(|x| v(x)).collect()).unwrap()
}

#[test]
fn example_null_spaces() {
    let fam = FamilySpec::paper_example();
    let nulls = fam.null_spaces();
    assert!(nulls[0].same_span(&span(&[&[1, 0, 4], &[0, 1, 4]])));
    assert!(nulls[1].same_span(&span(&[&[1, 1, 0], &[0, 0, 1]])));
    assert!(nulls[2].same_span(&span(&[&[1, 0, 1], &[0, 1, 0]])));
    for (a, n) in fam.matrices().iter().zip(&nulls) {
        assert_eq!(a.rank() + n.dim(), 3);
    }
}

#[test]
fn example_pairwise_intersections() {
    let nulls = FamilySpec::paper_example().null_spaces();
    let n12 = nulls[0].intersect(&nulls[1]).unwrap();
    let n13 = nulls[0].intersect(&nulls[2]).unwrap();
    let n23 = nulls[1].intersect(&nulls[2]).unwrap();
    // canonical bases coincide with the displayed generators
    assert_eq!(n12.basis(), &[v(&[1, 1, 8])]);
    assert_eq!(n13.basis(), &[v(&[4, -3, 4])]);
    assert_eq!(n23.basis(), &[v(&[1, 1, 1])]);
}

#[test]
fn example_validates() {
    let report = validate_family(&FamilySpec::paper_example());
    assert!(report.passed(), "{report}");
}

#[test]
fn example_normalization_with_displayed_basis() {
    let fam = FamilySpec::paper_example();
    let choice = vec![vec![v(&[1, 1, 1])], vec![v(&[4, -3, 4])], vec![v(&[1, 1, 8])]];
    let norm = build_normalization(&fam, Some(&choice)).unwrap();
    assert_eq!(norm.c, RationalMatrix::from_i64_rows(&[&[1, 4, 1], &[1, -3, 1], &[1, 4, 8]]));
    assert_eq!(norm.b, RationalMatrix::from_i64_rows(&[&[7, 7, -7], &[0, -14, 21], &[-7, 0, 7]]));
    let expected_inv = RationalMatrix::new(
        3,
        3,
        vec![
            frac(2, 21), frac(1, 21), frac(-1, 21),
            frac(1, 7), int(0), frac(1, 7),
            frac(2, 21), frac(1, 21), frac(2, 21),
        ],
    )
    .unwrap();
    assert_eq!(norm.b_inv, expected_inv);
    for j in 0..3 {
        assert_eq!(norm.projections[j], RationalMatrix::canonical_projection(&[1, 1, 1], j));
    }
    assert!(verify_projections(&norm, &fam));
    // the default basis reproduces the same ordering
    assert_eq!(build_normalization(&fam, None).unwrap(), norm);
}

#[test]
fn perturbed_certificate_is_rejected() {
    let fam = FamilySpec::paper_example();
    let mut norm = build_normalization(&fam, None).unwrap();
    let bumped = norm.c.get(0, 0) + int(1);
    norm.c.set(0, 0, bumped);
    assert!(!verify_projections(&norm, &fam));
}

#[test]
fn invalid_basis_choices() {
    let fam = FamilySpec::paper_example();
    let wrong_span = vec![vec![v(&[1, 0, 0])], vec![v(&[4, -3, 4])], vec![v(&[1, 1, 8])]];
    match build_normalization(&fam, Some(&wrong_span)) {
        Err(ExactError::InvalidBasisChoice { block: 1, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    let too_many = vec![vec![v(&[1, 1, 1]), v(&[2, 2, 2])], vec![v(&[4, -3, 4])], vec![v(&[1, 1, 8])]];
    assert!(build_normalization(&fam, Some(&too_many)).is_err());

    let canon = FamilySpec::canonical(&[2, 1]);
    let dependent = vec![vec![v(&[1, 0, 0]), v(&[2, 0, 0])], vec![v(&[0, 0, 1])]];
    match build_normalization(&canon, Some(&dependent)) {
        Err(ExactError::InvalidBasisChoice { block: 1, reason }) => assert!(reason.contains("dependent")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn rescaled_basis_still_normalizes() {
    let fam = FamilySpec::paper_example();
    let choice = vec![vec![v(&[-2, -2, -2])], vec![v(&[4, -3, 4])], vec![v(&[3, 3, 24])]];
    let norm = build_normalization(&fam, Some(&choice)).unwrap();
    assert!(verify_projections(&norm, &fam));
}

#[test]
fn identity_conjugation_gives_projections() {
    let id = RationalMatrix::identity(3);
    let fam = family_from_conjugation(&id, &id, &[1, 2]).unwrap();
    assert_eq!(fam, FamilySpec::canonical(&[1, 2]));
    assert!(fam.is_canonical());
}

#[test]
fn hundred_random_families_round_trip() {
    let shapes: [(usize, &[usize]); 5] = [(2, &[1, 1]), (3, &[1, 1, 1]), (3, &[2, 1]), (4, &[2, 2]), (4, &[1, 1, 2])];
    for seed in 0..100u64 {
        let (n, partition) = shapes[seed as usize % shapes.len()];
        let fam = random_family(n, partition, seed).unwrap();
        let report = validate_family(&fam);
        assert!(report.passed(), "seed {seed}: {report}");
        let norm = build_normalization(&fam, None).unwrap();
        assert!(verify_projections(&norm, &fam), "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lemma_structure_on_generated_families(seed in any::<u64>(), shape in 0usize..4) {
        let shapes: [(usize, &[usize]); 4] = [(2, &[1, 1]), (3, &[1, 1, 1]), (3, &[1, 2]), (4, &[1, 3])];
        let (n, partition) = shapes[shape];
        let fam = random_family(n, partition, seed).unwrap();
        let blocks = fam.block_intersections();
        for (k, (a, block)) in fam.matrices().iter().zip(&blocks).enumerate() {
            // rank-nullity and block dimensions
            prop_assert_eq!(a.rank() + a.null_space().dim(), n);
            prop_assert_eq!(block.dim(), partition[k]);
            // A_k maps its block intersection onto its range
            let images: Vec<Vec<Rational>> = block.basis().iter().map(|b| a.mul_vec(b)).collect();
            prop_assert_eq!(Subspace::span(n, &images).unwrap().dim(), a.rank());
        }
        let norm = build_normalization(&fam, None).unwrap();
        prop_assert!(verify_projections(&norm, &fam));
    }

    #[test]
    fn parse_display_round_trip(entries in proptest::collection::vec((-50i64..50, 1i64..9), 9)) {
        let m = RationalMatrix::new(3, 3, entries.iter().map(|&(p, q)| frac(p, q)).collect()).unwrap();
        prop_assert_eq!(m.to_string().parse::<RationalMatrix>().unwrap(), m);
    }
}
