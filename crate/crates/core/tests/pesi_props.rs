mod common;

use pe_forge::pesi::{
    directed_monotonicity, pesi_report, radial_profile, spearman, undirected_asymmetry,
    undirected_monotonicity,
};
use pe_forge::{cosine_field, embed, gilbert_order, make_frequencies, EmbeddingField, GridShape, PatchOrder};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn spearman_tie_example_matches_oracle() {
    let (xs, ys) = ([1., 2., 2., 4.], [1., 3., 3., 2.]);
    let oracle = common::brute_force_spearman(&xs, &ys).unwrap();
    assert!((spearman(&xs, &ys).unwrap() - oracle).abs() < 1e-12);
}

proptest! {
    #[test]
    fn spearman_agrees_with_brute_force(
        pairs in prop::collection::vec((0u8..6, -1e3f64..1e3), 2..50),
        tie_x in any::<bool>(),
    ) {
        let xs: Vec<f64> = pairs.iter().map(|p| if tie_x { p.0 as f64 } else { p.1 }).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| (p.0 as f64) * 0.5 - p.1.signum()).collect();
        match (spearman(&xs, &ys), common::brute_force_spearman(&xs, &ys)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
            (None, None) => {}
            (a, b) => prop_assert!(false, "definedness differs: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn monotonicity_metrics_stay_in_range(
        w in 2usize..7,
        h in 2usize..7,
        half in 1usize..12,
        seed in any::<u64>(),
    ) {
        let g = GridShape::new(w, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-30.0..30.0)).collect();
        let f = make_frequencies(2 * half, 10_000.0).unwrap();
        let field = cosine_field(&embed(&PatchOrder::new(g, positions).unwrap(), &f)).unwrap();
        let mu = undirected_monotonicity(&field);
        prop_assert!((0.0..=2.0).contains(&mu));
        for n in [1usize, 3, 60] {
            let md = directed_monotonicity(&field, n).unwrap();
            prop_assert!((0.0..=2.0).contains(&md));
        }
        prop_assert!(undirected_asymmetry(&field).is_finite());
    }
}

/// Random orthogonal matrix by Gram-Schmidt on Gaussian-ish columns.
fn random_rotation(d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

#[test]
fn metrics_are_rotation_invariant() {
    let d = 16;
    let g = GridShape::new(7, 6).unwrap();
    let e = embed(&gilbert_order(g), &make_frequencies(d, 10_000.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = random_rotation(d, &mut rng);
    let rotated: Vec<f64> = e
        .rows()
        .flat_map(|row| {
            q.iter()
                .map(|qi| qi.iter().zip(row).map(|(a, b)| a * b).sum::<f64>())
                .collect::<Vec<_>>()
        })
        .collect();
    let er = EmbeddingField::from_raw(g, d, rotated).unwrap();
    let a = pesi_report(&cosine_field(&e).unwrap(), 60, &[]).unwrap();
    let b = pesi_report(&cosine_field(&er).unwrap(), 60, &[]).unwrap();
    assert!((a.m_u - b.m_u).abs() < 1e-9);
    assert!((a.m_d - b.m_d).abs() < 1e-9);
    assert!((a.a_su - b.a_su).abs() < 1e-9);
}

#[test]
fn single_bucket_equals_undirected_on_sinusoid_fields() {
    for (w, h) in [(14, 14), (9, 5), (3, 11)] {
        let g = GridShape::new(w, h).unwrap();
        let field = cosine_field(&embed(
            &pe_forge::zigzag_order(g),
            &make_frequencies(64, 10_000.0).unwrap(),
        ))
        .unwrap();
        let report = pesi_report(&field, 60, &[1]).unwrap();
        assert_eq!(report.single_bucket_residual, Some(0.0));
    }
}

#[test]
fn radial_profile_counts_cover_the_grid() {
    let g = GridShape::new(9, 4).unwrap();
    let field = cosine_field(&embed(&gilbert_order(g), &make_frequencies(8, 10_000.0).unwrap())).unwrap();
    for row in 0..4 {
        for col in 0..9 {
            let p = radial_profile(&field, (row, col)).unwrap();
            assert_eq!(p.counts.iter().sum::<usize>(), g.len() - 1);
            assert!(p.counts.iter().all(|&c| c >= 1));
            // levels are square roots of exact integer radii
            for (l, s) in p.levels.iter().zip(&p.squared_levels) {
                assert_eq!(*l, (*s as f64).sqrt());
            }
        }
    }
}
