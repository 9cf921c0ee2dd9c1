use corrnet::embed::stress;
use corrnet::{distance_matrix, mds_embed, pearson_matrix, MatrixKind, PairMatrix, ReturnsPanel};
use nalgebra::{DMatrix, Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn euclidean(points: &DMatrix<f64>) -> PairMatrix {
    let n = points.nrows();
    let mut d = DMatrix::from_fn(n, n, |i, j| (points.row(i) - points.row(j)).norm());
    for i in 0..n {
        for j in i + 1..n {
            d[(j, i)] = d[(i, j)];
        }
    }
    PairMatrix::new((0..n).map(|i| format!("P{i}")).collect(), d, MatrixKind::Distance).unwrap()
}

fn corr_distances(n: usize, seed: u64) -> PairMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(40, n, |_, _| StandardNormal.sample(&mut rng));
    let r = ReturnsPanel::from_matrix((0..n).map(|j| format!("S{j}")).collect(), m).unwrap();
    distance_matrix(&pearson_matrix(&r).unwrap()).unwrap()
}

#[test]
fn exact_on_three_dimensional_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // scaled into [0, 2] so the matrix is a valid distance matrix
    let pts = DMatrix::from_fn(10, 3, |_, _| rng.gen_range(-0.5..0.5));
    let d = euclidean(&pts);
    let e = mds_embed(&d, 3).unwrap();
    assert!(e.stress < 1e-8, "stress {}", e.stress);
    for i in 0..10 {
        for j in 0..10 {
            let got = (e.coords.row(i) - e.coords.row(j)).norm();
            assert!((got - d.get(i, j)).abs() < 1e-8);
        }
    }
    assert!(e.warnings.is_empty());
}

#[test]
fn beats_random_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..5 {
        let d = corr_distances(8, seed);
        let e = mds_embed(&d, 3).unwrap();
        for _ in 0..100 {
            let random = DMatrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
            assert!(e.stress <= stress(d.values(), &random));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn centred_and_rigid_motion_invariant(seed in 0u64..10_000, ax in -3.0f64..3.0, shift in -5.0f64..5.0) {
        let d = corr_distances(8, seed);
        let e = mds_embed(&d, 3).unwrap();
        for k in 0..3 {
            prop_assert!(e.coords.column(k).mean().abs() < 1e-10);
        }
        prop_assert!(e.stress >= 0.0);
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), ax);
        let mut moved = e.coords.clone();
        for i in 0..8 {
            let p = rot * Vector3::new(moved[(i, 0)], moved[(i, 1)], moved[(i, 2)]);
            for k in 0..3 {
                moved[(i, k)] = p[k] + shift;
            }
        }
        prop_assert!((stress(d.values(), &moved) - e.stress).abs() < 1e-12);
    }

    #[test]
    fn stress_non_increasing_in_dims(seed in 0u64..10_000) {
        let d = corr_distances(9, seed);
        let s: Vec<f64> = (1..=3).map(|k| mds_embed(&d, k).unwrap().stress).collect();
        prop_assert!(s[2] <= s[1] + 1e-12 && s[1] <= s[0] + 1e-12, "{:?}", s);
    }
}
