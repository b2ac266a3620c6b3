//! Randomized property checks over generated instances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use metric_descent::cut;
use metric_descent::decomp::ZeroSetDistribution;
use metric_descent::embed;
use metric_descent::gen;
use metric_descent::metric::{self, PointConfig};
use metric_descent::seeds::SeedStream;

fn random_metric(seed: u64, n: usize, dim: usize) -> metric_descent::metric::MetricSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen::random_l1(n, dim, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_size_is_monotone_in_radius(seed in 0u64..1000, n in 2usize..10, r1 in 0.0f64..2.0, r2 in 0.0f64..2.0) {
        let m = random_metric(seed, n, 3);
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        for x in 0..n {
            prop_assert!(metric::ball_size(&m, x, lo) <= metric::ball_size(&m, x, hi));
            prop_assert!(metric::ball_size(&m, x, 0.0) >= 1);
            prop_assert_eq!(metric::ball_size(&m, x, m.diameter()), n);
        }
    }

    #[test]
    fn frechet_maps_are_lipschitz(seed in 0u64..500, n in 2usize..9, t in 1usize..24) {
        let m = random_metric(seed, n, 2);
        let delta = m.min_positive_distance();
        let d = ZeroSetDistribution::from_partitions(&m, delta, SeedStream::new(seed, "prop/f"));
        let e = embed::frechet_map(&m, &d, t, 0);
        let lip = e.measured_lip(&m);
        prop_assert!(lip <= e.lip_bound + 1e-12, "measured {} vs bound {}", lip, e.lip_bound);
    }

    #[test]
    fn cut_decomposition_reconstructs_l1(seed in 0u64..1000, n in 2usize..8, dim in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng as _;
        let pts: Vec<Vec<f64>> =
            (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect()).collect();
        let dec = cut::cut_decomposition(&pts);
        for x in 0..n {
            for y in 0..n {
                let l1: f64 = pts[x].iter().zip(&pts[y]).map(|(a, b)| (a - b).abs()).sum();
                prop_assert!((dec.reconstruct(x, y) - l1).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn truncation_respects_both_bounds(seed in 0u64..1000, n in 2usize..8, tau in 0.05f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng as _;
        let coords: Vec<Vec<f64>> =
            (0..n).map(|_| (0..4).map(|_| rng.gen::<f64>() * 3.0).collect()).collect();
        let p = PointConfig { n, dim: 4, coords };
        let g = embed::truncation_map(&p, tau).unwrap();
        for i in 0..n {
            for j in (i + 1)..n {
                let cap = tau.min(p.euclidean(i, j));
                let gd = g.euclidean(i, j);
                prop_assert!(gd >= 0.5 * cap - 1e-7 * tau);
                prop_assert!(gd <= cap + 1e-7 * tau);
            }
        }
    }

    #[test]
    fn sparsity_is_complement_invariant(seed in 0u64..500, n in 3usize..9, mask in 1u32..0x7f) {
        let m = random_metric(seed, n, 2);
        // capacities from the metric, uniform demands
        let mut w_n = vec![vec![0.0; n]; n];
        let mut w_d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w_n[i][j] = m.dist(i, j);
                    w_d[i][j] = 1.0;
                }
            }
        }
        let inst = cut::CutInstance::new(w_n, w_d).unwrap();
        let side: Vec<bool> = (0..n).map(|k| mask & (1 << k) != 0).collect();
        prop_assume!(side.iter().any(|&s| s) && !side.iter().all(|&s| s));
        let a = cut::sparsity(&inst, &cut::Cut { side: side.clone() }).unwrap();
        let b = cut::sparsity(&inst, &cut::Cut { side: side.iter().map(|&s| !s).collect() }).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn metric_scaling_scales_distances(seed in 0u64..500, n in 2usize..8, s in 0.1f64..10.0) {
        let m = random_metric(seed, n, 3);
        let scaled = m.scaled(s);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((scaled.dist(i, j) - s * m.dist(i, j)).abs() <= 1e-12 * s);
            }
        }
    }
}
