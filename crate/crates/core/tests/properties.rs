//! Property tests for structural invariants.

use proptest::prelude::*;

use lapnode::diffusion::radial_walk_laws;
use lapnode::graph::{generate_random_regular_with, GeneratorOptions, Graph};
use lapnode::randomwave::{chi, sample_ensemble};
use lapnode::trilateration::{solve_spheres, system_sigma_min};

fn regular_params() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..20, 3usize..6, any::<u64>()).prop_map(|(half, r, seed)| {
        // Make n * r even and keep n well above r, where the pairing
        // model's rejection rate is moderate.
        let n = (2 * half).max(3 * r + r % 2);
        (n, r, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_list_roundtrip((n, r, seed) in regular_params()) {
        // Dense small instances reject a lot; a generous restart cap keeps
        // the property about the round trip, not about the default cap.
        let opts = GeneratorOptions { max_restarts: 50_000 };
        let g = generate_random_regular_with(n, r, seed, opts).unwrap();
        let text = g.to_edge_list_string();
        let back = Graph::from_edge_list_str(&text).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn walk_laws_conserve_mass_and_parity(r in 3usize..8, steps in 1usize..30) {
        let laws = radial_walk_laws(r, steps);
        for (m, law) in laws.iter().enumerate() {
            let mass: f64 = law.iter().sum();
            prop_assert!((mass - 1.0).abs() <= 1e-12);
            for (d, &q) in law.iter().enumerate() {
                prop_assert!(q >= 0.0);
                if (m + d) % 2 == 1 {
                    prop_assert_eq!(q, 0.0);
                }
            }
        }
    }

    #[test]
    fn sphere_solutions_translate(
        m in 1usize..5,
        seed in any::<u64>(),
        shift in -5.0f64..5.0,
    ) {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        use rand_distr::StandardNormal;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<Vec<f64>> = (0..=m)
            .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        prop_assume!(system_sigma_min(&points).unwrap() > 1e-3);
        let z: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let radii: Vec<f64> = points
            .iter()
            .map(|p| z.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        let shifted: Vec<Vec<f64>> =
            points.iter().map(|p| p.iter().map(|x| x + shift).collect()).collect();
        let sol = solve_spheres(&points, &radii).unwrap();
        let sol_shifted = solve_spheres(&shifted, &radii).unwrap();
        for j in 0..m {
            prop_assert!((sol_shifted.z[j] - (sol.z[j] + shift)).abs() <= 1e-7);
        }
    }

    #[test]
    fn chi_ignores_signs(seed in any::<u64>(), mask in any::<u32>(), m in 1usize..9) {
        let ens = sample_ensemble(6, m, seed).unwrap();
        let feats = chi(&ens);
        // Flip an arbitrary subset of coordinates of node 0 by hand and
        // rebuild its feature row.
        let flipped: Vec<f64> = ens
            .g(0)
            .iter()
            .enumerate()
            .map(|(j, &x)| if mask & (1 << j) != 0 { -x } else { x })
            .collect();
        let mut row = Vec::new();
        for &a in &flipped {
            row.push(a * a);
        }
        for j in 0..m {
            for jp in (j + 1)..m {
                row.push((flipped[j] * flipped[jp]).abs());
            }
        }
        prop_assert_eq!(feats.chi(0), row.as_slice());
    }
}
