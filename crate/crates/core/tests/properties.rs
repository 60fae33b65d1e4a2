use proptest::prelude::*;

use rpfkit_core::involution::{build_kernel, reconstruct_eigenfunction, verify_transpose_lemma};
use rpfkit_core::model::enumerate_words;
use rpfkit_core::thermo::variational_audit;
use rpfkit_core::transfer::{eigendata, eigenmeasure_cylinders, gibbs_cylinders};
use rpfkit_core::zerotemp::max_mean_cycle;
use rpfkit_core::{build_model, Alphabet, AprioriMeasure, CylinderMeasure, Potential, SubshiftModel};

const TOL: f64 = 1e-12;
const MAX_ITER: usize = 100_000;

/// Irreducible models: a Hamiltonian cycle `0 -> 1 -> ... -> 0` plus random
/// extra edges, so strong connectivity is automatic.
fn model_strategy() -> impl Strategy<Value = SubshiftModel> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(any::<bool>(), n * n),
                prop::collection::vec(0.1f64..1.0, n),
            )
        })
        .prop_map(|(n, extra, w)| {
            let mut matrix = vec![vec![false; n]; n];
            for a in 0..n {
                matrix[a][(a + 1) % n] = true;
                for b in 0..n {
                    matrix[a][b] |= extra[a * n + b];
                }
            }
            let total: f64 = w.iter().sum();
            let p = AprioriMeasure::new(w.iter().map(|x| x / total).collect());
            build_model(Alphabet::indexed(n).unwrap(), matrix, p).unwrap()
        })
}

fn with_potential() -> impl Strategy<Value = (SubshiftModel, Potential)> {
    (model_strategy(), 1usize..=3, prop::collection::vec(-1.0f64..1.0, 64)).prop_map(
        |(m, depth, values)| {
            let mut it = values.into_iter().cycle();
            let phi = Potential::from_fn(&m, depth, "random", |_| it.next().unwrap()).unwrap();
            (m, phi)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn eigendata_is_consistent((m, phi) in with_potential()) {
        let spec = eigendata(&m, &phi, TOL, MAX_ITER).unwrap();
        prop_assert!(spec.lambda() > 0.0);
        prop_assert!(spec.residual() <= 1e-10 * spec.lambda());
        prop_assert!(spec.adjoint_residual() <= 1e-10 * spec.lambda());
        prop_assert!(spec.normalization_residual() <= 1e-12);
        prop_assert!(spec.eigenfunction().iter().all(|&f| f > 0.0));
        let depth = spec.depth() + 1;
        let rho = eigenmeasure_cylinders(&m, &phi, &spec, depth).unwrap();
        prop_assert!((rho.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(rho.right_consistency_deviation(&m) < 1e-12);
        let mu = gibbs_cylinders(&m, &phi, &spec, depth).unwrap();
        prop_assert!((mu.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!(mu.left_consistency_deviation(&m) < 1e-10);
    }

    #[test]
    fn pressure_shifts_with_constants((m, phi) in with_potential(), c in -2.0f64..2.0) {
        let a = eigendata(&m, &phi, TOL, MAX_ITER).unwrap();
        let b = eigendata(&m, &phi.shifted(c), TOL, MAX_ITER).unwrap();
        prop_assert!((b.log_lambda() - a.log_lambda() - c).abs() < 1e-10);
    }

    #[test]
    fn variational_inequality((m, phi) in with_potential(), seed in any::<u64>()) {
        use rand::SeedableRng;
        let spec = eigendata(&m, &phi, TOL, MAX_ITER).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let trials: Vec<CylinderMeasure> = (0..10)
            .map(|_| CylinderMeasure::random_markov(&m, &mut rng, spec.depth()).unwrap())
            .collect();
        let rep = variational_audit(&m, &phi, &spec, &trials).unwrap();
        prop_assert!(rep.variational_slack.abs() < 1e-10);
        prop_assert!(rep.max_trial_excess() <= 1e-9);
        prop_assert!(rep.entropy <= 1e-12);
    }

    #[test]
    fn karp_bounds_every_periodic_orbit((m, phi) in with_potential()) {
        let g = phi.lift(&m, phi.depth().max(2)).unwrap();
        let mc = max_mean_cycle(&m, &g).unwrap();
        prop_assert!((mc.value - mc.cycle_mean).abs() < 1e-12);
        let k = g.depth();
        for len in 1..=5 {
            for w in enumerate_words(&m, len).unwrap() {
                if !m.allows(w.last(), w.first()) {
                    continue;
                }
                let mean: f64 = (0..len)
                    .map(|i| g.eval(&(0..k).map(|j| w.0[(i + j) % len]).collect::<Vec<_>>()))
                    .sum::<f64>() / len as f64;
                prop_assert!(mean <= mc.value + 1e-12);
            }
        }
    }

    #[test]
    fn involution_identities((m, phi) in with_potential()) {
        let mut inv = build_kernel(&m, &phi).unwrap();
        prop_assert!(inv.kernel_identity_deviation().unwrap() <= 1e-14);
        inv.attach_eigendata(TOL, MAX_ITER).unwrap();
        prop_assert!(verify_transpose_lemma(&m, &inv, 0).unwrap() <= 1e-12);
        let rec = reconstruct_eigenfunction(&m, &inv).unwrap();
        prop_assert!(rec.deviation <= 1e-10);
        prop_assert!(rec.dual_deviation <= 1e-10);
        prop_assert!((rec.lambda - rec.lambda_dual).abs() <= 1e-10 * rec.lambda);
    }

    #[test]
    fn double_transpose_reconstructs_the_same_eigenfunction((m, phi) in with_potential()) {
        let tt = m.transposed().transposed();
        prop_assert_eq!(tt.admissibility().matrix(), m.admissibility().matrix());
        let mut a = build_kernel(&m, &phi).unwrap();
        a.attach_eigendata(TOL, MAX_ITER).unwrap();
        let mut b = build_kernel(&tt, &phi.lift(&tt, phi.depth()).unwrap()).unwrap();
        b.attach_eigendata(TOL, MAX_ITER).unwrap();
        let ra = reconstruct_eigenfunction(&m, &a).unwrap();
        let rb = reconstruct_eigenfunction(&tt, &b).unwrap();
        for (x, y) in ra.f.iter().zip(&rb.f) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
