use admg_core::checks::{check, check_ef, check_gm, check_lm, check_nm, relation_matrix, Model};
use admg_core::corpus::{
    clique_latent_table, perturb, random_admg, random_dag, random_unconfounded,
};
use admg_core::fixing::fixable_sets;
use admg_core::sim::{generate_system, verify_consistency, verify_fixing_identity};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expected_implications_hold(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_admg(&mut rng, n, 0.4, 0.4);
        let t = clique_latent_table(&mut rng, &g, 2, 2).unwrap();
        let bad = perturb(&mut rng, &t);
        let m = relation_matrix(&[(g.clone(), t), (g, bad)], 0.0).unwrap();
        prop_assert!(m.ok(), "{}", m);
    }

    #[test]
    fn lm_is_order_independent(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_admg(&mut rng, n, 0.4, 0.3);
        let member = clique_latent_table(&mut rng, &g, 2, 2).unwrap();
        let t = perturb(&mut rng, &member);
        let verdicts: Vec<bool> = g
            .topological_orders(6)
            .unwrap()
            .iter()
            .map(|o| check_lm(&g, &t, o, 0.0).unwrap().passed)
            .collect();
        prop_assert!(verdicts.iter().all(|&v| v == verdicts[0]));
    }

    #[test]
    fn ef_matches_gm_when_unconfounded(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_unconfounded(&mut rng, n, 0.5, 0.5);
        let t = clique_latent_table(&mut rng, &g, 2, 2).unwrap();
        for table in [t.clone(), perturb(&mut rng, &t)] {
            prop_assert_eq!(
                check_ef(&g, &table, 0.0).unwrap().passed,
                check_gm(&g, &table, 0.0).unwrap().passed
            );
        }
    }

    #[test]
    fn factorized_dag_tables_are_nested_markov(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(&mut rng, n, 0.5);
        let t = clique_latent_table(&mut rng, &g, 2, 2).unwrap();
        prop_assert!(check_nm(&g, &t, 0.0).unwrap().passed);
        prop_assert!(check(Model::F, &g, &t, 0.0).unwrap().passed);
    }

    #[test]
    fn equation_systems_are_nested_markov_and_identified(seed in any::<u64>(), n in 1usize..=3) {
        let g = random_admg(&mut ChaCha8Rng::seed_from_u64(seed), n, 0.5, 0.5);
        let s = generate_system(&g, seed, 2, 2).unwrap();
        prop_assert!(check_nm(&g, &s.induced_joint(), 0.0).unwrap().passed);
        prop_assert!(verify_consistency(&s).passed);
        for fs in fixable_sets(&g).unwrap() {
            let r = verify_fixing_identity(&s, fs.set, true).unwrap();
            prop_assert!(r.passed, "{:?}", r.violations);
        }
    }
}
