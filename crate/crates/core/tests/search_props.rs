mod common;

use airfleet::construct::{initialize, ConstructConfig};
use airfleet::feasibility::{evaluate, objective};
use airfleet::geo::build_matrix;
use airfleet::model::{self, GenerationParams, Instance};
use airfleet::search::{apply_move, search, SearchConfig, SearchMode};
use proptest::prelude::*;

fn generated(count: usize, seed: u64) -> Option<Instance> {
    model::generate_instance(
        &model::sample_bases(),
        &model::sample_facilities(),
        count,
        seed,
        &GenerationParams::default(),
        |i| initialize(i, &build_matrix(i), &ConstructConfig::default()).is_ok(),
    )
    .ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moves_keep_feasibility_and_never_worsen(
        seed in any::<u64>(),
        count in 4usize..=20,
        tabu in any::<bool>(),
        permute in any::<bool>(),
        tenure in 1usize..=10,
    ) {
        let Some(instance) = generated(count, seed) else { return Ok(()) };
        let matrix = build_matrix(&instance);
        let start = initialize(&instance, &matrix, &ConstructConfig::default()).unwrap().schedule;
        let config = SearchConfig {
            mode: if tabu { SearchMode::Tabu } else { SearchMode::Neighbourhood },
            tabu_tenure: tenure,
            permute_scan_order: permute,
            rng_seed: seed,
            ..SearchConfig::default()
        };
        let result = search(&instance, &matrix, &start, &config).unwrap();
        let mut current = start.clone();
        let mut value = objective(&instance, &matrix, &current);
        for mv in &result.moves {
            let next = apply_move(&current, mv).unwrap();
            prop_assert!(evaluate(&instance, &matrix, &next).feasible);
            let next_value = objective(&instance, &matrix, &next);
            prop_assert!(next_value <= value + 1e-12);
            prop_assert!((next_value - value - mv.delta_hours).abs() <= 1e-9);
            prop_assert_eq!(&apply_move(&next, &mv.inverse()).unwrap(), &current);
            current = next;
            value = next_value;
        }
        prop_assert_eq!(&current, &result.schedule);
        prop_assert_eq!(value, result.objective_hours);
        for w in result.improvement_trace.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn parallel_evaluation_is_bitwise_sequential(seed in any::<u64>(), count in 4usize..=24, tabu in any::<bool>()) {
        let Some(instance) = generated(count, seed) else { return Ok(()) };
        let matrix = build_matrix(&instance);
        let start = initialize(&instance, &matrix, &ConstructConfig::default()).unwrap().schedule;
        let config = SearchConfig {
            mode: if tabu { SearchMode::Tabu } else { SearchMode::Neighbourhood },
            permute_scan_order: seed % 2 == 0,
            rng_seed: seed,
            ..SearchConfig::default()
        };
        let seq = search(&instance, &matrix, &start, &config).unwrap();
        let par = search(&instance, &matrix, &start, &SearchConfig { parallel_eval: true, ..config }).unwrap();
        prop_assert_eq!(serde_json::to_string(&seq).unwrap(), serde_json::to_string(&par).unwrap());
    }
}

#[test]
fn search_from_the_optimum_moves_nothing() {
    for seed in 0..20 {
        let instance = common::random_instance(seed, 5, 3);
        let matrix = build_matrix(&instance);
        let Some((_, best)) = common::enumerate_optimum(&instance, &matrix) else { continue };
        for config in [SearchConfig::default(), SearchConfig::tabu()] {
            let r = search(&instance, &matrix, &best, &config).unwrap();
            assert!(r.moves.is_empty(), "seed {seed}: {:?}", r.moves);
        }
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let instance = common::random_instance(1, 3, 2);
    let matrix = build_matrix(&instance);
    let empty = model::Schedule::empty(2);
    assert!(search(&instance, &matrix, &empty, &SearchConfig::default()).is_err());
}
