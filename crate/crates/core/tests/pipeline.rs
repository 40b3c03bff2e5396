//! End-to-end behavior across modules.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbqaoa::distributed::{
    classify_nodes, compress, local_solutions, local_update, naive_merge, solve_with_local_solutions, SignSearch,
};
use pbqaoa::harness::{gen_er, gen_regular, random_problem};
use pbqaoa::ising::{brute_force_min, induced_submodel, nine_node_example};
use pbqaoa::partition::louvain;
use pbqaoa::{
    parse_problem, reduce_full, solve_distributed, DistributedConfig, IsingModel, LambdaPolicy, PenaltyWeight,
    QaoaConfig, ReductionConfig,
};

fn config(q: usize, seed: u64) -> DistributedConfig {
    DistributedConfig {
        q_cap: q,
        ..Default::default()
    }
    .with_seed(seed)
}

fn graph(seed: u64, n: usize, weighted: bool) -> IsingModel {
    gen_er(n, 4.0, weighted.then_some((1, 6)), seed).unwrap()
}

#[test]
fn knapsack_through_distributed_solver() {
    let text = "max: 2 x1 + 5 x2 + 2 x3 + 2 x4 - 2 x7 + 8 x1*x2 + 6 x1*x3 + 10 x1*x4 + 4 x1*x5 + 2 x2*x3 \
                + 6 x2*x4 + 3 x2*x6 + 4 x3*x4 + 4 x4*x7 + 7 x1*x3*x4\n8 x1 + 6 x2 + 5 x3 + 3 x4 <= 16\n";
    let problem = parse_problem(text).unwrap();
    let rc = ReductionConfig {
        mu: PenaltyWeight::Fixed(10.0),
        lambda_policy: LambdaPolicy::Fixed(70.0),
        slack_bits_override: vec![Some(2)],
        q_cap: 4,
    };
    let (model, trace) = reduce_full(&problem, &rc).unwrap();
    // Capped below the seven spins, so every solve goes through partitioning.
    for q in [3, 4, 5, 6] {
        let hits = (0..20)
            .filter(|&s| {
                let r = solve_distributed(&model, &config(q, s)).unwrap();
                trace.reconstruct(r.assignment.values()).unwrap().objective == Some(39.0)
            })
            .count();
        assert!(hits >= 1, "q = {q}");
        if q == 3 {
            assert!(hits >= 14, "{hits}");
        }
    }
}

#[test]
fn random_problems_solved_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 0..30 {
        let p = random_problem(&mut rng, 6, 3, 5);
        let (best, _) = p.brute_force_optimum().unwrap();
        let (model, trace) = reduce_full(&p, &ReductionConfig::default()).unwrap();
        let (z, _) = brute_force_min(&model).unwrap();
        assert_eq!(trace.reconstruct(z.values()).unwrap().objective, Some(best), "problem {k}");
        if model.n() > 0 {
            let r = solve_distributed(&model, &config(3, k)).unwrap();
            let rec = trace.reconstruct(r.assignment.values()).unwrap();
            assert_eq!(rec.assignment.len(), p.num_vars());
        }
    }
}

#[test]
fn tree_levels_shrink_and_cover_every_spin() {
    for seed in 0..10 {
        let g = gen_regular(24, 3, Some((1, 6)), seed).unwrap();
        let r = solve_distributed(&g, &config(6, seed)).unwrap();
        assert_eq!(r.assignment.len(), 24);
        let sizes: Vec<usize> = r.levels.iter().map(|l| l.nodes).chain([r.root_size]).collect();
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]), "{sizes:?}");
        let communities: Vec<usize> = r.levels.iter().map(|l| l.community_sizes.len()).chain([1]).collect();
        assert!(communities.windows(2).all(|w| w[1] < w[0]), "{communities:?}");
        assert!(r.root_size <= 6);
        let mut covered: Vec<usize> = r.levels[0].solutions.iter().flat_map(|s| s.nodes.clone()).collect();
        covered.sort_unstable();
        assert_eq!(covered, (0..24).collect::<Vec<_>>());
    }
}

#[test]
fn distributed_beats_or_ties_naive_on_regular_graphs() {
    for seed in 0..10 {
        let g = gen_regular(20, 4, (seed % 2 == 0).then_some((1, 6)), seed).unwrap();
        let cfg = config(6, seed);
        let p = louvain(&g, 6, seed);
        let locals = local_solutions(&g, &p, &cfg).unwrap();
        let ours = solve_with_local_solutions(&g, &p, Some(locals.clone()), &cfg).unwrap();
        let naive = naive_merge(&locals, &g, SignSearch::Exhaustive, &cfg).unwrap();
        assert!(ours.value <= naive.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn compressed_graph_reproduces_community_energy(seed in 0u64..1000) {
        let g = graph(seed, 16, seed % 2 == 0);
        let p = louvain(&g, 6, seed);
        let locals = local_solutions(&g, &p, &config(6, seed)).unwrap();
        for sol in &locals {
            let c = compress(&g, sol);
            let internal = g.restrict(&sol.nodes, false);
            let out_z: Vec<i8> = c.out_nodes.iter().map(|&v| sol.value_of(v)).collect();
            prop_assert!((c.energy(1, &out_z) + c.carried_constant - internal.energy_of(sol.local_z.values())).abs() < 1e-9);
            let flipped: Vec<i8> = sol.nodes.iter().map(|&v| if sol.in_set.contains(&v) { -sol.value_of(v) } else { sol.value_of(v) }).collect();
            prop_assert!((c.energy(-1, &out_z) + c.carried_constant - internal.energy_of(&flipped)).abs() < 1e-9);
        }
    }

    #[test]
    fn local_update_never_loses_to_either_sign(seed in 0u64..1000) {
        let g = graph(seed, 18, seed % 3 == 0);
        let p = louvain(&g, 6, seed);
        let classes = classify_nodes(&g, &p);
        let locals = local_solutions(&g, &p, &config(6, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z: Vec<i8> = (0..18).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        for (sol, (in_set, _)) in locals.iter().zip(&classes) {
            // Candidate: the local in-part under a random sign, current out values.
            let sign: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
            for &v in in_set {
                z[v] = sign * sol.value_of(v);
            }
            let fix: BTreeMap<usize, i8> = (0..18).filter(|v| !in_set.contains(v)).map(|v| (v, z[v])).collect();
            let sub = induced_submodel(&g, in_set, &fix).unwrap();
            let either = [1i8, -1]
                .iter()
                .map(|&s| sub.energy_of(&in_set.iter().map(|&v| s * sol.value_of(v)).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min);
            local_update(&g, sol, &mut z, 12, &QaoaConfig::default()).unwrap();
            let after = sub.energy_of(&in_set.iter().map(|&v| z[v]).collect::<Vec<_>>());
            prop_assert!(after <= either + 1e-9);
        }
    }

    #[test]
    fn regular_generator_has_uniform_degree(n in 6usize..40, d in 1usize..6, seed in 0u64..500) {
        prop_assume!(d < n && (n * d) % 2 == 0);
        let g = gen_regular(n, d, None, seed).unwrap();
        prop_assert!(g.adjacency().iter().all(|a| a.len() == d));
        prop_assert_eq!(g.num_edges(), n * d / 2);
    }
}

#[test]
fn nine_node_report_serializes() {
    let r = solve_distributed(&nine_node_example(), &config(6, 0)).unwrap();
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"tree_height\""));
    let tree = r.merge_tree();
    assert_eq!(tree.level, r.tree_height);
}
