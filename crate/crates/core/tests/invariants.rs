use proptest::prelude::*;

use sbm_core::diagnostics::{canonical_partition, partition_equivalent};
use sbm_core::graph::parse_edge_list;
use sbm_core::posterior::{apply_move, delta_log_posterior_move, undo_move, PosteriorTerms};
use sbm_core::relabel::{best_relabel, coclustering, unswitch, Tallies};
use sbm_core::synthgen::{generate, GeneratorParams, PiSpec, SizeSpec, ThetaSpec};
use sbm_core::{ClusterState, EdgeModel, GraphKind, Hyperparameters, KPrior, Network};

fn kind_strategy() -> impl Strategy<Value = GraphKind> {
    (any::<bool>(), any::<bool>()).prop_map(|(d, l)| GraphKind::new(d, l))
}

fn model_strategy() -> impl Strategy<Value = EdgeModel> {
    prop_oneof![Just(EdgeModel::Binary), Just(EdgeModel::CountWeighted)]
}

/// A random network with up to `max_n` nodes; each pair is present with the drawn flag.
fn network_strategy(max_n: usize) -> impl Strategy<Value = Network> {
    (1..=max_n, kind_strategy(), model_strategy()).prop_flat_map(|(n, kind, model)| {
        let pairs = n * n;
        (prop::collection::vec((any::<bool>(), 1u32..5), pairs)).prop_map(move |cells| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let (present, w) = cells[i * n + j];
                    if !present || (i == j && !kind.self_loops) || (!kind.directed && j < i) {
                        continue;
                    }
                    let w = if model == EdgeModel::Binary { 1 } else { w };
                    edges.push((i as u32, j as u32, w));
                }
            }
            Network::from_edges(n, kind, model, edges).unwrap()
        })
    })
}

fn labels(n: usize, k: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..k, n)
}

fn hp_strategy() -> impl Strategy<Value = Hyperparameters> {
    (0.2f64..3.0, 0.2f64..3.0, 0.2f64..3.0, 0.2f64..3.0, 0.1f64..10.0, 0.2f64..4.0).prop_map(
        |(alpha, beta1, beta2, s, phi, rate)| Hyperparameters {
            alpha,
            beta1,
            beta2,
            s,
            phi,
            k_prior: KPrior::TruncatedPoisson { rate },
        },
    )
}

fn permute(z: &[u32], perm: &[u32]) -> Vec<u32> {
    z.iter().map(|&c| perm[c as usize]).collect()
}

proptest! {
    #[test]
    fn edge_list_round_trip(net in network_strategy(7)) {
        let text = net.to_edge_list();
        let back = parse_edge_list(&text, net.kind(), net.model()).unwrap();
        prop_assert_eq!(back.to_edge_list(), text);
        prop_assert_eq!(back.n_nodes(), net.n_nodes());
        prop_assert_eq!(back.total_weight(), net.total_weight());
    }

    #[test]
    fn posterior_is_invariant_under_relabelling(
        net in network_strategy(6),
        hp in hp_strategy(),
        seed in any::<u64>(),
    ) {
        let n = net.n_nodes();
        let k = 4usize;
        let z: Vec<u32> = (0..n).map(|i| ((seed >> (2 * i)) & 3) as u32).collect();
        let perm = [2u32, 0, 3, 1];
        let terms = PosteriorTerms::new(&hp, net.model()).unwrap();
        let a = ClusterState::from_assignment(&net, z.clone(), k).unwrap().log_posterior(&terms);
        let b = ClusterState::from_assignment(&net, permute(&z, &perm), k).unwrap().log_posterior(&terms);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn node_move_delta_matches_recompute(
        net in network_strategy(7),
        hp in hp_strategy(),
        seed in any::<u64>(),
        node_pick in any::<usize>(),
        to in 0usize..3,
    ) {
        let n = net.n_nodes();
        let z: Vec<u32> = (0..n).map(|i| ((seed >> (3 * i)) % 3) as u32).collect();
        let terms = PosteriorTerms::new(&hp, net.model()).unwrap();
        let mut state = ClusterState::from_assignment(&net, z.clone(), 3).unwrap();
        let before = state.log_posterior(&terms);
        let node = node_pick % n;
        let mv = delta_log_posterior_move(&state, &net, &hp, node, to).unwrap();
        apply_move(&mut state, &mv).unwrap();
        prop_assert!(state.matches_recount(&net));
        let mut z2 = z.clone();
        z2[node] = to as u32;
        let after = ClusterState::from_assignment(&net, z2, 3).unwrap().log_posterior(&terms);
        prop_assert!((after - before - mv.log_delta).abs() < 1e-9);
        undo_move(&mut state, &mv).unwrap();
        prop_assert_eq!(state.z(), &z[..]);
        prop_assert!(state.matches_recount(&net));
    }

    #[test]
    fn partition_equivalence_is_an_equivalence(a in labels(8, 4), perm in Just([3u32, 1, 0, 2]).prop_shuffle()) {
        let b = permute(&a, &perm);
        prop_assert!(partition_equivalent(&a, &a).unwrap());
        prop_assert!(partition_equivalent(&a, &b).unwrap());
        prop_assert!(partition_equivalent(&b, &a).unwrap());
        prop_assert_eq!(canonical_partition(&a), canonical_partition(&b));
        prop_assert_eq!(canonical_partition(&canonical_partition(&a)), canonical_partition(&a));
    }

    #[test]
    fn coclustering_ignores_label_switching(
        states in prop::collection::vec((labels(6, 4), Just([0u32, 1, 2, 3]).prop_shuffle()), 1..12),
    ) {
        let plain: Vec<Vec<u32>> = states.iter().map(|(z, _)| z.clone()).collect();
        let switched: Vec<Vec<u32>> = states.iter().map(|(z, p)| permute(z, p)).collect();
        let a = coclustering(&plain).unwrap();
        let b = coclustering(&switched).unwrap();
        for i in 0..6 {
            prop_assert_eq!(a.row(i), b.row(i));
            prop_assert_eq!(a.get(i, i), 1.0);
        }
    }

    #[test]
    fn unswitch_keeps_each_partition(states in prop::collection::vec(labels(7, 5), 1..20)) {
        let out = unswitch(&states).unwrap();
        prop_assert_eq!(out.states.len(), states.len());
        for (pos, &orig) in out.order.iter().enumerate() {
            prop_assert!(partition_equivalent(&out.states[pos], &states[orig]).unwrap());
        }
        let k1: Vec<usize> = out.order.iter().map(|&i| {
            let mut seen = states[i].clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        }).collect();
        prop_assert!(k1.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..7 {
            let total: f64 = out.membership.row(i).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_relabel_is_optimal(
        history in prop::collection::vec(labels(6, 4), 1..6),
        z in labels(6, 5),
    ) {
        let mut tallies = Tallies::new(6);
        for h in &history {
            tallies.add(h).unwrap();
        }
        let perm = best_relabel(&z, &tallies).unwrap();
        let agreement = |p: &[usize]| -> u64 {
            z.iter().enumerate().map(|(i, &c)| tallies.count(p[c as usize], i)).sum()
        };
        let got = agreement(&perm);
        // Every transposition of the returned permutation is no better.
        for a in 0..perm.len() {
            for b in a + 1..perm.len() {
                let mut q = perm.clone();
                q.swap(a, b);
                prop_assert!(agreement(&q) <= got);
            }
        }
        let identity: Vec<usize> = (0..perm.len()).collect();
        prop_assert!(agreement(&identity) <= got);
    }

    #[test]
    fn generator_is_deterministic_and_well_formed(
        seed in any::<u64>(),
        kind in kind_strategy(),
        model in model_strategy(),
        k in 1usize..5,
    ) {
        let params = GeneratorParams {
            k,
            sizes: SizeSpec::Proportions { n: 30, theta: ThetaSpec::Dirichlet(1.0) },
            pi: match model {
                EdgeModel::Binary => PiSpec::UniformRange(0.0, 1.0),
                EdgeModel::CountWeighted => PiSpec::GammaDraw(1.0, 1.0),
            },
            kind,
            model,
            delta: 0.0,
            seed,
        };
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        prop_assert_eq!(a.network.to_edge_list(), b.network.to_edge_list());
        prop_assert_eq!(&a.z, &b.z);
        prop_assert_eq!(a.z.len(), 30);
        prop_assert!(a.z.iter().all(|&c| (c as usize) < k));
        for (s, d, w) in a.network.edges() {
            prop_assert!(w >= 1);
            prop_assert!(kind.self_loops || s != d);
            prop_assert!(kind.directed || s <= d);
            prop_assert!(model == EdgeModel::CountWeighted || w == 1);
        }
    }
}
