use super::*;
use crate::graph::{parse_edge_list, EdgeModel, GraphKind, Network};
use crate::math::{ln_gamma, log_sum_exp};
use crate::posterior::{ClusterState, Hyperparameters, PosteriorTerms};
use alloc::vec;
use alloc::vec::Vec;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn chain_at<'a>(net: &'a Network, hp: &Hyperparameters, z: Vec<u32>, k: usize, seed: u64, moves: &[MoveKind]) -> Chain<'a> {
    let state = ClusterState::from_assignment(net, z, k).unwrap();
    Chain::from_state(net, hp, state, seed, 0, moves).unwrap()
}

fn fresh_log_post(chain: &Chain, net: &Network, hp: &Hyperparameters) -> f64 {
    let state = ClusterState::from_assignment(net, chain.state().z().to_vec(), chain.state().k()).unwrap();
    state.log_posterior(&PosteriorTerms::new(hp, net.model()).unwrap())
}

#[test]
fn accept_ratio_examples() {
    assert_eq!(accept_ratio(-3.0, -3.0, -1.0, -1.0), 1.0);
    assert!(close(accept_ratio(-3.0, -3.0 - core::f64::consts::LN_2, 0.0, 0.0), 0.5, 1e-15));
    assert_eq!(accept_ratio(-3.0, -1.0, 0.0, 0.0), 1.0);
    assert_eq!(accept_ratio(-3.0, f64::NEG_INFINITY, 0.0, 0.0), 0.0);
}

#[test]
fn mk_ratio_matches_full_recompute() {
    // alpha = 1, K = 1 -> 2, N = 2, truncated Poisson(1) prior on K.
    let net = Network::empty(2, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters::default();
    let terms = PosteriorTerms::new(&hp, EdgeModel::Binary).unwrap();
    let one = ClusterState::from_assignment(&net, vec![0, 0], 1).unwrap();
    let two = ClusterState::from_assignment(&net, vec![0, 0], 2).unwrap();
    let recomputed = two.log_posterior(&terms) - one.log_posterior(&terms);
    assert!(close(terms.log_add_empty_cluster(1, 2), recomputed, 1e-12));
    assert!(close(recomputed, (1.0f64 / 6.0).ln(), 1e-12));
}

#[test]
fn mk_delete_of_nonempty_cluster_is_rejected() {
    let net = Network::empty(3, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 1, 1], 2, 5, &[MoveKind::MK]);
    for _ in 0..200 {
        let before = chain.state().clone();
        let out = chain.move_mk();
        if out.log_ratio.is_none() {
            assert!(!out.accepted);
            assert_eq!(chain.state(), &before);
        }
        assert!(chain.state().sizes().iter().filter(|&&n| n > 0).count() == 2);
    }
}

#[test]
fn mk_insert_then_delete_restores_state() {
    let net = parse_edge_list("0 1\n1 2\n", GraphKind::DIRECTED, EdgeModel::Binary).unwrap();
    let mut state = ClusterState::from_assignment(&net, vec![0, 1, 1], 2).unwrap();
    let original = state.clone();
    state.insert_empty_cluster(1);
    assert_eq!(state.z(), &[0, 2, 2]);
    state.remove_empty_cluster(1).unwrap();
    assert_eq!(state.z(), original.z());
    assert_eq!(state.sizes(), original.sizes());
    assert!(state.matches_recount(&net));
}

#[test]
fn gs_single_node_two_clusters_is_fair() {
    let net = Network::empty(1, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0], 2, 11, &[MoveKind::GS]);
    let mut in_zero = 0;
    let draws = 20_000;
    for _ in 0..draws {
        chain.move_gs();
        in_zero += (chain.state().z()[0] == 0) as u32;
    }
    let p = in_zero as f64 / draws as f64;
    assert!((p - 0.5).abs() < 0.02, "{p}");
}

#[test]
fn gs_with_one_cluster_is_identity() {
    let net = parse_edge_list("0 1\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 0], 1, 1, &[MoveKind::GS]);
    for _ in 0..10 {
        let out = chain.move_gs();
        assert!(out.accepted && !out.changed);
    }
}

#[test]
fn gs_draws_follow_full_conditional() {
    // Node 0 is linked to both members of cluster 1, so it should prefer it.
    let net = parse_edge_list("0 1\n0 2\n1 2\n3 4\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let terms = PosteriorTerms::new(&hp, EdgeModel::Binary).unwrap();
    let base = vec![0u32, 1, 1, 2, 2];
    let logs: Vec<f64> = (0..3)
        .map(|c| {
            let mut z = base.clone();
            z[0] = c;
            ClusterState::from_assignment(&net, z, 3).unwrap().log_posterior(&terms)
        })
        .collect();
    let norm = log_sum_exp(&logs);
    let expected: Vec<f64> = logs.iter().map(|l| (l - norm).exp()).collect();
    let probs_sum: f64 = expected.iter().sum();
    assert!(close(probs_sum, 1.0, 1e-12));

    let mut counts = [0u32; 3];
    let mut chain = chain_at(&net, &hp, base.clone(), 3, 2, &[MoveKind::GS]);
    let trials = 30_000;
    for _ in 0..trials {
        chain.gibbs_node(0);
        counts[chain.state().z()[0] as usize] += 1;
    }
    for c in 0..3 {
        let p = counts[c] as f64 / trials as f64;
        assert!((p - expected[c]).abs() < 0.02, "cluster {c}: {p} vs {}", expected[c]);
    }
    assert!(close(chain.log_post(), fresh_log_post(&chain, &net, &hp), 1e-9));
}

#[test]
fn m3_on_two_empty_clusters_is_identity() {
    let net = Network::empty(3, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 0, 0], 3, 3, &[MoveKind::M3]);
    let mut saw_empty_pair = false;
    for _ in 0..100 {
        let before = chain.state().clone();
        let out = chain.move_m3();
        if out.log_ratio == Some(0.0) && !out.changed {
            saw_empty_pair = true;
        }
        assert!(out.accepted || (chain.state().z() == before.z() && chain.state().sizes() == before.sizes()));
    }
    assert!(saw_empty_pair);
}

#[test]
fn m3_first_reinsertion_is_fair_on_edgeless_pair() {
    let net = Network::empty(2, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 1], 2, 0, &[MoveKind::M3]);
    let mut tally = crate::posterior::EdgeTally::new();
    chain.state.tally(&net, 0, &mut tally);
    chain.state.detach(0, &tally);
    chain.state.tally(&net, 1, &mut tally);
    chain.state.detach(1, &tally);
    chain.state.tally(&net, 0, &mut chain.tally);
    let (pj, pk) = chain.reinsert_log_probs(0, 1);
    assert!(close(pj.exp(), 0.5, 1e-12));
    assert!(close(pk.exp(), 0.5, 1e-12));
}

#[test]
fn m3_keeps_k_and_other_clusters() {
    let net = parse_edge_list("0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 1, 2, 0, 1, 2], 3, 8, &[MoveKind::M3]);
    for _ in 0..2000 {
        let before = chain.state().clone();
        let out = chain.move_m3();
        assert_eq!(chain.state().k(), before.k());
        let moved: Vec<usize> = (0..6).filter(|&i| chain.state().z()[i] != before.z()[i]).collect();
        let labels: alloc::collections::BTreeSet<u32> =
            moved.iter().flat_map(|&i| [before.z()[i], chain.state().z()[i]]).collect();
        assert!(labels.len() <= 2);
        assert!(out.changed == !moved.is_empty());
        assert!(close(chain.log_post(), fresh_log_post(&chain, &net, &hp), 1e-9));
        assert!(chain.state().matches_recount(&net));
    }
}

#[test]
fn ae_proposal_probabilities() {
    // Splitting 3 nodes into (2, 1) at K = 2.
    let p = eject_log_proposal(2, 1, 2).exp();
    assert!(close(p, 1.0 / 72.0, 1e-15));
    assert!(close(
        eject_log_proposal(2, 1, 2),
        ln_gamma(3.0) + ln_gamma(2.0) - (2.0f64 * 3.0).ln() - ln_gamma(5.0),
        1e-12
    ));
    assert!(close(absorb_log_proposal(3).exp(), 1.0 / 6.0, 1e-15));
    // Ejecting from an empty cluster.
    assert!(close(eject_log_proposal(0, 0, 2).exp(), 1.0 / 6.0, 1e-15));
}

#[test]
fn ae_changes_k_by_one() {
    let net = parse_edge_list("0 1\n2 3\n", GraphKind::DIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 0, 1, 1], 2, 4, &[MoveKind::AE]);
    let mut accepted = 0;
    for _ in 0..5000 {
        let k = chain.state().k();
        let out = chain.move_ae();
        let k2 = chain.state().k();
        if out.accepted {
            accepted += 1;
            assert_eq!(k.abs_diff(k2), 1);
        } else {
            assert_eq!(k, k2);
        }
        assert!(close(chain.log_post(), fresh_log_post(&chain, &net, &hp), 1e-9));
        assert!(chain.state().matches_recount(&net));
    }
    assert!(accepted > 0);
}

#[test]
fn absorb_at_one_cluster_is_abandoned() {
    let net = Network::empty(2, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters { k_prior: crate::posterior::KPrior::Uniform { max_k: 1 }, ..Default::default() };
    let mut chain = chain_at(&net, &hp, vec![0, 0], 1, 4, &[MoveKind::AE, MoveKind::MK]);
    for _ in 0..200 {
        let out = chain.step();
        assert!(!out.accepted);
        assert_eq!(chain.state().k(), 1);
    }
}

#[test]
fn uniform_prior_caps_k() {
    let net = Network::empty(4, GraphKind::DIRECTED, EdgeModel::Binary);
    let hp = Hyperparameters { k_prior: crate::posterior::KPrior::Uniform { max_k: 3 }, ..Default::default() };
    let mut chain = chain_at(&net, &hp, vec![0, 0, 0, 0], 1, 4, &[MoveKind::AE, MoveKind::MK, MoveKind::GS]);
    for _ in 0..5000 {
        chain.step();
        assert!(chain.state().k() <= 3);
    }
}

#[test]
fn running_log_post_tracks_recount() {
    let net = parse_edge_list("0 1\n1 2\n2 0\n3 4\n4 5\n5 3\n0 3\n", GraphKind::DIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let config = SamplerConfig { iterations: 20_000, burn_in: 0, seed: 9, recompute_every: 0, ..Default::default() };
    let mut chain = Chain::new(&net, &hp, &config, 0).unwrap();
    for _ in 0..20_000 {
        chain.step();
    }
    let drift = chain.resync();
    assert!(drift < 1e-8, "{drift}");
}

#[test]
fn same_seed_same_stream() {
    let net = parse_edge_list("0 1\n1 2\n3 4\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let config = SamplerConfig { iterations: 3000, burn_in: 1000, seed: 42, thin: 7, ..Default::default() };
    let collect = |stream| {
        let mut v = Vec::new();
        run_chain(&net, &hp, &config, stream, |s| v.push(s.clone())).unwrap();
        v
    };
    let a = collect(0);
    assert_eq!(a, collect(0));
    assert_ne!(a, collect(1));
    assert_eq!(a.len(), 2000usize.div_ceil(7));
    assert!(a.iter().all(|s| s.k1 <= s.k && s.iter >= 1000));
}

#[test]
fn config_validation() {
    let bad = |c: SamplerConfig| c.validate().is_err();
    assert!(bad(SamplerConfig { burn_in: 10, iterations: 10, ..Default::default() }));
    assert!(bad(SamplerConfig { thin: 0, ..Default::default() }));
    assert!(bad(SamplerConfig { initial_k: 0, ..Default::default() }));
    assert!(bad(SamplerConfig { enabled_moves: "M3".parse().unwrap(), ..Default::default() }));
    assert!(bad(SamplerConfig { enabled_moves: "GS,M3".parse().unwrap(), ..Default::default() }));
    assert!(SamplerConfig { enabled_moves: "MK,GS".parse().unwrap(), ..Default::default() }.validate().is_ok());
    assert!(SamplerConfig { enabled_moves: "AE".parse().unwrap(), ..Default::default() }.validate().is_ok());
    assert!("MK,XX".parse::<MoveSet>().is_err());
}

#[test]
fn move_set_round_trip() {
    let set: MoveSet = "gs, mk".parse().unwrap();
    assert_eq!(alloc::format!("{set}"), "MK,GS");
}

#[test]
fn accepted_moves_have_nonzero_reverse_probability() {
    let net = parse_edge_list("0 1\n1 0\n2 3\n3 3\n", GraphKind::new(true, true), EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let mut chain = chain_at(&net, &hp, vec![0, 1, 0, 1], 2, 77, &MoveKind::ALL);
    for _ in 0..20_000 {
        let out = chain.step();
        if out.accepted {
            if let Some(r) = out.log_ratio {
                assert!(r.is_finite(), "{out:?}");
            }
        }
    }
}

#[test]
fn mk_ae_posterior_matches_exact_on_tiny_network() {
    // Small end-to-end check; the full-size comparison lives in the acceptance suite.
    use crate::diagnostics::{exact_posterior_small, orbit_frequencies, total_variation};
    let net = parse_edge_list("0 1\n1 2\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
    let hp = Hyperparameters::default();
    let exact = exact_posterior_small(&net, &hp, 12).unwrap();
    let config = SamplerConfig { iterations: 300_000, burn_in: 10_000, seed: 3, ..Default::default() };
    let mut samples: Vec<(usize, Vec<u32>)> = Vec::new();
    run_chain(&net, &hp, &config, 0, |s| samples.push((s.k, s.z.clone()))).unwrap();
    let freq = orbit_frequencies(samples.iter().map(|(k, z)| (*k, z.as_slice())));
    let tv = total_variation(&freq, &exact.orbit_map());
    assert!(tv < 0.03, "tv = {tv}");
}
