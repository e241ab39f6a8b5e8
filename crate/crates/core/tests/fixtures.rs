mod common;

use nlc_core::inference::{assign, link_memberships, node_memberships, to_cover, CommunityType, Cover, Memberships};
use nlc_core::map_equation::{exit_probabilities, map_equation, solve_visit_rates, SolverOptions};
use nlc_core::model::{e_step, fit, fit_restarts, log_likelihood, FitOptions, ModelParams};
use nlc_core::selection::{recursive_bipartition, BipartitionOptions};
use nlc_core::type_search::{greedy_type_search, structure_mdl, TypeSearchOptions};
use nlc_core::Graph;

use common::*;

fn table_params() -> ModelParams {
    ModelParams::from_matrix(14, 3, three_cliques_params()).unwrap()
}

fn edge_index(g: &Graph, a: usize, b: usize) -> usize {
    g.edges()
        .iter()
        .position(|e| (e.source, e.target) == (a.min(b), a.max(b)))
        .unwrap()
}

#[test]
fn dataset_sizes() {
    if let Some(g) = dataset("karate.gml") {
        assert_eq!((g.node_count(), g.edge_count()), (34, 78));
        assert_eq!(g.label(0), "1");
        assert_eq!(g.weighted_degree(0).unwrap(), 16.0);
    }
    if let Some(g) = dataset("football.gml") {
        assert_eq!((g.node_count(), g.edge_count()), (115, 613));
    }
    if let Some(g) = dataset("lesmis.gml") {
        assert_eq!((g.node_count(), g.edge_count()), (77, 254));
    }
}

#[test]
fn published_table_arithmetic() {
    let g = three_cliques();
    let p = table_params();
    // nodes 11 and 12 of the table are 10 and 11 here
    let w = p.expected_weight_in_community(10, 11, 0).unwrap();
    assert!((w - 16.0 / 22.0).abs() < 1e-3);
    assert!(p.expected_weight(0, 5).unwrap() < 1e-5);

    let q = e_step(&g, &p).unwrap();
    assert!(q.get(edge_index(&g, 4, 5))[2] > 0.999);
    let r = link_memberships(&p, &g).unwrap();
    let bridge = edge_index(&g, 8, 9);
    assert!(r[bridge * 3] > 0.999);

    let s = node_memberships(&p).unwrap();
    assert!((s[8 * 3] - 0.2).abs() < 1e-4 && (s[8 * 3 + 2] - 0.8).abs() < 1e-4);
    assert!((s[11 * 3] - 1.0).abs() < 1e-9);

    for i in 0..14 {
        let total: f64 = p.row(i).iter().sum();
        assert!((total - g.degrees()[i]).abs() < 1e-3, "node {i}");
    }
}

#[test]
fn published_table_structure() {
    let g = three_cliques();
    let m = Memberships::from_params(&table_params(), &g).unwrap();
    let types = [CommunityType::Node, CommunityType::Link, CommunityType::Link];
    let h = assign(&m, &types).unwrap();
    let cover = to_cover(&h, &m, &g).unwrap();
    assert_eq!(cover.sets(), &[vec![9, 10, 11, 12, 13], vec![0, 1, 2, 3, 4], vec![4, 5, 6, 7, 8]]);
}

#[test]
fn two_triangles_fit() {
    let g = two_triangles();
    let (best, _) = fit_restarts(&g, 2, &FitOptions::default(), 20).unwrap();
    let k = if best.params.get(0, 0) > 1.0 { 0 } else { 1 };
    for i in 0..6 {
        let own = if i < 3 { k } else { 1 - k };
        assert!((best.params.get(i, own) - 2.0).abs() < 1e-3);
        assert!(best.params.get(i, 1 - own) < 1e-3);
    }
    let oracle = brute_log_likelihood(&g, best.params.matrix(), 2);
    assert!((best.log_likelihood - oracle).abs() < 1e-9);
    assert!((log_likelihood(&g, &best.params) - oracle).abs() < 1e-9);
}

#[test]
fn single_community_fit_converges_in_one_step() {
    let g = random_graph(&mut rng(5), 20);
    let result = fit(&g, 1, &FitOptions::default()).unwrap();
    assert!(result.converged);
    assert_eq!(result.iterations, 1);
    assert_eq!(result.params.matrix(), g.degrees());
}

#[test]
fn karate_two_communities_recover_factions() {
    let Some(g) = dataset("karate.gml") else { return };
    let (best, _) = fit_restarts(&g, 2, &FitOptions::default(), 50).unwrap();
    let m = Memberships::from_params(&best.params, &g).unwrap();
    let side: Vec<usize> = (0..34).map(|i| m.node_argmax(i)).collect();
    let instructor = side[0];
    let agree = (0..34)
        .filter(|i| KARATE_INSTRUCTOR_FACTION.contains(i) == (side[*i] == instructor))
        .count();
    assert!(agree >= 32, "{agree} of 34 nodes agree");
}

#[test]
fn karate_three_communities() {
    let Some(g) = dataset("karate.gml") else { return };
    let (best, _) = fit_restarts(&g, 3, &FitOptions::default(), 50).unwrap();
    let m = Memberships::from_params(&best.params, &g).unwrap();
    let solver = SolverOptions::default();
    let node = structure_mdl(&m, &[CommunityType::Node; 3], &g, &solver).unwrap();
    assert!((node - 4.3563).abs() < 0.01, "{node}");
    let hybrid = greedy_type_search(&m, &g, &TypeSearchOptions::default()).unwrap();
    assert!((hybrid.mdl - 4.2966).abs() < 0.01, "{}", hybrid.mdl);

    let h = assign(&m, &hybrid.types).unwrap();
    let cover = to_cover(&h, &m, &g).unwrap();
    let rates = solve_visit_rates(&g, &cover, &solver).unwrap();
    let exits = exit_probabilities(&rates, &g, &cover).unwrap();
    assert!(exits.iter().all(|&q| q > 0.0));
}

#[test]
fn shared_node_visit_rates_are_symmetric() {
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]).unwrap();
    let cover = Cover::new(5, vec![vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
    let rates = solve_visit_rates(&g, &cover, &SolverOptions::default()).unwrap();
    assert!((rates.get(2, 0) - rates.get(2, 1)).abs() < 1e-12);
    for (a, b) in [(0, 3), (1, 4)] {
        assert!((rates.get(a, 0) - rates.get(b, 1)).abs() < 1e-12);
    }
    for ((i, k), expected) in dense_visit_rates(&g, &cover).unwrap() {
        assert!((rates.get(i, k) - expected).abs() < 1e-12);
    }
    let single = map_equation(&g, &Cover::new(5, vec![(0..5).collect()]).unwrap(), &SolverOptions::default()).unwrap();
    let degrees = [2.0, 2.0, 4.0, 2.0, 2.0];
    let entropy: f64 = degrees.iter().map(|d: &f64| -(d / 12.0) * (d / 12.0).log2()).sum();
    assert!((single.codelength - entropy).abs() < 1e-9);
}

#[test]
fn bipartition_fixtures() {
    let opts = BipartitionOptions::default();
    let (root, _) = recursive_bipartition(&two_triangles(), &opts).unwrap();
    assert_eq!(root.leaves().len(), 2);
    let (root, _) = recursive_bipartition(&Graph::from_edges(5, &complete(0..5)).unwrap(), &opts).unwrap();
    assert_eq!(root.leaves().len(), 1);

    // eight 4-cliques joined in a ring
    let mut edges = Vec::new();
    for b in 0..8 {
        edges.extend(complete(4 * b..4 * b + 4));
        edges.push((4 * b + 3, (4 * b + 4) % 32));
    }
    let g = Graph::from_edges(32, &edges).unwrap();
    let (root, cover) = recursive_bipartition(&g, &opts).unwrap();
    assert!(root.depth() <= 32f64.log2() as usize + 3, "depth {}", root.depth());
    assert!(cover.is_partition());
}
