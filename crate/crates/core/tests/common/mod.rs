//! Independent reference computations and fixtures shared by the test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use nlc_core::{parse_gml, Cover, Graph};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense symmetric matrix with a self-loop of weight w stored as 2w.
pub fn dense(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for e in g.edges() {
        if e.source == e.target {
            a[e.source][e.source] += 2.0 * e.weight;
        } else {
            a[e.source][e.target] += e.weight;
            a[e.target][e.source] += e.weight;
        }
    }
    a
}

/// Log-likelihood summed over every ordered node pair of the dense matrix.
pub fn brute_log_likelihood(g: &Graph, d: &[f64], c: usize) -> f64 {
    let n = g.node_count();
    let a = dense(g);
    let totals: Vec<f64> = (0..c).map(|k| (0..n).map(|i| d[i * c + k]).sum()).collect();
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if a[i][j] > 0.0 {
                let expected: f64 = (0..c)
                    .filter(|&k| totals[k] >= 1e-12)
                    .map(|k| d[i * c + k] * d[j * c + k] / totals[k])
                    .sum();
                ll += a[i][j] * expected.ln();
            }
        }
    }
    ll - totals.iter().filter(|&&t| t >= 1e-12).sum::<f64>()
}

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Textbook two-level map equation of a partition given as one label per node.
pub fn standard_map_equation(g: &Graph, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let a = dense(g);
    let volume: f64 = a.iter().flatten().sum();
    let c = labels.iter().max().unwrap() + 1;
    let mut exit = vec![0.0; c];
    let mut inside = vec![0.0; c];
    let mut node_terms = 0.0;
    for i in 0..n {
        let p: f64 = a[i].iter().sum::<f64>() / volume;
        inside[labels[i]] += p;
        node_terms += plogp(p);
        for j in 0..n {
            if labels[j] != labels[i] {
                exit[labels[i]] += a[i][j] / volume;
            }
        }
    }
    let q: f64 = exit.iter().sum();
    plogp(q) - 2.0 * exit.iter().map(|&x| plogp(x)).sum::<f64>() - node_terms
        + (0..c).map(|k| plogp(exit[k] + inside[k])).sum::<f64>()
}

/// Stationary distribution of the overlapping-cover walk by dense Gaussian
/// elimination. States are (node, community) in node-major order.
pub fn dense_visit_rates(g: &Graph, cover: &Cover) -> Option<Vec<((usize, usize), f64)>> {
    let a = dense(g);
    let m = cover.memberships();
    let states: Vec<(usize, usize)> = m
        .iter()
        .enumerate()
        .flat_map(|(i, ks)| ks.iter().map(move |&k| (i, k)))
        .collect();
    let s = states.len();
    // t[x][y]: probability of moving from state x to state y
    let mut t = vec![vec![0.0; s]; s];
    for (x, &(j, comm)) in states.iter().enumerate() {
        let degree: f64 = a[j].iter().sum();
        for (y, &(i, k)) in states.iter().enumerate() {
            let u = a[j][i] / degree;
            if u == 0.0 {
                continue;
            }
            let delta = if m[i].contains(&comm) {
                if k == comm {
                    1.0
                } else {
                    0.0
                }
            } else {
                1.0 / m[i].len() as f64
            };
            t[x][y] += u * delta;
        }
    }
    // Solve p (T - I) = 0 with sum(p) = 1 replacing the last equation.
    let mut sys = vec![vec![0.0; s + 1]; s];
    for y in 0..s {
        for x in 0..s {
            sys[y][x] = t[x][y] - if x == y { 1.0 } else { 0.0 };
        }
    }
    for x in 0..s {
        sys[s - 1][x] = 1.0;
    }
    sys[s - 1][s] = 1.0;
    for col in 0..s {
        let pivot = (col..s)
            .max_by(|&a, &b| sys[a][col].abs().total_cmp(&sys[b][col].abs()))
            .unwrap();
        sys.swap(col, pivot);
        // singular: several closed classes, so the stationary distribution is not unique
        if sys[col][col].abs() < 1e-10 {
            return None;
        }
        for row in 0..s {
            if row != col {
                let f = sys[row][col] / sys[col][col];
                for k in col..=s {
                    sys[row][k] -= f * sys[col][k];
                }
            }
        }
    }
    Some(
        states
            .into_iter()
            .enumerate()
            .map(|(x, st)| (st, sys[x][s] / sys[x][x]))
            .collect(),
    )
}

/// Random graph on `n` nodes without isolated nodes; weights are small
/// integers or reals, with occasional self-loops.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize) -> Graph {
    let p = rng.gen_range(0.1..0.6);
    let weighted = rng.gen_bool(0.5);
    let mut edges = Vec::new();
    let weight = |rng: &mut R| {
        if weighted {
            rng.gen_range(0.5..3.0)
        } else {
            1.0
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                let w = weight(rng);
                edges.push((i, j, w));
            }
        }
        if rng.gen_bool(0.05) {
            let w = weight(rng);
            edges.push((i, i, w));
        }
    }
    let mut touched = vec![false; n];
    for &(i, j, _) in &edges {
        touched[i] = true;
        touched[j] = true;
    }
    for i in 0..n {
        if !touched[i] {
            let mut j = rng.gen_range(0..n);
            if j == i && n > 1 {
                j = (i + 1) % n;
            }
            edges.push((i, j, 1.0));
            touched[j] = true;
        }
    }
    Graph::from_weighted_edges(n, &edges).unwrap()
}

pub fn complete(nodes: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in nodes.clone() {
        for j in i + 1..nodes.end {
            edges.push((i, j));
        }
    }
    edges
}

pub fn two_triangles() -> Graph {
    Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap()
}

/// Three five-cliques, the first two sharing a node, the last two joined by
/// one edge.
pub fn three_cliques() -> Graph {
    let mut edges = complete(0..5);
    edges.extend(complete(4..9));
    edges.extend(complete(9..14));
    edges.push((8, 9));
    Graph::from_edges(14, &edges).unwrap()
}

/// Published parameter values for [`three_cliques`], `[k][i]`.
pub const THREE_CLIQUES_PARAMS: [[f64; 14]; 3] = [
    [
        4.73e-124, 3.04e-123, 1.92e-123, 1.02e-123, 2.84e-17, 3.89e-15, 4.30e-15, 3.84e-15, 0.999991,
        4.999991, 4.0, 4.0, 4.0, 4.0,
    ],
    [
        3.999987, 3.999987, 3.999986, 3.999987, 3.999946, 3.24e-20, 5.36e-19, 8.14e-20, 1.15e-14,
        4.14e-103, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        1.35e-05, 1.35e-05, 1.35e-05, 1.35e-05, 4.000054, 4.0, 4.0, 4.0, 4.000009, 9.04e-06, 6.50e-87,
        8.66e-86, 8.05e-86, 4.21e-86,
    ],
];

/// The published three-clique parameters as an n x c matrix.
pub fn three_cliques_params() -> Vec<f64> {
    let mut d = vec![0.0; 14 * 3];
    for (k, row) in THREE_CLIQUES_PARAMS.iter().enumerate() {
        for (i, &x) in row.iter().enumerate() {
            d[i * 3 + k] = x;
        }
    }
    d
}

/// Members of the instructor's faction in the karate club, 0-based.
pub const KARATE_INSTRUCTOR_FACTION: [usize; 17] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 16, 17, 19, 21];

pub fn data_dir() -> PathBuf {
    std::env::var_os("NLC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

/// Reads a GML dataset from the data directory, or `None` if it is absent.
pub fn dataset(name: &str) -> Option<Graph> {
    let text = std::fs::read_to_string(data_dir().join(name)).ok()?;
    Some(parse_gml(&text).expect("dataset parses").0)
}

pub fn data_file(name: &str) -> Option<String> {
    std::fs::read_to_string(data_dir().join(name)).ok()
}
