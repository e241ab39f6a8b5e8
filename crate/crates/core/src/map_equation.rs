//! Two-level map equation for covers with overlapping communities.
//!
//! The random walk lives on states `(node, community)` with the community
//! taken from the node's membership set. Moving from `(j, s)` to a neighbor
//! `i`, the walker keeps community `s` if `i` belongs to it and otherwise
//! picks one of `i`'s communities uniformly. The stationary visit rates of
//! this chain give the per-community codebook usage and exit rates that
//! enter the description length, measured in bits per step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::inference::Cover;

/// Row-stochastic transition probabilities of the ordinary random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkWeights {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl WalkWeights {
    /// `(neighbor, probability)` pairs leaving node `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[i]..self.offsets[i + 1];
        self.targets[span.clone()]
            .iter()
            .copied()
            .zip(self.probs[span].iter().copied())
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// `u_ij = w_ij / d_i`. A self-loop moves back to its node with probability
/// `2 w_ii / d_i`, matching the degree convention.
pub fn transition_weights(g: &Graph) -> Result<WalkWeights> {
    let n = g.node_count();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    let mut probs = Vec::new();
    offsets.push(0);
    for i in 0..n {
        let degree = g.degrees()[i];
        if !(degree > 0.0) {
            return Err(Error::ZeroDegree(i));
        }
        for &(j, e) in g.neighbors(i) {
            let w = g.edge(e).weight;
            let w = if i == j { 2.0 * w } else { w };
            targets.push(j);
            probs.push(w / degree);
        }
        offsets.push(targets.len());
    }
    Ok(WalkWeights {
        offsets,
        targets,
        probs,
    })
}

/// Power-iteration settings for the visit-rate fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Maximum-norm residual at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

/// Stationary visit rates `p_i^k` over the states `(i, k)`, `k` in `M_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRates {
    community_count: usize,
    // State s is (nodes[s], communities[s]); states of node i are contiguous
    // and ordered by community.
    node_offsets: Vec<usize>,
    communities: Vec<usize>,
    nodes: Vec<usize>,
    rates: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl VisitRates {
    pub fn community_count(&self) -> usize {
        self.community_count
    }

    /// `p_i^k`, or 0 when `k` is not one of node `i`'s communities.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        let span = self.node_offsets[i]..self.node_offsets[i + 1];
        match self.communities[span.clone()].binary_search(&k) {
            Ok(pos) => self.rates[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `(node, community, rate)` for every state.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.communities)
            .zip(&self.rates)
            .map(|((&i, &k), &p)| (i, k, p))
    }

    pub fn total(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Total visit rate of each node summed over its communities.
    pub fn node_totals(&self) -> Vec<f64> {
        let n = self.node_offsets.len() - 1;
        (0..n)
            .map(|i| self.rates[self.node_offsets[i]..self.node_offsets[i + 1]].iter().sum())
            .collect()
    }
}

struct StateChain {
    node_offsets: Vec<usize>,
    communities: Vec<usize>,
    nodes: Vec<usize>,
    // Outgoing transitions of every state in CSR form.
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl StateChain {
    fn build(walk: &WalkWeights, cover: &Cover) -> Self {
        let memberships = cover.memberships();
        let mut node_offsets = Vec::with_capacity(memberships.len() + 1);
        let mut communities = Vec::new();
        let mut nodes = Vec::new();
        node_offsets.push(0);
        for (i, m) in memberships.iter().enumerate() {
            communities.extend_from_slice(m);
            nodes.extend(std::iter::repeat_n(i, m.len()));
            node_offsets.push(communities.len());
        }
        let mut offsets = Vec::with_capacity(communities.len() + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for (&j, &s) in nodes.iter().zip(&communities) {
            for (i, u) in walk.row(j) {
                let span = node_offsets[i]..node_offsets[i + 1];
                match communities[span.clone()].binary_search(&s) {
                    Ok(pos) => {
                        targets.push(span.start + pos);
                        probs.push(u);
                    }
                    Err(_) => {
                        let share = u / span.len() as f64;
                        for state in span {
                            targets.push(state);
                            probs.push(share);
                        }
                    }
                }
            }
            offsets.push(targets.len());
        }
        StateChain {
            node_offsets,
            communities,
            nodes,
            offsets,
            targets,
            probs,
        }
    }

    fn push(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (s, &mass) in p.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for t in self.offsets[s]..self.offsets[s + 1] {
                out[self.targets[t]] += mass * self.probs[t];
            }
        }
    }
}

/// Solves for the stationary visit rates by lazy power iteration, starting
/// from each node's degree share split evenly over its communities. The walk
/// never leaves a connected component, so every component keeps a total mass
/// proportional to its volume.
pub fn solve_visit_rates(g: &Graph, cover: &Cover, opts: &SolverOptions) -> Result<VisitRates> {
    if cover.node_count() != g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "cover spans {} nodes but the graph has {}",
            cover.node_count(),
            g.node_count()
        )));
    }
    let walk = transition_weights(g)?;
    let chain = StateChain::build(&walk, cover);
    let volume = g.volume();
    let mut p: Vec<f64> = chain
        .nodes
        .iter()
        .map(|&i| {
            let share = (chain.node_offsets[i + 1] - chain.node_offsets[i]) as f64;
            g.degrees()[i] / volume / share
        })
        .collect();
    let mut stepped = vec![0.0; p.len()];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        chain.push(&p, &mut stepped);
        residual = p
            .iter()
            .zip(&stepped)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < opts.tol {
            break;
        }
        // Half-lazy step: same fixed point, but no oscillation on bipartite graphs.
        for (a, b) in p.iter_mut().zip(&stepped) {
            *a = 0.5 * (*a + b);
        }
        iterations += 1;
    }
    if residual >= opts.tol {
        return Err(Error::NotConverged {
            iterations,
            residual,
        });
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(VisitRates {
        community_count: cover.community_count(),
        node_offsets: chain.node_offsets,
        communities: chain.communities,
        nodes: chain.nodes,
        rates: p,
        iterations,
        residual,
    })
}

/// `q_out^k = sum_{i in k} p_i^k sum_{j not in k} u_ij`.
pub fn exit_probabilities(v: &VisitRates, g: &Graph, cover: &Cover) -> Result<Vec<f64>> {
    let walk = transition_weights(g)?;
    let memberships = cover.memberships();
    let mut exits = vec![0.0; cover.community_count()];
    for (i, k, p) in v.states() {
        let leaving: f64 = walk
            .row(i)
            .filter(|(j, _)| memberships[*j].binary_search(&k).is_err())
            .map(|(_, u)| u)
            .sum();
        exits[k] += p * leaving;
    }
    Ok(exits)
}

/// Description length and its parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdlReport {
    /// Bits per step.
    pub codelength: f64,
    pub q_out: f64,
    pub q_out_k: Vec<f64>,
    pub p_in_k: Vec<f64>,
    pub index_entropy: f64,
    pub module_entropies: Vec<f64>,
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Two-level codelength `q_out H(Q) + sum_k p_in^k H(P^k)` in bits.
pub fn description_length(v: &VisitRates, exits: &[f64]) -> MdlReport {
    let c = exits.len();
    let mut module_rates: Vec<Vec<f64>> = vec![Vec::new(); c];
    for (_, k, p) in v.states() {
        module_rates[k].push(p);
    }
    let q_out: f64 = exits.iter().sum();
    let index_entropy = if q_out > 0.0 {
        -exits.iter().map(|&q| plogp(q / q_out)).sum::<f64>()
    } else {
        0.0
    };
    let mut p_in_k = Vec::with_capacity(c);
    let mut module_entropies = Vec::with_capacity(c);
    for (rates, &exit) in module_rates.iter().zip(exits) {
        let p_in = exit + rates.iter().sum::<f64>();
        let h = if p_in > 0.0 {
            -plogp(exit / p_in) - rates.iter().map(|&p| plogp(p / p_in)).sum::<f64>()
        } else {
            0.0
        };
        p_in_k.push(p_in);
        module_entropies.push(h);
    }
    let codelength = q_out * index_entropy
        + p_in_k
            .iter()
            .zip(&module_entropies)
            .map(|(p, h)| p * h)
            .sum::<f64>();
    MdlReport {
        codelength,
        q_out,
        q_out_k: exits.to_vec(),
        p_in_k,
        index_entropy,
        module_entropies,
    }
}

/// Solves the visit rates and evaluates the codelength of `cover`.
pub fn map_equation(g: &Graph, cover: &Cover, opts: &SolverOptions) -> Result<MdlReport> {
    let rates = solve_visit_rates(g, cover, opts)?;
    let exits = exit_probabilities(&rates, g, cover)?;
    Ok(description_length(&rates, &exits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_examples() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let w = transition_weights(&tri).unwrap();
        assert!((0..3).all(|i| w.row(i).all(|(_, u)| u == 0.5)));

        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let w = transition_weights(&star).unwrap();
        assert!(w.row(0).all(|(_, u)| (u - 1.0 / 3.0).abs() < 1e-15));
        assert!((1..4).all(|i| w.row(i).all(|(_, u)| u == 1.0)));

        let g = Graph::from_weighted_edges(3, &[(0, 1, 2.0), (0, 2, 1.0)]).unwrap();
        let w = transition_weights(&g).unwrap();
        let row: Vec<_> = w.row(0).collect();
        assert_eq!(row, vec![(1, 2.0 / 3.0), (2, 1.0 / 3.0)]);
    }

    #[test]
    fn self_loop_row_is_stochastic() {
        let g = Graph::from_edges(2, &[(0, 0), (0, 1)]).unwrap();
        let w = transition_weights(&g).unwrap();
        let total: f64 = w.row(0).map(|(_, u)| u).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_degree_rejected() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert!(matches!(transition_weights(&g), Err(Error::ZeroDegree(2))));
    }

    #[test]
    fn triangle_single_module_is_log3() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let cover = Cover::new(3, vec![vec![0, 1, 2]]).unwrap();
        let r = map_equation(&g, &cover, &SolverOptions::default()).unwrap();
        assert!((r.codelength - 3f64.log2()).abs() < 1e-9);
        assert_eq!(r.q_out, 0.0);
    }

    #[test]
    fn components_as_modules_do_not_exit() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let cover = Cover::new(6, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let r = map_equation(&g, &cover, &SolverOptions::default()).unwrap();
        assert_eq!(r.q_out_k, vec![0.0, 0.0]);
        assert!((r.codelength - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn disconnected_components_weighted_by_volume() {
        // triangle (volume 6) plus a single edge (volume 2), one module each
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        let cover = Cover::new(5, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let rates = solve_visit_rates(&g, &cover, &SolverOptions::default()).unwrap();
        let totals = rates.node_totals();
        assert!((totals[0..3].iter().sum::<f64>() - 0.75).abs() < 1e-12);
        assert!((totals[3] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let cover = Cover::new(4, vec![vec![0, 1], vec![1, 2, 3]]).unwrap();
        let opts = SolverOptions {
            tol: 0.0,
            max_iter: 3,
        };
        assert!(matches!(
            solve_visit_rates(&g, &cover, &opts),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn empty_module_contributes_nothing() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let with_empty = Cover::new(3, vec![vec![0, 1, 2], vec![]]).unwrap();
        let plain = Cover::new(3, vec![vec![0, 1, 2]]).unwrap();
        let a = map_equation(&g, &with_empty, &SolverOptions::default()).unwrap();
        let b = map_equation(&g, &plain, &SolverOptions::default()).unwrap();
        assert_eq!(a.codelength, b.codelength);
    }
}
