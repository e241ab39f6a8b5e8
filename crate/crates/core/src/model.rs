//! Degree-parameterized stochastic model of node and link communities and
//! its expectation-maximization fit.
//!
//! Each node `i` carries one nonnegative parameter `d[i][k]` per community,
//! its expected degree inside community `k`. A community behaves like the
//! configuration null model on its own expected degrees, so the expected
//! weight between `i` and `j` inside `k` is `d[i][k] * d[j][k] / D[k]` with
//! `D[k] = sum_s d[s][k]`, and the expected weight of the pair is the sum
//! over communities.
//!
//! All pair sums run over ordered pairs: every stored edge is visited twice,
//! and a self-loop once with its adjacency entry doubled. With this
//! convention the M-step returns rows that sum exactly to the weighted
//! degree.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Communities whose total expected degree falls below this are dead: they
/// contribute nothing to expected weights and receive no responsibility.
pub const DEAD_COMMUNITY: f64 = 1e-12;

/// Expected community degrees, an `n x c` row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    c: usize,
    d: Vec<f64>,
    totals: Vec<f64>,
}

impl ModelParams {
    /// Wraps a row-major `n x c` matrix. Entries must be finite and nonnegative.
    pub fn from_matrix(n: usize, c: usize, d: Vec<f64>) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidArgument("community count must be at least 1".into()));
        }
        if d.len() != n * c {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {n} x {c}",
                d.len()
            )));
        }
        if let Some(bad) = d.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "parameters must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Self::from_matrix_unchecked(n, c, d))
    }

    fn from_matrix_unchecked(n: usize, c: usize, d: Vec<f64>) -> Self {
        let mut totals = vec![0.0; c];
        for row in d.chunks_exact(c) {
            for (t, x) in totals.iter_mut().zip(row) {
                *t += x;
            }
        }
        ModelParams { n, c, d, totals }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn community_count(&self) -> usize {
        self.c
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.d[i * self.c + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.c..(i + 1) * self.c]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.d
    }

    /// `D[k]`, the total expected degree of each community.
    pub fn community_totals(&self) -> &[f64] {
        &self.totals
    }

    fn inverse_totals(&self) -> Vec<f64> {
        self.totals
            .iter()
            .map(|&t| if t < DEAD_COMMUNITY { 0.0 } else { 1.0 / t })
            .collect()
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { id: i, n: self.n })
        }
    }

    /// Expected weight between `i` and `j` inside community `k`.
    pub fn expected_weight_in_community(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_node(j)?;
        if k >= self.c {
            return Err(Error::InvalidArgument(format!(
                "community {k} out of range for c = {}",
                self.c
            )));
        }
        let total = self.totals[k];
        if total < DEAD_COMMUNITY {
            return Ok(0.0);
        }
        Ok(self.get(i, k) * self.get(j, k) / total)
    }

    /// Expected weight between `i` and `j`, summed over communities.
    pub fn expected_weight(&self, i: usize, j: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_node(j)?;
        let inv = self.inverse_totals();
        Ok(pair_expectation(self.row(i), self.row(j), &inv))
    }

    /// Relabels communities so that new community `k` is old community `perm[k]`.
    pub fn permute_communities(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.c];
        if perm.len() != self.c || perm.iter().any(|&k| k >= self.c || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::InvalidArgument("not a permutation of the communities".into()));
        }
        let mut d = Vec::with_capacity(self.d.len());
        for i in 0..self.n {
            let row = self.row(i);
            d.extend(perm.iter().map(|&k| row[k]));
        }
        Ok(Self::from_matrix_unchecked(self.n, self.c, d))
    }
}

#[inline]
fn pair_expectation(row_i: &[f64], row_j: &[f64], inv_totals: &[f64]) -> f64 {
    row_i
        .iter()
        .zip(row_j)
        .zip(inv_totals)
        .map(|((a, b), inv)| a * b * inv)
        .sum()
}

/// Per-edge community responsibilities, an `m x c` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResponsibilities {
    c: usize,
    q: Vec<f64>,
}

impl EdgeResponsibilities {
    pub fn community_count(&self) -> usize {
        self.c
    }

    pub fn edge_count(&self) -> usize {
        if self.c == 0 {
            0
        } else {
            self.q.len() / self.c
        }
    }

    pub fn get(&self, edge: usize) -> &[f64] {
        &self.q[edge * self.c..(edge + 1) * self.c]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }
}

fn check_shape(g: &Graph, p: &ModelParams) -> Result<()> {
    if g.node_count() != p.n {
        return Err(Error::InvalidArgument(format!(
            "parameters cover {} nodes but the graph has {}",
            p.n,
            g.node_count()
        )));
    }
    Ok(())
}

/// Log-likelihood up to the constants dropped from the Poisson model:
/// `sum_ij A_ij log w_ij - sum_k D_k` over ordered pairs. Returns negative
/// infinity when some observed edge has zero expected weight.
pub fn log_likelihood(g: &Graph, p: &ModelParams) -> f64 {
    debug_assert_eq!(g.node_count(), p.n);
    let inv = p.inverse_totals();
    let mut first = 0.0;
    for e in g.edges() {
        let expected = pair_expectation(p.row(e.source), p.row(e.target), &inv);
        if !(expected > 0.0) {
            return f64::NEG_INFINITY;
        }
        first += 2.0 * e.weight * expected.ln();
    }
    let alive: f64 = p.totals.iter().filter(|&&t| t >= DEAD_COMMUNITY).sum();
    first - alive
}

/// E-step: responsibilities proportional to each community's expected weight.
pub fn e_step(g: &Graph, p: &ModelParams) -> Result<EdgeResponsibilities> {
    check_shape(g, p)?;
    let c = p.c;
    let inv = p.inverse_totals();
    let mut q = vec![0.0; g.edge_count() * c];
    for (e, edge) in g.edges().iter().enumerate() {
        let (ri, rj) = (p.row(edge.source), p.row(edge.target));
        let slot = &mut q[e * c..(e + 1) * c];
        let mut total = 0.0;
        for k in 0..c {
            slot[k] = ri[k] * rj[k] * inv[k];
            total += slot[k];
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Infeasible {
                i: edge.source,
                j: edge.target,
            });
        }
        slot.iter_mut().for_each(|x| *x /= total);
    }
    Ok(EdgeResponsibilities { c, q })
}

/// M-step: `d[i][k] = sum_j A_ij q_ij,k`.
pub fn m_step(g: &Graph, q: &EdgeResponsibilities) -> ModelParams {
    let c = q.c;
    let n = g.node_count();
    let mut d = vec![0.0; n * c];
    for (e, edge) in g.edges().iter().enumerate() {
        let resp = q.get(e);
        let (a, b) = (edge.source, edge.target);
        if a == b {
            let w = 2.0 * edge.weight;
            for k in 0..c {
                d[a * c + k] += w * resp[k];
            }
        } else {
            for k in 0..c {
                let x = edge.weight * resp[k];
                d[a * c + k] += x;
                d[b * c + k] += x;
            }
        }
    }
    ModelParams::from_matrix_unchecked(n, c, d)
}

/// Random start whose rows already sum to the weighted degrees.
pub fn initialize<R: Rng + ?Sized>(g: &Graph, c: usize, rng: &mut R) -> Result<ModelParams> {
    if c < 1 {
        return Err(Error::InvalidArgument("community count must be at least 1".into()));
    }
    let n = g.node_count();
    let mut d = Vec::with_capacity(n * c);
    let mut u = vec![0.0; c];
    for &degree in g.degrees() {
        for x in u.iter_mut() {
            *x = rng.sample(Open01);
        }
        let sum: f64 = u.iter().sum();
        d.extend(u.iter().map(|x| degree * (x / sum)));
    }
    Ok(ModelParams::from_matrix_unchecked(n, c, d))
}

/// Settings for a single EM run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop when `|dL| / (1 + |L|)` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-8,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// Outcome of one EM run, or of the best of several restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub log_likelihood: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// RNG stream of the restart that produced this result.
    pub stream: u64,
}

/// Deterministic generator for restart `stream` under a master seed.
pub fn restart_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// One fused E+M pass: returns the log-likelihood of `p` and writes the
// M-step result into `next`.
fn em_pass(g: &Graph, p: &ModelParams, next: &mut [f64], scratch: &mut [f64]) -> Result<f64> {
    let c = p.c;
    let inv = p.inverse_totals();
    next.iter_mut().for_each(|x| *x = 0.0);
    let mut first = 0.0;
    for edge in g.edges() {
        let (a, b) = (edge.source, edge.target);
        let (ri, rj) = (p.row(a), p.row(b));
        let mut total = 0.0;
        for k in 0..c {
            scratch[k] = ri[k] * rj[k] * inv[k];
            total += scratch[k];
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Infeasible { i: a, j: b });
        }
        first += 2.0 * edge.weight * total.ln();
        let scale = edge.weight / total;
        if a == b {
            for k in 0..c {
                next[a * c + k] += 2.0 * scale * scratch[k];
            }
        } else {
            for k in 0..c {
                let x = scale * scratch[k];
                next[a * c + k] += x;
                next[b * c + k] += x;
            }
        }
    }
    let alive: f64 = p.totals.iter().filter(|&&t| t >= DEAD_COMMUNITY).sum();
    Ok(first - alive)
}

/// Runs EM from `initial` until the relative likelihood change drops below
/// `opts.tol` or `opts.max_iter` steps have been taken.
pub fn fit_from(g: &Graph, initial: ModelParams, opts: &FitOptions) -> Result<FitResult> {
    check_shape(g, &initial)?;
    let (n, c) = (initial.n, initial.c);
    let mut params = initial;
    let mut next = vec![0.0; n * c];
    let mut scratch = vec![0.0; c];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let ll = em_pass(g, &params, &mut next, &mut scratch)?;
        if let Some(&prev) = trace.last() {
            if (ll - prev).abs() / (1.0 + ll.abs()) < opts.tol {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == opts.max_iter {
            break;
        }
        let mut stepped = ModelParams::from_matrix_unchecked(n, c, std::mem::take(&mut next));
        std::mem::swap(&mut params, &mut stepped);
        next = stepped.d;
        iterations += 1;
    }
    let log_likelihood = *trace.last().expect("trace holds the initial likelihood");
    Ok(FitResult {
        params,
        log_likelihood,
        trace,
        iterations,
        converged,
        seed: opts.seed,
        stream: 0,
    })
}

/// One EM run from a random start drawn from stream `stream` of `opts.seed`.
pub fn fit_stream(g: &Graph, c: usize, opts: &FitOptions, stream: u64) -> Result<FitResult> {
    let mut rng = restart_rng(opts.seed, stream);
    let initial = initialize(g, c, &mut rng)?;
    let mut result = fit_from(g, initial, opts)?;
    result.stream = stream;
    Ok(result)
}

/// One EM run from stream 0 of `opts.seed`.
pub fn fit(g: &Graph, c: usize, opts: &FitOptions) -> Result<FitResult> {
    fit_stream(g, c, opts, 0)
}

/// Summary of a multi-start fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartStats {
    pub restarts: usize,
    pub converged: usize,
    pub best_log_likelihood: f64,
    pub worst_log_likelihood: f64,
    pub best_stream: u64,
}

/// Best-likelihood result over `restarts` independent starts. Restarts run
/// in parallel; ties go to the lowest stream so the outcome does not depend
/// on scheduling.
pub fn fit_restarts(
    g: &Graph,
    c: usize,
    opts: &FitOptions,
    restarts: usize,
) -> Result<(FitResult, RestartStats)> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let runs: Vec<FitResult> = (0..restarts as u64)
        .into_par_iter()
        .map(|stream| fit_stream(g, c, opts, stream))
        .collect::<Result<_>>()?;
    let converged = runs.iter().filter(|r| r.converged).count();
    let worst = runs
        .iter()
        .map(|r| r.log_likelihood)
        .fold(f64::INFINITY, f64::min);
    let best = runs
        .into_iter()
        .reduce(|best, r| {
            if r.log_likelihood > best.log_likelihood {
                r
            } else {
                best
            }
        })
        .expect("restarts > 0");
    let stats = RestartStats {
        restarts,
        converged,
        best_log_likelihood: best.log_likelihood,
        worst_log_likelihood: worst,
        best_stream: best.stream,
    };
    Ok((best, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap()
    }

    #[test]
    fn community_expectation_examples() {
        let p = ModelParams::from_matrix(4, 1, vec![2.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(p.expected_weight_in_community(0, 1, 0).unwrap(), 0.5);
        let p = ModelParams::from_matrix(2, 2, vec![0.0, 1.0, 3.0, 1.0]).unwrap();
        assert_eq!(p.expected_weight_in_community(0, 1, 0).unwrap(), 0.0);
        assert!(p.expected_weight_in_community(0, 1, 2).is_err());
        assert!(p.expected_weight(0, 2).is_err());
    }

    #[test]
    fn dead_community_contributes_nothing() {
        let p = ModelParams::from_matrix(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.expected_weight_in_community(0, 1, 1).unwrap(), 0.0);
        assert_eq!(p.expected_weight(0, 1).unwrap(), 0.5);
    }

    #[test]
    fn single_community_is_modularity_null_model() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
        let p = ModelParams::from_matrix(4, 1, g.degrees().to_vec()).unwrap();
        let two_m = g.volume();
        for i in 0..4 {
            for j in 0..4 {
                let want = g.degrees()[i] * g.degrees()[j] / two_m;
                assert!((p.expected_weight(i, j).unwrap() - want).abs() < 1e-15);
            }
        }
        let zero = ModelParams::from_matrix(4, 1, vec![0.0; 4]).unwrap();
        assert_eq!(zero.expected_weight(0, 1).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_states() {
        let g = two_triangles();
        let mut d = vec![1.0; 12];
        d[0] = 0.0;
        d[1] = 0.0;
        let p = ModelParams::from_matrix(6, 2, d).unwrap();
        assert_eq!(log_likelihood(&g, &p), f64::NEG_INFINITY);
        assert!(matches!(e_step(&g, &p), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn single_community_steps() {
        let g = two_triangles();
        let mut rng = restart_rng(3, 0);
        let p = initialize(&g, 1, &mut rng).unwrap();
        assert_eq!(p.matrix(), g.degrees());
        let q = e_step(&g, &p).unwrap();
        assert!(q.matrix().iter().all(|&x| x == 1.0));
        assert_eq!(m_step(&g, &q).matrix(), g.degrees());
        let fit = fit(&g, 1, &FitOptions::default()).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
    }

    #[test]
    fn symmetric_params_give_uniform_responsibilities() {
        let g = two_triangles();
        let p = ModelParams::from_matrix(6, 3, vec![0.7; 18]).unwrap();
        let q = e_step(&g, &p).unwrap();
        assert!(q.matrix().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn zero_communities_rejected() {
        let g = two_triangles();
        assert!(initialize(&g, 0, &mut restart_rng(0, 0)).is_err());
        assert!(fit(&g, 0, &FitOptions::default()).is_err());
    }

    #[test]
    fn fused_pass_matches_separate_steps() {
        let g = Graph::from_weighted_edges(5, &[(0, 1, 1.0), (1, 2, 2.0), (2, 2, 1.5), (3, 4, 1.0), (2, 3, 0.5)]).unwrap();
        let p = initialize(&g, 3, &mut restart_rng(9, 1)).unwrap();
        let mut next = vec![0.0; 15];
        let mut scratch = vec![0.0; 3];
        let ll = em_pass(&g, &p, &mut next, &mut scratch).unwrap();
        assert!((ll - log_likelihood(&g, &p)).abs() < 1e-12);
        let stepped = m_step(&g, &e_step(&g, &p).unwrap());
        for (a, b) in next.iter().zip(stepped.matrix()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let g = two_triangles();
        let a = initialize(&g, 4, &mut restart_rng(42, 7)).unwrap();
        let b = initialize(&g, 4, &mut restart_rng(42, 7)).unwrap();
        assert_eq!(a, b);
        let c = initialize(&g, 4, &mut restart_rng(42, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn permutation_rejects_bad_input() {
        let p = ModelParams::from_matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(p.permute_communities(&[0, 0]).is_err());
        assert_eq!(p.permute_communities(&[1, 0]).unwrap().row(0), &[2.0, 1.0]);
    }
}
