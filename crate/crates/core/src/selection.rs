//! Choosing the number of communities, and hierarchical bipartitioning.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::inference::{argmax, CommunityType, Cover, HybridStructure, Memberships};
use crate::map_equation::{map_equation, MdlReport, SolverOptions};
use crate::model::{fit_restarts, FitOptions, ModelParams, RestartStats};
use crate::type_search::{evaluate_types, greedy_type_search, TypeAssignment, TypeSearchOptions};

/// Constraint on community types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every community is node-type.
    Node,
    /// Every community is link-type.
    Link,
    /// Types are searched.
    Hybrid,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Node, Scheme::Link, Scheme::Hybrid];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Node => "node",
            Scheme::Link => "link",
            Scheme::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(Scheme::Node),
            "link" => Ok(Scheme::Link),
            "hybrid" => Ok(Scheme::Hybrid),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Settings shared by fitting, type search and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub fit: FitOptions,
    /// EM restarts per community count.
    pub restarts: usize,
    pub type_search: TypeSearchOptions,
    pub solver: SolverOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            fit: FitOptions::default(),
            restarts: 50,
            type_search: TypeSearchOptions::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl SelectionOptions {
    /// Uses `seed` as the master seed for both fitting and type search.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fit.seed = seed;
        self.type_search.seed = seed;
        self
    }
}

/// The structure chosen under one scheme for a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub assignment: TypeAssignment,
    pub structure: HybridStructure,
    pub cover: Cover,
    pub report: MdlReport,
}

/// Type selection for fitted memberships under `scheme`.
pub fn resolve_scheme(
    m: &Memberships,
    g: &Graph,
    scheme: Scheme,
    opts: &SelectionOptions,
) -> Result<SchemeResult> {
    let c = m.community_count();
    let types = match scheme {
        Scheme::Node => vec![CommunityType::Node; c],
        Scheme::Link => vec![CommunityType::Link; c],
        Scheme::Hybrid => {
            let mut search = opts.type_search;
            search.solver = opts.solver;
            greedy_type_search(m, g, &search)?.types
        }
    };
    let evaluated = evaluate_types(m, &types, g, &opts.solver)?;
    Ok(SchemeResult {
        scheme,
        assignment: TypeAssignment {
            types,
            mdl: evaluated.report.codelength,
        },
        structure: evaluated.structure,
        cover: evaluated.cover,
        report: evaluated.report,
    })
}

/// One community count of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub c: usize,
    /// Best log-likelihood over the restarts; `None` if the row failed.
    pub log_likelihood: Option<f64>,
    pub restart_stats: Option<RestartStats>,
    pub params: Option<ModelParams>,
    pub memberships: Option<Memberships>,
    pub schemes: Vec<SchemeResult>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeResult> {
        self.schemes.iter().find(|r| r.scheme == scheme)
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn sweep_row(g: &Graph, c: usize, schemes: &[Scheme], opts: &SelectionOptions) -> Result<SweepRow> {
    let (best, stats) = fit_restarts(g, c, &opts.fit, opts.restarts)?;
    let m = Memberships::from_params(&best.params, g)?;
    let results = schemes
        .iter()
        .map(|&s| resolve_scheme(&m, g, s, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRow {
        c,
        log_likelihood: Some(best.log_likelihood),
        restart_stats: Some(stats),
        params: Some(best.params),
        memberships: Some(m),
        schemes: results,
        error: None,
    })
}

/// Fits every community count in `cs` (best of `opts.restarts`) and resolves
/// each requested scheme. Rows are returned sorted by `c`; a row whose fit or
/// search fails carries the error instead of aborting the sweep.
pub fn sweep_c(g: &Graph, cs: &[usize], schemes: &[Scheme], opts: &SelectionOptions) -> Result<Vec<SweepRow>> {
    if cs.is_empty() {
        return Err(Error::InvalidArgument("empty community-count range".into()));
    }
    if let Some(&c) = cs.iter().find(|&&c| c == 0) {
        return Err(Error::InvalidArgument(format!("community count must be positive, got {c}")));
    }
    let mut cs = cs.to_vec();
    cs.sort_unstable();
    cs.dedup();
    Ok(cs
        .par_iter()
        .map(|&c| {
            sweep_row(g, c, schemes, opts).unwrap_or_else(|e| SweepRow {
                c,
                log_likelihood: None,
                restart_stats: None,
                params: None,
                memberships: None,
                schemes: Vec::new(),
                error: Some(e.to_string()),
            })
        })
        .collect())
}

/// `[2, min(n, 30)]`, or `[1]` for graphs with fewer than two nodes.
pub fn default_c_range(g: &Graph) -> Vec<usize> {
    let hi = g.node_count().min(30);
    if hi < 2 {
        vec![1]
    } else {
        (2..=hi).collect()
    }
}

/// The argmin-MDL row of a sweep under one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub c: usize,
    pub log_likelihood: f64,
    pub params: ModelParams,
    pub memberships: Memberships,
    pub result: SchemeResult,
}

/// Picks the row with the shortest description length under `scheme`;
/// ties go to the smaller community count.
pub fn select_from(rows: &[SweepRow], scheme: Scheme) -> Result<Selection> {
    let mut best: Option<(&SweepRow, &SchemeResult)> = None;
    for row in rows.iter().filter(|r| !r.failed()) {
        let Some(result) = row.scheme(scheme) else { continue };
        let improves = match best {
            None => true,
            Some((b, r)) => {
                result.report.codelength < r.report.codelength
                    || (result.report.codelength == r.report.codelength && row.c < b.c)
            }
        };
        if improves {
            best = Some((row, result));
        }
    }
    let (row, result) = best.ok_or(Error::AllRowsFailed)?;
    Ok(Selection {
        c: row.c,
        log_likelihood: row.log_likelihood.expect("successful row"),
        params: row.params.clone().expect("successful row"),
        memberships: row.memberships.clone().expect("successful row"),
        result: result.clone(),
    })
}

/// Sweeps `cs` and returns the shortest-description structure under `scheme`.
pub fn select(g: &Graph, cs: &[usize], scheme: Scheme, opts: &SelectionOptions) -> Result<(Selection, Vec<SweepRow>)> {
    let rows = sweep_c(g, cs, &[scheme], opts)?;
    let selection = select_from(&rows, scheme)?;
    Ok((selection, rows))
}

/// When a bipartition is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// The two-community likelihood beats the one-community likelihood by
    /// more than the relative threshold.
    Likelihood,
    /// The two-block cover has a shorter description length than one block.
    Mdl,
}

/// Settings for [`recursive_bipartition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartitionOptions {
    pub fit: FitOptions,
    /// EM restarts per subgraph.
    pub restarts: usize,
    /// Minimum relative log-likelihood gain for a split.
    pub min_gain: f64,
    /// Subgraphs smaller than this are leaves.
    pub min_size: usize,
    pub stop: StopRule,
    pub solver: SolverOptions,
}

impl Default for BipartitionOptions {
    fn default() -> Self {
        BipartitionOptions {
            fit: FitOptions::default(),
            restarts: 10,
            min_gain: 1e-4,
            min_size: 3,
            stop: StopRule::Likelihood,
            solver: SolverOptions::default(),
        }
    }
}

/// Numbers behind a split decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDiagnostics {
    pub log_likelihood_one: Option<f64>,
    pub log_likelihood_two: Option<f64>,
    pub relative_gain: Option<f64>,
    pub mdl_one: Option<f64>,
    pub mdl_two: Option<f64>,
    pub reason: String,
}

impl SplitDiagnostics {
    fn leaf(reason: &str) -> Self {
        SplitDiagnostics {
            log_likelihood_one: None,
            log_likelihood_two: None,
            relative_gain: None,
            mdl_one: None,
            mdl_two: None,
            reason: reason.to_string(),
        }
    }
}

/// A node of the bipartition tree. Node ids refer to the input graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyNode {
    pub nodes: Vec<usize>,
    pub split: bool,
    pub children: Vec<HierarchyNode>,
    pub diagnostics: SplitDiagnostics,
}

impl HierarchyNode {
    /// Node sets of the leaves, left to right.
    pub fn leaves(&self) -> Vec<Vec<usize>> {
        if self.children.is_empty() {
            return vec![self.nodes.clone()];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

fn two_block_mdl(sub: &Graph, halves: &[Vec<usize>; 2], solver: &SolverOptions) -> Result<(f64, f64)> {
    // The walk needs positive degrees, so isolated nodes are left out.
    let active: Vec<usize> = (0..sub.node_count()).filter(|&i| sub.degrees()[i] > 0.0).collect();
    let mut index = vec![usize::MAX; sub.node_count()];
    for (new, &old) in active.iter().enumerate() {
        index[old] = new;
    }
    let core = sub.induced_subgraph(&active);
    let one = Cover::new(active.len(), vec![(0..active.len()).collect()])?;
    let sets = halves
        .iter()
        .map(|h| h.iter().filter(|&&v| index[v] != usize::MAX).map(|&v| index[v]).collect())
        .collect();
    let two = Cover::new(active.len(), sets)?.without_empty();
    Ok((
        map_equation(&core, &one, solver)?.codelength,
        map_equation(&core, &two, solver)?.codelength,
    ))
}

fn bipartition_node(g: &Graph, nodes: Vec<usize>, opts: &BipartitionOptions) -> Result<HierarchyNode> {
    let leaf = |nodes: Vec<usize>, diagnostics: SplitDiagnostics| HierarchyNode {
        nodes,
        split: false,
        children: Vec::new(),
        diagnostics,
    };
    if nodes.len() < opts.min_size.max(2) {
        return Ok(leaf(nodes, SplitDiagnostics::leaf("below minimum size")));
    }
    let sub = g.induced_subgraph(&nodes);
    if sub.edge_count() == 0 {
        return Ok(leaf(nodes, SplitDiagnostics::leaf("no edges")));
    }
    let (one, _) = fit_restarts(&sub, 1, &opts.fit, 1)?;
    let (two, _) = fit_restarts(&sub, 2, &opts.fit, opts.restarts)?;
    let gain = (two.log_likelihood - one.log_likelihood) / one.log_likelihood.abs().max(f64::MIN_POSITIVE);

    // Node-scheme argmax of the two-community fit; isolated nodes go left.
    let mut halves: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for i in 0..sub.node_count() {
        halves[argmax(two.params.row(i))].push(i);
    }
    let mut diagnostics = SplitDiagnostics {
        log_likelihood_one: Some(one.log_likelihood),
        log_likelihood_two: Some(two.log_likelihood),
        relative_gain: Some(gain),
        mdl_one: None,
        mdl_two: None,
        reason: String::new(),
    };
    let accepted = match opts.stop {
        StopRule::Likelihood => gain > opts.min_gain,
        StopRule::Mdl => {
            let (a, b) = two_block_mdl(&sub, &halves, &opts.solver)?;
            diagnostics.mdl_one = Some(a);
            diagnostics.mdl_two = Some(b);
            b < a
        }
    };
    if !accepted {
        diagnostics.reason = "no improvement".into();
        return Ok(leaf(nodes, diagnostics));
    }
    if halves.iter().any(|h| h.is_empty()) {
        diagnostics.reason = "degenerate split".into();
        return Ok(leaf(nodes, diagnostics));
    }
    diagnostics.reason = "split".into();
    let [left, right] = halves.map(|h| h.into_iter().map(|i| nodes[i]).collect::<Vec<_>>());
    let (left, right) = rayon::join(
        || bipartition_node(g, left, opts),
        || bipartition_node(g, right, opts),
    );
    Ok(HierarchyNode {
        nodes,
        split: true,
        children: vec![left?, right?],
        diagnostics,
    })
}

/// Repeatedly splits the graph in two with a two-community fit until no
/// split passes the stop rule. Returns the tree and the leaves as a cover.
pub fn recursive_bipartition(g: &Graph, opts: &BipartitionOptions) -> Result<(HierarchyNode, Cover)> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let root = bipartition_node(g, (0..g.node_count()).collect(), opts)?;
    let cover = Cover::new(g.node_count(), root.leaves())?;
    Ok((root, cover))
}
