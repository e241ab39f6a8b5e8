//! From fitted parameters to memberships, hybrid structures and covers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{e_step, ModelParams};

/// Whether a community groups nodes or links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommunityType {
    Node,
    Link,
}

impl CommunityType {
    pub fn flipped(self) -> Self {
        match self {
            CommunityType::Node => CommunityType::Link,
            CommunityType::Link => CommunityType::Node,
        }
    }
}

/// Probabilistic node (`n x c`) and link (`m x c`) memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct Memberships {
    c: usize,
    node: Vec<f64>,
    link: Vec<f64>,
}

impl Memberships {
    pub fn from_params(p: &ModelParams, g: &Graph) -> Result<Self> {
        Ok(Memberships {
            c: p.community_count(),
            node: node_memberships(p)?,
            link: link_memberships(p, g)?,
        })
    }

    pub fn community_count(&self) -> usize {
        self.c
    }

    pub fn node_count(&self) -> usize {
        self.node.len() / self.c
    }

    pub fn edge_count(&self) -> usize {
        self.link.len() / self.c
    }

    /// Row `i` of the node-membership matrix.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.node[i * self.c..(i + 1) * self.c]
    }

    /// Row `e` of the link-membership matrix.
    pub fn link(&self, e: usize) -> &[f64] {
        &self.link[e * self.c..(e + 1) * self.c]
    }

    pub fn node_argmax(&self, i: usize) -> usize {
        argmax(self.node(i))
    }

    pub fn link_argmax(&self, e: usize) -> usize {
        argmax(self.link(e))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = k;
        }
    }
    best
}

/// Row-normalized parameters: `S[i][k] = d[i][k] / sum_r d[i][r]`.
pub fn node_memberships(p: &ModelParams) -> Result<Vec<f64>> {
    let c = p.community_count();
    let mut s = Vec::with_capacity(p.node_count() * c);
    for i in 0..p.node_count() {
        let row = p.row(i);
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroDegree(i));
        }
        s.extend(row.iter().map(|x| x / total));
    }
    Ok(s)
}

/// Share of each community in the expected weight of every observed link.
pub fn link_memberships(p: &ModelParams, g: &Graph) -> Result<Vec<f64>> {
    Ok(e_step(g, p)?.matrix().to_vec())
}

/// Deterministic communities for a fixed choice of community types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridStructure {
    pub types: Vec<CommunityType>,
    /// Member nodes of each node-type community (empty for link-type ones).
    pub node_members: Vec<Vec<usize>>,
    /// Member edge indices of each link-type community (empty for node-type ones).
    pub link_members: Vec<Vec<usize>>,
    pub background_nodes: Vec<usize>,
    pub background_links: Vec<usize>,
}

impl HybridStructure {
    pub fn community_count(&self) -> usize {
        self.types.len()
    }

    pub fn link_type_count(&self) -> usize {
        self.types.iter().filter(|&&t| t == CommunityType::Link).count()
    }
}

/// Argmax assignment: a node joins its argmax community when that community
/// is node-type, a link joins its argmax community when it is link-type, and
/// everything else becomes background.
pub fn assign(m: &Memberships, types: &[CommunityType]) -> Result<HybridStructure> {
    let c = m.community_count();
    if types.len() != c {
        return Err(Error::InvalidArgument(format!(
            "{} community types given for {c} communities",
            types.len()
        )));
    }
    let mut node_members = vec![Vec::new(); c];
    let mut link_members = vec![Vec::new(); c];
    let mut background_nodes = Vec::new();
    let mut background_links = Vec::new();
    for i in 0..m.node_count() {
        let k = m.node_argmax(i);
        match types[k] {
            CommunityType::Node => node_members[k].push(i),
            CommunityType::Link => background_nodes.push(i),
        }
    }
    for e in 0..m.edge_count() {
        let k = m.link_argmax(e);
        match types[k] {
            CommunityType::Link => link_members[k].push(e),
            CommunityType::Node => background_links.push(e),
        }
    }
    Ok(HybridStructure {
        types: types.to_vec(),
        node_members,
        link_members,
        background_nodes,
        background_links,
    })
}

/// A family of node sets in which every node appears at least once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    n: usize,
    sets: Vec<Vec<usize>>,
}

impl Cover {
    /// Validates and normalizes (sorted, deduplicated) the given sets.
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::EmptyCover);
        }
        let mut covered = vec![false; n];
        let mut normalized = Vec::with_capacity(sets.len());
        for set in sets {
            let set: BTreeSet<usize> = set.into_iter().collect();
            for &v in &set {
                if v >= n {
                    return Err(Error::NodeOutOfRange { id: v, n });
                }
                covered[v] = true;
            }
            normalized.push(set.into_iter().collect());
        }
        if let Some(v) = covered.iter().position(|&x| !x) {
            return Err(Error::InvalidArgument(format!("node {v} is not covered")));
        }
        Ok(Cover {
            n,
            sets: normalized,
        })
    }

    /// Builds a partition cover from a community label per node.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let c = labels.iter().max().map_or(0, |&k| k + 1);
        let mut sets = vec![Vec::new(); c];
        for (i, &k) in labels.iter().enumerate() {
            sets[k].push(i);
        }
        Cover::new(labels.len(), sets)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn community_count(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn set(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    /// `M_i`: the ascending community indices of every node.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n];
        for (k, set) in self.sets.iter().enumerate() {
            for &v in set {
                m[v].push(k);
            }
        }
        m
    }

    /// True when no node belongs to two communities.
    pub fn is_partition(&self) -> bool {
        self.memberships().iter().all(|m| m.len() == 1)
    }

    /// Number of nodes in more than one community.
    pub fn overlapping_nodes(&self) -> usize {
        self.memberships().iter().filter(|m| m.len() > 1).count()
    }

    /// The same cover without empty communities.
    pub fn without_empty(&self) -> Cover {
        Cover {
            n: self.n,
            sets: self.sets.iter().filter(|s| !s.is_empty()).cloned().collect(),
        }
    }
}

/// Turns a hybrid structure into a cover. Node-type communities contribute
/// their nodes, link-type communities the endpoints of their links, and any
/// node still uncovered joins its argmax community. Community indices are
/// preserved, so some sets may be empty.
pub fn to_cover(h: &HybridStructure, m: &Memberships, g: &Graph) -> Result<Cover> {
    let c = h.community_count();
    let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); c];
    for k in 0..c {
        sets[k].extend(h.node_members[k].iter().copied());
        for &e in &h.link_members[k] {
            let edge = g.edge(e);
            sets[k].insert(edge.source);
            sets[k].insert(edge.target);
        }
    }
    let mut covered = vec![false; g.node_count()];
    for set in &sets {
        for &v in set {
            covered[v] = true;
        }
    }
    for (i, _) in covered.iter().enumerate().filter(|(_, &c)| !c) {
        sets[m.node_argmax(i)].insert(i);
    }
    Cover::new(g.node_count(), sets.into_iter().map(|s| s.into_iter().collect()).collect())
}
