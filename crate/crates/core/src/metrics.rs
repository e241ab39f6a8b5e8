//! Model-independent quality measures: conductance, weighted average
//! conductance, overlapping normalized mutual information and pairwise
//! similarity enrichment.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::inference::Cover;

fn indicator(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut inside = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(Error::NodeOutOfRange { id: v, n });
        }
        inside[v] = true;
    }
    Ok(inside)
}

/// `cut(S) / min(Vol(S), Vol(V \ S))` with volumes from weighted degrees.
pub fn conductance(g: &Graph, s: &[usize]) -> Result<f64> {
    let n = g.node_count();
    let inside = indicator(n, s)?;
    let size = inside.iter().filter(|&&x| x).count();
    if size == 0 || size == n {
        return Err(Error::UndefinedConductance);
    }
    let cut: f64 = g
        .edges()
        .iter()
        .filter(|e| inside[e.source] != inside[e.target])
        .map(|e| e.weight)
        .sum();
    let vol_in: f64 = (0..n).filter(|&i| inside[i]).map(|i| g.degrees()[i]).sum();
    let vol_out = g.volume() - vol_in;
    let denominator = vol_in.min(vol_out);
    if !(denominator > 0.0) {
        return Err(Error::UndefinedConductance);
    }
    Ok(cut / denominator)
}

/// Size-weighted mean conductance `sum N(C) phi(C) / sum N(C)`. Empty sets
/// are skipped; a set holding every node counts with conductance 0.
pub fn wac(g: &Graph, communities: &[Vec<usize>]) -> Result<f64> {
    let n = g.node_count();
    let mut weighted = 0.0;
    let mut total = 0.0;
    for set in communities {
        let members: HashSet<usize> = set.iter().copied().collect();
        if members.is_empty() {
            continue;
        }
        let phi = if members.len() == n {
            log::warn!("a community spans the whole graph; its conductance is taken as 0");
            0.0
        } else {
            conductance(g, set)?
        };
        weighted += members.len() as f64 * phi;
        total += members.len() as f64;
    }
    if total == 0.0 {
        return Err(Error::EmptyCover);
    }
    Ok(weighted / total)
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn binary_entropy(count: usize, n: f64) -> f64 {
    let p = count as f64 / n;
    h(p) + h(1.0 - p)
}

// Normalized conditional entropy H(X|Y) averaged over the clusters of X.
fn conditional(x: &[Vec<bool>], y: &[Vec<bool>], n: usize) -> f64 {
    let nf = n as f64;
    let x_sizes: Vec<usize> = x.iter().map(|s| s.iter().filter(|&&b| b).count()).collect();
    let y_sizes: Vec<usize> = y.iter().map(|s| s.iter().filter(|&&b| b).count()).collect();
    let y_has_trivial = y_sizes.contains(&n);
    let mut total = 0.0;
    for (xk, &xs) in x.iter().zip(&x_sizes) {
        let hx = binary_entropy(xs, nf);
        if hx == 0.0 {
            // A cluster holding every node carries no information; it is
            // matched exactly only by another such cluster.
            total += if y_has_trivial { 0.0 } else { 1.0 };
            continue;
        }
        let mut best = hx;
        for (yl, &ys) in y.iter().zip(&y_sizes) {
            let both = xk.iter().zip(yl).filter(|(&a, &b)| a && b).count();
            let p11 = both as f64 / nf;
            let p10 = (xs - both) as f64 / nf;
            let p01 = (ys - both) as f64 / nf;
            let p00 = (n + both - xs - ys) as f64 / nf;
            if h(p11) + h(p00) > h(p01) + h(p10) {
                let joint = h(p11) + h(p10) + h(p01) + h(p00);
                best = best.min(joint - binary_entropy(ys, nf));
            }
        }
        total += best / hx;
    }
    total / x.len() as f64
}

/// Normalized mutual information between two covers of the same nodes, in
/// the overlapping form that compares binary membership vectors cluster by
/// cluster and matches each cluster to its most informative counterpart.
/// Empty sets are ignored.
pub fn enmi(a: &Cover, b: &Cover) -> Result<f64> {
    let n = a.node_count();
    if b.node_count() != n {
        return Err(Error::InvalidArgument(format!(
            "covers span {} and {} nodes",
            n,
            b.node_count()
        )));
    }
    let a = a.without_empty();
    let b = b.without_empty();
    if a.community_count() == 0 || b.community_count() == 0 {
        return Err(Error::EmptyCover);
    }
    let vectors = |c: &Cover| c.sets().iter().map(|s| indicator(n, s)).collect::<Result<Vec<_>>>();
    let (x, y) = (vectors(&a)?, vectors(&b)?);
    Ok(1.0 - 0.5 * (conditional(&x, &y, n) + conditional(&y, &x, n)))
}

/// Symmetric binary relation over nodes, `mu(i, j) = 1` for listed pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimilarityOracle {
    n: usize,
    pairs: HashSet<(usize, usize)>,
}

impl SimilarityOracle {
    /// Self-pairs are ignored.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = HashSet::new();
        for (i, j) in pairs {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::NodeOutOfRange { id: v, n });
                }
            }
            if i != j {
                set.insert((i.min(j), i.max(j)));
            }
        }
        Ok(SimilarityOracle { n, pairs: set })
    }

    /// Reads `labelA labelB` lines (tab- or whitespace-separated, `#`
    /// comments). Pairs naming labels outside the graph are skipped and
    /// counted in the second return value.
    pub fn parse(text: &str, g: &Graph) -> Result<(Self, usize)> {
        let index = g.label_index();
        let mut pairs = Vec::new();
        let mut skipped = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = if line.contains('\t') {
                line.split('\t').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected two labels, found {} fields", fields.len()),
                });
            }
            match (index.get(fields[0]), index.get(fields[1])) {
                (Some(&i), Some(&j)) => pairs.push((i, j)),
                _ => skipped += 1,
            }
        }
        Ok((SimilarityOracle::new(g.node_count(), pairs)?, skipped))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn similar(&self, i: usize, j: usize) -> bool {
        i != j && self.pairs.contains(&(i.min(j), i.max(j)))
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

/// Mean similarity over distinct unordered pairs that share a community,
/// divided by the mean over all distinct unordered pairs.
pub fn pair_enrichment(cover: &Cover, mu: &SimilarityOracle) -> Result<f64> {
    let n = cover.node_count();
    if mu.node_count() != n {
        return Err(Error::InvalidArgument(format!(
            "oracle spans {} nodes but the cover {}",
            mu.node_count(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::UndefinedEnrichment("fewer than two nodes"));
    }
    let all_pairs = (n * (n - 1) / 2) as f64;
    let background = mu.pair_count() as f64 / all_pairs;
    if background == 0.0 {
        return Err(Error::UndefinedEnrichment("no similar pairs"));
    }
    let mut within = HashSet::new();
    for set in cover.sets() {
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                within.insert((i.min(j), i.max(j)));
            }
        }
    }
    if within.is_empty() {
        return Err(Error::UndefinedEnrichment("no pair shares a community"));
    }
    let similar = within.iter().filter(|&&(i, j)| mu.similar(i, j)).count() as f64;
    Ok(similar / within.len() as f64 / background)
}

/// Ground-truth communities read from `label communityName` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceCover {
    /// Community names in order of first appearance.
    pub names: Vec<String>,
    pub cover: Cover,
}

impl ReferenceCover {
    /// The community name is the last field (tab-separated if the line has a
    /// tab, otherwise the last whitespace token); the rest is the node label.
    /// A node may be listed under several names. Every node of `g` must be
    /// listed and every label must exist in `g`.
    pub fn parse(text: &str, g: &Graph) -> Result<Self> {
        let index = g.label_index();
        let mut names: Vec<String> = Vec::new();
        let mut by_name: HashMap<String, usize> = HashMap::new();
        let mut sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let split = if line.contains('\t') {
                line.rsplit_once('\t')
            } else {
                line.rsplit_once(char::is_whitespace)
            };
            let (label, name) = split.ok_or_else(|| err("expected a label and a community".into()))?;
            let (label, name) = (label.trim(), name.trim());
            let node = *index
                .get(label)
                .ok_or_else(|| err(format!("unknown node label {label:?}")))?;
            let k = *by_name.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                names.len() - 1
            });
            sets.entry(k).or_default().push(node);
        }
        let cover = Cover::new(g.node_count(), sets.into_values().collect())?;
        Ok(ReferenceCover { names, cover })
    }
}
