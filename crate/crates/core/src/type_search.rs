//! Choosing the type (node or link) of every community so that the induced
//! cover has the shortest description length.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::inference::{assign, to_cover, CommunityType, Cover, HybridStructure, Memberships};
use crate::map_equation::{map_equation, MdlReport, SolverOptions};
use crate::model::restart_rng;

/// Largest community count accepted by [`exhaustive_type_search`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

// Differences below this are treated as ties.
const MDL_EPS: f64 = 1e-12;

/// A type per community together with the description length it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeAssignment {
    pub types: Vec<CommunityType>,
    pub mdl: f64,
}

impl TypeAssignment {
    pub fn link_type_count(&self) -> usize {
        self.types.iter().filter(|&&t| t == CommunityType::Link).count()
    }
}

/// Everything derived from one choice of types.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedStructure {
    pub structure: HybridStructure,
    pub cover: Cover,
    pub report: MdlReport,
}

/// Builds the hybrid structure and cover for `types` and scores the cover.
pub fn evaluate_types(
    m: &Memberships,
    types: &[CommunityType],
    g: &Graph,
    solver: &SolverOptions,
) -> Result<EvaluatedStructure> {
    let structure = assign(m, types)?;
    let cover = to_cover(&structure, m, g)?;
    let report = map_equation(g, &cover, solver)?;
    Ok(EvaluatedStructure {
        structure,
        cover,
        report,
    })
}

/// Description length of the structure induced by `types`.
pub fn structure_mdl(
    m: &Memberships,
    types: &[CommunityType],
    g: &Graph,
    solver: &SolverOptions,
) -> Result<f64> {
    Ok(evaluate_types(m, types, g, solver)?.report.codelength)
}

/// Settings for [`greedy_type_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeSearchOptions {
    /// Maximum number of sweeps per restart.
    pub max_sweeps: usize,
    /// Number of random starts.
    pub restarts: usize,
    /// Also start once from all-node and once from all-link types.
    pub pure_starts: bool,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for TypeSearchOptions {
    fn default() -> Self {
        TypeSearchOptions {
            max_sweeps: 50,
            restarts: 8,
            pure_starts: true,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

// Many type vectors induce the same cover (a community that captures no
// element contributes nothing either way), so scores are cached per cover.
struct Scorer<'a> {
    m: &'a Memberships,
    g: &'a Graph,
    solver: &'a SolverOptions,
    cache: HashMap<Vec<Vec<usize>>, f64>,
}

impl Scorer<'_> {
    fn score(&mut self, types: &[CommunityType]) -> Result<f64> {
        let structure = assign(self.m, types)?;
        let cover = to_cover(&structure, self.m, self.g)?;
        let key = cover.without_empty().sets().to_vec();
        if let Some(&mdl) = self.cache.get(&key) {
            return Ok(mdl);
        }
        let mdl = map_equation(self.g, &cover, self.solver)?.codelength;
        self.cache.insert(key, mdl);
        Ok(mdl)
    }
}

fn descend(scorer: &mut Scorer, mut types: Vec<CommunityType>, max_sweeps: usize) -> Result<TypeAssignment> {
    let mut current = scorer.score(&types)?;
    for _ in 0..max_sweeps {
        let mut improved = false;
        for k in 0..types.len() {
            types[k] = types[k].flipped();
            let candidate = scorer.score(&types)?;
            if candidate < current - MDL_EPS {
                current = candidate;
                improved = true;
            } else {
                types[k] = types[k].flipped();
            }
        }
        if !improved {
            break;
        }
    }
    Ok(TypeAssignment { types, mdl: current })
}

fn better(a: &TypeAssignment, b: &TypeAssignment) -> bool {
    if a.mdl < b.mdl - MDL_EPS {
        return true;
    }
    if a.mdl > b.mdl + MDL_EPS {
        return false;
    }
    (a.link_type_count(), &a.types) < (b.link_type_count(), &b.types)
}

fn best_of(candidates: Vec<TypeAssignment>) -> TypeAssignment {
    candidates
        .into_iter()
        .reduce(|best, t| if better(&t, &best) { t } else { best })
        .expect("at least one candidate")
}

/// First-improvement descent over single type flips from random starts.
/// Each sweep visits the communities in index order and keeps any flip that
/// strictly shortens the description length; a restart ends after a sweep
/// without improvement or `max_sweeps` sweeps. The best restart wins.
pub fn greedy_type_search(m: &Memberships, g: &Graph, opts: &TypeSearchOptions) -> Result<TypeAssignment> {
    let c = m.community_count();
    let mut starts: Vec<Vec<CommunityType>> = Vec::new();
    if opts.pure_starts {
        starts.push(vec![CommunityType::Node; c]);
        starts.push(vec![CommunityType::Link; c]);
    }
    for r in 0..opts.restarts as u64 {
        let mut rng = restart_rng(opts.seed, r);
        starts.push(
            (0..c)
                .map(|_| if rng.gen::<bool>() { CommunityType::Link } else { CommunityType::Node })
                .collect(),
        );
    }
    if starts.is_empty() {
        return Err(Error::InvalidArgument("type search needs at least one start".into()));
    }
    let results = starts
        .into_par_iter()
        .map(|start| {
            let mut scorer = Scorer {
                m,
                g,
                solver: &opts.solver,
                cache: HashMap::new(),
            };
            descend(&mut scorer, start, opts.max_sweeps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(results))
}

fn types_from_mask(mask: u64, c: usize) -> Vec<CommunityType> {
    (0..c)
        .map(|k| if mask >> k & 1 == 1 { CommunityType::Link } else { CommunityType::Node })
        .collect()
}

/// Global minimum over all `2^c` type vectors. Ties prefer fewer link-type
/// communities, then the lexicographically smallest vector (node before link).
pub fn exhaustive_type_search(m: &Memberships, g: &Graph, solver: &SolverOptions) -> Result<TypeAssignment> {
    let c = m.community_count();
    if c > EXHAUSTIVE_LIMIT {
        return Err(Error::TooManyCommunities {
            c,
            max: EXHAUSTIVE_LIMIT,
        });
    }
    let candidates = (0..1u64 << c)
        .into_par_iter()
        .map(|mask| {
            let types = types_from_mask(mask, c);
            let mdl = structure_mdl(m, &types, g, solver)?;
            Ok(TypeAssignment { types, mdl })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(best_of(candidates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn two_triangles() -> (Graph, Memberships) {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]).unwrap();
        let d = vec![2.0, 0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 2.0, 0.0, 2.0, 0.0, 2.0];
        let p = ModelParams::from_matrix(6, 2, d).unwrap();
        let m = Memberships::from_params(&p, &g).unwrap();
        (g, m)
    }

    #[test]
    fn single_community_types_agree() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let p = ModelParams::from_matrix(4, 1, g.degrees().to_vec()).unwrap();
        let m = Memberships::from_params(&p, &g).unwrap();
        let solver = SolverOptions::default();
        let a = structure_mdl(&m, &[CommunityType::Node], &g, &solver).unwrap();
        let b = structure_mdl(&m, &[CommunityType::Link], &g, &solver).unwrap();
        assert_eq!(a, b);
        let best = greedy_type_search(&m, &g, &TypeSearchOptions::default()).unwrap();
        assert_eq!(best.mdl, a);
    }

    #[test]
    fn disjoint_triangles_prefer_all_node() {
        let (g, m) = two_triangles();
        let best = exhaustive_type_search(&m, &g, &SolverOptions::default()).unwrap();
        // Every assignment gives the same two blocks; the tie rule picks all-node.
        assert_eq!(best.types, vec![CommunityType::Node; 2]);
        assert!((best.mdl - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn greedy_never_worse_than_its_pure_starts() {
        let (g, m) = two_triangles();
        let solver = SolverOptions::default();
        let best = greedy_type_search(&m, &g, &TypeSearchOptions::default()).unwrap();
        let node = structure_mdl(&m, &[CommunityType::Node; 2], &g, &solver).unwrap();
        assert!(best.mdl <= node + 1e-12);
    }

    #[test]
    fn exhaustive_guard() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let c = EXHAUSTIVE_LIMIT + 1;
        let p = ModelParams::from_matrix(2, c, vec![1.0 / c as f64; 2 * c]).unwrap();
        let m = Memberships::from_params(&p, &g).unwrap();
        assert!(matches!(
            exhaustive_type_search(&m, &g, &SolverOptions::default()),
            Err(Error::TooManyCommunities { .. })
        ));
    }

    #[test]
    fn tie_break_order() {
        let a = TypeAssignment {
            types: vec![CommunityType::Link, CommunityType::Node],
            mdl: 1.0,
        };
        let b = TypeAssignment {
            types: vec![CommunityType::Node, CommunityType::Link],
            mdl: 1.0,
        };
        let c = TypeAssignment {
            types: vec![CommunityType::Link, CommunityType::Link],
            mdl: 1.0,
        };
        assert_eq!(best_of(vec![a.clone(), b.clone(), c]).types, b.types);
    }
}
