//! Hybrid node-link community detection.
//!
//! A degree-parameterized stochastic model is fitted to an undirected
//! weighted graph by expectation-maximization. Each fitted community is then
//! read either as a group of nodes or as a group of links, and the types and
//! the number of communities are chosen by minimizing the map-equation
//! description length of the resulting overlapping cover.

pub mod error;
pub mod graph;
pub mod inference;
pub mod map_equation;
pub mod metrics;
pub mod model;
pub mod selection;
pub mod type_search;

pub use error::{Error, Result};
pub use graph::{parse_edge_list, parse_gml, Edge, Graph, GraphBuilder, IngestReport};
pub use inference::{assign, to_cover, CommunityType, Cover, HybridStructure, Memberships};
pub use map_equation::{map_equation, MdlReport, SolverOptions};
pub use model::{fit, fit_restarts, FitOptions, FitResult, ModelParams};
