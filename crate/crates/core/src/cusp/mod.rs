//! Groves–Manning cusp spaces: combinatorial horoballs glued to a Cayley
//! ball along peripheral cosets.

pub mod graph;
pub mod probes;
pub mod space;

pub use graph::{
    bfs, combinatorial_horoball, graph_distance, level_reach, tree_path, AdjacencyGraph, Graph, HoroballGraph,
    UNREACHABLE,
};
pub use probes::{
    distance_phi_comparison, four_point_defect, geodesic_additivity_probe, hyperbolicity_probe,
    peripheral_growth_check, sample_vertices, AdditivityBand, DistanceComparison, HyperbolicityReport, LinearBound,
    PeripheralGrowth, TightElement,
};
pub use space::{cusp_graph, default_max_level, peripheral_from_words, Coset, CuspGraph, CuspVertex};
