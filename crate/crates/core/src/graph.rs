//! Subset-correlation graph and least-degree iterative partitioning (LDIP).
//!
//! Vertices are robot subsets; an edge joins two subsets that share a robot.
//! LDIP repeatedly takes a minimum-degree vertex of the residual graph as the
//! representative vertex (R-Vertex) of a new subgraph, puts its residual
//! neighbours in the same subgraph and deletes them all. R-Vertices end up
//! pairwise non-adjacent, so their subsets are pairwise disjoint.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SubsetSystem;
use crate::seed;

/// Largest graph [`count_max_subgraphs_bruteforce`] accepts.
pub const BRUTEFORCE_MAX_VERTICES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("exhaustive search supports at most {BRUTEFORCE_MAX_VERTICES} vertices, got {0}")]
    TooLarge(usize),
    #[error("vertex {vertex} out of range for a graph of {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("edge {0}-{1} is not symmetric")]
    Asymmetric(usize, usize),
}

/// Undirected simple graph stored as a dense adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetGraph {
    n: usize,
    adjacency: Vec<bool>,
    degree: Vec<usize>,
}

impl SubsetGraph {
    pub fn empty(n: usize) -> Self {
        SubsetGraph {
            n,
            adjacency: vec![false; n * n],
            degree: vec![0; n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            g.add_edge(a, b);
        }
        Ok(g)
    }

    /// Adds `a -- b`; no-op if present.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.n && b < self.n);
        if !self.adjacency[a * self.n + b] {
            self.adjacency[a * self.n + b] = true;
            self.adjacency[b * self.n + a] = true;
            self.degree[a] += 1;
            self.degree[b] += 1;
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.n + b]
    }

    /// Diagonal of the degree matrix.
    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&u| self.adjacent(v, u))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| {
            (a + 1..self.n)
                .filter(move |&b| self.adjacent(a, b))
                .map(move |b| (a, b))
        })
    }

    pub fn n_edges(&self) -> usize {
        self.degree.iter().sum::<usize>() / 2
    }

    /// Random graph with independent edge probability `p`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn to_adjacency_list(&self) -> AdjacencyList {
        AdjacencyList {
            vertices: self.n,
            adjacency: (0..self.n).map(|v| self.neighbors(v).collect()).collect(),
        }
    }

    pub fn from_adjacency_list(list: &AdjacencyList) -> Result<Self, GraphError> {
        let n = list.vertices;
        if list.adjacency.len() > n {
            return Err(GraphError::VertexOutOfRange {
                vertex: list.adjacency.len() - 1,
                n,
            });
        }
        for (a, row) in list.adjacency.iter().enumerate() {
            for &b in row {
                if b >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: b, n });
                }
                if a == b {
                    return Err(GraphError::SelfLoop(a));
                }
                if !list.adjacency.get(b).is_some_and(|r| r.contains(&a)) {
                    return Err(GraphError::Asymmetric(a, b));
                }
            }
        }
        let mut g = Self::empty(n);
        for (a, row) in list.adjacency.iter().enumerate() {
            for &b in row {
                g.add_edge(a, b);
            }
        }
        Ok(g)
    }
}

/// Serialized form of a [`SubsetGraph`]: `adjacency[v]` lists the
/// neighbours of `v` and must be symmetric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyList {
    pub vertices: usize,
    pub adjacency: Vec<Vec<usize>>,
}

/// One edge per pair of intersecting subsets.
pub fn build_subset_graph(sys: &SubsetSystem) -> SubsetGraph {
    let mut g = SubsetGraph::empty(sys.len());
    for a in 0..sys.len() {
        for b in a + 1..sys.len() {
            if sys.intersects(a, b) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub r_vertex: usize,
    /// Sorted, includes `r_vertex`.
    pub members: Vec<usize>,
}

/// Subgraphs in extraction order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Partition {
    pub subgraphs: Vec<Subgraph>,
}

/// Broken [`Partition`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionViolation {
    /// Vertex covered zero or several times.
    Coverage {
        vertex: usize,
        times: usize,
    },
    RVertexNotMember {
        subgraph: usize,
    },
    /// R-Vertex misses an edge to a member of its own subgraph.
    MissingInternalEdge {
        subgraph: usize,
        vertex: usize,
    },
    /// R-Vertex touches a vertex of a later subgraph.
    OutsideEdge {
        subgraph: usize,
        vertex: usize,
    },
    AdjacentRVertices(usize, usize),
    UnknownVertex(usize),
}

impl Partition {
    pub fn len(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    pub fn r_vertices(&self) -> Vec<usize> {
        self.subgraphs.iter().map(|s| s.r_vertex).collect()
    }

    /// Subgraph index per vertex, or `None` if uncovered.
    pub fn membership(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (i, s) in self.subgraphs.iter().enumerate() {
            for &v in &s.members {
                if v < n {
                    out[v] = Some(i);
                }
            }
        }
        out
    }

    /// Checks the R-Vertex criterion against `g`, reading "outside" in the
    /// residual sense: the R-Vertex of subgraph `j` is adjacent to every
    /// other member of subgraph `j` and to no vertex of subgraphs `j+1..`.
    /// Edges into earlier subgraphs are allowed; those vertices were already
    /// claimed when `j` was formed. R-Vertices must be pairwise non-adjacent.
    pub fn validate(&self, g: &SubsetGraph) -> Vec<PartitionViolation> {
        let n = g.n_vertices();
        let mut out = Vec::new();
        let mut times = vec![0usize; n];
        for s in &self.subgraphs {
            for &v in &s.members {
                match times.get_mut(v) {
                    Some(t) => *t += 1,
                    None => out.push(PartitionViolation::UnknownVertex(v)),
                }
            }
            if s.r_vertex >= n {
                out.push(PartitionViolation::UnknownVertex(s.r_vertex));
            }
        }
        if !out.is_empty() {
            return out;
        }
        out.extend(
            times
                .iter()
                .enumerate()
                .filter(|(_, &t)| t != 1)
                .map(|(vertex, &times)| PartitionViolation::Coverage { vertex, times }),
        );

        for (j, s) in self.subgraphs.iter().enumerate() {
            let r = s.r_vertex;
            if !s.members.contains(&r) {
                out.push(PartitionViolation::RVertexNotMember { subgraph: j });
            }
            for &v in s.members.iter().filter(|&&v| v != r) {
                if !g.adjacent(r, v) {
                    out.push(PartitionViolation::MissingInternalEdge {
                        subgraph: j,
                        vertex: v,
                    });
                }
            }
            for later in &self.subgraphs[j + 1..] {
                for &v in &later.members {
                    if g.adjacent(r, v) {
                        out.push(PartitionViolation::OutsideEdge {
                            subgraph: j,
                            vertex: v,
                        });
                    }
                }
            }
        }
        let reps = self.r_vertices();
        for (i, &a) in reps.iter().enumerate() {
            for &b in &reps[i + 1..] {
                if a != b && g.adjacent(a, b) {
                    out.push(PartitionViolation::AdjacentRVertices(a, b));
                }
            }
        }
        out
    }
}

/// How LDIP chooses among several minimum-degree vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Uniform draw from a generator seeded with the given value.
    Random(u64),
    LowestIndex,
}

/// Least-degree iterative partitioning with degrees recomputed on the
/// residual graph after every extraction.
pub fn ldip_partition(g: &SubsetGraph, tie: TieBreak) -> Partition {
    let mut rng = match tie {
        TieBreak::Random(s) => Some(seed::rng(s)),
        TieBreak::LowestIndex => None,
    };
    let n = g.n_vertices();
    let mut alive = vec![true; n];
    let mut degree = g.degrees().to_vec();
    let mut remaining = n;
    let mut subgraphs = Vec::new();

    while remaining > 0 {
        let least = (0..n)
            .filter(|&v| alive[v])
            .map(|v| degree[v])
            .min()
            .unwrap();
        let ties: Vec<usize> = (0..n).filter(|&v| alive[v] && degree[v] == least).collect();
        let r = match rng.as_mut() {
            Some(rng) => ties[rng.random_range(0..ties.len())],
            None => ties[0],
        };

        let members: Vec<usize> = (0..n)
            .filter(|&v| alive[v] && (v == r || g.adjacent(r, v)))
            .collect();
        for &v in &members {
            alive[v] = false;
        }
        remaining -= members.len();
        for &v in &members {
            for u in g.neighbors(v) {
                if alive[u] {
                    degree[u] -= 1;
                }
            }
        }
        subgraphs.push(Subgraph {
            r_vertex: r,
            members,
        });
    }
    Partition { subgraphs }
}

/// Exact maximum number of subgraphs any valid partition can have.
///
/// A set of R-Vertices yields a valid partition iff it is independent (no two
/// R-Vertices adjacent) and dominating (every vertex is an R-Vertex or next
/// to one), so this enumerates every vertex set and keeps the largest
/// independent dominating one.
pub fn count_max_subgraphs_bruteforce(g: &SubsetGraph) -> Result<usize, GraphError> {
    let n = g.n_vertices();
    if n > BRUTEFORCE_MAX_VERTICES {
        return Err(GraphError::TooLarge(n));
    }
    if n == 0 {
        return Ok(0);
    }
    let closed: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).fold(1u32 << v, |acc, u| acc | (1 << u)))
        .collect();
    let open: Vec<u32> = (0..n).map(|v| closed[v] & !(1 << v)).collect();
    let full = (1u32 << n) - 1;

    let mut best = 0;
    for set in 1..=full {
        let size = set.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut covered = 0u32;
        let mut independent = true;
        for v in (0..n).filter(|v| set >> v & 1 == 1) {
            if open[v] & set != 0 {
                independent = false;
                break;
            }
            covered |= closed[v];
        }
        if independent && covered == full {
            best = size;
        }
    }
    Ok(best)
}

/// Graphviz rendering. Subgraphs become clusters, R-Vertices are filled.
pub fn export_dot(g: &SubsetGraph, partition: Option<&Partition>) -> String {
    let mut out = String::from("graph subsets {\n  node [shape=circle];\n");
    let membership = partition.map(|p| p.membership(g.n_vertices()));
    let reps: Vec<usize> = partition.map(Partition::r_vertices).unwrap_or_default();

    let node_line = |v: usize| -> String {
        let mut attrs = vec![format!("label=\"{}\"", v + 1)];
        if let Some(Some(part)) = membership.as_ref().map(|m| m[v]) {
            attrs.push(format!("part={part}"));
        }
        if reps.contains(&v) {
            attrs.push("r_vertex=true".into());
            attrs.push("style=filled".into());
            attrs.push("fillcolor=lightblue".into());
        }
        format!("v{v} [{}];", attrs.join(", "))
    };

    match partition {
        Some(p) => {
            for (i, s) in p.subgraphs.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "  subgraph cluster_{i} {{\n    color=red;\n    style=rounded;"
                );
                for &v in &s.members {
                    let _ = writeln!(out, "    {}", node_line(v));
                }
                out.push_str("  }\n");
            }
            let covered = p.membership(g.n_vertices());
            for v in (0..g.n_vertices()).filter(|&v| covered[v].is_none()) {
                let _ = writeln!(out, "  {}", node_line(v));
            }
        }
        None => {
            for v in 0..g.n_vertices() {
                let _ = writeln!(out, "  {}", node_line(v));
            }
        }
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  v{a} -- v{b};");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn sets(raw: &[&[usize]]) -> SubsetSystem {
        let subsets: Vec<BTreeSet<usize>> =
            raw.iter().map(|s| s.iter().copied().collect()).collect();
        let n = subsets.iter().flatten().max().map_or(0, |m| m + 1);
        SubsetSystem::new(n, 1, subsets)
    }

    fn path4() -> SubsetGraph {
        SubsetGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn disjoint_subsets_give_null_graph() {
        let g = build_subset_graph(&sets(&[&[0, 1], &[2, 3], &[4, 5]]));
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn shared_robot_gives_complete_graph() {
        let g = build_subset_graph(&sets(&[&[0, 1], &[0, 2], &[0, 3], &[0, 4]]));
        assert_eq!(g.n_edges(), 4 * 3 / 2);
    }

    #[test]
    fn three_subset_chain() {
        // {1,2}, {3,4}, {2,3} in 1-based robot labels.
        let g = build_subset_graph(&sets(&[&[1, 2], &[3, 4], &[2, 3]]));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 2), (1, 2)]);
        assert_eq!(g.degrees(), &[1, 1, 2]);
    }

    #[test]
    fn ldip_on_null_and_complete() {
        for tie in [TieBreak::LowestIndex, TieBreak::Random(3)] {
            assert_eq!(ldip_partition(&SubsetGraph::empty(6), tie).len(), 6);
            assert_eq!(ldip_partition(&SubsetGraph::complete(6), tie).len(), 1);
        }
    }

    #[test]
    fn ldip_on_chain_takes_a_leaf() {
        let g = build_subset_graph(&sets(&[&[1, 2], &[3, 4], &[2, 3]]));
        let mut seen = BTreeSet::new();
        for s in 0..32 {
            let p = ldip_partition(&g, TieBreak::Random(s));
            assert_eq!(p.len(), 2);
            assert!(p.validate(&g).is_empty());
            let first = &p.subgraphs[0];
            assert!(first.r_vertex == 0 || first.r_vertex == 1);
            assert!(first.members.contains(&2));
            seen.insert(first.r_vertex);
        }
        assert_eq!(seen.len(), 2, "both tied leaves should be drawn");
    }

    #[test]
    fn ldip_lowest_index_is_deterministic() {
        let p = ldip_partition(&path4(), TieBreak::LowestIndex);
        assert_eq!(
            p.subgraphs,
            vec![
                Subgraph {
                    r_vertex: 0,
                    members: vec![0, 1]
                },
                Subgraph {
                    r_vertex: 2,
                    members: vec![2, 3]
                },
            ]
        );
        assert!(p.validate(&path4()).is_empty());
    }

    #[test]
    fn bruteforce_values() {
        assert_eq!(
            count_max_subgraphs_bruteforce(&SubsetGraph::empty(5)),
            Ok(5)
        );
        assert_eq!(
            count_max_subgraphs_bruteforce(&SubsetGraph::complete(5)),
            Ok(1)
        );
        assert_eq!(count_max_subgraphs_bruteforce(&path4()), Ok(2));
        assert_eq!(
            count_max_subgraphs_bruteforce(&SubsetGraph::empty(0)),
            Ok(0)
        );
        assert_eq!(
            count_max_subgraphs_bruteforce(&SubsetGraph::empty(13)),
            Err(GraphError::TooLarge(13))
        );
    }

    #[test]
    fn validate_catches_broken_partitions() {
        let g = path4();
        let overlapping = Partition {
            subgraphs: vec![
                Subgraph {
                    r_vertex: 1,
                    members: vec![0, 1, 2],
                },
                Subgraph {
                    r_vertex: 3,
                    members: vec![2, 3],
                },
            ],
        };
        assert!(overlapping
            .validate(&g)
            .contains(&PartitionViolation::Coverage {
                vertex: 2,
                times: 2
            }));

        // R-Vertex 0 is adjacent to vertex 1, which sits in a later subgraph.
        let leaky = Partition {
            subgraphs: vec![
                Subgraph {
                    r_vertex: 0,
                    members: vec![0],
                },
                Subgraph {
                    r_vertex: 2,
                    members: vec![1, 2, 3],
                },
            ],
        };
        assert!(leaky
            .validate(&g)
            .contains(&PartitionViolation::OutsideEdge {
                subgraph: 0,
                vertex: 1
            }));

        let not_star = Partition {
            subgraphs: vec![Subgraph {
                r_vertex: 0,
                members: vec![0, 1, 2, 3],
            }],
        };
        assert!(not_star
            .validate(&g)
            .contains(&PartitionViolation::MissingInternalEdge {
                subgraph: 0,
                vertex: 2
            }));
    }

    #[test]
    fn adjacency_list_rejects_bad_input() {
        let asym = AdjacencyList {
            vertices: 2,
            adjacency: vec![vec![1], vec![]],
        };
        assert_eq!(
            SubsetGraph::from_adjacency_list(&asym),
            Err(GraphError::Asymmetric(0, 1))
        );
        let looped = AdjacencyList {
            vertices: 1,
            adjacency: vec![vec![0]],
        };
        assert_eq!(
            SubsetGraph::from_adjacency_list(&looped),
            Err(GraphError::SelfLoop(0))
        );
        let g = path4();
        assert_eq!(
            SubsetGraph::from_adjacency_list(&g.to_adjacency_list()).unwrap(),
            g
        );
    }

    #[test]
    fn dot_output_shapes() {
        let null = export_dot(&SubsetGraph::empty(4), None);
        assert_eq!(null.matches(" [label=").count(), 4);
        assert_eq!(null.matches(" -- ").count(), 0);

        let chain = build_subset_graph(&sets(&[&[1, 2], &[3, 4], &[2, 3]]));
        let dot = export_dot(&chain, None);
        assert_eq!(dot.matches(" [label=").count(), 3);
        assert_eq!(dot.matches(" -- ").count(), 2);

        let k4 = SubsetGraph::complete(4);
        let p = ldip_partition(&k4, TieBreak::LowestIndex);
        let dot = export_dot(&k4, Some(&p));
        assert_eq!(dot.matches("part=0").count(), 4);
        assert_eq!(dot.matches("subgraph cluster_").count(), 1);
        assert_eq!(dot.matches("r_vertex=true").count(), 1);
    }
}
