//! Metric graph data model, Robin vertex sets, star decompositions and the
//! canonical graph families used throughout the crate.
//!
//! Every undirected edge `e = (u, v)` is identified with `[0, ℓ_e]`, with
//! `x = 0` at `u`. It owns two directed slots laid out as
//! `(e₁, ê₁, e₂, ê₂, …)`: slot `2e` runs `u → v` and slot `2e + 1` runs
//! `v → u`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge with its length. `x = 0` sits at `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// Immutable, validated metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    /// Directed slots leaving each vertex (a loop contributes two).
    out_slots: Vec<Vec<usize>>,
    total_length: f64,
}

impl MetricGraph {
    /// Validates and indexes a graph given as `(u, v, length)` triples.
    pub fn new<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let edges: Vec<Edge> = edges
            .into_iter()
            .map(|(u, v, length)| Edge { u, v, length })
            .collect();
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, e) in edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::NonPositiveLength {
                    edge: i,
                    length: e.length,
                });
            }
            for vertex in [e.u, e.v] {
                if vertex >= vertex_count {
                    return Err(Error::DanglingEndpoint {
                        edge: i,
                        vertex,
                        vertex_count,
                    });
                }
            }
        }

        let mut out_slots = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            out_slots[e.u].push(2 * i);
            out_slots[e.v].push(2 * i + 1);
        }

        if !is_connected(vertex_count, &edges) {
            return Err(Error::DisconnectedGraph);
        }

        let total_length = edges.iter().map(|e| e.length).sum();
        Ok(Self {
            vertex_count,
            edges,
            out_slots,
            total_length,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of directed slots, `2E`.
    pub fn slot_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.out_slots[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.vertex_count).map(|v| self.degree(v)).collect()
    }

    /// Directed slots leaving `v`.
    pub fn out_slots(&self, v: usize) -> &[usize] {
        &self.out_slots[v]
    }

    /// `|Γ|`.
    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn min_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// The opposite direction of a slot.
    #[inline]
    pub fn reverse(slot: usize) -> usize {
        slot ^ 1
    }

    #[inline]
    pub fn slot_edge(slot: usize) -> usize {
        slot / 2
    }

    #[inline]
    pub fn slot_length(&self, slot: usize) -> f64 {
        self.edges[slot / 2].length
    }

    /// Vertex a slot starts from.
    pub fn origin(&self, slot: usize) -> usize {
        let e = &self.edges[slot / 2];
        if slot % 2 == 0 {
            e.u
        } else {
            e.v
        }
    }

    /// Vertex a slot arrives at.
    pub fn terminus(&self, slot: usize) -> usize {
        self.origin(Self::reverse(slot))
    }

    /// Some slot leaving `v`, used to read off vertex values.
    pub fn any_out_slot(&self, v: usize) -> usize {
        self.out_slots[v][0]
    }
}

fn is_connected(vertex_count: usize, edges: &[Edge]) -> bool {
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a != b {
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    (0..vertex_count).all(|v| find(&mut parent, v) == root)
}

/// The Robin vertex set `V_R` and the common coupling `σ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinSpec {
    robin_vertices: Vec<usize>,
    sigma: f64,
}

impl RobinSpec {
    pub fn new(graph: &MetricGraph, vertices: &[usize], sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidCoupling(sigma));
        }
        let set: BTreeSet<usize> = vertices.iter().copied().collect();
        if let Some(&bad) = set.iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::InvalidRobinVertex { vertex: bad });
        }
        Ok(Self {
            robin_vertices: set.into_iter().collect(),
            sigma,
        })
    }

    /// Neumann-Kirchhoff conditions everywhere.
    pub fn neumann() -> Self {
        Self {
            robin_vertices: Vec::new(),
            sigma: 0.0,
        }
    }

    /// Same vertex set, different coupling.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidCoupling(sigma));
        }
        Ok(Self {
            robin_vertices: self.robin_vertices.clone(),
            sigma,
        })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.robin_vertices
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_robin(&self, v: usize) -> bool {
        self.robin_vertices.binary_search(&v).is_ok()
    }

    /// Coupling felt at `v`: `σ` on `V_R`, zero elsewhere.
    pub fn sigma_at(&self, v: usize) -> f64 {
        if self.is_robin(v) {
            self.sigma
        } else {
            0.0
        }
    }

    /// True when the conditions differ from Neumann-Kirchhoff somewhere.
    pub fn is_perturbed(&self) -> bool {
        self.sigma > 0.0 && !self.robin_vertices.is_empty()
    }
}

/// Partition of the graph into stars centred at its vertices, given by the
/// position of one auxiliary point per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct StarDecomposition {
    /// Per edge: (share owned by `u`, share owned by `v`).
    splits: Vec<(f64, f64)>,
    star_lengths: Vec<f64>,
    harmonic_lengths: Vec<f64>,
}

impl StarDecomposition {
    /// Builds a decomposition from the `u`-side share of every edge.
    pub fn from_u_shares(graph: &MetricGraph, u_shares: &[f64]) -> Result<Self> {
        if u_shares.len() != graph.edge_count() {
            return Err(Error::InvalidArgument(format!(
                "expected {} edge shares, got {}",
                graph.edge_count(),
                u_shares.len()
            )));
        }
        let mut splits = Vec::with_capacity(u_shares.len());
        for (i, (&s, e)) in u_shares.iter().zip(graph.edges()).enumerate() {
            if !(0.0..=e.length).contains(&s) {
                return Err(Error::InvalidArgument(format!(
                    "share {s} outside [0, {}] on edge {i}",
                    e.length
                )));
            }
            splits.push((s, e.length - s));
        }
        Ok(Self::from_splits(graph, splits))
    }

    fn from_splits(graph: &MetricGraph, splits: Vec<(f64, f64)>) -> Self {
        let n = graph.vertex_count();
        let mut star_lengths = vec![0.0; n];
        let mut inverse_sums = vec![0.0; n];
        let mut has_zero = vec![false; n];
        for (e, &(su, sv)) in graph.edges().iter().zip(&splits) {
            for (vertex, s) in [(e.u, su), (e.v, sv)] {
                star_lengths[vertex] += s;
                if s > 0.0 {
                    inverse_sums[vertex] += 1.0 / s;
                } else {
                    has_zero[vertex] = true;
                }
            }
        }
        let harmonic_lengths = (0..n)
            .map(|v| {
                if has_zero[v] || inverse_sums[v] == 0.0 {
                    0.0
                } else {
                    1.0 / inverse_sums[v]
                }
            })
            .collect();
        Self {
            splits,
            star_lengths,
            harmonic_lengths,
        }
    }

    pub fn splits(&self) -> &[(f64, f64)] {
        &self.splits
    }

    /// `|S_v|`, the total length of the star around `v`.
    pub fn star_length(&self, v: usize) -> f64 {
        self.star_lengths[v]
    }

    /// `s_v = (Σ s_{v,e}⁻¹)⁻¹`, zero as soon as one share vanishes.
    pub fn harmonic_length(&self, v: usize) -> f64 {
        self.harmonic_lengths[v]
    }

    /// Smallest `|S_v|` over the Robin vertices, with the minimising vertex.
    pub fn min_robin_star(&self, robin: &RobinSpec) -> Option<(usize, f64)> {
        robin
            .vertices()
            .iter()
            .map(|&v| (v, self.star_lengths[v]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Smallest `s_v` over the Robin vertices.
    pub fn min_robin_harmonic(&self, robin: &RobinSpec) -> Option<(usize, f64)> {
        robin
            .vertices()
            .iter()
            .map(|&v| (v, self.harmonic_lengths[v]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Auxiliary point at the middle of every edge.
pub fn midpoint_star_decomposition(graph: &MetricGraph) -> StarDecomposition {
    let splits = graph
        .edges()
        .iter()
        .map(|e| (0.5 * e.length, 0.5 * e.length))
        .collect();
    StarDecomposition::from_splits(graph, splits)
}

/// Edges joining a Robin vertex to a Neumann vertex go entirely to the Robin
/// side; every other edge is split at its midpoint.
pub fn boundary_star_decomposition(graph: &MetricGraph, robin: &RobinSpec) -> StarDecomposition {
    let splits = graph
        .edges()
        .iter()
        .map(|e| match (robin.is_robin(e.u), robin.is_robin(e.v)) {
            (true, false) => (e.length, 0.0),
            (false, true) => (0.0, e.length),
            _ => (0.5 * e.length, 0.5 * e.length),
        })
        .collect();
    StarDecomposition::from_splits(graph, splits)
}

/// Star with `lengths.len()` edges; the centre is vertex 0 and leaf `i` is
/// vertex `i + 1`.
pub fn make_star(lengths: &[f64]) -> Result<MetricGraph> {
    if lengths.is_empty() {
        return Err(Error::InvalidArgument("a star needs at least one edge".into()));
    }
    MetricGraph::new(
        lengths.len() + 1,
        lengths.iter().enumerate().map(|(i, &l)| (0, i + 1, l)),
    )
}

/// Edge order of [`make_complete4`].
pub const K4_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Complete graph on four vertices (tetrahedron), edges in [`K4_EDGES`] order.
pub fn make_complete4(lengths: &[f64; 6]) -> Result<MetricGraph> {
    MetricGraph::new(
        4,
        K4_EDGES
            .iter()
            .zip(lengths)
            .map(|(&(u, v), &l)| (u, v, l)),
    )
}

/// Single interval `[0, length]` between vertices 0 and 1.
pub fn make_interval(length: f64) -> Result<MetricGraph> {
    MetricGraph::new(2, [(0, 1, length)])
}

/// `scale·√pᵢ/√2` for the first `count` primes. Square roots of distinct
/// primes are linearly independent over ℚ.
pub fn incommensurate_lengths(count: usize, scale: f64) -> Vec<f64> {
    let base = 2f64.sqrt();
    first_primes(count)
        .into_iter()
        .map(|p| scale * (p as f64).sqrt() / base)
        .collect()
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// On-disk graph description.
///
/// ```json
/// {"vertices": 2, "edges": [{"u": 0, "v": 1, "len": 1.0}],
///  "robin": {"vertices": [0], "sigma": 1.0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robin: Option<RobinEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobinEntry {
    pub vertices: Vec<usize>,
    pub sigma: f64,
}

impl GraphFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_graph(graph: &MetricGraph, robin: &RobinSpec) -> Self {
        Self {
            vertices: graph.vertex_count(),
            edges: graph
                .edges()
                .iter()
                .map(|e| EdgeEntry {
                    u: e.u,
                    v: e.v,
                    len: e.length,
                })
                .collect(),
            robin: Some(RobinEntry {
                vertices: robin.vertices().to_vec(),
                sigma: robin.sigma(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph file serialises")
    }

    /// Validated graph and Robin specification (Neumann if absent).
    pub fn build(&self) -> Result<(MetricGraph, RobinSpec)> {
        let graph = MetricGraph::new(
            self.vertices,
            self.edges.iter().map(|e| (e.u, e.v, e.len)),
        )?;
        let robin = match &self.robin {
            Some(r) => RobinSpec::new(&graph, &r.vertices, r.sigma)?,
            None => RobinSpec::neumann(),
        };
        Ok((graph, robin))
    }
}
