//! Finite-difference reference spectra, independent of the scattering
//! approach.
//!
//! Each edge is cut into `n` equal cells. Interior nodes carry the usual
//! three-point Laplacian; a vertex is a shared node whose half cells on all
//! incident edges form its control volume, so continuity is built in and the
//! Kirchhoff/Robin balance appears as a flux sum plus `σ f(v)`. With the
//! diagonal (lumped) mass `M` the problem `K u = λ M u` is symmetrised as
//! `M^{-1/2} K M^{-1/2}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec};

pub const MIN_POINTS_PER_EDGE: usize = 8;

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    graph: MetricGraph,
    robin: RobinSpec,
    points_per_edge: usize,
    /// Mesh spacing on each edge.
    pub spacing: Vec<f64>,
    /// Symmetric matrix `M^{-1/2} K M^{-1/2}`.
    pub matrix: DMatrix<f64>,
}

impl DiscreteOperator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn points_per_edge(&self) -> usize {
        self.points_per_edge
    }
}

/// Assembles the operator with `points_per_edge` cells on every edge.
pub fn discretize(
    graph: &MetricGraph,
    robin: &RobinSpec,
    points_per_edge: usize,
) -> Result<DiscreteOperator> {
    if points_per_edge < MIN_POINTS_PER_EDGE {
        return Err(Error::MeshTooCoarse(points_per_edge));
    }
    let n = points_per_edge;
    let vertices = graph.vertex_count();
    let dim = vertices + graph.edge_count() * (n - 1);
    let mut stiffness = DMatrix::<f64>::zeros(dim, dim);
    let mut mass = vec![0.0; dim];
    let mut spacing = Vec::with_capacity(graph.edge_count());

    for (e, edge) in graph.edges().iter().enumerate() {
        let h = edge.length / n as f64;
        spacing.push(h);
        let node = |j: usize| -> usize {
            if j == 0 {
                edge.u
            } else if j == n {
                edge.v
            } else {
                vertices + e * (n - 1) + j - 1
            }
        };
        for j in 0..n {
            let (p, q) = (node(j), node(j + 1));
            stiffness[(p, p)] += 1.0 / h;
            stiffness[(q, q)] += 1.0 / h;
            stiffness[(p, q)] -= 1.0 / h;
            stiffness[(q, p)] -= 1.0 / h;
            mass[p] += 0.5 * h;
            mass[q] += 0.5 * h;
        }
    }
    for &v in robin.vertices() {
        stiffness[(v, v)] += robin.sigma();
    }

    let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = (i.min(j), i.max(j));
        stiffness[(a, b)] * (scale[a] * scale[b])
    });
    Ok(DiscreteOperator {
        graph: graph.clone(),
        robin: robin.clone(),
        points_per_edge,
        spacing,
        matrix,
    })
}

fn lowest_eigenvalues(op: &DiscreteOperator, m: usize) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::try_new(op.matrix.clone(), f64::EPSILON, 100_000).ok_or_else(|| {
        Error::ConvergenceFailure(format!(
            "symmetric eigensolve of dimension {}",
            op.dimension()
        ))
    })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values.truncate(m);
    Ok(values)
}

/// Lowest `m` eigenvalues. With `richardson`, the mesh is also halved and the
/// two results are combined as `(4λ_{h/2} − λ_h)/3`.
pub fn oracle_eigenvalues(op: &DiscreteOperator, m: usize, richardson: bool) -> Result<Vec<f64>> {
    if m == 0 || m > op.dimension() / 4 {
        return Err(Error::InvalidArgument(format!(
            "requested {m} eigenvalues from a matrix of dimension {}",
            op.dimension()
        )));
    }
    let coarse = lowest_eigenvalues(op, m)?;
    if !richardson {
        return Ok(coarse);
    }
    let fine_op = discretize(&op.graph, &op.robin, 2 * op.points_per_edge)?;
    let fine = lowest_eigenvalues(&fine_op, m)?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect())
}
