//! Eigenfunctions from amplitude vectors in `ker(I − U(k))`.
//!
//! On edge `e` the eigenfunction is `f(x) = a e^{ikx} + b e^{ik(ℓ−x)}` with
//! `a = a_{2e}`, `b = a_{2e+1}`. The conjugate eigenfunction has amplitudes
//! `R(a)_s = conj(a_ŝ) e^{−ikℓ_s}`, so real eigenfunctions are the fixed
//! points of `R`.

use nalgebra::DVector;

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec};
use crate::scattering::{CMatrix, ScatteringSystem, C64};

/// Default kernel threshold before scaling by `√(2E)`.
pub const KERNEL_TOL: f64 = 1e-8;
const CONTINUITY_TOL: f64 = 1e-6;

pub type CVector = DVector<C64>;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    pub k: f64,
    /// Indexed by directed slot, `‖a‖₂ = 1`.
    pub a: CVector,
    /// `‖(I − U(k)) a‖₂`.
    pub residual: f64,
}

impl AmplitudeVector {
    /// `max_e |a_e − conj(a_ê) e^{−ikℓ_e}|`; zero for a real eigenfunction.
    pub fn reality_defect(&self, graph: &MetricGraph) -> f64 {
        let r = reality_map(&self.a, self.k, graph);
        (&self.a - r).camax()
    }
}

fn reality_map(a: &CVector, k: f64, graph: &MetricGraph) -> CVector {
    CVector::from_fn(a.len(), |s, _| {
        a[MetricGraph::reverse(s)].conj() * C64::from_polar(1.0, -k * graph.slot_length(s))
    })
}

/// `∫_Γ f ḡ` for two amplitude vectors at the same `k`.
pub fn l2_inner(a: &CVector, b: &CVector, k: f64, graph: &MetricGraph) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    for (e, edge) in graph.edges().iter().enumerate() {
        let l = edge.length;
        let (fa, fb) = (a[2 * e], a[2 * e + 1]);
        let (ga, gb) = (b[2 * e].conj(), b[2 * e + 1].conj());
        total += (fa * ga + fb * gb) * l + (fa * gb + fb * ga) * sinc_length(k, l);
    }
    total
}

/// `sin(kℓ)/k`, continuous at `k = 0`.
fn sinc_length(k: f64, l: f64) -> f64 {
    if k == 0.0 {
        l
    } else {
        (k * l).sin() / k
    }
}

/// Closed-form `‖f‖²` of the function built from `amp`.
pub fn l2_norm_sq(amp: &AmplitudeVector, graph: &MetricGraph) -> f64 {
    l2_inner(&amp.a, &amp.a, amp.k, graph).re
}

/// Orthonormal basis of the numerical kernel of `I − U(k)`, gauge fixed so
/// every vector describes a real eigenfunction.
///
/// A degenerate kernel is returned orthonormal in `L²` (rescaled to unit
/// Euclidean length), which keeps basis averages of vertex values invariant.
pub fn kernel_vector(
    graph: &MetricGraph,
    robin: &RobinSpec,
    k: f64,
    multiplicity: usize,
) -> Result<Vec<AmplitudeVector>> {
    let system = ScatteringSystem::new(graph, robin)?;
    kernel_basis(&system, k, multiplicity, KERNEL_TOL)
}

pub fn kernel_basis(
    system: &ScatteringSystem,
    k: f64,
    multiplicity: usize,
    kernel_tol: f64,
) -> Result<Vec<AmplitudeVector>> {
    let graph = system.graph();
    let n = graph.slot_count();
    if k == 0.0 {
        if system.zero_modes() != 1 || multiplicity != 1 {
            return Err(Error::KernelDimensionMismatch {
                k,
                expected: multiplicity,
                found: system.zero_modes(),
            });
        }
        let a = CVector::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
        return Ok(vec![AmplitudeVector { k, a, residual: 0.0 }]);
    }

    let u = system.unitary_matrix(k)?;
    let defect: CMatrix = CMatrix::identity(n, n) - &u;
    let svd = defect
        .clone()
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure(format!("SVD of I - U({k})")))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));

    let tol = kernel_tol * (n as f64).sqrt();
    let found = order
        .iter()
        .filter(|&&i| svd.singular_values[i] < tol)
        .count();
    if found != multiplicity {
        return Err(Error::KernelDimensionMismatch {
            k,
            expected: multiplicity,
            found,
        });
    }

    let raw: Vec<CVector> = order[..multiplicity]
        .iter()
        .map(|&i| v_t.row(i).adjoint())
        .collect();
    let basis = if multiplicity == 1 {
        vec![gauge_simple(&raw[0], k, graph)]
    } else {
        real_basis(&raw, k, graph, multiplicity)?
    };

    Ok(basis
        .into_iter()
        .map(|a| {
            let residual = (&defect * &a).norm();
            AmplitudeVector { k, a, residual }
        })
        .collect())
}

/// Rotates `a` by the unit phase that makes it a fixed point of `R`.
fn gauge_simple(a: &CVector, k: f64, graph: &MetricGraph) -> CVector {
    let r = reality_map(a, k, graph);
    let z = a.dotc(&r);
    let gamma = 0.5 * z.arg();
    let mut out = a * C64::from_polar(1.0, gamma);
    out /= C64::new(out.norm(), 0.0);
    out
}

/// Real, `L²`-orthogonal basis of the span of `raw`.
fn real_basis(raw: &[CVector], k: f64, graph: &MetricGraph, m: usize) -> Result<Vec<CVector>> {
    let i = C64::new(0.0, 1.0);
    let mut candidates = Vec::with_capacity(2 * raw.len());
    for a in raw {
        let r = reality_map(a, k, graph);
        candidates.push(a + &r);
        candidates.push((a - &r) * i);
    }
    candidates.sort_by(|x, y| y.norm().total_cmp(&x.norm()));

    let mut basis: Vec<CVector> = Vec::with_capacity(m);
    for mut c in candidates {
        let scale = l2_inner(&c, &c, k, graph).re.sqrt();
        for b in &basis {
            // real coefficients keep the combination a fixed point of R
            let proj = l2_inner(&c, b, k, graph).re;
            c -= b * C64::new(proj, 0.0);
        }
        let norm = l2_inner(&c, &c, k, graph).re.max(0.0).sqrt();
        if norm > 1e-6 * scale {
            basis.push(c / C64::new(norm, 0.0));
            if basis.len() == m {
                break;
            }
        }
    }
    if basis.len() != m {
        return Err(Error::KernelDimensionMismatch {
            k,
            expected: m,
            found: basis.len(),
        });
    }
    Ok(basis
        .into_iter()
        .map(|b| {
            let n = b.norm();
            b / C64::new(n, 0.0)
        })
        .collect())
}

/// A normalised eigenfunction ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionHandle {
    pub amplitude: AmplitudeVector,
    pub l2norm_sq: f64,
    /// `f(v)` of the `L²`-normalised eigenfunction.
    pub vertex_values: Vec<f64>,
    graph: MetricGraph,
}

impl EigenfunctionHandle {
    pub fn new(graph: &MetricGraph, amplitude: AmplitudeVector) -> Result<Self> {
        let l2norm_sq = l2_norm_sq(&amplitude, graph);
        if !(l2norm_sq > 0.0) {
            return Err(Error::InvalidArgument("zero amplitude vector".into()));
        }
        let scale = l2norm_sq.sqrt();
        let mut vertex_values = Vec::with_capacity(graph.vertex_count());
        for v in 0..graph.vertex_count() {
            let values: Vec<C64> = graph
                .out_slots(v)
                .iter()
                .map(|&s| raw_vertex_value(&amplitude, graph, s) / scale)
                .collect();
            let spread = values
                .iter()
                .map(|z| (z - values[0]).norm())
                .fold(0.0, f64::max);
            if spread > CONTINUITY_TOL {
                return Err(Error::ContinuityViolation { vertex: v, spread });
            }
            vertex_values.push(values[0].re);
        }
        Ok(Self {
            amplitude,
            l2norm_sq,
            vertex_values,
            graph: graph.clone(),
        })
    }

    pub fn k(&self) -> f64 {
        self.amplitude.k
    }

    /// Amplitudes scaled so that `‖f‖ = 1`.
    pub fn normalized_amplitude(&self) -> AmplitudeVector {
        let scale = C64::new(1.0 / self.l2norm_sq.sqrt(), 0.0);
        AmplitudeVector {
            k: self.amplitude.k,
            a: &self.amplitude.a * scale,
            residual: self.amplitude.residual * scale.re,
        }
    }

    /// Largest disagreement of `f(v)` between the edges meeting at `v`.
    pub fn continuity_spread(&self, v: usize) -> f64 {
        let scale = self.l2norm_sq.sqrt();
        let values: Vec<C64> = self
            .graph
            .out_slots(v)
            .iter()
            .map(|&s| raw_vertex_value(&self.amplitude, &self.graph, s) / scale)
            .collect();
        values
            .iter()
            .map(|z| (z - values[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Sum of outward derivatives at `v` of the normalised eigenfunction.
    pub fn outward_derivative_sum(&self, v: usize) -> f64 {
        self.graph
            .out_slots(v)
            .iter()
            .map(|&s| self.outward_derivative(s))
            .sum()
    }

    fn outward_derivative(&self, slot: usize) -> f64 {
        let amp = &self.amplitude;
        let k = amp.k;
        let phase = C64::from_polar(1.0, k * self.graph.slot_length(slot));
        let d = C64::new(0.0, k) * (amp.a[slot] - amp.a[MetricGraph::reverse(slot)] * phase);
        d.re / self.l2norm_sq.sqrt()
    }
}

fn raw_vertex_value(amp: &AmplitudeVector, graph: &MetricGraph, slot: usize) -> C64 {
    let phase = C64::from_polar(1.0, amp.k * graph.slot_length(slot));
    amp.a[slot] + amp.a[MetricGraph::reverse(slot)] * phase
}

pub fn vertex_value(handle: &EigenfunctionHandle, v: usize) -> Result<f64> {
    handle
        .vertex_values
        .get(v)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("no vertex {v}")))
}

/// `f|_e(x)` of the normalised eigenfunction, `x` measured from `e.u`.
pub fn evaluate(handle: &EigenfunctionHandle, e: usize, x: f64) -> Result<f64> {
    let graph = &handle.graph;
    if e >= graph.edge_count() {
        return Err(Error::InvalidArgument(format!("no edge {e}")));
    }
    let l = graph.edge(e).length;
    if !(0.0..=l).contains(&x) {
        return Err(Error::OutOfRange { edge: e, x, length: l });
    }
    let amp = &handle.amplitude;
    let k = amp.k;
    let f = amp.a[2 * e] * C64::from_polar(1.0, k * x)
        + amp.a[2 * e + 1] * C64::from_polar(1.0, k * (l - x));
    Ok(f.re / handle.l2norm_sq.sqrt())
}

/// `|Σ_{e∈E_v} f′|_e(v) − σ_v f(v)|`.
pub fn robin_residual(handle: &EigenfunctionHandle, robin: &RobinSpec, v: usize) -> f64 {
    (handle.outward_derivative_sum(v) - robin.sigma_at(v) * handle.vertex_values[v]).abs()
}

/// `Σ_{e∈E_v} tan φ_{e,v}` where `f|_e = A_e cos(kx − φ_{e,v})` with `x`
/// measured from `v`. Equals `σ_v/k` for an eigenfunction with `f(v) ≠ 0`.
pub fn tangent_sum(handle: &EigenfunctionHandle, v: usize) -> Result<f64> {
    let fv = handle.vertex_values[v];
    if fv.abs() < 1e-12 {
        return Err(Error::InvalidArgument(format!("eigenfunction vanishes at vertex {v}")));
    }
    let k = handle.k();
    Ok(handle
        .graph
        .out_slots(v)
        .iter()
        .map(|&s| handle.outward_derivative(s) / (k * fv))
        .sum())
}

/// `Σ_{v∈V_R} |f(v)|²`; averaged over an orthonormal basis when degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub value: f64,
    pub degenerate: bool,
}

/// Normalised eigenfunctions for one spectrum record.
pub fn eigenfunctions_at(
    system: &ScatteringSystem,
    k: f64,
    multiplicity: usize,
) -> Result<Vec<EigenfunctionHandle>> {
    kernel_basis(system, k, multiplicity, KERNEL_TOL)?
        .into_iter()
        .map(|a| EigenfunctionHandle::new(system.graph(), a))
        .collect()
}

pub fn sensitivity_of(handles: &[EigenfunctionHandle], robin: &RobinSpec) -> Sensitivity {
    let total: f64 = handles
        .iter()
        .map(|h| robin.vertices().iter().map(|&v| h.vertex_values[v].powi(2)).sum::<f64>())
        .sum();
    Sensitivity {
        value: total / handles.len() as f64,
        degenerate: handles.len() > 1,
    }
}

/// `dλ_n/dσ` through the vertex values of the `n`-th eigenfunction.
pub fn sensitivity(
    graph: &MetricGraph,
    robin: &RobinSpec,
    spectrum: &Spectrum,
    n: usize,
) -> Result<Sensitivity> {
    let record = spectrum.record_of(n).ok_or(Error::InsufficientSpectrum {
        available: spectrum.len(),
        required: n,
    })?;
    let system = ScatteringSystem::new(graph, robin)?;
    let handles = eigenfunctions_at(&system, record.k, record.multiplicity)?;
    Ok(sensitivity_of(&handles, robin))
}
