//! Vertex scattering matrices, the unitary evolution `U(k) = S(k) e^{ikL}`,
//! its eigenphases, the secular determinant and the total phase `Θ(k, σ)`.
//!
//! Amplitude `a_s` belongs to the wave leaving the origin of slot `s`, so on
//! edge `e` the eigenfunction reads `a_{2e} e^{ikx} + a_{2e+1} e^{ik(ℓ−x)}`.
//! Column `r` of `S` is indexed by the slot `r` arriving at a vertex, row `s`
//! by the slot leaving it.

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Convergence thresholds tried in turn; the shifted QR iteration can stall
/// at one threshold and converge at another.
const SCHUR_EPS: [f64; 4] = [1e-15, f64::EPSILON, 1e-14, 1e-13];
const SCHUR_MAX_ITER: usize = 10_000;
/// Phases of `U(0⁺)` this close to zero belong to branches that start at 0.
const ZERO_PHASE_TOL: f64 = 1e-9;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = wrap_phase(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `U(k)` together with its spectral data.
#[derive(Debug, Clone)]
pub struct UnitaryAtK {
    pub k: f64,
    pub matrix: CMatrix,
    /// Sorted ascending, each in `[0, 2π)`.
    pub eigenphases: Vec<f64>,
    /// Column `m` is a unit eigenvector for `eigenphases[m]`.
    pub eigenvectors: CMatrix,
    /// Frobenius norm of `U*U − I`.
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalPhase {
    pub k: f64,
    pub theta: f64,
}

/// Precomputed scattering data for one `(graph, robin)` pair.
#[derive(Debug, Clone)]
pub struct ScatteringSystem {
    graph: MetricGraph,
    robin: RobinSpec,
    /// `arg det U(k) − Θ(k)`, either 0 or π.
    det_phase: f64,
    /// `N(k) = offset + round((Θ + det_phase − Σφ)/2π)`.
    counting_offset: i64,
}

impl ScatteringSystem {
    pub fn new(graph: &MetricGraph, robin: &RobinSpec) -> Result<Self> {
        if let Some(&v) = robin.vertices().iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::InvalidRobinVertex { vertex: v });
        }
        // Each vertex block t·J − I contributes (−1)^{d−1} times a pure phase
        // already in Θ, and the slot reversal permutation has sign (−1)^E.
        let parity = (graph.edge_count() + graph.vertex_count()) % 2;
        let det_phase = if parity == 1 { PI } else { 0.0 };
        let mut system = Self {
            graph: graph.clone(),
            robin: robin.clone(),
            det_phase,
            counting_offset: 0,
        };
        system.counting_offset = system.small_k_offset()?;
        Ok(system)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn robin(&self) -> &RobinSpec {
        &self.robin
    }

    /// Number of zero eigenvalues: the constant function when σ = 0.
    pub fn zero_modes(&self) -> usize {
        usize::from(!self.robin.is_perturbed())
    }

    /// Constant phase `arg det U − Θ` (0 or π).
    pub fn det_phase(&self) -> f64 {
        self.det_phase
    }

    fn transmission(&self, v: usize, k: f64) -> C64 {
        let d = self.graph.degree(v) as f64;
        let s = self.robin.sigma_at(v);
        C64::new(2.0, 0.0) / C64::new(d, s / k)
    }

    /// `S(k)`, or its `k → 0⁺` limit when `k` is `None`.
    fn scattering_impl(&self, k: Option<f64>) -> CMatrix {
        let n = self.graph.slot_count();
        let mut s = CMatrix::zeros(n, n);
        for v in 0..self.graph.vertex_count() {
            let t = match k {
                Some(k) => self.transmission(v, k),
                None if self.robin.sigma_at(v) > 0.0 => C64::new(0.0, 0.0),
                None => C64::new(2.0 / self.graph.degree(v) as f64, 0.0),
            };
            let outs = self.graph.out_slots(v);
            for &out in outs {
                for &back in outs {
                    let incoming = MetricGraph::reverse(back);
                    let delta = if out == back { 1.0 } else { 0.0 };
                    s[(out, incoming)] += t - delta;
                }
            }
        }
        s
    }

    pub fn scattering_matrix(&self, k: f64) -> Result<CMatrix> {
        check_k(k)?;
        Ok(self.scattering_impl(Some(k)))
    }

    pub fn unitary_matrix(&self, k: f64) -> Result<CMatrix> {
        let mut s = self.scattering_matrix(k)?;
        for (col, mut column) in s.column_iter_mut().enumerate() {
            let phase = C64::from_polar(1.0, k * self.graph.slot_length(col));
            column *= phase;
        }
        Ok(s)
    }

    pub fn unitary(&self, k: f64) -> Result<UnitaryAtK> {
        let matrix = self.unitary_matrix(k)?;
        let (eigenphases, eigenvectors) = eigendecompose(&matrix, k)?;
        let n = matrix.nrows();
        let defect = (matrix.adjoint() * &matrix - CMatrix::identity(n, n)).norm();
        Ok(UnitaryAtK {
            k,
            matrix,
            eigenphases,
            eigenvectors,
            unitarity_defect: defect,
        })
    }

    pub fn eigenphases(&self, k: f64) -> Result<Vec<f64>> {
        let matrix = self.unitary_matrix(k)?;
        Ok(eigendecompose(&matrix, k)?.0)
    }

    pub fn secular_det(&self, k: f64) -> Result<C64> {
        let u = self.unitary_matrix(k)?;
        let n = u.nrows();
        Ok((CMatrix::identity(n, n) - u).determinant())
    }

    /// `Θ(k, σ) = 2k|Γ| − 2 Σ_{V_R} arctan(σ/(deg(v) k))`; no domain check.
    pub fn theta(&self, k: f64) -> f64 {
        let sigma = self.robin.sigma();
        let correction: f64 = if sigma > 0.0 {
            self.robin
                .vertices()
                .iter()
                .map(|&v| (sigma / (self.graph.degree(v) as f64 * k)).atan())
                .sum()
        } else {
            0.0
        };
        2.0 * k * self.graph.total_length() - 2.0 * correction
    }

    pub fn total_phase(&self, k: f64) -> Result<TotalPhase> {
        check_k(k)?;
        Ok(TotalPhase {
            k,
            theta: self.theta(k),
        })
    }

    /// Wrapped difference between `arg det U(k)` and `Θ(k) + arg det` constant.
    pub fn phase_identity_residual(&self, k: f64) -> Result<f64> {
        let det = self.unitary_matrix(k)?.determinant();
        Ok(wrap_signed(det.arg() - self.theta(k) - self.det_phase))
    }

    fn small_k_offset(&self) -> Result<i64> {
        let limit = self.scattering_impl(None);
        let (phases, _) = eigendecompose(&limit, 0.0)?;
        let phase_sum: f64 = phases
            .iter()
            .map(|&p| if p < ZERO_PHASE_TOL || TAU - p < ZERO_PHASE_TOL { 0.0 } else { p })
            .sum();
        let theta0 = if self.robin.is_perturbed() {
            -PI * self.robin.vertices().len() as f64
        } else {
            0.0
        };
        let lifted = ((theta0 + self.det_phase - phase_sum) / TAU).round() as i64;
        Ok(self.zero_modes() as i64 - lifted)
    }

    /// Counting function from wrapped eigenphases.
    pub fn counting_from_phases(&self, k: f64, phases: &[f64]) -> usize {
        let sum: f64 = phases.iter().sum();
        let n = self.counting_offset + ((self.theta(k) + self.det_phase - sum) / TAU).round() as i64;
        n.max(0) as usize
    }

    /// `N(k, σ)`: eigenvalues `k_n ≤ k`, with multiplicity.
    pub fn counting(&self, k: f64) -> Result<usize> {
        let phases = self.eigenphases(k)?;
        Ok(self.counting_from_phases(k, &phases))
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroWaveNumber(k))
    }
}

fn schur(matrix: &CMatrix) -> Option<(CMatrix, CMatrix)> {
    SCHUR_EPS
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(matrix.clone(), eps, SCHUR_MAX_ITER))
        .map(|s| s.unpack())
}

/// Deterministic unitary with no special structure.
fn scrambler(n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |r, c| {
        let x = 1.0 + 0.754_877_666 * r as f64 + 0.569_840_291 * c as f64;
        C64::new((7.0 * x).sin(), (11.0 * x * x).cos())
    });
    m.qr().q()
}

/// Eigenphases in `[0, 2π)` sorted ascending, with eigenvectors as columns.
fn eigendecompose(matrix: &CMatrix, k: f64) -> Result<(Vec<f64>, CMatrix)> {
    let (q, t) = schur(matrix)
        .or_else(|| {
            // Francis steps can cycle on (signed) permutation matrices such as
            // U(0⁺); a fixed generic unitary similarity breaks the symmetry.
            let rot = scrambler(matrix.nrows());
            let (q, t) = schur(&(rot.adjoint() * matrix * &rot))?;
            Some((rot * q, t))
        })
        .ok_or_else(|| Error::ConvergenceFailure(format!("Schur decomposition of U({k})")))?;
    let n = t.nrows();
    let mut order: Vec<(f64, usize)> = (0..n).map(|i| (wrap_phase(t[(i, i)].arg()), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let phases = order.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| q[(r, order[c].1)]);
    Ok((phases, vectors))
}

/// `2/(deg(v) + iσ_v/k) − δ_{e_out = ê_in}`, zero when the slots do not meet at `v`.
pub fn vertex_scattering_entry(
    graph: &MetricGraph,
    robin: &RobinSpec,
    v: usize,
    e_in: usize,
    e_out: usize,
    k: f64,
) -> Result<C64> {
    check_k(k)?;
    if e_in >= graph.slot_count() || e_out >= graph.slot_count() {
        return Err(Error::InvalidArgument("slot index out of range".into()));
    }
    if graph.terminus(e_in) != v || graph.origin(e_out) != v {
        return Ok(C64::new(0.0, 0.0));
    }
    let d = graph.degree(v) as f64;
    let t = C64::new(2.0, 0.0) / C64::new(d, robin.sigma_at(v) / k);
    let delta = if e_out == MetricGraph::reverse(e_in) { 1.0 } else { 0.0 };
    Ok(t - delta)
}

pub fn build_unitary(graph: &MetricGraph, robin: &RobinSpec, k: f64) -> Result<UnitaryAtK> {
    check_k(k)?;
    ScatteringSystem::new(graph, robin)?.unitary(k)
}

pub fn secular_det(graph: &MetricGraph, robin: &RobinSpec, k: f64) -> Result<C64> {
    check_k(k)?;
    ScatteringSystem::new(graph, robin)?.secular_det(k)
}

pub fn total_phase(graph: &MetricGraph, robin: &RobinSpec, k: f64) -> Result<TotalPhase> {
    check_k(k)?;
    ScatteringSystem::new(graph, robin)?.total_phase(k)
}

/// Motion of the eigenphases across one step of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStep {
    pub k_from: f64,
    pub k_to: f64,
    /// Matched motion of each branch, indexed by the phase order at `k_from`.
    pub motions: Vec<f64>,
    /// Net number of branches crossing `2πℤ` upwards.
    pub crossings: i64,
}

/// Follows eigenphase branches between consecutive samples of `U(k)`.
///
/// Every branch moves forward, so within one short step the cyclic order of
/// the phases is preserved up to relabelling of coincident branches. Branches
/// are matched by the cyclic shift of the sorted phases whose total motion
/// equals the change of `Θ`; each matched motion must then lie in `[0, π/2)`.
/// Nearest-neighbour matching is not used: as soon as a branch moves farther
/// than its distance to a neighbour it pairs the wrong phases.
#[derive(Debug, Clone)]
pub struct EigenphaseTracker {
    current: UnitaryAtK,
}

const MAX_MOTION: f64 = PI / 2.0;
const BACKWARD_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-6;

impl EigenphaseTracker {
    pub fn new(start: UnitaryAtK) -> Self {
        Self { current: start }
    }

    pub fn current(&self) -> &UnitaryAtK {
        &self.current
    }

    /// Matches branches to `next`. The motions must add up to
    /// `theta_increment`, the change of `Θ` over the step.
    pub fn advance(&mut self, next: UnitaryAtK, theta_increment: f64) -> Result<PhaseStep> {
        let prev = &self.current;
        let n = prev.eigenphases.len() as i64;
        let before: f64 = prev.eigenphases.iter().sum();
        let after: f64 = next.eigenphases.iter().sum();
        let shift = ((theta_increment - (after - before)) / TAU).round() as i64;

        let mut motions = Vec::with_capacity(n as usize);
        let mut crossings = 0i64;
        for i in 0..n {
            let target = i + shift;
            let laps = target.div_euclid(n);
            let j = target.rem_euclid(n) as usize;
            let delta = next.eigenphases[j] + TAU * laps as f64 - prev.eigenphases[i as usize];
            if !(-BACKWARD_TOL..MAX_MOTION).contains(&delta) {
                return Err(Error::StepPolicyViolation {
                    k: next.k,
                    reason: format!("eigenphase moved by {delta:.3} in one step"),
                });
            }
            crossings += laps;
            motions.push(delta);
        }
        let total: f64 = motions.iter().sum();
        if (total - theta_increment).abs() > SUM_TOL {
            return Err(Error::StepPolicyViolation {
                k: next.k,
                reason: format!(
                    "tracked phases moved by {total:.6}, total phase by {theta_increment:.6}"
                ),
            });
        }
        let step = PhaseStep {
            k_from: prev.k,
            k_to: next.k,
            motions,
            crossings,
        };
        self.current = next;
        Ok(step)
    }
}
