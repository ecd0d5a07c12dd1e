//! Explicit upper bounds on Robin-Neumann gaps and eigenvalue sensitivities
//! in terms of a star decomposition, and checks of computed data against
//! them.

use rayon::prelude::*;

use crate::eigenfunction::{eigenfunctions_at, sensitivity_of};
use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec, StarDecomposition};
use crate::scattering::ScatteringSystem;
use crate::stats::RngSeries;

/// True when `actual` breaks `actual < bound` beyond solver noise.
pub fn is_violation(actual: f64, bound: f64) -> bool {
    actual >= bound + 1e-10 * (1.0 + bound)
}

fn min_robin_star(decomp: &StarDecomposition, robin_vertices: &[usize]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for &v in robin_vertices {
        let s = decomp.star_length(v);
        if s <= 0.0 {
            return Err(Error::DegenerateDecomposition { vertex: v });
        }
        min = min.min(s);
    }
    Ok(min)
}

/// `2σ / min_{v∈V_R} |S_v|`.
pub fn thm_bound(decomp: &StarDecomposition, robin_vertices: &[usize], sigma: f64) -> Result<f64> {
    if robin_vertices.is_empty() {
        return Ok(0.0);
    }
    Ok(2.0 * sigma / min_robin_star(decomp, robin_vertices)?)
}

/// Decomposition-free cap `4σ/ℓ_min`.
pub fn gap_cap(graph: &MetricGraph, sigma: f64) -> f64 {
    4.0 * sigma / graph.min_length()
}

/// `2 max_{v∈V_R} (|S_v| + (σ² s_v + σ)/λ)⁻¹`.
pub fn sensitivity_bound(
    decomp: &StarDecomposition,
    robin_vertices: &[usize],
    sigma: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    min_robin_star(decomp, robin_vertices)?;
    Ok(robin_vertices
        .iter()
        .map(|&v| {
            let denom = decomp.star_length(v)
                + (sigma * sigma * decomp.harmonic_length(v) + sigma) / lambda;
            2.0 / denom
        })
        .fold(0.0, f64::max))
}

/// `dλ₁/dσ` at `σ = 0`: `|V_R|/|Γ|`.
pub fn lowest_eigenvalue_slope(graph: &MetricGraph, robin_vertices: &[usize]) -> f64 {
    let mut vr = robin_vertices.to_vec();
    vr.sort_unstable();
    vr.dedup();
    vr.len() as f64 / graph.total_length()
}

/// The pair `(š, Š)` entering [`improved_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub s_check: f64,
    pub big_s_check: f64,
}

impl BoundParams {
    /// `Š = min |S_v|`, `š = min s_v` over the Robin stars. For the boundary
    /// decomposition of a star with Robin centre this is `Š = |Γ|` and
    /// `š = (Σ 1/ℓ_e)⁻¹`.
    pub fn from_decomposition(decomp: &StarDecomposition, robin_vertices: &[usize]) -> Result<Self> {
        if robin_vertices.is_empty() {
            return Err(Error::DegenerateParameters("no Robin vertices".into()));
        }
        let big = min_robin_star(decomp, robin_vertices)?;
        let small = robin_vertices
            .iter()
            .map(|&v| decomp.harmonic_length(v))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            s_check: small,
            big_s_check: big,
        })
    }

    /// `λ₀` must exceed `1/(4šŠ)`.
    pub fn threshold(&self) -> f64 {
        1.0 / (4.0 * self.s_check * self.big_s_check)
    }
}

/// Gap bound for a Neumann eigenvalue `λ₀ > 1/(4šŠ)`:
/// `λ₀ (exp(2α[arctan(α(1+2šσ)/2) − arctan(α/2)]) − 1)` with
/// `α = 2/√(4λ₀šŠ − 1)`.
pub fn improved_bound(lambda0: f64, sigma: f64, s_check: f64, big_s_check: f64) -> Result<f64> {
    if !(s_check > 0.0 && big_s_check > 0.0) {
        return Err(Error::DegenerateParameters(format!(
            "s-check = {s_check}, S-check = {big_s_check}"
        )));
    }
    let product = 4.0 * lambda0 * s_check * big_s_check;
    if !(product > 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "lambda0 = {lambda0} is not above 1/(4 s S) = {}",
            1.0 / (4.0 * s_check * big_s_check)
        )));
    }
    let alpha = 2.0 / (product - 1.0).sqrt();
    let upper = (0.5 * alpha * (1.0 + 2.0 * s_check * sigma)).atan();
    let lower = (0.5 * alpha).atan();
    Ok(lambda0 * (2.0 * alpha * (upper - lower)).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundRow {
    pub n: usize,
    pub actual: f64,
    /// `None` where the bound does not apply.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub decomposition: String,
    pub rows: Vec<BoundRow>,
    /// Indices `n` with a violation.
    pub violations: Vec<usize>,
}

impl BoundReport {
    fn from_rows(name: &str, decomposition: &str, rows: Vec<BoundRow>) -> Self {
        let violations = rows
            .iter()
            .filter(|r| r.bound.is_some_and(|b| is_violation(r.actual, b)))
            .map(|r| r.n)
            .collect();
        Self {
            name: name.to_string(),
            decomposition: decomposition.to_string(),
            rows,
            violations,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every gap bound evaluated on one series.
#[derive(Debug, Clone, PartialEq)]
pub struct GapBoundCheck {
    pub theorem: BoundReport,
    pub cap: BoundReport,
    pub improved: BoundReport,
    /// Indices with a gap below zero beyond solver noise.
    pub negative: Vec<usize>,
}

impl GapBoundCheck {
    pub fn is_clean(&self) -> bool {
        self.theorem.is_clean()
            && self.cap.is_clean()
            && self.improved.is_clean()
            && self.negative.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.theorem.violations.len()
            + self.cap.violations.len()
            + self.improved.violations.len()
            + self.negative.len()
    }
}

pub fn check_all(
    graph: &MetricGraph,
    series: &RngSeries,
    decomp: &StarDecomposition,
    decomposition_name: &str,
    robin_vertices: &[usize],
) -> Result<GapBoundCheck> {
    let sigma = series.sigma;
    let thm = thm_bound(decomp, robin_vertices, sigma)?;
    let cap = gap_cap(graph, sigma);
    let params = BoundParams::from_decomposition(decomp, robin_vertices).ok();

    let mut theorem_rows = Vec::with_capacity(series.len());
    let mut cap_rows = Vec::with_capacity(series.len());
    let mut improved_rows = Vec::with_capacity(series.len());
    let mut negative = Vec::new();
    for (i, &d) in series.gaps.iter().enumerate() {
        let n = i + 1;
        let lambda0 = series.neumann[i] * series.neumann[i];
        if d < -1e-10 * (1.0 + lambda0) {
            negative.push(n);
        }
        theorem_rows.push(BoundRow { n, actual: d, bound: Some(thm) });
        cap_rows.push(BoundRow { n, actual: d, bound: Some(cap) });
        let improved = params
            .filter(|p| lambda0 > p.threshold())
            .map(|p| improved_bound(lambda0, sigma, p.s_check, p.big_s_check))
            .transpose()?;
        improved_rows.push(BoundRow { n, actual: d, bound: improved });
    }
    Ok(GapBoundCheck {
        theorem: BoundReport::from_rows("star-decomposition", decomposition_name, theorem_rows),
        cap: BoundReport::from_rows("shortest-edge", decomposition_name, cap_rows),
        improved: BoundReport::from_rows("improved", decomposition_name, improved_rows),
        negative,
    })
}

/// Measured `dλ_n/dσ` against [`sensitivity_bound`] for the simple
/// eigenvalues among the first `n` indices.
pub fn check_sensitivities(
    graph: &MetricGraph,
    robin: &RobinSpec,
    spectrum: &Spectrum,
    decomp: &StarDecomposition,
    decomposition_name: &str,
    n: usize,
) -> Result<BoundReport> {
    let system = ScatteringSystem::new(graph, robin)?;
    let rows: Vec<BoundRow> = spectrum
        .records
        .par_iter()
        .filter(|r| r.index <= n && r.multiplicity == 1 && r.k > 0.0)
        .map(|r| {
            let handles = eigenfunctions_at(&system, r.k, 1)?;
            let measured = sensitivity_of(&handles, robin).value;
            let bound = sensitivity_bound(decomp, robin.vertices(), robin.sigma(), r.k * r.k)?;
            Ok(BoundRow {
                n: r.index,
                actual: measured,
                bound: Some(bound),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundReport::from_rows("sensitivity", decomposition_name, rows))
}
