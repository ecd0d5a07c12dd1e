//! Robin-Neumann gaps `d_n(σ) = λ_n(σ) − λ_n(0)` and their statistics.

use std::io::Write;

use rayon::prelude::*;

use crate::eigenfunction::eigenfunctions_at;
use crate::eigensolve::{compute_spectrum, Spectrum, SpectrumTarget};
use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec};
use crate::scattering::{ScatteringSystem, C64};

/// Index-paired Neumann and Robin wave numbers with their gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct RngSeries {
    pub sigma: f64,
    /// `k_n(0)`.
    pub neumann: Vec<f64>,
    /// `k_n(σ)`.
    pub robin: Vec<f64>,
    /// `d_n = k_n(σ)² − k_n(0)²`.
    pub gaps: Vec<f64>,
}

impl RngSeries {
    /// Pairs the first `n` eigenvalues of two spectra by index.
    pub fn from_spectra(neumann: &Spectrum, robin: &Spectrum, n: usize) -> Result<Self> {
        let available = neumann.len().min(robin.len());
        if available < n {
            return Err(Error::InsufficientSpectrum {
                available,
                required: n,
            });
        }
        let k0: Vec<f64> = neumann.wave_numbers().into_iter().take(n).collect();
        let k1: Vec<f64> = robin.wave_numbers().into_iter().take(n).collect();
        let gaps = k0.iter().zip(&k1).map(|(a, b)| b * b - a * a).collect();
        Ok(Self {
            sigma: robin.sigma,
            neumann: k0,
            robin: k1,
            gaps,
        })
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    /// `δ_n = k_n(σ) − k_n(0)`.
    pub fn deltas(&self) -> Vec<f64> {
        self.neumann
            .iter()
            .zip(&self.robin)
            .map(|(a, b)| b - a)
            .collect()
    }

    /// First `n` terms.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            sigma: self.sigma,
            neumann: self.neumann[..n].to_vec(),
            robin: self.robin[..n].to_vec(),
            gaps: self.gaps[..n].to_vec(),
        }
    }
}

/// Computes both spectra and pairs the first `n` eigenvalues.
pub fn rng_sequence(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    sigma: f64,
    n: usize,
) -> Result<RngSeries> {
    let robin = RobinSpec::new(graph, robin_vertices, sigma)?;
    let target = SpectrumTarget::Count(n);
    let (s0, s1) = rayon::join(
        || compute_spectrum(graph, &RobinSpec::neumann(), target),
        || compute_spectrum(graph, &robin, target),
    );
    RngSeries::from_spectra(&s0?, &s1?, n)
}

/// Left-to-right sum; the order is fixed so output is reproducible.
fn ordered_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `(1/N) Σ d_n`.
pub fn cesaro_mean(series: &RngSeries) -> f64 {
    cesaro_prefix_mean(series, series.len())
}

/// Mean of the first `n` gaps.
pub fn cesaro_prefix_mean(series: &RngSeries, n: usize) -> f64 {
    let n = n.min(series.len());
    if n == 0 {
        return 0.0;
    }
    ordered_sum(&series.gaps[..n]) / n as f64
}

/// Limiting mean gap `2σ/|Γ| Σ_{V_R} 1/deg(v)`.
pub fn theoretical_mean(graph: &MetricGraph, robin_vertices: &[usize], sigma: f64) -> f64 {
    let inv_degrees: f64 = robin_vertices
        .iter()
        .map(|&v| 1.0 / graph.degree(v) as f64)
        .sum();
    2.0 * sigma / graph.total_length() * inv_degrees
}

/// Centred moving mean; windows are clipped at both ends of the sequence.
pub fn running_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!("window must be odd, got {window}")));
    }
    if window > values.len() {
        return Err(Error::InvalidArgument(format!(
            "window {window} longer than the series ({})",
            values.len()
        )));
    }
    let half = window / 2;
    Ok((0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            ordered_sum(&values[lo..hi]) / (hi - lo) as f64
        })
        .collect())
}

/// Local mean gap near wave number `k`: `(2k/|Γ|) Σ_{V_R} arctan(σ/(deg(v) k))`.
pub fn arctan_prediction(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    sigma: f64,
    k: f64,
) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::ZeroWaveNumber(k));
    }
    let sum: f64 = robin_vertices
        .iter()
        .map(|&v| (sigma / (graph.degree(v) as f64 * k)).atan())
        .sum();
    Ok(2.0 * k / graph.total_length() * sum)
}

/// Local mean of `dλ/dσ` near `λ`: `(2/|Γ|) Σ_{V_R} λd/(σ² + λd²)`.
pub fn sensitivity_prediction(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    sigma: f64,
    lambda: f64,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    let sum: f64 = robin_vertices
        .iter()
        .map(|&v| {
            let d = graph.degree(v) as f64;
            lambda * d / (sigma * sigma + lambda * d * d)
        })
        .sum();
    Ok(2.0 / graph.total_length() * sum)
}

/// Spectral averages of eigenfunction quantities over simple eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// `⟨|f(v)|²⟩` per vertex, `L²`-normalised eigenfunctions.
    pub vertex: Vec<f64>,
    /// `⟨|a_s|² / Σ_e ℓ_e(|a_e|² + |a_ê|²)⟩` per directed slot.
    pub slot: Vec<f64>,
    /// `⟨a_s ā_t / Σ_e ℓ_e(|a_e|² + |a_ê|²)⟩` for slots on different edges.
    pub cross: Vec<((usize, usize), C64)>,
    /// Eigenvalues averaged over.
    pub used: usize,
    /// Indices skipped because they are multiple or zero.
    pub excluded: usize,
}

impl MomentReport {
    pub fn max_cross_modulus(&self) -> f64 {
        self.cross.iter().map(|c| c.1.norm()).fold(0.0, f64::max)
    }
}

/// Local Weyl law moments over the first `n` Neumann eigenvalues.
pub fn weyl_moments(graph: &MetricGraph, n: usize) -> Result<MomentReport> {
    let neumann = RobinSpec::neumann();
    let spectrum = compute_spectrum(graph, &neumann, SpectrumTarget::Count(n))?;
    weyl_moments_from(graph, &neumann, &spectrum, n)
}

/// Moments over the simple, positive eigenvalues among the first `n` indices.
pub fn weyl_moments_from(
    graph: &MetricGraph,
    robin: &RobinSpec,
    spectrum: &Spectrum,
    n: usize,
) -> Result<MomentReport> {
    if spectrum.len() < n {
        return Err(Error::InsufficientSpectrum {
            available: spectrum.len(),
            required: n,
        });
    }
    let system = ScatteringSystem::new(graph, robin)?;
    let records: Vec<_> = spectrum
        .records
        .iter()
        .filter(|r| r.index <= n)
        .copied()
        .collect();
    let covered: usize = records
        .iter()
        .map(|r| r.multiplicity.min(n + 1 - r.index))
        .sum();
    let simple: Vec<_> = records
        .iter()
        .filter(|r| r.multiplicity == 1 && r.k > 0.0)
        .collect();

    let slots = graph.slot_count();
    let pairs: Vec<(usize, usize)> = (0..slots)
        .flat_map(|s| (s + 1..slots).map(move |t| (s, t)))
        .filter(|&(s, t)| s / 2 != t / 2)
        .collect();

    struct Sample {
        vertex: Vec<f64>,
        slot: Vec<f64>,
        cross: Vec<C64>,
    }
    let samples: Vec<Sample> = simple
        .par_iter()
        .map(|r| {
            let handle = eigenfunctions_at(&system, r.k, 1)?.remove(0);
            let a = &handle.amplitude.a;
            let weight: f64 = graph
                .edges()
                .iter()
                .enumerate()
                .map(|(e, edge)| edge.length * (a[2 * e].norm_sqr() + a[2 * e + 1].norm_sqr()))
                .sum();
            Ok(Sample {
                vertex: handle.vertex_values.iter().map(|f| f * f).collect(),
                slot: a.iter().map(|z| z.norm_sqr() / weight).collect(),
                cross: pairs
                    .iter()
                    .map(|&(s, t)| a[s] * a[t].conj() / weight)
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let used = samples.len();
    if used == 0 {
        return Err(Error::InsufficientSpectrum {
            available: 0,
            required: 1,
        });
    }
    let scale = 1.0 / used as f64;
    let mut vertex = vec![0.0; graph.vertex_count()];
    let mut slot = vec![0.0; slots];
    let mut cross = vec![C64::new(0.0, 0.0); pairs.len()];
    for s in &samples {
        vertex.iter_mut().zip(&s.vertex).for_each(|(acc, x)| *acc += x);
        slot.iter_mut().zip(&s.slot).for_each(|(acc, x)| *acc += x);
        cross.iter_mut().zip(&s.cross).for_each(|(acc, x)| *acc += x);
    }
    Ok(MomentReport {
        vertex: vertex.into_iter().map(|x| x * scale).collect(),
        slot: slot.into_iter().map(|x| x * scale).collect(),
        cross: pairs
            .into_iter()
            .zip(cross)
            .map(|(p, z)| (p, z * scale))
            .collect(),
        used,
        excluded: covered - used,
    })
}

/// Empirical distribution of the gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEstimate {
    sorted: Vec<f64>,
}

impl CdfEstimate {
    /// Fraction of gaps `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&d| d <= x) as f64 / self.sorted.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `(min, max)` of the sample.
    pub fn support(&self) -> (f64, f64) {
        (self.sorted[0], self.sorted[self.sorted.len() - 1])
    }

    /// Jump locations, merging values closer than `tol`.
    pub fn jump_points(&self, tol: f64) -> Vec<f64> {
        accumulation_clusters(&self.sorted, tol)
            .into_iter()
            .map(|c| c.value)
            .collect()
    }

    /// Histogram on `bins` equal bins over `[lo, hi]`, normalised to unit area.
    pub fn histogram(&self, bins: usize, lo: f64, hi: f64) -> Result<Vec<HistogramBin>> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidArgument("histogram needs bins > 0 and hi > lo".into()));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &d in &self.sorted {
            if (lo..=hi).contains(&d) {
                let i = (((d - lo) / width) as usize).min(bins - 1);
                counts[i] += 1;
            }
        }
        let total = self.sorted.len() as f64 * width;
        Ok(counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| HistogramBin {
                left: lo + i as f64 * width,
                right: lo + (i + 1) as f64 * width,
                density: c as f64 / total,
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub density: f64,
}

pub fn empirical_cdf(series: &RngSeries) -> Result<CdfEstimate> {
    if series.is_empty() {
        return Err(Error::InsufficientSpectrum {
            available: 0,
            required: 1,
        });
    }
    let mut sorted = series.gaps.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(CdfEstimate { sorted })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Mean of the members.
    pub value: f64,
    pub count: usize,
}

/// Single-linkage clustering of values: neighbours closer than `tol` join.
pub fn accumulation_clusters(values: &[f64], tol: f64) -> Vec<Cluster> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            if i > start {
                let members = &sorted[start..i];
                clusters.push(Cluster {
                    value: ordered_sum(members) / members.len() as f64,
                    count: members.len(),
                });
            }
            start = i;
        }
    }
    clusters
}

/// `1e−6·(1 + 4σ/ℓ_min)`.
pub fn default_cluster_tol(graph: &MetricGraph, sigma: f64) -> f64 {
    1e-6 * (1.0 + 4.0 * sigma / graph.min_length())
}

/// Largest difference quotient of the gaps over a coupling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub max_quotient: f64,
    /// Index and coupling pair attaining the maximum.
    pub n: usize,
    pub sigmas: (f64, f64),
}

pub fn lipschitz_audit(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    sigma_grid: &[f64],
    n: usize,
) -> Result<LipschitzReport> {
    if sigma_grid.len() < 2 {
        return Err(Error::InvalidArgument("need at least two couplings".into()));
    }
    let neumann = compute_spectrum(graph, &RobinSpec::neumann(), SpectrumTarget::Count(n))?;
    let gaps: Vec<Vec<f64>> = sigma_grid
        .par_iter()
        .map(|&sigma| {
            let robin = RobinSpec::new(graph, robin_vertices, sigma)?;
            let spectrum = compute_spectrum(graph, &robin, SpectrumTarget::Count(n))?;
            Ok(RngSeries::from_spectra(&neumann, &spectrum, n)?.gaps)
        })
        .collect::<Result<_>>()?;

    let mut best = LipschitzReport {
        max_quotient: 0.0,
        n: 0,
        sigmas: (sigma_grid[0], sigma_grid[1]),
    };
    for i in 0..sigma_grid.len() {
        for j in i + 1..sigma_grid.len() {
            let ds = (sigma_grid[j] - sigma_grid[i]).abs();
            if ds == 0.0 {
                return Err(Error::InvalidArgument("repeated coupling in grid".into()));
            }
            for m in 0..n {
                let q = (gaps[j][m] - gaps[i][m]).abs() / ds;
                if q > best.max_quotient {
                    best = LipschitzReport {
                        max_quotient: q,
                        n: m + 1,
                        sigmas: (sigma_grid[i], sigma_grid[j]),
                    };
                }
            }
        }
    }
    Ok(best)
}

/// One row of the gap table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RngRow {
    pub n: usize,
    pub k_neumann: f64,
    pub k_robin: f64,
    pub d_n: f64,
    pub running_avg: f64,
    pub arctan_pred: f64,
}

/// Gap table with running mean and local prediction (at `k_n(0)`).
pub fn rng_rows(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    series: &RngSeries,
    window: usize,
) -> Result<Vec<RngRow>> {
    let avg = running_average(&series.gaps, window)?;
    (0..series.len())
        .map(|i| {
            let k0 = series.neumann[i];
            let pred = if k0 > 0.0 {
                arctan_prediction(graph, robin_vertices, series.sigma, k0)?
            } else {
                0.0
            };
            Ok(RngRow {
                n: i + 1,
                k_neumann: k0,
                k_robin: series.robin[i],
                d_n: series.gaps[i],
                running_avg: avg[i],
                arctan_pred: pred,
            })
        })
        .collect()
}

/// Writes serialisable rows as comma-separated values with a header.
pub fn write_csv<W: Write, R: serde::Serialize>(writer: W, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
