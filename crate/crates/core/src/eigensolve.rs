//! Ordered spectrum `{k_n}` of the Laplacian with Robin/Neumann-Kirchhoff
//! conditions.
//!
//! Every eigenphase of `U(k)` increases with `k`, and their sum is the total
//! phase `Θ(k)` up to a constant. The number of eigenvalues below `k` is the
//! number of times the branches have wrapped through `2π`, which can be read
//! off at any single `k` from `Θ(k)` and the wrapped eigenphases. The solver
//! scans a grid to bracket every index, audits the grid with an explicit
//! branch tracker, then bisects each index independently.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{MetricGraph, RobinSpec};
use crate::scattering::{CMatrix, EigenphaseTracker, ScatteringSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Multiplies the default scan step `π/(8ℓ_max)`.
    pub step_scale: f64,
    /// Bisection stops once the bracket is below `root_tol·(1+k)` or at float
    /// resolution, whichever comes first.
    pub root_tol: f64,
    /// Roots closer than `cluster_tol·(1+k)` are merged into one record.
    pub cluster_tol: f64,
    /// Singular values of `I − U` below `kernel_tol·√(2E)` count as kernel.
    pub kernel_tol: f64,
    /// Grid points per scan window.
    pub window_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step_scale: 1.0,
            root_tol: 1e-15,
            cluster_tol: 1e-9,
            kernel_tol: 1e-8,
            window_steps: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumTarget {
    /// At least this many eigenvalues, counted with multiplicity.
    Count(usize),
    /// Every eigenvalue with `k ≤ k_max`.
    MaxWaveNumber(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRecord {
    /// 1-based index of the first eigenvalue in this cluster.
    pub index: usize,
    pub k: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub sigma: f64,
    pub records: Vec<SpectrumRecord>,
    /// Largest scanned wave number; every eigenvalue up to it is present.
    pub k_cap: f64,
}

impl Spectrum {
    /// Number of eigenvalues with multiplicity.
    pub fn len(&self) -> usize {
        self.records.last().map_or(0, |r| r.index + r.multiplicity - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `k_1, k_2, …` with each value repeated by its multiplicity.
    pub fn wave_numbers(&self) -> Vec<f64> {
        self.records
            .iter()
            .flat_map(|r| std::iter::repeat(r.k).take(r.multiplicity))
            .collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.wave_numbers().into_iter().map(|k| k * k).collect()
    }

    /// Record containing the 1-based index `n`.
    pub fn record_of(&self, n: usize) -> Option<&SpectrumRecord> {
        if n == 0 {
            return None;
        }
        let pos = self.records.partition_point(|r| r.index + r.multiplicity <= n);
        self.records.get(pos)
    }

    pub fn wave_number(&self, n: usize) -> Option<f64> {
        self.record_of(n).map(|r| r.k)
    }

    pub fn eigenvalue(&self, n: usize) -> Option<f64> {
        self.wave_number(n).map(|k| k * k)
    }

    pub fn multiplicity(&self, n: usize) -> Option<usize> {
        self.record_of(n).map(|r| r.multiplicity)
    }
}

/// `N(k, σ)` read from a computed spectrum.
pub fn counting_function(spectrum: &Spectrum, k: f64) -> Result<usize> {
    if k > spectrum.k_cap {
        return Err(Error::OutOfScannedRange {
            k,
            k_cap: spectrum.k_cap,
        });
    }
    Ok(spectrum
        .records
        .iter()
        .take_while(|r| r.k <= k)
        .map(|r| r.multiplicity)
        .sum())
}

/// `N(k, 0) − N(k, σ)`.
pub fn spectral_shift(spec0: &Spectrum, spec1: &Spectrum, k: f64) -> Result<i64> {
    Ok(counting_function(spec0, k)? as i64 - counting_function(spec1, k)? as i64)
}

pub fn compute_spectrum(
    graph: &MetricGraph,
    robin: &RobinSpec,
    target: SpectrumTarget,
) -> Result<Spectrum> {
    compute_spectrum_with(graph, robin, target, &SolverOptions::default())
}

pub fn compute_spectrum_with(
    graph: &MetricGraph,
    robin: &RobinSpec,
    target: SpectrumTarget,
    options: &SolverOptions,
) -> Result<Spectrum> {
    Solver::new(graph, robin, options)?.solve(target)
}

/// Scan-and-bisect solver bound to one `(graph, σ)`.
#[derive(Debug, Clone)]
pub struct Solver {
    system: ScatteringSystem,
    options: SolverOptions,
    step: f64,
}

impl Solver {
    pub fn new(graph: &MetricGraph, robin: &RobinSpec, options: &SolverOptions) -> Result<Self> {
        if !(options.step_scale > 0.0 && options.step_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step scale must be positive, got {}",
                options.step_scale
            )));
        }
        if !(options.root_tol >= 0.0) || options.window_steps < 2 {
            return Err(Error::InvalidArgument("invalid solver tolerances".into()));
        }
        let system = ScatteringSystem::new(graph, robin)?;
        let step = PI / (8.0 * graph.max_length()) * options.step_scale;
        Ok(Self {
            system,
            options: *options,
            step,
        })
    }

    pub fn system(&self) -> &ScatteringSystem {
        &self.system
    }

    /// Scan step `δk`.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn counting(&self, k: f64) -> Result<usize> {
        self.system.counting(k)
    }

    pub fn solve(&self, target: SpectrumTarget) -> Result<Spectrum> {
        let k_cap = match target {
            SpectrumTarget::Count(0) => {
                return Err(Error::InvalidArgument("eigenvalue count must be positive".into()))
            }
            SpectrumTarget::Count(n) => self.cap_for_count(n)?,
            SpectrumTarget::MaxWaveNumber(k) if k.is_finite() && k > 0.0 => k,
            SpectrumTarget::MaxWaveNumber(k) => {
                return Err(Error::InvalidArgument(format!("k_max must be positive, got {k}")))
            }
        };

        let grid = self.grid(k_cap);
        let counts = self.scan(&grid)?;
        let zero_modes = self.system.zero_modes();

        let mut brackets = Vec::new();
        let mut previous = (0.0, zero_modes);
        for (&k, &n) in grid.iter().zip(&counts) {
            if n < previous.1 {
                return Err(Error::StepPolicyViolation {
                    k,
                    reason: format!("counting function decreased from {} to {n}", previous.1),
                });
            }
            for j in previous.1 + 1..=n {
                brackets.push((j, previous.0, k));
            }
            previous = (k, n);
        }

        let roots: Vec<(usize, f64)> = brackets
            .par_iter()
            .map(|&(j, lo, hi)| self.bisect(j, lo, hi).map(|k| (j, k)))
            .collect::<Result<_>>()?;

        let mut records = Vec::new();
        if zero_modes == 1 {
            records.push(SpectrumRecord {
                index: 1,
                k: 0.0,
                multiplicity: 1,
            });
        }
        for (j, k) in roots {
            match records.last_mut() {
                Some(last)
                    if last.k > 0.0
                        && k - last.k <= self.options.cluster_tol * (1.0 + last.k) =>
                {
                    last.multiplicity += 1;
                }
                _ => records.push(SpectrumRecord {
                    index: j,
                    k,
                    multiplicity: 1,
                }),
            }
        }

        records
            .par_iter()
            .filter(|r| r.k > 0.0)
            .try_for_each(|r| self.audit_kernel(r))?;

        Ok(Spectrum {
            sigma: self.system.robin().sigma(),
            records,
            k_cap,
        })
    }

    fn cap_for_count(&self, n: usize) -> Result<f64> {
        let graph = self.system.graph();
        let mut k = (n + 2 * graph.edge_count() + 1) as f64 * PI / graph.total_length();
        while self.system.counting(k)? < n {
            k *= 1.1;
        }
        Ok(k)
    }

    fn grid(&self, k_cap: f64) -> Vec<f64> {
        let steps = (k_cap / self.step).ceil().max(1.0) as usize;
        (1..=steps)
            .map(|i| (i as f64 * self.step).min(k_cap))
            .collect()
    }

    /// Counting function on the grid, audited window by window.
    fn scan(&self, grid: &[f64]) -> Result<Vec<usize>> {
        let width = self.options.window_steps;
        let starts: Vec<usize> = (0..grid.len()).step_by(width).collect();
        let windows: Vec<Vec<usize>> = starts
            .par_iter()
            .map(|&start| {
                // each window also re-evaluates the last point of its predecessor
                let from = start.saturating_sub(1);
                let to = (start + width).min(grid.len());
                let counts = self.scan_window(&grid[from..to])?;
                Ok(counts[start - from..].to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(windows.concat())
    }

    fn scan_window(&self, ks: &[f64]) -> Result<Vec<usize>> {
        let system = &self.system;
        let branches = system.graph().slot_count() as f64;
        let mut counts = Vec::with_capacity(ks.len());
        let mut tracker: Option<EigenphaseTracker> = None;
        for &k in ks {
            let u = system.unitary(k)?;
            let n = system.counting_from_phases(k, &u.eigenphases);
            let smooth = system.theta(k) / (2.0 * PI);
            if (n as f64 - smooth).abs() > branches {
                return Err(Error::StepPolicyViolation {
                    k,
                    reason: format!("N = {n} strays from Θ/2π = {smooth:.3}"),
                });
            }
            match tracker.as_mut() {
                None => tracker = Some(EigenphaseTracker::new(u)),
                Some(t) => {
                    let k_prev = t.current().k;
                    let step = t.advance(u, system.theta(k) - system.theta(k_prev))?;
                    let jump = n as i64 - *counts.last().expect("previous count") as i64;
                    if step.crossings != jump {
                        return Err(Error::StepPolicyViolation {
                            k,
                            reason: format!(
                                "{} branch crossings but the count changed by {jump}",
                                step.crossings
                            ),
                        });
                    }
                }
            }
            counts.push(n);
        }
        Ok(counts)
    }

    /// Smallest `k` in `(lo, hi]` with `N(k) ≥ j`, assuming `N(lo) < j ≤ N(hi)`.
    fn bisect(&self, j: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= self.options.root_tol * (1.0 + hi) {
                return Ok(hi);
            }
            if self.system.counting(mid)? >= j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    fn audit_kernel(&self, record: &SpectrumRecord) -> Result<()> {
        let values = kernel_singular_values(&self.system, record.k)?;
        let tol = self.options.kernel_tol * (self.system.graph().slot_count() as f64).sqrt();
        let found = values.iter().filter(|&&s| s < tol).count();
        if found < record.multiplicity {
            return Err(Error::ToleranceNotMet {
                k: record.k,
                reason: format!(
                    "{found} singular values of I - U below {tol:e}, multiplicity {}",
                    record.multiplicity
                ),
            });
        }
        Ok(())
    }
}

/// Singular values of `I − U(k)`, ascending.
pub fn kernel_singular_values(system: &ScatteringSystem, k: f64) -> Result<Vec<f64>> {
    let u = system.unitary_matrix(k)?;
    let n = u.nrows();
    let a: CMatrix = CMatrix::identity(n, n) - u;
    let svd = a
        .try_svd(false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::ConvergenceFailure(format!("SVD of I - U({k})")))?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// `k_n(t)` along `t ∈ [0, σ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueCurve {
    pub n: usize,
    /// `(t, k_n(t))` on a uniform grid.
    pub samples: Vec<(f64, f64)>,
    pub multiplicities: Vec<usize>,
}

impl EigenvalueCurve {
    /// Multiple at every sampled coupling.
    pub fn persistently_degenerate(&self) -> bool {
        self.multiplicities.iter().all(|&m| m > 1)
    }

    pub fn require_simple(&self) -> Result<&Self> {
        if self.persistently_degenerate() {
            Err(Error::IndexCrossingAmbiguity { n: self.n })
        } else {
            Ok(self)
        }
    }
}

pub fn robin_homotopy(
    graph: &MetricGraph,
    robin_vertices: &[usize],
    sigma: f64,
    n: usize,
    t_steps: usize,
) -> Result<EigenvalueCurve> {
    if n == 0 || t_steps == 0 {
        return Err(Error::InvalidArgument(
            "index and step count must be positive".into(),
        ));
    }
    let base = RobinSpec::new(graph, robin_vertices, sigma)?;
    let points: Vec<(f64, f64, usize)> = (0..=t_steps)
        .into_par_iter()
        .map(|i| {
            let t = sigma * i as f64 / t_steps as f64;
            let spectrum = compute_spectrum(graph, &base.with_sigma(t)?, SpectrumTarget::Count(n))?;
            let record = spectrum.record_of(n).expect("spectrum reaches n");
            Ok((t, record.k, record.multiplicity))
        })
        .collect::<Result<_>>()?;
    Ok(EigenvalueCurve {
        n,
        samples: points.iter().map(|p| (p.0, p.1)).collect(),
        multiplicities: points.iter().map(|p| p.2).collect(),
    })
}
