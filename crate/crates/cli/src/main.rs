//! `qgraph`: spectra and Robin-Neumann gap tables for metric graphs.
//!
//! Every subcommand reads a graph file, runs one computation and writes a
//! table as CSV (default) or JSON, either to `--out` or to stdout. A short
//! summary goes to stderr. The exit status is 0 on success, 1 when a bound
//! check fails and 2 on any error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qgraph::bounds::is_violation;
use qgraph::eigenfunction::{eigenfunctions_at, sensitivity_of};
use qgraph::stats::{default_cluster_tol, rng_rows, weyl_moments_from, write_csv};
use qgraph::*;

#[derive(Parser)]
#[command(name = "qgraph", version, about = "Quantum graph spectra and Robin-Neumann gap statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues with multiplicities.
    Spectrum(CommonArgs),
    /// Robin-Neumann gaps with running mean, local prediction and bounds.
    Rng(RngArgs),
    /// Local Weyl law moments of Neumann-Kirchhoff eigenfunctions.
    Weyl(CommonArgs),
    /// Empirical distribution of the gaps.
    Cdf(CdfArgs),
    /// Eigenvalue sensitivities dλ/dσ against prediction and bound.
    Sensitivity(CommonArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// Coupling; overrides the value in the graph file.
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated Robin vertices; overrides the graph file.
    #[arg(long, value_delimiter = ',')]
    robin: Option<Vec<usize>>,
    /// Number of eigenvalues (default 2500).
    #[arg(long, conflicts_with = "kmax")]
    nmax: Option<usize>,
    /// Largest wave number instead of a count.
    #[arg(long)]
    kmax: Option<f64>,
    /// Running-average window (odd).
    #[arg(long, default_value_t = 21)]
    window: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Multiplies the default scan step.
    #[arg(long)]
    step_scale: Option<f64>,
    /// Root tolerance relative to 1 + k.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct RngArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Accumulation values of the gaps with their frequencies.
    #[arg(long)]
    clusters_out: Option<PathBuf>,
    /// One summary row per gap bound.
    #[arg(long)]
    bounds_out: Option<PathBuf>,
    /// Gaps closer than this join one cluster (default scales with 4σ/ℓ_min).
    #[arg(long)]
    cluster_tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CdfArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Grid points for F(x).
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram table, normalised to unit area.
    #[arg(long)]
    hist_out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

const DEFAULT_NMAX: usize = 2500;

/// Resolved inputs shared by all subcommands.
struct RunConfig {
    graph: MetricGraph,
    robin: RobinSpec,
    target: SpectrumTarget,
    options: SolverOptions,
    window: usize,
    out: Option<PathBuf>,
    format: Format,
}

impl RunConfig {
    fn from_args(args: &CommonArgs) -> Result<Self> {
        let file = GraphFile::load(&args.graph)
            .with_context(|| format!("reading {}", args.graph.display()))?;
        let (graph, from_file) = file.build().context("invalid graph")?;
        let vertices = args.robin.clone().unwrap_or_else(|| from_file.vertices().to_vec());
        let sigma = args.sigma.unwrap_or(from_file.sigma());
        let robin = RobinSpec::new(&graph, &vertices, sigma)?;
        let target = match (args.nmax, args.kmax) {
            (Some(_), Some(_)) => bail!("--nmax and --kmax are mutually exclusive"),
            (Some(n), None) => {
                ensure!(n > 0, "--nmax must be positive");
                SpectrumTarget::Count(n)
            }
            (None, Some(k)) => {
                ensure!(k > 0.0 && k.is_finite(), "--kmax must be positive");
                SpectrumTarget::MaxWaveNumber(k)
            }
            (None, None) => SpectrumTarget::Count(DEFAULT_NMAX),
        };
        let mut options = SolverOptions::default();
        if let Some(s) = args.step_scale {
            ensure!(s > 0.0 && s <= 1.0, "--step-scale must lie in (0, 1]");
            options.step_scale = s;
        }
        if let Some(t) = args.tol {
            ensure!(t > 0.0 && t < 1e-3, "--tol must lie in (0, 1e-3)");
            options.root_tol = t;
        }
        Ok(Self {
            graph,
            robin,
            target,
            options,
            window: args.window,
            out: args.out.clone(),
            format: args.format,
        })
    }

    fn solve(&self, robin: &RobinSpec, target: SpectrumTarget) -> Result<Spectrum> {
        Ok(compute_spectrum_with(&self.graph, robin, target, &self.options)?)
    }

    /// Number of eigenvalues the table covers, given the unperturbed spectrum.
    fn count(&self, spectrum: &Spectrum) -> usize {
        match self.target {
            SpectrumTarget::Count(n) => n,
            SpectrumTarget::MaxWaveNumber(_) => spectrum.len(),
        }
    }

    fn require_robin(&self) -> Result<()> {
        ensure!(
            !self.robin.vertices().is_empty(),
            "no Robin vertices: add a robin section to the graph file or pass --robin"
        );
        Ok(())
    }

    /// Neumann and Robin spectra paired over the same index range.
    fn gap_series(&self) -> Result<RngSeries> {
        self.require_robin()?;
        ensure!(self.robin.sigma() > 0.0, "the coupling must be positive");
        let neumann = self.solve(&RobinSpec::neumann(), self.target)?;
        let n = self.count(&neumann);
        ensure!(n > 0, "no eigenvalues in range");
        let robin = self.solve(&self.robin, SpectrumTarget::Count(n))?;
        Ok(RngSeries::from_spectra(&neumann, &robin, n)?)
    }
}

fn write_table<R: Serialize>(path: Option<&Path>, format: Format, rows: &[R]) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match format {
        Format::Csv => write_csv(&mut sink, rows)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, rows)?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    n: usize,
    k: f64,
    lambda: f64,
    multiplicity: usize,
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<usize> {
    let spectrum = cfg.solve(&cfg.robin, cfg.target)?;
    let n = cfg.count(&spectrum);
    let rows: Vec<SpectrumRow> = spectrum
        .records
        .iter()
        .flat_map(|r| {
            (0..r.multiplicity).map(move |i| SpectrumRow {
                n: r.index + i,
                k: r.k,
                lambda: r.k * r.k,
                multiplicity: r.multiplicity,
            })
        })
        .take(n)
        .collect();
    write_table(cfg.out.as_deref(), cfg.format, &rows)?;
    eprintln!(
        "{} eigenvalues, sigma = {}, k_max = {:.6}",
        rows.len(),
        cfg.robin.sigma(),
        rows.last().map_or(0.0, |r| r.k)
    );
    Ok(0)
}

#[derive(Serialize)]
struct GapRow {
    n: usize,
    k_neumann: f64,
    k_robin: f64,
    d_n: f64,
    normalized: f64,
    running_avg: f64,
    arctan_pred: f64,
    thm_bound: f64,
    improved_bound: Option<f64>,
}

#[derive(Serialize)]
struct ClusterRow {
    value: f64,
    count: usize,
    frequency: f64,
}

#[derive(Serialize)]
struct BoundSummary {
    bound: String,
    decomposition: String,
    checked: usize,
    max_ratio: f64,
    violations: usize,
}

impl BoundSummary {
    fn from_report(report: &BoundReport) -> Self {
        let applicable: Vec<_> = report.rows.iter().filter_map(|r| r.bound.map(|b| (r.actual, b))).collect();
        Self {
            bound: report.name.clone(),
            decomposition: report.decomposition.clone(),
            checked: applicable.len(),
            max_ratio: applicable.iter().map(|(a, b)| a / b).fold(0.0, f64::max),
            violations: report.violations.len(),
        }
    }
}

fn cmd_rng(cfg: &RunConfig, args: &RngArgs) -> Result<usize> {
    let series = cfg.gap_series()?;
    let vr = cfg.robin.vertices();
    let sigma = cfg.robin.sigma();
    let mean = theoretical_mean(&cfg.graph, vr, sigma);
    let base = rng_rows(&cfg.graph, vr, &series, cfg.window)?;
    let decomp = boundary_star_decomposition(&cfg.graph, &cfg.robin);
    let check = check_all(&cfg.graph, &series, &decomp, "boundary", vr)?;
    let rows: Vec<GapRow> = base
        .iter()
        .zip(&check.theorem.rows)
        .zip(&check.improved.rows)
        .map(|((r, thm), imp)| GapRow {
            n: r.n,
            k_neumann: r.k_neumann,
            k_robin: r.k_robin,
            d_n: r.d_n,
            normalized: r.d_n / mean,
            running_avg: r.running_avg / mean,
            arctan_pred: r.arctan_pred / mean,
            thm_bound: thm.bound.unwrap_or(f64::NAN),
            improved_bound: imp.bound,
        })
        .collect();
    write_table(cfg.out.as_deref(), cfg.format, &rows)?;

    if let Some(path) = &args.clusters_out {
        let tol = args.cluster_tol.unwrap_or_else(|| default_cluster_tol(&cfg.graph, sigma));
        let clusters: Vec<ClusterRow> = accumulation_clusters(&series.gaps, tol)
            .into_iter()
            .map(|c| ClusterRow {
                value: c.value,
                count: c.count,
                frequency: c.count as f64 / series.len() as f64,
            })
            .collect();
        write_table(Some(path), cfg.format, &clusters)?;
    }
    if let Some(path) = &args.bounds_out {
        let summary: Vec<BoundSummary> = [&check.theorem, &check.cap, &check.improved]
            .into_iter()
            .map(BoundSummary::from_report)
            .collect();
        write_table(Some(path), cfg.format, &summary)?;
    }

    let violations = check.violation_count();
    eprintln!(
        "{} gaps, mean {:.6} (limit {:.6}), {} bound violations, {} negative gaps",
        series.len(),
        cesaro_mean(&series),
        mean,
        violations - check.negative.len(),
        check.negative.len()
    );
    Ok(violations)
}

#[derive(Serialize)]
struct MomentRow {
    quantity: String,
    measured: f64,
    predicted: f64,
    rel_error: f64,
}

fn cmd_weyl(cfg: &RunConfig) -> Result<usize> {
    let neumann = RobinSpec::neumann();
    let spectrum = cfg.solve(&neumann, cfg.target)?;
    let n = cfg.count(&spectrum);
    let report = weyl_moments_from(&cfg.graph, &neumann, &spectrum, n)?;
    let total = cfg.graph.total_length();
    let slot_pred = 1.0 / (2.0 * total);

    let mut rows = Vec::new();
    for (v, &m) in report.vertex.iter().enumerate() {
        let predicted = 2.0 / (cfg.graph.degree(v) as f64 * total);
        rows.push(MomentRow {
            quantity: format!("vertex {v}"),
            measured: m,
            predicted,
            rel_error: (m - predicted).abs() / predicted,
        });
    }
    for (s, &m) in report.slot.iter().enumerate() {
        rows.push(MomentRow {
            quantity: format!("slot {s}"),
            measured: m,
            predicted: slot_pred,
            rel_error: (m - slot_pred).abs() / slot_pred,
        });
    }
    // no natural scale for a zero target: compare against the slot moment
    for ((s, t), z) in &report.cross {
        rows.push(MomentRow {
            quantity: format!("cross {s} {t}"),
            measured: z.norm(),
            predicted: 0.0,
            rel_error: z.norm() / slot_pred,
        });
    }
    write_table(cfg.out.as_deref(), cfg.format, &rows)?;
    let worst = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    eprintln!(
        "{} simple eigenfunctions ({} excluded), largest relative error {:.4}",
        report.used, report.excluded, worst
    );
    Ok(0)
}

#[derive(Serialize)]
struct CdfRow {
    x: f64,
    cdf: f64,
}

#[derive(Serialize)]
struct HistRow {
    left: f64,
    right: f64,
    density: f64,
}

fn cmd_cdf(cfg: &RunConfig, args: &CdfArgs) -> Result<usize> {
    ensure!(args.points >= 2, "--points must be at least 2");
    let series = cfg.gap_series()?;
    let cdf = empirical_cdf(&series)?;
    let (lo, hi) = cdf.support();
    let cap = gap_cap(&cfg.graph, cfg.robin.sigma());
    let (x0, x1) = (lo.min(0.0), hi.max(lo + f64::EPSILON));
    let rows: Vec<CdfRow> = (0..args.points)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / (args.points - 1) as f64;
            CdfRow { x, cdf: cdf.eval(x) }
        })
        .collect();
    write_table(cfg.out.as_deref(), cfg.format, &rows)?;
    if let Some(path) = &args.hist_out {
        let hist: Vec<HistRow> = cdf
            .histogram(args.bins, x0, x1)?
            .into_iter()
            .map(|b| HistRow {
                left: b.left,
                right: b.right,
                density: b.density,
            })
            .collect();
        write_table(Some(path), cfg.format, &hist)?;
    }
    let tol = default_cluster_tol(&cfg.graph, cfg.robin.sigma());
    let jumps = cdf.jump_points(tol).len();
    let outside = usize::from(is_violation(hi, cap)) + usize::from(lo < -1e-10);
    eprintln!(
        "{} gaps in [{lo:.6}, {hi:.6}], cap 4σ/ℓ_min = {cap:.6}, {jumps} jump points at tolerance {tol:e}",
        series.len()
    );
    Ok(outside)
}

#[derive(Serialize)]
struct SensitivityRow {
    n: usize,
    lambda: f64,
    sensitivity: f64,
    prediction: Option<f64>,
    bound: Option<f64>,
    degenerate: bool,
}

fn cmd_sensitivity(cfg: &RunConfig) -> Result<usize> {
    cfg.require_robin()?;
    let spectrum = cfg.solve(&cfg.robin, cfg.target)?;
    let n = cfg.count(&spectrum);
    let system = ScatteringSystem::new(&cfg.graph, &cfg.robin)?;
    let decomp = boundary_star_decomposition(&cfg.graph, &cfg.robin);
    let vr = cfg.robin.vertices();
    let sigma = cfg.robin.sigma();

    let mut rows = Vec::with_capacity(n);
    let mut violations = 0;
    for rec in spectrum.records.iter().filter(|r| r.index <= n) {
        let handles = eigenfunctions_at(&system, rec.k, rec.multiplicity)
            .with_context(|| format!("eigenfunctions at k = {}", rec.k))?;
        let sens = sensitivity_of(&handles, &cfg.robin);
        let lambda = rec.k * rec.k;
        let (prediction, bound) = if lambda > 0.0 {
            (
                Some(sensitivity_prediction(&cfg.graph, vr, sigma, lambda)?),
                Some(sensitivity_bound(&decomp, vr, sigma, lambda)?),
            )
        } else {
            (None, None)
        };
        if bound.is_some_and(|b| is_violation(sens.value, b)) {
            violations += 1;
        }
        for i in 0..rec.multiplicity.min(n + 1 - rec.index) {
            rows.push(SensitivityRow {
                n: rec.index + i,
                lambda,
                sensitivity: sens.value,
                prediction,
                bound,
                degenerate: sens.degenerate,
            });
        }
    }
    write_table(cfg.out.as_deref(), cfg.format, &rows)?;
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    eprintln!(
        "{} sensitivities ({} on multiple eigenvalues), {} bound violations",
        rows.len(),
        degenerate,
        violations
    );
    Ok(violations)
}

fn run(cli: &Cli) -> Result<usize> {
    match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(&RunConfig::from_args(a)?),
        Command::Rng(a) => cmd_rng(&RunConfig::from_args(&a.common)?, a),
        Command::Weyl(a) => cmd_weyl(&RunConfig::from_args(a)?),
        Command::Cdf(a) => cmd_cdf(&RunConfig::from_args(&a.common)?, a),
        Command::Sensitivity(a) => cmd_sensitivity(&RunConfig::from_args(a)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
