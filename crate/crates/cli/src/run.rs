//! Executes an [`ExperimentConfig`] and persists its artifacts.
//!
//! Every run writes into its output directory:
//!
//! * `config.toml`: the effective configuration (after `--seed-override`);
//! * one results CSV (`field.csv`, `scaling.csv`, `sis.csv`, `clt.csv`,
//!   `subgaussian.csv`, or `ergodic.csv` plus `control.csv`);
//! * `meta.json`: seed, kernel specification and normalization constants;
//! * `report.json`: the full report with pass/fail fields and timing;
//! * `manifest.json`: SHA-256 and size of every other file.
//!
//! All random streams derive from the master seed through labeled
//! substreams, and the library reduces in a fixed order, so the CSV files
//! depend only on the configuration, never on the thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use stabfield_core::subordination::{build_random_time_kernel, simulate_base_field, simulate_random_time_field};
use stabfield_core::verification::{
    dissipative_control, estimate_hurst, gross_mixing_measure_for, integer_time_grid, rosinski_partial_sums_for,
    test_sis, test_stable_clt, test_subgaussian_equivalence, CltOptions, CltReport, CurveData, ErgodicDiagnostics,
    ErgodicOptions, IncrementRepresentation, RandomTimeIncrements, ScalingFit, SisReport, SubgaussianOptions,
    SubgaussianReport,
};
use stabfield_core::{
    FieldSample, GaussianFieldSampler, KernelFamily, KernelSpec, RandomStream, RandomTimeKernel, TimeGrid,
    WellPosedness,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::manifest::{Manifest, OutputDir};

/// Command-line overrides of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateReport {
    pub replications: usize,
    pub grid_points: usize,
    pub effective_hurst: f64,
    pub well_posedness: Option<WellPosedness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HurstReport {
    pub reference_point: Vec<f64>,
    /// `H' H` for a subordinated field, `H` for the base field.
    pub expected_hurst: f64,
    pub fit: ScalingFit,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub diagnostics: ErgodicDiagnostics,
    pub growth_ratios: Vec<f64>,
    pub control: Option<ErgodicDiagnostics>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunReport {
    Simulate(SimulateReport),
    VerifyHurst(HurstReport),
    VerifySis(SisReport),
    Clt(CltReport),
    Subgaussian(SubgaussianReport),
    Ergodic(ErgodicReport),
}

impl RunReport {
    /// One-line human summary.
    pub fn summary(&self) -> String {
        match self {
            Self::Simulate(r) => format!(
                "simulated {} replications on {} grid points (effective H = {:.4})",
                r.replications, r.grid_points, r.effective_hurst
            ),
            Self::VerifyHurst(r) => format!(
                "estimated H = {:.4} +/- {:.4} (expected {:.4})",
                r.fit.estimated_hurst, r.fit.stderr, r.expected_hurst
            ),
            Self::VerifySis(r) => format!(
                "sup ECF distance {:.5} vs band {:.5}: {}",
                r.sup_distance,
                r.threshold,
                pass_word(r.pass)
            ),
            Self::Clt(r) => format!(
                "d(n) = {:?}, Spearman rho = {:.3}: trend {}",
                r.distances,
                r.spearman,
                pass_word(r.trend)
            ),
            Self::Subgaussian(r) => format!(
                "sup ECF distance {:.5} vs band {:.5}: {}",
                r.sup_distance,
                r.threshold,
                pass_word(r.pass)
            ),
            Self::Ergodic(r) => format!(
                "verdict {:?}, control {:?}",
                r.diagnostics.verdict,
                r.control.as_ref().and_then(|c| c.verdict)
            ),
        }
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: RunReport,
    pub manifest: Manifest,
    pub elapsed_seconds: f64,
}

/// Validates `config` (with overrides applied), runs it and writes the
/// artifacts.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome> {
    let mut cfg = config.clone();
    if let Some(seed) = options.seed_override {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out = options
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set `output` in the configuration"))?;
    match options.threads {
        Some(0) => bail!("--threads must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building the worker pool")?;
            pool.install(|| execute(&cfg, &out))
        }
        None => execute(&cfg, &out),
    }
}

fn csv_bytes<F: FnOnce(&mut Vec<u8>) -> stabfield_core::Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let stream = RandomStream::new(cfg.seed);
    let mut dir = OutputDir::create(out)?;
    dir.write("config.toml", toml::to_string(cfg).context("serializing the configuration")?.as_bytes())?;

    let kernel = match &cfg.kernel {
        Some(spec) => Some(spec.build().context("kernels: building the base kernel")?),
        None => None,
    };
    let report = match cfg.kind {
        ExperimentKind::Simulate => run_simulate(cfg, kernel.as_ref(), &stream, &mut dir)?,
        ExperimentKind::VerifyHurst => run_hurst(cfg, kernel.as_ref(), &stream, &mut dir)?,
        ExperimentKind::VerifySis => run_sis(cfg, kernel.as_ref(), &stream, &mut dir)?,
        ExperimentKind::Clt => run_clt(cfg, kernel.as_ref(), &stream, &mut dir)?,
        ExperimentKind::Subgaussian => run_subgaussian(cfg, &stream, &mut dir)?,
        ExperimentKind::Ergodic => run_ergodic(cfg, kernel.as_ref(), &stream, &mut dir)?,
    };

    let meta = serde_json::json!({
        "kind": cfg.kind,
        "seed": cfg.seed,
        "replications": cfg.replications,
        "kernel": cfg.kernel,
        "kernel_constants": kernel.as_ref().map(KernelFamily::constants),
        "kernel_hurst": kernel.as_ref().map(KernelFamily::hurst),
        "subordinator": cfg.subordinator,
        "scheme": cfg.scheme,
        "generator": format!("stabfield {}", env!("CARGO_PKG_VERSION")),
    });
    dir.write_json("meta.json", &meta)?;
    let elapsed_seconds = start.elapsed().as_secs_f64();
    dir.write_json(
        "report.json",
        &serde_json::json!({ "report": report, "elapsed_seconds": elapsed_seconds }),
    )?;
    let out_dir = dir.root().to_path_buf();
    let manifest = dir.finish()?;
    Ok(RunOutcome {
        out_dir,
        report,
        manifest,
        elapsed_seconds,
    })
}

fn require_kernel(kernel: Option<&KernelFamily>) -> Result<&KernelFamily> {
    kernel.ok_or_else(|| anyhow!("a [kernel] section is required"))
}

/// Samples the configured subordinator on `grid` and subordinates `kernel`.
fn subordinate(
    cfg: &ExperimentConfig,
    kernel: &KernelFamily,
    grid: &TimeGrid,
    stream: &RandomStream,
) -> Result<RandomTimeKernel> {
    let s = cfg.subordinator()?;
    let sampler =
        GaussianFieldSampler::auto(s.hurst, s.d, grid).context("gaussian_subordinators: preparing the sampler")?;
    let batch = sampler
        .sample_batch(s.paths, &stream.labeled("subordinator", 0))
        .context("gaussian_subordinators: sampling the batch")?;
    build_random_time_kernel(kernel, &batch).context("subordination: building the random-time kernel")
}

/// The subordinated field when a subordinator is configured, the base field
/// otherwise.
fn sample_field(
    cfg: &ExperimentConfig,
    kernel: &KernelFamily,
    grid: &TimeGrid,
    replications: usize,
    stream: &RandomStream,
) -> Result<(FieldSample, Option<RandomTimeKernel>)> {
    let field_stream = stream.labeled("field", 0);
    let (mut sample, rtk) = if cfg.subordinator.is_some() {
        let rtk = subordinate(cfg, kernel, grid, stream)?;
        let sample = simulate_random_time_field(&rtk, cfg.scheme, replications, &field_stream)
            .context("subordination: simulating the random-time field")?;
        (sample, Some(rtk))
    } else {
        let sample = simulate_base_field(kernel, grid, cfg.scheme, replications, &field_stream)
            .context("subordination: simulating the base field")?;
        (sample, None)
    };
    sample.meta_mut().seed = Some(cfg.seed);
    Ok((sample, rtk))
}

fn time_dim(cfg: &ExperimentConfig, kernel: &KernelFamily) -> usize {
    cfg.subordinator.as_ref().map_or(kernel.time_dim(), |s| s.n)
}

fn run_simulate(
    cfg: &ExperimentConfig,
    kernel: Option<&KernelFamily>,
    stream: &RandomStream,
    dir: &mut OutputDir,
) -> Result<RunReport> {
    let kernel = require_kernel(kernel)?;
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| anyhow!("a [grid] section is required"))?
        .build()
        .context("grid")?;
    if grid.dim() != time_dim(cfg, kernel) {
        bail!(
            "grid points lie in R^{} but the time dimension is {}",
            grid.dim(),
            time_dim(cfg, kernel)
        );
    }
    let (sample, rtk) = sample_field(cfg, kernel, &grid, cfg.replications, stream)?;
    dir.write("field.csv", &csv_bytes(|b| sample.write_csv(b))?)?;
    dir.write_json("field_meta.json", &sample.meta_json())?;
    Ok(RunReport::Simulate(SimulateReport {
        replications: sample.replications(),
        grid_points: grid.len(),
        effective_hurst: sample.meta().effective_hurst,
        well_posedness: rtk.map(|r| r.well_posedness().clone()),
    }))
}

fn run_hurst(
    cfg: &ExperimentConfig,
    kernel: Option<&KernelFamily>,
    stream: &RandomStream,
    dir: &mut OutputDir,
) -> Result<RunReport> {
    let kernel = require_kernel(kernel)?;
    let dim = time_dim(cfg, kernel);
    let t0 = cfg.probes.times.first().cloned().unwrap_or_else(|| vec![1.0; dim]);
    if t0.len() != dim {
        bail!("probes.times point {t0:?} does not lie in R^{dim}");
    }
    let scales = &cfg.probes.scales;
    let points: Vec<Vec<f64>> = scales.iter().map(|c| t0.iter().map(|v| c * v).collect()).collect();
    // one simulation on {0} u {c t0}: the scales share the noise, which
    // keeps the slope estimate tight
    let grid = TimeGrid::new(dim, vec![vec![0.0; dim]])?.with_points(&points)?;
    let (sample, rtk) = sample_field(cfg, kernel, &grid, cfg.replications, stream)?;
    let origin = grid.index_of(&vec![0.0; dim]).expect("origin is on the grid");
    let expected = rtk.as_ref().map_or(kernel.hurst(), RandomTimeKernel::effective_hurst);
    let mut k = 0;
    let fit = estimate_hurst(
        |_c, r| {
            let t = grid.index_of(&points[k]).expect("scaled point is on the grid");
            k += 1;
            Ok((0..r).map(|i| sample.value(i, t) - sample.value(i, origin)).collect())
        },
        scales,
        cfg.replications,
    )
    .context("verification: estimating the Hurst index")?;
    dir.write("scaling.csv", &csv_bytes(|b| fit.write_csv(b))?)?;
    Ok(RunReport::VerifyHurst(HurstReport {
        reference_point: t0,
        expected_hurst: expected,
        deviation: (fit.estimated_hurst - expected).abs(),
        fit,
    }))
}

fn run_sis(
    cfg: &ExperimentConfig,
    kernel: Option<&KernelFamily>,
    stream: &RandomStream,
    dir: &mut OutputDir,
) -> Result<RunReport> {
    let kernel = require_kernel(kernel)?;
    let motion = cfg.sis.as_ref().expect("validated").motion.build();
    let sampler = |grid: &TimeGrid, r: usize| -> stabfield_core::Result<FieldSample> {
        let s = cfg.subordinator().expect("validated");
        let batch = GaussianFieldSampler::auto(s.hurst, s.d, grid)?.sample_batch(s.paths, &stream.labeled("subordinator", 0))?;
        let rtk = build_random_time_kernel(kernel, &batch)?;
        simulate_random_time_field(&rtk, cfg.scheme, r, &stream.labeled("field", 0))
    };
    let report = test_sis(sampler, &motion, &cfg.probes.times, &cfg.probes.thetas, cfg.replications)
        .context("verification: strong stationarity of increments")?;
    dir.write("sis.csv", &csv_bytes(|b| report.write_csv(b))?)?;
    Ok(RunReport::VerifySis(report))
}

fn run_clt(
    cfg: &ExperimentConfig,
    kernel: Option<&KernelFamily>,
    stream: &RandomStream,
    dir: &mut OutputDir,
) -> Result<RunReport> {
    let kernel = require_kernel(kernel)?;
    let clt = cfg.clt.as_ref().expect("validated");
    let options = CltOptions {
        reference_paths: clt.reference_paths,
        scheme: cfg.scheme,
    };
    let report = test_stable_clt(
        kernel,
        cfg.subordinator()?.hurst,
        &clt.n_schedule,
        &cfg.probes.times,
        &cfg.probes.thetas,
        cfg.replications,
        options,
        stream,
    )
    .context("verification: stable limit theorem")?;
    dir.write("clt.csv", &csv_bytes(|b| report.write_csv(b))?)?;
    Ok(RunReport::Clt(report))
}

fn run_subgaussian(cfg: &ExperimentConfig, stream: &RandomStream, dir: &mut OutputDir) -> Result<RunReport> {
    let alpha = match cfg.kernel()? {
        KernelSpec::RandomSlope { alpha } => *alpha,
        _ => unreachable!("validated"),
    };
    let times: Vec<f64> = cfg.probes.times.iter().map(|t| t[0]).collect();
    let options = cfg
        .subgaussian
        .as_ref()
        .map_or_else(SubgaussianOptions::default, |s| SubgaussianOptions { paths: s.paths });
    let report = test_subgaussian_equivalence(
        alpha,
        cfg.subordinator()?.hurst,
        &times,
        &cfg.probes.thetas,
        cfg.replications,
        options,
        stream,
    )
    .context("verification: sub-Gaussian equivalence")?;
    dir.write("subgaussian.csv", &csv_bytes(|b| report.write_csv(b))?)?;
    Ok(RunReport::Subgaussian(report))
}

fn diagnose(
    rep: &dyn IncrementRepresentation,
    e: &crate::config::ErgodicSpec,
    options: ErgodicOptions,
    stream: &RandomStream,
) -> Result<ErgodicDiagnostics> {
    let partial = rosinski_partial_sums_for(rep, e.n_max, e.probes, options, &stream.labeled("rosinski", 0))
        .context("verification: Rosinski partial sums")?;
    let mixing = gross_mixing_measure_for(
        rep,
        e.delta,
        e.epsilon,
        &e.mixing_schedule,
        options,
        &stream.labeled("gross", 0),
    )
    .context("verification: Gross mixing measure")?;
    Ok(ErgodicDiagnostics::combine(partial, mixing))
}

fn run_ergodic(
    cfg: &ExperimentConfig,
    kernel: Option<&KernelFamily>,
    stream: &RandomStream,
    dir: &mut OutputDir,
) -> Result<RunReport> {
    let kernel = require_kernel(kernel)?;
    let e = cfg.ergodic.as_ref().expect("validated");
    let grid = integer_time_grid(e.n_max)?;
    let rtk = subordinate(cfg, kernel, &grid, stream)?;
    let rep = RandomTimeIncrements::new(&rtk).context("verification: increment representation")?;
    let options = ErgodicOptions {
        probe_radius: e.probe_radius,
        bound: e.bound,
        quadrature_points: e.quadrature_points,
    };
    let diagnostics = diagnose(&rep, e, options, &stream.labeled("random-time", 0))?;
    dir.write("ergodic.csv", &csv_bytes(|b| diagnostics.write_csv(b))?)?;
    let control = if e.control {
        let ctl = dissipative_control(kernel.alpha(), e.n_max)?;
        let diag = diagnose(&ctl, e, options, &stream.labeled("control", 0))?;
        dir.write("control.csv", &csv_bytes(|b| diag.write_csv(b))?)?;
        Some(diag)
    } else {
        None
    };
    Ok(RunReport::Ergodic(ErgodicReport {
        growth_ratios: diagnostics.growth_ratios(),
        diagnostics,
        control,
    }))
}
