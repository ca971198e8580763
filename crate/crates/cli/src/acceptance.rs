//! The acceptance suite: nine criteria with every configuration, seed and
//! tolerance pinned here. `stabfield selftest` runs it at reduced
//! replication counts; the `acceptance` integration test runs it in full.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use stabfield_core::kernels::{
    chentsov_kernel, fbf_moving_avg_kernel, indicator_kernel, lalpha_functional, linear_fsm_kernel, random_slope_kernel,
};
use stabfield_core::stable::{sample_subgaussian_multiplier, sample_symmetric_standard};
use stabfield_core::subordination::build_random_time_kernel;
use stabfield_core::subordinator::sample_fbf;
use stabfield_core::verification::{bonferroni_z, FlowVerdict, MIXING_DECAY_FACTOR, MIXING_SIGMAS, ROSINSKI_DIVERGENCE_RATIO};
use stabfield_core::{KernelFamily, LinearFsmParams, RandomStream, RigidMotion, TimeGrid};

use crate::config::ExperimentConfig;
use crate::run::{run, RunOptions, RunReport};

/// Largest accepted `|H_estimated - H_expected|` (criteria 1 and 2).
pub const HURST_TOLERANCE: f64 = 0.05;
/// Upper bound on the CLT distance at the largest `n` (criterion 3).
pub const CLT_FINAL_DISTANCE: f64 = 0.08;
/// Relative tolerance of the well-posedness identity (criterion 5).
pub const WELL_POSEDNESS_TOLERANCE: f64 = 1e-6;
/// Relative tolerance of the scaling / rigid-motion suite (criterion 6).
pub const INVARIANCE_TOLERANCE: f64 = 1e-4;
/// Draws of the random-number checks (criterion 8).
pub const RNG_DRAWS: usize = 100_000;
/// Asymptotic 1% critical value of the Kolmogorov-Smirnov statistic,
/// `sqrt(n) D_n`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;
/// Accepted range of the `alpha = 2` sample variance (the variance is 2).
pub const GAUSSIAN_VARIANCE_RANGE: (f64, f64) = (1.9, 2.1);

/// Criteria that fail for statistical reasons at the pinned sizes, with the
/// reason. They are run and reported like every other criterion.
pub const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[(
    3,
    "at R = 4000 the ECF noise (about 1/sqrt(R) = 0.016) exceeds the bias of the \
     normalized sums for n >= 16 (at most 0.01 and falling like 1/n), so the strict \
     ordering of d(16), d(64), d(256) required by rho < -0.8 holds by chance only \
     (3 of 20 independent seeds); d(256) < 0.08 holds throughout",
)];

/// Whether to run the pinned replication counts or a fast smoke version.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Effort {
    Full,
    /// Replications divided by [`REDUCTION`]; statistical verdicts are then
    /// indicative only.
    Reduced,
}

pub const REDUCTION: usize = 10;

impl Effort {
    fn replications(self, full: usize) -> usize {
        match self {
            Effort::Full => full,
            Effort::Reduced => (full / REDUCTION).max(100),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed_seconds: f64,
    /// Wall-time budget, when the criterion has one.
    pub budget_seconds: Option<f64>,
}

impl CriterionOutcome {
    /// `[PASS] 1 name (12.3 s / 300 s): detail`.
    pub fn line(&self) -> String {
        let budget = self
            .budget_seconds
            .map_or_else(String::new, |b| format!(" / {b:.0} s budget"));
        format!(
            "[{}] criterion {} {} ({:.1} s{budget}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_seconds,
            self.detail
        )
    }
}

/// Pinned experiment configurations of the suite (also usable with
/// `stabfield run --config crates/cli/configs/<file>`).
pub mod configs {
    /// Criterion 1(a): linear FSM alpha = 1.5, H = 0.7, H' = 0.5.
    pub const HURST_LFSM: &str = include_str!("../configs/criterion-1a-hurst-lfsm.toml");

    /// Criterion 1(b): random-slope alpha = 0.8, H = 1, H' = 0.6.
    pub const HURST_RANDOM_SLOPE: &str = include_str!("../configs/criterion-1b-hurst-random-slope.toml");

    /// Criterion 2: indicator alpha = 1.6, H' = 0.8.
    pub const HURST_INDICATOR: &str = include_str!("../configs/criterion-2-hurst-indicator.toml");

    /// Criterion 3: stable CLT with an indicator base.
    pub const CLT: &str = include_str!("../configs/criterion-3-clt.toml");

    /// Criterion 4: sub-Gaussian equivalence at two times.
    pub const SUBGAUSSIAN: &str = include_str!("../configs/criterion-4-subgaussian.toml");

    /// Criterion 7: ergodic diagnostics of the random-time linear FSM.
    pub const ERGODIC: &str = include_str!("../configs/criterion-7-ergodic.toml");
}

fn load(text: &str, effort: Effort) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_toml(text)?;
    cfg.replications = effort.replications(cfg.replications);
    if let Some(c) = cfg.clt.as_mut() {
        c.reference_paths = effort.replications(c.reference_paths);
    }
    if cfg.kind == crate::config::ExperimentKind::Ergodic {
        let s = cfg.subordinator.as_mut().expect("ergodic configs have a subordinator");
        s.paths = effort.replications(s.paths);
    }
    Ok(cfg)
}

fn run_in(cfg: &ExperimentConfig, dir: &Path, threads: Option<usize>) -> Result<RunReport> {
    let options = RunOptions {
        out: Some(dir.to_path_buf()),
        seed_override: None,
        threads,
    };
    Ok(run(cfg, &options)?.report)
}

fn timed<F: FnOnce() -> Result<(bool, String)>>(
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    f: F,
) -> CriterionOutcome {
    let start = Instant::now();
    let (ok, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e:#}")),
    };
    let elapsed = start.elapsed();
    let within = budget.is_none_or(|b| elapsed <= b);
    CriterionOutcome {
        id,
        name,
        pass: ok && within,
        detail: if within {
            detail
        } else {
            format!("{detail}; exceeded the time budget")
        },
        elapsed_seconds: elapsed.as_secs_f64(),
        budget_seconds: budget.map(|b| b.as_secs_f64()),
    }
}

/// Wall-time budget of one Hurst-index configuration.
pub const HURST_RUN_BUDGET: Duration = Duration::from_secs(300);

fn hurst_check(text: &str, effort: Effort, work: &Path) -> Result<(bool, String)> {
    let cfg = load(text, effort)?;
    let start = Instant::now();
    let report = run_in(&cfg, work, None)?;
    let elapsed = start.elapsed();
    match report {
        RunReport::VerifyHurst(r) => Ok((
            r.deviation <= HURST_TOLERANCE && elapsed <= HURST_RUN_BUDGET,
            format!(
                "H~ = {:.4} +/- {:.4} (stderr), expected {:.4}, |dev| {:.4} vs {HURST_TOLERANCE}, {:.1} s",
                r.fit.estimated_hurst,
                r.fit.stderr,
                r.expected_hurst,
                r.deviation,
                elapsed.as_secs_f64()
            ),
        )),
        _ => bail!("unexpected report kind"),
    }
}

/// Criterion 1: `H~ = H' H` for an L-FSM and a random-slope base.
pub fn criterion_1(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(1, "Hurst composition H~ = H'H", None, || {
        let (a_ok, a) = hurst_check(configs::HURST_LFSM, effort, &work.join("c1a"))?;
        let (b_ok, b) = hurst_check(configs::HURST_RANDOM_SLOPE, effort, &work.join("c1b"))?;
        Ok((a_ok && b_ok, format!("linear-fsm(1.5, 0.7), H'=0.5: {a}; random-slope(0.8), H'=0.6: {b}")))
    })
}

/// Criterion 2: indicator base, `H~ = H'/alpha`.
pub fn criterion_2(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(2, "indicator FSM exponent H'/alpha", Some(Duration::from_secs(300)), || {
        hurst_check(configs::HURST_INDICATOR, effort, &work.join("c2"))
    })
}

/// Criterion 3: convergence of the normalized iterated sums.
pub fn criterion_3(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(3, "stable CLT", Some(Duration::from_secs(600)), || {
        let cfg = load(configs::CLT, effort)?;
        match run_in(&cfg, &work.join("c3"), None)? {
            RunReport::Clt(r) => {
                let last = *r.distances.last().expect("non-empty schedule");
                Ok((
                    r.trend && last < CLT_FINAL_DISTANCE,
                    format!(
                        "n = {:?}, d(n) = [{}], Spearman rho = {:.3} (< -0.8: {}), d({}) = {last:.4} (< {CLT_FINAL_DISTANCE}: {})",
                        r.n_schedule,
                        r.distances.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(", "),
                        r.spearman,
                        r.trend,
                        r.n_schedule.last().expect("non-empty"),
                        last < CLT_FINAL_DISTANCE
                    ),
                ))
            }
            _ => bail!("unexpected report kind"),
        }
    })
}

/// Criterion 4: random-slope random-time field versus `c_alpha A^{1/2} tau`.
pub fn criterion_4(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(4, "sub-Gaussian equivalence", Some(Duration::from_secs(300)), || {
        let cfg = load(configs::SUBGAUSSIAN, effort)?;
        match run_in(&cfg, &work.join("c4"), None)? {
            RunReport::Subgaussian(r) => Ok((
                r.pass,
                format!(
                    "sup ECF distance {:.5} vs Bonferroni band {:.5} (R = {}, K = {})",
                    r.sup_distance, r.threshold, r.replications, r.paths
                ),
            )),
            _ => bail!("unexpected report kind"),
        }
    })
}

/// Criterion 5: `int E'|f_{tau_t}|^alpha = C avg ||tau_t||^{H alpha}` for
/// the indicator base.
pub fn criterion_5(_effort: Effort, _work: &Path) -> CriterionOutcome {
    timed(5, "well-posedness identity", Some(Duration::from_secs(60)), || {
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        for (alpha, hp) in [(1.5, 0.5), (0.7, 0.8), (1.9, 0.3)] {
            let k = indicator_kernel(alpha)?;
            let c = lalpha_functional(&k, &[1.0], &[vec![0.0], vec![1.0]])?;
            let grid = TimeGrid::from_times(&[0.0, 0.5, 1.0, 2.0, 3.5])?;
            let batch = sample_fbf(hp, 1, &grid, 64, &RandomStream::new(501).labeled("batch", checked as u64))?;
            let rtk = build_random_time_kernel(&k, &batch)?;
            for t in 1..grid.len() {
                let quad = rtk.lalpha_mass(&[t], &[1.0])?;
                let want = c * rtk.well_posedness().moments[t];
                worst = worst.max((quad - want).abs() / want);
                checked += 1;
            }
        }
        Ok((
            worst <= WELL_POSEDNESS_TOLERANCE,
            format!("{checked} (alpha, H', t) cases, worst relative error {worst:.2e} vs {WELL_POSEDNESS_TOLERANCE:.0e}"),
        ))
    })
}

fn invariance_error(k: &KernelFamily, motions: &[RigidMotion], thetas: &[f64], times: &[Vec<f64>]) -> Result<f64> {
    let ha = k.hurst() * k.alpha();
    let base = lalpha_functional(k, thetas, times)?;
    if !(base > 0.0) {
        bail!("{}: degenerate probe (functional {base})", k.name());
    }
    let mut worst: f64 = 0.0;
    for g in motions {
        for c in [0.5, 2.0] {
            let moved: Vec<Vec<f64>> = times.iter().map(|t| g.apply(t).iter().map(|v| c * v).collect()).collect();
            let v = lalpha_functional(k, thetas, &moved)?;
            let want = c.powf(ha) * base;
            worst = worst.max((v - want).abs() / want);
        }
    }
    Ok(worst)
}

/// Criterion 6: `||sum theta_j (f_{c g t_j} - f_{c g t_0})||^alpha =
/// c^{H alpha} ||sum theta_j (f_{t_j} - f_{t_0})||^alpha` for three rigid
/// motions `g` and `c in {0.5, 2}`, all five kernels.
pub fn criterion_6(_effort: Effort, _work: &Path) -> CriterionOutcome {
    timed(6, "scaling and rigid-motion invariance", Some(Duration::from_secs(120)), || {
        let line_thetas = [1.0, -0.7, 0.4];
        let line_times = vec![vec![0.0], vec![0.6], vec![1.5], vec![2.2]];
        // the linear FSM is not reflection-invariant unless a = b
        let translations = [
            RigidMotion::translation(&[0.7]),
            RigidMotion::translation(&[3.0]),
            RigidMotion::translation(&[-1.3]),
        ];
        let with_reflection = [
            RigidMotion::reflection_1d(),
            RigidMotion::translation(&[3.0]),
            RigidMotion::reflection_1d().compose(&RigidMotion::translation(&[0.4])),
        ];
        let plane_thetas = [1.0, 0.5];
        let plane_times = vec![vec![0.0, 0.0], vec![1.0, 0.2], vec![-0.4, 1.1]];
        let plane = [
            RigidMotion::rotation_2d(PI / 3.0),
            RigidMotion::translation(&[2.0, -1.0]),
            RigidMotion::rotation_2d(0.4).compose(&RigidMotion::translation(&[0.5, 0.5])),
        ];
        let cases: Vec<(String, f64)> = vec![
            (
                "indicator(1.5)".into(),
                invariance_error(&indicator_kernel(1.5)?, &with_reflection, &line_thetas, &line_times)?,
            ),
            (
                "linear-fsm(1.5, 0.7)".into(),
                invariance_error(
                    &linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7)?)?,
                    &translations,
                    &line_thetas,
                    &line_times,
                )?,
            ),
            (
                "linear-fsm(1.2, 0.3; a=1, b=0.5)".into(),
                invariance_error(
                    &linear_fsm_kernel(LinearFsmParams::new(1.0, 0.5, 1.2, 0.3)?)?,
                    &translations,
                    &line_thetas,
                    &line_times,
                )?,
            ),
            (
                "linear-fsm(1.5, 0.7; a=b=1)".into(),
                invariance_error(
                    &linear_fsm_kernel(LinearFsmParams::new(1.0, 1.0, 1.5, 0.7)?)?,
                    &with_reflection,
                    &line_thetas,
                    &line_times,
                )?,
            ),
            (
                "chentsov(1.5, d=1)".into(),
                invariance_error(&chentsov_kernel(1.5, 1)?, &with_reflection, &line_thetas, &line_times)?,
            ),
            (
                "chentsov(1.3, d=2)".into(),
                invariance_error(&chentsov_kernel(1.3, 2)?, &plane, &plane_thetas, &plane_times)?,
            ),
            (
                "moving-average(0.7, d=1)".into(),
                invariance_error(&fbf_moving_avg_kernel(0.7, 1)?, &with_reflection, &line_thetas, &line_times)?,
            ),
            (
                "moving-average(0.6, d=2)".into(),
                invariance_error(&fbf_moving_avg_kernel(0.6, 2)?, &plane, &plane_thetas, &plane_times)?,
            ),
            (
                "random-slope(1.5)".into(),
                invariance_error(&random_slope_kernel(1.5)?, &with_reflection, &line_thetas, &line_times)?,
            ),
        ];
        let worst = cases.iter().map(|c| c.1).fold(0.0, f64::max);
        let detail = cases
            .iter()
            .map(|(n, e)| format!("{n} {e:.1e}"))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((
            worst <= INVARIANCE_TOLERANCE,
            format!("worst relative error {worst:.2e} vs {INVARIANCE_TOLERANCE:.0e}: {detail}"),
        ))
    })
}

/// Criterion 7: conservative-null evidence for the random-time L-FSM and
/// a dissipative verdict for the translation control.
pub fn criterion_7(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(7, "null-conservative evidence", Some(Duration::from_secs(600)), || {
        let cfg = load(configs::ERGODIC, effort)?;
        match run_in(&cfg, &work.join("c7"), None)? {
            RunReport::Ergodic(r) => {
                let d = &r.diagnostics;
                let control = r.control.as_ref().context("the control was not run")?;
                let min_ratio = r.growth_ratios.iter().copied().fold(f64::INFINITY, f64::min);
                let curve = &d.mixing_curve;
                let first = curve.first().context("empty mixing curve")?;
                let last = curve.last().context("empty mixing curve")?;
                let min_drop_sigmas = curve
                    .windows(2)
                    .zip(&d.mixing_drop_errors)
                    .map(|(w, se)| (w[0].estimate - w[1].estimate) / se)
                    .fold(f64::INFINITY, f64::min);
                let ok = d.verdict == Some(FlowVerdict::ConservativeEvidence)
                    && control.verdict == Some(FlowVerdict::DissipativeEvidence);
                Ok((
                    ok,
                    format!(
                        "min Rosinski growth ratio {min_ratio:.3} (>= {ROSINSKI_DIVERGENCE_RATIO}), \
                         smallest mixing drop {min_drop_sigmas:.1} sigma (> {MIXING_SIGMAS}), \
                         final/initial {:.3} (< {MIXING_DECAY_FACTOR}); verdict {:?}, control verdict {:?}",
                        last.estimate / first.estimate,
                        d.verdict,
                        control.verdict
                    ),
                ))
            }
            _ => bail!("unexpected report kind"),
        }
    })
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Criterion 8: stable variates against closed forms.
pub fn criterion_8(_effort: Effort, _work: &Path) -> CriterionOutcome {
    timed(8, "stable RNG validity", Some(Duration::from_secs(60)), || {
        let root = RandomStream::new(801);
        let n = RNG_DRAWS;

        let mut s = root.labeled("cauchy", 0);
        let cauchy: Vec<f64> = (0..n).map(|_| sample_symmetric_standard(1.0, &mut s)).collect();
        let d = ks_statistic(cauchy, |x| 0.5 + x.atan() / PI);
        let ks_crit = KS_CRITICAL_1PCT / (n as f64).sqrt();
        let ks_ok = d < ks_crit;

        let mut s = root.labeled("gaussian", 0);
        let g: Vec<f64> = (0..n).map(|_| sample_symmetric_standard(2.0, &mut s)).collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let var_ok = var >= GAUSSIAN_VARIANCE_RANGE.0 && var <= GAUSSIAN_VARIANCE_RANGE.1;

        // E exp(-lambda A) = exp(-lambda^{alpha/2}) for the multiplier
        let lambdas = [0.25, 1.0, 4.0];
        let z = bonferroni_z(lambdas.len() * 2);
        let mut laplace_ok = true;
        let mut worst_sigmas: f64 = 0.0;
        for (j, alpha) in [1.5, 0.8].into_iter().enumerate() {
            let mut s = root.labeled("multiplier", j as u64);
            let a: Vec<f64> = (0..n)
                .map(|_| sample_subgaussian_multiplier(alpha, &mut s))
                .collect::<stabfield_core::Result<_>>()?;
            for &l in &lambdas {
                let v: Vec<f64> = a.iter().map(|x| (-l * x).exp()).collect();
                let m = v.iter().sum::<f64>() / n as f64;
                let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
                let se = sd / (n as f64).sqrt();
                let want = (-l.powf(alpha / 2.0)).exp();
                let sig = (m - want).abs() / se;
                worst_sigmas = worst_sigmas.max(sig);
                laplace_ok &= sig <= z;
            }
        }
        Ok((
            ks_ok && var_ok && laplace_ok,
            format!(
                "Cauchy KS D = {d:.5} vs {ks_crit:.5}; alpha=2 variance {var:.4} in [{}, {}]; \
                 Laplace transform worst {worst_sigmas:.2} sigma vs {z:.2}",
                GAUSSIAN_VARIANCE_RANGE.0, GAUSSIAN_VARIANCE_RANGE.1
            ),
        ))
    })
}

fn csv_contents(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().expect("file").to_string_lossy().into_owned();
            files.push((name, std::fs::read(&path)?));
        }
    }
    files.sort();
    Ok(files)
}

/// Criterion 9: `--threads` changes nothing in the CSV output.
pub fn criterion_9(effort: Effort, work: &Path) -> CriterionOutcome {
    timed(9, "thread-count reproducibility", None, || {
        let mut lines = Vec::new();
        let mut ok = true;
        for (name, text) in [
            ("verify-hurst", configs::HURST_INDICATOR),
            ("subgaussian", configs::SUBGAUSSIAN),
            ("ergodic", configs::ERGODIC),
        ] {
            let cfg = load(text, effort)?;
            let one = work.join(format!("c9-{name}-1"));
            let two = work.join(format!("c9-{name}-2"));
            run_in(&cfg, &one, Some(1))?;
            run_in(&cfg, &two, Some(2))?;
            let (a, b) = (csv_contents(&one)?, csv_contents(&two)?);
            let same = !a.is_empty() && a == b;
            ok &= same;
            let bytes: usize = a.iter().map(|f| f.1.len()).sum();
            lines.push(format!(
                "{name}: {} CSV file(s), {bytes} bytes, {}",
                a.len(),
                if same { "identical" } else { "DIFFERENT" }
            ));
        }
        Ok((ok, format!("threads 1 vs 2: {}", lines.join("; "))))
    })
}

pub type CriterionFn = fn(Effort, &Path) -> CriterionOutcome;

pub const CRITERIA: [CriterionFn; 9] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
];

/// Runs every criterion, writing run artifacts below `work`.
pub fn run_all(effort: Effort, work: &Path, on_result: impl FnMut(&CriterionOutcome)) -> Vec<CriterionOutcome> {
    run_selected(effort, work, &[], on_result)
}

/// Runs the criteria with the given ids (all of them when `ids` is empty).
pub fn run_selected(
    effort: Effort,
    work: &Path,
    ids: &[u32],
    mut on_result: impl FnMut(&CriterionOutcome),
) -> Vec<CriterionOutcome> {
    CRITERIA
        .iter()
        .zip(1u32..)
        .filter(|(_, id)| ids.is_empty() || ids.contains(id))
        .map(|(c, _)| {
            let out = c(effort, work);
            on_result(&out);
            out
        })
        .collect()
}
