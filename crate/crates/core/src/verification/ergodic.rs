//! Ergodic diagnostics of the increment process `Y_n = X_{n+1} - X_n` of a
//! random-time linear fractional stable motion, through the increment
//! representation `f_n = f_{tau_{n+1}} - f_{tau_n}` on `R x Omega'`:
//!
//! * Rosinski: the flow is conservative (dissipative) iff
//!   `sum_n |f_n|^alpha` is infinite (finite) almost everywhere;
//! * Gross: `Y` is mixing iff `m{f_0 in K, |f_n| > eps} -> 0` for compact
//!   `K` away from 0.
//!
//! Both are estimated in expectation over the sampled subordinator paths,
//! so they are evidence rather than proof.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{mean_and_stderr, CurveData};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::{lfsm_parts, KernelKind};
use crate::rng::RandomStream;
use crate::subordination::RandomTimeKernel;

/// Growth ratio `S_{2N}/S_N` that every step must reach for divergence.
pub const ROSINSKI_DIVERGENCE_RATIO: f64 = 1.05;
/// Final growth ratio below which the sums are read as converging.
pub const ROSINSKI_CONVERGENCE_RATIO: f64 = 1.01;
/// Every step of the mixing curve must drop by this many standard errors.
pub const MIXING_SIGMAS: f64 = 2.0;
/// The final mixing measure must be below this fraction of the first.
pub const MIXING_DECAY_FACTOR: f64 = 0.25;

/// `(n, estimate, Monte Carlo error)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub estimate: f64,
    pub mc_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowVerdict {
    DissipativeEvidence,
    /// Diverging Rosinski sums together with a decaying mixing measure:
    /// a conservative flow that is null.
    ConservativeEvidence,
    Inconclusive,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErgodicDiagnostics {
    /// `(N, E' mean over probes of sum_{n < N} |f_n(x)|^alpha, error)`.
    pub partial_sums: Vec<CurvePoint>,
    /// `(n, (P' x Leb){|f_0| in [delta, B], |f_n| > eps}, error)`.
    pub mixing_curve: Vec<CurvePoint>,
    /// Standard errors of the successive drops of the mixing curve, formed
    /// path by path (the curve uses the same paths for every `n`).
    pub mixing_drop_errors: Vec<f64>,
    pub verdict: Option<FlowVerdict>,
}

impl ErgodicDiagnostics {
    /// `S_{N_{k+1}} / S_{N_k}` along the schedule.
    pub fn growth_ratios(&self) -> Vec<f64> {
        self.partial_sums
            .windows(2)
            .map(|w| w[1].estimate / w[0].estimate)
            .collect()
    }

    /// Both halves of the diagnostics with the verdict of [`classify_flow`].
    pub fn combine(partial: ErgodicDiagnostics, mixing: ErgodicDiagnostics) -> Self {
        let mut out = ErgodicDiagnostics {
            partial_sums: partial.partial_sums,
            mixing_curve: mixing.mixing_curve,
            mixing_drop_errors: mixing.mixing_drop_errors,
            verdict: None,
        };
        out.verdict = Some(classify_flow(&out));
        out
    }
}

impl CurveData for ErgodicDiagnostics {
    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "curve,n,estimate,mc_error")?;
        for p in &self.partial_sums {
            writeln!(out, "rosinski,{},{:.16e},{:.16e}", p.n, p.estimate, p.mc_error)?;
        }
        for p in &self.mixing_curve {
            writeln!(out, "gross,{},{:.16e},{:.16e}", p.n, p.estimate, p.mc_error)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErgodicOptions {
    /// Rosinski probes are uniform on `[-probe_radius, probe_radius]`.
    pub probe_radius: f64,
    /// Upper end `B` of `K = {delta <= |v| <= B}` in the Gross criterion.
    pub bound: f64,
    /// Randomly shifted lattice points per path for the Gross measure.
    pub quadrature_points: usize,
}

impl Default for ErgodicOptions {
    fn default() -> Self {
        Self {
            probe_radius: 1.0,
            bound: 1e6,
            quadrature_points: 4096,
        }
    }
}

/// A stationary sequence `f_n(x; w')`, `0 <= n < horizon`, on `R`, given
/// path by path.
pub trait IncrementRepresentation: Sync {
    fn alpha(&self) -> f64;
    fn paths(&self) -> usize;
    fn horizon(&self) -> usize;
    fn value(&self, path: usize, n: usize, x: f64) -> f64;
    /// An interval containing `{x : |f_n(x)| >= level}`.
    fn level_hull(&self, path: usize, n: usize, level: f64) -> (f64, f64);
}

/// `f_n(x) = f_{tau_{n+1}}(x) - f_{tau_n}(x) = f_{tau_{n+1} - tau_n}(x - tau_n)`
/// for a linear-FSM base and subordinator paths on the integers.
#[derive(Clone, Debug)]
pub struct RandomTimeIncrements {
    alpha: f64,
    a: f64,
    b: f64,
    p: f64,
    /// `taus[i]` holds `tau_0, ..., tau_horizon` of path `i`.
    taus: Vec<Vec<f64>>,
}

/// `{0, 1, ..., n_max}`.
pub fn integer_time_grid(n_max: usize) -> Result<TimeGrid> {
    TimeGrid::from_times(&(0..=n_max).map(|n| n as f64).collect::<Vec<_>>())
}

impl RandomTimeIncrements {
    pub fn new(rtk: &RandomTimeKernel) -> Result<Self> {
        let (a, b, p) = match *rtk.base().kind() {
            KernelKind::LinearFsm { a, b, exponent, .. } => (a, b, exponent),
            _ => {
                return Err(invalid(
                    "base",
                    format!("the ergodic diagnostics need a linear-fsm base, got {}", rtk.base().name()),
                ))
            }
        };
        let batch = rtk.batch();
        let grid = batch.grid();
        if grid.dim() != 1 || grid.len() < 2 || grid.points().enumerate().any(|(n, t)| t[0] != n as f64) {
            return Err(Error::Grid("the subordinator grid must be {0, 1, ..., N}".into()));
        }
        let taus = (0..batch.paths())
            .map(|i| (0..grid.len()).map(|t| batch.point(i, t)[0]).collect())
            .collect();
        Ok(Self {
            alpha: rtk.base().alpha(),
            a,
            b,
            p,
            taus,
        })
    }

    fn tail_length(&self, coeff: f64, jump: f64, level: f64) -> f64 {
        if coeff == 0.0 || self.p == 0.0 {
            return 0.0;
        }
        // |u^p - v^p| <= |p| |u - v| min(u, v)^{p - 1}
        (coeff * self.p.abs() * jump.abs() / level).powf(1.0 / (1.0 - self.p))
    }
}

impl IncrementRepresentation for RandomTimeIncrements {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn paths(&self) -> usize {
        self.taus.len()
    }
    fn horizon(&self) -> usize {
        self.taus[0].len() - 1
    }
    fn value(&self, path: usize, n: usize, x: f64) -> f64 {
        let t0 = self.taus[path][n];
        let t1 = self.taus[path][n + 1];
        let jump = t1 - t0;
        let y = x - t0;
        lfsm_parts(self.a, self.b, self.p, jump, jump - y, -y)
    }
    fn level_hull(&self, path: usize, n: usize, level: f64) -> (f64, f64) {
        let t0 = self.taus[path][n];
        let t1 = self.taus[path][n + 1];
        let jump = t1 - t0;
        (
            t0.min(t1) - self.tail_length(self.a, jump, level),
            t0.max(t1) + self.tail_length(self.b, jump, level),
        )
    }
}

/// Dissipative control: the deterministic translates `f_n(x) = e^{-|x - n|}`.
#[derive(Clone, Debug)]
pub struct TranslatedIncrements {
    alpha: f64,
    horizon: usize,
}

pub fn dissipative_control(alpha: f64, horizon: usize) -> Result<TranslatedIncrements> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("alpha", format!("{alpha} is outside (0, 2)")));
    }
    Ok(TranslatedIncrements { alpha, horizon })
}

impl IncrementRepresentation for TranslatedIncrements {
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn paths(&self) -> usize {
        1
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn value(&self, _path: usize, n: usize, x: f64) -> f64 {
        (-(x - n as f64).abs()).exp()
    }
    fn level_hull(&self, _path: usize, n: usize, level: f64) -> (f64, f64) {
        let r = (1.0 / level).ln().max(0.0);
        (n as f64 - r, n as f64 + r)
    }
}

/// Probe points of the Rosinski sums: `count` uniform draws on
/// `[-radius, radius]` from `stream.labeled("probes", 0)`.
pub fn rosinski_probe_points(count: usize, radius: f64, stream: &RandomStream) -> Vec<f64> {
    let mut s = stream.labeled("probes", 0);
    (0..count).map(|_| s.uniform_range(-radius, radius)).collect()
}

fn doubling_schedule(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1;
    while n < n_max {
        out.push(n);
        n *= 2;
    }
    out.push(n_max);
    out
}

/// Rosinski partial sums `S_N = E' mean_x sum_{n < N} |f_n(x)|^alpha` for
/// `N = 1, 2, 4, ..., n_max` at `probes` random probe points.
///
/// Each (path, probe) sequence of partial sums is nondecreasing and the
/// averages are taken in a fixed order, so the reported `S_N` are
/// nondecreasing exactly.
pub fn rosinski_partial_sums_for(
    rep: &dyn IncrementRepresentation,
    n_max: usize,
    probes: usize,
    options: ErgodicOptions,
    stream: &RandomStream,
) -> Result<ErgodicDiagnostics> {
    if n_max == 0 || n_max > rep.horizon() {
        return Err(invalid(
            "n_max",
            format!("{n_max} is outside 1..={} (the available horizon)", rep.horizon()),
        ));
    }
    if probes == 0 {
        return Err(invalid("probes", "at least one probe point is required"));
    }
    let xs = rosinski_probe_points(probes, options.probe_radius, stream);
    let schedule = doubling_schedule(n_max);
    let alpha = rep.alpha();
    // sums[path][probe][k] = S_{schedule[k]}
    let per_path: Vec<Vec<Vec<f64>>> = (0..rep.paths())
        .into_par_iter()
        .map(|i| {
            xs.iter()
                .map(|&x| {
                    let mut out = Vec::with_capacity(schedule.len());
                    let mut acc = 0.0;
                    let mut k = 0;
                    for n in 0..n_max {
                        acc += rep.value(i, n, x).abs().powf(alpha);
                        if n + 1 == schedule[k] {
                            out.push(acc);
                            k += 1;
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    let partial_sums = schedule
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals: Vec<f64> = per_path.iter().flat_map(|p| p.iter().map(|s| s[k])).collect();
            let (estimate, mc_error) = mean_and_stderr(&vals);
            CurvePoint { n, estimate, mc_error }
        })
        .collect();
    Ok(ErgodicDiagnostics {
        partial_sums,
        ..ErgodicDiagnostics::default()
    })
}

/// [`rosinski_partial_sums_for`] on the increments of a random-time linear
/// FSM whose batch lives on `{0, 1, ..., N}`.
pub fn rosinski_partial_sums(
    rtk: &RandomTimeKernel,
    n_max: usize,
    probes: usize,
    stream: &RandomStream,
) -> Result<ErgodicDiagnostics> {
    let rep = RandomTimeIncrements::new(rtk)?;
    rosinski_partial_sums_for(&rep, n_max, probes, ErgodicOptions::default(), stream)
}

/// Gross mixing measure `(P' x Leb){(w', x) : delta <= |f_0| <= B, |f_n| > eps}`
/// for each `n` in the schedule.
///
/// For every path the set `{|f_0| >= delta}` is enclosed in an interval,
/// which is covered by a lattice with a uniformly random shift drawn from
/// `stream.substream(path)`; the count of lattice points in the set,
/// times the spacing, is an unbiased estimate of its length.
pub fn gross_mixing_measure_for(
    rep: &dyn IncrementRepresentation,
    delta: f64,
    epsilon: f64,
    n_schedule: &[usize],
    options: ErgodicOptions,
    stream: &RandomStream,
) -> Result<ErgodicDiagnostics> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("{delta} is not positive")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("{epsilon} is not positive")));
    }
    if !(options.bound > delta) {
        return Err(invalid("bound", "must exceed delta"));
    }
    if n_schedule.is_empty() {
        return Err(invalid("n_schedule", "at least one entry is required"));
    }
    if let Some(&n) = n_schedule.iter().find(|&&n| n >= rep.horizon()) {
        return Err(invalid(
            "n_schedule",
            format!("n = {n} needs tau_{{n+1}}; the horizon is {}", rep.horizon()),
        ));
    }
    if options.quadrature_points == 0 {
        return Err(invalid("quadrature_points", "must be positive"));
    }
    let g = options.quadrature_points;
    let per_path: Vec<Vec<f64>> = (0..rep.paths())
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = rep.level_hull(i, 0, delta);
            let width = hi - lo;
            if !(width > 0.0) {
                return vec![0.0; n_schedule.len()];
            }
            let h = width / g as f64;
            let shift = stream.substream(i as u64).uniform_open();
            let inside: Vec<f64> = (0..g)
                .map(|k| lo + (k as f64 + shift) * h)
                .filter(|&x| {
                    let v = rep.value(i, 0, x).abs();
                    v >= delta && v <= options.bound
                })
                .collect();
            n_schedule
                .iter()
                .map(|&n| h * inside.iter().filter(|&&x| rep.value(i, n, x).abs() > epsilon).count() as f64)
                .collect()
        })
        .collect();
    let mixing_curve = n_schedule
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals: Vec<f64> = per_path.iter().map(|p| p[k]).collect();
            let (estimate, mc_error) = mean_and_stderr(&vals);
            CurvePoint { n, estimate, mc_error }
        })
        .collect();
    let mixing_drop_errors = (1..n_schedule.len())
        .map(|k| {
            let drops: Vec<f64> = per_path.iter().map(|p| p[k - 1] - p[k]).collect();
            mean_and_stderr(&drops).1
        })
        .collect();
    Ok(ErgodicDiagnostics {
        mixing_curve,
        mixing_drop_errors,
        ..ErgodicDiagnostics::default()
    })
}

/// [`gross_mixing_measure_for`] on the increments of a random-time linear
/// FSM whose batch lives on `{0, 1, ..., N}`.
pub fn gross_mixing_measure(
    rtk: &RandomTimeKernel,
    delta: f64,
    epsilon: f64,
    n_schedule: &[usize],
    stream: &RandomStream,
) -> Result<ErgodicDiagnostics> {
    let rep = RandomTimeIncrements::new(rtk)?;
    gross_mixing_measure_for(&rep, delta, epsilon, n_schedule, ErgodicOptions::default(), stream)
}

/// Decision table: diverging sums (every growth ratio at least
/// [`ROSINSKI_DIVERGENCE_RATIO`]) with a mixing curve that decays beyond
/// Monte Carlo error (every drop above [`MIXING_SIGMAS`] standard errors and
/// final/initial below [`MIXING_DECAY_FACTOR`]) is conservative evidence;
/// converging sums (final ratio below [`ROSINSKI_CONVERGENCE_RATIO`]) are
/// dissipative evidence; anything else is inconclusive.
pub fn classify_flow(diag: &ErgodicDiagnostics) -> FlowVerdict {
    if diag.partial_sums.len() < 2 || diag.mixing_curve.len() < 2 {
        return FlowVerdict::Inconclusive;
    }
    let ratios = diag.growth_ratios();
    let diverging = ratios.iter().all(|&r| r >= ROSINSKI_DIVERGENCE_RATIO);
    let converging = ratios.last().is_some_and(|&r| r < ROSINSKI_CONVERGENCE_RATIO);
    let curve = &diag.mixing_curve;
    let drops_significant = curve.windows(2).enumerate().all(|(k, w)| {
        let err = diag
            .mixing_drop_errors
            .get(k)
            .copied()
            .unwrap_or_else(|| w[0].mc_error.hypot(w[1].mc_error));
        w[0].estimate - w[1].estimate > MIXING_SIGMAS * err
    });
    let first = curve[0].estimate;
    let last = curve[curve.len() - 1].estimate;
    let decaying = drops_significant && first > 0.0 && last < MIXING_DECAY_FACTOR * first;
    if diverging && decaying {
        FlowVerdict::ConservativeEvidence
    } else if converging {
        FlowVerdict::DissipativeEvidence
    } else {
        FlowVerdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{linear_fsm_kernel, LinearFsmParams};
    use crate::subordination::build_random_time_kernel;
    use crate::subordinator::sample_fbm;

    fn lfsm_rtk(n_max: usize, paths: usize, seed: u64) -> RandomTimeKernel {
        let grid = integer_time_grid(n_max).unwrap();
        let batch = sample_fbm(0.5, &grid, paths, &RandomStream::new(seed)).unwrap();
        let base = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        build_random_time_kernel(&base, &batch).unwrap()
    }

    #[test]
    fn increments_agree_with_kernel_differences() {
        let rtk = lfsm_rtk(16, 4, 1);
        let rep = RandomTimeIncrements::new(&rtk).unwrap();
        for i in 0..4 {
            for n in [0, 3, 15] {
                for x in [-2.3, -0.1, 0.4, 1.7] {
                    let t0 = rtk.batch().point(i, n);
                    let t1 = rtk.batch().point(i, n + 1);
                    let want = rtk.base().evaluate(t1, &[x]) - rtk.base().evaluate(t0, &[x]);
                    assert!((rep.value(i, n, x) - want).abs() < 1e-12, "{i} {n} {x}");
                }
            }
        }
    }

    #[test]
    fn level_hull_encloses_the_level_set() {
        let rtk = lfsm_rtk(8, 8, 2);
        let rep = RandomTimeIncrements::new(&rtk).unwrap();
        for i in 0..8 {
            for n in 0..8 {
                let (lo, hi) = rep.level_hull(i, n, 0.05);
                for k in 0..2000 {
                    let x = -30.0 + 60.0 * k as f64 / 2000.0;
                    if x < lo || x > hi {
                        assert!(rep.value(i, n, x).abs() < 0.05);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_sums_are_nondecreasing_and_match_brute_force() {
        let rtk = lfsm_rtk(64, 32, 3);
        let stream = RandomStream::new(4);
        let diag = rosinski_partial_sums(&rtk, 64, 16, &stream).unwrap();
        let s: Vec<f64> = diag.partial_sums.iter().map(|p| p.estimate).collect();
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        assert!(diag.growth_ratios().iter().all(|&r| r >= 1.0));
        // S_8 and S_16 from the kernel itself
        let xs = rosinski_probe_points(16, 1.0, &stream);
        for (k, nn) in [(3usize, 8usize), (4, 16)] {
            let mut total = 0.0;
            for i in 0..32 {
                for &x in &xs {
                    for n in 0..nn {
                        let f = rtk.base().evaluate(rtk.batch().point(i, n + 1), &[x])
                            - rtk.base().evaluate(rtk.batch().point(i, n), &[x]);
                        total += f.abs().powf(1.5);
                    }
                }
            }
            let want = total / (32.0 * 16.0);
            assert_eq!(diag.partial_sums[k].n, nn);
            assert!((diag.partial_sums[k].estimate - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn mixing_measure_matches_dense_brute_force() {
        let rtk = lfsm_rtk(8, 16, 5);
        let rep = RandomTimeIncrements::new(&rtk).unwrap();
        let opts = ErgodicOptions {
            quadrature_points: 20_000,
            ..ErgodicOptions::default()
        };
        let diag = gross_mixing_measure_for(&rep, 0.1, 0.1, &[1, 4], opts, &RandomStream::new(6)).unwrap();
        // dense grid over a fixed window, straight from the kernel
        let (a, b, m) = (-10.0, 10.0, 400_000);
        let h = (b - a) / m as f64;
        for (k, &n) in [1usize, 4].iter().enumerate() {
            let mut total = 0.0;
            for i in 0..16 {
                let f = |s: usize, x: f64| {
                    rtk.base().evaluate(rtk.batch().point(i, s + 1), &[x]) - rtk.base().evaluate(rtk.batch().point(i, s), &[x])
                };
                for j in 0..m {
                    let x = a + (j as f64 + 0.5) * h;
                    let v = f(0, x).abs();
                    if v >= 0.1 && v <= 1e6 && f(n, x).abs() > 0.1 {
                        total += h;
                    }
                }
            }
            let want = total / 16.0;
            let got = diag.mixing_curve[k].estimate;
            assert!((got - want).abs() < 2e-3 * want.max(1e-2), "n {n}: {got} vs {want}");
        }
    }

    #[test]
    fn mixing_measure_edge_cases() {
        let rtk = lfsm_rtk(4, 8, 7);
        let rep = RandomTimeIncrements::new(&rtk).unwrap();
        let stream = RandomStream::new(8);
        let o = ErgodicOptions::default();
        // eps above every value: empty set
        let big = gross_mixing_measure_for(&rep, 0.1, 1e3, &[1, 2], o, &stream).unwrap();
        assert!(big.mixing_curve.iter().all(|p| p.estimate == 0.0));
        // n = 0 with eps < delta: the measure of {|f_0| >= delta} itself
        let d0 = gross_mixing_measure_for(&rep, 0.2, 0.1, &[0], o, &stream).unwrap();
        let d1 = gross_mixing_measure_for(&rep, 0.2, 0.2 * (1.0 - 1e-12), &[0], o, &stream).unwrap();
        assert_eq!(d0.mixing_curve[0].estimate, d1.mixing_curve[0].estimate);
        assert!(d0.mixing_curve[0].estimate > 0.0);
        assert!(gross_mixing_measure_for(&rep, 0.1, 0.1, &[4], o, &stream).is_err());
    }

    #[test]
    fn control_sums_converge_and_classify_as_dissipative() {
        let ctl = dissipative_control(1.5, 512).unwrap();
        let s = RandomStream::new(9);
        let o = ErgodicOptions::default();
        let p = rosinski_partial_sums_for(&ctl, 512, 32, o, &s).unwrap();
        let m = gross_mixing_measure_for(&ctl, 0.1, 0.1, &[1, 4, 16, 64], o, &s).unwrap();
        let diag = ErgodicDiagnostics::combine(p, m);
        assert!(*diag.growth_ratios().last().unwrap() < 1.0 + 1e-12);
        assert_eq!(diag.verdict, Some(FlowVerdict::DissipativeEvidence));
    }

    #[test]
    fn flat_input_is_inconclusive() {
        let flat = |n| CurvePoint {
            n,
            estimate: 1.0,
            mc_error: 0.1,
        };
        let diag = ErgodicDiagnostics {
            partial_sums: vec![flat(1), CurvePoint { estimate: 1.03, ..flat(2) }, CurvePoint { estimate: 1.06, ..flat(4) }],
            mixing_curve: vec![flat(1), flat(4)],
            mixing_drop_errors: vec![0.1],
            verdict: None,
        };
        assert_eq!(classify_flow(&diag), FlowVerdict::Inconclusive);
        assert_eq!(classify_flow(&ErgodicDiagnostics::default()), FlowVerdict::Inconclusive);
    }

    #[test]
    fn rejects_non_lfsm_base_and_non_integer_grid() {
        let grid = integer_time_grid(4).unwrap();
        let batch = sample_fbm(0.5, &grid, 2, &RandomStream::new(10)).unwrap();
        let ind = build_random_time_kernel(&crate::kernels::indicator_kernel(1.5).unwrap(), &batch).unwrap();
        assert!(RandomTimeIncrements::new(&ind).is_err());
        let half = TimeGrid::uniform(0.0, 2.0, 5).unwrap();
        let batch = sample_fbm(0.5, &half, 2, &RandomStream::new(11)).unwrap();
        let base = linear_fsm_kernel(LinearFsmParams::causal(1.5, 0.7).unwrap()).unwrap();
        let rtk = build_random_time_kernel(&base, &batch).unwrap();
        assert!(RandomTimeIncrements::new(&rtk).is_err());
    }
}
