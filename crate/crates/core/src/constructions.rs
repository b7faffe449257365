//! Explicit constructions: the radial stable-rank counterexample, the
//! product splitter and perturbation experiments.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blaschke::{BlaschkeProduct, ZeroSequence};
use crate::error::{Error, Result};
use crate::families::geometric;
use crate::geometry::{log_pseudo_distance, DiskPoint, NEAR_ANCHOR_THRESHOLD};
use crate::harmonic_measure::{condition_d_check_values, ConditionDOptions, ConditionDReport};
use crate::ideals::{fit_corona_majorant, GeneratorTuple, SampleGrid};
use crate::majorant::{check_nis, BoundaryMeasure, FitOptions, MajorantFit};

/// Extra zeros of `B₁` beyond `n_max` used when solving for `μ_n`.
pub const TAIL_ZEROS: usize = 5;
pub const MAX_N: usize = 40;
const SAMPLES: usize = 100;
const MAX_BISECTIONS: usize = 4000;

/// A root `μ_n` of `log|B₁(μ)| = target` on `(λ_n, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MuSolution {
    #[serde(skip)]
    pub mu: DiskPoint,
    /// `log ρ(λ_n, μ_n)`.
    pub log_rho: f64,
    pub log_one_minus_mu: f64,
    pub log_modulus: f64,
    pub target: f64,
    /// `|log|B₁(μ_n)| - target| / max(1, |target|)`.
    pub residual: f64,
    /// `log|B₁|` increased strictly across the samples of the bracket.
    pub monotone: bool,
}

/// The point `ψ_λ(e^t)` on `(λ, 1)` for real `λ`, stored against `λ`.
fn radial_point(lambda: &DiskPoint, t: f64) -> Result<DiskPoint> {
    DiskPoint::near(*lambda, t, Complex64::new(1.0, 0.0))
}

/// `log(1 - ψ_λ(s))` for real `λ` and `s = e^t`:
/// `1 - (λ + s)/(1 + λs) = (1 - λ)(1 - s)/(1 + λs)`.
fn log_one_minus(lambda: f64, t: f64) -> f64 {
    let s = t.exp();
    (1.0 - lambda).ln() + (-s).ln_1p() - (lambda * s).ln_1p()
}

/// Solves `log|B₁(μ)| = target_log` for `μ` on the real radius just beyond
/// the `n`-th zero of `B₁`.
///
/// Works in `t = log ρ(λ_n, μ)`, where `log|B₁(μ)| = t + Σ_{k≠n} log ρ(λ_k, μ)`
/// holds exactly. The segment runs from `λ_n` to the midpoint toward the next
/// zero (or toward 1); 100 samples locate the increasing branch and
/// bisection finishes the solve.
pub fn solve_mu(b1: &BlaschkeProduct, n: usize, target_log: f64) -> Result<MuSolution> {
    let zeros = b1.zeros().points();
    let lambda = *zeros
        .get(n)
        .ok_or_else(|| Error::InvalidArgument(format!("no zero with index {n}")))?;
    if lambda.im() != 0.0 || lambda.re() <= 0.0 {
        return Err(Error::Precondition("μ is sought on the positive real radius".into()));
    }
    if !target_log.is_finite() {
        return Err(Error::InvalidArgument("target must be finite".into()));
    }
    let deleted = b1.deleted_log_product(n);
    if target_log >= deleted {
        return Err(Error::Precondition(format!(
            "target {target_log} is not below the deleted value {deleted}"
        )));
    }
    let x = lambda.re();
    let next = zeros
        .iter()
        .filter(|p| p.im() == 0.0 && p.re() > x)
        .map(|p| p.re())
        .fold(1.0, f64::min);
    let mid = DiskPoint::real(0.5 * (x + next))?;
    let t_hi = log_pseudo_distance(&lambda, &mid);

    let g = |t: f64| -> Result<f64> { Ok(b1.eval_log_modulus(&radial_point(&lambda, t)?)) };

    // lower end: far enough below that the tail factors are frozen
    let mut t_lo = (target_log - deleted - 1.0).min(t_hi - 1.0);
    let mut step = 1.0;
    while g(t_lo)? > target_log {
        t_lo -= step;
        step *= 2.0;
    }

    let ts: Vec<f64> = (0..=SAMPLES)
        .map(|i| t_lo + (t_hi - t_lo) * i as f64 / SAMPLES as f64)
        .collect();
    let gs = ts.iter().map(|&t| g(t)).collect::<Result<Vec<_>>>()?;
    let (imax, gmax) = gs
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    if gmax < target_log {
        return Err(Error::NoBracket {
            max: gmax,
            target: target_log,
        });
    }
    let monotone = gs[..=imax].windows(2).all(|w| w[1] > w[0]);
    let first = gs.iter().position(|&v| v >= target_log).expect("max reaches target");
    let (mut lo, mut hi) = if first == 0 {
        (t_lo, t_lo)
    } else {
        (ts[first - 1], ts[first])
    };
    for _ in 0..MAX_BISECTIONS {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(m)? < target_log {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (g_lo, g_hi) = (g(lo)?, g(hi)?);
    let t = if (g_lo - target_log).abs() <= (g_hi - target_log).abs() {
        lo
    } else {
        hi
    };
    let mu = radial_point(&lambda, t)?;
    let log_modulus = b1.eval_log_modulus(&mu);
    Ok(MuSolution {
        mu,
        log_rho: t,
        log_one_minus_mu: log_one_minus(x, t),
        log_modulus,
        target: target_log,
        residual: (log_modulus - target_log).abs() / target_log.abs().max(1.0),
        monotone,
    })
}

/// The target `log|B₁(μ_n)|`: `-1/(1-λ_n)` for even `n`, `-2/(1-λ_n)` for odd.
pub fn counterexample_target(n: usize) -> f64 {
    let inv = (n as f64).exp2();
    if n % 2 == 0 {
        -inv
    } else {
        -2.0 * inv
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnimodularityCheck {
    pub grid_points: usize,
    pub fit_mass: f64,
    /// `c` such that `c·H₀` with `H₀(z) = Re((1+z)/(1-z))` meets every
    /// constraint; its mass is `c`.
    pub feasible_mass: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub n: usize,
    pub lambda: f64,
    pub log_one_minus_mu: f64,
    pub q: f64,
    pub parity: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRun {
    pub n_max: usize,
    /// Number of zeros of the truncated `B₁`.
    pub truncation: usize,
    pub lambda: Vec<f64>,
    pub targets: Vec<f64>,
    pub log_one_minus_mu: Vec<f64>,
    pub log_rho: Vec<f64>,
    /// `q_n = (1 - μ_n²) log|B₁(μ_n)|`.
    pub q: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Indices whose target lay above the local maximum of `log|B₁|` and was
    /// lowered by whole units until reachable.
    pub adjusted: Vec<usize>,
    pub max_residual: f64,
    pub monotone: bool,
    /// Cluster means over `n ≥ 6`.
    pub q_even_mean: Option<f64>,
    pub q_odd_mean: Option<f64>,
    pub oscillation_gap: Option<f64>,
    pub unimodularity: Option<UnimodularityCheck>,
    #[serde(skip)]
    pub mu: Vec<DiskPoint>,
}

impl CounterexampleRun {
    pub fn rows(&self) -> Vec<CounterexampleRow> {
        (0..self.lambda.len())
            .map(|i| {
                let n = i + 1;
                CounterexampleRow {
                    n,
                    lambda: self.lambda[i],
                    log_one_minus_mu: self.log_one_minus_mu[i],
                    q: self.q[i],
                    parity: if n % 2 == 0 { "even" } else { "odd" },
                }
            })
            .collect()
    }

    /// `B₁` truncated as in the run.
    pub fn b1(&self) -> Result<BlaschkeProduct> {
        Ok(BlaschkeProduct::new(geometric(self.truncation)?))
    }

    /// `B₂` with zeros `μ_1, …, μ_{n_max}`.
    pub fn b2(&self) -> Result<BlaschkeProduct> {
        BlaschkeProduct::from_points(self.mu.clone())
    }
}

/// Options for [`run_counterexample`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterexampleOptions {
    /// Whether to fit the corona majorant of `(B₁, B₂)`.
    pub unimodularity: bool,
    pub grid_rings: usize,
    pub grid_base: usize,
    pub fit: FitOptions,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        Self {
            unimodularity: true,
            grid_rings: 10,
            grid_base: 8,
            fit: FitOptions::default(),
        }
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Builds `λ_n = 1 - 2^{-n}`, solves for the `μ_n`, and reports the
/// oscillation of `q_n` together with the unimodularity fit.
pub fn run_counterexample(n_max: usize, opts: &CounterexampleOptions) -> Result<CounterexampleRun> {
    if !(4..=MAX_N).contains(&n_max) {
        return Err(Error::InvalidArgument(format!(
            "n_max must lie in 4..={MAX_N}, got {n_max}"
        )));
    }
    let truncation = n_max + TAIL_ZEROS;
    let b1 = BlaschkeProduct::new(geometric(truncation)?);
    let mut run = CounterexampleRun {
        n_max,
        truncation,
        lambda: Vec::with_capacity(n_max),
        targets: Vec::with_capacity(n_max),
        log_one_minus_mu: Vec::with_capacity(n_max),
        log_rho: Vec::with_capacity(n_max),
        q: Vec::with_capacity(n_max),
        residuals: Vec::with_capacity(n_max),
        adjusted: Vec::new(),
        max_residual: 0.0,
        monotone: true,
        q_even_mean: None,
        q_odd_mean: None,
        oscillation_gap: None,
        unimodularity: None,
        mu: Vec::with_capacity(n_max),
    };
    for n in 1..=n_max {
        let (target, sol) = solve_reachable(&b1, n)?;
        if target != counterexample_target(n) {
            run.adjusted.push(n);
        }
        let lambda = b1.zeros().points()[n - 1].re();
        // 1 - μ² = (1 - μ)(1 + μ) with 1 + μ = 2 - (1 - μ)
        let one_minus = sol.log_one_minus_mu.exp();
        let q = one_minus * (2.0 - one_minus) * sol.log_modulus;
        run.lambda.push(lambda);
        run.targets.push(target);
        run.log_one_minus_mu.push(sol.log_one_minus_mu);
        run.log_rho.push(sol.log_rho);
        run.q.push(q);
        run.residuals.push(sol.residual);
        run.max_residual = run.max_residual.max(sol.residual);
        run.monotone &= sol.monotone;
        run.mu.push(sol.mu);
    }
    let pick = |parity: usize| -> Vec<f64> {
        (6..=n_max)
            .filter(|n| n % 2 == parity)
            .map(|n| run.q[n - 1])
            .collect()
    };
    run.q_even_mean = mean(&pick(0));
    run.q_odd_mean = mean(&pick(1));
    if let (Some(e), Some(o)) = (run.q_even_mean, run.q_odd_mean) {
        run.oscillation_gap = Some((e - o).abs());
    }
    if opts.unimodularity {
        run.unimodularity = Some(unimodularity_check(&run, &b1, opts)?);
    }
    Ok(run)
}

/// Only finitely many targets can be out of reach (the local maxima of
/// `log|B₁|` between consecutive zeros are bounded below), and changing
/// finitely many `μ_n` does not affect the radial behavior.
fn solve_reachable(b1: &BlaschkeProduct, n: usize) -> Result<(f64, MuSolution)> {
    let mut target = counterexample_target(n);
    for _ in 0..64 {
        match solve_mu(b1, n - 1, target) {
            Ok(sol) => return Ok((target, sol)),
            Err(Error::NoBracket { .. }) | Err(Error::Precondition(_)) => target -= 1.0,
            Err(e) => return Err(e),
        }
    }
    solve_mu(b1, n - 1, target).map(|sol| (target, sol))
}

fn unimodularity_check(
    run: &CounterexampleRun,
    b1: &BlaschkeProduct,
    opts: &CounterexampleOptions,
) -> Result<UnimodularityCheck> {
    let b2 = run.b2()?;
    let tuple = GeneratorTuple::new(vec![b1.clone(), b2], vec!["B1".into(), "B2".into()])?;
    let mut extra: Vec<DiskPoint> = b1.zeros().points()[..run.n_max].to_vec();
    extra.extend_from_slice(&run.mu);
    let grid = SampleGrid::whitney(opts.grid_rings, opts.grid_base)?.with_points(&extra);
    let fit = fit_corona_majorant(&tuple, &grid, &opts.fit)?;
    let h0 = BoundaryMeasure::atom(0.0, 1.0)?;
    let feasible_mass = fit
        .constraints
        .iter()
        .map(|c| c.lower_bound / h0.eval(&c.points[0]))
        .fold(0.0, f64::max);
    Ok(UnimodularityCheck {
        grid_points: grid.len(),
        fit_mass: fit.objective,
        feasible_mass,
        ratio: if feasible_mass > 0.0 {
            fit.objective / feasible_mass
        } else {
            1.0
        },
    })
}

/// Smallest `k` with `∏_{j≤k} m_j ≤ η^{1/4}`.
///
/// Requires `m` nondecreasing in `(0, 1]` with at least two entries,
/// `∏ m ≤ η` and `∏_{j≥2} m_j ≤ η^{1/2}`. The result satisfies `1 ≤ k < N`,
/// `∏_{j≤k} m_j ≤ η^{1/4}` and `∏_{j>k} m_j ≤ η^{1/2}`.
pub fn split_product(m: &[f64], eta: f64) -> Result<usize> {
    if m.len() < 2 {
        return Err(Error::Precondition("at least two factors required".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Precondition(format!("eta must lie in (0,1), got {eta}")));
    }
    if m.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::Precondition("factors must lie in (0,1]".into()));
    }
    if m.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("factors must be nondecreasing".into()));
    }
    let logs: Vec<f64> = m.iter().map(|x| x.ln()).collect();
    let log_eta = eta.ln();
    let total: f64 = logs.iter().sum();
    let tail: f64 = logs[1..].iter().sum();
    if total > log_eta {
        return Err(Error::Precondition("product exceeds eta".into()));
    }
    if tail > 0.5 * log_eta {
        return Err(Error::Precondition("product of m_2.. exceeds eta^(1/2)".into()));
    }
    let mut prefix = 0.0;
    for (k, l) in logs.iter().enumerate() {
        prefix += l;
        if prefix <= 0.25 * log_eta {
            return Ok(k + 1);
        }
    }
    Err(Error::Precondition("no prefix reaches eta^(1/4)".into()))
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationReport {
    pub factor: f64,
    pub seed: u64,
    /// `log ρ(λ_n, λ'_n)` per point.
    pub displacement_log_rho: Vec<f64>,
    pub original_mass: f64,
    pub perturbed_mass: f64,
    /// Whether the disks `D(λ'_n, e^{-2H(λ'_n)})` are pairwise disjoint.
    pub disks_disjoint: bool,
    pub condition_d: ConditionDReport,
    #[serde(skip)]
    pub perturbed: ZeroSequence,
    #[serde(skip)]
    pub perturbed_fit: MajorantFit,
}

/// Moves each `λ_n` to a uniformly random point of `D(λ_n, factor·e^{-H(λ_n)})`
/// and re-certifies the perturbed sequence.
///
/// `H` must satisfy `|B_n(λ_n)| ≥ e^{-H(λ_n)}`. Condition (d) is checked
/// with `4H'`, `H'` the minimal fit on the perturbed sequence.
pub fn perturb_and_recheck(
    seq: &ZeroSequence,
    h: &BoundaryMeasure,
    factor: f64,
    seed: u64,
    fit: &FitOptions,
    d_opts: &ConditionDOptions,
) -> Result<PerturbationReport> {
    if !(0.0..=0.25).contains(&factor) {
        return Err(Error::InvalidArgument(format!(
            "factor must lie in [0, 1/4], got {factor}"
        )));
    }
    let h_values: Vec<f64> = seq.points().iter().map(|p| h.eval(p)).collect();
    for n in 0..seq.len() {
        if h_values[n] < -seq.deleted_log_product(n) - 1e-7 {
            return Err(Error::Precondition(format!(
                "H does not certify the deleted product at point {n}"
            )));
        }
    }
    let perturbed = perturb(seq, &h_values, factor, seed)?;
    let displacement_log_rho = seq
        .points()
        .iter()
        .zip(perturbed.points())
        .map(|(a, b)| log_pseudo_distance(a, b))
        .collect();
    let original = check_nis(seq, fit)?;
    let perturbed_fit = check_nis(&perturbed, fit)?;

    let h_prime: Vec<f64> = perturbed.points().iter().map(|p| h.eval(p)).collect();
    let disks_disjoint = pairwise_disjoint(&perturbed, &h_prime.iter().map(|v| -2.0 * v).collect::<Vec<_>>());

    let h4: Vec<f64> = perturbed
        .points()
        .iter()
        .map(|p| 4.0 * perturbed_fit.measure.eval(p))
        .collect();
    let condition_d = condition_d_check_values(&perturbed, &h4, d_opts)?;
    Ok(PerturbationReport {
        factor,
        seed,
        displacement_log_rho,
        original_mass: original.objective,
        perturbed_mass: perturbed_fit.objective,
        disks_disjoint,
        condition_d,
        perturbed,
        perturbed_fit,
    })
}

/// The perturbed sequence used by [`perturb_and_recheck`].
pub fn perturb(seq: &ZeroSequence, h_values: &[f64], factor: f64, seed: u64) -> Result<ZeroSequence> {
    if factor == 0.0 {
        return Ok(seq.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = seq
        .points()
        .iter()
        .zip(h_values)
        .map(|(p, &hv)| {
            // uniform in the disk of the chart centered at λ_n
            let u: f64 = rng.gen();
            let theta = TAU * rng.gen::<f64>();
            let log_r = factor.ln() - hv + 0.5 * u.ln();
            let near = DiskPoint::near(*p, log_r, Complex64::from_polar(1.0, theta))?;
            if log_r < NEAR_ANCHOR_THRESHOLD.ln() {
                Ok(near)
            } else {
                DiskPoint::from_complex(near.value())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ZeroSequence::new(pts)
}

fn pairwise_disjoint(seq: &ZeroSequence, log_radius: &[f64]) -> bool {
    let pts = seq.points();
    for i in 0..pts.len() {
        for j in 0..i {
            let (a, b) = (log_radius[i], log_radius[j]);
            if a >= 0.0 || b >= 0.0 {
                return false;
            }
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let sum = hi + (lo - hi).exp().ln_1p() - (hi + lo).exp().ln_1p();
            if !(log_pseudo_distance(&pts[i], &pts[j]) > sum) {
                return false;
            }
        }
    }
    true
}

/// `log(1 - λ_n)` for the geometric sequence, exact.
pub fn geometric_log_gap(n: usize) -> f64 {
    -(n as f64) * LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        let eta: f64 = 0.01;
        assert_eq!(split_product(&[eta.sqrt(), eta.sqrt()], eta).unwrap(), 1);
        assert_eq!(split_product(&[0.05, 0.1], 0.01).unwrap(), 1);
        assert_eq!(split_product(&[0.4; 5], 0.0103).unwrap(), 2);
        assert!(split_product(&[0.5], 0.1).is_err());
        assert!(split_product(&[0.5, 0.4], 0.1).is_err());
        assert!(split_product(&[0.9, 0.9], 0.1).is_err());
    }

    #[test]
    fn mu_solution_near_zero_factorization() {
        let b1 = BlaschkeProduct::new(geometric(12).unwrap());
        let sol = solve_mu(&b1, 2, -8.0).unwrap();
        let deleted = b1.deleted_log_product(2);
        assert!((sol.log_rho - (-8.0 - deleted)).abs() < 0.05);
        assert!(sol.residual <= 1e-9);
        assert!(sol.monotone);
        let deep = solve_mu(&b1, 2, -1e4).unwrap();
        assert!(deep.log_rho < -9000.0);
        assert!(solve_mu(&b1, 2, 0.0).is_err());
    }

    #[test]
    fn targets_alternate() {
        assert_eq!(counterexample_target(2), -4.0);
        assert_eq!(counterexample_target(3), -16.0);
    }

    #[test]
    fn zero_factor_is_identity() {
        let s = geometric(6).unwrap();
        let h = vec![3.0; 6];
        let p = perturb(&s, &h, 0.0, 5).unwrap();
        assert_eq!(p, s);
    }

    #[test]
    fn log_one_minus_matches_direct() {
        let (lambda, t) = (0.75, -2.0f64);
        let s = t.exp();
        let mu = (lambda + s) / (1.0 + lambda * s);
        assert!((log_one_minus(lambda, t) - (1.0 - mu).ln()).abs() < 1e-14);
    }

    #[test]
    fn counterexample_clusters() {
        let run = run_counterexample(12, &CounterexampleOptions::default()).unwrap();
        eprintln!("{:?}", run.q);
        eprintln!("{:?}", run.unimodularity);
        assert!(run.max_residual <= 1e-9);
        assert!(run.mu.windows(2).all(|w| w[1].re() > w[0].re()));
        let (e, o) = (run.q_even_mean.unwrap(), run.q_odd_mean.unwrap());
        assert!((e + 2.0).abs() <= 0.3 && (o + 4.0).abs() <= 0.6);
        assert!(run.oscillation_gap.unwrap() >= 1.0);
        let u = run.unimodularity.as_ref().unwrap();
        assert!(u.ratio <= 1.0 + 1e-9 && u.ratio >= 0.25);
        assert_eq!(run.rows()[1].parity, "even");
    }

    #[test]
    fn perturbed_geometric_stays_interpolating() {
        let s = geometric(12).unwrap();
        let fit = FitOptions::default();
        let h = check_nis(&s, &fit).unwrap().measure;
        let d = ConditionDOptions {
            walks: 2000,
            ..ConditionDOptions::default()
        };
        let r = perturb_and_recheck(&s, &h, 0.25, 7, &fit, &d).unwrap();
        eprintln!("{} {} {:?}", r.original_mass, r.perturbed_mass, r.condition_d.minimum);
        assert!(r.perturbed_mass <= 8.0 * r.original_mass);
        assert!(r.original_mass <= 8.0 * r.perturbed_mass);
        assert!(r.disks_disjoint);
    }
}
