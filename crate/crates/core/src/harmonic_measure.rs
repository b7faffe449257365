//! Harmonic measure of the unit circle in the disk minus pseudohyperbolic
//! holes.
//!
//! Walks are driven by ChaCha8 with one stream per trajectory, so an
//! estimate depends only on `(seed, walks, epsilon_shell, domain)` and never
//! on the number of threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blaschke::ZeroSequence;
use crate::error::{Error, Result};
use crate::geometry::{log_pseudo_distance, mobius, DiskPoint, EuclideanDisk, PseudoDisk};
use crate::majorant::BoundaryMeasure;

pub const DEFAULT_EPSILON_SHELL: f64 = 1e-4;
pub const DEFAULT_STEP_CAP: u64 = 1_000_000;
/// Smallest Euclidean hole radius the estimator accepts.
pub const MIN_HOLE_RADIUS: f64 = 1e-12;
/// Largest tolerated fraction of censored walks.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Hole {
    /// Index of the generating sequence point.
    pub index: usize,
    #[serde(skip)]
    pub pseudo: PseudoDisk,
    pub euclidean: EuclideanDisk,
}

/// `𝔻` minus finitely many closed, pairwise disjoint pseudohyperbolic disks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoleDomain {
    holes: Vec<Hole>,
}

impl HoleDomain {
    pub fn new(holes: Vec<(usize, PseudoDisk)>) -> Result<Self> {
        let holes = holes
            .into_iter()
            .map(|(index, pseudo)| {
                let euclidean = pseudo.to_euclidean()?;
                Ok(Hole {
                    index,
                    pseudo,
                    euclidean,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_holes(holes)
    }

    pub fn empty() -> Self {
        Self { holes: Vec::new() }
    }

    fn from_holes(holes: Vec<Hole>) -> Result<Self> {
        for h in &holes {
            if h.euclidean.radius < MIN_HOLE_RADIUS {
                return Err(Error::RadiusUnderflow(h.euclidean.radius));
            }
            if h.euclidean.center.norm() + h.euclidean.radius >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "hole {} touches the unit circle",
                    h.index
                )));
            }
        }
        for i in 0..holes.len() {
            for j in 0..i {
                let (a, b) = (&holes[i].euclidean, &holes[j].euclidean);
                let gap = (a.center - b.center).norm() - a.radius - b.radius;
                if gap < 1e-12 * (a.radius + b.radius) {
                    return Err(Error::OverlappingHoles(holes[j].index, holes[i].index));
                }
            }
        }
        Ok(Self { holes })
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }
}

/// Where a walk ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Exit {
    Outer,
    Hole(usize),
    Censored,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    /// Fraction of walks absorbed at the unit circle.
    pub mean: f64,
    pub stderr: f64,
    pub walks: u64,
    pub seed: u64,
    pub epsilon_shell: f64,
    pub outer_hits: u64,
    /// Hits per hole, in domain order.
    pub hole_hits: Vec<u64>,
    pub censored: u64,
}

/// `ω(z, ∂D(λ, δ), 𝔻 \ D(λ, δ)) = log(1/ρ(z, λ)) / log(1/δ)`.
pub fn omega_single_hole(z: &DiskPoint, lambda: &DiskPoint, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "hole radius must lie in (0,1), got {delta}"
        )));
    }
    omega_single_hole_log(z, lambda, delta.ln())
}

/// [`omega_single_hole`] with the radius given as `log δ`.
pub fn omega_single_hole_log(z: &DiskPoint, lambda: &DiskPoint, log_delta: f64) -> Result<f64> {
    let l = log_pseudo_distance(z, lambda);
    if l < log_delta {
        return Err(Error::StartOnBoundary);
    }
    Ok((l / log_delta).clamp(0.0, 1.0))
}

struct Walker<'a> {
    holes: &'a [Hole],
    epsilon: f64,
    step_cap: u64,
}

impl Walker<'_> {
    /// Distance to the nearest boundary and the absorbing boundary, if any.
    fn locate(&self, x: Complex64) -> (f64, Option<Exit>) {
        let abs = x.norm();
        let outer = (1.0 - abs).max(0.0);
        let mut nearest = outer;
        let mut absorb = (outer <= self.epsilon).then_some((outer, Exit::Outer));
        for (k, h) in self.holes.iter().enumerate() {
            let d = ((x - h.euclidean.center).norm() - h.euclidean.radius).max(0.0);
            nearest = nearest.min(d);
            if d <= self.epsilon * h.euclidean.radius.min(1.0) {
                match absorb {
                    Some((best, _)) if best <= d => {}
                    _ => absorb = Some((d, Exit::Hole(k))),
                }
            }
        }
        (nearest, absorb.map(|(_, e)| e))
    }

    fn walk(&self, start: Complex64, rng: &mut ChaCha8Rng) -> Exit {
        let mut x = start;
        for _ in 0..self.step_cap {
            let (r, exit) = self.locate(x);
            if let Some(e) = exit {
                return e;
            }
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            let (s, c) = theta.sin_cos();
            x += Complex64::new(r * c, r * s);
        }
        Exit::Censored
    }
}

/// Walk-on-spheres estimate of `ω(z, ∂𝔻, domain)`.
pub fn wos_estimate(
    domain: &HoleDomain,
    z: &DiskPoint,
    walks: u64,
    epsilon_shell: f64,
    seed: u64,
) -> Result<Estimate> {
    wos_estimate_capped(domain, z, walks, epsilon_shell, seed, DEFAULT_STEP_CAP)
}

/// [`wos_estimate`] with an explicit per-walk step cap.
pub fn wos_estimate_capped(
    domain: &HoleDomain,
    z: &DiskPoint,
    walks: u64,
    epsilon_shell: f64,
    seed: u64,
    step_cap: u64,
) -> Result<Estimate> {
    if walks == 0 {
        return Err(Error::InvalidArgument("walks must be positive".into()));
    }
    if !(epsilon_shell > 0.0 && epsilon_shell < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "epsilon_shell must lie in (0, 0.5), got {epsilon_shell}"
        )));
    }
    let walker = Walker {
        holes: &domain.holes,
        epsilon: epsilon_shell,
        step_cap,
    };
    let start = z.value();
    let (_, exit) = walker.locate(start);
    let inside_hole = domain
        .holes
        .iter()
        .any(|h| (start - h.euclidean.center).norm() <= h.euclidean.radius);
    if exit.is_some() || inside_hole {
        return Err(Error::StartOnBoundary);
    }

    let base = ChaCha8Rng::seed_from_u64(seed);
    let nholes = domain.holes.len();
    let zero = || (0u64, vec![0u64; nholes], 0u64);
    let (outer_hits, hole_hits, censored) = (0..walks)
        .into_par_iter()
        .fold(zero, |mut acc, t| {
            let mut rng = base.clone();
            rng.set_stream(t);
            match walker.walk(start, &mut rng) {
                Exit::Outer => acc.0 += 1,
                Exit::Hole(k) => acc.1[k] += 1,
                Exit::Censored => acc.2 += 1,
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            a.0 += b.0;
            for (x, y) in a.1.iter_mut().zip(&b.1) {
                *x += y;
            }
            a.2 += b.2;
            a
        });

    if censored as f64 > MAX_CENSORED_FRACTION * walks as f64 {
        return Err(Error::Censored { censored, walks });
    }
    let mean = outer_hits as f64 / walks as f64;
    Ok(Estimate {
        mean,
        stderr: (mean * (1.0 - mean) / walks as f64).sqrt(),
        walks,
        seed,
        epsilon_shell,
        outer_hits,
        hole_hits,
        censored,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionDOptions {
    pub neighbor_cutoff: f64,
    pub walks: u64,
    pub epsilon_shell: f64,
    pub seed: u64,
}

impl Default for ConditionDOptions {
    fn default() -> Self {
        Self {
            neighbor_cutoff: 0.5,
            walks: 10_000,
            epsilon_shell: DEFAULT_EPSILON_SHELL,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointEstimate {
    pub index: usize,
    /// Indices of the neighbors cut out as holes.
    pub holes: Vec<usize>,
    /// Holes below the supported Euclidean radius. They are left out of the
    /// walk and their single-hole measure is subtracted instead.
    pub analytic: Vec<usize>,
    /// `Σ log(1/ρ(λ_n, λ_j)) / log(1/δ_j)` over the analytic holes.
    pub analytic_correction: f64,
    pub estimate: Estimate,
    /// Lower bound for `ω(λ_n, ∂𝔻, Ω_n)`: the walk estimate minus the
    /// analytic correction.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub first: usize,
    pub second: usize,
    pub log_rho: f64,
    pub log_radius_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionDReport {
    /// Number of sequence points; the check covers this finite truncation.
    pub truncation: usize,
    pub options: ConditionDOptions,
    /// `H(λ_k)` per point; hole `k` is `D(λ_k, e^{-H(λ_k)})`.
    pub h_values: Vec<f64>,
    pub disjoint: bool,
    pub overlap: Option<Overlap>,
    pub estimates: Vec<PointEstimate>,
    pub minimum: Option<f64>,
    pub minimum_index: Option<usize>,
    /// Total number of analytic holes over all domains.
    pub analytic_holes: usize,
}

/// `log((r + s)/(1 + rs))`: the pseudohyperbolic sum of two radii given in
/// log form.
fn log_radius_sum(lr: f64, ls: f64) -> f64 {
    let (hi, lo) = if lr >= ls { (lr, ls) } else { (ls, lr) };
    hi + (lo - hi).exp().ln_1p() - (hi + lo).exp().ln_1p()
}

fn mix_seed(seed: u64, n: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((n as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The seed used for the domain around point `n`.
pub fn point_seed(seed: u64, n: usize) -> u64 {
    mix_seed(seed, n)
}

/// Checks the finite form of condition (d): the disks `D(λ_k, e^{-H(λ_k)})`
/// are pairwise disjoint and `ω(λ_n, ∂𝔻, Ω_n)` stays away from 0, where
/// `Ω_n` removes the disks of neighbors with `ρ(λ_k, λ_n) ≤ cutoff`.
///
/// Each domain is moved by `φ_{λ_n}` so that `λ_n` sits at the origin; holes
/// are pseudohyperbolic disks, so the harmonic measure is unchanged.
pub fn condition_d_check(
    seq: &ZeroSequence,
    h: &BoundaryMeasure,
    opts: &ConditionDOptions,
) -> Result<ConditionDReport> {
    let h_values: Vec<f64> = seq.points().iter().map(|p| h.eval(p)).collect();
    condition_d_check_values(seq, &h_values, opts)
}

/// [`condition_d_check`] with `H(λ_k)` supplied directly.
pub fn condition_d_check_values(
    seq: &ZeroSequence,
    h_values: &[f64],
    opts: &ConditionDOptions,
) -> Result<ConditionDReport> {
    if h_values.len() != seq.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} points",
            h_values.len(),
            seq.len()
        )));
    }
    if !(opts.neighbor_cutoff > 0.0 && opts.neighbor_cutoff < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "neighbor cutoff must lie in (0,1), got {}",
            opts.neighbor_cutoff
        )));
    }
    let pts = seq.points();
    let n = pts.len();
    let mut report = ConditionDReport {
        truncation: n,
        options: *opts,
        h_values: h_values.to_vec(),
        disjoint: true,
        overlap: None,
        estimates: Vec::with_capacity(n),
        minimum: None,
        minimum_index: None,
        analytic_holes: 0,
    };

    let log_radius: Vec<f64> = h_values.iter().map(|&v| -v).collect();
    'outer: for i in 0..n {
        for j in 0..i {
            let l = log_pseudo_distance(&pts[i], &pts[j]);
            let sum = if log_radius[i] >= 0.0 || log_radius[j] >= 0.0 {
                0.0
            } else {
                log_radius_sum(log_radius[i], log_radius[j])
            };
            if !(l > sum) {
                report.disjoint = false;
                report.overlap = Some(Overlap {
                    first: j,
                    second: i,
                    log_rho: l,
                    log_radius_sum: sum,
                });
                break 'outer;
            }
        }
    }
    if !report.disjoint {
        return Ok(report);
    }

    let log_cutoff = opts.neighbor_cutoff.ln();
    for k in 0..n {
        let mut holes = Vec::new();
        let mut indices = Vec::new();
        let mut analytic = Vec::new();
        let mut correction = 0.0;
        for j in 0..n {
            let l = log_pseudo_distance(&pts[j], &pts[k]);
            if j == k || l > log_cutoff {
                continue;
            }
            let center = mobius(&pts[k], &pts[j]);
            let pseudo = PseudoDisk::new(center, log_radius[j])?;
            let euclidean = match pseudo.to_euclidean() {
                Ok(e) if e.radius >= MIN_HOLE_RADIUS => e,
                Ok(_) | Err(Error::RadiusUnderflow(_)) => {
                    // ω of a union is at most the sum of single-hole measures,
                    // and removing a hole only shrinks the others' measures
                    correction += (l / log_radius[j]).clamp(0.0, 1.0);
                    analytic.push(j);
                    continue;
                }
                Err(e) => return Err(e),
            };
            holes.push(Hole {
                index: j,
                pseudo,
                euclidean,
            });
            indices.push(j);
        }
        let domain = HoleDomain::from_holes(holes)?;
        let estimate = wos_estimate(
            &domain,
            &DiskPoint::ORIGIN,
            opts.walks,
            opts.epsilon_shell,
            mix_seed(opts.seed, k),
        )?;
        report.analytic_holes += analytic.len();
        report.estimates.push(PointEstimate {
            index: k,
            holes: indices,
            analytic,
            analytic_correction: correction,
            value: estimate.mean - correction,
            estimate,
        });
    }
    if let Some(best) = report
        .estimates
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
    {
        report.minimum = Some(best.value);
        report.minimum_index = Some(best.index);
    }
    Ok(report)
}
