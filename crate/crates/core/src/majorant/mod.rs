//! Positive harmonic majorants.
//!
//! A candidate `H ∈ Har₊(𝔻)` is the Poisson integral of a discrete positive
//! measure on the circle plus an optional multiple of normalized arc length
//! (which contributes a constant). Every "there is a positive harmonic `H`
//! with `H(z_i) ≥ c_i`" question becomes the covering program
//!
//! ```text
//!     minimize total mass  subject to  P[μ](z_i) ≥ c_i
//! ```
//!
//! solved by [`lp::CoveringLp`] with rows generated lazily: the fitter starts
//! from a handful of constraints, solves, adds the most violated ones and
//! repeats until every constraint holds.

pub mod lp;

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::ZeroSequence;
use crate::error::{Error, Result};
use crate::geometry::{log_pseudo_distance, raw_poisson_kernel, raw_blaschke_factor, DiskPoint};

use lp::CoveringLp;

/// Slack below which a fitted constraint counts as violated.
pub const SLACK_TOL: f64 = 1e-7;

/// A positive measure on the unit circle: atoms at `nodes` plus `uniform`
/// times normalized arc length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    uniform: f64,
    total_mass: f64,
}

impl BoundaryMeasure {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, uniform: f64) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::InvalidArgument("nodes and weights differ in length".into()));
        }
        if nodes.iter().any(|t| !(0.0..TAU).contains(t)) {
            return Err(Error::InvalidArgument("nodes must lie in [0, 2π)".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || !(uniform >= 0.0) {
            return Err(Error::InvalidArgument("weights must be nonnegative".into()));
        }
        let total_mass = uniform + weights.iter().sum::<f64>();
        Ok(Self {
            nodes,
            weights,
            uniform,
            total_mass,
        })
    }

    /// The constant harmonic function `c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), c)
    }

    /// A single atom of mass `w` at angle `theta`.
    pub fn atom(theta: f64, w: f64) -> Result<Self> {
        Self::new(vec![theta.rem_euclid(TAU)], vec![w], 0.0)
    }

    pub fn zero() -> Self {
        Self {
            nodes: Vec::new(),
            weights: Vec::new(),
            uniform: 0.0,
            total_mass: 0.0,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn uniform(&self) -> f64 {
        self.uniform
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn scaled(&self, t: f64) -> Self {
        assert!(t >= 0.0);
        Self {
            nodes: self.nodes.clone(),
            weights: self.weights.iter().map(|w| w * t).collect(),
            uniform: self.uniform * t,
            total_mass: self.total_mass * t,
        }
    }

    /// Sum of two measures; nodes are merged.
    pub fn add(&self, other: &Self) -> Self {
        let mut map: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .chain(other.nodes.iter().copied().zip(other.weights.iter().copied()))
            .collect();
        map.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (t, w) in map {
            if nodes.last() == Some(&t) {
                *weights.last_mut().expect("nonempty") += w;
            } else {
                nodes.push(t);
                weights.push(w);
            }
        }
        Self::new(nodes, weights, self.uniform + other.uniform).expect("valid merge")
    }

    fn atoms(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&t, &w)| (Complex64::from_polar(1.0, t), w))
    }

    /// `P[μ](z)`.
    pub fn eval(&self, z: &DiskPoint) -> f64 {
        eval_majorant(self, z)
    }
}

/// `H(z) = P[μ](z) = uniform + Σ_j w_j P(z, e^{iθ_j})`.
pub fn eval_majorant(mu: &BoundaryMeasure, z: &DiskPoint) -> f64 {
    let zv = z.value();
    mu.uniform + mu.atoms().map(|(zeta, w)| w * raw_poisson_kernel(zv, zeta)).sum::<f64>()
}

/// Harmonic conjugate `Σ_j w_j Im((ζ_j + z)/(ζ_j - z))`, vanishing at 0.
pub fn harmonic_conjugate(mu: &BoundaryMeasure, z: &DiskPoint) -> f64 {
    let zv = z.value();
    mu.atoms()
        .map(|(zeta, w)| w * ((zeta + zv) / (zeta - zv)).im)
        .sum()
}

/// Where the atoms of the fitted measure may sit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodePlacement {
    /// `node_count` equispaced angles.
    #[default]
    Equispaced,
    /// Equispaced angles plus the arguments of constraint points with
    /// `|z| > 1/2`, where their kernels peak.
    WithProjections,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitOptions {
    pub node_count: usize,
    pub mass_cap: f64,
    pub placement: NodePlacement,
    /// Allow a constant (arc-length) component in the measure.
    pub uniform_component: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            node_count: 1024,
            mass_cap: 1e6,
            placement: NodePlacement::Equispaced,
            uniform_component: true,
        }
    }
}

impl FitOptions {
    pub fn with_nodes(node_count: usize) -> Self {
        Self {
            node_count,
            ..Self::default()
        }
    }
}

/// One constraint `Σ_p H(z_p) ≥ lower_bound`; almost always a single point.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantConstraint {
    pub points: Vec<DiskPoint>,
    pub lower_bound: f64,
}

impl MajorantConstraint {
    pub fn at(point: DiskPoint, lower_bound: f64) -> Self {
        Self {
            points: vec![point],
            lower_bound,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Optimal,
    InfeasibleAtMassCap,
}

#[derive(Clone, Debug)]
pub struct MajorantFit {
    pub measure: BoundaryMeasure,
    pub constraints: Vec<MajorantConstraint>,
    pub status: FitStatus,
    /// Minimal total mass.
    pub objective: f64,
    /// `H`-side minus bound, per constraint (bounds clamped at 0).
    pub slack: Vec<f64>,
    pub active_rows: usize,
    pub pivots: usize,
}

impl MajorantFit {
    pub fn is_optimal(&self) -> bool {
        self.status == FitStatus::Optimal
    }

    pub fn min_slack(&self) -> f64 {
        self.slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, z: &DiskPoint) -> f64 {
        self.measure.eval(z)
    }
}

/// Serialized form of a fit.
#[derive(Clone, Debug, Serialize)]
pub struct MajorantFitReport {
    pub status: FitStatus,
    pub objective: f64,
    pub uniform: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub slack: Vec<f64>,
}

impl From<&MajorantFit> for MajorantFitReport {
    fn from(fit: &MajorantFit) -> Self {
        // zero-weight nodes carry no information
        let (nodes, weights): (Vec<f64>, Vec<f64>) = fit
            .measure
            .nodes
            .iter()
            .zip(&fit.measure.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&t, &w)| (t, w))
            .unzip();
        Self {
            status: fit.status,
            objective: fit.objective,
            uniform: fit.measure.uniform,
            nodes,
            weights,
            lower_bounds: fit.constraints.iter().map(|c| c.lower_bound).collect(),
            slack: fit.slack.clone(),
        }
    }
}

fn node_angles(constraints: &[MajorantConstraint], opts: &FitOptions) -> Vec<f64> {
    let n = opts.node_count;
    let mut angles: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    if opts.placement == NodePlacement::WithProjections {
        for c in constraints {
            for p in &c.points {
                if p.modulus() > 0.5 {
                    angles.push(p.arg().rem_euclid(TAU));
                }
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        if let (Some(&first), Some(&last)) = (angles.first(), angles.last()) {
            if angles.len() > 1 && TAU - last + first < 1e-13 {
                angles.pop();
            }
        }
        for a in &mut angles {
            if *a >= TAU {
                *a = 0.0;
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup();
    }
    angles
}

/// Minimal-mass positive harmonic `H` with `H(z_i) ≥ c_i` (negative bounds
/// clamp to 0).
pub fn fit_min_majorant(
    constraints: &[(DiskPoint, f64)],
    opts: &FitOptions,
) -> Result<MajorantFit> {
    let rows: Vec<MajorantConstraint> = constraints
        .iter()
        .map(|&(p, c)| MajorantConstraint::at(p, c))
        .collect();
    fit_constraints(rows, opts)
}

/// General form of [`fit_min_majorant`] allowing constraints on sums of
/// values of `H`.
pub fn fit_constraints(
    mut constraints: Vec<MajorantConstraint>,
    opts: &FitOptions,
) -> Result<MajorantFit> {
    if constraints.is_empty() {
        return Err(Error::InvalidArgument("no constraints".into()));
    }
    if opts.node_count < 8 {
        return Err(Error::InvalidArgument(format!(
            "node_count must be at least 8, got {}",
            opts.node_count
        )));
    }
    for c in &mut constraints {
        if c.points.is_empty() || !c.lower_bound.is_finite() && c.lower_bound != f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "constraint bound {} is not finite",
                c.lower_bound
            )));
        }
        c.lower_bound = c.lower_bound.max(0.0);
    }
    check_degenerate(&constraints)?;

    let angles = node_angles(&constraints, opts);
    let zetas: Vec<Complex64> = angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let offset = usize::from(opts.uniform_component);
    let ncols = zetas.len() + offset;

    let row_coeffs = |c: &MajorantConstraint| -> Vec<f64> {
        let mut row = vec![0.0; ncols];
        if offset == 1 {
            row[0] = c.points.len() as f64;
        }
        for p in &c.points {
            let zv = p.value();
            for (j, zeta) in zetas.iter().enumerate() {
                row[j + offset] += raw_poisson_kernel(zv, *zeta);
            }
        }
        row
    };

    let positive: Vec<usize> = (0..constraints.len())
        .filter(|&i| constraints[i].lower_bound > 0.0)
        .collect();

    let mut lp = CoveringLp::new(ncols);
    let mut x = vec![0.0; ncols];
    let mut in_lp = vec![false; constraints.len()];

    if !positive.is_empty() {
        // seed with the constraints needing the most mass in isolation
        let mut seed: Vec<(usize, f64)> = positive
            .iter()
            .map(|&i| {
                let c = &constraints[i];
                let peak: f64 = c
                    .points
                    .iter()
                    .map(|p| (1.0 + p.modulus()) / (p.one_minus_abs2() / (1.0 + p.modulus())))
                    .sum();
                (i, c.lower_bound / peak)
            })
            .collect();
        seed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(i, _) in seed.iter().take(4) {
            lp.add_row(&row_coeffs(&constraints[i]), constraints[i].lower_bound)?;
            in_lp[i] = true;
        }
        loop {
            lp.solve()?;
            x = lp.solution();
            let values = evaluate_rows(&constraints, &x, &zetas, offset);
            let mut violated: Vec<(usize, f64)> = positive
                .iter()
                .filter(|&&i| !in_lp[i])
                .filter_map(|&i| {
                    let c = constraints[i].lower_bound;
                    let v = c - values[i];
                    (v > 1e-10 * c.max(1.0)).then_some((i, v / c))
                })
                .collect();
            if violated.is_empty() {
                break;
            }
            violated.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for &(i, _) in violated.iter().take(32) {
                lp.add_row(&row_coeffs(&constraints[i]), constraints[i].lower_bound)?;
                in_lp[i] = true;
            }
        }
    }

    let uniform = if offset == 1 { x[0] } else { 0.0 };
    let measure = BoundaryMeasure::new(angles, x[offset..].to_vec(), uniform)?;
    let values = evaluate_rows(&constraints, &x, &zetas, offset);
    let slack: Vec<f64> = constraints
        .iter()
        .zip(&values)
        .map(|(c, v)| v - c.lower_bound)
        .collect();
    let objective = measure.total_mass();
    let status = if objective > opts.mass_cap {
        FitStatus::InfeasibleAtMassCap
    } else {
        FitStatus::Optimal
    };
    Ok(MajorantFit {
        measure,
        constraints,
        status,
        objective,
        slack,
        active_rows: lp.num_rows(),
        pivots: lp.pivots(),
    })
}

fn evaluate_rows(
    constraints: &[MajorantConstraint],
    x: &[f64],
    zetas: &[Complex64],
    offset: usize,
) -> Vec<f64> {
    let support: Vec<(Complex64, f64)> = zetas
        .iter()
        .zip(&x[offset..])
        .filter(|(_, &w)| w > 0.0)
        .map(|(&z, &w)| (z, w))
        .collect();
    let uniform = if offset == 1 { x[0] } else { 0.0 };
    constraints
        .iter()
        .map(|c| {
            c.points
                .iter()
                .map(|p| {
                    let zv = p.value();
                    uniform
                        + support
                            .iter()
                            .map(|(zeta, w)| w * raw_poisson_kernel(zv, *zeta))
                            .sum::<f64>()
                })
                .sum()
        })
        .collect()
}

fn check_degenerate(constraints: &[MajorantConstraint]) -> Result<()> {
    let mut seen: HashMap<Vec<(u64, u64, Option<u64>)>, (usize, f64)> = HashMap::new();
    for (i, c) in constraints.iter().enumerate() {
        if c.points.len() != 1 {
            continue;
        }
        let p = &c.points[0];
        let key = vec![(
            p.re().to_bits(),
            p.im().to_bits(),
            p.near_anchor().map(|n| n.log_rho.to_bits()),
        )];
        match seen.get(&key) {
            Some(&(j, b)) if b != c.lower_bound => {
                return Err(Error::DegenerateConstraints(j, i));
            }
            Some(_) => {}
            None => {
                seen.insert(key, (i, c.lower_bound));
            }
        }
    }
    Ok(())
}

/// Minimal majorant certifying `|B_n(λ_n)| ≥ e^{-H(λ_n)}` for every point.
pub fn check_nis(seq: &ZeroSequence, opts: &FitOptions) -> Result<MajorantFit> {
    let constraints: Vec<_> = (0..seq.len())
        .map(|n| (seq.points()[n], -seq.deleted_log_product(n)))
        .collect();
    fit_min_majorant(&constraints, opts)
}

/// Local version: only neighbors with `ρ ≤ c` enter the deleted product.
pub fn check_local_nis(seq: &ZeroSequence, c: f64, opts: &FitOptions) -> Result<MajorantFit> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("c must lie in (0,1), got {c}")));
    }
    let constraints: Vec<_> = (0..seq.len())
        .map(|n| (seq.points()[n], -seq.local_log_product(n, c)))
        .collect();
    fit_min_majorant(&constraints, opts)
}

/// Pseudohyperbolic divided difference `(w_k - w_n) / b_{λ_n}(λ_k)`.
pub fn divided_difference(
    values: (Complex64, Complex64),
    lambda_n: &DiskPoint,
    lambda_k: &DiskPoint,
) -> Result<Complex64> {
    let (w_n, w_k) = values;
    if log_pseudo_distance(lambda_n, lambda_k) == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(
            "divided difference needs distinct points".into(),
        ));
    }
    let b = raw_blaschke_factor(lambda_n.value(), lambda_k.value());
    if b.norm() == 0.0 {
        // near-anchor pair below double resolution: use the exact modulus
        let l = log_pseudo_distance(lambda_n, lambda_k);
        return Ok((w_k - w_n) * (-l).exp());
    }
    Ok((w_k - w_n) / b)
}

/// Minimal majorant with `log₊|w_n| ≤ H(λ_n)`.
pub fn check_trace(
    seq: &ZeroSequence,
    values: &[Complex64],
    opts: &FitOptions,
) -> Result<MajorantFit> {
    if values.len() != seq.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} points",
            values.len(),
            seq.len()
        )));
    }
    let constraints: Vec<_> = seq
        .points()
        .iter()
        .zip(values)
        .map(|(p, w)| (*p, w.norm().ln().max(0.0)))
        .collect();
    fit_min_majorant(&constraints, opts)
}

/// Largest number of ordered pairs accepted by [`check_union_trace`].
pub const MAX_PAIRS: usize = 1_000_000;

/// Minimal majorant with `H(λ_n) + H(λ_k) ≥ log₊(|w_k - w_n| / ρ(λ_k, λ_n))`
/// for every ordered pair.
pub fn check_union_trace(
    seq: &ZeroSequence,
    values: &[Complex64],
    opts: &FitOptions,
) -> Result<MajorantFit> {
    let n = seq.len();
    if values.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} values for {} points",
            values.len(),
            n
        )));
    }
    let pairs = n.saturating_mul(n.saturating_sub(1));
    if pairs > MAX_PAIRS {
        return Err(Error::Oversize(pairs, MAX_PAIRS));
    }
    let mut constraints = Vec::with_capacity(pairs);
    let pts = seq.points();
    for i in 0..n {
        for k in 0..n {
            if i == k {
                continue;
            }
            let diff = (values[k] - values[i]).norm();
            let bound = if diff == 0.0 {
                0.0
            } else {
                (diff.ln() - log_pseudo_distance(&pts[k], &pts[i])).max(0.0)
            };
            constraints.push(MajorantConstraint {
                points: vec![pts[i], pts[k]],
                lower_bound: bound,
            });
        }
    }
    if constraints.is_empty() {
        constraints.push(MajorantConstraint::at(pts[0], 0.0));
    }
    fit_constraints(constraints, opts)
}

/// Growth classification of a certified mass along a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Diverging,
}

/// Largest ratio `last / max(first, 1)` still classified as bounded.
pub const BOUNDED_GROWTH_RATIO: f64 = 4.0;

/// Compares the mass at a small truncation with the mass at a larger one.
pub fn classify_growth(first: f64, last: f64) -> Growth {
    if last / first.max(1.0) <= BOUNDED_GROWTH_RATIO {
        Growth::Bounded
    } else {
        Growth::Diverging
    }
}
