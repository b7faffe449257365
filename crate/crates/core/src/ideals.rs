//! Corona-type quantities for tuples of Blaschke products.
//!
//! All moduli are handled as logarithms: for the generator pairs of interest
//! `|f_i(z)|` routinely drops below `1e-300` on the sample grid.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::blaschke::{BlaschkeProduct, ZeroSequence};
use crate::error::{Error, Result};
use crate::geometry::{log_pseudo_distance, DiskPoint};
use crate::majorant::{fit_min_majorant, FitOptions, MajorantFit};

pub const MAX_GENERATORS: usize = 8;

/// Generators `f_1, …, f_m` of an ideal, all Blaschke products.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorTuple {
    generators: Vec<BlaschkeProduct>,
    labels: Vec<String>,
}

impl GeneratorTuple {
    pub fn new(generators: Vec<BlaschkeProduct>, labels: Vec<String>) -> Result<Self> {
        if generators.is_empty() || generators.len() > MAX_GENERATORS {
            return Err(Error::InvalidArgument(format!(
                "need 1 to {MAX_GENERATORS} generators, got {}",
                generators.len()
            )));
        }
        if labels.len() != generators.len() {
            return Err(Error::InvalidArgument("one label per generator".into()));
        }
        Ok(Self { generators, labels })
    }

    /// Generators labelled `f1, f2, …`.
    pub fn unlabeled(generators: Vec<BlaschkeProduct>) -> Result<Self> {
        let labels = (1..=generators.len()).map(|i| format!("f{i}")).collect();
        Self::new(generators, labels)
    }

    pub fn generators(&self) -> &[BlaschkeProduct] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// `log Σ_i |f_i(z)|`.
    pub fn log_sum_modulus(&self, z: &DiskPoint) -> f64 {
        log_sum_exp(self.generators.iter().map(|f| f.eval_log_modulus(z)))
    }

    /// `log k(z)` with `k(z) = Σ_i (|f_i(z)| + (1 - |z|²)|f_i'(z)|)`.
    pub fn log_corona_quantity(&self, z: &DiskPoint) -> f64 {
        log_sum_exp(
            self.generators
                .iter()
                .flat_map(|f| [f.eval_log_modulus(z), f.log_scaled_derivative(z)]),
        )
    }
}

/// `log Σ e^{x_i}`; `-∞` for an empty or all `-∞` input.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// `k(z) = Σ_i (|f_i(z)| + (1 - |z|²)|f_i'(z)|)`.
pub fn corona_quantity(g: &GeneratorTuple, z: &DiskPoint) -> f64 {
    g.generators
        .iter()
        .map(|f| f.eval(z).norm() + z.one_minus_abs2() * f.eval_derivative(z).norm())
        .sum()
}

/// Sample points of the disk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleGrid {
    #[serde(skip)]
    points: Vec<DiskPoint>,
    /// Ring count `J` (0 for grids built from explicit points).
    pub rings: usize,
    /// Angles on ring `j` are `2^j · base`.
    pub base: usize,
    pub size: usize,
}

impl SampleGrid {
    /// Rings `r_j = 1 - 2^{-j}`, `j = 1..=rings`, each with `2^j · base`
    /// equispaced angles starting at 0.
    pub fn whitney(rings: usize, base: usize) -> Result<Self> {
        if !(1..=16).contains(&rings) || !(1..=64).contains(&base) {
            return Err(Error::InvalidArgument(format!(
                "grid needs 1 ≤ J ≤ 16 and 1 ≤ q ≤ 64, got J = {rings}, q = {base}"
            )));
        }
        let mut points = Vec::new();
        for j in 1..=rings {
            let r = 1.0 - (-(j as f64)).exp2();
            let count = (1usize << j) * base;
            for a in 0..count {
                points.push(DiskPoint::polar(r, TAU * a as f64 / count as f64)?);
            }
        }
        let size = points.len();
        Ok(Self {
            points,
            rings,
            base,
            size,
        })
    }

    pub fn from_points(points: Vec<DiskPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        let size = points.len();
        Ok(Self {
            points,
            rings: 0,
            base: 0,
            size,
        })
    }

    /// The grid with extra points appended (e.g. a zero set).
    pub fn with_points(mut self, extra: &[DiskPoint]) -> Self {
        self.points.extend_from_slice(extra);
        self.size = self.points.len();
        self
    }

    pub fn points(&self) -> &[DiskPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn fit_bounds(
    grid: &SampleGrid,
    opts: &FitOptions,
    bound: impl Fn(usize, &DiskPoint) -> Result<f64>,
) -> Result<MajorantFit> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid is empty".into()));
    }
    let constraints = grid
        .points
        .iter()
        .enumerate()
        .map(|(j, z)| Ok((*z, bound(j, z)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_min_majorant(&constraints, opts)
}

/// Minimal `H` with `Σ_i |f_i(z_j)| ≥ e^{-H(z_j)}` on the grid.
pub fn fit_corona_majorant(
    g: &GeneratorTuple,
    grid: &SampleGrid,
    opts: &FitOptions,
) -> Result<MajorantFit> {
    fit_bounds(grid, opts, |j, z| {
        let l = g.log_sum_modulus(z);
        if l == f64::NEG_INFINITY {
            return Err(Error::CommonZero(j));
        }
        Ok(-l)
    })
}

/// Minimal `H` with `k(z_j) ≥ e^{-H(z_j)}` on the grid.
pub fn fit_condition_c_majorant(
    g: &GeneratorTuple,
    grid: &SampleGrid,
    opts: &FitOptions,
) -> Result<MajorantFit> {
    fit_bounds(grid, opts, |j, z| {
        let l = g.log_corona_quantity(z);
        if l == f64::NEG_INFINITY {
            return Err(Error::CommonZero(j));
        }
        Ok(-l)
    })
}

/// Minimal `H` with `|B(z_j)| ≥ e^{-H(z_j)} ρ(z_j, Λ)` on the grid.
pub fn fit_condition_b_majorant(
    b: &BlaschkeProduct,
    grid: &SampleGrid,
    opts: &FitOptions,
) -> Result<MajorantFit> {
    fit_bounds(grid, opts, |_, z| Ok(-b.log_modulus_off_nearest(z)))
}

/// Minimal `H` with `|f(z_j)| ≤ e^{H(z_j)} (Σ_i |f_i(z_j)|)^p` on the grid.
pub fn j_membership_cost(
    f: &BlaschkeProduct,
    g: &GeneratorTuple,
    grid: &SampleGrid,
    p: f64,
    opts: &FitOptions,
) -> Result<MajorantFit> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {p}")));
    }
    fit_bounds(grid, opts, |j, z| {
        let l = g.log_sum_modulus(z);
        if l == f64::NEG_INFINITY {
            return Err(Error::CommonZero(j));
        }
        let lf = f.eval_log_modulus(z);
        if lf == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(lf - p * l)
    })
}

fn check_zero_disjoint(b1: &BlaschkeProduct, b2: &BlaschkeProduct) -> Result<()> {
    for (i, p) in b1.zeros().points().iter().enumerate() {
        if b2
            .zeros()
            .points()
            .iter()
            .any(|q| log_pseudo_distance(p, q) == f64::NEG_INFINITY)
        {
            return Err(Error::Precondition(format!(
                "zero {i} of the first product is shared"
            )));
        }
    }
    Ok(())
}

/// `f = B₁ᴺB₂ᴺ` and the generators `(B₁ᴺ⁺¹, B₂ᴺ⁺¹)`.
#[derive(Clone, Debug)]
pub struct F2Example {
    pub f: BlaschkeProduct,
    pub generators: GeneratorTuple,
    pub n: u32,
    pub p: f64,
}

pub fn build_f2_example(
    b1: &BlaschkeProduct,
    b2: &BlaschkeProduct,
    n: u32,
    p: f64,
) -> Result<F2Example> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be at least 1, got {p}")));
    }
    check_zero_disjoint(b1, b2)?;
    let f = b1.pow(n).mul(&b2.pow(n));
    let generators = GeneratorTuple::new(
        vec![b1.pow(n + 1), b2.pow(n + 1)],
        vec![format!("B1^{}", n + 1), format!("B2^{}", n + 1)],
    )?;
    Ok(F2Example {
        f,
        generators,
        n,
        p,
    })
}

/// `(B₁², B₂², B₁B₂)`.
pub fn build_tres_example(b1: &BlaschkeProduct, b2: &BlaschkeProduct) -> Result<GeneratorTuple> {
    check_zero_disjoint(b1, b2)?;
    GeneratorTuple::new(
        vec![b1.pow(2), b2.pow(2), b1.mul(b2)],
        vec!["B1^2".into(), "B2^2".into(), "B1*B2".into()],
    )
}

/// Divides out the zeros shared by every generator. Returns the reduced
/// tuple and the common factor (with the smallest multiplicities).
pub fn reduce_common_zeros(g: &GeneratorTuple) -> Result<(GeneratorTuple, BlaschkeProduct)> {
    let first = &g.generators[0];
    let mut common_pts = Vec::new();
    let mut common_mult = Vec::new();
    for (p, &m0) in first.zeros().points().iter().zip(first.multiplicities()) {
        let mut m = m0;
        for other in &g.generators[1..] {
            match other.zeros().points().iter().position(|q| q == p) {
                Some(i) => m = m.min(other.multiplicities()[i]),
                None => {
                    m = 0;
                    break;
                }
            }
        }
        if m > 0 {
            common_pts.push(*p);
            common_mult.push(m);
        }
    }
    let common = BlaschkeProduct::with_multiplicities(ZeroSequence::new(common_pts.clone())?, common_mult.clone())?;
    let reduced = g
        .generators
        .iter()
        .map(|f| {
            let mut pts = Vec::new();
            let mut mult = Vec::new();
            for (p, &m) in f.zeros().points().iter().zip(f.multiplicities()) {
                let c = common_pts
                    .iter()
                    .position(|q| q == p)
                    .map_or(0, |i| common_mult[i]);
                if m > c {
                    pts.push(*p);
                    mult.push(m - c);
                }
            }
            BlaschkeProduct::with_multiplicities(ZeroSequence::new(pts)?, mult)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((GeneratorTuple::new(reduced, g.labels.clone())?, common))
}
