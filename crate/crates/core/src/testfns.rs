//! Random analytic functions for property checks.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::geometry::DiskPoint;
use crate::majorant::{harmonic_conjugate, BoundaryMeasure};

/// Number of boundary samples used to bound sup-norms.
pub const SUP_GRID: usize = 1 << 14;

/// A polynomial with `sup_𝔻 |p| ≤ 1`.
///
/// The grid maximum `m` over [`SUP_GRID`] roots of unity bounds the sup-norm
/// through Bernstein's inequality: `|p| ≤ m / (1 - π d / M)` on the circle.
/// Coefficients are divided by that bound, so the normalization is exact,
/// not approximate.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPolynomial {
    coeffs: Vec<Complex64>,
}

impl TestPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty());
        assert!(PI * (coeffs.len() - 1) as f64 / (SUP_GRID as f64) < 0.5);
        let d = (coeffs.len() - 1) as f64;
        let grid_max = (0..SUP_GRID)
            .map(|j| horner(&coeffs, Complex64::from_polar(1.0, TAU * j as f64 / SUP_GRID as f64)).norm())
            .fold(0.0, f64::max);
        let bound = grid_max / (1.0 - PI * d / SUP_GRID as f64);
        let scale = if bound > 0.0 { 1.0 / bound } else { 1.0 };
        Self {
            coeffs: coeffs.into_iter().map(|c| c * scale).collect(),
        }
    }

    /// Degree in `1..=max_degree`, Gaussian-like coefficients.
    pub fn random<R: Rng>(rng: &mut R, max_degree: usize) -> Self {
        let d = rng.gen_range(1..=max_degree);
        let coeffs = (0..=d)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
        if d.is_empty() {
            Complex64::new(0.0, 0.0)
        } else {
            horner(&d, z)
        }
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `f = g · exp(H + i H̃)` with `‖g‖_∞ ≤ 1` and `H = P[μ]`, so that
/// `|f| ≤ e^{H}`.
#[derive(Clone, Debug)]
pub struct ExpPoisson {
    pub g: TestPolynomial,
    pub measure: BoundaryMeasure,
}

impl ExpPoisson {
    pub fn random<R: Rng>(rng: &mut R, max_atoms: usize, max_mass: f64) -> Self {
        let k = rng.gen_range(1..=max_atoms);
        let mut nodes: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * TAU).collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let weights = nodes.iter().map(|_| rng.gen::<f64>() * max_mass).collect();
        let measure = BoundaryMeasure::new(nodes, weights, 0.0).expect("valid measure");
        Self {
            g: TestPolynomial::random(rng, 4),
            measure,
        }
    }

    pub fn h(&self, z: &DiskPoint) -> f64 {
        self.measure.eval(z)
    }

    fn exponent(&self, z: &DiskPoint) -> Complex64 {
        Complex64::new(self.measure.eval(z), harmonic_conjugate(&self.measure, z))
    }

    /// Derivative of `H + i H̃ = Σ w_j (ζ_j + z)/(ζ_j - z)`.
    fn exponent_derivative(&self, z: Complex64) -> Complex64 {
        self.measure
            .nodes()
            .iter()
            .zip(self.measure.weights())
            .map(|(&t, &w)| {
                let zeta = Complex64::from_polar(1.0, t);
                let d = zeta - z;
                zeta * (2.0 * w) / (d * d)
            })
            .sum()
    }

    pub fn eval(&self, z: &DiskPoint) -> Complex64 {
        self.g.eval(z.value()) * self.exponent(z).exp()
    }

    pub fn derivative(&self, z: &DiskPoint) -> Complex64 {
        let zv = z.value();
        let e = self.exponent(z).exp();
        (self.g.derivative(zv) + self.g.eval(zv) * self.exponent_derivative(zv)) * e
    }
}
