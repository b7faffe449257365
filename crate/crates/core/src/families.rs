//! Test sequences.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::blaschke::ZeroSequence;
use crate::error::{Error, Result};
use crate::geometry::DiskPoint;

fn check_n(n_max: usize) -> Result<()> {
    if n_max == 0 || n_max > 60 {
        return Err(Error::InvalidArgument(format!(
            "n_max must lie in 1..=60, got {n_max}"
        )));
    }
    Ok(())
}

/// `λ_n = 1 - 2^{-n}`, `n = 1..=n_max`.
pub fn geometric(n_max: usize) -> Result<ZeroSequence> {
    check_n(n_max)?;
    let pts = (1..=n_max)
        .map(|n| DiskPoint::real(1.0 - (-(n as f64)).exp2()))
        .collect::<Result<Vec<_>>>()?;
    ZeroSequence::new(pts)
}

/// The geometric sequence on the rays of angle 0 and π/2, interleaved.
pub fn two_ray(n_max: usize) -> Result<ZeroSequence> {
    check_n(n_max)?;
    let mut pts = Vec::with_capacity(2 * n_max);
    for n in 1..=n_max {
        let r = 1.0 - (-(n as f64)).exp2();
        pts.push(DiskPoint::real(r)?);
        pts.push(DiskPoint::polar(r, FRAC_PI_2)?);
    }
    ZeroSequence::new(pts)
}

/// `λ_n = 1 - 1/n` (`n = 2..=n_max`) paired with `λ'_n` at pseudohyperbolic
/// distance `exp(-exp(1/(1 - λ_n)))`, stored in near-anchor form.
pub fn close_pairs(n_max: usize) -> Result<ZeroSequence> {
    if !(2..=700).contains(&n_max) {
        return Err(Error::InvalidArgument(format!(
            "n_max must lie in 2..=700, got {n_max}"
        )));
    }
    let mut pts = Vec::with_capacity(2 * (n_max - 1));
    for n in 2..=n_max {
        let lambda = DiskPoint::real(1.0 - 1.0 / n as f64)?;
        pts.push(lambda);
        let log_rho = -(n as f64).exp();
        pts.push(DiskPoint::near(lambda, log_rho, Complex64::new(0.0, 1.0))?);
    }
    ZeroSequence::new(pts)
}
