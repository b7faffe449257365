//! Pseudohyperbolic geometry of the unit disk.
//!
//! All metric operations accept points in two forms: an explicit complex
//! value, or a value together with its exact offset from an anchor point
//! (`log ρ` and a direction in the chart centered at the anchor). The second
//! form carries distances far below what `f64` can resolve, e.g.
//! `log ρ = -2^30`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this to their anchor are kept in near-anchor form by
/// generators that produce them.
pub const NEAR_ANCHOR_THRESHOLD: f64 = 1e-12;

/// Smallest Euclidean radius a pseudohyperbolic disk may map to.
pub const MIN_EUCLIDEAN_RADIUS: f64 = 1e-300;

/// Exact offset of a point from an anchor.
///
/// The point is `ψ_a(e^{log_rho} · direction)` with `ψ_a(w) = (a + w)/(1 + ā w)`,
/// so `ρ(point, a) = e^{log_rho}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearAnchor {
    pub anchor: Complex64,
    pub log_rho: f64,
    pub direction: Complex64,
}

/// A point of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskPoint {
    value: Complex64,
    near: Option<NearAnchor>,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint {
        value: Complex64 { re: 0.0, im: 0.0 },
        near: None,
    };

    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_complex(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Result<Self> {
        Self::new(x, 0.0)
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm_sqr() >= 1.0 {
            return Err(Error::OutsideDisk { re: z.re, im: z.im });
        }
        Ok(Self {
            value: z,
            near: None,
        })
    }

    pub fn polar(r: f64, theta: f64) -> Result<Self> {
        Self::from_complex(Complex64::from_polar(r, theta))
    }

    /// Point at pseudohyperbolic distance `e^{log_rho}` from `anchor`, in the
    /// given direction of the chart centered at `anchor`.
    pub fn near(anchor: DiskPoint, log_rho: f64, direction: Complex64) -> Result<Self> {
        if log_rho.is_nan() || log_rho >= 0.0 || log_rho == f64::INFINITY {
            return Err(Error::InvalidArgument(format!(
                "near-anchor log_rho must be negative, got {log_rho}"
            )));
        }
        let norm = direction.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("direction must be nonzero".into()));
        }
        let direction = direction / norm;
        let a = anchor.value;
        let w = direction * log_rho.exp();
        let value = (a + w) / (Complex64::new(1.0, 0.0) + a.conj() * w);
        if value.norm_sqr() >= 1.0 {
            return Err(Error::OutsideDisk {
                re: value.re,
                im: value.im,
            });
        }
        Ok(Self {
            value,
            near: Some(NearAnchor {
                anchor: a,
                log_rho,
                direction,
            }),
        })
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }

    pub fn near_anchor(&self) -> Option<&NearAnchor> {
        self.near.as_ref()
    }

    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }

    pub fn arg(&self) -> f64 {
        self.value.arg()
    }

    /// `1 - |z|^2`, computed to avoid cancellation for points near the real axis.
    pub fn one_minus_abs2(&self) -> f64 {
        one_minus_abs2(self.value)
    }

    /// The explicit value recomputed from the near-anchor data, if any.
    pub fn reconstruct(&self) -> Option<Complex64> {
        self.near.map(|n| {
            let w = n.direction * n.log_rho.exp();
            (n.anchor + w) / (Complex64::new(1.0, 0.0) + n.anchor.conj() * w)
        })
    }
}

/// `1 - |z|^2` for a complex number of modulus at most one.
pub fn one_minus_abs2(z: Complex64) -> f64 {
    let x = z.re.abs();
    (1.0 - x).mul_add(1.0 + x, -z.im * z.im)
}

/// `1 - conj(z) w`, written so that nearby points near the circle keep their
/// relative accuracy.
fn one_minus_conj_product(z: Complex64, w: Complex64) -> Complex64 {
    Complex64::new(one_minus_abs2(z), 0.0) + z.conj() * (z - w)
}

/// Pseudohyperbolic distance `|z - w| / |1 - z̄ w|`.
pub fn pseudo_distance(z: &DiskPoint, w: &DiskPoint) -> f64 {
    if related(z, w) {
        return log_pseudo_distance(z, w).exp();
    }
    raw_pseudo_distance(z.value, w.value)
}

pub(crate) fn raw_pseudo_distance(z: Complex64, w: Complex64) -> f64 {
    // fixed argument order keeps the result bitwise symmetric
    let (z, w) = if (z.re, z.im) <= (w.re, w.im) { (z, w) } else { (w, z) };
    let num = (z - w).norm();
    if num == 0.0 {
        return 0.0;
    }
    (num / one_minus_conj_product(z, w).norm()).min(1.0)
}

fn related(z: &DiskPoint, w: &DiskPoint) -> bool {
    match (&z.near, &w.near) {
        (Some(a), None) => a.anchor == w.value,
        (None, Some(b)) => b.anchor == z.value,
        (Some(a), Some(b)) => a.anchor == b.anchor,
        (None, None) => false,
    }
}

/// `log ρ(z, w)`; exact for a near-anchor point measured against its anchor
/// and for two points sharing an anchor. Returns `-∞` iff `z == w`.
pub fn log_pseudo_distance(z: &DiskPoint, w: &DiskPoint) -> f64 {
    match (&z.near, &w.near) {
        (Some(a), None) if a.anchor == w.value => a.log_rho,
        (None, Some(b)) if b.anchor == z.value => b.log_rho,
        (Some(a), Some(b)) if a.anchor == b.anchor => {
            // Möbius invariance: distance equals that of the chart offsets.
            let (hi, lo) = if a.log_rho >= b.log_rho { (a, b) } else { (b, a) };
            let t = (lo.log_rho - hi.log_rho).exp();
            let diff = hi.direction - lo.direction * t;
            if diff.norm() == 0.0 {
                return f64::NEG_INFINITY;
            }
            // |1 - ū v| differs from 1 by at most e^{2 log_rho}.
            let u = hi.direction * hi.log_rho.exp();
            let v = lo.direction * lo.log_rho.exp();
            let denom = (Complex64::new(1.0, 0.0) - u.conj() * v).norm();
            hi.log_rho + diff.norm().ln() - denom.ln()
        }
        _ => {
            if z == w {
                return f64::NEG_INFINITY;
            }
            raw_pseudo_distance(z.value, w.value).ln()
        }
    }
}

/// Normalized Blaschke factor `b_λ(z) = (λ̄/|λ|)(λ - z)/(1 - λ̄ z)`, with
/// `b_0(z) = z`.
pub fn blaschke_factor(lambda: &DiskPoint, z: &DiskPoint) -> Complex64 {
    raw_blaschke_factor(lambda.value, z.value)
}

pub(crate) fn raw_blaschke_factor(lambda: Complex64, z: Complex64) -> Complex64 {
    let r = lambda.norm();
    if r == 0.0 {
        return z;
    }
    let unit = lambda.conj() / r;
    unit * (lambda - z) / one_minus_conj_product(lambda, z)
}

/// Derivative of [`blaschke_factor`] in `z`.
pub(crate) fn raw_blaschke_factor_derivative(lambda: Complex64, z: Complex64) -> Complex64 {
    let r = lambda.norm();
    if r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let unit = lambda.conj() / r;
    let d = Complex64::new(1.0, 0.0) - lambda.conj() * z;
    -unit * one_minus_abs2(lambda) / (d * d)
}

/// Poisson kernel `(1 - |z|^2)/|ζ - z|^2` for `|ζ| = 1`.
pub fn poisson_kernel(z: &DiskPoint, zeta: Complex64) -> f64 {
    debug_assert!((zeta.norm() - 1.0).abs() < 1e-9);
    raw_poisson_kernel(z.value, zeta)
}

pub(crate) fn raw_poisson_kernel(z: Complex64, zeta: Complex64) -> f64 {
    one_minus_abs2(z) / (zeta - z).norm_sqr()
}

/// The same kernel written as `Re((ζ + z)/(ζ - z))`.
pub fn poisson_kernel_re(z: &DiskPoint, zeta: Complex64) -> f64 {
    ((zeta + z.value) / (zeta - z.value)).re
}

/// Harnack constants `((1-ρ)/(1+ρ), (1+ρ)/(1-ρ))`.
pub fn harnack_bounds(rho: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!(
            "Harnack bounds need rho in [0,1), got {rho}"
        )));
    }
    Ok(((1.0 - rho) / (1.0 + rho), (1.0 + rho) / (1.0 - rho)))
}

/// The automorphism `φ_a(z) = (a - z)/(1 - ā z)` exchanging `0` and `a`.
pub fn mobius(a: &DiskPoint, z: &DiskPoint) -> DiskPoint {
    let v = (a.value - z.value) / one_minus_conj_product(a.value, z.value);
    let v = if v.norm_sqr() >= 1.0 {
        // rounding at the circle; pull back by one ulp
        v / (v.norm() * (1.0 + f64::EPSILON))
    } else {
        v
    };
    DiskPoint {
        value: v,
        near: None,
    }
}

/// Pseudohyperbolic disk `D(center, e^{log_radius})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoDisk {
    pub center: DiskPoint,
    pub log_radius: f64,
}

/// A Euclidean disk in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: Complex64,
    pub radius: f64,
}

impl PseudoDisk {
    pub fn new(center: DiskPoint, log_radius: f64) -> Result<Self> {
        if !(log_radius < 0.0) || log_radius.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "pseudo-disk radius must lie in (0,1), got log radius {log_radius}"
            )));
        }
        Ok(Self { center, log_radius })
    }

    pub fn with_radius(center: DiskPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pseudo-disk radius must lie in (0,1), got {radius}"
            )));
        }
        Self::new(center, radius.ln())
    }

    pub fn radius(&self) -> f64 {
        self.log_radius.exp()
    }

    pub fn contains(&self, w: &DiskPoint) -> bool {
        log_pseudo_distance(&self.center, w) < self.log_radius
    }

    /// Euclidean image of the disk.
    pub fn to_euclidean(&self) -> Result<EuclideanDisk> {
        pseudo_to_euclidean(self)
    }
}

/// The Euclidean disk `{w : ρ(w, center) < r}`: center `a(1-r²)/(1-r²|a|²)`,
/// radius `r(1-|a|²)/(1-r²|a|²)`.
pub fn pseudo_to_euclidean(d: &PseudoDisk) -> Result<EuclideanDisk> {
    let a = d.center.value;
    let r = d.radius();
    let r2 = r * r;
    let denom = 1.0 - r2 * a.norm_sqr();
    let center = a * ((1.0 - r2) / denom);
    let radius = r * d.center.one_minus_abs2() / denom;
    if !(radius >= MIN_EUCLIDEAN_RADIUS) {
        return Err(Error::RadiusUnderflow(radius));
    }
    Ok(EuclideanDisk { center, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(re: f64, im: f64) -> DiskPoint {
        DiskPoint::new(re, im).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng) -> DiskPoint {
        let r = rng.gen::<f64>().sqrt() * 0.999;
        DiskPoint::polar(r, rng.gen::<f64>() * std::f64::consts::TAU).unwrap()
    }

    #[test]
    fn rejects_points_outside() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(DiskPoint::new(0.8, 0.6).is_err());
        assert!(DiskPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(pseudo_distance(&DiskPoint::ORIGIN, &p(0.5, 0.0)), 0.5);
        assert!((pseudo_distance(&p(0.5, 0.0), &p(-0.5, 0.0)) - 0.8).abs() < 1e-15);
        let z = p(0.3, -0.2);
        assert_eq!(pseudo_distance(&z, &z), 0.0);
        assert_eq!(log_pseudo_distance(&z, &z), f64::NEG_INFINITY);
    }

    #[test]
    fn factor_examples() {
        let l = p(0.5, 0.0);
        assert_eq!(blaschke_factor(&l, &l), Complex64::new(0.0, 0.0));
        let v = blaschke_factor(&l, &DiskPoint::ORIGIN);
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let z = p(0.3, 0.4);
        assert_eq!(blaschke_factor(&DiskPoint::ORIGIN, &z), z.value());
    }

    #[test]
    fn factor_modulus_is_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (l, z) = (random_point(&mut rng), random_point(&mut rng));
            let b = blaschke_factor(&l, &z).norm();
            assert!((b - pseudo_distance(&l, &z)).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_kernel_forms_agree() {
        assert!((poisson_kernel(&DiskPoint::ORIGIN, Complex64::new(0.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((poisson_kernel(&p(0.5, 0.0), Complex64::new(1.0, 0.0)) - 3.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let z = random_point(&mut rng);
            let zeta = Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
            let a = poisson_kernel(&z, zeta);
            let b = poisson_kernel_re(&z, zeta);
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn harnack_examples() {
        assert_eq!(harnack_bounds(0.0).unwrap(), (1.0, 1.0));
        let (lo, hi) = harnack_bounds(0.5).unwrap();
        assert!((lo - 1.0 / 3.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        assert!((lo * hi - 1.0).abs() < 1e-15);
        assert!(harnack_bounds(1.0).is_err());
        assert!(harnack_bounds(-0.1).is_err());
    }

    #[test]
    fn euclidean_image_examples() {
        let d = PseudoDisk::with_radius(DiskPoint::ORIGIN, 0.3).unwrap();
        let e = d.to_euclidean().unwrap();
        assert!(e.center.norm() < 1e-15 && (e.radius - 0.3).abs() < 1e-15);

        // On the real diameter the boundary solves |x - 1/2|/|1 - x/2| = 1/2,
        // i.e. x = 0 and x = 4/5.
        let d = PseudoDisk::with_radius(p(0.5, 0.0), 0.5).unwrap();
        let e = d.to_euclidean().unwrap();
        assert!((e.center.re - 0.4).abs() < 1e-15 && e.center.im.abs() < 1e-15);
        assert!((e.radius - 0.4).abs() < 1e-15);
        for x in [0.0, 0.8] {
            assert!((pseudo_distance(&p(x, 0.0), &p(0.5, 0.0)) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn euclidean_image_boundary_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let c = random_point(&mut rng);
            let r = rng.gen_range(0.01..0.95);
            let e = PseudoDisk::with_radius(c, r).unwrap().to_euclidean().unwrap();
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            let w = e.center + Complex64::from_polar(e.radius, t);
            if w.norm_sqr() >= 1.0 {
                continue;
            }
            let d = pseudo_distance(&DiskPoint::from_complex(w).unwrap(), &c);
            assert!((d - r).abs() < 1e-10, "{d} vs {r}");
        }
    }

    #[test]
    fn euclidean_underflow_is_signalled() {
        let d = PseudoDisk::new(p(0.5, 0.0), -800.0).unwrap();
        assert!(matches!(d.to_euclidean(), Err(Error::RadiusUnderflow(_))));
    }

    #[test]
    fn mobius_examples_and_invariance() {
        let a = p(0.3, 0.6);
        assert!((mobius(&a, &DiskPoint::ORIGIN).value() - a.value()).norm() < 1e-15);
        assert!(mobius(&a, &a).value().norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let (a, z, w) = (
                random_point(&mut rng),
                random_point(&mut rng),
                random_point(&mut rng),
            );
            let back = mobius(&a, &mobius(&a, &z));
            assert!((back.value() - z.value()).norm() < 1e-12);
            let d0 = pseudo_distance(&z, &w);
            let d1 = pseudo_distance(&mobius(&a, &z), &mobius(&a, &w));
            assert!((d0 - d1).abs() < 1e-12, "{d0} {d1}");
        }
    }

    #[test]
    fn strong_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let (z, u, w) = (
                random_point(&mut rng),
                random_point(&mut rng),
                random_point(&mut rng),
            );
            let (a, b) = (pseudo_distance(&z, &u), pseudo_distance(&u, &w));
            assert!(pseudo_distance(&z, &w) <= (a + b) / (1.0 + a * b) + 1e-12);
            assert_eq!(pseudo_distance(&z, &w), pseudo_distance(&w, &z));
        }
    }

    #[test]
    fn near_anchor_reconstruction_and_log_distance() {
        let a = p(0.4, -0.3);
        for log_rho in [-1.0, -5.0, -20.0, -30.0] {
            let z = DiskPoint::near(a, log_rho, Complex64::new(0.6, 0.8)).unwrap();
            let rec = z.reconstruct().unwrap();
            assert!((rec - z.value()).norm() <= 1e-9 * z.value().norm());
            assert_eq!(log_pseudo_distance(&z, &a), log_rho);
            assert_eq!(log_pseudo_distance(&a, &z), log_rho);
            let direct = raw_pseudo_distance(a.value(), rec).ln();
            if log_rho >= -20.0 {
                assert!((direct - log_rho).abs() < 1e-6);
            }
        }
        let z = DiskPoint::near(a, -1e6, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(z.value(), a.value());
        assert_eq!(log_pseudo_distance(&z, &a), -1e6);
        assert!(pseudo_distance(&z, &a) == 0.0);
    }

    #[test]
    fn shared_anchor_distance() {
        let a = p(0.9, 0.0);
        let u = DiskPoint::near(a, -1000.0, Complex64::new(1.0, 0.0)).unwrap();
        let v = DiskPoint::near(a, -1000.0, Complex64::new(-1.0, 0.0)).unwrap();
        let d = log_pseudo_distance(&u, &v);
        assert!((d - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        let w = DiskPoint::near(a, -1010.0, Complex64::new(1.0, 0.0)).unwrap();
        let d = log_pseudo_distance(&u, &w);
        assert!((d - (-1000.0 + (1.0 - (-10f64).exp()).ln())).abs() < 1e-12);
    }
}
