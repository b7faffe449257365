//! Finite Blaschke products.
//!
//! Moduli are accumulated as sums of `log ρ` so products of thousands of
//! small factors never underflow. Deleted products exclude the index instead
//! of dividing by a vanishing factor.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    log_pseudo_distance, raw_blaschke_factor, raw_blaschke_factor_derivative, DiskPoint,
};

/// An ordered list of distinct points of the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSequence {
    points: Vec<DiskPoint>,
    blaschke_sum: f64,
}

impl ZeroSequence {
    pub fn new(points: Vec<DiskPoint>) -> Result<Self> {
        for i in 0..points.len() {
            for j in 0..i {
                if log_pseudo_distance(&points[i], &points[j]) == f64::NEG_INFINITY {
                    return Err(Error::DuplicateZero(j, i));
                }
            }
        }
        let blaschke_sum = blaschke_sum(&points);
        Ok(Self {
            points,
            blaschke_sum,
        })
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

    /// `Σ (1 - |λ_n|)`.
    pub fn blaschke_sum(&self) -> f64 {
        self.blaschke_sum
    }

    pub fn truncate(&self, n: usize) -> ZeroSequence {
        let points: Vec<_> = self.points.iter().take(n).copied().collect();
        let blaschke_sum = blaschke_sum(&points);
        ZeroSequence {
            points,
            blaschke_sum,
        }
    }

    /// `Σ_{k≠n} log ρ(λ_k, λ_n)`, i.e. `log |B_n(λ_n)|`.
    pub fn deleted_log_product(&self, n: usize) -> f64 {
        let target = &self.points[n];
        self.points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != n)
            .map(|(_, p)| log_pseudo_distance(p, target))
            .sum()
    }

    /// Same sum restricted to `{k ≠ n : ρ(λ_k, λ_n) ≤ c}`.
    pub fn local_log_product(&self, n: usize, c: f64) -> f64 {
        let log_c = c.ln();
        let target = &self.points[n];
        self.points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != n)
            .map(|(_, p)| log_pseudo_distance(p, target))
            .filter(|&l| l <= log_c)
            .sum()
    }

    /// Carleson's constant `inf_n |B_n(λ_n)|` of the finite sequence.
    pub fn carleson_delta(&self) -> f64 {
        (0..self.len())
            .map(|n| self.deleted_log_product(n))
            .fold(0.0_f64, f64::min)
            .exp()
    }

    /// `min_{k≠n} ρ(λ_k, λ_n)`; a singleton reports 1.
    pub fn separation(&self) -> f64 {
        self.log_separation().exp()
    }

    pub fn log_separation(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.len() {
            for j in 0..i {
                best = best.min(log_pseudo_distance(&self.points[i], &self.points[j]));
            }
        }
        best
    }

    /// `log ρ(z, Λ)`.
    pub fn log_distance_to(&self, z: &DiskPoint) -> f64 {
        self.points
            .iter()
            .map(|p| log_pseudo_distance(p, z))
            .fold(0.0_f64, f64::min)
    }

    /// Index of the pseudohyperbolically nearest point.
    pub fn nearest(&self, z: &DiskPoint) -> Option<usize> {
        self.points
            .iter()
            .map(|p| log_pseudo_distance(p, z))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

fn blaschke_sum(points: &[DiskPoint]) -> f64 {
    points
        .iter()
        .map(|p| p.one_minus_abs2() / (1.0 + p.modulus()))
        .sum()
}

/// Whether evaluations of `log |B|` are memoized per point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CachePolicy {
    #[default]
    None,
    PerPointMemo,
}

/// A finite Blaschke product, zeros counted with multiplicity.
#[derive(Debug)]
pub struct BlaschkeProduct {
    zeros: ZeroSequence,
    multiplicities: Vec<u32>,
    policy: CachePolicy,
    memo: RwLock<HashMap<(u64, u64), f64>>,
}

impl Clone for BlaschkeProduct {
    fn clone(&self) -> Self {
        Self {
            zeros: self.zeros.clone(),
            multiplicities: self.multiplicities.clone(),
            policy: self.policy,
            memo: RwLock::new(HashMap::new()),
        }
    }
}

impl PartialEq for BlaschkeProduct {
    fn eq(&self, other: &Self) -> bool {
        self.zeros == other.zeros && self.multiplicities == other.multiplicities
    }
}

impl BlaschkeProduct {
    pub fn new(zeros: ZeroSequence) -> Self {
        let multiplicities = vec![1; zeros.len()];
        Self::with_multiplicities(zeros, multiplicities).expect("unit multiplicities")
    }

    pub fn from_points(points: Vec<DiskPoint>) -> Result<Self> {
        Ok(Self::new(ZeroSequence::new(points)?))
    }

    pub fn with_multiplicities(zeros: ZeroSequence, multiplicities: Vec<u32>) -> Result<Self> {
        if multiplicities.len() != zeros.len() || multiplicities.iter().any(|&m| m == 0) {
            return Err(Error::InvalidArgument(
                "one positive multiplicity per zero required".into(),
            ));
        }
        Ok(Self {
            zeros,
            multiplicities,
            policy: CachePolicy::None,
            memo: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_cache(mut self, policy: CachePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn zeros(&self) -> &ZeroSequence {
        &self.zeros
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Total number of zeros counted with multiplicity.
    pub fn degree(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// `B^k`, realized by scaling multiplicities.
    pub fn pow(&self, k: u32) -> Self {
        let m = self.multiplicities.iter().map(|&m| m * k).collect();
        Self::with_multiplicities(self.zeros.clone(), m).expect("positive power")
    }

    /// Product of two Blaschke products; shared zeros add multiplicities.
    pub fn mul(&self, other: &Self) -> Self {
        let mut points = self.zeros.points.clone();
        let mut mult = self.multiplicities.clone();
        for (p, &m) in other.zeros.points.iter().zip(&other.multiplicities) {
            match points.iter().position(|q| q == p) {
                Some(i) => mult[i] += m,
                None => {
                    points.push(*p);
                    mult.push(m);
                }
            }
        }
        let zeros = ZeroSequence::new(points).expect("distinct by construction");
        Self::with_multiplicities(zeros, mult).expect("positive multiplicities")
    }

    /// `log |B(z)| = Σ m_k log ρ(z, λ_k)`; `-∞` exactly at zeros.
    pub fn eval_log_modulus(&self, z: &DiskPoint) -> f64 {
        if self.policy == CachePolicy::PerPointMemo {
            let key = (z.re().to_bits(), z.im().to_bits());
            if z.near_anchor().is_none() {
                if let Some(&v) = self.memo.read().expect("memo lock").get(&key) {
                    return v;
                }
                let v = self.log_modulus_uncached(z);
                self.memo.write().expect("memo lock").insert(key, v);
                return v;
            }
        }
        self.log_modulus_uncached(z)
    }

    fn log_modulus_uncached(&self, z: &DiskPoint) -> f64 {
        self.zeros
            .points
            .iter()
            .zip(&self.multiplicities)
            .map(|(p, &m)| m as f64 * log_pseudo_distance(p, z))
            .sum()
    }

    /// `B(z)`, assembled as `exp(log|B|)` times the product of unit phases.
    pub fn eval(&self, z: &DiskPoint) -> Complex64 {
        let mut log_mod = 0.0;
        let mut phase = Complex64::new(1.0, 0.0);
        for (p, &m) in self.zeros.points.iter().zip(&self.multiplicities) {
            let l = log_pseudo_distance(p, z);
            if l == f64::NEG_INFINITY {
                return Complex64::new(0.0, 0.0);
            }
            log_mod += m as f64 * l;
            let b = raw_blaschke_factor(p.value(), z.value());
            let n = b.norm();
            if n > 0.0 {
                phase *= (b / n).powu(m);
            }
        }
        phase * log_mod.exp()
    }

    /// `B'(z) = Σ_n (B/b_{λ_n})(z) b'_{λ_n}(z)` with multiplicities.
    pub fn eval_derivative(&self, z: &DiskPoint) -> Complex64 {
        let zv = z.value();
        if let Some(n) = self
            .zeros
            .points
            .iter()
            .position(|p| log_pseudo_distance(p, z) == f64::NEG_INFINITY)
        {
            if self.multiplicities[n] > 1 {
                return Complex64::new(0.0, 0.0);
            }
            return self.deleted_eval(n, z)
                * raw_blaschke_factor_derivative(self.zeros.points[n].value(), zv);
        }
        let b = self.eval(z);
        let mut log_derivative = Complex64::new(0.0, 0.0);
        for (p, &m) in self.zeros.points.iter().zip(&self.multiplicities) {
            let f = raw_blaschke_factor(p.value(), zv);
            if f.norm() == 0.0 {
                // value rounds onto a zero whose near-anchor offset we cannot
                // resolve; the deleted product carries the magnitude.
                let n = self.zeros.points.iter().position(|q| q == p).expect("present");
                return self.deleted_eval(n, z) * raw_blaschke_factor_derivative(p.value(), zv);
            }
            log_derivative += raw_blaschke_factor_derivative(p.value(), zv) / f * m as f64;
        }
        b * log_derivative
    }

    /// `B_n(z)`: the product with one copy of the `n`-th zero removed.
    fn deleted_eval(&self, n: usize, z: &DiskPoint) -> Complex64 {
        let mut log_mod = 0.0;
        let mut phase = Complex64::new(1.0, 0.0);
        for (k, (p, &m)) in self.zeros.points.iter().zip(&self.multiplicities).enumerate() {
            let m = if k == n { m - 1 } else { m };
            if m == 0 {
                continue;
            }
            let l = log_pseudo_distance(p, z);
            if l == f64::NEG_INFINITY {
                return Complex64::new(0.0, 0.0);
            }
            log_mod += m as f64 * l;
            let b = raw_blaschke_factor(p.value(), z.value());
            let nb = b.norm();
            if nb > 0.0 {
                phase *= (b / nb).powu(m);
            }
        }
        phase * log_mod.exp()
    }

    /// `log |B_n(λ_n)|` for a simple zero.
    pub fn deleted_log_product(&self, n: usize) -> f64 {
        let target = &self.zeros.points[n];
        self.zeros
            .points
            .iter()
            .zip(&self.multiplicities)
            .enumerate()
            .map(|(k, (p, &m))| {
                let m = if k == n { m - 1 } else { m };
                if m == 0 {
                    0.0
                } else {
                    m as f64 * log_pseudo_distance(p, target)
                }
            })
            .sum()
    }

    /// `log((1 - |z|²)|B'(z)|)`, stable when `|B(z)|` underflows.
    ///
    /// Uses `(1 - |z|²) B'/B = Σ m_k (1 - |z|²) b'_k/b_k`, whose terms have
    /// modulus `(1 - ρ_k²)/ρ_k` with `ρ_k` taken from the log distance.
    pub fn log_scaled_derivative(&self, z: &DiskPoint) -> f64 {
        let zv = z.value();
        let logs: Vec<f64> = self
            .zeros
            .points
            .iter()
            .map(|p| log_pseudo_distance(p, z))
            .collect();
        if let Some(n) = logs.iter().position(|&l| l == f64::NEG_INFINITY) {
            if self.multiplicities[n] > 1 {
                return f64::NEG_INFINITY;
            }
            // (1 - |λ|²)|B'(λ)| = |B_n(λ)|
            return self.deleted_log_product(n);
        }
        if logs.is_empty() {
            return f64::NEG_INFINITY;
        }
        let log_b: f64 = logs
            .iter()
            .zip(&self.multiplicities)
            .map(|(l, &m)| m as f64 * l)
            .sum();
        // log |m_k u_k| and the unit phase of u_k
        let terms: Vec<(f64, Complex64)> = self
            .zeros
            .points
            .iter()
            .zip(&self.multiplicities)
            .zip(&logs)
            .map(|((p, &m), &l)| {
                let modulus = (-(2.0 * l).exp()).ln_1p() - l + (m as f64).ln();
                let b = raw_blaschke_factor(p.value(), zv);
                let d = raw_blaschke_factor_derivative(p.value(), zv);
                let u = d / b;
                let phase = if u.norm().is_finite() && u.norm() > 0.0 {
                    u / u.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                (modulus, phase)
            })
            .collect();
        let top = terms
            .iter()
            .map(|t| t.0)
            .fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: Complex64 = terms.iter().map(|(l, ph)| ph * (l - top).exp()).sum();
        log_b + top + s.norm().ln()
    }

    /// `log |B(z)| - log ρ(z, Λ)`: the modulus with the nearest factor removed.
    pub fn log_modulus_off_nearest(&self, z: &DiskPoint) -> f64 {
        match self.zeros.nearest(z) {
            None => 0.0,
            Some(n) => {
                let target = z;
                self.zeros
                    .points
                    .iter()
                    .zip(&self.multiplicities)
                    .enumerate()
                    .map(|(k, (p, &m))| {
                        let m = if k == n { m - 1 } else { m };
                        if m == 0 {
                            0.0
                        } else {
                            m as f64 * log_pseudo_distance(p, target)
                        }
                    })
                    .sum()
            }
        }
    }
}
