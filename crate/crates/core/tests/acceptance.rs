//! Acceptance gate. Runs criteria 1-8 and prints one PASS/FAIL line each;
//! exits nonzero if any criterion fails.
//!
//! Run with `cargo test --release -p disklab --test acceptance`.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use disklab::blaschke::{BlaschkeProduct, ZeroSequence};
use disklab::constructions::{
    perturb_and_recheck, run_counterexample, split_product, CounterexampleOptions,
};
use disklab::families::{close_pairs, geometric, two_ray};
use disklab::geometry::pseudo_distance;
use disklab::harmonic_measure::{
    condition_d_check, condition_d_check_values, wos_estimate, ConditionDOptions, ConditionDReport,
    HoleDomain,
};
use disklab::ideals::{fit_condition_b_majorant, fit_condition_c_majorant, GeneratorTuple, SampleGrid};
use disklab::majorant::{check_nis, classify_growth, fit_min_majorant, FitOptions, Growth, MajorantFit};
use disklab::testfns::TestPolynomial;
use disklab::{Complex64, DiskPoint, PseudoDisk};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

// ---------------------------------------------------------------- 1

const RHO_GRID: [f64; 5] = [0.2, 0.35, 0.5, 0.65, 0.8];
const DELTA_GRID: [f64; 5] = [0.01, 0.03, 0.05, 0.1, 0.15];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let lambda = ok(DiskPoint::new(0.3, 0.2))?;
    let mut worst: f64 = 0.0;
    for (i, &rho) in RHO_GRID.iter().enumerate() {
        for (j, &delta) in DELTA_GRID.iter().enumerate() {
            let dir = Complex64::from_polar(1.0, TAU * (5 * i + j) as f64 / 25.0);
            let z = ok(DiskPoint::near(lambda, rho.ln(), dir))?;
            let z = ok(DiskPoint::from_complex(z.value()))?;
            let domain = ok(HoleDomain::new(vec![(0, ok(PseudoDisk::with_radius(lambda, delta))?)]))?;
            let est = ok(wos_estimate(&domain, &z, 100_000, 1e-4, (5 * i + j) as u64))?;
            // ω of the circle is 1 - log(1/ρ)/log(1/δ)
            let exact = 1.0 - rho.ln() / delta.ln();
            let tol = (3.0 * est.stderr).max(0.01);
            let err = (est.mean - exact).abs();
            ensure(err <= tol, || {
                format!("ρ={rho} δ={delta}: estimate {} exact {exact} tol {tol}", est.mean)
            })?;
            worst = worst.max(err / tol);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("25 points, worst error/tolerance {worst:.3}, {secs:.2} s"))
}

// ---------------------------------------------------------------- 2

fn all_above(rep: &ConditionDReport, bound: f64) -> Result<f64, String> {
    ensure(rep.disjoint, || format!("holes overlap: {:?}", rep.overlap))?;
    for e in &rep.estimates {
        let floor = bound - 3.0 * e.estimate.stderr;
        ensure(e.value >= floor, || format!("ω at {} is {} < {floor}", e.index, e.value))?;
    }
    Ok(rep.minimum.unwrap_or(f64::NAN))
}

fn criterion_2() -> Outcome {
    let seq = ok(geometric(10))?;
    let m = (0..seq.len())
        .map(|n| -seq.deleted_log_product(n))
        .fold(0.0, f64::max);
    let opts = ConditionDOptions {
        walks: 10_000,
        // all other points are holes
        neighbor_cutoff: 1.0 - 1e-9,
        seed: 2,
        ..ConditionDOptions::default()
    };
    let four = ok(condition_d_check_values(&seq, &vec![4.0 * m; seq.len()], &opts))?;
    let min4 = all_above(&four, 0.25)?;
    let twelve = ok(condition_d_check_values(&seq, &vec![12.0 * m; seq.len()], &opts))?;
    let min12 = all_above(&twelve, 0.75)?;
    Ok(format!("max deleted bound {m:.4}; min ω {min4:.4} (4H), {min12:.4} (12H)"))
}

// ---------------------------------------------------------------- 3

struct Certificates {
    a: MajorantFit,
    b: MajorantFit,
    c: MajorantFit,
    d: ConditionDReport,
}

fn certificates(seq: &ZeroSequence, seed: u64) -> Result<Certificates, String> {
    let opts = FitOptions::default();
    let a = ok(check_nis(seq, &opts))?;
    let grid = ok(SampleGrid::whitney(10, 8))?.with_points(seq.points());
    let prod = BlaschkeProduct::new(seq.clone());
    let b = ok(fit_condition_b_majorant(&prod, &grid, &opts))?;
    let c = ok(fit_condition_c_majorant(&ok(GeneratorTuple::unlabeled(vec![prod]))?, &grid, &opts))?;
    let d_opts = ConditionDOptions {
        walks: 10_000,
        seed,
        ..ConditionDOptions::default()
    };
    let d = ok(condition_d_check(seq, &a.measure.scaled(4.0), &d_opts))?;
    Ok(Certificates { a, b, c, d })
}

fn bounded_family(name: &str, small: &ZeroSequence, large: &ZeroSequence) -> Result<String, String> {
    let s = certificates(small, 31)?;
    let l = certificates(large, 31)?;
    for (tag, f, g) in [("a", &s.a, &l.a), ("b", &s.b, &l.b), ("c", &s.c, &l.c)] {
        ensure(f.is_optimal() && g.is_optimal(), || format!("{name} ({tag}) hit the mass cap"))?;
        ensure(classify_growth(f.objective, g.objective) == Growth::Bounded, || {
            format!("{name} ({tag}) mass {} -> {}", f.objective, g.objective)
        })?;
    }
    all_above(&s.d, 0.25).map_err(|e| format!("{name} (d) small: {e}"))?;
    let dmin = all_above(&l.d, 0.25).map_err(|e| format!("{name} (d): {e}"))?;
    Ok(format!(
        "{name}: a {:.3}->{:.3}, ω≥{dmin:.3}",
        s.a.objective, l.a.objective
    ))
}

/// Kernel bound: `H(z) ≥ c` forces mass `≥ c (1-|z|)/(1+|z|)`. For the close
/// pairs the partner alone contributes `e^n` to `-log|B_k(λ_k)|`.
fn close_pair_mass_floor(n_max: usize) -> f64 {
    (2..=n_max)
        .map(|n| {
            let x = 1.0 - 1.0 / n as f64;
            (n as f64).exp() * (1.0 - x) / (1.0 + x)
        })
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    notes.push(bounded_family("geometric", &ok(geometric(6))?, &ok(geometric(12))?)?);
    notes.push(bounded_family("two-ray", &ok(two_ray(6))?, &ok(two_ray(12))?)?);

    let base = ok(geometric(12))?;
    let h = ok(check_nis(&base, &FitOptions::default()))?.measure;
    let d_opts = ConditionDOptions {
        walks: 10_000,
        seed: 5,
        ..ConditionDOptions::default()
    };
    let pert = ok(perturb_and_recheck(&base, &h, 0.25, 17, &FitOptions::default(), &d_opts))?;
    ensure(pert.disks_disjoint, || "perturbed disks overlap".into())?;
    ensure(
        pert.perturbed_mass <= 8.0 * pert.original_mass && pert.original_mass <= 8.0 * pert.perturbed_mass,
        || format!("perturbed mass {} vs {}", pert.perturbed_mass, pert.original_mass),
    )?;
    for (k, l) in pert.displacement_log_rho.iter().enumerate() {
        let limit = 0.25f64.ln() - h.eval(&base.points()[k]);
        ensure(*l <= limit + 1e-12, || format!("point {k} moved too far"))?;
    }
    notes.push(bounded_family("perturbed", &pert.perturbed.truncate(6), &pert.perturbed)?);

    let opts = FitOptions::default();
    let small = ok(check_nis(&ok(close_pairs(6))?, &opts))?;
    let large = ok(check_nis(&ok(close_pairs(12))?, &opts))?;
    for (fit, n) in [(&small, 6), (&large, 12)] {
        let floor = close_pair_mass_floor(n);
        ensure(fit.objective >= floor * (1.0 - 1e-9), || {
            format!("close pairs n={n}: mass {} below kernel floor {floor}", fit.objective)
        })?;
    }
    let ratio = large.objective / small.objective;
    ensure(ratio >= 100.0, || format!("close-pair growth only {ratio}"))?;
    notes.push(format!("close pairs growth x{ratio:.0}"));
    Ok(notes.join("; "))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let run = ok(run_counterexample(12, &CounterexampleOptions::default()))?;
    ensure(run.max_residual <= 1e-9, || format!("residual {}", run.max_residual))?;
    ensure(run.mu.windows(2).all(|w| w[1].re() > w[0].re()), || "μ not increasing".into())?;
    // clusters recomputed from the rows
    let pick = |parity: usize| {
        let v: Vec<f64> = (6..=12).filter(|n| n % 2 == parity).map(|n| run.q[n - 1]).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (even, odd) = (pick(0), pick(1));
    ensure((even + 2.0).abs() <= 0.3, || format!("even cluster {even}"))?;
    ensure((odd + 4.0).abs() <= 0.6, || format!("odd cluster {odd}"))?;
    let gap = (even - odd).abs();
    ensure(gap >= 1.0, || format!("gap {gap}"))?;

    // c·H₀ with H₀ = (1-|z|²)/|1-z|² meeting every corona constraint
    let b1 = ok(run.b1())?;
    let b2 = ok(run.b2())?;
    let mut pts: Vec<DiskPoint> = b1.zeros().points()[..12].to_vec();
    pts.extend_from_slice(&run.mu);
    let grid = ok(SampleGrid::whitney(10, 8))?.with_points(&pts);
    let mut c: f64 = 0.0;
    for z in grid.points() {
        let (l1, l2) = (b1.eval_log_modulus(z), b2.eval_log_modulus(z));
        let hi = l1.max(l2);
        let bound = -(hi + (l1.min(l2) - hi).exp().ln_1p());
        let h0 = z.one_minus_abs2() / (Complex64::new(1.0, 0.0) - z.value()).norm_sqr();
        c = c.max(bound / h0);
    }
    let u = run.unimodularity.as_ref().ok_or("no unimodularity fit")?;
    ensure(u.fit_mass <= 4.0 * c && u.fit_mass >= c / 4.0, || {
        format!("fit mass {} vs c·H₀ mass {c}", u.fit_mass)
    })?;
    Ok(format!(
        "residual {:.1e}, q even {even:.4}, odd {odd:.4}, gap {gap:.3}, fit/cH₀ {:.3}",
        run.max_residual,
        u.fit_mass / c
    ))
}

// ---------------------------------------------------------------- 5

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn product(xs: &[BigRational]) -> BigRational {
    xs.iter().fold(BigRational::one(), |a, b| a * b)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut tries, mut multi) = (0, 0u64, 0);
    while accepted < 10_000 {
        tries += 1;
        let n = rng.gen_range(2..=12);
        let scale = rng.gen_range(0.02..3.0);
        let mut m: Vec<f64> = (0..n)
            .map(|_| (-scale * -(1.0 - rng.gen::<f64>()).ln()).exp())
            .collect();
        m.sort_by(f64::total_cmp);
        let log_total: f64 = m.iter().map(|x| x.ln()).sum();
        let eta: f64 = (log_total * rng.gen_range(0.2..1.0)).exp();
        if m[0] == 0.0 || !(eta > 0.0 && eta < 1.0) {
            continue;
        }
        let q: Vec<BigRational> = m.iter().map(|&x| exact(x)).collect();
        let e = exact(eta);
        let valid = product(&q) <= e && {
            let t = product(&q[1..]);
            &t * &t <= e
        };
        if !valid {
            continue;
        }
        accepted += 1;
        let k = ok(split_product(&m, eta))?;
        ensure(k >= 1 && k < n, || format!("k = {k} for N = {n}"))?;
        let pre = product(&q[..k]);
        let tail = product(&q[k..]);
        let p4 = {
            let p2 = &pre * &pre;
            &p2 * &p2
        };
        ensure(p4 <= e, || format!("prefix bound fails: {m:?} η={eta} k={k}"))?;
        ensure(&tail * &tail <= e, || format!("tail bound fails: {m:?} η={eta} k={k}"))?;
        if k > 1 {
            multi += 1;
            let p = product(&q[..k - 1]);
            let p2 = &p * &p;
            ensure(&p2 * &p2 > e, || format!("k not minimal: {m:?} η={eta} k={k}"))?;
        }
    }
    Ok(format!("{accepted} instances from {tries} draws, {multi} with k > 1"))
}

// ---------------------------------------------------------------- 6

fn random_point(rng: &mut ChaCha8Rng, rmax: f64) -> DiskPoint {
    let r = rmax * rng.gen::<f64>().sqrt();
    DiskPoint::polar(r, TAU * rng.gen::<f64>()).unwrap()
}

/// A point at pseudohyperbolic distance `rho` from `z`.
fn at_distance(z: &DiskPoint, rho: f64, theta: f64) -> DiskPoint {
    let w = Complex64::from_polar(rho, theta);
    let a = z.value();
    DiskPoint::from_complex((a + w) / (Complex64::new(1.0, 0.0) + a.conj() * w)).unwrap()
}

/// `B` and `B'` by the product rule, for the property checks.
fn direct_b(zeros: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let mut b = one;
    let mut sum = Complex64::new(0.0, 0.0);
    for &a in zeros {
        let unit = if a.norm() == 0.0 { -one } else { a.conj() / a.norm() };
        let f = -unit * (z - a) / (one - a.conj() * z);
        b *= f;
        sum += (one - a.norm_sqr()) / ((z - a) * (one - a.conj() * z));
    }
    (b, b * sum)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checks = 0usize;
    for _ in 0..1000 {
        let f = TestPolynomial::random(&mut rng, 12);
        for _ in 0..4 {
            let l = random_point(&mut rng, 0.98);
            let w = random_point(&mut rng, 0.98);
            let rho = pseudo_distance(&l, &w);
            let lhs = (f.eval(w.value()) - f.eval(l.value())).norm();
            worst = worst.max(lhs - 2.0 * rho);
            ensure(lhs <= 2.0 * rho + 1e-9, || format!("2ρ bound: {lhs} > 2·{rho}"))?;

            let z = random_point(&mut rng, 0.98);
            let r = 0.5 * rng.gen::<f64>();
            let w = at_distance(&z, r, TAU * rng.gen::<f64>());
            let rho = pseudo_distance(&z, &w);
            if rho <= 0.5 {
                let dz = f.derivative(z.value()) * z.one_minus_abs2();
                let dw = f.derivative(w.value()) * w.one_minus_abs2();
                let lhs = (dz - dw).norm();
                worst = worst.max(lhs - 6.0 * rho);
                ensure(lhs <= 6.0 * rho + 1e-9, || format!("6ρ bound: {lhs} > 6·{rho}"))?;
            }
            checks += 2;
        }
    }
    let mut harnack_checks = 0usize;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=8);
        let zeros: Vec<DiskPoint> = (0..k).map(|_| random_point(&mut rng, 0.95)).collect();
        let raw: Vec<Complex64> = zeros.iter().map(|p| p.value()).collect();
        let z = random_point(&mut rng, 0.95);
        let nearest = zeros.iter().map(|a| pseudo_distance(&z, a)).fold(1.0, f64::min);
        let delta = nearest * rng.gen_range(0.05..1.0);
        let (b, db) = direct_b(&raw, z.value());
        let bz = b.norm();
        let lhs = z.one_minus_abs2() * db.norm();
        let rhs = bz / delta * (1.0 / (bz * bz)).ln();
        ensure(lhs <= rhs + 1e-9, || format!("no-zero bound: {lhs} > {rhs}"))?;
        checks += 1;

        // rescaled Harnack for w inside the zero-free disk
        let s = rng.gen_range(0.0..0.95);
        let w = at_distance(&z, s * delta, TAU * rng.gen::<f64>());
        let (bw, _) = direct_b(&raw, w.value());
        let (lz, lw) = (bz.ln(), bw.norm().ln());
        let slack = 1e-9 * lz.abs().max(1.0);
        ensure(lw >= (1.0 + s) / (1.0 - s) * lz - slack, || format!("Harnack lower: {lw} vs {lz}, s={s}"))?;
        ensure(lw <= (1.0 - s) / (1.0 + s) * lz + slack, || format!("Harnack upper: {lw} vs {lz}, s={s}"))?;
        harnack_checks += 1;
    }
    Ok(format!(
        "{checks} bound checks + {harnack_checks} Harnack checks, worst 2ρ/6ρ excess {worst:.2e}"
    ))
}

// ---------------------------------------------------------------- 7

/// `ρ(1-2^{-n}, 1-2^{-k})` exactly.
fn rho_geometric(n: u32, k: u32) -> BigRational {
    let p = |e: u32| BigRational::new(BigInt::one(), BigInt::one() << e);
    let (a, b) = (p(n), p(k));
    let num = (&a - &b).abs();
    let den = &a + &b - &a * &b;
    num / den
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_eval: f64 = 0.0;
    for _ in 0..500 {
        let k = rng.gen_range(1..=50);
        let zeros: Vec<DiskPoint> = (0..k).map(|_| random_point(&mut rng, 0.99)).collect();
        let raw: Vec<Complex64> = zeros.iter().map(|p| p.value()).collect();
        let b = BlaschkeProduct::from_points(zeros).map_err(|e| format!("{e:?}"))?;
        let z = random_point(&mut rng, 0.99);
        let (direct, _) = direct_b(&raw, z.value());
        let rel = (b.eval_log_modulus(&z) - direct.norm().ln()).abs();
        let rel_c = (b.eval(&z) - direct).norm() / direct.norm();
        worst_eval = worst_eval.max(rel).max(rel_c);
        ensure(rel <= 1e-12 && rel_c <= 1e-12, || format!("eval error {rel:e} / {rel_c:e} with {k} zeros"))?;
    }

    let mut worst_deriv: f64 = 0.0;
    for _ in 0..200 {
        let k = rng.gen_range(2..=30);
        let seq = ok(ZeroSequence::new((0..k).map(|_| random_point(&mut rng, 0.95)).collect()))?;
        let b = BlaschkeProduct::new(seq.clone());
        for (n, l) in seq.points().iter().enumerate() {
            let lhs = l.one_minus_abs2() * b.eval_derivative(l).norm();
            let rhs = seq.deleted_log_product(n).exp();
            let rel = (lhs - rhs).abs() / rhs;
            worst_deriv = worst_deriv.max(rel);
            ensure(rel <= 1e-10, || format!("derivative identity off by {rel:e}"))?;
        }
    }

    let seq = ok(geometric(40))?;
    let mut worst_hp: f64 = 0.0;
    for n in 1..=40u32 {
        let terms: Vec<BigRational> = (1..=40u32).filter(|&k| k != n).map(|k| rho_geometric(n, k)).collect();
        let oracle = product(&terms).to_f64().ok_or("oracle underflow")?.ln();
        let got = seq.deleted_log_product(n as usize - 1);
        let err = (got - oracle).abs() / oracle.abs().max(1.0);
        worst_hp = worst_hp.max(err);
        ensure(err <= 1e-12, || format!("deleted product {n}: {got} vs {oracle}"))?;
    }
    Ok(format!(
        "eval {worst_eval:.1e}, derivative {worst_deriv:.1e}, exact deleted products {worst_hp:.1e}"
    ))
}

// ---------------------------------------------------------------- 8

fn nis_constraints(seq: &ZeroSequence) -> Vec<(DiskPoint, f64)> {
    (0..seq.len()).map(|n| (seq.points()[n], -seq.deleted_log_product(n))).collect()
}

fn criterion_8() -> Outcome {
    let base = nis_constraints(&ok(geometric(12))?);
    let opts = FitOptions::default();
    let m0 = ok(fit_min_majorant(&base, &opts))?.objective;
    for t in [0.5, 2.0, 10.0, 1e3] {
        let scaled: Vec<_> = base.iter().map(|&(p, c)| (p, c * t)).collect();
        let m = ok(fit_min_majorant(&scaled, &opts))?.objective;
        let rel = (m - t * m0).abs() / (t * m0);
        ensure(rel <= 1e-9, || format!("homogeneity at t={t}: {rel:e}"))?;
    }

    let suites: Vec<(&str, ZeroSequence)> = vec![
        ("geometric", ok(geometric(12))?),
        ("two-ray", ok(two_ray(12))?),
        ("close pairs", ok(close_pairs(12))?),
    ];
    let mut worst_doubling: f64 = 0.0;
    for (name, seq) in &suites {
        let a = ok(check_nis(seq, &FitOptions::with_nodes(1024)))?.objective;
        let b = ok(check_nis(seq, &FitOptions::with_nodes(2048)))?.objective;
        let rel = (a - b).abs() / a;
        worst_doubling = worst_doubling.max(rel);
        ensure(rel <= 0.01, || format!("{name}: node doubling moved mass by {rel}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_single: f64 = 0.0;
    for _ in 0..50 {
        let z = random_point(&mut rng, 0.95);
        let c = rng.gen_range(0.1..10.0);
        let m = ok(fit_min_majorant(&[(z, c)], &FitOptions::with_nodes(1 << 12)))?.objective;
        let x = z.modulus();
        let analytic = c * (1.0 - x) / (1.0 + x);
        let rel = (m - analytic).abs() / analytic;
        worst_single = worst_single.max(rel);
        ensure(rel <= 0.02, || format!("single constraint at |z|={x}: {m} vs {analytic}"))?;
    }
    Ok(format!(
        "homogeneity ok, node doubling {worst_doubling:.1e}, single-constraint {worst_single:.1e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("single-hole harmonic measure oracle", criterion_1),
        ("ω lower bounds with 4H and 12H", criterion_2),
        ("interpolation checkers agree on test families", criterion_3),
        ("radial counterexample", criterion_4),
        ("product splitter", criterion_5),
        ("Schwarz-Pick and Blaschke derivative bounds", criterion_6),
        ("Blaschke numerics", criterion_7),
        ("LP engine", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.1}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{secs:.1}s] {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
