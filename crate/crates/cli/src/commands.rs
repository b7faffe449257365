use std::path::PathBuf;

use disklab::blaschke::{BlaschkeProduct, ZeroSequence};
use disklab::constructions::{
    perturb, run_counterexample, split_product, CounterexampleOptions, CounterexampleRun,
};
use disklab::families::{close_pairs, geometric, two_ray};
use disklab::geometry::{log_pseudo_distance, PseudoDisk};
use disklab::harmonic_measure::{
    condition_d_check, omega_single_hole, wos_estimate, ConditionDOptions, ConditionDReport, Estimate,
    HoleDomain,
};
use disklab::ideals::{
    build_f2_example, build_tres_example, fit_condition_b_majorant, fit_condition_c_majorant,
    fit_corona_majorant, j_membership_cost, reduce_common_zeros, GeneratorTuple, SampleGrid,
};
use disklab::majorant::{
    check_nis, classify_growth, BoundaryMeasure, FitOptions, FitStatus, Growth, MajorantFit,
    MajorantFitReport,
};
use disklab::DiskPoint;
use serde::Serialize;

use crate::config::{check, Knobs, Resolved};
use crate::seqfile::{SequenceFile, SCHEMA};
use crate::CliError;

pub const FAMILIES: [&str; 4] = ["geometric", "two-ray", "close-pairs", "perturbed"];

fn fit_options(r: &Resolved) -> FitOptions {
    FitOptions {
        node_count: r.node_count,
        mass_cap: r.mass_cap,
        ..FitOptions::default()
    }
}

fn d_options(r: &Resolved) -> ConditionDOptions {
    ConditionDOptions {
        walks: r.walks,
        epsilon_shell: r.epsilon_shell,
        seed: r.seed,
        ..ConditionDOptions::default()
    }
}

fn input_path(k: &Knobs, positional: Option<PathBuf>) -> Result<PathBuf, CliError> {
    positional
        .or_else(|| k.input.clone())
        .ok_or_else(|| CliError::Input("a sequence file is required".into()))
}

/// Compact summary of a fit over many constraints.
#[derive(Clone, Debug, Serialize)]
pub struct FitSummary {
    pub status: FitStatus,
    pub mass: f64,
    pub uniform: f64,
    pub constraints: usize,
    pub active_rows: usize,
    pub min_slack: f64,
}

impl From<&MajorantFit> for FitSummary {
    fn from(f: &MajorantFit) -> Self {
        Self {
            status: f.status,
            mass: f.objective,
            uniform: f.measure.uniform(),
            constraints: f.constraints.len(),
            active_rows: f.active_rows,
            min_slack: f.min_slack(),
        }
    }
}

fn growth_of(first: &MajorantFit, last: &MajorantFit) -> Growth {
    if !first.is_optimal() || !last.is_optimal() {
        return Growth::Diverging;
    }
    classify_growth(first.objective, last.objective)
}

// ---------------------------------------------------------------- generate

pub fn generate(k: &Knobs) -> Result<serde_json::Value, CliError> {
    let family = k.family.as_deref().unwrap_or("geometric");
    let n_max = k.n_max.unwrap_or(15);
    let r = Resolved::from_knobs(k)?;
    let seq = match family {
        "geometric" => geometric(n_max)?,
        "two-ray" => two_ray(n_max)?,
        "close-pairs" => close_pairs(n_max)?,
        "perturbed" => {
            let base = geometric(n_max)?;
            let fit = check_nis(&base, &fit_options(&r))?;
            let h: Vec<f64> = base.points().iter().map(|p| fit.measure.eval(p)).collect();
            perturb(&base, &h, 0.25, r.seed)?
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown family {other:?}; expected one of {FAMILIES:?}"
            )))
        }
    };
    let mut file = SequenceFile::from_sequence(&seq, Some(family));
    file.n_max = Some(n_max);
    file.seed = (family == "perturbed").then_some(r.seed);
    Ok(serde_json::to_value(file)?)
}

// ---------------------------------------------------- check-interpolating

#[derive(Serialize)]
struct ConditionRow {
    condition: &'static str,
    /// Fit mass for (a)-(c); minimum harmonic measure for (d).
    certificate: Option<f64>,
    /// Certificate at half and full truncation.
    curve: Vec<f64>,
    growth: Growth,
    bounded: bool,
}

#[derive(Serialize)]
struct CheckReport {
    schema: u32,
    command: &'static str,
    input: PathBuf,
    points: usize,
    half_truncation: usize,
    knobs: Resolved,
    table: Vec<ConditionRow>,
    verdict: &'static str,
    nis_fit: MajorantFitReport,
    condition_b: FitSummary,
    condition_c: FitSummary,
    condition_d: DSummary,
}

#[derive(Serialize)]
struct DSummary {
    h_multiplier: f64,
    bound: f64,
    minimum: Option<f64>,
    minimum_stderr: Option<f64>,
    minimum_index: Option<usize>,
    disjoint: bool,
    analytic_holes: usize,
    passes: bool,
}

fn d_summary(rep: &ConditionDReport, n: f64) -> DSummary {
    let bound = 1.0 - 3.0 / n;
    let stderr = rep
        .minimum_index
        .and_then(|i| rep.estimates.iter().find(|e| e.index == i))
        .map(|e| e.estimate.stderr);
    // each estimate is held to its own 3σ band
    let passes = rep.disjoint
        && rep
            .estimates
            .iter()
            .all(|e| e.value >= bound - 3.0 * e.estimate.stderr);
    DSummary {
        h_multiplier: n,
        bound,
        minimum: rep.minimum,
        minimum_stderr: stderr,
        minimum_index: rep.minimum_index,
        disjoint: rep.disjoint,
        analytic_holes: rep.analytic_holes,
        passes,
    }
}

fn grid_with(r: &Resolved, seq: &ZeroSequence) -> Result<SampleGrid, CliError> {
    Ok(SampleGrid::whitney(r.grid_j, r.grid_q)?.with_points(seq.points()))
}

pub fn check_interpolating(k: &Knobs, positional: Option<PathBuf>) -> Result<serde_json::Value, CliError> {
    let path = input_path(k, positional)?;
    let seq = SequenceFile::read(&path)?;
    let r = Resolved::from_knobs(k)?;
    let n_mult = k.h_multiplier.unwrap_or(4.0);
    check(n_mult >= 4.0 && n_mult.is_finite(), "h_multiplier must be at least 4")?;
    let opts = fit_options(&r);
    let half = (seq.len() / 2).max(1);
    let head = seq.truncate(half);

    let a_full = check_nis(&seq, &opts)?;
    let a_half = check_nis(&head, &opts)?;

    let b_full_prod = BlaschkeProduct::new(seq.clone());
    let b_half_prod = BlaschkeProduct::new(head.clone());
    let grid_full = grid_with(&r, &seq)?;
    let grid_half = grid_with(&r, &head)?;
    let b_full = fit_condition_b_majorant(&b_full_prod, &grid_full, &opts)?;
    let b_half = fit_condition_b_majorant(&b_half_prod, &grid_half, &opts)?;
    let c_full = fit_condition_c_majorant(&GeneratorTuple::unlabeled(vec![b_full_prod])?, &grid_full, &opts)?;
    let c_half = fit_condition_c_majorant(&GeneratorTuple::unlabeled(vec![b_half_prod])?, &grid_half, &opts)?;

    let d = condition_d_check(&seq, &a_full.measure.scaled(n_mult), &d_options(&r))?;
    let ds = d_summary(&d, n_mult);

    let row = |name, first: &MajorantFit, last: &MajorantFit| {
        let growth = growth_of(first, last);
        ConditionRow {
            condition: name,
            certificate: Some(last.objective),
            curve: vec![first.objective, last.objective],
            growth,
            bounded: growth == Growth::Bounded,
        }
    };
    let a_row = row("a", &a_half, &a_full);
    let d_growth = a_row.growth;
    let table = vec![
        a_row,
        row("b", &b_half, &b_full),
        row("c", &c_half, &c_full),
        ConditionRow {
            condition: "d",
            certificate: d.minimum,
            curve: vec![a_half.objective * n_mult, a_full.objective * n_mult],
            growth: d_growth,
            bounded: ds.passes && d_growth == Growth::Bounded,
        },
    ];
    let verdict = if table.iter().all(|r| r.bounded) {
        "interpolating"
    } else if table.iter().all(|r| !r.bounded) {
        "not interpolating"
    } else {
        "inconsistent"
    };
    let rep = CheckReport {
        schema: SCHEMA,
        command: "check-interpolating",
        input: path,
        points: seq.len(),
        half_truncation: half,
        knobs: r,
        table,
        verdict,
        nis_fit: MajorantFitReport::from(&a_full),
        condition_b: FitSummary::from(&b_full),
        condition_c: FitSummary::from(&c_full),
        condition_d: ds,
    };
    Ok(serde_json::to_value(rep)?)
}

// ------------------------------------------------------- harmonic-measure

#[derive(Serialize)]
struct SingleHoleReport {
    schema: u32,
    command: &'static str,
    mode: &'static str,
    knobs: Resolved,
    center: [f64; 2],
    radius: f64,
    at: [f64; 2],
    exact: f64,
    estimate: Estimate,
    error: f64,
    tolerance: f64,
    within_tolerance: bool,
}

#[derive(Serialize)]
struct SequenceHoleReport {
    schema: u32,
    command: &'static str,
    mode: &'static str,
    input: PathBuf,
    knobs: Resolved,
    nis_mass: f64,
    summary: DSummary,
    report: ConditionDReport,
}

pub fn harmonic_measure(k: &Knobs, positional: Option<PathBuf>) -> Result<serde_json::Value, CliError> {
    let r = Resolved::from_knobs(k)?;
    if let Some(path) = positional.or_else(|| k.input.clone()) {
        let seq = SequenceFile::read(&path)?;
        let n_mult = k.h_multiplier.unwrap_or(4.0);
        check(n_mult >= 4.0 && n_mult.is_finite(), "h_multiplier must be at least 4")?;
        let fit = check_nis(&seq, &fit_options(&r))?;
        let report = condition_d_check(&seq, &fit.measure.scaled(n_mult), &d_options(&r))?;
        let rep = SequenceHoleReport {
            schema: SCHEMA,
            command: "harmonic-measure",
            mode: "sequence",
            input: path,
            knobs: r,
            nis_mass: fit.objective,
            summary: d_summary(&report, n_mult),
            report,
        };
        return Ok(serde_json::to_value(rep)?);
    }
    let center = k.center.unwrap_or([0.0, 0.0]);
    let radius = k.radius.unwrap_or(0.1);
    let at = k.at.unwrap_or([0.5, 0.0]);
    let lambda = DiskPoint::new(center[0], center[1]).map_err(|e| CliError::Input(e.to_string()))?;
    let z = DiskPoint::new(at[0], at[1]).map_err(|e| CliError::Input(e.to_string()))?;
    check(radius > 0.0 && radius < 1.0, "radius must lie in (0, 1)")?;
    check(
        log_pseudo_distance(&z, &lambda) > radius.ln(),
        "evaluation point lies inside the hole",
    )?;
    // the closed form is the measure of the hole; walks report the circle
    let exact = 1.0 - omega_single_hole(&z, &lambda, radius)?;
    let domain = HoleDomain::new(vec![(0, PseudoDisk::with_radius(lambda, radius)?)])?;
    let estimate = wos_estimate(&domain, &z, r.walks, r.epsilon_shell, r.seed)?;
    let error = (estimate.mean - exact).abs();
    let tolerance = 3.0 * estimate.stderr + 10.0 * r.epsilon_shell;
    let rep = SingleHoleReport {
        schema: SCHEMA,
        command: "harmonic-measure",
        mode: "single-hole",
        knobs: r,
        center,
        radius,
        at,
        exact,
        estimate,
        error,
        tolerance,
        within_tolerance: error <= tolerance,
    };
    Ok(serde_json::to_value(rep)?)
}

// ------------------------------------------------------------ ideal-costs

#[derive(Serialize)]
struct CostEntry {
    power: u32,
    exponent: f64,
    /// Mass on the coarser and the finer grid.
    curve: Vec<f64>,
    growth: Growth,
}

#[derive(Serialize)]
struct IdealReport {
    schema: u32,
    command: &'static str,
    source: String,
    knobs: Resolved,
    common_zeros: usize,
    grid_points: usize,
    corona: FitSummary,
    /// Mass of the smallest multiple of `Re((1+z)/(1-z))` meeting the corona
    /// constraints.
    h0_feasible_mass: f64,
    condition_c: FitSummary,
    tres_condition_c: FitSummary,
    f2_costs: Vec<CostEntry>,
}

pub const F2_POWERS: [u32; 3] = [1, 2, 3];
pub const F2_EXPONENTS: [f64; 2] = [1.0, 2.0];

pub fn ideal_costs(k: &Knobs) -> Result<serde_json::Value, CliError> {
    let r = Resolved::from_knobs(k)?;
    let opts = fit_options(&r);
    let (b1, b2, source) = match (&k.first, &k.second) {
        (Some(f), Some(s)) => (
            BlaschkeProduct::new(SequenceFile::read(f)?),
            BlaschkeProduct::new(SequenceFile::read(s)?),
            format!("{} / {}", f.display(), s.display()),
        ),
        (None, None) => {
            let n_max = k.n_max.unwrap_or(12);
            let run = counterexample_run(n_max, &r, false)?;
            (run.b1()?, run.b2()?, format!("counterexample pair, n_max = {n_max}"))
        }
        _ => return Err(CliError::Input("give both --first and --second or neither".into())),
    };
    let pair = GeneratorTuple::new(vec![b1, b2], vec!["B1".into(), "B2".into()])?;
    let (pair, common) = reduce_common_zeros(&pair)?;
    let (b1, b2) = (&pair.generators()[0], &pair.generators()[1]);
    let mut extra: Vec<DiskPoint> = b1.zeros().points().to_vec();
    extra.extend_from_slice(b2.zeros().points());
    let grid = SampleGrid::whitney(r.grid_j, r.grid_q)?.with_points(&extra);
    let coarse = SampleGrid::whitney(r.grid_j - 1, r.grid_q)?.with_points(&extra);

    let corona = fit_corona_majorant(&pair, &grid, &opts)?;
    let h0 = BoundaryMeasure::atom(0.0, 1.0)?;
    let h0_feasible_mass = corona
        .constraints
        .iter()
        .map(|c| c.lower_bound / h0.eval(&c.points[0]))
        .fold(0.0, f64::max);
    let condition_c = fit_condition_c_majorant(&pair, &grid, &opts)?;
    let tres = build_tres_example(b1, b2)?;
    let tres_c = fit_condition_c_majorant(&tres, &grid, &opts)?;

    let mut f2_costs = Vec::new();
    for &n in &F2_POWERS {
        for &p in &F2_EXPONENTS {
            let ex = build_f2_example(b1, b2, n, p)?;
            let lo = j_membership_cost(&ex.f, &ex.generators, &coarse, p, &opts)?;
            let hi = j_membership_cost(&ex.f, &ex.generators, &grid, p, &opts)?;
            f2_costs.push(CostEntry {
                power: n,
                exponent: p,
                curve: vec![lo.objective, hi.objective],
                growth: growth_of(&lo, &hi),
            });
        }
    }
    let rep = IdealReport {
        schema: SCHEMA,
        command: "ideal-costs",
        source,
        knobs: r,
        common_zeros: common.degree() as usize,
        grid_points: grid.len(),
        corona: FitSummary::from(&corona),
        h0_feasible_mass,
        condition_c: FitSummary::from(&condition_c),
        tres_condition_c: FitSummary::from(&tres_c),
        f2_costs,
    };
    Ok(serde_json::to_value(rep)?)
}

// --------------------------------------------------------- counterexample

fn counterexample_run(n_max: usize, r: &Resolved, unimodularity: bool) -> Result<CounterexampleRun, CliError> {
    let opts = CounterexampleOptions {
        unimodularity,
        grid_rings: r.grid_j,
        grid_base: r.grid_q,
        fit: fit_options(r),
    };
    Ok(run_counterexample(n_max, &opts)?)
}

#[derive(Serialize)]
struct CounterexampleReport {
    schema: u32,
    command: &'static str,
    knobs: Resolved,
    #[serde(flatten)]
    run: CounterexampleRun,
}

pub fn counterexample(k: &Knobs) -> Result<serde_json::Value, CliError> {
    let r = Resolved::from_knobs(k)?;
    let n_max = k.n_max.unwrap_or(20);
    let run = counterexample_run(n_max, &r, true)?;
    if let Some(path) = &k.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
        for row in run.rows() {
            w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let rep = CounterexampleReport {
        schema: SCHEMA,
        command: "counterexample",
        knobs: r,
        run,
    };
    Ok(serde_json::to_value(rep)?)
}

// ---------------------------------------------------------- split-product

#[derive(Serialize)]
struct SplitReport {
    schema: u32,
    command: &'static str,
    eta: f64,
    factors: Vec<f64>,
    k: usize,
    log_prefix: f64,
    log_tail: f64,
    log_eta: f64,
}

pub fn split(k: &Knobs) -> Result<serde_json::Value, CliError> {
    let eta = k.eta.ok_or_else(|| CliError::Input("--eta is required".into()))?;
    let factors = k
        .factors
        .clone()
        .ok_or_else(|| CliError::Input("--factors is required".into()))?;
    let idx = split_product(&factors, eta)?;
    let logs: Vec<f64> = factors.iter().map(|x| x.ln()).collect();
    let rep = SplitReport {
        schema: SCHEMA,
        command: "split-product",
        eta,
        k: idx,
        log_prefix: logs[..idx].iter().sum(),
        log_tail: logs[idx..].iter().sum(),
        log_eta: eta.ln(),
        factors,
    };
    Ok(serde_json::to_value(rep)?)
}
