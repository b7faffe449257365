//! Dense simplex for covering programs
//!
//! ```text
//!     minimize   Σ_j x_j
//!     subject to Σ_j a_ij x_j ≥ c_i,   a_ij ≥ 0,   x ≥ 0.
//! ```
//!
//! All costs are positive, so the all-slack basis is dual feasible and the
//! dual simplex method runs without a phase one. Rows can be appended after a
//! solve; the current basis stays dual feasible and the next solve warm
//! starts from it, which is what the cutting-plane loop in the fitter relies
//! on.
//!
//! Pricing is "most infeasible row" with a switch to Bland's rule (smallest
//! index for both the leaving row and entering column ties) after a run of
//! degenerate pivots, so the method cannot cycle.

use crate::error::{Error, Result};

/// Primal feasibility tolerance on row-scaled constraints.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct CoveringLp {
    ncols: usize,
    // original (scaled) rows and bounds, kept for the final refinement
    rows_a: Vec<Vec<f64>>,
    rows_c: Vec<f64>,
    tableau: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    reduced: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    pivots: usize,
}

impl CoveringLp {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows_a: Vec::new(),
            rows_c: Vec::new(),
            tableau: Vec::new(),
            rhs: Vec::new(),
            reduced: vec![1.0; ncols],
            basis: Vec::new(),
            basic_row: vec![None; ncols],
            pivots: 0,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows_c.len()
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    /// Appends `a · x ≥ c`. Coefficients must be nonnegative and not all zero
    /// when `c > 0`.
    pub fn add_row(&mut self, coeffs: &[f64], bound: f64) -> Result<()> {
        assert_eq!(coeffs.len(), self.ncols);
        let max = coeffs.iter().fold(0.0_f64, |m, &v| m.max(v));
        if max <= 0.0 {
            if bound > 0.0 {
                return Err(Error::Infeasible);
            }
            return Ok(());
        }
        let scale = 1.0 / max;
        let a: Vec<f64> = coeffs.iter().map(|v| v * scale).collect();
        let c = bound * scale;

        let width = self.ncols + self.num_rows() + 1;
        for row in &mut self.tableau {
            row.push(0.0);
        }
        self.reduced.push(0.0);
        self.basic_row.push(None);

        let mut row = vec![0.0; width];
        for (j, &v) in a.iter().enumerate() {
            row[j] = -v;
        }
        let slack = width - 1;
        row[slack] = 1.0;
        let mut rhs = -c;
        // express in terms of the current nonbasic variables
        for (r, &b) in self.basis.iter().enumerate() {
            let alpha = row[b];
            if alpha != 0.0 {
                let src = &self.tableau[r];
                for (dst, s) in row.iter_mut().zip(src) {
                    *dst -= alpha * s;
                }
                row[b] = 0.0;
                rhs -= alpha * self.rhs[r];
            }
        }
        self.basic_row[slack] = Some(self.tableau.len());
        self.tableau.push(row);
        self.rhs.push(rhs);
        self.basis.push(slack);
        self.rows_a.push(a);
        self.rows_c.push(c);
        Ok(())
    }

    /// Runs the dual simplex method to optimality.
    pub fn solve(&mut self) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let Some(r) = self.leaving_row(bland) else {
                return Ok(());
            };
            let Some(e) = self.entering_column(r) else {
                return Err(Error::Infeasible);
            };
            if self.reduced[e] <= 0.0 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(Error::PivotLimit(MAX_PIVOTS));
            }
        }
    }

    fn leaving_row(&self, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (r, &v) in self.rhs.iter().enumerate() {
            if v >= -FEASIBILITY_TOL {
                continue;
            }
            best = match best {
                None => Some(r),
                Some(b) if bland => {
                    if self.basis[r] < self.basis[b] {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
                Some(b) => {
                    if v < self.rhs[b] {
                        Some(r)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    fn entering_column(&self, r: usize) -> Option<usize> {
        let row = &self.tableau[r];
        let mut best: Option<(usize, f64)> = None;
        for (j, &t) in row.iter().enumerate() {
            if t >= -PIVOT_TOL || self.basic_row[j].is_some() {
                continue;
            }
            let ratio = self.reduced[j].max(0.0) / -t;
            match best {
                None => best = Some((j, ratio)),
                Some((_, br)) if ratio < br - 1e-12 * br.max(1e-300) => best = Some((j, ratio)),
                _ => {}
            }
        }
        best.map(|(j, _)| j)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.tableau[r][e];
        {
            let row = &mut self.tableau[r];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[e] = 1.0;
        }
        self.rhs[r] /= piv;
        let prow = std::mem::take(&mut self.tableau[r]);
        let prhs = self.rhs[r];
        for (i, row) in self.tableau.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[e] = 0.0;
                self.rhs[i] -= f * prhs;
            }
        }
        let f = self.reduced[e];
        if f != 0.0 {
            for (v, p) in self.reduced.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.reduced[e] = 0.0;
        }
        self.tableau[r] = prow;
        let old = self.basis[r];
        self.basic_row[old] = None;
        self.basis[r] = e;
        self.basic_row[e] = Some(r);
    }

    /// Current primal solution, refined by re-solving the square system of
    /// tight rows against the basic structural columns.
    pub fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.ncols {
                x[b] = self.rhs[r].max(0.0);
            }
        }
        if let Some(refined) = self.refine() {
            if refined.iter().all(|v| v.is_finite() && *v > -1e-9) {
                let better = refined.into_iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
                if self.max_violation(&better) <= self.max_violation(&x).max(1e-12) {
                    return better;
                }
            }
        }
        x
    }

    pub fn objective(&self) -> f64 {
        self.solution().iter().sum()
    }

    /// Largest scaled violation `c_i - a_i · x` over the stored rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows_a
            .iter()
            .zip(&self.rows_c)
            .map(|(a, c)| c - a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn refine(&self) -> Option<Vec<f64>> {
        let cols: Vec<usize> = self
            .basis
            .iter()
            .copied()
            .filter(|&b| b < self.ncols)
            .collect();
        let tight: Vec<usize> = (0..self.num_rows())
            .filter(|&i| self.basic_row[self.ncols + i].is_none())
            .collect();
        if cols.len() != tight.len() {
            return None;
        }
        let n = cols.len();
        if n == 0 {
            return Some(vec![0.0; self.ncols]);
        }
        let mut m: Vec<Vec<f64>> = tight
            .iter()
            .map(|&i| {
                let mut row: Vec<f64> = cols.iter().map(|&j| self.rows_a[i][j]).collect();
                row.push(self.rows_c[i]);
                row
            })
            .collect();
        for k in 0..n {
            let p = (k..n).max_by(|&a, &b| m[a][k].abs().total_cmp(&m[b][k].abs()))?;
            if m[p][k].abs() < 1e-14 {
                return None;
            }
            m.swap(k, p);
            let pivot_row = m[k].clone();
            for row in m.iter_mut().skip(k + 1) {
                let f = row[k] / pivot_row[k];
                if f != 0.0 {
                    for (v, q) in row.iter_mut().zip(&pivot_row).skip(k) {
                        *v -= f * q;
                    }
                }
            }
        }
        let mut sol = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = m[k][n];
            for j in k + 1..n {
                s -= m[k][j] * sol[j];
            }
            sol[k] = s / m[k][k];
        }
        let mut x = vec![0.0; self.ncols];
        for (&j, v) in cols.iter().zip(sol) {
            x[j] = v;
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_row() {
        let mut lp = CoveringLp::new(3);
        lp.add_row(&[1.0, 2.0, 4.0], 8.0).unwrap();
        lp.solve().unwrap();
        let x = lp.solution();
        assert!((lp.objective() - 2.0).abs() < 1e-12);
        assert!((x[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_rows_need_two_columns() {
        // x0 + 0.1 x1 >= 1, 0.1 x0 + x1 >= 1  => x0 = x1 = 1/1.1
        let mut lp = CoveringLp::new(2);
        lp.add_row(&[1.0, 0.1], 1.0).unwrap();
        lp.add_row(&[0.1, 1.0], 1.0).unwrap();
        lp.solve().unwrap();
        assert!((lp.objective() - 2.0 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn warm_start_after_adding_rows() {
        let mut lp = CoveringLp::new(2);
        lp.add_row(&[1.0, 0.1], 1.0).unwrap();
        lp.solve().unwrap();
        assert!((lp.objective() - 1.0).abs() < 1e-12);
        lp.add_row(&[0.1, 1.0], 1.0).unwrap();
        lp.solve().unwrap();
        assert!((lp.objective() - 2.0 / 1.1).abs() < 1e-12);
        lp.add_row(&[0.0, 1.0], 3.0).unwrap();
        lp.solve().unwrap();
        // x1 = 3 covers the first row with x0 = 0.7
        assert!((lp.objective() - 3.7).abs() < 1e-12);
    }

    #[test]
    fn zero_row_with_positive_bound_is_infeasible() {
        let mut lp = CoveringLp::new(2);
        assert_eq!(lp.add_row(&[0.0, 0.0], 1.0), Err(Error::Infeasible));
        assert!(lp.add_row(&[0.0, 0.0], 0.0).is_ok());
    }

    #[test]
    fn degenerate_rows_terminate() {
        // many identical rows force degenerate pivots
        let mut lp = CoveringLp::new(4);
        for _ in 0..200 {
            lp.add_row(&[1.0, 1.0, 1.0, 1.0], 1.0).unwrap();
        }
        lp.add_row(&[0.0, 1.0, 0.0, 1.0], 1.0).unwrap();
        lp.solve().unwrap();
        assert!((lp.objective() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = 3;
            let m = rng.gen_range(1..5);
            let rows: Vec<(Vec<f64>, f64)> = (0..m)
                .map(|_| {
                    (
                        (0..n).map(|_| rng.gen_range(0.05..1.0)).collect(),
                        rng.gen_range(0.0..2.0),
                    )
                })
                .collect();
            let mut lp = CoveringLp::new(n);
            for (a, c) in &rows {
                lp.add_row(a, *c).unwrap();
            }
            lp.solve().unwrap();
            let got = lp.objective();
            // brute force: the optimum sits at a vertex; enumerate all
            // supports of size <= 3 over tight-row subsets via grid search
            let mut best = f64::INFINITY;
            let steps = 120;
            let hi = rows.iter().map(|(a, c)| c / a.iter().cloned().fold(0.0, f64::max)).fold(0.0, f64::max) * 3.0 + 1e-9;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x0 = hi * i as f64 / steps as f64;
                    let x1 = hi * j as f64 / steps as f64;
                    // smallest feasible x2 given x0, x1
                    let x2 = rows
                        .iter()
                        .map(|(a, c)| ((c - a[0] * x0 - a[1] * x1) / a[2]).max(0.0))
                        .fold(0.0, f64::max);
                    best = best.min(x0 + x1 + x2);
                }
            }
            assert!(got <= best + 1e-9, "{got} > {best}");
            assert!(got >= best - hi * 2.0 / steps as f64 - 1e-9, "{got} << {best}");
            assert!(lp.max_violation(&lp.solution()) <= 1e-9);
        }
    }
}
