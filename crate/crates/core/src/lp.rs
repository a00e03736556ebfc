//! Dense two-phase simplex method for small linear programs.
//!
//! Solves `minimize c . x` subject to linear rows `<=`, `>=` or `=` and
//! `x >= 0`. Pricing is Dantzig's most-negative reduced cost. Ties in the
//! ratio test are broken lexicographically on the rows of the basis
//! inverse, which rules out cycling on degenerate programs.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Row<S> {
    coeffs: Vec<(usize, S)>,
    relation: Relation,
    rhs: S,
}

#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    rows: Vec<Row<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub pivots: usize,
}

impl<S: Scalar> LinearProgram<S> {
    /// Program over `num_vars` nonnegative variables with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![S::zero(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: S) {
        self.objective[var] = coeff;
    }

    pub fn add_objective(&mut self, var: usize, coeff: S) {
        self.objective[var] += coeff;
    }

    /// Adds `sum coeffs[i].1 * x[coeffs[i].0]  relation  rhs`.
    pub fn add_row(&mut self, coeffs: Vec<(usize, S)>, relation: Relation, rhs: S) -> Result<()> {
        for &(j, c) in &coeffs {
            Error::check_index("lp variable", j, self.num_vars)?;
            if !c.is_finite() {
                return Err(Error::NonFinite("lp coefficient"));
            }
        }
        if !rhs.is_finite() {
            return Err(Error::NonFinite("lp right-hand side"));
        }
        self.rows.push(Row { coeffs, relation, rhs });
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution<S>> {
        Tableau::build(self).solve(self)
    }
}

struct Tableau<S> {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    data: Vec<S>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    /// Identity columns of the starting basis; they hold the basis inverse.
    initial_basis: Vec<usize>,
    artificial_start: usize,
    eps: S,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars;
        // normalize so every right-hand side is nonnegative; a `>= 0` row is
        // flipped to `<= 0` so it gets a slack basis column instead of an
        // artificial one
        let mut rows: Vec<(Vec<S>, Relation, S)> = lp
            .rows
            .iter()
            .map(|r| {
                let mut dense = vec![S::zero(); n];
                for &(j, c) in &r.coeffs {
                    dense[j] += c;
                }
                let flip = r.rhs < S::zero() || (r.rhs == S::zero() && r.relation == Relation::Ge);
                if flip {
                    dense.iter_mut().for_each(|c| *c = -*c);
                    let relation = match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (dense, relation, -r.rhs)
                } else {
                    (dense, r.relation, r.rhs)
                }
            })
            .collect();

        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = n + slack_count;
        let cols = artificial_start + artificial_count;
        let m = rows.len();
        let width = cols + 1;
        let mut data = vec![S::zero(); m * width];
        let mut basis = Vec::with_capacity(m);
        let mut slack = n;
        let mut artificial = artificial_start;
        for (i, (dense, relation, rhs)) in rows.drain(..).enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&dense);
            row[cols] = rhs;
            match relation {
                Relation::Le => {
                    row[slack] = S::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -S::one();
                    slack += 1;
                    row[artificial] = S::one();
                    basis.push(artificial);
                    artificial += 1;
                }
                Relation::Eq => {
                    row[artificial] = S::one();
                    basis.push(artificial);
                    artificial += 1;
                }
            }
        }
        Tableau {
            data,
            rows: m,
            cols,
            initial_basis: basis.clone(),
            basis,
            artificial_start,
            eps: S::EPS,
            pivots: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> S {
        self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> S {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.at(row, col);
        for j in 0..width {
            self.data[row * width + j] /= p;
        }
        let pivot_row: Vec<S> = self.data[row * width..(row + 1) * width].to_vec();
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.data[i * width + col];
            if f == S::zero() {
                continue;
            }
            let target = &mut self.data[i * width..(i + 1) * width];
            for (t, &pv) in target.iter_mut().zip(&pivot_row) {
                *t -= f * pv;
            }
            target[col] = S::zero();
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` for columns `< limit`.
    fn reduced_costs(&self, cost: &[S], limit: usize) -> Vec<S> {
        let mut d: Vec<S> = cost[..limit].to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == S::zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj -= cb * self.at(i, j);
            }
        }
        d
    }

    /// True when row `i` is lexicographically smaller than row `r` after
    /// scaling each by its entry in column `col`.
    fn lex_less(&self, i: usize, r: usize, col: usize) -> bool {
        let (ai, ar) = (self.at(i, col), self.at(r, col));
        for &j in &self.initial_basis {
            let (u, v) = (self.at(i, j) / ai, self.at(r, j) / ar);
            if u < v - self.eps {
                return true;
            }
            if u > v + self.eps {
                return false;
            }
        }
        false
    }

    /// Minimizes `cost . x` over columns `< limit` from the current basis.
    fn optimize(&mut self, cost: &[S], limit: usize) -> Result<()> {
        let max_pivots = 50_000 + 50 * (self.rows + self.cols);
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Solver("simplex iteration limit reached".into()));
            }
            let d = self.reduced_costs(cost, limit);
            let mut entering: Option<(usize, S)> = None;
            for (j, &dj) in d.iter().enumerate() {
                if dj < -self.eps && entering.is_none_or(|(_, b)| dj < b) {
                    entering = Some((j, dj));
                }
            }
            let Some((col, _)) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, S)> = None;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > self.eps {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - self.eps || (ratio <= best + self.eps && self.lex_less(i, r, col))
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(Error::Solver("linear program is unbounded".into()));
            };
            self.pivot(row, col);
        }
    }

    fn solve(mut self, lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
        let n = lp.num_vars;
        if self.artificial_start < self.cols {
            let mut phase_one = vec![S::zero(); self.cols];
            phase_one[self.artificial_start..]
                .iter_mut()
                .for_each(|c| *c = S::one());
            self.optimize(&phase_one, self.cols)?;
            let infeasibility: S = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.rhs(i))
                .sum();
            let scale = S::one() + (0..self.rows).map(|i| self.rhs(i).abs()).fold(S::zero(), S::max);
            if infeasibility > S::lit(1e-7) * scale {
                return Err(Error::Solver("linear program is infeasible".into()));
            }
            // drive zero-level artificials out of the basis
            for i in 0..self.rows {
                if self.basis[i] < self.artificial_start {
                    continue;
                }
                if let Some(j) = (0..self.artificial_start).find(|&j| self.at(i, j).abs() > self.eps) {
                    self.pivot(i, j);
                }
                // otherwise the row is redundant; its artificial stays basic at zero
            }
        }
        let mut cost = vec![S::zero(); self.cols];
        cost[..n].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.artificial_start)?;

        let mut x = vec![S::zero(); n];
        for i in 0..self.rows {
            if self.basis[i] < n {
                x[self.basis[i]] = self.rhs(i).max(S::zero());
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(&xi, &ci)| xi * ci).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, -3.0);
        lp.set_objective(1, -5.0);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 4.0).unwrap();
        lp.add_row(vec![(1, 2.0)], Relation::Le, 12.0).unwrap();
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0).unwrap();
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.objective, -36.0, epsilon = 1e-10);
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-10);
        assert_relative_eq!(s.x[1], 6.0, epsilon = 1e-10);
    }

    #[test]
    fn equality_and_lower_bounds_need_phase_one() {
        // min x + 2y  s.t. x + y = 3, x >= 1, y >= 1  ->  (2, 1), 4
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, 1.0);
        lp.set_objective(1, 2.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0).unwrap();
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 1.0).unwrap();
        lp.add_row(vec![(1, 1.0)], Relation::Ge, 1.0).unwrap();
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.objective, 4.0, epsilon = 1e-10);
        assert_relative_eq!(s.x[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // min x  s.t. -x <= -2  ->  x = 2
        let mut lp = LinearProgram::<f64>::new(1);
        lp.set_objective(0, 1.0);
        lp.add_row(vec![(0, -1.0)], Relation::Le, -2.0).unwrap();
        assert_relative_eq!(lp.solve().unwrap().x[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0).unwrap();
        lp.add_row(vec![(0, 1.0)], Relation::Ge, 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::Solver(m)) if m.contains("infeasible")));

        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, -1.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::Solver(m)) if m.contains("unbounded")));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, 1.0);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0).unwrap();
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0).unwrap();
        let s = lp.solve().unwrap();
        assert_relative_eq!(s.objective, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_indices_are_rejected() {
        let mut lp = LinearProgram::<f64>::new(1);
        assert!(lp.add_row(vec![(1, 1.0)], Relation::Le, 1.0).is_err());
        assert!(lp.add_row(vec![(0, f64::NAN)], Relation::Le, 1.0).is_err());
    }

    #[test]
    fn brute_force_vertex_enumeration_agrees_on_small_programs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            // min c.x over {x in [0,1]^2, a.x <= b}; feasible because x = 0 works
            let c: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: f64 = rng.random_range(0.0..1.0);
            let mut lp = LinearProgram::<f64>::new(2);
            lp.set_objective(0, c[0]);
            lp.set_objective(1, c[1]);
            lp.add_row(vec![(0, 1.0)], Relation::Le, 1.0).unwrap();
            lp.add_row(vec![(1, 1.0)], Relation::Le, 1.0).unwrap();
            lp.add_row(vec![(0, a[0]), (1, a[1])], Relation::Le, b).unwrap();
            let got = lp.solve().unwrap().objective;
            // dense grid minimum is an upper bound within grid spacing
            let steps = 400;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps {
                    let x = [i as f64 / steps as f64, j as f64 / steps as f64];
                    if a[0] * x[0] + a[1] * x[1] <= b + 1e-12 {
                        best = best.min(c[0] * x[0] + c[1] * x[1]);
                    }
                }
            }
            assert!(got <= best + 1e-9, "lp {got} worse than grid {best}");
            assert!(got >= best - 0.01, "lp {got} far below grid {best}");
        }
    }
}
