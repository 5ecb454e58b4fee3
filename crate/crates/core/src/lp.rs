//! Dense two-phase simplex over exact rationals.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on degenerate problems (matrix games are almost always
//! degenerate). Every quantity is a [`Q`]; there is no tolerance anywhere.

use num_traits::{One, Signed, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, Q)>,
    pub relation: Relation,
    pub rhs: Q,
}

/// `maximize objective · x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<(usize, Q)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { values: Vec<Q>, objective: Q },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<(Vec<Q>, Q)> {
        match self {
            LpOutcome::Optimal { values, objective } => Some((values, objective)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            ..Default::default()
        }
    }

    pub fn maximize(mut self, objective: Vec<(usize, Q)>) -> Self {
        self.objective = objective;
        self
    }

    pub fn minimize(mut self, objective: Vec<(usize, Q)>) -> Self {
        self.objective = objective.into_iter().map(|(j, c)| (j, -c)).collect();
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<(usize, Q)>, relation: Relation, rhs: Q) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Solves the program. For `minimize`d programs the reported objective
    /// is that of the negated (maximized) form.
    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }

    /// Solves a program whose constraints are all `<=` with nonnegative
    /// right-hand sides, returning `(values, objective, duals)` with one dual
    /// per constraint. `None` when unbounded.
    pub fn solve_with_duals(&self) -> Option<(Vec<Q>, Q, Vec<Q>)> {
        assert!(
            self.constraints
                .iter()
                .all(|c| c.relation == Relation::Le && !c.rhs.is_negative()),
            "dual extraction needs <= rows with nonnegative right-hand sides"
        );
        let mut tableau = Tableau::build(self);
        let (values, objective) = tableau.primal(&self.objective, self.num_vars, &[])?;
        // the slack of row i is column num_vars + i
        let duals = (0..self.constraints.len())
            .map(|i| -tableau.reduced[self.num_vars + i].clone())
            .collect();
        Some((values, objective, duals))
    }
}

/// A program after phase one, reusable for several objectives.
#[derive(Clone)]
pub struct FeasibleProgram {
    tableau: Tableau,
    num_vars: usize,
}

impl LinearProgram {
    /// Runs phase one; `None` if infeasible. The objective is ignored.
    pub fn feasible(&self) -> Option<FeasibleProgram> {
        let mut tableau = Tableau::build(self);
        tableau.phase_one().then_some(FeasibleProgram {
            tableau,
            num_vars: self.num_vars,
        })
    }
}

impl FeasibleProgram {
    /// Maximizes `objective`; `None` if unbounded.
    pub fn maximize(&self, objective: &[(usize, Q)]) -> Option<(Vec<Q>, Q)> {
        self.tableau.clone().primal(objective, self.num_vars, &[])
    }

    /// Maximizes each objective in turn over the optima of the earlier ones.
    /// `None` if some stage is unbounded.
    pub fn maximize_lexicographic(mut self, objectives: &[Vec<(usize, Q)>]) -> Option<Vec<Q>> {
        let mut frozen: Vec<Vec<Q>> = Vec::new();
        let mut values = None;
        for objective in objectives {
            values = Some(self.tableau.primal(objective, self.num_vars, &frozen)?.0);
            // optimal reduced costs are <= 0; barring their nonzero columns
            // from entering keeps this objective at its optimum
            frozen.push(self.tableau.reduced.clone());
        }
        values.or_else(|| self.maximize(&[]).map(|(v, _)| v))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Original,
    Slack,
    Artificial,
}

#[derive(Clone)]
struct Tableau {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    /// Reduced costs `c_j - z_j` of the active objective.
    reduced: Vec<Q>,
    objective_value: Q,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.constraints.len();
        let mut kinds = vec![ColumnKind::Original; lp.num_vars];
        let mut extra: Vec<(usize, ColumnKind, Q)> = Vec::new();
        let mut dense_rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![Q::zero(); lp.num_vars];
            for (j, v) in &c.coeffs {
                row[*j] += v;
            }
            let mut relation = c.relation;
            let mut b = c.rhs.clone();
            if b.is_negative() {
                row.iter_mut().for_each(|v| *v = -v.clone());
                b = -b;
                relation = match relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            match relation {
                Relation::Le => extra.push((i, ColumnKind::Slack, Q::one())),
                Relation::Ge => {
                    extra.push((i, ColumnKind::Slack, -Q::one()));
                    extra.push((i, ColumnKind::Artificial, Q::one()));
                }
                Relation::Eq => extra.push((i, ColumnKind::Artificial, Q::one())),
            }
            dense_rows.push(row);
            rhs.push(b);
        }
        let width = lp.num_vars + extra.len();
        let mut basis = vec![usize::MAX; m];
        for row in dense_rows.iter_mut() {
            row.resize(width, Q::zero());
        }
        for (offset, (i, kind, v)) in extra.into_iter().enumerate() {
            let col = lp.num_vars + offset;
            kinds.push(kind);
            // Slack with +1 or an artificial starts basic in its row.
            if v.is_positive() {
                basis[i] = col;
            }
            dense_rows[i][col] = v;
        }
        Tableau {
            rows: dense_rows,
            rhs,
            basis,
            kinds,
            reduced: vec![Q::zero(); width],
            objective_value: Q::zero(),
        }
    }

    fn set_objective(&mut self, costs: &[Q]) {
        // reduced_j = c_j - sum_i c_B(i) * a_ij ; value = sum_i c_B(i) * b_i
        let mut reduced = costs.to_vec();
        let mut value = Q::zero();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in self.rows[i].iter().enumerate() {
                if !a.is_zero() {
                    reduced[j] -= cb * a;
                }
            }
            value += cb * &self.rhs[i];
        }
        self.reduced = reduced;
        self.objective_value = value;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        if !pivot.is_one() {
            let inv = pivot.recip();
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[row] *= &inv;
        }
        let support: Vec<usize> = self.rows[row]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(j, _)| j)
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[row]);
        let pivot_rhs = self.rhs[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for &j in &support {
                r[j] -= &factor * &pivot_row[j];
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !self.reduced[col].is_zero() {
            let factor = self.reduced[col].clone();
            for &j in &support {
                self.reduced[j] -= &factor * &pivot_row[j];
            }
            self.objective_value += &factor * &pivot_rhs;
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the current objective. Returns false when
    /// the objective is unbounded.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let entering = (0..self.reduced.len())
                .find(|&j| allowed(j) && self.reduced[j].is_positive());
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        if !self.phase_one() {
            return LpOutcome::Infeasible;
        }
        match self.primal(&lp.objective, lp.num_vars, &[]) {
            Some((values, objective)) => LpOutcome::Optimal { values, objective },
            None => LpOutcome::Unbounded,
        }
    }

    /// Drives artificial variables out of the basis; false if infeasible.
    fn phase_one(&mut self) -> bool {
        let width = self.kinds.len();
        let has_artificial = self.kinds.contains(&ColumnKind::Artificial);
        if has_artificial {
            let costs: Vec<Q> = self
                .kinds
                .iter()
                .map(|k| {
                    if *k == ColumnKind::Artificial {
                        -Q::one()
                    } else {
                        Q::zero()
                    }
                })
                .collect();
            self.set_objective(&costs);
            self.optimize(&|_| true);
            if !self.objective_value.is_zero() {
                return false;
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < self.rows.len() {
                if self.kinds[self.basis[i]] == ColumnKind::Artificial {
                    let replacement = (0..width).find(|&j| {
                        self.kinds[j] != ColumnKind::Artificial && !self.rows[i][j].is_zero()
                    });
                    match replacement {
                        Some(j) => self.pivot(i, j),
                        None => {
                            self.rows.remove(i);
                            self.rhs.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        true
    }

    /// Phase two from a feasible basis; `None` if unbounded. Columns with a
    /// nonzero entry in any of `frozen` may not enter.
    fn primal(&mut self, objective: &[(usize, Q)], num_vars: usize, frozen: &[Vec<Q>]) -> Option<(Vec<Q>, Q)> {
        let width = self.kinds.len();
        let mut costs = vec![Q::zero(); width];
        for (j, c) in objective {
            costs[*j] += c;
        }
        self.set_objective(&costs);
        let kinds = self.kinds.clone();
        let allowed = |j: usize| kinds[j] != ColumnKind::Artificial && frozen.iter().all(|r| r[j].is_zero());
        if !self.optimize(&allowed) {
            return None;
        }
        let mut values = vec![Q::zero(); num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < num_vars {
                values[b] = self.rhs[i].clone();
            }
        }
        Some((values, self.objective_value.clone()))
    }
}
