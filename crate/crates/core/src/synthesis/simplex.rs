//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Sized for the observer-synthesis problems here (tens to a few hundred
//! variables). Variables are either bounded below or free; free variables are
//! split into a difference of two nonnegative columns internally.

use std::fmt;

pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` terms.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarBound {
    Free,
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub bound: VarBound,
}

/// `min cᵀx` subject to linear rows and per-variable lower bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("LP is infeasible; rows still violated after phase one: {rows:?}")]
    Infeasible { rows: Vec<String> },
    #[error("LP is unbounded along variable {variable}")]
    Unbounded { variable: String },
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn add_variable(&mut self, name: impl Into<String>, bound: VarBound) -> usize {
        self.variables.push(Variable { name: name.into(), bound });
        self.objective.push(0.0);
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64, label: impl Into<String>) {
        self.constraints.push(Constraint { terms, relation, rhs, label: label.into() });
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.variables.len() {
            return Err(LpError::Malformed("objective length differs from variable count".into()));
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {} has non-finite rhs", c.label)));
            }
            if let Some((j, v)) = c.terms.iter().find(|(j, v)| *j >= self.variables.len() || !v.is_finite()) {
                return Err(LpError::Malformed(format!("row {} has bad term ({j}, {v})", c.label)));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(j, v)| v * x[*j]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (v, xi) in self.variables.iter().zip(x) {
            if let VarBound::AtLeast(lb) = v.bound {
                worst = worst.max(lb - xi);
            }
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.validate()?;
        StandardForm::new(self).solve(self)
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum Column {
    Shifted { col: usize, offset: f64 },
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    columns: Vec<Column>,
    n_structural: usize,
    /// Rows as dense coefficients over structural columns, with rhs ≥ 0.
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl StandardForm {
    fn new(lp: &LinearProgram) -> Self {
        let mut columns = Vec::with_capacity(lp.n_vars());
        let mut next = 0;
        for v in &lp.variables {
            match v.bound {
                VarBound::AtLeast(lb) => {
                    columns.push(Column::Shifted { col: next, offset: lb });
                    next += 1;
                }
                VarBound::Free => {
                    columns.push(Column::Split { pos: next, neg: next + 1 });
                    next += 2;
                }
            }
        }
        let rows = lp
            .constraints
            .iter()
            .map(|c| {
                let mut coeffs = vec![0.0; next];
                let mut rhs = c.rhs;
                for &(j, a) in &c.terms {
                    match columns[j] {
                        Column::Shifted { col, offset } => {
                            coeffs[col] += a;
                            rhs -= a * offset;
                        }
                        Column::Split { pos, neg } => {
                            coeffs[pos] += a;
                            coeffs[neg] -= a;
                        }
                    }
                }
                let mut rel = c.relation;
                if rhs < 0.0 {
                    coeffs.iter_mut().for_each(|x| *x = -*x);
                    rhs = -rhs;
                    rel = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                (coeffs, rel, rhs)
            })
            .collect();
        Self { columns, n_structural: next, rows }
    }

    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let m = self.rows.len();
        let ns = self.n_structural;
        let n_slack = self.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = self.rows.iter().filter(|r| r.1 != Relation::Le).count();
        let n_total = ns + n_slack + n_art;
        let art_start = ns + n_slack;

        let mut tab = Tableau::new(m, n_total);
        let mut slack = ns;
        let mut art = art_start;
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            tab.a[i][..ns].copy_from_slice(coeffs);
            tab.rhs[i] = *rhs;
            match rel {
                Relation::Le => {
                    tab.a[i][slack] = 1.0;
                    tab.basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    tab.a[i][slack] = -1.0;
                    slack += 1;
                    tab.a[i][art] = 1.0;
                    tab.basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    tab.a[i][art] = 1.0;
                    tab.basis[i] = art;
                    art += 1;
                }
            }
        }

        let max_pivots = 50 * (m + n_total) + 1000;
        let mut pivots = 0;

        if n_art > 0 {
            let mut phase1 = vec![0.0; n_total];
            phase1[art_start..].iter_mut().for_each(|c| *c = 1.0);
            tab.run(&phase1, n_total, &mut pivots, max_pivots).map_err(|e| match e {
                // Phase one is bounded below by zero.
                RunError::Unbounded(_) => LpError::Malformed("phase one reported unbounded".into()),
                RunError::Limit => LpError::IterationLimit(max_pivots),
            })?;
            let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= art_start).map(|i| tab.rhs[i]).sum();
            if infeasibility > FEASIBILITY_TOL * (1.0 + self.rhs_scale()) {
                let rows = (0..m)
                    .filter(|&i| tab.basis[i] >= art_start && tab.rhs[i] > FEASIBILITY_TOL)
                    .map(|i| lp.constraints[i].label.clone())
                    .collect();
                return Err(LpError::Infeasible { rows });
            }
            // Drive zero-valued artificials out of the basis; rows where that is
            // impossible are linearly dependent and get dropped.
            let mut keep = vec![true; m];
            for i in 0..m {
                if tab.basis[i] < art_start {
                    continue;
                }
                match (0..art_start).find(|&j| tab.a[i][j].abs() > 1e-9) {
                    Some(j) => {
                        tab.pivot(i, j);
                        pivots += 1;
                    }
                    None => keep[i] = false,
                }
            }
            tab.retain_rows(&keep);
        }

        let mut phase2 = vec![0.0; n_total];
        for (j, col) in self.columns.iter().enumerate() {
            let c = lp.objective[j];
            match *col {
                Column::Shifted { col, .. } => phase2[col] += c,
                Column::Split { pos, neg } => {
                    phase2[pos] += c;
                    phase2[neg] -= c;
                }
            }
        }
        tab.run(&phase2, art_start, &mut pivots, max_pivots).map_err(|e| match e {
            RunError::Unbounded(ray) => {
                let names: Vec<String> = ray.iter().map(|&j| self.column_name(lp, j)).collect();
                let variable = names.iter().find(|n| !n.starts_with("slack#")).unwrap_or(&names[0]).clone();
                LpError::Unbounded { variable }
            }
            RunError::Limit => LpError::IterationLimit(max_pivots),
        })?;

        let mut z = vec![0.0; n_total];
        for (i, &b) in tab.basis.iter().enumerate() {
            z[b] = tab.rhs[i];
        }
        let values: Vec<f64> = self
            .columns
            .iter()
            .map(|col| match *col {
                Column::Shifted { col, offset } => z[col] + offset,
                Column::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect();
        let objective = lp.objective_value(&values);
        Ok(LpSolution { values, objective, pivots })
    }

    fn rhs_scale(&self) -> f64 {
        self.rows.iter().map(|r| r.2).fold(0.0, f64::max)
    }

    fn column_name(&self, lp: &LinearProgram, col: usize) -> String {
        for (j, c) in self.columns.iter().enumerate() {
            match *c {
                Column::Shifted { col: k, .. } if k == col => return lp.variables[j].name.clone(),
                Column::Split { pos, neg } if pos == col || neg == col => return lp.variables[j].name.clone(),
                _ => {}
            }
        }
        format!("slack#{col}")
    }
}

enum RunError {
    /// Columns that grow along the unbounded ray, entering column first.
    Unbounded(Vec<usize>),
    Limit,
}

struct Tableau {
    a: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(m: usize, n: usize) -> Self {
        Self { a: vec![vec![0.0; n]; m], rhs: vec![0.0; m], basis: vec![usize::MAX; m] }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        self.a[r].iter_mut().for_each(|x| *x /= p);
        self.rhs[r] /= p;
        let (pivot_row, pivot_rhs) = (self.a[r].clone(), self.rhs[r]);
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let f = self.a[i][c];
            if f == 0.0 {
                continue;
            }
            for (x, &pr) in self.a[i].iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.a[i][c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < 1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn retain_rows(&mut self, keep: &[bool]) {
        let mut k = keep.iter();
        self.a.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.rhs.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.basis.retain(|_| *k.next().unwrap());
    }

    /// Minimizes `cost` over the columns `< n_active` (others never enter).
    fn run(&mut self, cost: &[f64], n_active: usize, pivots: &mut usize, max_pivots: usize) -> Result<(), RunError> {
        loop {
            // Reduced costs d_j = c_j - c_Bᵀ B⁻¹ A_j; Bland: first improving column.
            let entering = (0..n_active).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    d -= cost[b] * self.a[i][j];
                }
                d < -OPTIMALITY_TOL
            });
            let Some(c) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aic = self.a[i][c];
                if aic > PIVOT_TOL {
                    let ratio = self.rhs[i] / aic;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                let mut ray = vec![c];
                ray.extend((0..self.a.len()).filter(|&i| self.a[i][c] < -PIVOT_TOL).map(|i| self.basis[i]));
                return Err(RunError::Unbounded(ray));
            };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > max_pivots {
                return Err(RunError::Limit);
            }
        }
    }
}
