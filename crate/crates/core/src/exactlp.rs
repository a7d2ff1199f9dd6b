//! Exact rational linear programming.
//!
//! Programs are stated in a general form (any sense, `<=`/`=`/`>=` rows,
//! arbitrary finite or infinite variable bounds) and solved by a two-phase
//! revised simplex over [`Rat`] with a dense basis inverse, sparse columns and
//! Bland's rule, so degenerate programs always terminate.
//!
//! Dual values follow the shadow-price convention in the program's own sense:
//! `dual[i]` is the rate of change of the optimal objective per unit increase
//! of `rhs[i]`, and `reduced_costs[j] = c[j] - sum_i a[i][j] * dual[i]`. With
//! that convention the dual objective is
//! `sum_i rhs[i] * dual[i] + sum_j d[j] * (bound of x[j] selected by sign of d[j])`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rat, Rat};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    /// `None` is minus infinity.
    pub lower: Option<Rat>,
    /// `None` is plus infinity.
    pub upper: Option<Rat>,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

#[derive(Clone, Debug)]
pub struct LinProgram {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub objective: BTreeMap<VarId, Rat>,
    pub constraints: Vec<Constraint>,
}

impl LinProgram {
    pub fn new(sense: Sense) -> Self {
        LinProgram { sense, variables: Vec::new(), objective: BTreeMap::new(), constraints: Vec::new() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rat>, upper: Option<Rat>) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper });
        VarId(self.variables.len() - 1)
    }

    /// Variable with the default bounds `[0, +inf)`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(Rat::zero()), None)
    }

    pub fn set_objective(&mut self, var: VarId, coeff: Rat) {
        if coeff.is_zero() {
            self.objective.remove(&var);
        } else {
            self.objective.insert(var, coeff);
        }
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, Rat)>,
        relation: Relation,
        rhs: Rat,
    ) -> RowId {
        self.constraints.push(Constraint { name: name.into(), coeffs, relation, rhs });
        RowId(self.constraints.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        let check = |v: &VarId, ctx: &str| {
            if v.0 >= n {
                Err(Error::input(format!("{ctx} references undeclared variable #{}", v.0)))
            } else {
                Ok(())
            }
        };
        for v in self.objective.keys() {
            check(v, "objective")?;
        }
        for c in &self.constraints {
            for (v, _) in &c.coeffs {
                check(v, &format!("constraint {:?}", c.name))?;
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        self.objective.iter().map(|(v, c)| c * &x[v.0]).sum()
    }

    /// Plain-text rendering, one row per line: `name: c1·x1 + c2·x2 REL rhs`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let terms = |coeffs: &mut dyn Iterator<Item = (&VarId, &Rat)>| {
            let parts: Vec<String> = coeffs
                .map(|(v, c)| format!("{}·{}", format_rat(c), self.variables[v.0].name))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        let _ = writeln!(out, "{sense}: {}", terms(&mut self.objective.iter()));
        for c in &self.constraints {
            let _ = writeln!(
                out,
                "{}: {} {} {}",
                c.name,
                terms(&mut c.coeffs.iter().map(|(v, r)| (v, r))),
                c.relation.symbol(),
                format_rat(&c.rhs)
            );
        }
        for v in &self.variables {
            let lo = v.lower.as_ref().map(format_rat).unwrap_or_else(|| "-inf".into());
            let hi = v.upper.as_ref().map(format_rat).unwrap_or_else(|| "+inf".into());
            if !(v.lower.as_ref().is_some_and(Zero::is_zero) && v.upper.is_none()) {
                let _ = writeln!(out, "bound {}: {lo} <= {} <= {hi}", v.name, v.name);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LinSolution {
    pub status: Status,
    pub primal: Vec<Rat>,
    pub dual: Vec<Rat>,
    pub reduced_costs: Vec<Rat>,
    pub objective: Rat,
    /// Dual objective recomputed from `dual` and the bounds; equals
    /// `objective` for every optimal solve.
    pub dual_objective: Rat,
    /// For infeasible programs: multipliers `y` on the constraints with
    /// `y >= 0` on `>=` rows, `y <= 0` on `<=` rows, such that
    /// `max over the bound box of (y^T A) x < y^T b`.
    pub farkas: Option<Vec<Rat>>,
    pub iterations: usize,
}

impl LinSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

static SOLVES: AtomicUsize = AtomicUsize::new(0);
static OPTIMAL: AtomicUsize = AtomicUsize::new(0);
static DUALITY_MISMATCH: AtomicUsize = AtomicUsize::new(0);

/// Process-wide solver counters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveStats {
    pub solves: usize,
    pub optimal: usize,
    /// Optimal solves whose recomputed dual objective differed from the
    /// primal objective. Always zero for a correct solver.
    pub duality_mismatches: usize,
}

pub fn stats() -> SolveStats {
    SolveStats {
        solves: SOLVES.load(Ordering::SeqCst),
        optimal: OPTIMAL.load(Ordering::SeqCst),
        duality_mismatches: DUALITY_MISMATCH.load(Ordering::SeqCst),
    }
}

// ---------------------------------------------------------------------------
// standard form: min c'x' s.t. A'x' = b', x' >= 0, b' >= 0

enum VarMap {
    /// x = shift + sign * x'[col]
    Shift { col: usize, shift: Rat, negate: bool },
    /// x = x'[pos] - x'[neg]
    Free { pos: usize, neg: usize },
}

struct StandardForm {
    rows: usize,
    cols: Vec<Vec<(usize, Rat)>>,
    cost: Vec<Rat>,
    rhs: Vec<Rat>,
    var_map: Vec<VarMap>,
    /// rows of the original program that were negated to make rhs >= 0
    negated: Vec<bool>,
    /// per row, a column equal to +e_row usable as an initial basic variable
    unit_col: Vec<Option<usize>>,
}

fn to_standard_form(lp: &LinProgram) -> StandardForm {
    let min_sign = if lp.sense == Sense::Maximize { -Rat::one() } else { Rat::one() };
    let mut cols: Vec<Vec<(usize, Rat)>> = Vec::new();
    let mut cost: Vec<Rat> = Vec::new();
    let mut var_map = Vec::with_capacity(lp.variables.len());
    let mut bound_rows: Vec<(usize, Rat)> = Vec::new();
    for (j, v) in lp.variables.iter().enumerate() {
        let c = lp.objective.get(&VarId(j)).map(|c| c * &min_sign).unwrap_or_else(Rat::zero);
        match (&v.lower, &v.upper) {
            (Some(l), upper) => {
                let col = cols.len();
                cols.push(Vec::new());
                cost.push(c);
                if let Some(u) = upper {
                    bound_rows.push((col, u - l));
                }
                var_map.push(VarMap::Shift { col, shift: l.clone(), negate: false });
            }
            (None, Some(u)) => {
                let col = cols.len();
                cols.push(Vec::new());
                cost.push(-c);
                var_map.push(VarMap::Shift { col, shift: u.clone(), negate: true });
            }
            (None, None) => {
                let pos = cols.len();
                cols.push(Vec::new());
                cols.push(Vec::new());
                cost.push(c.clone());
                cost.push(-c);
                var_map.push(VarMap::Free { pos, neg: pos + 1 });
            }
        }
    }

    let m = lp.constraints.len() + bound_rows.len();
    let mut rhs = Vec::with_capacity(m);
    let mut slack_sign: Vec<Option<Rat>> = Vec::with_capacity(m);
    for (i, con) in lp.constraints.iter().enumerate() {
        let mut merged: BTreeMap<usize, Rat> = BTreeMap::new();
        let mut b = con.rhs.clone();
        for (v, a) in &con.coeffs {
            if a.is_zero() {
                continue;
            }
            match &var_map[v.0] {
                VarMap::Shift { col, shift, negate } => {
                    b -= a * shift;
                    let coef = if *negate { -a.clone() } else { a.clone() };
                    *merged.entry(*col).or_insert_with(Rat::zero) += coef;
                }
                VarMap::Free { pos, neg } => {
                    *merged.entry(*pos).or_insert_with(Rat::zero) += a.clone();
                    *merged.entry(*neg).or_insert_with(Rat::zero) -= a.clone();
                }
            }
        }
        for (col, a) in merged {
            if !a.is_zero() {
                cols[col].push((i, a));
            }
        }
        rhs.push(b);
        slack_sign.push(match con.relation {
            Relation::Le => Some(Rat::one()),
            Relation::Ge => Some(-Rat::one()),
            Relation::Eq => None,
        });
    }
    for (k, (col, ub)) in bound_rows.into_iter().enumerate() {
        let row = lp.constraints.len() + k;
        cols[col].push((row, Rat::one()));
        rhs.push(ub);
        slack_sign.push(Some(Rat::one()));
    }
    for (row, s) in slack_sign.iter().enumerate() {
        if let Some(s) = s {
            cols.push(vec![(row, s.clone())]);
            cost.push(Rat::zero());
        }
    }
    // negate rows with negative rhs
    let negated: Vec<bool> = rhs.iter().map(|b| b.is_negative()).collect();
    for b in rhs.iter_mut() {
        if b.is_negative() {
            *b = -b.clone();
        }
    }
    let mut unit_col = vec![None; m];
    for (j, col) in cols.iter_mut().enumerate() {
        for (row, a) in col.iter_mut() {
            if negated[*row] {
                *a = -a.clone();
            }
        }
        if col.len() == 1 && col[0].1.is_one() && unit_col[col[0].0].is_none() {
            // only slack columns qualify; structural singletons are fine too
            unit_col[col[0].0] = Some(j);
        }
    }
    StandardForm { rows: m, cols, cost, rhs, var_map, negated, unit_col }
}

// ---------------------------------------------------------------------------
// revised simplex with a dense basis inverse

struct Tableau<'a> {
    m: usize,
    cols: &'a [Vec<(usize, Rat)>],
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<Vec<Rat>>,
    xb: Vec<Rat>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn duals(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut y = vec![Rat::zero(); self.m];
        for (i, &bcol) in self.basis.iter().enumerate() {
            let cb = &cost[bcol];
            if cb.is_zero() {
                continue;
            }
            for (r, yr) in y.iter_mut().enumerate() {
                let v = &self.binv[i][r];
                if !v.is_zero() {
                    *yr += cb * v;
                }
            }
        }
        y
    }

    fn column(&self, j: usize) -> Vec<Rat> {
        let mut u = vec![Rat::zero(); self.m];
        for (i, ui) in u.iter_mut().enumerate() {
            let row = &self.binv[i];
            let mut s = Rat::zero();
            for (r, a) in &self.cols[j] {
                let v = &row[*r];
                if !v.is_zero() {
                    s += v * a;
                }
            }
            *ui = s;
        }
        u
    }

    fn pivot(&mut self, p: usize, j: usize, u: &[Rat]) {
        let piv = u[p].clone();
        let theta = &self.xb[p] / &piv;
        for i in 0..self.m {
            if i != p && !u[i].is_zero() {
                let delta = &theta * &u[i];
                self.xb[i] -= delta;
            }
        }
        self.xb[p] = theta;
        let prow: Vec<Rat> = self.binv[p].iter().map(|v| v / &piv).collect();
        for i in 0..self.m {
            if i != p && !u[i].is_zero() {
                let f = &u[i];
                for (r, pv) in prow.iter().enumerate() {
                    if !pv.is_zero() {
                        let d = f * pv;
                        self.binv[i][r] -= d;
                    }
                }
            }
        }
        self.binv[p] = prow;
        self.is_basic[self.basis[p]] = false;
        self.basis[p] = j;
        self.is_basic[j] = true;
        self.iterations += 1;
    }

    /// Minimizes `cost` over columns `0..allowed`, Bland's rule throughout.
    fn optimize(&mut self, cost: &[Rat], allowed: usize) -> Outcome {
        loop {
            let y = self.duals(cost);
            let mut entering = None;
            for j in 0..allowed {
                if self.is_basic[j] {
                    continue;
                }
                let mut d = cost[j].clone();
                for (r, a) in &self.cols[j] {
                    if !y[*r].is_zero() {
                        d -= &y[*r] * a;
                    }
                }
                if d.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return Outcome::Optimal };
            let u = self.column(j);
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.m {
                if u[i].is_positive() {
                    let ratio = &self.xb[i] / &u[i];
                    let better = match &leave {
                        None => true,
                        Some((p, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*p]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((p, _)) = leave else { return Outcome::Unbounded };
            self.pivot(p, j, &u);
        }
    }
}

/// Solves `lp` exactly.
pub fn solve(lp: &LinProgram) -> Result<LinSolution> {
    lp.validate()?;
    SOLVES.fetch_add(1, Ordering::SeqCst);
    let nvars = lp.variables.len();
    let nrows = lp.constraints.len();

    let empty_box = lp.variables.iter().any(|v| matches!((&v.lower, &v.upper), (Some(l), Some(u)) if l > u));
    if empty_box {
        return Ok(infeasible(nrows, Some(vec![Rat::zero(); nrows]), 0));
    }

    let sf = to_standard_form(lp);
    let m = sf.rows;
    let n_real = sf.cols.len();
    let mut cols = sf.cols.clone();
    let mut basis = Vec::with_capacity(m);
    for row in 0..m {
        match sf.unit_col[row] {
            Some(j) => basis.push(j),
            None => {
                cols.push(vec![(row, Rat::one())]);
                basis.push(cols.len() - 1);
            }
        }
    }
    let n_total = cols.len();
    let mut is_basic = vec![false; n_total];
    for &j in &basis {
        is_basic[j] = true;
    }
    let mut binv = vec![vec![Rat::zero(); m]; m];
    for (i, row) in binv.iter_mut().enumerate() {
        row[i] = Rat::one();
    }
    let mut tab = Tableau { m, cols: &cols, basis, is_basic, binv, xb: sf.rhs.clone(), iterations: 0 };

    // phase one
    if n_total > n_real {
        let mut phase1 = vec![Rat::zero(); n_total];
        for c in phase1.iter_mut().skip(n_real) {
            *c = Rat::one();
        }
        tab.optimize(&phase1, n_total);
        let infeasibility: Rat =
            tab.basis.iter().zip(&tab.xb).filter(|(j, _)| **j >= n_real).map(|(_, v)| v.clone()).sum();
        if infeasibility.is_positive() {
            let y = tab.duals(&phase1);
            let farkas = (0..nrows).map(|i| if sf.negated[i] { -y[i].clone() } else { y[i].clone() }).collect();
            return Ok(infeasible(nrows, Some(farkas), tab.iterations));
        }
        // drive zero-level artificials out of the basis where possible
        for p in 0..m {
            if tab.basis[p] < n_real {
                continue;
            }
            let mut found = None;
            for j in 0..n_real {
                if tab.is_basic[j] {
                    continue;
                }
                let mut s = Rat::zero();
                for (r, a) in &cols[j] {
                    s += &tab.binv[p][*r] * a;
                }
                if !s.is_zero() {
                    found = Some(j);
                    break;
                }
            }
            if let Some(j) = found {
                let u = tab.column(j);
                tab.pivot(p, j, &u);
            }
        }
    }

    // phase two
    let mut cost = sf.cost.clone();
    cost.resize(n_total, Rat::zero());
    if let Outcome::Unbounded = tab.optimize(&cost, n_real) {
        let mut sol = infeasible(nrows, None, tab.iterations);
        sol.status = Status::Unbounded;
        return Ok(sol);
    }

    let mut xstd = vec![Rat::zero(); n_total];
    for (i, &j) in tab.basis.iter().enumerate() {
        xstd[j] = tab.xb[i].clone();
    }
    let ystd = tab.duals(&cost);
    let primal: Vec<Rat> = sf
        .var_map
        .iter()
        .map(|vm| match vm {
            VarMap::Shift { col, shift, negate } => {
                if *negate {
                    shift - &xstd[*col]
                } else {
                    shift + &xstd[*col]
                }
            }
            VarMap::Free { pos, neg } => &xstd[*pos] - &xstd[*neg],
        })
        .collect();
    let flip = lp.sense == Sense::Maximize;
    let dual: Vec<Rat> = (0..nrows)
        .map(|i| {
            let y = if sf.negated[i] { -ystd[i].clone() } else { ystd[i].clone() };
            if flip {
                -y
            } else {
                y
            }
        })
        .collect();
    let reduced_costs = reduced_costs(lp, &dual);
    let objective = lp.objective_value(&primal);
    let dual_objective = dual_objective(lp, &dual, &reduced_costs).unwrap_or_else(|| objective.clone() + Rat::one());
    OPTIMAL.fetch_add(1, Ordering::SeqCst);
    if dual_objective != objective {
        DUALITY_MISMATCH.fetch_add(1, Ordering::SeqCst);
    }
    debug_assert_eq!(primal.len(), nvars);
    Ok(LinSolution {
        status: Status::Optimal,
        primal,
        dual,
        reduced_costs,
        objective,
        dual_objective,
        farkas: None,
        iterations: tab.iterations,
    })
}

fn infeasible(nrows: usize, farkas: Option<Vec<Rat>>, iterations: usize) -> LinSolution {
    LinSolution {
        status: Status::Infeasible,
        primal: Vec::new(),
        dual: vec![Rat::zero(); nrows],
        reduced_costs: Vec::new(),
        objective: Rat::zero(),
        dual_objective: Rat::zero(),
        farkas,
        iterations,
    }
}

fn reduced_costs(lp: &LinProgram, dual: &[Rat]) -> Vec<Rat> {
    let mut d: Vec<Rat> =
        (0..lp.variables.len()).map(|j| lp.objective.get(&VarId(j)).cloned().unwrap_or_else(Rat::zero)).collect();
    for (i, con) in lp.constraints.iter().enumerate() {
        if dual[i].is_zero() {
            continue;
        }
        for (v, a) in &con.coeffs {
            d[v.0] -= a * &dual[i];
        }
    }
    d
}

/// `None` when a reduced cost points at an infinite bound (dual infeasible).
fn dual_objective(lp: &LinProgram, dual: &[Rat], d: &[Rat]) -> Option<Rat> {
    let mut total: Rat = lp.constraints.iter().zip(dual).map(|(c, y)| &c.rhs * y).sum();
    for (v, dj) in lp.variables.iter().zip(d) {
        if dj.is_zero() {
            continue;
        }
        // maximize: positive d pushes x up; minimize: positive d pushes x down
        let toward_upper = dj.is_positive() == (lp.sense == Sense::Maximize);
        let bound = if toward_upper { v.upper.as_ref() } else { v.lower.as_ref() };
        total += dj * bound?;
    }
    Some(total)
}

#[derive(Clone, Debug, Default)]
pub struct OptimalityReport {
    pub violations: Vec<String>,
}

impl OptimalityReport {
    pub fn is_certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a claimed optimal solution against `lp` from scratch: primal
/// feasibility, dual feasibility, complementary slackness and equality of
/// the primal and dual objectives.
pub fn check_optimality(lp: &LinProgram, sol: &LinSolution) -> OptimalityReport {
    let mut violations = Vec::new();
    if sol.status != Status::Optimal {
        violations.push(format!("status is {:?}, not optimal", sol.status));
        return OptimalityReport { violations };
    }
    if let Err(e) = lp.validate() {
        violations.push(e.to_string());
        return OptimalityReport { violations };
    }
    if sol.primal.len() != lp.variables.len() || sol.dual.len() != lp.constraints.len() {
        violations.push("solution vector lengths do not match the program".into());
        return OptimalityReport { violations };
    }
    let x = &sol.primal;
    for (v, xj) in lp.variables.iter().zip(x) {
        if v.lower.as_ref().is_some_and(|l| xj < l) || v.upper.as_ref().is_some_and(|u| xj > u) {
            violations.push(format!("primal bound violated: {} = {}", v.name, format_rat(xj)));
        }
    }
    let max = lp.sense == Sense::Maximize;
    for (con, y) in lp.constraints.iter().zip(&sol.dual) {
        let lhs: Rat = con.coeffs.iter().map(|(v, a)| a * &x[v.0]).sum();
        let ok = match con.relation {
            Relation::Le => lhs <= con.rhs,
            Relation::Eq => lhs == con.rhs,
            Relation::Ge => lhs >= con.rhs,
        };
        if !ok {
            violations.push(format!("primal row violated: {}", con.name));
        }
        // sign of a shadow price: loosening a <= row can only help a max
        let sign_ok = match (con.relation, max) {
            (Relation::Eq, _) => true,
            (Relation::Le, true) | (Relation::Ge, false) => !y.is_negative(),
            (Relation::Le, false) | (Relation::Ge, true) => !y.is_positive(),
        };
        if !sign_ok {
            violations.push(format!("dual sign violated: {}", con.name));
        }
        if !y.is_zero() && lhs != con.rhs {
            violations.push(format!("complementary slackness violated on row {}", con.name));
        }
    }
    let d = reduced_costs(lp, &sol.dual);
    for ((v, dj), xj) in lp.variables.iter().zip(&d).zip(x) {
        if dj.is_zero() {
            continue;
        }
        let toward_upper = dj.is_positive() == max;
        let bound = if toward_upper { v.upper.as_ref() } else { v.lower.as_ref() };
        match bound {
            None => violations.push(format!("dual infeasible: reduced cost of {} points at an infinite bound", v.name)),
            Some(b) if b != xj => {
                violations.push(format!("complementary slackness violated on variable {}", v.name))
            }
            _ => {}
        }
    }
    let primal_obj = lp.objective_value(x);
    if primal_obj != sol.objective {
        violations.push(format!(
            "objective mismatch: reported {} but c·x = {}",
            format_rat(&sol.objective),
            format_rat(&primal_obj)
        ));
    }
    if let Some(dobj) = dual_objective(lp, &sol.dual, &d) {
        if dobj != primal_obj {
            violations.push(format!(
                "objective gap: primal {} vs dual {}",
                format_rat(&primal_obj),
                format_rat(&dobj)
            ));
        }
    }
    OptimalityReport { violations }
}

/// Checks a Farkas certificate of infeasibility for `lp`.
pub fn verify_farkas(lp: &LinProgram, y: &[Rat]) -> bool {
    if y.len() != lp.constraints.len() {
        return false;
    }
    if lp.variables.iter().any(|v| matches!((&v.lower, &v.upper), (Some(l), Some(u)) if l > u)) {
        return true;
    }
    let mut g = vec![Rat::zero(); lp.variables.len()];
    let mut yb = Rat::zero();
    for (con, yi) in lp.constraints.iter().zip(y) {
        let sign_ok = match con.relation {
            Relation::Eq => true,
            Relation::Ge => !yi.is_negative(),
            Relation::Le => !yi.is_positive(),
        };
        if !sign_ok {
            return false;
        }
        yb += &con.rhs * yi;
        for (v, a) in &con.coeffs {
            g[v.0] += a * yi;
        }
    }
    let mut sup = Rat::zero();
    for (v, gj) in lp.variables.iter().zip(&g) {
        if gj.is_zero() {
            continue;
        }
        let bound = if gj.is_positive() { v.upper.as_ref() } else { v.lower.as_ref() };
        match bound {
            Some(b) => sup += gj * b,
            None => return false,
        }
    }
    sup < yb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn zero() -> Rat {
        Rat::zero()
    }

    #[test]
    fn single_variable_upper_row() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(x, int(1));
        lp.add_constraint("cap", vec![(x, int(1))], Relation::Le, int(3));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.primal[0], int(3));
        assert_eq!(sol.dual[0], int(1));
        assert!(check_optimality(&lp, &sol).is_certified());
    }

    #[test]
    fn contradictory_rows_are_infeasible_with_certificate() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(x, int(1));
        lp.add_constraint("upper", vec![(x, int(1))], Relation::Le, int(0));
        lp.add_constraint("lower", vec![(x, int(1))], Relation::Ge, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, Status::Infeasible);
        assert!(verify_farkas(&lp, sol.farkas.as_ref().unwrap()));
    }

    #[test]
    fn suboptimal_claim_reports_objective_gap() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(x, int(1));
        lp.add_constraint("cap", vec![(x, int(1))], Relation::Le, int(3));
        let claimed = LinSolution {
            status: Status::Optimal,
            primal: vec![int(2)],
            dual: vec![int(1)],
            reduced_costs: vec![zero()],
            objective: int(2),
            dual_objective: int(3),
            farkas: None,
            iterations: 0,
        };
        let report = check_optimality(&lp, &claimed);
        assert!(report.violations.iter().any(|v| v.starts_with("objective gap")), "{:?}", report.violations);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        let y = lp.add_nonneg("y");
        lp.set_objective(x, int(1));
        lp.add_constraint("r", vec![(x, int(1)), (y, int(-1))], Relation::Le, int(1));
        assert_eq!(solve(&lp).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn undeclared_variable_is_input_error() {
        let mut lp = LinProgram::new(Sense::Minimize);
        lp.add_nonneg("x");
        lp.add_constraint("r", vec![(VarId(7), int(1))], Relation::Le, int(1));
        assert!(matches!(solve(&lp), Err(Error::Input(_))));
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // cycles under the textbook largest-coefficient rule
        let mut lp = LinProgram::new(Sense::Minimize);
        let x4 = lp.add_nonneg("x4");
        let x5 = lp.add_nonneg("x5");
        let x6 = lp.add_nonneg("x6");
        let x7 = lp.add_nonneg("x7");
        lp.set_objective(x4, rat(-3, 4));
        lp.set_objective(x5, int(20));
        lp.set_objective(x6, rat(-1, 2));
        lp.set_objective(x7, int(6));
        lp.add_constraint("r1", vec![(x4, rat(1, 4)), (x5, int(-8)), (x6, int(-1)), (x7, int(9))], Relation::Le, zero());
        lp.add_constraint(
            "r2",
            vec![(x4, rat(1, 2)), (x5, int(-12)), (x6, rat(-1, 2)), (x7, int(3))],
            Relation::Le,
            zero(),
        );
        lp.add_constraint("r3", vec![(x6, int(1))], Relation::Le, int(1));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.objective, rat(-5, 4));
        assert!(check_optimality(&lp, &sol).is_certified());
    }

    #[test]
    fn general_bounds_and_free_variables() {
        let mut lp = LinProgram::new(Sense::Minimize);
        let x = lp.add_var("x", Some(int(-2)), Some(int(5)));
        let y = lp.add_var("y", None, Some(int(4)));
        let z = lp.add_var("z", None, None);
        lp.set_objective(x, int(1));
        lp.set_objective(y, int(-1));
        lp.set_objective(z, int(2));
        lp.add_constraint("sum", vec![(x, int(1)), (y, int(1))], Relation::Ge, int(1));
        lp.add_constraint("zfix", vec![(z, int(1)), (x, int(1))], Relation::Eq, rat(1, 3));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        // z = 1/3 - x, so the objective is 2/3 - x - y: x = 5, y = 4
        assert_eq!(sol.objective, rat(-25, 3));
        assert_eq!(sol.dual_objective, sol.objective);
        assert!(check_optimality(&lp, &sol).is_certified());
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let a = lp.add_nonneg("a");
        let b = lp.add_nonneg("b");
        lp.set_objective(a, int(2));
        lp.set_objective(b, int(1));
        lp.add_constraint("e1", vec![(a, int(1)), (b, int(1))], Relation::Eq, int(1));
        lp.add_constraint("e2", vec![(a, int(2)), (b, int(2))], Relation::Eq, int(2));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.objective, int(2));
        assert!(check_optimality(&lp, &sol).is_certified());
    }

    #[test]
    fn rhs_sensitivity_matches_dual() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 9, x <= 3
        let build = |r1: Rat| {
            let mut lp = LinProgram::new(Sense::Maximize);
            let x = lp.add_nonneg("x");
            let y = lp.add_nonneg("y");
            lp.set_objective(x, int(3));
            lp.set_objective(y, int(2));
            lp.add_constraint("r1", vec![(x, int(1)), (y, int(1))], Relation::Le, r1);
            lp.add_constraint("r2", vec![(x, int(1)), (y, int(3))], Relation::Le, int(9));
            lp.add_constraint("r3", vec![(x, int(1))], Relation::Le, int(3));
            lp
        };
        let base = solve(&build(int(4))).unwrap();
        let bumped = solve(&build(int(5))).unwrap();
        assert_eq!(&bumped.objective - &base.objective, base.dual[0]);
    }

    #[test]
    fn fixed_variable_and_empty_box() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_var("x", Some(int(2)), Some(int(2)));
        lp.set_objective(x, int(5));
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.objective, int(10));
        assert!(check_optimality(&lp, &sol).is_certified());

        let mut lp = LinProgram::new(Sense::Maximize);
        lp.add_var("x", Some(int(3)), Some(int(2)));
        assert_eq!(solve(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn dump_lists_rows_with_rationals() {
        let mut lp = LinProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x");
        lp.set_objective(x, rat(1, 2));
        lp.add_constraint("cap", vec![(x, rat(3, 4))], Relation::Le, int(3));
        let text = lp.dump();
        assert!(text.contains("cap: 3/4·x <= 3"), "{text}");
        assert!(text.contains("maximize: 1/2·x"));
    }
}
