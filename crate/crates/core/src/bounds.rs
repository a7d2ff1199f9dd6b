//! The efficiency bound, its variants, and the partition bounds, each as an
//! exact LP whose dual values become a Bell-functional certificate.
//!
//! Efficiency-type programs share one shape: maximize `ζ` subject to
//! `Σ_ℓ q_ℓ ℓ(a,b|x,y) = (ζ or ζ_xy or s_abxy)` on every outcome row and
//! `Σ_ℓ q_ℓ = 1`. If `y` are the outcome-row duals and `t = ζ_opt` the dual
//! of the normalization row, then `B = -y/t` satisfies `B(ℓ) ≤ 1` on the
//! strategy class and certifies the optimum.

use num_traits::{One, Signed, Zero};

use crate::certificates::{BellFunctional, Certificate, CertificateKind, ValueRule};
use crate::distributions::{Dist, Sizes};
use crate::exactlp::{self, LinProgram, LinSolution, Relation, Sense, Status, VarId};
use crate::rational::{int, Rat};
use crate::strategies::{self, max_bell_value, DetStrategy, StrategyClass};
use crate::{Error, Result, DEFAULT_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Eff,
    EffEps,
    EffEta,
    EffNc,
    EffOneway,
    Nu,
    PrtDirect,
    PrtViaEff,
    PrtFunction,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Eff => "eff",
            BoundKind::EffEps => "eff_eps",
            BoundKind::EffEta => "eff_eta",
            BoundKind::EffNc => "eff_nc",
            BoundKind::EffOneway => "eff_oneway",
            BoundKind::Nu => "nu",
            BoundKind::PrtDirect => "prt",
            BoundKind::PrtViaEff => "prt_via_eff",
            BoundKind::PrtFunction => "prt_function",
        }
    }

    /// Certificate kind produced by this bound, if any.
    pub fn certificate_kind(self) -> Option<CertificateKind> {
        match self {
            BoundKind::Eff
            | BoundKind::EffEps
            | BoundKind::EffEta
            | BoundKind::EffNc
            | BoundKind::PrtDirect
            | BoundKind::PrtViaEff => Some(CertificateKind::InefficiencyResistant),
            BoundKind::EffOneway => Some(CertificateKind::InefficiencyResistantOneway),
            BoundKind::Nu => Some(CertificateKind::Normalized),
            BoundKind::PrtFunction => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundOptions {
    pub cap: u128,
    pub colgen: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions { cap: DEFAULT_CAP, colgen: false }
    }
}

/// `Infinite` arises for `eff_oneway` when Alice's marginal depends on `y`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundValue {
    Finite(Rat),
    Infinite,
}

impl BoundValue {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Infinite => None,
        }
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Finite(v) => write!(f, "{v}"),
            BoundValue::Infinite => write!(f, "inf"),
        }
    }
}

/// Primal weight key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    /// A local strategy; for partition bounds the rectangle is its non-abort
    /// support.
    Strategy(DetStrategy),
    /// A labelled rectangle of the function partition bound.
    Rectangle { xs: Vec<usize>, ys: Vec<usize>, z: usize },
}

#[derive(Clone, Debug)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub parameter: Option<Rat>,
    pub bound: BoundValue,
    pub zeta: Option<Rat>,
    pub zeta_xy: Option<Vec<Rat>>,
    pub eta_xy: Option<Vec<Rat>>,
    pub weights: Vec<(Column, Rat)>,
    pub certificate: Option<Certificate>,
    pub solution: LinSolution,
    pub program: LinProgram,
    pub colgen_rounds: usize,
}

impl BoundResult {
    pub fn value(&self) -> Option<&Rat> {
        self.bound.finite()
    }
}

fn tag(x: usize, y: usize, a: usize, b: usize) -> String {
    format!("o[{x},{y},{a},{b}]")
}

/// Outcome-row coefficient lists for the given columns.
fn outcome_rows(sizes: Sizes, columns: &[DetStrategy], vars: &[VarId]) -> Vec<Vec<(VarId, Rat)>> {
    let mut rows = vec![Vec::new(); sizes.len()];
    for (l, &v) in columns.iter().zip(vars) {
        for (x, a) in l.alice.iter().enumerate() {
            let Some(a) = a else { continue };
            for (y, b) in l.bob.iter().enumerate() {
                if let Some(b) = b {
                    rows[sizes.index(x, y, *a, *b)].push((v, Rat::one()));
                }
            }
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Variant {
    Plain,
    Eps(Rat),
    Eta(Rat),
    Nc,
}

struct Master {
    lp: LinProgram,
    q: Vec<VarId>,
    zeta_xy: Vec<VarId>,
    norm_row: usize,
}

fn build_master(p: &Dist, variant: &Variant, columns: &[DetStrategy]) -> Master {
    let s = p.sizes();
    let mut lp = LinProgram::new(Sense::Maximize);
    let zeta = lp.add_nonneg("zeta");
    lp.set_objective(zeta, Rat::one());
    let q: Vec<VarId> = (0..columns.len()).map(|k| lp.add_nonneg(format!("q{k}"))).collect();
    let mut rows = outcome_rows(s, columns, &q);
    let mut zeta_xy = Vec::new();
    if matches!(variant, Variant::Eta(_) | Variant::Nc) {
        for x in 0..s.x {
            for y in 0..s.y {
                zeta_xy.push(lp.add_nonneg(format!("zeta[{x},{y}]")));
            }
        }
    }
    let mut svars = Vec::new();
    let mut evars = Vec::new();
    if let Variant::Eps(_) = variant {
        for (x, y, a, b) in s.tuples() {
            svars.push(lp.add_nonneg(format!("s[{x},{y},{a},{b}]")));
            evars.push(lp.add_nonneg(format!("e[{x},{y},{a},{b}]")));
        }
    }
    for (i, (x, y, a, b)) in s.tuples().enumerate() {
        let mut row = std::mem::take(&mut rows[i]);
        let pv = p.p(x, y, a, b).clone();
        match variant {
            Variant::Plain => {
                if !pv.is_zero() {
                    row.push((zeta, -pv));
                }
            }
            Variant::Eta(_) | Variant::Nc => {
                if !pv.is_zero() {
                    row.push((zeta_xy[x * s.y + y], -pv));
                }
            }
            Variant::Eps(_) => row.push((svars[i], -Rat::one())),
        }
        lp.add_constraint(tag(x, y, a, b), row, Relation::Eq, Rat::zero());
    }
    match variant {
        Variant::Plain => {}
        Variant::Eta(eta) => {
            for (k, &zxy) in zeta_xy.iter().enumerate() {
                lp.add_constraint(format!("upper[{k}]"), vec![(zxy, int(1)), (zeta, int(-1))], Relation::Le, Rat::zero());
                lp.add_constraint(format!("lower[{k}]"), vec![(zeta, eta.clone()), (zxy, int(-1))], Relation::Le, Rat::zero());
            }
        }
        Variant::Nc => {
            for (k, &zxy) in zeta_xy.iter().enumerate() {
                lp.add_constraint(format!("lower[{k}]"), vec![(zeta, int(1)), (zxy, int(-1))], Relation::Le, Rat::zero());
            }
        }
        Variant::Eps(eps) => {
            for (i, (x, y, a, b)) in s.tuples().enumerate() {
                let pv = p.p(x, y, a, b).clone();
                lp.add_constraint(
                    format!("dev+[{x},{y},{a},{b}]"),
                    vec![(svars[i], int(1)), (zeta, -pv.clone()), (evars[i], int(-1))],
                    Relation::Le,
                    Rat::zero(),
                );
                lp.add_constraint(
                    format!("dev-[{x},{y},{a},{b}]"),
                    vec![(svars[i], int(-1)), (zeta, pv), (evars[i], int(-1))],
                    Relation::Le,
                    Rat::zero(),
                );
            }
            let block = s.a * s.b;
            for x in 0..s.x {
                for y in 0..s.y {
                    let start = s.index(x, y, 0, 0);
                    let mut mass: Vec<(VarId, Rat)> = (start..start + block).map(|i| (svars[i], int(1))).collect();
                    mass.push((zeta, int(-1)));
                    lp.add_constraint(format!("mass[{x},{y}]"), mass, Relation::Eq, Rat::zero());
                    let mut budget: Vec<(VarId, Rat)> = (start..start + block).map(|i| (evars[i], int(1))).collect();
                    budget.push((zeta, -eps.clone()));
                    lp.add_constraint(format!("budget[{x},{y}]"), budget, Relation::Le, Rat::zero());
                }
            }
        }
    }
    let norm_row = lp.num_constraints();
    lp.add_constraint("norm", q.iter().map(|&v| (v, int(1))).collect(), Relation::Eq, int(1));
    Master { lp, q, zeta_xy, norm_row }
}

/// Strategies that make the restricted master feasible: the all-abort
/// strategy, plus for `BothAbort` one strategy per outcome that answers on a
/// single input pair and aborts elsewhere.
fn seed_columns(sizes: Sizes, class: StrategyClass) -> Vec<DetStrategy> {
    let mut seed = Vec::new();
    let idle_bob = if class.bob_may_abort() { None } else { Some(0) };
    seed.push(DetStrategy { alice: vec![None; sizes.x], bob: vec![idle_bob; sizes.y], class });
    if class == StrategyClass::BothAbort {
        for (x, y, a, b) in sizes.tuples() {
            let mut alice = vec![None; sizes.x];
            let mut bob = vec![None; sizes.y];
            alice[x] = Some(a);
            bob[y] = Some(b);
            seed.push(DetStrategy { alice, bob, class });
        }
    }
    seed
}

fn require_optimal(sol: &LinSolution, what: &str) -> Result<()> {
    if sol.status != Status::Optimal {
        return Err(Error::input(format!("{what}: LP reported {:?}", sol.status)));
    }
    Ok(())
}

fn efficiency_bound(
    p: &Dist,
    kind: BoundKind,
    variant: Variant,
    class: StrategyClass,
    opts: &BoundOptions,
) -> Result<BoundResult> {
    let s = p.sizes();
    let mut columns: Vec<DetStrategy>;
    let mut rounds = 0;
    let (master, sol) = if opts.colgen {
        columns = seed_columns(s, class);
        loop {
            let master = build_master(p, &variant, &columns);
            let sol = exactlp::solve(&master.lp)?;
            require_optimal(&sol, kind.name())?;
            let t = sol.dual[master.norm_row].clone();
            let price = BellFunctional::new(s, sol.dual[..s.len()].iter().map(|v| -v).collect())?;
            let (best, witness) = max_bell_value(&price, class, opts.cap)?;
            if best <= t {
                break (master, sol);
            }
            if columns.contains(&witness) {
                return Err(Error::input("column generation stalled on an existing column"));
            }
            columns.push(witness);
            rounds += 1;
        }
    } else {
        columns = strategies::enumerate(class, s, opts.cap)?.collect();
        let master = build_master(p, &variant, &columns);
        let sol = exactlp::solve(&master.lp)?;
        require_optimal(&sol, kind.name())?;
        (master, sol)
    };

    let zeta = sol.objective.clone();
    let t = sol.dual[master.norm_row].clone();
    let y = &sol.dual[..s.len()];
    let cert_kind = kind.certificate_kind().expect("efficiency bounds carry certificates");
    let (bound, certificate) = if zeta.is_positive() {
        let f = BellFunctional::new(s, y.iter().map(|v| -v / &t).collect())?;
        let value = zeta.recip();
        let rule = match &variant {
            Variant::Plain => ValueRule::Plain,
            Variant::Eps(e) => ValueRule::SmoothedEps(e.clone()),
            Variant::Eta(e) => ValueRule::EfficiencyEta(e.clone()),
            Variant::Nc => ValueRule::NonConstant,
        };
        let cert = Certificate::with_rule(f, cert_kind, value.clone(), rule)?;
        (BoundValue::Finite(value), cert)
    } else {
        // ζ = 0: the duals form a ray, B(ℓ) ≤ 0 on the class and B(p) > 0
        let f = BellFunctional::new(s, y.iter().map(|v| -v).collect())?;
        let claimed = crate::certificates::bell_value(&f, p)?;
        let cert = Certificate::with_rule(f, cert_kind, claimed, ValueRule::Ray)?;
        (BoundValue::Infinite, cert)
    };
    let weights = columns
        .iter()
        .zip(&master.q)
        .filter(|(_, v)| !sol.primal[v.0].is_zero())
        .map(|(l, v)| (Column::Strategy(l.clone()), sol.primal[v.0].clone()))
        .collect();
    let zeta_xy =
        (!master.zeta_xy.is_empty()).then(|| master.zeta_xy.iter().map(|v| sol.primal[v.0].clone()).collect());
    Ok(BoundResult {
        kind,
        parameter: match &variant {
            Variant::Eps(r) | Variant::Eta(r) => Some(r.clone()),
            _ => None,
        },
        bound,
        zeta: Some(zeta),
        zeta_xy,
        eta_xy: None,
        weights,
        certificate: Some(certificate),
        solution: sol,
        program: master.lp,
        colgen_rounds: rounds,
    })
}

/// `eff(p)`: inverse of the best efficiency of an abort strategy reproducing `p`.
pub fn eff(p: &Dist, opts: &BoundOptions) -> Result<BoundResult> {
    efficiency_bound(p, BoundKind::Eff, Variant::Plain, StrategyClass::BothAbort, opts)
}

/// `eff_ε(p) = min eff(p')` over the per-input ℓ1 ball, as one joint LP.
pub fn eff_eps(p: &Dist, eps: &Rat, opts: &BoundOptions) -> Result<BoundResult> {
    if eps.is_negative() || *eps > int(2) {
        return Err(Error::input(format!("epsilon {eps} outside [0, 2]")));
    }
    efficiency_bound(p, BoundKind::EffEps, Variant::Eps(eps.clone()), StrategyClass::BothAbort, opts)
}

/// `eff^η(p)`: efficiency may vary with the input within `[ηζ, ζ]`.
pub fn eff_eta(p: &Dist, eta: &Rat, opts: &BoundOptions) -> Result<BoundResult> {
    check_eta(eta)?;
    efficiency_bound(p, BoundKind::EffEta, Variant::Eta(eta.clone()), StrategyClass::BothAbort, opts)
}

/// `eff_nc(p)`: only the lower coupling `ζ ≤ ζ_xy` is kept.
pub fn eff_nc(p: &Dist, opts: &BoundOptions) -> Result<BoundResult> {
    efficiency_bound(p, BoundKind::EffNc, Variant::Nc, StrategyClass::BothAbort, opts)
}

/// `eff→(p)`: only Alice may abort.
pub fn eff_oneway(p: &Dist, opts: &BoundOptions) -> Result<BoundResult> {
    efficiency_bound(p, BoundKind::EffOneway, Variant::Plain, StrategyClass::AliceAbort, opts)
}

fn check_eta(eta: &Rat) -> Result<()> {
    if !eta.is_positive() || *eta > Rat::one() {
        return Err(Error::input(format!("eta {eta} outside (0, 1]")));
    }
    Ok(())
}

fn reject_colgen(opts: &BoundOptions, what: &str) -> Result<()> {
    if opts.colgen {
        return Err(Error::input(format!(
            "column generation is not available for {what}; it applies to eff, eff-eps, eff-eta, eff-nc and eff-oneway"
        )));
    }
    Ok(())
}

/// `ν(p) = min Σ|q_ℓ|` over signed combinations of no-abort strategies.
pub fn nu(p: &Dist, opts: &BoundOptions) -> Result<BoundResult> {
    reject_colgen(opts, "nu")?;
    if !p.is_nonsignaling() {
        return Err(Error::input("nu defined for nonsignaling distributions"));
    }
    let s = p.sizes();
    let columns: Vec<DetStrategy> = strategies::enumerate(StrategyClass::NoAbort, s, opts.cap)?.collect();
    let mut lp = LinProgram::new(Sense::Minimize);
    let plus: Vec<VarId> = (0..columns.len()).map(|k| lp.add_nonneg(format!("q+{k}"))).collect();
    let minus: Vec<VarId> = (0..columns.len()).map(|k| lp.add_nonneg(format!("q-{k}"))).collect();
    for v in plus.iter().chain(&minus) {
        lp.set_objective(*v, int(1));
    }
    let rows_plus = outcome_rows(s, &columns, &plus);
    let rows_minus = outcome_rows(s, &columns, &minus);
    for (i, (x, y, a, b)) in s.tuples().enumerate() {
        let mut row = rows_plus[i].clone();
        row.extend(rows_minus[i].iter().map(|(v, c)| (*v, -c)));
        lp.add_constraint(tag(x, y, a, b), row, Relation::Eq, p.p(x, y, a, b).clone());
    }
    let sol = exactlp::solve(&lp)?;
    require_optimal(&sol, "nu")?;
    let f = BellFunctional::new(s, sol.dual[..s.len()].to_vec())?;
    let value = sol.objective.clone();
    let certificate = Certificate::new(f, CertificateKind::Normalized, value.clone())?;
    let weights = columns
        .iter()
        .enumerate()
        .map(|(k, l)| (l, &sol.primal[plus[k].0] - &sol.primal[minus[k].0]))
        .filter(|(_, w)| !w.is_zero())
        .map(|(l, w)| (Column::Strategy(l.clone()), w))
        .collect();
    Ok(BoundResult {
        kind: BoundKind::Nu,
        parameter: None,
        bound: BoundValue::Finite(value),
        zeta: None,
        zeta_xy: None,
        eta_xy: None,
        weights,
        certificate: Some(certificate),
        solution: sol,
        program: lp,
        colgen_rounds: 0,
    })
}

/// Abort strategies with at least one answering input on each side: the
/// pairs (nonempty rectangle, no-abort strategy on it).
pub fn rectangle_strategies(sizes: Sizes, cap: u128) -> Result<Vec<DetStrategy>> {
    Ok(strategies::enumerate(StrategyClass::BothAbort, sizes, cap)?
        .filter(|l| l.alice.iter().any(Option::is_some) && l.bob.iter().any(Option::is_some))
        .collect())
}

/// The partition bound with per-input efficiency `η ≤ η_xy ≤ 1`, over
/// (rectangle, strategy) columns.
pub fn prt_direct(p: &Dist, eta: &Rat, opts: &BoundOptions) -> Result<BoundResult> {
    reject_colgen(opts, "prt")?;
    check_eta(eta)?;
    let s = p.sizes();
    let columns = rectangle_strategies(s, opts.cap)?;
    let mut lp = LinProgram::new(Sense::Minimize);
    let w: Vec<VarId> = (0..columns.len()).map(|k| lp.add_nonneg(format!("w{k}"))).collect();
    for v in &w {
        lp.set_objective(*v, int(1));
    }
    let eta_vars: Vec<VarId> = (0..s.x * s.y)
        .map(|k| lp.add_var(format!("eta[{},{}]", k / s.y, k % s.y), Some(eta.clone()), Some(Rat::one())))
        .collect();
    let mut rows = outcome_rows(s, &columns, &w);
    for (i, (x, y, a, b)) in s.tuples().enumerate() {
        let mut row = std::mem::take(&mut rows[i]);
        let pv = p.p(x, y, a, b);
        if !pv.is_zero() {
            row.push((eta_vars[x * s.y + y], -pv.clone()));
        }
        lp.add_constraint(tag(x, y, a, b), row, Relation::Eq, Rat::zero());
    }
    let sol = exactlp::solve(&lp)?;
    require_optimal(&sol, "prt")?;
    let f = BellFunctional::new(s, sol.dual[..s.len()].to_vec())?;
    let value = sol.objective.clone();
    let rule = if eta.is_one() { ValueRule::Plain } else { ValueRule::EfficiencyEta(eta.clone()) };
    let certificate = Certificate::with_rule(f, CertificateKind::InefficiencyResistant, value.clone(), rule)?;
    let weights = columns
        .iter()
        .zip(&w)
        .filter(|(_, v)| !sol.primal[v.0].is_zero())
        .map(|(l, v)| (Column::Strategy(l.clone()), sol.primal[v.0].clone()))
        .collect();
    Ok(BoundResult {
        kind: BoundKind::PrtDirect,
        parameter: Some(eta.clone()),
        bound: BoundValue::Finite(value),
        zeta: None,
        zeta_xy: None,
        eta_xy: Some(eta_vars.iter().map(|v| sol.primal[v.0].clone()).collect()),
        weights,
        certificate: Some(certificate),
        solution: sol,
        program: lp,
        colgen_rounds: 0,
    })
}

/// `prt(p)` through the optimum of `eff(p)`: `w = q/ζ`, `η_xy = 1`, columns
/// with an empty side dropped. The result is checked for feasibility.
pub fn prt_via_eff(p: &Dist, opts: &BoundOptions) -> Result<BoundResult> {
    let e = eff(p, opts)?;
    let zeta = e.zeta.clone().expect("eff reports zeta");
    let weights: Vec<(Column, Rat)> = e
        .weights
        .iter()
        .filter(|(c, _)| match c {
            Column::Strategy(l) => l.alice.iter().any(Option::is_some) && l.bob.iter().any(Option::is_some),
            Column::Rectangle { .. } => false,
        })
        .map(|(c, q)| (c.clone(), q / &zeta))
        .collect();
    let s = p.sizes();
    let eta_xy = vec![Rat::one(); s.x * s.y];
    let strategies: Vec<(DetStrategy, Rat)> = weights
        .iter()
        .filter_map(|(c, w)| match c {
            Column::Strategy(l) => Some((l.clone(), w.clone())),
            Column::Rectangle { .. } => None,
        })
        .collect();
    let problems = partition_violations(p, &strategies, &eta_xy, &Rat::one());
    if !problems.is_empty() {
        return Err(Error::input(format!("change of variables is infeasible: {}", problems.join("; "))));
    }
    let total: Rat = weights.iter().map(|(_, w)| w.clone()).sum();
    Ok(BoundResult {
        kind: BoundKind::PrtViaEff,
        parameter: Some(Rat::one()),
        bound: BoundValue::Finite(total),
        zeta: None,
        zeta_xy: None,
        eta_xy: Some(eta_xy),
        weights,
        certificate: e.certificate,
        solution: e.solution,
        program: e.program,
        colgen_rounds: e.colgen_rounds,
    })
}

/// Jain–Klauck partition bound of a (partial) function `f: X×Y → Z`.
/// `f[x][y] = None` leaves the pair outside the domain.
pub fn prt_function(f: &[Vec<Option<usize>>], z_count: usize, eps: &Rat, opts: &BoundOptions) -> Result<BoundResult> {
    reject_colgen(opts, "prt-fn")?;
    if eps.is_negative() || *eps > Rat::one() {
        return Err(Error::input(format!("epsilon {eps} outside [0, 1]")));
    }
    let nx = f.len();
    let ny = f.first().map_or(0, Vec::len);
    if nx == 0 || ny == 0 || z_count == 0 || f.iter().any(|r| r.len() != ny) {
        return Err(Error::input("function table must be a nonempty rectangle"));
    }
    if f.iter().flatten().flatten().any(|&z| z >= z_count) {
        return Err(Error::input("function value out of range"));
    }
    if nx >= 64 || ny >= 64 {
        return Err(Error::input("too many inputs for rectangle enumeration"));
    }
    let count = ((1u128 << nx) - 1) * ((1u128 << ny) - 1) * z_count as u128;
    if count > opts.cap {
        return Err(Error::TooLarge {
            what: "labelled rectangles".into(),
            count: count.to_string(),
            cap: opts.cap,
            hint: "",
        });
    }
    let mut lp = LinProgram::new(Sense::Minimize);
    let mut cols = Vec::new();
    let mut correct = vec![vec![Vec::new(); ny]; nx];
    let mut total = vec![vec![Vec::new(); ny]; nx];
    for xm in 1u64..(1 << nx) {
        for ym in 1u64..(1 << ny) {
            let xs: Vec<usize> = (0..nx).filter(|i| xm >> i & 1 == 1).collect();
            let ys: Vec<usize> = (0..ny).filter(|j| ym >> j & 1 == 1).collect();
            for z in 0..z_count {
                let v = lp.add_nonneg(format!("w[{xm:b},{ym:b},{z}]"));
                lp.set_objective(v, int(1));
                for &x in &xs {
                    for &y in &ys {
                        total[x][y].push((v, int(1)));
                        if f[x][y] == Some(z) {
                            correct[x][y].push((v, int(1)));
                        }
                    }
                }
                cols.push((Column::Rectangle { xs: xs.clone(), ys: ys.clone(), z }, v));
            }
        }
    }
    let one_minus = Rat::one() - eps;
    for x in 0..nx {
        for y in 0..ny {
            if f[x][y].is_some() {
                lp.add_constraint(
                    format!("correct[{x},{y}]"),
                    std::mem::take(&mut correct[x][y]),
                    Relation::Ge,
                    one_minus.clone(),
                );
            }
            lp.add_constraint(format!("total[{x},{y}]"), std::mem::take(&mut total[x][y]), Relation::Eq, int(1));
        }
    }
    let sol = exactlp::solve(&lp)?;
    require_optimal(&sol, "prt-fn")?;
    let weights = cols
        .into_iter()
        .filter(|(_, v)| !sol.primal[v.0].is_zero())
        .map(|(c, v)| (c, sol.primal[v.0].clone()))
        .collect();
    Ok(BoundResult {
        kind: BoundKind::PrtFunction,
        parameter: Some(eps.clone()),
        bound: BoundValue::Finite(sol.objective.clone()),
        zeta: None,
        zeta_xy: None,
        eta_xy: None,
        weights,
        certificate: None,
        solution: sol,
        program: lp,
        colgen_rounds: 0,
    })
}

/// Checks `Σ q_ℓ ℓ(a,b|x,y) = ζ p(a,b|x,y)` and `Σ q_ℓ = 1` exactly.
pub fn efficiency_violations(p: &Dist, mixture: &[(DetStrategy, Rat)], zeta: &Rat) -> Vec<String> {
    let s = p.sizes();
    let mut out = Vec::new();
    if mixture.iter().any(|(_, w)| w.is_negative()) {
        out.push("negative weight".to_string());
    }
    let total: Rat = mixture.iter().map(|(_, w)| w.clone()).sum();
    if !total.is_one() {
        out.push(format!("weights sum to {total}"));
    }
    let mut acc = vec![Rat::zero(); s.len()];
    for (l, w) in mixture {
        if l.check_sizes(s).is_err() {
            out.push("strategy shape mismatch".to_string());
            return out;
        }
        accumulate(&mut acc, s, l, w);
    }
    for (i, (x, y, a, b)) in s.tuples().enumerate() {
        if acc[i] != zeta * p.p(x, y, a, b) {
            out.push(format!("outcome row {} fails", tag(x, y, a, b)));
        }
    }
    out
}

/// Checks `Σ w ℓ(a,b|x,y) = η_xy p(a,b|x,y)` with `η ≤ η_xy ≤ 1` and `w ≥ 0`,
/// strategies standing for (support rectangle, strategy on it).
pub fn partition_violations(p: &Dist, weights: &[(DetStrategy, Rat)], eta_xy: &[Rat], eta: &Rat) -> Vec<String> {
    let s = p.sizes();
    let mut out = Vec::new();
    if eta_xy.len() != s.x * s.y {
        out.push("eta table has the wrong size".to_string());
        return out;
    }
    if eta_xy.iter().any(|e| e < eta || *e > Rat::one()) {
        out.push("eta_xy outside [eta, 1]".to_string());
    }
    if weights.iter().any(|(_, w)| w.is_negative()) {
        out.push("negative weight".to_string());
    }
    let mut acc = vec![Rat::zero(); s.len()];
    for (l, w) in weights {
        if l.check_sizes(s).is_err() {
            out.push("strategy shape mismatch".to_string());
            return out;
        }
        accumulate(&mut acc, s, l, w);
    }
    for (i, (x, y, a, b)) in s.tuples().enumerate() {
        if acc[i] != &eta_xy[x * s.y + y] * p.p(x, y, a, b) {
            out.push(format!("outcome row {} fails", tag(x, y, a, b)));
        }
    }
    out
}

fn accumulate(acc: &mut [Rat], s: Sizes, l: &DetStrategy, w: &Rat) {
    for (x, a) in l.alice.iter().enumerate() {
        let Some(a) = a else { continue };
        for (y, b) in l.bob.iter().enumerate() {
            if let Some(b) = b {
                acc[s.index(x, y, *a, *b)] += w;
            }
        }
    }
}

/// Returns the stored certificate after checking that `kind` matches the bound.
pub fn extract_certificate(result: &BoundResult, kind: CertificateKind) -> Result<Certificate> {
    match (result.kind.certificate_kind(), &result.certificate) {
        (Some(k), Some(c)) if k == kind => Ok(c.clone()),
        (Some(k), Some(_)) => Err(Error::input(format!(
            "{} produces {} certificates, not {}",
            result.kind.name(),
            k.name(),
            kind.name()
        ))),
        _ => Err(Error::input(format!("{} carries no Bell certificate", result.kind.name()))),
    }
}
