//! Communication protocols and the constructions that turn them into local
//! strategies: the transcript-guessing reduction (efficiency `2^−c`), the
//! feasible partition solution (weight `2^c`), and repetition with aborts.

use std::collections::BTreeMap;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{efficiency_violations, partition_violations};
use crate::distributions::{numbered_labels, Dist, Metadata, Sizes};
use crate::rational::{ceil_log2, rat, to_f64, Rat};
use crate::strategies::{DetStrategy, StrategyClass};
use crate::{Error, Result};

/// A deterministic `c`-bit protocol given by its transcript table and the
/// players' output maps. Transcripts are integers in `0..2^c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetProtocol {
    pub transcript: Vec<Vec<u64>>,
    pub alice_out: Vec<Vec<usize>>,
    pub bob_out: Vec<Vec<usize>>,
}

/// A finite mixture of deterministic protocols over shared randomness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizedProtocol {
    pub sizes: Sizes,
    pub c: u32,
    pub mixture: Vec<(Rat, DetProtocol)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RectangleViolation {
    pub component: usize,
    pub x: usize,
    pub x2: usize,
    pub y: usize,
    pub y2: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ProtocolReport {
    pub valid: bool,
    pub errors: Vec<String>,
    pub violations: Vec<RectangleViolation>,
}

impl RandomizedProtocol {
    pub fn deterministic(sizes: Sizes, c: u32, p: DetProtocol) -> RandomizedProtocol {
        RandomizedProtocol { sizes, c, mixture: vec![(Rat::one(), p)] }
    }

    fn transcripts(&self) -> u64 {
        1u64 << self.c
    }

    /// Whether every transcript depends on `x` alone.
    pub fn is_one_way(&self) -> bool {
        self.mixture.iter().all(|(_, p)| p.transcript.iter().all(|row| row.iter().all(|t| *t == row[0])))
    }

    /// The protocol's output distribution.
    pub fn output_distribution(&self) -> Result<Dist> {
        let s = self.sizes;
        let mut probs = vec![Rat::zero(); s.len()];
        for (w, p) in &self.mixture {
            for x in 0..s.x {
                for y in 0..s.y {
                    let t = p.transcript[x][y] as usize;
                    probs[s.index(x, y, p.alice_out[x][t], p.bob_out[y][t])] += w;
                }
            }
        }
        Dist::new(
            numbered_labels(s.x),
            numbered_labels(s.y),
            numbered_labels(s.a),
            numbered_labels(s.b),
            probs,
            Metadata { approximate: false, source: "protocol".into() },
        )
    }
}

/// Structural checks plus the rectangle property on every component: if
/// `T(x,y') = T(x',y) = T` then `T(x,y) = T`.
pub fn validate_protocol(proto: &RandomizedProtocol) -> ProtocolReport {
    let s = proto.sizes;
    let mut errors = Vec::new();
    if proto.c >= 32 {
        errors.push(format!("c = {} is too large to enumerate transcripts", proto.c));
        return ProtocolReport { valid: false, errors, violations: Vec::new() };
    }
    let tcount = proto.transcripts();
    if proto.mixture.is_empty() {
        errors.push("empty mixture".into());
    }
    if proto.mixture.iter().any(|(w, _)| w.is_negative()) {
        errors.push("negative mixture weight".into());
    }
    let total: Rat = proto.mixture.iter().map(|(w, _)| w.clone()).sum();
    if !total.is_one() {
        errors.push(format!("mixture weights sum to {total}"));
    }
    for (k, (_, p)) in proto.mixture.iter().enumerate() {
        let shape_ok = p.transcript.len() == s.x
            && p.transcript.iter().all(|r| r.len() == s.y)
            && p.alice_out.len() == s.x
            && p.alice_out.iter().all(|r| r.len() as u64 == tcount)
            && p.bob_out.len() == s.y
            && p.bob_out.iter().all(|r| r.len() as u64 == tcount);
        if !shape_ok {
            errors.push(format!("component {k}: table shapes do not match the sizes and c"));
            continue;
        }
        if p.transcript.iter().flatten().any(|&t| t >= tcount) {
            errors.push(format!("component {k}: transcript longer than c bits"));
        }
        if p.alice_out.iter().flatten().any(|&a| a >= s.a) || p.bob_out.iter().flatten().any(|&b| b >= s.b) {
            errors.push(format!("component {k}: output out of range"));
        }
    }
    let mut violations = Vec::new();
    if errors.is_empty() {
        for (k, (_, p)) in proto.mixture.iter().enumerate() {
            let t = &p.transcript;
            'search: for x in 0..s.x {
                for x2 in 0..s.x {
                    for y in 0..s.y {
                        for y2 in 0..s.y {
                            if t[x][y2] == t[x2][y] && t[x][y] != t[x][y2] {
                                violations.push(RectangleViolation { component: k, x, x2, y, y2 });
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
    }
    ProtocolReport { valid: errors.is_empty() && violations.is_empty(), errors, violations }
}

fn require_valid(proto: &RandomizedProtocol) -> Result<()> {
    let r = validate_protocol(proto);
    if r.valid {
        return Ok(());
    }
    let mut msg = r.errors.join("; ");
    if let Some(v) = r.violations.first() {
        msg = format!(
            "rectangle property fails in component {}: T({},{}) = T({},{}) but T({},{}) differs",
            v.component, v.x, v.y2, v.x2, v.y, v.x, v.y
        );
    }
    Err(Error::input(format!("invalid protocol: {msg}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMode {
    /// Both players check the guessed transcript against their input.
    TwoWay,
    /// Transcript depends on `x` only; Bob never aborts.
    OneWay,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub mixture: Vec<(DetStrategy, Rat)>,
    pub zeta: Rat,
    pub class: StrategyClass,
    /// Conditional distribution on non-abort outcomes, computed symbolically.
    pub conditional: Dist,
    pub target: Dist,
    pub conditional_matches: bool,
    /// Non-abort probability equals `zeta` on every input pair.
    pub zeta_exact: bool,
}

fn merge(entries: impl IntoIterator<Item = (DetStrategy, Rat)>) -> Vec<(DetStrategy, Rat)> {
    let mut m: BTreeMap<DetStrategy, Rat> = BTreeMap::new();
    for (l, w) in entries {
        *m.entry(l).or_insert_with(Rat::zero) += w;
    }
    m.into_iter().filter(|(_, w)| !w.is_zero()).collect()
}

/// Sets `A_x`, `B_y` of transcripts consistent with each input.
fn consistent_sets(p: &DetProtocol, s: Sizes, tcount: usize) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
    let mut ax = vec![vec![false; tcount]; s.x];
    let mut by = vec![vec![false; tcount]; s.y];
    for x in 0..s.x {
        for y in 0..s.y {
            let t = p.transcript[x][y] as usize;
            ax[x][t] = true;
            by[y][t] = true;
        }
    }
    (ax, by)
}

/// For each shared-randomness value and guessed transcript `T`, Alice answers
/// `alice_out(x,T)` when `T` is consistent with `x` and aborts otherwise; Bob
/// likewise. Both answer exactly when `T` is the real transcript.
pub fn transcript_reduction(proto: &RandomizedProtocol, mode: ReductionMode) -> Result<Reduction> {
    require_valid(proto)?;
    if mode == ReductionMode::OneWay && !proto.is_one_way() {
        return Err(Error::input("one-way reduction needs transcripts that depend on x only"));
    }
    let s = proto.sizes;
    let tcount = proto.transcripts() as usize;
    let guess = rat(1, tcount as i64);
    let class = match mode {
        ReductionMode::TwoWay => StrategyClass::BothAbort,
        ReductionMode::OneWay => StrategyClass::AliceAbort,
    };
    let mut entries = Vec::new();
    for (w, p) in &proto.mixture {
        let (ax, by) = consistent_sets(p, s, tcount);
        for t in 0..tcount {
            let alice = (0..s.x).map(|x| ax[x][t].then(|| p.alice_out[x][t])).collect();
            let bob = (0..s.y)
                .map(|y| match mode {
                    ReductionMode::TwoWay => by[y][t].then(|| p.bob_out[y][t]),
                    ReductionMode::OneWay => Some(p.bob_out[y][t]),
                })
                .collect();
            entries.push((DetStrategy { alice, bob, class }, w * &guess));
        }
    }
    let mixture = merge(entries);
    let zeta = guess;
    let target = proto.output_distribution()?;
    let mut joint = vec![Rat::zero(); s.len()];
    for (l, w) in &mixture {
        for x in 0..s.x {
            for y in 0..s.y {
                if let (Some(a), Some(b)) = (l.alice[x], l.bob[y]) {
                    joint[s.index(x, y, a, b)] += w;
                }
            }
        }
    }
    let mut zeta_exact = true;
    for x in 0..s.x {
        for y in 0..s.y {
            let start = s.index(x, y, 0, 0);
            let mass: Rat = joint[start..start + s.a * s.b].iter().sum();
            zeta_exact &= mass == zeta;
        }
    }
    let conditional = if zeta_exact {
        Dist::new(
            target.x_labels.clone(),
            target.y_labels.clone(),
            target.a_labels.clone(),
            target.b_labels.clone(),
            joint.iter().map(|v| v / &zeta).collect(),
            Metadata { approximate: false, source: "transcript reduction".into() },
        )?
    } else {
        return Err(Error::input("non-abort probability differs across inputs"));
    };
    let conditional_matches = conditional.probs() == target.probs()
        && efficiency_violations(&target, &mixture, &zeta).is_empty();
    Ok(Reduction { mixture, zeta, class, conditional, target, conditional_matches, zeta_exact })
}

#[derive(Clone, Debug)]
pub struct PartitionSolution {
    /// (rectangle, strategy) pairs as strategies aborting outside the rectangle.
    pub weights: Vec<(DetStrategy, Rat)>,
    pub eta_xy: Vec<Rat>,
    pub total: Rat,
    pub violations: Vec<String>,
}

/// Leaf rectangles `X_T × Y_T` with the outputs at `T`, weighted by the
/// shared-randomness probability; empty rectangles are kept so the weights
/// total exactly `2^c`.
pub fn protocol_to_partition(proto: &RandomizedProtocol) -> Result<PartitionSolution> {
    require_valid(proto)?;
    let s = proto.sizes;
    let tcount = proto.transcripts() as usize;
    let mut entries = Vec::new();
    for (w, p) in &proto.mixture {
        let (ax, by) = consistent_sets(p, s, tcount);
        for t in 0..tcount {
            let alice = (0..s.x).map(|x| ax[x][t].then(|| p.alice_out[x][t])).collect();
            let bob = (0..s.y).map(|y| by[y][t].then(|| p.bob_out[y][t])).collect();
            entries.push((DetStrategy { alice, bob, class: StrategyClass::BothAbort }, w.clone()));
        }
    }
    let weights = merge(entries);
    let total: Rat = weights.iter().map(|(_, w)| w.clone()).sum();
    let eta_xy = vec![Rat::one(); s.x * s.y];
    let target = proto.output_distribution()?;
    let violations = partition_violations(&target, &weights, &eta_xy, &Rat::one());
    Ok(PartitionSolution { weights, eta_xy, total, violations })
}

#[derive(Clone, Debug)]
pub struct Amplifier {
    pub runs: u64,
    pub zeta: Rat,
    pub eta: Rat,
    /// `(1 − ζ)^N`, exact.
    pub abort_probability: Rat,
    pub meets_target: bool,
    /// Simultaneous-message cost: `N · ⌈log2 |A×B|⌉`.
    pub sm_bits: u64,
    /// One-way cost of sending the index of the first successful run.
    pub oneway_index_bits: u32,
    mixture: Vec<(DetStrategy, Rat)>,
    sizes: Sizes,
}

/// `N = ⌈ln(1/(1−η))/ζ⌉` independent runs; the referee keeps the first run
/// in which nobody aborts. `ζ = 1` needs a single run.
pub fn amplify_sm(mixture: &[(DetStrategy, Rat)], sizes: Sizes, zeta: &Rat, eta: &Rat) -> Result<Amplifier> {
    if !eta.is_positive() || *eta >= Rat::one() {
        return Err(Error::input(format!("eta {eta} outside (0, 1)")));
    }
    if !zeta.is_positive() || *zeta > Rat::one() {
        return Err(Error::input(format!("zeta {zeta} outside (0, 1]")));
    }
    let total: Rat = mixture.iter().map(|(_, w)| w.clone()).sum();
    if mixture.is_empty() || !total.is_one() || mixture.iter().any(|(_, w)| w.is_negative()) {
        return Err(Error::input("strategy mixture must have nonnegative weights summing to 1"));
    }
    for (l, _) in mixture {
        l.check_sizes(sizes)?;
    }
    let runs = if zeta.is_one() {
        1
    } else {
        let n = ((1.0 / (1.0 - to_f64(eta))).ln() / to_f64(zeta)).ceil();
        n.max(1.0) as u64
    };
    let one_minus = Rat::one() - zeta;
    let exp = i32::try_from(runs).map_err(|_| Error::input("too many runs"))?;
    let abort_probability = num_traits::pow::Pow::pow(&one_minus, exp);
    let meets_target = abort_probability <= Rat::one() - eta;
    let outcome_bits = u64::from(ceil_log2((sizes.a * sizes.b) as u128));
    Ok(Amplifier {
        runs,
        zeta: zeta.clone(),
        eta: eta.clone(),
        abort_probability,
        meets_target,
        sm_bits: runs * outcome_bits,
        oneway_index_bits: ceil_log2(u128::from(runs)),
        mixture: mixture.to_vec(),
        sizes,
    })
}

/// Samples a strategy mixture, optionally repeated.
pub struct Simulator {
    strategies: Vec<DetStrategy>,
    index: WeightedIndex<f64>,
    runs: u64,
    sizes: Sizes,
}

impl Simulator {
    pub fn new(mixture: &[(DetStrategy, Rat)], sizes: Sizes, runs: u64) -> Result<Simulator> {
        let weights: Vec<f64> = mixture.iter().map(|(_, w)| w.to_f64().unwrap_or(0.0)).collect();
        let index = WeightedIndex::new(&weights).map_err(|e| Error::input(format!("bad mixture weights: {e}")))?;
        Ok(Simulator { strategies: mixture.iter().map(|(l, _)| l.clone()).collect(), index, runs: runs.max(1), sizes })
    }

    pub fn from_reduction(r: &Reduction) -> Result<Simulator> {
        Simulator::new(&r.mixture, r.target.sizes(), 1)
    }

    pub fn from_amplifier(a: &Amplifier) -> Result<Simulator> {
        Simulator::new(&a.mixture, a.sizes, a.runs)
    }

    /// One referee round: `None` when every run aborted.
    pub fn sample<R: rand::Rng>(&self, x: usize, y: usize, rng: &mut R) -> Option<(usize, usize)> {
        for _ in 0..self.runs {
            let l = &self.strategies[self.index.sample(rng)];
            if let (Some(a), Some(b)) = (l.alice[x], l.bob[y]) {
                return Some((a, b));
            }
        }
        None
    }

    /// Exact per-input abort probability of one referee round.
    pub fn abort_probability(&self, mixture: &[(DetStrategy, Rat)], x: usize, y: usize) -> Rat {
        let pass: Rat = mixture.iter().filter(|(l, _)| l.alice[x].is_some() && l.bob[y].is_some()).map(|(_, w)| w.clone()).sum();
        num_traits::pow::Pow::pow(&(Rat::one() - pass), i32::try_from(self.runs).unwrap_or(i32::MAX))
    }
}

#[derive(Clone, Debug)]
pub struct McReport {
    pub samples_per_input: u64,
    pub seed: u64,
    pub abort_rate: f64,
    pub expected_abort: f64,
    pub abort_tolerance: f64,
    pub abort_ok: bool,
    /// Per input pair: non-abort samples, ℓ1 deviation, tolerance.
    pub per_input: Vec<(u64, f64, f64)>,
    pub max_deviation: f64,
    pub deviation_ok: bool,
    /// Empirical conditional distribution, flat x-major.
    pub conditional: Vec<f64>,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.abort_ok && self.deviation_ok
    }
}

/// Runs `samples` referee rounds per input pair with a seeded ChaCha8 stream
/// and compares against `target` (conditional) and `expected_abort`.
pub fn monte_carlo(sim: &Simulator, target: &Dist, expected_abort: &Rat, samples: u64, seed: u64) -> Result<McReport> {
    if samples == 0 {
        return Err(Error::input("need at least one sample"));
    }
    let s = sim.sizes;
    if target.sizes() != s {
        return Err(Error::input("target distribution shape differs from the simulator"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; s.len()];
    let mut aborts = 0u64;
    let mut per_input = Vec::with_capacity(s.x * s.y);
    let mut conditional = vec![0.0; s.len()];
    let mut max_deviation: f64 = 0.0;
    let mut deviation_ok = true;
    for x in 0..s.x {
        for y in 0..s.y {
            let mut kept = 0u64;
            for _ in 0..samples {
                match sim.sample(x, y, &mut rng) {
                    Some((a, b)) => {
                        counts[s.index(x, y, a, b)] += 1;
                        kept += 1;
                    }
                    None => aborts += 1,
                }
            }
            let mut dev = 0.0;
            for a in 0..s.a {
                for b in 0..s.b {
                    let i = s.index(x, y, a, b);
                    let freq = if kept > 0 { counts[i] as f64 / kept as f64 } else { 0.0 };
                    conditional[i] = freq;
                    dev += (freq - to_f64(target.p(x, y, a, b))).abs();
                }
            }
            let tol = if kept > 0 { 3.0 * ((s.a * s.b) as f64 / kept as f64).sqrt() } else { f64::INFINITY };
            deviation_ok &= kept > 0 && dev <= tol;
            max_deviation = max_deviation.max(dev);
            per_input.push((kept, dev, tol));
        }
    }
    let total = samples * (s.x * s.y) as u64;
    let abort_rate = aborts as f64 / total as f64;
    let pa = to_f64(expected_abort);
    let abort_tolerance = 3.0 * (pa * (1.0 - pa) / total as f64).sqrt();
    let abort_ok = (abort_rate - pa).abs() <= abort_tolerance + f64::EPSILON;
    Ok(McReport {
        samples_per_input: samples,
        seed,
        abort_rate,
        expected_abort: pa,
        abort_tolerance,
        abort_ok,
        per_input,
        max_deviation,
        deviation_ok,
        conditional,
    })
}

/// The 1-bit protocol for the PR box: Alice sends `x`; with shared bit `r`,
/// Alice outputs `r` and Bob `r ⊕ (x ∧ y)`. `pad` dummy bits are appended.
pub fn pr_protocol(pad: u32) -> RandomizedProtocol {
    let c = 1 + pad;
    let tcount = 1usize << c;
    let mixture = (0..2usize)
        .map(|r| {
            let transcript = (0..2u64).map(|x| vec![x << pad; 2]).collect();
            let alice_out = (0..2).map(|_| vec![r; tcount]).collect();
            let bob_out = (0..2usize).map(|y| (0..tcount).map(|t| r ^ ((t >> pad) & y)).collect()).collect();
            (rat(1, 2), DetProtocol { transcript, alice_out, bob_out })
        })
        .collect();
    RandomizedProtocol { sizes: Sizes::new(2, 2, 2, 2), c, mixture }
}

/// Zero-bit protocol for `p_XOR`: Alice outputs `r ⊕ x`, Bob `r ⊕ y`.
pub fn local_xor_protocol() -> RandomizedProtocol {
    let mixture = (0..2usize)
        .map(|r| {
            let p = DetProtocol {
                transcript: vec![vec![0; 2]; 2],
                alice_out: (0..2).map(|x| vec![r ^ x]).collect(),
                bob_out: (0..2).map(|y| vec![r ^ y]).collect(),
            };
            (rat(1, 2), p)
        })
        .collect();
    RandomizedProtocol { sizes: Sizes::new(2, 2, 2, 2), c: 0, mixture }
}

/// `log2 |A×B|` rounded up, the bits needed to forward one outcome pair.
pub fn outcome_bits(sizes: Sizes) -> u32 {
    ceil_log2((sizes.a * sizes.b) as u128)
}
