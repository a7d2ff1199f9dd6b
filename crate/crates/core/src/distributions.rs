//! Finite conditional distributions `p(a,b|x,y)` with exact entries.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::rational::{best_approximation, from_f64_exact, int, rat, Rat};
use crate::{Error, Result};

/// Cardinalities `(|X|, |Y|, |A|, |B|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sizes {
    pub x: usize,
    pub y: usize,
    pub a: usize,
    pub b: usize,
}

impl Sizes {
    pub fn new(x: usize, y: usize, a: usize, b: usize) -> Sizes {
        Sizes { x, y, a, b }
    }

    /// Flat index of `(x, y, a, b)`, x-major.
    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y + y) * self.a + a) * self.b + b
    }

    pub fn len(&self) -> usize {
        self.x * self.y * self.a * self.b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(x, y, a, b)` in flat-index order.
    pub fn tuples(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        (0..self.x).flat_map(move |x| {
            (0..self.y).flat_map(move |y| (0..self.a).flat_map(move |a| (0..self.b).map(move |b| (x, y, a, b))))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Metadata {
    pub approximate: bool,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dist {
    pub x_labels: Vec<String>,
    pub y_labels: Vec<String>,
    pub a_labels: Vec<String>,
    pub b_labels: Vec<String>,
    probs: Vec<Rat>,
    pub metadata: Metadata,
}

pub fn numbered_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Labels `0…0` to `1…1` of the given bit width, most significant bit first.
pub fn bit_labels(bits: usize) -> Vec<String> {
    (0..1usize << bits).map(|v| bit_string(v, bits)).collect()
}

pub fn bit_string(v: usize, bits: usize) -> String {
    (0..bits).rev().map(|k| if v >> k & 1 == 1 { '1' } else { '0' }).collect()
}

impl Dist {
    /// Builds a distribution from a flat x-major table, checking
    /// nonnegativity and exact per-input normalization.
    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        a_labels: Vec<String>,
        b_labels: Vec<String>,
        probs: Vec<Rat>,
        metadata: Metadata,
    ) -> Result<Dist> {
        let sizes = Sizes::new(x_labels.len(), y_labels.len(), a_labels.len(), b_labels.len());
        if sizes.is_empty() {
            return Err(Error::input("every label set must be nonempty"));
        }
        if probs.len() != sizes.len() {
            return Err(Error::input(format!("expected {} probabilities, got {}", sizes.len(), probs.len())));
        }
        let d = Dist { x_labels, y_labels, a_labels, b_labels, probs, metadata };
        if let Some(v) = d.probs.iter().find(|v| v.is_negative()) {
            return Err(Error::input(format!("negative probability {v}")));
        }
        for x in 0..sizes.x {
            for y in 0..sizes.y {
                let s = d.input_mass(x, y);
                if !s.is_one() {
                    return Err(Error::input(format!(
                        "p(.|{},{}) sums to {s}, not 1",
                        d.x_labels[x], d.y_labels[y]
                    )));
                }
            }
        }
        Ok(d)
    }

    /// Builds from a function of `(x, y, a, b)` on numbered labels.
    pub fn from_fn(sizes: Sizes, source: &str, f: impl Fn(usize, usize, usize, usize) -> Rat) -> Result<Dist> {
        let probs = sizes.tuples().map(|(x, y, a, b)| f(x, y, a, b)).collect();
        Dist::new(
            numbered_labels(sizes.x),
            numbered_labels(sizes.y),
            numbered_labels(sizes.a),
            numbered_labels(sizes.b),
            probs,
            Metadata { approximate: false, source: source.to_string() },
        )
    }

    pub fn sizes(&self) -> Sizes {
        Sizes::new(self.x_labels.len(), self.y_labels.len(), self.a_labels.len(), self.b_labels.len())
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> &Rat {
        &self.probs[self.sizes().index(x, y, a, b)]
    }

    pub fn probs(&self) -> &[Rat] {
        &self.probs
    }

    fn input_mass(&self, x: usize, y: usize) -> Rat {
        let s = self.sizes();
        let start = s.index(x, y, 0, 0);
        self.probs[start..start + s.a * s.b].iter().sum()
    }

    pub fn same_shape(&self, other: &Dist) -> bool {
        self.x_labels == other.x_labels
            && self.y_labels == other.y_labels
            && self.a_labels == other.a_labels
            && self.b_labels == other.b_labels
    }

    /// `Σ_b p(a,b|x,y)`.
    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> Rat {
        (0..self.b_labels.len()).map(|b| self.p(x, y, a, b).clone()).sum()
    }

    /// `Σ_a p(a,b|x,y)`.
    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> Rat {
        (0..self.a_labels.len()).map(|a| self.p(x, y, a, b).clone()).sum()
    }

    pub fn is_nonsignaling(&self) -> bool {
        let s = self.sizes();
        for x in 0..s.x {
            for a in 0..s.a {
                let m0 = self.alice_marginal(x, 0, a);
                if (1..s.y).any(|y| self.alice_marginal(x, y, a) != m0) {
                    return false;
                }
            }
        }
        for y in 0..s.y {
            for b in 0..s.b {
                let m0 = self.bob_marginal(0, y, b);
                if (1..s.x).any(|x| self.bob_marginal(x, y, b) != m0) {
                    return false;
                }
            }
        }
        true
    }

    /// Convex combination `Σ w_i p_i` of same-shape distributions.
    pub fn mixture(parts: &[(Rat, &Dist)], source: &str) -> Result<Dist> {
        let first = parts.first().ok_or_else(|| Error::input("empty mixture"))?.1;
        if parts.iter().any(|(_, d)| !d.same_shape(first)) {
            return Err(Error::input("mixture components have different shapes"));
        }
        let mut probs = vec![Rat::zero(); first.probs.len()];
        for (w, d) in parts {
            for (acc, v) in probs.iter_mut().zip(&d.probs) {
                *acc += w * v;
            }
        }
        Dist::new(
            first.x_labels.clone(),
            first.y_labels.clone(),
            first.a_labels.clone(),
            first.b_labels.clone(),
            probs,
            Metadata { approximate: parts.iter().any(|(_, d)| d.metadata.approximate), source: source.to_string() },
        )
    }
}

/// Max over `(x,y)` of `Σ_{a,b} |p − p2|`.
pub fn l1_distance(p: &Dist, p2: &Dist) -> Result<Rat> {
    if !p.same_shape(p2) {
        return Err(Error::input("distributions have different label sets"));
    }
    let s = p.sizes();
    let mut best = Rat::zero();
    for x in 0..s.x {
        for y in 0..s.y {
            let mut sum = Rat::zero();
            for a in 0..s.a {
                for b in 0..s.b {
                    sum += (p.p(x, y, a, b) - p2.p(x, y, a, b)).abs();
                }
            }
            if sum > best {
                best = sum;
            }
        }
    }
    Ok(best)
}

/// `p_f`: binary outputs with `a ⊕ b = f(x,y)`, uniform marginals.
pub fn from_boolean_function(
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    f: impl Fn(usize, usize) -> bool,
    source: &str,
) -> Dist {
    let sizes = Sizes::new(x_labels.len(), y_labels.len(), 2, 2);
    let half = rat(1, 2);
    let probs = sizes
        .tuples()
        .map(|(x, y, a, b)| if ((a ^ b) == 1) == f(x, y) { half.clone() } else { Rat::zero() })
        .collect();
    Dist::new(
        x_labels,
        y_labels,
        numbered_labels(2),
        numbered_labels(2),
        probs,
        Metadata { approximate: false, source: source.to_string() },
    )
    .expect("p_f is normalized by construction")
}

/// The PR box: `a ⊕ b = x ∧ y`.
pub fn pr_box() -> Dist {
    from_boolean_function(numbered_labels(2), numbered_labels(2), |x, y| x == 1 && y == 1, "pr_box")
}

/// `p_XOR`: `a ⊕ b = x ⊕ y`, a local distribution.
pub fn p_xor() -> Dist {
    from_boolean_function(numbered_labels(2), numbered_labels(2), |x, y| x != y, "p_xor")
}

/// A bipartite pure state and projective measurements on each side.
///
/// `state[i * dim_b + j]` is the amplitude of `|i⟩|j⟩`. Each measurement is a
/// list of basis vectors, one per outcome.
#[derive(Clone, Debug)]
pub struct QuantumSetup {
    pub dim_a: usize,
    pub dim_b: usize,
    pub state: Vec<Complex64>,
    pub alice: Vec<Vec<Vec<Complex64>>>,
    pub bob: Vec<Vec<Vec<Complex64>>>,
    pub denominator_limit: u64,
}

const QUANTUM_TOL: f64 = 1e-12;

fn check_basis(family: &[Vec<Complex64>], dim: usize, who: &str, input: usize) -> Result<()> {
    if family.len() != dim {
        return Err(Error::input(format!(
            "{who} measurement {input} has {} outcomes on a {dim}-dimensional system",
            family.len()
        )));
    }
    for (i, u) in family.iter().enumerate() {
        if u.len() != dim {
            return Err(Error::input(format!("{who} measurement {input}: vector {i} has wrong dimension")));
        }
        for (j, v) in family.iter().enumerate().skip(i) {
            let ip: Complex64 = u.iter().zip(v).map(|(p, q)| p.conj() * q).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (ip - Complex64::new(target, 0.0)).norm() > QUANTUM_TOL {
                return Err(Error::input(format!("{who} measurement {input} is not orthonormal ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// `p(a,b|x,y) = |(⟨α_a^x| ⊗ ⟨β_b^y|) ψ|²`, rationalized with the
/// denominator cap and renormalized exactly per input pair.
pub fn from_quantum(setup: &QuantumSetup, source: &str) -> Result<Dist> {
    let (da, db) = (setup.dim_a, setup.dim_b);
    if da == 0 || db == 0 || setup.state.len() != da * db {
        return Err(Error::input("state length must equal dim_a * dim_b"));
    }
    if setup.alice.is_empty() || setup.bob.is_empty() {
        return Err(Error::input("need at least one measurement per side"));
    }
    if setup.denominator_limit == 0 {
        return Err(Error::input("denominator limit must be positive"));
    }
    let norm: f64 = setup.state.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > QUANTUM_TOL {
        return Err(Error::input(format!("state norm² is {norm}, not 1")));
    }
    for (x, fam) in setup.alice.iter().enumerate() {
        check_basis(fam, da, "alice", x)?;
    }
    for (y, fam) in setup.bob.iter().enumerate() {
        check_basis(fam, db, "bob", y)?;
    }
    let sizes = Sizes::new(setup.alice.len(), setup.bob.len(), da, db);
    let cap = BigInt::from(setup.denominator_limit);
    let mut probs = vec![Rat::zero(); sizes.len()];
    for x in 0..sizes.x {
        for y in 0..sizes.y {
            let mut block = Vec::with_capacity(da * db);
            for a in 0..da {
                for b in 0..db {
                    let alpha = &setup.alice[x][a];
                    let beta = &setup.bob[y][b];
                    let mut amp = Complex64::new(0.0, 0.0);
                    for i in 0..da {
                        for j in 0..db {
                            amp += alpha[i].conj() * beta[j].conj() * setup.state[i * db + j];
                        }
                    }
                    let v = from_f64_exact(amp.norm_sqr()).unwrap_or_else(Rat::zero);
                    block.push(best_approximation(&v, &cap));
                }
            }
            let total: Rat = block.iter().sum();
            if total.is_zero() {
                return Err(Error::input("measurement statistics vanish for an input pair"));
            }
            for (k, v) in block.into_iter().enumerate() {
                probs[sizes.index(x, y, 0, 0) + k] = v / &total;
            }
        }
    }
    Dist::new(
        numbered_labels(sizes.x),
        numbered_labels(sizes.y),
        numbered_labels(sizes.a),
        numbered_labels(sizes.b),
        probs,
        Metadata { approximate: true, source: source.to_string() },
    )
}

/// Maximally entangled qubit pair with CHSH-optimal measurement angles.
pub fn tsirelson_setup(denominator_limit: u64) -> QuantumSetup {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let state = vec![Complex64::new(s, 0.0), Complex64::zero(), Complex64::zero(), Complex64::new(s, 0.0)];
    let basis = |theta: f64| {
        vec![
            vec![Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)],
            vec![Complex64::new(-theta.sin(), 0.0), Complex64::new(theta.cos(), 0.0)],
        ]
    };
    use std::f64::consts::FRAC_PI_4;
    QuantumSetup {
        dim_a: 2,
        dim_b: 2,
        state,
        alice: vec![basis(0.0), basis(FRAC_PI_4)],
        bob: vec![basis(FRAC_PI_4 / 2.0), basis(-FRAC_PI_4 / 2.0)],
        denominator_limit,
    }
}

/// Uniformly random rational distribution with entries of denominator `den`.
pub fn random_dist<R: rand::Rng>(sizes: Sizes, den: u32, rng: &mut R) -> Dist {
    let k = sizes.a * sizes.b;
    let mut probs = Vec::with_capacity(sizes.len());
    for _ in 0..sizes.x * sizes.y {
        // random composition of den into k parts
        let mut cuts: Vec<u32> = (0..k - 1).map(|_| rng.gen_range(0..=den)).collect();
        cuts.sort_unstable();
        let mut prev = 0;
        for c in cuts.into_iter().chain(std::iter::once(den)) {
            probs.push(rat(i64::from(c - prev), i64::from(den)));
            prev = c;
        }
    }
    Dist::new(
        numbered_labels(sizes.x),
        numbered_labels(sizes.y),
        numbered_labels(sizes.a),
        numbered_labels(sizes.b),
        probs,
        Metadata { approximate: false, source: "random".into() },
    )
    .expect("compositions are normalized")
}

/// Point-mass distribution: outcome `(alice[x], bob[y])` with probability 1.
pub fn deterministic(alice: &[usize], bob: &[usize], a: usize, b: usize) -> Dist {
    let sizes = Sizes::new(alice.len(), bob.len(), a, b);
    Dist::from_fn(sizes, "deterministic", |x, y, aa, bb| if alice[x] == aa && bob[y] == bb { int(1) } else { Rat::zero() })
        .expect("point masses are normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::to_f64;

    #[test]
    fn pr_box_entries() {
        let pr = pr_box();
        assert_eq!(*pr.p(0, 0, 0, 0), rat(1, 2));
        assert_eq!(*pr.p(1, 1, 0, 1), rat(1, 2));
        assert!(pr.p(1, 1, 0, 0).is_zero());
        assert!(pr.is_nonsignaling());
    }

    #[test]
    fn constant_function_correlates_outputs() {
        let d = from_boolean_function(numbered_labels(3), numbered_labels(2), |_, _| false, "zero");
        for (x, y, a, b) in d.sizes().tuples() {
            let expect = if a == b { rat(1, 2) } else { Rat::zero() };
            assert_eq!(*d.p(x, y, a, b), expect);
        }
    }

    #[test]
    fn pf_nonsignaling_for_all_small_functions() {
        for (xb, yb) in [(1usize, 1usize), (1, 2), (2, 1)] {
            let (nx, ny) = (1usize << xb, 1usize << yb);
            for table in 0u32..(1 << (nx * ny)) {
                let d =
                    from_boolean_function(bit_labels(xb), bit_labels(yb), |x, y| table >> (x * ny + y) & 1 == 1, "f");
                assert!(d.is_nonsignaling());
                for x in 0..nx {
                    for y in 0..ny {
                        assert_eq!(d.alice_marginal(x, y, 0), rat(1, 2));
                        assert_eq!(d.bob_marginal(x, y, 1), rat(1, 2));
                    }
                }
            }
        }
    }

    #[test]
    fn distances() {
        let pr = pr_box();
        assert!(l1_distance(&pr, &pr).unwrap().is_zero());
        // differ only at (1,1): disjoint supports there
        assert_eq!(l1_distance(&pr, &p_xor()).unwrap(), int(2));
        let d00 = deterministic(&[0], &[0], 2, 2);
        let d01 = deterministic(&[0], &[1], 2, 2);
        assert_eq!(l1_distance(&d00, &d01).unwrap(), int(2));
        assert!(l1_distance(&pr, &d00).is_err());
    }

    #[test]
    fn signaling_detected() {
        // Alice copies Bob's input
        let d = Dist::from_fn(Sizes::new(2, 2, 2, 2), "copy", |_, y, a, b| {
            if a == y && b == 0 {
                int(1)
            } else {
                Rat::zero()
            }
        })
        .unwrap();
        assert!(!d.is_nonsignaling());
    }

    #[test]
    fn normalization_enforced() {
        let bad = vec![rat(1, 2); 4];
        let r = Dist::new(
            numbered_labels(1),
            numbered_labels(1),
            numbered_labels(2),
            numbered_labels(2),
            bad,
            Metadata::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn bell_state_computational_basis() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let id = vec![vec![Complex64::new(1.0, 0.0), Complex64::zero()], vec![Complex64::zero(), Complex64::new(1.0, 0.0)]];
        let setup = QuantumSetup {
            dim_a: 2,
            dim_b: 2,
            state: vec![Complex64::new(s, 0.0), Complex64::zero(), Complex64::zero(), Complex64::new(s, 0.0)],
            alice: vec![id.clone()],
            bob: vec![id.clone()],
            denominator_limit: 1000,
        };
        let d = from_quantum(&setup, "bell").unwrap();
        assert_eq!(*d.p(0, 0, 0, 0), rat(1, 2));
        assert_eq!(*d.p(0, 0, 1, 1), rat(1, 2));
        assert!(d.metadata.approximate);

        let product = QuantumSetup {
            state: vec![Complex64::new(1.0, 0.0), Complex64::zero(), Complex64::zero(), Complex64::zero()],
            ..setup.clone()
        };
        assert_eq!(*from_quantum(&product, "00").unwrap().p(0, 0, 0, 0), int(1));

        let unnormalized = QuantumSetup { state: vec![Complex64::new(1.0, 0.0); 4], ..setup.clone() };
        assert!(from_quantum(&unnormalized, "bad").is_err());
        let skew = vec![vec![Complex64::new(1.0, 0.0), Complex64::zero()], vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)]];
        assert!(from_quantum(&QuantumSetup { alice: vec![skew], ..setup }, "bad").is_err());
    }

    #[test]
    fn tsirelson_correlators() {
        let d = from_quantum(&tsirelson_setup(1_000_000), "tsirelson").unwrap();
        // independent oracle: for |Φ+⟩ and real rotations, p(a=b) = cos²(θa − θb)
        let alice = [0.0f64, std::f64::consts::FRAC_PI_4];
        let bob = [std::f64::consts::FRAC_PI_8, -std::f64::consts::FRAC_PI_8];
        for x in 0..2 {
            for y in 0..2 {
                let same = (alice[x] - bob[y]).cos().powi(2) / 2.0;
                let diff = (alice[x] - bob[y]).sin().powi(2) / 2.0;
                for (a, b) in [(0, 0), (1, 1)] {
                    assert!((to_f64(d.p(x, y, a, b)) - same).abs() < 1e-9);
                }
                for (a, b) in [(0, 1), (1, 0)] {
                    assert!((to_f64(d.p(x, y, a, b)) - diff).abs() < 1e-9);
                }
                let corr: f64 = (0..2)
                    .flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| if a == b { 1.0 } else { -1.0 } * to_f64(d.p(x, y, a, b)))
                    .sum();
                let expect = if x == 1 && y == 1 { -1.0 } else { 1.0 } * std::f64::consts::FRAC_1_SQRT_2;
                assert!((corr - expect).abs() < 1e-9, "{x}{y}: {corr}");
            }
        }
    }
}
