//! The Hidden Matching distribution, its Bell functional, and the degree-2
//! Fourier mass that bounds that functional on large rectangles.
//!
//! Encoding: vertex `k ∈ {1..n}` is the `log n`-bit string of `k − 1`, so
//! `⟨a, i ⊕ j⟩` is the parity of `a & ((i−1) ⊕ (j−1))`. Alice's input index
//! `X` has `x_1` as its most significant bit. Bob's output is the pair
//! `(d, slot)` where `slot` names an edge of his matching, numbered in the
//! order the matching lists them; label `"d,slot"`, output index `2·slot + d`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::certificates::{bell_value, BellFunctional};
use crate::distributions::{bit_string, Dist, Metadata, QuantumSetup, Sizes};
use crate::rational::{int, is_power_of_two, pow2_of_sqrt, rat, Rat, Rationalized};
use crate::strategies::{max_bell_value, DetStrategy, StrategyClass};
use crate::{Error, Result};

/// A perfect matching on `{0..n}` (0-based vertices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Matching {
    pub fn label(&self) -> String {
        self.edges.iter().map(|(i, j)| format!("({},{})", i + 1, j + 1)).collect()
    }
}

fn double_factorial_odd(n: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    let mut k = n.saturating_sub(1);
    while k > 1 {
        acc = acc.checked_mul(k as u128)?;
        k -= 2;
    }
    Some(acc)
}

/// All perfect matchings of `{1..n}`: the lowest free vertex is paired with
/// each later free vertex in turn. Count `(n−1)!!`.
pub fn enumerate_matchings(n: usize, cap: u128) -> Result<Vec<Matching>> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::input(format!("matchings need an even positive vertex count, got {n}")));
    }
    let count = double_factorial_odd(n);
    if count.is_none_or(|c| c > cap) {
        return Err(Error::TooLarge {
            what: format!("matchings on {n} vertices"),
            count: count.map(|c| c.to_string()).unwrap_or_else(|| "overflow".into()),
            cap,
            hint: "",
        });
    }
    fn rec(free: &mut Vec<usize>, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(current.clone());
            return;
        }
        let first = free.remove(0);
        for k in 0..free.len() {
            let partner = free.remove(k);
            current.push((first, partner));
            rec(free, current, out);
            current.pop();
            free.insert(k, partner);
        }
        free.insert(0, first);
    }
    let mut out = Vec::new();
    rec(&mut (0..n).collect(), &mut Vec::new(), &mut out);
    Ok(out.into_iter().map(|edges| Matching { n, edges }).collect())
}

fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 || !is_power_of_two(n) {
        return Err(Error::input(format!("n must be a power of two at least 2, got {n}")));
    }
    Ok(())
}

/// `x_v` for 0-based vertex `v`.
#[inline]
fn x_bit(x: usize, n: usize, v: usize) -> usize {
    x >> (n - 1 - v) & 1
}

#[inline]
fn parity(v: usize) -> usize {
    (v.count_ones() & 1) as usize
}

/// Whether `(a, d, edge)` satisfies `⟨a, i ⊕ j⟩ ⊕ d = x_i ⊕ x_j`.
#[inline]
fn valid(n: usize, x: usize, a: usize, d: usize, (i, j): (usize, usize)) -> bool {
    parity(a & (i ^ j)) ^ d == x_bit(x, n, i) ^ x_bit(x, n, j)
}

struct Shape {
    n: usize,
    matchings: Vec<Matching>,
    sizes: Sizes,
}

fn shape(n: usize, cap: u128) -> Result<Shape> {
    check_n(n)?;
    if n >= usize::BITS as usize - 1 {
        return Err(Error::input("n too large"));
    }
    let matchings = enumerate_matchings(n, cap)?;
    let sizes = Sizes::new(1 << n, matchings.len(), n, n);
    let entries = (1u128 << n) * matchings.len() as u128 * (n * n) as u128;
    if entries > cap {
        return Err(Error::TooLarge {
            what: format!("Hidden Matching table for n = {n}"),
            count: entries.to_string(),
            cap,
            hint: "",
        });
    }
    Ok(Shape { n, matchings, sizes })
}

fn labels(sh: &Shape) -> (Vec<String>, Vec<String>, Vec<String>, Vec<String>) {
    let n = sh.n;
    let xs = (0..1usize << n).map(|x| bit_string(x, n)).collect();
    let ys = sh.matchings.iter().map(Matching::label).collect();
    let a = (0..n).map(|a| bit_string(a, log2(n))).collect();
    let b = (0..n).map(|b| format!("{},{}", b % 2, b / 2)).collect();
    (xs, ys, a, b)
}

/// `HM(a,d,i,j|x,M) = 2/n²` when `⟨a, i⊕j⟩ ⊕ d = x_i ⊕ x_j`, else 0.
pub fn hm_distribution(n: usize, cap: u128) -> Result<Dist> {
    let sh = shape(n, cap)?;
    let weight = rat(2, (n * n) as i64);
    let mut probs = Vec::with_capacity(sh.sizes.len());
    for x in 0..sh.sizes.x {
        for m in &sh.matchings {
            for a in 0..n {
                for b in 0..n {
                    let ok = valid(n, x, a, b % 2, m.edges[b / 2]);
                    probs.push(if ok { weight.clone() } else { Rat::zero() });
                }
            }
        }
    }
    let (xs, ys, a, b) = labels(&sh);
    Dist::new(
        xs,
        ys,
        a,
        b,
        probs,
        Metadata { approximate: false, source: format!("hidden_matching n={n} vertex=(index-1) binary") },
    )
}

/// Parameters of the functional: the rationalized scale `2^(√(n−1)/(2C))`,
/// `|Φ'| = scale/(n 2^n |M_n|)` and `μ = −scale/(n 2^(n+1) |M_n|)`.
#[derive(Clone, Debug)]
pub struct HmBellParams {
    pub n: usize,
    pub c: Rat,
    pub matchings: usize,
    pub scale: Rationalized,
    pub phi: Rat,
    pub mu: Rat,
}

impl HmBellParams {
    pub fn new(n: usize, c: &Rat, rel_tol: &Rat, cap: u128) -> Result<HmBellParams> {
        check_n(n)?;
        if *c <= Rat::zero() {
            return Err(Error::input("the constant C must be positive"));
        }
        let count = double_factorial_odd(n).ok_or_else(|| Error::input("too many matchings"))?;
        if count > cap {
            return Err(Error::TooLarge { what: "matchings".into(), count: count.to_string(), cap, hint: "" });
        }
        let scale = pow2_of_sqrt(&int(n as i64 - 1), &(c * int(2)).recip(), rel_tol);
        let denom = Rat::from_integer(BigInt::from(n) * (BigInt::one() << n) * BigInt::from(count));
        let phi = &scale.value / &denom;
        let mu = -&phi / int(2);
        Ok(HmBellParams { n, c: c.clone(), matchings: count as usize, scale, phi, mu })
    }

    /// `scale / (2n)`, the functional's value on the distribution.
    pub fn closed_form(&self) -> Rat {
        &self.scale.value / int(2 * self.n as i64)
    }
}

/// Default relative precision of the rationalized scale.
pub fn default_rel_tol() -> Rat {
    rat(1, 1_000_000_000_000_000)
}

/// `B = Φ' + μ` with `Φ' = |Φ'| · (−1)^(⟨a,i⊕j⟩ ⊕ d ⊕ x_i ⊕ x_j)` on edges of `M`.
pub fn hm_bell(n: usize, c: &Rat, rel_tol: &Rat, cap: u128) -> Result<(BellFunctional, HmBellParams)> {
    let sh = shape(n, cap)?;
    let params = HmBellParams::new(n, c, rel_tol, cap)?;
    let plus = &params.phi + &params.mu;
    let minus = -&params.phi + &params.mu;
    let mut coeffs = Vec::with_capacity(sh.sizes.len());
    for x in 0..sh.sizes.x {
        for m in &sh.matchings {
            for a in 0..n {
                for b in 0..n {
                    let ok = valid(n, x, a, b % 2, m.edges[b / 2]);
                    coeffs.push(if ok { plus.clone() } else { minus.clone() });
                }
            }
        }
    }
    Ok((BellFunctional::new(sh.sizes, coeffs)?, params))
}

#[derive(Clone, Debug)]
pub struct ObjectiveCheck {
    pub computed: Rat,
    pub closed_form: Rat,
    pub equal: bool,
    pub params: HmBellParams,
}

/// Sums the functional against the distribution and compares with `scale/(2n)`.
pub fn hm_objective_check(n: usize, c: &Rat, rel_tol: &Rat, cap: u128) -> Result<ObjectiveCheck> {
    let p = hm_distribution(n, cap)?;
    let (f, params) = hm_bell(n, c, rel_tol, cap)?;
    let computed = bell_value(&f, &p)?;
    let closed_form = params.closed_form();
    Ok(ObjectiveCheck { equal: computed == closed_form, computed, closed_form, params })
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub c: Rat,
    pub max_value: Rat,
    pub witness: DetStrategy,
    pub at_most_one: bool,
}

/// Maximum of the functional over strategies where only Alice may abort.
/// Reports; asserts nothing.
pub fn hm_constraint_scan(n: usize, c: &Rat, rel_tol: &Rat, cap: u128) -> Result<ScanRow> {
    let (f, _) = hm_bell(n, c, rel_tol, cap)?;
    let (max_value, witness) = max_bell_value(&f, StrategyClass::AliceAbort, cap)?;
    Ok(ScanRow { c: c.clone(), at_most_one: max_value <= Rat::one(), max_value, witness })
}

/// Shared `n`-dimensional maximally entangled state; Alice measures in the
/// phase-twisted Fourier basis of `x`, Bob in the `|i⟩ ± |j⟩` basis of `M`.
/// Its statistics are exactly `hm_distribution(n)`.
pub fn hm_quantum_setup(n: usize, cap: u128, denominator_limit: u64) -> Result<QuantumSetup> {
    let sh = shape(n, cap)?;
    let amp = 1.0 / (n as f64).sqrt();
    let mut state = vec![Complex64::zero(); n * n];
    for i in 0..n {
        state[i * n + i] = Complex64::new(amp, 0.0);
    }
    let alice = (0..sh.sizes.x)
        .map(|x| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|i| {
                            let sign = if (x_bit(x, n, i) ^ parity(a & i)) == 1 { -1.0 } else { 1.0 };
                            Complex64::new(sign * amp, 0.0)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bob = sh
        .matchings
        .iter()
        .map(|m| {
            (0..n)
                .map(|b| {
                    let (i, j) = m.edges[b / 2];
                    let mut v = vec![Complex64::zero(); n];
                    v[i] = Complex64::new(h, 0.0);
                    v[j] = Complex64::new(if b % 2 == 0 { h } else { -h }, 0.0);
                    v
                })
                .collect()
        })
        .collect();
    Ok(QuantumSetup { dim_a: n, dim_b: n, state, alice, bob, denominator_limit })
}

/// `Σ_{|S|=2} β_S²` with `β_S = E_{x∈A} (−1)^{S·x}`, by the character sums.
pub fn degree2_fourier_mass(n: usize, subset: &[usize]) -> Result<Rat> {
    if subset.is_empty() {
        return Err(Error::input("the subset A must be nonempty"));
    }
    let size = int(subset.len() as i64);
    let mut total = Rat::zero();
    for i in 0..n {
        for j in i + 1..n {
            let s: i64 = subset.iter().map(|&x| if (x_bit(x, n, i) ^ x_bit(x, n, j)) == 1 { -1 } else { 1 }).sum();
            let beta = int(s) / &size;
            total += &beta * &beta;
        }
    }
    Ok(total)
}

/// Same quantity through pairwise correlations: for `z = x ⊕ x'` of weight
/// `w`, `Σ_{i<j} (−1)^{z_i + z_j} = ((n − 2w)² − n)/2`.
pub fn degree2_fourier_mass_pairwise(n: usize, subset: &[usize]) -> Result<Rat> {
    if subset.is_empty() {
        return Err(Error::input("the subset A must be nonempty"));
    }
    let mut acc: i64 = 0;
    for &x in subset {
        for &x2 in subset {
            let w = (x ^ x2).count_ones() as i64;
            let d = n as i64 - 2 * w;
            acc += (d * d - n as i64) / 2;
        }
    }
    let size = subset.len() as i64;
    Ok(rat(acc, size * size))
}

#[derive(Clone, Debug)]
pub struct KklScan {
    pub n: usize,
    pub subsets: usize,
    /// `max mass / log2(2^n/|A|)²` over proper subsets.
    pub c_squared_form: f64,
    pub witness_squared: Vec<usize>,
    /// `max √mass / log2(2^n/|A|)` over proper subsets.
    pub c_root_form: f64,
    pub witness_root: Vec<usize>,
}

/// Every nonempty `A ⊆ {0,1}^n` for `n ≤ 4`: the smallest constants for
/// which the degree-2 bound holds, in both readings.
pub fn kkl_scan(n: usize) -> Result<KklScan> {
    if n == 0 || n > 4 {
        return Err(Error::input("exhaustive subset scan supports 1 <= n <= 4"));
    }
    let cube = 1usize << n;
    let mut best_sq = (0.0f64, Vec::new());
    let mut best_root = (0.0f64, Vec::new());
    let mut subsets = 0;
    for mask in 1u64..(1u64 << cube) {
        let a: Vec<usize> = (0..cube).filter(|&x| mask >> x & 1 == 1).collect();
        subsets += 1;
        if a.len() == cube {
            continue;
        }
        let mass = crate::rational::to_f64(&degree2_fourier_mass_pairwise(n, &a)?);
        let l = (cube as f64 / a.len() as f64).log2();
        let sq = mass / (l * l);
        let root = mass.sqrt() / l;
        if sq > best_sq.0 {
            best_sq = (sq, a.clone());
        }
        if root > best_root.0 {
            best_root = (root, a);
        }
    }
    Ok(KklScan {
        n,
        subsets,
        c_squared_form: best_sq.0,
        witness_squared: best_sq.1,
        c_root_form: best_root.0,
        witness_root: best_root.1,
    })
}
