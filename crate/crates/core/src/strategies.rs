//! Local deterministic strategies, optionally with the abort outcome `⊥`.

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::certificates::BellFunctional;
use crate::distributions::Sizes;
use crate::rational::Rat;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyClass {
    /// `L_det`: nobody aborts.
    NoAbort,
    /// `L_det^⊥`: either player may abort.
    BothAbort,
    /// `L_det^⊥A`: only Alice may abort.
    AliceAbort,
}

impl StrategyClass {
    pub fn alice_may_abort(self) -> bool {
        matches!(self, StrategyClass::BothAbort | StrategyClass::AliceAbort)
    }

    pub fn bob_may_abort(self) -> bool {
        self == StrategyClass::BothAbort
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyClass::NoAbort => "NoAbort",
            StrategyClass::BothAbort => "BothAbort",
            StrategyClass::AliceAbort => "AliceAbort",
        }
    }

    pub fn from_name(s: &str) -> Option<StrategyClass> {
        match s {
            "NoAbort" => Some(StrategyClass::NoAbort),
            "BothAbort" => Some(StrategyClass::BothAbort),
            "AliceAbort" => Some(StrategyClass::AliceAbort),
            _ => None,
        }
    }
}

/// A pair of maps `x -> a ∪ {⊥}` and `y -> b ∪ {⊥}`; `None` is `⊥`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetStrategy {
    pub alice: Vec<Option<usize>>,
    pub bob: Vec<Option<usize>>,
    pub class: StrategyClass,
}

impl DetStrategy {
    pub fn new(alice: Vec<Option<usize>>, bob: Vec<Option<usize>>, class: StrategyClass) -> Result<DetStrategy> {
        let s = DetStrategy { alice, bob, class };
        if !class.alice_may_abort() && s.alice.iter().any(Option::is_none) {
            return Err(Error::input(format!("{} strategy has an aborting Alice", class.name())));
        }
        if !class.bob_may_abort() && s.bob.iter().any(Option::is_none) {
            return Err(Error::input(format!("{} strategy has an aborting Bob", class.name())));
        }
        Ok(s)
    }

    pub fn check_sizes(&self, sizes: Sizes) -> Result<()> {
        if self.alice.len() != sizes.x || self.bob.len() != sizes.y {
            return Err(Error::input("strategy is not total on the input sets"));
        }
        if self.alice.iter().flatten().any(|&a| a >= sizes.a) || self.bob.iter().flatten().any(|&b| b >= sizes.b) {
            return Err(Error::input("strategy output out of range"));
        }
        Ok(())
    }

    /// `ℓ(a,b|x,y)`.
    #[inline]
    pub fn evaluate(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        self.alice[x] == Some(a) && self.bob[y] == Some(b)
    }

    /// `B(ℓ) = Σ_{x,y} B[alice(x), bob(y), x, y]`, aborts contributing nothing.
    pub fn bell_value(&self, f: &BellFunctional) -> Rat {
        let mut v = Rat::zero();
        for (x, a) in self.alice.iter().enumerate() {
            let Some(a) = a else { continue };
            for (y, b) in self.bob.iter().enumerate() {
                if let Some(b) = b {
                    v += f.get(x, y, *a, *b);
                }
            }
        }
        v
    }

    pub fn aborts(&self) -> bool {
        self.alice.iter().chain(&self.bob).any(Option::is_none)
    }
}

fn side_options(labels: usize, abort: bool) -> usize {
    labels + usize::from(abort)
}

fn checked_pow(base: usize, exp: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

/// Number of strategies of `class`; `None` on overflow.
pub fn count(class: StrategyClass, sizes: Sizes) -> Option<u128> {
    let alice = checked_pow(side_options(sizes.a, class.alice_may_abort()), sizes.x)?;
    let bob = checked_pow(side_options(sizes.b, class.bob_may_abort()), sizes.y)?;
    alice.checked_mul(bob)
}

fn count_string(c: Option<u128>) -> String {
    c.map(|c| c.to_string()).unwrap_or_else(|| "more than 2^128".into())
}

/// One side's map number `index` in mixed radix, first input least significant;
/// digit `labels` stands for `⊥`.
fn decode_side(mut index: u128, inputs: usize, labels: usize, abort: bool) -> Vec<Option<usize>> {
    let radix = side_options(labels, abort) as u128;
    (0..inputs)
        .map(|_| {
            let d = (index % radix) as usize;
            index /= radix;
            (d < labels).then_some(d)
        })
        .collect()
}

/// All strategies of a class, each exactly once, Bob's map varying fastest.
pub struct Strategies {
    class: StrategyClass,
    sizes: Sizes,
    bob_count: u128,
    next: u128,
    total: u128,
}

impl Iterator for Strategies {
    type Item = DetStrategy;

    fn next(&mut self) -> Option<DetStrategy> {
        if self.next >= self.total {
            return None;
        }
        let i = self.next;
        self.next += 1;
        let s = self.sizes;
        Some(DetStrategy {
            alice: decode_side(i / self.bob_count, s.x, s.a, self.class.alice_may_abort()),
            bob: decode_side(i % self.bob_count, s.y, s.b, self.class.bob_may_abort()),
            class: self.class,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.total - self.next).unwrap_or(usize::MAX);
        (left, Some(left))
    }
}

pub fn enumerate(class: StrategyClass, sizes: Sizes, cap: u128) -> Result<Strategies> {
    if sizes.is_empty() {
        return Err(Error::input("sizes must be positive"));
    }
    let total = count(class, sizes);
    match total {
        Some(t) if t <= cap => Ok(Strategies {
            class,
            sizes,
            bob_count: checked_pow(side_options(sizes.b, class.bob_may_abort()), sizes.y).unwrap_or(1),
            next: 0,
            total: t,
        }),
        _ => Err(Error::TooLarge {
            what: format!("{} strategies on {}x{} inputs", class.name(), sizes.x, sizes.y),
            count: count_string(total),
            cap,
            hint: "; use column generation (--colgen) instead of full enumeration",
        }),
    }
}

/// Pointwise best response: label with the largest value, earliest label on
/// ties; `⊥` (value 0) only when every label is strictly negative.
fn best_response(values: &[Rat], abort: bool) -> (Option<usize>, Rat) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    if abort && values[best].is_negative() {
        (None, Rat::zero())
    } else {
        (Some(best), values[best].clone())
    }
}

/// Maximum of `B(ℓ)` over `class`, with a maximizing strategy.
///
/// Enumerates the side with fewer full maps and best-responds pointwise on
/// the other side. The witness is the first maximizer in enumeration order,
/// independent of how the work is split across threads.
pub fn max_bell_value(f: &BellFunctional, class: StrategyClass, cap: u128) -> Result<(Rat, DetStrategy)> {
    let s = f.sizes();
    let alice_count = checked_pow(side_options(s.a, class.alice_may_abort()), s.x);
    let bob_count = checked_pow(side_options(s.b, class.bob_may_abort()), s.y);
    let outer_alice = match (alice_count, bob_count) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        (None, _) => false,
    };
    let outer_count = if outer_alice { alice_count } else { bob_count };
    let n = match outer_count {
        Some(n) if n <= cap => n,
        _ => {
            return Err(Error::TooLarge {
                what: format!("best-response search for {}", class.name()),
                count: count_string(alice_count.min(bob_count).or(alice_count).or(bob_count)),
                cap,
                hint: "; both players have too many strategies to enumerate",
            })
        }
    };

    let evaluate = |index: u128| -> (Rat, DetStrategy) {
        if outer_alice {
            let alice = decode_side(index, s.x, s.a, class.alice_may_abort());
            let mut total = Rat::zero();
            let mut bob = Vec::with_capacity(s.y);
            let mut vals = vec![Rat::zero(); s.b];
            for y in 0..s.y {
                for (b, v) in vals.iter_mut().enumerate() {
                    *v = Rat::zero();
                    for (x, a) in alice.iter().enumerate() {
                        if let Some(a) = a {
                            *v += f.get(x, y, *a, b);
                        }
                    }
                }
                let (choice, v) = best_response(&vals, class.bob_may_abort());
                bob.push(choice);
                total += v;
            }
            (total, DetStrategy { alice, bob, class })
        } else {
            let bob = decode_side(index, s.y, s.b, class.bob_may_abort());
            let mut total = Rat::zero();
            let mut alice = Vec::with_capacity(s.x);
            let mut vals = vec![Rat::zero(); s.a];
            for x in 0..s.x {
                for (a, v) in vals.iter_mut().enumerate() {
                    *v = Rat::zero();
                    for (y, b) in bob.iter().enumerate() {
                        if let Some(b) = b {
                            *v += f.get(x, y, a, *b);
                        }
                    }
                }
                let (choice, v) = best_response(&vals, class.alice_may_abort());
                alice.push(choice);
                total += v;
            }
            (total, DetStrategy { alice, bob, class })
        }
    };

    let scan = |lo: u128, hi: u128| -> (Rat, u128) {
        let mut best: Option<(Rat, u128)> = None;
        for i in lo..hi {
            let (v, _) = evaluate(i);
            if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                best = Some((v, i));
            }
        }
        best.expect("nonempty range")
    };

    const CHUNK: u128 = 1024;
    let (_, index) = if n <= CHUNK {
        scan(0, n)
    } else {
        let chunks = n.div_ceil(CHUNK);
        let chunks = usize::try_from(chunks).map_err(|_| Error::input("strategy count too large"))?;
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c as u128 * CHUNK;
                scan(lo, (lo + CHUNK).min(n))
            })
            .reduce_with(|l, r| if r.0 > l.0 || (r.0 == l.0 && r.1 < l.1) { r } else { l })
            .expect("at least one chunk")
    };
    Ok(evaluate(index))
}

/// Minimum of `B(ℓ)` over `class`: `-max(-B)`.
pub fn min_bell_value(f: &BellFunctional, class: StrategyClass, cap: u128) -> Result<(Rat, DetStrategy)> {
    let (v, w) = max_bell_value(&f.negated(), class, cap)?;
    Ok((-v, w))
}
