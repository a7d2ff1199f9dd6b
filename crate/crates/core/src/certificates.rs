//! Bell functionals and the certificates they form.
//!
//! A functional `B` assigns a coefficient to every non-abort outcome
//! `(a,b,x,y)`. An inefficiency-resistant certificate claims `B(ℓ) ≤ 1` for
//! every strategy that may abort, and then `B(p)` lower-bounds `eff(p)`.
//! A normalized certificate claims `|B(ℓ)| ≤ 1` for no-abort strategies and
//! lower-bounds `ν(p)`. Verification recomputes every maximum from scratch.

use num_traits::{One, Signed, Zero};

use crate::distributions::{Dist, Sizes};
use crate::rational::{int, rat, Rat};
use crate::strategies::{max_bell_value, min_bell_value, DetStrategy, StrategyClass};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BellFunctional {
    sizes: Sizes,
    coeffs: Vec<Rat>,
}

impl BellFunctional {
    /// `coeffs` in the same flat `(x, y, a, b)` order as [`Dist`].
    pub fn new(sizes: Sizes, coeffs: Vec<Rat>) -> Result<BellFunctional> {
        if sizes.is_empty() || coeffs.len() != sizes.len() {
            return Err(Error::input("functional coefficient count does not match its shape"));
        }
        Ok(BellFunctional { sizes, coeffs })
    }

    pub fn zeros(sizes: Sizes) -> BellFunctional {
        BellFunctional { sizes, coeffs: vec![Rat::zero(); sizes.len()] }
    }

    pub fn from_fn(sizes: Sizes, f: impl Fn(usize, usize, usize, usize) -> Rat) -> BellFunctional {
        BellFunctional { sizes, coeffs: sizes.tuples().map(|(x, y, a, b)| f(x, y, a, b)).collect() }
    }

    /// `B_abxy = (1/2)(-1)^(a⊕b⊕xy)`.
    pub fn chsh_half() -> BellFunctional {
        BellFunctional::from_fn(Sizes::new(2, 2, 2, 2), |x, y, a, b| {
            if (a ^ b ^ (x & y)) == 0 {
                rat(1, 2)
            } else {
                rat(-1, 2)
            }
        })
    }

    pub fn sizes(&self) -> Sizes {
        self.sizes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> &Rat {
        &self.coeffs[self.sizes.index(x, y, a, b)]
    }

    pub fn set(&mut self, x: usize, y: usize, a: usize, b: usize, v: Rat) {
        let i = self.sizes.index(x, y, a, b);
        self.coeffs[i] = v;
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn map(&self, f: impl Fn(&Rat) -> Rat) -> BellFunctional {
        BellFunctional { sizes: self.sizes, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn scaled(&self, c: &Rat) -> BellFunctional {
        self.map(|v| v * c)
    }

    pub fn negated(&self) -> BellFunctional {
        self.map(|v| -v)
    }

    /// The functional on a subset of inputs.
    pub fn restrict(&self, xs: &[usize], ys: &[usize]) -> Result<BellFunctional> {
        if xs.iter().any(|&x| x >= self.sizes.x) || ys.iter().any(|&y| y >= self.sizes.y) {
            return Err(Error::input("restriction index out of range"));
        }
        let sizes = Sizes::new(xs.len(), ys.len(), self.sizes.a, self.sizes.b);
        Ok(BellFunctional::from_fn(sizes, |x, y, a, b| self.get(xs[x], ys[y], a, b).clone()))
    }

    /// `β_xy = Σ_{a,b} B_abxy p(a,b|x,y)`.
    pub fn input_values(&self, p: &Dist) -> Result<Vec<Rat>> {
        self.check_shape(p)?;
        let s = self.sizes;
        let mut out = vec![Rat::zero(); s.x * s.y];
        for (i, (c, v)) in self.coeffs.iter().zip(p.probs()).enumerate() {
            if !c.is_zero() && !v.is_zero() {
                out[i / (s.a * s.b)] += c * v;
            }
        }
        Ok(out)
    }

    fn check_shape(&self, p: &Dist) -> Result<()> {
        if p.sizes() != self.sizes {
            return Err(Error::input(format!(
                "functional shape {:?} does not match distribution shape {:?}",
                self.sizes,
                p.sizes()
            )));
        }
        Ok(())
    }
}

/// `B(p) = Σ B_abxy p(a,b|x,y)`.
pub fn bell_value(f: &BellFunctional, p: &Dist) -> Result<Rat> {
    Ok(f.input_values(p)?.into_iter().sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    /// `B(ℓ) ≤ 1` on [`StrategyClass::BothAbort`].
    InefficiencyResistant,
    /// `B(ℓ) ≤ 1` on [`StrategyClass::AliceAbort`].
    InefficiencyResistantOneway,
    /// `|B(ℓ)| ≤ 1` on [`StrategyClass::NoAbort`].
    Normalized,
}

impl CertificateKind {
    pub fn class(self) -> StrategyClass {
        match self {
            CertificateKind::InefficiencyResistant => StrategyClass::BothAbort,
            CertificateKind::InefficiencyResistantOneway => StrategyClass::AliceAbort,
            CertificateKind::Normalized => StrategyClass::NoAbort,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::InefficiencyResistant => "inefficiency_resistant",
            CertificateKind::InefficiencyResistantOneway => "inefficiency_resistant_oneway",
            CertificateKind::Normalized => "normalized",
        }
    }

    pub fn from_name(s: &str) -> Option<CertificateKind> {
        [CertificateKind::InefficiencyResistant, CertificateKind::InefficiencyResistantOneway, CertificateKind::Normalized]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// How a feasible functional turns into a lower bound on a given `p`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum ValueRule {
    /// `V = B(p)`.
    #[default]
    Plain,
    /// `V = min B(p')` over valid `p'` with `Σ_ab |p' − p| ≤ ε` for every input.
    SmoothedEps(Rat),
    /// `V = Σ_xy β_xy · (η if β_xy ≥ 0 else 1)`.
    EfficiencyEta(Rat),
    /// `V = Σ_xy β_xy`, valid only when every `β_xy ≥ 0`.
    NonConstant,
    /// `B(ℓ) ≤ 0` on the class and `B(p) > 0`: every multiple of `B` is
    /// feasible, so the bound is infinite.
    Ray,
}

impl ValueRule {
    pub fn name(&self) -> &'static str {
        match self {
            ValueRule::Plain => "plain",
            ValueRule::SmoothedEps(_) => "smoothed_eps",
            ValueRule::EfficiencyEta(_) => "efficiency_eta",
            ValueRule::NonConstant => "non_constant",
            ValueRule::Ray => "ray",
        }
    }

    pub fn parameter(&self) -> Option<&Rat> {
        match self {
            ValueRule::SmoothedEps(r) | ValueRule::EfficiencyEta(r) => Some(r),
            _ => None,
        }
    }

    /// `None` when the rule's side condition fails.
    pub fn value(&self, f: &BellFunctional, p: &Dist) -> Result<Option<Rat>> {
        let beta = f.input_values(p)?;
        Ok(match self {
            ValueRule::Plain | ValueRule::Ray => Some(beta.into_iter().sum()),
            ValueRule::EfficiencyEta(eta) => {
                Some(beta.into_iter().map(|b| if b.is_negative() { b } else { b * eta }).sum())
            }
            ValueRule::NonConstant => {
                if beta.iter().any(Signed::is_negative) {
                    None
                } else {
                    Some(beta.into_iter().sum())
                }
            }
            ValueRule::SmoothedEps(eps) => Some(smoothed_minimum(f, p, eps)),
        })
    }
}

/// `min B(p')` over the per-input ℓ1 ball of radius `eps` around `p`
/// intersected with the simplex: per input, move up to `eps/2` of mass from
/// the largest coefficients onto the smallest one.
fn smoothed_minimum(f: &BellFunctional, p: &Dist, eps: &Rat) -> Rat {
    let s = p.sizes();
    let mut total = Rat::zero();
    let budget_full = eps / int(2);
    for x in 0..s.x {
        for y in 0..s.y {
            let mut entries: Vec<(Rat, Rat)> = Vec::with_capacity(s.a * s.b);
            for a in 0..s.a {
                for b in 0..s.b {
                    entries.push((f.get(x, y, a, b).clone(), p.p(x, y, a, b).clone()));
                }
            }
            let low = entries.iter().map(|(c, _)| c.clone()).min().expect("nonempty outcome set");
            let mut value: Rat = entries.iter().map(|(c, m)| c * m).sum();
            entries.sort_by(|l, r| r.0.cmp(&l.0));
            let mut budget = budget_full.clone();
            for (c, m) in entries {
                if budget.is_zero() || c <= low {
                    break;
                }
                let moved = if m < budget { m } else { budget.clone() };
                value -= &moved * (&c - &low);
                budget -= moved;
            }
            total += value;
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub functional: BellFunctional,
    pub kind: CertificateKind,
    pub claimed_value: Rat,
    pub value_rule: ValueRule,
}

impl Certificate {
    pub fn new(functional: BellFunctional, kind: CertificateKind, claimed_value: Rat) -> Result<Certificate> {
        Certificate::with_rule(functional, kind, claimed_value, ValueRule::Plain)
    }

    pub fn with_rule(
        functional: BellFunctional,
        kind: CertificateKind,
        claimed_value: Rat,
        value_rule: ValueRule,
    ) -> Result<Certificate> {
        if !claimed_value.is_positive() {
            return Err(Error::input("claimed value must be positive"));
        }
        Ok(Certificate { functional, kind, claimed_value, value_rule })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub valid: bool,
    /// `max B(ℓ)` over the kind's class.
    pub max_value: Rat,
    pub max_witness: DetStrategy,
    /// `min B(ℓ)`, for normalized certificates.
    pub min_value: Option<Rat>,
    pub min_witness: Option<DetStrategy>,
    /// Lower bound certified on `p`, computed by the value rule.
    pub value: Option<Rat>,
    /// Set for valid ray certificates: the bound is infinite.
    pub unbounded: bool,
    pub reasons: Vec<String>,
}

/// Recomputes the strategy maximum and the value on `p` and decides validity.
pub fn verify_certificate(cert: &Certificate, p: &Dist, cap: u128) -> Result<VerificationReport> {
    let f = &cert.functional;
    if f.sizes() != p.sizes() {
        return Err(Error::input("certificate shape does not match the distribution"));
    }
    let class = cert.kind.class();
    let (max_value, max_witness) = max_bell_value(f, class, cap)?;
    let mut reasons = Vec::new();
    let ray = cert.value_rule == ValueRule::Ray;
    if ray && max_value.is_positive() {
        reasons.push(format!("ray certificate has B(ℓ) = {max_value} > 0 for a {} strategy", class.name()));
    } else if max_value > Rat::one() {
        reasons.push(format!("B(ℓ) = {max_value} > 1 for a {} strategy", class.name()));
    }
    let (min_value, min_witness) = if cert.kind == CertificateKind::Normalized {
        let (v, w) = min_bell_value(f, class, cap)?;
        if v < -Rat::one() {
            reasons.push(format!("B(ℓ) = {v} < -1 for a NoAbort strategy"));
        }
        (Some(v), Some(w))
    } else {
        (None, None)
    };
    let value = cert.value_rule.value(f, p)?;
    match &value {
        None => reasons.push(format!("value rule {} does not apply to this distribution", cert.value_rule.name())),
        Some(v) if *v < cert.claimed_value => {
            reasons.push(format!("value {v} is below the claimed {}", cert.claimed_value))
        }
        _ => {}
    }
    let valid = reasons.is_empty();
    Ok(VerificationReport {
        valid,
        max_value,
        max_witness,
        min_value,
        min_witness,
        value,
        unbounded: valid && ray,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{p_xor, pr_box};
    use crate::DEFAULT_CAP;

    #[test]
    fn bell_values_on_fixtures() {
        let chsh = BellFunctional::chsh_half();
        assert!(bell_value(&BellFunctional::zeros(Sizes::new(2, 2, 2, 2)), &pr_box()).unwrap().is_zero());
        assert_eq!(bell_value(&chsh, &pr_box()).unwrap(), int(2));
        // per input (1/2)(-1)^(x⊕y⊕xy): 1/2 - 1/2 - 1/2 - 1/2
        assert_eq!(bell_value(&chsh, &p_xor()).unwrap(), int(-1));
    }

    #[test]
    fn chsh_certificate_is_valid() {
        let cert = Certificate::new(BellFunctional::chsh_half(), CertificateKind::InefficiencyResistant, int(2)).unwrap();
        let r = verify_certificate(&cert, &pr_box(), DEFAULT_CAP).unwrap();
        assert!(r.valid, "{:?}", r.reasons);
        assert_eq!(r.max_value, int(1));
        assert_eq!(r.value, Some(int(2)));
    }

    #[test]
    fn violating_and_empty_certificates_are_rejected() {
        let s = Sizes::new(2, 2, 2, 2);
        let mut f = BellFunctional::zeros(s);
        f.set(0, 1, 1, 0, rat(3, 2));
        let cert = Certificate::new(f, CertificateKind::InefficiencyResistant, rat(1, 10)).unwrap();
        let r = verify_certificate(&cert, &pr_box(), DEFAULT_CAP).unwrap();
        assert!(!r.valid);
        assert_eq!(r.max_value, rat(3, 2));
        assert!(r.max_witness.evaluate(0, 1, 1, 0));

        let zero = Certificate::new(BellFunctional::zeros(s), CertificateKind::InefficiencyResistant, int(1)).unwrap();
        let r = verify_certificate(&zero, &pr_box(), DEFAULT_CAP).unwrap();
        assert!(!r.valid);
        assert_eq!(r.value, Some(Rat::zero()));
        assert!(Certificate::new(BellFunctional::zeros(s), CertificateKind::Normalized, int(0)).is_err());
    }

    #[test]
    fn scaling_preserves_validity() {
        let chsh = BellFunctional::chsh_half();
        for c in [rat(1, 3), rat(1, 2), int(1)] {
            let cert = Certificate::new(chsh.scaled(&c), CertificateKind::InefficiencyResistant, int(2) * &c).unwrap();
            assert!(verify_certificate(&cert, &pr_box(), DEFAULT_CAP).unwrap().valid);
        }
    }

    #[test]
    fn normalized_is_not_inefficiency_resistant() {
        // every no-abort strategy collects 2 - 3/2; Bob aborting on y = 1 keeps 2
        let s = Sizes::new(2, 2, 2, 2);
        let f = BellFunctional::from_fn(s, |x, y, _, _| match (x, y) {
            (0, 0) => int(2),
            (0, 1) => rat(-3, 2),
            _ => Rat::zero(),
        });
        let norm = Certificate::new(f.clone(), CertificateKind::Normalized, rat(1, 2)).unwrap();
        let ir = Certificate::new(f, CertificateKind::InefficiencyResistant, rat(1, 2)).unwrap();
        let rn = verify_certificate(&norm, &p_xor(), DEFAULT_CAP).unwrap();
        let ri = verify_certificate(&ir, &p_xor(), DEFAULT_CAP).unwrap();
        assert!(rn.valid, "{:?}", rn.reasons);
        assert!(!ri.valid);
        assert_eq!(ri.max_value, int(2));
        assert!(ri.max_witness.aborts());
    }

    #[test]
    fn smoothed_value_moves_mass_toward_low_coefficients() {
        let chsh = BellFunctional::chsh_half();
        let pr = pr_box();
        assert_eq!(ValueRule::SmoothedEps(Rat::zero()).value(&chsh, &pr).unwrap(), Some(int(2)));
        // per input: move 1/4 from a +1/2 outcome to a -1/2 outcome, losing 1/4
        assert_eq!(ValueRule::SmoothedEps(rat(1, 2)).value(&chsh, &pr).unwrap(), Some(int(1)));
        // eps = 2 moves everything: every input contributes -1/2
        assert_eq!(ValueRule::SmoothedEps(int(2)).value(&chsh, &pr).unwrap(), Some(int(-2)));
    }
}
