//! Canonical JSON for the interchange types. Rationals are `"num/den"`
//! strings in lowest terms, object keys are sorted, and nested arrays follow
//! x-major order.

use num_traits::Signed;
use serde_json::{json, Map, Value};

use crate::bounds::{BoundResult, Column};
use crate::certificates::{BellFunctional, Certificate, CertificateKind, ValueRule};
use crate::distributions::{Dist, Metadata, Sizes};
use crate::protosim::{DetProtocol, RandomizedProtocol};
use crate::rational::{format_rat, parse_rat, Rat};
use crate::strategies::{DetStrategy, StrategyClass};
use crate::{Error, Result};

pub const ABORT_TOKEN: &str = "bot";

/// Pretty-printed with a trailing newline. `serde_json` maps are ordered, so
/// key order is sorted and output is byte-stable.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("Value always serializes");
    s.push('\n');
    s
}

pub fn parse_str(s: &str) -> Result<Value> {
    Ok(serde_json::from_str(s)?)
}

pub fn rat_value(r: &Rat) -> Value {
    Value::String(format_rat(r))
}

/// Accepts `"p/q"` strings, decimal strings, and JSON integers.
pub fn rat_from_value(v: &Value) -> Result<Rat> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(n) if n.is_i64() || n.is_u64() => parse_rat(&n.to_string()),
        other => Err(Error::input(format!("expected a rational string, got {other}"))),
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::input(format!("missing field {key:?}")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::input(format!("{what} must be an array")))
}

fn usize_of(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::input(format!("{what} must be a nonnegative integer")))
}

fn labels(v: &Value, what: &str) -> Result<Vec<String>> {
    array(v, what)?
        .iter()
        .map(|l| match l {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(Error::input(format!("{what} labels must be strings"))),
        })
        .collect()
}

/// Nests a flat row-major table into arrays of the given dimensions.
fn nest<T>(flat: &[T], dims: &[usize], leaf: &impl Fn(&T) -> Value) -> Value {
    match dims.split_first() {
        None => leaf(&flat[0]),
        Some((_, [])) => Value::Array(flat.iter().map(leaf).collect()),
        Some((&d, rest)) => {
            let stride: usize = rest.iter().product();
            Value::Array((0..d).map(|i| nest(&flat[i * stride..(i + 1) * stride], rest, leaf)).collect())
        }
    }
}

/// Shape of a rectangular nested array of the given depth.
fn shape(v: &Value, depth: usize, what: &str) -> Result<Vec<usize>> {
    let mut dims = Vec::with_capacity(depth);
    let mut cur = v;
    for _ in 0..depth {
        let a = array(cur, what)?;
        if a.is_empty() {
            return Err(Error::input(format!("{what} has an empty dimension")));
        }
        dims.push(a.len());
        cur = &a[0];
    }
    Ok(dims)
}

fn flatten<'a>(v: &'a Value, dims: &[usize], out: &mut Vec<&'a Value>, what: &str) -> Result<()> {
    match dims.split_first() {
        None => {
            out.push(v);
            Ok(())
        }
        Some((&d, rest)) => {
            let a = array(v, what)?;
            if a.len() != d {
                return Err(Error::input(format!("{what} is not rectangular")));
            }
            a.iter().try_for_each(|e| flatten(e, rest, out, what))
        }
    }
}

fn rat_table(v: &Value, dims: &[usize], what: &str) -> Result<Vec<Rat>> {
    let mut cells = Vec::new();
    flatten(v, dims, &mut cells, what)?;
    cells.into_iter().map(rat_from_value).collect()
}

pub fn dist_to_json(p: &Dist) -> Value {
    let s = p.sizes();
    json!({
        "x": p.x_labels,
        "y": p.y_labels,
        "a": p.a_labels,
        "b": p.b_labels,
        "probs": nest(p.probs(), &[s.x, s.y, s.a, s.b], &rat_value),
        "metadata": { "approximate": p.metadata.approximate, "source": p.metadata.source },
    })
}

/// Shape and flat table of a distribution file without the normalization
/// checks, for reporting on malformed tables.
pub fn dist_table_from_json(v: &Value) -> Result<(Sizes, Vec<Rat>)> {
    let mut d = [0usize; 4];
    for (i, k) in ["x", "y", "a", "b"].into_iter().enumerate() {
        d[i] = labels(field(v, k)?, k)?.len();
    }
    let probs = rat_table(field(v, "probs")?, &d, "probs")?;
    Ok((Sizes::new(d[0], d[1], d[2], d[3]), probs))
}

pub fn dist_from_json(v: &Value) -> Result<Dist> {
    let xl = labels(field(v, "x")?, "x")?;
    let yl = labels(field(v, "y")?, "y")?;
    let al = labels(field(v, "a")?, "a")?;
    let bl = labels(field(v, "b")?, "b")?;
    let dims = [xl.len(), yl.len(), al.len(), bl.len()];
    let probs = rat_table(field(v, "probs")?, &dims, "probs")?;
    let metadata = match v.get("metadata") {
        None => Metadata::default(),
        Some(m) => Metadata {
            approximate: m.get("approximate").and_then(Value::as_bool).unwrap_or(false),
            source: m.get("source").and_then(Value::as_str).unwrap_or_default().to_string(),
        },
    };
    Dist::new(xl, yl, al, bl, probs, metadata)
}

pub fn functional_to_json(f: &BellFunctional) -> Value {
    let s = f.sizes();
    nest(f.coeffs(), &[s.x, s.y, s.a, s.b], &rat_value)
}

pub fn functional_from_json(v: &Value) -> Result<BellFunctional> {
    let d = shape(v, 4, "coeffs")?;
    let coeffs = rat_table(v, &d, "coeffs")?;
    BellFunctional::new(Sizes::new(d[0], d[1], d[2], d[3]), coeffs)
}

pub fn certificate_to_json(c: &Certificate) -> Value {
    let mut m = Map::new();
    m.insert("kind".into(), json!(c.kind.name()));
    m.insert("claimed_value".into(), rat_value(&c.claimed_value));
    m.insert("coeffs".into(), functional_to_json(&c.functional));
    if c.value_rule != ValueRule::Plain {
        let mut r = Map::new();
        r.insert("rule".into(), json!(c.value_rule.name()));
        if let Some(x) = c.value_rule.parameter() {
            r.insert("parameter".into(), rat_value(x));
        }
        m.insert("value_rule".into(), Value::Object(r));
    }
    Value::Object(m)
}

pub fn certificate_from_json(v: &Value) -> Result<Certificate> {
    let kind_name = field(v, "kind")?.as_str().ok_or_else(|| Error::input("kind must be a string"))?;
    let kind = CertificateKind::from_name(kind_name)
        .ok_or_else(|| Error::input(format!("unknown certificate kind {kind_name:?}")))?;
    let claimed = rat_from_value(field(v, "claimed_value")?)?;
    let functional = functional_from_json(field(v, "coeffs")?)?;
    let rule = match v.get("value_rule") {
        None | Some(Value::Null) => ValueRule::Plain,
        Some(r) => {
            let name = field(r, "rule")?.as_str().ok_or_else(|| Error::input("rule must be a string"))?;
            let param = || rat_from_value(field(r, "parameter")?);
            match name {
                "plain" => ValueRule::Plain,
                "smoothed_eps" => ValueRule::SmoothedEps(param()?),
                "efficiency_eta" => ValueRule::EfficiencyEta(param()?),
                "non_constant" => ValueRule::NonConstant,
                "ray" => ValueRule::Ray,
                other => return Err(Error::input(format!("unknown value rule {other:?}"))),
            }
        }
    };
    Certificate::with_rule(functional, kind, claimed, rule)
}

fn side_to_json(side: &[Option<usize>], labels: &[String]) -> Value {
    Value::Array(
        side.iter()
            .map(|o| match o {
                Some(i) => json!(labels.get(*i).cloned().unwrap_or_else(|| i.to_string())),
                None => json!(ABORT_TOKEN),
            })
            .collect(),
    )
}

fn side_from_json(v: &Value, labels: &[String], what: &str) -> Result<Vec<Option<usize>>> {
    array(v, what)?
        .iter()
        .map(|e| {
            let s = e.as_str().ok_or_else(|| Error::input(format!("{what} entries must be strings")))?;
            if s == ABORT_TOKEN {
                return Ok(None);
            }
            labels
                .iter()
                .position(|l| l == s)
                .map(Some)
                .ok_or_else(|| Error::input(format!("unknown {what} output label {s:?}")))
        })
        .collect()
}

pub fn strategy_to_json(l: &DetStrategy, a_labels: &[String], b_labels: &[String]) -> Value {
    json!({
        "alice": side_to_json(&l.alice, a_labels),
        "bob": side_to_json(&l.bob, b_labels),
        "class": l.class.name(),
    })
}

pub fn strategy_from_json(v: &Value, a_labels: &[String], b_labels: &[String]) -> Result<DetStrategy> {
    let class_name = field(v, "class")?.as_str().ok_or_else(|| Error::input("class must be a string"))?;
    let class = StrategyClass::from_name(class_name)
        .ok_or_else(|| Error::input(format!("unknown strategy class {class_name:?}")))?;
    let alice = side_from_json(field(v, "alice")?, a_labels, "alice")?;
    let bob = side_from_json(field(v, "bob")?, b_labels, "bob")?;
    DetStrategy::new(alice, bob, class)
}

fn opt_rat(r: Option<&Rat>) -> Value {
    r.map_or(Value::Null, rat_value)
}

/// Bound value, ζ (or the per-input table), nonzero primal weights keyed by
/// strategy, the certificate, and solver statistics.
pub fn bound_result_to_json(r: &BoundResult, p: &Dist) -> Value {
    let s = p.sizes();
    let weights: Vec<Value> = r
        .weights
        .iter()
        .filter(|(_, w)| w.is_positive())
        .map(|(c, w)| match c {
            Column::Strategy(l) => json!({
                "strategy": strategy_to_json(l, &p.a_labels, &p.b_labels),
                "weight": rat_value(w),
            }),
            Column::Rectangle { xs, ys, z } => json!({
                "rectangle": { "xs": xs, "ys": ys, "z": z },
                "weight": rat_value(w),
            }),
        })
        .collect();
    let mut m = Map::new();
    m.insert("bound".into(), json!(r.bound.to_string()));
    m.insert("name".into(), json!(r.kind.name()));
    if let Some(x) = &r.parameter {
        m.insert("parameter".into(), rat_value(x));
    }
    m.insert("zeta".into(), opt_rat(r.zeta.as_ref()));
    if let Some(t) = &r.zeta_xy {
        m.insert("zeta_xy".into(), nest(t, &[s.x, s.y], &rat_value));
    }
    if let Some(t) = &r.eta_xy {
        if t.len() == s.x * s.y {
            m.insert("eta_xy".into(), nest(t, &[s.x, s.y], &rat_value));
        }
    }
    m.insert("weights".into(), Value::Array(weights));
    m.insert("certificate".into(), r.certificate.as_ref().map_or(Value::Null, certificate_to_json));
    m.insert(
        "solver".into(),
        json!({
            "status": format!("{:?}", r.solution.status),
            "iterations": r.solution.iterations,
            "objective": rat_value(&r.solution.objective),
            "dual_objective": rat_value(&r.solution.dual_objective),
            "colgen_rounds": r.colgen_rounds,
        }),
    );
    Value::Object(m)
}

fn protocol_tables(p: &DetProtocol) -> Value {
    json!({ "transcript": p.transcript, "alice_out": p.alice_out, "bob_out": p.bob_out })
}

pub fn protocol_to_json(p: &RandomizedProtocol) -> Value {
    let mixture: Vec<Value> =
        p.mixture.iter().map(|(w, d)| json!({ "weight": rat_value(w), "protocol": protocol_tables(d) })).collect();
    json!({ "c": p.c, "a": p.sizes.a, "b": p.sizes.b, "mixture": mixture })
}

fn usize_table(v: &Value, what: &str) -> Result<Vec<Vec<usize>>> {
    array(v, what)?
        .iter()
        .map(|row| array(row, what)?.iter().map(|e| usize_of(e, what)).collect())
        .collect()
}

fn det_protocol_from_json(v: &Value) -> Result<DetProtocol> {
    let transcript = usize_table(field(v, "transcript")?, "transcript")?
        .into_iter()
        .map(|r| r.into_iter().map(|t| t as u64).collect())
        .collect();
    Ok(DetProtocol {
        transcript,
        alice_out: usize_table(field(v, "alice_out")?, "alice_out")?,
        bob_out: usize_table(field(v, "bob_out")?, "bob_out")?,
    })
}

/// Accepts either a `mixture` list or a single deterministic protocol with
/// the tables at top level. Output counts `a`, `b` default to one more than
/// the largest output used.
pub fn protocol_from_json(v: &Value) -> Result<RandomizedProtocol> {
    let c = u32::try_from(usize_of(field(v, "c")?, "c")?).map_err(|_| Error::input("c too large"))?;
    let mixture = match v.get("mixture") {
        Some(m) => array(m, "mixture")?
            .iter()
            .map(|e| Ok((rat_from_value(field(e, "weight")?)?, det_protocol_from_json(field(e, "protocol")?)?)))
            .collect::<Result<Vec<_>>>()?,
        None => vec![(Rat::from_integer(1.into()), det_protocol_from_json(v)?)],
    };
    let first = &mixture.first().ok_or_else(|| Error::input("empty mixture"))?.1;
    let xs = first.transcript.len();
    let ys = first.transcript.first().map_or(0, Vec::len);
    let max_out = |f: fn(&DetProtocol) -> &Vec<Vec<usize>>| {
        mixture.iter().flat_map(|(_, d)| f(d).iter().flatten().copied()).max().map_or(1, |m| m + 1)
    };
    let a = match v.get("a") {
        Some(n) => usize_of(n, "a")?,
        None => max_out(|d| &d.alice_out),
    };
    let b = match v.get("b") {
        Some(n) => usize_of(n, "b")?,
        None => max_out(|d| &d.bob_out),
    };
    if xs == 0 || ys == 0 || a == 0 || b == 0 {
        return Err(Error::input("protocol tables must be nonempty"));
    }
    Ok(RandomizedProtocol { sizes: Sizes::new(xs, ys, a, b), c, mixture })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{p_xor, pr_box};
    use crate::protosim::pr_protocol;
    use crate::rational::rat;

    #[test]
    fn dist_round_trip_is_byte_stable() {
        for p in [pr_box(), p_xor()] {
            let text = to_canonical_string(&dist_to_json(&p));
            let back = dist_from_json(&parse_str(&text).unwrap()).unwrap();
            assert_eq!(back, p);
            assert_eq!(to_canonical_string(&dist_to_json(&back)), text);
        }
    }

    #[test]
    fn probs_are_lowest_terms_strings() {
        let v = dist_to_json(&pr_box());
        assert_eq!(v["probs"][1][1][0][1], json!("1/2"));
        assert_eq!(v["probs"][1][1][0][0], json!("0"));
        let text = to_canonical_string(&v);
        let a = text.find("\"a\"").unwrap();
        let x = text.find("\"x\"").unwrap();
        assert!(a < x);
    }

    #[test]
    fn non_lowest_terms_input_is_normalized() {
        let mut v = dist_to_json(&pr_box());
        v["probs"][0][0][0][0] = json!("2/4");
        assert_eq!(dist_from_json(&v).unwrap(), pr_box());
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let mut v = dist_to_json(&pr_box());
        v["probs"][0][0][0][0] = json!("3/4");
        assert!(dist_from_json(&v).is_err());
        let mut v = dist_to_json(&pr_box());
        v["probs"][0][0] = json!(["1/2"]);
        assert!(dist_from_json(&v).is_err());
        assert!(dist_from_json(&json!({"x": ["0"]})).is_err());
        assert!(parse_str("{not json").is_err());
    }

    #[test]
    fn certificate_round_trip() {
        let c = Certificate::with_rule(
            BellFunctional::chsh_half(),
            CertificateKind::InefficiencyResistant,
            rat(3, 2),
            ValueRule::EfficiencyEta(rat(1, 2)),
        )
        .unwrap();
        let v = certificate_to_json(&c);
        assert_eq!(certificate_from_json(&parse_str(&to_canonical_string(&v)).unwrap()).unwrap(), c);
        let plain = Certificate::new(BellFunctional::chsh_half(), CertificateKind::Normalized, rat(1, 1)).unwrap();
        let v = certificate_to_json(&plain);
        assert!(v.get("value_rule").is_none());
        assert_eq!(certificate_from_json(&v).unwrap(), plain);
    }

    #[test]
    fn strategy_round_trip_uses_bot() {
        let p = pr_box();
        let l = DetStrategy::new(vec![Some(1), None], vec![Some(0), Some(1)], StrategyClass::BothAbort).unwrap();
        let v = strategy_to_json(&l, &p.a_labels, &p.b_labels);
        assert_eq!(v["alice"][1], json!("bot"));
        assert_eq!(strategy_from_json(&v, &p.a_labels, &p.b_labels).unwrap(), l);
    }

    #[test]
    fn protocol_round_trip() {
        let p = pr_protocol(1);
        assert_eq!(protocol_from_json(&protocol_to_json(&p)).unwrap(), p);
        let single = json!({"c": 0, "transcript": [[0, 0], [0, 0]], "alice_out": [[0], [1]], "bob_out": [[1], [1]]});
        let q = protocol_from_json(&single).unwrap();
        assert_eq!(q.sizes, Sizes::new(2, 2, 2, 2));
    }
}
