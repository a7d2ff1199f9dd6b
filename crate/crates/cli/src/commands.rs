use std::fs;

use anyhow::{bail, Context, Result};
use bell_eff::bounds;
use bell_eff::certificates::verify_certificate;
use bell_eff::distributions::{
    bit_labels, from_boolean_function, from_quantum, numbered_labels, pr_box, tsirelson_setup,
};
use bell_eff::hiddenmatching::{self as hm, hm_bell, hm_constraint_scan, hm_distribution, hm_objective_check};
use bell_eff::json::{self, rat_value};
use bell_eff::protosim::{self, RandomizedProtocol, ReductionMode, Simulator};
use bell_eff::rational::parse_rat;
use bell_eff::{BoundOptions, BoundResult, Certificate, CertificateKind, Dist, Rat};
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::{BoundName, BoundSpec, Cli, Command, DistCmd, DistKind, HmArgs, HmCmd, Preset, QuantumPreset, SimArgs, SimCmd};

pub struct Outcome {
    pub value: Value,
    /// False means verdict failure (exit 2).
    pub ok: bool,
}

fn ok(value: Value) -> Result<Outcome> {
    Ok(Outcome { value, ok: true })
}

fn read_json(path: &str) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    json::parse_str(&text).with_context(|| format!("parsing {path}"))
}

fn read_dist(path: &str) -> Result<Dist> {
    json::dist_from_json(&read_json(path)?).with_context(|| format!("in {path}"))
}

fn write_artifact(path: &Option<String>, v: &Value) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, json::to_canonical_string(v)).with_context(|| format!("writing {p}"))?;
    }
    Ok(())
}

fn rat_arg(s: &str, what: &str) -> Result<Rat> {
    parse_rat(s).with_context(|| format!("--{what}"))
}

fn precision(cli: &Cli) -> Result<Rat> {
    let r = rat_arg(&cli.precision, "precision")?;
    let floor = parse_rat("1e-15")?;
    if r < floor || r >= Rat::one() {
        bail!("--precision must lie in [1e-15, 1)");
    }
    Ok(r)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if cli.cap == 0 {
        bail!("--cap must be positive");
    }
    match &cli.command {
        Command::Dist(DistCmd::Build { which, table, n, setup, limit, output }) => {
            let p = match which {
                DistKind::Pr => pr_box(),
                DistKind::Pf => pf_from_table(table)?,
                DistKind::Hm => hm_distribution(*n, cli.cap)?,
                DistKind::Quantum => match setup {
                    QuantumPreset::Tsirelson => from_quantum(&tsirelson_setup(*limit), "tsirelson")?,
                    QuantumPreset::Hm => {
                        from_quantum(&hm::hm_quantum_setup(*n, cli.cap, *limit)?, &format!("hm-quantum n={n}"))?
                    }
                },
            };
            let v = json::dist_to_json(&p);
            write_artifact(output, &v)?;
            ok(v)
        }
        Command::Dist(DistCmd::Check { file }) => dist_check(file),
        Command::Bound(args) => {
            let (result, p) = solve_bound(args.name, &args.spec, cli)?;
            let mut v = match &p {
                Some(p) => json::bound_result_to_json(&result, p),
                None => function_bound_json(&result),
            };
            if args.dump_lp {
                v["lp"] = json!(result.program.dump());
            }
            ok(v)
        }
        Command::Cert(crate::CertCmd::Extract { bound, spec, output }) => {
            let (result, _) = solve_bound(*bound, spec, cli)?;
            let kind = result.kind.certificate_kind().context("this bound has no Bell certificate")?;
            let cert = bounds::extract_certificate(&result, kind)?;
            let v = json::certificate_to_json(&cert);
            write_artifact(output, &v)?;
            ok(v)
        }
        Command::Cert(crate::CertCmd::Verify { c, p }) => {
            let cert = json::certificate_from_json(&read_json(c)?).with_context(|| format!("in {c}"))?;
            let dist = read_dist(p)?;
            cert_verify(&cert, &dist, cli.cap)
        }
        Command::Hm(cmd) => hm_command(cmd, cli),
        Command::Sim(cmd) => sim_command(cmd, cli),
    }
}

fn pf_from_table(table: &str) -> Result<Dist> {
    let rows: Vec<Vec<bool>> = table
        .split(';')
        .map(|r| {
            r.split_whitespace()
                .map(|t| match t {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => bail!("truth table entries must be 0 or 1, got {other:?}"),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let ny = rows.first().map_or(0, Vec::len);
    if ny == 0 || rows.iter().any(|r| r.len() != ny) {
        bail!("truth table must be a nonempty rectangle");
    }
    Ok(from_boolean_function(numbered_labels(rows.len()), numbered_labels(ny), |x, y| rows[x][y], "p_f"))
}

fn dist_check(file: &str) -> Result<Outcome> {
    let v = read_json(file)?;
    let (s, probs) = json::dist_table_from_json(&v).with_context(|| format!("in {file}"))?;
    let nonnegative = probs.iter().all(|q| *q >= Rat::zero());
    let mut unnormalized = Vec::new();
    for x in 0..s.x {
        for y in 0..s.y {
            let i = s.index(x, y, 0, 0);
            let mass: Rat = probs[i..i + s.a * s.b].iter().sum();
            if !mass.is_one() {
                unnormalized.push(json!({"x": x, "y": y, "mass": rat_value(&mass)}));
            }
        }
    }
    let normalized = nonnegative && unnormalized.is_empty();
    let (nonsignaling, approximate) = if normalized {
        let p = json::dist_from_json(&v)?;
        (json!(p.is_nonsignaling()), json!(p.metadata.approximate))
    } else {
        (Value::Null, Value::Null)
    };
    ok(json!({
        "sizes": {"x": s.x, "y": s.y, "a": s.a, "b": s.b},
        "nonnegative": nonnegative,
        "normalized": normalized,
        "unnormalized_inputs": unnormalized,
        "nonsignaling": nonsignaling,
        "approximate": approximate,
    }))
}

fn options(spec: &BoundSpec, cli: &Cli) -> BoundOptions {
    BoundOptions { cap: cli.cap, colgen: spec.colgen }
}

fn require(arg: &Option<String>, name: &str, bound: &str) -> Result<Rat> {
    match arg {
        Some(s) => rat_arg(s, name),
        None => bail!("{bound} needs --{name}"),
    }
}

/// Returns the distribution alongside the result, except for `prt-fn`.
fn solve_bound(name: BoundName, spec: &BoundSpec, cli: &Cli) -> Result<(BoundResult, Option<Dist>)> {
    let opts = options(spec, cli);
    if name == BoundName::PrtFn {
        let v = read_json(&spec.p)?;
        let (f, z) = function_from_json(&v).with_context(|| format!("in {}", spec.p))?;
        let eps = spec.eps.as_deref().map(|e| rat_arg(e, "eps")).transpose()?.unwrap_or_else(Rat::zero);
        return Ok((bounds::prt_function(&f, z, &eps, &opts)?, None));
    }
    let p = read_dist(&spec.p)?;
    let r = match name {
        BoundName::Eff => bounds::eff(&p, &opts)?,
        BoundName::EffEps => bounds::eff_eps(&p, &require(&spec.eps, "eps", "eff-eps")?, &opts)?,
        BoundName::EffEta => bounds::eff_eta(&p, &require(&spec.eta, "eta", "eff-eta")?, &opts)?,
        BoundName::EffNc => bounds::eff_nc(&p, &opts)?,
        BoundName::EffOneway => bounds::eff_oneway(&p, &opts)?,
        BoundName::Nu => bounds::nu(&p, &opts)?,
        BoundName::Prt => {
            let eta = spec.eta.as_deref().map(|e| rat_arg(e, "eta")).transpose()?.unwrap_or_else(Rat::one);
            bounds::prt_direct(&p, &eta, &opts)?
        }
        BoundName::PrtFn => unreachable!(),
    };
    Ok((r, Some(p)))
}

fn function_from_json(v: &Value) -> Result<(Vec<Vec<Option<usize>>>, usize)> {
    let rows = v.get("f").and_then(Value::as_array).context("missing array field \"f\"")?;
    let f = rows
        .iter()
        .map(|r| {
            r.as_array()
                .context("rows of f must be arrays")?
                .iter()
                .map(|e| match e {
                    Value::Null => Ok(None),
                    _ => e.as_u64().map(|z| Some(z as usize)).context("entries of f must be integers or null"),
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<_>>>>()?;
    let z = match v.get("z") {
        Some(z) => z.as_u64().context("\"z\" must be an integer")? as usize,
        None => f.iter().flatten().flatten().max().map_or(1, |m| m + 1),
    };
    Ok((f, z))
}

fn function_bound_json(r: &BoundResult) -> Value {
    let weights: Vec<Value> = r
        .weights
        .iter()
        .filter(|(_, w)| !w.is_zero())
        .map(|(c, w)| match c {
            bounds::Column::Rectangle { xs, ys, z } => {
                json!({"rectangle": {"xs": xs, "ys": ys, "z": z}, "weight": rat_value(w)})
            }
            bounds::Column::Strategy(_) => json!({"weight": rat_value(w)}),
        })
        .collect();
    json!({
        "bound": r.bound.to_string(),
        "name": r.kind.name(),
        "parameter": r.parameter.as_ref().map_or(Value::Null, rat_value),
        "weights": weights,
        "solver": {
            "status": format!("{:?}", r.solution.status),
            "iterations": r.solution.iterations,
            "objective": rat_value(&r.solution.objective),
            "dual_objective": rat_value(&r.solution.dual_objective),
        },
    })
}

fn cert_verify(cert: &Certificate, p: &Dist, cap: u128) -> Result<Outcome> {
    let rep = verify_certificate(cert, p, cap)?;
    let strat = |l: &bell_eff::DetStrategy| json::strategy_to_json(l, &p.a_labels, &p.b_labels);
    let v = json!({
        "valid": rep.valid,
        "kind": cert.kind.name(),
        "claimed_value": rat_value(&cert.claimed_value),
        "value": rep.value.as_ref().map_or(Value::Null, rat_value),
        "unbounded": rep.unbounded,
        "max_value": rat_value(&rep.max_value),
        "max_witness": strat(&rep.max_witness),
        "min_value": rep.min_value.as_ref().map_or(Value::Null, rat_value),
        "min_witness": rep.min_witness.as_ref().map_or(Value::Null, strat),
        "reasons": rep.reasons,
    });
    Ok(Outcome { value: v, ok: rep.valid })
}

fn hm_command(cmd: &HmCmd, cli: &Cli) -> Result<Outcome> {
    let tol = precision(cli)?;
    let args: &HmArgs = match cmd {
        HmCmd::Dist(a) | HmCmd::Bell(a) | HmCmd::Objective(a) | HmCmd::Scan(a) | HmCmd::Fourier(a) => a,
    };
    let c = rat_arg(&args.c, "kkl-c")?;
    match cmd {
        HmCmd::Dist(_) => {
            let v = json::dist_to_json(&hm_distribution(args.n, cli.cap)?);
            write_artifact(&args.output, &v)?;
            ok(v)
        }
        HmCmd::Bell(_) => {
            let (f, params) = hm_bell(args.n, &c, &tol, cli.cap)?;
            let cert = Certificate::new(f, CertificateKind::InefficiencyResistantOneway, params.closed_form())?;
            let v = json::certificate_to_json(&cert);
            write_artifact(&args.output, &v)?;
            ok(v)
        }
        HmCmd::Objective(_) => {
            let chk = hm_objective_check(args.n, &c, &tol, cli.cap)?;
            ok_if(
                chk.equal,
                json!({
                    "n": args.n,
                    "c": rat_value(&c),
                    "computed": rat_value(&chk.computed),
                    "closed_form": rat_value(&chk.closed_form),
                    "equal": chk.equal,
                    "scale": rat_value(&chk.params.scale.value),
                    "scale_abs_error_bound": rat_value(&chk.params.scale.abs_error_bound),
                    "rel_tol": rat_value(&tol),
                }),
            )
        }
        HmCmd::Scan(_) => {
            let row = hm_constraint_scan(args.n, &c, &tol, cli.cap)?;
            let labels: Vec<String> = (0..2 * args.n).map(|i| format!("{},{}", i % 2, i / 2)).collect();
            ok(json!({
                "n": args.n,
                "c": rat_value(&row.c),
                "max_value": rat_value(&row.max_value),
                "at_most_one": row.at_most_one,
                "witness": json::strategy_to_json(&row.witness, &bit_labels(args.n), &labels),
            }))
        }
        HmCmd::Fourier(_) => {
            let k = hm::kkl_scan(args.n)?;
            ok(json!({
                "n": k.n,
                "subsets": k.subsets,
                "c_squared_form": k.c_squared_form,
                "witness_squared": k.witness_squared,
                "c_root_form": k.c_root_form,
                "witness_root": k.witness_root,
            }))
        }
    }
}

fn ok_if(pass: bool, value: Value) -> Result<Outcome> {
    Ok(Outcome { value, ok: pass })
}

fn load_protocol(args: &SimArgs) -> Result<RandomizedProtocol> {
    match (&args.protocol, args.preset) {
        (Some(path), _) => Ok(json::protocol_from_json(&read_json(path)?).with_context(|| format!("in {path}"))?),
        (None, Some(Preset::Pr1)) => Ok(protosim::pr_protocol(0)),
        (None, Some(Preset::Pr2)) => Ok(protosim::pr_protocol(1)),
        (None, Some(Preset::Local)) => Ok(protosim::local_xor_protocol()),
        (None, None) => bail!("give --protocol FILE or --preset"),
    }
}

fn mixture_json(mix: &[(bell_eff::DetStrategy, Rat)], p: &Dist) -> Value {
    Value::Array(
        mix.iter()
            .map(|(l, w)| json!({"strategy": json::strategy_to_json(l, &p.a_labels, &p.b_labels), "weight": rat_value(w)}))
            .collect(),
    )
}

fn sim_command(cmd: &SimCmd, cli: &Cli) -> Result<Outcome> {
    let args = match cmd {
        SimCmd::Reduce(a) | SimCmd::Partition(a) | SimCmd::Amplify(a) | SimCmd::Mc(a) => a,
    };
    let proto = load_protocol(args)?;
    let mode = if args.one_way { ReductionMode::OneWay } else { ReductionMode::TwoWay };
    if let SimCmd::Partition(_) = cmd {
        let sol = protosim::protocol_to_partition(&proto)?;
        let p = proto.output_distribution()?;
        return ok_if(
            sol.violations.is_empty(),
            json!({
                "c": proto.c,
                "total": rat_value(&sol.total),
                "weights": mixture_json(&sol.weights, &p),
                "violations": sol.violations,
            }),
        );
    }
    let red = protosim::transcript_reduction(&proto, mode)?;
    let eta = args.eta.as_deref().map(|e| rat_arg(e, "eta")).transpose()?;
    match cmd {
        SimCmd::Reduce(_) => ok_if(
            red.zeta_exact && red.conditional_matches,
            json!({
                "c": proto.c,
                "class": red.class.name(),
                "zeta": rat_value(&red.zeta),
                "zeta_exact": red.zeta_exact,
                "conditional_matches": red.conditional_matches,
                "mixture": mixture_json(&red.mixture, &red.target),
                "conditional": json::dist_to_json(&red.conditional),
            }),
        ),
        SimCmd::Amplify(_) => {
            let eta = eta.context("amplify needs --eta")?;
            let a = protosim::amplify_sm(&red.mixture, proto.sizes, &red.zeta, &eta)?;
            ok_if(
                a.meets_target,
                json!({
                    "zeta": rat_value(&a.zeta),
                    "eta": rat_value(&a.eta),
                    "runs": a.runs,
                    "abort_probability": rat_value(&a.abort_probability),
                    "meets_target": a.meets_target,
                    "sm_bits": a.sm_bits,
                    "oneway_index_bits": a.oneway_index_bits,
                }),
            )
        }
        SimCmd::Mc(_) => {
            let (sim, expected, runs) = match &eta {
                Some(eta) => {
                    let a = protosim::amplify_sm(&red.mixture, proto.sizes, &red.zeta, eta)?;
                    (Simulator::from_amplifier(&a)?, a.abort_probability.clone(), a.runs)
                }
                None => (Simulator::from_reduction(&red)?, Rat::one() - &red.zeta, 1),
            };
            let rep = protosim::monte_carlo(&sim, &red.target, &expected, args.samples, cli.seed)?;
            let per_input: Vec<Value> = rep
                .per_input
                .iter()
                .map(|(kept, dev, tol)| json!({"kept": kept, "l1_deviation": dev, "tolerance": tol}))
                .collect();
            ok_if(
                rep.passed(),
                json!({
                    "seed": rep.seed,
                    "runs": runs,
                    "samples_per_input": rep.samples_per_input,
                    "abort_rate": rep.abort_rate,
                    "expected_abort": rat_value(&expected),
                    "abort_tolerance": rep.abort_tolerance,
                    "abort_ok": rep.abort_ok,
                    "max_deviation": rep.max_deviation,
                    "deviation_ok": rep.deviation_ok,
                    "per_input": per_input,
                    "passed": rep.passed(),
                }),
            )
        }
        SimCmd::Partition(_) => unreachable!(),
    }
}
