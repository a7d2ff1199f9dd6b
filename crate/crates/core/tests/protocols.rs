use bell_eff::bounds::{self, efficiency_violations};
use bell_eff::distributions::{p_xor, pr_box};
use bell_eff::protosim::{
    amplify_sm, local_xor_protocol, monte_carlo, pr_protocol, protocol_to_partition, transcript_reduction,
    ReductionMode, Simulator,
};
use bell_eff::rational::{int, rat};
use bell_eff::{BoundOptions, Rat};
use num_traits::One;

#[test]
fn reduction_mixture_is_feasible_for_eff() {
    for (proto, p) in [(pr_protocol(0), pr_box()), (pr_protocol(1), pr_box()), (local_xor_protocol(), p_xor())] {
        let r = transcript_reduction(&proto, ReductionMode::TwoWay).unwrap();
        assert_eq!(r.zeta, rat(1, 1 << proto.c));
        assert!(efficiency_violations(&p, &r.mixture, &r.zeta).is_empty());
        let e = bounds::eff(&p, &BoundOptions::default()).unwrap();
        assert!(e.value().unwrap() <= &(Rat::one() / &r.zeta));
    }
}

#[test]
fn oneway_reduction_bounds_eff_oneway() {
    let r = transcript_reduction(&pr_protocol(0), ReductionMode::OneWay).unwrap();
    assert!(efficiency_violations(&pr_box(), &r.mixture, &r.zeta).is_empty());
    let e = bounds::eff_oneway(&pr_box(), &BoundOptions::default()).unwrap();
    assert!(e.value().unwrap() <= &int(2));
}

#[test]
fn partition_weights_are_prt_feasible() {
    for pad in 0..2 {
        let sol = protocol_to_partition(&pr_protocol(pad)).unwrap();
        assert!(sol.violations.is_empty());
        let prt = bounds::prt_direct(&pr_box(), &Rat::one(), &BoundOptions::default()).unwrap();
        assert!(prt.value().unwrap() <= &sol.total);
    }
}

#[test]
fn monte_carlo_reduction_and_amplifier() {
    let r = transcript_reduction(&pr_protocol(0), ReductionMode::TwoWay).unwrap();
    let sim = Simulator::from_reduction(&r).unwrap();
    let rep = monte_carlo(&sim, &pr_box(), &rat(1, 2), 100_000, 2024).unwrap();
    assert!(rep.passed(), "{rep:?}");

    let a = amplify_sm(&r.mixture, pr_box().sizes(), &r.zeta, &rat(3, 4)).unwrap();
    let sim = Simulator::from_amplifier(&a).unwrap();
    let rep = monte_carlo(&sim, &pr_box(), &a.abort_probability, 100_000, 2025).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert!((rep.abort_rate - 0.125).abs() < 0.01);
}

#[test]
fn local_protocol_never_aborts() {
    let r = transcript_reduction(&local_xor_protocol(), ReductionMode::TwoWay).unwrap();
    let sim = Simulator::from_reduction(&r).unwrap();
    let rep = monte_carlo(&sim, &p_xor(), &Rat::from_integer(0.into()), 10_000, 3).unwrap();
    assert_eq!(rep.abort_rate, 0.0);
    assert!(rep.passed());
}
