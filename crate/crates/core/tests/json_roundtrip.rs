use bell_eff::distributions::random_dist;
use bell_eff::json::{
    certificate_from_json, certificate_to_json, dist_from_json, dist_to_json, parse_str, to_canonical_string,
};
use bell_eff::{BellFunctional, Certificate, CertificateKind, Rat, Sizes};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn dist_text_round_trip(seed in any::<u64>(), x in 1usize..4, y in 1usize..4, a in 1usize..4, b in 1usize..4, den in 1u32..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_dist(Sizes::new(x, y, a, b), den, &mut rng);
        let text = to_canonical_string(&dist_to_json(&p));
        let back = dist_from_json(&parse_str(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(to_canonical_string(&dist_to_json(&back)), text);
    }

    #[test]
    fn certificate_text_round_trip(nums in prop::collection::vec(-50i64..50, 16), den in 1i64..9, claim in 1i64..20) {
        let coeffs = nums.iter().map(|&n| Rat::new(n.into(), den.into())).collect();
        let f = BellFunctional::new(Sizes::new(2, 2, 2, 2), coeffs).unwrap();
        let c = Certificate::new(f, CertificateKind::InefficiencyResistant, Rat::from_integer(claim.into())).unwrap();
        let text = to_canonical_string(&certificate_to_json(&c));
        let back = certificate_from_json(&parse_str(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(to_canonical_string(&certificate_to_json(&back)), text);
    }
}
