mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmono::formula::{evaluate, expand, parse_formula, Var};
use qmono::gf2m::{reference_mul, FieldElem, FieldParams, Gf2m};
use qmono::group_algebra::{GroupAlgebra, MulMode};
use qmono::hashing::{build_family, verify_family, HashFamily, HashProvider};
use qmono::pit::{is_sreadonce, pit_sreadonce, reduce_steps};
use qmono::problems::{parse_dominating, parse_matching, parse_packing, random_dominating, random_matching, random_packing};
use qmono::ring::Counting;
use qmono::transform::{duplicate_terminals, Tau};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn var_value(v: Var, seed: u64, d: u32) -> FieldElem {
    let raw = match v {
        Var::X(i) | Var::Y(i) | Var::Z(i) | Var::Fresh(i) => i as u64,
        Var::W => 0,
    };
    (raw.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(seed) >> 17) as FieldElem & ((1 << d) - 1) as FieldElem
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn field_mul_matches_reference(d in 1u32..=16, a in any::<u16>(), b in any::<u16>()) {
        let gf = Gf2m::with_width(d).unwrap();
        let mask = ((1u32 << d) - 1) as u16;
        let (a, b) = (a & mask, b & mask);
        prop_assert_eq!(gf.mul(a, b) as u32, reference_mul(a as u32, b as u32, &FieldParams::with_width(d).unwrap()));
        if a != 0 {
            prop_assert_eq!(gf.mul(a, gf.inv(a).unwrap()), 1);
        }
    }

    #[test]
    fn wht_product_matches_naive(k in 1u32..=6, d in 1u32..=8, seed in any::<u64>()) {
        use rand::Rng;
        let alg = GroupAlgebra::new(Arc::new(Gf2m::with_width(d).unwrap()), k).unwrap().with_mode(MulMode::Wht);
        let mut r = rng(seed);
        let mut elem = || alg.from_coeffs((0..alg.len()).map(|_| r.gen_range(0..1u32 << d) as FieldElem).collect()).unwrap();
        let (x, y, z) = (elem(), elem(), elem());
        let xy = alg.ga_mul_wht(&x, &y).unwrap();
        prop_assert_eq!(&xy, &alg.ga_mul_naive(&x, &y).unwrap());
        prop_assert_eq!(&xy, &alg.ga_mul_wht(&y, &x).unwrap());
        // distributivity
        let lhs = alg.ga_mul_wht(&x, &alg.ga_add(&y, &z).unwrap()).unwrap();
        let rhs = alg.ga_add(&xy, &alg.ga_mul_wht(&x, &z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn evaluate_agrees_with_expansion(seed in any::<u64>(), n in 1u32..=5, d in 2u32..=8) {
        let mut r = rng(seed);
        let f = common::random_formula(&mut r, n, 16, 0.15);
        let gf = Gf2m::with_width(d).unwrap();
        let direct = evaluate(&f, |v| Some(var_value(v, seed, d)), &gf).unwrap();
        let p = expand(&f, &gf).unwrap();
        prop_assert_eq!(direct, p.evaluate(&gf, |v| Some(var_value(v, seed, d))).unwrap());
    }

    #[test]
    fn text_round_trip(seed in any::<u64>(), n in 1u32..=6) {
        let mut r = rng(seed);
        let f = common::random_formula(&mut r, n, 20, 0.2);
        let back = parse_formula(&f.to_text()).unwrap();
        prop_assert!(f.same_structure(&back));
        prop_assert_eq!(back.to_text(), f.to_text());
    }

    #[test]
    fn duplication_preserves_expansion(seed in any::<u64>(), n in 1u32..=4) {
        let mut r = rng(seed);
        let f = common::random_formula(&mut r, n, 12, 0.0);
        let dup = duplicate_terminals(&f);
        prop_assert!(dup.fan_out().iter().all(|&c| c <= 1));
        prop_assert_eq!(expand(&dup, &Counting).unwrap(), expand(&f, &Counting).unwrap());
    }

    #[test]
    fn sreadonce_pit_matches_expansion(seed in any::<u64>(), leaves in 1u32..=10, d in 1u32..=6, zero_p in 0.0f64..0.6) {
        let mut r = rng(seed);
        let f = parse_formula(&common::random_sreadonce_text(&mut r, leaves, d, zero_p)).unwrap();
        prop_assert!(is_sreadonce(&f));
        let gf = Gf2m::with_width(d).unwrap();
        let zero = expand(&f, &gf).unwrap().is_empty();
        prop_assert_eq!(pit_sreadonce(&f, &gf).unwrap(), zero);
        let red = reduce_steps(&f, &gf).unwrap();
        prop_assert_eq!(red.is_zero, zero);
        prop_assert!(red.sizes.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn greedy_family_is_perfect(n in 1u32..=9, k in 1u32..=4) {
        prop_assume!(k <= n);
        let mut fam = build_family(n, k, HashProvider::Greedy).unwrap();
        prop_assert!(fam.certified());
        prop_assert!(verify_family(&mut fam).unwrap());
        let back = HashFamily::parse_dump(&fam.dump()).unwrap();
        prop_assert_eq!(back.functions(), fam.functions());
    }

    #[test]
    fn tau_sidecar_round_trip(q in 2u32..=5, n in 1u32..=6) {
        let tau = Tau::new(q, n).unwrap();
        let back = Tau::parse_sidecar(&tau.to_sidecar()).unwrap();
        prop_assert_eq!(back.domain(), (q - 1) * n);
        prop_assert_eq!(back.entries().collect::<Vec<_>>(), tau.entries().collect::<Vec<_>>());
    }

    #[test]
    fn instance_files_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_packing(&mut r, 9, 3, 2, 4);
        prop_assert_eq!(parse_packing(&p.to_text()).unwrap(), p);
        let m = random_matching(&mut r, vec![3, 2, 4], 1, 5);
        prop_assert_eq!(parse_matching(&m.to_text()).unwrap(), m);
        let g = random_dominating(&mut r, 7, 3, 0.3);
        prop_assert_eq!(parse_dominating(&g.to_text()).unwrap(), g);
    }
}
