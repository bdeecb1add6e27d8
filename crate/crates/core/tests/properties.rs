//! Property-based tests: randomized instances must satisfy the proved
//! structural facts and the exact serialization contracts.

use proptest::collection::vec;
use proptest::prelude::*;

use num_traits::{One, Signed, Zero};
use seqauction::checks::{self, valid_inequality_forms};
use seqauction::equilibrium::TiePolicy;
use seqauction::scalar::Scalar;
use seqauction::{io, solve, Allocation, Buyer, Instance, Node, Outcome, Rat};

fn value() -> impl Strategy<Value = Rat> {
    (0i64..=36, 1i64..=6).prop_map(|(n, d)| Rat::from_ratio(n, d))
}

fn general_instance(max_items: usize) -> impl Strategy<Value = Instance> {
    (1..=max_items).prop_flat_map(|t| {
        (vec(value(), t), vec(value(), t)).prop_map(move |(v1, v2)| Instance::new(t, v1, v2))
    })
}

fn concave_instance(max_items: usize) -> impl Strategy<Value = Instance> {
    general_instance(max_items).prop_map(|inst| {
        let sorted = |v: &[Rat]| {
            let mut v = v.to_vec();
            v.sort_by(|a, b| b.cmp(a));
            v
        };
        Instance::new(
            inst.items(),
            sorted(inst.v1().values()),
            sorted(inst.v2().values()),
        )
    })
}

proptest! {
    // The solver-plus-checks pipeline is the expensive part; fewer cases
    // here, with the bulk fuzz volume living in the acceptance suite.
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structural_checks_pass_on_general_instances(inst in general_instance(8)) {
        let sol = solve(inst).unwrap();
        for report in checks::run_all_checks(&sol) {
            prop_assert!(report.passed, "{report}");
        }
    }

    #[test]
    fn structural_checks_pass_on_concave_instances(inst in concave_instance(8)) {
        let sol = solve(inst).unwrap();
        for report in checks::run_all_checks(&sol) {
            prop_assert!(report.passed, "{report}");
        }
    }

    #[test]
    fn extracted_paths_attain_reachable_endpoints(inst in general_instance(8)) {
        let sol = solve(inst).unwrap();
        let endpoints = sol.reachable_equilibrium_endpoints(Node::ROOT);
        let min_eff = sol.min_equilibrium_efficiency();
        for policy in TiePolicy::ALL {
            let path = sol.extract_path(Node::ROOT, policy);
            prop_assert!(endpoints.contains(&path.endpoint));
            prop_assert!(path.efficiency >= min_eff);
        }
    }

    #[test]
    fn without_ties_the_endpoint_is_unique(inst in general_instance(7)) {
        let sol = solve(inst).unwrap();
        let any_tie = sol.records().any(|(_, rec)| {
            rec.auction
                .as_ref()
                .is_some_and(|a| a.outcome == Outcome::Tie)
        });
        let endpoints = sol.reachable_equilibrium_endpoints(Node::ROOT);
        prop_assert!(!endpoints.is_empty());
        if !any_tie {
            prop_assert_eq!(endpoints.len(), 1);
        }
    }
}

proptest! {
    #[test]
    fn welfare_shifts_by_one_increment_across_a_buyer_1_step(inst in general_instance(8)) {
        for x in inst.decision_nodes() {
            let child = x.child(Buyer::One);
            for k in 0..=child.items_remaining(inst.items()) {
                prop_assert_eq!(
                    inst.social_welfare(child, k),
                    inst.social_welfare(x, k + 1) - inst.v1().value(x.x1 + 1)
                );
            }
        }
    }

    #[test]
    fn efficiency_lies_in_the_unit_interval(inst in general_instance(8)) {
        for x in inst.nodes() {
            for k in 0..=x.items_remaining(inst.items()) {
                let eff = inst.efficiency(x, Allocation::new(x.x1 + k));
                prop_assert!(eff >= Rat::zero());
                prop_assert!(eff <= Rat::one());
            }
        }
    }

    #[test]
    fn nested_and_flat_inequality_forms_agree(inst in general_instance(8)) {
        for k in 0..inst.items() {
            for ell in 0..inst.items() - k {
                let (nested, flat) = valid_inequality_forms(&inst, k, ell);
                prop_assert_eq!(nested, flat, "k={} ell={}", k, ell);
            }
        }
    }

    #[test]
    fn instance_json_round_trips_exactly(inst in general_instance(8)) {
        let text = io::instance_to_json_string(&inst);
        let back = io::instance_from_json_str(&text).unwrap();
        prop_assert_eq!(back.items(), inst.items());
        prop_assert_eq!(back.v1().values(), inst.v1().values());
        prop_assert_eq!(back.v2().values(), inst.v2().values());
    }

    #[test]
    fn decimal_rendering_errs_by_at_most_half_an_ulp(n in -10_000i64..10_000, d in 1i64..500) {
        let r = Rat::from_ratio(n, d);
        let rendered = io::decimal_string(&r, 12);
        let err = (parse_decimal(&rendered) - r).abs();
        prop_assert!(err <= Rat::from_ratio(1, 2_000_000_000_000));
    }
}

fn parse_decimal(text: &str) -> Rat {
    let negative = text.strip_prefix('-');
    let body = negative.unwrap_or(text);
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let mut value = io::parse_rational(int_part).unwrap();
    if !frac_part.is_empty() {
        let denom = 10i64.pow(frac_part.len() as u32);
        value += Rat::from_ratio(frac_part.parse::<i64>().unwrap(), denom);
    }
    if negative.is_some() {
        -value
    } else {
        value
    }
}
