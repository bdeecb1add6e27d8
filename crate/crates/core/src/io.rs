//! Serialization of instances, solutions, and check results.
//!
//! Exactness is the contract: every rational is emitted as an exact string
//! (`"10"`, `"3/4"`), and wherever a number is meant for human eyes a
//! companion `*_approx` field carries a 12-place decimal. JSON objects are
//! built on sorted-key maps, so identical inputs serialize to identical
//! bytes.
//!
//! The instance format is `{"T": n, "v1": [...], "v2": [...]}` where each
//! entry is either a JSON integer or a `"p/q"` string with positive `q`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::auction::Buyer;
use crate::checks::CheckReport;
use crate::equilibrium::{Outcome, PathReport};
use crate::scalar::Scalar;
use crate::{Instance, Rat, Solution};

/// Decimal places used by the `*_approx` convenience fields.
pub const APPROX_PLACES: usize = 12;

/// Errors from reading an instance out of JSON.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("field \"T\" must be a nonnegative integer")]
    BadItems,
    #[error("field {0:?} must be an array of rationals")]
    NotArray(&'static str),
    #[error("{context}: expected an integer or a \"p/q\" string")]
    BadRational { context: String },
    #[error("{context}: denominator must be positive")]
    NonPositiveDenominator { context: String },
}

/// Canonical exact string for a rational: `"p"` when the denominator is 1,
/// otherwise `"p/q"` with `q > 0`.
pub fn rational_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p"` or `"p/q"` (arbitrary precision, `q > 0` required).
pub fn parse_rational(text: &str) -> Result<Rat, ParseError> {
    let bad = || ParseError::BadRational {
        context: format!("value {text:?}"),
    };
    let trimmed = text.trim();
    match trimmed.split_once('/') {
        None => {
            let n = BigInt::from_str(trimmed).map_err(|_| bad())?;
            Ok(Rat::from_integer(n))
        }
        Some((num, den)) => {
            let n = BigInt::from_str(num.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(den.trim()).map_err(|_| bad())?;
            if !d.is_positive() {
                return Err(ParseError::NonPositiveDenominator {
                    context: format!("value {text:?}"),
                });
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// Fixed-point decimal rendering with `places` digits, rounding halves away
/// from zero. Exact for display purposes only.
pub fn decimal_string(r: &Rat, places: usize) -> String {
    let magnitude = r.abs();
    let pow = BigInt::from(10u32).pow(places as u32);
    let scaled_num = magnitude.numer() * &pow;
    let den = magnitude.denom();
    // floor((scaled + 1/2)) on nonnegative values = round half up.
    let rounded = (scaled_num * 2u32 + den) / (den * 2u32);
    let int_part = &rounded / &pow;
    let frac_part = &rounded % &pow;
    let mut out = String::new();
    if r.is_negative() && !rounded.is_zero() {
        out.push('-');
    }
    write!(out, "{int_part}").unwrap();
    if places > 0 {
        write!(out, ".{frac_part:0places$}").unwrap();
    }
    out
}

fn rational_value(r: &Rat) -> Value {
    if r.denom().is_one() {
        if let Ok(n) = i64::try_from(r.numer().clone()) {
            return json!(n);
        }
    }
    Value::String(rational_string(r))
}

fn rational_from_value(value: &Value, context: &str) -> Result<Rat, ParseError> {
    match value {
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Rat::from_int(i)),
            None => Err(ParseError::BadRational {
                context: context.to_string(),
            }),
        },
        Value::String(s) => parse_rational(s).map_err(|e| match e {
            ParseError::BadRational { .. } => ParseError::BadRational {
                context: format!("{context} = {s:?}"),
            },
            ParseError::NonPositiveDenominator { .. } => ParseError::NonPositiveDenominator {
                context: format!("{context} = {s:?}"),
            },
            other => other,
        }),
        _ => Err(ParseError::BadRational {
            context: context.to_string(),
        }),
    }
}

/// Instance as a JSON value.
pub fn instance_to_json(inst: &Instance) -> Value {
    let values = |buyer: Buyer| -> Value {
        Value::Array(
            inst.valuation(buyer)
                .values()
                .iter()
                .map(rational_value)
                .collect(),
        )
    };
    json!({
        "T": inst.items(),
        "v1": values(Buyer::One),
        "v2": values(Buyer::Two),
    })
}

/// Pretty-printed instance JSON with a trailing newline.
pub fn instance_to_json_string(inst: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&instance_to_json(inst)).expect("valid JSON tree");
    s.push('\n');
    s
}

/// Reads an instance from JSON text. Shape errors are reported here;
/// semantic validation (lengths, negativity) is
/// [`crate::AuctionInstance::validate`]'s job.
pub fn instance_from_json_str(text: &str) -> Result<Instance, ParseError> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(ParseError::MissingField("T"))?;
    let items = obj
        .get("T")
        .ok_or(ParseError::MissingField("T"))?
        .as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or(ParseError::BadItems)?;
    let read_values = |field: &'static str| -> Result<Vec<Rat>, ParseError> {
        obj.get(field)
            .ok_or(ParseError::MissingField(field))?
            .as_array()
            .ok_or(ParseError::NotArray(field))?
            .iter()
            .enumerate()
            .map(|(i, v)| rational_from_value(v, &format!("{field}[{i}]")))
            .collect()
    };
    let v1 = read_values("v1")?;
    let v2 = read_values("v2")?;
    Ok(Instance::new(items, v1, v2))
}

fn exact_and_approx(map: &mut Map<String, Value>, field: &str, value: &Rat) {
    map.insert(field.to_string(), Value::String(rational_string(value)));
    map.insert(
        format!("{field}_approx"),
        Value::String(decimal_string(value, APPROX_PLACES)),
    );
}

/// Stable label for an outcome.
pub fn outcome_string(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Buyer1Wins => "buyer1_wins",
        Outcome::Buyer2Wins => "buyer2_wins",
        Outcome::Tie => "tie",
    }
}

/// Full solved-lattice export: every node keyed `"x1,x2"` with exact
/// utilities, and for decision nodes the bids, price, and outcome.
pub fn solution_to_json(sol: &Solution) -> Value {
    let mut nodes = Map::new();
    for (node, record) in sol.records() {
        let mut entry = Map::new();
        exact_and_approx(&mut entry, "u1", &record.u1);
        exact_and_approx(&mut entry, "u2", &record.u2);
        if let Some(auction) = &record.auction {
            exact_and_approx(&mut entry, "b1", &auction.b1);
            exact_and_approx(&mut entry, "b2", &auction.b2);
            exact_and_approx(&mut entry, "p", &auction.price);
            entry.insert(
                "outcome".to_string(),
                Value::String(outcome_string(auction.outcome).to_string()),
            );
        }
        nodes.insert(format!("{},{}", node.x1, node.x2), Value::Object(entry));
    }
    json!({
        "T": sol.items(),
        "nodes": Value::Object(nodes),
    })
}

/// Pretty-printed solution JSON with a trailing newline.
pub fn solution_to_json_string(sol: &Solution) -> String {
    let mut s = serde_json::to_string_pretty(&solution_to_json(sol)).expect("valid JSON tree");
    s.push('\n');
    s
}

/// One equilibrium path as JSON: node sequence, endpoint, prices paid, and
/// exact efficiency.
pub fn path_report_to_json(path: &PathReport<Rat>) -> Value {
    let mut map = Map::new();
    map.insert(
        "nodes".to_string(),
        Value::Array(
            path.nodes
                .iter()
                .map(|n| Value::String(format!("{},{}", n.x1, n.x2)))
                .collect(),
        ),
    );
    let terminal = *path.nodes.last().expect("path has at least one node");
    map.insert("endpoint".to_string(), json!([terminal.x1, terminal.x2]));
    map.insert(
        "prices_paid".to_string(),
        Value::Array(
            path.prices_paid
                .iter()
                .map(|p| Value::String(rational_string(p)))
                .collect(),
        ),
    );
    exact_and_approx(&mut map, "efficiency", &path.efficiency);
    Value::Object(map)
}

/// Check reports as a JSON array (one object per check, with witnesses).
pub fn check_reports_to_json(reports: &[CheckReport<Rat>]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|r| {
                json!({
                    "check": r.check_name,
                    "passed": r.passed,
                    "witnesses": Value::Array(
                        r.witnesses
                            .iter()
                            .map(|w| {
                                json!({
                                    "location": w.location,
                                    "expected": rational_string(&w.expected),
                                    "actual": rational_string(&w.actual),
                                })
                            })
                            .collect(),
                    ),
                })
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::TiePolicy;
    use crate::instances;
    use crate::scalar::Scalar;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    fn int(n: i64) -> Rat {
        Rat::from_int(n)
    }

    #[test]
    fn rational_strings() {
        assert_eq!(rational_string(&int(10)), "10");
        assert_eq!(rational_string(&rat(3, 4)), "3/4");
        assert_eq!(rational_string(&rat(-3, 4)), "-3/4");
        assert_eq!(rational_string(&rat(6, 8)), "3/4");
    }

    #[test]
    fn parse_accepts_integers_and_fractions() {
        assert_eq!(parse_rational("10").unwrap(), int(10));
        assert_eq!(parse_rational(" -3/4 ").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational("6/8").unwrap(), rat(3, 4));
        // Arbitrary precision must survive (numerator is 1 mod 7, so the
        // fraction is already reduced).
        let big = parse_rational("123456789012345678901234567891/7").unwrap();
        assert_eq!(rational_string(&big), "123456789012345678901234567891/7");
    }

    #[test]
    fn parse_rejects_garbage_and_bad_denominators() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("three").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("1.5").is_err());
    }

    #[test]
    fn decimal_rendering_rounds_half_away_from_zero() {
        assert_eq!(decimal_string(&rat(3, 4), 2), "0.75");
        assert_eq!(decimal_string(&rat(1, 3), 6), "0.333333");
        assert_eq!(decimal_string(&rat(2, 3), 6), "0.666667");
        assert_eq!(decimal_string(&rat(1, 2), 0), "1");
        assert_eq!(decimal_string(&rat(5, 1000), 2), "0.01");
        assert_eq!(decimal_string(&rat(-1, 2), 1), "-0.5");
        assert_eq!(decimal_string(&rat(-5, 1000), 2), "-0.01");
        assert_eq!(decimal_string(&int(0), 3), "0.000");
        assert_eq!(decimal_string(&rat(1, 7), 12), "0.142857142857");
    }

    #[test]
    fn instance_round_trip_preserves_exact_values() {
        let inst = instances::tight_concave(5, 2).unwrap();
        let text = instance_to_json_string(&inst);
        let back = instance_from_json_str(&text).unwrap();
        assert_eq!(back.items(), 5);
        for buyer in Buyer::BOTH {
            assert_eq!(
                back.valuation(buyer).values(),
                inst.valuation(buyer).values()
            );
        }
    }

    #[test]
    fn instance_json_uses_numbers_for_integers() {
        let inst = instances::example_1();
        let value = instance_to_json(&inst);
        assert_eq!(value["T"], json!(2));
        assert_eq!(value["v1"], json!([10, 10]));
        assert_eq!(value["v2"], json!([5, 0]));
    }

    #[test]
    fn instance_parse_reports_shape_errors() {
        assert!(matches!(
            instance_from_json_str("{\"v1\": [], \"v2\": []}"),
            Err(ParseError::MissingField("T"))
        ));
        assert!(matches!(
            instance_from_json_str("{\"T\": -1, \"v1\": [], \"v2\": []}"),
            Err(ParseError::BadItems)
        ));
        assert!(matches!(
            instance_from_json_str("{\"T\": 1, \"v1\": 3, \"v2\": []}"),
            Err(ParseError::NotArray("v1"))
        ));
        assert!(instance_from_json_str("{\"T\": 1, \"v1\": [0.5], \"v2\": [1]}").is_err());
        assert!(instance_from_json_str("not json").is_err());
    }

    #[test]
    fn solution_export_contains_exact_fields() {
        let sol = crate::solve(instances::example_1()).unwrap();
        let value = solution_to_json(&sol);
        assert_eq!(value["T"], json!(2));
        let root = &value["nodes"]["0,0"];
        assert_eq!(root["u1"], json!("10"));
        assert_eq!(root["u2"], json!("0"));
        assert_eq!(root["b1"], json!("5"));
        assert_eq!(root["b2"], json!("5"));
        assert_eq!(root["p"], json!("5"));
        assert_eq!(root["outcome"], json!("tie"));
        assert_eq!(root["u1_approx"], json!("10.000000000000"));
        // Terminal nodes carry utilities but no auction fields.
        let terminal = &value["nodes"]["2,0"];
        assert_eq!(terminal["u1"], json!("0"));
        assert!(terminal.get("b1").is_none());
    }

    #[test]
    fn solution_export_is_deterministic() {
        let a = solution_to_json_string(&crate::solve(instances::example_1()).unwrap());
        let b = solution_to_json_string(&crate::solve(instances::example_1()).unwrap());
        assert_eq!(a, b);
        // Keys of the node map are sorted.
        let keys: Vec<usize> = a.match_indices("\"0,").map(|(i, _)| i).collect();
        assert!(!keys.is_empty());
    }

    #[test]
    fn path_export_shape() {
        let sol = crate::solve(instances::example_1()).unwrap();
        let path = sol.extract_path(crate::Node::ROOT, TiePolicy::FavorBuyer2);
        let value = path_report_to_json(&path);
        assert_eq!(value["endpoint"], json!([1, 1]));
        assert_eq!(value["efficiency"], json!("3/4"));
        assert_eq!(value["prices_paid"], json!(["5", "0"]));
        assert_eq!(value["nodes"], json!(["0,0", "0,1", "1,1"]));
    }

    #[test]
    fn check_report_export_shape() {
        let sol = crate::solve(instances::example_1()).unwrap();
        let reports = crate::checks::run_all_checks(&sol);
        let value = check_reports_to_json(&reports);
        let arr = value.as_array().unwrap();
        assert_eq!(arr.len(), reports.len());
        assert!(arr.iter().all(|r| r["passed"] == json!(true)));
        assert!(arr.iter().any(|r| r["check"] == json!("no_free_win")));
    }
}
