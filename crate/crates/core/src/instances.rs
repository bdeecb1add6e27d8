//! Instance generators: the worked example, the extremal families that
//! attain the worst-case efficiency bounds, and seeded random families for
//! fuzzing.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::auction::AuctionInstance;
use crate::scalar::Scalar;

/// Denominator of the grid random values are drawn from: every random value
/// is a multiple of `1/12`. A coarse fixed grid keeps rational bit-growth
/// bounded during fuzzing and makes exact bid ties occur with positive
/// probability, so tie handling actually gets exercised.
pub const RANDOM_GRID_DENOMINATOR: i64 = 12;

/// Default numerator range for random draws: values lie in `{0/12..24/12}`.
pub const DEFAULT_RANDOM_SCALE: u32 = 24;

/// Parameter errors from the deterministic generators.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("tight-concave requires 0 <= k < T, got T={items}, k={k}")]
    KRange { items: usize, k: usize },
    #[error("instance requires at least one item")]
    ZeroItems,
}

/// The two-item worked example: `v1 = (10, 10)`, `v2 = (5, 0)`.
///
/// Its equilibrium ties at the root; breaking the tie toward buyer 2 yields
/// efficiency `3/4`, the worst case for this instance.
pub fn example_1<S: Scalar>() -> AuctionInstance<S> {
    AuctionInstance::new(
        2,
        vec![S::from_int(10), S::from_int(10)],
        vec![S::from_int(5), S::zero()],
    )
}

/// The concave instance whose worst equilibrium endpoint `(k, T-k)` attains
/// the concave efficiency bound exactly: `v1 ≡ 1` and
/// `v2(j) = (T-k-j+1)/(T-j+1)` for `j <= T-k`, else `0`.
///
/// Both valuations are concave; the unique optimal allocation is `(T, 0)`
/// with welfare `T`. Along the lattice edge `(0, ℓ)`, `ℓ < T-k`, the bids
/// tie exactly, letting equilibrium play hand buyer 2 the first `T-k` items.
pub fn tight_concave<S: Scalar>(
    items: usize,
    k: usize,
) -> Result<AuctionInstance<S>, GenerateError> {
    if k >= items {
        return Err(GenerateError::KRange { items, k });
    }
    let v1 = vec![S::one(); items];
    let v2 = (1..=items)
        .map(|j| {
            if j <= items - k {
                S::from_ratio((items - k - j + 1) as i64, (items - j + 1) as i64)
            } else {
                S::zero()
            }
        })
        .collect();
    Ok(AuctionInstance::new(items, v1, v2))
}

/// The general-valuation instance with efficiency exactly `1/T`:
/// `v1 = (0, ..., 0, 1)` (only a full bundle has value) and
/// `v2 = (1/T, 0, ..., 0)`.
///
/// The root bids tie at `1/T`; giving buyer 2 the first item destroys
/// buyer 1's incentive to collect all `T` items, and play can end at any
/// allocation, the worst being welfare `1/T` against optimum `1`.
pub fn tight_general<S: Scalar>(items: usize) -> Result<AuctionInstance<S>, GenerateError> {
    if items == 0 {
        return Err(GenerateError::ZeroItems);
    }
    let mut v1 = vec![S::zero(); items];
    v1[items - 1] = S::one();
    let mut v2 = vec![S::zero(); items];
    v2[0] = S::from_ratio(1, items as i64);
    Ok(AuctionInstance::new(items, v1, v2))
}

fn random_values<S: Scalar>(rng: &mut ChaCha8Rng, items: usize, scale: u32) -> Vec<S> {
    (0..items)
        .map(|_| S::from_ratio(rng.random_range(0..=scale) as i64, RANDOM_GRID_DENOMINATOR))
        .collect()
}

/// Random concave instance: both buyers draw `items` values uniformly from
/// the grid `{0, 1/12, ..., scale/12}` and sort them nonincreasing.
/// Deterministic per seed.
pub fn random_concave<S: Scalar>(items: usize, seed: u64, scale: u32) -> AuctionInstance<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let mut v: Vec<S> = random_values(&mut rng, items, scale);
        v.sort_by(|a, b| b.partial_cmp(a).expect("grid values are comparable"));
        v
    };
    let v1 = draw();
    let v2 = draw();
    AuctionInstance::new(items, v1, v2)
}

/// Random unrestricted instance: independent uniform draws from the grid
/// `{0, 1/12, ..., scale/12}`, unsorted. Deterministic per seed.
pub fn random_general<S: Scalar>(items: usize, seed: u64, scale: u32) -> AuctionInstance<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v1 = random_values(&mut rng, items, scale);
    let v2 = random_values(&mut rng, items, scale);
    AuctionInstance::new(items, v1, v2)
}

/// A named, parameterized instance family, as selected by `--family` specs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceFamily {
    Example1,
    TightConcave { items: usize, k: usize },
    TightGeneral { items: usize },
    RandomConcave { items: usize, seed: u64, scale: u32 },
    RandomGeneral { items: usize, seed: u64, scale: u32 },
}

impl InstanceFamily {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceFamily::Example1 => "example1",
            InstanceFamily::TightConcave { .. } => "tight-concave",
            InstanceFamily::TightGeneral { .. } => "tight-general",
            InstanceFamily::RandomConcave { .. } => "random-concave",
            InstanceFamily::RandomGeneral { .. } => "random-general",
        }
    }

    /// Replaces the seed on random families; no-op for deterministic ones.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            InstanceFamily::RandomConcave { items, scale, .. } => {
                InstanceFamily::RandomConcave { items, seed, scale }
            }
            InstanceFamily::RandomGeneral { items, scale, .. } => {
                InstanceFamily::RandomGeneral { items, seed, scale }
            }
            other => other,
        }
    }

    pub fn generate<S: Scalar>(&self) -> Result<AuctionInstance<S>, GenerateError> {
        match *self {
            InstanceFamily::Example1 => Ok(example_1()),
            InstanceFamily::TightConcave { items, k } => tight_concave(items, k),
            InstanceFamily::TightGeneral { items } => tight_general(items),
            InstanceFamily::RandomConcave { items, seed, scale } => {
                Ok(random_concave(items, seed, scale))
            }
            InstanceFamily::RandomGeneral { items, seed, scale } => {
                Ok(random_general(items, seed, scale))
            }
        }
    }
}

impl fmt::Display for InstanceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InstanceFamily::Example1 => write!(f, "example1"),
            InstanceFamily::TightConcave { items, k } => {
                write!(f, "tight-concave:T={items},k={k}")
            }
            InstanceFamily::TightGeneral { items } => write!(f, "tight-general:T={items}"),
            InstanceFamily::RandomConcave { items, seed, scale } => {
                write!(f, "random-concave:T={items},seed={seed},scale={scale}")
            }
            InstanceFamily::RandomGeneral { items, seed, scale } => {
                write!(f, "random-general:T={items},seed={seed},scale={scale}")
            }
        }
    }
}

/// Errors from parsing a `--family` spec string.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseFamilyError {
    #[error("unknown family {0:?}; expected example1, tight-concave, tight-general, random-concave, or random-general")]
    UnknownFamily(String),
    #[error("family {family} requires parameter {key}=... (e.g. {example:?})")]
    MissingParameter {
        family: &'static str,
        key: &'static str,
        example: &'static str,
    },
    #[error("unknown parameter {key:?} for family {family}")]
    UnknownParameter { family: &'static str, key: String },
    #[error("parameter {key} has invalid value {value:?}")]
    BadValue { key: &'static str, value: String },
}

fn parse_params<'a>(
    family: &'static str,
    rest: Option<&'a str>,
    allowed: &[&'static str],
) -> Result<Vec<(&'static str, &'a str)>, ParseFamilyError> {
    let mut out = Vec::new();
    let Some(rest) = rest else {
        return Ok(out);
    };
    for piece in rest.split(',').filter(|p| !p.is_empty()) {
        let (key, value) =
            piece
                .split_once('=')
                .ok_or_else(|| ParseFamilyError::UnknownParameter {
                    family,
                    key: piece.to_string(),
                })?;
        let known = allowed.iter().find(|&&a| a == key).ok_or_else(|| {
            ParseFamilyError::UnknownParameter {
                family,
                key: key.to_string(),
            }
        })?;
        out.push((*known, value));
    }
    Ok(out)
}

fn lookup<T: FromStr>(
    params: &[(&'static str, &str)],
    key: &'static str,
) -> Result<Option<T>, ParseFamilyError> {
    match params.iter().find(|(k, _)| *k == key) {
        None => Ok(None),
        Some((_, value)) => value
            .parse()
            .map(Some)
            .map_err(|_| ParseFamilyError::BadValue {
                key,
                value: value.to_string(),
            }),
    }
}

fn require<T: FromStr>(
    params: &[(&'static str, &str)],
    family: &'static str,
    key: &'static str,
    example: &'static str,
) -> Result<T, ParseFamilyError> {
    lookup(params, key)?.ok_or(ParseFamilyError::MissingParameter {
        family,
        key,
        example,
    })
}

impl FromStr for InstanceFamily {
    type Err = ParseFamilyError;

    /// Parses specs like `example1`, `tight-concave:T=5,k=2`,
    /// `tight-general:T=7`, `random-concave:T=8,seed=3,scale=24`
    /// (seed and scale optional, defaulting to 0 and 24).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        match name {
            "example1" => {
                parse_params("example1", rest, &[])?;
                Ok(InstanceFamily::Example1)
            }
            "tight-concave" => {
                let params = parse_params("tight-concave", rest, &["T", "k"])?;
                Ok(InstanceFamily::TightConcave {
                    items: require(&params, "tight-concave", "T", "tight-concave:T=5,k=2")?,
                    k: require(&params, "tight-concave", "k", "tight-concave:T=5,k=2")?,
                })
            }
            "tight-general" => {
                let params = parse_params("tight-general", rest, &["T"])?;
                Ok(InstanceFamily::TightGeneral {
                    items: require(&params, "tight-general", "T", "tight-general:T=7")?,
                })
            }
            "random-concave" => {
                let params = parse_params("random-concave", rest, &["T", "seed", "scale"])?;
                Ok(InstanceFamily::RandomConcave {
                    items: require(&params, "random-concave", "T", "random-concave:T=8")?,
                    seed: lookup(&params, "seed")?.unwrap_or(0),
                    scale: lookup(&params, "scale")?.unwrap_or(DEFAULT_RANDOM_SCALE),
                })
            }
            "random-general" => {
                let params = parse_params("random-general", rest, &["T", "seed", "scale"])?;
                Ok(InstanceFamily::RandomGeneral {
                    items: require(&params, "random-general", "T", "random-general:T=8")?,
                    seed: lookup(&params, "seed")?.unwrap_or(0),
                    scale: lookup(&params, "scale")?.unwrap_or(DEFAULT_RANDOM_SCALE),
                })
            }
            other => Err(ParseFamilyError::UnknownFamily(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::from_ratio(n, d)
    }

    #[test]
    fn example_1_layout() {
        let inst: AuctionInstance<Rat> = example_1();
        assert_eq!(inst.items(), 2);
        assert_eq!(inst.v1().values(), &[Rat::from_int(10), Rat::from_int(10)]);
        assert_eq!(inst.v2().values(), &[Rat::from_int(5), Rat::from_int(0)]);
        assert!(inst.validate().both_concave());
    }

    #[test]
    fn tight_concave_values() {
        // T=2, k=1: v2 = (1/2, 0).
        let inst: AuctionInstance<Rat> = tight_concave(2, 1).unwrap();
        assert_eq!(inst.v1().values(), &[Rat::from_int(1), Rat::from_int(1)]);
        assert_eq!(inst.v2().values(), &[rat(1, 2), Rat::from_int(0)]);

        // T=5, k=2: v2(j) = (4-j)/(6-j) for j <= 3.
        let inst: AuctionInstance<Rat> = tight_concave(5, 2).unwrap();
        assert_eq!(
            inst.v2().values(),
            &[
                rat(3, 5),
                rat(2, 4),
                rat(1, 3),
                Rat::from_int(0),
                Rat::from_int(0)
            ]
        );
    }

    #[test]
    fn tight_concave_is_concave_and_valid() {
        for items in 1..=10usize {
            for k in 0..items {
                let inst: AuctionInstance<Rat> = tight_concave(items, k).unwrap();
                let report = inst.validate();
                assert!(report.is_valid());
                assert!(report.both_concave(), "T={items} k={k}");
            }
        }
    }

    #[test]
    fn tight_concave_optimum_is_all_to_buyer_1() {
        use crate::Node;
        // For k >= 1 the optimum is unique: each buyer-2 value falls short
        // of 1 by exactly k/(T-j+1) > 0.
        for (items, k) in [(3usize, 1usize), (4, 2), (6, 5)] {
            let inst: AuctionInstance<Rat> = tight_concave(items, k).unwrap();
            let (opt, argmax) = inst.opt_welfare(Node::ROOT);
            assert_eq!(opt, Rat::from_int(items as i64));
            assert_eq!(argmax, std::collections::BTreeSet::from([items]));
        }
        // At k = 0 buyer 2's values are all 1, so every split is optimal.
        let inst: AuctionInstance<Rat> = tight_concave(3, 0).unwrap();
        let (opt, argmax) = inst.opt_welfare(Node::ROOT);
        assert_eq!(opt, Rat::from_int(3));
        assert_eq!(argmax, std::collections::BTreeSet::from([0, 1, 2, 3]));
    }

    #[test]
    fn tight_concave_k_range_enforced() {
        assert_eq!(
            tight_concave::<Rat>(3, 3).unwrap_err(),
            GenerateError::KRange { items: 3, k: 3 }
        );
        assert!(tight_concave::<Rat>(0, 0).is_err());
    }

    #[test]
    fn tight_general_values() {
        let inst: AuctionInstance<Rat> = tight_general(4).unwrap();
        assert_eq!(
            inst.v1().values(),
            &[
                Rat::from_int(0),
                Rat::from_int(0),
                Rat::from_int(0),
                Rat::from_int(1)
            ]
        );
        assert_eq!(
            inst.v2().values(),
            &[
                rat(1, 4),
                Rat::from_int(0),
                Rat::from_int(0),
                Rat::from_int(0)
            ]
        );
        assert!(inst.validate().is_valid());
        // v1 spikes at the end: not concave (for T > 1).
        assert!(!inst.validate().buyer1_concave);
        assert_eq!(
            tight_general::<Rat>(0).unwrap_err(),
            GenerateError::ZeroItems
        );
    }

    #[test]
    fn random_families_are_deterministic_and_well_formed() {
        for seed in [0u64, 1, 42, u64::MAX] {
            let a: AuctionInstance<Rat> = random_concave(9, seed, 24);
            let b: AuctionInstance<Rat> = random_concave(9, seed, 24);
            assert_eq!(a, b);
            let report = a.validate();
            assert!(report.is_valid());
            assert!(report.both_concave());

            let g: AuctionInstance<Rat> = random_general(9, seed, 24);
            let h: AuctionInstance<Rat> = random_general(9, seed, 24);
            assert_eq!(g, h);
            assert!(g.validate().is_valid());
        }
        // Different seeds differ (overwhelmingly likely for 9 draws; these
        // particular seeds verified once and frozen).
        let a: AuctionInstance<Rat> = random_concave(9, 1, 24);
        let b: AuctionInstance<Rat> = random_concave(9, 2, 24);
        assert_ne!(a, b);
    }

    #[test]
    fn random_values_stay_on_grid() {
        let inst: AuctionInstance<Rat> = random_general(30, 7, 24);
        for v in inst.v1().values().iter().chain(inst.v2().values()) {
            let scaled = v.clone() * Rat::from_int(RANDOM_GRID_DENOMINATOR);
            assert!(scaled.is_integer());
            assert!(*v >= Rat::from_int(0));
            assert!(*v <= Rat::from_int(2));
        }
    }

    #[test]
    fn family_specs_round_trip() {
        let cases = [
            "example1",
            "tight-concave:T=5,k=2",
            "tight-general:T=7",
            "random-concave:T=8,seed=3,scale=24",
            "random-general:T=12,seed=99,scale=6",
        ];
        for spec in cases {
            let family: InstanceFamily = spec.parse().unwrap();
            assert_eq!(family.to_string().replace(",seed=0,scale=24", ""), *spec);
            let _ = family.generate::<Rat>().unwrap();
        }
    }

    #[test]
    fn family_spec_defaults_and_errors() {
        let family: InstanceFamily = "random-concave:T=8".parse().unwrap();
        assert_eq!(
            family,
            InstanceFamily::RandomConcave {
                items: 8,
                seed: 0,
                scale: DEFAULT_RANDOM_SCALE
            }
        );
        assert_eq!(
            family.clone().with_seed(7),
            InstanceFamily::RandomConcave {
                items: 8,
                seed: 7,
                scale: DEFAULT_RANDOM_SCALE
            }
        );

        assert!(matches!(
            "nope".parse::<InstanceFamily>(),
            Err(ParseFamilyError::UnknownFamily(_))
        ));
        assert!(matches!(
            "tight-concave:T=5".parse::<InstanceFamily>(),
            Err(ParseFamilyError::MissingParameter { key: "k", .. })
        ));
        assert!(matches!(
            "tight-general:T=x".parse::<InstanceFamily>(),
            Err(ParseFamilyError::BadValue { key: "T", .. })
        ));
        assert!(matches!(
            "example1:T=2".parse::<InstanceFamily>(),
            Err(ParseFamilyError::UnknownParameter { .. })
        ));
    }
}
