//! Fundamental group of the AF algebra with dimension group `E`.
//!
//! `F(A)` sits inside the positive unit group of the ring. A generator of
//! that group is in `F(A)` once an order automorphism scaling the trace by
//! it is exhibited; the search for such automorphisms is bounded, so a miss
//! leaves equality open rather than claiming anything.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::dimgroup::{DimElem, DimGroupParams};
use crate::orderauto::{classify_residues, is_well_defined, lift_witness, IntMat2, NotWellDefined, OrderAuto};
use crate::quad::{is_prime, QuadRat};
use crate::sunits::{positive_unit_generators, PositiveUnitGroup, SUnitError};

pub const DEFAULT_SEARCH_BOUND: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equality {
    Established,
    Open,
}

impl fmt::Display for Equality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equality::Established => "established",
            Equality::Open => "open",
        })
    }
}

#[derive(Debug, Clone)]
pub struct FundamentalGroupReport {
    pub params: DimGroupParams,
    pub upper_bound: PositiveUnitGroup,
    pub witnessed: Vec<(QuadRat, OrderAuto)>,
    /// Generators with no witness within `search_bound`.
    pub missing: Vec<QuadRat>,
    pub search_bound: u64,
    pub equality: Equality,
}

impl FundamentalGroupReport {
    /// Generators of the subgroup known to lie in `F(A)`.
    pub fn witnessed_generators(&self) -> Vec<QuadRat> {
        self.witnessed.iter().map(|(l, _)| l.clone()).collect()
    }
}

impl fmt::Display for FundamentalGroupReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.upper_bound.generators().iter().map(|g| g.pretty()).collect();
        writeln!(f, "upper bound IM+: {{{}}}", gens.join(", "))?;
        for (lambda, auto) in &self.witnessed {
            writeln!(f, "witness {}: M={}", lambda.pretty(), auto.matrix())?;
        }
        for lambda in &self.missing {
            writeln!(f, "no witness for {} with entries <= {}", lambda.pretty(), self.search_bound)?;
        }
        write!(f, "equality={}", self.equality)
    }
}

/// Bounds `F(A)` by the positive units and searches a witness for each
/// generator.
pub fn fundamental_group(params: DimGroupParams, search_bound: u64) -> Result<FundamentalGroupReport, SUnitError> {
    let upper_bound = positive_unit_generators(params.ring())?;
    let modulus = params.base_modulus();
    let mut witnessed = Vec::new();
    let mut missing = Vec::new();
    for lambda in upper_bound.generators() {
        let classes = classify_residues(params, lambda, modulus).expect("generators are positive units");
        match lift_witness(params, lambda, &classes, search_bound) {
            Some(auto) => witnessed.push((lambda.clone(), auto)),
            None => missing.push(lambda.clone()),
        }
    }
    let equality = if missing.is_empty() { Equality::Established } else { Equality::Open };
    Ok(FundamentalGroupReport { params, upper_bound, witnessed, missing, search_bound, equality })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessRejected {
    #[error(transparent)]
    NotWellDefined(#[from] NotWellDefined),
    #[error("trace of the image of u is {got}, expected {expected}")]
    TraceMismatch { got: String, expected: String },
}

#[derive(Debug, Clone)]
pub struct VerifiedWitness {
    pub auto: OrderAuto,
    /// `φ(u)` for the order unit `u = (1, (1, 0))`.
    pub unit_image: DimElem,
}

pub fn verify_witness(params: DimGroupParams, lambda: &QuadRat, m: &IntMat2) -> Result<VerifiedWitness, WitnessRejected> {
    is_well_defined(params, lambda, m)?;
    let auto = OrderAuto::new(params, lambda.clone(), m.clone())?;
    let unit_image = auto.apply(&DimElem::order_unit(params));
    let got = unit_image.trace_state();
    if &got != lambda {
        return Err(WitnessRejected::TraceMismatch { got: got.pretty(), expected: lambda.pretty() });
    }
    Ok(VerifiedWitness { auto, unit_image })
}

/// Whether `a` and `b` generate the same subgroup of the positive reals,
/// checked by writing each generator of one side as a product of powers of
/// the other with exponents in `[-bound, bound]`.
pub fn generates_same_subgroup(a: &[QuadRat], b: &[QuadRat], bound: i64) -> bool {
    a.iter().all(|x| in_box_span(x, b, bound)) && b.iter().all(|x| in_box_span(x, a, bound))
}

fn in_box_span(x: &QuadRat, gens: &[QuadRat], bound: i64) -> bool {
    fn go(target: &QuadRat, acc: QuadRat, gens: &[QuadRat], bound: i64) -> bool {
        let Some((g, rest)) = gens.split_first() else {
            return &acc == target;
        };
        (-bound..=bound).any(|e| go(target, &acc * &g.pow(e).expect("generator is a unit"), rest, bound))
    }
    go(x, QuadRat::one(x.ring()), gens, bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

/// A supernatural number `∏ p^{n_p}` with finitely many primes listed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupernaturalNumber(BTreeMap<u64, Exponent>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupernaturalParseError {
    #[error("bad entry `{0}` (expected prime:exponent or prime:inf)")]
    Syntax(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} listed twice")]
    Duplicate(u64),
    #[error("exponent of {0} must be at least 1")]
    ZeroExponent(u64),
}

impl SupernaturalNumber {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prime: u64, exp: Exponent) -> Result<(), SupernaturalParseError> {
        if !is_prime(prime) {
            return Err(SupernaturalParseError::NotPrime(prime));
        }
        if exp == Exponent::Finite(0) {
            return Err(SupernaturalParseError::ZeroExponent(prime));
        }
        if self.0.insert(prime, exp).is_some() {
            return Err(SupernaturalParseError::Duplicate(prime));
        }
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, Exponent)> + '_ {
        self.0.iter().map(|(p, e)| (*p, *e))
    }
}

impl FromStr for SupernaturalNumber {
    type Err = SupernaturalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut n = SupernaturalNumber::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (p, e) = item.split_once(':').ok_or_else(|| SupernaturalParseError::Syntax(item.into()))?;
            let p: u64 = p.trim().parse().map_err(|_| SupernaturalParseError::Syntax(item.into()))?;
            let e = match e.trim() {
                "inf" | "infinity" | "∞" => Exponent::Infinite,
                v => Exponent::Finite(v.parse().map_err(|_| SupernaturalParseError::Syntax(item.into()))?),
            };
            n.insert(p, e)?;
        }
        Ok(n)
    }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries()
            .map(|(p, e)| match e {
                Exponent::Finite(n) => format!("{p}:{n}"),
                Exponent::Infinite => format!("{p}:inf"),
            })
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Free generators of the fundamental group of the UHF algebra of type `n`:
/// the primes occurring with infinite exponent.
pub fn uhf_fundamental_group(n: &SupernaturalNumber) -> Vec<u64> {
    n.entries().filter(|(_, e)| *e == Exponent::Infinite).map(|(p, _)| p).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> DimGroupParams {
        DimGroupParams::standard()
    }

    fn q(s: &str) -> QuadRat {
        QuadRat::parse_in(standard().ring(), s).unwrap()
    }

    #[test]
    fn standard_instance_is_established() {
        let report = fundamental_group(standard(), DEFAULT_SEARCH_BOUND).unwrap();
        assert_eq!(report.equality, Equality::Established);
        assert_eq!(report.upper_bound.generators(), &[q("5"), q("2+sqrt3")]);
        assert!(generates_same_subgroup(&report.witnessed_generators(), &[q("5"), q("2+sqrt3")], 4));
        for (lambda, auto) in &report.witnessed {
            verify_witness(standard(), lambda, auto.matrix()).unwrap();
        }
    }

    #[test]
    fn unconstrained_instance_uses_identity() {
        let free = DimGroupParams::new(3, 5, 6, 1, 1).unwrap();
        let report = fundamental_group(free, DEFAULT_SEARCH_BOUND).unwrap();
        assert_eq!(report.equality, Equality::Established);
        assert!(report.witnessed.iter().all(|(_, a)| a.matrix() == &IntMat2::identity()));
    }

    #[test]
    fn small_bound_leaves_equality_open() {
        let report = fundamental_group(standard(), 5).unwrap();
        assert_eq!(report.equality, Equality::Open);
        assert_eq!(report.missing, vec![q("5")]);
        assert!(report.to_string().contains("no witness for 5 with entries <= 5"));
    }

    #[test]
    fn witness_verification() {
        let v = verify_witness(standard(), &q("5"), &IntMat2::new(5, 9, 6, 11)).unwrap();
        assert_eq!(v.unit_image, DimElem::new(standard(), 0, 5, 0, 5, 6).unwrap());
        verify_witness(standard(), &q("2+sqrt3"), &IntMat2::new(2, 3, 1, 2)).unwrap();
        assert!(matches!(
            verify_witness(standard(), &q("5"), &IntMat2::new(2, 3, 1, 2)),
            Err(WitnessRejected::NotWellDefined(NotWellDefined::ImageOutsideE { .. }))
        ));
    }

    #[test]
    fn subgroup_comparison() {
        let a = [q("5"), q("2+sqrt3")];
        let b = [q("5") * q("2+sqrt3"), q("2+sqrt3")];
        assert!(generates_same_subgroup(&a, &b, 4));
        assert!(!generates_same_subgroup(&a, &[q("25"), q("2+sqrt3")], 4));
    }

    #[test]
    fn uhf_cases() {
        let n: SupernaturalNumber = "2:inf,3:inf".parse().unwrap();
        assert_eq!(uhf_fundamental_group(&n), vec![2, 3]);
        assert_eq!(uhf_fundamental_group(&"2:inf".parse().unwrap()), vec![2]);
        assert_eq!(uhf_fundamental_group(&"".parse().unwrap()), Vec::<u64>::new());
        assert_eq!(uhf_fundamental_group(&"2:3,5:inf".parse().unwrap()), vec![5]);
        assert_eq!(n.to_string(), "2:inf,3:inf");
        assert_eq!("4:inf".parse::<SupernaturalNumber>(), Err(SupernaturalParseError::NotPrime(4)));
        assert_eq!("2:inf,2:1".parse::<SupernaturalNumber>(), Err(SupernaturalParseError::Duplicate(2)));
        assert!("2".parse::<SupernaturalNumber>().is_err());
        assert_eq!("3:0".parse::<SupernaturalNumber>(), Err(SupernaturalParseError::ZeroExponent(3)));
    }
}
