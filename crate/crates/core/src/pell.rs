//! Norm equations `x² − d·y² = n` over the integers.
//!
//! Solvability is decided by a bounded search whose bound comes from the
//! positive-norm fundamental solution of Pell's equation (Nagell's class
//! bound). Every "unsolvable" verdict carries a [`Certificate`] that can be
//! replayed without trusting the solver: a modulus at which the congruence
//! has no solution, or the exhausted search bound together with the Pell
//! solution that justifies it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::is_perfect_square;

pub const DEFAULT_SIEVE_CAP: u64 = 360;

/// Largest search bound the solver will walk before giving up.
pub const DEFAULT_MAX_SEARCH: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PellError {
    #[error("radicand {0} must be at least 2")]
    RadicandTooSmall(u64),
    #[error("radicand {0} is a perfect square")]
    PerfectSquare(u64),
    #[error("right-hand side must be nonzero")]
    ZeroRhs,
    #[error("search bound {bound} exceeds the configured limit {limit}")]
    SearchTooLarge { bound: BigInt, limit: u64 },
}

fn check_radicand(d: u64) -> Result<(), PellError> {
    if d < 2 {
        return Err(PellError::RadicandTooSmall(d));
    }
    if is_perfect_square(d) {
        return Err(PellError::PerfectSquare(d));
    }
    Ok(())
}

/// `√d = [a0; period, period, ...]` with the minimal period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfExpansion {
    pub a0: u64,
    pub period: Vec<u64>,
}

impl CfExpansion {
    /// Convergents `p_i / q_i` for `i = 0..count`.
    pub fn convergents(&self, count: usize) -> Vec<(BigInt, BigInt)> {
        let mut out = Vec::with_capacity(count);
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (BigInt::from(self.a0), BigInt::one());
        for i in 0..count {
            out.push((p.clone(), q.clone()));
            let a = BigInt::from(self.period[i % self.period.len()]);
            let p_next = &a * &p + &p_prev;
            let q_next = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
        }
        out
    }
}

impl fmt::Display for CfExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let period: Vec<String> = self.period.iter().map(|a| a.to_string()).collect();
        write!(f, "[{}; {}]", self.a0, period.join(","))
    }
}

/// Continued fraction of `√d` by the `(P, Q)` recurrence.
pub fn cf_expand(d: u64) -> Result<CfExpansion, PellError> {
    check_radicand(d)?;
    let d = d as u128;
    let a0 = d.sqrt();
    let (mut m, mut q, mut a) = (0u128, 1u128, a0);
    let mut period = Vec::new();
    loop {
        m = q * a - m;
        q = (d - m * m) / q;
        a = (a0 + m) / q;
        period.push(a as u64);
        if a == 2 * a0 {
            break;
        }
    }
    Ok(CfExpansion { a0: a0 as u64, period })
}

/// Smallest `x + y√d > 1` with `x² − d·y² = ±1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalUnit {
    pub x: BigInt,
    pub y: BigInt,
    pub norm_sign: i8,
}

impl FundamentalUnit {
    /// Smallest solution of `x² − d·y² = +1`: the unit itself, or its square
    /// when the unit has norm −1.
    pub fn pell_solution(&self, d: u64) -> (BigInt, BigInt) {
        if self.norm_sign > 0 {
            (self.x.clone(), self.y.clone())
        } else {
            let x = &self.x * &self.x + BigInt::from(d) * &self.y * &self.y;
            let y = BigInt::from(2) * &self.x * &self.y;
            (x, y)
        }
    }
}

pub fn fundamental_unit(d: u64) -> Result<FundamentalUnit, PellError> {
    let cf = cf_expand(d)?;
    let r = cf.period.len();
    let (x, y) = cf.convergents(r).pop().expect("period is nonempty");
    let norm_sign = if r % 2 == 0 { 1 } else { -1 };
    debug_assert_eq!(&x * &x - BigInt::from(d) * &y * &y, BigInt::from(norm_sign));
    Ok(FundamentalUnit { x, y, norm_sign })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SieveOutcome {
    Impossible,
    Inconclusive,
}

fn residue(v: i128, m: u64) -> usize {
    v.rem_euclid(m as i128) as usize
}

/// Decides whether `x² − d·y² ≡ n (mod m)` has any residue solution.
pub fn residue_sieve(d: i64, n: i64, m: u64) -> SieveOutcome {
    if m <= 1 {
        return SieveOutcome::Inconclusive;
    }
    let mut is_square = vec![false; m as usize];
    for x in 0..m as i128 {
        is_square[residue(x * x, m)] = true;
    }
    let hit = (0..m as i128).any(|y| is_square[residue(n as i128 + d as i128 * y * y, m)]);
    if hit {
        SieveOutcome::Inconclusive
    } else {
        SieveOutcome::Impossible
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("residue pair ({x}, {y}) solves x^2 - {d}y^2 = {n} mod {modulus}")]
    SieveHasSolution { d: i64, n: i64, modulus: u64, x: u64, y: u64 },
    #[error("({t}, {u}) is not a nontrivial solution of x^2 - {d}y^2 = 1")]
    BadPellSolution { d: u64, t: BigInt, u: BigInt },
    #[error("recorded bound {recorded} does not match recomputed bound {recomputed}")]
    BoundMismatch { recorded: BigInt, recomputed: BigInt },
    #[error("({x}, {y}) solves x^2 - {d}y^2 = {n} within the recorded bound")]
    SolutionWithinBound { d: u64, n: i64, x: BigInt, y: BigInt },
    #[error("unparseable certificate `{0}`")]
    Parse(String),
}

/// Evidence that `x² − d·y² = n` has no integer solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// The congruence has no solution modulo `modulus`.
    ModularSieve { d: u64, n: i64, modulus: u64 },
    /// Every solution class has a representative with `0 ≤ y ≤ bound`,
    /// where the bound is computed from the Pell solution `(t, u)`;
    /// none exists.
    ExhaustedBound {
        d: u64,
        n: i64,
        #[serde(with = "crate::serde_bigint")]
        bound: BigInt,
        #[serde(with = "crate::serde_bigint")]
        t: BigInt,
        #[serde(with = "crate::serde_bigint")]
        u: BigInt,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::ModularSieve { .. } => "modular-sieve",
            Certificate::ExhaustedBound { .. } => "exhausted-bound",
        }
    }

    /// Re-verifies the certificate from scratch.
    pub fn replay(&self) -> Result<(), ReplayError> {
        match self {
            Certificate::ModularSieve { d, n, modulus } => {
                let (d, n, m) = (*d as i128, *n as i128, *modulus);
                for x in 0..m {
                    for y in 0..m {
                        let (xi, yi) = (x as i128, y as i128);
                        if (xi * xi - d * yi * yi - n).rem_euclid(m as i128) == 0 {
                            return Err(ReplayError::SieveHasSolution {
                                d: d as i64,
                                n: n as i64,
                                modulus: m,
                                x,
                                y,
                            });
                        }
                    }
                }
                Ok(())
            }
            Certificate::ExhaustedBound { d, n, bound, t, u } => {
                let one = BigInt::one();
                if t * t - BigInt::from(*d) * u * u != one || t <= &one || !u.is_positive() {
                    return Err(ReplayError::BadPellSolution { d: *d, t: t.clone(), u: u.clone() });
                }
                let recomputed = class_bound(*n, t, u);
                if &recomputed != bound {
                    return Err(ReplayError::BoundMismatch {
                        recorded: bound.clone(),
                        recomputed,
                    });
                }
                let mut y = BigInt::zero();
                while &y <= bound {
                    let rhs = BigInt::from(*n) + BigInt::from(*d) * &y * &y;
                    if !rhs.is_negative() {
                        let x = rhs.sqrt();
                        if &x * &x == rhs {
                            return Err(ReplayError::SolutionWithinBound { d: *d, n: *n, x, y });
                        }
                    }
                    y += 1;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::ModularSieve { d, n, modulus } => {
                write!(f, "kind=modular-sieve d={d} n={n} modulus={modulus}")
            }
            Certificate::ExhaustedBound { d, n, bound, t, u } => {
                write!(f, "kind=exhausted-bound d={d} n={n} bound={bound} pell=({t},{u})")
            }
        }
    }
}

impl FromStr for Certificate {
    type Err = ReplayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReplayError::Parse(s.to_string());
        let field = |name: &str| -> Option<&str> {
            s.split_whitespace().find_map(|kv| kv.strip_prefix(name)?.strip_prefix('='))
        };
        let d: u64 = field("d").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let n: i64 = field("n").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        match field("kind") {
            Some("modular-sieve") => {
                let modulus = field("modulus").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                Ok(Certificate::ModularSieve { d, n, modulus })
            }
            Some("exhausted-bound") => {
                let bound = field("bound").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
                let pell = field("pell")
                    .and_then(|v| v.strip_prefix('('))
                    .and_then(|v| v.strip_suffix(')'))
                    .ok_or_else(bad)?;
                let (t, u) = pell.split_once(',').ok_or_else(bad)?;
                Ok(Certificate::ExhaustedBound {
                    d,
                    n,
                    bound,
                    t: t.parse().map_err(|_| bad())?,
                    u: u.parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

/// Nagell's bound on `y` for the fundamental solution of each class:
/// `y² ≤ u²·|n| / (2(t ± 1))`, `+` for `n > 0` and `−` for `n < 0`.
pub fn class_bound(n: i64, t: &BigInt, u: &BigInt) -> BigInt {
    let shifted = if n > 0 { t + 1 } else { t - 1 };
    let num = u * u * BigInt::from(n.unsigned_abs());
    let den = BigInt::from(2) * shifted;
    Roots::sqrt(&(num / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solvability {
    Solvable,
    Unsolvable,
}

/// Outcome of [`solve_norm_equation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormEqVerdict {
    pub d: u64,
    pub n: i64,
    pub status: Solvability,
    /// Class representatives `(x, y)` with `x ≥ 0`, `0 ≤ y ≤ search_bound`.
    /// For `n = 1` the Pell solution is appended as the generator.
    pub solutions: Vec<(BigInt, BigInt)>,
    pub search_bound: BigInt,
    pub certificate: Option<Certificate>,
}

impl NormEqVerdict {
    pub fn is_solvable(&self) -> bool {
        self.status == Solvability::Solvable
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub sieve_cap: u64,
    pub max_search: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { sieve_cap: DEFAULT_SIEVE_CAP, max_search: DEFAULT_MAX_SEARCH }
    }
}

pub fn solve_norm_equation(d: u64, n: i64) -> Result<NormEqVerdict, PellError> {
    solve_norm_equation_with(d, n, SolveOptions::default())
}

pub fn solve_norm_equation_with(d: u64, n: i64, opts: SolveOptions) -> Result<NormEqVerdict, PellError> {
    check_radicand(d)?;
    if n == 0 {
        return Err(PellError::ZeroRhs);
    }
    let (t, u) = fundamental_unit(d)?.pell_solution(d);
    let bound = class_bound(n, &t, &u);
    let limit = bound.to_u64().filter(|b| *b <= opts.max_search).ok_or_else(|| {
        PellError::SearchTooLarge { bound: bound.clone(), limit: opts.max_search }
    })?;

    let mut solutions = search_solutions(d, n, limit);
    if n == 1 && !solutions.contains(&(t.clone(), u.clone())) {
        solutions.push((t.clone(), u.clone()));
    }
    if !solutions.is_empty() {
        return Ok(NormEqVerdict {
            d,
            n,
            status: Solvability::Solvable,
            solutions,
            search_bound: bound,
            certificate: None,
        });
    }

    let certificate = (2..=opts.sieve_cap)
        .find(|&m| residue_sieve(d as i64, n, m) == SieveOutcome::Impossible)
        .map(|modulus| Certificate::ModularSieve { d, n, modulus })
        .unwrap_or_else(|| Certificate::ExhaustedBound { d, n, bound: bound.clone(), t, u });
    Ok(NormEqVerdict {
        d,
        n,
        status: Solvability::Unsolvable,
        solutions,
        search_bound: bound,
        certificate: Some(certificate),
    })
}

/// All `(x, y)` with `x ≥ 0`, `0 ≤ y ≤ limit`, `x² − d·y² = n`.
fn search_solutions(d: u64, n: i64, limit: u64) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::new();
    let fits = (limit as u128)
        .checked_mul(limit as u128)
        .and_then(|v| v.checked_mul(d as u128))
        .is_some_and(|v| v < (1u128 << 120));
    if fits {
        for y in 0..=limit as i128 {
            let rhs = n as i128 + d as i128 * y * y;
            if rhs >= 0 {
                let x = rhs.sqrt();
                if x * x == rhs {
                    out.push((BigInt::from(x), BigInt::from(y)));
                }
            }
        }
    } else {
        for y in 0..=limit {
            let y = BigInt::from(y);
            let rhs = BigInt::from(n) + BigInt::from(d) * &y * &y;
            if !rhs.is_negative() {
                let x = rhs.sqrt();
                if &x * &x == rhs {
                    out.push((x, y));
                }
            }
        }
    }
    out
}
