//! Exact arithmetic in the ring `Z[1/p] + Z[1/p]√d`.
//!
//! Every element is stored as a triple `(j, k, e)` standing for
//! `(j + k√d) / p^e`. The triple is kept canonical: `e ≥ 0`, and when
//! `e > 0` the prime `p` does not divide both `j` and `k`. Structural
//! equality is therefore value equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::{Integer, Roots};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadError {
    #[error("radicand {0} must be at least 2")]
    RadicandTooSmall(u64),
    #[error("radicand {0} is a perfect square")]
    PerfectSquare(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {p} divides the radicand {d}")]
    RamifiedBase { d: u64, p: u64 },
    #[error("{0} is not a unit: its norm is not ± a power of p")]
    NotAUnit(String),
    #[error("cannot parse quadratic element `{0}`")]
    Parse(String),
}

/// Trial-division primality; the primes used here are tiny.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut f = 3u64;
    while f.saturating_mul(f) <= n {
        if n.is_multiple_of(f) {
            return false;
        }
        f += 2;
    }
    true
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = n.sqrt();
    r * r == n
}

/// The pair `(d, p)` fixing the ring `Z[1/p] + Z[1/p]√d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RingParams {
    d: u64,
    p: u64,
}

impl RingParams {
    pub fn new(d: u64, p: u64) -> Result<Self, QuadError> {
        if d < 2 {
            return Err(QuadError::RadicandTooSmall(d));
        }
        if is_perfect_square(d) {
            return Err(QuadError::PerfectSquare(d));
        }
        if !is_prime(p) {
            return Err(QuadError::NotPrime(p));
        }
        if d.is_multiple_of(p) {
            return Err(QuadError::RamifiedBase { d, p });
        }
        Ok(RingParams { d, p })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn p(&self) -> u64 {
        self.p
    }
}

impl fmt::Display for RingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z[1/{p}]+Z[1/{p}]sqrt({d})", p = self.p, d = self.d)
    }
}

/// An exact element `(j + k√d) / p^e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadRat {
    ring: RingParams,
    j: BigInt,
    k: BigInt,
    e: u32,
}

impl QuadRat {
    /// Canonical representative of `(j + k√d) / p^e`; a negative `e`
    /// folds `p^{-e}` into the numerator.
    pub fn new(ring: RingParams, j: impl Into<BigInt>, k: impl Into<BigInt>, e: i64) -> Self {
        let mut j = j.into();
        let mut k = k.into();
        let p = BigInt::from(ring.p);
        let mut e = e;
        if e < 0 {
            let scale = Pow::pow(&p, (-e) as u64);
            j *= &scale;
            k *= &scale;
            e = 0;
        }
        if j.is_zero() && k.is_zero() {
            e = 0;
        }
        while e > 0 && j.is_multiple_of(&p) && k.is_multiple_of(&p) {
            j /= &p;
            k /= &p;
            e -= 1;
        }
        QuadRat { ring, j, k, e: e as u32 }
    }

    pub fn zero(ring: RingParams) -> Self {
        QuadRat { ring, j: BigInt::zero(), k: BigInt::zero(), e: 0 }
    }

    pub fn one(ring: RingParams) -> Self {
        Self::from_int(ring, 1)
    }

    pub fn from_int(ring: RingParams, n: impl Into<BigInt>) -> Self {
        QuadRat { ring, j: n.into(), k: BigInt::zero(), e: 0 }
    }

    /// The element `√d`.
    pub fn sqrt_d(ring: RingParams) -> Self {
        QuadRat { ring, j: BigInt::zero(), k: BigInt::one(), e: 0 }
    }

    pub fn ring(&self) -> RingParams {
        self.ring
    }

    pub fn j(&self) -> &BigInt {
        &self.j
    }

    pub fn k(&self) -> &BigInt {
        &self.k
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn is_zero(&self) -> bool {
        self.j.is_zero() && self.k.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.e == 0 && self.j.is_one() && self.k.is_zero()
    }

    /// True when the element lies in `Z + Z√d`.
    pub fn is_integral(&self) -> bool {
        self.e == 0
    }

    fn check_ring(&self, other: &QuadRat) {
        assert_eq!(self.ring, other.ring, "mixing elements of different rings");
    }

    pub fn conjugate(&self) -> QuadRat {
        QuadRat { ring: self.ring, j: self.j.clone(), k: -&self.k, e: self.e }
    }

    /// Numerator of the norm: `j² − d·k²`. The norm is this value over `p^{2e}`.
    pub fn norm_numerator(&self) -> BigInt {
        &self.j * &self.j - BigInt::from(self.ring.d) * &self.k * &self.k
    }

    /// `x · conjugate(x)`, always rational.
    pub fn norm(&self) -> QuadRat {
        QuadRat::new(self.ring, self.norm_numerator(), 0, 2 * self.e as i64)
    }

    /// Trace `x + conjugate(x)`.
    pub fn trace(&self) -> QuadRat {
        QuadRat::new(self.ring, &self.j * 2, 0, self.e as i64)
    }

    /// If the norm is `±p^m` returns `(sign, m)`.
    pub fn unit_norm(&self) -> Option<(Sign, i64)> {
        let mut n = self.norm_numerator();
        if n.is_zero() {
            return None;
        }
        let sign = n.sign();
        n = n.abs();
        let p = BigInt::from(self.ring.p);
        let mut m: i64 = 0;
        while n.is_multiple_of(&p) {
            n /= &p;
            m += 1;
        }
        if n.is_one() {
            Some((sign, m - 2 * self.e as i64))
        } else {
            None
        }
    }

    pub fn is_unit(&self) -> bool {
        self.unit_norm().is_some()
    }

    /// Multiplicative inverse inside the ring.
    pub fn invert(&self) -> Result<QuadRat, QuadError> {
        let (sign, m) = self.unit_norm().ok_or_else(|| QuadError::NotAUnit(self.to_string()))?;
        // x⁻¹ = conj(x) / N(x), N(x) = ±p^m.
        let conj = self.conjugate();
        let (j, k) = match sign {
            Sign::Minus => (-conj.j, -conj.k),
            _ => (conj.j, conj.k),
        };
        Ok(QuadRat::new(self.ring, j, k, conj.e as i64 + m))
    }

    /// Integer power; negative exponents require a unit.
    pub fn pow(&self, exp: i64) -> Result<QuadRat, QuadError> {
        let base = if exp < 0 { self.invert()? } else { self.clone() };
        let mut n = exp.unsigned_abs();
        let mut acc = QuadRat::one(self.ring);
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &sq;
            }
            n >>= 1;
            if n > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Exact sign of the real number `(j + k√d) / p^e`.
    pub fn sign(&self) -> Sign {
        surd_sign(&self.j, &self.k, self.ring.d)
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Sign::Plus
    }

    /// Exact `⌊x⌋`.
    pub fn floor(&self) -> BigInt {
        let den = Pow::pow(&BigInt::from(self.ring.p), self.e);
        let surd_floor = if self.k.is_zero() {
            BigInt::zero()
        } else {
            let r = (BigInt::from(self.ring.d) * &self.k * &self.k).sqrt();
            // d·k² is never a square, so k√d is strictly between integers.
            if self.k.is_negative() {
                -r - 1
            } else {
                r
            }
        };
        (&self.j + surd_floor).div_floor(&den)
    }

    /// Size used for deterministic tie-breaking: `(e, |j| + |k|)`.
    pub fn height(&self) -> (u32, BigInt) {
        (self.e, self.j.abs() + self.k.abs())
    }

    /// Floating-point approximation, for display only.
    pub fn approx(&self) -> f64 {
        let j = self.j.to_f64().unwrap_or(f64::NAN);
        let k = self.k.to_f64().unwrap_or(f64::NAN);
        (j + k * (self.ring.d as f64).sqrt()) / (self.ring.p as f64).powi(self.e as i32)
    }

    /// Short human form such as `2+sqrt(3)` or `(1-2*sqrt(3))/5^2`.
    pub fn pretty(&self) -> String {
        let d = self.ring.d;
        let surd = |k: &BigInt| -> String {
            if k.abs().is_one() {
                format!("sqrt({d})")
            } else {
                format!("{}*sqrt({d})", k.abs())
            }
        };
        let num = match (self.j.is_zero(), self.k.is_zero()) {
            (_, true) => self.j.to_string(),
            (true, false) => {
                let s = surd(&self.k);
                if self.k.is_negative() {
                    format!("-{s}")
                } else {
                    s
                }
            }
            (false, false) => {
                let op = if self.k.is_negative() { '-' } else { '+' };
                format!("{}{}{}", self.j, op, surd(&self.k))
            }
        };
        match self.e {
            0 => num,
            1 => format!("({num})/{}", self.ring.p),
            e => format!("({num})/{}^{}", self.ring.p, e),
        }
    }

    /// Parses the canonical grammar `(j+k*sqrt(d))/p^e`.
    pub fn parse_canonical(s: &str) -> Result<QuadRat, QuadError> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| {
            Regex::new(r"^\((-?\d+)([+-])(\d+)\*sqrt\((\d+)\)\)/(\d+)\^(\d+)$").unwrap()
        });
        let bad = || QuadError::Parse(s.to_string());
        let caps = re.captures(s.trim()).ok_or_else(bad)?;
        let j: BigInt = caps[1].parse().map_err(|_| bad())?;
        let mut k: BigInt = caps[3].parse().map_err(|_| bad())?;
        if &caps[2] == "-" {
            k = -k;
        }
        let d: u64 = caps[4].parse().map_err(|_| bad())?;
        let p: u64 = caps[5].parse().map_err(|_| bad())?;
        let e: i64 = caps[6].parse().map_err(|_| bad())?;
        let ring = RingParams::new(d, p)?;
        Ok(QuadRat::new(ring, j, k, e))
    }

    /// Parses either the canonical grammar or the short forms accepted on
    /// the command line: `5`, `2+sqrt3`, `2-sqrt(3)`, `-1+2*sqrt3`,
    /// `(1+sqrt3)/5`, `1/25`. A radicand written inside the string must
    /// match `ring`; denominators must be powers of `p`.
    pub fn parse_in(ring: RingParams, s: &str) -> Result<QuadRat, QuadError> {
        let s = s.trim();
        if let Ok(x) = Self::parse_canonical(s) {
            if x.ring != ring {
                return Err(QuadError::Parse(format!("{s} (ring mismatch with {ring})")));
            }
            return Ok(x);
        }
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| {
            Regex::new(
                r"(?x)^
                \(?\s*
                (?P<j>[+-]?\d+)?\s*
                (?:(?P<ks>[+-])?\s*(?P<k>\d+)?\s*\*?\s*sqrt\s*\(?\s*(?P<d>\d+)\s*\)?)?
                \s*\)?
                (?:\s*/\s*(?P<den>\d+)(?:\s*\^\s*(?P<exp>\d+))?)?
                $",
            )
            .unwrap()
        });
        let bad = || QuadError::Parse(s.to_string());
        let caps = re.captures(s).ok_or_else(bad)?;
        if caps.name("j").is_none() && caps.name("d").is_none() {
            return Err(bad());
        }
        let j: BigInt = match caps.name("j") {
            Some(m) => m.as_str().trim_start_matches('+').parse().map_err(|_| bad())?,
            None => BigInt::zero(),
        };
        let k: BigInt = if let Some(dm) = caps.name("d") {
            let d: u64 = dm.as_str().parse().map_err(|_| bad())?;
            if d != ring.d {
                return Err(QuadError::Parse(format!("{s} (radicand {d} but ring uses {})", ring.d)));
            }
            if caps.name("j").is_some() && caps.name("ks").is_none() {
                return Err(bad());
            }
            let mag: BigInt = match caps.name("k") {
                Some(m) => m.as_str().parse().map_err(|_| bad())?,
                None => BigInt::one(),
            };
            match caps.name("ks").map(|m| m.as_str()) {
                Some("-") => -mag,
                _ => mag,
            }
        } else {
            BigInt::zero()
        };
        let e: i64 = match (caps.name("den"), caps.name("exp")) {
            (None, _) => 0,
            (Some(den), Some(exp)) => {
                let den: u64 = den.as_str().parse().map_err(|_| bad())?;
                if den != ring.p {
                    return Err(QuadError::Parse(format!("{s} (denominator base must be {})", ring.p)));
                }
                exp.as_str().parse().map_err(|_| bad())?
            }
            (Some(den), None) => {
                let mut den: u64 = den.as_str().parse().map_err(|_| bad())?;
                let mut e = 0;
                while den > 1 && den.is_multiple_of(ring.p) {
                    den /= ring.p;
                    e += 1;
                }
                if den != 1 {
                    return Err(QuadError::Parse(format!("{s} (denominator is not a power of {})", ring.p)));
                }
                e
            }
        };
        Ok(QuadRat::new(ring, j, k, e))
    }
}

/// Sign of `j + k√d` from integer comparisons of `j²` and `d·k²`.
pub(crate) fn surd_sign(j: &BigInt, k: &BigInt, d: u64) -> Sign {
    match (j.sign(), k.sign()) {
        (Sign::NoSign, s) | (s, Sign::NoSign) => s,
        (a, b) if a == b => a,
        (js, _) => {
            let jj = j * j;
            let dkk = BigInt::from(d) * k * k;
            match jj.cmp(&dkk) {
                Ordering::Greater => js,
                Ordering::Less => -js,
                Ordering::Equal => Sign::NoSign,
            }
        }
    }
}

impl fmt::Display for QuadRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.k.is_negative() { '-' } else { '+' };
        write!(
            f,
            "({}{}{}*sqrt({}))/{}^{}",
            self.j,
            op,
            self.k.abs(),
            self.ring.d,
            self.ring.p,
            self.e
        )
    }
}

impl Serialize for QuadRat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuadRat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        QuadRat::parse_canonical(&s).map_err(serde::de::Error::custom)
    }
}

impl PartialOrd for QuadRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by ring first, then by real value.
impl Ord for QuadRat {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ring.cmp(&other.ring).then_with(|| match (self - other).sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        })
    }
}

fn aligned(x: &QuadRat, y: &QuadRat) -> (BigInt, BigInt, BigInt, BigInt, u32) {
    let p = BigInt::from(x.ring.p);
    let e = x.e.max(y.e);
    let sx = Pow::pow(&p, e - x.e);
    let sy = Pow::pow(&p, e - y.e);
    (&x.j * &sx, &x.k * &sx, &y.j * &sy, &y.k * &sy, e)
}

impl<'a> Add<&'a QuadRat> for &'a QuadRat {
    type Output = QuadRat;
    fn add(self, rhs: &'a QuadRat) -> QuadRat {
        self.check_ring(rhs);
        let (xj, xk, yj, yk, e) = aligned(self, rhs);
        QuadRat::new(self.ring, xj + yj, xk + yk, e as i64)
    }
}

impl<'a> Sub<&'a QuadRat> for &'a QuadRat {
    type Output = QuadRat;
    fn sub(self, rhs: &'a QuadRat) -> QuadRat {
        self.check_ring(rhs);
        let (xj, xk, yj, yk, e) = aligned(self, rhs);
        QuadRat::new(self.ring, xj - yj, xk - yk, e as i64)
    }
}

impl<'a> Mul<&'a QuadRat> for &'a QuadRat {
    type Output = QuadRat;
    fn mul(self, rhs: &'a QuadRat) -> QuadRat {
        self.check_ring(rhs);
        let d = BigInt::from(self.ring.d);
        let j = &self.j * &rhs.j + d * &self.k * &rhs.k;
        let k = &self.j * &rhs.k + &self.k * &rhs.j;
        QuadRat::new(self.ring, j, k, (self.e + rhs.e) as i64)
    }
}

impl Neg for &QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        QuadRat { ring: self.ring, j: -&self.j, k: -&self.k, e: self.e }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<QuadRat> for QuadRat {
            type Output = QuadRat;
            fn $m(self, rhs: QuadRat) -> QuadRat {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        -&self
    }
}
