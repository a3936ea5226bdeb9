//! The congruence dimension group
//!
//! ```text
//! E = { ((j + k√d)/p^{s·i}, (x, y)) : x ≡ j (mod m1), y ≡ k (mod m2) } ⊂ ℝ × ℤ²
//! ```
//!
//! with positive cone `E₊ = {r > 0} ∪ {0}` and order unit `u = (1, (1, 0))`.
//! The coupling only depends on the real coordinate (and not on the chosen
//! numerator) when `p^s ≡ 1` modulo both `m1` and `m2`; [`DimGroupParams::new`]
//! enforces that.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{QuadError, QuadRat, RingParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimError {
    #[error(transparent)]
    Ring(#[from] QuadError),
    #[error("parameter {0} must be positive")]
    ZeroParameter(&'static str),
    #[error("{p}^{s} = {residue} mod {modulus}, not 1: the coupling would depend on the representation")]
    BadModulus { p: u64, s: u32, modulus: u64, residue: u64 },
    #[error("{coord}\u{2262}{numerator} mod {modulus}")]
    CongruenceViolation { coord: &'static str, numerator: &'static str, modulus: u64 },
    #[error("elements belong to different groups")]
    ParamsMismatch,
}

/// `(d, p, s, m1, m2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimGroupParams {
    ring: RingParams,
    s: u32,
    m1: u64,
    m2: u64,
}

fn pow_mod(base: u64, exp: u32, m: u64) -> u64 {
    BigInt::from(base)
        .modpow(&BigInt::from(exp), &BigInt::from(m))
        .try_into()
        .expect("residue fits")
}

impl DimGroupParams {
    pub fn new(d: u64, p: u64, s: u32, m1: u64, m2: u64) -> Result<Self, DimError> {
        let ring = RingParams::new(d, p)?;
        Self::with_ring(ring, s, m1, m2)
    }

    pub fn with_ring(ring: RingParams, s: u32, m1: u64, m2: u64) -> Result<Self, DimError> {
        let params = DimGroupParams { ring, s, m1, m2 };
        params.validate()?;
        Ok(params)
    }

    /// `(3, 5, 6, 9, 3)`.
    pub fn standard() -> Self {
        Self::new(3, 5, 6, 9, 3).expect("5^6 = 15625 = 1 mod 9")
    }

    pub fn validate(&self) -> Result<(), DimError> {
        if self.s == 0 {
            return Err(DimError::ZeroParameter("s"));
        }
        if self.m1 == 0 {
            return Err(DimError::ZeroParameter("m1"));
        }
        if self.m2 == 0 {
            return Err(DimError::ZeroParameter("m2"));
        }
        // p^s ≡ 1 (mod m) already forces gcd(p, m) = 1.
        for m in [self.m1, self.m2] {
            let residue = pow_mod(self.ring.p(), self.s, m);
            if residue != 1 % m {
                return Err(DimError::BadModulus { p: self.ring.p(), s: self.s, modulus: m, residue });
            }
        }
        Ok(())
    }

    pub fn ring(&self) -> RingParams {
        self.ring
    }

    pub fn d(&self) -> u64 {
        self.ring.d()
    }

    pub fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn m1(&self) -> u64 {
        self.m1
    }

    pub fn m2(&self) -> u64 {
        self.m2
    }

    /// `lcm(m1, m2)`, the natural modulus for residue computations.
    pub fn base_modulus(&self) -> u64 {
        self.m1.lcm(&self.m2)
    }

    /// Numerators `(i, j, k)` of `r = (j + k√d)/p^{s·i}` with `i` minimal.
    pub fn step_form(&self, r: &QuadRat) -> (u32, BigInt, BigInt) {
        assert_eq!(r.ring(), self.ring, "real coordinate from another ring");
        let i = r.e().div_ceil(self.s);
        let scale: BigInt = Pow::pow(&BigInt::from(self.p()), self.s * i - r.e());
        (i, r.j() * &scale, r.k() * &scale)
    }

    /// The residues `(j mod m1, k mod m2)` every vector coupled to `r` must match.
    pub fn coupling(&self, r: &QuadRat) -> (u64, u64) {
        let (_, j, k) = self.step_form(r);
        (residue(&j, self.m1), residue(&k, self.m2))
    }
}

impl fmt::Display for DimGroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E[{},{},{},{},{}]", self.d(), self.p(), self.s, self.m1, self.m2)
    }
}

pub(crate) fn residue(v: &BigInt, m: u64) -> u64 {
    let r = v.mod_floor(&BigInt::from(m));
    r.try_into().expect("residue fits")
}

/// An element `((j + k√d)/p^{s·i}, (x, y))` of `E` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimElem {
    params: DimGroupParams,
    i: u32,
    j: BigInt,
    k: BigInt,
    x: BigInt,
    y: BigInt,
}

impl DimElem {
    /// Builds the element from raw numerators; `i` may be negative.
    pub fn new(
        params: DimGroupParams,
        i: i64,
        j: impl Into<BigInt>,
        k: impl Into<BigInt>,
        x: impl Into<BigInt>,
        y: impl Into<BigInt>,
    ) -> Result<DimElem, DimError> {
        let (j, k, x, y) = (j.into(), k.into(), x.into(), y.into());
        let (m1, m2) = (BigInt::from(params.m1), BigInt::from(params.m2));
        // The congruence is checked on the numerators as given; rescaling
        // by p^s does not change it.
        if !(&x - &j).is_multiple_of(&m1) {
            return Err(DimError::CongruenceViolation { coord: "x", numerator: "j", modulus: params.m1 });
        }
        if !(&y - &k).is_multiple_of(&m2) {
            return Err(DimError::CongruenceViolation { coord: "y", numerator: "k", modulus: params.m2 });
        }
        let r = QuadRat::new(params.ring, j, k, params.s as i64 * i);
        Ok(Self::from_parts_unchecked(params, &r, x, y))
    }

    /// Couples a real coordinate with a vector, checking membership.
    pub fn from_parts(params: DimGroupParams, r: &QuadRat, x: BigInt, y: BigInt) -> Result<DimElem, DimError> {
        let (cj, ck) = params.coupling(r);
        if residue(&x, params.m1) != cj {
            return Err(DimError::CongruenceViolation { coord: "x", numerator: "j", modulus: params.m1 });
        }
        if residue(&y, params.m2) != ck {
            return Err(DimError::CongruenceViolation { coord: "y", numerator: "k", modulus: params.m2 });
        }
        Ok(Self::from_parts_unchecked(params, r, x, y))
    }

    fn from_parts_unchecked(params: DimGroupParams, r: &QuadRat, x: BigInt, y: BigInt) -> DimElem {
        let (i, j, k) = params.step_form(r);
        DimElem { params, i, j, k, x, y }
    }

    pub fn zero(params: DimGroupParams) -> DimElem {
        DimElem {
            params,
            i: 0,
            j: BigInt::zero(),
            k: BigInt::zero(),
            x: BigInt::zero(),
            y: BigInt::zero(),
        }
    }

    /// `u = (1, (1, 0))`.
    pub fn order_unit(params: DimGroupParams) -> DimElem {
        DimElem { params, i: 0, j: BigInt::one(), k: BigInt::zero(), x: BigInt::one(), y: BigInt::zero() }
    }

    pub fn params(&self) -> DimGroupParams {
        self.params
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn j(&self) -> &BigInt {
        &self.j
    }

    pub fn k(&self) -> &BigInt {
        &self.k
    }

    pub fn x(&self) -> &BigInt {
        &self.x
    }

    pub fn y(&self) -> &BigInt {
        &self.y
    }

    /// The real coordinate, i.e. the value of the trace state.
    pub fn trace_state(&self) -> QuadRat {
        QuadRat::new(self.params.ring, self.j.clone(), self.k.clone(), (self.params.s * self.i) as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.j.is_zero() && self.k.is_zero() && self.x.is_zero() && self.y.is_zero()
    }

    /// Membership in `E₊`.
    pub fn is_positive(&self) -> bool {
        self.trace_state().is_positive() || self.is_zero()
    }

    /// `self ≤ other` in the order of `E`.
    pub fn le(&self, other: &DimElem) -> bool {
        (other - self).is_positive()
    }

    pub fn scale(&self, n: i64) -> DimElem {
        let r = &self.trace_state() * &QuadRat::from_int(self.params.ring, n);
        Self::from_parts_unchecked(self.params, &r, &self.x * n, &self.y * n)
    }

    /// Smallest `n ≥ 0` with `n·u − self ∈ E₊`.
    pub fn dominating_multiple(&self) -> BigInt {
        let floor = self.trace_state().floor().max(BigInt::zero());
        // n = ⌊r⌋ only works when n·u − self is exactly zero.
        let nu = DimElem::from_parts(
            self.params,
            &QuadRat::from_int(self.params.ring, floor.clone()),
            floor.clone(),
            BigInt::zero(),
        )
        .expect("multiples of u lie in E");
        if (&nu - self).is_positive() {
            floor
        } else {
            floor + 1
        }
    }

    fn checked_params(&self, other: &DimElem) {
        assert_eq!(self.params, other.params, "{}", DimError::ParamsMismatch);
    }
}

impl fmt::Display for DimElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.k.is_negative() { '-' } else { '+' };
        write!(
            f,
            "{}: (({}{}{}*sqrt({}))/{}^({}*{}), [{}, {}])",
            self.params,
            self.j,
            op,
            self.k.abs(),
            self.params.d(),
            self.params.p(),
            self.params.s,
            self.i,
            self.x,
            self.y
        )
    }
}

impl<'a> std::ops::Add<&'a DimElem> for &'a DimElem {
    type Output = DimElem;
    fn add(self, rhs: &'a DimElem) -> DimElem {
        self.checked_params(rhs);
        let r = &self.trace_state() + &rhs.trace_state();
        DimElem::from_parts(self.params, &r, &self.x + &rhs.x, &self.y + &rhs.y)
            .expect("E is closed under addition")
    }
}

impl<'a> std::ops::Sub<&'a DimElem> for &'a DimElem {
    type Output = DimElem;
    fn sub(self, rhs: &'a DimElem) -> DimElem {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &DimElem {
    type Output = DimElem;
    fn neg(self) -> DimElem {
        DimElem {
            params: self.params,
            i: self.i,
            j: -&self.j,
            k: -&self.k,
            x: -&self.x,
            y: -&self.y,
        }
    }
}

/// Finds `c` with `a ≤ c ≤ b` for every `a` in `lower` and `b` in `upper`
/// (Riesz interpolation), or `None` when some `a ≤ b` fails.
pub fn interpolate(lower: &[DimElem], upper: &[DimElem]) -> Option<DimElem> {
    let first = lower.first().or(upper.first())?;
    let params = first.params;
    for a in lower {
        for b in upper {
            if !a.le(b) {
                return None;
            }
        }
    }
    if upper.is_empty() {
        let top = lower.iter().map(|a| a.dominating_multiple()).max()?;
        let c = DimElem::order_unit(params).scale(top.try_into().ok()?);
        return lower.iter().all(|a| a.le(&c)).then_some(c);
    }
    if lower.is_empty() {
        let c = -&interpolate(&upper.iter().map(|b| -b).collect::<Vec<_>>(), &[])?;
        return Some(c);
    }
    // An element shared by both sides is forced.
    for a in lower {
        if upper.contains(a) {
            let ok = lower.iter().all(|x| x.le(a)) && upper.iter().all(|b| a.le(b));
            return ok.then(|| a.clone());
        }
    }
    // Otherwise every a < b strictly in the real coordinate: pick a p-adic
    // rational strictly between max r(a) and min r(b).
    let lo = lower.iter().map(|a| a.trace_state()).max()?;
    let hi = upper.iter().map(|b| b.trace_state()).min()?;
    for t in 0..64i64 {
        let den = QuadRat::new(params.ring, 1, 0, params.s as i64 * t);
        let scaled = &lo * &QuadRat::new(params.ring, 1, 0, -(params.s as i64) * t);
        let n: BigInt = scaled.floor() + 1;
        let r = &QuadRat::from_int(params.ring, n.clone()) * &den;
        if r < hi {
            let c = DimElem::new(params, t, n.clone(), 0, n, 0).ok()?;
            let ok = lower.iter().all(|a| a.le(&c)) && upper.iter().all(|b| c.le(b));
            return ok.then_some(c);
        }
    }
    None
}
