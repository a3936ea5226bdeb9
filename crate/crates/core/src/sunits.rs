//! Positive units of `R = Z[1/p] + Z[1/p]√d`.
//!
//! For a ring value group the positive inner multiplier group is exactly the
//! group of positive units of `R`. Its structure is read off from how `p`
//! factors:
//!
//! * inert: `⟨p, η⟩`
//! * ramified: `⟨π, η⟩` when the prime over `p` is principal, else `⟨p, η⟩`
//! * split: `⟨p, π, η⟩` where `π` generates the smallest principal power
//!   `𝔭^h` of one prime over `p`
//!
//! Here `η > 1` is the fundamental unit of `R ∩ O_K`. That order is
//! `Z[√d]`, except for `p = 2`, `d ≡ 1 (mod 4)` where inverting 2 brings in
//! `Z[(1+√d)/2]`.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pell::{self, Certificate, PellError};
use crate::quad::{QuadRat, RingParams};

/// Upper limit on the order of the prime class searched in the split case.
pub const MAX_CLASS_ORDER: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SUnitError {
    #[error(transparent)]
    Pell(#[from] PellError),
    #[error("no principal power of a prime over {p} found up to exponent {limit}")]
    ClassOrderExceeded { p: u64, limit: u32 },
    #[error("internal contract violation: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplittingKind {
    Inert,
    Split,
    Ramified,
}

impl fmt::Display for SplittingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplittingKind::Inert => "inert",
            SplittingKind::Split => "split",
            SplittingKind::Ramified => "ramified",
        })
    }
}

/// How `p` factors, with evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplittingType {
    pub kind: SplittingKind,
    /// Generator of `𝔭^h` for split or ramified primes; its norm is `±p^h`.
    pub witness: Option<QuadRat>,
    /// The exponent `h` (1 when the prime itself is principal).
    pub class_order: u32,
    /// For inert primes: unsolvability certificates for `n = p` and `n = −p`.
    pub certificates: Vec<Certificate>,
}

/// The order `R ∩ O_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Order {
    ring: RingParams,
    half_integral: bool,
}

impl Order {
    fn of(ring: RingParams) -> Self {
        Order { ring, half_integral: ring.p() == 2 && ring.d() % 4 == 1 }
    }

    fn contains(&self, x: &QuadRat) -> bool {
        match x.e() {
            0 => true,
            1 if self.half_integral => x.j().is_odd() && x.k().is_odd(),
            _ => false,
        }
    }

    fn divisible_by_p(&self, x: &QuadRat) -> bool {
        let inv_p = QuadRat::new(self.ring, 1, 0, 1);
        self.contains(&(x * &inv_p))
    }

    /// Denominator `c` in the norm form `x² − d·y² = c²·n` for elements `(x + y√d)/c`.
    fn scale(&self) -> i64 {
        if self.half_integral {
            2
        } else {
            1
        }
    }

    /// Fundamental unit `η > 1` of the order.
    fn fundamental_unit(&self) -> Result<QuadRat, SUnitError> {
        let d = self.ring.d();
        let fu = pell::fundamental_unit(d)?;
        let eps = QuadRat::new(self.ring, fu.x.clone(), fu.y.clone(), 0);
        if !self.half_integral {
            return Ok(eps);
        }
        // ε is η or η³. With t = trace(η), N = norm(η): trace(η³) = t³ − 3Nt.
        let n = BigInt::from(fu.norm_sign);
        let target = BigInt::from(2) * &fu.x;
        let t0: BigInt = target.cbrt();
        for dt in -1i64..=2 {
            let t = &t0 + dt;
            if !t.is_positive() || &t * &t * &t - BigInt::from(3) * &n * &t != target {
                continue;
            }
            let den = &t * &t - &n;
            if den.is_zero() {
                continue;
            }
            let two_y = BigInt::from(2) * &fu.y;
            if !(&two_y % &den).is_zero() {
                continue;
            }
            let b = two_y / &den;
            if &t * &t - BigInt::from(d) * &b * &b == BigInt::from(4) * &n {
                let eta = QuadRat::new(self.ring, t, b, 1);
                debug_assert_eq!(eta.pow(3).unwrap(), eps);
                return Ok(eta);
            }
        }
        Ok(eps)
    }

    /// Elements of the order with norm `±p^h` not divisible by `p`.
    fn prime_elements(&self, h: u32) -> Result<Vec<QuadRat>, SUnitError> {
        let c = self.scale();
        let ph = (self.ring.p() as i64)
            .checked_pow(h)
            .and_then(|v| v.checked_mul(c * c))
            .ok_or(SUnitError::ClassOrderExceeded { p: self.ring.p(), limit: h })?;
        let mut out = Vec::new();
        for n in [ph, -ph] {
            let verdict = pell::solve_norm_equation(self.ring.d(), n)?;
            for (x, y) in verdict.solutions {
                for x in [x.clone(), -x] {
                    let alpha = QuadRat::new(self.ring, x, y.clone(), c / 2);
                    if self.contains(&alpha) && !self.divisible_by_p(&alpha) {
                        out.push(positive_associate(&alpha));
                    }
                }
            }
        }
        out.sort_by_key(tie_break);
        out.dedup();
        Ok(out)
    }
}

fn positive_associate(x: &QuadRat) -> QuadRat {
    if x.sign() == Sign::Minus {
        -x
    } else {
        x.clone()
    }
}

/// Height `(e, |j|+|k|)`, then nonnegative coordinates first, then `(j, k)`.
fn tie_break(x: &QuadRat) -> (u32, BigInt, bool, bool, BigInt, BigInt) {
    let (e, h) = x.height();
    (e, h, x.j().is_negative(), x.k().is_negative(), x.j().clone(), x.k().clone())
}

/// Multiplies by `η^{±1}` while that lowers the height.
fn reduce_height(x: &QuadRat, eta: &QuadRat) -> QuadRat {
    let eta_inv = eta.invert().expect("η is a unit");
    let mut cur = positive_associate(x);
    loop {
        let best = [&cur * eta, &cur * &eta_inv]
            .into_iter()
            .map(|c| positive_associate(&c))
            .min_by(|a, b| tie_break(a).cmp(&tie_break(b)))
            .expect("two candidates");
        if tie_break(&best) < tie_break(&cur) {
            cur = best;
        } else {
            return cur;
        }
    }
}

fn legendre_kind(ring: RingParams) -> SplittingKind {
    let (d, p) = (ring.d(), ring.p());
    if p == 2 {
        return match d % 8 {
            1 => SplittingKind::Split,
            5 => SplittingKind::Inert,
            _ => SplittingKind::Ramified,
        };
    }
    let r = BigInt::from(d).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p));
    if r.is_one() {
        SplittingKind::Split
    } else {
        SplittingKind::Inert
    }
}

pub fn splitting_type(ring: RingParams) -> Result<SplittingType, SUnitError> {
    let order = Order::of(ring);
    let eta = order.fundamental_unit()?;
    let p = ring.p() as i64;
    match legendre_kind(ring) {
        SplittingKind::Inert => {
            let mut certificates = Vec::new();
            for n in [p, -p] {
                let v = pell::solve_norm_equation(ring.d(), n)?;
                let cert = v.certificate.ok_or_else(|| {
                    SUnitError::Contract(format!("inert prime {p} but x^2-{}y^2={n} solvable", ring.d()))
                })?;
                certificates.push(cert);
            }
            Ok(SplittingType { kind: SplittingKind::Inert, witness: None, class_order: 0, certificates })
        }
        SplittingKind::Ramified => {
            let found = order.prime_elements(1)?.into_iter().next();
            let (witness, class_order) = match found {
                Some(pi) => (reduce_height(&pi, &eta), 1),
                None => (QuadRat::from_int(ring, p), 2),
            };
            Ok(SplittingType {
                kind: SplittingKind::Ramified,
                witness: Some(witness),
                class_order,
                certificates: Vec::new(),
            })
        }
        SplittingKind::Split => {
            for h in 1..=MAX_CLASS_ORDER {
                if let Some(pi) = order.prime_elements(h)?.into_iter().next() {
                    return Ok(SplittingType {
                        kind: SplittingKind::Split,
                        witness: Some(reduce_height(&pi, &eta)),
                        class_order: h,
                        certificates: Vec::new(),
                    });
                }
            }
            Err(SUnitError::ClassOrderExceeded { p: ring.p(), limit: MAX_CLASS_ORDER })
        }
    }
}

/// The group of positive units of the ring, with an exact membership test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositiveUnitGroup {
    ring: RingParams,
    splitting: SplittingType,
    generators: Vec<QuadRat>,
    eta: QuadRat,
}

#[derive(Serialize)]
struct GroupRecord<'a> {
    rank: usize,
    generators: &'a [QuadRat],
}

impl Serialize for PositiveUnitGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GroupRecord { rank: self.rank(), generators: &self.generators }.serialize(s)
    }
}

pub fn positive_unit_generators(ring: RingParams) -> Result<PositiveUnitGroup, SUnitError> {
    let splitting = splitting_type(ring)?;
    let eta = Order::of(ring).fundamental_unit()?;
    let p = QuadRat::from_int(ring, ring.p());
    let mut generators = match (&splitting.kind, &splitting.witness) {
        (SplittingKind::Inert, _) => vec![p],
        (SplittingKind::Ramified, Some(w)) => vec![w.clone()],
        (SplittingKind::Split, Some(w)) => vec![p, w.clone()],
        _ => unreachable!("split and ramified verdicts carry witnesses"),
    };
    generators.push(eta.clone());
    for g in &generators {
        if !g.is_positive() || g.invert().is_err() {
            return Err(SUnitError::Contract(format!("generator {g} is not a positive unit")));
        }
    }
    Ok(PositiveUnitGroup { ring, splitting, generators, eta })
}

impl PositiveUnitGroup {
    pub fn ring(&self) -> RingParams {
        self.ring
    }

    pub fn generators(&self) -> &[QuadRat] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn splitting(&self) -> &SplittingType {
        &self.splitting
    }

    /// The fundamental unit `η`, always the last generator.
    pub fn fundamental_unit(&self) -> &QuadRat {
        &self.eta
    }

    /// `∏ gᵢ^{eᵢ}`.
    pub fn element(&self, exponents: &[i64]) -> QuadRat {
        assert_eq!(exponents.len(), self.rank());
        self.generators
            .iter()
            .zip(exponents)
            .fold(QuadRat::one(self.ring), |acc, (g, &e)| &acc * &g.pow(e).expect("generators are units"))
    }

    /// Exponent vector of `x` over the generators, or `None` when `x` is not
    /// in the group. Splits off the `p`-adic part by valuations, then
    /// walks the remaining unit down to 1 by dividing by `η`.
    pub fn exponents(&self, x: &QuadRat) -> Option<Vec<i64>> {
        if x.ring() != self.ring || !x.is_positive() {
            return None;
        }
        let (_, m) = x.unit_norm()?;
        let order = Order::of(self.ring);
        let p = QuadRat::from_int(self.ring, self.ring.p());
        let pow = |g: &QuadRat, e: i64| g.pow(e).expect("unit");

        let candidates: Vec<(Vec<i64>, QuadRat)> = match self.splitting.kind {
            SplittingKind::Inert => {
                if m % 2 != 0 {
                    return None;
                }
                vec![(vec![m / 2], pow(&p, -m / 2))]
            }
            SplittingKind::Ramified => {
                let g = &self.generators[0];
                if self.splitting.class_order == 1 {
                    vec![(vec![m], pow(g, -m))]
                } else {
                    if m % 2 != 0 {
                        return None;
                    }
                    vec![(vec![m / 2], pow(g, -m / 2))]
                }
            }
            SplittingKind::Split => {
                let h = self.splitting.class_order as i64;
                let pi = &self.generators[1];
                // Shift into the order, count factors of p there.
                let shift = x.e() as i64 + 1;
                let mut y = x * &pow(&p, shift);
                let mut t = -shift;
                while order.divisible_by_p(&y) {
                    y = &y * &pow(&p, -1);
                    t += 1;
                }
                let mut out = Vec::new();
                for (a_val, b_val) in [(t, m - t), (m - t, t)] {
                    if (a_val - b_val) % h != 0 {
                        continue;
                    }
                    let a = (a_val - b_val) / h;
                    let b = b_val;
                    out.push((vec![b, a], &pow(&p, -b) * &pow(pi, -a)));
                }
                out
            }
        };

        for (mut exps, rest) in candidates {
            let rest = &rest * x;
            if !order.contains(&rest) {
                continue;
            }
            if let Some(k) = eta_exponent(&rest, &self.eta) {
                exps.push(k);
                return Some(exps);
            }
        }
        None
    }

    pub fn contains(&self, x: &QuadRat) -> bool {
        self.exponents(x).is_some()
    }

    /// True when the products over the box `|eᵢ| ≤ bound` are pairwise distinct.
    pub fn independent_in_box(&self, bound: i64) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut exps = vec![-bound; self.rank()];
        loop {
            if !seen.insert(self.element(&exps)) {
                return false;
            }
            let mut i = 0;
            loop {
                if i == exps.len() {
                    return true;
                }
                if exps[i] < bound {
                    exps[i] += 1;
                    break;
                }
                exps[i] = -bound;
                i += 1;
            }
        }
    }
}

impl fmt::Display for PositiveUnitGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "rank={} generators=[{}]", self.rank(), gens.join(", "))
    }
}

/// `k` with `w = η^k`, for positive `w`.
fn eta_exponent(w: &QuadRat, eta: &QuadRat) -> Option<i64> {
    let one = QuadRat::one(w.ring());
    let eta_inv = eta.invert().ok()?;
    let mut w = w.clone();
    let mut k = 0i64;
    // Each step moves |log w| toward 0 by log η.
    for _ in 0..100_000 {
        if w.is_one() {
            return Some(k);
        }
        if w > one {
            if &w < eta {
                return None;
            }
            w = &w * &eta_inv;
            k += 1;
        } else {
            w = &w * eta;
            k -= 1;
        }
    }
    None
}

/// Small helper for printing exponent vectors.
pub fn format_exponents(exps: &[i64]) -> String {
    let parts: Vec<String> = exps.iter().map(|e| e.to_string()).collect();
    format!("({})", parts.join(","))
}
