//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's solvers.

#![allow(dead_code)]

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

pub fn isqrt_exact(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let r = (v as f64).sqrt() as i128;
    (r.saturating_sub(2)..=r + 2).find(|c| *c >= 0 && c * c == v)
}

/// Some `(x, y)` with `x² − d·y² = n` and `0 ≤ y ≤ ymax`.
pub fn brute_norm_solution(d: i64, n: i64, ymax: i64) -> Option<(i128, i128)> {
    (0..=ymax as i128).find_map(|y| isqrt_exact(n as i128 + d as i128 * y * y).map(|x| (x, y)))
}

/// Smallest unit `x + y√d > 1` of `Z[√d]`, found by increasing `y`.
pub fn brute_fundamental_unit(d: i64) -> (i128, i128, i8) {
    for y in 1i128.. {
        let dy2 = d as i128 * y * y;
        if let Some(x) = isqrt_exact(dy2 - 1) {
            return (x, y, -1);
        }
        if let Some(x) = isqrt_exact(dy2 + 1) {
            return (x, y, 1);
        }
    }
    unreachable!()
}

/// Sign of `j + k√d` for nonsquare `d`, from the fixed-point value
/// `⌊|k|√d·2^64⌋`. Since `|k|√d·2^64` is irrational it lies strictly
/// between `s` and `s + 1`, and `j·2^64 ± s` is an integer, so the
/// enclosing interval never straddles zero.
pub fn sign_oracle(j: &BigInt, k: &BigInt, d: u64) -> Ordering {
    if k.is_zero() {
        return j.cmp(&BigInt::zero());
    }
    let scale = BigInt::from(1u8) << 64u32;
    let s = (k * k * BigInt::from(d) * &scale * &scale).sqrt();
    let js = j * &scale;
    if k.is_positive() {
        // value·2^64 ∈ (js + s, js + s + 1)
        if !(&js + &s).is_negative() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    } else if (&js - &s).is_positive() {
        // value·2^64 ∈ (js − s − 1, js − s)
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// `(j', k')` with `(j + k√d)/p^e = (j' + k'√d)/p^{s·i}`, `i = ⌈e/s⌉`.
pub fn step_numerators(j: &BigInt, k: &BigInt, e: u32, p: u64, s: u32) -> (BigInt, BigInt) {
    let i = e.div_ceil(s);
    let f = BigInt::from(p).pow(s * i - e);
    (j * &f, k * &f)
}

fn md(v: &BigInt, m: u64) -> i128 {
    let r = v % BigInt::from(m);
    let r: i128 = r.try_into().unwrap();
    r.rem_euclid(m as i128)
}

/// All `(a, b, c, d, sign)` modulo `modulus` such that the images of
/// `(1,(1,0)), (√D,(0,1)), (0,(m1,0)), (0,(0,m2))` under `(λ, M)` and under
/// `(λ⁻¹, sign·adj M)` satisfy `x ≡ j (mod m1)`, `y ≡ k (mod m2)`, with
/// `det ≡ sign`. Step numerators of `λ` and `λ⁻¹` are supplied.
pub fn brute_classes(
    lam: (&BigInt, &BigInt),
    inv: (&BigInt, &BigInt),
    radicand: u64,
    m1: u64,
    m2: u64,
    modulus: u64,
) -> Vec<([u64; 4], i8)> {
    let dd = BigInt::from(radicand);
    let ok = |l: (&BigInt, &BigInt), [a, b, c, d]: [i128; 4]| -> bool {
        let (m1i, m2i) = (m1 as i128, m2 as i128);
        // λ·1 = λj + λk√D ; λ·√D = D·λk + λj√D ; 0 for the other two.
        let images = [
            ((a, c), (md(l.0, m1), md(l.1, m2))),
            ((b, d), (md(&(&dd * l.1), m1), md(l.0, m2))),
            ((a * m1i, c * m1i), (0, 0)),
            ((b * m2i, d * m2i), (0, 0)),
        ];
        images.iter().all(|((x, y), (cj, ck))| (x - cj).rem_euclid(m1i) == 0 && (y - ck).rem_euclid(m2i) == 0)
    };
    let m = modulus as i128;
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    if !ok(lam, [a, b, c, d]) {
                        continue;
                    }
                    for sign in [1i8, -1] {
                        let s = sign as i128;
                        if (a * d - b * c - s).rem_euclid(m) != 0 {
                            continue;
                        }
                        if ok(inv, [s * d, -s * b, -s * c, s * a]) {
                            out.push(([a, b, c, d].map(|v| v as u64), sign));
                        }
                    }
                }
            }
        }
    }
    out
}

/// All integer matrices with entries in `[-bound, bound]` and `det = ±1`.
pub fn unimodular_matrices(bound: i64) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                for delta in [1i64, -1] {
                    let rhs = delta + b * c;
                    if a == 0 {
                        if rhs == 0 {
                            out.extend((-bound..=bound).map(|d| [a, b, c, d]));
                        }
                    } else if rhs % a == 0 && (rhs / a).abs() <= bound {
                        out.push([a, b, c, rhs / a]);
                    }
                }
            }
        }
    }
    out
}
