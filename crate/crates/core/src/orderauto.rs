//! Order automorphisms `φ(r, v) = (λ·r, M·v)` of `(E, E₊)`.
//!
//! Every order automorphism of the congruence dimension group has this form
//! with `λ` a positive unit and `det M = ±1`, and `φ` is determined by its
//! values on
//!
//! ```text
//! (1, (1, 0)),  (√d, (0, 1)),  (0, (m1, 0)),  (0, (0, m2)).
//! ```
//!
//! [`is_well_defined`] checks exactly those four images, for `φ` and for
//! `φ⁻¹ = (λ⁻¹, M⁻¹)`. [`classify_residues`] turns the same requirement into
//! congruences on the entries of `M` modulo a fixed modulus, and
//! [`commutation_obstruction`] uses the resulting classes to rule out
//! commuting pairs.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimgroup::{residue, DimElem, DimError, DimGroupParams};
use crate::quad::QuadRat;

/// A 2×2 integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntMat2 {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>, d: impl Into<BigInt>) -> Self {
        IntMat2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn mul(&self, o: &IntMat2) -> IntMat2 {
        IntMat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    /// `[[d, −b], [−c, a]]`.
    pub fn adjugate(&self) -> IntMat2 {
        IntMat2 { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    /// Integer inverse, defined when `det = ±1`.
    pub fn inverse(&self) -> Option<IntMat2> {
        let det = self.det();
        if det.is_one() {
            Some(self.adjugate())
        } else if (-&det).is_one() {
            let adj = self.adjugate();
            Some(IntMat2 { a: -adj.a, b: -adj.b, c: -adj.c, d: -adj.d })
        } else {
            None
        }
    }

    pub fn apply(&self, x: &BigInt, y: &BigInt) -> (BigInt, BigInt) {
        (&self.a * x + &self.b * y, &self.c * x + &self.d * y)
    }

    pub fn entries(&self) -> [&BigInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn reduce(&self, modulus: u64) -> [u64; 4] {
        self.entries().map(|v| residue(v, modulus))
    }

    pub fn max_abs(&self) -> BigInt {
        self.entries().into_iter().map(|v| v.abs()).max().expect("four entries")
    }
}

impl fmt::Display for IntMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse matrix `{0}` (expected a,b,c,d or [[a,b],[c,d]])")]
pub struct MatrixParseError(String);

impl FromStr for IntMat2 {
    type Err = MatrixParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s.chars().filter(|c| !matches!(c, '[' | ']' | ' ')).collect();
        let parts: Vec<BigInt> = cleaned
            .split(',')
            .map(|v| v.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| MatrixParseError(s.to_string()))?;
        match parts.as_slice() {
            [a, b, c, d] => Ok(IntMat2::new(a.clone(), b.clone(), c.clone(), d.clone())),
            _ => Err(MatrixParseError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Inverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Inverse => "inverse",
        })
    }
}

/// Why a pair `(λ, M)` fails to define an order automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NotWellDefined {
    #[error("det={0}")]
    DeterminantNotUnit(BigInt),
    #[error("scaling {0} is not positive")]
    ScalingNotPositive(String),
    #[error("scaling {0} is not a unit of the ring")]
    ScalingNotUnit(String),
    #[error("{direction} image of {generator} is not in E: {violation}")]
    ImageOutsideE { direction: Direction, generator: &'static str, violation: DimError },
}

/// Checks that `(λ·r, M·v)` maps the four determining elements into `E`.
fn generator_images_in_e(
    params: DimGroupParams,
    lambda: &QuadRat,
    m: &IntMat2,
    direction: Direction,
) -> Result<(), NotWellDefined> {
    let ring = params.ring();
    let one = QuadRat::one(ring);
    let zero = QuadRat::zero(ring);
    let (m1, m2) = (BigInt::from(params.m1()), BigInt::from(params.m2()));
    let gens: [(&'static str, QuadRat, BigInt, BigInt); 4] = [
        ("(1,(1,0))", one, BigInt::one(), BigInt::zero()),
        ("(sqrt(d),(0,1))", QuadRat::sqrt_d(ring), BigInt::zero(), BigInt::one()),
        ("(0,(m1,0))", zero.clone(), m1, BigInt::zero()),
        ("(0,(0,m2))", zero, BigInt::zero(), m2),
    ];
    for (generator, r, x, y) in gens {
        let (mx, my) = m.apply(&x, &y);
        DimElem::from_parts(params, &(lambda * &r), mx, my)
            .map_err(|violation| NotWellDefined::ImageOutsideE { direction, generator, violation })?;
    }
    Ok(())
}

/// Decides whether `(λ, M)` is an order automorphism of `(E, E₊)`.
pub fn is_well_defined(params: DimGroupParams, lambda: &QuadRat, m: &IntMat2) -> Result<(), NotWellDefined> {
    let inv_m = m.inverse().ok_or_else(|| NotWellDefined::DeterminantNotUnit(m.det()))?;
    if !lambda.is_positive() {
        return Err(NotWellDefined::ScalingNotPositive(lambda.pretty()));
    }
    let inv_lambda = lambda.invert().map_err(|_| NotWellDefined::ScalingNotUnit(lambda.pretty()))?;
    generator_images_in_e(params, lambda, m, Direction::Forward)?;
    generator_images_in_e(params, &inv_lambda, &inv_m, Direction::Inverse)?;
    Ok(())
}

/// A verified order automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderAuto {
    params: DimGroupParams,
    lambda: QuadRat,
    matrix: IntMat2,
}

impl OrderAuto {
    pub fn new(params: DimGroupParams, lambda: QuadRat, matrix: IntMat2) -> Result<Self, NotWellDefined> {
        is_well_defined(params, &lambda, &matrix)?;
        Ok(OrderAuto { params, lambda, matrix })
    }

    pub fn identity(params: DimGroupParams) -> Self {
        OrderAuto { params, lambda: QuadRat::one(params.ring()), matrix: IntMat2::identity() }
    }

    pub fn params(&self) -> DimGroupParams {
        self.params
    }

    pub fn lambda(&self) -> &QuadRat {
        &self.lambda
    }

    pub fn matrix(&self) -> &IntMat2 {
        &self.matrix
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OrderAuto) -> OrderAuto {
        assert_eq!(self.params, other.params, "automorphisms of different groups");
        OrderAuto::new(self.params, &self.lambda * &other.lambda, self.matrix.mul(&other.matrix))
            .expect("order automorphisms are closed under composition")
    }

    pub fn inverse(&self) -> OrderAuto {
        let lambda = self.lambda.invert().expect("scaling is a unit");
        let matrix = self.matrix.inverse().expect("det is ±1");
        OrderAuto::new(self.params, lambda, matrix).expect("inverse of an order automorphism")
    }

    pub fn apply(&self, e: &DimElem) -> DimElem {
        let r = &self.lambda * &e.trace_state();
        let (x, y) = self.matrix.apply(e.x(), e.y());
        DimElem::from_parts(self.params, &r, x, y).expect("well-defined automorphism maps E into E")
    }

    pub fn is_identity(&self) -> bool {
        self.lambda.is_one() && self.matrix == IntMat2::identity()
    }
}

impl fmt::Display for OrderAuto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(lambda={}, M={})", self.lambda.pretty(), self.matrix)
    }
}

/// A matrix of residues modulo `modulus`, together with the determinant sign
/// it lifts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueClass {
    pub modulus: u64,
    pub entries: [u64; 4],
    pub det_sign: i8,
}

impl ResidueClass {
    pub fn mul(&self, o: &ResidueClass) -> [u64; 4] {
        mat_mul_mod(&self.entries, &o.entries, self.modulus)
    }

    pub fn matrix_string(&self) -> String {
        format_entries(&self.entries)
    }

    pub fn contains(&self, m: &IntMat2) -> bool {
        m.reduce(self.modulus) == self.entries && m.det() == BigInt::from(self.det_sign)
    }
}

impl fmt::Display for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.det_sign > 0 { '+' } else { '-' };
        write!(f, "{} mod {} det={}1", self.matrix_string(), self.modulus, sign)
    }
}

pub fn format_entries(e: &[u64; 4]) -> String {
    format!("[[{},{}],[{},{}]]", e[0], e[1], e[2], e[3])
}

fn mat_mul_mod(x: &[u64; 4], y: &[u64; 4], m: u64) -> [u64; 4] {
    let m = m as u128;
    let [a, b, c, d] = x.map(|v| v as u128);
    let [e, f, g, h] = y.map(|v| v as u128);
    [
        ((a * e + b * g) % m) as u64,
        ((a * f + b * h) % m) as u64,
        ((c * e + d * g) % m) as u64,
        ((c * f + d * h) % m) as u64,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("modulus {modulus} is not a positive multiple of lcm(m1, m2) = {base}")]
    BadModulus { modulus: u64, base: u64 },
    #[error("scaling {0} is not a positive unit")]
    NotPositiveUnit(String),
}

fn check_scaling(lambda: &QuadRat) -> Result<QuadRat, ClassifyError> {
    if !lambda.is_positive() {
        return Err(ClassifyError::NotPositiveUnit(lambda.pretty()));
    }
    lambda.invert().map_err(|_| ClassifyError::NotPositiveUnit(lambda.pretty()))
}

fn check_modulus(params: DimGroupParams, modulus: u64) -> Result<(), ClassifyError> {
    let base = params.base_modulus();
    if modulus == 0 || !modulus.is_multiple_of(base) {
        return Err(ClassifyError::BadModulus { modulus, base });
    }
    Ok(())
}

/// Congruences on the entries of `M` forced by a scaling `λ`, from the
/// images of the determining generators:
///
/// ```text
/// a ≡ λ_j,  b ≡ d·λ_k  (mod m1)      b·m2 ≡ 0 (mod m1)
/// c ≡ λ_k,  d ≡ λ_j    (mod m2)      c·m1 ≡ 0 (mod m2)
/// ```
///
/// where `λ = (λ_j + λ_k√d)/p^{s·i}`.
struct EntryCongruences {
    m1: i128,
    m2: i128,
    a: i128,
    b: i128,
    c: i128,
    d: i128,
}

impl EntryCongruences {
    fn for_scaling(params: DimGroupParams, lambda: &QuadRat) -> Self {
        let (m1, m2) = (params.m1(), params.m2());
        let (_, lj, lk) = params.step_form(lambda);
        let radicand = BigInt::from(params.d());
        EntryCongruences {
            m1: m1 as i128,
            m2: m2 as i128,
            a: residue(&lj, m1) as i128,
            b: residue(&(&radicand * &lk), m1) as i128,
            c: residue(&lk, m2) as i128,
            d: residue(&lj, m2) as i128,
        }
    }

    fn holds(&self, [a, b, c, d]: [i128; 4]) -> bool {
        let (m1, m2) = (self.m1, self.m2);
        (a - self.a).rem_euclid(m1) == 0
            && (b - self.b).rem_euclid(m1) == 0
            && (c - self.c).rem_euclid(m2) == 0
            && (d - self.d).rem_euclid(m2) == 0
            && (b * m2).rem_euclid(m1) == 0
            && (c * m1).rem_euclid(m2) == 0
    }
}

/// All residue classes modulo `modulus` of matrices `M` such that `(λ, M)`
/// can be an order automorphism, sorted.
///
/// A class survives when the entries satisfy the congruences for `λ`, the
/// signed adjugate `det·adj(M)` satisfies them for `λ⁻¹`, and the
/// determinant reduces to the class's sign.
pub fn classify_residues(
    params: DimGroupParams,
    lambda: &QuadRat,
    modulus: u64,
) -> Result<Vec<ResidueClass>, ClassifyError> {
    check_modulus(params, modulus)?;
    let inv_lambda = check_scaling(lambda)?;
    let fwd = EntryCongruences::for_scaling(params, lambda);
    let inv = EntryCongruences::for_scaling(params, &inv_lambda);
    let m = modulus as i128;

    // Per-entry filters first; the coupled conditions are checked below.
    let admissible = |target: i128, md: i128| -> Vec<i128> {
        (0..m).filter(|v| (v - target).rem_euclid(md) == 0).collect()
    };
    let a_vals = admissible(fwd.a, fwd.m1);
    let b_vals = admissible(fwd.b, fwd.m1);
    let c_vals = admissible(fwd.c, fwd.m2);
    let d_vals = admissible(fwd.d, fwd.m2);

    let mut out = BTreeSet::new();
    for &a in &a_vals {
        for &b in &b_vals {
            for &c in &c_vals {
                for &d in &d_vals {
                    if !fwd.holds([a, b, c, d]) {
                        continue;
                    }
                    let det = (a * d - b * c).rem_euclid(m);
                    for sign in [1i8, -1] {
                        if det != (sign as i128).rem_euclid(m) {
                            continue;
                        }
                        let s = sign as i128;
                        if inv.holds([s * d, -s * b, -s * c, s * a]) {
                            out.insert(ResidueClass {
                                modulus,
                                entries: [a, b, c, d].map(|v| v as u64),
                                det_sign: sign,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// One line of an impossibility certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchRow {
    pub class1: ResidueClass,
    pub class2: ResidueClass,
    pub product12: [u64; 4],
    pub product21: [u64; 4],
    /// Row-major index (0..4) of the first entry where the products differ.
    pub position: usize,
}

pub fn position_name(pos: usize) -> &'static str {
    ["(0,0)", "(0,1)", "(1,0)", "(1,1)"][pos]
}

/// Evidence that no residue-class pair for `(λ₁, λ₂)` commutes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObstructionCertificate {
    pub params: [u64; 5],
    pub lambda1: QuadRat,
    pub lambda2: QuadRat,
    pub modulus: u64,
    pub classes1: Vec<ResidueClass>,
    pub classes2: Vec<ResidueClass>,
    pub rows: Vec<MismatchRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Obstruction {
    /// A commuting residue pair exists. This is only a necessary condition
    /// for a commuting pair of automorphisms.
    Possible { modulus: u64, witness: (ResidueClass, ResidueClass) },
    Impossible(ObstructionCertificate),
}

impl Obstruction {
    pub fn is_impossible(&self) -> bool {
        matches!(self, Obstruction::Impossible(_))
    }
}

fn params_array(params: DimGroupParams) -> [u64; 5] {
    [params.d(), params.p(), params.s() as u64, params.m1(), params.m2()]
}

/// Exhausts all class pairs `(C₁, C₂)` for the two scalings and checks
/// `C₁C₂ ≡ C₂C₁ (mod modulus)`.
pub fn commutation_obstruction(
    params: DimGroupParams,
    lambda1: &QuadRat,
    lambda2: &QuadRat,
    modulus: u64,
) -> Result<Obstruction, ClassifyError> {
    let classes1 = classify_residues(params, lambda1, modulus)?;
    let classes2 = classify_residues(params, lambda2, modulus)?;
    let mut rows = Vec::with_capacity(classes1.len() * classes2.len());
    for c1 in &classes1 {
        for c2 in &classes2 {
            let product12 = c1.mul(c2);
            let product21 = c2.mul(c1);
            match (0..4).find(|&i| product12[i] != product21[i]) {
                None => return Ok(Obstruction::Possible { modulus, witness: (*c1, *c2) }),
                Some(position) => rows.push(MismatchRow { class1: *c1, class2: *c2, product12, product21, position }),
            }
        }
    }
    Ok(Obstruction::Impossible(ObstructionCertificate {
        params: params_array(params),
        lambda1: lambda1.clone(),
        lambda2: lambda2.clone(),
        modulus,
        classes1,
        classes2,
        rows,
    }))
}

/// Runs the obstruction at `modulus`, and once more at `modulus·m1` when
/// the first verdict is "possible". Returns the last verdict.
pub fn obstruction_with_escalation(
    params: DimGroupParams,
    lambda1: &QuadRat,
    lambda2: &QuadRat,
    modulus: u64,
) -> Result<Obstruction, ClassifyError> {
    let first = commutation_obstruction(params, lambda1, lambda2, modulus)?;
    if first.is_impossible() || params.m1() <= 1 {
        return Ok(first);
    }
    commutation_obstruction(params, lambda1, lambda2, modulus * params.m1())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObstructionReplayError {
    #[error("certificate parameters are invalid: {0}")]
    Params(String),
    #[error("recorded classes for {0} differ from an independent enumeration")]
    ClassesDiffer(String),
    #[error("table does not cover every class pair exactly once")]
    IncompleteTable,
    #[error("row {row}: recorded products do not match recomputation")]
    ProductMismatch { row: usize },
    #[error("row {row}: products agree at recorded position or differ earlier")]
    WrongPosition { row: usize },
}

/// Residue classes by brute force over all `modulus⁴` matrices and both
/// determinant signs, testing each through the generator-image check on the
/// smallest nonnegative lift.
pub fn enumerate_classes_by_images(params: DimGroupParams, lambda: &QuadRat, modulus: u64) -> Vec<ResidueClass> {
    let Ok(inv_lambda) = lambda.invert() else {
        return Vec::new();
    };
    if !lambda.is_positive() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let m = modulus as i64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mat = IntMat2::new(a, b, c, d);
                    if generator_images_in_e(params, lambda, &mat, Direction::Forward).is_err() {
                        continue;
                    }
                    let det = (a * d - b * c).rem_euclid(m);
                    for sign in [1i8, -1] {
                        if det != (sign as i64).rem_euclid(m) {
                            continue;
                        }
                        let adj = mat.adjugate();
                        let s = BigInt::from(sign);
                        let inv = IntMat2 { a: &s * adj.a, b: &s * adj.b, c: &s * adj.c, d: &s * adj.d };
                        if generator_images_in_e(params, &inv_lambda, &inv, Direction::Inverse).is_ok() {
                            out.push(ResidueClass { modulus, entries: [a, b, c, d].map(|v| v as u64), det_sign: sign });
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

impl ObstructionCertificate {
    /// Re-derives both class lists by brute force, then re-multiplies every
    /// recorded pair. Cost grows like `modulus⁴`.
    pub fn replay(&self) -> Result<(), ObstructionReplayError> {
        let [d, p, s, m1, m2] = self.params;
        let params = DimGroupParams::new(d, p, s as u32, m1, m2)
            .map_err(|e| ObstructionReplayError::Params(e.to_string()))?;
        for (lambda, recorded) in [(&self.lambda1, &self.classes1), (&self.lambda2, &self.classes2)] {
            if lambda.ring() != params.ring() {
                return Err(ObstructionReplayError::Params("scaling from another ring".into()));
            }
            if &enumerate_classes_by_images(params, lambda, self.modulus) != recorded {
                return Err(ObstructionReplayError::ClassesDiffer(lambda.pretty()));
            }
        }
        let expected: BTreeSet<(ResidueClass, ResidueClass)> = self
            .classes1
            .iter()
            .flat_map(|c1| self.classes2.iter().map(move |c2| (*c1, *c2)))
            .collect();
        let recorded: BTreeSet<(ResidueClass, ResidueClass)> =
            self.rows.iter().map(|r| (r.class1, r.class2)).collect();
        if expected != recorded || recorded.len() != self.rows.len() {
            return Err(ObstructionReplayError::IncompleteTable);
        }
        for (row, r) in self.rows.iter().enumerate() {
            let p12 = mat_mul_mod(&r.class1.entries, &r.class2.entries, self.modulus);
            let p21 = mat_mul_mod(&r.class2.entries, &r.class1.entries, self.modulus);
            if p12 != r.product12 || p21 != r.product21 {
                return Err(ObstructionReplayError::ProductMismatch { row });
            }
            let first = (0..4).find(|&i| p12[i] != p21[i]);
            if first != Some(r.position) {
                return Err(ObstructionReplayError::WrongPosition { row });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ObstructionCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "obstruction certificate: lambda1={} lambda2={} modulus={} pairs={}",
            self.lambda1.pretty(),
            self.lambda2.pretty(),
            self.modulus,
            self.rows.len()
        )?;
        writeln!(f, "class1 | class2 | product12 | product21 | first-mismatch")?;
        for r in &self.rows {
            writeln!(
                f,
                "{} | {} | {} | {} | {}",
                r.class1.matrix_string(),
                r.class2.matrix_string(),
                format_entries(&r.product12),
                format_entries(&r.product21),
                position_name(r.position)
            )?;
        }
        Ok(())
    }
}

/// Total order used to pick a canonical witness: smallest max-abs entry,
/// then smallest off-diagonal mass, then entries in the order
/// `0, 1, −1, 2, −2, …`.
pub fn witness_order(x: &IntMat2, y: &IntMat2) -> Ordering {
    let key = |m: &IntMat2| {
        let zig = |v: &BigInt| (v.abs(), v.is_negative());
        (m.max_abs(), m.b.abs() + m.c.abs(), zig(&m.a), zig(&m.b), zig(&m.c), zig(&m.d))
    };
    key(x).cmp(&key(y))
}

/// Smallest (by [`witness_order`]) matrix with entries bounded by `bound`
/// lifting one of `classes` and passing [`is_well_defined`] with `lambda`.
pub fn lift_witness(
    params: DimGroupParams,
    lambda: &QuadRat,
    classes: &[ResidueClass],
    bound: u64,
) -> Option<OrderAuto> {
    let bound = bound as i64;
    let lifts = |r: u64, m: u64| -> Vec<i64> {
        let m = m as i64;
        let start = -bound + (r as i64 - -bound).rem_euclid(m);
        (start..=bound).step_by(m as usize).collect()
    };
    let mut best: Option<IntMat2> = None;
    let mut consider = |mat: IntMat2| {
        if best.as_ref().is_some_and(|b| witness_order(&mat, b) != Ordering::Less) {
            return;
        }
        if is_well_defined(params, lambda, &mat).is_ok() {
            best = Some(mat);
        }
    };
    for class in classes {
        let m = class.modulus;
        let delta = class.det_sign as i64;
        let d_lifts = lifts(class.entries[3], m);
        for a in lifts(class.entries[0], m) {
            for b in lifts(class.entries[1], m) {
                for c in lifts(class.entries[2], m) {
                    let rhs = delta + b * c;
                    if a == 0 {
                        if rhs == 0 {
                            for &d in &d_lifts {
                                consider(IntMat2::new(a, b, c, d));
                            }
                        }
                    } else if rhs % a == 0 {
                        let d = rhs / a;
                        if d.abs() <= bound && (d - class.entries[3] as i64).rem_euclid(m as i64) == 0 {
                            consider(IntMat2::new(a, b, c, d));
                        }
                    }
                }
            }
        }
    }
    best.map(|matrix| OrderAuto { params, lambda: lambda.clone(), matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard() -> DimGroupParams {
        DimGroupParams::standard()
    }

    fn lam(s: &str) -> QuadRat {
        QuadRat::parse_in(standard().ring(), s).unwrap()
    }

    fn class(e: [u64; 4]) -> ResidueClass {
        ResidueClass { modulus: 9, entries: e, det_sign: 1 }
    }

    #[test]
    fn well_definedness_examples() {
        assert_eq!(is_well_defined(standard(), &lam("5"), &IntMat2::new(5, 9, 6, 11)), Ok(()));
        assert_eq!(is_well_defined(standard(), &lam("2+sqrt3"), &IntMat2::new(2, 3, 1, 2)), Ok(()));
        let err = is_well_defined(standard(), &lam("5"), &IntMat2::new(5, 0, 0, 2)).unwrap_err();
        assert_eq!(err.to_string(), "det=10");
        assert_eq!(is_well_defined(standard(), &lam("1"), &IntMat2::identity()), Ok(()));
        assert!(matches!(
            is_well_defined(standard(), &lam("5"), &IntMat2::new(2, 3, 1, 2)),
            Err(NotWellDefined::ImageOutsideE { direction: Direction::Forward, .. })
        ));
        assert!(matches!(
            is_well_defined(standard(), &lam("2-sqrt3"), &IntMat2::identity()),
            Err(NotWellDefined::ImageOutsideE { .. })
        ));
        assert!(matches!(
            is_well_defined(standard(), &lam("1-sqrt3"), &IntMat2::identity()),
            Err(NotWellDefined::ScalingNotPositive(_))
        ));
        assert!(matches!(
            is_well_defined(standard(), &lam("1+sqrt3"), &IntMat2::identity()),
            Err(NotWellDefined::ScalingNotUnit(_))
        ));
    }

    #[test]
    fn inverse_images_are_checked() {
        // 1/5 has step form 5^5/5^6, so the inverse needs a ≡ 5^5 ≡ 2 (mod 3)
        // on the top-left of M⁻¹.
        let m = IntMat2::new(-4, 9, 3, -7);
        assert_eq!(m.det(), BigInt::from(1));
        assert!(is_well_defined(standard(), &lam("5"), &m).is_ok());
        let m = IntMat2::new(5, 9, 6, 11).inverse().unwrap();
        assert!(matches!(
            is_well_defined(standard(), &lam("5"), &m),
            Err(NotWellDefined::ImageOutsideE { direction: Direction::Forward, .. })
        ));
    }

    #[test]
    fn composition_examples() {
        let phi = OrderAuto::new(standard(), lam("5"), IntMat2::new(5, 9, 6, 11)).unwrap();
        let psi = OrderAuto::new(standard(), lam("2+sqrt3"), IntMat2::new(2, 3, 1, 2)).unwrap();
        assert_eq!(phi.compose(&psi).matrix(), &IntMat2::new(19, 33, 23, 40));
        assert_eq!(psi.compose(&phi).matrix(), &IntMat2::new(28, 51, 17, 31));
        assert!(phi.compose(&phi.inverse()).is_identity());
        assert!(psi.inverse().compose(&psi).is_identity());
        let u = DimElem::order_unit(standard());
        let image = phi.apply(&u);
        assert_eq!(image, DimElem::new(standard(), 0, 5, 0, 5, 6).unwrap());
    }

    #[test]
    fn classification_of_generators() {
        let five = classify_residues(standard(), &lam("5"), 9).unwrap();
        assert_eq!(five, vec![class([5, 0, 0, 2]), class([5, 0, 3, 2]), class([5, 0, 6, 2])]);
        let eps = classify_residues(standard(), &lam("2+sqrt3"), 9).unwrap();
        assert_eq!(eps, vec![class([2, 3, 1, 2]), class([2, 3, 4, 2]), class([2, 3, 7, 2])]);
        let id = classify_residues(standard(), &lam("1"), 9).unwrap();
        assert_eq!(id, vec![class([1, 0, 0, 1]), class([1, 0, 3, 1]), class([1, 0, 6, 1])]);
    }

    #[test]
    fn classification_agrees_with_image_enumeration() {
        for s in ["1", "5", "2+sqrt3", "2-sqrt3", "1/5", "10+5*sqrt3", "7+4*sqrt3"] {
            let l = lam(s);
            assert_eq!(classify_residues(standard(), &l, 9).unwrap(), enumerate_classes_by_images(standard(), &l, 9), "{s}");
        }
    }

    #[test]
    fn classification_errors() {
        assert!(matches!(classify_residues(standard(), &lam("5"), 6), Err(ClassifyError::BadModulus { .. })));
        assert!(matches!(classify_residues(standard(), &lam("3"), 9), Err(ClassifyError::NotPositiveUnit(_))));
        assert!(matches!(classify_residues(standard(), &lam("2-sqrt3"), 0), Err(ClassifyError::BadModulus { .. })));
    }

    #[test]
    fn obstruction_for_unit_generators() {
        let verdict = commutation_obstruction(standard(), &lam("5"), &lam("2+sqrt3"), 9).unwrap();
        let Obstruction::Impossible(cert) = verdict else { panic!("expected impossible") };
        assert_eq!(cert.rows.len(), 9);
        assert!(cert.rows.iter().all(|r| r.position == 2));
        cert.replay().unwrap();

        let mut forged = cert.clone();
        forged.rows.pop();
        assert_eq!(forged.replay(), Err(ObstructionReplayError::IncompleteTable));
        let mut forged = cert.clone();
        forged.rows[0].position = 3;
        assert_eq!(forged.replay(), Err(ObstructionReplayError::WrongPosition { row: 0 }));
        let mut forged = cert;
        forged.classes1.pop();
        assert!(matches!(forged.replay(), Err(ObstructionReplayError::ClassesDiffer(_))));
    }

    #[test]
    fn obstruction_possible_cases() {
        let v = commutation_obstruction(standard(), &lam("5"), &lam("5"), 9).unwrap();
        assert!(matches!(v, Obstruction::Possible { witness: (a, b), .. } if a == b));
        let free = DimGroupParams::new(3, 5, 6, 1, 1).unwrap();
        let l1 = QuadRat::from_int(free.ring(), 5);
        let l2 = QuadRat::new(free.ring(), 2, 1, 0);
        let v = commutation_obstruction(free, &l1, &l2, 1).unwrap();
        assert!(!v.is_impossible());
    }

    #[test]
    fn witness_lifting() {
        let five = classify_residues(standard(), &lam("5"), 9).unwrap();
        let w = lift_witness(standard(), &lam("5"), &five, 50).unwrap();
        assert_eq!(w.matrix(), &IntMat2::new(-4, 9, 3, -7));
        let eps = classify_residues(standard(), &lam("2+sqrt3"), 9).unwrap();
        let w = lift_witness(standard(), &lam("2+sqrt3"), &eps, 50).unwrap();
        assert_eq!(w.matrix(), &IntMat2::new(2, 3, 1, 2));
        assert!(lift_witness(standard(), &lam("5"), &five, 5).is_none());
        let free = DimGroupParams::new(3, 5, 6, 1, 1).unwrap();
        let l = QuadRat::from_int(free.ring(), 5);
        let classes = classify_residues(free, &l, 1).unwrap();
        assert_eq!(lift_witness(free, &l, &classes, 50).unwrap().matrix(), &IntMat2::identity());
    }

    #[test]
    fn matrix_text() {
        assert_eq!("5,9,6,11".parse::<IntMat2>().unwrap(), IntMat2::new(5, 9, 6, 11));
        assert_eq!("[[5,9],[6,11]]".parse::<IntMat2>().unwrap(), IntMat2::new(5, 9, 6, 11));
        assert_eq!(IntMat2::new(-4, 9, 3, -7).to_string(), "[[-4,9],[3,-7]]");
        assert!("1,2,3".parse::<IntMat2>().is_err());
        assert_eq!(class([5, 0, 3, 2]).to_string(), "[[5,0],[3,2]] mod 9 det=+1");
    }
}
