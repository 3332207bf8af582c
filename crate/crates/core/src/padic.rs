//! Capped-precision arithmetic in `Z_p[ζ_p]`, Hensel lifting of unit roots,
//! slope factorization of local factors, and 1-unit powers `u^κ` with
//! `κ ∈ Z_p`.
//!
//! A [`PadicCyc`] stores coordinates modulo `p^N` (the ring context
//! [`PadicRing`]) together with a certificate `c` in π-units (`π = 1 - ζ_p`,
//! `ord_p π = 1/(p-1)`): the represented value is known modulo `π^c`, and
//! `c ≤ (p-1)N`. Every element is integral, so sums and products are
//! certified to the minimum of their inputs' certificates. That rule is
//! associative and commutative, so any evaluation order of a product yields
//! identical representatives and certificates.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::RingElem;
use crate::CycInt;

/// `Z_p[ζ_p] / p^N`.
#[derive(Debug, PartialEq, Eq)]
pub struct PadicRing {
    p: u32,
    n: u32,
    modulus: BigInt,
}

impl PadicRing {
    pub fn new(p: u32, n: u32) -> Arc<Self> {
        assert!(p >= 3 && n >= 1, "need an odd prime and N >= 1");
        Arc::new(PadicRing { p, n, modulus: BigInt::from(p).pow(n) })
    }

    /// Smallest ring whose cap covers `v` π-units.
    pub fn for_pi_precision(p: u32, v: u64) -> Arc<Self> {
        Self::new(p, v.div_ceil(p as u64 - 1).max(1) as u32)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `N`: coordinates are stored modulo `p^N`.
    pub fn precision(&self) -> u32 {
        self.n
    }

    /// Maximal certificate `(p-1)N`.
    pub fn cap(&self) -> u64 {
        (self.p as u64 - 1) * self.n as u64
    }

    fn reduce(&self, x: &BigInt) -> BigInt {
        x.mod_floor(&self.modulus)
    }
}

/// Certified knowledge of a valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiValuation {
    /// The valuation is exactly this many π-units.
    Exact(u64),
    /// Only a lower bound is known (the element is `≡ 0` to its precision).
    AtLeast(u64),
}

#[derive(Clone, PartialEq, Eq)]
pub struct PadicCyc {
    ring: Arc<PadicRing>,
    coords: Vec<BigInt>,
    cert: u64,
}

impl fmt::Debug for PadicCyc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} mod pi^{} (p^{})", self.coords, self.cert, self.ring.n)
    }
}

/// Coordinate-wise reduction of an exact element into `Z_p[ζ_p]/p^N`.
pub fn embed(x: &CycInt, n: u32) -> PadicCyc {
    PadicCyc::from_cyc(&PadicRing::new(x.level(), n), x)
}

impl PadicCyc {
    pub fn from_cyc(ring: &Arc<PadicRing>, x: &CycInt) -> Self {
        assert_eq!(x.level(), ring.p, "level mismatch");
        PadicCyc { ring: ring.clone(), coords: x.coords().iter().map(|c| ring.reduce(c)).collect(), cert: ring.cap() }
    }

    pub fn from_int(ring: &Arc<PadicRing>, c: impl Into<BigInt>) -> Self {
        Self::from_cyc(ring, &CycInt::from_int(ring.p, c.into()))
    }

    pub fn ring(&self) -> &Arc<PadicRing> {
        &self.ring
    }

    pub fn p(&self) -> u32 {
        self.ring.p
    }

    /// Representative coordinates in `[0, p^N)`.
    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// Known modulo `π^certificate`.
    pub fn certificate(&self) -> u64 {
        self.cert
    }

    pub fn with_certificate(mut self, cert: u64) -> Self {
        self.cert = self.cert.min(cert);
        self
    }

    fn uncertified(&self) -> Self {
        PadicCyc { cert: self.ring.cap(), ..self.clone() }
    }

    pub fn representative(&self) -> CycInt {
        CycInt::from_coords(self.ring.p, self.coords.clone()).expect("well-formed coordinates")
    }

    /// π-valuation of the stored representative (`None` if it is zero).
    pub fn rep_val(&self) -> Option<u64> {
        self.representative().pi_val()
    }

    pub fn valuation(&self) -> PiValuation {
        match self.rep_val() {
            Some(v) if v < self.cert => PiValuation::Exact(v),
            _ => PiValuation::AtLeast(self.cert),
        }
    }

    /// Certified lower bound for the π-valuation of the true value.
    pub fn val_lower_bound(&self) -> u64 {
        match self.valuation() {
            PiValuation::Exact(v) | PiValuation::AtLeast(v) => v,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == PiValuation::Exact(0)
    }

    /// Certified lower bound for the π-valuation of `self - other`.
    pub fn diff_val_at_least(&self, other: &Self) -> u64 {
        (self - other).val_lower_bound()
    }

    /// Both represent the same value modulo `π^prec`, certifiably.
    pub fn agrees_with(&self, other: &Self, prec: u64) -> bool {
        self.diff_val_at_least(other) >= prec
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(Error::Domain(format!("precision contexts differ: p^{} vs p^{}", self.ring.n, other.ring.n)))
        }
    }

    fn combine(&self, other: &Self, f: impl Fn(&BigInt, &BigInt) -> BigInt) -> Self {
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| self.ring.reduce(&f(a, b))).collect();
        PadicCyc { ring: self.ring.clone(), coords, cert: self.cert.min(other.cert) }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        Ok(self.combine(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        Ok(self.combine(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let prod = &self.representative() * &other.representative();
        let mut out = Self::from_cyc(&self.ring, &prod);
        out.cert = self.cert.min(other.cert);
        Ok(out)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut result = self.one_like();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        result
    }

    /// Inverse of a certified unit (Newton iteration `x ← x(2 - ux)`).
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::Domain(format!("{self:?} is not a certified unit")));
        }
        let p = self.ring.p;
        let r = self.representative().residue();
        let r_inv = (1..p).find(|&x| (x as u64 * r as u64) % p as u64 == 1).expect("residue is nonzero");
        let two = self.int_like(2);
        let mut x = self.int_like(r_inv as i64);
        let u = self.uncertified();
        for _ in 0..=(64 - self.ring.cap().leading_zeros()) + 1 {
            x = &x * &(&two - &(&u * &x));
        }
        debug_assert!((&(&u * &x) - &u.one_like()).rep_val().is_none());
        let mut out = x;
        out.cert = self.cert.min(self.ring.cap());
        Ok(out)
    }

    /// `self · p^k`; the certificate grows by `k(p-1)`.
    pub fn mul_p_pow(&self, k: u32) -> Self {
        let pk = BigInt::from(self.ring.p).pow(k);
        let coords = self.coords.iter().map(|c| self.ring.reduce(&(c * &pk))).collect();
        let cert = (self.cert + k as u64 * (self.ring.p as u64 - 1)).min(self.ring.cap());
        PadicCyc { ring: self.ring.clone(), coords, cert }
    }

    /// Exact division by `p^k` of a value known to be divisible; the
    /// certificate drops by `k(p-1)`.
    pub fn div_p_pow(&self, k: u32) -> Result<Self> {
        let p = self.ring.p as u64;
        let lost = k as u64 * (p - 1);
        if self.cert < lost + 1 {
            return Err(Error::Precision { needed: lost + 1, have: self.cert });
        }
        // π^c ⊂ p^{⌊c/(p-1)⌋} coordinate-wise, so the representative is
        // divisible whenever the true value is.
        let pk = BigInt::from(self.ring.p).pow(k);
        let mut coords = Vec::with_capacity(self.coords.len());
        for c in &self.coords {
            let (q, r) = c.div_rem(&pk);
            if !r.is_zero() {
                return Err(Error::Domain(format!("{self:?} is not divisible by p^{k}")));
            }
            coords.push(q);
        }
        Ok(PadicCyc { ring: self.ring.clone(), coords, cert: self.cert - lost })
    }

    /// Moves to another precision context; the certificate never increases.
    pub fn reduce_to(&self, ring: &Arc<PadicRing>) -> Self {
        assert_eq!(ring.p, self.ring.p);
        PadicCyc {
            ring: ring.clone(),
            coords: self.coords.iter().map(|c| ring.reduce(c)).collect(),
            cert: self.cert.min(ring.cap()),
        }
    }

    /// True when the `ζ^i` coordinates (`i ≥ 1`) vanish modulo the coordinate
    /// precision `p^{⌊c/(p-1)⌋}` implied by the certificate, as they must for
    /// an element of `Z_p`.
    pub fn zeta_components_vanish(&self) -> bool {
        let k = (self.cert / (self.ring.p as u64 - 1)) as u32;
        let pk = BigInt::from(self.ring.p).pow(k);
        self.coords[1..].iter().all(|c| (c % &pk).is_zero())
    }

    /// The `Z_p`-coordinate reduced to the certified coordinate precision.
    pub fn zp_value(&self) -> BigInt {
        let k = (self.cert / (self.ring.p as u64 - 1)) as u32;
        self.coords[0].mod_floor(&BigInt::from(self.ring.p).pow(k))
    }
}

impl Add for &PadicCyc {
    type Output = PadicCyc;
    fn add(self, rhs: Self) -> PadicCyc {
        self.checked_add(rhs).expect("p-adic context mismatch")
    }
}

impl Sub for &PadicCyc {
    type Output = PadicCyc;
    fn sub(self, rhs: Self) -> PadicCyc {
        self.checked_sub(rhs).expect("p-adic context mismatch")
    }
}

impl Mul for &PadicCyc {
    type Output = PadicCyc;
    fn mul(self, rhs: Self) -> PadicCyc {
        self.checked_mul(rhs).expect("p-adic context mismatch")
    }
}

impl Neg for &PadicCyc {
    type Output = PadicCyc;
    fn neg(self) -> PadicCyc {
        let coords = self.coords.iter().map(|c| self.ring.reduce(&-c)).collect();
        PadicCyc { ring: self.ring.clone(), coords, cert: self.cert }
    }
}

impl RingElem for PadicCyc {
    fn int_like(&self, c: i64) -> Self {
        PadicCyc::from_int(&self.ring, c)
    }
}

/// Whether an exponent is a rational integer or a `p`-adic integer known
/// only through finitely many digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentKind {
    ExactInteger,
    Truncated,
}

/// An exponent `κ ∈ Z_p`: a representative integer and, for truncated
/// exponents, the number `s` of base-`p` digits it is known to
/// (`κ ≡ representative mod p^s`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicExponent {
    p: u32,
    value: BigInt,
    known_digits: Option<u32>,
}

impl PadicExponent {
    pub fn integer(p: u32, value: impl Into<BigInt>) -> Self {
        PadicExponent { p, value: value.into(), known_digits: None }
    }

    /// From base-`p` digits `d_0, d_1, ...` (least significant first).
    pub fn from_digits(p: u32, digits: &[u32], kind: ExponentKind) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d >= p) {
            return Err(Error::Config(format!("digit {d} out of range for p = {p}")));
        }
        let value = digits.iter().rev().fold(BigInt::zero(), |acc, &d| acc * p + d);
        let known_digits = match kind {
            ExponentKind::ExactInteger => None,
            ExponentKind::Truncated => Some(digits.len() as u32),
        };
        Ok(PadicExponent { p, value, known_digits })
    }

    pub fn kind(&self) -> ExponentKind {
        if self.known_digits.is_some() {
            ExponentKind::Truncated
        } else {
            ExponentKind::ExactInteger
        }
    }

    pub fn representative(&self) -> &BigInt {
        &self.value
    }

    /// `s` for a truncated exponent.
    pub fn known_digits(&self) -> Option<u32> {
        self.known_digits
    }

    /// Base-`p` digits: of `value mod p^s` when truncated, of the value
    /// itself for a non-negative exact integer; `None` for negative integers.
    pub fn digits(&self) -> Option<Vec<u32>> {
        let p = BigInt::from(self.p);
        let mut out = Vec::new();
        match self.known_digits {
            Some(s) => {
                let mut v = self.value.mod_floor(&p.pow(s));
                for _ in 0..s {
                    let (q, r) = v.div_mod_floor(&p);
                    out.push(r.to_u32().expect("digit"));
                    v = q;
                }
            }
            None if self.value.is_negative() => return None,
            None => {
                let mut v = self.value.clone();
                while !v.is_zero() {
                    let (q, r) = v.div_mod_floor(&p);
                    out.push(r.to_u32().expect("digit"));
                    v = q;
                }
            }
        }
        Some(out)
    }

    /// `κ + delta`, with the same digit precision.
    pub fn shifted(&self, delta: i64) -> Self {
        PadicExponent { p: self.p, value: &self.value + delta, known_digits: self.known_digits }
    }

    /// `m·κ`; a truncated exponent keeps (at least) its digit precision.
    pub fn times(&self, m: u64) -> Self {
        PadicExponent { p: self.p, value: &self.value * m, known_digits: self.known_digits }
    }
}

/// `u^κ = Σ_l binom(κ, l) (u-1)^l` for a 1-unit `u`, certified to at most
/// `v_target` π-units.
///
/// With `e` a certified lower bound for `ord_π(u-1)`, term `l` has valuation
/// at least `l·e`, so summation stops at the first `l` with `l·e ≥ v_target`.
/// A truncated exponent known modulo `p^s` caps the certificate at
/// `e + s(p-1)`, the guaranteed valuation of `u^{p^s} - 1`.
pub fn one_unit_power(u: &PadicCyc, kappa: &PadicExponent, v_target: u64) -> Result<PadicCyc> {
    let p = u.p();
    if kappa.p != p {
        return Err(Error::Config(format!("exponent for p = {} used at p = {p}", kappa.p)));
    }
    let one = u.one_like();
    let delta = u - &one;
    let e = delta.val_lower_bound();
    if e == 0 {
        return Err(Error::Domain(format!("{u:?} is not a certified 1-unit")));
    }
    let target = v_target.min(u.ring().cap());
    let k = kappa.representative();
    let mut sum = one.clone();
    let mut binom = BigInt::one();
    let mut delta_pow = one;
    let mut l: u64 = 1;
    while l.saturating_mul(e) < target {
        // binom(k, l) = binom(k, l-1) (k - l + 1) / l, always exact
        binom = binom * (k - BigInt::from(l - 1)) / BigInt::from(l);
        if binom.is_zero() {
            break;
        }
        delta_pow = &delta_pow * &delta;
        sum = &sum + &(&delta_pow * &PadicCyc::from_int(u.ring(), binom.clone()));
        l += 1;
    }
    let mut cert = target;
    if let Some(s) = kappa.known_digits() {
        cert = cert.min(e + s as u64 * (p as u64 - 1));
    }
    Ok(sum.with_certificate(cert))
}

/// `E(X) = X^{deg} + c_1 X^{deg-1} + ... + c_deg`, given as `[1, c_1, ..., c_deg]`
/// (the same list as the coefficients of `P(T) = Π(1 - π_j T)`).
fn eval_eigen(coeffs: &[PadicCyc], x: &PadicCyc) -> PadicCyc {
    coeffs.iter().skip(1).fold(coeffs[0].clone(), |acc, c| &(&acc * x) + c)
}

fn eval_eigen_derivative(coeffs: &[PadicCyc], x: &PadicCyc) -> PadicCyc {
    let deg = coeffs.len() - 1;
    coeffs[..deg]
        .iter()
        .enumerate()
        .fold(x.zero_like(), |acc, (i, c)| &(&acc * x) + &(c * &x.int_like((deg - i) as i64)))
}

/// The unique simple root of `E` that is a unit, lifted by Newton iteration.
/// The root is certified to the smallest coefficient certificate.
fn lift_unit_root(coeffs: &[PadicCyc]) -> Result<PadicCyc> {
    let first = &coeffs[0];
    let p = first.p();
    let ring = first.ring().clone();
    let residues: Vec<u64> = coeffs.iter().map(|c| c.representative().residue() as u64).collect();
    let eval_mod_p = |x: u64, cs: &[u64]| cs.iter().fold(0u64, |acc, &c| (acc * x + c) % p as u64);
    let deg = coeffs.len() - 1;
    let deriv: Vec<u64> = residues[..deg].iter().enumerate().map(|(i, &c)| c * (deg - i) as u64 % p as u64).collect();
    let unit_roots: Vec<u64> = (1..p as u64).filter(|&x| eval_mod_p(x, &residues) == 0).collect();
    let simple: Vec<u64> = unit_roots.iter().copied().filter(|&x| eval_mod_p(x, &deriv) != 0).collect();
    if unit_roots.len() != 1 || simple.len() != 1 {
        return Err(Error::DegenerateFactor(format!(
            "expected exactly one simple unit root mod p, found roots {unit_roots:?} (simple: {simple:?})"
        )));
    }
    let cert = coeffs.iter().map(|c| c.certificate()).min().unwrap_or(0).min(ring.cap());
    let exact: Vec<PadicCyc> = coeffs.iter().map(PadicCyc::uncertified).collect();
    let mut x = PadicCyc::from_int(&ring, simple[0] as i64);
    for _ in 0..=(64 - ring.cap().leading_zeros()) + 2 {
        let fx = eval_eigen(&exact, &x);
        if fx.rep_val().is_none() {
            break;
        }
        let dfx = eval_eigen_derivative(&exact, &x).inverse()?;
        x = &x - &(&fx * &dfx);
    }
    if eval_eigen(&exact, &x).rep_val().is_some() {
        return Err(Error::DegenerateFactor("Newton iteration did not converge".into()));
    }
    Ok(PadicCyc { cert, ..x })
}

/// Unit root `π_0` of the local factor `P(T) = 1 + c_1 T + ... + c_{n+1} T^{n+1}`
/// (coefficients given exactly), at coordinate precision `p^N`. The root
/// must be a 1-unit.
pub fn hensel_unit_root(p_coeffs: &[CycInt], n: u32) -> Result<PadicCyc> {
    let ring = PadicRing::new(p_coeffs[0].level(), n);
    let coeffs: Vec<PadicCyc> = p_coeffs.iter().map(|c| PadicCyc::from_cyc(&ring, c)).collect();
    let root = lift_unit_root(&coeffs)?;
    if root.representative().residue() != 1 {
        return Err(Error::NotOneUnit(format!("unit root residue is {}", root.representative().residue())));
    }
    Ok(root)
}

/// Splits `P(T) = Π_j (1 - π_j T)` whose Newton polygon with respect to
/// `ord_{p^slope_unit}` has slopes exactly `0, 1, ..., deg-1`.
///
/// The unit root is lifted, deflated off, the remaining eigenvalue
/// polynomial is rescaled by `X = p^{slope_unit} Y` (now with a unit root
/// again), and the step repeats. Returns `π_0, ..., π_{deg-1}` with `π_0` a
/// 1-unit.
pub fn slope_split(p_coeffs: &[CycInt], slope_unit: u32, n: u32) -> Result<Vec<PadicCyc>> {
    let p = p_coeffs[0].level();
    let deg = p_coeffs.len() - 1;
    let found: Vec<Option<u64>> = p_coeffs.iter().map(|c| c.pi_val()).collect();
    let unit = (p as u64 - 1) * slope_unit as u64;
    let expected: Vec<Option<u64>> = (0..=deg as u64).map(|i| Some(unit * i * i.saturating_sub(1) / 2)).collect();
    if found != expected {
        return Err(Error::SlopeViolation {
            n: deg as u32 - 1,
            found: found.iter().map(|v| v.map_or("inf".to_string(), |v| v.to_string())).collect(),
            context: format!("pi-valuations of coefficients, expected {expected:?}"),
        });
    }
    let ring = PadicRing::new(p, n);
    let mut poly: Vec<PadicCyc> = p_coeffs.iter().map(|c| PadicCyc::from_cyc(&ring, c)).collect();
    let mut roots = Vec::with_capacity(deg);
    for j in 0..deg {
        let rho = lift_unit_root(&poly)?;
        if j == 0 && rho.representative().residue() != 1 {
            return Err(Error::NotOneUnit(format!("unit root residue is {}", rho.representative().residue())));
        }
        roots.push(rho.mul_p_pow(slope_unit * j as u32));
        if j + 1 == deg {
            break;
        }
        // synthetic division by (X - rho), then rescale
        let mut quotient = Vec::with_capacity(poly.len() - 1);
        let mut acc = poly[0].clone();
        quotient.push(acc.clone());
        for c in &poly[1..poly.len() - 1] {
            acc = c + &(&acc * &rho);
            quotient.push(acc.clone());
        }
        poly = quotient.iter().enumerate().map(|(i, c)| c.div_p_pow(slope_unit * i as u32)).collect::<Result<_>>()?;
    }
    Ok(roots)
}
