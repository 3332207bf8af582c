//! Exact arithmetic in `Z[ζ_p]` in the power basis `1, ζ, ..., ζ^{p-2}`.
//!
//! [`Cyc`] is generic over the coordinate integer type; the pipeline uses
//! [`crate::CycInt`] (arbitrary precision) since the coefficients of
//! symmetric power factors grow without bound.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

use crate::error::{Error, Result};

/// Integer types usable as coordinates.
pub trait CycScalar: Clone + Integer + Signed + FromPrimitive + ToPrimitive + fmt::Display + fmt::Debug {}

impl<T> CycScalar for T where T: Clone + Integer + Signed + FromPrimitive + ToPrimitive + fmt::Display + fmt::Debug {}

/// An element of `Z[ζ_p]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cyc<T> {
    p: u32,
    coords: Vec<T>,
}

fn scalar<T: CycScalar>(c: i64) -> T {
    T::from_i64(c).expect("small constant fits the scalar type")
}

impl<T: CycScalar> Cyc<T> {
    /// Element with the given coordinates; `coords.len()` must be `p - 1`.
    pub fn from_coords(p: u32, coords: Vec<T>) -> Result<Self> {
        if p < 3 || coords.len() != p as usize - 1 {
            return Err(Error::Config(format!(
                "level {p} needs {} coordinates, got {}",
                p.saturating_sub(1),
                coords.len()
            )));
        }
        Ok(Cyc { p, coords })
    }

    pub fn zero(p: u32) -> Self {
        Cyc { p, coords: vec![T::zero(); p as usize - 1] }
    }

    pub fn from_int(p: u32, c: T) -> Self {
        let mut z = Self::zero(p);
        z.coords[0] = c;
        z
    }

    pub fn one(p: u32) -> Self {
        Self::from_int(p, T::one())
    }

    /// `ζ^k` for any integer `k`.
    pub fn zeta_pow(p: u32, k: i64) -> Self {
        let mut counts = vec![T::zero(); p as usize];
        counts[k.rem_euclid(p as i64) as usize] = T::one();
        Self::from_group_ring(p, counts)
    }

    /// Reduces `Σ_{j<p} c_j ζ^j` using `ζ^{p-1} = -(1 + ζ + ... + ζ^{p-2})`.
    pub fn from_group_ring(p: u32, mut counts: Vec<T>) -> Self {
        assert_eq!(counts.len(), p as usize);
        let top = counts.pop().expect("p >= 3");
        let coords = counts.into_iter().map(|c| c - top.clone()).collect();
        Cyc { p, coords }
    }

    pub fn level(&self) -> u32 {
        self.p
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    fn check_level(&self, other: &Self) -> Result<()> {
        if self.p == other.p {
            Ok(())
        } else {
            Err(Error::LevelMismatch(self.p, other.p))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(Cyc { p: self.p, coords })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(Cyc { p: self.p, coords })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let p = self.p as usize;
        let mut acc = vec![T::zero(); p];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                let k = (i + j) % p;
                acc[k] = acc[k].clone() + a.clone() * b.clone();
            }
        }
        Ok(Self::from_group_ring(self.p, acc))
    }

    pub fn scale(&self, c: &T) -> Self {
        Cyc { p: self.p, coords: self.coords.iter().map(|a| a.clone() * c.clone()).collect() }
    }

    /// `self / c` when every coordinate is divisible by `c`.
    pub fn div_exact(&self, c: &T) -> Option<Self> {
        if c.is_zero() || self.coords.iter().any(|a| !(a.clone() % c.clone()).is_zero()) {
            return None;
        }
        Some(Cyc { p: self.p, coords: self.coords.iter().map(|a| a.clone() / c.clone()).collect() })
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut result = Self::one(self.p);
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

    /// The Galois substitution `ζ ↦ ζ^c` for `c` prime to `p`.
    pub fn galois(&self, c: u32) -> Self {
        let p = self.p as usize;
        assert!(!(c as usize).is_multiple_of(p), "ζ ↦ ζ^c needs c prime to p");
        let mut acc = vec![T::zero(); p];
        for (i, a) in self.coords.iter().enumerate() {
            let k = i * c as usize % p;
            acc[k] = acc[k].clone() + a.clone();
        }
        Self::from_group_ring(self.p, acc)
    }

    /// Image in the residue field `Z[ζ_p]/(1-ζ) = F_p`.
    pub fn residue(&self) -> u32 {
        let p = scalar::<T>(self.p as i64);
        let s = self.coords.iter().fold(T::zero(), |acc, c| acc + c.clone());
        s.mod_floor(&p).to_u32().expect("residue below p")
    }

    /// `y` with `(1 - ζ) y = self`, if it exists.
    ///
    /// Writing `y = Σ y_i ζ^i` the product has coordinates
    /// `c_i = y_i - y_{i-1} + y_{p-2}`, so `y_{p-2} = (Σ c_i)/p` and the
    /// remaining `y_i` follow by prefix sums.
    pub fn div_one_minus_zeta(&self) -> Option<Self> {
        let p = scalar::<T>(self.p as i64);
        let total = self.coords.iter().fold(T::zero(), |acc, c| acc + c.clone());
        let (s, r) = total.div_rem(&p);
        if !r.is_zero() {
            return None;
        }
        let mut prefix = T::zero();
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, c)| {
                prefix = prefix.clone() + c.clone();
                prefix.clone() - scalar::<T>(i as i64 + 1) * s.clone()
            })
            .collect();
        Some(Cyc { p: self.p, coords })
    }

    /// Exact `(1-ζ)`-adic valuation; `None` for zero. `ord_p = v/(p-1)`.
    pub fn pi_val(&self) -> Option<u64> {
        if self.is_zero() {
            return None;
        }
        let p = scalar::<T>(self.p as i64);
        let content = self.coords.iter().fold(T::zero(), |g, c| g.gcd(c));
        let mut pexp = 0u64;
        let mut pk = T::one();
        let mut rest = content;
        while (rest.clone() % p.clone()).is_zero() {
            rest = rest / p.clone();
            pk = pk * p.clone();
            pexp += 1;
        }
        let mut x = self.div_exact(&pk).expect("content is divisible");
        let mut v = pexp * (self.p as u64 - 1);
        while let Some(y) = x.div_one_minus_zeta() {
            x = y;
            v += 1;
        }
        Some(v)
    }

    /// `c` when `self = c · 1`.
    pub fn as_integer(&self) -> Result<T> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Ok(self.coords[0].clone())
        } else {
            Err(Error::NotRational(self.to_string()))
        }
    }

    pub fn map<U: CycScalar>(&self, f: impl Fn(&T) -> U) -> Cyc<U> {
        Cyc { p: self.p, coords: self.coords.iter().map(f).collect() }
    }
}

impl<T: CycScalar> Add for &Cyc<T> {
    type Output = Cyc<T>;
    fn add(self, rhs: Self) -> Cyc<T> {
        self.checked_add(rhs).expect("cyclotomic level mismatch")
    }
}

impl<T: CycScalar> Sub for &Cyc<T> {
    type Output = Cyc<T>;
    fn sub(self, rhs: Self) -> Cyc<T> {
        self.checked_sub(rhs).expect("cyclotomic level mismatch")
    }
}

impl<T: CycScalar> Mul for &Cyc<T> {
    type Output = Cyc<T>;
    fn mul(self, rhs: Self) -> Cyc<T> {
        self.checked_mul(rhs).expect("cyclotomic level mismatch")
    }
}

impl<T: CycScalar> Neg for &Cyc<T> {
    type Output = Cyc<T>;
    fn neg(self) -> Cyc<T> {
        Cyc { p: self.p, coords: self.coords.iter().map(|c| -c.clone()).collect() }
    }
}

/// Serialized as `p:[c_0,...,c_{p-2}]`.
impl<T: CycScalar> fmt::Display for Cyc<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:[", self.p)?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

impl<T: CycScalar> FromStr for Cyc<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed cyclotomic integer {s:?}"));
        let (p, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let p: u32 = p.parse().map_err(|_| bad())?;
        let body = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let coords =
            body.split(',').map(|c| T::from_str_radix(c.trim(), 10).map_err(|_| bad())).collect::<Result<Vec<T>>>()?;
        Cyc::from_coords(p, coords)
    }
}
