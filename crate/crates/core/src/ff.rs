//! Finite fields `F_p ⊂ F_q ⊂ F_{q^d}` built as `F_p[X]/(f)` with dense
//! log/exp tables, plus the closed points of the torus `G_m` over `F_q`.
//!
//! Elements are packed as the base-`p` integer `c_0 + c_1 p + ... + c_{A-1} p^{A-1}`
//! of their coordinates in the power basis `1, X, ..., X^{A-1}`. The
//! "lexicographic" order used for modulus selection and canonical orbit
//! representatives is the numeric order of this packing, i.e. coordinates are
//! compared from the highest power of `X` down to the constant term.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest field (number of elements) the tables are built for by default.
pub const DEFAULT_MAX_FIELD_SIZE: u64 = 1 << 22;

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2;
    while i * i <= n {
        if n.is_multiple_of(i) {
            return false;
        }
        i += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Dense polynomial arithmetic over `F_p`; coefficient vectors are low to high.
pub mod fp_poly {
    pub fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    fn inv_mod(a: u32, p: u32) -> u32 {
        let (mut t, mut new_t) = (0i64, 1i64);
        let (mut r, mut new_r) = (p as i64, a as i64);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        t.rem_euclid(p as i64) as u32
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        trim(out.into_iter().map(|c| c as u32).collect())
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    /// Remainder of `a` modulo a nonzero `m`.
    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let m = trim(m.to_vec());
        assert!(!m.is_empty(), "division by the zero polynomial");
        let mut r = trim(a.to_vec());
        let lead_inv = inv_mod(*m.last().unwrap(), p) as u64;
        while r.len() >= m.len() {
            let shift = r.len() - m.len();
            let c = (*r.last().unwrap() as u64 * lead_inv) % p as u64;
            for (i, &mi) in m.iter().enumerate() {
                let sub = (c * mi as u64) % p as u64;
                r[shift + i] = ((r[shift + i] as u64 + p as u64 - sub) % p as u64) as u32;
            }
            r = trim(r);
        }
        r
    }

    pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        rem(&mul(a, b, p), m, p)
    }

    pub fn powmod(a: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
        let mut result = rem(&[1], m, p);
        let mut base = rem(a, m, p);
        while e > 0 {
            if e & 1 == 1 {
                result = mulmod(&result, &base, m, p);
            }
            base = mulmod(&base, &base, m, p);
            e >>= 1;
        }
        result
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }
}

/// Ben-Or test: a degree-`A` polynomial is irreducible iff it shares no factor
/// with `X^{p^i} - X` for `1 <= i <= A/2`.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let f = fp_poly::trim(f.to_vec());
    let deg = match f.len() {
        0 | 1 => return false,
        n => n - 1,
    };
    let x = vec![0, 1];
    let mut xp = x.clone();
    for _ in 1..=deg / 2 {
        xp = fp_poly::powmod(&xp, p as u64, &f, p);
        let g = fp_poly::gcd(&f, &fp_poly::sub(&xp, &x, p), p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

fn digits(mut index: u64, p: u32, len: usize) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = (index % p as u64) as u32;
            index /= p as u64;
            d
        })
        .collect()
}

/// The monic irreducible polynomial of the given degree whose packed
/// non-leading coefficients are smallest.
pub fn smallest_irreducible(p: u32, degree: u32) -> Vec<u32> {
    let count = (p as u64).pow(degree);
    for index in 0..count {
        let mut f = digits(index, p, degree as usize);
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Number of closed points of degree `d` on `G_m` over `F_q`:
/// `(1/d) Σ_{e|d} μ(d/e)(q^e - 1)`.
pub fn closed_point_count(q: u64, d: u32) -> u64 {
    fn mobius(mut n: u32) -> i64 {
        let mut sign = 1;
        let mut f = 2;
        while f * f <= n {
            if n.is_multiple_of(f) {
                n /= f;
                if n.is_multiple_of(f) {
                    return 0;
                }
                sign = -sign;
            }
            f += 1;
        }
        if n > 1 {
            sign = -sign;
        }
        sign
    }
    let total: i128 =
        (1..=d).filter(|e| d.is_multiple_of(*e)).map(|e| mobius(d / e) as i128 * ((q as i128).pow(e) - 1)).sum();
    (total / d as i128) as u64
}

/// Description of `F_{p^A}` as `F_p[X]/(modulus)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldDesc {
    p: u32,
    degree: u32,
    modulus: Vec<u32>,
}

impl FieldDesc {
    /// Validates `p`, the degree and the modulus. With no modulus the
    /// smallest irreducible one is chosen.
    pub fn new(p: u32, degree: u32, modulus: Option<Vec<u32>>) -> Result<Self> {
        if p.is_multiple_of(2) || !is_prime(p as u64) {
            return Err(Error::Config(format!(
                "p = {p} is not an odd prime (the field characteristic must be an odd prime)"
            )));
        }
        if degree == 0 {
            return Err(Error::Config("extension degree must be at least 1".into()));
        }
        let modulus = match modulus {
            None => smallest_irreducible(p, degree),
            Some(m) => {
                if m.len() != degree as usize + 1 || m.last() != Some(&1) {
                    return Err(Error::Modulus(format!("modulus {m:?} is not monic of degree {degree}")));
                }
                if m.iter().any(|&c| c >= p) {
                    return Err(Error::Modulus(format!("coefficients of {m:?} must be < {p}")));
                }
                if !is_irreducible(&m, p) {
                    return Err(Error::Modulus(format!("{m:?} is reducible over F_{p}")));
                }
                m
            }
        };
        Ok(FieldDesc { p, degree, modulus })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Absolute degree over `F_p`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Monic modulus, coefficients low to high.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn size(&self) -> u64 {
        (self.p as u64).pow(self.degree)
    }
}

impl fmt::Display for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.degree, self.modulus)
    }
}

/// A field element, packed as described in the module docs. It carries no
/// reference to its field; every operation goes through a [`Field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtElem(u32);

impl ExtElem {
    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// `F_{p^A}` with log/exp/trace tables.
pub struct Field {
    desc: FieldDesc,
    size: u32,
    generator: ExtElem,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("desc", &self.desc).finish()
    }
}

/// Builds `F_{p^a}` (see [`FieldDesc::new`]).
pub fn make_field(p: u32, a: u32, modulus: Option<Vec<u32>>) -> Result<Arc<Field>> {
    Ok(Arc::new(Field::new(FieldDesc::new(p, a, modulus)?, DEFAULT_MAX_FIELD_SIZE)?))
}

impl Field {
    pub fn new(desc: FieldDesc, max_size: u64) -> Result<Self> {
        let size = desc.size();
        if size > max_size || size > u32::MAX as u64 {
            return Err(Error::Resource { what: "field size", requested: size, cap: max_size });
        }
        let p = desc.p;
        let a = desc.degree as usize;
        let order = size - 1;
        let mul_poly = |x: u64, y: u64| -> u64 {
            let prod = fp_poly::mulmod(&digits(x, p, a), &digits(y, p, a), &desc.modulus, p);
            prod.iter().rev().fold(0u64, |acc, &c| acc * p as u64 + c as u64)
        };
        let pow_poly = |x: u64, mut e: u64| -> u64 {
            let (mut r, mut b) = (1u64, x);
            while e > 0 {
                if e & 1 == 1 {
                    r = mul_poly(r, b);
                }
                b = mul_poly(b, b);
                e >>= 1;
            }
            r
        };
        let primes = prime_factors(order);
        let generator = (1..size)
            .find(|&g| primes.iter().all(|&r| pow_poly(g, order / r) != 1))
            .expect("the multiplicative group is cyclic");
        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![0u32; size as usize];
        let mut x = 1u64;
        for e in 0..order {
            exp.push(x as u32);
            log[x as usize] = e as u32;
            x = mul_poly(x, generator);
        }
        debug_assert_eq!(x, 1);

        // Tr(X^i) = Σ_j (X^i)^{p^j}; each value is a constant polynomial.
        let basis_traces: Vec<u64> = (0..a)
            .map(|i| {
                let xi = (p as u64).pow(i as u32);
                let mut acc = digits(0, p, a);
                let mut y = xi;
                for _ in 0..a {
                    let yd = digits(y, p, a);
                    for (s, t) in acc.iter_mut().zip(yd) {
                        *s = (*s + t) % p;
                    }
                    y = pow_poly(y, p as u64);
                }
                debug_assert!(acc[1..].iter().all(|&c| c == 0));
                acc[0] as u64
            })
            .collect();
        let trace = (0..size)
            .map(|idx| digits(idx, p, a).iter().zip(&basis_traces).map(|(&c, &t)| c as u64 * t).sum::<u64>() % p as u64)
            .map(|t| t as u32)
            .collect();
        Ok(Field { desc, size: size as u32, generator: ExtElem(generator as u32), exp, log, trace })
    }

    pub fn desc(&self) -> &FieldDesc {
        &self.desc
    }

    pub fn p(&self) -> u32 {
        self.desc.p
    }

    pub fn degree(&self) -> u32 {
        self.desc.degree
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn zero(&self) -> ExtElem {
        ExtElem(0)
    }

    pub fn one(&self) -> ExtElem {
        ExtElem(1)
    }

    /// Primitive element used for the log tables.
    pub fn generator(&self) -> ExtElem {
        self.generator
    }

    /// The prime-field constant `c mod p`.
    pub fn constant(&self, c: u32) -> ExtElem {
        ExtElem(c % self.p())
    }

    pub fn elem(&self, index: u32) -> ExtElem {
        assert!(index < self.size, "index {index} outside a field of size {}", self.size);
        ExtElem(index)
    }

    pub fn from_coords(&self, coords: &[u32]) -> Result<ExtElem> {
        if coords.len() != self.degree() as usize || coords.iter().any(|&c| c >= self.p()) {
            return Err(Error::Config(format!("{coords:?} is not a coordinate vector of {}", self.desc)));
        }
        Ok(ExtElem(coords.iter().rev().fold(0u32, |acc, &c| acc * self.p() + c)))
    }

    pub fn coords(&self, x: ExtElem) -> Vec<u32> {
        digits(x.0 as u64, self.p(), self.degree() as usize)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = ExtElem> {
        (1..self.size).map(ExtElem)
    }

    pub fn add(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        let p = self.p();
        let (mut a, mut b) = (x.0, y.0);
        let (mut out, mut scale) = (0u32, 1u32);
        for _ in 0..self.degree() {
            out += ((a % p + b % p) % p) * scale;
            a /= p;
            b /= p;
            scale = scale.wrapping_mul(p);
        }
        ExtElem(out)
    }

    pub fn scale(&self, x: ExtElem, c: u32) -> ExtElem {
        let p = self.p();
        let coords: Vec<u32> = self.coords(x).iter().map(|&d| (d as u64 * c as u64 % p as u64) as u32).collect();
        ExtElem(coords.iter().rev().fold(0u32, |acc, &d| acc * p + d))
    }

    pub fn neg(&self, x: ExtElem) -> ExtElem {
        self.scale(x, self.p() - 1)
    }

    pub fn sub(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        self.add(x, self.neg(y))
    }

    pub fn log(&self, x: ExtElem) -> Option<u32> {
        (!x.is_zero()).then(|| self.log[x.0 as usize])
    }

    /// `g^e` for the table generator `g`.
    pub fn exp(&self, e: u64) -> ExtElem {
        ExtElem(self.exp[(e % (self.size as u64 - 1)) as usize])
    }

    pub fn mul(&self, x: ExtElem, y: ExtElem) -> ExtElem {
        if x.is_zero() || y.is_zero() {
            return ExtElem(0);
        }
        let order = self.size - 1;
        let e = self.log[x.0 as usize] as u64 + self.log[y.0 as usize] as u64;
        ExtElem(self.exp[(e % order as u64) as usize])
    }

    pub fn inv(&self, x: ExtElem) -> Option<ExtElem> {
        let order = self.size - 1;
        self.log(x).map(|l| ExtElem(self.exp[((order - l) % order) as usize]))
    }

    pub fn pow(&self, x: ExtElem, e: u64) -> ExtElem {
        if x.is_zero() {
            return if e == 0 { self.one() } else { x };
        }
        let order = (self.size - 1) as u128;
        let l = self.log[x.0 as usize] as u128 * (e as u128 % order);
        ExtElem(self.exp[(l % order) as usize])
    }

    /// `x^{p^k}`.
    pub fn frobenius(&self, x: ExtElem, k: u32) -> ExtElem {
        let order = (self.size - 1) as u128;
        if x.is_zero() {
            return x;
        }
        let mut l = self.log[x.0 as usize] as u128;
        for _ in 0..k {
            l = l * self.p() as u128 % order;
        }
        ExtElem(self.exp[l as usize])
    }

    /// Absolute trace `Tr_{F_{p^A}/F_p}(x)` as an integer in `[0, p)`.
    pub fn abs_trace(&self, x: ExtElem) -> u32 {
        self.trace[x.0 as usize]
    }

    /// Evaluates a polynomial with `F_p` coefficients (low to high) at `x`.
    pub fn eval_fp_poly(&self, f: &[u32], x: ExtElem) -> ExtElem {
        f.iter().rev().fold(self.zero(), |acc, &c| self.add(self.mul(acc, x), self.constant(c)))
    }
}

/// A ring embedding `source → target` fixing `F_p`, determined by the image of
/// the source generator `X`.
pub struct Embedding {
    source: Arc<Field>,
    target: Arc<Field>,
    basis_images: Vec<ExtElem>,
    preimages: OnceLock<HashMap<ExtElem, ExtElem>>,
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedding").field("source", self.source.desc()).field("target", self.target.desc()).finish()
    }
}

impl Embedding {
    pub fn identity(field: &Arc<Field>) -> Self {
        let basis_images = (0..field.degree()).map(|i| field.elem(field.p().pow(i))).collect();
        Embedding { source: field.clone(), target: field.clone(), basis_images, preimages: OnceLock::new() }
    }

    /// Sends the source generator to the smallest root of the source modulus
    /// in `target`.
    pub fn new(source: &Arc<Field>, target: &Arc<Field>) -> Result<Self> {
        if source.p() != target.p() || !target.degree().is_multiple_of(source.degree()) {
            return Err(Error::Tower(format!("{} does not embed in {}", source.desc(), target.desc())));
        }
        if source.desc() == target.desc() {
            return Ok(Self::identity(source));
        }
        let modulus = source.desc().modulus();
        let root = (0..target.size())
            .map(ExtElem)
            .find(|&r| target.eval_fp_poly(modulus, r).is_zero())
            .ok_or_else(|| Error::Tower(format!("no root of {modulus:?} in {}", target.desc())))?;
        let mut basis_images = Vec::with_capacity(source.degree() as usize);
        let mut power = target.one();
        for _ in 0..source.degree() {
            basis_images.push(power);
            power = target.mul(power, root);
        }
        Ok(Embedding { source: source.clone(), target: target.clone(), basis_images, preimages: OnceLock::new() })
    }

    pub fn source(&self) -> &Arc<Field> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Field> {
        &self.target
    }

    pub fn apply(&self, x: ExtElem) -> ExtElem {
        let t = &self.target;
        self.source.coords(x).iter().zip(&self.basis_images).fold(t.zero(), |acc, (&c, &b)| t.add(acc, t.scale(b, c)))
    }

    pub fn preimage(&self, y: ExtElem) -> Option<ExtElem> {
        let table = self
            .preimages
            .get_or_init(|| (0..self.source.size()).map(|i| (self.apply(ExtElem(i)), ExtElem(i))).collect());
        table.get(&y).copied()
    }
}

/// `F_{q^d}` over `base = F_q` together with the embedding of `base`.
/// `d = 1` returns `base` itself with the identity embedding.
pub fn extend(base: &Arc<Field>, d: u32) -> Result<(Arc<Field>, Embedding)> {
    if d == 0 {
        return Err(Error::Config("extension degree must be at least 1".into()));
    }
    if d == 1 {
        return Ok((base.clone(), Embedding::identity(base)));
    }
    let desc = FieldDesc::new(base.p(), base.degree() * d, None)?;
    let target = Arc::new(Field::new(desc, DEFAULT_MAX_FIELD_SIZE)?);
    let emb = Embedding::new(base, &target)?;
    Ok((target, emb))
}

/// Relative trace `Σ_i x^{|sub|^i}` from `emb.target()` down to `emb.source()`.
pub fn trace(x: ExtElem, emb: &Embedding) -> Result<ExtElem> {
    let (sub, big) = (emb.source(), emb.target());
    let rel = big.degree() / sub.degree();
    let sum = (0..rel).fold(big.zero(), |acc, i| big.add(acc, big.frobenius(x, sub.degree() * i)));
    emb.preimage(sum).ok_or_else(|| Error::Tower(format!("trace value does not lie in {}", sub.desc())))
}

/// A Frobenius orbit of exact degree `d` over `F_q`, represented by its
/// smallest element in `F_{q^d}`.
#[derive(Clone)]
pub struct ClosedPoint {
    rep: ExtElem,
    degree: u32,
    base_degree: u32,
    field: Arc<Field>,
}

impl fmt::Debug for ClosedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedPoint(d={}, rep={:?})", self.degree, self.coords())
    }
}

impl ClosedPoint {
    pub fn rep(&self) -> ExtElem {
        self.rep
    }

    /// Degree over `F_q`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// `a` where `q = p^a`.
    pub fn base_degree(&self) -> u32 {
        self.base_degree
    }

    /// The field `F_{q^d}` holding the representative.
    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn coords(&self) -> Vec<u32> {
        self.field.coords(self.rep)
    }

    /// The `d` conjugates `rep^{q^i}`.
    pub fn orbit(&self) -> Vec<ExtElem> {
        (0..self.degree).map(|i| self.field.frobenius(self.rep, self.base_degree * i)).collect()
    }
}

fn enumerate_points(field: &Arc<Field>, base_degree: u32, d: u32) -> Vec<ClosedPoint> {
    let mut seen = vec![false; field.size() as usize];
    let mut points = Vec::new();
    for x in field.nonzero_elements() {
        if seen[x.index() as usize] {
            continue;
        }
        let mut orbit = vec![x];
        let mut y = field.frobenius(x, base_degree);
        while y != x {
            orbit.push(y);
            y = field.frobenius(y, base_degree);
        }
        for z in &orbit {
            seen[z.index() as usize] = true;
        }
        if orbit.len() == d as usize {
            points.push(ClosedPoint { rep: x, degree: d, base_degree, field: field.clone() });
        }
    }
    points
}

/// All closed points of `G_m/F_q` of degree `d`, in increasing order of
/// their representatives.
pub fn closed_points(base: &Arc<Field>, d: u32) -> Result<Vec<ClosedPoint>> {
    let (field, _) = extend(base, d)?;
    Ok(enumerate_points(&field, base.degree(), d))
}

/// Shared registry of fields of each absolute degree (smallest moduli) and
/// of embeddings between them, for one characteristic.
pub struct Tower {
    p: u32,
    max_field_size: u64,
    fields: Mutex<HashMap<u32, Arc<Field>>>,
    embeddings: Mutex<HashMap<(FieldDesc, FieldDesc), Arc<Embedding>>>,
}

impl Tower {
    pub fn new(p: u32, max_field_size: u64) -> Result<Self> {
        FieldDesc::new(p, 1, None)?;
        Ok(Tower { p, max_field_size, fields: Mutex::new(HashMap::new()), embeddings: Mutex::new(HashMap::new()) })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn max_field_size(&self) -> u64 {
        self.max_field_size
    }

    /// `F_{p^degree}` with the smallest irreducible modulus.
    pub fn field(&self, degree: u32) -> Result<Arc<Field>> {
        let mut fields = self.fields.lock().expect("field registry poisoned");
        if let Some(f) = fields.get(&degree) {
            return Ok(f.clone());
        }
        let size = (self.p as u64).checked_pow(degree).unwrap_or(u64::MAX);
        if size > self.max_field_size {
            return Err(Error::Resource { what: "field size", requested: size, cap: self.max_field_size });
        }
        let f = Arc::new(Field::new(FieldDesc::new(self.p, degree, None)?, self.max_field_size)?);
        fields.insert(degree, f.clone());
        Ok(f)
    }

    pub fn embedding(&self, source: &Arc<Field>, target: &Arc<Field>) -> Result<Arc<Embedding>> {
        let key = (source.desc().clone(), target.desc().clone());
        let mut map = self.embeddings.lock().expect("embedding registry poisoned");
        if let Some(e) = map.get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(Embedding::new(source, target)?);
        map.insert(key, e.clone());
        Ok(e)
    }

    /// `F_{q^d}` for `base = F_q`, matching [`extend`].
    pub fn extension(&self, base: &Arc<Field>, d: u32) -> Result<Arc<Field>> {
        if d == 1 {
            Ok(base.clone())
        } else {
            self.field(base.degree() * d)
        }
    }

    pub fn closed_points(&self, base: &Arc<Field>, d: u32) -> Result<Vec<ClosedPoint>> {
        if d == 0 {
            return Err(Error::Config("closed point degree must be at least 1".into()));
        }
        let field = self.extension(base, d)?;
        Ok(enumerate_points(&field, base.degree(), d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn prime_field_uses_modulus_x() {
        let f = make_field(3, 1, None).unwrap();
        assert_eq!(f.desc().modulus(), &[0, 1]);
        assert_eq!(f.size(), 3);
    }

    #[test]
    fn accepts_x2_plus_1_over_f3() {
        // X^2 + 1 has no root among 0, 1, 2.
        for x in 0..3u32 {
            assert_ne!((x * x + 1) % 3, 0);
        }
        let f = make_field(3, 2, Some(vec![1, 0, 1])).unwrap();
        assert_eq!(f.size(), 9);
    }

    #[test]
    fn rejects_reducible_and_bad_primes() {
        assert!(matches!(make_field(3, 2, Some(vec![1, 2, 1])), Err(Error::Modulus(_))));
        assert!(matches!(make_field(2, 1, None), Err(Error::Config(_))));
        assert!(matches!(make_field(9, 1, None), Err(Error::Config(_))));
        assert!(matches!(make_field(3, 0, None), Err(Error::Config(_))));
        assert!(matches!(make_field(3, 2, Some(vec![1, 0, 2])), Err(Error::Modulus(_))));
    }

    #[test]
    fn smallest_moduli_by_exhaustive_search() {
        assert_eq!(smallest_irreducible(3, 2), vec![1, 0, 1]);
        // exhaustive: a degree-4 polynomial is irreducible iff it has no
        // factor of degree 1 or 2; check the chosen one against brute force.
        let f = smallest_irreducible(3, 4);
        let mut divisors = Vec::new();
        for deg in 1..=2u32 {
            for idx in 0..3u64.pow(deg) {
                let mut g = digits(idx, 3, deg as usize);
                g.push(1);
                divisors.push(g);
            }
        }
        assert!(divisors.iter().all(|g| !fp_poly::rem(&f, g, 3).is_empty()));
        // every smaller candidate has a divisor
        let idx_f = f[..4].iter().rev().fold(0u64, |acc, &c| acc * 3 + c as u64);
        for idx in 0..idx_f {
            let mut g = digits(idx, 3, 4);
            g.push(1);
            assert!(divisors.iter().any(|d| fp_poly::rem(&g, d, 3).is_empty()), "{g:?}");
        }
    }

    #[test]
    fn extend_prime_field() {
        let f3 = make_field(3, 1, None).unwrap();
        let (same, emb) = extend(&f3, 1).unwrap();
        assert_eq!(same.desc(), f3.desc());
        assert_eq!(emb.apply(f3.elem(2)), f3.elem(2));
        let (f9, emb) = extend(&f3, 2).unwrap();
        assert_eq!(f9.desc().modulus(), &[1, 0, 1]);
        for c in 0..3 {
            assert_eq!(emb.apply(f3.elem(c)), f9.constant(c));
        }
    }

    #[test]
    fn extend_f9_to_f81() {
        let f9 = make_field(3, 2, None).unwrap();
        let (f81, emb) = extend(&f9, 2).unwrap();
        assert_eq!(f81.degree(), 4);
        // ring homomorphism on all pairs
        for x in 0..9 {
            for y in 0..9 {
                let (x, y) = (f9.elem(x), f9.elem(y));
                assert_eq!(emb.apply(f9.mul(x, y)), f81.mul(emb.apply(x), emb.apply(y)));
                assert_eq!(emb.apply(f9.add(x, y)), f81.add(emb.apply(x), emb.apply(y)));
            }
        }
        // the generator X of F_9 goes to a root of X^2 + 1
        let g = emb.apply(f9.elem(3));
        assert!(f81.eval_fp_poly(&[1, 0, 1], g).is_zero());
    }

    #[test]
    fn table_multiplication_matches_polynomial_multiplication() {
        let f = make_field(5, 3, None).unwrap();
        let m = f.desc().modulus().to_vec();
        for x in (0..f.size()).step_by(7) {
            for y in (0..f.size()).step_by(11) {
                let (ex, ey) = (f.elem(x), f.elem(y));
                let expect = fp_poly::mulmod(&f.coords(ex), &f.coords(ey), &m, 5);
                let mut got = f.coords(f.mul(ex, ey));
                got = fp_poly::trim(got);
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn trace_examples() {
        let f3 = make_field(3, 1, None).unwrap();
        let (f9, emb) = extend(&f3, 2).unwrap();
        for c in 0..3 {
            let t = trace(f9.constant(c), &emb).unwrap();
            assert_eq!(t, f3.elem(2 * c % 3));
        }
        // g = X, a root of X^2 + 1: g + g^3 = 0
        let g = f9.elem(3);
        assert!(trace(g, &emb).unwrap().is_zero());
    }

    #[test]
    fn trace_tables_agree_with_frobenius_sums() {
        let tower = Tower::new(3, DEFAULT_MAX_FIELD_SIZE).unwrap();
        let f = tower.field(4).unwrap();
        let f3 = tower.field(1).unwrap();
        let emb = tower.embedding(&f3, &f).unwrap();
        for x in 0..f.size() {
            let x = f.elem(x);
            assert_eq!(trace(x, &emb).unwrap().index(), f.abs_trace(x));
        }
    }

    #[test]
    fn trace_is_transitive_along_the_tower() {
        let tower = Tower::new(3, DEFAULT_MAX_FIELD_SIZE).unwrap();
        let (f3, f9, f81) = (tower.field(1).unwrap(), tower.field(2).unwrap(), tower.field(4).unwrap());
        let e_9_81 = tower.embedding(&f9, &f81).unwrap();
        let e_3_9 = tower.embedding(&f3, &f9).unwrap();
        let e_3_81 = tower.embedding(&f3, &f81).unwrap();
        for x in 0..f81.size() {
            let x = f81.elem(x);
            let two_step = trace(trace(x, &e_9_81).unwrap(), &e_3_9).unwrap();
            assert_eq!(two_step, trace(x, &e_3_81).unwrap());
        }
    }

    #[test]
    fn closed_point_examples() {
        let f3 = make_field(3, 1, None).unwrap();
        let pts = closed_points(&f3, 1).unwrap();
        assert_eq!(pts.iter().map(|p| p.rep().index()).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(closed_points(&f3, 2).unwrap().len(), 3);
        assert_eq!(closed_points(&f3, 3).unwrap().len(), 8);
        assert_eq!(closed_point_count(3, 2), 3);
        assert_eq!(closed_point_count(3, 3), 8);
    }

    #[test]
    fn closed_points_match_mobius_and_partition_orbits() {
        let tower = Tower::new(3, DEFAULT_MAX_FIELD_SIZE).unwrap();
        for a in 1..=2u32 {
            let base = tower.field(a).unwrap();
            let q = 3u64.pow(a);
            for d in 1..=4u32 {
                if a * d > 8 {
                    continue;
                }
                let pts = tower.closed_points(&base, d).unwrap();
                assert_eq!(pts.len() as u64, closed_point_count(q, d), "q={q} d={d}");
                let mut all = HashSet::new();
                for pt in &pts {
                    let orbit = pt.orbit();
                    let distinct: HashSet<_> = orbit.iter().copied().collect();
                    assert_eq!(distinct.len(), d as usize);
                    assert_eq!(*orbit.iter().min().unwrap(), pt.rep());
                    for z in orbit {
                        assert!(all.insert(z), "orbit overlap");
                    }
                }
            }
        }
    }

    #[test]
    fn custom_base_modulus_gives_same_point_count() {
        let base = make_field(3, 2, Some(vec![2, 1, 1])).unwrap();
        let tower = Tower::new(3, DEFAULT_MAX_FIELD_SIZE).unwrap();
        assert_eq!(tower.closed_points(&base, 1).unwrap().len(), 8);
        assert_eq!(tower.closed_points(&base, 2).unwrap().len() as u64, closed_point_count(9, 2));
    }

    #[test]
    fn oversized_fields_are_refused() {
        let tower = Tower::new(3, 1000).unwrap();
        assert!(matches!(tower.field(7), Err(Error::Resource { .. })));
    }
}
