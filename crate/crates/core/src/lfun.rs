//! Local L-factors at closed points, their symmetric powers, the
//! `κ`-interpolated infinite symmetric power factors, and truncated Euler
//! products.
//!
//! Conventions: a local factor is `P(T) = Π_{j=0}^{n} (1 - π_j T)`, stored
//! as `[1, c_1, ..., c_{n+1}]`. Its Frobenius power sums are
//! `Σ_j π_j^m = (-1)^n Kl_n(t, m)`. Series coefficients are listed from the
//! constant term up.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expsum::SumEvaluator;
use crate::ff::{closed_point_count, ClosedPoint};
use crate::padic::{one_unit_power, slope_split, PadicCyc, PadicExponent, PadicRing};
use crate::poly::{berkowitz, inverse_trunc, mul_trunc, RingElem};
use crate::CycInt;

/// `P(T) = 1 + c_1 T + ... + c_{n+1} T^{n+1}` at a closed point of degree `d`
/// over `F_q`, `q = p^a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFactor {
    n: u32,
    d: u32,
    a: u32,
    coeffs: Vec<CycInt>,
}

impl LocalFactor {
    /// Assembles a factor from its coefficients and checks the structural
    /// facts: constant term 1, degree `n+1`, leading coefficient
    /// `±q^{n(n+1)d/2}`, Newton slopes `0, 1, ..., n` with respect to
    /// `ord_{q^d}`, and a unit root congruent to 1.
    pub fn new(n: u32, d: u32, a: u32, coeffs: Vec<CycInt>) -> Result<Self> {
        let f = Self::unchecked(n, d, a, coeffs)?;
        f.check()?;
        Ok(f)
    }

    /// Assembles without checking the structural facts (used for synthetic
    /// factors and for diagnosing findings).
    pub fn unchecked(n: u32, d: u32, a: u32, coeffs: Vec<CycInt>) -> Result<Self> {
        if coeffs.len() != n as usize + 2 {
            return Err(Error::Config(format!("expected {} coefficients, got {}", n + 2, coeffs.len())));
        }
        if coeffs[0] != CycInt::one(coeffs[0].level()) {
            return Err(Error::Config(format!("constant term {} is not 1", coeffs[0])));
        }
        Ok(LocalFactor { n, d, a, coeffs })
    }

    /// From the eigenvalue power sums `s_1, ..., s_{n+1}`.
    pub fn from_power_sums(n: u32, d: u32, a: u32, sums: &[CycInt]) -> Result<Self> {
        Self::new(n, d, a, coeffs_from_power_sums(n as usize + 1, sums)?)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn p(&self) -> u32 {
        self.coeffs[0].level()
    }

    pub fn coeffs(&self) -> &[CycInt] {
        &self.coeffs
    }

    /// `ord_p` of `q^d`, the slope unit of the factor.
    pub fn slope_unit(&self) -> u32 {
        self.a * self.d
    }

    /// `q^{n(n+1)d/2}`.
    pub fn expected_leading(&self) -> BigInt {
        let e = self.slope_unit() as u64 * self.n as u64 * (self.n as u64 + 1) / 2;
        BigInt::from(self.p()).pow(e as u32)
    }

    /// Sign `±1` of the leading coefficient relative to `q^{n(n+1)d/2}`
    /// (0 if it is neither).
    pub fn leading_sign(&self) -> i8 {
        let expected = self.expected_leading();
        match self.coeffs.last().and_then(|c| c.as_integer().ok()) {
            Some(c) if c == expected => 1,
            Some(c) if c == -expected => -1,
            _ => 0,
        }
    }

    /// π-valuations of the coefficients, `None` for zero.
    pub fn pi_vals(&self) -> Vec<Option<u64>> {
        self.coeffs.iter().map(CycInt::pi_val).collect()
    }

    /// The π-valuations that slopes `0, ..., n` force on the coefficients.
    pub fn expected_pi_vals(&self) -> Vec<u64> {
        let unit = (self.p() as u64 - 1) * self.slope_unit() as u64;
        (0..=self.n as u64 + 1).map(|i| unit * i * i.saturating_sub(1) / 2).collect()
    }

    pub fn check(&self) -> Result<()> {
        let context = format!("n={} d={} a={} P={}", self.n, self.d, self.a, self.display_poly());
        if self.leading_sign() == 0 {
            return Err(Error::FunctionalEquation {
                expected: self.expected_leading().to_string(),
                found: self.coeffs.last().expect("nonempty").to_string(),
                context,
            });
        }
        let found = self.pi_vals();
        let expected = self.expected_pi_vals();
        if found.iter().zip(&expected).any(|(f, e)| *f != Some(*e)) {
            let unit = (self.p() as u64 - 1) * self.slope_unit() as u64;
            return Err(Error::SlopeViolation {
                n: self.n,
                found: found.iter().map(|v| v.map_or_else(|| "inf".to_string(), |v| format!("{v}/{unit}"))).collect(),
                context: format!("ord_q^d of the coefficients; {context}"),
            });
        }
        // the unit root is congruent to e_1 = -c_1 modulo π
        let r = (&CycInt::zero(self.p()) - &self.coeffs[1]).residue();
        if r != 1 {
            return Err(Error::NotOneUnit(format!("unit root residue {r}; {context}")));
        }
        Ok(())
    }

    fn display_poly(&self) -> String {
        let terms: Vec<String> = self.coeffs.iter().enumerate().map(|(i, c)| format!("({c})T^{i}")).collect();
        terms.join(" + ")
    }

    /// Frobenius roots `π_0, ..., π_n` modulo `p^prec` (coordinate precision).
    pub fn roots(&self, prec: u32) -> Result<Vec<PadicCyc>> {
        slope_split(&self.coeffs, self.slope_unit(), prec)
    }
}

/// `[1, c_1, ..., c_deg]` from `s_1, ..., s_deg` by Newton's identities
/// `k e_k = Σ_{i=1}^{k} (-1)^{i-1} e_{k-i} s_i`, `c_i = (-1)^i e_i`; every
/// division is exact or reported.
pub fn coeffs_from_power_sums(deg: usize, sums: &[CycInt]) -> Result<Vec<CycInt>> {
    if sums.len() < deg {
        return Err(Error::Config(format!("need {deg} power sums, got {}", sums.len())));
    }
    let p = sums[0].level();
    let mut e = vec![CycInt::one(p)];
    for k in 1..=deg {
        let mut acc = CycInt::zero(p);
        for i in 1..=k {
            let term = &e[k - i] * &sums[i - 1];
            acc = if i % 2 == 1 { &acc + &term } else { &acc - &term };
        }
        let ek = acc
            .div_exact(&BigInt::from(k))
            .ok_or_else(|| Error::DegenerateFactor(format!("power sums give a non-integral e_{k} (k e_k = {acc})")))?;
        e.push(ek);
    }
    Ok(e.iter().enumerate().map(|(i, x)| if i % 2 == 0 { x.clone() } else { -x }).collect())
}

/// Local factor at `point` from `Kl_n(t, m)`, `m = 1, ..., n+1`.
pub fn local_factor(ev: &SumEvaluator, n: u32, point: &ClosedPoint) -> Result<LocalFactor> {
    let sign = if n.is_multiple_of(2) { 1 } else { -1 };
    let sums = (1..=n + 1)
        .map(|m| ev.kloosterman(n, point, m).map(|k| if sign == 1 { k } else { -&k }))
        .collect::<Result<Vec<_>>>()?;
    LocalFactor::from_power_sums(n, point.degree(), point.base_degree(), &sums)
}

/// `s_m = Σ_j π_j^m` for `m = 1..=m_max` from the coefficients alone:
/// `s_m + c_1 s_{m-1} + ... + c_{m-1} s_1 + m c_m = 0`.
pub fn eigen_power_sums(f: &LocalFactor, m_max: usize) -> Vec<CycInt> {
    let c = f.coeffs();
    let p = f.p();
    let mut s: Vec<CycInt> = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let mut acc = if m < c.len() { c[m].scale(&BigInt::from(m)) } else { CycInt::zero(p) };
        for i in 1..m.min(c.len()) {
            acc = &acc + &(&c[i] * &s[m - i - 1]);
        }
        s.push(-&acc);
    }
    s
}

/// Exponent vectors of the degree-`k` monomials in `vars` variables, in
/// lexicographic order (largest first exponent first).
pub fn monomials(vars: usize, k: u32) -> Vec<Vec<u32>> {
    if vars == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in monomials(vars - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `det(1 - Sym^k(F) T)` where `F` has characteristic polynomial the
/// eigenvalue polynomial of `f`: the local factor of the `k`-th symmetric
/// power, exactly, of degree `binom(n+k, n)`.
pub fn sym_k_factor(f: &LocalFactor, k: u32) -> Vec<CycInt> {
    let p = f.p();
    let c = f.coeffs();
    let dim = c.len() - 1;
    // companion matrix: subdiagonal ones, last column -c_{dim-i}
    let mut comp = vec![vec![CycInt::zero(p); dim]; dim];
    for i in 1..dim {
        comp[i][i - 1] = CycInt::one(p);
    }
    for (i, row) in comp.iter_mut().enumerate() {
        row[dim - 1] = -&c[dim - i];
    }
    let basis = monomials(dim, k);
    let index: HashMap<&[u32], usize> = basis.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
    let size = basis.len();
    let mut sym = vec![vec![CycInt::zero(p); size]; size];
    for (col, mono) in basis.iter().enumerate() {
        // image of y^mono: Π_j (Σ_i comp[i][j] y_i)^{mono_j}
        let mut image: HashMap<Vec<u32>, CycInt> = HashMap::from([(vec![0; dim], CycInt::one(p))]);
        for (j, &e) in mono.iter().enumerate() {
            for _ in 0..e {
                let mut next: HashMap<Vec<u32>, CycInt> = HashMap::new();
                for (m, coef) in &image {
                    for (i, row) in comp.iter().enumerate() {
                        if row[j].is_zero() {
                            continue;
                        }
                        let mut m2 = m.clone();
                        m2[i] += 1;
                        let term = coef * &row[j];
                        let slot = next.entry(m2).or_insert_with(|| CycInt::zero(p));
                        *slot = &*slot + &term;
                    }
                }
                image = next;
            }
        }
        for (m, coef) in image {
            sym[index[m.as_slice()]][col] = coef;
        }
    }
    // det(X - S) = X^N + s_1 X^{N-1} + ... + s_N  gives  det(1 - S T) = 1 + s_1 T + ... + s_N T^N
    berkowitz(&sym)
}

/// `Π_{|α| = k} (1 - π^α T)` from lifted roots; a p-adic cross-check of
/// [`sym_k_factor`].
pub fn sym_k_from_roots(roots: &[PadicCyc], k: u32) -> Vec<PadicCyc> {
    let one = roots[0].one_like();
    let mut poly = vec![one.clone()];
    for mono in monomials(roots.len(), k) {
        let eig = mono.iter().zip(roots).fold(one.clone(), |acc, (&e, r)| &acc * &r.pow(e as u64));
        poly = mul_trunc(&poly, &[one.clone(), -&eig], poly.len() + 1);
    }
    poly
}

/// Coordinate precision used to lift roots so that every `π_j` is certified
/// to at least `v` π-units.
pub fn root_precision(f: &LocalFactor, v: u64) -> u32 {
    let p = f.p() as u64;
    let n = f.n() as u64;
    (v.div_ceil(p - 1) + f.slope_unit() as u64 * n * (n + 1) / 2 + 1) as u32
}

/// Tuples `i ∈ N^n` with weight `Σ j i_j ≤ w_max`, in lexicographic order.
pub fn weight_tuples(n: u32, w_max: u64) -> Vec<Vec<u64>> {
    fn rec(j: u64, n: u64, budget: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if j > n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..=budget / j {
            prefix.push(i);
            rec(j + 1, n, budget - i * j, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n as u64, w_max, &mut Vec::new(), &mut out);
    out
}

fn padic_geometric_product(one: &PadicCyc, eigenvalues: &[PadicCyc], d: usize, len: usize) -> Vec<PadicCyc> {
    let mut r = vec![one.zero_like(); len];
    r[0] = one.clone();
    for lam in eigenvalues {
        // r ← r / (1 - λ T^d)
        for m in d..len {
            let add = lam * &r[m - d];
            r[m] = &r[m] + &add;
        }
    }
    r
}

fn finish(coeffs: Vec<PadicCyc>, v: u64) -> Vec<PadicCyc> {
    let p = coeffs[0].p();
    let out = PadicRing::for_pi_precision(p, v);
    coeffs.into_iter().map(|c| c.with_certificate(v).reduce_to(&out)).collect()
}

fn check_precision(v: u64) -> Result<()> {
    if v == 0 {
        Err(Error::Precision { needed: 1, have: 0 })
    } else {
        Ok(())
    }
}

/// `Π_i 1/(1 - π_0^{κ-|i|} π_1^{i_1} ··· π_n^{i_n} T^d)` through `T^{deg_max}`,
/// certified to `v` π-units. Only tuples with `(p-1)·a·d·w(i) < v` are
/// multiplied in; every other factor is `≡ 1` to that precision.
pub fn sym_inf_local(f: &LocalFactor, kappa: &PadicExponent, v: u64, deg_max: usize) -> Result<Vec<PadicCyc>> {
    check_precision(v)?;
    let roots = f.roots(root_precision(f, v))?;
    sym_inf_from_roots(f, &roots, kappa, v, deg_max)
}

/// [`sym_inf_local`] with precomputed roots (certified to at least `v`).
pub fn sym_inf_from_roots(
    f: &LocalFactor,
    roots: &[PadicCyc],
    kappa: &PadicExponent,
    v: u64,
    deg_max: usize,
) -> Result<Vec<PadicCyc>> {
    check_precision(v)?;
    let have = roots.iter().map(PadicCyc::certificate).min().unwrap_or(0);
    if have < v {
        return Err(Error::Precision { needed: v, have });
    }
    let unit = (f.p() as u64 - 1) * f.slope_unit() as u64;
    let w_max = (v - 1) / unit;
    let mut eigenvalues = Vec::new();
    for tuple in weight_tuples(f.n(), w_max) {
        let size: u64 = tuple.iter().sum();
        let mut lam = one_unit_power(&roots[0], &kappa.shifted(-(size as i64)), v)?;
        for (j, &e) in tuple.iter().enumerate() {
            if e > 0 {
                lam = &lam * &roots[j + 1].pow(e);
            }
        }
        eigenvalues.push(lam);
    }
    let one = roots[0].one_like();
    Ok(finish(padic_geometric_product(&one, &eigenvalues, f.degree() as usize, deg_max + 1), v))
}

/// Oracle for [`sym_inf_local`] through complete homogeneous sums:
/// `σ_m = (π_0^κ)^m / Π_{j≥1} (1 - (π_j/π_0)^m)` and `m h_m = Σ_i σ_i h_{m-i}`,
/// where division by `m` costs `ord_p(m)·(p-1)` π-units of certificate.
pub fn sym_inf_local_hsum(f: &LocalFactor, kappa: &PadicExponent, v: u64, deg_max: usize) -> Result<Vec<PadicCyc>> {
    check_precision(v)?;
    let d = f.degree() as usize;
    let terms = deg_max / d;
    let p = f.p() as u64;
    let max_vp = (1..=terms.max(1) as u64)
        .map(|m| {
            let (mut m, mut e) = (m, 0u64);
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            e
        })
        .max()
        .unwrap_or(0);
    let v_work = v + terms as u64 * max_vp * (p - 1);
    let roots = f.roots(root_precision(f, v_work))?;
    let pi0_kappa = one_unit_power(&roots[0], kappa, v_work)?;
    let pi0_inv = roots[0].inverse()?;
    let ratios: Vec<PadicCyc> = roots[1..].iter().map(|r| r * &pi0_inv).collect();
    let one = roots[0].one_like();
    let mut sigma = Vec::with_capacity(terms);
    for m in 1..=terms as u64 {
        let mut s = pi0_kappa.pow(m);
        for r in &ratios {
            s = &s * &(&one - &r.pow(m)).inverse()?;
        }
        sigma.push(s);
    }
    let mut h = vec![one.clone()];
    for m in 1..=terms {
        let acc = (1..=m).fold(one.zero_like(), |acc, i| &acc + &(&sigma[i - 1] * &h[m - i]));
        let (mut unit_part, mut e) = (m as u64, 0u32);
        while unit_part % p == 0 {
            unit_part /= p;
            e += 1;
        }
        let inv = one.int_like(unit_part as i64).inverse()?;
        h.push((&acc * &inv).div_p_pow(e)?);
    }
    let mut out = vec![one.zero_like(); deg_max + 1];
    for (m, hm) in h.into_iter().enumerate() {
        out[m * d] = hm;
    }
    let cert = out.iter().map(PadicCyc::certificate).min().unwrap_or(v).min(v);
    Ok(finish(out, cert))
}

/// `1/(1 - π_0^κ T^d)` through `T^{deg_max}`, certified to `v` π-units.
pub fn unit_root_local(f: &LocalFactor, kappa: &PadicExponent, v: u64, deg_max: usize) -> Result<Vec<PadicCyc>> {
    check_precision(v)?;
    let root = crate::padic::hensel_unit_root(f.coeffs(), v.div_ceil(f.p() as u64 - 1) as u32)?;
    let u = one_unit_power(&root, kappa, v)?;
    let one = root.one_like();
    Ok(finish(padic_geometric_product(&one, &[u], f.degree() as usize, deg_max + 1), v))
}

/// Inverse of `Q(T^d)` through `T^{deg_max}`.
pub fn exact_local_inverse(q: &[CycInt], d: usize, deg_max: usize) -> Vec<CycInt> {
    let p = q[0].level();
    let mut spread = vec![CycInt::zero(p); deg_max + 1];
    for (i, c) in q.iter().enumerate() {
        if i * d <= deg_max {
            spread[i * d] = c.clone();
        }
    }
    inverse_trunc(&spread, deg_max + 1)
}

/// One local inverse factor, labelled by its closed point.
#[derive(Clone, Debug)]
pub struct LocalEntry<R> {
    pub degree: u32,
    pub rep: Vec<u32>,
    pub series: Vec<R>,
}

/// `Π` of local inverse factors through `T^deg_max`, multiplied in the order
/// given. With `coverage = Some(q)` the entries must be exactly one per
/// closed point of `G_m/F_q` of each degree `≤ deg_max`.
pub fn euler_product<R: RingElem>(
    one: &R,
    entries: &[LocalEntry<R>],
    deg_max: usize,
    coverage: Option<u64>,
) -> Result<Vec<R>>
where
    for<'a> &'a R: std::ops::Add<&'a R, Output = R>
        + std::ops::Sub<&'a R, Output = R>
        + std::ops::Mul<&'a R, Output = R>
        + std::ops::Neg<Output = R>,
{
    if let Some(q) = coverage {
        let mut seen = HashSet::new();
        let mut counts = vec![0u64; deg_max + 1];
        for e in entries {
            if !seen.insert((e.degree, e.rep.clone())) {
                return Err(Error::Coverage(format!("point {:?} of degree {} supplied twice", e.rep, e.degree)));
            }
            if (e.degree as usize) <= deg_max {
                counts[e.degree as usize] += 1;
            }
        }
        for (d, &c) in counts.iter().enumerate().skip(1) {
            let want = closed_point_count(q, d as u32);
            if c != want {
                return Err(Error::Coverage(format!("{c} points of degree {d} supplied, {want} exist")));
            }
        }
    }
    let len = deg_max + 1;
    let mut acc = vec![one.zero_like(); len];
    acc[0] = one.clone();
    for e in entries.iter().filter(|e| e.degree as usize <= deg_max) {
        acc = mul_trunc(&acc, &e.series, len);
    }
    Ok(acc)
}

/// A series coefficient: exact, or p-adic with a certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesCoeff {
    Exact(CycInt),
    Padic(PadicCyc),
}

/// Truncation `c_0, ..., c_D` of an L-series over `F_q`, `q = p^a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries {
    pub p: u32,
    pub a: u32,
    pub coeffs: Vec<SeriesCoeff>,
}

impl TruncSeries {
    pub fn exact(p: u32, a: u32, coeffs: Vec<CycInt>) -> Self {
        TruncSeries { p, a, coeffs: coeffs.into_iter().map(SeriesCoeff::Exact).collect() }
    }

    pub fn padic(p: u32, a: u32, coeffs: Vec<PadicCyc>) -> Self {
        TruncSeries { p, a, coeffs: coeffs.into_iter().map(SeriesCoeff::Padic).collect() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// All coefficients as rational integers, or the first failure.
    pub fn integer_coeffs(&self) -> Result<Vec<BigInt>> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                SeriesCoeff::Exact(x) => x
                    .as_integer()
                    .map_err(|_| Error::Integrality { index: i, detail: format!("{x} is not a rational integer") }),
                SeriesCoeff::Padic(_) => {
                    Err(Error::Integrality { index: i, detail: "p-adic coefficient in an exact series".into() })
                }
            })
            .collect()
    }

    /// Checks that every p-adic coefficient lies in `Z_p` to its precision.
    pub fn check_zp(&self) -> Result<()> {
        for (i, c) in self.coeffs.iter().enumerate() {
            let ok = match c {
                SeriesCoeff::Exact(x) => x.as_integer().is_ok(),
                SeriesCoeff::Padic(x) => x.zeta_components_vanish(),
            };
            if !ok {
                return Err(Error::Integrality { index: i, detail: format!("{c:?} has nonzero zeta components") });
            }
        }
        Ok(())
    }
}

/// Local factors at every closed point of degree `≤ deg_max`, in canonical
/// order (degree, then representative), computed in parallel.
pub fn local_factors(ev: &SumEvaluator, n: u32, deg_max: u32) -> Result<Vec<(ClosedPoint, LocalFactor)>> {
    let mut points = Vec::new();
    for d in 1..=deg_max {
        points.extend(ev.tower().closed_points(ev.base(), d)?);
    }
    points.into_par_iter().map(|pt| local_factor(ev, n, &pt).map(|f| (pt, f))).collect()
}

fn entries<R: Send>(
    factors: &[(ClosedPoint, LocalFactor)],
    f: impl Fn(&LocalFactor) -> Result<Vec<R>> + Sync,
) -> Result<Vec<LocalEntry<R>>> {
    factors
        .par_iter()
        .map(|(pt, lf)| Ok(LocalEntry { degree: pt.degree(), rep: pt.coords(), series: f(lf)? }))
        .collect()
}

fn base_q(ev: &SumEvaluator) -> u64 {
    ev.base().size() as u64
}

/// `L(Sym^k Kl_n, T)` through `T^deg_max`, exact; all coefficients are
/// checked to be rational integers.
pub fn symk_series(
    ev: &SumEvaluator,
    factors: &[(ClosedPoint, LocalFactor)],
    k: u32,
    deg_max: usize,
) -> Result<TruncSeries> {
    let p = ev.base().p();
    let es = entries(factors, |lf| Ok(exact_local_inverse(&sym_k_factor(lf, k), lf.degree() as usize, deg_max)))?;
    let coeffs = euler_product(&CycInt::one(p), &es, deg_max, Some(base_q(ev)))?;
    let s = TruncSeries::exact(p, ev.base().degree(), coeffs);
    s.integer_coeffs()?;
    Ok(s)
}

fn padic_series(
    ev: &SumEvaluator,
    factors: &[(ClosedPoint, LocalFactor)],
    v: u64,
    deg_max: usize,
    local: impl Fn(&LocalFactor) -> Result<Vec<PadicCyc>> + Sync,
) -> Result<TruncSeries> {
    check_precision(v)?;
    let p = ev.base().p();
    let es = entries(factors, local)?;
    let ring = PadicRing::for_pi_precision(p, v);
    let one = PadicCyc::from_int(&ring, 1).with_certificate(v);
    let coeffs = euler_product(&one, &es, deg_max, Some(base_q(ev)))?;
    Ok(TruncSeries::padic(p, ev.base().degree(), coeffs))
}

/// `L(Sym^{κ,∞} Kl_n, T)` through `T^deg_max`, certified to `v` π-units.
pub fn syminf_series(
    ev: &SumEvaluator,
    factors: &[(ClosedPoint, LocalFactor)],
    kappa: &PadicExponent,
    v: u64,
    deg_max: usize,
) -> Result<TruncSeries> {
    padic_series(ev, factors, v, deg_max, |lf| sym_inf_local(lf, kappa, v, deg_max))
}

/// The unit-root L-function `Π 1/(1 - π_0^κ T^d)` through `T^deg_max`.
pub fn unitroot_series(
    ev: &SumEvaluator,
    factors: &[(ClosedPoint, LocalFactor)],
    kappa: &PadicExponent,
    v: u64,
    deg_max: usize,
) -> Result<TruncSeries> {
    padic_series(ev, factors, v, deg_max, |lf| unit_root_local(lf, kappa, v, deg_max))
}

/// Shared series context for callers that build several series from the
/// same local factors.
pub struct SeriesContext {
    pub evaluator: Arc<SumEvaluator>,
    pub n: u32,
    pub deg_max: u32,
    pub factors: Vec<(ClosedPoint, LocalFactor)>,
}

impl SeriesContext {
    pub fn new(evaluator: Arc<SumEvaluator>, n: u32, deg_max: u32) -> Result<Self> {
        let factors = local_factors(&evaluator, n, deg_max)?;
        Ok(SeriesContext { evaluator, n, deg_max, factors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::SumCache;
    use crate::ff::{Tower, DEFAULT_MAX_FIELD_SIZE};
    use crate::padic::ExponentKind;
    use num_traits::One;
    use proptest::prelude::*;

    fn ints(p: u32, xs: &[i64]) -> Vec<CycInt> {
        xs.iter().map(|&x| CycInt::from_int(p, BigInt::from(x))).collect()
    }

    fn evaluator(p: u32) -> SumEvaluator {
        let tower = Arc::new(Tower::new(p, DEFAULT_MAX_FIELD_SIZE).unwrap());
        let base = tower.field(1).unwrap();
        SumEvaluator::new(tower, base, Arc::new(SumCache::in_memory())).unwrap()
    }

    fn zp(x: &PadicCyc) -> BigInt {
        assert!(x.zeta_components_vanish());
        x.zp_value()
    }

    /// `1/(1 - x)` by repeated multiplication, independent of the geometric
    /// update used in the library.
    fn geometric(one: &PadicCyc, x: &PadicCyc, terms: usize) -> Vec<PadicCyc> {
        let mut out = vec![one.clone()];
        for _ in 1..terms {
            let next = &out[out.len() - 1] * x;
            out.push(next);
        }
        out
    }

    #[test]
    fn local_factor_examples() {
        let ev = evaluator(3);
        let pts = ev.tower().closed_points(ev.base(), 1).unwrap();
        let f1 = local_factor(&ev, 1, &pts[0]).unwrap();
        assert_eq!(f1.coeffs(), ints(3, &[1, -1, 3]).as_slice());
        let f2 = local_factor(&ev, 1, &pts[1]).unwrap();
        assert_eq!(f2.coeffs(), ints(3, &[1, 2, 3]).as_slice());
        assert_eq!(f1.leading_sign(), 1);
    }

    #[test]
    fn sign_of_power_sums() {
        // with the opposite sign the n = 1 factor at t = 1 would be 1 + T + 3T^2,
        // whose unit root is -1 mod 3 and not a 1-unit
        let wrong = LocalFactor::from_power_sums(1, 1, 1, &ints(3, &[-1, -5]));
        assert!(matches!(wrong, Err(Error::NotOneUnit(_))));
    }

    #[test]
    fn local_factors_of_n_two() {
        let ev = evaluator(3);
        for d in 1..=2 {
            for pt in ev.tower().closed_points(ev.base(), d).unwrap() {
                let f = local_factor(&ev, 2, &pt).unwrap();
                assert_eq!(f.coeffs().len(), 4);
                assert_eq!(f.pi_vals(), f.expected_pi_vals().into_iter().map(Some).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn violations_are_findings() {
        let err = LocalFactor::new(1, 1, 1, ints(3, &[1, -1, 9])).unwrap_err();
        assert!(matches!(err, Error::FunctionalEquation { .. }) && err.is_finding());
        let err = LocalFactor::new(1, 1, 1, ints(3, &[1, -3, 3])).unwrap_err();
        assert!(matches!(err, Error::SlopeViolation { .. }) && err.is_finding());
    }

    #[test]
    fn power_sums_examples() {
        let f = LocalFactor::unchecked(1, 1, 1, ints(3, &[1, -1, 3])).unwrap();
        assert_eq!(eigen_power_sums(&f, 2), ints(3, &[1, -5]));
        // (1 - T)(1 - 5T): s_m = 1 + 5^m
        let g = LocalFactor::unchecked(1, 1, 1, ints(5, &[1, -6, 5])).unwrap();
        let expect: Vec<i64> = (1..=6).map(|m| 1 + 5i64.pow(m)).collect();
        assert_eq!(eigen_power_sums(&g, 6), ints(5, &expect));
    }

    #[test]
    fn power_sums_round_trip_through_sums() {
        let ev = evaluator(3);
        for d in 1..=2 {
            for pt in ev.tower().closed_points(ev.base(), d).unwrap() {
                let f = local_factor(&ev, 1, &pt).unwrap();
                let s = eigen_power_sums(&f, 3);
                for m in 1..=3u32 {
                    assert_eq!(s[m as usize - 1], -&ev.kloosterman(1, &pt, m).unwrap(), "d={d} m={m}");
                }
            }
        }
    }

    #[test]
    fn sym_k_examples() {
        let f = LocalFactor::unchecked(1, 1, 1, ints(3, &[1, -1, 3])).unwrap();
        assert_eq!(sym_k_factor(&f, 0), ints(3, &[1, -1]));
        assert_eq!(sym_k_factor(&f, 1), f.coeffs().to_vec());
        assert_eq!(sym_k_factor(&f, 2), ints(3, &[1, 2, -6, -27]));
        let g = LocalFactor::unchecked(2, 1, 1, ints(3, &[1, 1, 3, -27])).unwrap();
        assert_eq!(sym_k_factor(&g, 2).len(), 7);
    }

    #[test]
    fn sym_k_of_integer_roots() {
        // roots 1, 5: Sym^3 has roots 1, 5, 25, 125
        let f = LocalFactor::unchecked(1, 1, 1, ints(5, &[1, -6, 5])).unwrap();
        let expect =
            [1, 5, 25, 125].iter().fold(ints(5, &[1]), |acc, &r| mul_trunc(&acc, &ints(5, &[1, -r]), acc.len() + 1));
        assert_eq!(sym_k_factor(&f, 3), expect);
    }

    #[test]
    fn sym_k_matches_lifted_roots() {
        let ev = evaluator(3);
        for pt in ev.tower().closed_points(ev.base(), 2).unwrap() {
            let f = local_factor(&ev, 1, &pt).unwrap();
            let roots = f.roots(12).unwrap();
            for k in 0..=3 {
                let exact = sym_k_factor(&f, k);
                let lifted = sym_k_from_roots(&roots, k);
                for (x, y) in lifted.iter().zip(&exact) {
                    let y = PadicCyc::from_cyc(x.ring(), y);
                    assert!(x.agrees_with(&y, x.certificate()));
                }
            }
        }
    }

    #[test]
    fn weight_tuples_are_complete() {
        let t = weight_tuples(2, 3);
        assert_eq!(t, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0], vec![3, 0]]);
        assert_eq!(weight_tuples(1, 0), vec![vec![0]]);
    }

    #[test]
    fn sym_inf_coefficient_of_t() {
        let f = LocalFactor::new(1, 1, 1, ints(3, &[1, -1, 3])).unwrap();
        let k2 = PadicExponent::integer(3, 2);
        let s = sym_inf_local(&f, &k2, 4, 2).unwrap();
        assert_eq!(zp(&s[1]), BigInt::from(7));
        // higher precision oracle: π_0^2/(1 - π_1/π_0) in closed form
        let hi = f.roots(20).unwrap();
        let closed = &hi[0].pow(2) * &(&hi[0].one_like() - &(&hi[1] * &hi[0].inverse().unwrap())).inverse().unwrap();
        let s_hi = sym_inf_local(&f, &k2, 30, 2).unwrap();
        assert!(s_hi[1].agrees_with(&closed.reduce_to(s_hi[1].ring()), 30));
    }

    #[test]
    fn sym_inf_small_precision_keeps_only_the_zero_tuple() {
        let f = LocalFactor::new(1, 1, 1, ints(3, &[1, -1, 3])).unwrap();
        let k = PadicExponent::integer(3, 3);
        let v = 2; // (p-1)·a·d·1 = 2 excludes every nonzero tuple
        let s = sym_inf_local(&f, &k, v, 4).unwrap();
        let roots = f.roots(6).unwrap();
        let u = roots[0].pow(3);
        let g = geometric(&roots[0].one_like(), &u, 5);
        for (x, y) in s.iter().zip(&g) {
            assert!(x.agrees_with(&y.reduce_to(x.ring()), v));
        }
        assert!(matches!(sym_inf_local(&f, &k, 0, 4), Err(Error::Precision { needed: 1, .. })));
    }

    #[test]
    fn sym_inf_integer_exponent_matches_hsum() {
        let ev = evaluator(3);
        for d in 1..=2 {
            for pt in ev.tower().closed_points(ev.base(), d).unwrap() {
                let f = local_factor(&ev, 1, &pt).unwrap();
                for k in [0, 1, 2, 5] {
                    let kappa = PadicExponent::integer(3, k);
                    let a = sym_inf_local(&f, &kappa, 12, 6).unwrap();
                    let b = sym_inf_local_hsum(&f, &kappa, 12, 6).unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        let prec = x.certificate().min(y.certificate());
                        assert!(prec >= 8);
                        assert!(x.agrees_with(&y.reduce_to(x.ring()), prec), "d={d} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn unit_root_examples() {
        let f = LocalFactor::new(1, 1, 1, ints(3, &[1, -1, 3])).unwrap();
        let zero = PadicExponent::integer(3, 0);
        let s = unit_root_local(&f, &zero, 6, 4).unwrap();
        assert!(s.iter().all(|c| zp(c) == BigInt::one()));
        let one = PadicExponent::integer(3, 1);
        let s = unit_root_local(&f, &one, 4, 3).unwrap();
        assert_eq!(zp(&s[1]), BigInt::from(7));
        assert_eq!(zp(&s[2]), BigInt::from(49 % 9));
        let hi = unit_root_local(&f, &one, 10, 3).unwrap();
        for (x, y) in s.iter().zip(&hi) {
            assert!(y.reduce_to(x.ring()).agrees_with(x, x.certificate()));
        }
    }

    #[test]
    fn euler_product_examples() {
        let one = CycInt::one(3);
        assert_eq!(euler_product::<CycInt>(&one, &[], 5, None).unwrap(), ints(3, &[1, 0, 0, 0, 0, 0]));
        let ev = evaluator(3);
        let factors = local_factors(&ev, 1, 1).unwrap();
        let s = symk_series(&ev, &factors, 1, 1).unwrap();
        assert_eq!(s.integer_coeffs().unwrap(), vec![BigInt::one(), BigInt::from(-1)]);
        // missing degree-2 points
        assert!(matches!(symk_series(&ev, &factors, 1, 2), Err(Error::Coverage(_))));
    }

    #[test]
    fn euler_product_order_is_irrelevant() {
        let ev = evaluator(3);
        let factors = local_factors(&ev, 1, 3).unwrap();
        let kappa = PadicExponent::from_digits(3, &[2, 1, 1], ExponentKind::Truncated).unwrap();
        let mut es: Vec<LocalEntry<PadicCyc>> = factors
            .iter()
            .map(|(pt, lf)| LocalEntry {
                degree: pt.degree(),
                rep: pt.coords(),
                series: sym_inf_local(lf, &kappa, 8, 3).unwrap(),
            })
            .collect();
        let one = es[0].series[0].one_like().with_certificate(8);
        let fwd = euler_product(&one, &es, 3, Some(3)).unwrap();
        es.reverse();
        let bwd = euler_product(&one, &es, 3, Some(3)).unwrap();
        assert_eq!(fwd, bwd);
    }

    #[test]
    fn sym_k_series_are_integral() {
        let ev = evaluator(3);
        let factors = local_factors(&ev, 2, 2).unwrap();
        for k in 0..=2 {
            symk_series(&ev, &factors, k, 2).unwrap();
        }
    }

    proptest! {
        #[test]
        fn synthetic_factor_round_trip(r in prop::sample::select(vec![1i64, 4, 7, -2, -5]), s in -4i64..5, k in 0u32..4) {
            // roots r (a 1-unit at p = 3) and 3s
            let f = LocalFactor::unchecked(1, 1, 1, ints(3, &[1, -(r + 3 * s), 3 * r * s])).unwrap();
            let sums = eigen_power_sums(&f, 2);
            prop_assert_eq!(coeffs_from_power_sums(2, &sums).unwrap(), f.coeffs().to_vec());
            let sym = sym_k_factor(&f, k);
            let expect = (0..=k as i64).fold(ints(3, &[1]), |acc, i| {
                let eig = r.pow(k - i as u32) * (3 * s).pow(i as u32);
                mul_trunc(&acc, &ints(3, &[1, -eig]), acc.len() + 1)
            });
            prop_assert_eq!(sym, expect);
        }
    }
}
