use std::sync::Arc;

use klsym_core::expsum::{kloosterman_table, SumCache, SumEvaluator};
use klsym_core::ff::{Tower, DEFAULT_MAX_FIELD_SIZE};
use klsym_core::lfun::{self, SeriesCoeff};
use klsym_core::padic::PadicExponent;
use klsym_core::polygon::{hodge_polygon, newton_points, verify_above, AboveVerdict};
use klsym_core::{CycInt, Polygon, Rational};
use num_bigint::BigInt;
use num_integer::Integer;

fn evaluator(p: u32) -> SumEvaluator {
    let tower = Arc::new(Tower::new(p, DEFAULT_MAX_FIELD_SIZE).unwrap());
    let base = tower.field(1).unwrap();
    SumEvaluator::new(tower, base, Arc::new(SumCache::in_memory())).unwrap()
}

/// `Σ_{t ∈ F_{p^e}^*} tr(Frob_t | Sym^k)`, with eigenvalue power sums
/// `s_j(t) = (-1)^n Kl_n(t)` computed in `F_{p^{e j}}`.
fn sym_trace(tower: &Tower, n: u32, k: u32, e: u32) -> BigInt {
    let p = tower.p();
    let sign = BigInt::from(if n.is_multiple_of(2) { 1 } else { -1 });
    let base = tower.field(e).unwrap();
    let tables: Vec<_> = (1..=k.max(1))
        .map(|j| {
            let f = tower.field(e * j).unwrap();
            let emb = tower.embedding(&base, &f).unwrap();
            (emb, kloosterman_table(&f, n).unwrap())
        })
        .collect();
    let mut total = CycInt::zero(p);
    for t in base.nonzero_elements() {
        let s: Vec<CycInt> =
            tables.iter().map(|(emb, table)| table[emb.apply(t).index() as usize].scale(&sign)).collect();
        // complete homogeneous h_k from power sums: m h_m = Σ s_i h_{m-i}
        let mut h = vec![CycInt::one(p)];
        for m in 1..=k as usize {
            let acc = (1..=m).fold(CycInt::zero(p), |acc, i| &acc + &(&s[i - 1] * &h[m - i]));
            h.push(acc.div_exact(&BigInt::from(m)).expect("exact division"));
        }
        total = &total + &h[k as usize];
    }
    total.as_integer().expect("traces over a Galois-stable set are rational")
}

/// `exp(Σ S_m T^m / m)` through `T^deg`.
fn exp_series(sums: &[BigInt], deg: usize) -> Vec<BigInt> {
    let mut l = vec![BigInt::from(1)];
    for m in 1..=deg {
        let acc: BigInt = (1..=m).map(|i| &sums[i - 1] * &l[m - i]).sum();
        let (q, r) = acc.div_rem(&BigInt::from(m));
        assert_eq!(r, BigInt::from(0), "non-integral coefficient at {m}");
        l.push(q);
    }
    l
}

#[test]
fn euler_product_matches_trace_formula() {
    for (p, n, k, deg) in [(3u32, 1u32, 1u32, 4usize), (3, 1, 2, 3), (5, 1, 1, 2), (3, 2, 1, 2)] {
        let ev = evaluator(p);
        let factors = lfun::local_factors(&ev, n, deg as u32).unwrap();
        let series = lfun::symk_series(&ev, &factors, k, deg).unwrap();
        let tower = Tower::new(p, DEFAULT_MAX_FIELD_SIZE).unwrap();
        let sums: Vec<BigInt> = (1..=deg as u32).map(|m| sym_trace(&tower, n, k, m)).collect();
        assert_eq!(series.integer_coeffs().unwrap(), exp_series(&sums, deg), "p={p} n={n} k={k}");
    }
}

#[test]
fn sym_zero_is_the_zeta_function_of_the_torus() {
    for (p, n) in [(3u32, 1u32), (5, 1), (3, 2)] {
        let ev = evaluator(p);
        let factors = lfun::local_factors(&ev, n, 3).unwrap();
        let got = lfun::symk_series(&ev, &factors, 0, 3).unwrap().integer_coeffs().unwrap();
        // (1 - T) / (1 - qT)
        let q = BigInt::from(p);
        let want: Vec<BigInt> =
            (0..=3u32).map(|m| if m == 0 { BigInt::from(1) } else { (&q - 1) * q.pow(m - 1) }).collect();
        assert_eq!(got, want, "p={p} n={n}");
    }
}

#[test]
fn classical_local_factor_shape() {
    let ev = evaluator(5);
    for (pt, f) in lfun::local_factors(&ev, 1, 1).unwrap() {
        let kl = ev.kloosterman(1, &pt, 1).unwrap();
        assert_eq!(f.coeffs()[1], kl);
        assert_eq!(f.coeffs()[2], CycInt::from_int(5, BigInt::from(5)));
    }
}

#[test]
fn padic_series_pass_and_unit_root_is_integral() {
    let ev = evaluator(3);
    let factors = lfun::local_factors(&ev, 1, 3).unwrap();
    let hodge: Polygon = hodge_polygon(1, 3, 3);
    for kappa in [PadicExponent::integer(3, 2), PadicExponent::integer(3, -1)] {
        let s = lfun::syminf_series(&ev, &factors, &kappa, 30, 3).unwrap();
        s.check_zp().unwrap();
        assert_eq!(verify_above(&newton_points::<Rational>(&s), &hodge), AboveVerdict::Pass);
        let u = lfun::unitroot_series(&ev, &factors, &kappa, 30, 3).unwrap();
        u.check_zp().unwrap();
        assert!(matches!(&u.coeffs[0], SeriesCoeff::Padic(c) if c.is_unit()));
    }
}
