//! Newton and Hodge polygons over an exact ordered scalar, the
//! coefficient-wise "Newton above Hodge" check, and comparison of hull
//! segments up to a given slope.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Signed};

use crate::lfun::{SeriesCoeff, TruncSeries};
use crate::padic::PiValuation;

/// Exact ordered field elements used for polygon arithmetic.
pub trait ExactScalar: Clone + Ord + Signed + FromPrimitive + Debug {}

impl<T: Clone + Ord + Signed + FromPrimitive + Debug> ExactScalar for T {}

fn int<S: ExactScalar>(x: u64) -> S {
    S::from_u64(x).expect("representable")
}

/// Convex lower polygon given by its vertices (strictly increasing `x`,
/// strictly increasing slopes).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hull<S> {
    vertices: Vec<(S, S)>,
}

impl<S: ExactScalar> Hull<S> {
    pub fn vertices(&self) -> &[(S, S)] {
        &self.vertices
    }

    pub fn slopes(&self) -> Vec<S> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone()))
            .collect()
    }

    /// Height at `x`, or `None` outside the polygon's `x`-range.
    pub fn eval(&self, x: &S) -> Option<S> {
        let first = self.vertices.first()?;
        if *x < first.0 {
            return None;
        }
        if *x == first.0 {
            return Some(first.1.clone());
        }
        for w in self.vertices.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if x <= x1 {
                let t = (x.clone() - x0.clone()) / (x1.clone() - x0.clone());
                return Some(y0.clone() + t * (y1.clone() - y0.clone()));
            }
        }
        None
    }

    /// Largest `x` covered.
    pub fn width(&self) -> Option<&S> {
        self.vertices.last().map(|v| &v.0)
    }
}

fn cross<S: ExactScalar>(o: &(S, S), a: &(S, S), b: &(S, S)) -> S {
    (a.0.clone() - o.0.clone()) * (b.1.clone() - o.1.clone())
        - (a.1.clone() - o.1.clone()) * (b.0.clone() - o.0.clone())
}

/// Lower convex hull (monotone chain); collinear points are merged.
pub fn lower_hull<S: ExactScalar>(points: &[(S, S)]) -> Hull<S> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(S, S)> = Vec::with_capacity(pts.len());
    for pt in pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &pt) <= S::zero() {
            hull.pop();
        }
        hull.push(pt);
    }
    Hull { vertices: hull }
}

/// `h_0(n), ..., h_{i_max}(n)`: coefficients of `R(T)/(1 - T^{n+1})` with
/// `R(T) = Π_{j=2}^{n} 1/(1 - T^j)`.
pub fn hodge_coeffs(n: u32, i_max: usize) -> Vec<u64> {
    let mut h = vec![0u64; i_max + 1];
    h[0] = 1;
    for j in (2..=n as usize).chain(std::iter::once(n as usize + 1)) {
        // multiply by 1/(1 - T^j)
        for i in j..=i_max {
            h[i] += h[i - j];
        }
    }
    h
}

/// Hodge polygon for `n` and `p`: vertices
/// `(Σ_{i≤N} h_i, (1 - 1/(p-1)) Σ_{i≤N} i h_i)` from `(0, 0)`, extended until
/// its width reaches `min_width`.
pub fn hodge_polygon<S: ExactScalar>(n: u32, p: u32, min_width: u64) -> Hull<S> {
    let factor = int::<S>(p as u64 - 2) / int::<S>(p as u64 - 1);
    // h_i ≥ 1 for every even i, so 2·min_width + 2 terms always suffice
    let h = hodge_coeffs(n, 2 * min_width as usize + 2);
    let mut points = vec![(S::zero(), S::zero())];
    let (mut x, mut w) = (0u64, 0u64);
    for (i, &hi) in h.iter().enumerate() {
        if hi == 0 {
            continue;
        }
        x += hi;
        w += i as u64 * hi;
        points.push((int(x), factor.clone() * int(w)));
        if x >= min_width {
            break;
        }
    }
    lower_hull(&points)
}

/// Newton data of one coefficient: `ord_q c_m ≥ bound`, with equality when
/// `exact`; `bound = None` means the coefficient is exactly zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffPoint<S> {
    pub m: u64,
    pub bound: Option<S>,
    pub exact: bool,
}

impl<S: ExactScalar> CoeffPoint<S> {
    /// From a π-valuation; `ord_q = v / (a(p-1))`.
    pub fn from_pi(m: u64, val: Option<PiValuation>, p: u32, a: u32) -> Self {
        let scale = int::<S>(a as u64 * (p as u64 - 1));
        match val {
            None => CoeffPoint { m, bound: None, exact: true },
            Some(PiValuation::Exact(v)) => CoeffPoint { m, bound: Some(int::<S>(v) / scale), exact: true },
            Some(PiValuation::AtLeast(v)) => CoeffPoint { m, bound: Some(int::<S>(v) / scale), exact: false },
        }
    }
}

/// One point per coefficient of the series.
pub fn newton_points<S: ExactScalar>(series: &TruncSeries) -> Vec<CoeffPoint<S>> {
    series
        .coeffs
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let val = match c {
                SeriesCoeff::Exact(x) => x.pi_val().map(PiValuation::Exact),
                SeriesCoeff::Padic(x) => Some(x.valuation()),
            };
            CoeffPoint::from_pi(m as u64, val, series.p, series.a)
        })
        .collect()
}

/// Outcome of the coefficient-wise comparison against a lower polygon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AboveVerdict<S> {
    Pass,
    /// Leftmost exact point strictly below the polygon.
    Violation {
        m: u64,
        ord: S,
        polygon: S,
    },
    /// Some inexact points are below the polygon; `needed` is the largest
    /// `ord_q` certificate they would need, `m` the leftmost of them.
    Inconclusive {
        m: u64,
        needed: S,
    },
    /// The polygon does not reach this index.
    OutOfRange {
        m: u64,
    },
}

/// Every point on or above `h`. By convexity of `h`, this is equivalent to
/// the lower hull of the points lying on or above `h`.
pub fn verify_above<S: ExactScalar>(points: &[CoeffPoint<S>], h: &Hull<S>) -> AboveVerdict<S> {
    let mut inconclusive: Option<(u64, S)> = None;
    for pt in points {
        let Some(bound) = &pt.bound else { continue };
        let Some(hm) = h.eval(&int(pt.m)) else {
            return AboveVerdict::OutOfRange { m: pt.m };
        };
        if *bound >= hm {
            continue;
        }
        if pt.exact {
            return AboveVerdict::Violation { m: pt.m, ord: bound.clone(), polygon: hm };
        }
        inconclusive = Some(match inconclusive {
            None => (pt.m, hm),
            Some((m, need)) => (m, need.max(hm)),
        });
    }
    match inconclusive {
        Some((m, needed)) => AboveVerdict::Inconclusive { m, needed },
        None => AboveVerdict::Pass,
    }
}

/// Outcome of comparing hull segments of slope `≤ k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlopeComparison<S> {
    Agree {
        vertices: Vec<(S, S)>,
    },
    Disagree {
        left: Vec<(S, S)>,
        right: Vec<(S, S)>,
    },
    /// A hull vertex in the compared range rests on an inexact point.
    Inconclusive {
        m: u64,
    },
}

/// Hull vertices up to the last segment of slope `≤ k`, or the index of an
/// inexact point that is one of those vertices.
pub fn slope_prefix<S: ExactScalar>(points: &[CoeffPoint<S>], k: &S) -> Result<Vec<(S, S)>, u64> {
    let finite: Vec<(S, S)> = points.iter().filter_map(|p| p.bound.clone().map(|b| (int(p.m), b))).collect();
    let hull = lower_hull(&finite);
    let slopes = hull.slopes();
    let keep = 1 + slopes.iter().take_while(|s| *s <= k).count();
    let prefix: Vec<(S, S)> = hull.vertices().iter().take(keep).cloned().collect();
    for v in &prefix {
        let pt = points.iter().find(|p| int::<S>(p.m) == v.0).expect("hull vertices come from points");
        if !pt.exact {
            return Err(pt.m);
        }
    }
    Ok(prefix)
}

pub fn compare_slope_range<S: ExactScalar>(a: &[CoeffPoint<S>], b: &[CoeffPoint<S>], k: &S) -> SlopeComparison<S> {
    let left = match slope_prefix(a, k) {
        Ok(v) => v,
        Err(m) => return SlopeComparison::Inconclusive { m },
    };
    let right = match slope_prefix(b, k) {
        Ok(v) => v,
        Err(m) => return SlopeComparison::Inconclusive { m },
    };
    if left == right {
        SlopeComparison::Agree { vertices: left }
    } else {
        SlopeComparison::Disagree { left, right }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicRing;
    use crate::{CycInt, Rational};
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pts(xs: &[(i64, i64)]) -> Vec<(Rational, Rational)> {
        xs.iter().map(|&(x, y)| (r(x, 1), r(y, 1))).collect()
    }

    fn exact(m: u64, num: i64, den: i64) -> CoeffPoint<Rational> {
        CoeffPoint { m, bound: Some(r(num, den)), exact: true }
    }

    /// `#{(i_2, ..., i_n, s) : Σ j i_j + (n+1) s = i}` by enumeration.
    fn brute_h(n: u32, i: u64) -> u64 {
        fn count(weights: &[u64], target: u64) -> u64 {
            match weights.split_first() {
                None => (target == 0) as u64,
                Some((&w, rest)) => (0..=target / w).map(|c| count(rest, target - c * w)).sum(),
            }
        }
        let weights: Vec<u64> = (2..=n as u64).chain(std::iter::once(n as u64 + 1)).collect();
        count(&weights, i)
    }

    #[test]
    fn hodge_coefficient_examples() {
        assert_eq!(hodge_coeffs(1, 6), vec![1, 0, 1, 0, 1, 0, 1]);
        assert_eq!(hodge_coeffs(2, 6), vec![1, 0, 1, 1, 1, 1, 2]);
        for n in 1..6 {
            assert_eq!(hodge_coeffs(n, 0), vec![1]);
            let h = hodge_coeffs(n, 20);
            for (i, &hi) in h.iter().enumerate() {
                assert_eq!(hi, brute_h(n, i as u64), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn hodge_generating_function() {
        // Σ h_i T^i (1 - T^{n+1}) = R(T) = Π_{j=2}^{n} 1/(1 - T^j)
        for n in 1..6u32 {
            let h = hodge_coeffs(n, 30);
            let mut rt = vec![0u64; 31];
            rt[0] = 1;
            for j in 2..=n as usize {
                for i in j..=30 {
                    rt[i] += rt[i - j];
                }
            }
            for i in 0..=30 {
                let shifted = if i > n as usize { h[i - n as usize - 1] } else { 0 };
                assert_eq!(h[i] as i64 - shifted as i64, rt[i] as i64);
            }
        }
    }

    #[test]
    fn hodge_polygon_examples() {
        let h: Hull<Rational> = hodge_polygon(1, 3, 4);
        assert_eq!(h.vertices(), pts(&[(0, 0), (1, 0), (2, 1), (3, 3), (4, 6)]).as_slice());
        let h5: Hull<Rational> = hodge_polygon(1, 5, 3);
        assert_eq!(h5.vertices()[2], (r(2, 1), r(3, 2)));
        let h2: Hull<Rational> = hodge_polygon(2, 3, 10);
        let s = h2.slopes();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(h2.width().unwrap() >= &r(10, 1));
    }

    #[test]
    fn hull_examples() {
        assert_eq!(lower_hull(&pts(&[(0, 0), (1, 0), (2, 1)])).vertices(), pts(&[(0, 0), (1, 0), (2, 1)]).as_slice());
        assert_eq!(lower_hull(&pts(&[(0, 0), (1, 5), (2, 1)])).vertices(), pts(&[(0, 0), (2, 1)]).as_slice());
        assert_eq!(lower_hull(&pts(&[(3, 7)])).vertices(), pts(&[(3, 7)]).as_slice());
        assert_eq!(
            lower_hull(&pts(&[(0, 0), (1, 1), (2, 2), (3, 4)])).vertices(),
            pts(&[(0, 0), (2, 2), (3, 4)]).as_slice()
        );
    }

    #[test]
    fn hodge_is_the_newton_polygon_of_its_synthetic_product() {
        // c_i = (1 - ζ)^{(p-2) i} has ord_p = (1 - 1/(p-1)) i
        for (n, p) in [(1u32, 3u32), (1, 5), (2, 3), (2, 5), (3, 7)] {
            let width = 8usize;
            let h = hodge_coeffs(n, 2 * width);
            let pi = &CycInt::one(p) - &CycInt::zeta_pow(p, 1);
            let mut poly = vec![CycInt::one(p)];
            for (i, &hi) in h.iter().enumerate() {
                let c = pi.pow(((p - 2) as usize * i) as u32);
                for _ in 0..hi {
                    poly = crate::poly::mul_trunc(&poly, &[CycInt::one(p), -&c], (poly.len() + 1).min(width + 1));
                }
            }
            let series = TruncSeries::exact(p, 1, poly);
            let finite: Vec<(Rational, Rational)> = newton_points::<Rational>(&series)
                .into_iter()
                .filter_map(|pt| pt.bound.map(|b| (r(pt.m as i64, 1), b)))
                .collect();
            let newton = lower_hull(&finite);
            let hodge: Hull<Rational> = hodge_polygon(n, p, width as u64);
            // interior points of a segment may cancel further; compare up to the
            // last vertex inside the truncation
            let last = hodge.vertices().iter().map(|v| v.0.clone()).filter(|x| *x <= r(width as i64, 1)).max().unwrap();
            let last = last.to_integer().to_string().parse::<i64>().unwrap();
            for x in 0..=last {
                assert_eq!(newton.eval(&r(x, 1)), hodge.eval(&r(x, 1)), "n={n} p={p} x={x}");
            }
        }
    }

    #[test]
    fn newton_point_examples() {
        let one = TruncSeries::exact(3, 1, vec![CycInt::one(3)]);
        assert_eq!(newton_points::<Rational>(&one), vec![exact(0, 0, 1)]);
        let s = TruncSeries::exact(3, 1, [1, -1, 3].iter().map(|&c| CycInt::from_int(3, BigInt::from(c))).collect());
        assert_eq!(newton_points::<Rational>(&s), vec![exact(0, 0, 1), exact(1, 0, 1), exact(2, 1, 1)]);
        let ring = PadicRing::new(3, 3);
        let z = crate::padic::PadicCyc::from_int(&ring, 0).with_certificate(5);
        let s = TruncSeries::padic(3, 2, vec![z]);
        assert_eq!(newton_points::<Rational>(&s), vec![CoeffPoint { m: 0, bound: Some(r(5, 4)), exact: false }]);
    }

    #[test]
    fn verify_above_examples() {
        let h: Hull<Rational> = hodge_polygon(1, 3, 4);
        let above = vec![exact(0, 0, 1), exact(1, 0, 1), exact(2, 3, 2), exact(3, 3, 1)];
        assert_eq!(verify_above(&above, &h), AboveVerdict::Pass);
        let below = vec![exact(0, 0, 1), exact(1, 0, 1), exact(2, 1, 2), exact(3, 2, 1)];
        assert_eq!(verify_above(&below, &h), AboveVerdict::Violation { m: 2, ord: r(1, 2), polygon: r(1, 1) });
        let unsure = vec![exact(0, 0, 1), CoeffPoint { m: 3, bound: Some(r(2, 1)), exact: false }];
        assert_eq!(verify_above(&unsure, &h), AboveVerdict::Inconclusive { m: 3, needed: r(3, 1) });
        let zero = vec![CoeffPoint { m: 2, bound: None, exact: true }];
        assert_eq!(verify_above(&zero, &h), AboveVerdict::Pass);
        assert_eq!(verify_above(&[exact(9, 100, 1)], &h), AboveVerdict::OutOfRange { m: 9 });
    }

    #[test]
    fn slope_comparison_examples() {
        let a = vec![exact(0, 0, 1), exact(1, 0, 1), exact(2, 1, 1), exact(3, 3, 1)];
        assert!(matches!(compare_slope_range(&a, &a, &r(1, 1)), SlopeComparison::Agree { .. }));
        let mut b = a.clone();
        b[1] = CoeffPoint { m: 1, bound: Some(r(0, 1)), exact: false };
        assert_eq!(compare_slope_range(&a, &b, &r(1, 1)), SlopeComparison::Inconclusive { m: 1 });
        let c = vec![exact(0, 0, 1), exact(1, 1, 1), exact(2, 2, 1), exact(3, 3, 1)];
        assert!(matches!(compare_slope_range(&a, &c, &r(1, 1)), SlopeComparison::Disagree { .. }));
        // only the slope-0 segment is compared at k = 0
        let d = vec![exact(0, 0, 1), exact(1, 0, 1), exact(2, 5, 1)];
        assert!(matches!(compare_slope_range(&a, &d, &r(0, 1)), SlopeComparison::Agree { .. }));
    }

    proptest! {
        #[test]
        fn hull_is_convex_and_below_all_points(ys in proptest::collection::vec(-20i64..20, 1..12)) {
            let points: Vec<(Rational, Rational)> = ys.iter().enumerate().map(|(x, &y)| (r(x as i64, 1), r(y, 1))).collect();
            let hull = lower_hull(&points);
            let s = hull.slopes();
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            for (x, y) in &points {
                prop_assert!(hull.eval(x).unwrap() <= *y);
            }
            prop_assert_eq!(&hull.vertices()[0], &points[0]);
        }

        #[test]
        fn verdicts_never_regress_with_precision(vals in proptest::collection::vec(0u64..12, 1..6), extra in 0u64..6) {
            // raising certificates of inexact points never turns a pass into a violation
            let h: Hull<Rational> = hodge_polygon(1, 3, 8);
            let lo: Vec<CoeffPoint<Rational>> = vals.iter().enumerate()
                .map(|(m, &v)| CoeffPoint { m: m as u64, bound: Some(r(v as i64, 2)), exact: false }).collect();
            let hi: Vec<CoeffPoint<Rational>> = vals.iter().enumerate()
                .map(|(m, &v)| CoeffPoint { m: m as u64, bound: Some(r((v + extra) as i64, 2)), exact: v % 2 == 0 }).collect();
            if verify_above(&lo, &h) == AboveVerdict::Pass {
                prop_assert_eq!(verify_above(&hi, &h), AboveVerdict::Pass);
            }
        }
    }
}
