//! JSON report (schema version [`SCHEMA_VERSION`]) and CSV coefficient tables.
//!
//! Everything outside the `runtime` section is a deterministic function of
//! the configuration: it does not depend on worker count or cache state.

use std::io::Write;

use klsym_core::lfun::{LocalFactor, SeriesCoeff, TruncSeries};
use klsym_core::polygon::{lower_hull, CoeffPoint};
use klsym_core::{Polygon, Rational};
use serde::Serialize;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalOut {
    pub num: String,
    pub den: String,
}

impl From<&Rational> for RationalOut {
    fn from(r: &Rational) -> Self {
        RationalOut { num: r.numer().to_string(), den: r.denom().to_string() }
    }
}

pub fn vertices(poly: &Polygon) -> Vec<[RationalOut; 2]> {
    poly.vertices().iter().map(|(x, y)| [x.into(), y.into()]).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalFactorOut {
    pub degree: u32,
    pub rep: Vec<u32>,
    pub coeffs: Vec<String>,
    pub leading_sign: i8,
}

impl LocalFactorOut {
    pub fn new(rep: Vec<u32>, f: &LocalFactor) -> Self {
        LocalFactorOut {
            degree: f.degree(),
            rep,
            coeffs: f.coeffs().iter().map(|c| c.to_string()).collect(),
            leading_sign: f.leading_sign(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoeffOut {
    Exact { m: usize, value: String },
    Padic { m: usize, coords: Vec<String>, modulus_exponent: u32, certificate_pi: u64, zp_value: Option<String> },
}

#[derive(Clone, Debug, Serialize)]
pub struct PointOut {
    pub m: u64,
    /// `ord_q` lower bound; `null` for an exactly zero coefficient.
    pub ord_q: Option<RationalOut>,
    pub exact: bool,
}

impl From<&CoeffPoint<Rational>> for PointOut {
    fn from(p: &CoeffPoint<Rational>) -> Self {
        PointOut { m: p.m, ord_q: p.bound.as_ref().map(Into::into), exact: p.exact }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesOut {
    pub label: String,
    pub precision_pi: Option<u64>,
    pub coefficients: Vec<CoeffOut>,
    pub newton_points: Vec<PointOut>,
    pub newton_hull: Vec<[RationalOut; 2]>,
    pub integrality: String,
}

impl SeriesOut {
    pub fn new(label: &str, precision_pi: Option<u64>, s: &TruncSeries, points: &[CoeffPoint<Rational>]) -> Self {
        let coefficients = s
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| match c {
                SeriesCoeff::Exact(x) => CoeffOut::Exact { m, value: x.to_string() },
                SeriesCoeff::Padic(x) => CoeffOut::Padic {
                    m,
                    coords: x.coords().iter().map(|c| c.to_string()).collect(),
                    modulus_exponent: x.ring().precision(),
                    certificate_pi: x.certificate(),
                    zp_value: x.zeta_components_vanish().then(|| x.zp_value().to_string()),
                },
            })
            .collect();
        let finite: Vec<(Rational, Rational)> =
            points.iter().filter_map(|p| p.bound.clone().map(|b| (Rational::from_integer(p.m.into()), b))).collect();
        let integrality = match s.coeffs.first() {
            Some(SeriesCoeff::Exact(_)) => match s.integer_coeffs() {
                Ok(_) => "all coefficients are rational integers".to_string(),
                Err(e) => e.to_string(),
            },
            _ => match s.check_zp() {
                Ok(()) => "all coefficients lie in Z_p to their certificates".to_string(),
                Err(e) => e.to_string(),
            },
        };
        SeriesOut {
            label: label.to_string(),
            precision_pi,
            coefficients,
            newton_points: points.iter().map(Into::into).collect(),
            newton_hull: vertices(&lower_hull(&finite)),
            integrality,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptOut {
    pub precision_pi: u64,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictOut {
    pub status: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RuntimeOut {
    pub elapsed_ms: u128,
    pub workers: usize,
    pub cache_path: Option<String>,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub cache_loaded: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub q: String,
    /// How Newton data are read off a truncation.
    pub reading: String,
    pub local_factors: Vec<LocalFactorOut>,
    pub hodge_polygon: Vec<[RationalOut; 2]>,
    pub series: Vec<SeriesOut>,
    pub attempts: Vec<AttemptOut>,
    pub verdict: VerdictOut,
    pub runtime: RuntimeOut,
}

impl Report {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// The report without its `runtime` section, for determinism checks.
    pub fn deterministic_json(&self) -> serde_json::Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("runtime");
        }
        serde_json::to_string_pretty(&v)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "series,m,kind,value,certificate_pi,ord_q_num,ord_q_den,exact")?;
        for s in &self.series {
            for (c, pt) in s.coefficients.iter().zip(&s.newton_points) {
                let (kind, value, cert) = match c {
                    CoeffOut::Exact { value, .. } => ("exact", value.clone(), String::new()),
                    CoeffOut::Padic { coords, zp_value, certificate_pi, .. } => {
                        ("padic", zp_value.clone().unwrap_or_else(|| coords.join(" ")), certificate_pi.to_string())
                    }
                };
                let (num, den) =
                    pt.ord_q.as_ref().map_or((String::from("inf"), String::new()), |r| (r.num.clone(), r.den.clone()));
                writeln!(w, "{},{},{},\"{}\",{},{},{},{}", s.label, pt.m, kind, value, cert, num, den, pt.exact)?;
            }
        }
        Ok(())
    }
}
