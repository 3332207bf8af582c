use std::sync::Arc;
use std::time::Instant;

use klsym_core::expsum::{SumCache, SumEvaluator};
use klsym_core::ff::{ClosedPoint, Field, FieldDesc, Tower};
use klsym_core::lfun::{self, LocalFactor, TruncSeries};
use klsym_core::polygon::{
    compare_slope_range, hodge_polygon, newton_points, verify_above, AboveVerdict, CoeffPoint, SlopeComparison,
};
use klsym_core::{Polygon, Rational};
use num_bigint::BigInt;
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{vertices, AttemptOut, LocalFactorOut, Report, RuntimeOut, SeriesOut, VerdictOut, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FINDING: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Base field, tower and evaluator for a configuration.
pub fn evaluator(cfg: &RunConfig) -> CliResult<SumEvaluator> {
    let tower = Arc::new(Tower::new(cfg.p, cfg.max_field_size)?);
    let base = match &cfg.modulus {
        Some(m) => Arc::new(Field::new(FieldDesc::new(cfg.p, cfg.a, Some(m.clone()))?, cfg.max_field_size)?),
        None => tower.field(cfg.a)?,
    };
    let cache = match &cfg.cache_path {
        Some(path) => SumCache::open(path)?,
        None => SumCache::in_memory(),
    };
    Ok(SumEvaluator::new(tower, base, Arc::new(cache))?)
}

/// `(p-1)·a·(⌈H(D)⌉ + 4)` π-units, `H` the Hodge polygon.
pub fn default_precision(cfg: &RunConfig, hodge: &Polygon) -> u64 {
    let h = hodge.eval(&Rational::from_integer(BigInt::from(cfg.degree))).expect("polygon covers D");
    let ceil: u64 = h.ceil().to_integer().try_into().expect("small height");
    (cfg.p as u64 - 1) * cfg.a as u64 * (ceil + 4)
}

/// π-units needed to certify `ord_q ≥ x`.
fn pi_units(cfg: &RunConfig, x: &Rational) -> u64 {
    let scaled = x * Rational::from_integer(BigInt::from(cfg.a as u64 * (cfg.p as u64 - 1)));
    scaled.ceil().to_integer().try_into().unwrap_or(u64::MAX)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Status {
    Pass,
    Computed,
    Agree,
    Inconclusive,
    Violation,
    Disagree,
    Finding,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Computed => "computed",
            Status::Agree => "agree",
            Status::Inconclusive => "inconclusive",
            Status::Violation => "violation",
            Status::Disagree => "disagree",
            Status::Finding => "finding",
        }
    }

    fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Computed | Status::Agree => EXIT_OK,
            Status::Inconclusive => EXIT_INCONCLUSIVE,
            Status::Violation | Status::Disagree | Status::Finding => EXIT_FINDING,
        }
    }
}

struct Verdict {
    status: Status,
    detail: String,
    witness: Option<serde_json::Value>,
}

impl Verdict {
    fn new(status: Status, detail: impl Into<String>) -> Self {
        Verdict { status, detail: detail.into(), witness: None }
    }
}

fn above_verdict(cfg: &RunConfig, label: &str, v: &AboveVerdict<Rational>) -> Verdict {
    let r = |x: &Rational| json!({"num": x.numer().to_string(), "den": x.denom().to_string()});
    match v {
        AboveVerdict::Pass => {
            Verdict::new(Status::Pass, format!("{label}: every coefficient point lies on or above the Hodge polygon"))
        }
        AboveVerdict::Violation { m, ord, polygon } => Verdict {
            status: Status::Violation,
            detail: format!("{label}: coefficient {m} has ord_q {ord} below the Hodge polygon value {polygon}"),
            witness: Some(json!({"series": label, "m": m, "ord_q": r(ord), "hodge": r(polygon)})),
        },
        AboveVerdict::Inconclusive { m, needed } => Verdict {
            status: Status::Inconclusive,
            detail: format!("{label}: coefficient {m} is not certified to the Hodge polygon"),
            witness: Some(
                json!({"series": label, "m": m, "needed_ord_q": r(needed), "needed_precision_pi": pi_units(cfg, needed)}),
            ),
        },
        AboveVerdict::OutOfRange { m } => {
            Verdict::new(Status::Finding, format!("{label}: Hodge polygon does not reach {m}"))
        }
    }
}

fn compare_verdict(v: &SlopeComparison<Rational>) -> Verdict {
    let pts = |vs: &[(Rational, Rational)]| -> serde_json::Value {
        vs.iter().map(|(x, y)| json!([x.to_string(), y.to_string()])).collect()
    };
    match v {
        SlopeComparison::Agree { vertices } => Verdict {
            status: Status::Agree,
            detail: "hull segments of slope <= k coincide".into(),
            witness: Some(json!({"vertices": pts(vertices)})),
        },
        SlopeComparison::Disagree { left, right } => Verdict {
            status: Status::Disagree,
            detail: "hull segments of slope <= k differ".into(),
            witness: Some(json!({"sym_k": pts(left), "sym_inf": pts(right)})),
        },
        SlopeComparison::Inconclusive { m } => Verdict {
            status: Status::Inconclusive,
            detail: format!("hull vertex at {m} is not certified exact"),
            witness: Some(json!({"m": m})),
        },
    }
}

/// Shared state of one run.
pub struct Session {
    pub cfg: RunConfig,
    pub evaluator: SumEvaluator,
    pub factors: Vec<(ClosedPoint, LocalFactor)>,
    pub hodge: Polygon,
}

impl Session {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        cfg.validate()?;
        let evaluator = evaluator(cfg)?;
        let factors = lfun::local_factors(&evaluator, cfg.n, cfg.degree)?;
        let hodge = hodge_polygon(cfg.n, cfg.p, cfg.degree as u64);
        Ok(Session { cfg: cfg.clone(), evaluator, factors, hodge })
    }

    pub fn precision(&self) -> u64 {
        self.cfg.precision.unwrap_or_else(|| default_precision(&self.cfg, &self.hodge))
    }

    pub fn symk(&self, k: u32) -> CliResult<TruncSeries> {
        Ok(lfun::symk_series(&self.evaluator, &self.factors, k, self.cfg.degree as usize)?)
    }

    pub fn syminf(&self, v: u64) -> CliResult<TruncSeries> {
        Ok(lfun::syminf_series(&self.evaluator, &self.factors, &self.cfg.kappa()?, v, self.cfg.degree as usize)?)
    }

    pub fn unitroot(&self, v: u64) -> CliResult<TruncSeries> {
        Ok(lfun::unitroot_series(&self.evaluator, &self.factors, &self.cfg.kappa()?, v, self.cfg.degree as usize)?)
    }

    fn series_label(&self) -> String {
        match self.cfg.k() {
            Some(k) => format!("sym{k}_inf"),
            None => "sym_kappa_inf".into(),
        }
    }
}

fn points(s: &TruncSeries) -> Vec<CoeffPoint<Rational>> {
    newton_points(s)
}

fn integrality_verdict(label: &str, s: &TruncSeries) -> Option<Verdict> {
    s.check_zp().err().map(|e| Verdict::new(Status::Finding, format!("{label}: {e}")))
}

/// Runs the configured pipeline inside a pool of `workers` threads.
pub fn run(cfg: &RunConfig) -> CliResult<Outcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let start = Instant::now();
    let result = pool.install(|| run_session(cfg));
    let (mut report, exit_code) = match result {
        Ok(pair) => pair,
        Err(CliError::Core(e)) if e.is_finding() => {
            let verdict = Verdict::new(Status::Finding, e.to_string());
            (empty_report(cfg, verdict.status, &verdict), EXIT_FINDING)
        }
        Err(e) => return Err(e),
    };
    report.runtime.elapsed_ms = start.elapsed().as_millis();
    report.runtime.workers = cfg.workers;
    Ok(Outcome { report, exit_code })
}

fn empty_report(cfg: &RunConfig, status: Status, verdict: &Verdict) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        q: BigInt::from(cfg.p).pow(cfg.a).to_string(),
        reading: READING.into(),
        local_factors: Vec::new(),
        hodge_polygon: Vec::new(),
        series: Vec::new(),
        attempts: Vec::new(),
        verdict: VerdictOut {
            status: status.as_str().into(),
            detail: verdict.detail.clone(),
            witness: verdict.witness.clone(),
        },
        runtime: RuntimeOut::default(),
    }
}

const READING: &str = "ord_q = ord_p / a; Newton data checked coefficient-wise on the truncation c_0..c_D";

fn run_session(cfg: &RunConfig) -> CliResult<(Report, i32)> {
    let session = Session::new(cfg)?;
    let mut series = Vec::new();
    let mut attempts = Vec::new();
    let mut verdicts: Vec<Verdict> = Vec::new();
    let v0 = session.precision();
    let retries = cfg.max_retries;

    match cfg.mode {
        Mode::Symk => {
            let k = cfg.k().expect("validated");
            let s = session.symk(k)?;
            series.push(SeriesOut::new(&format!("sym{k}"), None, &s, &points(&s)));
            verdicts.push(Verdict::new(Status::Computed, "exact series"));
        }
        Mode::Syminf | Mode::Unitroot => {
            let (label, s) = if cfg.mode == Mode::Syminf {
                (session.series_label(), session.syminf(v0)?)
            } else {
                ("unit_root".to_string(), session.unitroot(v0)?)
            };
            series.push(SeriesOut::new(&label, Some(v0), &s, &points(&s)));
            verdicts.push(
                integrality_verdict(&label, &s).unwrap_or_else(|| Verdict::new(Status::Computed, "p-adic series")),
            );
        }
        Mode::VerifyNewtonHodge => {
            if let Some(k) = cfg.k() {
                let s = session.symk(k)?;
                let pts = points(&s);
                verdicts.push(above_verdict(cfg, &format!("sym{k}"), &verify_above(&pts, &session.hodge)));
                series.push(SeriesOut::new(&format!("sym{k}"), None, &s, &pts));
            }
            let label = session.series_label();
            let mut v = v0;
            for attempt in 0..=retries {
                let s = session.syminf(v)?;
                let pts = points(&s);
                let verdict = above_verdict(cfg, &label, &verify_above(&pts, &session.hodge));
                attempts.push(AttemptOut { precision_pi: v, status: verdict.status.as_str().into() });
                if verdict.status != Status::Inconclusive || attempt == retries {
                    if let Some(bad) = integrality_verdict(&label, &s) {
                        verdicts.push(bad);
                    }
                    series.push(SeriesOut::new(&label, Some(v), &s, &pts));
                    verdicts.push(verdict);
                    break;
                }
                v *= 2;
            }
        }
        Mode::CompareSlopes => {
            let k = cfg.k().expect("validated");
            let a = session.symk(k)?;
            let pa = points(&a);
            series.push(SeriesOut::new(&format!("sym{k}"), None, &a, &pa));
            let label = session.series_label();
            let kk = Rational::from_integer(BigInt::from(k));
            let mut v = v0;
            for attempt in 0..=retries {
                let b = session.syminf(v)?;
                let pb = points(&b);
                let verdict = compare_verdict(&compare_slope_range(&pa, &pb, &kk));
                attempts.push(AttemptOut { precision_pi: v, status: verdict.status.as_str().into() });
                if verdict.status != Status::Inconclusive || attempt == retries {
                    series.push(SeriesOut::new(&label, Some(v), &b, &pb));
                    verdicts.push(verdict);
                    break;
                }
                v *= 2;
            }
        }
    }

    // the most severe verdict wins; the first of equal severity is reported
    let worst = verdicts.iter().map(|v| v.status).max().expect("at least one verdict");
    let lead = verdicts.iter().find(|v| v.status == worst).expect("present");
    let detail = verdicts.iter().map(|v| v.detail.as_str()).collect::<Vec<_>>().join("; ");
    let stats = session.evaluator.cache().stats();
    let report = Report {
        local_factors: session.factors.iter().map(|(pt, f)| LocalFactorOut::new(pt.coords(), f)).collect(),
        hodge_polygon: vertices(&session.hodge),
        series,
        attempts,
        verdict: VerdictOut { status: worst.as_str().into(), detail, witness: lead.witness.clone() },
        runtime: RuntimeOut {
            cache_path: cfg.cache_path.as_ref().map(|p| p.display().to_string()),
            cache_hits: stats.hits,
            cache_misses: stats.misses,
            cache_loaded: stats.loaded,
            ..RuntimeOut::default()
        },
        ..empty_report(cfg, worst, lead)
    };
    Ok((report, worst.exit_code()))
}
