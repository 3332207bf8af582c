use std::path::PathBuf;

use klsym_core::padic::{ExponentKind, PadicExponent};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Symk,
    Syminf,
    Unitroot,
    VerifyNewtonHodge,
    CompareSlopes,
}

/// The exponent of a run: an integer `k` or base-`p` digits of `κ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ExponentInput {
    Integer { value: i64 },
    Digits { digits: Vec<u32> },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: u32,
    pub a: u32,
    pub modulus: Option<Vec<u32>>,
    pub n: u32,
    pub mode: Mode,
    pub exponent: Option<ExponentInput>,
    /// Truncation degree `D`.
    pub degree: u32,
    /// Working precision in π-units; defaulted from the Hodge polygon.
    pub precision: Option<u64>,
    pub max_retries: u32,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub cache_path: Option<PathBuf>,
    #[serde(skip)]
    pub out_path: Option<PathBuf>,
    #[serde(skip)]
    pub csv_path: Option<PathBuf>,
    pub max_field_size: u64,
    /// Largest point degree allowed.
    pub max_degree: u32,
}

impl RunConfig {
    pub fn new(p: u32, n: u32, mode: Mode, degree: u32) -> Self {
        RunConfig {
            p,
            a: 1,
            modulus: None,
            n,
            mode,
            exponent: None,
            degree,
            precision: None,
            max_retries: 3,
            workers: 1,
            cache_path: None,
            out_path: None,
            csv_path: None,
            max_field_size: klsym_core::ff::DEFAULT_MAX_FIELD_SIZE,
            max_degree: 4,
        }
    }

    pub fn with_k(mut self, k: i64) -> Self {
        self.exponent = Some(ExponentInput::Integer { value: k });
        self
    }

    pub fn with_digits(mut self, digits: Vec<u32>) -> Self {
        self.exponent = Some(ExponentInput::Digits { digits });
        self
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.p <= 2 {
            return Err(CliError::Usage(format!(
                "p = {}: the Newton-above-Hodge bound is stated for an odd prime p only",
                self.p
            )));
        }
        if self.a == 0 {
            return Err(CliError::Usage("a must be at least 1 (q = p^a must be a field size)".into()));
        }
        if self.n == 0 {
            return Err(CliError::Usage("n must be at least 1".into()));
        }
        if self.degree > self.max_degree {
            return Err(CliError::Usage(format!(
                "truncation degree {} exceeds the configured cap {} (raise --max-degree)",
                self.degree, self.max_degree
            )));
        }
        match (&self.mode, &self.exponent) {
            (_, None) => return Err(CliError::Usage("an exponent is required (--k, --kappa or --kappa-int)".into())),
            (Mode::Symk | Mode::CompareSlopes, Some(ExponentInput::Digits { .. })) => {
                return Err(CliError::Usage("this mode needs an integer exponent k".into()))
            }
            (Mode::Symk | Mode::CompareSlopes, Some(ExponentInput::Integer { value })) if *value < 0 => {
                return Err(CliError::Usage("k must be non-negative".into()))
            }
            _ => {}
        }
        if let Some(ExponentInput::Digits { digits }) = &self.exponent {
            if digits.is_empty() || digits.iter().any(|&d| d >= self.p) {
                return Err(CliError::Usage(format!("kappa digits must be in [0, {}]", self.p - 1)));
            }
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// `κ` as a p-adic exponent.
    pub fn kappa(&self) -> CliResult<PadicExponent> {
        match &self.exponent {
            Some(ExponentInput::Integer { value }) => Ok(PadicExponent::integer(self.p, *value)),
            Some(ExponentInput::Digits { digits }) => {
                Ok(PadicExponent::from_digits(self.p, digits, ExponentKind::Truncated)?)
            }
            None => Err(CliError::Usage("missing exponent".into())),
        }
    }

    /// Integer `k` for the finite symmetric power, if the exponent is one.
    pub fn k(&self) -> Option<u32> {
        match &self.exponent {
            Some(ExponentInput::Integer { value }) if *value >= 0 => Some(*value as u32),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_two_is_rejected_with_the_hypothesis() {
        let cfg = RunConfig::new(2, 1, Mode::Symk, 2).with_k(1);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("odd prime"));
    }

    #[test]
    fn exponent_rules() {
        assert!(RunConfig::new(3, 1, Mode::Symk, 2).validate().is_err());
        assert!(RunConfig::new(3, 1, Mode::Symk, 2).with_digits(vec![2, 1]).validate().is_err());
        assert!(RunConfig::new(3, 1, Mode::Syminf, 2).with_digits(vec![2, 3]).validate().is_err());
        assert!(RunConfig::new(3, 1, Mode::Syminf, 2).with_digits(vec![2, 1, 1]).validate().is_ok());
        assert!(RunConfig::new(3, 1, Mode::Symk, 9).with_k(1).validate().is_err());
    }
}
