//! Run configuration: one TOML document per experiment.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use iterint::diagnostics::DeltaKind;
use iterint::expand::{NoiseIndexTuple, TruncationSpec};
use iterint::oracle::{Calculus, StratRule};
use iterint::sde::LinearSde;
use iterint::{Basis, BasisKind, Interval, Weight};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Legendre,
    Trigonometric,
}

/// `"one"` or `"monomial:q"` for `(t - τ)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightSpec {
    One,
    Monomial(u32),
}

impl FromStr for WeightSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "one" => Ok(Self::One),
            other => other
                .strip_prefix("monomial:")
                .and_then(|q| q.parse().ok())
                .map(Self::Monomial)
                .ok_or_else(|| format!("weight {other:?} is neither \"one\" nor \"monomial:<q>\"")),
        }
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::One => write!(f, "one"),
            Self::Monomial(q) => write!(f, "monomial:{q}"),
        }
    }
}

impl From<WeightSpec> for String {
    fn from(w: WeightSpec) -> String {
        w.to_string()
    }
}

impl WeightSpec {
    pub fn to_weight(self) -> Weight {
        match self {
            Self::One => Weight::ConstantOne,
            Self::Monomial(0) => Weight::ConstantOne,
            Self::Monomial(q) => Weight::Monomial { q },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalculusChoice {
    Ito,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleChoice {
    Midpoint,
    Trapezoidal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Shared truncation orders to compare; empty means the run's order.
    pub orders: Vec<usize>,
    pub calculus: CalculusChoice,
    pub rule: RuleChoice,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            orders: Vec::new(),
            calculus: CalculusChoice::Ito,
            rule: RuleChoice::Midpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagConfig {
    pub p: usize,
    pub kinds: Vec<String>,
    pub trend_orders: Vec<usize>,
    pub trace_orders: Vec<usize>,
    /// Order of the k = 4 tensor for the diagonal constants; 0 skips them.
    pub b_order: usize,
}

impl Default for DiagConfig {
    fn default() -> Self {
        Self {
            p: 5,
            kinds: DeltaKind::ALL.iter().map(|k| k.to_string()).collect(),
            trend_orders: vec![8, 16, 32],
            trace_orders: vec![1, 2, 4, 8, 16, 32, 64, 128],
            b_order: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Noncommutative,
    Commutative,
}

impl ModelChoice {
    pub fn model(self) -> LinearSde {
        match self {
            Self::Noncommutative => LinearSde::noncommutative(),
            Self::Commutative => LinearSde::commutative(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SdeConfig {
    pub model: ModelChoice,
    pub levels: Vec<u32>,
    pub reference_level: u32,
    /// Truncation order feeding the Milstein double integrals.
    pub p: usize,
    pub seeds: u64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            model: ModelChoice::Noncommutative,
            levels: (4..=9).collect(),
            reference_level: 11,
            p: 64,
            seeds: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub interval: IntervalConfig,
    pub basis: BasisChoice,
    pub k: usize,
    /// One shared order, or one per dimension (k <= 2 only).
    pub orders: Vec<usize>,
    /// Empty means ψ ≡ 1 everywhere.
    pub weights: Vec<WeightSpec>,
    pub indices: Vec<usize>,
    pub seed: u64,
    pub mc_samples: u64,
    pub grid_steps: usize,
    pub output: Option<PathBuf>,
    pub verify: VerifyConfig,
    pub diag: DiagConfig,
    pub sde: SdeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            interval: IntervalConfig { start: 0.0, end: 1.0 },
            basis: BasisChoice::Legendre,
            k: 2,
            orders: vec![8],
            weights: Vec::new(),
            indices: vec![1, 2],
            seed: 1,
            mc_samples: 1000,
            grid_steps: 1 << 12,
            output: None,
            verify: VerifyConfig::default(),
            diag: DiagConfig::default(),
            sde: SdeConfig::default(),
        }
    }
}

/// Largest per-dimension order accepted for dense k = 4 tensors.
pub const K4_ORDER_CAP: usize = 63;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn basis(&self) -> Result<Basis, CliError> {
        let iv = Interval::new(self.interval.start, self.interval.end)
            .map_err(|e| CliError::Validation(format!("interval: {e}")))?;
        Ok(Basis::new(
            match self.basis {
                BasisChoice::Legendre => BasisKind::Legendre,
                BasisChoice::Trigonometric => BasisKind::Trigonometric,
            },
            iv,
        ))
    }

    pub fn weights(&self) -> Vec<Weight> {
        if self.weights.is_empty() {
            vec![Weight::ConstantOne; self.k]
        } else {
            self.weights.iter().map(|w| w.to_weight()).collect()
        }
    }

    pub fn all_weights_one(&self) -> bool {
        self.weights().iter().all(|w| w.is_constant_one())
    }

    pub fn truncation(&self) -> Result<TruncationSpec, CliError> {
        let orders = if self.orders.len() == 1 {
            vec![self.orders[0]; self.k]
        } else {
            self.orders.clone()
        };
        TruncationSpec::new(orders).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn index_tuple(&self) -> Result<NoiseIndexTuple, CliError> {
        NoiseIndexTuple::new(self.indices.clone()).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn calculus(&self) -> Calculus {
        match (self.verify.calculus, self.verify.rule) {
            (CalculusChoice::Ito, _) => Calculus::Ito,
            (CalculusChoice::Stratonovich, RuleChoice::Midpoint) => Calculus::Stratonovich(StratRule::Midpoint),
            (CalculusChoice::Stratonovich, RuleChoice::Trapezoidal) => Calculus::Stratonovich(StratRule::Trapezoidal),
        }
    }

    pub fn delta_kinds(&self) -> Result<Vec<DeltaKind>, CliError> {
        self.diag
            .kinds
            .iter()
            .map(|s| s.parse().map_err(|e| CliError::Validation(format!("diag.kinds: {e}"))))
            .collect()
    }

    /// Checks shared by every subcommand; `stratonovich` marks runs that
    /// emit Stratonovich values.
    pub fn validate(&self, stratonovich: bool, allow_outside: bool) -> Result<(), CliError> {
        let invalid = |msg: String| Err(CliError::Validation(msg));
        self.basis()?;
        if !(1..=4).contains(&self.k) {
            return invalid(format!("multiplicity k = {} is outside 1..=4", self.k));
        }
        if self.orders.len() != 1 && self.orders.len() != self.k {
            return invalid(format!("orders needs 1 or k = {} entries, got {}", self.k, self.orders.len()));
        }
        if self.k >= 3 && self.orders.iter().any(|&p| p != self.orders[0]) {
            return invalid(format!(
                "k = {} expansions converge only under one shared truncation order (got orders {:?})",
                self.k, self.orders
            ));
        }
        if !self.weights.is_empty() && self.weights.len() != self.k {
            return invalid(format!("weights needs k = {} entries, got {}", self.k, self.weights.len()));
        }
        if self.indices.len() != self.k {
            return invalid(format!("indices needs k = {} entries, got {}", self.k, self.indices.len()));
        }
        if self.k == 4 && self.orders.iter().chain(&self.verify.orders).any(|&p| p > K4_ORDER_CAP) {
            return invalid(format!("k = 4 dense tensors are capped at order {K4_ORDER_CAP}"));
        }
        if stratonovich && self.k == 4 && !self.all_weights_one() && !allow_outside {
            return invalid(
                "the k = 4 Stratonovich expansion is guaranteed only for unit weights; \
                 pass --allow-outside-guarantees to run it anyway"
                    .into(),
            );
        }
        if self.grid_steps < 2 {
            return invalid("grid_steps must be at least 2".into());
        }
        if self.mc_samples == 0 {
            return invalid("mc_samples must be positive".into());
        }
        self.truncation()?;
        self.index_tuple()?;
        Ok(())
    }
}
