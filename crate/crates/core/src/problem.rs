//! Prediction problems: menus, mappings, datasets, losses and discrepancies.
//!
//! A [`Menu`] is the finite feature space together with its marginal
//! weights. A [`Mapping`] assigns one prediction to each menu item: a real
//! number for conditional-mean and conditional-median problems, or a
//! distribution over three actions for conditional-distribution problems.
//!
//! Discrepancies take the *reference* mapping first. For squared and
//! absolute loss the order does not matter; for log loss the discrepancy is
//! the weighted Kullback-Leibler divergence of the candidate from the
//! reference, which is exactly the excess expected loss of the candidate when
//! the reference is the true conditional distribution.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::FeatureItem;

pub const WEIGHT_TOL: f64 = 1e-9;
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Squared loss; discrepancy is the weighted mean squared difference.
    ConditionalMean,
    /// Negative log-likelihood; discrepancy is the weighted KL divergence.
    ConditionalDistribution,
    /// Absolute loss; discrepancy is the weighted mean absolute difference,
    /// taken as a primitive because the problem does not decompose.
    ConditionalMedian,
}

impl ProblemKind {
    pub fn is_decomposable(self) -> bool {
        !matches!(self, ProblemKind::ConditionalMedian)
    }

    pub(crate) fn uses_simplex(self) -> bool {
        matches!(self, ProblemKind::ConditionalDistribution)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    Uniform,
    Empirical,
}

/// Finite feature space with marginal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Menu {
    ids: Vec<String>,
    items: Vec<FeatureItem>,
    weights: Vec<f64>,
}

impl Menu {
    /// Menu with uniform weights.
    pub fn new(ids: Vec<String>, items: Vec<FeatureItem>) -> Result<Self> {
        let n = items.len();
        let weights = if n == 0 { vec![] } else { vec![1.0 / n as f64; n] };
        Self::with_weights(ids, items, weights)
    }

    pub fn with_weights(ids: Vec<String>, items: Vec<FeatureItem>, weights: Vec<f64>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Config("menu is empty".into()));
        }
        if ids.len() != items.len() || weights.len() != items.len() {
            return Err(Error::Config("menu ids, items and weights differ in length".into()));
        }
        let unique: HashSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(Error::Config("menu item identifiers are not unique".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("menu weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Config(format!("menu weights sum to {total}, not 1")));
        }
        Ok(Self { ids, items, weights })
    }

    /// Same items, weighted by how often each appears in `data`.
    pub fn with_empirical_weights(&self, data: &Dataset) -> Result<Self> {
        let mut counts = vec![0.0; self.len()];
        for obs in data.observations() {
            counts[obs.item] += 1.0;
        }
        let n = data.len() as f64;
        let weights = counts.into_iter().map(|c| c / n).collect();
        Self::with_weights(self.ids.clone(), self.items.clone(), weights)
    }

    pub fn reweighted(&self, mode: WeightsMode, data: Option<&Dataset>) -> Result<Self> {
        match (mode, data) {
            (WeightsMode::Uniform, _) => Self::new(self.ids.clone(), self.items.clone()),
            (WeightsMode::Empirical, Some(d)) => self.with_empirical_weights(d),
            (WeightsMode::Empirical, None) => Err(Error::Config("empirical weights need a dataset".into())),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[FeatureItem] {
        &self.items
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn item(&self, i: usize) -> &FeatureItem {
        &self.items[i]
    }

    pub fn all_lotteries(&self) -> bool {
        self.items.iter().all(FeatureItem::is_lottery)
    }

    pub fn all_games(&self) -> bool {
        self.items.iter().all(|i| i.as_game().is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Value(f64),
    Probabilities([f64; 3]),
}

/// Observed outcome: a real value, or a zero-based action index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Value(f64),
    Action(usize),
}

/// One prediction per menu item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    Scalar(Vec<f64>),
    Simplex(Vec<[f64; 3]>),
}

impl Mapping {
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMapping("non-finite prediction".into()));
        }
        Ok(Mapping::Scalar(values))
    }

    pub fn simplex(values: Vec<[f64; 3]>) -> Result<Self> {
        for (i, p) in values.iter().enumerate() {
            if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidMapping(format!("item {i}: negative probability {p:?}")));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidMapping(format!("item {i}: probabilities sum to {s}")));
            }
        }
        Ok(Mapping::Simplex(values))
    }

    pub fn uniform_simplex(n: usize) -> Self {
        Mapping::Simplex(vec![[1.0 / 3.0; 3]; n])
    }

    pub fn len(&self) -> usize {
        match self {
            Mapping::Scalar(v) => v.len(),
            Mapping::Simplex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Prediction {
        match self {
            Mapping::Scalar(v) => Prediction::Value(v[i]),
            Mapping::Simplex(v) => Prediction::Probabilities(v[i]),
        }
    }

    pub fn as_scalar(&self) -> Option<&[f64]> {
        match self {
            Mapping::Scalar(v) => Some(v),
            Mapping::Simplex(_) => None,
        }
    }

    pub fn as_simplex(&self) -> Option<&[[f64; 3]]> {
        match self {
            Mapping::Simplex(v) => Some(v),
            Mapping::Scalar(_) => None,
        }
    }

    /// Mapping restricted to the listed items, in that order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        match self {
            Mapping::Scalar(v) => Mapping::Scalar(order.iter().map(|&i| v[i]).collect()),
            Mapping::Simplex(v) => Mapping::Simplex(order.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub item: usize,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

/// Observations indexed into a menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, menu_len: usize) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InsufficientData("dataset is empty".into()));
        }
        for (i, obs) in observations.iter().enumerate() {
            if obs.item >= menu_len {
                return Err(Error::Config(format!(
                    "observation {i} refers to item {} but the menu has {menu_len}",
                    obs.item
                )));
            }
            match obs.outcome {
                Outcome::Action(a) if a > 2 => {
                    return Err(Error::Config(format!("observation {i}: action index {a} out of range")))
                }
                Outcome::Value(v) if !v.is_finite() => {
                    return Err(Error::Config(format!("observation {i}: non-finite outcome")))
                }
                _ => {}
            }
        }
        Ok(Self { observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self { observations: indices.iter().map(|&i| self.observations[i].clone()).collect() }
    }

    /// Distinct group keys in order of first appearance.
    pub fn group_keys(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut keys = Vec::new();
        for obs in &self.observations {
            if let Some(g) = &obs.group {
                if seen.insert(g.clone()) {
                    keys.push(g.clone());
                }
            }
        }
        keys
    }

    /// Number of observations of each menu item.
    pub fn item_counts(&self, menu_len: usize) -> Vec<usize> {
        let mut counts = vec![0; menu_len];
        for obs in &self.observations {
            counts[obs.item] += 1;
        }
        counts
    }
}

/// Loss of a single prediction against a realized outcome.
pub fn pointwise_loss(kind: ProblemKind, prediction: Prediction, outcome: Outcome) -> Result<f64> {
    match (kind, prediction, outcome) {
        (ProblemKind::ConditionalMean, Prediction::Value(f), Outcome::Value(y)) => Ok((y - f) * (y - f)),
        (ProblemKind::ConditionalMedian, Prediction::Value(f), Outcome::Value(y)) => Ok((y - f).abs()),
        (ProblemKind::ConditionalDistribution, Prediction::Probabilities(p), Outcome::Action(a)) if a < 3 => {
            if p[a] <= 0.0 {
                Err(Error::ZeroLikelihood { item: usize::MAX, action: a })
            } else {
                Ok(-p[a].ln())
            }
        }
        _ => Err(Error::KindMismatch(kind)),
    }
}

/// Sample mean of the pointwise losses.
pub fn empirical_error(mapping: &Mapping, data: &Dataset, kind: ProblemKind) -> Result<f64> {
    let mut total = 0.0;
    for obs in data.observations() {
        if obs.item >= mapping.len() {
            return Err(Error::MenuMismatch { expected: obs.item + 1, got: mapping.len() });
        }
        total += pointwise_loss(kind, mapping.get(obs.item), obs.outcome).map_err(|e| match e {
            Error::ZeroLikelihood { action, .. } => Error::ZeroLikelihood { item: obs.item, action },
            other => other,
        })?;
    }
    Ok(total / data.len() as f64)
}

/// Weighted discrepancy between a reference mapping and a candidate.
pub fn discrepancy(kind: ProblemKind, reference: &Mapping, candidate: &Mapping, weights: &[f64]) -> Result<f64> {
    if reference.len() != weights.len() {
        return Err(Error::MenuMismatch { expected: weights.len(), got: reference.len() });
    }
    if candidate.len() != weights.len() {
        return Err(Error::MenuMismatch { expected: weights.len(), got: candidate.len() });
    }
    match (kind, reference, candidate) {
        (ProblemKind::ConditionalMean, Mapping::Scalar(f), Mapping::Scalar(g)) => {
            Ok(weights.iter().zip(f).zip(g).map(|((w, a), b)| w * (a - b) * (a - b)).sum())
        }
        (ProblemKind::ConditionalMedian, Mapping::Scalar(f), Mapping::Scalar(g)) => {
            Ok(weights.iter().zip(f).zip(g).map(|((w, a), b)| w * (a - b).abs()).sum())
        }
        (ProblemKind::ConditionalDistribution, Mapping::Simplex(f), Mapping::Simplex(g)) => {
            let mut total = 0.0;
            for (item, ((w, r), c)) in weights.iter().zip(f).zip(g).enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let mut kl = 0.0;
                for a in 0..3 {
                    if r[a] > 0.0 {
                        if c[a] <= 0.0 {
                            return Err(Error::InfiniteDivergence { item, action: a });
                        }
                        kl += r[a] * (r[a].ln() - c[a].ln());
                    }
                }
                total += w * kl;
            }
            Ok(total.max(0.0))
        }
        _ => Err(Error::KindMismatch(kind)),
    }
}

/// Finitely supported joint distribution of (item, outcome).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDistribution {
    pub weights: Vec<f64>,
    /// Per item, the conditional outcome distribution as (outcome, probability).
    pub conditionals: Vec<Vec<(Outcome, f64)>>,
}

impl TrialDistribution {
    /// Expected loss of `f` under this distribution.
    pub fn expected_error(&self, kind: ProblemKind, f: &Mapping) -> Result<f64> {
        let mut total = 0.0;
        for (x, (w, cond)) in self.weights.iter().zip(&self.conditionals).enumerate() {
            for &(y, p) in cond {
                if p > 0.0 {
                    total += w * p * pointwise_loss(kind, f.get(x), y)?;
                }
            }
        }
        Ok(total)
    }

    /// Loss-minimizing mapping: conditional mean, distribution, or lower median.
    pub fn optimal_mapping(&self, kind: ProblemKind) -> Result<Mapping> {
        match kind {
            ProblemKind::ConditionalMean => Mapping::scalar(
                self.conditionals
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|&(y, p)| match y {
                                Outcome::Value(v) => Ok(v * p),
                                Outcome::Action(_) => Err(Error::KindMismatch(kind)),
                            })
                            .sum::<Result<f64>>()
                    })
                    .collect::<Result<_>>()?,
            ),
            ProblemKind::ConditionalDistribution => Mapping::simplex(
                self.conditionals
                    .iter()
                    .map(|c| {
                        let mut probs = [0.0; 3];
                        for &(y, p) in c {
                            match y {
                                Outcome::Action(a) if a < 3 => probs[a] += p,
                                _ => return Err(Error::KindMismatch(kind)),
                            }
                        }
                        Ok(probs)
                    })
                    .collect::<Result<_>>()?,
            ),
            ProblemKind::ConditionalMedian => Mapping::scalar(
                self.conditionals
                    .iter()
                    .map(|c| {
                        let mut support = c
                            .iter()
                            .map(|&(y, p)| match y {
                                Outcome::Value(v) => Ok((v, p)),
                                Outcome::Action(_) => Err(Error::KindMismatch(kind)),
                            })
                            .collect::<Result<Vec<_>>>()?;
                        support.sort_by(|a, b| a.0.total_cmp(&b.0));
                        let mut cdf = 0.0;
                        for &(v, p) in &support {
                            cdf += p;
                            if cdf >= 0.5 - 1e-12 {
                                return Ok(v);
                            }
                        }
                        Ok(support.last().map(|s| s.0).unwrap_or(0.0))
                    })
                    .collect::<Result<_>>()?,
            ),
        }
    }
}

/// Returns `(e_P(f) - e_P(f_P), d(f_P, f))`, both by exact enumeration.
///
/// For decomposable kinds the two agree up to rounding; for the conditional
/// median they generally do not.
pub fn check_decomposition(kind: ProblemKind, trial: &TrialDistribution, f: &Mapping) -> Result<(f64, f64)> {
    let best = trial.optimal_mapping(kind)?;
    let lhs = trial.expected_error(kind, f)? - trial.expected_error(kind, &best)?;
    let rhs = discrepancy(kind, &best, f, &trial.weights)?;
    Ok((lhs, rhs))
}

pub(crate) fn check_kind_matches(kind: ProblemKind, mapping: &Mapping) -> Result<()> {
    if kind.uses_simplex() == mapping.as_simplex().is_some() {
        Ok(())
    } else {
        Err(Error::KindMismatch(kind))
    }
}
