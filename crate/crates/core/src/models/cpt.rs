//! Cumulative prospect theory for binary and three-outcome lotteries.
//!
//! The value function is a power function and the weighting function is the
//! two-parameter linear-in-log-odds form. Predictions are certainty
//! equivalents in money: the CPT value is mapped back through the inverse of
//! the value function, so that the naive expected-value rule is the member
//! with all parameters equal to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::{BinaryLottery, Domain, FeatureItem, ThreeOutcomeLottery};
use crate::models::Model;
use crate::problem::{Mapping, Menu, ProblemKind};

pub const CURVATURE_BOUNDS: (f64, f64) = (0.2, 2.0);
pub const GAMMA_BOUNDS: (f64, f64) = (0.05, 2.0);
pub const ETA_BOUNDS: (f64, f64) = (0.05, 5.0);

/// Full CPT parameter vector. `curvature` is alpha on gains and beta on losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptParams {
    pub curvature: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl CptParams {
    pub const NAIVE: CptParams = CptParams { curvature: 1.0, gamma: 1.0, eta: 1.0 };

    /// All three at 1: the expected-value member.
    pub fn is_identity(&self) -> bool {
        self.curvature == 1.0 && self.gamma == 1.0 && self.eta == 1.0
    }

    pub fn new(curvature: f64, gamma: f64, eta: f64) -> Result<Self> {
        if !(curvature > 0.0 && gamma > 0.0 && eta > 0.0) {
            return Err(Error::Config(format!("CPT parameters must be positive, got ({curvature}, {gamma}, {eta})")));
        }
        Ok(Self { curvature, gamma, eta })
    }
}

/// Probability weighting `w(p) = eta p^gamma / (eta p^gamma + (1-p)^gamma)`.
pub fn weighting(p: f64, gamma: f64, eta: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let a = eta * p.powf(gamma);
    a / (a + (1.0 - p).powf(gamma))
}

/// Certainty equivalent of a binary lottery.
pub fn cpt_value(params: &CptParams, lottery: &BinaryLottery) -> f64 {
    if params.is_identity() {
        return lottery.expected_value();
    }
    let c = params.curvature;
    match lottery.domain {
        Domain::Gain => {
            let w = weighting(lottery.p, params.gamma, params.eta);
            let v = w * lottery.z_high.powf(c) + (1.0 - w) * lottery.z_low.powf(c);
            v.powf(1.0 / c)
        }
        Domain::Loss => {
            // v(z) = -(-z)^beta, decision weight w(1-p) on the worse prize
            let w = weighting(1.0 - lottery.p, params.gamma, params.eta);
            let v = -(1.0 - w) * (-lottery.z_high).powf(c) - w * (-lottery.z_low).powf(c);
            -(-v).powf(1.0 / c)
        }
    }
}

/// Certainty equivalent of a three-outcome gain lottery (rank-dependent form).
pub fn cpt3_value(params: &CptParams, lottery: &ThreeOutcomeLottery) -> f64 {
    if params.is_identity() {
        return lottery.expected_value();
    }
    let c = params.curvature;
    let v = |z: f64| z.powf(c);
    let [z1, z2, z3] = lottery.z;
    let [_, p2, p3] = lottery.p;
    let value = v(z1)
        + weighting(p2 + p3, params.gamma, params.eta) * (v(z2) - v(z1))
        + weighting(p3, params.gamma, params.eta) * (v(z3) - v(z2));
    value.max(0.0).powf(1.0 / c)
}

/// Expected value of a lottery item.
pub fn expected_value_naive(item: &FeatureItem) -> Result<f64> {
    match item {
        FeatureItem::Binary(l) => Ok(l.expected_value()),
        FeatureItem::ThreeOutcome(l) => Ok(l.expected_value()),
        FeatureItem::Game(_) => Err(Error::DomainMismatch("expected value of a game".into())),
    }
}

/// Which of (curvature, gamma, eta) are free; fixed ones are pinned at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeParams {
    pub curvature: bool,
    pub gamma: bool,
    pub eta: bool,
}

impl FreeParams {
    pub const ALL: FreeParams = FreeParams { curvature: true, gamma: true, eta: true };
}

#[derive(Debug, Clone)]
pub struct CptModel {
    free: FreeParams,
    curvature_name: &'static str,
    prefix: &'static str,
}

impl CptModel {
    pub fn new(free: FreeParams) -> Self {
        Self { free, curvature_name: "alpha", prefix: "cpt" }
    }

    pub fn loss(free: FreeParams) -> Self {
        Self { free, curvature_name: "beta", prefix: "cpt" }
    }

    pub fn three_outcome(free: FreeParams) -> Self {
        Self { free, curvature_name: "alpha", prefix: "cpt3" }
    }

    /// Parses a parameter list such as `alpha,gamma,eta` or `gamma,eta`.
    pub fn parse(prefix: &str, spec: &str) -> Result<Self> {
        let mut free = FreeParams { curvature: false, gamma: false, eta: false };
        let mut curvature_name = "alpha";
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "alpha" => free.curvature = true,
                "beta" => {
                    free.curvature = true;
                    curvature_name = "beta";
                }
                "gamma" => free.gamma = true,
                "eta" => free.eta = true,
                other => return Err(Error::Config(format!("unknown CPT parameter '{other}'"))),
            }
        }
        if !(free.curvature || free.gamma || free.eta) {
            return Err(Error::Config("CPT model needs at least one free parameter".into()));
        }
        let prefix = match prefix {
            "cpt" => "cpt",
            "cpt3" => "cpt3",
            other => return Err(Error::Config(format!("unknown CPT family '{other}'"))),
        };
        Ok(Self { free, curvature_name, prefix })
    }

    pub fn free(&self) -> FreeParams {
        self.free
    }

    /// Expands the free-parameter vector to the full triple.
    pub fn params(&self, theta: &[f64]) -> CptParams {
        let mut it = theta.iter().copied();
        let mut next = |free: bool| if free { it.next().unwrap_or(1.0) } else { 1.0 };
        let curvature = next(self.free.curvature);
        let gamma = next(self.free.gamma);
        let eta = next(self.free.eta);
        CptParams { curvature, gamma, eta }
    }
}

impl Model for CptModel {
    fn id(&self) -> String {
        format!("{}:{}", self.prefix, self.param_names().join(","))
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::ConditionalMean
    }

    fn param_names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        if self.free.curvature {
            names.push(self.curvature_name);
        }
        if self.free.gamma {
            names.push("gamma");
        }
        if self.free.eta {
            names.push("eta");
        }
        names
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = Vec::new();
        if self.free.curvature {
            b.push(CURVATURE_BOUNDS);
        }
        if self.free.gamma {
            b.push(GAMMA_BOUNDS);
        }
        if self.free.eta {
            b.push(ETA_BOUNDS);
        }
        b
    }

    fn naive_params(&self) -> Vec<f64> {
        vec![1.0; self.bounds().len()]
    }

    fn predict(&self, theta: &[f64], menu: &Menu) -> Result<Mapping> {
        let params = self.params(theta);
        let values = menu
            .items()
            .iter()
            .map(|item| match item {
                FeatureItem::Binary(l) => Ok(cpt_value(&params, l)),
                FeatureItem::ThreeOutcome(l) => Ok(cpt3_value(&params, l)),
                FeatureItem::Game(_) => Err(Error::DomainMismatch("CPT applied to a game".into())),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Mapping::Scalar(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bin(h: f64, l: f64, p: f64) -> BinaryLottery {
        BinaryLottery::new(h, l, p).unwrap()
    }

    #[test]
    fn naive_member_is_expected_value() {
        let l = bin(10.0, 0.0, 0.5);
        assert!((cpt_value(&CptParams::NAIVE, &l) - 5.0).abs() < 1e-12);
        let l = bin(0.0, -10.0, 0.5);
        assert!((cpt_value(&CptParams::NAIVE, &l) + 5.0).abs() < 1e-12);
        let l3 = ThreeOutcomeLottery::new([34.0, 24.0, 18.0], [0.1, 0.3, 0.6]).unwrap();
        assert!((cpt3_value(&CptParams::NAIVE, &l3) - 21.4).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_weighting() {
        let params = CptParams::new(1.0, 0.5, 1.0).unwrap();
        let w = 0.5 / (0.5 + 0.75f64.sqrt());
        assert!((w - 0.366025).abs() < 1e-6);
        let ce = cpt_value(&params, &bin(10.0, 0.0, 0.25));
        assert!((ce - 10.0 * w).abs() < 1e-12);
        assert!((ce - 3.66025).abs() < 1e-5);
    }

    #[test]
    fn hand_evaluated_three_outcome() {
        let params = CptParams::new(1.0, 0.5, 1.0).unwrap();
        let l = ThreeOutcomeLottery::new([30.0, 24.0, 18.0], [0.4, 0.3, 0.3]).unwrap();
        let w6 = 0.6f64.sqrt() / (0.6f64.sqrt() + 0.4f64.sqrt());
        let w3 = 0.3f64.sqrt() / (0.3f64.sqrt() + 0.7f64.sqrt());
        assert!((w6 - 0.550510).abs() < 1e-6);
        assert!((w3 - 0.395644).abs() < 1e-6);
        let oracle = 30.0 + w6 * (24.0 - 30.0) + w3 * (18.0 - 24.0);
        assert!((cpt3_value(&params, &l) - oracle).abs() < 1e-12);
        assert!((oracle - 24.32307).abs() < 1e-5);
    }

    #[test]
    fn degenerate_third_outcome() {
        // the rank-dependent form weights the probability of the worse prize
        let params = CptParams::new(0.7, 0.6, 1.3).unwrap();
        let l3 = ThreeOutcomeLottery::new([30.0, 12.0, 5.0], [0.35, 0.65, 0.0]).unwrap();
        let w = weighting(0.65, 0.6, 1.3);
        let oracle = ((1.0 - w) * 30f64.powf(0.7) + w * 12f64.powf(0.7)).powf(1.0 / 0.7);
        assert!((cpt3_value(&params, &l3) - oracle).abs() < 1e-10);

        // with eta = 1 the weighting is symmetric and the binary form is recovered
        let params = CptParams::new(0.7, 0.6, 1.0).unwrap();
        let l2 = bin(30.0, 12.0, 0.35);
        assert!((cpt3_value(&params, &l3) - cpt_value(&params, &l2)).abs() < 1e-10);
    }

    #[test]
    fn identity_weighting() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            assert!((weighting(p, 1.0, 1.0) - p).abs() < 1e-15);
        }
    }

    #[test]
    fn parse_and_ids() {
        let m = CptModel::parse("cpt", "gamma,eta").unwrap();
        assert_eq!(m.id(), "cpt:gamma,eta");
        assert_eq!(m.bounds(), vec![GAMMA_BOUNDS, ETA_BOUNDS]);
        let p = m.params(&[0.5, 2.0]);
        assert_eq!(p, CptParams { curvature: 1.0, gamma: 0.5, eta: 2.0 });
        assert!(CptModel::parse("cpt", "delta").is_err());
        assert!(CptModel::parse("cpt", "").is_err());
        assert_eq!(CptModel::parse("cpt", "beta,gamma").unwrap().id(), "cpt:beta,gamma");
    }

    fn in_bounds() -> impl Strategy<Value = CptParams> {
        (0.2f64..2.0, 0.05f64..2.0, 0.05f64..5.0).prop_map(|(c, g, e)| CptParams { curvature: c, gamma: g, eta: e })
    }

    proptest! {
        #[test]
        fn weighting_is_a_monotone_bijection(g in 0.05f64..2.0, e in 0.05f64..5.0, p in 0.0f64..0.999) {
            prop_assert_eq!(weighting(0.0, g, e), 0.0);
            prop_assert_eq!(weighting(1.0, g, e), 1.0);
            prop_assert!(weighting(p + 0.001, g, e) > weighting(p, g, e));
        }

        #[test]
        fn ce_within_prize_range(params in in_bounds(), lo in 0.0f64..50.0, gap in 0.5f64..100.0, p in 0.0f64..=1.0) {
            let l = bin(lo + gap, lo, p);
            let ce = cpt_value(&params, &l);
            prop_assert!(ce >= lo - 1e-9 && ce <= lo + gap + 1e-9);
            let loss = bin(-lo, -lo - gap, p);
            let ce = cpt_value(&params, &loss);
            prop_assert!(ce >= -lo - gap - 1e-9 && ce <= -lo + 1e-9);
        }

        #[test]
        fn three_outcome_ce_within_range(params in in_bounds(), p1 in 0.0f64..1.0, split in 0.0f64..1.0) {
            let p2 = (1.0 - p1) * split;
            let p3 = 1.0 - p1 - p2;
            let l = ThreeOutcomeLottery::new([34.0, 24.0, 18.0], [p1, p2, p3]).unwrap();
            let ce = cpt3_value(&params, &l);
            prop_assert!((18.0 - 1e-9..=34.0 + 1e-9).contains(&ce));
        }
    }
}
