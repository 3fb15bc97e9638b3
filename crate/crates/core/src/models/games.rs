//! Models of initial play in 3x3 games.
//!
//! Level-0 players randomize uniformly. A level-k player (k >= 1) responds to
//! a belief over the opponent's lower levels given by the Poisson weights
//! truncated to levels `0..k` and renormalized. Opponent levels are computed
//! from the column player's payoffs, so asymmetric games are handled. The
//! population prediction mixes levels `0..=level_cap` with Poisson weights
//! renormalized to the cap.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::Game3x3;
use crate::models::Model;
use crate::problem::{Mapping, Menu, ProblemKind};

pub const TAU_BOUNDS: (f64, f64) = (0.0, 10.0);
pub const LAMBDA_BOUNDS: (f64, f64) = (0.0, 20.0);
pub const DEFAULT_LEVEL_CAP: usize = 10;
/// Payoffs are rescaled so the largest absolute payoff on the menu is this.
pub const PAYOFF_SCALE_TARGET: f64 = 10.0;

const UNIFORM: [f64; 3] = [1.0 / 3.0; 3];

#[derive(Debug, Clone, Copy)]
enum Response {
    Best,
    Logit(f64),
}

/// Poisson(tau) weights for levels `0..=cap`, renormalized.
pub fn poisson_level_weights(tau: f64, cap: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(cap + 1);
    let mut term = (-tau).exp();
    for k in 0..=cap {
        if k > 0 {
            term *= tau / k as f64;
        }
        w.push(term);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn respond(values: [f64; 3], response: Response) -> [f64; 3] {
    match response {
        Response::Best => {
            let max = values[0].max(values[1]).max(values[2]);
            let tol = 1e-12 * (1.0 + max.abs());
            let hit = values.map(|v| if v >= max - tol { 1.0 } else { 0.0 });
            let count: f64 = hit.iter().sum();
            hit.map(|h| h / count)
        }
        Response::Logit(lambda) => softmax(values, lambda),
    }
}

fn softmax(values: [f64; 3], lambda: f64) -> [f64; 3] {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = values.map(|v| (lambda * (v - max)).exp());
    let s: f64 = e.iter().sum();
    e.map(|x| x / s)
}

fn row_values(game: &Game3x3, belief: &[f64; 3]) -> [f64; 3] {
    let mut v = [0.0; 3];
    for (i, vi) in v.iter_mut().enumerate() {
        *vi = (0..3).map(|j| belief[j] * game.row[i][j]).sum();
    }
    v
}

fn col_values(game: &Game3x3, belief: &[f64; 3]) -> [f64; 3] {
    let mut v = [0.0; 3];
    for (j, vj) in v.iter_mut().enumerate() {
        *vj = (0..3).map(|i| belief[i] * game.col[i][j]).sum();
    }
    v
}

/// Poisson-mixed row play; `visit` sees the row play of every level.
fn hierarchy(game: &Game3x3, weights: &[f64], response: Response, mut visit: impl FnMut([f64; 3])) -> [f64; 3] {
    visit(UNIFORM);
    if matches!(response, Response::Logit(l) if l == 0.0) {
        for _ in 1..weights.len() {
            visit(UNIFORM);
        }
        return UNIFORM;
    }
    // running unnormalized mixtures of lower-level play
    let mut row_mix = UNIFORM.map(|x| x * weights[0]);
    let mut col_mix = row_mix;
    let mut prediction = row_mix;
    let mut mass = weights[0];
    for &w in &weights[1..] {
        let (row_belief, col_belief) = if mass > 0.0 {
            (col_mix.map(|x| x / mass), row_mix.map(|x| x / mass))
        } else {
            // only reachable when tau is so large that level 0 underflows
            (UNIFORM, UNIFORM)
        };
        let row = respond(row_values(game, &row_belief), response);
        let col = respond(col_values(game, &col_belief), response);
        visit(row);
        for a in 0..3 {
            prediction[a] += w * row[a];
            row_mix[a] += w * row[a];
            col_mix[a] += w * col[a];
        }
        mass += w;
    }
    let s: f64 = prediction.iter().sum();
    prediction.map(|x| x / s)
}

pub fn pchm_distribution(tau: f64, game: &Game3x3, level_cap: usize) -> [f64; 3] {
    hierarchy(game, &poisson_level_weights(tau, level_cap), Response::Best, |_| {})
}

/// Softmax of expected payoffs against a uniformly randomizing opponent.
pub fn logit_level1_distribution(lambda: f64, game: &Game3x3) -> [f64; 3] {
    softmax(row_values(game, &UNIFORM), lambda)
}

pub fn logit_pchm_distribution(tau: f64, lambda: f64, game: &Game3x3, level_cap: usize) -> [f64; 3] {
    hierarchy(game, &poisson_level_weights(tau, level_cap), Response::Logit(lambda), |_| {})
}

/// Per-level row play of the logit hierarchy, levels `0..=level_cap`.
pub fn logit_pchm_levels(tau: f64, lambda: f64, game: &Game3x3, level_cap: usize) -> Vec<[f64; 3]> {
    let mut levels = Vec::with_capacity(level_cap + 1);
    hierarchy(game, &poisson_level_weights(tau, level_cap), Response::Logit(lambda), |p| levels.push(p));
    levels
}

pub fn uniform_naive(_game: &Game3x3) -> [f64; 3] {
    UNIFORM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameModelKind {
    Pchm,
    LogitLevel1,
    LogitPchm,
}

impl GameModelKind {
    pub fn id(self) -> &'static str {
        match self {
            GameModelKind::Pchm => "pchm",
            GameModelKind::LogitLevel1 => "logit-level1",
            GameModelKind::LogitPchm => "logit-pchm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameModel {
    pub variant: GameModelKind,
    pub level_cap: usize,
    /// Multiplier applied to payoffs before the logit response.
    pub payoff_scale: f64,
}

impl GameModel {
    pub fn new(variant: GameModelKind) -> Self {
        Self { variant, level_cap: DEFAULT_LEVEL_CAP, payoff_scale: 1.0 }
    }

    /// Model with payoffs rescaled to the menu's `[0, 10]` scale.
    pub fn for_menu(variant: GameModelKind, menu: &Menu) -> Self {
        Self { payoff_scale: normalizing_scale(menu), ..Self::new(variant) }
    }

    fn scaled(&self, game: &Game3x3) -> Game3x3 {
        let s = self.payoff_scale;
        Game3x3 { row: game.row.map(|r| r.map(|x| x * s)), col: game.col.map(|r| r.map(|x| x * s)) }
    }

    pub fn predict_game(&self, theta: &[f64], game: &Game3x3) -> [f64; 3] {
        self.predict_with(theta, game, &self.level_weights(theta))
    }

    fn level_weights(&self, theta: &[f64]) -> Vec<f64> {
        match self.variant {
            GameModelKind::LogitLevel1 => Vec::new(),
            _ => poisson_level_weights(theta[0], self.level_cap),
        }
    }

    fn predict_with(&self, theta: &[f64], game: &Game3x3, weights: &[f64]) -> [f64; 3] {
        match self.variant {
            GameModelKind::Pchm => hierarchy(game, weights, Response::Best, |_| {}),
            GameModelKind::LogitLevel1 => logit_level1_distribution(theta[0], &self.scaled(game)),
            GameModelKind::LogitPchm => hierarchy(&self.scaled(game), weights, Response::Logit(theta[1]), |_| {}),
        }
    }
}

/// Scale mapping the largest absolute payoff on the menu to 10.
pub fn normalizing_scale(menu: &Menu) -> f64 {
    let max = menu.items().iter().filter_map(|i| i.as_game()).fold(0.0_f64, |m, g| m.max(g.max_abs_payoff()));
    if max > 0.0 {
        PAYOFF_SCALE_TARGET / max
    } else {
        1.0
    }
}

impl Model for GameModel {
    fn id(&self) -> String {
        self.variant.id().to_string()
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::ConditionalDistribution
    }

    fn param_names(&self) -> Vec<&'static str> {
        match self.variant {
            GameModelKind::Pchm => vec!["tau"],
            GameModelKind::LogitLevel1 => vec!["lambda"],
            GameModelKind::LogitPchm => vec!["tau", "lambda"],
        }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        match self.variant {
            GameModelKind::Pchm => vec![TAU_BOUNDS],
            GameModelKind::LogitLevel1 => vec![LAMBDA_BOUNDS],
            GameModelKind::LogitPchm => vec![TAU_BOUNDS, LAMBDA_BOUNDS],
        }
    }

    fn naive_params(&self) -> Vec<f64> {
        vec![0.0; self.bounds().len()]
    }

    fn predict(&self, theta: &[f64], menu: &Menu) -> Result<Mapping> {
        if theta.len() != self.bounds().len() {
            return Err(Error::Config(format!(
                "{} takes {} parameters, got {}",
                self.id(),
                self.bounds().len(),
                theta.len()
            )));
        }
        let weights = self.level_weights(theta);
        let values = menu
            .items()
            .iter()
            .map(|item| {
                item.as_game()
                    .map(|g| self.predict_with(theta, g, &weights))
                    .ok_or_else(|| Error::DomainMismatch(format!("{} applied to a lottery", self.id())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mapping::Simplex(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn game(row: [[f64; 3]; 3]) -> Game3x3 {
        Game3x3::new(row, [[0.0, 1.0, 2.0], [3.0, 1.0, 0.0], [2.0, 2.0, 1.0]]).unwrap()
    }

    fn dominant_a1() -> Game3x3 {
        game([[5.0, 5.0, 5.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])
    }

    fn assert_simplex(p: [f64; 3]) {
        assert!(p.iter().all(|x| *x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tau_zero_is_uniform() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        assert_eq!(pchm_distribution(0.0, &g, 10), UNIFORM);
        assert_eq!(logit_level1_distribution(0.0, &g), UNIFORM);
        assert_eq!(logit_pchm_distribution(0.0, 5.0, &g, 10), UNIFORM);
        assert_eq!(uniform_naive(&g), pchm_distribution(0.0, &g, 10));
    }

    #[test]
    fn dominant_action_under_pchm() {
        // oracle: enumerate levels; every level >= 1 plays a1
        let weights: Vec<f64> =
            (0..=10).map(|k| (-1.0f64).exp() / (1..=k).map(|i| i as f64).product::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let oracle = (weights[0] / 3.0 + weights[1..].iter().sum::<f64>()) / total;
        let p = pchm_distribution(1.0, &dominant_a1(), 10);
        assert!((p[0] - oracle).abs() < 1e-12);
        let untruncated = (-1.0f64).exp() / 3.0 + (1.0 - (-1.0f64).exp());
        assert!((untruncated - 0.7547).abs() < 1e-4);
        assert!((p[0] - untruncated).abs() < 1e-4);
    }

    #[test]
    fn level0_mass_floors_every_action() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        for tau in [0.3, 1.0, 2.5, 6.0] {
            let p = pchm_distribution(tau, &g, 10);
            assert_simplex(p);
            let floor = poisson_level_weights(tau, 10)[0] / 3.0;
            assert!(p.iter().all(|x| *x >= floor - 1e-15));
        }
    }

    #[test]
    fn logit_level1_softmax() {
        // u = (1, 1, 0) against a uniform opponent
        let g = game([[1.0, 1.0, 1.0], [0.0, 3.0, 0.0], [0.0, 0.0, 0.0]]);
        let p = logit_level1_distribution(1.0, &g);
        let e = std::f64::consts::E;
        let oracle = [e / (2.0 * e + 1.0), e / (2.0 * e + 1.0), 1.0 / (2.0 * e + 1.0)];
        for a in 0..3 {
            assert!((p[a] - oracle[a]).abs() < 1e-15);
        }
        assert!((p[0] - 0.42233).abs() < 1e-4 && (p[2] - 0.15534).abs() < 1e-4);
    }

    #[test]
    fn large_lambda_concentrates() {
        let g = game([[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let p = logit_level1_distribution(1e4, &g);
        assert!(p[0] >= 0.999);
    }

    #[test]
    fn logit_pchm_limits() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        assert_eq!(logit_pchm_distribution(2.0, 0.0, &g, 10), UNIFORM);
        let levels = logit_pchm_levels(1.3, 0.7, &g, 10);
        let l1 = logit_level1_distribution(0.7, &g);
        for a in 0..3 {
            assert!((levels[1][a] - l1[a]).abs() < 1e-15);
        }
        assert_eq!(levels[0], UNIFORM);
    }

    #[test]
    fn level_cap_tail_is_negligible_for_small_tau() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        for tau in [0.2, 0.5, 1.0] {
            let a = logit_pchm_distribution(tau, 0.8, &g, 10);
            let b = logit_pchm_distribution(tau, 0.8, &g, 20);
            let c = pchm_distribution(tau, &g, 10);
            let d = pchm_distribution(tau, &g, 20);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-8);
                assert!((c[i] - d[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn level_cap_change_is_bounded_by_poisson_tail() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        for tau in [1.5, 2.0, 3.0] {
            let w20 = poisson_level_weights(tau, 20);
            let tail: f64 = w20[11..].iter().sum();
            let a = pchm_distribution(tau, &g, 10);
            let b = pchm_distribution(tau, &g, 20);
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() <= 2.0 * tail + 1e-15);
            }
        }
    }

    #[test]
    fn model_naive_nesting() {
        let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
        for kind in [GameModelKind::Pchm, GameModelKind::LogitLevel1, GameModelKind::LogitPchm] {
            let m = GameModel::new(kind);
            assert_eq!(m.predict_game(&m.naive_params(), &g), UNIFORM);
        }
    }

    proptest! {
        #[test]
        fn outputs_are_simplex_points(
            payoffs in proptest::array::uniform9(0.0f64..100.0),
            tau in 0.0f64..10.0,
            lambda in 0.0f64..5.0,
        ) {
            let row = [[payoffs[0], payoffs[1], payoffs[2]], [payoffs[3], payoffs[4], payoffs[5]], [payoffs[6], payoffs[7], payoffs[8]]];
            let g = Game3x3::new(row, [[payoffs[8], payoffs[0], payoffs[4]], [payoffs[1], payoffs[2], payoffs[3]], [payoffs[5], payoffs[6], payoffs[7]]]).unwrap();
            assert_simplex(pchm_distribution(tau, &g, 10));
            assert_simplex(logit_level1_distribution(lambda, &g));
            assert_simplex(logit_pchm_distribution(tau, lambda, &g, 10));
        }

        #[test]
        fn logit_pchm_is_continuous(tau in 0.0f64..5.0, lambda in 0.0f64..3.0) {
            let g = game([[3.0, 0.0, 7.0], [1.0, 4.0, 2.0], [0.0, 9.0, 1.0]]);
            let h = 1e-7;
            let base = logit_pchm_distribution(tau, lambda, &g, 10);
            let dt = logit_pchm_distribution(tau + h, lambda, &g, 10);
            let dl = logit_pchm_distribution(tau, lambda + h, &g, 10);
            for a in 0..3 {
                prop_assert!((base[a] - dt[a]).abs() < 1e-4);
                prop_assert!((base[a] - dl[a]).abs() < 1e-4);
            }
        }

        #[test]
        fn pchm_is_continuous_where_best_responses_are_fixed(tau in 0.0f64..8.0) {
            let h = 1e-7;
            let a = pchm_distribution(tau, &dominant_a1(), 10);
            let b = pchm_distribution(tau + h, &dominant_a1(), 10);
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() < 1e-5);
            }
        }
    }
}
