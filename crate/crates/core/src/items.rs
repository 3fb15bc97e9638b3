//! Menu items: binary and three-outcome lotteries, and 3x3 games.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Gain,
    Loss,
}

/// Two-prize lottery paying `z_high` with probability `p` and `z_low` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryLottery {
    pub z_high: f64,
    pub z_low: f64,
    pub p: f64,
    pub domain: Domain,
}

impl BinaryLottery {
    /// Builds a lottery and infers its domain from the prize signs.
    pub fn new(z_high: f64, z_low: f64, p: f64) -> Result<Self> {
        check_probability(p)?;
        if !(z_high.is_finite() && z_low.is_finite()) {
            return Err(Error::InvalidItem("non-finite prize".into()));
        }
        let domain = if z_low >= 0.0 {
            if z_high <= z_low {
                return Err(Error::InvalidItem(format!("gain lottery needs z_high > z_low, got ({z_high}, {z_low})")));
            }
            Domain::Gain
        } else if z_high <= 0.0 {
            if z_high < z_low {
                return Err(Error::InvalidItem(format!(
                    "loss lottery needs 0 >= z_high >= z_low, got ({z_high}, {z_low})"
                )));
            }
            Domain::Loss
        } else {
            return Err(Error::InvalidItem(format!("mixed-sign prizes ({z_high}, {z_low})")));
        };
        Ok(Self { z_high, z_low, p, domain })
    }

    pub fn expected_value(&self) -> f64 {
        self.p * self.z_high + (1.0 - self.p) * self.z_low
    }

    /// Support points with their probabilities.
    pub fn outcomes(&self) -> Vec<(f64, f64)> {
        vec![(self.z_low, 1.0 - self.p), (self.z_high, self.p)]
    }
}

/// Lottery over three prizes `z[0] > z[1] > z[2] >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeOutcomeLottery {
    pub z: [f64; 3],
    pub p: [f64; 3],
}

impl ThreeOutcomeLottery {
    pub fn new(z: [f64; 3], p: [f64; 3]) -> Result<Self> {
        if !(z[0] > z[1] && z[1] > z[2] && z[2] >= 0.0) {
            return Err(Error::InvalidItem(format!("three-outcome prizes must satisfy z1 > z2 > z3 >= 0, got {z:?}")));
        }
        for &pi in &p {
            check_probability(pi)?;
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidItem(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { z, p })
    }

    pub fn expected_value(&self) -> f64 {
        self.z.iter().zip(&self.p).map(|(z, p)| z * p).sum()
    }

    pub fn outcomes(&self) -> Vec<(f64, f64)> {
        (0..3).map(|i| (self.z[i], self.p[i])).collect()
    }
}

/// Two-player 3x3 normal-form game seen from the row player.
///
/// `row[i][j]` and `col[i][j]` are the row and column player payoffs when
/// the row player picks action `i` and the column player picks action `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Game3x3 {
    pub row: [[f64; 3]; 3],
    pub col: [[f64; 3]; 3],
}

impl Game3x3 {
    pub fn new(row: [[f64; 3]; 3], col: [[f64; 3]; 3]) -> Result<Self> {
        if row.iter().chain(col.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidItem("non-finite game payoff".into()));
        }
        Ok(Self { row, col })
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.row.iter().chain(self.col.iter()).flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureItem {
    Binary(BinaryLottery),
    ThreeOutcome(ThreeOutcomeLottery),
    Game(Game3x3),
}

impl FeatureItem {
    /// Outcome distribution for lottery items.
    pub fn lottery_outcomes(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            FeatureItem::Binary(l) => Some(l.outcomes()),
            FeatureItem::ThreeOutcome(l) => Some(l.outcomes()),
            FeatureItem::Game(_) => None,
        }
    }

    /// `[min prize, max prize]` for lottery items.
    pub fn prize_range(&self) -> Option<(f64, f64)> {
        match self {
            FeatureItem::Binary(l) => Some((l.z_low, l.z_high)),
            FeatureItem::ThreeOutcome(l) => Some((l.z[2], l.z[0])),
            FeatureItem::Game(_) => None,
        }
    }

    pub fn as_game(&self) -> Option<&Game3x3> {
        match self {
            FeatureItem::Game(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_lottery(&self) -> bool {
        !matches!(self, FeatureItem::Game(_))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidItem(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}
