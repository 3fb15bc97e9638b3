//! Built-in and generated menus.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::items::{BinaryLottery, FeatureItem, Game3x3, ThreeOutcomeLottery};
use crate::problem::Menu;
use crate::stats::substream;

pub const BERNHEIM_SPRENGER_18: &str = "bernheim_sprenger_18";
pub const SYNTHETIC_GAIN_25: &str = "synthetic_gain_25";

/// `(z1, z2, z3, p1, p2, p3)` for the 18 three-outcome lotteries.
const BS18: [[f64; 6]; 18] = [
    [34.0, 24.0, 18.0, 0.1, 0.3, 0.6],
    [34.0, 24.0, 18.0, 0.4, 0.3, 0.3],
    [34.0, 24.0, 18.0, 0.6, 0.3, 0.1],
    [32.0, 24.0, 18.0, 0.1, 0.3, 0.6],
    [32.0, 24.0, 18.0, 0.4, 0.3, 0.3],
    [32.0, 24.0, 18.0, 0.6, 0.3, 0.1],
    [30.0, 24.0, 18.0, 0.1, 0.3, 0.6],
    [30.0, 24.0, 18.0, 0.4, 0.3, 0.3],
    [30.0, 24.0, 18.0, 0.6, 0.3, 0.1],
    [24.0, 23.0, 18.0, 0.3, 0.1, 0.6],
    [24.0, 23.0, 18.0, 0.3, 0.4, 0.3],
    [24.0, 23.0, 18.0, 0.3, 0.6, 0.1],
    [24.0, 21.0, 18.0, 0.3, 0.1, 0.6],
    [24.0, 21.0, 18.0, 0.3, 0.4, 0.3],
    [24.0, 21.0, 18.0, 0.3, 0.6, 0.1],
    [24.0, 19.0, 18.0, 0.3, 0.1, 0.6],
    [24.0, 19.0, 18.0, 0.3, 0.4, 0.3],
    [24.0, 19.0, 18.0, 0.3, 0.6, 0.1],
];

/// SHA-256 of [`menu_fingerprint`] for the built-in three-outcome menu.
pub const BERNHEIM_SPRENGER_18_SHA256: &str = "6a267e15bedd1eeed75bab1a8b667f3e45bbbaa7f53a3e3402d99b55ebb588b8";

/// Prize pairs and probabilities of the synthetic binary gain menu.
const GAIN_PRIZES: [(f64, f64); 5] = [(10.0, 0.0), (20.0, 0.0), (40.0, 10.0), (50.0, 20.0), (150.0, 50.0)];
const GAIN_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn bernheim_sprenger_18() -> Menu {
    let items = BS18
        .iter()
        .map(|r| {
            FeatureItem::ThreeOutcome(
                ThreeOutcomeLottery::new([r[0], r[1], r[2]], [r[3], r[4], r[5]]).expect("valid built-in lottery"),
            )
        })
        .collect();
    Menu::new((1..=18).map(|i| format!("bs{i:02}")).collect(), items).expect("valid built-in menu")
}

/// 25 binary gain lotteries: five prize pairs crossed with five probabilities.
pub fn synthetic_gain_25() -> Menu {
    let mut ids = Vec::new();
    let mut items = Vec::new();
    for (a, &(hi, lo)) in GAIN_PRIZES.iter().enumerate() {
        for (b, &p) in GAIN_PROBS.iter().enumerate() {
            ids.push(format!("s{:02}", a * GAIN_PROBS.len() + b + 1));
            items.push(FeatureItem::Binary(BinaryLottery::new(hi, lo, p).expect("valid synthetic lottery")));
        }
    }
    Menu::new(ids, items).expect("valid synthetic menu")
}

/// `n` games with payoffs drawn i.i.d. uniformly from the integers 0..=100.
pub fn synthetic_games(n: usize, seed: u64) -> Result<Menu> {
    if n == 0 {
        return Err(Error::Config("need at least one synthetic game".into()));
    }
    let width = n.to_string().len().max(3);
    let mut ids = Vec::with_capacity(n);
    let mut items = Vec::with_capacity(n);
    for g in 0..n {
        let mut rng = substream(seed, g as u64);
        let mut draw = || {
            let mut m = [[0.0; 3]; 3];
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = rng.random_range(0..=100u32) as f64;
                }
            }
            m
        };
        let row = draw();
        let col = draw();
        ids.push(format!("g{:0width$}", g + 1));
        items.push(FeatureItem::Game(Game3x3::new(row, col)?));
    }
    Menu::new(ids, items)
}

pub fn builtin_menu(name: &str) -> Result<Menu> {
    match name {
        BERNHEIM_SPRENGER_18 => Ok(bernheim_sprenger_18()),
        SYNTHETIC_GAIN_25 => Ok(synthetic_gain_25()),
        other => Err(Error::Config(format!(
            "unknown built-in menu '{other}' (known: {BERNHEIM_SPRENGER_18}, {SYNTHETIC_GAIN_25})"
        ))),
    }
}

/// Canonical text form of a menu: one line per item with id and fields.
pub fn menu_fingerprint(menu: &Menu) -> String {
    let mut s = String::new();
    for (id, item) in menu.ids().iter().zip(menu.items()) {
        let fields: Vec<String> = match item {
            FeatureItem::Binary(l) => [l.z_high, l.z_low, l.p].iter().map(f64::to_string).collect(),
            FeatureItem::ThreeOutcome(l) => l.z.iter().chain(&l.p).map(f64::to_string).collect(),
            FeatureItem::Game(g) => g.row.iter().chain(&g.col).flatten().map(f64::to_string).collect(),
        };
        s.push_str(id);
        s.push(',');
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn menu_sha256(menu: &Menu) -> String {
    let digest = Sha256::digest(menu_fingerprint(menu).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
