//! Restrictiveness of three models of initial play on randomly generated 3x3 games.
//!
//! Run with `cargo run --release --example game_models`.

use std::time::Instant;

use restrictlab::fit::OptConfig;
use restrictlab::io::synthetic_games;
use restrictlab::models::{GameModel, GameModelKind, Model};
use restrictlab::restrict::compare_restrictiveness;
use restrictlab::sampling::PermissibleSet;

fn main() -> restrictlab::Result<()> {
    let menu = synthetic_games(100, 2024)?;
    let set = PermissibleSet::default_for(&menu)?;
    let models: Vec<GameModel> = [GameModelKind::LogitLevel1, GameModelKind::Pchm, GameModelKind::LogitPchm]
        .into_iter()
        .map(|kind| GameModel::for_menu(kind, &menu))
        .collect();
    let refs: Vec<&dyn Model> = models.iter().map(|m| m as &dyn Model).collect();

    // a coarser scan keeps the two-parameter fits cheap
    let cfg = OptConfig { grid_points: 40, n_starts: 5, ..OptConfig::default() };
    let start = Instant::now();
    let reports = compare_restrictiveness(&refs, &menu, &set, 100, 7, 0.05, &cfg)?;
    for r in &reports {
        println!("{:<14} r = {:.3}  se = {:.3}", r.model, r.r_hat, r.se);
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
