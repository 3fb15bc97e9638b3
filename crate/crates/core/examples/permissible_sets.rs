//! Drawing hypothetical mappings from the permissible sets.

use restrictlab::io::{bernheim_sprenger_18, synthetic_games};
use restrictlab::sampling::{DominanceTag, MuSpec, PermissibleSet, SamplerControls};

fn main() -> restrictlab::Result<()> {
    let menu = bernheim_sprenger_18();
    let set = PermissibleSet::default_for(&menu)?;
    let order = set.order().expect("lottery menus carry a dominance order");
    println!("{} lotteries, {} strict dominance pairs", menu.len(), order.pairs.len());

    let draws = set.draw_many(200, 1)?;
    println!("first draw:");
    for (id, v) in menu.ids().iter().zip(draws[0].as_scalar().unwrap()).take(6) {
        println!("  {id}  {v:6.2}");
    }
    println!("all 200 draws permissible: {}", draws.iter().all(|d| set.contains(d)));

    // without FOSD the same draws violate the order most of the time
    let loose = PermissibleSet::new(&menu, MuSpec::RangeOnly, SamplerControls::default())?;
    let violating = loose.draw_many(200, 1)?.iter().filter(|d| order.violations(d.as_scalar().unwrap()) > 0).count();
    println!("range-only draws violating FOSD: {violating}/200");

    let games = synthetic_games(50, 9)?;
    let play = PermissibleSet::default_for(&games)?;
    let dominated = play.dominance_tags().iter().flatten().filter(|t| **t == DominanceTag::StrictlyDominated).count();
    println!("\n{} games, {dominated} strictly dominated actions", games.len());
    let d = play.draw(1, 0)?;
    for (id, p) in games.ids().iter().zip(d.as_simplex().unwrap()).take(4) {
        println!("  {id}  ({:.3}, {:.3}, {:.3})", p[0], p[1], p[2]);
    }
    Ok(())
}
