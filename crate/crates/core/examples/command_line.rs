//! Runs the `compare` subcommand on a generated game-play file and prints
//! the resulting table. The same arguments work with the `restrictlab` binary.

use std::fmt::Write as _;

use rand::Rng;
use restrictlab::io::synthetic_games;
use restrictlab::models::logit_level1_distribution;
use restrictlab::stats::substream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let games = synthetic_games(30, 5)?;

    // aggregated counts from 40 logit level-1 players per game
    let mut csv = String::from("game_id");
    for who in ["r", "c"] {
        for i in 1..=3 {
            for j in 1..=3 {
                write!(csv, ",{who}{i}{j}")?;
            }
        }
    }
    csv.push_str(",n1,n2,n3\n");
    let mut rng = substream(5, 1);
    for (id, item) in games.ids().iter().zip(games.items()) {
        let g = item.as_game().unwrap();
        let p = logit_level1_distribution(0.08, g);
        let mut n = [0u32; 3];
        for _ in 0..40 {
            let u: f64 = rng.random();
            n[if u < p[0] {
                0
            } else if u < p[0] + p[1] {
                1
            } else {
                2
            }] += 1;
        }
        csv.push_str(id);
        for v in g.row.iter().chain(&g.col).flatten() {
            write!(csv, ",{v}")?;
        }
        writeln!(csv, ",{},{},{}", n[0], n[1], n[2])?;
    }
    let data = dir.path().join("games.csv");
    std::fs::write(&data, csv)?;

    let out = dir.path().join("out");
    let args = [
        "restrictlab",
        "compare",
        "--models",
        "pchm,logit-level1,logit-pchm",
        "--games",
        data.to_str().unwrap(),
        "--M",
        "20",
        "--K",
        "5",
        "--grid-points",
        "30",
        "--n-starts",
        "3",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    let code = restrictlab::cli::run(args);
    println!("exit code {code}");
    print!("{}", std::fs::read_to_string(out.join("compare.csv"))?);
    Ok(())
}
