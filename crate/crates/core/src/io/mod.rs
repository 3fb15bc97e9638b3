//! Data files, built-in menus and report output.

pub mod data;
pub mod menus;
pub mod output;

pub use data::{load_ce_dataset, load_game_dataset, load_menu_csv};
pub use menus::{bernheim_sprenger_18, builtin_menu, menu_sha256, synthetic_gain_25, synthetic_games};
pub use output::{read_samples_csv, write_json, write_samples_csv, CompareRow};
