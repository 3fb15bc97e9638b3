//! Command-line interface.
//!
//! Exit status is 0 on success, 2 for invalid input or configuration and 3
//! when a computation fails. Errors are printed to stderr as one JSON object.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::complete::{alt_fstar_discrepancy, estimate_completeness, group_completeness, CompleteOptions};
use crate::error::{Error, Result};
use crate::fit::OptConfig;
use crate::io::output::{read_compare_csv, write_compare_csv, write_folds_csv, write_histogram_csv, CompareRow};
use crate::io::{
    builtin_menu, load_ce_dataset, load_game_dataset, load_menu_csv, synthetic_games, write_json, write_samples_csv,
};
use crate::models::parse_model;
use crate::problem::{Dataset, Menu, ProblemKind, WeightsMode};
use crate::restrict::{delta_histogram, restrictiveness_on_draws, RestrictReport};
use crate::sampling::{BetaMethod, MuSpec, PermissibleSet, SamplerControls};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;
pub const THREADS_ENV: &str = "RESTRICTLAB_THREADS";
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "restrictlab", version, about = "Restrictiveness and completeness of behavioral models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Restrictiveness of one model on random permissible mappings.
    Restrict(RestrictArgs),
    /// Cross-validated completeness of one model on data.
    Complete(CompleteArgs),
    /// Restrictiveness and completeness for several models.
    Compare(CompareArgs),
    /// Dump draws from a permissible set.
    Sample(SampleArgs),
    /// Markdown summary of the reports in a directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
struct Source {
    /// builtin:NAME, synthetic-games:N[:SEED], or a menu CSV path.
    #[arg(long)]
    menu: Option<String>,
    /// Certainty-equivalent data CSV.
    #[arg(long, conflicts_with = "games")]
    data: Option<PathBuf>,
    /// Game choice data CSV.
    #[arg(long)]
    games: Option<PathBuf>,
    /// Menu weights.
    #[arg(long, value_enum, default_value_t = Weights::Uniform)]
    weights: Weights,
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value_t = OptConfig::default().n_starts)]
    n_starts: usize,
    #[arg(long, default_value_t = OptConfig::default().grid_points)]
    grid_points: usize,
    #[arg(long, default_value_t = OptConfig::default().lhs_points)]
    lhs_points: usize,
    #[arg(long, default_value_t = OptConfig::default().max_iters)]
    max_iters: usize,
}

#[derive(Debug, Clone, Args)]
struct Sampler {
    /// uniform-fosd, range-only, beta-fosd:A,B or dominance (default: by menu type).
    #[arg(long)]
    mu: Option<String>,
    #[arg(long = "M", default_value_t = 100)]
    m: usize,
    #[arg(long, value_enum, default_value_t = BetaMethodArg::Rejection)]
    beta_method: BetaMethodArg,
}

#[derive(Debug, Clone, Args)]
struct Cv {
    #[arg(long = "K", default_value_t = crate::complete::DEFAULT_K)]
    k: usize,
    /// Pseudo-count added to each action in the unrestricted benchmark.
    #[arg(long, default_value_t = crate::complete::DEFAULT_SMOOTHING)]
    smoothing: f64,
    /// Problem kind (default: mean for lottery data, distribution for games).
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
}

#[derive(Debug, Args)]
struct RestrictArgs {
    #[arg(long)]
    model: String,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompleteArgs {
    #[arg(long)]
    model: String,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    cv: Cv,
    /// Bootstrap resamples for the f*-discrepancy (0 skips it).
    #[arg(long = "B", default_value_t = 0)]
    b: usize,
    /// Also estimate completeness within each cluster.
    #[arg(long)]
    groups: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated model ids.
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<String>,
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    cv: Cv,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    sampler: Sampler,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directory holding reports (default: the output directory).
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Weights {
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BetaMethodArg {
    Rejection,
    Gibbs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Mean,
    Median,
    Distribution,
}

/// Everything needed to reproduce a run; embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub models: Vec<String>,
    pub menu: Option<String>,
    pub data: Option<String>,
    pub games: Option<String>,
    pub mu: Option<String>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "B")]
    pub b: Option<usize>,
    pub seed: u64,
    pub level: f64,
    pub out: String,
    pub weights: WeightsMode,
    pub smoothing: Option<f64>,
    pub kind: Option<ProblemKind>,
    pub optimizer: OptConfig,
    pub sampler: Option<SamplerControls>,
}

struct Loaded {
    menu: Menu,
    data: Option<(Dataset, ProblemKind)>,
}

fn load(source: &Source) -> Result<Loaded> {
    let data = match (&source.data, &source.games) {
        (Some(p), None) => Some((load_ce_dataset(p)?, ProblemKind::ConditionalMean)),
        (None, Some(p)) => Some((load_game_dataset(p)?, ProblemKind::ConditionalDistribution)),
        (None, None) => None,
        (Some(_), Some(_)) => return Err(Error::Config("--data and --games are exclusive".into())),
    };
    let (menu, data) = match (data, &source.menu) {
        (Some(((menu, d), kind)), None) => (menu, Some((d, kind))),
        (None, Some(src)) => (menu_from_source(src)?, None),
        (Some(_), Some(_)) => return Err(Error::Config("give either --menu or a data file, not both".into())),
        (None, None) => return Err(Error::Config("a menu is required: --menu, --data or --games".into())),
    };
    let menu = match source.weights {
        Weights::Uniform => menu,
        Weights::Empirical => {
            let d = data
                .as_ref()
                .map(|(d, _)| d)
                .ok_or_else(|| Error::Config("empirical weights need a data file".into()))?;
            menu.reweighted(WeightsMode::Empirical, Some(d))?
        }
    };
    Ok(Loaded { menu, data })
}

fn menu_from_source(src: &str) -> Result<Menu> {
    if let Some(name) = src.strip_prefix("builtin:") {
        return builtin_menu(name);
    }
    if let Some(spec) = src.strip_prefix("synthetic-games:") {
        let mut parts = spec.split(':');
        let n = parts.next().and_then(|s| s.parse().ok());
        let seed = parts.next().map(|s| s.parse().ok()).unwrap_or(Some(0));
        return match (n, seed, parts.next()) {
            (Some(n), Some(seed), None) => synthetic_games(n, seed),
            _ => Err(Error::Config(format!("bad synthetic game spec '{src}' (want synthetic-games:N[:SEED])"))),
        };
    }
    let path = Path::new(src);
    if !path.exists() {
        return Err(Error::Config(format!("menu '{src}' is neither a built-in, a generator nor a file")));
    }
    load_menu_csv(path)
}

fn opt_config(c: &Common) -> Result<OptConfig> {
    let cfg = OptConfig {
        n_starts: c.n_starts,
        grid_points: c.grid_points,
        lhs_points: c.lhs_points,
        max_iters: c.max_iters,
        seed: c.seed,
        ..OptConfig::default()
    };
    cfg.validate()?;
    if !(c.level > 0.0 && c.level < 1.0) {
        return Err(Error::Config(format!("--level must be in (0, 1), got {}", c.level)));
    }
    Ok(cfg)
}

fn permissible_set(menu: &Menu, s: &Sampler) -> Result<(PermissibleSet, SamplerControls)> {
    let controls = SamplerControls {
        beta_method: match s.beta_method {
            BetaMethodArg::Rejection => BetaMethod::Rejection,
            BetaMethodArg::Gibbs => BetaMethod::Gibbs,
        },
        ..SamplerControls::default()
    };
    let spec = match &s.mu {
        Some(mu) => MuSpec::parse(mu)?,
        None if menu.all_games() => MuSpec::GameDominance,
        None => MuSpec::UniformFosd,
    };
    if s.m < 2 {
        return Err(Error::Config(format!("--M must be at least 2, got {}", s.m)));
    }
    Ok((PermissibleSet::new(menu, spec, controls)?, controls))
}

fn problem_kind(cv: &Cv, default: ProblemKind) -> Result<ProblemKind> {
    let kind = match cv.kind {
        None => default,
        Some(KindArg::Mean) => ProblemKind::ConditionalMean,
        Some(KindArg::Median) => ProblemKind::ConditionalMedian,
        Some(KindArg::Distribution) => ProblemKind::ConditionalDistribution,
    };
    if (kind == ProblemKind::ConditionalDistribution) != (default == ProblemKind::ConditionalDistribution) {
        return Err(Error::Config("--kind does not fit the data type".into()));
    }
    if cv.k < 2 {
        return Err(Error::Config(format!("--K must be at least 2, got {}", cv.k)));
    }
    if !(cv.smoothing >= 0.0 && cv.smoothing.is_finite()) {
        return Err(Error::Config("--smoothing must be nonnegative".into()));
    }
    Ok(kind)
}

fn base_config(command: &str, source: &Source, common: &Common, optimizer: OptConfig) -> RunConfig {
    RunConfig {
        command: command.into(),
        models: vec![],
        menu: source.menu.clone(),
        data: source.data.as_ref().map(|p| p.display().to_string()),
        games: source.games.as_ref().map(|p| p.display().to_string()),
        mu: None,
        m: None,
        k: None,
        b: None,
        seed: common.seed,
        level: common.level,
        out: common.out.display().to_string(),
        weights: match source.weights {
            Weights::Uniform => WeightsMode::Uniform,
            Weights::Empirical => WeightsMode::Empirical,
        },
        smoothing: None,
        kind: None,
        optimizer,
        sampler: None,
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn restrict(args: RestrictArgs) -> Result<()> {
    let cfg = opt_config(&args.common)?;
    let loaded = load(&args.source)?;
    let model = parse_model(&args.model, &loaded.menu)?;
    let (set, controls) = permissible_set(&loaded.menu, &args.sampler)?;
    let mut config = base_config("restrict", &args.source, &args.common, cfg);
    config.models = vec![args.model.clone()];
    config.mu = Some(set.spec().label());
    config.m = Some(args.sampler.m);
    config.sampler = Some(controls);

    let draws = set.draw_many(args.sampler.m, args.common.seed)?;
    let report = restrictiveness_on_draws(
        model.as_ref(),
        &loaded.menu,
        &draws,
        &set.spec().label(),
        args.common.seed,
        args.common.level,
        &cfg,
    )?;
    prepare_out(&args.common.out)?;
    write_json(args.common.out.join("restrict_report.json"), &json!({ "config": config, "report": report }))?;
    write_histogram_csv(args.common.out.join("delta_histogram.csv"), &delta_histogram(&report.deltas, HISTOGRAM_BINS))?;
    println!("{}: r = {:.4} (se {:.4}, M = {})", report.model, report.r_hat, report.se, report.m);
    Ok(())
}

fn complete(args: CompleteArgs) -> Result<()> {
    let cfg = opt_config(&args.common)?;
    let loaded = load(&args.source)?;
    let (data, default_kind) =
        loaded.data.ok_or_else(|| Error::Config("completeness needs --data or --games".into()))?;
    let kind = problem_kind(&args.cv, default_kind)?;
    if args.b == 1 {
        return Err(Error::Config("--B must be 0 or at least 2".into()));
    }
    let model = parse_model(&args.model, &loaded.menu)?;
    let opts = CompleteOptions {
        k: args.cv.k,
        seed: args.common.seed,
        level: args.common.level,
        smoothing: args.cv.smoothing,
    };
    let mut config = base_config("complete", &args.source, &args.common, cfg);
    config.models = vec![args.model.clone()];
    config.k = Some(args.cv.k);
    config.b = Some(args.b);
    config.smoothing = Some(args.cv.smoothing);
    config.kind = Some(kind);

    let report = if kind.is_decomposable() {
        Some(estimate_completeness(model.as_ref(), &loaded.menu, &data, kind, &opts, &cfg)?)
    } else {
        None
    };
    let alt = if args.b >= 2 {
        Some(alt_fstar_discrepancy(model.as_ref(), &loaded.menu, &data, kind, args.b, args.common.seed, &cfg)?)
    } else {
        None
    };
    let groups = if args.groups && kind.is_decomposable() {
        Some(group_completeness(model.as_ref(), &loaded.menu, &data, kind, &opts, &cfg)?)
    } else {
        None
    };
    if report.is_none() && alt.is_none() {
        return Err(Error::Config("absolute loss does not decompose; pass --B to estimate the f*-discrepancy".into()));
    }
    prepare_out(&args.common.out)?;
    write_json(
        args.common.out.join("complete_report.json"),
        &json!({ "config": config, "report": report, "f_star": alt, "groups": groups }),
    )?;
    if let Some(r) = &report {
        write_folds_csv(args.common.out.join("folds.csv"), &r.folds)?;
        println!("{}: kappa = {:.4} (se {:.4}, N = {})", r.model, r.kappa_hat, r.se, r.n);
    }
    if let Some(a) = &alt {
        println!("{}: f*-discrepancy = {:.4} (bootstrap se {:.4}, B = {})", a.model, a.delta_hat, a.bootstrap_se, a.b);
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let cfg = opt_config(&args.common)?;
    let loaded = load(&args.source)?;
    let models = args.models.iter().map(|id| parse_model(id, &loaded.menu)).collect::<Result<Vec<_>>>()?;
    let (set, controls) = permissible_set(&loaded.menu, &args.sampler)?;
    let kind = match &loaded.data {
        Some((_, default)) => Some(problem_kind(&args.cv, *default)?),
        None => None,
    };
    if kind.is_some_and(|k| !k.is_decomposable()) {
        return Err(Error::Config("compare reports completeness, which needs a decomposable kind".into()));
    }
    let mut config = base_config("compare", &args.source, &args.common, cfg);
    config.models = args.models.clone();
    config.mu = Some(set.spec().label());
    config.m = Some(args.sampler.m);
    config.sampler = Some(controls);
    config.kind = kind;
    if kind.is_some() {
        config.k = Some(args.cv.k);
        config.smoothing = Some(args.cv.smoothing);
    }

    let draws = set.draw_many(args.sampler.m, args.common.seed)?;
    let opts = CompleteOptions {
        k: args.cv.k,
        seed: args.common.seed,
        level: args.common.level,
        smoothing: args.cv.smoothing,
    };
    let mut rows = Vec::new();
    let mut restrict_reports: Vec<RestrictReport> = Vec::new();
    let mut complete_reports = Vec::new();
    for model in &models {
        let r = restrictiveness_on_draws(
            model.as_ref(),
            &loaded.menu,
            &draws,
            &set.spec().label(),
            args.common.seed,
            args.common.level,
            &cfg,
        )?;
        let c = match (&loaded.data, kind) {
            (Some((data, _)), Some(kind)) => {
                Some(estimate_completeness(model.as_ref(), &loaded.menu, data, kind, &opts, &cfg)?)
            }
            _ => None,
        };
        rows.push(CompareRow {
            model: r.model.clone(),
            kappa: c.as_ref().map(|c| c.kappa_hat),
            kappa_se: c.as_ref().map(|c| c.se),
            n: c.as_ref().map(|c| c.n),
            r: r.r_hat,
            r_se: r.se,
            m: r.m,
        });
        restrict_reports.push(r);
        complete_reports.extend(c);
    }
    prepare_out(&args.common.out)?;
    write_compare_csv(args.common.out.join("compare.csv"), &rows)?;
    write_json(
        args.common.out.join("compare_report.json"),
        &json!({ "config": config, "rows": rows, "restrict": restrict_reports, "complete": complete_reports }),
    )?;
    for row in &rows {
        let kappa = row.kappa.map(|k| format!("{k:.4}")).unwrap_or_else(|| "-".into());
        println!("{:<24} kappa {kappa:<8} r {:.4}", row.model, row.r);
    }
    Ok(())
}

fn sample(args: SampleArgs) -> Result<()> {
    let cfg = opt_config(&args.common)?;
    let loaded = load(&args.source)?;
    let (set, controls) = permissible_set(&loaded.menu, &args.sampler)?;
    let mut config = base_config("sample", &args.source, &args.common, cfg);
    config.mu = Some(set.spec().label());
    config.m = Some(args.sampler.m);
    config.sampler = Some(controls);
    let draws = set.draw_many(args.sampler.m, args.common.seed)?;
    prepare_out(&args.common.out)?;
    write_samples_csv(args.common.out.join("samples.csv"), &loaded.menu, &draws)?;
    write_json(args.common.out.join("samples.json"), &json!({ "config": config, "menu": loaded.menu }))?;
    println!("wrote {} draws for {} items", draws.len(), loaded.menu.len());
    Ok(())
}

fn fmt_ci(ci: Option<(f64, f64)>) -> String {
    ci.map(|(lo, hi)| format!("[{lo:.4}, {hi:.4}]")).unwrap_or_else(|| "n/a".into())
}

fn report(args: ReportArgs) -> Result<()> {
    let from = args.from.clone().unwrap_or_else(|| args.out.clone());
    if !from.is_dir() {
        return Err(Error::Config(format!("'{}' is not a directory", from.display())));
    }
    let read = |name: &str| -> Result<Option<serde_json::Value>> {
        let p = from.join(name);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    };
    let mut md = String::from("# restrictlab report\n");
    let mut found = false;
    if let Some(v) = read("restrict_report.json")? {
        found = true;
        let r: RestrictReport = serde_json::from_value(v["report"].clone())?;
        let _ = write!(
            md,
            "\n## Restrictiveness\n\n| model | mu | M | seed | r | se | CI |\n|---|---|---|---|---|---|---|\n| {} | {} | {} | {} | {:.4} | {:.4} | {} |\n",
            r.model, r.mu, r.m, r.seed, r.r_hat, r.se, fmt_ci(r.ci)
        );
        let _ = write!(
            md,
            "\nMean discrepancy to the draws: naive {:.4}, model {:.4}.\n",
            r.mean_naive_discrepancy, r.mean_model_discrepancy
        );
    }
    if let Some(v) = read("complete_report.json")? {
        found = true;
        if let Ok(c) = serde_json::from_value::<crate::complete::CompleteReport>(v["report"].clone()) {
            let _ = write!(
                md,
                "\n## Completeness\n\n| model | N | K | CV naive | CV model | CV unrestricted | kappa | se | CI |\n|---|---|---|---|---|---|---|---|---|\n| {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |\n",
                c.model, c.n, c.k, c.cv_naive, c.cv_model, c.cv_unrestricted, c.kappa_hat, c.se, fmt_ci(Some(c.ci))
            );
        }
        if let Ok(a) = serde_json::from_value::<crate::complete::AltReport>(v["f_star"].clone()) {
            let _ =
                write!(md, "\nf*-discrepancy {:.4} (bootstrap se {:.4}, B = {}).\n", a.delta_hat, a.bootstrap_se, a.b);
        }
    }
    let compare_path = from.join("compare.csv");
    if compare_path.exists() {
        found = true;
        let rows = read_compare_csv(&compare_path)?;
        md.push_str(
            "\n## Model comparison\n\n| model | kappa | se | N | r | se | M |\n|---|---|---|---|---|---|---|\n",
        );
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        for r in rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {:.4} | {:.4} | {} |",
                r.model,
                opt(r.kappa),
                opt(r.kappa_se),
                n,
                r.r,
                r.r_se,
                r.m
            );
        }
    }
    if !found {
        return Err(Error::Config(format!("no reports found in '{}'", from.display())));
    }
    prepare_out(&args.out)?;
    fs::write(args.out.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn error_json(code: &str, message: &str, exit: i32) -> String {
    json!({ "error": code, "message": message, "exit_code": exit }).to_string()
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim(), EXIT_CONFIG));
            return EXIT_CONFIG;
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Restrict(a) => restrict(a),
        Command::Complete(a) => complete(a),
        Command::Compare(a) => compare(a),
        Command::Sample(a) => sample(a),
        Command::Report(a) => report(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let exit = if e.is_config() { EXIT_CONFIG } else { EXIT_COMPUTE };
            eprintln!("{}", error_json(e.code(), &e.to_string(), exit));
            exit
        }
    }
}
