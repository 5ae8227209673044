//! `plstar`: sampling, learning and the PL* vs. non-adaptive studies.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use plstar::adaptive::{OracleChoice, Randomization};
use plstar::experiment::{
    best_and_worst, correlate, order_effect, read_compare_csv, summarize, write_compare_csv,
    write_repetitions_csv, write_scatter_csv, Experiment, ExperimentError,
};
use plstar::learn::{lstar_learn, MembershipOracle, TableInit};
use plstar::mealy::{equivalent, read_fsm, write_fsm};
use plstar::rng::Xoshiro256;
use plstar::sampling::{chvatal_sample, ProductSample, SamplingSpec};
use plstar::spl::ProductLine;

#[derive(Parser, Debug)]
#[command(name = "plstar", version, about = "Adaptive learning of product-line Mealy machines")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value = "wp", value_parser = ["wp", "perfect"])]
    oracle: String,
    /// `auto` (true state count minus hypothesis size) or a fixed depth.
    #[arg(long, global = true, default_value = "auto")]
    wp_depth: WpDepth,
    /// Lower bound on the auto depth.
    #[arg(long, global = true, default_value_t = 2)]
    wp_min_depth: usize,
    #[arg(long, global = true, default_value_t = 3)]
    t: usize,
    #[arg(long, global = true, default_value_t = 20)]
    orders: usize,
    #[arg(long, global = true, default_value_t = 10)]
    reps: usize,
    /// Comma-separated subset of alphabet,prefixes,suffixes; `all` or `none`.
    #[arg(long, global = true, default_value = "all")]
    randomize: RandomizeArg,
    /// Feature model JSON, or a directory holding `feature_model.json`
    /// plus `components/` or `fts.json`.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Directory of per-feature `.fsm` components.
    #[arg(long, global = true)]
    components: Option<PathBuf>,
    /// Featured transition system JSON.
    #[arg(long, global = true)]
    fts: Option<PathBuf>,
    /// Product sample JSON; computed with `--t` when absent.
    #[arg(long, global = true)]
    sample: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chvátal t-wise sample of the product line.
    Sample,
    /// Learn one machine: an `.fsm` file or a product of the sample.
    Learn {
        #[arg(long, conflicts_with = "product")]
        fsm: Option<PathBuf>,
        #[arg(long)]
        product: Option<usize>,
    },
    /// PL* vs. non-adaptive over `--orders` random orders.
    Compare,
    /// Repeat PL* on a best and a worst order and compare them.
    OrderEffect {
        #[arg(long, requires = "worst")]
        best: Option<OrderArg>,
        #[arg(long, requires = "best")]
        worst: Option<OrderArg>,
        /// Pick best/worst by total resets from a comparison CSV.
        #[arg(long, conflicts_with = "best")]
        from: Option<PathBuf>,
    },
    /// Pearson correlation of D with the PL* totals of a comparison CSV.
    Correlate {
        csv: PathBuf,
    },
    /// D and new-feature counts of an order.
    ScoreOrder {
        order: OrderArg,
    },
}

#[derive(Debug, Clone, Copy)]
enum WpDepth {
    Auto,
    Fixed(usize),
}

impl FromStr for WpDepth {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(WpDepth::Auto);
        }
        s.parse()
            .map(WpDepth::Fixed)
            .map_err(|_| format!("expected `auto` or a depth, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy)]
struct RandomizeArg(Randomization);

impl FromStr for RandomizeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut r = Randomization::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => {
                    r = Randomization { alphabet: true, prefixes: true, suffixes: true };
                }
                "none" => {}
                "alphabet" => r.alphabet = true,
                "prefixes" => r.prefixes = true,
                "suffixes" => r.suffixes = true,
                other => return Err(format!("unknown randomization `{other}`")),
            }
        }
        Ok(RandomizeArg(r))
    }
}

/// Whitespace- or comma-separated product indices.
#[derive(Debug, Clone)]
struct OrderArg(Vec<usize>);

impl FromStr for OrderArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().map_err(|_| format!("bad product index `{p}`")))
            .collect::<Result<_, _>>()
            .map(OrderArg)
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const USAGE: u8 = 1;
const INPUT: u8 = 2;
const INTERNAL: u8 = 3;

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: INPUT, error: error.into() }
}

fn internal(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: INTERNAL, error: error.into() }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Learning { .. }
            | ExperimentError::NonAdaptiveVaries(..)
            | ExperimentError::WrongModel { .. } => internal(e),
            _ => input(e),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

// stdout may be a closed pipe (`plstar sample | head`); that is not an error
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let g = &cli.global;
    fs::create_dir_all(&g.out)
        .with_context(|| format!("creating {}", g.out.display()))
        .map_err(input)?;
    match &cli.command {
        Command::Sample => cmd_sample(g),
        Command::Learn { fsm, product } => cmd_learn(g, fsm.as_deref(), *product),
        Command::Compare => cmd_compare(g),
        Command::OrderEffect { best, worst, from } => {
            cmd_order_effect(g, best.as_ref(), worst.as_ref(), from.as_deref())
        }
        Command::Correlate { csv } => cmd_correlate(g, csv),
        Command::ScoreOrder { order } => cmd_score_order(g, &order.0),
    }
}

fn oracle(g: &Global) -> OracleChoice {
    match (g.oracle.as_str(), g.wp_depth) {
        ("perfect", _) => OracleChoice::Perfect,
        (_, WpDepth::Auto) => OracleChoice::WpAuto { min_depth: g.wp_min_depth },
        (_, WpDepth::Fixed(d)) => OracleChoice::WpFixed(d),
    }
}

fn load_line(g: &Global) -> Outcome<ProductLine> {
    let model = g
        .model
        .as_ref()
        .ok_or_else(|| Failure { code: USAGE, error: anyhow!("--model is required") })?;
    if !model.exists() {
        return Err(input(anyhow!("{}: no such file or directory", model.display())));
    }
    let (fm, default_dir) = if model.is_dir() {
        (model.join("feature_model.json"), Some(model.clone()))
    } else {
        (model.clone(), None)
    };
    let line = match (&g.components, &g.fts, &default_dir) {
        (Some(dir), None, _) => ProductLine::load_components(&fm, dir),
        (None, Some(fts), _) => ProductLine::load_fts(&fm, fts),
        (None, None, Some(dir)) if dir.join("components").is_dir() => {
            ProductLine::load_components(&fm, &dir.join("components"))
        }
        (None, None, Some(dir)) => ProductLine::load_fts(&fm, &dir.join("fts.json")),
        (Some(_), Some(_), _) => {
            return Err(Failure { code: USAGE, error: anyhow!("give --components or --fts, not both") })
        }
        (None, None, None) => {
            return Err(Failure {
                code: USAGE,
                error: anyhow!("--components or --fts is required when --model is a file"),
            })
        }
    };
    line.map_err(input)
}

fn load_sample(g: &Global, line: &ProductLine) -> Outcome<ProductSample> {
    match &g.sample {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(input)?;
            ProductSample::from_json(&text, &line.model)
                .with_context(|| path.display().to_string())
                .map_err(input)
        }
        None => {
            let spec = SamplingSpec::for_model(&line.model, g.t).map_err(input)?;
            chvatal_sample(&line.model, &spec).map_err(input)
        }
    }
}

fn experiment(g: &Global) -> Outcome<Experiment> {
    let line = load_line(g)?;
    let sample = load_sample(g, &line)?;
    let mut exp = Experiment::new(&line, sample).map_err(input)?;
    exp.oracle = oracle(g);
    exp.randomize = g.randomize.0;
    exp.seed = g.seed;
    exp.verify = true;
    Ok(exp)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)
}

fn cmd_sample(g: &Global) -> Outcome<()> {
    let line = load_line(g)?;
    let spec = SamplingSpec::for_model(&line.model, g.t).map_err(input)?;
    let sample = chvatal_sample(&line.model, &spec).map_err(input)?;
    let path = g.out.join("sample.json");
    fs::write(&path, sample.to_json(&line.model))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)?;
    say!("{}-wise sample: {} products -> {}", g.t, sample.len(), path.display());
    for (i, c) in sample.products().iter().enumerate() {
        let m = line.derive(c).map_err(input)?;
        say!(
            "  {i:3}  {:4} states {:3} inputs  [{}]",
            m.num_states(),
            m.num_inputs(),
            line.model.selected_names(c).join(", ")
        );
    }
    Ok(())
}

fn cmd_learn(g: &Global, fsm: Option<&Path>, product: Option<usize>) -> Outcome<()> {
    let (sul, name) = match (fsm, product) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(input)?;
            let m = read_fsm(&text).with_context(|| path.display().to_string()).map_err(input)?;
            (m, "learned".to_string())
        }
        (None, Some(p)) => {
            let line = load_line(g)?;
            let sample = load_sample(g, &line)?;
            let c = sample
                .products()
                .get(p)
                .ok_or_else(|| input(anyhow!("product {p} not in a sample of {}", sample.len())))?;
            (line.derive(c).map_err(input)?, format!("product_{p}"))
        }
        (None, None) => {
            return Err(Failure { code: USAGE, error: anyhow!("learn needs --fsm or --product") })
        }
    };
    let sul = if g.randomize.0.alphabet {
        let mut order = sul.inputs().to_vec();
        Xoshiro256::substream(g.seed, "alphabet", &[0]).shuffle(&mut order);
        sul.with_input_order(&order).map_err(internal)?
    } else {
        sul
    };
    let mut mq = MembershipOracle::new(&sul);
    let mut eq = oracle(g).build(&sul);
    let out = lstar_learn(&mut mq, &mut eq, &TableInit::classic(sul.num_inputs()), Default::default())
        .map_err(internal)?;
    let ok = equivalent(&out.model, &sul).map_err(internal)?.is_equivalent();
    let path = g.out.join(format!("{name}.fsm"));
    fs::write(&path, write_fsm(&out.model))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input)?;
    write_json(&g.out.join(format!("{name}_table.json")), &out.table.snapshot())?;
    let m = out.metrics;
    say!(
        "{} states (SUL {}), equivalent: {ok}\nrounds {}  mq {}/{}  eq {}/{}  (resets/symbols)",
        out.model.num_states(),
        sul.num_states(),
        m.rounds,
        m.mq_resets,
        m.mq_symbols,
        m.eq_resets,
        m.eq_symbols
    );
    if ok {
        Ok(())
    } else {
        Err(internal(anyhow!("learned model is not equivalent to the SUL")))
    }
}

fn cmd_compare(g: &Global) -> Outcome<()> {
    let exp = experiment(g)?;
    let orders = exp.orders(g.orders)?;
    let (rows, err) = exp.compare_partial(&orders);
    let path = g.out.join("compare.csv");
    write_compare_csv(&rows, create(&path)?)?;
    if let Some(e) = err {
        return Err(Failure::from(e));
    }
    let summary = summarize(&rows);
    write_json(&g.out.join("summary.json"), &summary)?;
    say!("{} orders, {} products -> {}", rows.len(), exp.suls.len(), path.display());
    say!(
        "{:14} {:>14} {:>14} {:>9} {:>10}",
        "metric", "PL* mean", "non-adaptive", "improve%", "p"
    );
    for m in &summary.metrics {
        say!(
            "{:14} {:14.1} {:14.1} {:9} {:>10}",
            m.metric,
            m.pl_mean,
            m.na_mean,
            m.improvement.map_or("-".into(), |i| format!("{i:.1}")),
            m.test.as_ref().map_or("-".into(), |t| format!("{:.2e}", t.p_value)),
        );
    }
    Ok(())
}

fn cmd_order_effect(
    g: &Global,
    best: Option<&OrderArg>,
    worst: Option<&OrderArg>,
    from: Option<&Path>,
) -> Outcome<()> {
    if g.reps < 2 {
        return Err(input(anyhow!("--reps must be at least 2 for the t-test, got {}", g.reps)));
    }
    let exp = experiment(g)?;
    let (best, worst) = match (best, worst, from) {
        (Some(b), Some(w), _) => (b.0.clone(), w.0.clone()),
        (_, _, Some(path)) => {
            let file = File::open(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(input)?;
            let rows = read_compare_csv(file)?;
            let (b, w) = best_and_worst(&rows)
                .ok_or_else(|| input(anyhow!("{} has no rows", path.display())))?;
            (b.order.clone(), w.order.clone())
        }
        _ => {
            return Err(Failure {
                code: USAGE,
                error: anyhow!("order-effect needs --best and --worst, or --from"),
            })
        }
    };
    let b = exp.repeat(&best, g.reps)?;
    let w = exp.repeat(&worst, g.reps)?;
    write_repetitions_csv(&b, &w, create(&g.out.join("repetitions.csv"))?)?;
    let effects = order_effect(&b, &w);
    write_json(&g.out.join("order_effect.json"), &effects)?;
    say!("best  D {:.4}: {}", exp.score(&best), fmt_order(&best));
    say!("worst D {:.4}: {}", exp.score(&worst), fmt_order(&worst));
    for e in &effects {
        let p = match &e.test {
            Ok(t) => format!("{:.2e}", t.p_value),
            Err(msg) => msg.clone(),
        };
        say!(
            "{:14} best {:12.1} ± {:<10.1} worst {:12.1} ± {:<10.1} p {p}",
            e.metric, e.best_mean, e.best_std, e.worst_mean, e.worst_std
        );
    }
    Ok(())
}

fn cmd_correlate(g: &Global, csv: &Path) -> Outcome<()> {
    let file = File::open(csv)
        .with_context(|| format!("reading {}", csv.display()))
        .map_err(input)?;
    let rows = read_compare_csv(file)?;
    let (resets, symbols) = correlate(&rows)?;
    write_scatter_csv(&rows, create(&g.out.join("scatter.csv"))?)?;
    write_json(
        &g.out.join("correlation.json"),
        &serde_json::json!({ "total_resets": resets, "total_symbols": symbols }),
    )?;
    say!("D vs total resets:  r {:+.4}  p {:.3e}", resets.statistic, resets.p_value);
    say!("D vs total symbols: r {:+.4}  p {:.3e}", symbols.statistic, symbols.p_value);
    Ok(())
}

fn cmd_score_order(g: &Global, order: &[usize]) -> Outcome<()> {
    let line = load_line(g)?;
    let sample = load_sample(g, &line)?;
    if !is_permutation(order, sample.len()) {
        return Err(ExperimentError::NotAPermutation(order.to_vec()).into());
    }
    let mask = plstar::adaptive::non_mandatory_mask(&line.model).map_err(input)?;
    let counts = plstar::adaptive::new_feature_counts(order, &sample, mask);
    say!("D {:.6}", plstar::adaptive::score_from_counts(&counts));
    say!("new features {}", fmt_order(&counts));
    Ok(())
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true))
}

fn fmt_order<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}
