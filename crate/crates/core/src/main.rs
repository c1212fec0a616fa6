use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use w2s::data::Dataset;
use w2s::error::{Error, Result};
use w2s::hardness::{
    bayes_floor, build_domain, default_hypothesis_count, random_tables, write_floor_csv, HardInstance,
    MAX_ENUMERATION_DOMAIN,
};
use w2s::harness::{
    curve_series, gen_dataset, log_log_slope, margin_fixture, pointwise_fixture, finite_fixture, run_curve,
    series_svg, spot_check_theorem6, write_curve_csv, write_series_csv, Algo, ExperimentConfig,
    SpotCheckConfig, SyntheticConcept,
};
use w2s::model::{self, Model, ModelConfig};
use w2s::rng::stream;
use w2s::subsample::plan_for;
use w2s::subvote::{lemma10_min_t, verify_lemma10, verify_lemma7, verify_lemma8, verify_lemma9, SubVoteParams};
use w2s::voter::{zero_one_loss, Classifier};

/// Exit code for a report whose check failed.
const ACCEPTANCE_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "w2s", version, about = "Sample-optimal weak-to-strong boosting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a random stump-voter concept.
    GenData(GenData),
    /// Train a model on a CSV dataset.
    Train(Train),
    /// Error of a saved model on a CSV dataset.
    Eval(Eval),
    /// Sub-sample plan for m samples.
    Plan(Plan),
    /// Learning curves over a grid of sample sizes.
    Curve(Curve),
    /// Monte-Carlo check of one of the sub-sampled vote lemmas.
    VerifyLemma(VerifyLemma),
    /// Bayes error floor on the hard instance.
    Hardness(Hardness),
    /// Margin-to-error spot check for AdaBoost*ν.
    SpotCheckT6(SpotCheck),
}

#[derive(Args)]
struct GenData {
    #[arg(long)]
    m: usize,
    /// Advantage; points with |f*(x)| < 2·gamma are rejected.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 3)]
    features: usize,
    #[arg(long, default_value_t = 3)]
    stumps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the planted concept as JSON.
    #[arg(long)]
    concept_out: Option<PathBuf>,
}

#[derive(Args)]
struct Train {
    #[arg(long, default_value = "optimal")]
    algo: Algo,
    #[arg(long)]
    data: PathBuf,
    /// Edge promised by the weak learner.
    #[arg(long)]
    gamma: f64,
    /// Defaults to gamma / 2.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Plan {
    #[arg(long)]
    m: usize,
    /// Include the index sets.
    #[arg(long)]
    sets: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Curve {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    m_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Algo>>,
    /// Advantage; the learners run with edge 2·gamma.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    features: Option<usize>,
    #[arg(long)]
    stumps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    series: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Record wall-clock milliseconds per row.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyLemma {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["7", "8", "9", "10"]))]
    lemma: String,
    #[arg(long)]
    t: usize,
    /// Deviation for lemma 7, window for lemma 8.
    #[arg(long)]
    mu: Option<f64>,
    /// Margin for lemma 10.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which random fixture to test.
    #[arg(long, default_value_t = 0)]
    fixture: u64,
    /// Terms in the random voter (lemmas 7 to 9).
    #[arg(long, default_value_t = 25)]
    terms: usize,
    /// Domain size for lemma 9.
    #[arg(long, default_value_t = 40)]
    u: usize,
    /// Fraction of mislabeled points for lemma 9.
    #[arg(long, default_value_t = 0.1)]
    flip: f64,
    /// Training set size for lemma 10.
    #[arg(long, default_value_t = 200)]
    sample_size: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Hardness {
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Advantage; concepts are certified at margin 2·gamma.
    #[arg(long)]
    gamma: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    c_u: f64,
    /// Domain size, bypassing c_u·d/gamma².
    #[arg(long)]
    u: Option<usize>,
    /// Number of random tables.
    #[arg(long)]
    n_hyp: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    c_n: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpotCheck {
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    d_proxy: f64,
    #[arg(long, default_value_t = 1.0)]
    min_multiple: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    features: usize,
    #[arg(long, default_value_t = 1)]
    stumps: usize,
    #[arg(long, default_value_t = 100_000)]
    test_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn gen_data(a: GenData) -> Result<u8> {
    if !(a.gamma > 0.0 && a.gamma < 0.5) {
        return Err(Error::Input(format!("gamma = {} outside (0, 1/2)", a.gamma)));
    }
    let mut rng = stream(a.seed, "concept", &[0]);
    let concept = SyntheticConcept::random(a.features, a.stumps, 2.0 * a.gamma, &mut rng)?;
    let data = gen_dataset(&concept, a.m, &mut stream(a.seed, "data", &[]))?;
    if let Some(p) = &a.concept_out {
        write_json(&concept, Some(p))?;
    }
    let mut w = sink(a.out.as_deref())?;
    data.write_csv(&mut w)?;
    w.flush()?;
    Ok(0)
}

fn train(a: Train) -> Result<u8> {
    let data = Dataset::read_csv_path(&a.data, None)?;
    let cfg = ModelConfig::new(a.gamma, a.nu.unwrap_or(a.gamma / 2.0), a.seed)?;
    let t = model::train(a.algo, &data, &cfg)?;
    let mut w = sink(a.out.as_deref())?;
    w.write_all(t.model.to_json()?.as_bytes())?;
    w.flush()?;
    eprintln!(
        "{}: {} voter(s), min training margin {}",
        a.algo,
        t.model.voters.len(),
        t.min_margin
    );
    Ok(0)
}

#[derive(Serialize)]
struct EvalReport {
    algo: Algo,
    n: usize,
    errors: usize,
    error: f64,
}

fn eval(a: Eval) -> Result<u8> {
    let model = Model::from_json_path(&a.model)?;
    let domain = match model.voters[0].terms().first().map(|t| &t.hypothesis) {
        Some(w2s::hypothesis::Hypothesis::Table { signs }) => Some(signs.len()),
        _ => None,
    };
    let data = Dataset::read_csv_path(&a.data, domain)?;
    model.check_space(data.space())?;
    let error = zero_one_loss(&model, &data)?;
    let report = EvalReport {
        algo: model.algo,
        n: data.len(),
        errors: (error * data.len() as f64).round() as usize,
        error,
    };
    write_json(&report, a.out.as_deref())?;
    Ok(0)
}

#[derive(Serialize)]
struct PlanReport {
    m: usize,
    m_used: usize,
    k: usize,
    set_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    index_sets: Option<Vec<Vec<usize>>>,
}

fn plan(a: Plan) -> Result<u8> {
    let p = plan_for(a.m)?;
    let report = PlanReport {
        m: p.m,
        m_used: p.m_used,
        k: p.k(),
        set_size: p.set_size(),
        index_sets: a.sets.then(|| p.index_sets.clone()),
    };
    write_json(&report, a.out.as_deref())?;
    Ok(0)
}

fn curve(a: Curve) -> Result<u8> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
        None => {
            let (Some(grid), Some(trials), Some(gamma)) = (a.m_grid.clone(), a.trials, a.gamma) else {
                return Err(Error::Input(
                    "without --config, --m-grid, --trials and --gamma are required".into(),
                ));
            };
            ExperimentConfig::new(grid, trials, Algo::ALL.to_vec(), gamma, 0)
        }
    };
    if let Some(v) = a.m_grid {
        cfg.m_grid = v;
    }
    if let Some(v) = a.trials {
        cfg.trials_per_m = v;
    }
    if let Some(v) = a.algos {
        cfg.algos = v;
    }
    if let Some(v) = a.gamma {
        cfg.gamma = v;
    }
    if a.nu.is_some() {
        cfg.nu = a.nu;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.delta {
        cfg.delta = v;
    }
    if let Some(v) = a.features {
        cfg.features = v;
    }
    if let Some(v) = a.stumps {
        cfg.stumps = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if a.series.is_some() {
        cfg.series = a.series;
    }
    if a.plot.is_some() {
        cfg.plot = a.plot;
    }
    cfg.timing |= a.timing;
    cfg.validate()?;

    let rows = run_curve(&cfg)?;
    let mut w = sink(cfg.out.as_deref())?;
    write_curve_csv(&rows, &mut w)?;
    w.flush()?;
    let series = curve_series(&rows, cfg.epsilon);
    if let Some(p) = &cfg.series {
        write_series_csv(&series, BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = &cfg.plot {
        std::fs::write(p, series_svg(&series))?;
    }
    for algo in &cfg.algos {
        let pts: Vec<(usize, f64)> = series
            .iter()
            .filter(|s| s.algo == *algo)
            .map(|s| (s.m, s.mean_test_error))
            .collect();
        let slope = log_log_slope(&pts).map_or("n/a".to_string(), |s| format!("{s:.3}"));
        eprintln!("{algo}: log-log slope {slope}");
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} row(s) did not train");
    }
    Ok(0)
}

fn verify_lemma(a: VerifyLemma) -> Result<u8> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Input(format!("lemma {} needs --{name}", a.lemma)));
    let report = match a.lemma.as_str() {
        "7" | "8" => {
            let mu = need(a.mu, "mu")?;
            let params = SubVoteParams::new(a.t, mu, a.trials, a.seed)?;
            let f = pointwise_fixture(a.terms, a.seed, a.fixture)?;
            let x = w2s::data::Point::Index(0);
            if a.lemma == "7" {
                verify_lemma7(&f, x, &params)?
            } else {
                verify_lemma8(&f, x, &params)?
            }
        }
        "9" => {
            let params = SubVoteParams::new(a.t, 0.0, a.trials, a.seed)?;
            let (f, data) = finite_fixture(a.u, a.terms, a.flip, a.seed, a.fixture)?;
            verify_lemma9(&f, &data, None, &params)?
        }
        _ => {
            let gamma = need(a.gamma, "gamma")?;
            if a.t < lemma10_min_t(gamma) {
                return Err(Error::Input(format!("lemma 10 needs t >= {}", lemma10_min_t(gamma))));
            }
            let params = SubVoteParams::new(a.t, 0.0, a.trials, a.seed)?;
            let (f, data) = margin_fixture(a.sample_size, a.seed)?;
            verify_lemma10(&f, &data, gamma, &params)?
        }
    };
    write_json(&report, a.out.as_deref())?;
    if report.vacuous {
        eprintln!("note: bound {} is at least 1", report.bound);
    }
    Ok(if report.pass { 0 } else { ACCEPTANCE_FAILURE })
}

fn hardness(a: Hardness) -> Result<u8> {
    let domain = build_domain(a.d, a.gamma, a.c_u)?;
    let u = a.u.unwrap_or(domain.u);
    if !domain.in_theorem_range || a.u.is_some() {
        eprintln!("warning: gamma = {} and u = {u} are outside the range the lower bound covers", a.gamma);
    }
    if u > MAX_ENUMERATION_DOMAIN {
        return Err(Error::Input(format!(
            "u = {u} exceeds the enumeration budget of {MAX_ENUMERATION_DOMAIN}; lower c_u or raise gamma"
        )));
    }
    let n = a.n_hyp.unwrap_or_else(|| default_hypothesis_count(u, a.gamma, a.c_n));
    let tables = random_tables(u, n, &mut stream(a.seed, "tables", &[]));
    let mut grid = a.m.clone();
    grid.sort_unstable();
    grid.dedup();
    let base = HardInstance::new(tables, a.gamma, grid[0])?;
    eprintln!(
        "u = {u}, N = {n}, {} of {} labelings certified",
        base.concepts.len(),
        1u32 << u
    );
    let reports = grid
        .iter()
        .map(|&m| bayes_floor(&base.with_budget(m)?, a.trials, a.seed))
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        eprintln!("m = {}: mean error {:.5} (stderr {:.5})", r.m, r.mean_error, r.stderr);
    }
    let mut w = sink(a.out.as_deref())?;
    write_floor_csv(&reports, &mut w)?;
    w.flush()?;
    Ok(0)
}

fn spot_check(a: SpotCheck) -> Result<u8> {
    let cfg = SpotCheckConfig {
        gamma: a.gamma,
        d_proxy: a.d_proxy,
        min_multiple: a.min_multiple,
        m_grid: a.m,
        trials: a.trials,
        delta: a.delta,
        features: a.features,
        stumps: a.stumps,
        test_size: a.test_size,
        seed: a.seed,
    };
    let report = spot_check_theorem6(&cfg)?;
    write_json(&report, a.out.as_deref())?;
    match report.threshold_m {
        Some(m) => eprintln!("pass fraction reaches {} at m = {m}", 1.0 - cfg.delta),
        None => eprintln!("pass fraction never reaches {}", 1.0 - cfg.delta),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Plan(a) => plan(a),
        Command::Curve(a) => curve(a),
        Command::VerifyLemma(a) => verify_lemma(a),
        Command::Hardness(a) => hardness(a),
        Command::SpotCheckT6(a) => spot_check(a),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("W2S_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| Error::Input(format!("W2S_THREADS = {v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
