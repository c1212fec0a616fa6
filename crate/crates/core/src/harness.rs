//! Synthetic data, learning-curve experiments and report emission.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::AdaBoostStar;
use crate::data::{Dataset, Sign};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::model::{self, ModelConfig, Trained};
use crate::rng::{derive_seed, stream};
use crate::subsample::plan_size;
use crate::voter::{zero_one_loss, Classifier, VotingClassifier};
use crate::weak::StumpLearner;

/// Rejection sampling gives up when fewer than this many of
/// [`PROBE_DRAWS`] probe points are accepted.
pub const PROBE_MIN_ACCEPTED: usize = 10;
pub const PROBE_DRAWS: usize = 10_000;

/// A realizable concept: the sign of a planted voter over stumps, restricted
/// to points where the voter's magnitude is at least `margin_floor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConcept {
    pub planted: VotingClassifier,
    pub margin_floor: f64,
    pub feature_count: usize,
}

impl SyntheticConcept {
    pub fn new(planted: VotingClassifier, margin_floor: f64, feature_count: usize) -> Result<Self> {
        if !(margin_floor > 0.0 && margin_floor <= 1.0) {
            return Err(Error::input(format!("margin floor {margin_floor} outside (0, 1]")));
        }
        if feature_count == 0 {
            return Err(Error::input("feature count must be positive"));
        }
        if planted.is_zero() {
            return Err(Error::input("planted voter is empty"));
        }
        for t in planted.terms() {
            match t.hypothesis {
                Hypothesis::Stump { feature, .. } if feature < feature_count => {}
                _ => {
                    return Err(Error::input(format!(
                        "planted terms must be stumps over {feature_count} features"
                    )))
                }
            }
        }
        Ok(SyntheticConcept {
            planted,
            margin_floor,
            feature_count,
        })
    }

    /// `stumps` stumps cycling over the features, thresholds uniform in
    /// `[1/4, 3/4]`, random polarities and weights uniform in `[1/2, 3/2]`.
    pub fn random<R: Rng + ?Sized>(
        feature_count: usize,
        stumps: usize,
        margin_floor: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if stumps == 0 {
            return Err(Error::input("need at least one stump"));
        }
        if feature_count == 0 {
            return Err(Error::input("feature count must be positive"));
        }
        let terms: Vec<(f64, Hypothesis)> = (0..stumps)
            .map(|j| {
                let threshold = rng.random_range(0.25..0.75);
                let polarity = if rng.random::<bool>() { Sign::Pos } else { Sign::Neg };
                let weight = rng.random_range(0.5..1.5);
                (weight, Hypothesis::stump(j % feature_count, threshold, polarity))
            })
            .collect();
        SyntheticConcept::new(VotingClassifier::new(terms)?, margin_floor, feature_count)
    }

    /// `f*(x)` for a dense point.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.planted.score_unchecked(crate::data::Point::Dense(x))
    }

    fn draw_point<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) -> f64 {
        x.iter_mut().for_each(|v| *v = rng.random::<f64>());
        self.score(x)
    }
}

/// `m` points uniform on the unit cube with `|f*(x)| ≥ margin_floor`,
/// labeled by `sign(f*(x))`.
pub fn gen_dataset<R: Rng + ?Sized>(concept: &SyntheticConcept, m: usize, rng: &mut R) -> Result<Dataset> {
    let dim = concept.feature_count;
    let mut x = vec![0.0; dim];
    let accepted = (0..PROBE_DRAWS)
        .filter(|_| concept.draw_point(rng, &mut x).abs() >= concept.margin_floor)
        .count();
    if accepted < PROBE_MIN_ACCEPTED {
        return Err(Error::Infeasible(format!(
            "only {accepted} of {PROBE_DRAWS} probe points reach margin {}",
            concept.margin_floor
        )));
    }
    let mut values = Vec::with_capacity(m * dim);
    let mut labels = Vec::with_capacity(m);
    while labels.len() < m {
        let s = concept.draw_point(rng, &mut x);
        if s.abs() >= concept.margin_floor {
            values.extend_from_slice(&x);
            labels.push(Sign::of(s));
        }
    }
    Dataset::dense(dim, values, labels)
}

/// A learner compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    /// Classic AdaBoost on the full sample.
    Adaboost,
    /// AdaBoost*ν on the full sample.
    Abstar,
    /// Sub-sampled majority of majorities.
    Optimal,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Adaboost, Algo::Abstar, Algo::Optimal];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Adaboost => "adaboost",
            Algo::Abstar => "abstar",
            Algo::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algo> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::input(format!("unknown algorithm {s:?}")))
    }
}

fn default_epsilon() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    1.0 / 3.0
}
fn default_features() -> usize {
    3
}
fn default_stumps() -> usize {
    3
}

/// One learning-curve experiment. Reads from a JSON document with these
/// field names; missing optional fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Target error; the series file flags grid points at or below it.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub m_grid: Vec<usize>,
    pub trials_per_m: usize,
    pub algos: Vec<Algo>,
    /// Advantage of the weak learner. The data has margin floor `2·gamma`, so
    /// the learners run with required edge `2·gamma`.
    pub gamma: f64,
    /// Defaults to `gamma`, half the required edge.
    #[serde(default)]
    pub nu: Option<f64>,
    pub seed: u64,
    #[serde(default = "default_features")]
    pub features: usize,
    #[serde(default = "default_stumps")]
    pub stumps: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub series: Option<PathBuf>,
    #[serde(default)]
    pub plot: Option<PathBuf>,
    /// Record wall-clock times; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(m_grid: Vec<usize>, trials_per_m: usize, algos: Vec<Algo>, gamma: f64, seed: u64) -> Self {
        ExperimentConfig {
            epsilon: default_epsilon(),
            delta: default_delta(),
            m_grid,
            trials_per_m,
            algos,
            gamma,
            nu: None,
            seed,
            features: default_features(),
            stumps: default_stumps(),
            out: None,
            series: None,
            plot: None,
            timing: false,
        }
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Edge handed to AdaBoost*ν: `2·gamma`.
    pub fn edge(&self) -> f64 {
        2.0 * self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} = {v} outside (0, 1)")))
            }
        };
        unit("epsilon", self.epsilon)?;
        unit("delta", self.delta)?;
        if self.m_grid.is_empty() || self.m_grid[0] == 0 {
            return Err(Error::input("m_grid must be nonempty and positive"));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("m_grid must be strictly increasing"));
        }
        if self.trials_per_m == 0 {
            return Err(Error::input("trials_per_m must be at least 1"));
        }
        if self.algos.is_empty() {
            return Err(Error::input("select at least one algorithm"));
        }
        if self.features == 0 || self.stumps == 0 {
            return Err(Error::input("features and stumps must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.25) {
            return Err(Error::input(format!("gamma = {} outside (0, 1/4)", self.gamma)));
        }
        AdaBoostStar::new(self.edge(), self.nu())?;
        Ok(())
    }

    /// The concept used by trial `trial` at every grid point.
    pub fn concept(&self, trial: usize) -> Result<SyntheticConcept> {
        let mut rng = stream(self.seed, "concept", &[trial as u64]);
        SyntheticConcept::random(self.features, self.stumps, 2.0 * self.gamma, &mut rng)
    }
}

/// One CSV row of a learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub algo: Algo,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub train_error: Option<f64>,
    pub test_error: Option<f64>,
    pub min_margin: Option<f64>,
    pub k_subsamples: usize,
    pub wall_ms: Option<u64>,
    pub status: String,
}

pub const CURVE_COLUMNS: [&str; 10] = [
    "algo",
    "m",
    "trial",
    "seed",
    "train_error",
    "test_error",
    "min_margin",
    "k_subsamples",
    "wall_ms",
    "status",
];

/// Size of the held-out set for a training set of size `m`.
pub fn test_size(m: usize) -> usize {
    (10 * m).max(10_000)
}

fn fit(algo: Algo, cfg: &ExperimentConfig, train: &Dataset, seed: u64) -> Result<Trained> {
    model::train(algo, train, &ModelConfig::new(cfg.edge(), cfg.nu(), seed)?)
}

fn status_of(e: &Error) -> String {
    if e.is_contract_violation() {
        "contract_violation".into()
    } else {
        match e {
            Error::Infeasible(_) => "infeasible".into(),
            _ => "error".into(),
        }
    }
}

fn curve_cell(cfg: &ExperimentConfig, m: usize, trial: usize) -> Vec<CurveRow> {
    let seed = derive_seed(cfg.seed, "train", &[m as u64, trial as u64]);
    let k_of = |algo: Algo| if algo == Algo::Optimal { plan_size(m) } else { 1 };
    let failed = |algo: Algo, e: &Error| CurveRow {
        algo,
        m,
        trial,
        seed,
        train_error: None,
        test_error: None,
        min_margin: None,
        k_subsamples: k_of(algo),
        wall_ms: None,
        status: status_of(e),
    };
    let data = cfg.concept(trial).and_then(|c| {
        let train = gen_dataset(&c, m, &mut stream(seed, "data", &[]))?;
        let test = gen_dataset(&c, test_size(m), &mut stream(cfg.seed, "test", &[m as u64, trial as u64]))?;
        Ok((train, test))
    });
    let (train, test) = match data {
        Ok(d) => d,
        Err(e) => return cfg.algos.iter().map(|&a| failed(a, &e)).collect(),
    };
    cfg.algos
        .iter()
        .map(|&algo| {
            let start = Instant::now();
            let result = fit(algo, cfg, &train, seed).and_then(|f| {
                let train_error = zero_one_loss(&f.model, &train)?;
                let test_error = zero_one_loss(&f.model, &test)?;
                Ok((train_error, test_error, f.min_margin))
            });
            let wall = cfg.timing.then(|| start.elapsed().as_millis() as u64);
            match result {
                Ok((train_error, test_error, min_margin)) => CurveRow {
                    algo,
                    m,
                    trial,
                    seed,
                    train_error: Some(train_error),
                    test_error: Some(test_error),
                    min_margin: Some(min_margin),
                    k_subsamples: k_of(algo),
                    wall_ms: wall,
                    status: "ok".into(),
                },
                Err(e) => CurveRow {
                    wall_ms: wall,
                    ..failed(algo, &e)
                },
            }
        })
        .collect()
}

/// Runs every `(m, trial)` cell, in parallel, and returns the rows in grid
/// order: by `m`, then trial, then the configured algorithm order.
pub fn run_curve(cfg: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..cfg.trials_per_m).map(move |r| (m, r)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(m, r)| curve_cell(cfg, m, r))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect())
}

pub fn write_curve_csv<W: std::io::Write>(rows: &[CurveRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        w.write_record(CURVE_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean test error of one algorithm at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub algo: Algo,
    pub m: usize,
    pub mean_test_error: f64,
    pub stderr: f64,
    pub ok_trials: usize,
    pub failed_trials: usize,
    pub below_epsilon: bool,
}

/// Aggregates rows into one point per `(algo, m)`; failed rows are counted
/// but not averaged.
pub fn curve_series(rows: &[CurveRow], epsilon: f64) -> Vec<SeriesPoint> {
    let mut keys: Vec<(Algo, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.algo, r.m)) {
            keys.push((r.algo, r.m));
        }
    }
    keys.sort_by_key(|&(a, m)| (Algo::ALL.iter().position(|&b| b == a), m));
    keys.into_iter()
        .filter_map(|(algo, m)| {
            let cell: Vec<&CurveRow> = rows.iter().filter(|r| r.algo == algo && r.m == m).collect();
            let errs: Vec<f64> = cell.iter().filter_map(|r| r.test_error).collect();
            if errs.is_empty() {
                return None;
            }
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = if errs.len() > 1 {
                errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Some(SeriesPoint {
                algo,
                m,
                mean_test_error: mean,
                stderr: (var / n).sqrt(),
                ok_trials: errs.len(),
                failed_trials: cell.len() - errs.len(),
                below_epsilon: mean <= epsilon,
            })
        })
        .collect()
}

pub fn write_series_csv<W: std::io::Write>(series: &[SeriesPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in series {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln(error)` against `ln(m)`; `None` if fewer than
/// two points have positive error.
pub fn log_log_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(m, e)| ((m as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// A log-log line chart of mean test error against `m`, one line per
/// algorithm, as a standalone SVG document.
pub fn series_svg(series: &[SeriesPoint]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 56.0;
    let colors = ["#1b6ca8", "#c0392b", "#27ae60"];
    let pts: Vec<&SeriesPoint> = series.iter().filter(|p| p.mean_test_error > 0.0).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        svg.push_str("<text x=\"20\" y=\"30\">no positive errors to plot</text>\n</svg>\n");
        return svg;
    }
    let lx = |m: usize| (m as f64).log10();
    let ly = |e: f64| e.log10();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &pts {
        x0 = x0.min(lx(p.m));
        x1 = x1.max(lx(p.m));
        y0 = y0.min(ly(p.mean_test_error));
        y1 = y1.max(ly(p.mean_test_error));
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\">m (log scale)</text>\n\
         <text x=\"16\" y=\"{cy}\" transform=\"rotate(-90 16 {cy})\" text-anchor=\"middle\">test error (log scale)</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        ty = H - 16.0,
        cy = H / 2.0,
    ));
    for (i, algo) in Algo::ALL.iter().enumerate() {
        let line: Vec<&&SeriesPoint> = pts.iter().filter(|p| p.algo == *algo).collect();
        if line.is_empty() {
            continue;
        }
        let path: Vec<String> = line
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(lx(p.m)), sy(ly(p.mean_test_error))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" "),
            c = colors[i]
        ));
        for p in &line {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{c}\"/>\n",
                sx(lx(p.m)),
                sy(ly(p.mean_test_error)),
                c = colors[i]
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" fill=\"{c}\">{algo}</text>\n",
            x = W - PAD - 70.0,
            y = PAD + 18.0 * i as f64,
            c = colors[i]
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Configuration of the margin-to-error spot check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckConfig {
    /// Target training margin.
    pub gamma: f64,
    /// VC budget used for the minimum sample size.
    pub d_proxy: f64,
    /// Grid points below `min_multiple · d_proxy / γ²` are not run.
    pub min_multiple: f64,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub features: usize,
    pub stumps: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl SpotCheckConfig {
    pub fn new(gamma: f64, m_grid: Vec<usize>, trials: usize, seed: u64) -> Self {
        SpotCheckConfig {
            gamma,
            d_proxy: 1.0,
            min_multiple: 1.0,
            m_grid,
            trials,
            delta: 0.1,
            features: 2,
            stumps: 1,
            test_size: 100_000,
            seed,
        }
    }
}

/// Spot-check results at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckRow {
    pub m: usize,
    pub trials: usize,
    /// Trials whose training margin reached `γ`.
    pub valid: usize,
    /// Valid trials with test error at most `1/200`.
    pub passed: usize,
    pub pass_fraction: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheckReport {
    pub config: SpotCheckConfig,
    pub rows: Vec<SpotCheckRow>,
    /// Smallest `m` whose pass fraction reaches `1 − δ`.
    pub threshold_m: Option<usize>,
}

pub const SPOT_CHECK_ERROR: f64 = 1.0 / 200.0;

/// Trains AdaBoost*ν to margin `γ` on fresh samples and records how often
/// the test error is at most `1/200`.
pub fn spot_check_theorem6(cfg: &SpotCheckConfig) -> Result<SpotCheckReport> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(Error::input(format!("gamma {} outside (0, 1]", cfg.gamma)));
    }
    if cfg.trials == 0 || cfg.m_grid.is_empty() || cfg.test_size == 0 {
        return Err(Error::input("trials, grid and test size must be nonempty"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::input("delta outside (0, 1)"));
    }
    // edge guarantee of the planted concept; the booster targets margin γ
    let edge = (2.0 * cfg.gamma).min(0.499);
    let nu = edge / 2.0;
    let booster = AdaBoostStar::new(edge, nu)?;
    let min_m = cfg.min_multiple * cfg.d_proxy / (cfg.gamma * cfg.gamma);
    let rows = cfg
        .m_grid
        .iter()
        .map(|&m| {
            if (m as f64) < min_m {
                return Ok(SpotCheckRow {
                    m,
                    trials: cfg.trials,
                    valid: 0,
                    passed: 0,
                    pass_fraction: None,
                    note: format!("m below {min_m:.1}; trials invalid"),
                });
            }
            let outcomes: Vec<Option<bool>> = (0..cfg.trials)
                .into_par_iter()
                .map(|r| -> Result<Option<bool>> {
                    let mut crng = stream(cfg.seed, "concept", &[r as u64]);
                    let floor = (2.0 * cfg.gamma).min(1.0);
                    let concept = SyntheticConcept::random(cfg.features, cfg.stumps, floor, &mut crng)?;
                    let train = gen_dataset(&concept, m, &mut stream(cfg.seed, "train", &[m as u64, r as u64]))?;
                    let test = gen_dataset(
                        &concept,
                        cfg.test_size,
                        &mut stream(cfg.seed, "test", &[m as u64, r as u64]),
                    )?;
                    let mut rng = stream(cfg.seed, "boost", &[m as u64, r as u64]);
                    let voter = match booster.run(&train, &StumpLearner, &mut rng) {
                        Ok(rep) if rep.min_margin >= cfg.gamma => rep.voter,
                        Ok(_) => return Ok(None),
                        Err(e) if e.is_contract_violation() => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    Ok(Some(zero_one_loss(&voter, &test)? <= SPOT_CHECK_ERROR))
                })
                .collect::<Result<_>>()?;
            let valid = outcomes.iter().flatten().count();
            let passed = outcomes.iter().flatten().filter(|&&p| p).count();
            Ok(SpotCheckRow {
                m,
                trials: cfg.trials,
                valid,
                passed,
                pass_fraction: (valid > 0).then(|| passed as f64 / valid as f64),
                note: if valid == 0 {
                    "margin target unreached; trials invalid".into()
                } else {
                    String::new()
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold_m = rows
        .iter()
        .find(|r| r.pass_fraction.is_some_and(|p| p >= 1.0 - cfg.delta))
        .map(|r| r.m);
    Ok(SpotCheckReport {
        config: cfg.clone(),
        rows,
        threshold_m,
    })
}

/// A voter over random tables on a one-point domain, for the pointwise
/// lemmas: `terms` tables with random signs at the point and random weights.
pub fn pointwise_fixture(terms: usize, seed: u64, index: u64) -> Result<VotingClassifier> {
    let mut rng = stream(seed, "pointwise", &[index]);
    VotingClassifier::new((0..terms).map(|_| {
        let s = if rng.random::<bool>() { Sign::Pos } else { Sign::Neg };
        (rng.random_range(0.1..1.0), Hypothesis::Table { signs: vec![s] })
    }))
}

/// A random-table voter on a `u`-point domain, with labels that agree with
/// its sign except on a `flip` fraction of points.
pub fn finite_fixture(u: usize, terms: usize, flip: f64, seed: u64, index: u64) -> Result<(VotingClassifier, Dataset)> {
    let mut rng = stream(seed, "finite", &[index]);
    let f = VotingClassifier::new((0..terms).map(|_| {
        let signs = (0..u)
            .map(|_| if rng.random::<bool>() { Sign::Pos } else { Sign::Neg })
            .collect();
        (rng.random_range(0.1..1.0), Hypothesis::Table { signs })
    }))?;
    let labels = (0..u)
        .map(|i| {
            let s = Sign::of(f.score_unchecked(crate::data::Point::Index(i)));
            if rng.random::<f64>() < flip {
                -s
            } else {
                s
            }
        })
        .collect();
    let data = Dataset::finite(u, (0..u).collect(), labels)?;
    Ok((f, data))
}

/// Seven equal-weight stumps on seven features at threshold 1/2, with
/// `|S| = m` points of margin at least 5/7, and AdaBoost*ν trained on them
/// (edge 0.49, `ν = 0.05`). The trained voter has margin well above 1/2.
pub fn margin_fixture(m: usize, seed: u64) -> Result<(VotingClassifier, Dataset)> {
    let planted = VotingClassifier::new(
        (0..7).map(|j| (1.0, Hypothesis::stump(j, 0.5, if j % 2 == 0 { Sign::Pos } else { Sign::Neg }))),
    )?;
    let concept = SyntheticConcept::new(planted, 5.0 / 7.0 - 1e-9, 7)?;
    let data = gen_dataset(&concept, m, &mut stream(seed, "margin_fixture", &[]))?;
    let mut rng = stream(seed, "margin_fixture_boost", &[]);
    let voter = AdaBoostStar::new(0.49, 0.05)?.run(&data, &StumpLearner, &mut rng)?.voter;
    Ok((voter, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stump_concept_has_full_margin() {
        let c = SyntheticConcept::new(
            VotingClassifier::single(Hypothesis::stump(0, 0.3, Sign::Pos)),
            1.0,
            2,
        )
        .unwrap();
        let d = gen_dataset(&c, 100, &mut stream(0, "d", &[])).unwrap();
        assert_eq!(c.planted.min_margin(&d).unwrap(), 1.0);
    }

    #[test]
    fn emitted_points_clear_the_floor() {
        let c = SyntheticConcept::random(8, 8, 0.2, &mut stream(1, "c", &[])).unwrap();
        let d = gen_dataset(&c, 256, &mut stream(1, "d", &[])).unwrap();
        assert_eq!(d.len(), 256);
        assert!(c.planted.min_margin(&d).unwrap() >= 0.2);
    }

    #[test]
    fn unreachable_floor_is_infeasible() {
        let planted = VotingClassifier::new([
            (0.6, Hypothesis::stump(0, 0.5, Sign::Pos)),
            (0.4, Hypothesis::stump(0, 0.5, Sign::Neg)),
        ])
        .unwrap();
        let c = SyntheticConcept::new(planted, 1.0, 1).unwrap();
        assert!(matches!(
            gen_dataset(&c, 10, &mut stream(2, "d", &[])),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(vec![64, 256], 1, vec![Algo::Adaboost], 0.1, 0);
        assert!(cfg.validate().is_ok());
        cfg.m_grid = vec![64, 64];
        assert!(cfg.validate().is_err());
        cfg.m_grid = vec![64];
        cfg.trials_per_m = 0;
        assert!(cfg.validate().is_err());
        let json = r#"{"m_grid":[16],"trials_per_m":2,"algos":["optimal"],"gamma":0.1,"seed":3}"#;
        let parsed: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(parsed.nu(), 0.1);
        assert_eq!(parsed.edge(), 0.2);
        cfg.trials_per_m = 1;
        cfg.gamma = 0.25;
        assert!(cfg.validate().is_err());
        assert_eq!(parsed.features, 3);
        assert!("nope".parse::<Algo>().is_err());
        assert_eq!("abstar".parse::<Algo>().unwrap(), Algo::Abstar);
    }

    #[test]
    fn one_cell_one_row_and_k_law() {
        let cfg = ExperimentConfig::new(vec![64], 1, vec![Algo::Adaboost], 0.1, 5);
        let rows = run_curve(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].status, "ok");
        assert_eq!(rows[0].wall_ms, None);
        let mut out = Vec::new();
        write_curve_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CURVE_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 2);

        let cfg = ExperimentConfig::new(vec![256], 1, vec![Algo::Optimal], 0.1, 5);
        let rows = run_curve(&cfg).unwrap();
        assert_eq!(rows[0].k_subsamples, 81);
        assert!(rows[0].min_margin.unwrap() >= 0.1);
    }

    #[test]
    fn series_and_slope() {
        assert!((log_log_slope(&[(10, 1.0), (100, 0.1), (1000, 0.01)]).unwrap() + 1.0).abs() < 1e-12);
        let row = |m, trial, e: Option<f64>| CurveRow {
            algo: Algo::Optimal,
            m,
            trial,
            seed: 0,
            train_error: e.map(|_| 0.0),
            test_error: e,
            min_margin: None,
            k_subsamples: 1,
            wall_ms: None,
            status: if e.is_some() { "ok".into() } else { "error".into() },
        };
        let s = curve_series(&[row(4, 0, Some(0.2)), row(4, 1, Some(0.4)), row(4, 2, None)], 0.25);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean_test_error - 0.3).abs() < 1e-12);
        assert_eq!((s[0].ok_trials, s[0].failed_trials, s[0].below_epsilon), (2, 1, false));
        let svg = series_svg(&s);
        assert!(svg.starts_with("<svg") && svg.contains("optimal"));
    }

    #[test]
    fn margin_fixture_clears_one_half() {
        let (f, s) = margin_fixture(200, 0).unwrap();
        assert_eq!(s.len(), 200);
        assert!(f.min_margin(&s).unwrap() >= 0.5);
    }

    #[test]
    fn spot_check_below_threshold_is_invalid() {
        let mut cfg = SpotCheckConfig::new(0.5, vec![2, 512], 2, 0);
        cfg.min_multiple = 16.0;
        cfg.test_size = 20_000;
        let r = spot_check_theorem6(&cfg).unwrap();
        assert_eq!(r.rows[0].valid, 0);
        assert!(r.rows[0].pass_fraction.is_none());
        assert_eq!(r.rows[1].valid, 2);
        assert_eq!(r.threshold_m, Some(512));
    }
}
