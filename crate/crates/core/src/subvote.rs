//! Random sparsified sub-voters and Monte-Carlo checks of the margin lemmas.
//!
//! A draw from `D_{f,t}` picks `t` hypotheses i.i.d. from the categorical
//! distribution given by `f`'s weights, keeps each with probability 1/2, and
//! returns the uniform average of the `t′` survivors. When nothing survives
//! the draw is the zero voter, which errs on every labeled point.
//!
//! Coins are flipped 64 at a time and only kept draws are sampled from the
//! alias table. Draws and coins are independent, so this has the same law as
//! drawing all `t` first and discarding afterwards.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point};
use crate::distribution::SampleDistribution;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::voter::{Classifier, VotingClassifier};

/// Parameters of a Monte-Carlo run over `D_{f,t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubVoteParams {
    pub t: usize,
    pub mu: f64,
    pub trials: usize,
    pub seed: u64,
}

impl SubVoteParams {
    pub fn new(t: usize, mu: f64, trials: usize, seed: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::input("t must be at least 1"));
        }
        if trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::input(format!("mu must be a finite nonnegative number, got {mu}")));
        }
        Ok(SubVoteParams { t, mu, trials, seed })
    }
}

/// Sampler for `D_{f,t}` over a fixed `f`.
#[derive(Clone, Debug)]
pub struct SubVoteSampler<'a> {
    f: &'a VotingClassifier,
    alias: WeightedAliasIndex<f64>,
}

impl<'a> SubVoteSampler<'a> {
    pub fn new(f: &'a VotingClassifier) -> Result<Self> {
        if f.is_zero() {
            return Err(Error::input("cannot sub-sample the zero voter"));
        }
        let weights = f.terms().iter().map(|t| t.weight).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::input(format!("bad voter weights: {e}")))?;
        Ok(SubVoteSampler { f, alias })
    }

    pub fn voter(&self) -> &VotingClassifier {
        self.f
    }

    /// Calls `keep` with the term index of every survivor; returns `t′`.
    fn draw<R: Rng + ?Sized>(&self, t: usize, rng: &mut R, mut keep: impl FnMut(usize)) -> usize {
        let mut kept = 0;
        let mut left = t;
        while left > 0 {
            let n = left.min(64);
            let mut coins = rng.next_u64();
            if n < 64 {
                coins &= (1u64 << n) - 1;
            }
            let c = coins.count_ones() as usize;
            for _ in 0..c {
                keep(self.alias.sample(rng));
            }
            kept += c;
            left -= n;
        }
        kept
    }

    /// One `g ∼ D_{f,t}`: survivors in draw order, each with weight `1/t′`.
    pub fn sample<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> VotingClassifier {
        let mut picked = Vec::new();
        self.draw(t, rng, |j| picked.push(j));
        if picked.is_empty() {
            return VotingClassifier::zero();
        }
        let terms = self.f.terms();
        VotingClassifier::new(picked.into_iter().map(|j| (1.0, terms[j].hypothesis.clone())))
            .expect("unit weights are valid")
    }

    /// `g(x)` for a fresh `g`, given `values[j] = hⱼ(x)` for every term of `f`.
    /// Returns `0` when `t′ = 0`.
    pub fn sample_at<R: Rng + ?Sized>(&self, values: &[f64], t: usize, rng: &mut R) -> f64 {
        let mut sum = 0.0;
        let kept = self.draw(t, rng, |j| sum += values[j]);
        if kept == 0 {
            0.0
        } else {
            sum / kept as f64
        }
    }

    /// Number of survivors `t′` of one draw, without sampling hypotheses.
    pub fn survivors<R: Rng + ?Sized>(t: usize, rng: &mut R) -> usize {
        let mut kept = 0;
        let mut left = t;
        while left > 0 {
            let n = left.min(64);
            let mut coins = rng.next_u64();
            if n < 64 {
                coins &= (1u64 << n) - 1;
            }
            kept += coins.count_ones() as usize;
            left -= n;
        }
        kept
    }

    fn term_values(&self, x: Point<'_>) -> Result<Vec<f64>> {
        self.f
            .terms()
            .iter()
            .map(|t| t.hypothesis.predict(x).map(|s| s.as_f64()))
            .collect()
    }
}

/// One `g ∼ D_{f,t}`.
pub fn sample_g<R: Rng + ?Sized>(f: &VotingClassifier, t: usize, rng: &mut R) -> Result<VotingClassifier> {
    Ok(SubVoteSampler::new(f)?.sample(t, rng))
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Frequency of `hits` in `trials` with binomial standard error.
fn binomial(hits: u64, trials: usize) -> Estimate {
    let p = hits as f64 / trials as f64;
    Estimate {
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
    }
}

/// Estimates `L^t(f) = Pr[y·g(x) ≤ 0]` over `(x, y)` drawn from `data`
/// (uniformly, or by `weights`) and `g ∼ D_{f,t}`.
///
/// Every sample gets `params.trials` fresh draws of `g`; the estimate is the
/// weighted mean of the per-sample error rates and the standard error is that
/// of the stratified estimator.
pub fn estimate_lt(
    f: &VotingClassifier,
    data: &Dataset,
    weights: Option<&SampleDistribution>,
    params: &SubVoteParams,
) -> Result<Estimate> {
    if params.trials < 2 {
        return Err(Error::input("estimating L^t needs at least 2 trials"));
    }
    if data.is_empty() {
        return Err(Error::input("estimating L^t on an empty dataset"));
    }
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::input(format!(
                "{} weights for {} samples",
                w.len(),
                data.len()
            )));
        }
    }
    f.check_space(data.space())?;
    let sampler = SubVoteSampler::new(f)?;
    let rows: Vec<Vec<f64>> = data
        .iter()
        .map(|s| {
            let y = s.label.as_f64();
            f.terms()
                .iter()
                .map(|t| y * t.hypothesis.predict_unchecked(s.point).as_f64())
                .collect()
        })
        .collect();
    let rates: Vec<f64> = rows
        .par_iter()
        .enumerate()
        .map(|(i, margins)| {
            let mut rng = stream(params.seed, "lt", &[i as u64]);
            let errors = (0..params.trials)
                .filter(|_| sampler.sample_at(margins, params.t, &mut rng) <= 0.0)
                .count();
            errors as f64 / params.trials as f64
        })
        .collect();
    let n = data.len() as f64;
    let weight = |i: usize| weights.map_or(1.0 / n, |w| w.weights()[i]);
    let estimate = rates.iter().enumerate().map(|(i, p)| weight(i) * p).sum();
    let variance: f64 = rates
        .iter()
        .enumerate()
        .map(|(i, p)| weight(i).powi(2) * p * (1.0 - p))
        .sum::<f64>()
        / params.trials as f64;
    Ok(Estimate {
        estimate,
        stderr: variance.sqrt(),
    })
}

/// Parameters recorded in a [`LemmaReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Outcome of one lemma check. `pass` is `empirical ≤ bound + 3·stderr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: u8,
    pub params: LemmaParams,
    pub empirical: f64,
    pub bound: f64,
    pub stderr: f64,
    pub pass: bool,
    /// The bound is at least 1, so the check says nothing.
    pub vacuous: bool,
}

impl LemmaReport {
    fn new(lemma: u8, params: LemmaParams, empirical: f64, bound: f64, stderr: f64) -> Self {
        LemmaReport {
            lemma,
            params,
            empirical,
            bound,
            stderr,
            pass: empirical <= bound + 3.0 * stderr,
            vacuous: bound >= 1.0,
        }
    }
}

/// Counts trials whose `g(x)` satisfies `hit`, one derived stream per trial.
fn count_pointwise(
    sampler: &SubVoteSampler<'_>,
    values: &[f64],
    params: &SubVoteParams,
    purpose: &str,
    hit: impl Fn(f64) -> bool + Sync,
) -> u64 {
    (0..params.trials as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(params.seed, purpose, &[r]);
            u64::from(hit(sampler.sample_at(values, params.t, &mut rng)))
        })
        .sum()
}

/// `5·exp(−μ²t/32)`.
pub fn lemma7_bound(mu: f64, t: usize) -> f64 {
    5.0 * (-mu * mu * t as f64 / 32.0).exp()
}

/// `2μ√t`.
pub fn lemma8_bound(mu: f64, t: usize) -> f64 {
    2.0 * mu * (t as f64).sqrt()
}

/// Smallest `t` covered by the margin-to-`L^t` lemma: `⌈1024/γ²⌉`.
pub fn lemma10_min_t(gamma: f64) -> usize {
    (1024.0 / (gamma * gamma) - 1e-9).ceil() as usize
}

/// The `L^t` bound for margin-`γ` voters.
pub const LEMMA10_BOUND: f64 = 1.0 / 1200.0;

/// Smallest `t` covered by the `L_D ≤ 3L^t` inequality.
pub const LEMMA9_MIN_T: usize = 36;

/// Frequency of `|f(x) − g(x)| ≥ μ` against `5e^{−μ²t/32}`.
pub fn verify_lemma7(f: &VotingClassifier, x: Point<'_>, params: &SubVoteParams) -> Result<LemmaReport> {
    if params.mu <= 0.0 {
        return Err(Error::input("mu must be positive"));
    }
    let sampler = SubVoteSampler::new(f)?;
    let values = sampler.term_values(x)?;
    let fx = f.evaluate(x)?;
    let hits = count_pointwise(&sampler, &values, params, "lemma7", |g| (fx - g).abs() >= params.mu);
    let est = binomial(hits, params.trials);
    Ok(LemmaReport::new(
        7,
        LemmaParams {
            t: params.t,
            mu: Some(params.mu),
            gamma: None,
            trials: params.trials,
            seed: params.seed,
        },
        est.estimate,
        lemma7_bound(params.mu, params.t),
        est.stderr,
    ))
}

/// Frequency of `|g(x)| ≤ μ` against `2μ√t`. Requires `μ ≥ 1/t`.
pub fn verify_lemma8(f: &VotingClassifier, x: Point<'_>, params: &SubVoteParams) -> Result<LemmaReport> {
    if params.mu * (params.t as f64) < 1.0 {
        return Err(Error::input(format!(
            "mu = {} is below 1/t = {}",
            params.mu,
            1.0 / params.t as f64
        )));
    }
    let sampler = SubVoteSampler::new(f)?;
    let values = sampler.term_values(x)?;
    let hits = count_pointwise(&sampler, &values, params, "lemma8", |g| g.abs() <= params.mu);
    let est = binomial(hits, params.trials);
    Ok(LemmaReport::new(
        8,
        LemmaParams {
            t: params.t,
            mu: Some(params.mu),
            gamma: None,
            trials: params.trials,
            seed: params.seed,
        },
        est.estimate,
        lemma8_bound(params.mu, params.t),
        est.stderr,
    ))
}

/// Exact `L_D(f)` against `3·L^t_D(f)` on a finite distribution.
///
/// The report's `bound` is `3·estimate` and its `stderr` is `3·stderr` of the
/// estimate, so `pass` reads `L_D(f) ≤ 3·(estimate + 3·stderr)`.
pub fn verify_lemma9(
    f: &VotingClassifier,
    data: &Dataset,
    weights: Option<&SampleDistribution>,
    params: &SubVoteParams,
) -> Result<LemmaReport> {
    if params.t < LEMMA9_MIN_T {
        return Err(Error::input(format!("t = {} is below {LEMMA9_MIN_T}", params.t)));
    }
    let est = estimate_lt(f, data, weights, params)?;
    let margins = f.margins(data)?;
    let n = data.len() as f64;
    let exact = margins
        .iter()
        .enumerate()
        .filter(|(_, &m)| m <= 0.0)
        .map(|(i, _)| weights.map_or(1.0 / n, |w| w.weights()[i]))
        .sum();
    Ok(LemmaReport::new(
        9,
        LemmaParams {
            t: params.t,
            mu: None,
            gamma: None,
            trials: params.trials,
            seed: params.seed,
        },
        exact,
        3.0 * est.estimate,
        3.0 * est.stderr,
    ))
}

/// `L^t_S(f)` against `1/1200` for `f` with margin at least `γ` on all of `S`
/// and `t ≥ 1024γ⁻²`.
pub fn verify_lemma10(
    f: &VotingClassifier,
    data: &Dataset,
    gamma: f64,
    params: &SubVoteParams,
) -> Result<LemmaReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::input(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if params.t < lemma10_min_t(gamma) {
        return Err(Error::input(format!(
            "t = {} is below 1024/gamma^2 = {}",
            params.t,
            lemma10_min_t(gamma)
        )));
    }
    let margin = f.min_margin(data)?;
    if margin < gamma {
        return Err(Error::input(format!("voter has min margin {margin} < gamma = {gamma}")));
    }
    let est = estimate_lt(f, data, None, params)?;
    Ok(LemmaReport::new(
        10,
        LemmaParams {
            t: params.t,
            mu: None,
            gamma: Some(gamma),
            trials: params.trials,
            seed: params.seed,
        },
        est.estimate,
        LEMMA10_BOUND,
        est.stderr,
    ))
}

/// Exact check of `C(t, ⌊t/2⌋)²·t ≤ 4ᵗ`, i.e. `C(t, ⌊t/2⌋)·2⁻ᵗ ≤ 1/√t`.
/// Valid for `t ≤ 64`.
pub fn central_binomial_bound_holds(t: u32) -> Result<bool> {
    if t == 0 || t > 64 {
        return Err(Error::input(format!("t = {t} outside 1..=64")));
    }
    let k = u128::from(t / 2);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (u128::from(t) - i) / (i + 1);
    }
    // 4⁶⁴ = 2¹²⁸ exceeds u128, but so does anything that fails to fit
    Ok(match c.checked_mul(c).and_then(|v| v.checked_mul(u128::from(t))) {
        Some(v) => t == 64 || v <= 1u128 << (2 * t),
        None => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sign;
    use crate::hypothesis::Hypothesis;
    use crate::rng::stream;

    fn table(signs: &[i8]) -> Hypothesis {
        Hypothesis::Table {
            signs: signs.iter().map(|&s| Sign::try_from(s).unwrap()).collect(),
        }
    }

    #[test]
    fn t_one_is_the_drawn_hypothesis_or_zero() {
        let f = VotingClassifier::new([(0.5, table(&[1])), (0.5, table(&[-1]))]).unwrap();
        let s = SubVoteSampler::new(&f).unwrap();
        let mut rng = stream(1, "t", &[]);
        let mut zeros = 0;
        for _ in 0..4000 {
            let g = s.sample(1, &mut rng);
            match g.len() {
                0 => zeros += 1,
                1 => assert_eq!(g.terms()[0].weight, 1.0),
                n => panic!("{n} terms"),
            }
        }
        assert!((zeros as f64 / 4000.0 - 0.5).abs() < 4.0 * (0.25f64 / 4000.0).sqrt());
    }

    #[test]
    fn single_hypothesis_voter_is_h_or_zero() {
        let h = table(&[1, -1, 1]);
        let f = VotingClassifier::single(h.clone());
        let mut rng = stream(2, "t", &[]);
        for t in [1, 5, 70] {
            let g = sample_g(&f, t, &mut rng).unwrap();
            assert!(g.is_zero() || g.terms().iter().all(|term| term.hypothesis == h));
        }
    }

    #[test]
    fn mean_survivors_is_half_t() {
        let mut rng = stream(3, "t", &[]);
        let n = 100_000;
        let total: usize = (0..n).map(|_| SubVoteSampler::survivors(100, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 50.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn survivor_weights_are_uniform() {
        let f = VotingClassifier::new([(0.7, table(&[1])), (0.3, table(&[-1]))]).unwrap();
        let mut rng = stream(4, "t", &[]);
        for _ in 0..50 {
            let g = sample_g(&f, 40, &mut rng).unwrap();
            if !g.is_zero() {
                let w = 1.0 / g.len() as f64;
                assert!(g.terms().iter().all(|t| t.weight == w));
            }
        }
    }

    #[test]
    fn sample_at_matches_sample() {
        let f = VotingClassifier::new([
            (0.2, table(&[1, -1])),
            (0.5, table(&[-1, -1])),
            (0.3, table(&[1, 1])),
        ])
        .unwrap();
        let s = SubVoteSampler::new(&f).unwrap();
        let values = s.term_values(Point::Index(0)).unwrap();
        for seed in 0..30 {
            let g = s.sample(17, &mut stream(seed, "x", &[]));
            let direct = g.score_unchecked(Point::Index(0));
            let fast = s.sample_at(&values, 17, &mut stream(seed, "x", &[]));
            assert!((direct - fast).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_of_g_tracks_f() {
        let f = VotingClassifier::new((0..10).map(|j| {
            (1.0 + j as f64, table(&[if j % 3 == 0 { -1 } else { 1 }]))
        }))
        .unwrap();
        let fx = f.evaluate(Point::Index(0)).unwrap();
        let s = SubVoteSampler::new(&f).unwrap();
        let values = s.term_values(Point::Index(0)).unwrap();
        let mut rng = stream(5, "t", &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| s.sample_at(&values, 64, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - fx).abs() <= 5.0 * (var / n as f64).sqrt(), "{mean} vs {fx}");
    }

    #[test]
    fn correct_hypothesis_errs_only_when_nothing_survives() {
        let data = Dataset::finite(2, vec![0, 1], vec![Sign::Pos, Sign::Neg]).unwrap();
        let f = VotingClassifier::single(table(&[1, -1]));
        let params = SubVoteParams::new(20, 0.0, 100_000, 6).unwrap();
        let est = estimate_lt(&f, &data, None, &params).unwrap();
        assert!(est.estimate <= 1e-4, "{est:?}");
    }

    #[test]
    fn zero_score_point_errs_at_least_half_the_time() {
        let data = Dataset::finite(1, vec![0], vec![Sign::Pos]).unwrap();
        let f = VotingClassifier::new([(0.5, table(&[1])), (0.5, table(&[-1]))]).unwrap();
        let params = SubVoteParams::new(2, 0.0, 20_000, 7).unwrap();
        let est = estimate_lt(&f, &data, None, &params).unwrap();
        // exact: t′=0 w.p. 1/4, t′=1 errs w.p. 1/2, t′=2 errs w.p. 3/4 → 1/4 + 1/4 + 3/16
        let exact = 0.25 + 0.5 * 0.5 + 0.25 * 0.75;
        assert!((est.estimate - exact).abs() < 4.0 * est.stderr);
        assert!(est.estimate >= 0.5);
    }

    #[test]
    fn reports_are_reproducible_and_parallel_safe() {
        let f = VotingClassifier::new((0..16).map(|j| (1.0, table(&[if j < 9 { 1 } else { -1 }])))).unwrap();
        let p = SubVoteParams::new(400, 1.0 / 400.0, 5000, 11).unwrap();
        let a = verify_lemma8(&f, Point::Index(0), &p).unwrap();
        let b = verify_lemma8(&f, Point::Index(0), &p).unwrap();
        assert_eq!(a, b);
        assert!((a.bound - 0.1).abs() < 1e-12);
        assert!(a.pass);
    }

    #[test]
    fn range_errors() {
        let f = VotingClassifier::single(table(&[1]));
        let x = Point::Index(0);
        assert!(verify_lemma8(&f, x, &SubVoteParams::new(400, 0.001, 10, 0).unwrap()).is_err());
        let data = Dataset::finite(1, vec![0], vec![Sign::Pos]).unwrap();
        assert!(verify_lemma9(&f, &data, None, &SubVoteParams::new(35, 0.0, 10, 0).unwrap()).is_err());
        assert!(verify_lemma10(&f, &data, 0.5, &SubVoteParams::new(4095, 0.0, 10, 0).unwrap()).is_err());
        assert!(verify_lemma7(&f, x, &SubVoteParams::new(10, 0.0, 10, 0).unwrap()).is_err());
        assert!(SubVoteParams::new(0, 0.1, 10, 0).is_err());
        assert!(sample_g(&VotingClassifier::zero(), 3, &mut stream(0, "x", &[])).is_err());
    }

    #[test]
    fn vacuous_and_impossible_deviations() {
        let f = VotingClassifier::new([(0.5, table(&[1])), (0.5, table(&[1]))]).unwrap();
        let r = verify_lemma7(&f, Point::Index(0), &SubVoteParams::new(32, 1.0, 1000, 0).unwrap()).unwrap();
        assert!(r.vacuous && r.pass);
        assert!((r.bound - 5.0 / std::f64::consts::E).abs() < 1e-12);
        let r = verify_lemma7(&f, Point::Index(0), &SubVoteParams::new(10, 2.0, 1000, 0).unwrap()).unwrap();
        assert_eq!(r.empirical, 0.0);
    }

    #[test]
    fn central_binomial_bound() {
        for t in 1..=64 {
            assert!(central_binomial_bound_holds(t).unwrap(), "t = {t}");
        }
        assert!(central_binomial_bound_holds(0).is_err());
        assert_eq!(lemma10_min_t(0.5), 4096);
    }
}
