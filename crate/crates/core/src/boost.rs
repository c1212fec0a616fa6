//! AdaBoost and the margin-guaranteeing AdaBoost*ν.
//!
//! AdaBoost*ν keeps a running margin target `ρₜ = minᵣ≤ₜ γᵣ − ν`, where `γᵣ`
//! is the edge of the round-`r` hypothesis, and uses step sizes
//!
//! ```text
//! αₜ = ½ ln((1+γₜ)/(1−γₜ)) − ½ ln((1+ρₜ)/(1−ρₜ)).
//! ```
//!
//! After `T = ⌈2 ln m / ν²⌉` rounds the normalized combination `Σ αₜhₜ / Σ αₜ`
//! has margin at least `minₜ γₜ − ν` on every training sample. With a weak
//! learner that always delivers edge `γ` this is `γ − ν`, and `ν = γ/2` gives
//! the `γ/2` margins the sub-sampled learner relies on.

use rand::RngCore;

use crate::data::Dataset;
use crate::distribution::SampleDistribution;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::voter::VotingClassifier;
use crate::weak::{call_weak_learner, WeakLearner, WeakLearnerContract, DEFAULT_MAX_RETRIES};

/// Largest edge used in a step-size computation; keeps `αₜ` finite.
pub const EDGE_CLAMP: f64 = 1.0 - 1e-12;

/// Log-weights this far below the largest are treated as zero.
const LOG_WEIGHT_FLOOR: f64 = 650.0;

/// AdaBoost step size `½ ln((1−ε)/ε)` for weighted error `ε`.
pub fn adaboost_alpha(error: f64) -> f64 {
    0.5 * ((1.0 - error) / error).ln()
}

/// AdaBoost*ν step size for edge `γ` and margin target `ρ`.
pub fn star_alpha(edge: f64, rho: f64) -> f64 {
    let edge = edge.min(EDGE_CLAMP);
    0.5 * ((1.0 + edge) / (1.0 - edge)).ln() - 0.5 * ((1.0 + rho) / (1.0 - rho)).ln()
}

/// Number of AdaBoost*ν rounds, `⌈2 ln m / ν²⌉` (at least one).
pub fn star_rounds(m: usize, nu: f64) -> usize {
    let t = (2.0 * (m as f64).ln() / (nu * nu)).ceil();
    (t as usize).max(1)
}

/// Multiplicative weights with a log-space shadow for underflow recovery.
#[derive(Clone, Debug)]
struct Weights {
    dist: SampleDistribution,
    log: Vec<f64>,
}

impl Weights {
    fn uniform(n: usize) -> Result<Self> {
        Ok(Weights {
            dist: SampleDistribution::uniform(n)?,
            log: vec![0.0; n],
        })
    }

    /// `wᵢ ← wᵢ·exp(−α·aᵢ)`, renormalized. Weights that underflowed while
    /// their log-weight says they still matter are rebuilt from the logs.
    fn update(&mut self, agreements: &[i8], alpha: f64) {
        // black_box stops the optimizer from sinking exp into the loop
        let (down, up) = std::hint::black_box(((-alpha).exp(), alpha.exp()));
        let mut w = std::mem::replace(&mut self.dist, SampleDistribution::from_raw_unchecked(Vec::new()))
            .into_weights();
        let mut total = 0.0;
        let mut max_log = f64::NEG_INFINITY;
        for ((wi, li), &a) in w.iter_mut().zip(self.log.iter_mut()).zip(agreements) {
            *wi *= if a > 0 { down } else { up };
            *li -= alpha * f64::from(a);
            max_log = max_log.max(*li);
            total += *wi;
        }
        let mut lost = !(total.is_finite() && total > 0.0);
        for (wi, li) in w.iter_mut().zip(&self.log) {
            *wi /= total;
            lost |= *wi < f64::MIN_POSITIVE && li - max_log > -LOG_WEIGHT_FLOOR;
        }
        if lost {
            w.iter_mut()
                .zip(&self.log)
                .for_each(|(wi, li)| *wi = (li - max_log).exp());
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }
        self.dist = SampleDistribution::from_raw_unchecked(w);
    }
}

/// Progress of an AdaBoost*ν run after some number of rounds.
#[derive(Clone, Debug)]
pub struct BoostingState {
    weights: Weights,
    edges: Vec<f64>,
    min_edge: f64,
    rho: f64,
    alphas: Vec<f64>,
    hypotheses: Vec<Hypothesis>,
}

impl BoostingState {
    /// Uniform weights over `n` samples, no rounds yet.
    pub fn new(n: usize) -> Result<Self> {
        Ok(BoostingState {
            weights: Weights::uniform(n)?,
            edges: Vec::new(),
            min_edge: f64::INFINITY,
            rho: f64::NAN,
            alphas: Vec::new(),
            hypotheses: Vec::new(),
        })
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.alphas.len()
    }

    pub fn weights(&self) -> &SampleDistribution {
        &self.weights.dist
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Current margin target `ρₜ` (NaN before the first round).
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    /// One AdaBoost*ν step with a hypothesis whose agreements `yᵢ·h(xᵢ)` are known.
    pub fn advance(&mut self, h: Hypothesis, agreements: &[i8], nu: f64) -> Result<()> {
        if agreements.len() != self.weights.dist.len() {
            return Err(Error::input("agreements do not match the training set"));
        }
        if !(nu > 0.0) {
            return Err(Error::input(format!("nu must be positive, got {nu}")));
        }
        let edge = self.weights.dist.edge_of(agreements);
        let min_edge = self.min_edge.min(edge);
        let rho = min_edge - nu;
        if edge <= rho || rho <= -1.0 {
            return Err(Error::Precondition(format!(
                "edge {edge} does not exceed the margin target {rho}"
            )));
        }
        let alpha = star_alpha(edge, rho);
        self.weights.update(agreements, alpha);
        self.edges.push(edge);
        self.min_edge = min_edge;
        self.rho = rho;
        self.alphas.push(alpha);
        self.hypotheses.push(h);
        Ok(())
    }

    /// The normalized combination `Σ αₜhₜ / Σ αₜ`, repeated hypotheses merged.
    pub fn voter(&self) -> Result<VotingClassifier> {
        VotingClassifier::merged(self.alphas.iter().copied().zip(self.hypotheses.iter().cloned()))
    }
}

/// One AdaBoost*ν round on `data`: measures `h`'s edge under the state's
/// weights and returns the updated state.
pub fn boosting_round(
    mut state: BoostingState,
    h: &Hypothesis,
    data: &Dataset,
    nu: f64,
) -> Result<BoostingState> {
    let agreements = h.agreements(data)?;
    state.advance(h.clone(), &agreements, nu)?;
    Ok(state)
}

/// Result of a boosting run.
#[derive(Clone, Debug)]
pub struct BoostReport {
    pub voter: VotingClassifier,
    pub min_margin: f64,
    pub rounds: usize,
    pub min_edge: f64,
    pub weak_calls: usize,
}

/// AdaBoost*ν configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaBoostStar {
    pub gamma: f64,
    pub nu: f64,
    pub max_retries: usize,
}

impl AdaBoostStar {
    /// Requires `0 < nu ≤ gamma < 1/2`.
    pub fn new(gamma: f64, nu: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::input(format!("gamma {gamma} outside (0, 1/2)")));
        }
        if !(nu > 0.0 && nu <= gamma) {
            return Err(Error::input(format!("nu {nu} outside (0, gamma]")));
        }
        Ok(AdaBoostStar {
            gamma,
            nu,
            max_retries: DEFAULT_MAX_RETRIES,
        })
    }

    /// `ν = γ/2`, the margin-`γ/2` instantiation.
    pub fn with_default_nu(gamma: f64) -> Result<Self> {
        AdaBoostStar::new(gamma, gamma / 2.0)
    }

    pub fn max_retries(mut self, max_retries: usize) -> Self {
        self.max_retries = max_retries;
        self
    }

    /// Runs `⌈2 ln m / ν²⌉` rounds, or stops at the first hypothesis that is
    /// correct on every sample and returns it alone.
    pub fn run(
        &self,
        data: &Dataset,
        learner: &dyn WeakLearner,
        rng: &mut dyn RngCore,
    ) -> Result<BoostReport> {
        if data.is_empty() {
            return Err(Error::input("boosting on an empty dataset"));
        }
        let contract = WeakLearnerContract::new(self.gamma)?.with_retries(self.max_retries)?;
        let mut session = learner.bind(data)?;
        let rounds = star_rounds(data.len(), self.nu);
        let mut state = BoostingState::new(data.len())?;
        let mut weak_calls = 0;
        for _ in 0..rounds {
            let acc = call_weak_learner(session.as_mut(), data, state.weights(), &contract, rng)?;
            weak_calls += acc.attempts;
            if acc.agreements.iter().all(|&a| a > 0) {
                return Ok(BoostReport {
                    voter: VotingClassifier::single(acc.hypothesis),
                    min_margin: 1.0,
                    rounds: state.round() + 1,
                    min_edge: state.edges().iter().cloned().fold(acc.edge, f64::min),
                    weak_calls,
                });
            }
            state.advance(acc.hypothesis, &acc.agreements, self.nu)?;
        }
        let voter = state.voter()?;
        let min_margin = voter.min_margin(data)?;
        let required = self.gamma - self.nu;
        if min_margin < required {
            return Err(Error::MarginShortfall {
                achieved: min_margin,
                required,
            });
        }
        Ok(BoostReport {
            voter,
            min_margin,
            rounds,
            min_edge: state.edges().iter().cloned().fold(f64::INFINITY, f64::min),
            weak_calls,
        })
    }
}

/// AdaBoost*ν with edge guarantee `gamma` and slack `nu`; the output has
/// margin at least `gamma − nu` on every sample of `data`.
pub fn adaboost_star_nu(
    data: &Dataset,
    learner: &dyn WeakLearner,
    gamma: f64,
    nu: f64,
    rng: &mut dyn RngCore,
) -> Result<VotingClassifier> {
    Ok(AdaBoostStar::new(gamma, nu)?.run(data, learner, rng)?.voter)
}

/// Classic AdaBoost for `rounds` rounds with `αₜ = ½ ln((1−εₜ)/εₜ)`.
///
/// A round whose hypothesis has weighted error `≥ 1/2` aborts with
/// [`Error::NoAdvantage`]; a hypothesis correct on every sample is returned
/// alone.
pub fn adaboost(
    data: &Dataset,
    learner: &dyn WeakLearner,
    rounds: usize,
    rng: &mut dyn RngCore,
) -> Result<BoostReport> {
    if rounds == 0 {
        return Err(Error::input("adaboost needs at least one round"));
    }
    if data.is_empty() {
        return Err(Error::input("boosting on an empty dataset"));
    }
    let mut session = learner.bind(data)?;
    let mut weights = Weights::uniform(data.len())?;
    let mut terms = Vec::with_capacity(rounds);
    let mut min_edge = f64::INFINITY;
    for t in 0..rounds {
        let cand = session.fit(&weights.dist, rng)?;
        let agreements = cand.hypothesis.agreements(data)?;
        let edge = weights.dist.edge_of(&agreements);
        min_edge = min_edge.min(edge);
        if agreements.iter().all(|&a| a > 0) {
            return Ok(BoostReport {
                voter: VotingClassifier::single(cand.hypothesis),
                min_margin: 1.0,
                rounds: t + 1,
                min_edge,
                weak_calls: t + 1,
            });
        }
        let error = (1.0 - edge) / 2.0;
        if error >= 0.5 {
            return Err(Error::NoAdvantage { error });
        }
        let alpha = adaboost_alpha(error.max(1e-300));
        weights.update(&agreements, alpha);
        terms.push((alpha, cand.hypothesis));
    }
    let voter = VotingClassifier::merged(terms)?;
    let min_margin = voter.min_margin(data)?;
    Ok(BoostReport {
        voter,
        min_margin,
        rounds,
        min_edge,
        weak_calls: rounds,
    })
}
