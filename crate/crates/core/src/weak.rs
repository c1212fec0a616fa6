//! Weak learners and the γ-weak-learner contract.
//!
//! Quality is measured by the *edge* `Σᵢ wᵢ·yᵢ·h(xᵢ) = 1 − 2·(weighted error)`.
//! A learner is first bound to a training set (so it can precompute sort
//! orders or prediction tables) and then fitted repeatedly against changing
//! weights.

use rand::RngCore;

use crate::data::{Dataset, Sign, Space};
use crate::distribution::SampleDistribution;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;

/// Default retry budget; with `δ₀ ≤ 1/2` the chance of exhausting it is `2⁻⁶⁴`.
pub const DEFAULT_MAX_RETRIES: usize = 64;

/// Parameters of a γ-weak learner: advantage `gamma`, failure probability
/// `delta0` and sample requirement `m0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakLearnerContract {
    pub gamma: f64,
    pub delta0: f64,
    pub m0: usize,
    pub max_retries: usize,
}

impl WeakLearnerContract {
    pub fn new(gamma: f64) -> Result<Self> {
        WeakLearnerContract {
            gamma,
            delta0: 0.0,
            m0: 1,
            max_retries: DEFAULT_MAX_RETRIES,
        }
        .validated()
    }

    pub fn with_retries(mut self, max_retries: usize) -> Result<Self> {
        self.max_retries = max_retries;
        self.validated()
    }

    pub fn with_delta0(mut self, delta0: f64) -> Result<Self> {
        self.delta0 = delta0;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::input(format!("gamma {} outside (0, 1/2)", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.delta0) {
            return Err(Error::input(format!("delta0 {} outside [0, 1)", self.delta0)));
        }
        if self.max_retries == 0 {
            return Err(Error::input("max_retries must be positive"));
        }
        Ok(self)
    }
}

/// A hypothesis returned by a weak learner together with the edge it reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub hypothesis: Hypothesis,
    pub edge: f64,
}

/// A weak learning algorithm over some base hypothesis class.
pub trait WeakLearner: Sync {
    /// Prepares the learner for repeated fits on `data`.
    fn bind<'a>(&'a self, data: &'a Dataset) -> Result<Box<dyn WeakSession + 'a>>;
}

/// A weak learner bound to one training set.
pub trait WeakSession {
    /// Returns a hypothesis for the weighting `w` of the bound samples.
    /// Randomized learners draw from `rng`.
    fn fit(&mut self, w: &SampleDistribution, rng: &mut dyn RngCore) -> Result<Candidate>;
}

/// A hypothesis that passed the contract check, with its measured agreements
/// `yᵢ·h(xᵢ)` on the training set.
#[derive(Clone, Debug)]
pub struct Accepted {
    pub hypothesis: Hypothesis,
    pub edge: f64,
    pub agreements: Vec<i8>,
    pub attempts: usize,
}

/// Calls the learner until the returned hypothesis has measured edge
/// `≥ contract.gamma` under `w`, at most `contract.max_retries` times.
///
/// The edge is recomputed from the training data rather than trusted.
pub fn call_weak_learner(
    session: &mut dyn WeakSession,
    data: &Dataset,
    w: &SampleDistribution,
    contract: &WeakLearnerContract,
    rng: &mut dyn RngCore,
) -> Result<Accepted> {
    if w.len() != data.len() {
        return Err(Error::input("weights do not match the training set"));
    }
    let mut best_edge = f64::NEG_INFINITY;
    for attempt in 1..=contract.max_retries {
        let candidate = session.fit(w, rng)?;
        let agreements = candidate.hypothesis.agreements(data)?;
        let edge = w.edge_of(&agreements);
        if edge >= contract.gamma {
            return Ok(Accepted {
                hypothesis: candidate.hypothesis,
                edge,
                agreements,
                attempts: attempt,
            });
        }
        best_edge = best_edge.max(edge);
    }
    Err(Error::Contract {
        attempts: contract.max_retries,
        best_edge,
        required: contract.gamma,
    })
}

/// Decision stumps over every feature, with thresholds at midpoints between
/// consecutive distinct values plus `±∞`, both polarities.
#[derive(Clone, Copy, Debug, Default)]
pub struct StumpLearner;

struct SortedFeature {
    order: Vec<u32>,
    values: Vec<f64>,
}

struct StumpSession<'a> {
    data: &'a Dataset,
    features: Vec<SortedFeature>,
    signed: Vec<f64>,
}

impl WeakLearner for StumpLearner {
    fn bind<'a>(&'a self, data: &'a Dataset) -> Result<Box<dyn WeakSession + 'a>> {
        Ok(Box::new(StumpSession::new(data)?))
    }
}

impl<'a> StumpSession<'a> {
    fn new(data: &'a Dataset) -> Result<Self> {
        let Space::Dense(dim) = data.space() else {
            return Err(Error::input("stumps need dense real features"));
        };
        if data.is_empty() {
            return Err(Error::input("cannot train a stump on an empty dataset"));
        }
        let features = (0..dim)
            .map(|f| {
                let column = data.feature_column(f).expect("feature in range");
                let mut order: Vec<u32> = (0..data.len() as u32).collect();
                order.sort_by(|&a, &b| column[a as usize].total_cmp(&column[b as usize]));
                let values = order.iter().map(|&i| column[i as usize]).collect();
                SortedFeature { order, values }
            })
            .collect();
        Ok(StumpSession {
            data,
            features,
            signed: vec![0.0; data.len()],
        })
    }

    fn best(&mut self, w: &SampleDistribution) -> Result<Candidate> {
        if w.len() != self.data.len() {
            return Err(Error::input("weights do not match the training set"));
        }
        for ((s, &wi), y) in self.signed.iter_mut().zip(w.weights()).zip(self.data.labels()) {
            *s = wi * y.as_f64();
        }
        let total: f64 = self.signed.iter().sum();

        // (edge, feature, cut, polarity) where cut k splits the sorted values
        // after position k − 1 (0 and n are the infinite thresholds). Strict
        // improvement keeps the lowest feature, then lowest threshold, then
        // polarity +1.
        let mut best = (f64::NEG_INFINITY, 0usize, 0usize, Sign::Pos);
        for (f, feat) in self.features.iter().enumerate() {
            let n = feat.values.len();
            // edge of polarity +1 is (mass above) − (mass below) = total − 2·below
            let mut consider = |edge: f64, k: usize| {
                if edge > best.0 {
                    best = (edge, f, k, Sign::Pos);
                }
                if -edge > best.0 {
                    best = (-edge, f, k, Sign::Neg);
                }
            };
            consider(total, 0);
            let mut below = 0.0;
            for k in 1..n {
                below += self.signed[feat.order[k - 1] as usize];
                if feat.values[k - 1] < feat.values[k] {
                    consider(total - 2.0 * below, k);
                }
            }
            consider(-total, n);
        }
        let (edge, feature, cut, polarity) = best;
        let values = &self.features[feature].values;
        let threshold = if cut == 0 {
            f64::NEG_INFINITY
        } else if cut == values.len() {
            f64::INFINITY
        } else {
            let (lo, hi) = (values[cut - 1], values[cut]);
            let mid = lo + (hi - lo) / 2.0;
            if mid >= hi {
                lo
            } else {
                mid
            }
        };
        Ok(Candidate {
            hypothesis: Hypothesis::stump(feature, threshold, polarity),
            edge,
        })
    }
}

impl WeakSession for StumpSession<'_> {
    fn fit(&mut self, w: &SampleDistribution, _rng: &mut dyn RngCore) -> Result<Candidate> {
        self.best(w)
    }
}

/// Best stump for `(data, w)`; see [`StumpLearner`].
pub fn train_stump(data: &Dataset, w: &SampleDistribution) -> Result<Candidate> {
    StumpSession::new(data)?.best(w)
}

/// Picks the best hypothesis from a fixed finite list.
#[derive(Clone, Debug)]
pub struct ExhaustiveLearner {
    hypotheses: Vec<Hypothesis>,
}

impl ExhaustiveLearner {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::input("exhaustive learner over an empty hypothesis set"));
        }
        Ok(ExhaustiveLearner { hypotheses })
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }
}

struct ExhaustiveSession<'a> {
    hypotheses: &'a [Hypothesis],
    agreements: Vec<Vec<i8>>,
}

impl WeakLearner for ExhaustiveLearner {
    fn bind<'a>(&'a self, data: &'a Dataset) -> Result<Box<dyn WeakSession + 'a>> {
        Ok(Box::new(ExhaustiveSession::new(&self.hypotheses, data)?))
    }
}

impl<'a> ExhaustiveSession<'a> {
    fn new(hypotheses: &'a [Hypothesis], data: &Dataset) -> Result<Self> {
        if hypotheses.is_empty() {
            return Err(Error::input("exhaustive learner over an empty hypothesis set"));
        }
        let agreements = hypotheses
            .iter()
            .map(|h| h.agreements(data))
            .collect::<Result<_>>()?;
        Ok(ExhaustiveSession {
            hypotheses,
            agreements,
        })
    }

    fn best(&self, w: &SampleDistribution) -> Result<Candidate> {
        if self.agreements.first().is_some_and(|a| a.len() != w.len()) {
            return Err(Error::input("weights do not match the training set"));
        }
        let (mut best_j, mut best_edge) = (0, f64::NEG_INFINITY);
        for (j, a) in self.agreements.iter().enumerate() {
            let edge = w.edge_of(a);
            if edge > best_edge {
                best_j = j;
                best_edge = edge;
            }
        }
        Ok(Candidate {
            hypothesis: self.hypotheses[best_j].clone(),
            edge: best_edge,
        })
    }
}

impl WeakSession for ExhaustiveSession<'_> {
    fn fit(&mut self, w: &SampleDistribution, _rng: &mut dyn RngCore) -> Result<Candidate> {
        self.best(w)
    }
}

/// `argmax_{h ∈ H} Σᵢ wᵢ yᵢ h(xᵢ)`, ties to the lowest index.
pub fn train_exhaustive(
    hypotheses: &[Hypothesis],
    data: &Dataset,
    w: &SampleDistribution,
) -> Result<Candidate> {
    ExhaustiveSession::new(hypotheses, data)?.best(w)
}
