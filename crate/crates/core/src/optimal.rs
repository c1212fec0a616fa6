//! The sample-optimal weak-to-strong learner.
//!
//! Runs AdaBoost*ν on each of the `k = 3^⌊log₄ m⌋` overlapping index sets
//! produced by [`crate::subsample::plan_for`] and returns the unweighted
//! majority vote over the signs of the resulting voting classifiers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::AdaBoostStar;
use crate::data::{Dataset, Point, Sign};
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::rng::stream;
use crate::subsample::plan_for;
use crate::voter::{MajorityOfMajorities, VotingClassifier};
use crate::weak::{ExhaustiveLearner, StumpLearner, WeakLearner};

/// Which weak learner to boost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    /// Best decision stump over all features and thresholds.
    Stump,
    /// Best hypothesis from a fixed list.
    Exhaustive { hypotheses: Vec<Hypothesis> },
}

impl LearnerSpec {
    pub fn build(&self) -> Result<Box<dyn WeakLearner>> {
        Ok(match self {
            LearnerSpec::Stump => Box::new(StumpLearner),
            LearnerSpec::Exhaustive { hypotheses } => {
                Box::new(ExhaustiveLearner::new(hypotheses.clone())?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalLearnerConfig {
    pub gamma: f64,
    pub nu: f64,
    pub learner: LearnerSpec,
    pub seed: u64,
    /// Train voters in parallel; output is identical either way.
    #[serde(default, skip_serializing)]
    pub parallel: bool,
}

impl OptimalLearnerConfig {
    /// `ν = γ/2`, stump learner, sequential.
    pub fn new(gamma: f64, seed: u64) -> Result<Self> {
        OptimalLearnerConfig {
            gamma,
            nu: gamma / 2.0,
            learner: LearnerSpec::Stump,
            seed,
            parallel: false,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        AdaBoostStar::new(self.gamma, self.nu)?;
        Ok(self)
    }
}

/// Output of [`train_optimal_detailed`].
#[derive(Clone, Debug)]
pub struct OptimalTraining {
    pub model: MajorityOfMajorities,
    /// `min_margin(fᵢ, Cᵢ)` for each voter, in plan order.
    pub voter_margins: Vec<f64>,
    /// Samples used after rounding down to a power of four.
    pub m_used: usize,
}

/// Trains the majority of majorities on `data`.
pub fn train_optimal(data: &Dataset, cfg: &OptimalLearnerConfig) -> Result<MajorityOfMajorities> {
    train_optimal_detailed(data, cfg).map(|t| t.model)
}

pub fn train_optimal_detailed(data: &Dataset, cfg: &OptimalLearnerConfig) -> Result<OptimalTraining> {
    if data.is_empty() {
        return Err(Error::input("cannot train on an empty dataset"));
    }
    let cfg = cfg.clone().validated()?;
    let booster = AdaBoostStar::new(cfg.gamma, cfg.nu)?;
    let learner = cfg.learner.build()?;
    let plan = plan_for(data.len())?;

    let train_one = |(i, set): (usize, &Vec<usize>)| -> Result<(VotingClassifier, f64)> {
        let wrap = |e: Error| Error::SubSample {
            index: i,
            source: Box::new(e),
        };
        let subset = data.subset(set).map_err(wrap)?;
        let mut rng = stream(cfg.seed, "voter", &[i as u64]);
        let report = booster.run(&subset, learner.as_ref(), &mut rng).map_err(wrap)?;
        let margin = report.voter.min_margin(&subset).map_err(wrap)?;
        if margin < cfg.gamma - cfg.nu {
            return Err(wrap(Error::MarginShortfall {
                achieved: margin,
                required: cfg.gamma - cfg.nu,
            }));
        }
        Ok((report.voter, margin))
    };

    let trained: Vec<(VotingClassifier, f64)> = if cfg.parallel {
        plan.index_sets
            .par_iter()
            .enumerate()
            .map(train_one)
            .collect::<Result<_>>()?
    } else {
        plan.index_sets
            .iter()
            .enumerate()
            .map(train_one)
            .collect::<Result<_>>()?
    };
    let (voters, voter_margins): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    Ok(OptimalTraining {
        model: MajorityOfMajorities::new(voters)?,
        voter_margins,
        m_used: plan.m_used,
    })
}

/// `(label, raw)` for the majority of majorities; see [`MajorityOfMajorities::predict`].
pub fn predict_majority(model: &MajorityOfMajorities, x: Point<'_>) -> Result<(Sign, i64)> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voter::zero_one_loss;

    fn signs(v: &[i8]) -> Vec<Sign> {
        v.iter().map(|&s| Sign::try_from(s).unwrap()).collect()
    }

    #[test]
    fn four_separable_points() {
        let data = Dataset::dense(1, vec![0.0, 3.0, 1.0, 2.0], signs(&[-1, 1, -1, 1])).unwrap();
        let cfg = OptimalLearnerConfig::new(0.2, 1).unwrap();
        let t = train_optimal_detailed(&data, &cfg).unwrap();
        assert_eq!(t.model.len(), 3);
        let plan = plan_for(4).unwrap();
        for (f, set) in t.model.voters().iter().zip(&plan.index_sets) {
            let sub = data.subset(set).unwrap();
            assert_eq!(zero_one_loss(f, &sub).unwrap(), 0.0);
        }
        assert_eq!(zero_one_loss(&t.model, &data).unwrap(), 0.0);
    }

    #[test]
    fn sixteen_samples_train_nine_voters() {
        let xs: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let ys: Vec<Sign> = (0..16).map(|i| if i % 5 < 2 { Sign::Neg } else { Sign::Pos }).collect();
        let data = Dataset::dense(1, xs, ys).unwrap();
        let cfg = OptimalLearnerConfig {
            gamma: 0.05,
            nu: 0.025,
            learner: LearnerSpec::Stump,
            seed: 3,
            parallel: false,
        };
        let t = train_optimal_detailed(&data, &cfg).unwrap();
        assert_eq!(t.model.len(), 9);
        assert!(t.voter_margins.iter().all(|&m| m >= 0.025));
    }

    #[test]
    fn single_label_gives_constant_majority() {
        let data = Dataset::dense(1, (0..20).map(f64::from).collect(), vec![Sign::Neg; 20]).unwrap();
        let model = train_optimal(&data, &OptimalLearnerConfig::new(0.1, 0).unwrap()).unwrap();
        assert_eq!(model.len(), 9);
        for x in [-100.0, 0.5, 1e9] {
            assert_eq!(predict_majority(&model, Point::Dense(&[x])).unwrap(), (Sign::Neg, -9));
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let xs: Vec<f64> = (0..64).map(|i| ((i * 37) % 64) as f64).collect();
        let ys = xs.iter().map(|&x| if x > 20.0 && x < 50.0 { Sign::Pos } else { Sign::Neg }).collect();
        let data = Dataset::dense(1, xs, ys).unwrap();
        let mut cfg = OptimalLearnerConfig::new(0.2, 9).unwrap();
        let a = train_optimal(&data, &cfg).unwrap();
        cfg.parallel = true;
        let b = train_optimal(&data, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn failures_name_the_sub_sample() {
        // a stump cannot reach edge 0.45 on alternating labels
        let xs: Vec<f64> = (0..16).map(f64::from).collect();
        let ys = (0..16).map(|i| if i % 2 == 0 { Sign::Pos } else { Sign::Neg }).collect();
        let data = Dataset::dense(1, xs, ys).unwrap();
        let cfg = OptimalLearnerConfig::new(0.45, 0).unwrap();
        match train_optimal(&data, &cfg) {
            Err(e @ Error::SubSample { index: 0, .. }) => assert!(e.is_contract_violation()),
            other => panic!("unexpected {other:?}"),
        }
        assert!(train_optimal(&Dataset::dense(1, vec![], vec![]).unwrap(), &cfg).is_err());
    }
}
