//! Trained models as written by `w2s train` and read by `w2s eval`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::{adaboost, star_rounds, AdaBoostStar};
use crate::data::{Dataset, Point, Sign, Space};
use crate::error::{Error, Result};
use crate::harness::Algo;
use crate::optimal::{train_optimal_detailed, LearnerSpec, OptimalLearnerConfig};
use crate::rng::stream;
use crate::voter::{Classifier, MajorityOfMajorities, VotingClassifier};
use crate::weak::StumpLearner;

/// Training parameters stored alongside the voters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Edge promised by the weak learner.
    pub gamma: f64,
    pub nu: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(gamma: f64, nu: f64, seed: u64) -> Result<Self> {
        AdaBoostStar::new(gamma, nu)?;
        Ok(ModelConfig { gamma, nu, seed })
    }
}

/// `{algo, config, voters}`. Boosting baselines have one voter and predict
/// with its sign; the sub-sampled learner takes the majority over all voters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub algo: Algo,
    pub config: ModelConfig,
    pub voters: Vec<VotingClassifier>,
}

/// A freshly trained model and the smallest per-voter training margin.
#[derive(Clone, Debug)]
pub struct Trained {
    pub model: Model,
    pub min_margin: f64,
}

/// Trains `algo` with decision stumps. Classic AdaBoost runs as many rounds
/// as AdaBoost*ν would.
pub fn train(algo: Algo, data: &Dataset, cfg: &ModelConfig) -> Result<Trained> {
    let mut rng = stream(cfg.seed, algo.name(), &[]);
    let (voters, min_margin) = match algo {
        Algo::Adaboost => {
            let r = adaboost(data, &StumpLearner, star_rounds(data.len(), cfg.nu), &mut rng)?;
            let margin = r.voter.min_margin(data)?;
            (vec![r.voter], margin)
        }
        Algo::Abstar => {
            let r = AdaBoostStar::new(cfg.gamma, cfg.nu)?.run(data, &StumpLearner, &mut rng)?;
            (vec![r.voter], r.min_margin)
        }
        Algo::Optimal => {
            let ocfg = OptimalLearnerConfig {
                gamma: cfg.gamma,
                nu: cfg.nu,
                learner: LearnerSpec::Stump,
                seed: cfg.seed,
                parallel: false,
            };
            let t = train_optimal_detailed(data, &ocfg)?;
            let margin = t.voter_margins.iter().copied().fold(f64::INFINITY, f64::min);
            (t.model.into(), margin)
        }
    };
    Ok(Trained {
        model: Model {
            algo,
            config: cfg.clone(),
            voters,
        },
        min_margin,
    })
}

impl Model {
    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Model = serde_json::from_str(&text)?;
        if model.voters.is_empty() {
            return Err(Error::input("model has no voters"));
        }
        if model.algo != Algo::Optimal && model.voters.len() != 1 {
            return Err(Error::input(format!("{} model must have exactly one voter", model.algo)));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// The majority of majorities for `optimal` models.
    pub fn majority(&self) -> Result<MajorityOfMajorities> {
        MajorityOfMajorities::new(self.voters.clone())
    }

    pub fn predict(&self, x: Point<'_>) -> Result<Sign> {
        self.score(x).map(Sign::of)
    }
}

impl Classifier for Model {
    fn check_space(&self, space: Space) -> Result<()> {
        self.voters.iter().try_for_each(|f| f.check_space(space))
    }

    fn score_unchecked(&self, x: Point<'_>) -> f64 {
        match self.algo {
            Algo::Optimal => self
                .voters
                .iter()
                .map(|f| Sign::of(f.score_unchecked(x)).as_f64())
                .sum(),
            _ => self.voters[0].score_unchecked(x),
        }
    }

    fn score(&self, x: Point<'_>) -> Result<f64> {
        for f in &self.voters {
            f.score(x)?;
        }
        Ok(self.score_unchecked(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voter::zero_one_loss;

    fn line(m: usize) -> Dataset {
        let xs: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let ys = xs.iter().map(|&x| Sign::of(x - 10.5)).collect();
        Dataset::dense(1, xs, ys).unwrap()
    }

    #[test]
    fn json_round_trip_keeps_predictions() {
        let data = line(20);
        let cfg = ModelConfig::new(0.2, 0.1, 4).unwrap();
        for algo in Algo::ALL {
            let t = train(algo, &data, &cfg).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            std::fs::write(&path, t.model.to_json().unwrap()).unwrap();
            let back = Model::from_json_path(&path).unwrap();
            assert_eq!(back, t.model);
            assert_eq!(zero_one_loss(&back, &data).unwrap(), 0.0);
        }
    }

    #[test]
    fn optimal_model_matches_majority() {
        let data = line(16);
        let t = train(Algo::Optimal, &data, &ModelConfig::new(0.2, 0.1, 0).unwrap()).unwrap();
        assert_eq!(t.model.voters.len(), 9);
        let maj = t.model.majority().unwrap();
        for x in [-3.0, 7.0, 10.5, 11.0, 40.0] {
            let p = Point::Dense(&[x]);
            assert_eq!(t.model.predict(p).unwrap(), maj.predict(p).unwrap().0);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, r#"{"algo":"abstar","config":{"gamma":0.2,"nu":0.1,"seed":0},"voters":[]}"#).unwrap();
        assert!(Model::from_json_path(&path).is_err());
        assert!(ModelConfig::new(0.6, 0.1, 0).is_err());
    }
}
