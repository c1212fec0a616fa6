//! Weak-to-strong learning with the optimal sample complexity.
//!
//! The learner in [`optimal`] splits a training set of `m` samples into
//! `k = 3^⌊log₄ m⌋` overlapping subsets ([`subsample`]), runs AdaBoost*ν on
//! each ([`boost`]) so that every subset gets a voter with margin at least
//! `γ − ν`, and predicts with an unweighted majority over the voters' signs.
//!
//! The remaining modules support experiments around that learner:
//!
//! * [`subvote`] samples `t` terms of a voter and checks the tail and
//!   anti-concentration bounds for the resulting sub-sampled vote;
//! * [`hardness`] builds the small skewed instance on which every learner
//!   errs, and measures the Bayes error of the posterior majority;
//! * [`harness`] generates realizable stump-voter data and runs learning
//!   curves.
//!
//! ```
//! use w2s::data::{Dataset, Point, Sign};
//! use w2s::optimal::{train_optimal, OptimalLearnerConfig};
//!
//! let xs: Vec<f64> = (0..64).map(f64::from).collect();
//! let ys = xs.iter().map(|&x| Sign::of(x - 20.5)).collect();
//! let data = Dataset::dense(1, xs, ys)?;
//! let model = train_optimal(&data, &OptimalLearnerConfig::new(0.2, 7)?)?;
//! assert_eq!(model.len(), 27);
//! assert_eq!(model.predict(Point::Dense(&[30.0]))?.0, Sign::Pos);
//! # Ok::<(), w2s::Error>(())
//! ```

pub mod boost;
pub mod data;
pub mod distribution;
pub mod error;
pub mod hardness;
pub mod harness;
pub mod hypothesis;
pub mod model;
pub mod optimal;
pub mod rng;
pub mod subsample;
pub mod subvote;
pub mod voter;
pub mod weak;

pub use data::{Dataset, Point, Sign};
pub use error::{Error, Result};
pub use hypothesis::Hypothesis;
pub use voter::{Classifier, MajorityOfMajorities, VotingClassifier};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/voters.md")]
    mod voters {}
    #[doc = include_str!("../../../book/src/weak-learners.md")]
    mod weak_learners {}
    #[doc = include_str!("../../../book/src/boosting.md")]
    mod boosting {}
    #[doc = include_str!("../../../book/src/subsampling.md")]
    mod subsampling {}
    #[doc = include_str!("../../../book/src/majority.md")]
    mod majority {}
    #[doc = include_str!("../../../book/src/subvote.md")]
    mod subvote {}
    #[doc = include_str!("../../../book/src/hardness.md")]
    mod hardness {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
