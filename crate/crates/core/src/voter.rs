//! Voting classifiers, margins and losses.
//!
//! A [`VotingClassifier`] is a convex combination `f = Σ wᵢ hᵢ` of base
//! hypotheses and evaluates to a real number in `[-1, 1]`. Its margin on a
//! labelled sample `(x, y)` is `y·f(x)`. A [`MajorityOfMajorities`] takes an
//! unweighted vote over the signs of several voting classifiers.
//!
//! Zero scores: when computing losses, a raw score of exactly `0` counts as an
//! error (`y·g(x) ≤ 0`). When a hard label must be produced, `sign(0) = +1`.

use std::collections::hash_map::{Entry, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledSample, Point, Sign, Space};
use crate::distribution::MASS_TOLERANCE;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;

/// Anything that produces a real-valued score whose sign is the prediction.
pub trait Classifier {
    fn check_space(&self, space: Space) -> Result<()>;

    /// Raw score for a point already known to be compatible.
    fn score_unchecked(&self, x: Point<'_>) -> f64;

    /// Raw score, checking that `x` has a compatible representation.
    fn score(&self, x: Point<'_>) -> Result<f64>;

    /// Hard label with `sign(0) = +1`.
    fn predict_label(&self, x: Point<'_>) -> Result<Sign> {
        self.score(x).map(Sign::of)
    }
}

impl Classifier for Hypothesis {
    fn check_space(&self, space: Space) -> Result<()> {
        Hypothesis::check_space(self, space)
    }

    fn score_unchecked(&self, x: Point<'_>) -> f64 {
        self.predict_unchecked(x).as_f64()
    }

    fn score(&self, x: Point<'_>) -> Result<f64> {
        self.predict(x).map(Sign::as_f64)
    }
}

/// Fraction of samples on which `y·score(x) ≤ 0`.
pub fn zero_one_loss<C: Classifier + ?Sized>(c: &C, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::input("loss on an empty dataset"));
    }
    c.check_space(data.space())?;
    let errors = data
        .iter()
        .filter(|s| s.label.as_f64() * c.score_unchecked(s.point) <= 0.0)
        .count();
    Ok(errors as f64 / data.len() as f64)
}

/// Hashable identity of a hypothesis; `-0.0` and `0.0` thresholds coincide.
#[derive(PartialEq, Eq, Hash)]
enum MergeKey {
    Stump(usize, u64, i8),
    Table(Vec<i8>),
    Constant(i8),
}

impl MergeKey {
    fn of(h: &Hypothesis) -> MergeKey {
        match h {
            Hypothesis::Stump {
                feature,
                threshold,
                polarity,
            } => MergeKey::Stump(*feature, (threshold + 0.0).to_bits(), polarity.value()),
            Hypothesis::Table { signs } => MergeKey::Table(signs.iter().map(|s| s.value()).collect()),
            Hypothesis::Constant { sign } => MergeKey::Constant(sign.value()),
        }
    }
}

/// One weighted term of a voting classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    pub hypothesis: Hypothesis,
}

/// A convex combination of hypotheses. Weights are positive and sum to one;
/// the empty combination is the zero voter, which scores `0` everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct VotingClassifier {
    terms: Vec<Term>,
}

impl VotingClassifier {
    /// Builds `Σ wᵢ hᵢ / Σ wᵢ` from positive weights.
    pub fn new(terms: impl IntoIterator<Item = (f64, Hypothesis)>) -> Result<Self> {
        let mut terms: Vec<Term> = terms
            .into_iter()
            .map(|(weight, hypothesis)| Term { weight, hypothesis })
            .collect();
        if terms.is_empty() {
            return Err(Error::input("voting classifier needs at least one term"));
        }
        if let Some(t) = terms.iter().find(|t| !(t.weight > 0.0 && t.weight.is_finite())) {
            return Err(Error::input(format!("non-positive voter weight {}", t.weight)));
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        terms.iter_mut().for_each(|t| t.weight /= total);
        Ok(VotingClassifier { terms })
    }

    /// Like [`VotingClassifier::new`] but merges repeated hypotheses into one
    /// term (first occurrence order).
    pub fn merged(terms: impl IntoIterator<Item = (f64, Hypothesis)>) -> Result<Self> {
        let mut out: Vec<(f64, Hypothesis)> = Vec::new();
        let mut slot: HashMap<MergeKey, usize> = HashMap::new();
        for (w, h) in terms {
            match slot.entry(MergeKey::of(&h)) {
                Entry::Occupied(e) => out[*e.get()].0 += w,
                Entry::Vacant(e) => {
                    e.insert(out.len());
                    out.push((w, h));
                }
            }
        }
        VotingClassifier::new(out)
    }

    pub fn single(h: Hypothesis) -> Self {
        VotingClassifier {
            terms: vec![Term {
                weight: 1.0,
                hypothesis: h,
            }],
        }
    }

    /// The canonical zero voter.
    pub fn zero() -> Self {
        VotingClassifier { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `f(x) = Σ wᵢ hᵢ(x)`, clamped into `[-1, 1]` against rounding.
    pub fn evaluate(&self, x: Point<'_>) -> Result<f64> {
        for t in &self.terms {
            t.hypothesis.predict(x)?;
        }
        Ok(self.score_unchecked(x))
    }

    /// Margin `y·f(x)`.
    pub fn margin(&self, s: LabeledSample<'_>) -> Result<f64> {
        Ok(s.label.as_f64() * self.evaluate(s.point)?)
    }

    /// `f(xᵢ)` for every sample.
    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_space(data.space())?;
        Ok(data.iter().map(|s| self.score_unchecked(s.point)).collect())
    }

    /// Margins `yᵢ·f(xᵢ)` for every sample.
    pub fn margins(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.check_space(data.space())?;
        Ok(data
            .iter()
            .map(|s| s.label.as_f64() * self.score_unchecked(s.point))
            .collect())
    }

    /// Smallest margin over a nonempty dataset.
    pub fn min_margin(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::input("min margin of an empty dataset"));
        }
        Ok(self
            .margins(data)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }
}

impl Classifier for VotingClassifier {
    fn check_space(&self, space: Space) -> Result<()> {
        self.terms
            .iter()
            .try_for_each(|t| t.hypothesis.check_space(space))
    }

    #[inline]
    fn score_unchecked(&self, x: Point<'_>) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|t| t.weight * t.hypothesis.predict_unchecked(x).as_f64())
            .sum();
        s.clamp(-1.0, 1.0)
    }

    fn score(&self, x: Point<'_>) -> Result<f64> {
        self.evaluate(x)
    }
}

impl TryFrom<Vec<Term>> for VotingClassifier {
    type Error = Error;

    /// Accepts already-normalized weights verbatim so that a serialized voter
    /// reloads to exactly the same values.
    fn try_from(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Ok(VotingClassifier::zero());
        }
        if let Some(t) = terms.iter().find(|t| !(t.weight > 0.0 && t.weight.is_finite())) {
            return Err(Error::input(format!("non-positive voter weight {}", t.weight)));
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::input(format!("voter weights sum to {total}")));
        }
        Ok(VotingClassifier { terms })
    }
}

impl From<VotingClassifier> for Vec<Term> {
    fn from(v: VotingClassifier) -> Vec<Term> {
        v.terms
    }
}

/// Unweighted majority over the signs of `k` voting classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VotingClassifier>", into = "Vec<VotingClassifier>")]
pub struct MajorityOfMajorities {
    voters: Vec<VotingClassifier>,
}

impl MajorityOfMajorities {
    pub fn new(voters: Vec<VotingClassifier>) -> Result<Self> {
        if voters.is_empty() {
            return Err(Error::input("majority vote over zero voters"));
        }
        Ok(MajorityOfMajorities { voters })
    }

    pub fn voters(&self) -> &[VotingClassifier] {
        &self.voters
    }

    pub fn len(&self) -> usize {
        self.voters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voters.is_empty()
    }

    #[inline]
    fn raw_unchecked(&self, x: Point<'_>) -> i64 {
        self.voters
            .iter()
            .map(|f| i64::from(Sign::of(f.score_unchecked(x)).value()))
            .sum()
    }

    /// `(label, raw)` with `raw = Σᵢ sign(fᵢ(x)) ∈ [-k, k]` and `label = sign(raw)`.
    /// Each voter's hard vote uses `sign(0) = +1`, as does the final label.
    pub fn predict(&self, x: Point<'_>) -> Result<(Sign, i64)> {
        for f in &self.voters {
            f.evaluate(x)?;
        }
        let raw = self.raw_unchecked(x);
        Ok((Sign::of(raw as f64), raw))
    }
}

impl Classifier for MajorityOfMajorities {
    fn check_space(&self, space: Space) -> Result<()> {
        self.voters.iter().try_for_each(|f| f.check_space(space))
    }

    fn score_unchecked(&self, x: Point<'_>) -> f64 {
        self.raw_unchecked(x) as f64
    }

    fn score(&self, x: Point<'_>) -> Result<f64> {
        self.predict(x).map(|(_, raw)| raw as f64)
    }
}

impl TryFrom<Vec<VotingClassifier>> for MajorityOfMajorities {
    type Error = Error;

    fn try_from(voters: Vec<VotingClassifier>) -> Result<Self> {
        MajorityOfMajorities::new(voters)
    }
}

impl From<MajorityOfMajorities> for Vec<VotingClassifier> {
    fn from(m: MajorityOfMajorities) -> Vec<VotingClassifier> {
        m.voters
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(signs: &[i8]) -> Hypothesis {
        Hypothesis::Table {
            signs: signs.iter().map(|&s| Sign::try_from(s).unwrap()).collect(),
        }
    }

    #[test]
    fn single_term_and_two_term_evaluation() {
        let h = Hypothesis::stump(0, 0.0, Sign::Pos);
        let f = VotingClassifier::single(h.clone());
        assert_eq!(f.evaluate(Point::Dense(&[1.0])).unwrap(), 1.0);

        let f = VotingClassifier::new([(0.6, h.clone()), (0.4, h.negated())]).unwrap();
        let v = f.evaluate(Point::Dense(&[1.0])).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
        let s = LabeledSample {
            point: Point::Dense(&[1.0]),
            label: Sign::Neg,
        };
        assert!((f.margin(s).unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn five_equal_terms_three_positive() {
        // direct sum: (3 - 2) / 5
        let plus = Hypothesis::Constant { sign: Sign::Pos };
        let minus = Hypothesis::Constant { sign: Sign::Neg };
        let f = VotingClassifier::new([
            (1.0, plus.clone()),
            (1.0, plus.clone()),
            (1.0, plus),
            (1.0, minus.clone()),
            (1.0, minus),
        ])
        .unwrap();
        let direct: f64 = f
            .terms()
            .iter()
            .map(|t| t.weight * t.hypothesis.predict(Point::Index(0)).unwrap().as_f64())
            .sum();
        let v = f.evaluate(Point::Index(0)).unwrap();
        assert!((v - 0.2).abs() < 1e-12 && (v - direct).abs() < 1e-15);
    }

    #[test]
    fn min_margin_and_losses() {
        let labels: Vec<Sign> = [1, 1, -1, 1].iter().map(|&s| Sign::try_from(s).unwrap()).collect();
        let data = Dataset::finite(4, vec![0, 1, 2, 3], labels).unwrap();
        let exact = table(&[1, 1, -1, 1]);
        assert_eq!(VotingClassifier::single(exact.clone()).min_margin(&data).unwrap(), 1.0);
        assert_eq!(zero_one_loss(&exact, &data).unwrap(), 0.0);
        assert_eq!(zero_one_loss(&exact.negated(), &data).unwrap(), 1.0);

        // f(x0) = -0.3 with y = +1, others positive
        let f = VotingClassifier::new([
            (0.35, table(&[1, 1, -1, 1])),
            (0.65, table(&[-1, 1, -1, 1])),
        ])
        .unwrap();
        assert!((f.min_margin(&data).unwrap() + 0.3).abs() < 1e-12);

        let empty = Dataset::finite(4, vec![], vec![]).unwrap();
        assert!(f.min_margin(&empty).is_err());
        assert!(zero_one_loss(&f, &empty).is_err());
    }

    #[test]
    fn three_errors_in_twelve() {
        let idx: Vec<usize> = (0..12).collect();
        let labels = vec![Sign::Pos; 12];
        let data = Dataset::finite(12, idx, labels).unwrap();
        let mut signs = [1i8; 12];
        signs[1] = -1;
        signs[5] = -1;
        signs[9] = -1;
        let oracle = signs.iter().filter(|&&s| s != 1).count() as f64 / 12.0;
        assert_eq!(zero_one_loss(&table(&signs), &data).unwrap(), oracle);
        assert_eq!(oracle, 0.25);
    }

    #[test]
    fn zero_score_counts_as_error() {
        let data = Dataset::finite(1, vec![0], vec![Sign::Pos]).unwrap();
        assert_eq!(zero_one_loss(&VotingClassifier::zero(), &data).unwrap(), 1.0);
        let f = VotingClassifier::new([(1.0, table(&[1])), (1.0, table(&[-1]))]).unwrap();
        assert_eq!(zero_one_loss(&f, &data).unwrap(), 1.0);
        assert_eq!(f.predict_label(Point::Index(0)).unwrap(), Sign::Pos);
    }

    #[test]
    fn mismatched_points_are_rejected() {
        let f = VotingClassifier::single(Hypothesis::stump(3, 0.0, Sign::Pos));
        assert!(f.evaluate(Point::Dense(&[0.0])).is_err());
        assert!(f.evaluate(Point::Index(0)).is_err());
    }

    #[test]
    fn majority_votes() {
        let plus = VotingClassifier::single(Hypothesis::Constant { sign: Sign::Pos });
        let minus = VotingClassifier::single(Hypothesis::Constant { sign: Sign::Neg });
        let m = MajorityOfMajorities::new(vec![plus.clone(), plus.clone(), minus.clone()]).unwrap();
        assert_eq!(m.predict(Point::Index(0)).unwrap(), (Sign::Pos, 1));
        let all = MajorityOfMajorities::new(vec![plus.clone(); 4]).unwrap();
        assert_eq!(all.predict(Point::Index(0)).unwrap(), (Sign::Pos, 4));
        // 5 vs 4: vote-count oracle
        let mut voters = vec![minus.clone(); 5];
        voters.extend(vec![plus; 4]);
        let m = MajorityOfMajorities::new(voters).unwrap();
        let raw_oracle = 4 - 5;
        assert_eq!(m.predict(Point::Index(0)).unwrap(), (Sign::Neg, raw_oracle));
        assert!(MajorityOfMajorities::new(vec![]).is_err());
    }

    #[test]
    fn json_round_trip_is_value_exact() {
        let f = VotingClassifier::new([
            (0.1, table(&[1, -1])),
            (0.2, table(&[-1, -1])),
            (0.3 + 1e-17, Hypothesis::Constant { sign: Sign::Pos }),
        ])
        .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        let back: VotingClassifier = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<VotingClassifier>(r#"[{"weight":0.5,"hypothesis":{"kind":"constant","sign":1}}]"#).is_err());
    }

    fn arb_voter(u: usize) -> impl Strategy<Value = VotingClassifier> {
        prop::collection::vec(
            (0.01f64..1.0, prop::collection::vec(prop::bool::ANY, u)),
            1..8,
        )
        .prop_map(move |terms| {
            VotingClassifier::new(terms.into_iter().map(|(w, bits)| {
                let signs = bits.into_iter().map(|b| if b { Sign::Pos } else { Sign::Neg }).collect();
                (w, Hypothesis::Table { signs })
            }))
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn evaluation_is_linear_and_bounded(
            f1 in arb_voter(6), f2 in arb_voter(6), lambda in 0.01f64..0.99, x in 0usize..6,
        ) {
            let mix = VotingClassifier::new(
                f1.terms().iter().map(|t| (lambda * t.weight, t.hypothesis.clone()))
                    .chain(f2.terms().iter().map(|t| ((1.0 - lambda) * t.weight, t.hypothesis.clone()))),
            ).unwrap();
            let p = Point::Index(x);
            let expected = lambda * f1.evaluate(p).unwrap() + (1.0 - lambda) * f2.evaluate(p).unwrap();
            prop_assert!((mix.evaluate(p).unwrap() - expected).abs() <= 1e-9);
            prop_assert!(mix.evaluate(p).unwrap().abs() <= 1.0);
            let total: f64 = mix.terms().iter().map(|t| t.weight).sum();
            prop_assert!((total - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn min_margin_is_attained_lower_bound(
            f in arb_voter(8), bits in prop::collection::vec(prop::bool::ANY, 8),
        ) {
            let labels = bits.iter().map(|&b| if b { Sign::Pos } else { Sign::Neg }).collect();
            let data = Dataset::finite(8, (0..8).collect(), labels).unwrap();
            let mm = f.min_margin(&data).unwrap();
            let margins: Vec<f64> = data.iter().map(|s| f.margin(s).unwrap()).collect();
            prop_assert!(margins.iter().all(|&m| mm <= m && m.abs() <= 1.0));
            prop_assert!(margins.iter().any(|&m| m == mm));
        }

        #[test]
        fn negation_complements_loss(bits in prop::collection::vec(prop::bool::ANY, 10), hb in prop::collection::vec(prop::bool::ANY, 10)) {
            let labels = bits.iter().map(|&b| if b { Sign::Pos } else { Sign::Neg }).collect();
            let data = Dataset::finite(10, (0..10).collect(), labels).unwrap();
            let h = Hypothesis::Table { signs: hb.iter().map(|&b| if b { Sign::Pos } else { Sign::Neg }).collect() };
            let a = zero_one_loss(&h, &data).unwrap();
            let b = zero_one_loss(&h.negated(), &data).unwrap();
            prop_assert!((a - (1.0 - b)).abs() < 1e-12);
        }
    }
}
