use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Point, Sign, Space};
use crate::error::{Error, Result};

/// A base hypothesis `h : X -> {-1, +1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    /// `polarity` if `x[feature] > threshold`, otherwise `-polarity`.
    /// Thresholds may be `±∞`.
    Stump {
        feature: usize,
        #[serde(with = "extended_f64")]
        threshold: f64,
        polarity: Sign,
    },
    /// Explicit sign for every point of a finite domain.
    Table { signs: Vec<Sign> },
    Constant { sign: Sign },
}

impl Hypothesis {
    pub fn stump(feature: usize, threshold: f64, polarity: Sign) -> Self {
        Hypothesis::Stump {
            feature,
            threshold,
            polarity,
        }
    }

    /// Fails if the hypothesis cannot be evaluated on points of `space`.
    pub fn check_space(&self, space: Space) -> Result<()> {
        match (self, space) {
            (Hypothesis::Constant { .. }, _) => Ok(()),
            (Hypothesis::Stump { feature, .. }, Space::Dense(d)) if *feature < d => Ok(()),
            (Hypothesis::Table { signs }, Space::Finite(u)) if signs.len() == u => Ok(()),
            (h, s) => Err(Error::input(format!("hypothesis {h:?} cannot evaluate points of {s:?}"))),
        }
    }

    /// Evaluates `h(x)`, checking that `x` has a compatible representation.
    pub fn predict(&self, x: Point<'_>) -> Result<Sign> {
        match (self, x) {
            (Hypothesis::Constant { sign }, _) => Ok(*sign),
            (Hypothesis::Stump { feature, .. }, Point::Dense(v)) if *feature < v.len() => {
                Ok(self.predict_unchecked(x))
            }
            (Hypothesis::Table { signs }, Point::Index(i)) if i < signs.len() => {
                Ok(self.predict_unchecked(x))
            }
            (h, x) => Err(Error::input(format!("hypothesis {h:?} cannot evaluate {x:?}"))),
        }
    }

    /// Evaluates `h(x)` for a point already known to be compatible.
    ///
    /// Panics on an incompatible point.
    #[inline]
    pub fn predict_unchecked(&self, x: Point<'_>) -> Sign {
        match (self, x) {
            (Hypothesis::Constant { sign }, _) => *sign,
            (
                Hypothesis::Stump {
                    feature,
                    threshold,
                    polarity,
                },
                Point::Dense(v),
            ) => {
                if v[*feature] > *threshold {
                    *polarity
                } else {
                    -*polarity
                }
            }
            (Hypothesis::Table { signs }, Point::Index(i)) => signs[i],
            (h, x) => panic!("hypothesis {h:?} evaluated on incompatible point {x:?}"),
        }
    }

    /// `yᵢ·h(xᵢ)` for every sample.
    pub fn agreements(&self, data: &Dataset) -> Result<Vec<i8>> {
        self.check_space(data.space())?;
        if let (
            Hypothesis::Stump {
                feature,
                threshold,
                polarity,
            },
            Some((dim, values)),
        ) = (self, data.dense_values())
        {
            let p = polarity.value();
            return Ok(values
                .iter()
                .skip(*feature)
                .step_by(dim)
                .zip(data.labels())
                .map(|(&v, y)| {
                    let h = if v > *threshold { p } else { -p };
                    h * y.value()
                })
                .collect());
        }
        Ok(data
            .iter()
            .map(|s| s.label.value() * self.predict_unchecked(s.point).value())
            .collect())
    }

    /// The hypothesis `-h`.
    pub fn negated(&self) -> Hypothesis {
        match self {
            Hypothesis::Stump {
                feature,
                threshold,
                polarity,
            } => Hypothesis::Stump {
                feature: *feature,
                threshold: *threshold,
                polarity: -*polarity,
            },
            Hypothesis::Table { signs } => Hypothesis::Table {
                signs: signs.iter().map(|&s| -s).collect(),
            },
            Hypothesis::Constant { sign } => Hypothesis::Constant { sign: -*sign },
        }
    }
}

/// Serializes finite floats as JSON numbers and infinities as `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(D::Error::custom(format!("bad threshold {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_sides() {
        let h = Hypothesis::stump(0, 0.5, Sign::Pos);
        assert_eq!(h.predict(Point::Dense(&[1.0])).unwrap(), Sign::Pos);
        assert_eq!(h.predict(Point::Dense(&[0.5])).unwrap(), Sign::Neg);
        assert_eq!(h.negated().predict(Point::Dense(&[1.0])).unwrap(), Sign::Neg);
        let always = Hypothesis::stump(0, f64::NEG_INFINITY, Sign::Neg);
        assert_eq!(always.predict(Point::Dense(&[-1e308])).unwrap(), Sign::Neg);
    }

    #[test]
    fn representation_mismatch_is_an_input_error() {
        let h = Hypothesis::stump(2, 0.0, Sign::Pos);
        assert!(h.predict(Point::Dense(&[1.0, 2.0])).is_err());
        assert!(h.predict(Point::Index(0)).is_err());
        let t = Hypothesis::Table {
            signs: vec![Sign::Pos; 3],
        };
        assert!(t.predict(Point::Index(3)).is_err());
        assert!(t.check_space(Space::Finite(4)).is_err());
        assert!(t.check_space(Space::Finite(3)).is_ok());
    }

    #[test]
    fn infinite_thresholds_survive_json() {
        for thr in [f64::NEG_INFINITY, f64::INFINITY, 0.1 + 0.2] {
            let h = Hypothesis::stump(1, thr, Sign::Neg);
            let json = serde_json::to_string(&h).unwrap();
            let back: Hypothesis = serde_json::from_str(&json).unwrap();
            assert_eq!(back, h);
        }
    }
}
