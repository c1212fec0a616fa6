//! Labelled samples and datasets.
//!
//! A dataset holds either dense real feature vectors or indices into a finite
//! domain `{0, .., u-1}`. Sample order is significant: sub-sampling takes
//! prefixes and contiguous blocks of the sequence.

use std::fmt;
use std::io::{Read, Write};
use std::ops::Neg;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A label or prediction in `{-1, +1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    #[inline]
    pub fn value(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// Hard sign of a real score, with `0` mapped to `+1`.
    ///
    /// Only for exported predictions; loss evaluation treats a zero score as
    /// an error instead (see [`crate::voter::Classifier`]).
    #[inline]
    pub fn of(score: f64) -> Sign {
        if score < 0.0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = Error;

    fn try_from(v: i8) -> Result<Sign> {
        match v {
            -1 => Ok(Sign::Neg),
            1 => Ok(Sign::Pos),
            other => Err(Error::input(format!("label must be -1 or +1, got {other}"))),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// The shape shared by all points of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Dense real vectors with this many features.
    Dense(usize),
    /// Indices into a finite domain of this size.
    Finite(usize),
}

/// A borrowed input point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Point<'a> {
    Dense(&'a [f64]),
    Index(usize),
}

impl Point<'_> {
    /// Checks that the point lives in `space`.
    pub fn check(&self, space: Space) -> Result<()> {
        match (*self, space) {
            (Point::Dense(x), Space::Dense(d)) if x.len() == d => Ok(()),
            (Point::Index(i), Space::Finite(u)) if i < u => Ok(()),
            (p, s) => Err(Error::input(format!("point {p:?} does not belong to {s:?}"))),
        }
    }
}

/// A point together with its label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledSample<'a> {
    pub point: Point<'a>,
    pub label: Sign,
}

#[derive(Clone, Debug, PartialEq)]
enum Points {
    Dense { dim: usize, values: Vec<f64> },
    Finite { domain: usize, indices: Vec<usize> },
}

/// An ordered sequence of labelled samples sharing one point representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: Points,
    labels: Vec<Sign>,
}

impl Dataset {
    /// Dense dataset from row-major feature values.
    pub fn dense(dim: usize, values: Vec<f64>, labels: Vec<Sign>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("dense dataset needs at least one feature"));
        }
        if values.len() != dim * labels.len() {
            return Err(Error::input(format!(
                "{} feature values for {} samples of dimension {dim}",
                values.len(),
                labels.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite feature value {v}")));
        }
        Ok(Dataset {
            points: Points::Dense { dim, values },
            labels,
        })
    }

    /// Finite-domain dataset; every index must be `< domain`.
    pub fn finite(domain: usize, indices: Vec<usize>, labels: Vec<Sign>) -> Result<Self> {
        if indices.len() != labels.len() {
            return Err(Error::input(format!(
                "{} indices but {} labels",
                indices.len(),
                labels.len()
            )));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= domain) {
            return Err(Error::input(format!("index {i} outside domain of size {domain}")));
        }
        Ok(Dataset {
            points: Points::Finite { domain, indices },
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn space(&self) -> Space {
        match &self.points {
            Points::Dense { dim, .. } => Space::Dense(*dim),
            Points::Finite { domain, .. } => Space::Finite(*domain),
        }
    }

    pub fn labels(&self) -> &[Sign] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, i: usize) -> Sign {
        self.labels[i]
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point<'_> {
        match &self.points {
            Points::Dense { dim, values } => Point::Dense(&values[i * dim..(i + 1) * dim]),
            Points::Finite { indices, .. } => Point::Index(indices[i]),
        }
    }

    pub fn sample(&self, i: usize) -> LabeledSample<'_> {
        LabeledSample {
            point: self.point(i),
            label: self.labels[i],
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = LabeledSample<'_>> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }

    /// `(dim, row-major values)` of a dense dataset.
    pub(crate) fn dense_values(&self) -> Option<(usize, &[f64])> {
        match &self.points {
            Points::Dense { dim, values } => Some((*dim, values)),
            Points::Finite { .. } => None,
        }
    }

    /// Column `feature` of a dense dataset, in sample order.
    pub fn feature_column(&self, feature: usize) -> Option<Vec<f64>> {
        match &self.points {
            Points::Dense { dim, values } if feature < *dim => {
                Some(values.iter().skip(feature).step_by(*dim).copied().collect())
            }
            _ => None,
        }
    }

    /// Materializes the samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::input(format!(
                "subset index {i} out of range for {} samples",
                self.len()
            )));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let points = match &self.points {
            Points::Dense { dim, values } => Points::Dense {
                dim: *dim,
                values: indices
                    .iter()
                    .flat_map(|&i| values[i * dim..(i + 1) * dim].iter().copied())
                    .collect(),
            },
            Points::Finite { domain, indices: idx } => Points::Finite {
                domain: *domain,
                indices: indices.iter().map(|&i| idx[i]).collect(),
            },
        };
        Ok(Dataset { points, labels })
    }

    /// The same points with every label replaced.
    pub fn relabel(&self, labels: Vec<Sign>) -> Result<Dataset> {
        if labels.len() != self.len() {
            return Err(Error::input("relabel: label count mismatch"));
        }
        Ok(Dataset {
            points: self.points.clone(),
            labels,
        })
    }

    /// Reads the CSV format: feature columns then a `label` column, or
    /// `index,label` for finite-domain data. A header row is optional for
    /// dense data and required (`index,label`) for finite data. `domain`
    /// overrides the inferred domain size (max index + 1).
    pub fn read_csv<R: Read>(reader: R, domain: Option<usize>) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = rdr.records();
        let mut finite = domain.is_some();
        let mut pending = None;
        if let Some(first) = rows.next() {
            let first = first?;
            let is_header = first.iter().any(|f| f.parse::<f64>().is_err());
            if is_header {
                finite |= first.get(0) == Some("index");
            } else {
                pending = Some(first);
            }
        }
        let mut width = None;
        let mut values = Vec::new();
        let mut indices = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in pending.into_iter().map(Ok).chain(rows).enumerate() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::input(format!("row {line}: need at least one feature and a label")));
            }
            match width {
                None => width = Some(record.len()),
                Some(w) if w != record.len() => {
                    return Err(Error::input(format!("row {line}: expected {w} columns, got {}", record.len())))
                }
                _ => {}
            }
            let label_field = &record[record.len() - 1];
            let label: i8 = label_field
                .parse::<f64>()
                .ok()
                .filter(|v| *v == 1.0 || *v == -1.0)
                .map(|v| v as i8)
                .ok_or_else(|| Error::input(format!("row {line}: bad label {label_field:?}")))?;
            labels.push(Sign::try_from(label)?);
            if finite {
                if record.len() != 2 {
                    return Err(Error::input("finite-domain rows are `index,label`"));
                }
                let idx = record[0]
                    .parse::<usize>()
                    .map_err(|_| Error::input(format!("row {line}: bad index {:?}", &record[0])))?;
                indices.push(idx);
            } else {
                for field in record.iter().take(record.len() - 1) {
                    let v = field
                        .parse::<f64>()
                        .map_err(|_| Error::input(format!("row {line}: bad feature {field:?}")))?;
                    values.push(v);
                }
            }
        }
        if finite {
            let u = domain.unwrap_or_else(|| indices.iter().max().map_or(0, |m| m + 1));
            Dataset::finite(u, indices, labels)
        } else {
            let dim = width.map_or(1, |w| w - 1);
            Dataset::dense(dim, values, labels)
        }
    }

    pub fn read_csv_path(path: impl AsRef<Path>, domain: Option<usize>) -> Result<Dataset> {
        let file = std::fs::File::open(path.as_ref())?;
        Dataset::read_csv(std::io::BufReader::new(file), domain)
    }

    /// Writes the CSV format with a header row. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        match &self.points {
            Points::Dense { dim, .. } => {
                let mut header: Vec<String> = (0..*dim).map(|j| format!("x{j}")).collect();
                header.push("label".into());
                wtr.write_record(&header)?;
            }
            Points::Finite { .. } => wtr.write_record(["index", "label"])?,
        }
        let mut row = Vec::new();
        for s in self.iter() {
            row.clear();
            match s.point {
                Point::Dense(x) => row.extend(x.iter().map(|v| v.to_string())),
                Point::Index(i) => row.push(i.to_string()),
            }
            row.push(s.label.to_string());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(v: &[i8]) -> Vec<Sign> {
        v.iter().map(|&s| Sign::try_from(s).unwrap()).collect()
    }

    #[test]
    fn labels_are_strictly_plus_minus_one() {
        assert!(Sign::try_from(0).is_err());
        assert_eq!(-Sign::Pos, Sign::Neg);
        assert_eq!(Sign::of(0.0), Sign::Pos);
        assert_eq!(Sign::of(-1e-300), Sign::Neg);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        assert!(Dataset::dense(2, vec![0.0; 3], signs(&[1, -1])).is_err());
        assert!(Dataset::finite(3, vec![0, 3], signs(&[1, -1])).is_err());
        assert!(Dataset::dense(1, vec![f64::NAN], signs(&[1])).is_err());
    }

    #[test]
    fn subset_keeps_requested_order() {
        let d = Dataset::dense(2, vec![0., 1., 2., 3., 4., 5.], signs(&[1, -1, 1])).unwrap();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.point(0), Point::Dense(&[4.0, 5.0]));
        assert_eq!(s.label(1), Sign::Pos);
        assert!(d.subset(&[3]).is_err());
    }

    #[test]
    fn csv_round_trip_dense_and_finite() {
        let d = Dataset::dense(2, vec![0.1, -2.5, 1e-17, 3.0], signs(&[1, -1])).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(&buf[..], None).unwrap(), d);

        let f = Dataset::finite(5, vec![4, 0, 2], signs(&[-1, 1, 1])).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(Dataset::read_csv(&buf[..], Some(5)).unwrap(), f);
    }

    #[test]
    fn csv_without_header_and_bad_labels() {
        let d = Dataset::read_csv("0.5,1\n1.5,-1\n".as_bytes(), None).unwrap();
        assert_eq!(d.space(), Space::Dense(1));
        assert_eq!(d.len(), 2);
        assert!(Dataset::read_csv("0.5,0\n".as_bytes(), None).is_err());
        assert!(Dataset::read_csv("0.5,1\n0.5,2,1\n".as_bytes(), None).is_err());
    }
}
