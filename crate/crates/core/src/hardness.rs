//! The lower-bound instance and its Bayes-optimal error floor.
//!
//! The domain is `{x₀, …, x_{u−1}}` (index 0 plays the heavy point). A sample
//! is `x₀` with probability `1 − (u−1)/(4m)` and otherwise uniform over the
//! remaining `u − 1` points. The hypothesis set is `N` random sign tables and
//! the concept family is every labeling that some convex combination of the
//! tables fits with margin at least `2γ`, found by boosting over the tables.
//!
//! Given a training sample, the best any learner can do is predict, on each
//! unseen point, the majority label among concepts consistent with what was
//! seen. [`bayes_floor`] measures the exact error of that predictor.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boost::AdaBoostStar;
use crate::data::{Dataset, Sign};
use crate::distribution::SampleDistribution;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::rng::stream;
use crate::voter::VotingClassifier;
use crate::weak::ExhaustiveLearner;

/// Largest domain whose labelings are enumerated.
pub const MAX_ENUMERATION_DOMAIN: usize = 14;

/// Domain size for VC budget `d` and advantage `γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomainSize {
    pub u: usize,
    /// `2⁻ᵈ < γ < 1/80`, the range the lower bound is stated for.
    pub in_theorem_range: bool,
}

/// `u = max(2, ⌈c_u·d·γ⁻²⌉)`.
pub fn build_domain(d: usize, gamma: f64, c_u: f64) -> Result<DomainSize> {
    if d == 0 {
        return Err(Error::input("d must be at least 1"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input(format!("gamma {gamma} outside (0, 1)")));
    }
    if !(c_u >= 0.0 && c_u.is_finite()) {
        return Err(Error::input(format!("c_u must be finite and nonnegative, got {c_u}")));
    }
    let raw = (c_u * d as f64 / (gamma * gamma)).ceil();
    if raw > 1e15 {
        return Err(Error::input("domain size overflows"));
    }
    let lower = if d >= 64 { 0.0 } else { 0.5f64.powi(d as i32) };
    Ok(DomainSize {
        u: (raw as usize).max(2),
        in_theorem_range: gamma < 1.0 / 80.0 && gamma > lower,
    })
}

/// `⌈c_n·γ⁻²·ln u·ln(3γ⁻²·ln u)⌉`, at least 1.
pub fn default_hypothesis_count(u: usize, gamma: f64, c_n: f64) -> usize {
    let a = (u.max(2) as f64).ln() / (gamma * gamma);
    let n = c_n * a * (3.0 * a).ln().max(1.0);
    (n.ceil() as usize).max(1)
}

/// `n` tables over `u` points with i.i.d. uniform signs.
pub fn random_tables<R: Rng + ?Sized>(u: usize, n: usize, rng: &mut R) -> Vec<Hypothesis> {
    (0..n)
        .map(|_| Hypothesis::Table {
            signs: (0..u)
                .map(|_| if rng.random::<bool>() { Sign::Pos } else { Sign::Neg })
                .collect(),
        })
        .collect()
}

/// A labeling together with a voter fitting it with margin at least `2γ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub labeling: Vec<Sign>,
    pub voter: VotingClassifier,
    pub min_margin: f64,
}

fn domain_dataset(labeling: &[Sign]) -> Result<Dataset> {
    let u = labeling.len();
    Dataset::finite(u, (0..u).collect(), labeling.to_vec())
}

/// Boosts over `hypotheses` with edge requirement `2γ + ν` and `ν = γ/2`.
/// Returns `None` when some round's best edge is short or the final margin
/// is below `2γ`; the margin is re-checked by a direct scan.
pub fn certify_concept(hypotheses: &[Hypothesis], labeling: &[Sign], gamma: f64) -> Result<Option<Certificate>> {
    let learner = ExhaustiveLearner::new(hypotheses.to_vec())?;
    certify_with(&learner, labeling, gamma)
}

fn certify_with(learner: &ExhaustiveLearner, labeling: &[Sign], gamma: f64) -> Result<Option<Certificate>> {
    if labeling.is_empty() {
        return Err(Error::input("empty labeling"));
    }
    let nu = gamma / 2.0;
    let booster = AdaBoostStar::new(2.0 * gamma + nu, nu)
        .map_err(|_| Error::input(format!("gamma {gamma} too large to certify (need 2.5·gamma < 1/2)")))?
        .max_retries(1);
    let data = domain_dataset(labeling)?;
    // the exhaustive learner never consumes randomness
    let mut rng = stream(0, "certify", &[]);
    let voter = match booster.run(&data, learner, &mut rng) {
        Ok(report) => report.voter,
        Err(e) if e.is_contract_violation() => return Ok(None),
        Err(e) => return Err(e),
    };
    let min_margin = voter.min_margin(&data)?;
    Ok((min_margin >= 2.0 * gamma).then(|| Certificate {
        labeling: labeling.to_vec(),
        voter,
        min_margin,
    }))
}

fn labeling_of(mask: u32, u: usize) -> Vec<Sign> {
    (0..u)
        .map(|i| if (mask >> i) & 1 == 1 { Sign::Pos } else { Sign::Neg })
        .collect()
}

fn mask_of(labeling: &[Sign]) -> u32 {
    labeling
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == Sign::Pos)
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// The hard distribution, hypothesis set and certified concept family.
#[derive(Clone, Debug, Serialize)]
pub struct HardInstance {
    pub u: usize,
    /// `lg N`, the VC budget the hypothesis set can support.
    pub d_proxy: f64,
    pub gamma: f64,
    pub m: usize,
    pub hypotheses: Vec<Hypothesis>,
    pub x1_mass: f64,
    pub concepts: Vec<Certificate>,
    #[serde(skip)]
    masks: Vec<u32>,
}

impl HardInstance {
    /// Certifies every labeling of the `u` points covered by `hypotheses`.
    pub fn new(hypotheses: Vec<Hypothesis>, gamma: f64, m: usize) -> Result<Self> {
        let Some(Hypothesis::Table { signs }) = hypotheses.first() else {
            return Err(Error::input("hard instance needs a nonempty list of tables"));
        };
        let u = signs.len();
        if u < 2 {
            return Err(Error::input("hard instance needs at least 2 points"));
        }
        if hypotheses
            .iter()
            .any(|h| !matches!(h, Hypothesis::Table { signs } if signs.len() == u))
        {
            return Err(Error::input(format!("every hypothesis must be a table over {u} points")));
        }
        if u > MAX_ENUMERATION_DOMAIN {
            return Err(Error::input(format!(
                "u = {u} exceeds the enumeration budget of {MAX_ENUMERATION_DOMAIN}"
            )));
        }
        let x1_mass = x1_mass(u, m)?;
        let learner = ExhaustiveLearner::new(hypotheses.clone())?;
        let certified: Vec<Option<Certificate>> = (0..1u32 << u)
            .into_par_iter()
            .map(|mask| certify_with(&learner, &labeling_of(mask, u), gamma))
            .collect::<Result<_>>()?;
        let concepts: Vec<Certificate> = certified.into_iter().flatten().collect();
        if concepts.is_empty() {
            return Err(Error::Infeasible(format!(
                "no labeling is certifiable at gamma = {gamma} with {} tables",
                hypotheses.len()
            )));
        }
        let masks = concepts.iter().map(|c| mask_of(&c.labeling)).collect();
        Ok(HardInstance {
            u,
            d_proxy: (hypotheses.len() as f64).log2(),
            gamma,
            m,
            hypotheses,
            x1_mass,
            concepts,
            masks,
        })
    }

    /// The same family under sample budget `m`.
    pub fn with_budget(&self, m: usize) -> Result<Self> {
        Ok(HardInstance {
            m,
            x1_mass: x1_mass(self.u, m)?,
            ..self.clone()
        })
    }

    /// Probability of point `i` under the hard distribution.
    pub fn point_mass(&self, i: usize) -> f64 {
        match i {
            0 => self.x1_mass,
            i if i < self.u => 1.0 / (4.0 * self.m as f64),
            _ => 0.0,
        }
    }

    /// One draw from the hard distribution.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.x1_mass {
            0
        } else {
            rng.random_range(1..self.u)
        }
    }

    /// Fraction of all `2ᵘ` labelings that were certified.
    pub fn certified_fraction(&self) -> f64 {
        self.concepts.len() as f64 / (1u64 << self.u) as f64
    }

    pub fn find(&self, labeling: &[Sign]) -> Option<&Certificate> {
        if labeling.len() != self.u {
            return None;
        }
        let mask = mask_of(labeling);
        self.masks.iter().position(|&m| m == mask).map(|i| &self.concepts[i])
    }
}

/// `1 − (u−1)/(4m)`; needs `u − 1 ≤ 4m`.
pub fn x1_mass(u: usize, m: usize) -> Result<f64> {
    if m == 0 || u - 1 > 4 * m {
        return Err(Error::input(format!("sample budget m = {m} too small for u = {u}")));
    }
    Ok(1.0 - (u - 1) as f64 / (4.0 * m as f64))
}

/// The hypothesis in the concept's certificate with the largest edge
/// `Σₓ w(x)·c(x)·h(x)` under `w`, with that edge.
pub fn hard_weak_learner(
    instance: &HardInstance,
    concept: &[Sign],
    w: &SampleDistribution,
) -> Result<(Hypothesis, f64)> {
    let cert = instance
        .find(concept)
        .ok_or_else(|| Error::input("concept is not in the certified family"))?;
    if w.len() != instance.u {
        return Err(Error::input(format!("{} weights for {} points", w.len(), instance.u)));
    }
    let data = domain_dataset(concept)?;
    let mut best: Option<(&Hypothesis, f64)> = None;
    for term in cert.voter.terms() {
        let edge = w.edge_of(&term.hypothesis.agreements(&data)?);
        if best.is_none_or(|(_, e)| edge > e) {
            best = Some((&term.hypothesis, edge));
        }
    }
    let (h, edge) = best.expect("certificates are nonempty voters");
    Ok((h.clone(), edge))
}

/// One trial of the floor experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloorTrial {
    pub trial: usize,
    pub m: usize,
    pub error_exact: f64,
    pub posterior_size: usize,
    pub seen_points: usize,
}

/// Summary of [`bayes_floor`] at one sample budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloorReport {
    pub m: usize,
    pub mean_error: f64,
    pub stderr: f64,
    /// Error at the 2/3 quantile across trials (nearest rank).
    pub q: f64,
    pub trials: Vec<FloorTrial>,
}

/// Error of the posterior-majority predictor, averaged over `trials` draws
/// of a concept (uniform over the family) and a sample of size `instance.m`.
///
/// Trial `r` draws its concept from stream `("concept", [r])` regardless of
/// `m`, so runs at different budgets are paired.
pub fn bayes_floor(instance: &HardInstance, trials: usize, seed: u64) -> Result<FloorReport> {
    if trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    let u = instance.u;
    let m = instance.m;
    let rows: Vec<FloorTrial> = (0..trials)
        .into_par_iter()
        .map(|r| {
            let mut crng = stream(seed, "concept", &[r as u64]);
            let c = instance.masks[crng.random_range(0..instance.masks.len())];
            let mut srng = stream(seed, "sample", &[m as u64, r as u64]);
            let mut seen = 0u32;
            for _ in 0..m {
                seen |= 1 << instance.sample_point(&mut srng);
            }
            let posterior: Vec<u32> = instance
                .masks
                .iter()
                .copied()
                .filter(|&k| (k ^ c) & seen == 0)
                .collect();
            let mut error = 0.0;
            for i in (0..u).filter(|i| (seen >> i) & 1 == 0) {
                let pos = posterior.iter().filter(|&&k| (k >> i) & 1 == 1).count();
                // ties go to +1
                let predict_pos = 2 * pos >= posterior.len();
                if predict_pos != ((c >> i) & 1 == 1) {
                    error += instance.point_mass(i);
                }
            }
            FloorTrial {
                trial: r,
                m,
                error_exact: error,
                posterior_size: posterior.len(),
                seen_points: seen.count_ones() as usize,
            }
        })
        .collect();
    let n = trials as f64;
    let mean_error = rows.iter().map(|t| t.error_exact).sum::<f64>() / n;
    let var = if trials > 1 {
        rows.iter().map(|t| (t.error_exact - mean_error).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted: Vec<f64> = rows.iter().map(|t| t.error_exact).collect();
    sorted.sort_by(f64::total_cmp);
    let rank = ((2.0 * n / 3.0).ceil() as usize).clamp(1, trials);
    Ok(FloorReport {
        m,
        mean_error,
        stderr: (var / n).sqrt(),
        q: sorted[rank - 1],
        trials: rows,
    })
}

/// Writes the per-trial rows of several reports as CSV.
pub fn write_floor_csv<W: std::io::Write>(reports: &[FloorReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for t in reports.iter().flat_map(|r| &r.trials) {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(v: &[i8]) -> Vec<Sign> {
        v.iter().map(|&s| Sign::try_from(s).unwrap()).collect()
    }

    fn table(v: &[i8]) -> Hypothesis {
        Hypothesis::Table { signs: signs(v) }
    }

    #[test]
    fn domain_formula() {
        let a = build_domain(1, 0.5, 1.0).unwrap();
        assert_eq!(a.u, 4);
        assert!(!a.in_theorem_range);
        assert_eq!(build_domain(2, 0.1, 1.0).unwrap().u, 200);
        assert_eq!(build_domain(3, 0.1, 0.0).unwrap().u, 2);
        assert!(build_domain(10, 0.01, 1.0).unwrap().in_theorem_range);
        assert!(build_domain(0, 0.1, 1.0).is_err());
    }

    #[test]
    fn x1_mass_arithmetic() {
        assert!((x1_mass(9, 18).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(x1_mass(2, 1).unwrap(), 0.75);
        assert!(x1_mass(10, 2).is_err());
    }

    #[test]
    fn member_of_h_is_certified_by_itself() {
        let h = vec![table(&[1, -1, 1, 1]), table(&[-1, -1, 1, -1])];
        let cert = certify_concept(&h, &signs(&[1, -1, 1, 1]), 0.1).unwrap().unwrap();
        assert_eq!(cert.voter, VotingClassifier::single(h[0].clone()));
        assert_eq!(cert.min_margin, 1.0);
    }

    #[test]
    fn negation_outside_h_is_rejected() {
        // −h₀ needs margin on every point; the other tables are orthogonal to h₀
        let h = vec![
            table(&[1, 1, 1, 1]),
            table(&[1, -1, 1, -1]),
            table(&[1, 1, -1, -1]),
        ];
        assert!(certify_concept(&h, &signs(&[-1, -1, -1, -1]), 0.05).unwrap().is_none());
    }

    #[test]
    fn certificates_reverify_and_weak_learner_has_edge() {
        let mut rng = stream(1, "tables", &[]);
        let h = random_tables(7, 16, &mut rng);
        let inst = HardInstance::new(h, 0.15, 20).unwrap();
        assert!(inst.certified_fraction() > 0.0 && inst.certified_fraction() < 1.0);
        for c in &inst.concepts {
            let data = domain_dataset(&c.labeling).unwrap();
            assert!(c.voter.min_margin(&data).unwrap() >= 0.3);
        }
        let c = &inst.concepts[0].labeling;
        for k in 0..100 {
            let mut wr = stream(2, "w", &[k]);
            let w = SampleDistribution::from_unnormalized((0..7).map(|_| wr.random::<f64>()).collect()).unwrap();
            let (_, edge) = hard_weak_learner(&inst, c, &w).unwrap();
            assert!(edge >= 0.3);
        }
        let missing = (0..1u32 << 7).map(|m| labeling_of(m, 7)).find(|l| inst.find(l).is_none());
        if let Some(l) = missing {
            assert!(hard_weak_learner(&inst, &l, &SampleDistribution::uniform(7).unwrap()).is_err());
        }
    }

    #[test]
    fn two_point_closed_form() {
        // both labelings of x₁ certified, x₀ fixed: the unseen point is a coin flip
        let h = vec![table(&[1, 1]), table(&[1, -1])];
        let inst = HardInstance::new(h, 0.1, 1).unwrap();
        assert_eq!(inst.concepts.len(), 2);
        let inst = inst.with_budget(1).unwrap();
        assert_eq!(inst.x1_mass, 0.75);
        let r = bayes_floor(&inst, 4000, 3).unwrap();
        // error = P[x₁ unseen]·P[label ≠ +1]·mass = 0.75 · 1/2 · 1/4
        let exact = 0.75 * 0.5 * 0.25;
        assert!((r.mean_error - exact).abs() < 4.0 * r.stderr, "{} vs {exact}", r.mean_error);
    }

    #[test]
    fn large_budget_drives_floor_to_zero() {
        let mut rng = stream(4, "tables", &[]);
        let inst = HardInstance::new(random_tables(5, 12, &mut rng), 0.1, 100_000).unwrap();
        let r = bayes_floor(&inst, 50, 0).unwrap();
        // only the light points can be missed, and they carry (u−1)/(4m) in total
        assert!(r.mean_error <= 4.0 / 400_000.0);
        assert!(r.trials.iter().all(|t| t.seen_points >= 1));
    }

    #[test]
    fn floor_csv_and_reproducibility() {
        let mut rng = stream(5, "tables", &[]);
        let inst = HardInstance::new(random_tables(5, 12, &mut rng), 0.1, 4).unwrap();
        let a = bayes_floor(&inst, 20, 9).unwrap();
        let b = bayes_floor(&inst, 20, 9).unwrap();
        assert_eq!(a, b);
        let mut out = Vec::new();
        write_floor_csv(&[a], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("trial,m,error_exact,posterior_size,seen_points\n"));
        assert_eq!(text.lines().count(), 21);
    }

    #[test]
    fn enumeration_budget() {
        let mut rng = stream(6, "tables", &[]);
        assert!(HardInstance::new(random_tables(15, 4, &mut rng), 0.1, 100).is_err());
        assert!(certify_concept(&[table(&[1])], &signs(&[1]), 0.2).is_err());
    }
}
