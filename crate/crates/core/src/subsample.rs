//! Recursive leave-one-out sub-sampling.
//!
//! `sub_sample(A, B)` returns `A ∪ B` when `|A| ≤ 3`. Otherwise it splits `A`
//! into a head `A₀` of `|A| − 3⌊|A|/4⌋` elements followed by three blocks
//! `A₁, A₂, A₃` of `⌊|A|/4⌋` elements each, and recurses three times on `A₀`,
//! each time adding two of the three blocks to `B`:
//!
//! ```text
//! sub_sample(A₀, A₂ ∪ A₃ ∪ B) ++ sub_sample(A₀, A₁ ∪ A₃ ∪ B) ++ sub_sample(A₀, A₁ ∪ A₂ ∪ B)
//! ```
//!
//! For `|A| = 4ⁿ` and `B = ∅` this yields `3ⁿ` sets of `1 + 2(4ⁿ − 1)/3`
//! indices each. Every block left out of one branch is contained in every set
//! produced by the other two.

use std::collections::HashSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One split made during the recursion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitRecord {
    pub depth: usize,
    /// `A₁, A₂, A₃`; branch `i` leaves out `blocks[i]`.
    pub blocks: [Vec<usize>; 3],
    /// Positions in the output of the sets produced by each branch.
    pub branches: [Range<usize>; 3],
}

/// Applies the recursion to index sequences `a` (order significant) and `b`.
/// Each returned set is sorted.
pub fn sub_sample(a: &[usize], b: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_disjoint(a, b)?;
    let mut out = Vec::new();
    recurse(a, b.to_vec(), 0, &mut out, &mut None);
    Ok(out)
}

/// [`sub_sample`] that also records every split, for checking the
/// leave-one-out structure.
pub fn sub_sample_traced(a: &[usize], b: &[usize]) -> Result<(Vec<Vec<usize>>, Vec<SplitRecord>)> {
    check_disjoint(a, b)?;
    let mut out = Vec::new();
    let mut trace = Some(Vec::new());
    recurse(a, b.to_vec(), 0, &mut out, &mut trace);
    Ok((out, trace.unwrap_or_default()))
}

fn check_disjoint(a: &[usize], b: &[usize]) -> Result<()> {
    let mut seen = HashSet::with_capacity(a.len() + b.len());
    for &i in a.iter().chain(b) {
        if !seen.insert(i) {
            return Err(Error::input(format!("index {i} repeated across A and B")));
        }
    }
    Ok(())
}

fn recurse(
    a: &[usize],
    b: Vec<usize>,
    depth: usize,
    out: &mut Vec<Vec<usize>>,
    trace: &mut Option<Vec<SplitRecord>>,
) {
    if a.len() <= 3 {
        let mut set: Vec<usize> = a.iter().copied().chain(b).collect();
        set.sort_unstable();
        out.push(set);
        return;
    }
    let q = a.len() / 4;
    let head = a.len() - 3 * q;
    let (a0, rest) = a.split_at(head);
    let blocks = [&rest[..q], &rest[q..2 * q], &rest[2 * q..]];
    let mut ranges: [Range<usize>; 3] = [0..0, 0..0, 0..0];
    for (skip, range) in ranges.iter_mut().enumerate() {
        let mut extended = b.clone();
        for (j, block) in blocks.iter().enumerate() {
            if j != skip {
                extended.extend_from_slice(block);
            }
        }
        let start = out.len();
        recurse(a0, extended, depth + 1, out, trace);
        *range = start..out.len();
    }
    if let Some(records) = trace {
        records.push(SplitRecord {
            depth,
            blocks: blocks.map(<[usize]>::to_vec),
            branches: ranges,
        });
    }
}

/// Largest power of four not exceeding `m` (`m ≥ 1`).
pub fn power_of_four_floor(m: usize) -> usize {
    let mut p = 1usize;
    while p <= m / 4 {
        p *= 4;
    }
    p
}

/// The training subsets used by the sub-sampled learner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsamplePlan {
    /// Samples requested.
    pub m: usize,
    /// Samples actually used: `m` rounded down to a power of four.
    pub m_used: usize,
    pub index_sets: Vec<Vec<usize>>,
}

impl SubsamplePlan {
    /// Number of sets `k`.
    pub fn k(&self) -> usize {
        self.index_sets.len()
    }

    /// Size shared by every set.
    pub fn set_size(&self) -> usize {
        self.index_sets.first().map_or(0, Vec::len)
    }
}

/// Plan for `m` samples: rounds `m` down to `4^⌊log₄ m⌋`, drops the excess
/// samples and runs [`sub_sample`] on `[0, m')` with `B = ∅`.
pub fn plan_for(m: usize) -> Result<SubsamplePlan> {
    if m == 0 {
        return Err(Error::input("cannot plan for zero samples"));
    }
    let m_used = power_of_four_floor(m);
    let a: Vec<usize> = (0..m_used).collect();
    Ok(SubsamplePlan {
        m,
        m_used,
        index_sets: sub_sample(&a, &[])?,
    })
}

/// `k = 3^⌊log₄ m⌋`, without building the plan.
pub fn plan_size(m: usize) -> usize {
    let mut k = 1;
    let mut p = 4;
    while p <= m {
        k *= 3;
        p *= 4;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_base_case() {
        let sets = sub_sample(&[5, 1, 9], &[2]).unwrap();
        assert_eq!(sets, vec![vec![1, 2, 5, 9]]);
    }

    #[test]
    fn one_level_unroll() {
        // a1..a4 = 10, 11, 12, 13: A0 = {a1}, blocks {a2}, {a3}, {a4}
        let sets = sub_sample(&[10, 11, 12, 13], &[]).unwrap();
        assert_eq!(sets, vec![vec![10, 12, 13], vec![10, 11, 13], vec![10, 11, 12]]);
    }

    #[test]
    fn sixteen_gives_nine_sets_of_eleven() {
        let a: Vec<usize> = (0..16).collect();
        let sets = sub_sample(&a, &[]).unwrap();
        assert_eq!(sets.len(), 9);
        assert!(sets.iter().all(|s| s.len() == 1 + 2 * 15 / 3));
    }

    #[test]
    fn overlap_is_rejected() {
        assert!(sub_sample(&[1, 2, 3], &[3]).is_err());
        assert!(sub_sample(&[1, 1], &[]).is_err());
    }

    #[test]
    fn plans_round_down_to_powers_of_four() {
        let p4 = plan_for(4).unwrap();
        assert_eq!((p4.k(), p4.set_size()), (3, 3));
        let p64 = plan_for(64).unwrap();
        assert_eq!((p64.k(), p64.set_size()), (27, 43));
        let p100 = plan_for(100).unwrap();
        assert_eq!(p100.index_sets, p64.index_sets);
        assert_eq!(p100.m_used, 64);
        assert!(plan_for(0).is_err());
        assert_eq!(plan_for(1).unwrap().index_sets, vec![vec![0]]);
        assert_eq!(plan_size(4095), 243);
        assert_eq!(plan_size(4096), 729);
    }

    #[test]
    fn leave_one_out_containment() {
        let a: Vec<usize> = (0..256).collect();
        let (sets, trace) = sub_sample_traced(&a, &[]).unwrap();
        assert_eq!(sets, sub_sample(&a, &[]).unwrap());
        assert_eq!(trace.len(), 1 + 3 + 9 + 27);
        for split in &trace {
            for (i, block) in split.blocks.iter().enumerate() {
                for (j, range) in split.branches.iter().enumerate() {
                    let contains = sets[range.clone()]
                        .iter()
                        .all(|s| block.iter().all(|x| s.binary_search(x).is_ok()));
                    let excludes = sets[range.clone()]
                        .iter()
                        .all(|s| block.iter().all(|x| s.binary_search(x).is_err()));
                    if i == j {
                        assert!(excludes, "branch {j} must leave out block {i}");
                    } else {
                        assert!(contains, "branch {j} must contain block {i}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn count_and_size_laws(n in 0u32..6) {
            let m = 4usize.pow(n);
            let plan = plan_for(m).unwrap();
            prop_assert_eq!(plan.k(), 3usize.pow(n));
            prop_assert!(plan.index_sets.iter().all(|s| s.len() == 1 + 2 * (m - 1) / 3));
            prop_assert!(plan.index_sets.iter().all(|s| s.windows(2).all(|w| w[0] < w[1])));
        }

        #[test]
        fn arbitrary_sizes_keep_sets_distinct(m in 1usize..300) {
            let plan = plan_for(m).unwrap();
            prop_assert_eq!(plan.k(), plan_size(m));
            prop_assert!(plan.index_sets.iter().flatten().all(|&i| i < plan.m_used));
        }
    }
}
