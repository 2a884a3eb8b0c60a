//! Binomial counts and direct lexicographic unranking of combinations.

use thiserror::Error;

/// Rank of a combination within its lexicographic sequence.
pub type Rank = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatoricsError {
    #[error("C({p}, {q}) does not fit in a 64-bit rank")]
    Overflow { p: usize, q: usize },
    #[error("rank {rank} out of range for C({p}, {q}) = {count}")]
    RankOutOfRange {
        p: usize,
        q: usize,
        rank: Rank,
        count: Rank,
    },
}

/// `C(p, q)`, or 0 when `q > p`.
pub fn binomial(p: usize, q: usize) -> Result<Rank, CombinatoricsError> {
    if q > p {
        return Ok(0);
    }
    let k = q.min(p - q);
    // After step i the accumulator holds C(p - k + i, i) <= C(p, k), so every
    // intermediate fits whenever the result does.
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc * (p - k + i) as u128 / i as u128;
        if acc > Rank::MAX as u128 {
            return Err(CombinatoricsError::Overflow { p, q });
        }
    }
    Ok(acc as Rank)
}

/// A strictly increasing selection of indices from `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Combination {
    indices: Vec<usize>,
}

impl Combination {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }
}

/// The `rank`-th `q`-subset of `{0, .., p-1}` in lexicographic order.
pub fn unrank_combination(p: usize, q: usize, rank: Rank) -> Result<Combination, CombinatoricsError> {
    let mut indices = Vec::with_capacity(q);
    unrank_into(p, q, rank, &mut indices)?;
    Ok(Combination { indices })
}

/// Same as [`unrank_combination`], writing into a caller-owned buffer.
///
/// Each slot takes the smallest element `e` whose block of completions,
/// `C(p - e - 1, slots_left - 1)`, still covers the remaining rank. Memory is
/// the `q` output slots; nothing proportional to `C(p, q)` is built.
pub fn unrank_into(p: usize, q: usize, rank: Rank, out: &mut Vec<usize>) -> Result<(), CombinatoricsError> {
    let count = binomial(p, q)?;
    if rank >= count {
        return Err(CombinatoricsError::RankOutOfRange { p, q, rank, count });
    }
    out.clear();
    let mut remaining = rank;
    let mut next = 0usize;
    for slot in 0..q {
        let left = q - slot - 1;
        let mut e = next;
        loop {
            // Bounded by C(p, q), which already fit.
            let block = binomial(p - e - 1, left)?;
            if remaining < block {
                break;
            }
            remaining -= block;
            e += 1;
        }
        out.push(e);
        next = e + 1;
    }
    Ok(())
}
