//! Dense ranking of permutations of `0..m` through the factorial number system.

use crate::error::{Error, Result};

/// Largest `m` whose `m!` fits in a `u64`.
pub const MAX_LABELS: usize = 20;

pub fn factorial(m: usize) -> u64 {
    (1..=m as u64).product()
}

/// Ranks and unranks permutations of `m` labels in lexicographic order.
#[derive(Clone, Debug)]
pub struct LehmerCode {
    m: usize,
    /// `weights[i] = (m - 1 - i)!`
    weights: Vec<u64>,
}

impl LehmerCode {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > MAX_LABELS {
            return Err(Error::InvalidArgument(format!(
                "permutation length {m} outside 1..={MAX_LABELS}"
            )));
        }
        let weights = (0..m).map(|i| factorial(m - 1 - i)).collect();
        Ok(LehmerCode { m, weights })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of permutations, `m!`.
    pub fn count(&self) -> u64 {
        self.weights[0] * self.m as u64
    }

    /// Lexicographic rank of `perm`, a permutation of `0..m` in one-line notation.
    #[inline]
    pub fn rank(&self, perm: &[u8]) -> u64 {
        debug_assert_eq!(perm.len(), self.m);
        let mut seen: u32 = 0;
        let mut rank = 0;
        for (i, &v) in perm.iter().enumerate() {
            let smaller_unused = v as u32 - (seen & ((1u32 << v) - 1)).count_ones();
            rank += smaller_unused as u64 * self.weights[i];
            seen |= 1 << v;
        }
        rank
    }

    /// Inverse of [`rank`](Self::rank); writes the permutation into `out`.
    #[inline]
    pub fn unrank(&self, mut rank: u64, out: &mut [u8]) {
        debug_assert_eq!(out.len(), self.m);
        let mut unused: u32 = if self.m == 32 {
            u32::MAX
        } else {
            (1u32 << self.m) - 1
        };
        for (i, slot) in out.iter_mut().enumerate() {
            let w = self.weights[i];
            let mut k = rank / w;
            rank %= w;
            // k-th set bit of `unused`
            let mut bits = unused;
            while k > 0 {
                bits &= bits - 1;
                k -= 1;
            }
            let v = bits.trailing_zeros();
            *slot = v as u8;
            unused &= !(1 << v);
        }
    }

    pub fn identity(&self) -> Vec<u8> {
        (0..self.m as u8).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_ranks_are_lexicographic() {
        let code = LehmerCode::new(3).unwrap();
        let all: Vec<Vec<u8>> = (0..6)
            .map(|r| {
                let mut p = vec![0; 3];
                code.unrank(r, &mut p);
                p
            })
            .collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(code.count(), 6);
        assert_eq!(code.rank(&code.identity()), 0);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(LehmerCode::new(0).is_err());
        assert!(LehmerCode::new(21).is_err());
        assert_eq!(LehmerCode::new(20).unwrap().count(), factorial(20));
    }

    proptest! {
        #[test]
        fn rank_unrank_roundtrip(m in 1usize..=12, seed in any::<u64>()) {
            let code = LehmerCode::new(m).unwrap();
            let r = seed % code.count();
            let mut p = vec![0; m];
            code.unrank(r, &mut p);
            prop_assert_eq!(code.rank(&p), r);
            let mut sorted = p.clone();
            sorted.sort();
            prop_assert_eq!(sorted, code.identity());
        }
    }
}
