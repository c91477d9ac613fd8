//! Dense linear algebra over GF(2): packed bit rows, rank, and row-space
//! membership with the combining row set.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    width: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(width: usize) -> Self {
        BitRow { width, words: vec![0; width.div_ceil(64)] }
    }

    pub fn unit(width: usize, index: usize) -> Self {
        let mut r = Self::zeros(width);
        r.set(index, true);
        r
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut r = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            r.set(i, b & 1 == 1);
        }
        r
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        debug_assert!(index < self.width);
        (self.words[index >> 6] >> (index & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        debug_assert!(index < self.width);
        let mask = 1u64 << (index & 63);
        if value {
            self.words[index >> 6] |= mask;
        } else {
            self.words[index >> 6] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn lowest_set(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.width).map(|i| self.get(i) as u8).collect()
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

/// Rank of the matrix whose rows are `rows`.
pub fn rank(rows: &[BitRow]) -> usize {
    let mut basis: Vec<BitRow> = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for b in &basis {
            let pivot = b.lowest_set().unwrap();
            if r.get(pivot) {
                r.xor_assign(b);
            }
        }
        if !r.is_zero() {
            // keep the basis fully reduced on its pivot columns
            let pivot = r.lowest_set().unwrap();
            for b in basis.iter_mut() {
                if b.get(pivot) {
                    b.xor_assign(&r);
                }
            }
            basis.push(r);
        }
    }
    basis.len()
}

pub fn has_full_column_rank(rows: &[BitRow], columns: usize) -> bool {
    rank(rows) == columns
}

/// Indices of a subset of `rows` whose XOR equals `target`, or `None` if the
/// target is outside the row space.
pub fn express(rows: &[BitRow], target: &BitRow) -> Option<Vec<usize>> {
    let n = rows.len();
    // each reduced row remembers which original rows it is built from
    let mut basis: Vec<(BitRow, BitRow)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        let mut combo = BitRow::unit(n, i);
        for (b, bc) in &basis {
            let pivot = b.lowest_set().unwrap();
            if r.get(pivot) {
                r.xor_assign(b);
                combo.xor_assign(bc);
            }
        }
        if !r.is_zero() {
            let pivot = r.lowest_set().unwrap();
            for (b, bc) in basis.iter_mut() {
                if b.get(pivot) {
                    b.xor_assign(&r);
                    bc.xor_assign(&combo);
                }
            }
            basis.push((r, combo));
        }
    }
    let mut t = target.clone();
    let mut used = BitRow::zeros(n);
    for (b, bc) in &basis {
        let pivot = b.lowest_set().unwrap();
        if t.get(pivot) {
            t.xor_assign(b);
            used.xor_assign(bc);
        }
    }
    t.is_zero().then(|| used.ones().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[u8]]) -> Vec<BitRow> {
        rows.iter().map(|r| BitRow::from_bits(r)).collect()
    }

    #[test]
    fn small_ranks() {
        assert_eq!(rank(&m(&[&[1, 0], &[0, 1], &[1, 1]])), 2);
        assert_eq!(rank(&m(&[&[1, 1], &[1, 1]])), 1);
        assert_eq!(rank(&m(&[&[0, 0, 0]])), 0);
        assert_eq!(rank(&[]), 0);
    }

    #[test]
    fn wide_rows_cross_word_boundary() {
        let mut a = BitRow::zeros(130);
        a.set(3, true);
        a.set(129, true);
        let b = BitRow::unit(130, 129);
        assert_eq!(rank(&[a.clone(), b.clone()]), 2);
        assert_eq!(express(&[a, b], &BitRow::unit(130, 3)), Some(vec![0, 1]));
    }

    #[test]
    fn express_finds_xor_recipe() {
        let rows = m(&[&[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]);
        let recipe = express(&rows, &BitRow::from_bits(&[1, 0, 0])).unwrap();
        assert_eq!(recipe, vec![0, 1, 2]);
        assert_eq!(express(&rows[..2], &BitRow::from_bits(&[1, 0, 0])), None);
    }

    fn brute_rank(rows: &[BitRow]) -> usize {
        // rank = log2 of the number of distinct subset sums
        let w = rows.first().map_or(0, |r| r.width());
        let mut sums = std::collections::HashSet::new();
        for mask in 0u32..(1 << rows.len()) {
            let mut acc = BitRow::zeros(w);
            for (i, r) in rows.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    acc.xor_assign(r);
                }
            }
            sums.insert(acc);
        }
        sums.len().trailing_zeros() as usize
    }

    proptest! {
        #[test]
        fn rank_matches_subset_sums(bits in prop::collection::vec(prop::collection::vec(0u8..2, 5), 1..7)) {
            let rows: Vec<BitRow> = bits.iter().map(|r| BitRow::from_bits(r)).collect();
            prop_assert_eq!(rank(&rows), brute_rank(&rows));
        }

        #[test]
        fn recipes_reproduce_target(
            bits in prop::collection::vec(prop::collection::vec(0u8..2, 6), 1..8),
            target in prop::collection::vec(0u8..2, 6),
        ) {
            let rows: Vec<BitRow> = bits.iter().map(|r| BitRow::from_bits(r)).collect();
            let t = BitRow::from_bits(&target);
            if let Some(recipe) = express(&rows, &t) {
                let mut acc = BitRow::zeros(6);
                for i in recipe { acc.xor_assign(&rows[i]); }
                prop_assert_eq!(acc, t);
            } else {
                let mut with = rows.clone();
                with.push(t);
                prop_assert_eq!(rank(&with), rank(&rows) + 1);
            }
        }
    }
}
