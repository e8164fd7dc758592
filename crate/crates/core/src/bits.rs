//! Minimal packed bit rows shared by the clique expansion and GF(2) elimination.

const WORD: usize = 64;

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(bits: usize) -> Self {
        Self {
            words: vec![0; words_for(bits)],
        }
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / WORD] |= 1 << (i % WORD);
    }

    #[cfg(test)]
    pub fn contains(&self, i: usize) -> bool {
        self.words
            .get(i / WORD)
            .is_some_and(|w| w & (1 << (i % WORD)) != 0)
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// Clears every bit at or below `i`.
    pub fn clear_through(&mut self, i: usize) {
        let w = i / WORD;
        for word in self.words.iter_mut().take(w) {
            *word = 0;
        }
        if let Some(word) = self.words.get_mut(w) {
            let keep = if i % WORD == WORD - 1 {
                0
            } else {
                !0u64 << (i % WORD + 1)
            };
            *word &= keep;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + tz)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clear_through_word_edges() {
        let mut b = BitSet::new(130);
        for i in [0, 5, 63, 64, 127, 129] {
            b.insert(i);
        }
        b.clear_through(63);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![64, 127, 129]);
        assert!(b.contains(64) && !b.contains(63) && !b.contains(500));
        b.clear_through(64);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![127, 129]);
        b.clear_through(200);
        assert!(b.is_empty());
    }
}
