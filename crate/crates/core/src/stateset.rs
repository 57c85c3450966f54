use std::fmt;

/// A set of state indices over a fixed universe `0..capacity`, stored as
/// a bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    words: Vec<u64>,
    capacity: usize,
    len: usize,
}

impl StateSet {
    pub fn new(capacity: usize) -> Self {
        StateSet {
            words: vec![0; capacity.div_ceil(64)],
            capacity,
            len: 0,
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut words = vec![u64::MAX; capacity.div_ceil(64)];
        if !capacity.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (capacity % 64)) - 1;
            }
        }
        StateSet {
            words,
            capacity,
            len: capacity,
        }
    }

    /// Builds a set from indices; indices outside the universe panic.
    pub fn from_indices<I: IntoIterator<Item = usize>>(capacity: usize, indices: I) -> Self {
        let mut set = Self::new(capacity);
        for s in indices {
            set.insert(s);
        }
        set
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, s: usize) -> bool {
        s < self.capacity && self.words[s / 64] >> (s % 64) & 1 == 1
    }

    /// Returns `true` if the state was not present before.
    pub fn insert(&mut self, s: usize) -> bool {
        assert!(s < self.capacity, "state {s} outside a set of capacity {}", self.capacity);
        let w = &mut self.words[s / 64];
        let bit = 1u64 << (s % 64);
        if *w & bit != 0 {
            false
        } else {
            *w |= bit;
            self.len += 1;
            true
        }
    }

    /// Returns `true` if the state was present.
    pub fn remove(&mut self, s: usize) -> bool {
        if !self.contains(s) {
            return false;
        }
        self.words[s / 64] &= !(1u64 << (s % 64));
        self.len -= 1;
        true
    }

    /// Ascending iteration.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i * 64 + b)
            })
        })
    }

    fn from_words(words: Vec<u64>, capacity: usize) -> StateSet {
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        StateSet {
            words,
            capacity,
            len,
        }
    }

    pub fn complement(&self) -> StateSet {
        let full = StateSet::full(self.capacity);
        let words = self.words.iter().zip(&full.words).map(|(a, f)| !a & f).collect();
        StateSet::from_words(words, self.capacity)
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        let words = self
            .words
            .iter()
            .enumerate()
            .map(|(i, a)| a & other.words.get(i).copied().unwrap_or(0))
            .collect();
        StateSet::from_words(words, self.capacity)
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        let words = self
            .words
            .iter()
            .enumerate()
            .map(|(i, a)| a & !other.words.get(i).copied().unwrap_or(0))
            .collect();
        StateSet::from_words(words, self.capacity)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
