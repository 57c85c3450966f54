use std::fmt;

/// Which step-indexed store backs a bounded run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    Dense,
    Sparse { k: usize },
}

impl StoreKind {
    pub const DEFAULT_K: usize = 5;

    pub fn name(self) -> &'static str {
        match self {
            StoreKind::Dense => "dense",
            StoreKind::Sparse { .. } => "sparse",
        }
    }

    /// Spacing of stored indices; 1 for the dense store.
    pub fn spacing(self) -> usize {
        match self {
            StoreKind::Dense => 1,
            StoreKind::Sparse { k } => k,
        }
    }
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreKind::Dense => f.write_str("dense"),
            StoreKind::Sparse { k } => write!(f, "sparse(K={k})"),
        }
    }
}

/// Step-indexed upper bounds `get(s, r) >= P^max_s[reach unexplored within r steps]`.
///
/// Implementations keep `get(s, 0) = 0`, are non-decreasing in `r`, and
/// only ever lower values: after `update(s, r, p)` every `get(s, r')` is at
/// least `min(p, previous get(s, r'))`, and an update at `r` never lowers
/// anything for `r' < r` below what the update certifies.
pub trait BoundFunction {
    fn kind(&self) -> StoreKind;
    fn horizon(&self) -> usize;
    fn get(&self, s: usize, r: usize) -> f64;
    fn update(&mut self, s: usize, r: usize, p: f64);
}

/// Staircase storage over the indices `{0, K, 2K, ...} ∪ {n}`.
///
/// A write at `r` lowers the largest stored index `<= r` and, to keep the
/// staircase monotone, any smaller stored index above the new value. A
/// read at `r` returns the smallest stored index `>= r`. Rows are
/// allocated on first write; untouched rows read 0 at `r = 0` and 1
/// elsewhere. Rows are indexed by state and grow on demand.
#[derive(Debug, Clone)]
struct Staircase {
    n: usize,
    k: usize,
    slots: usize,
    rows: Vec<Option<Box<[f64]>>>,
}

impl Staircase {
    fn new(capacity: usize, n: usize, k: usize) -> Self {
        assert!(k >= 1, "store spacing must be positive");
        Staircase {
            n,
            k,
            slots: n.div_ceil(k) + 1,
            rows: vec![None; capacity],
        }
    }

    fn get(&self, s: usize, r: usize) -> f64 {
        if r == 0 {
            return 0.0;
        }
        if r > self.n {
            return 1.0;
        }
        match self.rows.get(s) {
            Some(Some(row)) => row[r.div_ceil(self.k)],
            _ => 1.0,
        }
    }

    fn update(&mut self, s: usize, r: usize, p: f64) {
        let r = r.min(self.n);
        let pos = if r == self.n { self.slots - 1 } else { r / self.k };
        if pos == 0 || p >= self.get_pos(s, pos) {
            return;
        }
        let slots = self.slots;
        if s >= self.rows.len() {
            self.rows.resize(s + 1, None);
        }
        let row = self.rows[s].get_or_insert_with(|| {
            let mut v = vec![1.0; slots].into_boxed_slice();
            v[0] = 0.0;
            v
        });
        let p = p.max(0.0);
        row[pos] = p;
        for j in (1..pos).rev() {
            if row[j] > p {
                row[j] = p;
            } else {
                break;
            }
        }
    }

    fn get_pos(&self, s: usize, pos: usize) -> f64 {
        match self.rows.get(s) {
            Some(Some(row)) => row[pos],
            _ => 1.0,
        }
    }

    fn allocated(&self) -> usize {
        self.rows.iter().filter(|r| r.is_some()).count()
    }
}

/// Stores every step `0..=n`.
#[derive(Debug, Clone)]
pub struct DenseStore(Staircase);

impl DenseStore {
    /// `capacity` pre-sizes the row table; further states are added on demand.
    pub fn new(capacity: usize, n: usize) -> Self {
        DenseStore(Staircase::new(capacity, n, 1))
    }

    /// States with an allocated row.
    pub fn allocated_states(&self) -> usize {
        self.0.allocated()
    }
}

impl BoundFunction for DenseStore {
    fn kind(&self) -> StoreKind {
        StoreKind::Dense
    }
    fn horizon(&self) -> usize {
        self.0.n
    }
    fn get(&self, s: usize, r: usize) -> f64 {
        self.0.get(s, r)
    }
    fn update(&mut self, s: usize, r: usize, p: f64) {
        self.0.update(s, r, p)
    }
}

/// Stores every `K`-th step plus the horizon; reads round up.
#[derive(Debug, Clone)]
pub struct SparseStore(Staircase);

impl SparseStore {
    pub fn new(capacity: usize, n: usize, k: usize) -> Self {
        SparseStore(Staircase::new(capacity, n, k))
    }

    /// Stored values per allocated state: `ceil(n / K) + 1`.
    pub fn slots_per_state(&self) -> usize {
        self.0.slots
    }

    pub fn allocated_states(&self) -> usize {
        self.0.allocated()
    }
}

impl BoundFunction for SparseStore {
    fn kind(&self) -> StoreKind {
        StoreKind::Sparse { k: self.0.k }
    }
    fn horizon(&self) -> usize {
        self.0.n
    }
    fn get(&self, s: usize, r: usize) -> f64 {
        self.0.get(s, r)
    }
    fn update(&mut self, s: usize, r: usize, p: f64) {
        self.0.update(s, r, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_and_trivial() {
        let d = DenseStore::new(3, 10);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(0, 5), 1.0);
        let mut d = d;
        d.update(1, 4, 1.0);
        assert_eq!(d.allocated_states(), 0);
    }

    #[test]
    fn dense_min_over_time() {
        let mut d = DenseStore::new(1, 10);
        d.update(0, 3, 0.5);
        d.update(0, 3, 0.7);
        assert_eq!(d.get(0, 3), 0.5);
        assert_eq!(d.get(0, 2), 0.5);
        assert_eq!(d.get(0, 4), 1.0);
    }

    #[test]
    fn sparse_staircase() {
        let mut s = SparseStore::new(1, 100, 10);
        assert_eq!(s.slots_per_state(), 11);
        s.update(0, 15, 0.3);
        assert_eq!(s.get(0, 10), 0.3);
        assert_eq!(s.get(0, 9), 0.3);
        assert_eq!(s.get(0, 11), 1.0);
        assert_eq!(s.get(0, 15), 1.0);

        let mut s = SparseStore::new(1, 12, 5);
        s.update(0, 3, 0.2);
        assert_eq!(s.get(0, 4), 1.0);
        assert_eq!(s.allocated_states(), 0);
        s.update(0, 12, 0.4);
        assert_eq!(s.get(0, 11), 0.4);
        assert_eq!(s.get(0, 10), 0.4);
        s.update(0, 7, 0.1);
        assert_eq!(s.get(0, 1), 0.1);
        assert_eq!(s.get(0, 6), 0.4);
        assert_eq!(s.get(0, 13), 1.0);
    }

    #[test]
    fn writes_propagate_down() {
        let mut s = SparseStore::new(1, 20, 5);
        s.update(0, 20, 0.2);
        assert_eq!(s.get(0, 1), 0.2);
        assert_eq!(s.get(0, 20), 0.2);
        assert_eq!(s.kind(), StoreKind::Sparse { k: 5 });
        assert_eq!(s.horizon(), 20);
    }

    #[test]
    fn rows_grow_on_demand() {
        let mut d = DenseStore::new(0, 4);
        assert_eq!(d.get(7, 2), 1.0);
        d.update(7, 2, 0.25);
        assert_eq!(d.get(7, 1), 0.25);
        assert_eq!(d.get(3, 2), 1.0);
        assert_eq!(d.allocated_states(), 1);
    }
}
