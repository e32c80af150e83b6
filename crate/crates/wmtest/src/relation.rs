//! Finite binary relations over event indices, stored as dense bit rows.

use fixedbitset::FixedBitSet;

/// A binary relation over the universe `0..size()`.
///
/// Indices are positions in the owning execution's event vector. All
/// combinators return fresh relations and leave their inputs untouched.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    rows: Vec<FixedBitSet>,
}

impl std::fmt::Debug for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

impl Relation {
    pub fn empty(size: usize) -> Self {
        Relation {
            rows: vec![FixedBitSet::with_capacity(size); size],
        }
    }

    pub fn from_pairs(size: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rel = Relation::empty(size);
        for (a, b) in pairs {
            rel.insert(a, b);
        }
        rel
    }

    /// `[A]`: the identity restricted to `set`.
    pub fn identity_on(size: usize, set: &FixedBitSet) -> Self {
        let mut rel = Relation::empty(size);
        for a in set.ones() {
            rel.insert(a, a);
        }
        rel
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let fresh = !self.rows[a].contains(b);
        self.rows[a].insert(b);
        fresh
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a].contains(b)
    }

    pub fn row(&self, a: usize) -> &FixedBitSet {
        &self.rows[a]
    }

    /// Adds `(a, b)` for every `b` in `bits`.
    pub fn insert_row(&mut self, a: usize, bits: &FixedBitSet) {
        self.rows[a].union_with(bits);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.is_clear())
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.ones().map(move |b| (a, b)))
    }

    pub fn union(&self, other: &Relation) -> Relation {
        assert_eq!(self.size(), other.size(), "relations over different universes");
        let mut out = self.clone();
        for (row, o) in out.rows.iter_mut().zip(&other.rows) {
            row.union_with(o);
        }
        out
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        assert_eq!(self.size(), other.size(), "relations over different universes");
        let mut out = self.clone();
        for (row, o) in out.rows.iter_mut().zip(&other.rows) {
            row.intersect_with(o);
        }
        out
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a.is_subset(b))
    }

    pub fn inverse(&self) -> Relation {
        let mut out = Relation::empty(self.size());
        for (a, b) in self.pairs() {
            out.insert(b, a);
        }
        out
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.size(), other.size(), "relations over different universes");
        let mut out = Relation::empty(self.size());
        for (a, row) in self.rows.iter().enumerate() {
            for mid in row.ones() {
                out.rows[a].union_with(&other.rows[mid]);
            }
        }
        out
    }

    /// `B?`
    pub fn reflexive_closure(&self) -> Relation {
        let mut out = self.clone();
        for a in 0..self.size() {
            out.insert(a, a);
        }
        out
    }

    /// `B+`, by Warshall's algorithm on bit rows.
    pub fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        let n = self.size();
        for k in 0..n {
            let pivot = out.rows[k].clone();
            for i in 0..n {
                if out.rows[i].contains(k) {
                    out.rows[i].union_with(&pivot);
                }
            }
        }
        out
    }

    /// `B*`
    pub fn reflexive_transitive_closure(&self) -> Relation {
        self.transitive_closure().reflexive_closure()
    }

    /// Keeps the pairs whose endpoints both lie in `set`.
    pub fn restrict(&self, set: &FixedBitSet) -> Relation {
        let mut out = Relation::empty(self.size());
        for a in set.ones() {
            let mut row = self.rows[a].clone();
            row.intersect_with(set);
            out.rows[a] = row;
        }
        out
    }

    pub fn is_irreflexive(&self) -> bool {
        self.first_reflexive().is_none()
    }

    pub fn first_reflexive(&self) -> Option<usize> {
        (0..self.size()).find(|&a| self.rows[a].contains(a))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// A topological order of the universe (smallest index first among
    /// ready nodes), or `None` when the relation has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.size();
        let mut indeg = vec![0usize; n];
        for (_, b) in self.pairs() {
            indeg[b] += 1;
        }
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
            .filter(|&a| indeg[a] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(a)) = ready.pop() {
            order.push(a);
            for b in self.rows[a].ones() {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(std::cmp::Reverse(b));
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(n: usize, pairs: &[(usize, usize)]) -> Relation {
        Relation::from_pairs(n, pairs.iter().copied())
    }

    #[test]
    fn empty_relation_is_acyclic_and_irreflexive() {
        let r = Relation::empty(3);
        assert!(r.is_acyclic());
        assert!(r.is_irreflexive());
    }

    #[test]
    fn two_cycle_is_cyclic_but_irreflexive() {
        let r = rel(2, &[(0, 1), (1, 0)]);
        assert!(!r.is_acyclic());
        assert!(r.is_irreflexive());
    }

    #[test]
    fn self_loop_is_neither() {
        let r = rel(1, &[(0, 0)]);
        assert!(!r.is_acyclic());
        assert!(!r.is_irreflexive());
    }

    #[test]
    fn closure_of_chain() {
        let r = rel(3, &[(0, 1), (1, 2)]).transitive_closure();
        assert_eq!(r, rel(3, &[(0, 1), (1, 2), (0, 2)]));
    }

    #[test]
    fn closure_of_cycle_is_reflexive_on_members() {
        let r = rel(3, &[(0, 1), (1, 0), (1, 2)]).transitive_closure();
        assert!(r.contains(0, 0) && r.contains(1, 1));
        assert!(!r.contains(2, 2));
    }

    #[test]
    fn composition_and_inverse() {
        let a = rel(3, &[(0, 1)]);
        let b = rel(3, &[(1, 2)]);
        assert_eq!(a.compose(&b), rel(3, &[(0, 2)]));
        assert_eq!(a.inverse(), rel(3, &[(1, 0)]));
    }

    #[test]
    fn restrict_drops_pairs_leaving_the_set() {
        let mut set = FixedBitSet::with_capacity(3);
        set.insert(0);
        set.insert(2);
        let r = rel(3, &[(0, 1), (0, 2), (1, 2)]).restrict(&set);
        assert_eq!(r, rel(3, &[(0, 2)]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_relation() -> impl Strategy<Value = Relation> {
            (1usize..8).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..20)
                    .prop_map(move |pairs| Relation::from_pairs(n, pairs))
            })
        }

        /// Least fixpoint of R -> B u R;R by naive iteration.
        fn naive_closure(base: &Relation) -> Relation {
            let mut cur = base.clone();
            loop {
                let next = base.union(&cur.compose(&cur));
                if next == cur {
                    return cur;
                }
                cur = next;
            }
        }

        proptest! {
            #[test]
            fn closure_is_idempotent(r in arb_relation()) {
                let c = r.transitive_closure();
                prop_assert_eq!(c.transitive_closure(), c);
            }

            #[test]
            fn closure_matches_fixpoint(r in arb_relation()) {
                prop_assert_eq!(r.transitive_closure(), naive_closure(&r));
            }

            #[test]
            fn acyclic_iff_closure_irreflexive(r in arb_relation()) {
                prop_assert_eq!(r.is_acyclic(), r.transitive_closure().is_irreflexive());
            }

            #[test]
            fn combinators_do_not_mutate(r in arb_relation()) {
                let before = r.clone();
                let _ = r.inverse();
                let _ = r.compose(&r);
                let _ = r.reflexive_transitive_closure();
                prop_assert_eq!(r, before);
            }
        }
    }
}
