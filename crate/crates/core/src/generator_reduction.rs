//! Generator selection: drop terms reachable by nested anticommutation of
//! already selected ones, and pack the rest into mutually commuting groups.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::term_algebra::{pair_anticommutator, pair_commutator, reduce_linear, term_adjoint, HermitianPair, Term};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratorGroup {
    pub members: Vec<HermitianPair>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratorCollection {
    pub groups: Vec<GeneratorGroup>,
}

impl GeneratorCollection {
    pub fn members(&self) -> impl Iterator<Item = &HermitianPair> {
        self.groups.iter().flat_map(|g| g.members.iter())
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn group_commutes(g: &HermitianPair, group: &GeneratorGroup) -> bool {
    group
        .members
        .iter()
        .all(|m| pair_commutator(g, m).map(|c| c.is_zero_operator()).unwrap_or(false))
}

fn ladder_mask(t: &Term) -> u64 {
    t.v | t.w
}

struct Assembly<'a> {
    target: Term,
    gens: &'a [HermitianPair],
}

impl Assembly<'_> {
    fn matches_at(&self, word: &Term, i: usize) -> bool {
        let b = 1u64 << i;
        word.v & b == self.target.v & b && word.w & b == self.target.w & b
    }

    /// Nonzero ladder words of the reduced anticommutator {word, g}.
    fn compose(&self, word: &Term, g: &HermitianPair) -> Vec<Term> {
        if word.is_diagonal() {
            return vec![g.term, term_adjoint(&g.term)];
        }
        let Ok(anti) = pair_anticommutator(&HermitianPair::unit(*word), g) else {
            return Vec::new();
        };
        reduce_linear(&anti).iter().map(|st| st.term).filter(|t| !t.is_diagonal()).collect()
    }

    fn search(&self, i: usize, word: Term, usage: &mut Vec<u8>) -> bool {
        if word.v == self.target.v && word.w == self.target.w {
            return true;
        }
        if i == self.target.n {
            return false;
        }
        if self.matches_at(&word, i) {
            return self.search(i + 1, word, usage);
        }
        if usage[i] >= 2 {
            return false;
        }
        for g in self.gens.iter().filter(|g| ladder_mask(&g.term) >> i & 1 == 1) {
            let support = ladder_mask(&g.term);
            let bits = (0..usage.len()).filter(|&q| support >> q & 1 == 1);
            if bits.clone().any(|q| usage[q] >= 2) {
                continue;
            }
            for q in bits.clone() {
                usage[q] += 1;
            }
            let found = self.compose(&word, g).into_iter().any(|c| self.search(i, c, usage));
            for q in bits {
                usage[q] -= 1;
            }
            if found {
                return true;
            }
        }
        false
    }
}

/// Whether `t` can be assembled from `gens` by nested anticommutation,
/// matching ladder positions in ascending qubit order with every qubit used
/// by at most two chosen generators. Pairs carrying σ⁰/σ¹ factors fall back
/// to exact word matching.
pub fn is_generatable(t: &HermitianPair, gens: &[HermitianPair]) -> bool {
    let exact = !t.term.is_ladder_only() || gens.iter().any(|g| !g.term.is_ladder_only());
    if exact || t.term.is_diagonal() {
        return gens.iter().any(|g| g.term == t.term);
    }
    let gens: Vec<HermitianPair> = gens.iter().filter(|g| g.n() == t.n() && !g.term.is_diagonal()).copied().collect();
    [t.term, term_adjoint(&t.term)].into_iter().any(|target| {
        let a = Assembly { target, gens: &gens };
        a.search(0, Term::identity(t.n()), &mut vec![0u8; t.n()])
    })
}

/// Greedy grouping in ascending (locality, v, w, x, y) order. With `reduce`
/// off every term is kept.
pub fn select_generators(k: &[HermitianPair], reduce: bool) -> GeneratorCollection {
    let mut sorted: Vec<HermitianPair> = k.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    sorted.sort_by_key(|p| p.term.order_key());
    let mut out = GeneratorCollection::default();
    let mut selected: Vec<HermitianPair> = Vec::new();
    for p in sorted {
        if reduce && is_generatable(&p, &selected) {
            continue;
        }
        match out.groups.iter_mut().find(|g| group_commutes(&p, g)) {
            Some(g) => g.members.push(p),
            None => out.groups.push(GeneratorGroup { members: vec![p] }),
        }
        selected.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutator_search::{search_linear, SearchConfig};
    use crate::constraints::{feasible_set, Constraint, LinearConstraint};
    use crate::term_algebra::{term_apply, ToMatrix};
    use proptest::prelude::*;

    fn hop(n: usize, i: usize, j: usize) -> HermitianPair {
        HermitianPair::unit(Term::ladder(n, 1 << i, 1 << j).unwrap())
    }

    fn flip(n: usize, i: usize) -> HermitianPair {
        HermitianPair::unit(Term::ladder(n, 1 << i, 0).unwrap())
    }

    #[test]
    fn chained_hopping_is_generatable() {
        assert!(is_generatable(&hop(3, 0, 2), &[hop(3, 0, 1), hop(3, 1, 2)]));
        assert!(is_generatable(&hop(3, 1, 2), &[hop(3, 0, 1), hop(3, 0, 2)]));
        assert!(is_generatable(&hop(3, 0, 1), &[hop(3, 0, 1)]));
        assert!(!is_generatable(&hop(4, 2, 3), &[hop(4, 0, 1)]));
        assert!(!is_generatable(&hop(3, 0, 1), &[]));
    }

    #[test]
    fn diagonal_factors_use_exact_matching() {
        let t = HermitianPair::unit(Term::new(3, 0b100, 0, 0b001, 0b010).unwrap());
        assert!(!is_generatable(&t, &[hop(3, 0, 1)]));
        assert!(is_generatable(&t, &[t]));
    }

    #[test]
    fn flips_form_one_group() {
        let k: Vec<_> = (0..5).map(|i| flip(5, i)).collect();
        let c = select_generators(&k, true);
        assert_eq!(c.groups.len(), 1);
        assert_eq!(c.groups[0].members.len(), 5);
        assert!(select_generators(&[], true).groups.is_empty());
    }

    #[test]
    fn ring_edges_form_two_layers() {
        let ring = [hop(4, 0, 1), hop(4, 1, 2), hop(4, 2, 3), hop(4, 0, 3)];
        let c = select_generators(&ring, true);
        assert_eq!(c.groups.len(), 2);
        assert_eq!(c.groups[0].members, vec![hop(4, 0, 1), hop(4, 2, 3)]);
        assert_eq!(c.groups[1].members, vec![hop(4, 0, 3), hop(4, 1, 2)]);
        let chosen: Vec<_> = c.members().copied().collect();
        assert!(is_generatable(&hop(4, 0, 2), &chosen));
        assert!(is_generatable(&hop(4, 1, 3), &chosen));
    }

    #[test]
    fn no_reduce_keeps_everything() {
        let k = [hop(3, 0, 1), hop(3, 1, 2), hop(3, 0, 2)];
        assert_eq!(select_generators(&k, false).len(), 3);
        assert_eq!(select_generators(&k, true).len(), 2);
    }

    #[test]
    fn group_commutes_examples() {
        let g = GeneratorGroup { members: vec![hop(4, 0, 1)] };
        assert!(group_commutes(&hop(4, 2, 3), &g));
        assert!(!group_commutes(&hop(4, 1, 2), &g));
        assert!(group_commutes(&hop(4, 1, 2), &GeneratorGroup::default()));
    }

    fn components(members: &[u64], words: &[Term]) -> Vec<usize> {
        let mut label: Vec<usize> = (0..members.len()).collect();
        fn root(l: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while l[r] != r {
                r = l[r];
            }
            l[i] = r;
            r
        }
        for (i, &x) in members.iter().enumerate() {
            for t in words {
                if let Some(y) = term_apply(t, x) {
                    if let Ok(j) = members.binary_search(&y) {
                        let (a, b) = (root(&mut label, i), root(&mut label, j));
                        label[a] = b;
                    }
                }
            }
        }
        (0..members.len()).map(|i| root(&mut label, i)).collect()
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
    }

    fn words(ps: &[HermitianPair]) -> Vec<Term> {
        ps.iter().flat_map(|p| [p.term, term_adjoint(&p.term)]).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn groups_commute_and_reachability_is_preserved(
            rows in proptest::collection::vec(proptest::collection::vec(-1i64..=1, 6), 1..=2),
            l in 2usize..=3,
            rhs in 0i64..=1,
        ) {
            let cons: Vec<LinearConstraint> = rows.into_iter().filter(|r| r.iter().any(|&c| c != 0)).map(|r| LinearConstraint::new(r, rhs).unwrap()).collect();
            let k = search_linear(6, &cons, &SearchConfig::new(l)).unwrap();
            let coll = select_generators(&k, true);
            for g in &coll.groups {
                for a in &g.members {
                    for b in &g.members {
                        let (ma, mb) = (a.lower().unwrap(), b.lower().unwrap());
                        prop_assert!((&ma * &mb - &mb * &ma).iter().all(|z| z.norm() <= 1e-12));
                    }
                }
            }
            let wrapped: Vec<Constraint> = cons.iter().cloned().map(Constraint::Linear).collect();
            let feas = feasible_set(&wrapped, 6).unwrap();
            let chosen: Vec<HermitianPair> = coll.members().copied().collect();
            let full = components(&feas.members, &words(&k));
            let reduced = components(&feas.members, &words(&chosen));
            prop_assert!(same_partition(&full, &reduced));
            prop_assert_eq!(select_generators(&k, true), coll);
        }
    }
}
