//! Newcomer income multisets: the two-rack components, the general pool with
//! its remaining-node blocks, candidate selection and feasibility trimming.
//!
//! Every coefficient is an income expressed as a multiple of beta_e.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::threshold::CoeffList;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncomeTerm {
    pub coeff: Rational,
    pub rack: usize,
    pub ordinal: usize,
}

/// Which construction produced an income sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// First d_c^1+1 newcomers of rack 0.
    FirstRack,
    /// Remaining rack-0 newcomers, then rack-1 newcomers.
    WithRemainingFirstRack,
    /// Rack-1 newcomers only.
    SecondRack,
    /// Minimum two-rack selection; `true` when the remaining rack-0 nodes are in.
    TwoRack { remaining_first_rack: bool },
    /// All n newcomers, rack by rack.
    Pool,
    /// Remaining-node block of one rack.
    Block { rack: usize },
    /// A candidate minimum set: rack indices whose remaining-node block is included.
    Candidate { included: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncomeSequence {
    pub terms: Vec<IncomeTerm>,
    pub origin: Origin,
}

impl IncomeSequence {
    fn new(origin: Origin) -> Self {
        Self { terms: Vec::new(), origin }
    }

    fn push(&mut self, coeff: Rational, rack: usize) {
        let ordinal = self.terms.len();
        self.terms.push(IncomeTerm { coeff, rack, ordinal });
    }

    fn extend_from(&mut self, other: &IncomeSequence) {
        for t in &other.terms {
            self.push(t.coeff.clone(), t.rack);
        }
    }

    fn truncate(&mut self, k: usize) {
        self.terms.truncate(k);
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeffs(&self) -> Vec<Rational> {
        self.terms.iter().map(|t| t.coeff.clone()).collect()
    }

    pub fn sum(&self) -> Rational {
        self.terms.iter().map(|t| t.coeff.clone()).sum()
    }

    /// Coefficients sorted ascending, for multiset comparisons.
    pub fn sorted_coeffs(&self) -> Vec<Rational> {
        let mut c = self.coeffs();
        c.sort();
        c
    }
}

impl fmt::Display for IncomeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&rational::render(&t.coeff))?;
        }
        f.write_str("}")
    }
}

fn clamp(q: Rational) -> Rational {
    if q.is_negative() {
        Rational::zero()
    } else {
        q
    }
}

fn count(n: usize) -> Rational {
    rational::from_usize(n)
}

/// Expensive-traffic income left for a newcomer once `newcomers_elsewhere`
/// nodes of other racks were already replaced: max(0, d_e - newcomers_elsewhere).
fn residual_expensive(expensive_degree: usize, newcomers_elsewhere: usize) -> Rational {
    count(expensive_degree.saturating_sub(newcomers_elsewhere))
}

/// The three two-rack component multisets (I1, I2, I3).
pub fn two_rack_components(
    cfg: &SystemConfig,
) -> Result<(IncomeSequence, IncomeSequence, IncomeSequence)> {
    if cfg.rack_count() != 2 {
        return Err(Error::NotTwoRack(cfg.rack_count()));
    }
    let k = cfg.k as i64;
    let dc1 = cfg.cheap_degree(0) as i64;
    let dc2 = cfg.cheap_degree(1) as i64;
    let n1 = cfg.racks()[0].nodes as i64;
    let de1 = count(cfg.expensive_degree(0));
    let de2 = cfg.expensive_degree(1);
    let tau = &cfg.tau;

    let mut first = IncomeSequence::new(Origin::FirstRack);
    for i in 0..=dc1.min(k - 1) {
        first.push(clamp(count((dc1 - i) as usize) * tau + &de1), 0);
    }

    let tail = (k - dc1 - 1).max(0) as usize;

    let mut with_remaining = IncomeSequence::new(Origin::WithRemainingFirstRack);
    let copies = (k - dc1 - 1).min(n1 - dc1 - 1);
    for _ in 0..copies.max(0) {
        with_remaining.push(de1.clone(), 0);
    }
    // rack-1 newcomers after every rack-0 node was replaced
    let offset = residual_expensive(de2, n1 as usize);
    let upper = dc2.min(k - n1 - 1);
    for i in 0..=upper {
        if upper < 0 {
            break;
        }
        with_remaining.push(clamp(count((dc2 - i) as usize) * tau + &offset), 1);
    }
    while with_remaining.len() < tail {
        with_remaining.push(offset.clone(), 1);
    }

    let mut second = IncomeSequence::new(Origin::SecondRack);
    // rack-1 newcomers after the first d_c^1+1 rack-0 newcomers
    let offset = residual_expensive(de2, (dc1 + 1) as usize);
    let upper = dc2.min(k - dc1 - 2);
    for i in 0..=upper {
        if upper < 0 {
            break;
        }
        second.push(clamp(count((dc2 - i) as usize) * tau + &offset), 1);
    }
    while second.len() < tail {
        second.push(offset.clone(), 1);
    }

    Ok((first, with_remaining, second))
}

/// The two-rack minimum income sequence: I1 alone when k <= d_c^1+1,
/// otherwise I1 u I2 when sum(I2) < sum(I3) strictly, else I1 u I3.
pub fn two_rack_min_incomes(cfg: &SystemConfig) -> Result<IncomeSequence> {
    let (first, with_remaining, second) = two_rack_components(cfg)?;
    if cfg.k <= cfg.cheap_degree(0) + 1 {
        let mut out = first;
        out.truncate(cfg.k);
        return Ok(out);
    }
    let remaining_first_rack = with_remaining.sum() < second.sum();
    let mut out = IncomeSequence::new(Origin::TwoRack { remaining_first_rack });
    out.extend_from(&first);
    out.extend_from(if remaining_first_rack { &with_remaining } else { &second });
    Ok(out)
}

/// Incomes of all n newcomers, rack by rack, with each rack's
/// remaining-node block split out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncomePool {
    /// Every newcomer in construction order.
    pub pool: IncomeSequence,
    /// First d_c^j+1 newcomers of each rack.
    pub main_blocks: Vec<IncomeSequence>,
    /// The n_j - d_c^j - 1 remaining newcomers of each rack.
    pub blocks: Vec<IncomeSequence>,
    /// Number of involved racks.
    pub involved: usize,
}

pub fn general_income_pool(cfg: &SystemConfig) -> IncomePool {
    let tau = &cfg.tau;
    let mut pool = IncomeSequence::new(Origin::Pool);
    let mut main_blocks = Vec::with_capacity(cfg.rack_count());
    let mut blocks = Vec::with_capacity(cfg.rack_count());
    let mut replaced_before = 0usize;
    let mut involved = None;
    for (j, rack) in cfg.racks().iter().enumerate() {
        let offset = residual_expensive(cfg.expensive_degree(j), replaced_before);
        let mut main = IncomeSequence::new(Origin::Block { rack: j });
        for i in 0..=rack.cheap_degree {
            main.push(count(rack.cheap_degree - i) * tau + &offset, j);
        }
        let mut block = IncomeSequence::new(Origin::Block { rack: j });
        for _ in 0..rack.nodes - rack.cheap_degree - 1 {
            block.push(offset.clone(), j);
        }
        pool.extend_from(&main);
        pool.extend_from(&block);
        main_blocks.push(main);
        blocks.push(block);
        replaced_before += rack.cheap_degree + 1;
        if involved.is_none() && replaced_before >= cfg.k {
            involved = Some(j + 1);
        }
    }
    IncomePool {
        pool,
        main_blocks,
        blocks,
        involved: involved.unwrap_or(cfg.rack_count()),
    }
}

impl IncomePool {
    /// Racks whose remaining-node block may be toggled: 0..involved-1.
    pub fn optional_blocks(&self) -> usize {
        self.involved.saturating_sub(1)
    }

    fn candidate(&self, k: usize, included: &[usize]) -> Result<IncomeSequence> {
        let limit = self.optional_blocks();
        if let Some(&bad) = included.iter().find(|&&j| j >= limit) {
            return Err(Error::Index { index: bad, limit });
        }
        let mut inc: Vec<usize> = included.to_vec();
        inc.sort_unstable();
        inc.dedup();
        let mut out = IncomeSequence::new(Origin::Candidate { included: inc.clone() });
        for j in 0..self.involved {
            out.extend_from(&self.main_blocks[j]);
            // the last involved rack's block only matters when the main blocks
            // run out before k terms
            if inc.contains(&j) || j + 1 == self.involved {
                out.extend_from(&self.blocks[j]);
            }
        }
        // only reachable when every rack's main block together stays below k
        if out.len() < k {
            return Err(Error::ShortCandidate { terms: out.len(), k });
        }
        out.truncate(k);
        Ok(out)
    }
}

/// Candidate minimum set that keeps the remaining-node blocks of exactly the
/// racks in `included` (0-based, each below `involved - 1`), truncated to k.
pub fn candidate_sequence(cfg: &SystemConfig, included: &[usize]) -> Result<IncomeSequence> {
    general_income_pool(cfg).candidate(cfg.k, included)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Greedy,
    Exhaustive,
}

/// One candidate evaluated during selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateEval {
    pub included: Vec<usize>,
    pub sum: Rational,
}

impl fmt::Display for CandidateEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.included.iter().map(|j| format!("I^{}", j + 1)).collect();
        write!(f, "{{{}}} -> {}", names.join(","), rational::render(&self.sum))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub incomes: IncomeSequence,
    pub audit: Vec<CandidateEval>,
}

/// Minimum-sum candidate selection over the remaining-node blocks.
/// Candidates with fewer than k incomes are skipped.
///
/// Greedy starts with every optional block included and, rack by rack, drops a
/// block only when that strictly lowers the truncated sum. Exhaustive scores
/// all 2^(s-1) subsets; ties go to fewer blocks, then the lexicographically
/// smallest subset.
pub fn min_mincut_incomes(cfg: &SystemConfig, mode: SelectionMode) -> Selection {
    let pool = general_income_pool(cfg);
    let optional = pool.optional_blocks();
    // None for candidates too short to describe k newcomers
    let eval = |included: &[usize]| match pool.candidate(cfg.k, included) {
        Ok(seq) => {
            let sum = seq.sum();
            Some((seq, sum))
        }
        Err(Error::ShortCandidate { .. }) => None,
        Err(e) => panic!("subset drawn from the optional blocks: {e}"),
    };
    match mode {
        SelectionMode::Greedy => {
            let mut included: Vec<usize> = (0..optional).collect();
            let (mut best, mut best_sum) = eval(&included).expect("all blocks cover k newcomers");
            let mut audit = vec![CandidateEval { included: included.clone(), sum: best_sum.clone() }];
            for j in 0..optional {
                let trial: Vec<usize> = included.iter().copied().filter(|&x| x != j).collect();
                let Some((seq, sum)) = eval(&trial) else { continue };
                audit.push(CandidateEval { included: trial.clone(), sum: sum.clone() });
                if sum < best_sum {
                    included = trial;
                    best = seq;
                    best_sum = sum;
                }
            }
            Selection { incomes: best, audit }
        }
        SelectionMode::Exhaustive => {
            let mut audit = Vec::with_capacity(1 << optional);
            let mut best: Option<(Rational, usize, Vec<usize>, IncomeSequence)> = None;
            for mask in 0u64..(1u64 << optional) {
                let included: Vec<usize> = (0..optional).filter(|j| mask >> j & 1 == 1).collect();
                let Some((seq, sum)) = eval(&included) else { continue };
                audit.push(CandidateEval { included: included.clone(), sum: sum.clone() });
                let better = match &best {
                    None => true,
                    Some((s, n, inc, _)) => {
                        (&sum, included.len(), &included) < (s, *n, inc)
                    }
                };
                if better {
                    best = Some((sum, included.len(), included, seq));
                }
            }
            let (_, _, _, incomes) = best.expect("all blocks cover k newcomers");
            Selection { incomes, audit }
        }
    }
}

/// Drops every coefficient above d_c^1 tau + d_e^1 and sorts the rest
/// ascending.
pub fn feasibility_trim(incomes: &IncomeSequence, cfg: &SystemConfig) -> Result<CoeffList> {
    if incomes.is_empty() {
        return Err(Error::EmptyIncome);
    }
    let bound = cfg.feasibility_bound();
    let mut kept: Vec<Rational> = incomes
        .terms
        .iter()
        .filter(|t| t.coeff <= bound)
        .map(|t| t.coeff.clone())
        .collect();
    kept.sort();
    CoeffList::new(kept, cfg.k)
}

/// The rack model's CoeffList: greedy selection followed by trimming.
pub fn rack_coeffs(cfg: &SystemConfig) -> Result<(Selection, CoeffList)> {
    let selection = min_mincut_incomes(cfg, SelectionMode::Greedy);
    let coeffs = feasibility_trim(&selection.incomes, cfg)?;
    Ok((selection, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn two_rack_k(k: usize) -> SystemConfig {
        SystemConfig::simple(k, 4, int(2), &[(3, 1), (3, 2)]).unwrap()
    }

    fn three_rack(tau: Rational) -> SystemConfig {
        SystemConfig::simple(7, 8, tau, &[(3, 1), (4, 2), (4, 3)]).unwrap()
    }

    #[test]
    fn two_rack_components_match_worked_examples() {
        let (a, b, c) = two_rack_components(&two_rack_k(4)).unwrap();
        assert_eq!(a.coeffs(), ints(&[5, 3]));
        assert_eq!(b.coeffs(), ints(&[3, 4]));
        assert_eq!(c.coeffs(), ints(&[4, 2]));

        let (a, b, c) = two_rack_components(&two_rack_k(3)).unwrap();
        assert_eq!(a.coeffs(), ints(&[5, 3]));
        assert_eq!(b.coeffs(), ints(&[3]));
        assert_eq!(c.coeffs(), ints(&[4]));

        let cfg = SystemConfig::simple(3, 6, int(2), &[(2, 1), (5, 4)]).unwrap();
        let (a, b, c) = two_rack_components(&cfg).unwrap();
        assert_eq!(a.coeffs(), ints(&[7, 5]));
        assert_eq!(b.coeffs(), ints(&[8]));
        assert_eq!(c.coeffs(), ints(&[8]));
    }

    #[test]
    fn two_rack_components_reject_other_rack_counts() {
        assert_eq!(two_rack_components(&three_rack(int(2))).unwrap_err(), Error::NotTwoRack(3));
        assert!(matches!(two_rack_min_incomes(&three_rack(int(2))), Err(Error::NotTwoRack(3))));
    }

    #[test]
    fn two_rack_selection_follows_strict_comparison() {
        let i = two_rack_min_incomes(&two_rack_k(4)).unwrap();
        assert_eq!(i.coeffs(), ints(&[5, 3, 4, 2]));
        assert_eq!(i.origin, Origin::TwoRack { remaining_first_rack: false });

        let i = two_rack_min_incomes(&two_rack_k(3)).unwrap();
        assert_eq!(i.coeffs(), ints(&[5, 3, 3]));
        assert_eq!(i.origin, Origin::TwoRack { remaining_first_rack: true });
    }

    #[test]
    fn small_k_keeps_only_first_rack_terms() {
        let cfg = SystemConfig::simple(2, 6, int(2), &[(6, 5), (6, 5)]).unwrap();
        let i = two_rack_min_incomes(&cfg).unwrap();
        assert_eq!(i.coeffs(), ints(&[11, 9]));
        assert_eq!(i.origin, Origin::FirstRack);
    }

    #[test]
    fn general_pool_matches_three_rack_example() {
        // evaluate the symbolic pool at tau = 11/5
        let tau = ratio(11, 5);
        let pool = general_income_pool(&three_rack(tau.clone()));
        let t = |a: i64, b: i64| int(a) * &tau + int(b);
        let expected = vec![
            t(1, 7), t(0, 7), int(7),
            t(2, 4), t(1, 4), t(0, 4), int(4),
            t(3, 0), t(2, 0), t(1, 0), int(0),
        ];
        assert_eq!(pool.pool.coeffs(), expected);
        assert_eq!(pool.involved, 3);
        assert_eq!(pool.blocks[0].coeffs(), ints(&[7]));
        assert_eq!(pool.blocks[1].coeffs(), ints(&[4]));
        assert!(pool.blocks[2].is_empty());
    }

    #[test]
    fn pool_without_spare_nodes_has_empty_blocks() {
        // d = n - 1: every node helps
        let cfg = SystemConfig::simple(4, 5, int(2), &[(3, 2), (3, 2)]).unwrap();
        let pool = general_income_pool(&cfg);
        assert!(pool.blocks.iter().all(|b| b.is_empty()));
        assert_eq!(pool.pool.coeffs(), ints(&[7, 5, 3, 4, 2, 0]));
    }

    #[test]
    fn single_rack_pool_is_pure_cheap_traffic() {
        let cfg = SystemConfig::simple(3, 4, int(3), &[(6, 4)]).unwrap();
        let pool = general_income_pool(&cfg);
        assert_eq!(pool.pool.coeffs(), ints(&[12, 9, 6, 3, 0, 0]));
        assert_eq!(pool.involved, 1);
    }

    #[test]
    fn candidate_sums_match_three_rack_example() {
        let cfg = three_rack(ratio(11, 5));
        let sum = |inc: &[usize]| candidate_sequence(&cfg, inc).unwrap().sum();
        assert_eq!(sum(&[0, 1]), ratio(229, 5));
        assert_eq!(sum(&[0]), ratio(242, 5));
        assert_eq!(sum(&[1]), ratio(227, 5));
        assert_eq!(sum(&[]), ratio(229, 5));
        assert_eq!(
            candidate_sequence(&cfg, &[2]).unwrap_err(),
            Error::Index { index: 2, limit: 2 }
        );
    }

    #[test]
    fn greedy_drops_only_on_strict_improvement() {
        let cfg = three_rack(ratio(11, 5));
        let sel = min_mincut_incomes(&cfg, SelectionMode::Greedy);
        assert_eq!(sel.incomes.origin, Origin::Candidate { included: vec![1] });
        assert_eq!(sel.incomes.sum(), ratio(227, 5));
        let sums: Vec<Rational> = sel.audit.iter().map(|c| c.sum.clone()).collect();
        assert_eq!(sums, vec![ratio(229, 5), ratio(227, 5), ratio(229, 5)]);

        let ex = min_mincut_incomes(&cfg, SelectionMode::Exhaustive);
        assert_eq!(ex.incomes, sel.incomes);
        assert_eq!(ex.audit.len(), 4);
    }

    #[test]
    fn exhaustive_ties_prefer_fewer_blocks() {
        // at tau = 2 the empty subset and {I^2} both sum to 44
        let cfg = three_rack(int(2));
        let ex = min_mincut_incomes(&cfg, SelectionMode::Exhaustive);
        assert_eq!(ex.incomes.origin, Origin::Candidate { included: vec![] });
        assert_eq!(ex.incomes.sum(), int(44));
        let greedy = min_mincut_incomes(&cfg, SelectionMode::Greedy);
        assert_eq!(greedy.incomes.origin, Origin::Candidate { included: vec![1] });
        assert_eq!(greedy.incomes.sum(), int(44));
    }

    #[test]
    fn general_selection_agrees_with_two_rack_rule() {
        for k in 1..=4 {
            let cfg = two_rack_k(k);
            let sel = min_mincut_incomes(&cfg, SelectionMode::Greedy);
            assert_eq!(
                sel.incomes.sorted_coeffs(),
                two_rack_min_incomes(&cfg).unwrap().sorted_coeffs(),
                "k = {k}"
            );
        }
    }

    #[test]
    fn general_pool_ignores_spare_first_rack_nodes_in_later_offsets() {
        // after both rack-0 nodes fail, a rack-1 newcomer has no expensive
        // income left; the pool still charges d_e^2 - (d_c^1 + 1) = 1
        let cfg = SystemConfig::simple(3, 5, int(2), &[(2, 0), (5, 3)]).unwrap();
        assert_eq!(two_rack_min_incomes(&cfg).unwrap().coeffs(), ints(&[5, 5, 6]));
        assert_eq!(candidate_sequence(&cfg, &[0]).unwrap().coeffs(), ints(&[5, 5, 7]));
        assert_eq!(min_mincut_incomes(&cfg, SelectionMode::Exhaustive).incomes.sum(), int(17));
    }

    #[test]
    fn greedy_can_miss_the_exhaustive_minimum() {
        let cfg = SystemConfig::simple(4, 5, int(2), &[(2, 0), (2, 0), (3, 2), (3, 2)]).unwrap();
        let greedy = min_mincut_incomes(&cfg, SelectionMode::Greedy);
        let exhaustive = min_mincut_incomes(&cfg, SelectionMode::Exhaustive);
        // dropping either block alone does not help; dropping both does
        let sums: Vec<Rational> = greedy.audit.iter().map(|c| c.sum.clone()).collect();
        assert_eq!(sums, ints(&[18, 18, 19]));
        assert_eq!(greedy.incomes.sum(), int(18));
        assert_eq!(exhaustive.incomes.sum(), int(17));
        assert_eq!(exhaustive.incomes.origin, Origin::Candidate { included: vec![] });
    }

    #[test]
    fn short_candidates_are_skipped() {
        // main blocks supply 5 incomes for k = 6
        let cfg = SystemConfig::simple(6, 8, int(2), &[(3, 0), (3, 0), (3, 0), (2, 1)]).unwrap();
        assert_eq!(candidate_sequence(&cfg, &[]).unwrap_err(), Error::ShortCandidate { terms: 5, k: 6 });
        let ex = min_mincut_incomes(&cfg, SelectionMode::Exhaustive);
        assert_eq!(ex.incomes.len(), 6);
        assert!(ex.audit.iter().all(|c| !c.included.is_empty()));
    }

    #[test]
    fn trimming_removes_infeasible_coefficients() {
        let cfg = SystemConfig::simple(3, 6, int(2), &[(2, 1), (5, 4)]).unwrap();
        let i = two_rack_min_incomes(&cfg).unwrap();
        assert_eq!(i.coeffs(), ints(&[7, 5, 8]));
        let l = feasibility_trim(&i, &cfg).unwrap();
        assert_eq!(l.values(), ints(&[5, 7]).as_slice());

        let cfg = two_rack_k(4);
        let l = feasibility_trim(&two_rack_min_incomes(&cfg).unwrap(), &cfg).unwrap();
        assert_eq!(l.values(), ints(&[2, 3, 4, 5]).as_slice());
    }

    #[test]
    fn trimming_keeps_copies_of_the_bound() {
        let cfg = two_rack_k(3);
        let mut seq = IncomeSequence::new(Origin::Pool);
        for _ in 0..3 {
            seq.push(int(5), 0);
        }
        let l = feasibility_trim(&seq, &cfg).unwrap();
        assert_eq!(l.values(), ints(&[5, 5, 5]).as_slice());
        let empty = IncomeSequence::new(Origin::Pool);
        assert_eq!(feasibility_trim(&empty, &cfg).unwrap_err(), Error::EmptyIncome);
    }
}
