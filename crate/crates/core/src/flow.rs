//! Information flow graphs and an exact max-flow oracle.
//!
//! Vertices: source S, collector DC, and an inner/outer pair per storage node
//! (originals first, then newcomers in repair order). Every node has an
//! inner-to-outer arc of capacity alpha; originals are fed by S with infinite
//! capacity; a newcomer's inner vertex receives tau*beta_e from each same-rack
//! helper and beta_e from each cross-rack helper; DC reads the k newcomers
//! through infinite arcs.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, Sub};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::income::{self, SelectionMode};
use crate::rational::{self, Rational};
use crate::threshold::{CoeffList, ThresholdCurve};

/// A storage node: an original `(rack, slot)` or the t-th newcomer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Original { rack: usize, slot: usize },
    Newcomer(usize),
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Original { rack, slot } => write!(f, "o{}.{}", rack + 1, slot + 1),
            NodeRef::Newcomer(t) => write!(f, "n{}", t + 1),
        }
    }
}

/// One repair: the newcomer joins `rack`, replacing original `replaces`, and
/// downloads from the listed helpers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Repair {
    pub rack: usize,
    pub replaces: usize,
    pub same_rack_helpers: Vec<NodeRef>,
    pub cross_rack_helpers: Vec<NodeRef>,
}

/// A failure/repair history followed by a data collector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub repairs: Vec<Repair>,
    /// Newcomer indices the collector reads.
    pub collector: Vec<usize>,
}

impl Scenario {
    pub fn rack_sequence(&self) -> Vec<usize> {
        self.repairs.iter().map(|r| r.rack).collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .repairs
            .iter()
            .enumerate()
            .map(|(t, r)| {
                let helpers = r
                    .same_rack_helpers
                    .iter()
                    .chain(&r.cross_rack_helpers)
                    .map(|h| h.to_string())
                    .join(" ");
                format!("n{}@r{}[{}]", t + 1, r.rack + 1, helpers)
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Source,
    Collector,
    Inner(NodeRef),
    Outer(NodeRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Finite(Rational),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGraph {
    pub vertices: Vec<Vertex>,
    pub arcs: Vec<FlowArc>,
}

impl FlowGraph {
    /// Same graph with every finite capacity multiplied by `c`.
    pub fn scaled(&self, c: &Rational) -> FlowGraph {
        let arcs = self
            .arcs
            .iter()
            .map(|a| FlowArc {
                from: a.from,
                to: a.to,
                capacity: match &a.capacity {
                    Capacity::Finite(q) => Capacity::Finite(q * c),
                    Capacity::Infinite => Capacity::Infinite,
                },
            })
            .collect();
        FlowGraph { vertices: self.vertices.clone(), arcs }
    }

    fn find(&self, v: Vertex) -> Option<usize> {
        self.vertices.iter().position(|&x| x == v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArcKind {
    Alpha,
    Cheap,
    Expensive,
    Infinite,
}

/// Graph shape shared by the public rational graph and the oracle's integer
/// networks. Vertex 0 is S, 1 is DC, node u has inner 2+2u and outer 3+2u.
struct Skeleton {
    nodes: Vec<NodeRef>,
    arcs: Vec<(usize, usize, ArcKind)>,
}

fn inner(u: usize) -> usize {
    2 + 2 * u
}

fn outer(u: usize) -> usize {
    3 + 2 * u
}

fn rack_offsets(cfg: &SystemConfig) -> Vec<usize> {
    cfg.racks()
        .iter()
        .scan(0, |acc, r| {
            let start = *acc;
            *acc += r.nodes;
            Some(start)
        })
        .collect()
}

fn invalid(msg: String) -> Error {
    Error::InvalidScenario(msg)
}

fn skeleton(cfg: &SystemConfig, scenario: &Scenario) -> Result<Skeleton> {
    let offsets = rack_offsets(cfg);
    let originals = cfg.total_nodes();
    let mut nodes: Vec<NodeRef> = Vec::with_capacity(originals + scenario.repairs.len());
    for (rack, spec) in cfg.racks().iter().enumerate() {
        nodes.extend((0..spec.nodes).map(|slot| NodeRef::Original { rack, slot }));
    }
    let mut arcs = Vec::new();
    for u in 0..originals {
        arcs.push((0, inner(u), ArcKind::Infinite));
        arcs.push((inner(u), outer(u), ArcKind::Alpha));
    }
    let mut failed = vec![false; originals];
    let mut newcomer_rack: Vec<usize> = Vec::new();
    for (t, repair) in scenario.repairs.iter().enumerate() {
        let j = repair.rack;
        let spec = cfg
            .racks()
            .get(j)
            .ok_or_else(|| invalid(format!("repair {} names rack {} of {}", t + 1, j + 1, cfg.rack_count())))?;
        if repair.replaces >= spec.nodes {
            return Err(invalid(format!("repair {} replaces slot {} of a {}-node rack", t + 1, repair.replaces + 1, spec.nodes)));
        }
        let victim = offsets[j] + repair.replaces;
        if failed[victim] {
            return Err(invalid(format!("repair {} replaces o{}.{} twice", t + 1, j + 1, repair.replaces + 1)));
        }
        failed[victim] = true;
        if repair.same_rack_helpers.len() != cfg.cheap_degree(j) {
            return Err(invalid(format!(
                "repair {} has {} same-rack helpers, rack {} needs d_c = {}",
                t + 1,
                repair.same_rack_helpers.len(),
                j + 1,
                cfg.cheap_degree(j)
            )));
        }
        if repair.cross_rack_helpers.len() != cfg.expensive_degree(j) {
            return Err(invalid(format!(
                "repair {} has {} cross-rack helpers, rack {} needs d_e = {}",
                t + 1,
                repair.cross_rack_helpers.len(),
                j + 1,
                cfg.expensive_degree(j)
            )));
        }
        let me = originals + t;
        nodes.push(NodeRef::Newcomer(t));
        arcs.push((inner(me), outer(me), ArcKind::Alpha));
        let mut seen = Vec::new();
        for (helpers, same) in [(&repair.same_rack_helpers, true), (&repair.cross_rack_helpers, false)] {
            for h in helpers {
                let (rack, u) = match *h {
                    NodeRef::Original { rack, slot } => {
                        if cfg.racks().get(rack).is_none_or(|s| slot >= s.nodes) {
                            return Err(invalid(format!("repair {} names unknown helper {h}", t + 1)));
                        }
                        let u = offsets[rack] + slot;
                        if failed[u] {
                            return Err(invalid(format!("repair {} uses failed helper {h}", t + 1)));
                        }
                        (rack, u)
                    }
                    NodeRef::Newcomer(s) => {
                        if s >= t {
                            return Err(invalid(format!("repair {} uses helper {h} that does not exist yet", t + 1)));
                        }
                        (newcomer_rack[s], originals + s)
                    }
                };
                if (rack == j) != same {
                    let side = if same { "same-rack" } else { "cross-rack" };
                    return Err(invalid(format!("repair {} lists {h} from rack {} as {side} helper", t + 1, rack + 1)));
                }
                if seen.contains(&u) {
                    return Err(invalid(format!("repair {} lists helper {h} twice", t + 1)));
                }
                seen.push(u);
                let kind = if same { ArcKind::Cheap } else { ArcKind::Expensive };
                arcs.push((outer(u), inner(me), kind));
            }
        }
        newcomer_rack.push(j);
    }
    let mut attached = scenario.collector.clone();
    attached.sort_unstable();
    attached.dedup();
    if scenario.collector.len() != cfg.k
        || attached.len() != cfg.k
        || attached.last().is_some_and(|&c| c >= scenario.repairs.len())
    {
        return Err(invalid(format!(
            "collector must read k = {} distinct newcomers out of {}",
            cfg.k,
            scenario.repairs.len()
        )));
    }
    for c in attached {
        arcs.push((outer(originals + c), 1, ArcKind::Infinite));
    }
    Ok(Skeleton { nodes, arcs })
}

/// Explicit information flow graph for `scenario` at (alpha, beta_e).
pub fn build_flow_graph(cfg: &SystemConfig, scenario: &Scenario, alpha: &Rational, beta_e: &Rational) -> Result<FlowGraph> {
    if alpha.is_negative() || beta_e.is_negative() {
        return Err(invalid("alpha and beta_e must be non-negative".into()));
    }
    let sk = skeleton(cfg, scenario)?;
    let mut vertices = vec![Vertex::Source, Vertex::Collector];
    for n in &sk.nodes {
        vertices.push(Vertex::Inner(*n));
        vertices.push(Vertex::Outer(*n));
    }
    let cheap = beta_e * &cfg.tau;
    let arcs = sk
        .arcs
        .iter()
        .map(|&(from, to, kind)| FlowArc {
            from,
            to,
            capacity: match kind {
                ArcKind::Alpha => Capacity::Finite(alpha.clone()),
                ArcKind::Cheap => Capacity::Finite(cheap.clone()),
                ArcKind::Expensive => Capacity::Finite(beta_e.clone()),
                ArcKind::Infinite => Capacity::Infinite,
            },
        })
        .collect();
    Ok(FlowGraph { vertices, arcs })
}

/// Dinic's algorithm over any exact ordered additive type.
struct Dinic<T> {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<T>,
    level: Vec<usize>,
    next: Vec<usize>,
}

impl<T> Dinic<T>
where
    T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T>,
{
    fn new(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), level: vec![0; n], next: vec![0; n] }
    }

    fn add_arc(&mut self, u: usize, v: usize, c: T) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(T::zero());
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = usize::MAX);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.level[v] == usize::MAX && self.cap[e] > T::zero() {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != usize::MAX
    }

    fn push(&mut self, u: usize, t: usize, limit: T) -> T {
        if u == t {
            return limit;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let v = self.to[e];
            if self.level[v] == self.level[u] + 1 && self.cap[e] > T::zero() {
                let bottleneck = std::cmp::min(limit.clone(), self.cap[e].clone());
                let pushed = self.push(v, t, bottleneck);
                if pushed > T::zero() {
                    self.cap[e] = self.cap[e].clone() - pushed.clone();
                    self.cap[e ^ 1] = self.cap[e ^ 1].clone() + pushed.clone();
                    return pushed;
                }
            }
            self.next[u] += 1;
        }
        T::zero()
    }

    fn max_flow(&mut self, s: usize, t: usize, unbounded: T) -> T {
        let mut total = T::zero();
        while self.bfs(s, t) {
            self.next.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.push(s, t, unbounded.clone());
                if pushed.is_zero() {
                    break;
                }
                total = total + pushed;
            }
        }
        total
    }
}

fn reachable(n: usize, arcs: impl Iterator<Item = (usize, usize)>, s: usize, t: usize) -> bool {
    let mut adj = vec![Vec::new(); n];
    for (u, v) in arcs {
        adj[u].push(v);
    }
    let mut seen = vec![false; n];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen[t]
}

/// Maximum flow over integer capacities, with `None` standing for infinite
/// (realized as one more than the sum of all finite capacities).
fn integer_max_flow(n: usize, arcs: &[(usize, usize, Option<BigInt>)], s: usize, t: usize) -> BigInt {
    let finite_sum: BigInt = arcs.iter().filter_map(|a| a.2.clone()).sum();
    let infinite = finite_sum + BigInt::one();
    let small = infinite.bits() < 100;
    if small {
        let inf = infinite.to_i128().expect("fits");
        let mut net = Dinic::<i128>::new(n);
        for (u, v, c) in arcs {
            net.add_arc(*u, *v, c.as_ref().map_or(inf, |c| c.to_i128().expect("fits")));
        }
        BigInt::from(net.max_flow(s, t, inf))
    } else {
        let mut net = Dinic::<BigInt>::new(n);
        for (u, v, c) in arcs {
            net.add_arc(*u, *v, c.clone().unwrap_or_else(|| infinite.clone()));
        }
        net.max_flow(s, t, infinite)
    }
}

fn common_denominator<'a>(values: impl Iterator<Item = &'a Rational>) -> BigInt {
    values.fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

fn scale_to_integer(q: &Rational, scale: &BigInt) -> BigInt {
    (q * Rational::from_integer(scale.clone())).to_integer()
}

/// Exact minimum S-DC cut of `graph`.
pub fn min_cut_value(graph: &FlowGraph) -> Result<Rational> {
    let s = graph.find(Vertex::Source).ok_or(Error::Disconnected)?;
    let t = graph.find(Vertex::Collector).ok_or(Error::Disconnected)?;
    let n = graph.vertices.len();
    if !reachable(n, graph.arcs.iter().map(|a| (a.from, a.to)), s, t) {
        return Err(Error::Disconnected);
    }
    if graph.arcs.iter().any(|a| matches!(&a.capacity, Capacity::Finite(q) if q.is_negative())) {
        return Err(invalid("negative capacity".into()));
    }
    let scale = common_denominator(graph.arcs.iter().filter_map(|a| match &a.capacity {
        Capacity::Finite(q) => Some(q),
        Capacity::Infinite => None,
    }));
    let arcs: Vec<(usize, usize, Option<BigInt>)> = graph
        .arcs
        .iter()
        .map(|a| {
            let cap = match &a.capacity {
                Capacity::Finite(q) => Some(scale_to_integer(q, &scale)),
                Capacity::Infinite => None,
            };
            (a.from, a.to, cap)
        })
        .collect();
    let flow = integer_max_flow(n, &arcs, s, t);
    Ok(Rational::new(flow, scale))
}

/// A point (alpha, beta_e) prepared for integer max-flow.
#[derive(Debug, Clone)]
struct ScaledPoint {
    scale: BigInt,
    alpha: BigInt,
    cheap: BigInt,
    expensive: BigInt,
    /// The same capacities when they fit in i64 (sums then fit in i128).
    small: Option<[i128; 3]>,
}

impl ScaledPoint {
    fn new(cfg: &SystemConfig, alpha: &Rational, beta_e: &Rational) -> Self {
        let cheap = beta_e * &cfg.tau;
        let scale = common_denominator([alpha, beta_e, &cheap].into_iter());
        let alpha = scale_to_integer(alpha, &scale);
        let cheap = scale_to_integer(&cheap, &scale);
        let expensive = scale_to_integer(beta_e, &scale);
        let small = match (alpha.to_i64(), cheap.to_i64(), expensive.to_i64()) {
            (Some(a), Some(c), Some(e)) => Some([a.into(), c.into(), e.into()]),
            _ => None,
        };
        Self { scale, alpha, cheap, expensive, small }
    }

    fn cut(&self, sk: &Skeleton) -> Rational {
        let n = 2 + 2 * sk.nodes.len();
        if let Some([alpha, cheap, expensive]) = self.small {
            let cap = |kind: ArcKind| match kind {
                ArcKind::Alpha => alpha,
                ArcKind::Cheap => cheap,
                ArcKind::Expensive => expensive,
                ArcKind::Infinite => 0,
            };
            let infinite = 1 + sk.arcs.iter().map(|a| cap(a.2)).sum::<i128>();
            let mut net = Dinic::<i128>::new(n);
            for &(u, v, kind) in &sk.arcs {
                net.add_arc(u, v, if kind == ArcKind::Infinite { infinite } else { cap(kind) });
            }
            return Rational::new(BigInt::from(net.max_flow(0, 1, infinite)), self.scale.clone());
        }
        let arcs: Vec<(usize, usize, Option<BigInt>)> = sk
            .arcs
            .iter()
            .map(|&(u, v, kind)| {
                let cap = match kind {
                    ArcKind::Alpha => Some(self.alpha.clone()),
                    ArcKind::Cheap => Some(self.cheap.clone()),
                    ArcKind::Expensive => Some(self.expensive.clone()),
                    ArcKind::Infinite => None,
                };
                (u, v, cap)
            })
            .collect();
        Rational::new(integer_max_flow(n, &arcs, 0, 1), self.scale.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleMode {
    /// Every capacity-respecting rack sequence, newcomers-first wiring.
    Structured,
    /// Every rack sequence, replaced node and helper set (tiny systems only).
    Exhaustive,
}

impl OracleMode {
    pub fn name(self) -> &'static str {
        match self {
            OracleMode::Structured => "structured",
            OracleMode::Exhaustive => "exhaustive",
        }
    }
}

/// Largest number of rack sequences structured mode will enumerate.
pub const STRUCTURED_SEQUENCE_LIMIT: usize = 1 << 20;
/// Exhaustive mode guard on total node count.
pub const EXHAUSTIVE_MAX_NODES: usize = 8;
/// Exhaustive mode guard on k.
pub const EXHAUSTIVE_MAX_K: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub value: Rational,
    pub witness: Scenario,
}

/// All length-k rack sequences with at most n_j entries equal to j, in
/// lexicographic order.
pub fn rack_sequences(cfg: &SystemConfig) -> Result<Vec<Vec<usize>>> {
    let r = cfg.rack_count();
    let caps: Vec<usize> = cfg.racks().iter().map(|x| x.nodes).collect();
    // count first so the guard fires before allocating
    let total = count_sequences(&caps, cfg.k);
    if total > STRUCTURED_SEQUENCE_LIMIT as u128 {
        return Err(Error::EnumerationTooLarge(format!(
            "{total} rack sequences exceed the limit of {STRUCTURED_SEQUENCE_LIMIT}"
        )));
    }
    let mut out = Vec::new();
    let mut used = vec![0usize; r];
    let mut seq = Vec::with_capacity(cfg.k);
    fill_sequences(&caps, cfg.k, &mut used, &mut seq, &mut out);
    Ok(out)
}

fn count_sequences(caps: &[usize], k: usize) -> u128 {
    // multinomial counting by rack: ways[m] = sequences of length m over racks seen so far
    let mut ways = vec![0u128; k + 1];
    ways[0] = 1;
    let binom = |n: usize, c: usize| -> u128 {
        (0..c).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
    };
    for &cap in caps {
        let mut next = vec![0u128; k + 1];
        for (m, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for c in 0..=cap.min(k - m) {
                next[m + c] = next[m + c].saturating_add(w.saturating_mul(binom(m + c, c)));
            }
        }
        ways = next;
    }
    ways[k]
}

fn fill_sequences(caps: &[usize], k: usize, used: &mut [usize], seq: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if seq.len() == k {
        out.push(seq.clone());
        return;
    }
    for j in 0..caps.len() {
        if used[j] < caps[j] {
            used[j] += 1;
            seq.push(j);
            fill_sequences(caps, k, used, seq, out);
            seq.pop();
            used[j] -= 1;
        }
    }
}

/// Scenario with newcomers-first wiring: each newcomer replaces the
/// lowest-numbered surviving original of its rack and takes helpers from
/// earlier newcomers first (most recent first), then from surviving
/// originals in rack and slot order.
pub fn newcomers_first_scenario(cfg: &SystemConfig, racks: &[usize]) -> Result<Scenario> {
    let mut alive: Vec<Vec<bool>> = cfg.racks().iter().map(|r| vec![true; r.nodes]).collect();
    let mut repairs: Vec<Repair> = Vec::with_capacity(racks.len());
    for (t, &j) in racks.iter().enumerate() {
        let slots = alive
            .get_mut(j)
            .ok_or_else(|| invalid(format!("rack {} does not exist", j + 1)))?;
        let replaces = slots
            .iter()
            .position(|&a| a)
            .ok_or_else(|| invalid(format!("rack {} has no original left to replace", j + 1)))?;
        slots[replaces] = false;
        let earlier = (0..t).rev().map(|s| (repairs[s].rack, NodeRef::Newcomer(s)));
        let originals = alive.iter().enumerate().flat_map(|(rack, slots)| {
            slots
                .iter()
                .enumerate()
                .filter(|(_, &a)| a)
                .map(move |(slot, _)| (rack, NodeRef::Original { rack, slot }))
        });
        let candidates: Vec<(usize, NodeRef)> = earlier.chain(originals).collect();
        let pick = |same: bool, need: usize| -> Vec<NodeRef> {
            candidates.iter().filter(|(rack, _)| (*rack == j) == same).map(|&(_, n)| n).take(need).collect()
        };
        repairs.push(Repair {
            rack: j,
            replaces,
            same_rack_helpers: pick(true, cfg.cheap_degree(j)),
            cross_rack_helpers: pick(false, cfg.expensive_degree(j)),
        });
    }
    Ok(Scenario { collector: (0..racks.len()).collect(), repairs })
}

/// Per-point running minimum, ordered by (value, enumeration order).
type Best = Option<(Rational, (usize, usize), Scenario)>;

fn improve(best: &mut Best, value: Rational, order: (usize, usize), scenario: &Scenario) {
    let better = match best {
        None => true,
        Some((v, o, _)) => match value.cmp(v) {
            Ordering::Less => true,
            Ordering::Equal => order < *o,
            Ordering::Greater => false,
        },
    };
    if better {
        *best = Some((value, order, scenario.clone()));
    }
}

fn merge(mut a: Vec<Best>, b: Vec<Best>) -> Vec<Best> {
    for (slot, other) in a.iter_mut().zip(b) {
        if let Some((v, o, s)) = other {
            improve(slot, v, o, &s);
        }
    }
    a
}

/// Minimum mincut over scenarios at several (alpha, beta_e) points at once.
pub fn oracle_min_mincut_many(
    cfg: &SystemConfig,
    points: &[(Rational, Rational)],
    mode: OracleMode,
) -> Result<Vec<OracleResult>> {
    if points.iter().any(|(a, b)| a.is_negative() || b.is_negative()) {
        return Err(invalid("alpha and beta_e must be non-negative".into()));
    }
    if mode == OracleMode::Exhaustive
        && (cfg.total_nodes() > EXHAUSTIVE_MAX_NODES || cfg.k > EXHAUSTIVE_MAX_K)
    {
        return Err(Error::EnumerationTooLarge(format!(
            "exhaustive mode needs at most {EXHAUSTIVE_MAX_NODES} nodes and k <= {EXHAUSTIVE_MAX_K} \
             (config has {} nodes, k = {})",
            cfg.total_nodes(),
            cfg.k
        )));
    }
    let scaled: Vec<ScaledPoint> = points.iter().map(|(a, b)| ScaledPoint::new(cfg, a, b)).collect();
    let sequences = rack_sequences(cfg)?;
    let empty: Vec<Best> = vec![None; points.len()];
    let best = sequences
        .par_iter()
        .enumerate()
        .map(|(index, seq)| -> Result<Vec<Best>> {
            let mut best = empty.clone();
            match mode {
                OracleMode::Structured => {
                    let scenario = newcomers_first_scenario(cfg, seq)?;
                    let sk = skeleton(cfg, &scenario)?;
                    for (slot, p) in best.iter_mut().zip(&scaled) {
                        improve(slot, p.cut(&sk), (index, 0), &scenario);
                    }
                }
                OracleMode::Exhaustive => {
                    let mut walk = Walk::new(cfg, seq, &scaled, index);
                    walk.run(&mut best)?;
                }
            }
            Ok(best)
        })
        .try_reduce(|| empty.clone(), |a, b| Ok(merge(a, b)))?;
    Ok(best
        .into_iter()
        .map(|b| {
            let (value, _, witness) = b.expect("at least one rack sequence");
            OracleResult { value, witness }
        })
        .collect())
}

/// Minimum over scenarios of mincut(S, DC) at (alpha, beta_e), with a
/// minimizing scenario. Ties go to the first scenario in enumeration order.
pub fn oracle_min_mincut(cfg: &SystemConfig, alpha: &Rational, beta_e: &Rational, mode: OracleMode) -> Result<OracleResult> {
    let mut all = oracle_min_mincut_many(cfg, &[(alpha.clone(), beta_e.clone())], mode)?;
    Ok(all.remove(0))
}

/// Depth-first enumeration of replaced nodes and helper sets for one rack
/// sequence. Surviving originals of one rack that have helped exactly the
/// same newcomers are interchangeable, so within each such class only the
/// lowest-numbered member (or a prefix, for helper sets) is tried.
struct Walk<'a> {
    cfg: &'a SystemConfig,
    seq: &'a [usize],
    points: &'a [ScaledPoint],
    index: usize,
    alive: Vec<Vec<bool>>,
    helped: Vec<Vec<Vec<usize>>>,
    repairs: Vec<Repair>,
    leaves: usize,
}

impl<'a> Walk<'a> {
    fn new(cfg: &'a SystemConfig, seq: &'a [usize], points: &'a [ScaledPoint], index: usize) -> Self {
        Self {
            cfg,
            seq,
            points,
            index,
            alive: cfg.racks().iter().map(|r| vec![true; r.nodes]).collect(),
            helped: cfg.racks().iter().map(|r| vec![Vec::new(); r.nodes]).collect(),
            repairs: Vec::new(),
            leaves: 0,
        }
    }

    /// Position of a surviving original within its class, and the class members.
    fn class_of(&self, rack: usize, slot: usize) -> (usize, Vec<usize>) {
        let members: Vec<usize> = (0..self.alive[rack].len())
            .filter(|&s| self.alive[rack][s] && self.helped[rack][s] == self.helped[rack][slot])
            .collect();
        let pos = members.iter().position(|&s| s == slot).unwrap_or(usize::MAX);
        (pos, members)
    }

    fn run(&mut self, best: &mut [Best]) -> Result<()> {
        let t = self.repairs.len();
        if t == self.seq.len() {
            let scenario = Scenario { repairs: self.repairs.clone(), collector: (0..t).collect() };
            let sk = skeleton(self.cfg, &scenario)?;
            for (slot, p) in best.iter_mut().zip(self.points) {
                improve(slot, p.cut(&sk), (self.index, self.leaves), &scenario);
            }
            self.leaves += 1;
            return Ok(());
        }
        let j = self.seq[t];
        let victims: Vec<usize> =
            (0..self.alive[j].len()).filter(|&s| self.alive[j][s] && self.class_of(j, s).0 == 0).collect();
        for victim in victims {
            self.alive[j][victim] = false;
            let pool: Vec<(usize, NodeRef)> = (0..t)
                .map(|s| (self.repairs[s].rack, NodeRef::Newcomer(s)))
                .chain(self.alive.iter().enumerate().flat_map(|(rack, slots)| {
                    slots
                        .iter()
                        .enumerate()
                        .filter(|(_, &a)| a)
                        .map(move |(slot, _)| (rack, NodeRef::Original { rack, slot }))
                }))
                .collect();
            let same: Vec<NodeRef> = pool.iter().filter(|(r, _)| *r == j).map(|&(_, n)| n).collect();
            let cross: Vec<NodeRef> = pool.iter().filter(|(r, _)| *r != j).map(|&(_, n)| n).collect();
            let same_sets: Vec<Vec<NodeRef>> = same
                .into_iter()
                .combinations(self.cfg.cheap_degree(j))
                .filter(|set| self.canonical(set))
                .collect();
            let cross_sets: Vec<Vec<NodeRef>> = cross
                .into_iter()
                .combinations(self.cfg.expensive_degree(j))
                .filter(|set| self.canonical(set))
                .collect();
            for s in &same_sets {
                for c in &cross_sets {
                    let marked: Vec<(usize, usize)> = s
                        .iter()
                        .chain(c)
                        .filter_map(|h| match *h {
                            NodeRef::Original { rack, slot } => Some((rack, slot)),
                            NodeRef::Newcomer(_) => None,
                        })
                        .collect();
                    for &(rack, slot) in &marked {
                        self.helped[rack][slot].push(t);
                    }
                    self.repairs.push(Repair {
                        rack: j,
                        replaces: victim,
                        same_rack_helpers: s.clone(),
                        cross_rack_helpers: c.clone(),
                    });
                    self.run(best)?;
                    self.repairs.pop();
                    for &(rack, slot) in &marked {
                        self.helped[rack][slot].pop();
                    }
                }
            }
            self.alive[j][victim] = true;
        }
        Ok(())
    }

    /// Originals chosen from a class must be that class's first members.
    fn canonical(&self, set: &[NodeRef]) -> bool {
        set.iter().all(|h| match *h {
            NodeRef::Original { rack, slot } => {
                let (pos, members) = self.class_of(rack, slot);
                let chosen = set
                    .iter()
                    .filter(|g| matches!(g, NodeRef::Original { rack: r, slot: s } if *r == rack && members.contains(s)))
                    .count();
                pos < chosen
            }
            NodeRef::Newcomer(_) => true,
        })
    }
}

/// Incomes (multiples of beta_e) of newcomers failing in rack order `racks`
/// under newcomers-first wiring: each earlier newcomer in the same rack
/// replaces one cheap helper, each earlier newcomer elsewhere one expensive
/// helper.
pub fn order_incomes(cfg: &SystemConfig, racks: &[usize]) -> Vec<Rational> {
    racks
        .iter()
        .enumerate()
        .map(|(t, &j)| {
            let same = racks[..t].iter().filter(|&&x| x == j).count();
            let other = t - same;
            rational::from_usize(cfg.cheap_degree(j).saturating_sub(same)) * &cfg.tau
                + rational::from_usize(cfg.expensive_degree(j).saturating_sub(other))
        })
        .collect()
}

/// Minimum over every capacity-respecting failure order of
/// sum_i min(I[i] beta_e, alpha), with I from [`order_incomes`]. Unlike the
/// engine's coefficient list this includes orders that alternate racks.
pub fn all_orders_mincut(cfg: &SystemConfig, alpha: &Rational, beta_e: &Rational) -> Result<Rational> {
    let sequences = rack_sequences(cfg)?;
    Ok(sequences
        .iter()
        .map(|seq| {
            order_incomes(cfg, seq)
                .iter()
                .map(|inc| rational::min(&(inc * beta_e), alpha))
                .sum::<Rational>()
        })
        .min()
        .expect("at least one rack sequence"))
}

/// Analytic minimum mincut for a coefficient list: the kept terms plus the
/// trimmed newcomers capped at the feasibility bound.
pub fn analytic_mincut(cfg: &SystemConfig, coeffs: &CoeffList, alpha: &Rational, beta_e: &Rational) -> Rational {
    coeffs.capped_mincut(beta_e, alpha, &cfg.feasibility_bound())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    Knee(usize),
    Midpoint(usize),
    Plateau,
    Random,
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleKind::Knee(i) => write!(f, "knee {i}"),
            SampleKind::Midpoint(i) => write!(f, "midpoint {i}"),
            SampleKind::Plateau => write!(f, "plateau"),
            SampleKind::Random => write!(f, "random"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub kind: SampleKind,
    pub beta_e: Rational,
    pub alpha: Rational,
    pub analytic: Rational,
    /// [`all_orders_mincut`] at the same point.
    pub all_orders: Rational,
    pub oracle: Rational,
    pub witness: Scenario,
}

impl Sample {
    pub fn matches(&self) -> bool {
        self.analytic == self.oracle
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateAudit {
    pub greedy_sum: Rational,
    pub exhaustive_sum: Rational,
}

impl CandidateAudit {
    pub fn agrees(&self) -> bool {
        self.greedy_sum == self.exhaustive_sum
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub mode: OracleMode,
    pub samples: Vec<Sample>,
    pub mismatches: Vec<Sample>,
    pub candidate_audit: CandidateAudit,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSpec {
    /// Random samples in addition to knees, midpoints and the plateau.
    pub count: usize,
    pub seed: u64,
    pub mode: OracleMode,
}

/// Points on and around the curve: every exposed knee, the midpoint of
/// every bounded segment, one plateau point past the MSR knee, and `count`
/// seeded random points with alpha scaled between 1/2 and 3/2 of the
/// threshold.
pub fn sample_points(curve: &ThresholdCurve, count: usize, seed: u64) -> Vec<(SampleKind, Rational, Rational)> {
    let m = curve.file_size();
    let mut out = Vec::new();
    for seg in curve.segments().iter().rev() {
        let alpha = seg.alpha(&seg.beta_lo, m, curve.k());
        out.push((SampleKind::Knee(seg.i), seg.beta_lo.clone(), alpha));
    }
    for seg in curve.segments().iter().rev() {
        if let Some(hi) = &seg.beta_hi {
            let mid = (&seg.beta_lo + hi) / rational::int(2);
            let alpha = seg.alpha(&mid, m, curve.k());
            out.push((SampleKind::Midpoint(seg.i), mid, alpha));
        }
    }
    let msr = curve.segments()[0].beta_lo.clone();
    let plateau = &msr * rational::int(2);
    let alpha = curve.alpha_star(&plateau).expect("plateau lies above the MBR point");
    out.push((SampleKind::Plateau, plateau, alpha));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = curve.mbr_beta().clone();
    let span = &msr * rational::int(2) - &lo;
    for _ in 0..count {
        let u = rational::ratio(rng.gen_range(0..=1000), 1000);
        let beta = &lo + &span * u;
        let factor = rational::ratio(rng.gen_range(50..=150), 100);
        let alpha = curve.alpha_star(&beta).expect("sample lies above the MBR point") * factor;
        out.push((SampleKind::Random, beta, alpha));
    }
    out
}

/// Checks `coeffs` (normally the engine's own list) against the oracle.
pub fn verify_coeffs(cfg: &SystemConfig, coeffs: &CoeffList, spec: &SampleSpec) -> Result<VerificationReport> {
    if spec.count == 0 {
        return Err(Error::InvalidSampleSpec("sample count must be at least 1".into()));
    }
    let curve = ThresholdCurve::new(coeffs.clone(), cfg.file_size.clone())?;
    let points = sample_points(&curve, spec.count, spec.seed);
    let pairs: Vec<(Rational, Rational)> = points.iter().map(|(_, b, a)| (a.clone(), b.clone())).collect();
    let results = oracle_min_mincut_many(cfg, &pairs, spec.mode)?;
    let samples: Vec<Sample> = points
        .into_iter()
        .zip(results)
        .map(|((kind, beta_e, alpha), res)| {
            Ok(Sample {
                analytic: analytic_mincut(cfg, coeffs, &alpha, &beta_e),
                all_orders: all_orders_mincut(cfg, &alpha, &beta_e)?,
                kind,
                beta_e,
                alpha,
                oracle: res.value,
                witness: res.witness,
            })
        })
        .collect::<Result<_>>()?;
    let mismatches = samples.iter().filter(|s| !s.matches()).cloned().collect();
    let candidate_audit = CandidateAudit {
        greedy_sum: income::min_mincut_incomes(cfg, SelectionMode::Greedy).incomes.sum(),
        exhaustive_sum: income::min_mincut_incomes(cfg, SelectionMode::Exhaustive).incomes.sum(),
    };
    Ok(VerificationReport { mode: spec.mode, samples, mismatches, candidate_audit })
}

/// Checks the engine's coefficient list for `cfg` against the oracle.
pub fn verify(cfg: &SystemConfig, spec: &SampleSpec) -> Result<VerificationReport> {
    let (_, coeffs) = income::rack_coeffs(cfg)?;
    verify_coeffs(cfg, &coeffs, spec)
}
