use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use super::{components, is_clique_by, race_free_by, Marking, Net};
use crate::error::{Error, Result};
use crate::outcome::CheckOutcome;

/// Finite, downward-closed, conflict-free set of events (by index).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(BTreeSet<usize>);

impl Configuration {
    pub fn empty() -> Self {
        Configuration(BTreeSet::new())
    }

    pub fn events(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.contains(&e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.0.is_subset(&other.0)
    }
}

/// The conditions and events visited between two markings `from →* to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkingInterval {
    pub from: Marking,
    pub to: Marking,
    pub conditions: BTreeSet<usize>,
    pub sigma: BTreeSet<usize>,
}

/// Sub-net induced by an interval. Events carry their level: the length
/// of the longest causal chain inside the interval ending at the event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Restriction {
    pub from: Marking,
    pub to: Marking,
    pub places: Vec<usize>,
    /// Events ordered by `(level, index)`.
    pub events: Vec<usize>,
    pub level: BTreeMap<usize, usize>,
}

impl Restriction {
    pub fn depth(&self) -> usize {
        self.level.values().copied().max().unwrap_or(0)
    }

    pub fn events_at_level(&self, d: usize) -> Vec<usize> {
        self.events
            .iter()
            .copied()
            .filter(|e| self.level[e] == d)
            .collect()
    }
}

/// An occurrence net with its causal order and conflict relations cached.
#[derive(Clone, Debug)]
pub struct OccurrenceNet {
    net: Net,
    topo: Vec<usize>,
    leq: Vec<Vec<bool>>,
    conflict: Vec<Vec<bool>>,
    minimal_conflict: Vec<Vec<bool>>,
    height: Vec<usize>,
}

/// Topological order of the events, or an event lying on a flow cycle.
fn topological_events(net: &Net) -> std::result::Result<Vec<usize>, usize> {
    let n = net.transition_count();
    // an event waits for the producers of its pre-places
    let mut waiting: Vec<usize> = (0..n)
        .map(|e| net.pre(e).iter().map(|&p| net.producers(p).len()).sum())
        .collect();
    let mut ready: VecDeque<usize> = (0..n).filter(|&e| waiting[e] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(e) = ready.pop_front() {
        order.push(e);
        for &p in net.post(e) {
            for &f in net.consumers(p) {
                waiting[f] -= 1;
                if waiting[f] == 0 {
                    ready.push_back(f);
                }
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&e| waiting[e] > 0).expect("some event is blocked"))
    }
}

struct Relations {
    topo: Vec<usize>,
    leq: Vec<Vec<bool>>,
    conflict: Vec<Vec<bool>>,
    height: Vec<usize>,
}

fn relations(net: &Net, topo: Vec<usize>) -> Relations {
    let n = net.transition_count();
    let mut leq = vec![vec![false; n]; n];
    let mut height = vec![0usize; n];
    for &e in &topo {
        leq[e][e] = true;
        let mut h = 0;
        for &p in net.pre(e) {
            for &f in net.producers(p) {
                h = h.max(height[f]);
                for a in 0..n {
                    if leq[a][f] {
                        leq[a][e] = true;
                    }
                }
            }
        }
        height[e] = h + 1;
    }
    // events directly conflicting with some ancestor of e
    let mut inherited = vec![vec![false; n]; n];
    for e in 0..n {
        for a in 0..n {
            if leq[a][e] {
                for b in 0..n {
                    if net.in_conflict(a, b) {
                        inherited[e][b] = true;
                    }
                }
            }
        }
    }
    let mut conflict = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            conflict[a][b] = (0..n).any(|f| inherited[a][f] && leq[f][b]);
        }
    }
    Relations {
        topo,
        leq,
        conflict,
        height,
    }
}

/// Checks the occurrence-net clauses in order and reports the first
/// violation with a witness.
pub fn is_occurrence_net(net: &Net) -> CheckOutcome {
    let name = "occurrence-net";
    for p in 0..net.place_count() {
        if net.producers(p).len() > 1 {
            return CheckOutcome::fail(name, "backward branching: a condition has two pre-events")
                .with_witness(net.place_id(p).to_string());
        }
    }
    let topo = match topological_events(net) {
        Ok(t) => t,
        Err(e) => {
            return CheckOutcome::fail(name, "causality is cyclic")
                .with_witness(net.transition_id(e).to_string())
        }
    };
    // finite nets always have finite cones
    for t in 0..net.transition_count() {
        if net.pre(t).is_empty() {
            return CheckOutcome::fail(name, "minimal nodes: an event has no pre-condition")
                .with_witness(net.transition_id(t).to_string());
        }
    }
    let minimal: Marking = (0..net.place_count())
        .filter(|&p| net.producers(p).is_empty())
        .collect();
    if &minimal != net.initial_marking() {
        return CheckOutcome::fail(
            name,
            format!(
                "minimal nodes {} differ from the initial marking {}",
                net.format_marking(&minimal),
                net.format_marking(net.initial_marking())
            ),
        );
    }
    let rel = relations(net, topo);
    for e in 0..net.transition_count() {
        if rel.conflict[e][e] {
            return CheckOutcome::fail(name, "an event is in self-conflict")
                .with_witness(net.transition_id(e).to_string());
        }
    }
    CheckOutcome::pass(name)
}

impl OccurrenceNet {
    pub fn new(mut net: Net) -> Result<Self> {
        let check = is_occurrence_net(&net);
        if !check.passed {
            let witness = check.witness.map(|w| format!(" ({w})")).unwrap_or_default();
            return Err(Error::NotAnOccurrenceNet(format!("{}{witness}", check.detail)));
        }
        let topo = topological_events(&net).expect("checked acyclic");
        let rel = relations(&net, topo);
        let n = net.transition_count();
        let mut minimal_conflict = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                minimal_conflict[a][b] = rel.conflict[a][b]
                    && !(0..n).any(|c| c != a && rel.leq[c][a] && rel.conflict[c][b])
                    && !(0..n).any(|c| c != b && rel.leq[c][b] && rel.conflict[a][c]);
            }
        }
        net.mark_structurally_safe();
        Ok(Self {
            net,
            topo: rel.topo,
            leq: rel.leq,
            conflict: rel.conflict,
            minimal_conflict,
            height: rel.height,
        })
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn into_net(self) -> Net {
        self.net
    }

    pub fn event_count(&self) -> usize {
        self.net.transition_count()
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq[a][b]
    }

    pub fn conflict(&self, a: usize, b: usize) -> bool {
        self.conflict[a][b]
    }

    pub fn minimal_conflict(&self, a: usize, b: usize) -> bool {
        self.minimal_conflict[a][b]
    }

    /// Length of the longest causal chain ending at `e` (minimal events: 1).
    pub fn height(&self, e: usize) -> usize {
        self.height[e]
    }

    /// The causal cone `[e]`.
    pub fn cone(&self, e: usize) -> BTreeSet<usize> {
        (0..self.event_count()).filter(|&a| self.leq[a][e]).collect()
    }

    pub fn is_configuration(&self, events: &BTreeSet<usize>) -> bool {
        self.configuration_violation(events).is_none()
    }

    fn configuration_violation(&self, events: &BTreeSet<usize>) -> Option<String> {
        let n = self.event_count();
        for &b in events {
            if b >= n {
                return Some(format!("event index {b} out of range"));
            }
            for a in 0..n {
                if self.leq[a][b] && !events.contains(&a) {
                    return Some(format!(
                        "not downward closed: {} < {}",
                        self.net.transition_id(a),
                        self.net.transition_id(b)
                    ));
                }
            }
            for &c in events {
                if self.conflict[b][c] {
                    return Some(format!(
                        "{} # {}",
                        self.net.transition_id(b),
                        self.net.transition_id(c)
                    ));
                }
            }
        }
        None
    }

    pub fn configuration(&self, events: impl IntoIterator<Item = usize>) -> Result<Configuration> {
        let set: BTreeSet<usize> = events.into_iter().collect();
        match self.configuration_violation(&set) {
            None => Ok(Configuration(set)),
            Some(why) => Err(Error::NotAConfiguration(why)),
        }
    }

    pub fn configuration_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Configuration> {
        let events = ids
            .iter()
            .map(|id| self.net.transition(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.configuration(events)
    }

    /// `x ⊢ e`: `x ∪ {e}` is a configuration and `e ∉ x`.
    pub fn enables(&self, x: &Configuration, e: usize) -> bool {
        if x.contains(e) {
            return false;
        }
        let mut y = x.0.clone();
        y.insert(e);
        // x is already a configuration, so only e needs checking
        (0..self.event_count()).all(|a| !self.leq[a][e] || y.contains(&a))
            && y.iter().all(|&c| !self.conflict[e][c])
    }

    pub fn enabled_events(&self, x: &Configuration) -> Vec<usize> {
        (0..self.event_count()).filter(|&e| self.enables(x, e)).collect()
    }

    /// `≤`-maximal events of `x`.
    pub fn cut_of_configuration(&self, x: &Configuration) -> Result<BTreeSet<usize>> {
        self.check(x)?;
        Ok(x.iter()
            .filter(|&a| x.iter().all(|b| a == b || !self.leq[a][b]))
            .collect())
    }

    fn check(&self, x: &Configuration) -> Result<()> {
        match self.configuration_violation(&x.0) {
            None => Ok(()),
            Some(why) => Err(Error::NotAConfiguration(why)),
        }
    }

    /// The marking reached by firing `x` from the initial marking:
    /// `m0 ∪ x• \ •x`.
    pub fn marking_of_configuration(&self, x: &Configuration) -> Result<Marking> {
        self.check(x)?;
        Ok(self.marking_unchecked(x.events()))
    }

    fn marking_unchecked(&self, x: &BTreeSet<usize>) -> Marking {
        let mut m: BTreeSet<usize> = self.net.initial_marking().places().clone();
        for &e in x {
            m.extend(self.net.post(e));
        }
        for &e in x {
            for p in self.net.pre(e) {
                m.remove(p);
            }
        }
        Marking::new(m)
    }

    /// Downward closure of the pre-events of `m`, checked to reproduce `m`.
    pub fn configuration_of_marking(&self, m: &Marking) -> Result<Configuration> {
        let mut events = BTreeSet::new();
        for p in m.iter() {
            if p >= self.net.place_count() {
                return Err(Error::Unreachable(format!("place index {p}")));
            }
            for &e in self.net.producers(p) {
                events.extend(self.cone(e));
            }
        }
        if let Some(why) = self.configuration_violation(&events) {
            return Err(Error::Unreachable(why));
        }
        if &self.marking_unchecked(&events) != m {
            return Err(Error::Unreachable(self.net.format_marking(m)));
        }
        Ok(Configuration(events))
    }

    /// All configurations, ordered by size then lexicographically.
    pub fn configurations(&self, bound: usize) -> Result<Vec<Configuration>> {
        let mut seen: HashSet<Configuration> = HashSet::new();
        let mut queue = VecDeque::from([Configuration::empty()]);
        seen.insert(Configuration::empty());
        while let Some(x) = queue.pop_front() {
            for e in self.enabled_events(&x) {
                let mut y = x.0.clone();
                y.insert(e);
                let y = Configuration(y);
                if !seen.contains(&y) {
                    if seen.len() >= bound {
                        return Err(Error::BoundExceeded { bound });
                    }
                    seen.insert(y.clone());
                    queue.push_back(y);
                }
            }
        }
        let mut out: Vec<Configuration> = seen.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(out)
    }

    pub fn interval(&self, from: &Marking, to: &Marking) -> Result<MarkingInterval> {
        let x = self.configuration_of_marking(from)?;
        let y = self.configuration_of_marking(to)?;
        self.interval_of_configurations(&x, &y)
    }

    pub fn interval_of_configurations(
        &self,
        x: &Configuration,
        y: &Configuration,
    ) -> Result<MarkingInterval> {
        if !x.is_subset(y) {
            return Err(Error::NotReachableFrom);
        }
        let from = self.marking_of_configuration(x)?;
        let to = self.marking_of_configuration(y)?;
        let sigma: BTreeSet<usize> = y.0.difference(&x.0).copied().collect();
        let mut conditions: BTreeSet<usize> = from.places().clone();
        for &e in &sigma {
            conditions.extend(self.net.post(e));
        }
        Ok(MarkingInterval {
            from,
            to,
            conditions,
            sigma,
        })
    }

    pub fn restriction(&self, iv: &MarkingInterval) -> Restriction {
        let mut level = BTreeMap::new();
        for &e in &self.topo {
            if !iv.sigma.contains(&e) {
                continue;
            }
            let mut l = 0;
            for &p in self.net.pre(e) {
                for f in self.net.producers(p) {
                    if let Some(&lf) = level.get(f) {
                        l = l.max(lf);
                    }
                }
            }
            level.insert(e, l + 1);
        }
        let mut events: Vec<usize> = iv.sigma.iter().copied().collect();
        events.sort_by_key(|e| (level[e], *e));
        Restriction {
            from: iv.from.clone(),
            to: iv.to.clone(),
            places: iv.conditions.iter().copied().collect(),
            events,
            level,
        }
    }

    /// Components of minimal conflict among the non-negative events
    /// enabled at `x`.
    pub fn conflict_clusters(&self, x: &Configuration) -> Vec<Vec<usize>> {
        let candidates: Vec<usize> = self
            .enabled_events(x)
            .into_iter()
            .filter(|&e| !self.net.polarity(e).is_negative())
            .collect();
        components(&candidates, |a, b| self.minimal_conflict[a][b])
    }

    pub fn is_clique(&self, cluster: &[usize]) -> bool {
        is_clique_by(cluster, |a, b| self.minimal_conflict[a][b])
    }

    pub fn race_free(&self) -> CheckOutcome {
        race_free_by(&self.net, |a, b| self.minimal_conflict[a][b])
    }

    pub fn format_configuration(&self, x: &Configuration) -> String {
        self.net.format_transitions(x.iter())
    }
}
