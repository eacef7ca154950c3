//! Safe Petri nets, occurrence nets and the token game.

pub mod occurrence;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::CheckOutcome;

pub use occurrence::{
    is_occurrence_net, Configuration, MarkingInterval, OccurrenceNet, Restriction,
};

/// Default cap on the number of markings explored when verifying safety.
pub const DEFAULT_MARKING_BOUND: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Neutral,
    #[serde(rename = "+")]
    Positive,
}

impl Polarity {
    pub fn symbol(self) -> &'static str {
        match self {
            Polarity::Negative => "-",
            Polarity::Neutral => "0",
            Polarity::Positive => "+",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "-" => Some(Polarity::Negative),
            "0" => Some(Polarity::Neutral),
            "+" => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn is_negative(self) -> bool {
        self == Polarity::Negative
    }
}

/// Set of marked places, by place index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(BTreeSet<usize>);

impl Marking {
    pub fn new(places: impl IntoIterator<Item = usize>) -> Self {
        Marking(places.into_iter().collect())
    }

    pub fn empty() -> Self {
        Marking(BTreeSet::new())
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.contains(&p)
    }

    pub fn places(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains_all(&self, places: &[usize]) -> bool {
        places.iter().all(|p| self.0.contains(p))
    }
}

impl FromIterator<usize> for Marking {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Marking(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyStatus {
    /// Every reachable marking was explored; the count is recorded.
    Verified { markings: usize },
    /// Exploration stopped at the bound without finding a violation.
    Unverified { bound: usize },
    /// Safe by construction (occurrence nets); no exploration was run.
    Structural,
}

/// A safe Petri net. Places and transitions are indexed by the
/// lexicographic order of their ids, so index order is the canonical order.
#[derive(Clone, Debug)]
pub struct Net {
    place_ids: Vec<String>,
    transition_ids: Vec<String>,
    polarity: Vec<Polarity>,
    pre: Vec<Vec<usize>>,
    post: Vec<Vec<usize>>,
    producers: Vec<Vec<usize>>,
    consumers: Vec<Vec<usize>>,
    initial: Marking,
    safety: SafetyStatus,
    reachable: Option<Arc<Vec<Marking>>>,
}

impl Net {
    pub fn place_count(&self) -> usize {
        self.place_ids.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transition_ids.len()
    }

    pub fn place_id(&self, p: usize) -> &str {
        &self.place_ids[p]
    }

    pub fn transition_id(&self, t: usize) -> &str {
        &self.transition_ids[t]
    }

    pub fn place_ids(&self) -> &[String] {
        &self.place_ids
    }

    pub fn transition_ids(&self) -> &[String] {
        &self.transition_ids
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_ids
            .binary_search_by(|p| p.as_str().cmp(id))
            .ok()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transition_ids
            .binary_search_by(|t| t.as_str().cmp(id))
            .ok()
    }

    pub fn place(&self, id: &str) -> Result<usize> {
        self.place_index(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn transition(&self, id: &str) -> Result<usize> {
        self.transition_index(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn polarity(&self, t: usize) -> Polarity {
        self.polarity[t]
    }

    /// Pre-places of `t`, ascending.
    pub fn pre(&self, t: usize) -> &[usize] {
        &self.pre[t]
    }

    /// Post-places of `t`, ascending.
    pub fn post(&self, t: usize) -> &[usize] {
        &self.post[t]
    }

    /// Transitions with `p` in their post-set.
    pub fn producers(&self, p: usize) -> &[usize] {
        &self.producers[p]
    }

    /// Transitions with `p` in their pre-set.
    pub fn consumers(&self, p: usize) -> &[usize] {
        &self.consumers[p]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn safety(&self) -> SafetyStatus {
        self.safety
    }

    pub(crate) fn mark_structurally_safe(&mut self) {
        self.safety = SafetyStatus::Structural;
    }

    pub(crate) fn set_safety(&mut self, status: SafetyStatus) {
        self.safety = status;
    }

    pub fn ensure_safety_verified(&self) -> Result<()> {
        match self.safety {
            SafetyStatus::Verified { .. } | SafetyStatus::Structural => Ok(()),
            SafetyStatus::Unverified { .. } => Err(Error::SafetyUnverified),
        }
    }

    pub fn marking_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Marking> {
        ids.iter().map(|id| self.place(id.as_ref())).collect()
    }

    pub fn marking_ids(&self, m: &Marking) -> Vec<String> {
        m.iter().map(|p| self.place_ids[p].clone()).collect()
    }

    pub fn format_marking(&self, m: &Marking) -> String {
        format!("{{{}}}", self.marking_ids(m).join(","))
    }

    pub fn format_transitions(&self, ts: impl IntoIterator<Item = usize>) -> String {
        let ids: Vec<&str> = ts.into_iter().map(|t| self.transition_id(t)).collect();
        format!("{{{}}}", ids.join(","))
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        m.contains_all(&self.pre[t])
    }

    /// Transitions whose pre-set lies inside `m`, ascending.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transition_count())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking> {
        if !self.is_enabled(m, t) {
            return Err(Error::NotEnabled(self.transition_ids[t].clone()));
        }
        let mut next = m.0.clone();
        for p in &self.pre[t] {
            next.remove(p);
        }
        for &p in &self.post[t] {
            if !next.insert(p) {
                return Err(Error::SafetyViolation {
                    transition: self.transition_ids[t].clone(),
                    place: self.place_ids[p].clone(),
                });
            }
        }
        Ok(Marking(next))
    }

    pub fn fire_sequence(&self, m: &Marking, seq: &[usize]) -> Result<Marking> {
        seq.iter().try_fold(m.clone(), |acc, &t| self.fire(&acc, t))
    }

    /// A shortest firing sequence leading from `from` to `to`, least
    /// transitions first among equals. Fails after visiting `bound` markings.
    pub fn firing_sequence_between(&self, from: &Marking, to: &Marking, bound: usize) -> Result<Option<Vec<usize>>> {
        let mut parent: HashMap<Marking, Option<(Marking, usize)>> = HashMap::new();
        parent.insert(from.clone(), None);
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(m) = queue.pop_front() {
            if &m == to {
                let mut seq = Vec::new();
                let mut cur = m;
                while let Some(Some((prev, t))) = parent.get(&cur) {
                    seq.push(*t);
                    cur = prev.clone();
                }
                seq.reverse();
                return Ok(Some(seq));
            }
            for t in self.enabled(&m) {
                let next = self.fire(&m, t)?;
                if !parent.contains_key(&next) {
                    if parent.len() >= bound {
                        return Err(Error::BoundExceeded { bound });
                    }
                    parent.insert(next.clone(), Some((m.clone(), t)));
                    queue.push_back(next);
                }
            }
        }
        Ok(None)
    }

    /// Breadth-first closure of the initial marking, sorted. Fails when
    /// more than `bound` distinct markings exist.
    pub fn reachable_markings(&self, bound: usize) -> Result<Vec<Marking>> {
        if let Some(cached) = &self.reachable {
            if cached.len() > bound {
                return Err(Error::BoundExceeded { bound });
            }
            return Ok(cached.as_ref().clone());
        }
        explore(self, bound).and_then(|(found, complete)| {
            if complete {
                Ok(found)
            } else {
                Err(Error::BoundExceeded { bound })
            }
        })
    }

    /// Distinct transitions sharing a pre-place.
    pub fn in_conflict(&self, a: usize, b: usize) -> bool {
        a != b && self.pre[a].iter().any(|p| self.pre[b].contains(p))
    }

    /// Connected components of the conflict graph restricted to the
    /// non-negative transitions enabled at `m`. Each component is sorted and
    /// components are ordered by their least member.
    pub fn conflict_clusters(&self, m: &Marking) -> Vec<Vec<usize>> {
        let candidates: Vec<usize> = self
            .enabled(m)
            .into_iter()
            .filter(|&t| !self.polarity[t].is_negative())
            .collect();
        components(&candidates, |a, b| self.in_conflict(a, b))
    }

    pub fn is_clique(&self, cluster: &[usize]) -> bool {
        is_clique_by(cluster, |a, b| self.in_conflict(a, b))
    }

    /// Conflicting pairs never mix a negative with a non-negative transition.
    pub fn race_free(&self) -> CheckOutcome {
        race_free_by(self, |a, b| self.in_conflict(a, b))
    }

    /// Builder pre-filled with this net, for structural edits.
    pub fn to_builder(&self) -> NetBuilder {
        let mut b = NetBuilder::new();
        for p in &self.place_ids {
            b = b.place(p);
        }
        for (t, id) in self.transition_ids.iter().enumerate() {
            b = b.transition(id, self.polarity[t]);
            for &p in &self.pre[t] {
                b = b.arc(&self.place_ids[p], id);
            }
            for &p in &self.post[t] {
                b = b.arc(id, &self.place_ids[p]);
            }
        }
        b.initial(self.marking_ids(&self.initial))
    }

    /// All arcs as `(from, to)` id pairs, sorted.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for t in 0..self.transition_count() {
            for &p in &self.pre[t] {
                out.push((self.place_ids[p].clone(), self.transition_ids[t].clone()));
            }
            for &p in &self.post[t] {
                out.push((self.transition_ids[t].clone(), self.place_ids[p].clone()));
            }
        }
        out.sort();
        out
    }
}

impl fmt::Display for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "net: {} places, {} transitions, initial {}",
            self.place_count(),
            self.transition_count(),
            self.format_marking(&self.initial)
        )?;
        for t in 0..self.transition_count() {
            writeln!(
                f,
                "  {}{} : {} -> {}",
                self.transition_ids[t],
                self.polarity[t].symbol(),
                self.format_marking(&Marking::new(self.pre[t].iter().copied())),
                self.format_marking(&Marking::new(self.post[t].iter().copied()))
            )?;
        }
        Ok(())
    }
}

pub(crate) fn components(nodes: &[usize], linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for start in 0..nodes.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![nodes[start]];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..nodes.len() {
                if !seen[j] && linked(nodes[i], nodes[j]) {
                    seen[j] = true;
                    comp.push(nodes[j]);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

pub(crate) fn is_clique_by(cluster: &[usize], linked: impl Fn(usize, usize) -> bool) -> bool {
    cluster
        .iter()
        .enumerate()
        .all(|(i, &a)| cluster[i + 1..].iter().all(|&b| linked(a, b)))
}

pub(crate) fn race_free_by(net: &Net, linked: impl Fn(usize, usize) -> bool) -> CheckOutcome {
    for a in 0..net.transition_count() {
        for b in a + 1..net.transition_count() {
            if linked(a, b) && net.polarity(a).is_negative() != net.polarity(b).is_negative() {
                return CheckOutcome::fail(
                    "race-free",
                    "a negative and a non-negative transition are in minimal conflict",
                )
                .with_witness(format!("({}, {})", net.transition_id(a), net.transition_id(b)));
            }
        }
    }
    CheckOutcome::pass("race-free")
}

/// Breadth-first exploration; returns the sorted markings and whether the
/// exploration completed within `bound`.
fn explore(net: &Net, bound: usize) -> Result<(Vec<Marking>, bool)> {
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(net.initial.clone());
    queue.push_back(net.initial.clone());
    let mut complete = true;
    'outer: while let Some(m) = queue.pop_front() {
        for t in net.enabled(&m) {
            let next = net.fire(&m, t)?;
            if !seen.contains(&next) {
                if seen.len() >= bound {
                    complete = false;
                    break 'outer;
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    let mut found: Vec<Marking> = seen.into_iter().collect();
    found.sort();
    Ok((found, complete))
}

/// Incremental description of a net; node kinds are inferred from the
/// declarations when arcs are resolved in [`NetBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<(String, Polarity)>,
    arcs: Vec<(String, String)>,
    initial: Vec<String>,
}

impl NetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, id: impl Into<String>) -> Self {
        self.places.push(id.into());
        self
    }

    pub fn places<S: Into<String>>(mut self, ids: impl IntoIterator<Item = S>) -> Self {
        self.places.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn transition(mut self, id: impl Into<String>, polarity: Polarity) -> Self {
        self.transitions.push((id.into(), polarity));
        self
    }

    pub fn arc(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.arcs.push((from.into(), to.into()));
        self
    }

    /// Declares a transition with its pre- and post-places in one call.
    pub fn event(
        mut self,
        id: &str,
        polarity: Polarity,
        pre: &[&str],
        post: &[&str],
    ) -> Self {
        self.transitions.push((id.to_string(), polarity));
        for p in pre {
            self.arcs.push((p.to_string(), id.to_string()));
        }
        for p in post {
            self.arcs.push((id.to_string(), p.to_string()));
        }
        self
    }

    pub fn initial<S: Into<String>>(mut self, ids: impl IntoIterator<Item = S>) -> Self {
        self.initial = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn remove_transition(mut self, id: &str) -> Self {
        self.transitions.retain(|(t, _)| t != id);
        self.arcs.retain(|(a, b)| a != id && b != id);
        self
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.places.iter().any(|p| p == id) || self.transitions.iter().any(|(t, _)| t == id)
    }

    /// Validates the structure without exploring markings. The result is
    /// flagged unverified until [`OccurrenceNet::new`] or an explicit
    /// exploration establishes safety.
    pub fn build_unexplored(self) -> Result<Net> {
        self.build_with_bound(0)
    }

    pub fn build(self) -> Result<Net> {
        self.build_with_bound(DEFAULT_MARKING_BOUND)
    }

    /// Validates the structure, then explores up to `bound` markings to
    /// establish safety. Unsafe nets are rejected.
    pub fn build_with_bound(self, bound: usize) -> Result<Net> {
        let mut kinds: BTreeMap<&str, bool> = BTreeMap::new(); // true = place
        for p in &self.places {
            if p.is_empty() {
                return Err(Error::InvalidNet("empty place id".into()));
            }
            if kinds.insert(p, true).is_some() {
                return Err(Error::DuplicateId(p.clone()));
            }
        }
        for (t, _) in &self.transitions {
            if t.is_empty() {
                return Err(Error::InvalidNet("empty transition id".into()));
            }
            if kinds.insert(t, false).is_some() {
                return Err(Error::DuplicateId(t.clone()));
            }
        }
        let mut place_ids = self.places.clone();
        place_ids.sort();
        let mut trans: Vec<(String, Polarity)> = self.transitions.clone();
        trans.sort();
        let transition_ids: Vec<String> = trans.iter().map(|(t, _)| t.clone()).collect();
        let polarity: Vec<Polarity> = trans.iter().map(|(_, p)| *p).collect();
        let pidx = |id: &str| place_ids.binary_search_by(|p| p.as_str().cmp(id)).ok();
        let tidx = |id: &str| transition_ids.binary_search_by(|t| t.as_str().cmp(id)).ok();

        let mut pre = vec![BTreeSet::new(); transition_ids.len()];
        let mut post = vec![BTreeSet::new(); transition_ids.len()];
        for (a, b) in &self.arcs {
            match (kinds.get(a.as_str()), kinds.get(b.as_str())) {
                (None, _) => return Err(Error::UnknownNode(a.clone())),
                (_, None) => return Err(Error::UnknownNode(b.clone())),
                (Some(true), Some(false)) => {
                    pre[tidx(b).expect("declared")].insert(pidx(a).expect("declared"));
                }
                (Some(false), Some(true)) => {
                    post[tidx(a).expect("declared")].insert(pidx(b).expect("declared"));
                }
                _ => {
                    return Err(Error::InvalidNet(format!(
                        "arc {a} -> {b} does not connect a place and a transition"
                    )))
                }
            }
        }
        let mut initial = BTreeSet::new();
        for id in &self.initial {
            let p = pidx(id).ok_or_else(|| {
                if kinds.contains_key(id.as_str()) {
                    Error::InvalidNet(format!("initial marking contains transition {id}"))
                } else {
                    Error::UnknownNode(id.clone())
                }
            })?;
            if !initial.insert(p) {
                return Err(Error::InvalidNet(format!(
                    "place {id} appears twice in the initial marking"
                )));
            }
        }
        let pre: Vec<Vec<usize>> = pre.into_iter().map(|s| s.into_iter().collect()).collect();
        let post: Vec<Vec<usize>> = post.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut producers = vec![Vec::new(); place_ids.len()];
        let mut consumers = vec![Vec::new(); place_ids.len()];
        for t in 0..transition_ids.len() {
            for &p in &pre[t] {
                consumers[p].push(t);
            }
            for &p in &post[t] {
                producers[p].push(t);
            }
        }
        let mut net = Net {
            place_ids,
            transition_ids,
            polarity,
            pre,
            post,
            producers,
            consumers,
            initial: Marking(initial),
            safety: SafetyStatus::Unverified { bound },
            reachable: None,
        };
        if bound == 0 {
            return Ok(net);
        }
        let (found, complete) = explore(&net, bound)?;
        if complete {
            net.safety = SafetyStatus::Verified {
                markings: found.len(),
            };
            net.reachable = Some(Arc::new(found));
        }
        Ok(net)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) use crate::fixtures::intro_net;

    fn ids(net: &Net, ts: &[usize]) -> Vec<String> {
        ts.iter().map(|&t| net.transition_id(t).to_string()).collect()
    }

    #[test]
    fn enabled_and_fire_follow_token_game() {
        let net = intro_net();
        let m0 = net.initial_marking().clone();
        assert!(ids(&net, &net.enabled(&m0)).contains(&"a".to_string()));
        let a = net.transition("a").unwrap();
        let m1 = net.fire(&m0, a).unwrap();
        assert_eq!(m1, net.marking_from_ids(&["2", "3"]).unwrap());
        assert!(net.post(a).iter().all(|&p| m1.contains(p)));
        assert!(net.pre(a).iter().all(|&p| m0.contains(p)));
        let seq: Vec<usize> = ["a", "c", "b", "d"]
            .iter()
            .map(|t| net.transition(t).unwrap())
            .collect();
        let end = net.fire_sequence(&m0, &seq).unwrap();
        assert_eq!(end, net.marking_from_ids(&["2", "4"]).unwrap());
    }

    #[test]
    fn empty_marking_enables_nothing_with_preconditions() {
        let net = intro_net();
        assert!(net.enabled(&Marking::empty()).is_empty());
        let free = NetBuilder::new()
            .place("p")
            .event("t", Polarity::Neutral, &[], &[])
            .build()
            .unwrap();
        assert_eq!(free.enabled(&Marking::new([0])), vec![0]);
    }

    #[test]
    fn fire_errors() {
        let net = intro_net();
        let c = net.transition("c").unwrap();
        assert!(matches!(
            net.fire(net.initial_marking(), c),
            Err(Error::NotEnabled(_))
        ));
    }

    #[test]
    fn unsafe_nets_are_rejected() {
        let r = NetBuilder::new()
            .places(["p", "q"])
            .event("t", Polarity::Neutral, &["p"], &["q"])
            .initial(["p", "q"])
            .build();
        assert!(matches!(r, Err(Error::SafetyViolation { .. })));
    }

    #[test]
    fn reachable_markings_of_intro_net() {
        let net = intro_net();
        let all = net.reachable_markings(100).unwrap();
        for want in [&["1", "4"][..], &["2", "3"], &["2", "4"]] {
            assert!(all.contains(&net.marking_from_ids(want).unwrap()));
        }
        assert!(all.len() <= 1 << net.place_count());
        assert!(matches!(
            net.reachable_markings(2),
            Err(Error::BoundExceeded { .. })
        ));
    }

    #[test]
    fn no_transitions_reach_only_initial() {
        let net = NetBuilder::new().place("p").initial(["p"]).build().unwrap();
        assert_eq!(net.reachable_markings(10).unwrap(), vec![Marking::new([0])]);
    }

    #[test]
    fn small_bound_leaves_safety_unverified() {
        let net = intro_net().to_builder().build_with_bound(2).unwrap();
        assert!(matches!(net.safety(), SafetyStatus::Unverified { .. }));
        assert!(net.ensure_safety_verified().is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            NetBuilder::new().place("x").transition("x", Polarity::Neutral).build(),
            Err(Error::DuplicateId(_))
        ));
        assert!(matches!(
            NetBuilder::new().place("x").arc("x", "y").build(),
            Err(Error::UnknownNode(_))
        ));
        assert!(matches!(
            NetBuilder::new().places(["x", "y"]).arc("x", "y").build(),
            Err(Error::InvalidNet(_))
        ));
    }

    #[test]
    fn ids_are_sorted_lexicographically() {
        let net = NetBuilder::new().places(["b", "a", "10", "2"]).build().unwrap();
        assert_eq!(net.place_ids(), &["10", "2", "a", "b"]);
    }

    #[test]
    fn clusters_and_cliques() {
        let net = NetBuilder::new()
            .places(["p", "q", "r", "s", "o"])
            .event("e1", Polarity::Neutral, &["p"], &["o"])
            .event("e2", Polarity::Neutral, &["p", "q"], &[])
            .event("e3", Polarity::Neutral, &["q"], &[])
            .event("f", Polarity::Positive, &["r"], &[])
            .event("n", Polarity::Negative, &["s"], &[])
            .initial(["p", "q", "r", "s"])
            .build()
            .unwrap();
        let clusters = net.conflict_clusters(net.initial_marking());
        let named: Vec<Vec<String>> = clusters.iter().map(|c| ids(&net, c)).collect();
        assert_eq!(named, vec![vec!["e1", "e2", "e3"], vec!["f"]]);
        assert!(!net.is_clique(&clusters[0]));
        assert!(net.is_clique(&clusters[1]));
        assert!(net.conflict_clusters(&Marking::empty()).is_empty());
    }

    #[test]
    fn race_freedom() {
        let racy = NetBuilder::new()
            .place("p")
            .event("a", Polarity::Negative, &["p"], &[])
            .event("b", Polarity::Neutral, &["p"], &[])
            .initial(["p"])
            .build()
            .unwrap();
        let out = racy.race_free();
        assert!(!out.passed);
        assert_eq!(out.witness.as_deref(), Some("(a, b)"));
        assert!(intro_net().race_free().passed);
    }

    #[test]
    fn shortest_sequence_between_markings() {
        let net = NetBuilder::new()
            .places(["a", "b", "c"])
            .event("long", Polarity::Neutral, &["a"], &["b"])
            .event("next", Polarity::Neutral, &["b"], &["c"])
            .event("short", Polarity::Neutral, &["a"], &["c"])
            .initial(["a"])
            .build()
            .unwrap();
        let a = net.marking_from_ids(&["a"]).unwrap();
        let c = net.marking_from_ids(&["c"]).unwrap();
        let seq = net.firing_sequence_between(&a, &c, 10).unwrap().unwrap();
        assert_eq!(net.format_transitions(seq), "{short}");
        assert_eq!(net.firing_sequence_between(&a, &a, 10).unwrap(), Some(vec![]));
        assert_eq!(net.firing_sequence_between(&c, &a, 10).unwrap(), None);
    }
}
