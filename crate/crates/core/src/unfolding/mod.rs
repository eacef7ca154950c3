//! Depth-bounded unfolding of safe nets into branching processes.
//!
//! Events are added level by level: every event of causal height `h` is
//! created before any event of height `h + 1`, transitions in id order and
//! pre-sets in lexicographic order of condition creation. Node ids are
//! `{label}#{k}` where `k` counts the copies of `label` created so far, so
//! a shallower unfolding is an induced sub-net of a deeper one with the
//! same ids.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::algebra::Dim;
use crate::annotation::{LocalAnnotation, Wire};
use crate::error::Result;
use crate::net::occurrence::{is_occurrence_net, Configuration, OccurrenceNet};
use crate::net::{Marking, Net, NetBuilder};
use crate::outcome::CheckOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct UnfoldBudget {
    pub max_depth: usize,
    pub max_events: usize,
}

impl UnfoldBudget {
    pub fn depth(max_depth: usize) -> Self {
        Self {
            max_depth,
            max_events: 10_000,
        }
    }
}

/// How an unfolding was cut short, if at all.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Exhaustion {
    /// Some extension of height `max_depth + 1` exists.
    pub depth: bool,
    /// Some extension was dropped because `max_events` was reached.
    pub events: bool,
}

impl Exhaustion {
    pub fn any(&self) -> bool {
        self.depth || self.events
    }
}

#[derive(Clone, Debug)]
pub struct BranchingProcess {
    occ: OccurrenceNet,
    label_place: Vec<usize>,
    label_event: Vec<usize>,
    budget: Option<UnfoldBudget>,
    exhaustion: Exhaustion,
}

impl BranchingProcess {
    /// Wraps a hand-built labelled occurrence net. Nothing is checked here;
    /// see [`verify_branching_process`]. The result is treated as
    /// unfolded as much as possible.
    pub fn from_parts(occ: OccurrenceNet, label_place: Vec<usize>, label_event: Vec<usize>) -> Self {
        Self {
            occ,
            label_place,
            label_event,
            budget: None,
            exhaustion: Exhaustion::default(),
        }
    }

    pub fn occ(&self) -> &OccurrenceNet {
        &self.occ
    }

    pub fn label_place(&self, c: usize) -> usize {
        self.label_place[c]
    }

    pub fn label_event(&self, e: usize) -> usize {
        self.label_event[e]
    }

    pub fn place_labels(&self) -> &[usize] {
        &self.label_place
    }

    pub fn event_labels(&self) -> &[usize] {
        &self.label_event
    }

    pub fn budget(&self) -> Option<UnfoldBudget> {
        self.budget
    }

    pub fn exhaustion(&self) -> Exhaustion {
        self.exhaustion
    }

    /// Label image of a set of conditions.
    pub fn label_marking(&self, m: &Marking) -> Marking {
        Marking::new(m.iter().map(|c| self.label_place[c]))
    }

    /// Whether every extension of `x` in the full unfolding is present.
    pub fn is_saturated_at(&self, x: &Configuration) -> bool {
        match self.budget {
            None => true,
            Some(b) => {
                !self.exhaustion.events
                    && x.iter().all(|e| self.occ.height(e) < b.max_depth)
            }
        }
    }
}

struct Condition {
    label: usize,
    height: usize,
    // events causally below, producer included
    past: BTreeSet<usize>,
}

struct Event {
    label: usize,
    pre: Vec<usize>,
    post: Vec<usize>,
}

struct Builder<'a> {
    net: &'a Net,
    conds: Vec<Condition>,
    events: Vec<Event>,
    past: Vec<BTreeSet<usize>>,
    consumers: Vec<Vec<usize>>,
    by_label: Vec<Vec<usize>>,
}

impl<'a> Builder<'a> {
    fn new(net: &'a Net) -> Self {
        let mut b = Self {
            net,
            conds: Vec::new(),
            events: Vec::new(),
            past: Vec::new(),
            consumers: Vec::new(),
            by_label: vec![Vec::new(); net.place_count()],
        };
        for p in net.initial_marking().iter() {
            b.add_condition(p, 0, BTreeSet::new());
        }
        b
    }

    fn add_condition(&mut self, label: usize, height: usize, past: BTreeSet<usize>) -> usize {
        let c = self.conds.len();
        self.conds.push(Condition { label, height, past });
        self.consumers.push(Vec::new());
        self.by_label[label].push(c);
        c
    }

    fn concurrent(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (&self.conds[a].past, &self.conds[b].past);
        if pb.iter().any(|&e| self.events[e].pre.contains(&a))
            || pa.iter().any(|&e| self.events[e].pre.contains(&b))
        {
            return false;
        }
        // inherited conflict always shows up as a shared pre-condition
        // between some pair of events in the two pasts
        for &e in pa.difference(pb) {
            for &f in pb.difference(pa) {
                if self.events[e].pre.iter().any(|c| self.events[f].pre.contains(c)) {
                    return false;
                }
            }
        }
        true
    }

    /// Co-sets labelled by `pre(t)` whose deepest condition has height `h - 1`.
    fn candidates(&self, t: usize, h: usize) -> Vec<Vec<usize>> {
        let places = self.net.pre(t);
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(places.len());
        self.extend_coset(places, h, &mut chosen, &mut out);
        out
    }

    fn extend_coset(&self, places: &[usize], h: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some((&p, rest)) = places.split_first() else {
            if chosen.iter().map(|&c| self.conds[c].height).max().map(|m| m + 1) == Some(h) {
                out.push(chosen.clone());
            }
            return;
        };
        for &c in &self.by_label[p] {
            // conditions created during this level belong to the next one
            if self.conds[c].height >= h {
                continue;
            }
            if chosen.iter().all(|&d| self.concurrent(c, d)) {
                chosen.push(c);
                self.extend_coset(rest, h, chosen, out);
                chosen.pop();
            }
        }
    }

    fn add_event(&mut self, t: usize, pre: Vec<usize>, h: usize) {
        let e = self.events.len();
        let mut past: BTreeSet<usize> = BTreeSet::from([e]);
        for &c in &pre {
            past.extend(self.conds[c].past.iter().copied());
            self.consumers[c].push(e);
        }
        self.events.push(Event {
            label: t,
            pre,
            post: Vec::new(),
        });
        let post: Vec<usize> = self
            .net
            .post(t)
            .to_vec()
            .into_iter()
            .map(|p| self.add_condition(p, h, past.clone()))
            .collect();
        self.events[e].post = post;
        self.past.push(past);
    }
}

/// Unfolds `net` up to the given budget. Transitions with an empty pre-set
/// have no occurrence-net counterpart and are never unfolded.
pub fn unfold(net: &Net, budget: UnfoldBudget) -> Result<BranchingProcess> {
    net.ensure_safety_verified()?;
    let mut b = Builder::new(net);
    let mut exhaustion = Exhaustion::default();
    'levels: for h in 1..=budget.max_depth {
        let mut added = false;
        for t in 0..net.transition_count() {
            if net.pre(t).is_empty() {
                continue;
            }
            for pre in b.candidates(t, h) {
                if b.events.len() >= budget.max_events {
                    exhaustion.events = true;
                    break 'levels;
                }
                b.add_event(t, pre, h);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    if !exhaustion.events {
        let next = budget.max_depth + 1;
        exhaustion.depth = (0..net.transition_count())
            .any(|t| !net.pre(t).is_empty() && !b.candidates(t, next).is_empty());
    }
    let bp = assemble(net, &b)?;
    Ok(BranchingProcess {
        budget: Some(budget),
        exhaustion,
        ..bp
    })
}

fn assemble(net: &Net, b: &Builder) -> Result<BranchingProcess> {
    let mut copies: BTreeMap<String, usize> = BTreeMap::new();
    let mut fresh = |label: &str| {
        let k = copies.entry(label.to_string()).or_insert(0);
        let id = format!("{label}#{k}");
        *k += 1;
        id
    };
    let cond_ids: Vec<String> = b.conds.iter().map(|c| fresh(net.place_id(c.label))).collect();
    let event_ids: Vec<String> = b
        .events
        .iter()
        .map(|e| fresh(net.transition_id(e.label)))
        .collect();

    let mut builder = NetBuilder::new().places(cond_ids.iter().cloned());
    for (e, ev) in b.events.iter().enumerate() {
        builder = builder.transition(&event_ids[e], net.polarity(ev.label));
        for &c in &ev.pre {
            builder = builder.arc(&cond_ids[c], &event_ids[e]);
        }
        for &c in &ev.post {
            builder = builder.arc(&event_ids[e], &cond_ids[c]);
        }
    }
    let initial: Vec<&String> = b
        .conds
        .iter()
        .zip(&cond_ids)
        .filter(|(c, _)| c.past.is_empty())
        .map(|(_, id)| id)
        .collect();
    let occ = OccurrenceNet::new(builder.initial(initial).build_unexplored()?)?;

    let mut label_place = vec![0; occ.net().place_count()];
    for (c, id) in cond_ids.iter().enumerate() {
        label_place[occ.net().place(id)?] = b.conds[c].label;
    }
    let mut label_event = vec![0; occ.event_count()];
    for (e, id) in event_ids.iter().enumerate() {
        label_event[occ.net().transition(id)?] = b.events[e].label;
    }
    Ok(BranchingProcess::from_parts(occ, label_place, label_event))
}

fn bijective_onto(image: &[usize], target: &BTreeSet<usize>) -> bool {
    let set: BTreeSet<usize> = image.iter().copied().collect();
    set.len() == image.len() && &set == target
}

/// Checks the labelling clauses and that the underlying net is an
/// occurrence net.
pub fn verify_branching_process(bp: &BranchingProcess, net: &Net) -> CheckOutcome {
    let name = "branching-process";
    let occ = bp.occ().net();
    if bp.label_place.len() != occ.place_count() || bp.label_event.len() != occ.transition_count() {
        return CheckOutcome::fail(name, "clause 1: labelling does not cover every node");
    }
    if let Some(c) = (0..occ.place_count()).find(|&c| bp.label_place[c] >= net.place_count()) {
        return CheckOutcome::fail(name, "clause 1: condition labelled by a non-place")
            .with_witness(occ.place_id(c).to_string());
    }
    for e in 0..occ.transition_count() {
        let t = bp.label_event[e];
        if t >= net.transition_count() {
            return CheckOutcome::fail(name, "clause 1: event labelled by a non-transition")
                .with_witness(occ.transition_id(e).to_string());
        }
        if occ.polarity(e) != net.polarity(t) {
            return CheckOutcome::fail(name, "clause 1: event polarity differs from its label")
                .with_witness(occ.transition_id(e).to_string());
        }
    }
    for e in 0..occ.transition_count() {
        let t = bp.label_event[e];
        let pre: Vec<usize> = occ.pre(e).iter().map(|&c| bp.label_place[c]).collect();
        let post: Vec<usize> = occ.post(e).iter().map(|&c| bp.label_place[c]).collect();
        let want_pre: BTreeSet<usize> = net.pre(t).iter().copied().collect();
        let want_post: BTreeSet<usize> = net.post(t).iter().copied().collect();
        if !bijective_onto(&pre, &want_pre) || !bijective_onto(&post, &want_post) {
            return CheckOutcome::fail(
                name,
                format!("clause 2: environment of the event is not a bijective copy of {}", net.transition_id(t)),
            )
            .with_witness(occ.transition_id(e).to_string());
        }
    }
    let minimal: Vec<usize> = (0..occ.place_count())
        .filter(|&c| occ.producers(c).is_empty())
        .map(|c| bp.label_place[c])
        .collect();
    if !bijective_onto(&minimal, net.initial_marking().places()) {
        return CheckOutcome::fail(name, "clause 3: minimal conditions are not a bijective copy of the initial marking")
            .with_witness(net.format_marking(&Marking::new(minimal)));
    }
    let mut seen: BTreeMap<(usize, &[usize]), usize> = BTreeMap::new();
    for e in 0..occ.transition_count() {
        if let Some(&f) = seen.get(&(bp.label_event[e], occ.pre(e))) {
            return CheckOutcome::fail(name, "clause 4: duplicated transition")
                .with_witness(format!("{}, {}", occ.transition_id(f), occ.transition_id(e)));
        }
        seen.insert((bp.label_event[e], occ.pre(e)), e);
    }
    let structure = is_occurrence_net(occ);
    if !structure.passed {
        return CheckOutcome {
            name: name.to_string(),
            ..structure
        };
    }
    CheckOutcome::pass(name)
        .with_metric("conditions", occ.place_count() as f64)
        .with_metric("events", occ.transition_count() as f64)
}

/// Pulls the annotation of `net` back along the labelling. Channel factors
/// are reordered when the conditions of an event sort differently from the
/// places of its label.
pub fn transfer_annotation(bp: &BranchingProcess, net: &Net, ann: &LocalAnnotation) -> Result<LocalAnnotation> {
    let occ = bp.occ().net();
    let place_dims: Vec<Dim> = bp.label_place.iter().map(|&p| ann.place_dim(p)).collect();
    let h: Vec<Dim> = bp.label_event.iter().map(|&t| ann.h(t)).collect();
    let dim = |w: Wire| ann.wire_dim(w);
    let mut channels = Vec::with_capacity(occ.transition_count());
    for e in 0..occ.transition_count() {
        let t = bp.label_event[e];
        let relabel = |ws: Vec<Wire>| -> Vec<Wire> {
            ws.into_iter()
                .map(|w| match w {
                    Wire::Cond(c) => Wire::Cond(bp.label_place[c]),
                    Wire::HIn(_) => Wire::HIn(t),
                    Wire::HOut(_) => Wire::HOut(t),
                })
                .collect()
        };
        let inputs = relabel(input_wires_of(occ, e));
        let outputs = relabel(output_wires_of(occ, e));
        let pulled = ann
            .wired(net, t)
            .permute_inputs(&inputs, &dim)?
            .permute_outputs(&outputs, &dim)?;
        channels.push(pulled.map);
    }
    LocalAnnotation::from_parts(occ, place_dims, channels, h)
}

fn input_wires_of(occ: &Net, e: usize) -> Vec<Wire> {
    let mut ws: Vec<Wire> = occ.pre(e).iter().map(|&c| Wire::Cond(c)).collect();
    if occ.polarity(e).is_negative() {
        ws.push(Wire::HIn(e));
    }
    ws
}

fn output_wires_of(occ: &Net, e: usize) -> Vec<Wire> {
    let mut ws: Vec<Wire> = occ.post(e).iter().map(|&c| Wire::Cond(c)).collect();
    if occ.polarity(e) == crate::net::Polarity::Positive {
        ws.push(Wire::HOut(e));
    }
    ws
}

pub const DEFAULT_CONFIGURATION_BOUND: usize = 100_000;

/// Compares, at every saturated configuration of the prefix, the conflict
/// clusters of the prefix (as sets of labels) with the clusters of the net
/// at the labelled marking.
pub fn cluster_bijection_check(net: &Net, bp: &BranchingProcess) -> CheckOutcome {
    cluster_bijection_check_bounded(net, bp, DEFAULT_CONFIGURATION_BOUND)
}

pub fn cluster_bijection_check_bounded(net: &Net, bp: &BranchingProcess, bound: usize) -> CheckOutcome {
    let name = "cluster-bijection";
    let occ = bp.occ();
    let configurations = match occ.configurations(bound) {
        Ok(c) => c,
        Err(e) => return CheckOutcome::fail(name, format!("prefix not explored: {e}")),
    };
    let (mut checked, mut skipped) = (0usize, 0usize);
    let mut markings: BTreeSet<Marking> = BTreeSet::new();
    for x in &configurations {
        if !bp.is_saturated_at(x) {
            skipped += 1;
            continue;
        }
        checked += 1;
        let m = bp.label_marking(&occ.marking_of_configuration(x).expect("enumerated"));
        let labelled = |cs: Vec<Vec<usize>>| -> BTreeSet<BTreeSet<usize>> {
            cs.into_iter()
                .map(|c| c.into_iter().map(|e| bp.label_event[e]).collect())
                .collect()
        };
        let in_prefix = labelled(occ.conflict_clusters(x));
        let in_net: BTreeSet<BTreeSet<usize>> = net
            .conflict_clusters(&m)
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        let sizes_match = occ.conflict_clusters(x).iter().map(Vec::len).sum::<usize>()
            == in_prefix.iter().map(BTreeSet::len).sum::<usize>();
        if in_prefix != in_net || !sizes_match {
            return CheckOutcome::fail(
                name,
                format!(
                    "clusters differ at {}: prefix {:?}, net {:?}",
                    net.format_marking(&m),
                    in_prefix,
                    in_net
                ),
            )
            .with_witness(format!("x = {}", occ.format_configuration(x)));
        }
        markings.insert(m);
    }
    CheckOutcome::pass(name)
        .with_metric("configurations_checked", checked as f64)
        .with_metric("configurations_skipped", skipped as f64)
        .with_metric("markings", markings.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{is_local_qon, is_qpn, CheckOptions};
    use crate::fixtures::{branching, intro_net};
    use crate::error::Error;
    use crate::net::Polarity::*;

    fn cycle() -> Net {
        NetBuilder::new()
            .places(["p", "q"])
            .event("go", Neutral, &["p"], &["q"])
            .event("back", Neutral, &["q"], &["p"])
            .initial(["p"])
            .build()
            .unwrap()
    }

    #[test]
    fn occurrence_net_unfolds_to_a_copy() {
        let an = branching(true);
        let bp = unfold(&an.net, UnfoldBudget::depth(10)).unwrap();
        let occ = bp.occ().net();
        assert_eq!(occ.place_count(), an.net.place_count());
        assert_eq!(occ.transition_count(), an.net.transition_count());
        assert_eq!(occ.transition_ids(), ["a#0", "b#0", "c#0"]);
        assert!(!bp.exhaustion().any());
        assert!(verify_branching_process(&bp, &an.net).passed);
        for e in 0..occ.transition_count() {
            assert_eq!(an.net.transition_id(bp.label_event(e)), &occ.transition_id(e)[..1]);
        }
    }

    #[test]
    fn cycle_grows_with_depth() {
        let net = cycle();
        let counts: Vec<usize> = (0..5)
            .map(|d| unfold(&net, UnfoldBudget::depth(d)).unwrap().occ().event_count())
            .collect();
        assert_eq!(counts, [0, 1, 2, 3, 4]);
        let bp = unfold(&net, UnfoldBudget::depth(3)).unwrap();
        assert!(bp.exhaustion().depth);
        assert_eq!(bp.occ().net().transition_ids(), ["back#0", "go#0", "go#1"]);
    }

    #[test]
    fn repeated_firings_become_distinct_events() {
        let net = intro_net();
        let bp = unfold(&net, UnfoldBudget::depth(4)).unwrap();
        assert!(verify_branching_process(&bp, &net).passed);
        let mut per_label: BTreeMap<usize, usize> = BTreeMap::new();
        for &t in bp.event_labels() {
            *per_label.entry(t).or_default() += 1;
        }
        assert!(per_label.values().any(|&n| n > 1));
    }

    #[test]
    fn event_budget_is_recorded() {
        let bp = unfold(&cycle(), UnfoldBudget { max_depth: 10, max_events: 3 }).unwrap();
        assert_eq!(bp.occ().event_count(), 3);
        assert!(bp.exhaustion().events);
        assert!(!bp.is_saturated_at(&Configuration::empty()));
    }

    #[test]
    fn unverified_net_is_rejected() {
        let net = NetBuilder::new()
            .places(["p"])
            .event("t", Neutral, &["p"], &["p"])
            .initial(["p"])
            .build_unexplored()
            .unwrap();
        assert!(matches!(unfold(&net, UnfoldBudget::depth(2)), Err(Error::SafetyUnverified)));
    }

    #[test]
    fn concurrent_branches_do_not_join_across_conflict() {
        // a and b compete for p; each produces an r-copy, t needs r and s
        let net = NetBuilder::new()
            .places(["p", "r", "s", "u"])
            .event("a", Neutral, &["p"], &["r"])
            .event("b", Neutral, &["p"], &["r"])
            .event("t", Neutral, &["r", "s"], &["u"])
            .initial(["p", "s"])
            .build()
            .unwrap();
        let bp = unfold(&net, UnfoldBudget::depth(5)).unwrap();
        let t = net.transition("t").unwrap();
        assert_eq!(bp.event_labels().iter().filter(|&&l| l == t).count(), 2);
        assert!(verify_branching_process(&bp, &net).passed);
    }

    fn duplicated() -> (Net, BranchingProcess) {
        let net = NetBuilder::new()
            .places(["p", "q"])
            .event("t", Neutral, &["p"], &["q"])
            .initial(["p"])
            .build()
            .unwrap();
        let occ = NetBuilder::new()
            .places(["p0", "q0", "q1"])
            .event("t0", Neutral, &["p0"], &["q0"])
            .event("t1", Neutral, &["p0"], &["q1"])
            .initial(["p0"])
            .build()
            .unwrap();
        let occ = OccurrenceNet::new(occ).unwrap();
        (net, BranchingProcess::from_parts(occ, vec![0, 1, 1], vec![0, 0]))
    }

    #[test]
    fn duplicated_event_fails_clause_four() {
        let (net, bp) = duplicated();
        let out = verify_branching_process(&bp, &net);
        assert!(!out.passed);
        assert!(out.detail.starts_with("clause 4"), "{}", out.detail);
        assert_eq!(out.witness.as_deref(), Some("t0, t1"));
    }

    #[test]
    fn doubled_minimum_fails_clause_three() {
        let net = NetBuilder::new().places(["p"]).initial(["p"]).build().unwrap();
        let occ = NetBuilder::new().places(["p0", "p1"]).initial(["p0", "p1"]).build().unwrap();
        let bp = BranchingProcess::from_parts(OccurrenceNet::new(occ).unwrap(), vec![0, 0], vec![]);
        let out = verify_branching_process(&bp, &net);
        assert!(out.detail.starts_with("clause 3"), "{}", out.detail);
    }

    #[test]
    fn wrong_environment_fails_clause_two() {
        let (net, _) = duplicated();
        let occ = NetBuilder::new()
            .places(["p0", "q0"])
            .event("t0", Neutral, &["p0"], &["q0"])
            .initial(["p0"])
            .build()
            .unwrap();
        let bp = BranchingProcess::from_parts(OccurrenceNet::new(occ).unwrap(), vec![0, 0], vec![0]);
        assert!(verify_branching_process(&bp, &net).detail.starts_with("clause 2"));
    }

    #[test]
    fn transfer_keeps_channels_and_verdicts() {
        for scaled in [true, false] {
            let an = branching(scaled);
            let bp = unfold(&an.net, UnfoldBudget::depth(4)).unwrap();
            let pulled = transfer_annotation(&bp, &an.net, &an.ann).unwrap();
            for e in 0..bp.occ().event_count() {
                let t = bp.label_event(e);
                let d = pulled.channel(e).deviation(an.ann.channel(t)).unwrap();
                assert!(d < 1e-12);
            }
            let opts = CheckOptions::default();
            let local = is_local_qon(bp.occ(), &pulled, &opts).unwrap();
            let global = is_qpn(&an.net, &an.ann, &opts).unwrap();
            assert_eq!(local.passed, global.passed);
            assert_eq!(local.passed, scaled);
        }
    }

    #[test]
    fn transfer_reorders_factors() {
        use crate::algebra::{CptniMap, FactorPermutation};
        use crate::annotation::LocalAnnotation;
        // the copies sort in the opposite order to their labels
        let net = NetBuilder::new()
            .places(["x1", "x2", "y"])
            .event("t", Neutral, &["x1", "x2"], &["y"])
            .initial(["x1", "x2"])
            .build()
            .unwrap();
        let d = |n| Dim::new(n).unwrap();
        let swap = FactorPermutation::new(vec![d(2), d(3)], vec![1, 0]).unwrap();
        let ann = LocalAnnotation::builder(&net)
            .place_dim("x1", 2)
            .place_dim("x2", 3)
            .place_dim("y", 6)
            .channel("t", CptniMap::identity(Dim::new(6).unwrap()).with_input_permutation(&swap).unwrap())
            .build()
            .unwrap();
        let occ = NetBuilder::new()
            .places(["m", "k", "o"])
            .event("e", Neutral, &["m", "k"], &["o"])
            .initial(["m", "k"])
            .build()
            .unwrap();
        // k (index 0) is a copy of x2, m (index 1) of x1
        let bp = BranchingProcess::from_parts(OccurrenceNet::new(occ).unwrap(), vec![1, 0, 2], vec![0]);
        assert!(verify_branching_process(&bp, &net).passed);
        let pulled = transfer_annotation(&bp, &net, &ann).unwrap();
        assert_eq!(pulled.place_dims().iter().map(|d| d.get()).collect::<Vec<_>>(), [3, 2, 6]);
        let expected = CptniMap::identity(Dim::new(6).unwrap());
        assert!(pulled.channel(0).deviation(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn clusters_match_on_branching_fixture() {
        let an = branching(true);
        let bp = unfold(&an.net, UnfoldBudget::depth(3)).unwrap();
        let out = cluster_bijection_check(&an.net, &bp);
        assert!(out.passed, "{}", out.detail);
        assert_eq!(out.metrics["configurations_checked"], 4.0);
    }

    #[test]
    fn clusters_match_on_cycle_below_the_frontier() {
        let net = intro_net();
        let bp = unfold(&net, UnfoldBudget::depth(4)).unwrap();
        let out = cluster_bijection_check(&net, &bp);
        assert!(out.passed, "{}", out.detail);
        assert!(out.metrics["configurations_skipped"] > 0.0);
    }

    #[test]
    fn unfolding_is_deterministic_and_monotone() {
        let net = intro_net();
        let a = unfold(&net, UnfoldBudget::depth(3)).unwrap();
        let b = unfold(&net, UnfoldBudget::depth(3)).unwrap();
        assert_eq!(a.occ().net().arcs(), b.occ().net().arcs());
        let deeper = unfold(&net, UnfoldBudget::depth(4)).unwrap();
        let arcs: BTreeSet<_> = deeper.occ().net().arcs().into_iter().collect();
        assert!(a.occ().net().arcs().iter().all(|arc| arcs.contains(arc)));
    }
}
