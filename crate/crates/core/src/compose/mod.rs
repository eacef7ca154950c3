//! Parallel composition and joins of complementary events.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{CptniMap, Limits};
use crate::annotation::{AnnotatedNet, LocalAnnotation, Wire, WiredChannel};
use crate::checker::{single_extension_drop, CheckOptions};
use crate::error::{Error, Result};
use crate::net::{Marking, Net, NetBuilder, Polarity, SafetyStatus};
use crate::outcome::CheckOutcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A composite net and, for each of its node ids, the side and id it came
/// from.
#[derive(Clone, Debug)]
pub struct Composite {
    pub result: AnnotatedNet,
    pub provenance: BTreeMap<String, (Side, String)>,
}

fn node_ids(net: &Net) -> impl Iterator<Item = &String> {
    net.place_ids().iter().chain(net.transition_ids())
}

/// Disjoint union. When the two nets share an id, every id on the left is
/// prefixed with `L/` and every id on the right with `R/`.
pub fn parallel(left: &AnnotatedNet, right: &AnnotatedNet) -> Result<Composite> {
    let ids: BTreeSet<&String> = node_ids(&left.net).collect();
    let collide = node_ids(&right.net).any(|id| ids.contains(id));
    let rename = |side: Side, id: &str| match (collide, side) {
        (false, _) => id.to_string(),
        (true, Side::Left) => format!("L/{id}"),
        (true, Side::Right) => format!("R/{id}"),
    };

    let mut builder = NetBuilder::new();
    let mut initial = Vec::new();
    let mut provenance = BTreeMap::new();
    let mut dims = BTreeMap::new();
    let mut channels = BTreeMap::new();
    let mut h = BTreeMap::new();
    for (side, an) in [(Side::Left, left), (Side::Right, right)] {
        let net = &an.net;
        for (p, id) in net.place_ids().iter().enumerate() {
            let new = rename(side, id);
            builder = builder.place(&new);
            dims.insert(new.clone(), an.ann.place_dim(p).get());
            provenance.insert(new, (side, id.clone()));
        }
        for (t, id) in net.transition_ids().iter().enumerate() {
            let new = rename(side, id);
            builder = builder.transition(&new, net.polarity(t));
            for &p in net.pre(t) {
                builder = builder.arc(rename(side, net.place_id(p)), &new);
            }
            for &p in net.post(t) {
                builder = builder.arc(&new, rename(side, net.place_id(p)));
            }
            channels.insert(new.clone(), an.ann.channel(t).clone());
            h.insert(new.clone(), an.ann.h(t).get());
            provenance.insert(new, (side, id.clone()));
        }
        initial.extend(net.marking_ids(net.initial_marking()).iter().map(|id| rename(side, id)));
    }
    let builder = builder.initial(initial);
    let net = match (left.net.safety(), right.net.safety()) {
        (SafetyStatus::Unverified { .. }, _) | (_, SafetyStatus::Unverified { .. }) => builder.build()?,
        (SafetyStatus::Verified { markings: a }, SafetyStatus::Verified { markings: b }) => {
            let mut net = builder.build_unexplored()?;
            net.set_safety(SafetyStatus::Verified { markings: a * b });
            net
        }
        _ => {
            let mut net = builder.build_unexplored()?;
            net.mark_structurally_safe();
            net
        }
    };
    let ann = annotation_by_id(&net, &dims, &channels, &h)?;
    Ok(Composite {
        result: AnnotatedNet::new(net, ann)?,
        provenance,
    })
}

fn annotation_by_id(
    net: &Net,
    dims: &BTreeMap<String, usize>,
    channels: &BTreeMap<String, CptniMap>,
    h: &BTreeMap<String, usize>,
) -> Result<LocalAnnotation> {
    let mut b = LocalAnnotation::builder(net);
    for (id, d) in dims {
        b = b.place_dim(id, *d);
    }
    for (id, map) in channels {
        b = b.channel(id, map.clone());
    }
    for (id, d) in h {
        b = b.h(id, *d);
    }
    b.build()
}

/// Id of the event replacing the join of `p` and `n`.
pub fn joined_id(p: &str, n: &str) -> String {
    format!("{p}*{n}")
}

fn reaches(arcs: &[(String, String)], from: &str, to: &str) -> bool {
    let mut next: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in arcs {
        next.entry(a.as_str()).or_default().push(b.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for &w in next.get(v).map(Vec::as_slice).unwrap_or(&[]) {
            if w == to {
                return true;
            }
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    false
}

/// Replaces the positive event `p` and the negative event `n` by one
/// neutral event reading `•p ∪ •n` and writing `p• ∪ n•`. The signal of
/// `p` is routed into `n` internally, so the joined event has no signal
/// space. Joins that would close a flow cycle through the new event, or
/// whose environments overlap, are rejected.
pub fn single_join(an: &AnnotatedNet, p: &str, n: &str) -> Result<AnnotatedNet> {
    let net = &an.net;
    let (tp, tn) = (net.transition(p)?, net.transition(n)?);
    if tp == tn {
        return Err(Error::InvalidJoin(format!("{p} joined with itself")));
    }
    if net.polarity(tp) != Polarity::Positive || net.polarity(tn) != Polarity::Negative {
        return Err(Error::PolarityMismatch(format!(
            "{p} is {}, {n} is {}; expected + and -",
            net.polarity(tp).symbol(),
            net.polarity(tn).symbol()
        )));
    }
    let (hp, hn) = (an.ann.h(tp).get(), an.ann.h(tn).get());
    if hp != hn {
        return Err(Error::SignalSpaceMismatch {
            p: p.to_string(),
            n: n.to_string(),
            hp,
            hn,
        });
    }
    let disjoint = |a: &[usize], b: &[usize]| a.iter().all(|x| !b.contains(x));
    if !disjoint(net.pre(tp), net.pre(tn)) || !disjoint(net.post(tp), net.post(tn)) {
        return Err(Error::InvalidJoin(format!("{p} and {n} share a place")));
    }

    let id = joined_id(p, n);
    if net.place_index(&id).is_some() || net.transition_index(&id).is_some() {
        return Err(Error::DuplicateId(id));
    }
    let mut builder = net.to_builder().remove_transition(p).remove_transition(n);
    builder = builder.transition(&id, Polarity::Neutral);
    for &q in net.pre(tp).iter().chain(net.pre(tn)) {
        builder = builder.arc(net.place_id(q), &id);
    }
    for &q in net.post(tp).iter().chain(net.post(tn)) {
        builder = builder.arc(&id, net.place_id(q));
    }
    let arcs_before = net.arcs();
    let cyclic_before = reaches(&arcs_before, p, p) || reaches(&arcs_before, n, n);
    let probe = builder.clone().build_unexplored()?;
    if !cyclic_before && reaches(&probe.arcs(), &id, &id) {
        return Err(Error::InvalidJoin(format!("joining {p} and {n} closes a flow cycle")));
    }
    let joined_net = builder.build()?;

    let channel = joined_channel(an, tp, tn)?;
    let mut dims = BTreeMap::new();
    for (q, pid) in net.place_ids().iter().enumerate() {
        dims.insert(pid.clone(), an.ann.place_dim(q).get());
    }
    let mut channels = BTreeMap::new();
    let mut h = BTreeMap::new();
    for (t, tid) in net.transition_ids().iter().enumerate() {
        if t != tp && t != tn {
            channels.insert(tid.clone(), an.ann.channel(t).clone());
            h.insert(tid.clone(), an.ann.h(t).get());
        }
    }
    channels.insert(id, channel);
    let ann = annotation_by_id(&joined_net, &dims, &channels, &h)?;
    AnnotatedNet::new(joined_net, ann)
}

/// `(id ⊗ Q(n)) ∘ (Q(p) ⊗ id)` with the signal wire of `p` feeding `n`,
/// reordered to the canonical order of the joined environments.
fn joined_channel(an: &AnnotatedNet, tp: usize, tn: usize) -> Result<CptniMap> {
    let (net, ann) = (&an.net, &an.ann);
    let limits = Limits::default();
    let dim = |w: Wire| match w {
        Wire::HIn(e) | Wire::HOut(e) => ann.h(e),
        Wire::Cond(q) => ann.place_dim(q),
    };
    let mut wired_n = ann.wired(net, tn);
    for w in &mut wired_n.inputs {
        if *w == Wire::HIn(tn) {
            *w = Wire::HOut(tp);
        }
    }
    let pre_n: Vec<Wire> = net.pre(tn).iter().map(|&q| Wire::Cond(q)).collect();
    let first = ann
        .wired(net, tp)
        .tensor(&WiredChannel::identity(pre_n, &dim), &limits)?;
    let composite = first.then(&wired_n, &dim, &limits)?;
    let inputs: Vec<Wire> = sorted_conds(net.pre(tp).iter().chain(net.pre(tn)));
    let outputs: Vec<Wire> = sorted_conds(net.post(tp).iter().chain(net.post(tn)));
    Ok(composite
        .permute_inputs(&inputs, &dim)?
        .permute_outputs(&outputs, &dim)?
        .map)
}

fn sorted_conds<'a>(places: impl Iterator<Item = &'a usize>) -> Vec<Wire> {
    let set: BTreeSet<usize> = places.copied().collect();
    set.into_iter().map(Wire::Cond).collect()
}

/// Pairs `(positive, negative)` to be joined. For a drop-preserving join
/// the negatives form `N`, the positives `P` and the pairs the bijection.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinSpec {
    pub pairs: Vec<(String, String)>,
    /// Optional declared conflict clusters, each checked to be a whole
    /// connected component of same-sign transitions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<Vec<String>>,
}

impl JoinSpec {
    pub fn new<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        Self {
            pairs: pairs.into_iter().map(|(p, n)| (p.into(), n.into())).collect(),
            clusters: Vec::new(),
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            pairs: self.pairs.iter().rev().cloned().collect(),
            clusters: self.clusters.clone(),
        }
    }
}

/// Transitions connected to `start` through shared pre-places, restricted
/// to those accepted by `keep`.
fn conflict_component(net: &Net, start: usize, keep: impl Fn(usize) -> bool) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(a) = stack.pop() {
        for b in 0..net.transition_count() {
            if keep(b) && net.in_conflict(a, b) && seen.insert(b) {
                stack.push(b);
            }
        }
    }
    seen
}

/// Checks that `spec` describes a drop-preserving join of `an`.
pub fn validate_drop_preserving(an: &AnnotatedNet, spec: &JoinSpec) -> CheckOutcome {
    let name = "drop-preserving-join";
    let net = &an.net;
    if spec.pairs.is_empty() {
        return CheckOutcome::fail(name, "no pairs");
    }
    let mut pairs = Vec::new();
    for (p, n) in &spec.pairs {
        match (net.transition_index(p), net.transition_index(n)) {
            (Some(tp), Some(tn)) => pairs.push((tp, tn)),
            _ => {
                return CheckOutcome::fail(name, "unknown transition").with_witness(format!("({p}, {n})"))
            }
        }
    }
    let negatives: BTreeSet<usize> = pairs.iter().map(|&(_, n)| n).collect();
    let positives: BTreeSet<usize> = pairs.iter().map(|&(p, _)| p).collect();
    if negatives.len() != pairs.len() || positives.len() != pairs.len() {
        return CheckOutcome::fail(name, "clause 2: the pairing is not a bijection");
    }
    if let Some(&(p, n)) = pairs
        .iter()
        .find(|&&(p, n)| net.polarity(p) != Polarity::Positive || !net.polarity(n).is_negative())
    {
        return CheckOutcome::fail(name, "clause 1: pairs must be (positive, negative)")
            .with_witness(format!("({}, {})", net.transition_id(p), net.transition_id(n)));
    }
    for declared in &spec.clusters {
        let Some(members) = declared
            .iter()
            .map(|id| net.transition_index(id))
            .collect::<Option<BTreeSet<usize>>>()
        else {
            return CheckOutcome::fail(name, "unknown transition in a declared cluster")
                .with_witness(declared.join(", "));
        };
        let Some(&first) = members.iter().next() else { continue };
        let negative = net.polarity(first).is_negative();
        let component = conflict_component(net, first, |t| net.polarity(t).is_negative() == negative);
        if component != members {
            return CheckOutcome::fail(name, "clause 1: a declared cluster is not a conflict cluster")
                .with_witness(format!("{{{}}}", declared.join(", ")));
        }
    }
    let first_n = *negatives.iter().next().expect("nonempty");
    let component = conflict_component(net, first_n, |t| net.polarity(t).is_negative());
    if component != negatives {
        let witness = component
            .symmetric_difference(&negatives)
            .next()
            .map(|&t| net.transition_id(t).to_string())
            .unwrap_or_default();
        return CheckOutcome::fail(name, "clause 1: the negatives are not a maximal negative cluster")
            .with_witness(witness);
    }
    let first_p = *positives.iter().next().expect("nonempty");
    let outer = conflict_component(net, first_p, |t| !net.polarity(t).is_negative());
    if let Some(&p) = positives.iter().find(|p| !outer.contains(p)) {
        return CheckOutcome::fail(name, "clause 1: the positives do not lie in one cluster")
            .with_witness(net.transition_id(p).to_string());
    }
    let image: BTreeMap<usize, usize> = pairs.iter().map(|&(p, n)| (n, p)).collect();
    for (i, &a) in negatives.iter().enumerate() {
        for &b in negatives.iter().skip(i + 1) {
            if net.in_conflict(a, b) && !net.in_conflict(image[&a], image[&b]) {
                return CheckOutcome::fail(name, "clause 2a: conflicting negatives map to non-conflicting positives")
                    .with_witness(format!("({}, {})", net.transition_id(a), net.transition_id(b)));
            }
        }
    }
    for &(p, n) in &pairs {
        if an.ann.h(p) != an.ann.h(n) {
            return CheckOutcome::fail(
                name,
                format!("clause 2b: signal spaces differ ({} vs {})", an.ann.h(p), an.ann.h(n)),
            )
            .with_witness(format!("({}, {})", net.transition_id(p), net.transition_id(n)));
        }
    }
    CheckOutcome::pass(name).with_metric("pairs", pairs.len() as f64)
}

fn race_witness(net: &Net) -> Option<(String, String)> {
    for a in 0..net.transition_count() {
        for b in a + 1..net.transition_count() {
            if net.in_conflict(a, b) && net.polarity(a).is_negative() != net.polarity(b).is_negative() {
                return Some((net.transition_id(a).to_string(), net.transition_id(b).to_string()));
            }
        }
    }
    None
}

/// Joins every pair of a validated spec in order. The input is not
/// re-checked to be a QPN.
pub fn drop_preserving_join(an: &AnnotatedNet, spec: &JoinSpec) -> Result<AnnotatedNet> {
    let valid = validate_drop_preserving(an, spec);
    if !valid.passed {
        let witness = valid.witness.map(|w| format!(" {w}")).unwrap_or_default();
        return Err(Error::InvalidJoin(format!("{}{witness}", valid.detail)));
    }
    if let Some((a, b)) = race_witness(&an.net) {
        return Err(Error::NotRaceFree(a, b));
    }
    join_all(an, spec)
}

/// Folds [`single_join`] over the pairs without any validation.
pub fn join_all(an: &AnnotatedNet, spec: &JoinSpec) -> Result<AnnotatedNet> {
    let mut current = an.clone();
    for (p, n) in &spec.pairs {
        current = single_join(&current, p, n)?;
    }
    Ok(current)
}

/// Compares a join with its source on every reachable marking of the
/// joined net: each such marking is reachable before and enables both
/// halves of every enabled joined event; a sub-family of a cluster is
/// conflict-free after iff its pre-image is before; the drop effect of
/// each cluster equals the drop effect of its pre-image.
pub fn check_join_preservation(
    before: &AnnotatedNet,
    after: &AnnotatedNet,
    spec: &JoinSpec,
    opts: &CheckOptions,
) -> Result<CheckOutcome> {
    let name = "join-preservation";
    let (s, s2) = (&before.net, &after.net);
    let mut preimage: BTreeMap<usize, usize> = BTreeMap::new();
    let mut halves: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for t in 0..s2.transition_count() {
        let id = s2.transition_id(t);
        match spec.pairs.iter().find(|(p, n)| joined_id(p, n) == id) {
            Some((p, n)) => {
                let (tp, tn) = (s.transition(p)?, s.transition(n)?);
                preimage.insert(t, tp);
                halves.insert(t, (tp, tn));
            }
            None => {
                preimage.insert(t, s.transition(id)?);
            }
        }
    }
    // place indices agree since joins keep every place
    let reachable_before: BTreeSet<Marking> = s.reachable_markings(opts.marking_bound)?.into_iter().collect();
    let markings = s2.reachable_markings(opts.marking_bound)?;
    let (mut clusters, mut families, mut worst) = (0usize, 0usize, 0.0f64);
    for m in &markings {
        if !reachable_before.contains(m) {
            return Ok(CheckOutcome::fail(name, "property 1: marking unreachable before the join")
                .with_witness(s2.format_marking(m)));
        }
        for (&t, &(tp, tn)) in &halves {
            if s2.is_enabled(m, t) && !(s.is_enabled(m, tp) && s.is_enabled(m, tn)) {
                return Ok(CheckOutcome::fail(name, "property 1: joined event enabled but a half is not")
                    .with_witness(format!("{} at {}", s2.transition_id(t), s2.format_marking(m))));
            }
        }
        for cluster in s2.conflict_clusters(m) {
            if cluster.len() > opts.cluster_cap {
                return Err(Error::ClusterTooLarge {
                    size: cluster.len(),
                    cap: opts.cluster_cap,
                });
            }
            clusters += 1;
            let pre: Vec<usize> = cluster.iter().map(|t| preimage[t]).collect();
            for mask in 1usize..1 << cluster.len() {
                families += 1;
                let members: Vec<usize> = (0..cluster.len()).filter(|i| mask >> i & 1 == 1).collect();
                let free = |net: &Net, ts: &[usize]| {
                    members.iter().all(|&i| members.iter().all(|&j| i == j || !net.in_conflict(ts[i], ts[j])))
                };
                if free(s2, &cluster) != free(s, &pre) {
                    return Ok(CheckOutcome::fail(name, "configuration correspondence fails")
                        .with_witness(s2.format_transitions(members.iter().map(|&i| cluster[i]))));
                }
            }
            let d_after = single_extension_drop(s2, &after.ann, m, &cluster)?;
            let d_before = single_extension_drop(s, &before.ann, m, &pre)?;
            let diff = d_after.max_abs_diff(&d_before)?;
            worst = worst.max(diff);
            if diff > 1e-10 {
                return Ok(CheckOutcome::fail(name, format!("property 3: drop effects differ by {diff:.3e}"))
                    .with_witness(format!("{} at {}", s2.format_transitions(cluster), s2.format_marking(m)))
                    .with_metric("deviation", diff));
            }
        }
    }
    Ok(CheckOutcome::pass(name)
        .with_metric("markings", markings.len() as f64)
        .with_metric("clusters", clusters as f64)
        .with_metric("families", families as f64)
        .with_metric("deviation", worst))
}
