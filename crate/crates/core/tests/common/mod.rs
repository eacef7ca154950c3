//! Seeded generators of annotated nets shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use qpn::algebra::{random, CptniMap, Dim};
use qpn::annotation::{AnnotatedNet, LocalAnnotation};
use qpn::compose::JoinSpec;
use qpn::net::{Marking, Net, NetBuilder, OccurrenceNet, Polarity};
use qpn::unfolding::{unfold, BranchingProcess, UnfoldBudget};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dim(n: usize) -> Dim {
    Dim::new(n).unwrap()
}

/// How the weights of conflicting channels are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weights {
    /// Effects of every conflict set sum to at most the identity.
    Sharing,
    /// Every channel trace preserving, so any conflict breaks the drop.
    Full,
    /// A mix of the two.
    Mixed,
}

impl Weights {
    fn pick(rng: &mut impl Rng) -> Self {
        match rng.gen_range(0..5) {
            0 | 1 => Weights::Sharing,
            2 => Weights::Full,
            _ => Weights::Mixed,
        }
    }
}

/// Annotates `net` with the given place dimensions: negative transitions
/// get identities (their post-space must equal pre-space times `h`), the
/// others random channels whose effect is scaled by a weight derived from
/// the number of non-negative consumers of their pre-places.
pub fn annotate(
    rng: &mut impl Rng,
    net: &Net,
    dims: &BTreeMap<String, usize>,
    signal: &BTreeMap<String, usize>,
    weights: Weights,
) -> AnnotatedNet {
    let mut ann = LocalAnnotation::builder(net);
    for (p, d) in dims {
        ann = ann.place_dim(p, *d);
    }
    let place_dim = |ps: &[usize]| -> usize { ps.iter().map(|&p| dims[net.place_id(p)]).product() };
    for t in 0..net.transition_count() {
        let id = net.transition_id(t);
        let h = signal.get(id).copied().unwrap_or(1);
        ann = ann.h(id, h);
        let din = place_dim(net.pre(t));
        let pol = net.polarity(t);
        if pol.is_negative() {
            ann = ann.channel(id, CptniMap::identity(dim(din * h)));
            continue;
        }
        let dout = place_dim(net.post(t)) * if pol == Polarity::Positive { h } else { 1 };
        let sharing = net
            .pre(t)
            .iter()
            .map(|&p| net.consumers(p).iter().filter(|&&u| !net.polarity(u).is_negative()).count())
            .max()
            .unwrap_or(1)
            .max(1);
        let (w, tp) = match weights {
            Weights::Sharing => (1.0 / sharing as f64, rng.gen_bool(0.6)),
            Weights::Full => (1.0, true),
            Weights::Mixed => (rng.gen_range(0.3..1.0), rng.gen_bool(0.5)),
        };
        let kraus = rng.gen_range(1..=2);
        let f = random::channel(rng, din, dout, kraus, tp).scale_kraus(w.sqrt());
        ann = ann.channel(id, f);
    }
    AnnotatedNet::new(net.clone(), ann.build().unwrap()).unwrap()
}

struct Cond {
    dim: usize,
    /// Events below and including the producer.
    past: BTreeSet<usize>,
    consumers: Vec<usize>,
    negative_consumers: Option<bool>,
}

struct Ev {
    pre: Vec<usize>,
    post: Vec<usize>,
    polarity: Polarity,
    h: usize,
}

fn concurrent(conds: &[Cond], events: &[Ev], a: usize, b: usize) -> bool {
    if a == b {
        return false;
    }
    let consumed_below = |x: usize, y: usize| conds[y].past.iter().any(|&e| events[e].pre.contains(&x));
    if consumed_below(a, b) || consumed_below(b, a) {
        return false;
    }
    for &e in &conds[a].past {
        for &f in &conds[b].past {
            if e != f && events[e].pre.iter().any(|c| events[f].pre.contains(c)) {
                return false;
            }
        }
    }
    true
}

fn split_dim(rng: &mut impl Rng, total: usize) -> Vec<usize> {
    if total == 4 && rng.gen_bool(0.3) {
        vec![2, 2]
    } else {
        vec![total]
    }
}

/// Shape limits of generated occurrence nets.
#[derive(Clone, Copy, Debug)]
pub struct OccShape {
    pub max_events: usize,
    pub max_dim: usize,
    /// Cap on the total dimension of any reachable marking.
    pub max_marking_dim: usize,
    pub max_cluster: usize,
}

impl Default for OccShape {
    fn default() -> Self {
        Self {
            max_events: 6,
            max_dim: 4,
            max_marking_dim: 32,
            max_cluster: 4,
        }
    }
}

fn try_occurrence_net(rng: &mut impl Rng, shape: OccShape) -> Option<AnnotatedNet> {
    let mut conds: Vec<Cond> = Vec::new();
    let mut events: Vec<Ev> = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        conds.push(Cond {
            dim: rng.gen_range(1..=shape.max_dim.min(3)),
            past: BTreeSet::new(),
            consumers: Vec::new(),
            negative_consumers: None,
        });
    }
    let target = rng.gen_range(2..=shape.max_events);
    let mut attempts = 0;
    while events.len() < target && attempts < 60 {
        attempts += 1;
        let mut pre = vec![rng.gen_range(0..conds.len())];
        if rng.gen_bool(0.3) {
            let other = rng.gen_range(0..conds.len());
            if !concurrent(&conds, &events, pre[0], other) {
                continue;
            }
            pre.push(other);
        }
        pre.sort_unstable();
        if pre.iter().any(|&c| conds[c].consumers.len() >= 3) {
            continue;
        }
        let din: usize = pre.iter().map(|&c| conds[c].dim).product();
        let class: BTreeSet<bool> = pre.iter().filter_map(|&c| conds[c].negative_consumers).collect();
        if class.len() > 1 {
            continue;
        }
        let forced = class.into_iter().next();
        let negative = match forced {
            Some(n) => n,
            None => rng.gen_bool(0.35),
        };
        let (polarity, h, post_dims) = if negative {
            if din * 2 > shape.max_dim {
                continue;
            }
            let h = rng.gen_range(2..=shape.max_dim / din);
            (Polarity::Negative, h, split_dim(rng, din * h))
        } else {
            let positive = rng.gen_bool(0.4);
            let n_post = rng.gen_range(1..=2);
            let mut dims: Vec<usize> = (0..n_post).map(|_| rng.gen_range(1..=shape.max_dim)).collect();
            while dims.iter().product::<usize>() > shape.max_dim {
                dims.pop();
            }
            // an event without post-conditions would leave no trace in the marking
            if dims.is_empty() {
                dims.push(rng.gen_range(1..=shape.max_dim));
            }
            if positive {
                (Polarity::Positive, 2, dims)
            } else {
                (Polarity::Neutral, 1, dims)
            }
        };
        let e = events.len();
        let mut past: BTreeSet<usize> = pre.iter().flat_map(|&c| conds[c].past.iter().copied()).collect();
        past.insert(e);
        let mut post = Vec::new();
        for d in post_dims {
            post.push(conds.len());
            conds.push(Cond {
                dim: d,
                past: past.clone(),
                consumers: Vec::new(),
                negative_consumers: None,
            });
        }
        for &c in &pre {
            conds[c].consumers.push(e);
            conds[c].negative_consumers = Some(negative);
        }
        events.push(Ev { pre, post, polarity, h });
    }
    if events.len() < 2 {
        return None;
    }
    let cid = |c: usize| format!("c{c}");
    let eid = |e: usize| format!("e{e}");
    let mut b = NetBuilder::new().places((0..conds.len()).map(cid));
    for (i, ev) in events.iter().enumerate() {
        let pre: Vec<String> = ev.pre.iter().map(|&c| cid(c)).collect();
        let post: Vec<String> = ev.post.iter().map(|&c| cid(c)).collect();
        let pre: Vec<&str> = pre.iter().map(String::as_str).collect();
        let post: Vec<&str> = post.iter().map(String::as_str).collect();
        b = b.event(&eid(i), ev.polarity, &pre, &post);
    }
    let initial: Vec<String> = (0..conds.len()).filter(|&c| conds[c].past.is_empty()).map(cid).collect();
    let net = b.initial(initial).build().ok()?;
    let dims: BTreeMap<String, usize> = conds.iter().enumerate().map(|(i, c)| (cid(i), c.dim)).collect();
    let signal: BTreeMap<String, usize> = events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.polarity != Polarity::Neutral)
        .map(|(i, e)| (eid(i), e.h))
        .collect();
    let weights = Weights::pick(rng);
    let an = annotate(rng, &net, &dims, &signal, weights);
    OccurrenceNet::new(an.net.clone()).ok()?;
    if !an.net.race_free().passed || !fits(&an, shape) {
        return None;
    }
    Some(an)
}

fn fits(an: &AnnotatedNet, shape: OccShape) -> bool {
    let Ok(markings) = an.net.reachable_markings(10_000) else {
        return false;
    };
    markings.iter().all(|m| {
        an.ann.marking_space(m).dim.get() <= shape.max_marking_dim
            && an.net.conflict_clusters(m).iter().all(|c| c.len() <= shape.max_cluster)
    })
}

/// A random race-free annotated occurrence net with locally oblivious
/// negative events and mixed polarities.
pub fn occurrence_net(rng: &mut impl Rng, shape: OccShape) -> AnnotatedNet {
    loop {
        if let Some(an) = try_occurrence_net(rng, shape) {
            return an;
        }
    }
}

/// `count` occurrence nets from one seed.
pub fn occurrence_corpus(seed: u64, count: usize) -> Vec<AnnotatedNet> {
    let mut r = rng(seed);
    (0..count).map(|_| occurrence_net(&mut r, OccShape::default())).collect()
}

/// Occurrence nets of the corpus that pass the local drop condition.
pub fn qpn_occurrence_nets(seed: u64, count: usize, shape: OccShape) -> Vec<AnnotatedNet> {
    let mut r = rng(seed);
    let opts = qpn::checker::CheckOptions::default();
    let mut out = Vec::new();
    while out.len() < count {
        let an = occurrence_net(&mut r, shape);
        if qpn::checker::is_qpn(&an.net, &an.ann, &opts).unwrap().passed {
            out.push(an);
        }
    }
    out
}

/// A small random safe net, possibly cyclic, together with the depth-4
/// unfolding. Only nets whose prefix is deep enough to reach every
/// reachable marking at a saturated configuration are returned.
pub fn safe_net(rng: &mut impl Rng, depth: usize) -> (AnnotatedNet, BranchingProcess) {
    loop {
        if let Some(found) = try_safe_net(rng, depth, None) {
            return found;
        }
    }
}

/// Like [`safe_net`], but some reachable marking enables a conflict of
/// non-negative transitions, annotated with the given weights.
pub fn safe_net_with_conflict(
    rng: &mut impl Rng,
    depth: usize,
    weights: Weights,
) -> (AnnotatedNet, BranchingProcess) {
    loop {
        let Some((an, bp)) = try_safe_net(rng, depth, Some(weights)) else {
            continue;
        };
        let markings = an.net.reachable_markings(10_000).unwrap();
        if markings.iter().any(|m| an.net.conflict_clusters(m).iter().any(|c| c.len() > 1)) {
            return (an, bp);
        }
    }
}

fn try_safe_net(
    rng: &mut impl Rng,
    depth: usize,
    weights: Option<Weights>,
) -> Option<(AnnotatedNet, BranchingProcess)> {
    let n_places = rng.gen_range(3..=5);
    let places: Vec<String> = (0..n_places).map(|i| format!("p{i}")).collect();
    let dims: BTreeMap<String, usize> = places.iter().map(|p| (p.clone(), *[1, 2, 2, 4].choose(rng).unwrap())).collect();
    let mut b = NetBuilder::new().places(places.iter().cloned());
    let mut class: BTreeMap<String, bool> = BTreeMap::new();
    let mut signal = BTreeMap::new();
    let n_transitions = rng.gen_range(2..=4);
    for t in 0..n_transitions {
        let id = format!("t{t}");
        let (n_pre, n_post) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let pre: Vec<String> = places.choose_multiple(rng, n_pre).cloned().collect();
        let post: Vec<String> = places.choose_multiple(rng, n_post).cloned().collect();
        let din: usize = pre.iter().map(|p| dims[p]).product();
        let dout: usize = post.iter().map(|p| dims[p]).product();
        let fixed: BTreeSet<bool> = pre.iter().filter_map(|p| class.get(p).copied()).collect();
        if fixed.len() > 1 {
            return None;
        }
        let can_be_negative = dout % din == 0 && dout / din >= 2;
        let negative = match fixed.into_iter().next() {
            Some(true) if can_be_negative => true,
            Some(true) => return None,
            Some(false) => false,
            None => can_be_negative && rng.gen_bool(0.6),
        };
        let polarity = if negative {
            signal.insert(id.clone(), dout / din);
            Polarity::Negative
        } else if rng.gen_bool(0.3) {
            signal.insert(id.clone(), 2);
            Polarity::Positive
        } else {
            Polarity::Neutral
        };
        for p in &pre {
            class.insert(p.clone(), negative);
        }
        let pre: Vec<&str> = pre.iter().map(String::as_str).collect();
        let post: Vec<&str> = post.iter().map(String::as_str).collect();
        b = b.event(&id, polarity, &pre, &post);
    }
    let n_initial = rng.gen_range(1..=2);
    let initial: Vec<String> = places.choose_multiple(rng, n_initial).cloned().collect();
    let net = b.initial(initial).build_with_bound(1000).ok()?;
    net.ensure_safety_verified().ok()?;
    if net.transition_count() < 2 || !net.race_free().passed {
        return None;
    }
    let weights = weights.unwrap_or_else(|| Weights::pick(rng));
    let an = annotate(rng, &net, &dims, &signal, weights);
    if !fits(&an, OccShape { max_marking_dim: 64, max_cluster: 4, ..OccShape::default() }) {
        return None;
    }
    let bp = unfold(&an.net, UnfoldBudget::depth(depth)).ok()?;
    if bp.exhaustion().events || bp.occ().event_count() < 2 || !reaches_all_markings(&an.net, &bp) {
        return None;
    }
    Some((an, bp))
}

/// Every reachable marking of `net` is the label image of the marking of
/// some saturated configuration of the prefix.
pub fn reaches_all_markings(net: &Net, bp: &BranchingProcess) -> bool {
    let Ok(configs) = bp.occ().configurations(100_000) else {
        return false;
    };
    let images: BTreeSet<Marking> = configs
        .iter()
        .filter(|x| bp.is_saturated_at(x))
        .filter_map(|x| bp.occ().marking_of_configuration(x).ok())
        .map(|m| bp.label_marking(&m))
        .collect();
    net.reachable_markings(10_000)
        .map(|ms| ms.iter().all(|m| images.contains(m)))
        .unwrap_or(false)
}

/// A race-free QPN with a positive cluster and a negative cluster of the
/// same shape (a clique or a chain of pairwise overlaps), plus the spec
/// pairing them. Valid for a drop-preserving join by construction.
pub fn join_case(rng: &mut impl Rng) -> (AnnotatedNet, JoinSpec) {
    loop {
        if let Some(found) = try_join_case(rng) {
            return found;
        }
    }
}

fn try_join_case(rng: &mut impl Rng) -> Option<(AnnotatedNet, JoinSpec)> {
    let k = rng.gen_range(1..=3);
    let chain = k == 3 && rng.gen_bool(0.5);
    // shared pre-places of the i-th pair: one hub, or hubs i-1 and i for a chain
    let hubs = |i: usize| -> Vec<usize> {
        if chain {
            [i.checked_sub(1), (i < k - 1).then_some(i)].into_iter().flatten().collect()
        } else {
            vec![0]
        }
    };
    let n_hubs = if chain { k - 1 } else { 1 };
    let mut dims = BTreeMap::new();
    let mut signal = BTreeMap::new();
    let mut places = Vec::new();
    for j in 0..n_hubs {
        dims.insert(format!("u{j}"), *[1, 2].choose(rng).unwrap());
        dims.insert(format!("z{j}"), *[1, 2].choose(rng).unwrap());
        places.extend([format!("u{j}"), format!("z{j}")]);
    }
    let mut b = NetBuilder::new();
    for i in 0..k {
        let h = rng.gen_range(1..=2);
        let us: Vec<String> = hubs(i).iter().map(|j| format!("u{j}")).collect();
        let zs: Vec<String> = hubs(i).iter().map(|j| format!("z{j}")).collect();
        let (o, y) = (format!("o{i}"), format!("y{i}"));
        dims.insert(o.clone(), rng.gen_range(1..=2));
        let zdim: usize = zs.iter().map(|z| dims[z]).product();
        dims.insert(y.clone(), zdim * h);
        places.extend([o.clone(), y.clone()]);
        signal.insert(format!("p{i}"), h);
        signal.insert(format!("n{i}"), h);
        let us: Vec<&str> = us.iter().map(String::as_str).collect();
        let zs: Vec<&str> = zs.iter().map(String::as_str).collect();
        b = b
            .event(&format!("p{i}"), Polarity::Positive, &us, &[o.as_str()])
            .event(&format!("n{i}"), Polarity::Negative, &zs, &[y.as_str()]);
    }
    if rng.gen_bool(0.5) {
        // an extra non-negative competitor of the first positive
        dims.insert("r".into(), rng.gen_range(1..=2));
        places.push("r".into());
        b = b.event("q", Polarity::Neutral, &["u0"], &["r"]);
    }
    let initial: Vec<String> = (0..n_hubs).flat_map(|j| [format!("u{j}"), format!("z{j}")]).collect();
    let net = b.places(places).initial(initial).build().ok()?;
    let an = annotate(rng, &net, &dims, &signal, Weights::Sharing);
    if !qpn::checker::is_qpn(&an.net, &an.ann, &Default::default()).ok()?.passed {
        return None;
    }
    let spec = JoinSpec::new((0..k).map(|i| (format!("p{i}"), format!("n{i}"))));
    Some((an, spec))
}
