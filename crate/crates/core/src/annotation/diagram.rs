use std::collections::BTreeSet;

use super::{LocalAnnotation, Wire, WiredChannel};
use crate::algebra::{CptniMap, Limits};
use crate::error::{Error, Result};
use crate::net::occurrence::Restriction;
use crate::net::{Net, Polarity};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerNode {
    /// Identity on a single wire.
    Pass(Wire),
    Event(usize),
}

/// Layered string diagram of a restriction. Layer 0 holds the source
/// conditions and the pending input signals; each later layer holds the
/// events at one causal depth followed by the wires that bypass them. A
/// closing identity layer lists the outputs. Interior identity layers are
/// fused away.
#[derive(Clone, Debug)]
pub struct LayerGraph {
    layers: Vec<Vec<LayerNode>>,
    inputs: Vec<Wire>,
    outputs: Vec<Wire>,
}

impl LayerGraph {
    pub fn layers(&self) -> &[Vec<LayerNode>] {
        &self.layers
    }

    pub fn inputs(&self) -> &[Wire] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Wire] {
        &self.outputs
    }

    /// Wires leaving layer `i`.
    pub fn wires_after(&self, net: &Net, ann: &LocalAnnotation, i: usize) -> Vec<Wire> {
        let mut out = Vec::new();
        for node in &self.layers[i] {
            match *node {
                LayerNode::Pass(w) => out.push(w),
                LayerNode::Event(e) => out.extend(ann.output_wires(net, e)),
            }
        }
        out
    }

    /// Composes the layers into one channel with canonical wire order.
    pub fn evaluate(&self, net: &Net, ann: &LocalAnnotation, limits: &Limits) -> Result<WiredChannel> {
        let dim = |w: Wire| ann.wire_dim(w);
        let mut cur = WiredChannel::identity(self.inputs.clone(), &dim);
        for layer in self.layers.iter().skip(1) {
            let events: Vec<usize> = layer
                .iter()
                .filter_map(|n| match n {
                    LayerNode::Event(e) => Some(*e),
                    LayerNode::Pass(_) => None,
                })
                .collect();
            if events.is_empty() {
                continue;
            }
            cur = cur.then(&tensor_events(net, ann, &events, limits)?, &dim, limits)?;
        }
        cur.permute_outputs(&self.outputs, &dim)
    }
}

fn tensor_events(net: &Net, ann: &LocalAnnotation, events: &[usize], limits: &Limits) -> Result<WiredChannel> {
    let mut step = ann.wired(net, events[0]);
    for &e in &events[1..] {
        step = step.tensor(&ann.wired(net, e), limits)?;
    }
    Ok(step)
}

/// Canonical input and output wires of the operator on a restriction.
pub(crate) fn boundary(net: &Net, from: impl Iterator<Item = usize>, to: impl Iterator<Item = usize>, sigma: &[usize]) -> (Vec<Wire>, Vec<Wire>) {
    let mut inputs: Vec<Wire> = from.map(Wire::Cond).collect();
    inputs.extend(
        sigma
            .iter()
            .filter(|&&e| net.polarity(e) == Polarity::Negative)
            .map(|&e| Wire::HIn(e)),
    );
    let mut outputs: Vec<Wire> = to.map(Wire::Cond).collect();
    outputs.extend(
        sigma
            .iter()
            .filter(|&&e| net.polarity(e) == Polarity::Positive)
            .map(|&e| Wire::HOut(e)),
    );
    inputs.sort();
    outputs.sort();
    (inputs, outputs)
}

pub fn layer_graph(net: &Net, r: &Restriction, ann: &LocalAnnotation) -> Result<LayerGraph> {
    let (inputs, outputs) = boundary(net, r.from.iter(), r.to.iter(), &r.events);
    let mut live: BTreeSet<Wire> = inputs.iter().copied().collect();
    let mut layers = vec![inputs.iter().map(|w| LayerNode::Pass(*w)).collect::<Vec<_>>()];
    for d in 1..=r.depth() {
        let events = r.events_at_level(d);
        let mut layer: Vec<LayerNode> = events.iter().map(|e| LayerNode::Event(*e)).collect();
        let mut consumed = BTreeSet::new();
        for &e in &events {
            for w in ann.input_wires(net, e) {
                if !live.contains(&w) || !consumed.insert(w) {
                    return Err(Error::DisconnectedRestriction(format!(
                        "event {} needs {w}",
                        net.transition_id(e)
                    )));
                }
            }
        }
        layer.extend(live.iter().filter(|w| !consumed.contains(w)).map(|w| LayerNode::Pass(*w)));
        live.retain(|w| !consumed.contains(w));
        for &e in &events {
            for w in ann.output_wires(net, e) {
                if !live.insert(w) {
                    return Err(Error::DisconnectedRestriction(format!("{w} produced twice")));
                }
            }
        }
        layers.push(layer);
    }
    if live.iter().copied().collect::<Vec<_>>() != outputs {
        return Err(Error::DisconnectedRestriction(
            "events do not lead from the source to the target marking".into(),
        ));
    }
    if r.depth() > 0 {
        layers.push(outputs.iter().map(|w| LayerNode::Pass(*w)).collect());
    }
    Ok(LayerGraph {
        layers,
        inputs,
        outputs,
    })
}

/// The operator of a restriction: inputs are the source conditions followed
/// by the signals of its negative events, outputs the target conditions
/// followed by the signals of its positive events.
pub fn evaluate_operator(net: &Net, r: &Restriction, ann: &LocalAnnotation, limits: &Limits) -> Result<CptniMap> {
    Ok(layer_graph(net, r, ann)?.evaluate(net, ann, limits)?.map)
}

/// Evaluates a restriction one event at a time in the given order, which
/// must be a linearisation of its events.
pub fn evaluate_along_firing_sequence(
    net: &Net,
    r: &Restriction,
    ann: &LocalAnnotation,
    order: &[usize],
    limits: &Limits,
) -> Result<WiredChannel> {
    let mut sorted = order.to_vec();
    sorted.sort();
    let mut events = r.events.clone();
    events.sort();
    if sorted != events {
        return Err(Error::DisconnectedRestriction(
            "firing sequence does not match the interval".into(),
        ));
    }
    let (inputs, outputs) = boundary(net, r.from.iter(), r.to.iter(), &r.events);
    let dim = |w: Wire| ann.wire_dim(w);
    let mut cur = WiredChannel::identity(inputs, &dim);
    for &e in order {
        cur = cur.then(&ann.wired(net, e), &dim, limits)?;
    }
    cur.permute_outputs(&outputs, &dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{kraus_tensor, random, Dim};
    use crate::fixtures;
    use crate::net::occurrence::OccurrenceNet;
    use crate::net::NetBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn restriction_of(occ: &OccurrenceNet, x: &[&str], y: &[&str]) -> Restriction {
        let x = occ.configuration_from_ids(x).unwrap();
        let y = occ.configuration_from_ids(y).unwrap();
        occ.restriction(&occ.interval_of_configurations(&x, &y).unwrap())
    }

    #[test]
    fn empty_restriction_is_one_identity_layer() {
        let q = fixtures::branching(false);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let r = restriction_of(&occ, &[], &[]);
        let g = layer_graph(occ.net(), &r, &q.ann).unwrap();
        assert_eq!(g.layers().len(), 1);
        let f = evaluate_operator(occ.net(), &r, &q.ann, &Limits::default()).unwrap();
        assert!(f.approx_eq(&CptniMap::identity(Dim::new(4).unwrap()), 1e-12));
    }

    #[test]
    fn single_positive_event_shape() {
        let q = fixtures::branching(false);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let net = occ.net();
        let r = restriction_of(&occ, &["a"], &["a", "c"]);
        let g = layer_graph(net, &r, &q.ann).unwrap();
        let c = net.transition("c").unwrap();
        let p1 = net.place("p1").unwrap();
        let p3 = net.place("p3").unwrap();
        assert_eq!(g.layers().len(), 3);
        assert_eq!(g.layers()[0], vec![LayerNode::Pass(Wire::Cond(p1))]);
        assert_eq!(g.layers()[1], vec![LayerNode::Event(c)]);
        assert_eq!(
            g.layers()[2],
            vec![LayerNode::Pass(Wire::Cond(p3)), LayerNode::Pass(Wire::HOut(c))]
        );
    }

    #[test]
    fn later_negative_signal_is_padded_through_earlier_layers() {
        // u then a negative v: v's input signal crosses layer 1 untouched
        let net = NetBuilder::new()
            .places(["p", "q", "r"])
            .event("u", Polarity::Positive, &["p"], &["q"])
            .event("v", Polarity::Negative, &["q"], &["r"])
            .initial(["p"])
            .build()
            .unwrap();
        let occ = OccurrenceNet::new(net).unwrap();
        let net = occ.net();
        let ann = LocalAnnotation::builder(net)
            .place_dim("p", 2)
            .place_dim("q", 2)
            .place_dim("r", 6)
            .h("u", 2)
            .h("v", 3)
            .channel("u", random::channel(&mut ChaCha8Rng::seed_from_u64(3), 2, 4, 1, true))
            .channel("v", CptniMap::identity(Dim::new(6).unwrap()))
            .build()
            .unwrap();
        let r = restriction_of(&occ, &[], &["u", "v"]);
        let g = layer_graph(net, &r, &ann).unwrap();
        let v = net.transition("v").unwrap();
        let u = net.transition("u").unwrap();
        assert!(g.layers()[1].contains(&LayerNode::Pass(Wire::HIn(v))));
        assert_eq!(g.layers().len(), 4);
        // every cut carries the declared signature: 2·3 in, 6·2 out
        let product = |ws: &[Wire]| ws.iter().map(|w| ann.wire_dim(*w).get()).product::<usize>();
        assert_eq!(product(g.inputs()), 6);
        assert_eq!(product(&g.wires_after(net, &ann, 1)), 2 * 2 * 3);
        assert_eq!(product(&g.wires_after(net, &ann, 2)), 12);
        assert_eq!(g.outputs(), &[Wire::Cond(net.place("r").unwrap()), Wire::HOut(u)]);
        let f = evaluate_operator(net, &r, &ann, &Limits::default()).unwrap();
        assert_eq!((f.dim_in().get(), f.dim_out().get()), (6, 12));
    }

    #[test]
    fn concurrent_events_tensor_and_commute() {
        let net = NetBuilder::new()
            .places(["p", "q", "r", "s"])
            .event("e", Polarity::Neutral, &["p"], &["r"])
            .event("f", Polarity::Neutral, &["q"], &["s"])
            .initial(["p", "q"])
            .build()
            .unwrap();
        let occ = OccurrenceNet::new(net).unwrap();
        let net = occ.net();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fe = random::channel(&mut rng, 2, 3, 2, false);
        let ff = random::channel(&mut rng, 2, 2, 3, false);
        let ann = LocalAnnotation::builder(net)
            .place_dim("p", 2)
            .place_dim("q", 2)
            .place_dim("r", 3)
            .place_dim("s", 2)
            .channel("e", fe.clone())
            .channel("f", ff.clone())
            .build()
            .unwrap();
        let r = restriction_of(&occ, &[], &["e", "f"]);
        let lim = Limits::default();
        let whole = evaluate_operator(net, &r, &ann, &lim).unwrap();
        // p < q and r < s, so the canonical order is already e ⊗ f
        assert!(whole.approx_eq(&kraus_tensor(&fe, &ff).unwrap(), 1e-12));
        let e = net.transition("e").unwrap();
        let f = net.transition("f").unwrap();
        let ef = evaluate_along_firing_sequence(net, &r, &ann, &[e, f], &lim).unwrap();
        let fe2 = evaluate_along_firing_sequence(net, &r, &ann, &[f, e], &lim).unwrap();
        assert!(ef.map.approx_eq(&fe2.map, 1e-12));
        assert!(ef.map.approx_eq(&whole, 1e-12));
    }

    #[test]
    fn fixture_positive_step_is_x_tensor_identity() {
        let q = fixtures::branching(false);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let r = restriction_of(&occ, &["a"], &["a", "c"]);
        let f = evaluate_operator(occ.net(), &r, &q.ann, &Limits::default()).unwrap();
        // outputs come as [p3, h(c)]; move the signal first to compare with X ⊗ id4
        let swap = crate::algebra::FactorPermutation::new(
            vec![Dim::new(4).unwrap(), Dim::new(2).unwrap()],
            vec![1, 0],
        )
        .unwrap();
        let aligned = f.with_output_permutation(&swap).unwrap();
        assert!(aligned.approx_eq(&fixtures::x_tensor_id4(), 1e-12));
    }

    #[test]
    fn wrong_order_is_rejected() {
        let q = fixtures::branching(false);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let net = occ.net();
        let r = restriction_of(&occ, &[], &["a", "c"]);
        let a = net.transition("a").unwrap();
        let c = net.transition("c").unwrap();
        let lim = Limits::default();
        assert!(evaluate_along_firing_sequence(net, &r, &q.ann, &[a, c], &lim).is_ok());
        assert!(matches!(
            evaluate_along_firing_sequence(net, &r, &q.ann, &[c, a], &lim),
            Err(Error::DisconnectedRestriction(_))
        ));
    }
}
