//! Local quantum annotations: a dimension per place, a channel per
//! transition and a signal space per non-neutral transition.

mod diagram;
mod valuation;
mod wired;

pub use diagram::{evaluate_along_firing_sequence, evaluate_operator, layer_graph, LayerGraph, LayerNode};
pub use valuation::{functoriality_composite, GlobalValuation};
pub use wired::{Wire, WiredChannel};

use std::collections::BTreeMap;

use crate::algebra::{is_cptni, CptniMap, Dim, EXT_TOL};
use crate::error::{Error, Result};
use crate::net::{Marking, Net, Polarity};
use crate::outcome::CheckOutcome;

/// `(Q0, H)` for one net, indexed by that net's place and transition indices.
#[derive(Clone, Debug)]
pub struct LocalAnnotation {
    place_dims: Vec<Dim>,
    channels: Vec<CptniMap>,
    h: Vec<Dim>,
}

/// Tensor space of a marking: total dimension and its factors in place order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkingSpace {
    pub dim: Dim,
    pub factors: Vec<(usize, Dim)>,
}

impl MarkingSpace {
    pub fn dims(&self) -> Vec<Dim> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }
}

impl LocalAnnotation {
    pub fn builder(net: &Net) -> AnnotationBuilder<'_> {
        AnnotationBuilder {
            net,
            place_dims: BTreeMap::new(),
            channels: BTreeMap::new(),
            h: BTreeMap::new(),
        }
    }

    /// Builds from index-aligned tables. Lengths must match `net`.
    pub fn from_parts(net: &Net, place_dims: Vec<Dim>, channels: Vec<CptniMap>, h: Vec<Dim>) -> Result<Self> {
        if place_dims.len() != net.place_count() {
            return Err(Error::DimensionMismatch {
                context: "place dimensions".into(),
                expected: net.place_count(),
                actual: place_dims.len(),
            });
        }
        if channels.len() != net.transition_count() || h.len() != net.transition_count() {
            return Err(Error::AnnotationMismatch(format!(
                "{} transitions, {} channels, {} signal spaces",
                net.transition_count(),
                channels.len(),
                h.len()
            )));
        }
        Ok(Self {
            place_dims,
            channels,
            h,
        })
    }

    pub fn place_dim(&self, p: usize) -> Dim {
        self.place_dims[p]
    }

    pub fn place_dims(&self) -> &[Dim] {
        &self.place_dims
    }

    pub fn channel(&self, t: usize) -> &CptniMap {
        &self.channels[t]
    }

    pub fn channels(&self) -> &[CptniMap] {
        &self.channels
    }

    pub fn h(&self, t: usize) -> Dim {
        self.h[t]
    }

    pub fn signal_dims(&self) -> &[Dim] {
        &self.h
    }

    pub fn set_channel(&mut self, t: usize, map: CptniMap) {
        self.channels[t] = map;
    }

    pub fn set_h(&mut self, t: usize, h: Dim) {
        self.h[t] = h;
    }

    pub fn wire_dim(&self, w: Wire) -> Dim {
        match w {
            Wire::Cond(p) => self.place_dims[p],
            Wire::HIn(e) | Wire::HOut(e) => self.h[e],
        }
    }

    pub fn marking_space(&self, m: &Marking) -> MarkingSpace {
        let factors: Vec<(usize, Dim)> = m.iter().map(|p| (p, self.place_dims[p])).collect();
        let dim = Dim::product(factors.iter().map(|(_, d)| d));
        MarkingSpace { dim, factors }
    }

    /// Wires consumed by `t`: its pre-conditions, then its input signal if negative.
    pub fn input_wires(&self, net: &Net, t: usize) -> Vec<Wire> {
        let mut w: Vec<Wire> = net.pre(t).iter().map(|&p| Wire::Cond(p)).collect();
        if net.polarity(t) == Polarity::Negative {
            w.push(Wire::HIn(t));
        }
        w
    }

    /// Wires produced by `t`: its post-conditions, then its output signal if positive.
    pub fn output_wires(&self, net: &Net, t: usize) -> Vec<Wire> {
        let mut w: Vec<Wire> = net.post(t).iter().map(|&p| Wire::Cond(p)).collect();
        if net.polarity(t) == Polarity::Positive {
            w.push(Wire::HOut(t));
        }
        w
    }

    pub fn wired(&self, net: &Net, t: usize) -> WiredChannel {
        WiredChannel::new(
            self.channels[t].clone(),
            self.input_wires(net, t),
            self.output_wires(net, t),
        )
    }

    /// Expected `(dim_in, dim_out)` of the channel on `t`.
    pub fn signature(&self, net: &Net, t: usize) -> (Dim, Dim) {
        let product = |ws: Vec<Wire>| Dim::product(&ws.iter().map(|w| self.wire_dim(*w)).collect::<Vec<_>>());
        (
            product(self.input_wires(net, t)),
            product(self.output_wires(net, t)),
        )
    }
}

/// Assembles an annotation by node id.
pub struct AnnotationBuilder<'n> {
    net: &'n Net,
    place_dims: BTreeMap<String, usize>,
    channels: BTreeMap<String, CptniMap>,
    h: BTreeMap<String, usize>,
}

impl AnnotationBuilder<'_> {
    pub fn place_dim(mut self, id: impl Into<String>, dim: usize) -> Self {
        self.place_dims.insert(id.into(), dim);
        self
    }

    /// Gives every place not set explicitly the dimension `dim`.
    pub fn default_place_dim(mut self, dim: usize) -> Self {
        for id in self.net.place_ids() {
            self.place_dims.entry(id.clone()).or_insert(dim);
        }
        self
    }

    pub fn channel(mut self, id: impl Into<String>, map: CptniMap) -> Self {
        self.channels.insert(id.into(), map);
        self
    }

    /// Signal space of a non-neutral transition; defaults to 1.
    pub fn h(mut self, id: impl Into<String>, dim: usize) -> Self {
        self.h.insert(id.into(), dim);
        self
    }

    pub fn build(self) -> Result<LocalAnnotation> {
        let net = self.net;
        for id in self.place_dims.keys() {
            net.place(id)?;
        }
        for id in self.channels.keys().chain(self.h.keys()) {
            net.transition(id)?;
        }
        let place_dims = net
            .place_ids()
            .iter()
            .map(|id| {
                let d = self
                    .place_dims
                    .get(id)
                    .ok_or_else(|| Error::MissingDimension(id.clone()))?;
                Dim::new(*d)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut channels = Vec::new();
        let mut h = Vec::new();
        for id in net.transition_ids() {
            let map = self
                .channels
                .get(id)
                .ok_or_else(|| Error::MissingChannel(id.clone()))?;
            channels.push(map.clone());
            h.push(Dim::new(self.h.get(id).copied().unwrap_or(1))?);
        }
        LocalAnnotation::from_parts(net, place_dims, channels, h)
    }
}

/// Checks every channel against the signature its transition dictates.
pub fn validate_signatures(net: &Net, ann: &LocalAnnotation) -> CheckOutcome {
    const NAME: &str = "signatures";
    if ann.place_dims.len() != net.place_count() || ann.channels.len() != net.transition_count() {
        return CheckOutcome::fail(NAME, "annotation does not belong to this net");
    }
    for t in 0..net.transition_count() {
        let id = net.transition_id(t);
        if net.polarity(t) == Polarity::Neutral && ann.h(t) != Dim::ONE {
            return CheckOutcome::fail(NAME, format!("neutral transition {id} has h = {}", ann.h(t)))
                .with_witness(id);
        }
        let (din, dout) = ann.signature(net, t);
        let f = ann.channel(t);
        if f.dim_in() != din {
            return CheckOutcome::fail(
                NAME,
                format!("transition {id}: expected dim_in {din}, got {}", f.dim_in()),
            )
            .with_witness(id);
        }
        if f.dim_out() != dout {
            return CheckOutcome::fail(
                NAME,
                format!("transition {id}: expected dim_out {dout}, got {}", f.dim_out()),
            )
            .with_witness(id);
        }
    }
    CheckOutcome::pass(NAME)
}

/// Checks every channel is completely positive and trace non-increasing.
pub fn validate_channels(net: &Net, ann: &LocalAnnotation, tol_psd: f64) -> CheckOutcome {
    for t in 0..net.transition_count() {
        let r = is_cptni(ann.channel(t), tol_psd);
        if !r.passed {
            return CheckOutcome::fail("channels", format!("transition {}: {}", net.transition_id(t), r.detail))
                .with_witness(net.transition_id(t));
        }
    }
    CheckOutcome::pass("channels")
}

/// Every negative transition must carry the identity on `Q0(•t) ⊗ H(t)`,
/// and its post-set must have exactly that dimension.
pub fn check_local_obliviousness(net: &Net, ann: &LocalAnnotation) -> CheckOutcome {
    const NAME: &str = "local_obliviousness";
    let mut worst: f64 = 0.0;
    for t in 0..net.transition_count() {
        if net.polarity(t) != Polarity::Negative {
            continue;
        }
        let id = net.transition_id(t);
        let (din, dout) = ann.signature(net, t);
        if din != dout {
            return CheckOutcome::fail(
                NAME,
                format!("negative transition {id}: post-set has dimension {dout}, pre-set with signal {din}"),
            )
            .with_witness(id);
        }
        let f = ann.channel(t);
        if f.dim_in() != din || f.dim_out() != dout {
            return CheckOutcome::fail(NAME, format!("negative transition {id}: signature mismatch"))
                .with_witness(id);
        }
        let dev = match f.deviation(&CptniMap::identity(din)) {
            Ok(d) => d,
            Err(e) => return CheckOutcome::fail(NAME, e.to_string()).with_witness(id),
        };
        worst = worst.max(dev);
        if dev > EXT_TOL {
            return CheckOutcome::fail(
                NAME,
                format!("negative transition {id} deviates from the identity by {dev:.3e}"),
            )
            .with_witness(id)
            .with_metric("deviation", dev);
        }
    }
    CheckOutcome::pass(NAME).with_metric("deviation", worst)
}

/// A net together with its local annotation.
#[derive(Clone, Debug)]
pub struct AnnotatedNet {
    pub net: Net,
    pub ann: LocalAnnotation,
}

impl AnnotatedNet {
    pub fn new(net: Net, ann: LocalAnnotation) -> Result<Self> {
        if ann.place_dims.len() != net.place_count() || ann.channels.len() != net.transition_count() {
            return Err(Error::AnnotationMismatch("table sizes differ".into()));
        }
        Ok(Self { net, ann })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::algebra::ComplexMatrix;
    use crate::fixtures;

    #[test]
    fn marking_space_orders_factors_by_place() {
        let q = fixtures::branching(false);
        let m = q.net.initial_marking();
        let s = q.ann.marking_space(m);
        assert_eq!(s.dim.get(), 4);
        assert_eq!(q.ann.marking_space(&Marking::empty()).dim, Dim::ONE);
    }

    #[test]
    fn marking_space_two_places() {
        let net = crate::net::NetBuilder::new()
            .places(["p", "q"])
            .initial(["p", "q"])
            .build()
            .unwrap();
        let ann = LocalAnnotation::builder(&net)
            .place_dim("p", 2)
            .place_dim("q", 3)
            .build()
            .unwrap();
        let s = ann.marking_space(net.initial_marking());
        assert_eq!(s.dim.get(), 6);
        assert_eq!(s.dims(), vec![Dim::new(2).unwrap(), Dim::new(3).unwrap()]);
    }

    #[test]
    fn fixture_signatures_pass() {
        for scaled in [false, true] {
            let q = fixtures::branching(scaled);
            assert!(validate_signatures(&q.net, &q.ann).passed);
            assert!(validate_channels(&q.net, &q.ann, 1e-9).passed);
        }
    }

    #[test]
    fn wrong_signal_space_is_reported() {
        let mut q = fixtures::branching(false);
        let a = q.net.transition("a").unwrap();
        q.ann.set_h(a, Dim::new(3).unwrap());
        let r = validate_signatures(&q.net, &q.ann);
        assert!(!r.passed);
        assert!(r.detail.contains("expected dim_in 12, got 8"), "{}", r.detail);
    }

    #[test]
    fn neutral_with_signal_is_rejected() {
        let mut q = fixtures::branching(false);
        let b = q.net.transition("b").unwrap();
        q.ann.set_h(b, Dim::new(2).unwrap());
        assert!(!validate_signatures(&q.net, &q.ann).passed);
    }

    #[test]
    fn missing_channel_is_an_error() {
        let q = fixtures::branching(false);
        let r = LocalAnnotation::builder(&q.net).default_place_dim(2).build();
        assert!(matches!(r, Err(Error::MissingChannel(_))));
    }

    #[test]
    fn fixture_is_locally_oblivious() {
        let q = fixtures::branching(false);
        assert!(check_local_obliviousness(&q.net, &q.ann).passed);
    }

    #[test]
    fn negative_x_is_not_oblivious() {
        let net = crate::net::NetBuilder::new()
            .places(["p", "q"])
            .event("t", Polarity::Negative, &["p"], &["q"])
            .initial(["p"])
            .build()
            .unwrap();
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let ann = LocalAnnotation::builder(&net)
            .default_place_dim(2)
            .channel("t", CptniMap::conjugation(x).unwrap())
            .build()
            .unwrap();
        let r = check_local_obliviousness(&net, &ann);
        assert!(!r.passed);
        assert!((r.metric("deviation").unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn no_negative_events_pass_vacuously() {
        let net = crate::net::NetBuilder::new()
            .places(["p", "q"])
            .event("t", Polarity::Positive, &["p"], &["q"])
            .initial(["p"])
            .build()
            .unwrap();
        let ann = LocalAnnotation::builder(&net)
            .default_place_dim(2)
            .channel("t", CptniMap::identity(Dim::new(2).unwrap()))
            .build()
            .unwrap();
        assert!(check_local_obliviousness(&net, &ann).passed);
    }
}
