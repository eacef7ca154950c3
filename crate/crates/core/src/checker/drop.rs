use std::collections::BTreeSet;

use crate::algebra::{tensor, ComplexMatrix, Dim, FactorPermutation, HermitianEffect};
use crate::annotation::{GlobalValuation, LocalAnnotation, Wire};
use crate::error::{Error, Result};
use crate::net::occurrence::{Configuration, OccurrenceNet};
use crate::net::{Marking, Net};

/// Largest family handed to plain inclusion-exclusion.
pub const MAX_FAMILY: usize = 20;

/// A base configuration and extensions of it by non-negative events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropInstance {
    pub base: Configuration,
    pub extensions: Vec<Configuration>,
}

impl DropInstance {
    pub fn new(base: Configuration, extensions: Vec<Configuration>) -> Self {
        Self { base, extensions }
    }

    pub fn validate(&self, occ: &OccurrenceNet) -> Result<()> {
        if self.extensions.len() > MAX_FAMILY {
            return Err(Error::ClusterTooLarge {
                size: self.extensions.len(),
                cap: MAX_FAMILY,
            });
        }
        for y in &self.extensions {
            if !self.base.is_subset(y) {
                return Err(Error::NotReachableFrom);
            }
            if let Some(e) = y
                .iter()
                .find(|&e| !self.base.contains(e) && occ.net().polarity(e).is_negative())
            {
                return Err(Error::IncompatibleExtension(occ.net().transition_id(e).to_string()));
            }
        }
        Ok(())
    }
}

/// Union of the configurations picked by `mask`, if it is a configuration.
pub(crate) fn union_of(
    occ: &OccurrenceNet,
    base: &Configuration,
    ys: &[Configuration],
    mask: usize,
) -> Option<Configuration> {
    let mut events: BTreeSet<usize> = base.events().clone();
    for (i, y) in ys.iter().enumerate() {
        if mask >> i & 1 == 1 {
            events.extend(y.iter());
        }
    }
    if occ.is_configuration(&events) {
        occ.configuration(events).ok()
    } else {
        None
    }
}

fn sign(mask: usize) -> f64 {
    if mask.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `d[x; y1..yn]` by inclusion-exclusion over the global valuation, as an
/// effect on the space of the base marking.
pub fn drop_effect(gv: &GlobalValuation<'_>, inst: &DropInstance) -> Result<HermitianEffect> {
    let occ = gv.occurrence_net();
    inst.validate(occ)?;
    let n = inst.extensions.len();
    let mut acc: Option<ComplexMatrix> = None;
    for mask in 0..1usize << n {
        let Some(y) = union_of(occ, &inst.base, &inst.extensions, mask) else {
            continue;
        };
        let eff = gv.between(&inst.base, &y)?.map.effect();
        match acc.as_mut() {
            None => acc = Some(eff.scale_real(sign(mask))),
            Some(a) => a.add_assign_unchecked(&eff, sign(mask)),
        }
    }
    HermitianEffect::new(acc.expect("the empty family is always present"))
}

/// Embeds effects acting on groups of wires into the space of `space`
/// (canonical order), padding with identities.
pub(crate) fn embed(
    ann: &LocalAnnotation,
    space: &[Wire],
    factors: &[(Vec<Wire>, &ComplexMatrix)],
) -> ComplexMatrix {
    let mut order: Vec<Wire> = factors.iter().flat_map(|(w, _)| w.iter().copied()).collect();
    let rest: Vec<Wire> = space.iter().copied().filter(|w| !order.contains(w)).collect();
    let rest_dim = rest.iter().map(|w| ann.wire_dim(*w).get()).product::<usize>();
    order.extend(rest);
    let mut m = ComplexMatrix::identity(1);
    for (_, f) in factors {
        m = tensor(&m, f);
    }
    m = tensor(&m, &ComplexMatrix::identity(rest_dim));
    let dims: Vec<Dim> = order.iter().map(|w| ann.wire_dim(*w)).collect();
    let p = FactorPermutation::between(dims, &order, space).expect("wires cover the space");
    if p.is_identity() {
        m
    } else {
        m.reindex(&p.index_map())
    }
}

fn check_cluster(net: &Net, m: &Marking, cluster: &[usize]) -> Result<()> {
    for &e in cluster {
        if net.polarity(e).is_negative() {
            return Err(Error::NegativeEventInCluster(net.transition_id(e).to_string()));
        }
        if !net.is_enabled(m, e) {
            return Err(Error::NotEnabled(net.transition_id(e).to_string()));
        }
    }
    Ok(())
}

/// Inclusion-exclusion over compatible sub-families of single extensions,
/// on the space spanned by `space`.
pub(crate) fn single_extension_on(
    net: &Net,
    ann: &LocalAnnotation,
    space: &[Wire],
    cluster: &[usize],
) -> Result<HermitianEffect> {
    if cluster.len() > MAX_FAMILY {
        return Err(Error::ClusterTooLarge {
            size: cluster.len(),
            cap: MAX_FAMILY,
        });
    }
    let effects: Vec<ComplexMatrix> = cluster.iter().map(|&e| ann.channel(e).effect()).collect();
    let dim = space.iter().map(|w| ann.wire_dim(*w).get()).product::<usize>();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    'families: for mask in 0..1usize << cluster.len() {
        let members: Vec<usize> = (0..cluster.len()).filter(|i| mask >> i & 1 == 1).collect();
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                if net.in_conflict(cluster[i], cluster[j]) {
                    continue 'families;
                }
            }
        }
        let factors: Vec<(Vec<Wire>, &ComplexMatrix)> = members
            .iter()
            .map(|&i| (ann.input_wires(net, cluster[i]), &effects[i]))
            .collect();
        acc.add_assign_unchecked(&embed(ann, space, &factors), sign(mask));
    }
    HermitianEffect::new(acc)
}

/// Identity minus the branch effects, on the space spanned by `space`.
pub(crate) fn clique_on(
    net: &Net,
    ann: &LocalAnnotation,
    space: &[Wire],
    clique: &[usize],
) -> Result<(HermitianEffect, usize)> {
    for (k, &a) in clique.iter().enumerate() {
        for &b in &clique[k + 1..] {
            if !net.in_conflict(a, b) {
                return Err(Error::NotAClique(
                    net.transition_id(a).to_string(),
                    net.transition_id(b).to_string(),
                ));
            }
        }
    }
    let dim = space.iter().map(|w| ann.wire_dim(*w).get()).product::<usize>();
    let mut acc = ComplexMatrix::identity(dim);
    for &e in clique {
        let eff = ann.channel(e).effect();
        acc.add_assign_unchecked(&embed(ann, space, &[(ann.input_wires(net, e), &eff)]), -1.0);
    }
    Ok((HermitianEffect::new(acc)?, clique.len()))
}

fn marking_wires(m: &Marking) -> Vec<Wire> {
    m.iter().map(Wire::Cond).collect()
}

/// Drop of the single extensions of `m` by the events of `cluster`, on
/// the whole marking space.
pub fn single_extension_drop(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    cluster: &[usize],
) -> Result<HermitianEffect> {
    check_cluster(net, m, cluster)?;
    single_extension_on(net, ann, &marking_wires(m), cluster)
}

/// Linear-time drop for a conflict clique; also returns the number of
/// branch terms evaluated.
pub fn clique_drop(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    clique: &[usize],
) -> Result<(HermitianEffect, usize)> {
    check_cluster(net, m, clique)?;
    clique_on(net, ann, &marking_wires(m), clique)
}

/// The conditions a cluster reads, as canonical wires.
pub(crate) fn cluster_space(net: &Net, cluster: &[usize]) -> Vec<Wire> {
    let places: BTreeSet<usize> = cluster.iter().flat_map(|&e| net.pre(e).iter().copied()).collect();
    places.into_iter().map(Wire::Cond).collect()
}
