use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::diagram::layer_graph;
use super::{LocalAnnotation, Wire, WiredChannel};
use crate::algebra::Limits;
use crate::error::Result;
use crate::net::occurrence::{Configuration, MarkingInterval, OccurrenceNet};
use crate::net::Marking;

/// The global annotation induced on marking intervals of an annotated
/// occurrence net, computed on demand and memoised per interval.
pub struct GlobalValuation<'a> {
    occ: &'a OccurrenceNet,
    ann: &'a LocalAnnotation,
    limits: Limits,
    memo: RwLock<HashMap<(Marking, Marking), Arc<WiredChannel>>>,
}

impl<'a> GlobalValuation<'a> {
    pub fn new(occ: &'a OccurrenceNet, ann: &'a LocalAnnotation, limits: Limits) -> Self {
        Self {
            occ,
            ann,
            limits,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn occurrence_net(&self) -> &'a OccurrenceNet {
        self.occ
    }

    pub fn annotation(&self) -> &'a LocalAnnotation {
        self.ann
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn global_q(&self, iv: &MarkingInterval) -> Result<Arc<WiredChannel>> {
        let key = (iv.from.clone(), iv.to.clone());
        if let Some(hit) = self.memo.read().expect("memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let r = self.occ.restriction(iv);
        let net = self.occ.net();
        let value = Arc::new(layer_graph(net, &r, self.ann)?.evaluate(net, self.ann, &self.limits)?);
        let mut memo = self.memo.write().expect("memo poisoned");
        Ok(memo.entry(key).or_insert(value).clone())
    }

    pub fn between(&self, x: &Configuration, y: &Configuration) -> Result<Arc<WiredChannel>> {
        self.global_q(&self.occ.interval_of_configurations(x, y)?)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.read().expect("memo poisoned").len()
    }

    pub fn wire_dim(&self, w: Wire) -> crate::algebra::Dim {
        self.ann.wire_dim(w)
    }
}

/// `Q(x ⊆ z)` next to the composite of `Q(x ⊆ y)` and `Q(y ⊆ z)`, each
/// padded with identities on the signals of the other leg and brought to
/// the same wire order.
pub fn functoriality_composite(
    gv: &GlobalValuation<'_>,
    x: &Configuration,
    y: &Configuration,
    z: &Configuration,
) -> Result<(Arc<WiredChannel>, WiredChannel)> {
    let direct = gv.between(x, z)?;
    let first = gv.between(x, y)?;
    let second = gv.between(y, z)?;
    let dim = |w: Wire| gv.wire_dim(w);
    let composite = WiredChannel::identity(direct.inputs.clone(), &dim)
        .then(&first, &dim, gv.limits())?
        .then(&second, &dim, gv.limits())?
        .permute_outputs(&direct.outputs, &dim)?;
    Ok((direct, composite))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{CptniMap, Dim};
    use crate::fixtures;

    #[test]
    fn fixture_values() {
        let q = fixtures::branching(false);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let gv = GlobalValuation::new(&occ, &q.ann, Limits::default());
        let empty = Configuration::empty();
        let a = occ.configuration_from_ids(&["a"]).unwrap();
        let d = Dim::new(8).unwrap();
        assert!(gv.between(&empty, &a).unwrap().map.approx_eq(&CptniMap::identity(d), 1e-12));
        let same = gv.between(&a, &a).unwrap();
        assert!(same.map.approx_eq(&CptniMap::identity(d), 1e-12));
        gv.between(&empty, &a).unwrap();
        assert_eq!(gv.memo_len(), 2);
    }

    #[test]
    fn chain_composes() {
        let q = fixtures::branching(true);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let gv = GlobalValuation::new(&occ, &q.ann, Limits::default());
        let x = Configuration::empty();
        let y = occ.configuration_from_ids(&["a"]).unwrap();
        let z = occ.configuration_from_ids(&["a", "c"]).unwrap();
        let (direct, composite) = functoriality_composite(&gv, &x, &y, &z).unwrap();
        assert!(direct.map.deviation(&composite.map).unwrap() < 1e-10);
    }

    #[test]
    fn memo_is_shared_across_threads() {
        let q = fixtures::branching(true);
        let occ = OccurrenceNet::new(q.net.clone()).unwrap();
        let gv = GlobalValuation::new(&occ, &q.ann, Limits::default());
        let configs = occ.configurations(100).unwrap();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for x in &configs {
                        for y in &configs {
                            if x.is_subset(y) {
                                gv.between(x, y).unwrap();
                            }
                        }
                    }
                });
            }
        });
        let pairs = configs
            .iter()
            .flat_map(|x| configs.iter().filter(move |y| x.is_subset(y)))
            .count();
        assert_eq!(gv.memo_len(), pairs);
    }
}
