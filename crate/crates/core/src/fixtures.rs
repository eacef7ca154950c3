//! Small reference nets shared by tests, examples and the command line.

use crate::algebra::{tensor, ComplexMatrix, CptniMap, Dim, FactorPermutation};
use crate::annotation::{AnnotatedNet, LocalAnnotation};
use crate::net::{Net, NetBuilder, Polarity};

/// Five places, four neutral transitions: `{1,4} -a-> {2,3}` and the
/// sequence `a c b d` ends in `{2,4}`.
pub fn intro_net() -> Net {
    NetBuilder::new()
        .places(["1", "2", "3", "4", "5"])
        .event("a", Polarity::Neutral, &["1", "4"], &["2", "3"])
        .event("c", Polarity::Neutral, &["3"], &["5"])
        .event("b", Polarity::Neutral, &["2"], &["1"])
        .event("d", Polarity::Neutral, &["1", "5"], &["2", "4"])
        .initial(["1", "4"])
        .build()
        .expect("intro net is well formed")
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Conjugation by `X ⊗ id4` on `C^8`.
pub fn x_tensor_id4() -> CptniMap {
    CptniMap::conjugation(tensor(&pauli_x(), &ComplexMatrix::identity(4))).expect("square")
}

/// A negative `a: p0 -> p1` absorbing a qubit into `C^4`, followed by a
/// conflict between a neutral `b: p1 -> p2` and a positive `c: p1 -> p3`
/// emitting a qubit. `Q0(a) = id8`, `Q0(b) = id8`, and `Q0(c)` applies
/// `X ⊗ id4` then routes the first qubit to the signal wire.
///
/// With `scaled` the conflicting channels are halved, which makes the
/// choice between `b` and `c` a proper probabilistic branch.
pub fn branching(scaled: bool) -> AnnotatedNet {
    let net = NetBuilder::new()
        .places(["p0", "p1", "p2", "p3"])
        .event("a", Polarity::Negative, &["p0"], &["p1"])
        .event("b", Polarity::Neutral, &["p1"], &["p2"])
        .event("c", Polarity::Positive, &["p1"], &["p3"])
        .initial(["p0"])
        .build()
        .expect("branching net is well formed");
    let d = |n| Dim::new(n).expect("nonzero");
    let to_signal_last =
        FactorPermutation::new(vec![d(2), d(4)], vec![1, 0]).expect("valid permutation");
    let c = x_tensor_id4()
        .with_output_permutation(&to_signal_last)
        .expect("dimensions agree");
    let weight = if scaled { 0.5f64.sqrt() } else { 1.0 };
    let ann = LocalAnnotation::builder(&net)
        .place_dim("p0", 4)
        .place_dim("p1", 8)
        .place_dim("p2", 8)
        .place_dim("p3", 4)
        .h("a", 2)
        .h("c", 2)
        .channel("a", CptniMap::identity(d(8)))
        .channel("b", CptniMap::identity(d(8)).scale_kraus(weight))
        .channel("c", c.scale_kraus(weight))
        .build()
        .expect("annotation matches net");
    AnnotatedNet::new(net, ann).expect("annotation matches net")
}

/// `weight · (id_d ⊗ |0>)`: keeps a `d`-level state and emits a fresh
/// qubit on the signal wire.
fn emit(d: usize, weight: f64) -> CptniMap {
    let ket0 = ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]);
    CptniMap::from_kraus(vec![tensor(&ComplexMatrix::identity(d), &ket0)])
        .expect("isometry")
        .scale_kraus(weight)
}

fn receive(d: usize) -> CptniMap {
    CptniMap::identity(Dim::new(2 * d).expect("nonzero"))
}

/// Positive `p1`, `p2` and neutral `q` competing for `u` (each with
/// effect `I/3`), next to negatives `n1`, `n2` competing for `z`. Joining
/// `p_i` with `n_i` is drop-preserving.
pub fn join_fan() -> AnnotatedNet {
    let net = NetBuilder::new()
        .places(["u", "z", "o1", "o2", "r", "y1", "y2"])
        .event("p1", Polarity::Positive, &["u"], &["o1"])
        .event("p2", Polarity::Positive, &["u"], &["o2"])
        .event("q", Polarity::Neutral, &["u"], &["r"])
        .event("n1", Polarity::Negative, &["z"], &["y1"])
        .event("n2", Polarity::Negative, &["z"], &["y2"])
        .initial(["u", "z"])
        .build()
        .expect("join fan is well formed");
    let w = (1.0f64 / 3.0).sqrt();
    let ann = LocalAnnotation::builder(&net)
        .place_dim("u", 2)
        .place_dim("z", 2)
        .place_dim("o1", 2)
        .place_dim("o2", 2)
        .place_dim("r", 2)
        .place_dim("y1", 4)
        .place_dim("y2", 4)
        .h("p1", 2)
        .h("p2", 2)
        .h("n1", 2)
        .h("n2", 2)
        .channel("p1", emit(2, w))
        .channel("p2", emit(2, w))
        .channel("q", CptniMap::identity(Dim::new(2).expect("nonzero")).scale_kraus(w))
        .channel("n1", receive(2))
        .channel("n2", receive(2))
        .build()
        .expect("annotation matches net");
    AnnotatedNet::new(net, ann).expect("annotation matches net")
}

/// Positives `p1 ~ q ~ p2` with `p1`, `p2` concurrent (effects `I/2`,
/// `I/4`, `I/2`), next to negatives `n1 ~ n2` competing for `z`. The net
/// satisfies the drop condition, but pairing `p_i` with `n_i` maps
/// conflicting negatives to concurrent positives and the join breaks it.
pub fn join_chain() -> AnnotatedNet {
    let net = NetBuilder::new()
        .places(["u1", "u2", "z", "o1", "o2", "r", "y1", "y2"])
        .event("p1", Polarity::Positive, &["u1"], &["o1"])
        .event("p2", Polarity::Positive, &["u2"], &["o2"])
        .event("q", Polarity::Neutral, &["u1", "u2"], &["r"])
        .event("n1", Polarity::Negative, &["z"], &["y1"])
        .event("n2", Polarity::Negative, &["z"], &["y2"])
        .initial(["u1", "u2", "z"])
        .build()
        .expect("join chain is well formed");
    let half = 0.5f64.sqrt();
    let ann = LocalAnnotation::builder(&net)
        .place_dim("u1", 2)
        .place_dim("u2", 2)
        .place_dim("z", 1)
        .place_dim("o1", 2)
        .place_dim("o2", 2)
        .place_dim("r", 4)
        .place_dim("y1", 2)
        .place_dim("y2", 2)
        .h("p1", 2)
        .h("p2", 2)
        .h("n1", 2)
        .h("n2", 2)
        .channel("p1", emit(2, half))
        .channel("p2", emit(2, half))
        .channel("q", CptniMap::identity(Dim::new(4).expect("nonzero")).scale_kraus(0.5))
        .channel("n1", receive(1))
        .channel("n2", receive(1))
        .build()
        .expect("annotation matches net");
    AnnotatedNet::new(net, ann).expect("annotation matches net")
}
