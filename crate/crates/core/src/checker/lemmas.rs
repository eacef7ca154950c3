//! Alternative evaluations of the drop function, used to cross-check the
//! inclusion-exclusion form.

use crate::algebra::{tensor, ComplexMatrix, Dim, FactorPermutation, EXT_TOL};
use crate::annotation::{GlobalValuation, LocalAnnotation};
use crate::error::{Error, Result};
use crate::net::occurrence::Configuration;
use crate::net::{Marking, Net};
use crate::outcome::CheckOutcome;

use super::drop::{drop_effect, single_extension_drop, union_of, DropInstance};

fn base_dim(gv: &GlobalValuation<'_>, x: &Configuration) -> Result<usize> {
    let m = gv.occurrence_net().marking_of_configuration(x)?;
    Ok(gv.annotation().marking_space(&m).dim.get())
}

/// `E ↦ O(x→y)†(E ⊗ I_H)`: pulls an effect on the space of `y` back along
/// the valuation of `x ⊆ y`, tracing out emitted signals.
fn pull_back(gv: &GlobalValuation<'_>, x: &Configuration, y: &Configuration, e: &ComplexMatrix) -> Result<ComplexMatrix> {
    let q = gv.between(x, y)?;
    let signal = q.map.dim_out().get() / e.rows();
    q.map.pullback(&tensor(e, &ComplexMatrix::identity(signal)))
}

/// Extensions `y ∪ with` that are still configurations.
fn lift(gv: &GlobalValuation<'_>, ys: &[Configuration], with: &Configuration) -> Vec<Configuration> {
    let occ = gv.occurrence_net();
    ys.iter()
        .filter_map(|y| union_of(occ, with, std::slice::from_ref(y), 1))
        .collect()
}

/// `d[x;] = tr` and `d[x; y1..yn] = d[x; y1..y(n-1)] - [tr_H ⊗ d[yn; y1∪yn, ..]] ∘ O(x→yn)`.
pub fn inductive_drop(gv: &GlobalValuation<'_>, x: &Configuration, ys: &[Configuration]) -> Result<ComplexMatrix> {
    DropInstance::new(x.clone(), ys.to_vec()).validate(gv.occurrence_net())?;
    inductive(gv, x, ys)
}

fn inductive(gv: &GlobalValuation<'_>, x: &Configuration, ys: &[Configuration]) -> Result<ComplexMatrix> {
    let Some((last, rest)) = ys.split_last() else {
        return Ok(ComplexMatrix::identity(base_dim(gv, x)?));
    };
    let head = inductive(gv, x, rest)?;
    let inner = inductive(gv, last, &lift(gv, rest, last))?;
    head.sub(&pull_back(gv, x, last, &inner)?)
}

/// Both sides of `d[x; ys, y'] = d[x; ys, y] + [tr_H ⊗ d[y; ys∪y, y']] ∘ O(x→y)`
/// for `x ⊆ y ⊆ y'`.
pub fn recursive_sum_sides(
    gv: &GlobalValuation<'_>,
    x: &Configuration,
    ys: &[Configuration],
    y: &Configuration,
    y_wide: &Configuration,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !y.is_subset(y_wide) {
        return Err(Error::NotReachableFrom);
    }
    let with = |last: &Configuration| [ys, std::slice::from_ref(last)].concat();
    let lhs = drop_effect(gv, &DropInstance::new(x.clone(), with(y_wide)))?;
    let head = drop_effect(gv, &DropInstance::new(x.clone(), with(y)))?;
    let mut inner_ys = lift(gv, ys, y);
    inner_ys.push(y_wide.clone());
    let inner = drop_effect(gv, &DropInstance::new(y.clone(), inner_ys))?;
    let rhs = head.matrix().add(&pull_back(gv, x, y, inner.matrix())?)?;
    Ok((lhs.into_matrix(), rhs))
}

/// Result of rewriting a drop into single-extension drops.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub effect: ComplexMatrix,
    /// Rewriting steps taken.
    pub steps: usize,
    /// Single-extension drops evaluated at the leaves.
    pub terminals: usize,
    /// `(parent, child)` weights for every step; each child must be lighter.
    pub weights: Vec<(usize, usize)>,
}

impl Expansion {
    pub fn weights_decrease(&self) -> bool {
        self.weights.iter().all(|(p, c)| c < p)
    }
}

fn weight(x: &Configuration, ys: &[Configuration]) -> usize {
    ys.iter().map(|y| y.len() - x.len()).product()
}

/// Rewrites `d[x; ys]` with the recursive-sum identity until only single
/// extensions remain. Every step strictly lowers `Π |yi \ x|`.
pub fn expand_drop(gv: &GlobalValuation<'_>, x: &Configuration, ys: &[Configuration]) -> Result<Expansion> {
    DropInstance::new(x.clone(), ys.to_vec()).validate(gv.occurrence_net())?;
    let mut out = Expansion {
        effect: ComplexMatrix::zeros(0, 0),
        steps: 0,
        terminals: 0,
        weights: Vec::new(),
    };
    out.effect = expand(gv, x, ys, &mut out)?;
    Ok(out)
}

fn expand(gv: &GlobalValuation<'_>, x: &Configuration, ys: &[Configuration], trace: &mut Expansion) -> Result<ComplexMatrix> {
    let dim = base_dim(gv, x)?;
    if ys.iter().any(|y| y.len() == x.len()) {
        return Ok(ComplexMatrix::zeros(dim, dim));
    }
    let Some(i) = ys.iter().position(|y| y.len() - x.len() >= 2) else {
        trace.terminals += 1;
        return Ok(drop_effect(gv, &DropInstance::new(x.clone(), ys.to_vec()))?.into_matrix());
    };
    let occ = gv.occurrence_net();
    let e = ys[i]
        .iter()
        .find(|&e| !x.contains(e) && occ.enables(x, e))
        .expect("a proper extension has an enabled first event");
    let step = occ.configuration(x.iter().chain([e]))?;
    let others: Vec<Configuration> = ys.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| y.clone()).collect();
    let first: Vec<Configuration> = others.iter().cloned().chain([step.clone()]).collect();
    let mut second = lift(gv, &others, &step);
    second.push(ys[i].clone());
    let w = weight(x, ys);
    trace.steps += 1;
    trace.weights.push((w, weight(x, &first)));
    trace.weights.push((w, weight(&step, &second)));
    let near = expand(gv, x, &first, trace)?;
    let far = expand(gv, &step, &second, trace)?;
    near.add(&pull_back(gv, x, &step, &far)?)
}

/// `d[x; A∪B] ⊗ tr = d[x; A] ⊗ d[x; B]` for clusters with no conflict
/// across them.
pub fn cluster_factorization_check(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    a: &[usize],
    b: &[usize],
) -> Result<CheckOutcome> {
    for &ea in a {
        for &eb in b {
            if ea == eb || net.in_conflict(ea, eb) {
                return Err(Error::CrossClusterConflict(
                    net.transition_id(ea).to_string(),
                    net.transition_id(eb).to_string(),
                ));
            }
        }
    }
    let joint: Vec<usize> = a.iter().chain(b).copied().collect();
    let dab = single_extension_drop(net, ann, m, &joint)?;
    let da = single_extension_drop(net, ann, m, a)?;
    let db = single_extension_drop(net, ann, m, b)?;
    let n = dab.matrix().rows();
    let lhs = tensor(dab.matrix(), &ComplexMatrix::identity(n));
    // d[x;B] acts on the second copy; bring the conditions B reads back to
    // the first copy so both sides act on the same factors
    let wires: Vec<usize> = m.iter().collect();
    let k = wires.len();
    let mut perm: Vec<usize> = (0..2 * k).collect();
    for (i, p) in wires.iter().enumerate() {
        if b.iter().any(|&e| net.pre(e).contains(p)) {
            perm.swap(i, i + k);
        }
    }
    let dims: Vec<Dim> = wires.iter().chain(&wires).map(|&p| ann.place_dim(p)).collect();
    let swap = FactorPermutation::new(dims, perm)?;
    let rhs = tensor(da.matrix(), db.matrix()).reindex(&swap.index_map());
    let dev = lhs.max_abs_diff(&rhs)?;
    let tol = EXT_TOL * n as f64;
    let out = if dev <= tol {
        CheckOutcome::pass("cluster_factorization")
    } else {
        CheckOutcome::fail("cluster_factorization", format!("deviation {dev:.3e}"))
    };
    Ok(out.with_metric("deviation", dev))
}
