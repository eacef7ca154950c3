//! Checks that quantify over the whole global valuation. They enumerate
//! configurations, so they are meant for small occurrence nets.

use std::collections::HashMap;

use crate::algebra::{ComplexMatrix, CptniMap, Dim, EXT_TOL};
use crate::annotation::{GlobalValuation, LocalAnnotation, Wire};
use crate::error::{Error, Result};
use crate::net::occurrence::{Configuration, OccurrenceNet};
use crate::outcome::CheckOutcome;

use super::drop::union_of;
use super::{with_pool, DropReport, InstanceResult};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct BruteForceOptions {
    pub max_configurations: usize,
    /// Largest family `y1..yn` enumerated.
    pub max_family: usize,
    /// Cap on the number of families over all bases.
    pub max_instances: usize,
    pub tol_psd: f64,
    pub jobs: Option<usize>,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            max_configurations: 64,
            max_family: 4,
            max_instances: 500_000,
            tol_psd: crate::algebra::DEFAULT_TOL_PSD,
            jobs: None,
        }
    }
}

fn combinations(n: usize, k_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, k_max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k_max {
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k_max, cur, out);
            cur.pop();
        }
    }
    go(0, n, k_max, &mut cur, &mut out);
    out
}

/// The drop condition checked directly on the global valuation: every
/// configuration `x` against every family of up to `max_family` extensions
/// of `x` by non-negative events.
pub fn brute_force_global_drop(
    occ: &OccurrenceNet,
    ann: &LocalAnnotation,
    opts: &BruteForceOptions,
) -> Result<DropReport> {
    let configs = occ.configurations(opts.max_configurations)?;
    let gv = GlobalValuation::new(occ, ann, Default::default());
    let net = occ.net();
    let names = |c: &Configuration| -> Vec<String> { c.iter().map(|e| net.transition_id(e).to_string()).collect() };
    let mut jobs: Vec<(usize, Vec<Configuration>)> = Vec::new();
    for (xi, x) in configs.iter().enumerate() {
        let candidates: Vec<&Configuration> = configs
            .iter()
            .filter(|y| {
                y.len() > x.len()
                    && x.is_subset(y)
                    && y.iter().all(|e| x.contains(e) || !net.polarity(e).is_negative())
            })
            .collect();
        for family in combinations(candidates.len(), opts.max_family) {
            jobs.push((xi, family.iter().map(|&i| candidates[i].clone()).collect()));
            if jobs.len() > opts.max_instances {
                return Err(Error::BoundExceeded {
                    bound: opts.max_instances,
                });
            }
        }
    }
    // effects of every interval used, computed once
    let mut effects: HashMap<(usize, Configuration), ComplexMatrix> = HashMap::new();
    for (xi, ys) in &jobs {
        let x = &configs[*xi];
        for mask in 0..1usize << ys.len() {
            if let Some(y) = union_of(occ, x, ys, mask) {
                let key = (*xi, y);
                if !effects.contains_key(&key) {
                    let eff = gv.between(x, &key.1)?.map.effect();
                    effects.insert(key, eff);
                }
            }
        }
    }
    let results: Vec<Result<InstanceResult>> = with_pool(opts.jobs, || {
        jobs.par_iter()
            .map(|(xi, ys)| {
                let x = &configs[*xi];
                let n = effects[&(*xi, x.clone())].rows();
                let mut acc = ComplexMatrix::zeros(n, n);
                for mask in 0..1usize << ys.len() {
                    if let Some(y) = union_of(occ, x, ys, mask) {
                        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        acc.add_assign_unchecked(&effects[&(*xi, y)], sign);
                    }
                }
                let min = acc.min_hermitian_eigenvalue()?;
                Ok(InstanceResult {
                    marking: net.marking_ids(&occ.marking_of_configuration(x)?),
                    configuration: Some(names(x)),
                    family: ys.iter().map(|y| format!("{{{}}}", names(y).join(", "))).collect(),
                    min_eigenvalue: min,
                    passed: min >= -opts.tol_psd,
                    clique: false,
                })
            })
            .collect()
    });
    let instances = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DropReport::from_instances(instances, configs.len(), 0, 0))
}

/// The basis permutation an all-negative interval must realise when every
/// negative event carries the identity: each event reads its inputs as one
/// flat index and writes it back out over its post-conditions.
pub fn oblivious_reference(gv: &GlobalValuation<'_>, x: &Configuration, y: &Configuration) -> Result<CptniMap> {
    let occ = gv.occurrence_net();
    let net = occ.net();
    let ann = gv.annotation();
    let iv = occ.interval_of_configurations(x, y)?;
    if let Some(&e) = iv.sigma.iter().find(|&&e| !net.polarity(e).is_negative()) {
        return Err(Error::IncompatibleExtension(net.transition_id(e).to_string()));
    }
    let q = gv.global_q(&iv)?;
    let inputs = q.inputs.clone();
    let outputs = q.outputs.clone();
    let dim = |w: &Wire| ann.wire_dim(*w).get();
    let total: usize = inputs.iter().map(dim).product();
    let out_total: usize = outputs.iter().map(dim).product();
    if total != out_total {
        return Err(Error::DimensionMismatch {
            context: "all-negative interval".into(),
            expected: total,
            actual: out_total,
        });
    }
    let order: Vec<usize> = occ
        .topological_order()
        .iter()
        .copied()
        .filter(|e| iv.sigma.contains(e))
        .collect();
    let mut perm = ComplexMatrix::zeros(total, total);
    for flat in 0..total {
        let mut digits: HashMap<Wire, usize> = HashMap::new();
        let mut rest = flat;
        for w in inputs.iter().rev() {
            digits.insert(*w, rest % dim(w));
            rest /= dim(w);
        }
        for &e in &order {
            let mut value = 0;
            for w in ann.input_wires(net, e) {
                value = value * dim(&w) + digits.remove(&w).expect("wire is live");
            }
            for w in ann.output_wires(net, e).iter().rev() {
                digits.insert(*w, value % dim(w));
                value /= dim(w);
            }
        }
        let target = outputs.iter().fold(0, |acc, w| acc * dim(w) + digits[w]);
        perm.set(target, flat, 1.0.into());
    }
    CptniMap::new(Dim::new(total)?, Dim::new(total)?, vec![perm])
}

/// Global obliviousness on every all-negative interval `x ⊆ y` among the
/// first `bound` configurations.
pub fn check_global_obliviousness(gv: &GlobalValuation<'_>, bound: usize) -> Result<CheckOutcome> {
    const NAME: &str = "global_obliviousness";
    let occ = gv.occurrence_net();
    let net = occ.net();
    let configs = occ.configurations(bound)?;
    let mut worst: f64 = 0.0;
    let mut intervals = 0;
    let mut literal = 0;
    for x in &configs {
        for y in &configs {
            if y.len() <= x.len()
                || !x.is_subset(y)
                || y.iter().any(|e| !x.contains(e) && !net.polarity(e).is_negative())
            {
                continue;
            }
            intervals += 1;
            let q = gv.between(x, y)?;
            let reference = oblivious_reference(gv, x, y)?;
            let dev = q.map.deviation(&reference)?;
            worst = worst.max(dev);
            if q.map.deviation(&CptniMap::identity(q.map.dim_in()))? <= EXT_TOL {
                literal += 1;
            }
            if dev > EXT_TOL {
                return Ok(CheckOutcome::fail(NAME, format!("deviation {dev:.3e}"))
                    .with_witness(format!(
                        "{} to {}",
                        occ.format_configuration(x),
                        occ.format_configuration(y)
                    ))
                    .with_metric("deviation", dev));
            }
        }
    }
    Ok(CheckOutcome::pass(NAME)
        .with_metric("intervals", intervals as f64)
        .with_metric("literal_identity", literal as f64)
        .with_metric("deviation", worst))
}

/// Functoriality on the given chains `x ⊆ y ⊆ z`.
pub fn check_functoriality(
    gv: &GlobalValuation<'_>,
    chains: &[(Configuration, Configuration, Configuration)],
) -> Result<CheckOutcome> {
    const NAME: &str = "functoriality";
    let occ = gv.occurrence_net();
    let mut worst: f64 = 0.0;
    for (x, y, z) in chains {
        let (direct, composite) = crate::annotation::functoriality_composite(gv, x, y, z)?;
        let dev = direct.map.deviation(&composite.map)?;
        worst = worst.max(dev);
        if dev > EXT_TOL {
            return Ok(CheckOutcome::fail(NAME, format!("deviation {dev:.3e}"))
                .with_witness(format!(
                    "{} ⊆ {} ⊆ {}",
                    occ.format_configuration(x),
                    occ.format_configuration(y),
                    occ.format_configuration(z)
                ))
                .with_metric("deviation", dev));
        }
    }
    Ok(CheckOutcome::pass(NAME)
        .with_metric("chains", chains.len() as f64)
        .with_metric("deviation", worst))
}
