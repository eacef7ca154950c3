//! Drop-function evaluation and the checks that certify an annotated net.

mod drop;
mod global;
mod lemmas;

pub use drop::{clique_drop, drop_effect, single_extension_drop, DropInstance, MAX_FAMILY};
pub(crate) use drop::{cluster_space, embed, single_extension_on};
pub use global::{
    brute_force_global_drop, check_functoriality, check_global_obliviousness, oblivious_reference,
    BruteForceOptions,
};
pub use lemmas::{
    cluster_factorization_check, expand_drop, inductive_drop, recursive_sum_sides, Expansion,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Limits, DEFAULT_TOL_PSD};
use crate::annotation::{
    check_local_obliviousness, validate_channels, validate_signatures, LocalAnnotation,
};
use crate::error::Result;
use crate::net::occurrence::{is_occurrence_net, OccurrenceNet};
use crate::net::{Marking, Net};
use crate::outcome::CheckOutcome;

/// Knobs shared by the certification entry points.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub tol_psd: f64,
    pub marking_bound: usize,
    /// Largest non-clique cluster whose sub-families are enumerated.
    pub cluster_cap: usize,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub limits: Limits,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            tol_psd: DEFAULT_TOL_PSD,
            marking_bound: 100_000,
            cluster_cap: 12,
            jobs: None,
            limits: Limits::default(),
        }
    }
}

/// Outcome of one drop evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub marking: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<Vec<String>>,
    /// Events of the cluster, or one `{..}` entry per extension.
    pub family: Vec<String>,
    pub min_eigenvalue: f64,
    pub passed: bool,
    #[serde(default)]
    pub clique: bool,
}

impl InstanceResult {
    pub fn describe(&self) -> String {
        let base = match &self.configuration {
            Some(c) => format!("x = {{{}}}", c.join(", ")),
            None => format!("marking {{{}}}", self.marking.join(", ")),
        };
        format!("{base}, family [{}]", self.family.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropReport {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub markings_visited: usize,
    pub clusters_checked: usize,
    pub clique_fast_paths: usize,
    pub instance_count: usize,
    pub instances: Vec<InstanceResult>,
}

impl DropReport {
    fn from_instances(instances: Vec<InstanceResult>, markings: usize, clusters: usize, cliques: usize) -> Self {
        let min = instances.iter().map(|i| i.min_eigenvalue).fold(f64::INFINITY, f64::min);
        Self {
            passed: instances.iter().all(|i| i.passed),
            min_eigenvalue: min,
            markings_visited: markings,
            clusters_checked: clusters,
            clique_fast_paths: cliques,
            instance_count: instances.len(),
            instances,
        }
    }

    pub fn worst(&self) -> Option<&InstanceResult> {
        self.instances
            .iter()
            .min_by(|a, b| a.min_eigenvalue.total_cmp(&b.min_eigenvalue))
    }

    pub fn first_failure(&self) -> Option<&InstanceResult> {
        self.instances.iter().find(|i| !i.passed)
    }

    pub fn to_outcome(&self, name: &str) -> CheckOutcome {
        let out = match self.first_failure() {
            None => CheckOutcome::pass(name),
            Some(f) => CheckOutcome::fail(
                name,
                format!("drop has eigenvalue {:.6} at {}", f.min_eigenvalue, f.describe()),
            )
            .with_witness(f.describe()),
        };
        let out = out
            .with_metric("instances", self.instance_count as f64)
            .with_metric("markings", self.markings_visited as f64)
            .with_metric("clusters", self.clusters_checked as f64)
            .with_metric("clique_fast_paths", self.clique_fast_paths as f64);
        if self.instance_count > 0 {
            out.with_metric("min_eigenvalue", self.min_eigenvalue)
        } else {
            out
        }
    }
}

/// Runs `f` on the configured pool.
pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

enum Task {
    Clique(Vec<usize>),
    Family(Vec<usize>),
}

struct Job {
    marking: Marking,
    task: Task,
}

/// Local drop condition: at every reachable marking, every conflict cluster
/// of enabled non-negative transitions has a positive drop. Cliques take
/// the linear fast path; other clusters are checked on every sub-family.
pub fn check_local_drop(net: &Net, ann: &LocalAnnotation, opts: &CheckOptions) -> Result<DropReport> {
    local_drop(net, ann, opts, None)
}

/// [`check_local_drop`] on an occurrence net, with witnesses given as
/// configurations.
pub fn check_local_drop_occurrence(occ: &OccurrenceNet, ann: &LocalAnnotation, opts: &CheckOptions) -> Result<DropReport> {
    local_drop(occ.net(), ann, opts, Some(occ))
}

fn local_drop(net: &Net, ann: &LocalAnnotation, opts: &CheckOptions, occ: Option<&OccurrenceNet>) -> Result<DropReport> {
    net.ensure_safety_verified()?;
    let markings = net.reachable_markings(opts.marking_bound)?;
    let mut jobs = Vec::new();
    let mut clusters = 0;
    let mut cliques = 0;
    for m in &markings {
        for cluster in net.conflict_clusters(m) {
            clusters += 1;
            if net.is_clique(&cluster) {
                cliques += 1;
                jobs.push(Job {
                    marking: m.clone(),
                    task: Task::Clique(cluster),
                });
                continue;
            }
            if cluster.len() > opts.cluster_cap {
                return Err(crate::Error::ClusterTooLarge {
                    size: cluster.len(),
                    cap: opts.cluster_cap,
                });
            }
            for mask in 1..1usize << cluster.len() {
                let family = (0..cluster.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| cluster[i])
                    .collect();
                jobs.push(Job {
                    marking: m.clone(),
                    task: Task::Family(family),
                });
            }
        }
    }
    let results: Vec<Result<InstanceResult>> = with_pool(opts.jobs, || {
        jobs.par_iter()
            .map(|job| {
                let (events, clique) = match &job.task {
                    Task::Clique(c) => (c, true),
                    Task::Family(f) => (f, false),
                };
                let space = drop::cluster_space(net, events);
                let effect = if clique {
                    drop::clique_on(net, ann, &space, events)?.0
                } else {
                    drop::single_extension_on(net, ann, &space, events)?
                };
                let min = effect.min_eigenvalue()?;
                let configuration = match occ {
                    Some(o) => {
                        let x = o.configuration_of_marking(&job.marking)?;
                        Some(x.iter().map(|e| net.transition_id(e).to_string()).collect())
                    }
                    None => None,
                };
                Ok(InstanceResult {
                    marking: net.marking_ids(&job.marking),
                    configuration,
                    family: events.iter().map(|&e| net.transition_id(e).to_string()).collect(),
                    min_eigenvalue: min,
                    passed: min >= -opts.tol_psd,
                    clique,
                })
            })
            .collect()
    });
    let instances = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DropReport::from_instances(instances, markings.len(), clusters, cliques))
}

fn structural_checks(net: &Net, ann: &LocalAnnotation, opts: &CheckOptions) -> Vec<CheckOutcome> {
    let mut out = vec![validate_signatures(net, ann)];
    if out[0].passed {
        out.push(validate_channels(net, ann, opts.tol_psd));
        out.push(check_local_obliviousness(net, ann));
    }
    out
}

const IMPLIED: &str = "local obliviousness and the local drop condition hold, so the unfolding carries a global quantum annotation";

/// Quantum Petri net verdict, decided on the net itself without unfolding.
pub fn is_qpn(net: &Net, ann: &LocalAnnotation, opts: &CheckOptions) -> Result<CheckOutcome> {
    net.ensure_safety_verified()?;
    let mut parts = structural_checks(net, ann, opts);
    if parts.iter().all(|p| p.passed) {
        parts.push(check_local_drop(net, ann, opts)?.to_outcome("local_drop"));
    }
    let out = CheckOutcome::all("is_qpn", parts);
    Ok(if out.passed { out.with_detail(IMPLIED) } else { out })
}

/// Local quantum occurrence net verdict.
pub fn is_local_qon(occ: &OccurrenceNet, ann: &LocalAnnotation, opts: &CheckOptions) -> Result<CheckOutcome> {
    let mut parts = vec![is_occurrence_net(occ.net())];
    parts.extend(structural_checks(occ.net(), ann, opts));
    if parts.iter().all(|p| p.passed) {
        parts.push(check_local_drop_occurrence(occ, ann, opts)?.to_outcome("local_drop"));
    }
    Ok(CheckOutcome::all("is_local_qon", parts))
}
