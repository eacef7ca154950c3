//! Probabilities read off the valuation, and a Monte Carlo sampler of
//! executions.
//!
//! The sampler repeatedly fires the least enabled negative transition with
//! a state supplied by the environment policy; when none is enabled it
//! picks the cluster holding the least enabled non-negative transition and
//! samples an outcome. The outcomes of a cluster `C` are its conflict-free
//! sub-families `J`, `J = ∅` meaning the run halts. The events of `C` that
//! stay compatible with `J` but do not fire are dropped: the state is first
//! conditioned by the square root of their joint drop effect, and they are
//! never scheduled again while they stay enabled. On a clique this is the
//! plain choice of one branch, with halting probability `tr(d ρ)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{partial_trace, tensor, ComplexMatrix, Dim, Limits, C64};
use crate::annotation::{GlobalValuation, LocalAnnotation, Wire, WiredChannel};
use crate::checker::{cluster_space, embed, is_qpn, single_extension_on, CheckOptions};
use crate::error::{Error, Result};
use crate::net::occurrence::MarkingInterval;
use crate::net::{Marking, Net};
use crate::outcome::CheckOutcome;

/// Branches below this probability are never sampled.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

/// Environment states for negative events, by event index.
pub type EnvInputs = BTreeMap<usize, ComplexMatrix>;

fn real_trace(m: &ComplexMatrix) -> f64 {
    m.trace().re
}

fn check_square(context: &str, m: &ComplexMatrix, expected: usize) -> Result<()> {
    if !m.is_square() || m.rows() != expected {
        return Err(Error::DimensionMismatch {
            context: context.to_string(),
            expected,
            actual: m.rows(),
        });
    }
    Ok(())
}

/// `tr Q(iv)(rho0 ⊗ env)`, the environment states taken in canonical
/// order of the negative events of the interval.
pub fn run_probability(
    gv: &GlobalValuation<'_>,
    iv: &MarkingInterval,
    rho0: &ComplexMatrix,
    env: &EnvInputs,
) -> Result<f64> {
    let q = gv.global_q(iv)?;
    let net = gv.occurrence_net().net();
    let marking_dim: usize = iv.from.iter().map(|p| gv.wire_dim(Wire::Cond(p)).get()).product();
    check_square("initial state", rho0, marking_dim)?;
    let mut input = rho0.clone();
    for w in &q.inputs {
        if let Wire::HIn(e) = *w {
            let sigma = env
                .get(&e)
                .ok_or_else(|| Error::MissingEnvInput(net.transition_id(e).to_string()))?;
            check_square(net.transition_id(e), sigma, gv.wire_dim(*w).get())?;
            input = tensor(&input, sigma);
        }
    }
    Ok(real_trace(&q.map.apply(&input)?))
}

/// Unnormalised state after firing `t` from `m`, with the new marking. The
/// signal emitted by a positive transition is traced out.
pub fn fire_state(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    rho: &ComplexMatrix,
    t: usize,
    env: Option<&ComplexMatrix>,
    limits: &Limits,
) -> Result<(Marking, ComplexMatrix)> {
    let next = net.fire(m, t)?;
    let dim = |w: Wire| ann.wire_dim(w);
    let mut wires: Vec<Wire> = m.iter().map(Wire::Cond).collect();
    check_square("marking state", rho, wires.iter().map(|w| dim(*w).get()).product())?;
    let mut input = rho.clone();
    if net.polarity(t).is_negative() {
        let sigma = env.ok_or_else(|| Error::MissingEnvInput(net.transition_id(t).to_string()))?;
        check_square(net.transition_id(t), sigma, ann.h(t).get())?;
        input = tensor(&input, sigma);
        wires.push(Wire::HIn(t));
    }
    let mut order: Vec<Wire> = next.iter().map(Wire::Cond).collect();
    let emits = net.polarity(t) == crate::net::Polarity::Positive;
    if emits {
        order.push(Wire::HOut(t));
    }
    let step = WiredChannel::identity(wires, &dim)
        .then(&ann.wired(net, t), &dim, limits)?
        .permute_outputs(&order, &dim)?;
    let mut out = step.map.apply(&input)?;
    if emits {
        let dims: Vec<Dim> = order.iter().map(|w| dim(*w)).collect();
        out = partial_trace(&out, &dims, &[order.len() - 1])?;
    }
    Ok((next, out))
}

/// Probability of firing `seq` from `from`, environment states keyed by
/// transition index.
pub fn sequence_probability(
    net: &Net,
    ann: &LocalAnnotation,
    from: &Marking,
    seq: &[usize],
    rho0: &ComplexMatrix,
    env: &EnvInputs,
    limits: &Limits,
) -> Result<f64> {
    let (mut m, mut rho) = (from.clone(), rho0.clone());
    for &t in seq {
        (m, rho) = fire_state(net, ann, &m, &rho, t, env.get(&t), limits)?;
    }
    Ok(real_trace(&rho))
}

/// The maximally mixed state on `C^n`.
pub fn maximally_mixed(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n).scale_real(1.0 / n as f64)
}

/// A random density matrix `G G† / tr(G G†)` with Gaussian `G`.
pub fn random_density(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut gauss = || {
        // Box-Muller
        let (u, v): (f64, f64) = (rng.gen::<f64>().max(f64::MIN_POSITIVE), rng.gen());
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    };
    let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(gauss(), gauss()));
    let rho = g.matmul(&g.adjoint()).expect("square");
    let tr = real_trace(&rho);
    rho.scale_real(1.0 / tr)
}

/// One sampled outcome of a cluster: the events fired, the events
/// dropped, and the unnormalised state after the outcome.
struct Branch {
    fired: Vec<usize>,
    dropped: Vec<usize>,
    marking: Marking,
    state: ComplexMatrix,
    probability: f64,
}

fn compatible(net: &Net, a: usize, members: &[usize]) -> bool {
    members.iter().all(|&b| !net.in_conflict(a, b))
}

/// All outcomes of `cluster` at `m`, the empty family first.
fn branches(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    rho: &ComplexMatrix,
    cluster: &[usize],
    opts: &CheckOptions,
) -> Result<Vec<Branch>> {
    if cluster.len() > opts.cluster_cap {
        return Err(Error::ClusterTooLarge {
            size: cluster.len(),
            cap: opts.cluster_cap,
        });
    }
    let space: Vec<Wire> = m.iter().map(Wire::Cond).collect();
    let mut out = Vec::new();
    'families: for mask in 0usize..1 << cluster.len() {
        let fired: Vec<usize> = (0..cluster.len()).filter(|i| mask >> i & 1 == 1).map(|i| cluster[i]).collect();
        for (k, &a) in fired.iter().enumerate() {
            if !compatible(net, a, &fired[k + 1..]) {
                continue 'families;
            }
        }
        let dropped: Vec<usize> = cluster
            .iter()
            .copied()
            .filter(|e| !fired.contains(e) && compatible(net, *e, &fired))
            .collect();
        let mut state = rho.clone();
        if !dropped.is_empty() {
            let wires = cluster_space(net, &dropped);
            let d = single_extension_on(net, ann, &wires, &dropped)?;
            let root = d.matrix().psd_sqrt()?;
            let k = embed(ann, &space, &[(wires, &root)]);
            state = k.matmul(&state)?.matmul(&k.adjoint())?;
        }
        let mut marking = m.clone();
        for &e in &fired {
            (marking, state) = fire_state(net, ann, &marking, &state, e, None, &opts.limits)?;
        }
        let probability = real_trace(&state);
        out.push(Branch {
            fired,
            dropped,
            marking,
            state,
            probability,
        });
    }
    Ok(out)
}

/// Checks, for random states on the marking space, that the branch
/// probabilities of `cluster` sum to at most one and that the missing mass
/// is the expectation of the drop effect.
pub fn sub_probability_check(
    net: &Net,
    ann: &LocalAnnotation,
    m: &Marking,
    cluster: &[usize],
    samples: usize,
    seed: u64,
    opts: &CheckOptions,
) -> Result<CheckOutcome> {
    let name = "sub-probability";
    let drop = crate::checker::single_extension_drop(net, ann, m, cluster)?;
    let dim = drop.dim().get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_total, mut worst_gap) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let rho = random_density(dim, &mut rng);
        let outcomes = branches(net, ann, m, &rho, cluster, opts)?;
        let total: f64 = outcomes.iter().filter(|b| !b.fired.is_empty()).map(|b| b.probability).sum();
        let gap = (total - (1.0 - drop.expectation(&rho)?)).abs();
        worst_total = worst_total.max(total);
        worst_gap = worst_gap.max(gap);
    }
    let out = if worst_total > 1.0 + opts.tol_psd {
        CheckOutcome::fail(name, format!("branch probabilities sum to {worst_total:.12}"))
    } else if worst_gap > 1e-10 {
        CheckOutcome::fail(name, format!("missing mass differs from the drop by {worst_gap:.3e}"))
    } else {
        CheckOutcome::pass(name)
    };
    Ok(out
        .with_metric("max_total", worst_total)
        .with_metric("max_gap", worst_gap)
        .with_metric("samples", samples as f64))
}

/// Supplies the states fed to negative events.
pub trait EnvPolicy: Sync {
    fn input(&self, net: &Net, ann: &LocalAnnotation, t: usize, log: &[LogEntry]) -> Result<ComplexMatrix>;
}

/// The maximally mixed state on every signal space.
#[derive(Clone, Copy, Debug, Default)]
pub struct MixedEnv;

impl EnvPolicy for MixedEnv {
    fn input(&self, _: &Net, ann: &LocalAnnotation, t: usize, _: &[LogEntry]) -> Result<ComplexMatrix> {
        Ok(maximally_mixed(ann.h(t).get()))
    }
}

/// Fixed states by transition id; a missing id is an error.
#[derive(Clone, Debug, Default)]
pub struct FixedEnv(pub BTreeMap<String, ComplexMatrix>);

impl EnvPolicy for FixedEnv {
    fn input(&self, net: &Net, _: &LocalAnnotation, t: usize, _: &[LogEntry]) -> Result<ComplexMatrix> {
        let id = net.transition_id(t);
        self.0
            .get(id)
            .cloned()
            .ok_or_else(|| Error::MissingEnvInput(id.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogEntry {
    pub step: usize,
    pub cluster: Vec<String>,
    /// Events fired; empty when the run halted.
    pub fired: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
    pub halted: bool,
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub struct RunState {
    pub marking: Marking,
    /// Normalised state on the marking space.
    pub state: ComplexMatrix,
    pub log: Vec<LogEntry>,
    pub halted: bool,
    /// Product of the probabilities of the sampled outcomes.
    pub weight: f64,
    dropped: BTreeSet<usize>,
}

impl RunState {
    /// Space-separated fired events, with `HALT` appended if the run halted.
    pub fn trace_key(&self) -> String {
        let mut parts: Vec<&str> = self.log.iter().flat_map(|e| e.fired.iter().map(String::as_str)).collect();
        if self.halted {
            parts.push("HALT");
        }
        parts.join(" ")
    }
}

/// A sampler bound to an annotated net that passed [`is_qpn`].
pub struct Sampler<'a> {
    net: &'a Net,
    ann: &'a LocalAnnotation,
    opts: CheckOptions,
}

impl<'a> Sampler<'a> {
    pub fn new(net: &'a Net, ann: &'a LocalAnnotation, opts: CheckOptions) -> Result<Self> {
        let verdict = is_qpn(net, ann, &opts)?;
        if !verdict.passed {
            return Err(Error::NotAQpn(verdict.detail));
        }
        Ok(Self { net, ann, opts })
    }

    pub fn run(
        &self,
        rho0: &ComplexMatrix,
        env: &dyn EnvPolicy,
        seed: u64,
        stream: u64,
        max_steps: usize,
    ) -> Result<RunState> {
        let (net, ann) = (self.net, self.ann);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut run = RunState {
            marking: net.initial_marking().clone(),
            state: rho0.clone(),
            log: Vec::new(),
            halted: false,
            weight: 1.0,
            dropped: BTreeSet::new(),
        };
        let ids = |ts: &[usize]| ts.iter().map(|&t| net.transition_id(t).to_string()).collect::<Vec<_>>();
        for step in 0..max_steps {
            let m = run.marking.clone();
            run.dropped.retain(|&t| net.is_enabled(&m, t));
            let enabled = net.enabled(&m);
            if let Some(&t) = enabled.iter().find(|&&t| net.polarity(t).is_negative()) {
                let sigma = env.input(net, ann, t, &run.log)?;
                let (next, state) = fire_state(net, ann, &m, &run.state, t, Some(&sigma), &self.opts.limits)?;
                let p = real_trace(&state);
                run.log.push(LogEntry {
                    step,
                    cluster: ids(&[t]),
                    fired: ids(&[t]),
                    dropped: Vec::new(),
                    halted: false,
                    probability: p,
                });
                run.marking = next;
                run.state = state.scale_real(1.0 / p);
                continue;
            }
            let candidates: Vec<usize> = enabled.into_iter().filter(|t| !run.dropped.contains(t)).collect();
            let Some(&first) = candidates.first() else {
                break;
            };
            let mut cluster = BTreeSet::from([first]);
            let mut stack = vec![first];
            while let Some(a) = stack.pop() {
                for &b in &candidates {
                    if net.in_conflict(a, b) && cluster.insert(b) {
                        stack.push(b);
                    }
                }
            }
            let cluster: Vec<usize> = cluster.into_iter().collect();
            let outcomes = branches(net, ann, &m, &run.state, &cluster, &self.opts)?;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, b) in outcomes.iter().enumerate() {
                if b.probability < MIN_BRANCH_PROBABILITY {
                    continue;
                }
                acc += b.probability;
                chosen = Some(i);
                if u < acc {
                    break;
                }
            }
            let Some(i) = chosen else {
                run.halted = true;
                break;
            };
            let b = &outcomes[i];
            run.weight *= b.probability;
            run.log.push(LogEntry {
                step,
                cluster: ids(&cluster),
                fired: ids(&b.fired),
                dropped: ids(&b.dropped),
                halted: b.fired.is_empty(),
                probability: b.probability,
            });
            if b.fired.is_empty() {
                run.halted = true;
                break;
            }
            run.dropped.extend(b.dropped.iter().copied());
            run.marking = b.marking.clone();
            run.state = b.state.scale_real(1.0 / b.probability);
        }
        Ok(run)
    }

    /// Runs `runs` independent executions, run `i` on stream `i`, and
    /// tallies their trace keys.
    pub fn frequencies(
        &self,
        rho0: &ComplexMatrix,
        env: &dyn EnvPolicy,
        seed: u64,
        runs: usize,
        max_steps: usize,
    ) -> Result<Frequencies> {
        let keys = crate::checker::with_pool(self.opts.jobs, || {
            (0..runs)
                .into_par_iter()
                .map(|i| Ok(self.run(rho0, env, seed, i as u64, max_steps)?.trace_key()))
                .collect::<Result<Vec<String>>>()
        })?;
        let mut counts = BTreeMap::new();
        for k in keys {
            *counts.entry(k).or_insert(0) += 1;
        }
        Ok(Frequencies { runs, counts })
    }
}

/// Checks the net, then samples one execution.
pub fn sample_execution(
    net: &Net,
    ann: &LocalAnnotation,
    rho0: &ComplexMatrix,
    env: &dyn EnvPolicy,
    seed: u64,
    max_steps: usize,
) -> Result<RunState> {
    Sampler::new(net, ann, CheckOptions::default())?.run(rho0, env, seed, 0, max_steps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frequencies {
    pub runs: usize,
    pub counts: BTreeMap<String, usize>,
}

impl Frequencies {
    pub fn frequency(&self, key: &str) -> f64 {
        if self.runs == 0 {
            return 0.0;
        }
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.runs as f64
    }

    /// Frequency of the runs whose trace contains every event of `events`.
    pub fn frequency_containing(&self, events: &[&str]) -> f64 {
        if self.runs == 0 {
            return 0.0;
        }
        let hits: usize = self
            .counts
            .iter()
            .filter(|(k, _)| {
                let fired: BTreeSet<&str> = k.split(' ').collect();
                events.iter().all(|e| fired.contains(e))
            })
            .map(|(_, c)| c)
            .sum();
        hits as f64 / self.runs as f64
    }

    /// Binomial standard error of a frequency.
    pub fn standard_error(&self, p: f64) -> f64 {
        if self.runs == 0 {
            return 0.0;
        }
        (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}
