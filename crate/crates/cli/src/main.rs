use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qpn::algebra::ComplexMatrix;
use qpn::annotation::{validate_channels, validate_signatures, AnnotatedNet, GlobalValuation};
use qpn::checker::{
    brute_force_global_drop, check_local_drop, check_local_drop_occurrence, BruteForceOptions, CheckOptions,
    DropReport,
};
use qpn::compose::{drop_preserving_join, join_all, parallel, validate_drop_preserving, JoinSpec};
use qpn::io::{self, NetDocument};
use qpn::net::{Marking, Net, OccurrenceNet, SafetyStatus};
use qpn::semantics::{maximally_mixed, run_probability, sequence_probability, EnvInputs, FixedEnv, MixedEnv, Sampler};
use qpn::unfolding::{transfer_annotation, unfold, UnfoldBudget};
use qpn::{CheckOutcome, Error};

const PASS: u8 = 0;
const CHECK_FAILED: u8 = 1;
const PARSE_OR_IO: u8 = 2;
const RESOURCE_BOUND: u8 = 3;

/// Verification tools for quantum Petri nets.
#[derive(Parser, Debug)]
#[command(name = "qpn", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Tolerance on negative eigenvalues
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_psd: f64,
    /// Most reachable markings explored
    #[arg(long, global = true, default_value_t = 100_000)]
    marking_bound: usize,
    /// Largest non-clique cluster checked by sub-family enumeration
    #[arg(long, global = true, default_value_t = 12)]
    cluster_cap: usize,
    /// Worker threads for instance evaluation
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

impl Global {
    fn options(&self) -> CheckOptions {
        CheckOptions {
            tol_psd: self.tol_psd,
            marking_bound: self.marking_bound,
            cluster_cap: self.cluster_cap,
            jobs: self.jobs,
            ..CheckOptions::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a net and check its structure, safety, signatures and channels
    Validate { net: PathBuf },
    /// Run certification checks (all of drop, obliviousness and race-freedom when none is selected)
    Check {
        net: PathBuf,
        #[arg(long)]
        drop: bool,
        #[arg(long)]
        obliviousness: bool,
        #[arg(long)]
        race_free: bool,
        /// Compare the local drop verdict with the brute-force global one (occurrence nets)
        #[arg(long)]
        oracle: bool,
        /// Write a JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Unfold a net into a finite branching process
    Unfold {
        net: PathBuf,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        max_events: usize,
        /// Output net file; printed when absent
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Compose nets
    Compose {
        #[command(subcommand)]
        op: ComposeOp,
    },
    /// Exact probability of reaching one marking from another
    Prob {
        net: PathBuf,
        /// Comma-separated source marking; the initial marking by default
        #[arg(long)]
        from: Option<String>,
        /// Comma-separated target marking
        #[arg(long)]
        to: String,
        /// Initial state; maximally mixed by default
        #[arg(long)]
        rho: Option<PathBuf>,
        /// States for negative transitions, keyed by id
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Sample executions and tabulate their frequencies
    Sample {
        net: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        #[arg(long)]
        rho: Option<PathBuf>,
        /// States for negative transitions; maximally mixed by default
        #[arg(long)]
        env: Option<PathBuf>,
        /// Write the log of the first run here
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Export a net to DOT
    Dot {
        net: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum ComposeOp {
    /// Disjoint union of two nets
    Par {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Join events as listed in a spec file
    Join {
        net: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Join even when the spec is not drop-preserving
        #[arg(long)]
        force: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) => PARSE_OR_IO,
        e if e.is_resource_bound() => RESOURCE_BOUND,
        _ => CHECK_FAILED,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path, g: &Global) -> Result<AnnotatedNet, Error> {
    io::load_str(&read(path)?, g.marking_bound)
}

fn verdict(ok: bool) -> u8 {
    if ok {
        PASS
    } else {
        CHECK_FAILED
    }
}

fn safety_line(net: &Net) -> Result<String, Error> {
    match net.safety() {
        SafetyStatus::Verified { markings } => Ok(format!("safety: pass ({markings} reachable markings)")),
        SafetyStatus::Structural => Ok("safety: pass (occurrence net)".into()),
        SafetyStatus::Unverified { .. } => Err(Error::SafetyUnverified),
    }
}

fn cmd_validate(path: &Path, g: &Global) -> Result<u8, Error> {
    let an = load(path, g)?;
    println!(
        "net: {} places, {} transitions",
        an.net.place_count(),
        an.net.transition_count()
    );
    println!("{}", safety_line(&an.net)?);
    let checks = [
        validate_signatures(&an.net, &an.ann),
        validate_channels(&an.net, &an.ann, g.tol_psd),
    ];
    for c in &checks {
        println!("{c}");
    }
    Ok(verdict(checks.iter().all(|c| c.passed)))
}

fn drop_json(report: &DropReport) -> Value {
    serde_json::to_value(report).expect("reports serialise")
}

fn cmd_check(
    path: &Path,
    g: &Global,
    selected: [bool; 3],
    oracle: bool,
    report_path: Option<&Path>,
) -> Result<u8, Error> {
    let an = load(path, g)?;
    let (net, ann) = (&an.net, &an.ann);
    let opts = g.options();
    let [mut drop, mut obliviousness, mut race] = selected;
    if !(drop || obliviousness || race) {
        (drop, obliviousness, race) = (true, true, true);
    }
    println!("{}", safety_line(net)?);
    let mut checks = vec![
        validate_signatures(net, ann),
        validate_channels(net, ann, g.tol_psd),
    ];
    let mut report = json!({ "net": path.display().to_string() });
    let structural_ok = checks.iter().all(|c| c.passed);
    let occ = OccurrenceNet::new(net.clone()).ok();
    if race {
        checks.push(net.race_free());
    }
    if obliviousness {
        checks.push(qpn::annotation::check_local_obliviousness(net, ann));
    }
    let mut local_verdict = None;
    if drop && structural_ok {
        let rep = match &occ {
            Some(o) => check_local_drop_occurrence(o, ann, &opts)?,
            None => check_local_drop(net, ann, &opts)?,
        };
        checks.push(rep.to_outcome("local_drop"));
        local_verdict = Some(rep.passed);
        report["local_drop"] = drop_json(&rep);
    }
    for c in &checks {
        println!("{c}");
    }
    let mut agree = true;
    if oracle {
        match (&occ, structural_ok) {
            (Some(o), true) => {
                let local = match local_verdict {
                    Some(v) => v,
                    None => check_local_drop_occurrence(o, ann, &opts)?.passed,
                };
                let brute = brute_force_global_drop(
                    o,
                    ann,
                    &BruteForceOptions {
                        tol_psd: g.tol_psd,
                        jobs: g.jobs,
                        ..BruteForceOptions::default()
                    },
                )?;
                agree = local == brute.passed;
                println!(
                    "oracle: local {}, global {}",
                    if local { "pass" } else { "FAIL" },
                    if brute.passed { "pass" } else { "FAIL" }
                );
                println!("agreement: {}", if agree { "yes" } else { "no" });
                report["oracle"] = json!({ "agreement": agree, "global_drop": drop_json(&brute) });
            }
            (None, _) => println!("oracle: skipped (not an occurrence net)"),
            (_, false) => println!("oracle: skipped (invalid annotation)"),
        }
    }
    let outcome = CheckOutcome::all("check", checks);
    let passed = outcome.passed && agree;
    report["passed"] = json!(passed);
    report["checks"] = serde_json::to_value(&outcome.components).expect("outcomes serialise");
    if let Some(p) = report_path {
        write(p, &io::render(&report))?;
    }
    Ok(verdict(passed))
}

fn cmd_unfold(
    path: &Path,
    g: &Global,
    budget: UnfoldBudget,
    out: Option<&Path>,
    dot: Option<&Path>,
) -> Result<u8, Error> {
    let an = load(path, g)?;
    an.net.ensure_safety_verified()?;
    let bp = unfold(&an.net, budget)?;
    let ann = transfer_annotation(&bp, &an.net, &an.ann)?;
    let text = NetDocument::from_branching_process(&bp, &an.net, &ann)?.to_json();
    if let Some(d) = dot {
        write(d, &io::branching_process_to_dot(&bp, &an.net))?;
    }
    let occ = bp.occ().net();
    let exhausted = bp.exhaustion();
    let summary = format!(
        "unfolding: {} conditions, {} events, depth budget {}, event budget {}",
        occ.place_count(),
        occ.transition_count(),
        if exhausted.depth { "reached" } else { "not reached" },
        if exhausted.events { "reached" } else { "not reached" },
    );
    match out {
        Some(o) => {
            write(o, &text)?;
            println!("{summary}");
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(PASS)
}

fn cmd_par(left: &Path, right: &Path, out: &Path, g: &Global) -> Result<u8, Error> {
    let (l, r) = (load(left, g)?, load(right, g)?);
    let composite = parallel(&l, &r)?;
    write(out, &io::save_string(&composite.result))?;
    let renamed = composite.provenance.iter().filter(|(id, (_, orig))| id != &orig).count();
    println!(
        "composite: {} places, {} transitions, {renamed} ids prefixed",
        composite.result.net.place_count(),
        composite.result.net.transition_count()
    );
    Ok(PASS)
}

fn cmd_join(path: &Path, spec_path: &Path, out: &Path, force: bool, g: &Global) -> Result<u8, Error> {
    let an = load(path, g)?;
    let spec: JoinSpec = serde_json::from_str(&read(spec_path)?).map_err(|e| Error::Parse {
        location: format!("{} line {}, column {}", spec_path.display(), e.line(), e.column()),
        message: e.to_string(),
    })?;
    let valid = validate_drop_preserving(&an, &spec);
    println!("{valid}");
    if valid.passed {
        let joined = drop_preserving_join(&an, &spec)?;
        write(out, &io::save_string(&joined))?;
        return Ok(PASS);
    }
    if !force {
        return Ok(CHECK_FAILED);
    }
    let joined = join_all(&an, &spec)?;
    write(out, &io::save_string(&joined))?;
    let verdict_after = qpn::checker::is_qpn(&joined.net, &joined.ann, &g.options())?;
    println!("{verdict_after}");
    Ok(verdict(verdict_after.passed))
}

fn parse_marking(net: &Net, flag: &str, text: &str) -> Result<Marking, Error> {
    let ids: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    net.marking_from_ids(&ids).map_err(|e| Error::Parse {
        location: flag.to_string(),
        message: e.to_string(),
    })
}

fn marking_dim(an: &AnnotatedNet, m: &Marking) -> usize {
    an.ann.marking_space(m).dims().iter().map(|d| d.get()).product()
}

fn initial_state(an: &AnnotatedNet, m: &Marking, rho: Option<&Path>) -> Result<ComplexMatrix, Error> {
    match rho {
        Some(p) => io::parse_matrix(&read(p)?),
        None => Ok(maximally_mixed(marking_dim(an, m))),
    }
}

fn env_states(net: &Net, env: Option<&Path>) -> Result<(FixedEnv, EnvInputs), Error> {
    let by_id = match env {
        Some(p) => io::parse_matrix_map(&read(p)?)?,
        None => Default::default(),
    };
    let mut by_index = EnvInputs::new();
    for (id, m) in &by_id {
        by_index.insert(net.transition(id)?, m.clone());
    }
    Ok((FixedEnv(by_id), by_index))
}

fn cmd_prob(
    path: &Path,
    g: &Global,
    from: Option<&str>,
    to: &str,
    rho: Option<&Path>,
    env: Option<&Path>,
) -> Result<u8, Error> {
    let an = load(path, g)?;
    let net = &an.net;
    let from = match from {
        Some(text) => parse_marking(net, "--from", text)?,
        None => net.initial_marking().clone(),
    };
    let to = parse_marking(net, "--to", to)?;
    let rho0 = initial_state(&an, &from, rho)?;
    let (_, inputs) = env_states(net, env)?;
    let p = match OccurrenceNet::new(net.clone()) {
        Ok(occ) => {
            let iv = occ.interval(&from, &to)?;
            let gv = GlobalValuation::new(&occ, &an.ann, Default::default());
            run_probability(&gv, &iv, &rho0, &inputs)?
        }
        Err(_) => {
            let seq = net
                .firing_sequence_between(&from, &to, g.marking_bound)?
                .ok_or(Error::NotReachableFrom)?;
            println!("sequence: {}", net.format_transitions(seq.iter().copied()));
            sequence_probability(net, &an.ann, &from, &seq, &rho0, &inputs, &Default::default())?
        }
    };
    println!("probability: {p:.12}");
    Ok(PASS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    path: &Path,
    g: &Global,
    seed: u64,
    runs: usize,
    max_steps: usize,
    rho: Option<&Path>,
    env: Option<&Path>,
    log: Option<&Path>,
) -> Result<u8, Error> {
    let an = load(path, g)?;
    let sampler = Sampler::new(&an.net, &an.ann, g.options())?;
    let rho0 = initial_state(&an, an.net.initial_marking(), rho)?;
    let fixed = match env {
        Some(_) => Some(env_states(&an.net, env)?.0),
        None => None,
    };
    let policy: &dyn qpn::semantics::EnvPolicy = match &fixed {
        Some(f) => f,
        None => &MixedEnv,
    };
    let freq = sampler.frequencies(&rho0, policy, seed, runs, max_steps)?;
    println!("runs: {runs}");
    for (key, count) in &freq.counts {
        let p = freq.frequency(key);
        let label = if key.is_empty() { "(none)" } else { key };
        println!("{label}\t{count}\t{p:.4} ± {:.4}", freq.standard_error(p));
    }
    if let Some(l) = log {
        let run = sampler.run(&rho0, policy, seed, 0, max_steps)?;
        write(l, &io::render(&serde_json::to_value(&run.log).expect("logs serialise")))?;
    }
    Ok(PASS)
}

fn cmd_dot(path: &Path, out: Option<&Path>, g: &Global) -> Result<u8, Error> {
    let an = io::NetDocument::parse(&read(path)?)?.to_annotated(g.marking_bound)?;
    let dot = io::to_dot(&an.net);
    match out {
        Some(o) => write(o, &dot)?,
        None => print!("{dot}"),
    }
    Ok(PASS)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { net } => cmd_validate(net, g),
        Command::Check {
            net,
            drop,
            obliviousness,
            race_free,
            oracle,
            report,
        } => cmd_check(net, g, [*drop, *obliviousness, *race_free], *oracle, report.as_deref()),
        Command::Unfold {
            net,
            depth,
            max_events,
            out,
            dot,
        } => cmd_unfold(
            net,
            g,
            UnfoldBudget {
                max_depth: *depth,
                max_events: *max_events,
            },
            out.as_deref(),
            dot.as_deref(),
        ),
        Command::Compose { op } => match op {
            ComposeOp::Par { left, right, out } => cmd_par(left, right, out, g),
            ComposeOp::Join { net, spec, out, force } => cmd_join(net, spec, out, *force, g),
        },
        Command::Prob { net, from, to, rho, env } => {
            cmd_prob(net, g, from.as_deref(), to, rho.as_deref(), env.as_deref())
        }
        Command::Sample {
            net,
            seed,
            runs,
            max_steps,
            rho,
            env,
            log,
        } => cmd_sample(net, g, *seed, *runs, *max_steps, rho.as_deref(), env.as_deref(), log.as_deref()),
        Command::Dot { net, out } => cmd_dot(net, out.as_deref(), g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
