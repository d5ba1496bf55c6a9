//! Command-line interface.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use sbm_core::diagnostics::{
    erdos_renyi_baseline_log2, estimate_log_px, exact_posterior_small, iat, modal_state, partition_equivalent,
    uniform_baseline_log2, KPosterior, IAT_MIN_LEN,
};
use sbm_core::relabel::{nonempty_count, CoClusterCounter, Relabeller};
use sbm_core::sampler::{run_chain, MoveSet, RunSummary};
use sbm_core::synthgen::{self, GeneratorParams, PiSpec, SizeSpec, ThetaSpec};
use sbm_core::{EdgeModel, GraphKind, Hyperparameters, KPrior, MoveKind, Network, SamplerConfig};

use crate::formats::{self, KindOverride, NetworkWriter, TraceWriter};
use crate::manifest::Manifest;

/// Environment variable that, when set, requires every randomized command to be given `--seed`.
pub const CI_ENV: &str = "CI";

#[derive(Debug, Parser)]
#[command(name = "sbm", version, about = "Collapsed stochastic block model sampler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic network and its planted clustering.
    Generate(GenerateArgs),
    /// Run the MCMC sampler on a network.
    Sample(SampleArgs),
    /// Relabel a z-trace and write membership and co-clustering matrices.
    Summarize(SummarizeArgs),
    /// Exact posterior over K by enumeration (up to 8 nodes).
    Oracle(OracleArgs),
    /// Posterior summaries and diagnostics for a sample trace.
    Diagnose(DiagnoseArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct GraphArgs {
    /// Treat edges as directed.
    #[arg(long, conflicts_with = "undirected")]
    pub directed: bool,
    /// Treat edges as undirected.
    #[arg(long)]
    pub undirected: bool,
    /// Allow self-loops.
    #[arg(long, conflicts_with = "no_self_loops")]
    pub self_loops: bool,
    /// Forbid self-loops.
    #[arg(long)]
    pub no_self_loops: bool,
    /// Integer edge counts with a Poisson model instead of binary edges.
    #[arg(long)]
    pub poisson: bool,
}

impl GraphArgs {
    fn overrides(&self) -> KindOverride {
        KindOverride {
            directed: if self.directed {
                Some(true)
            } else if self.undirected {
                Some(false)
            } else {
                None
            },
            self_loops: if self.self_loops {
                Some(true)
            } else if self.no_self_loops {
                Some(false)
            } else {
                None
            },
            model: self.poisson.then_some(EdgeModel::CountWeighted),
        }
    }

    /// Kind for newly generated networks: directed and loop-free unless told otherwise.
    fn kind_or(&self, default: GraphKind) -> (GraphKind, EdgeModel) {
        let o = self.overrides();
        let kind = GraphKind::new(o.directed.unwrap_or(default.directed), o.self_loops.unwrap_or(default.self_loops));
        (kind, o.model.unwrap_or(EdgeModel::Binary))
    }
}

#[derive(Debug, Args, Clone)]
pub struct HyperArgs {
    /// Dirichlet concentration on cluster proportions.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Beta prior on binary block densities.
    #[arg(long, default_value_t = 1.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta2: f64,
    /// Gamma prior shape on Poisson block rates.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Gamma prior scale on Poisson block rates.
    #[arg(long, default_value_t = 1000.0)]
    pub phi: f64,
    /// Rate of the Poisson prior on K.
    #[arg(long, default_value_t = 1.0, conflicts_with = "uniform_k_prior")]
    pub k_rate: f64,
    /// Uniform prior on K over 1..=max-k.
    #[arg(long, requires = "max_k")]
    pub uniform_k_prior: bool,
    #[arg(long, requires = "uniform_k_prior")]
    pub max_k: Option<usize>,
}

impl HyperArgs {
    fn resolve(&self) -> Result<Hyperparameters> {
        let k_prior = if self.uniform_k_prior {
            KPrior::Uniform { max_k: self.max_k.unwrap_or(0) }
        } else {
            KPrior::TruncatedPoisson { rate: self.k_rate }
        };
        let hp = Hyperparameters {
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            s: self.s,
            phi: self.phi,
            k_prior,
        };
        hp.validate().context("invalid hyperparameters")?;
        Ok(hp)
    }
}

fn record_hp(m: &mut Manifest, hp: &Hyperparameters) {
    m.set("hp.alpha", hp.alpha);
    m.set("hp.beta1", hp.beta1);
    m.set("hp.beta2", hp.beta2);
    m.set("hp.s", hp.s);
    m.set("hp.phi", hp.phi);
    match hp.k_prior {
        KPrior::TruncatedPoisson { rate } => m.set("hp.k_prior", format!("poisson:{rate}")),
        KPrior::Uniform { max_k } => m.set("hp.k_prior", format!("uniform:{max_k}")),
    }
}

fn record_graph(m: &mut Manifest, net: &Network) {
    m.set("graph.nodes", net.n_nodes());
    m.set("graph.edges", net.n_edges());
    m.set("graph.total_weight", net.total_weight());
    m.set("graph.directed", net.kind().directed as u8);
    m.set("graph.self_loops", net.kind().self_loops as u8);
    m.set("graph.model", formats::model_name(net.model()));
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output edge-list path; the planted labels go to `<out>.truth`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Number of clusters.
    #[arg(long)]
    pub k: usize,
    /// Comma-separated cluster sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    pub sizes: Option<Vec<usize>>,
    /// Number of nodes, assigned to clusters at random.
    #[arg(long)]
    pub n: Option<usize>,
    /// Draw cluster proportions from a symmetric Dirichlet instead of using equal ones.
    #[arg(long, requires = "n")]
    pub theta_alpha: Option<f64>,
    /// Block parameter prior: `uniform:LO:HI`, `beta:A:B` or `gamma:S:PHI`.
    #[arg(long)]
    pub pi_prior: Option<String>,
    /// Noise level in [0, 0.5] applied to binary densities.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hub-and-communities network: `--n`, `--k`, `--lambda`, `--epsilon`.
    #[arg(long, requires_all = ["n", "lambda", "epsilon"], conflicts_with_all = ["sizes", "pi_prior", "delta", "large"])]
    pub community: bool,
    #[arg(long, requires = "community")]
    pub lambda: Option<f64>,
    #[arg(long, requires = "community")]
    pub epsilon: Option<f64>,
    /// `K` equal clusters of `--per-cluster` nodes, streamed to disk.
    #[arg(long, requires = "per_cluster", conflicts_with_all = ["sizes", "n", "pi_prior", "delta"])]
    pub large: bool,
    #[arg(long, requires = "large")]
    pub per_cluster: Option<usize>,
    /// Upper bound of the Uniform(0, cap) block densities for `--large`.
    #[arg(long, default_value_t = 0.2)]
    pub density_cap: f64,
    /// Largest node count `--large` will generate.
    #[arg(long, default_value_t = 1_000_000)]
    pub node_budget: usize,
}

fn parse_pi_prior(s: &str) -> Result<PiSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts.get(i).with_context(|| format!("pi prior {s:?} needs two parameters"))?.parse().with_context(|| format!("bad number in pi prior {s:?}"))
    };
    ensure!(parts.len() == 3, "pi prior must look like uniform:LO:HI, beta:A:B or gamma:S:PHI");
    match parts[0] {
        "uniform" => Ok(PiSpec::UniformRange(num(1)?, num(2)?)),
        "beta" => Ok(PiSpec::BetaDraw(num(1)?, num(2)?)),
        "gamma" => Ok(PiSpec::GammaDraw(num(1)?, num(2)?)),
        other => bail!("unknown pi prior {other:?}"),
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Edge-list file.
    #[arg(long)]
    pub network: PathBuf,
    /// Output prefix for `<out>.samples.csv`, `<out>.z.txt` and `<out>.manifest`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub hp: HyperArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub iters: u64,
    /// Iterations discarded before samples are written (default: half of `--iters`).
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 2)]
    pub initial_k: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Comma-separated subset of MK, GS, M3, AE.
    #[arg(long, default_value = "MK,GS,M3,AE")]
    pub moves: String,
    /// Independent chains run in parallel, each with its own random stream.
    #[arg(long, default_value_t = 1)]
    pub chains: u64,
    /// Recount statistics every this many iterations (0 disables).
    #[arg(long, default_value_t = 10_000)]
    pub recompute_every: u64,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// z-trace written by `sample`.
    #[arg(long)]
    pub z: PathBuf,
    /// Output prefix for `<out>.membership.csv` and `<out>.coclustering.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub hp: HyperArgs,
    /// Largest K enumerated.
    #[arg(long, default_value_t = 12)]
    pub k_max: usize,
    /// Report path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Sample CSV written by `sample`.
    #[arg(long)]
    pub samples: PathBuf,
    /// Matching z-trace, needed for `--truth` and `--network`.
    #[arg(long)]
    pub z: Option<PathBuf>,
    /// Planted labels; reports how often the chain visits the planted partition.
    #[arg(long, requires = "z")]
    pub truth: Option<PathBuf>,
    /// Network the samples came from; adds the log2 P(x) estimate and baselines.
    #[arg(long, requires = "z")]
    pub network: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub hp: HyperArgs,
    /// Run manifest with full-run acceptance counts.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Report path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Parses and runs a full command line (including the program name).
pub fn run_from<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    run(cli, args)
}

fn run(cli: Cli, args: Vec<String>) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a, args),
        Command::Sample(a) => cmd_sample(a, args),
        Command::Summarize(a) => cmd_summarize(a, args),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Rerun(a) => cmd_rerun(a),
    }
}

/// Uses the given seed, or in CI refuses to run without one, or draws one
/// from the clock and appends it to the recorded arguments.
fn resolve_seed(seed: Option<u64>, args: &mut Vec<String>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    if std::env::var_os(CI_ENV).is_some() {
        bail!("--seed is required when {CI_ENV} is set");
    }
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    let s = (nanos as u64) ^ ((nanos >> 64) as u64);
    args.push("--seed".into());
    args.push(s.to_string());
    Ok(s)
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_generate(a: GenerateArgs, mut args: Vec<String>) -> Result<()> {
    let start = Instant::now();
    let seed = resolve_seed(a.seed, &mut args)?;
    let manifest_path = with_ext(&a.out, "manifest");
    let truth_path = with_ext(&a.out, "truth");
    let mut manifest = Manifest::new("generate", &args);
    manifest.set("seed", seed);
    manifest.set("output.network", a.out.display());
    manifest.set("output.truth", truth_path.display());
    let mref = Some(manifest_path.as_path());

    let (z, pi) = if a.large {
        let (kind, model) = a.graph.kind_or(GraphKind::DIRECTED);
        ensure!(model == EdgeModel::Binary, "--large generates binary networks only");
        let o = a.per_cluster.context("--large needs --per-cluster")?;
        let n = a.k.checked_mul(o).context("K x per-cluster overflows")?;
        let mut writer = NetworkWriter::create(&a.out, n, kind, model, mref)?;
        let mut io_err = None;
        let out = synthgen::generate_large(a.k, o, a.density_cap, kind, seed, a.node_budget, |s, d, w| {
            if io_err.is_none() {
                if let Err(e) = writer.edge(s, d, w) {
                    io_err = Some(e);
                }
            }
        })?;
        if let Some(e) = io_err {
            return Err(e).with_context(|| format!("writing {}", a.out.display()));
        }
        writer.finish()?;
        manifest.set("graph.nodes", out.n_nodes);
        manifest.set("graph.edges", out.n_edges);
        (out.z, out.pi)
    } else {
        let generated = if a.community {
            ensure!(!a.graph.directed && !a.graph.self_loops && !a.graph.poisson, "--community networks are undirected, loop-free and binary");
            let (n, lambda, epsilon) = (a.n.unwrap_or(0), a.lambda.unwrap_or(0.0), a.epsilon.unwrap_or(0.0));
            synthgen::generate_community(n, a.k, lambda, epsilon, seed)?
        } else {
            let (kind, model) = a.graph.kind_or(GraphKind::DIRECTED);
            let sizes = match (&a.sizes, a.n) {
                (Some(s), None) => SizeSpec::Explicit(s.clone()),
                (None, Some(n)) => SizeSpec::Proportions {
                    n,
                    theta: match a.theta_alpha {
                        Some(alpha) => ThetaSpec::Dirichlet(alpha),
                        None => ThetaSpec::Fixed(vec![1.0; a.k]),
                    },
                },
                _ => bail!("give exactly one of --sizes or --n"),
            };
            let pi = match &a.pi_prior {
                Some(s) => parse_pi_prior(s)?,
                None if model == EdgeModel::CountWeighted => PiSpec::GammaDraw(1.0, 1.0),
                None => PiSpec::UniformRange(0.0, 1.0),
            };
            synthgen::generate(&GeneratorParams { k: a.k, sizes, pi, kind, model, delta: a.delta.unwrap_or(0.0), seed })?
        };
        formats::write_network(&a.out, &generated.network, mref)?;
        record_graph(&mut manifest, &generated.network);
        (generated.z, generated.pi)
    };
    formats::write_labels(&truth_path, &z, mref)?;
    manifest.set("pi", pi.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","));
    manifest.time("generate", start);
    manifest.write(&manifest_path)
}

fn chain_paths(out: &Path, chains: u64, c: u64) -> (PathBuf, PathBuf) {
    let base = if chains == 1 { out.to_path_buf() } else { with_ext(out, &format!("chain{c}")) };
    (with_ext(&base, "samples.csv"), with_ext(&base, "z.txt"))
}

fn cmd_sample(a: SampleArgs, mut args: Vec<String>) -> Result<()> {
    let seed = resolve_seed(a.seed, &mut args)?;
    let load = Instant::now();
    let net = formats::read_network(&a.network, a.graph.overrides())?;
    let hp = a.hp.resolve()?;
    let moves: MoveSet = a.moves.parse()?;
    let config = SamplerConfig {
        iterations: a.iters,
        burn_in: a.burnin.unwrap_or(a.iters / 2),
        seed,
        initial_k: a.initial_k,
        thin: a.thin,
        enabled_moves: moves,
        recompute_every: a.recompute_every,
    };
    config.validate()?;
    ensure!(a.chains >= 1, "--chains must be at least 1");

    let manifest_path = with_ext(&a.out, "manifest");
    let mut manifest = Manifest::new("sample", &args);
    manifest.set("seed", seed);
    manifest.set("input.network", a.network.display());
    record_graph(&mut manifest, &net);
    record_hp(&mut manifest, &hp);
    manifest.set("config.iterations", config.iterations);
    manifest.set("config.burn_in", config.burn_in);
    manifest.set("config.thin", config.thin);
    manifest.set("config.initial_k", config.initial_k);
    manifest.set("config.moves", config.enabled_moves);
    manifest.set("config.chains", a.chains);
    manifest.time("load", load);

    let run_start = Instant::now();
    let results: Vec<Result<RunSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..a.chains)
            .map(|c| {
                let (net, hp, config) = (&net, &hp, &config);
                let (csv, zt) = chain_paths(&a.out, a.chains, c);
                let mref = manifest_path.clone();
                scope.spawn(move || -> Result<RunSummary> {
                    let mut writer = TraceWriter::create(&csv, &zt, Some(&mref))?;
                    let mut io_err = None;
                    let summary = run_chain(net, hp, config, c, |s| {
                        if io_err.is_none() {
                            if let Err(e) = writer.push(s) {
                                io_err = Some(e);
                            }
                        }
                    })?;
                    if let Some(e) = io_err {
                        return Err(e).with_context(|| format!("writing {}", csv.display()));
                    }
                    writer.finish()?;
                    Ok(summary)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("chain thread panicked")))).collect()
    });
    manifest.time("sample", run_start);

    for (c, r) in results.into_iter().enumerate() {
        let summary = r?;
        let c = c as u64;
        let (csv, zt) = chain_paths(&a.out, a.chains, c);
        let key = |name: &str| if a.chains == 1 { name.to_string() } else { format!("chain{c}.{name}") };
        manifest.set(&key("output.samples"), csv.display());
        manifest.set(&key("output.z"), zt.display());
        manifest.set(&key("final_k"), summary.final_k);
        manifest.set(&key("max_drift"), summary.max_drift);
        manifest.set(&key("samples_emitted"), summary.samples_emitted);
        for m in MoveKind::ALL {
            let i = m.index();
            manifest.set(&key(&format!("moves.{m}.attempts")), summary.stats.attempts[i]);
            manifest.set(&key(&format!("moves.{m}.accepts")), summary.stats.accepts[i]);
            manifest.set(&key(&format!("moves.{m}.changed")), summary.stats.changed[i]);
        }
    }
    manifest.write(&manifest_path)
}

fn cmd_summarize(a: SummarizeArgs, args: Vec<String>) -> Result<()> {
    let start = Instant::now();
    let trace = formats::read_ztrace(&a.z)?;
    let n = trace.n_nodes;
    let manifest_path = with_ext(&a.out, "manifest");
    let mref = Some(manifest_path.as_path());

    let k1: Vec<usize> = trace.states().map(nonempty_count).collect();
    let mut order: Vec<usize> = (0..trace.len()).collect();
    order.sort_by_key(|&i| k1[i]);
    let mut relabeller = Relabeller::new(n);
    for &i in &order {
        relabeller.push(trace.state(i))?;
    }
    let membership = relabeller.membership()?;
    let mut counter = CoClusterCounter::new(n);
    for z in trace.states() {
        counter.add(z)?;
    }
    let cocluster = counter.finish()?;

    let membership_path = with_ext(&a.out, "membership.csv");
    let cocluster_path = with_ext(&a.out, "coclustering.csv");
    formats::write_membership(&membership_path, &membership, mref)?;
    formats::write_coclustering(&cocluster_path, &cocluster, mref)?;

    let mut manifest = Manifest::new("summarize", &args);
    manifest.set("input.z", a.z.display());
    manifest.set("states", trace.len());
    manifest.set("output.membership", membership_path.display());
    manifest.set("output.coclustering", cocluster_path.display());
    manifest.time("summarize", start);
    manifest.write(&manifest_path)
}

fn emit(out: Option<&Path>, report: &str) -> Result<()> {
    match out {
        Some(p) => formats::write_text(p, report, None),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

/// Exact-posterior report as CSV sections.
pub fn oracle_report(net: &Network, hp: &Hyperparameters, k_max: usize) -> Result<String> {
    let exact = exact_posterior_small(net, hp, k_max)?;
    let mut r = String::new();
    writeln!(r, "log2_px,{}", exact.log2_px())?;
    writeln!(r, "k_max,{}", exact.k_max)?;
    writeln!(r, "truncated_prior_mass,{:e}", exact.truncated_prior_mass)?;
    writeln!(r, "\nK,P(K|x)")?;
    for k in 1..=exact.k_max {
        writeln!(r, "{k},{}", exact.p_k[k])?;
    }
    writeln!(r, "\nK1,P(K1|x)")?;
    for k in 1..=exact.k_max {
        writeln!(r, "{k},{}", exact.p_k1[k])?;
    }
    Ok(r)
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let net = formats::read_network(&a.network, a.graph.overrides())?;
    let hp = a.hp.resolve()?;
    let report = oracle_report(&net, &hp, a.k_max)?;
    emit(a.out.as_deref(), &report)
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<()> {
    let rows = formats::read_samples(&a.samples)?;
    ensure!(!rows.is_empty(), "{} contains no samples", a.samples.display());
    let kp = KPosterior::from_pairs(rows.iter().map(|r| (r.k, r.k1)))?;
    let mut r = String::new();
    writeln!(r, "samples,{}", rows.len())?;
    writeln!(r, "mode_K,{}", kp.mode)?;
    writeln!(r, "mode_K1,{}", kp.k1_mode())?;
    if rows.len() >= IAT_MIN_LEN {
        let series: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
        let t = iat(&series)?;
        writeln!(r, "iat_K,{}", t.tau)?;
        writeln!(r, "iat_K_lags,{}", t.lags_used)?;
        writeln!(r, "iat_K_constant,{}", t.constant as u8)?;
    }

    writeln!(r, "\nK,P(K|x)")?;
    for (k, p) in &kp.k {
        writeln!(r, "{k},{p}")?;
    }
    writeln!(r, "\nK1,P(K1|x)")?;
    for (k, p) in &kp.k1 {
        writeln!(r, "{k},{p}")?;
    }

    writeln!(r, "\nmove,attempts,accepts,acceptance_rate")?;
    let manifest = a.manifest.as_deref().map(Manifest::read).transpose()?;
    let mut tallies: BTreeMap<MoveKind, (u64, u64)> = BTreeMap::new();
    match &manifest {
        Some(m) => {
            for kind in MoveKind::ALL {
                let get = |what: &str| -> u64 {
                    m.get(&format!("moves.{kind}.{what}")).and_then(|v| v.parse().ok()).unwrap_or(0)
                };
                tallies.insert(kind, (get("attempts"), get("accepts")));
            }
        }
        None => {
            for row in &rows {
                let e = tallies.entry(row.move_kind).or_default();
                e.0 += 1;
                e.1 += row.accepted as u64;
            }
        }
    }
    for (kind, (att, acc)) in &tallies {
        let rate = if *att == 0 { 0.0 } else { *acc as f64 / *att as f64 };
        writeln!(r, "{kind},{att},{acc},{rate}")?;
    }

    if let Some(zp) = &a.z {
        let trace = formats::read_ztrace(zp)?;
        ensure!(trace.len() == rows.len(), "z-trace has {} states but the sample file has {}", trace.len(), rows.len());
        if let Some(tp) = &a.truth {
            let truth = formats::read_labels(tp)?;
            let mut hits = 0usize;
            for z in trace.states() {
                hits += partition_equivalent(z, &truth)? as usize;
            }
            writeln!(r, "\nP(z_hat==truth|x),{}", hits as f64 / rows.len() as f64)?;
        }
        if let Some(np) = &a.network {
            let net = formats::read_network(np, a.graph.overrides())?;
            let hp = a.hp.resolve()?;
            ensure!(net.n_nodes() == trace.n_nodes, "network has {} nodes but the trace has {}", net.n_nodes(), trace.n_nodes);
            let states = || rows.iter().map(|r| r.k).zip(trace.states());
            let (k_hat, z_hat) = modal_state(states())?;
            let log2_px = estimate_log_px(states(), &net, &hp, k_hat, &z_hat)?;
            writeln!(r, "\nmodal_K,{k_hat}")?;
            writeln!(r, "modal_z,{}", z_hat.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "))?;
            writeln!(r, "log2_px_estimate,{log2_px}")?;
            if net.model() == EdgeModel::Binary {
                writeln!(r, "log2_px_uniform_baseline,{}", uniform_baseline_log2(&net))?;
                writeln!(r, "log2_px_erdos_renyi_baseline,{}", erdos_renyi_baseline_log2(&net)?)?;
            }
        }
    }
    emit(a.out.as_deref(), &r)
}

fn cmd_rerun(a: RerunArgs) -> Result<()> {
    let m = Manifest::read(&a.manifest)?;
    let args = m.args();
    ensure!(!args.is_empty(), "{} records no command line", a.manifest.display());
    ensure!(args[0] != "rerun", "refusing to rerun a rerun");
    run_from(std::iter::once("sbm".to_string()).chain(args))
}

/// Formats an error as one line: causes joined by `: `, whitespace collapsed.
pub fn one_line_error(e: &anyhow::Error) -> String {
    let text = format!("{e:#}");
    let line = text.split_whitespace().collect::<Vec<_>>().join(" ");
    line.strip_prefix("error: ").map(str::to_string).unwrap_or(line)
}
