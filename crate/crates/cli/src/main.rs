mod load;
mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use specinfer::automaton::sample_random_traces;
use specinfer::concept::{LatticeOptions, OnceConjuncts, PairMode};
use specinfer::infer::{brute_force_map, partial_order_inference, DemoLanes, SearchOptions};
use specinfer::posterior::{j_score, posterior_score, BetaPriorConfig};
use specinfer::ptltl::parse;
use specinfer::satprob::DEFAULT_ENUMERATION_BUDGET;
use specinfer::{
    Alphabet, Backend, ConceptLattice, DemoSet, Error, Formula, GrammarConfig, SatQueryEngine, SatStats,
    ScoreMode,
};

use crate::load::{ClassFile, Generated};
use crate::report::*;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 3;
const EXIT_INCONSISTENT_MODEL: u8 = 4;
const EXIT_BUDGET: u8 = 5;

/// Infers temporal task specifications from demonstrations.
#[derive(Parser)]
#[command(name = "specinfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate a grammar and build its Hasse diagram.
    GenClass(GenClassArgs),
    /// Find the maximum-a-posteriori specification.
    Infer(InferArgs),
    /// Score one formula.
    Score(ScoreArgs),
    /// Write demonstrations, random or from gridworld move strings.
    SampleDemos(SampleArgs),
    /// Write a concept class as a Graphviz graph.
    HasseExport(HasseArgs),
}

#[derive(Args)]
struct WorldArgs {
    /// Gridworld text file or automaton JSON.
    #[arg(long)]
    world: PathBuf,
    /// Probability that a gridworld action is replaced by a random one.
    #[arg(long, default_value_t = 0.0)]
    slip: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Full,
    CaseStudy,
    LiteralsOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairs {
    All,
    DistinctLiterals,
    DistinctProps,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnceConj {
    Off,
    Antecedent,
    Everywhere,
}

#[derive(Args)]
struct GrammarArgs {
    #[arg(long, value_enum, default_value = "case-study")]
    grammar: Preset,
    /// Comma-separated propositions; defaults to the world's, else the
    /// gridworld colors.
    #[arg(long, value_delimiter = ',')]
    props: Option<Vec<String>>,
    #[arg(long)]
    historically: Option<bool>,
    #[arg(long)]
    once: Option<bool>,
    #[arg(long)]
    implications: Option<bool>,
    #[arg(long)]
    identical_implications: Option<bool>,
    #[arg(long)]
    conjunctions: Option<bool>,
    #[arg(long)]
    since: Option<bool>,
    #[arg(long)]
    negated_literals: Option<bool>,
    #[arg(long)]
    since_in_antecedents: Option<bool>,
    #[arg(long, value_enum)]
    pairs: Option<Pairs>,
    #[arg(long, value_enum)]
    once_conjuncts: Option<OnceConj>,
}

impl GrammarArgs {
    fn config(&self, default_alphabet: Option<&Alphabet>) -> Result<GrammarConfig> {
        let alphabet = match (&self.props, default_alphabet) {
            (Some(p), _) => Alphabet::new(p.iter().map(|s| s.trim()))?,
            (None, Some(a)) => a.clone(),
            (None, None) => Alphabet::new(["yellow", "red", "blue", "brown"])?,
        };
        if alphabet.is_empty() {
            return Err(Error::InvalidInput("grammar alphabet is empty".into()).into());
        }
        let mut g = match self.grammar {
            Preset::Full => GrammarConfig::full(alphabet),
            Preset::CaseStudy => GrammarConfig::case_study(alphabet),
            Preset::LiteralsOnly => GrammarConfig::literals_only(alphabet),
        };
        let toggles = [
            (self.historically, &mut g.historically),
            (self.once, &mut g.once),
            (self.implications, &mut g.implications),
            (self.identical_implications, &mut g.identical_implications),
            (self.conjunctions, &mut g.conjunctions),
            (self.since, &mut g.since),
            (self.negated_literals, &mut g.negated_literals),
            (self.since_in_antecedents, &mut g.since_in_antecedents),
        ];
        for (value, field) in toggles {
            if let Some(v) = value {
                *field = v;
            }
        }
        if let Some(p) = self.pairs {
            g.pairs = match p {
                Pairs::All => PairMode::All,
                Pairs::DistinctLiterals => PairMode::DistinctLiterals,
                Pairs::DistinctProps => PairMode::DistinctProps,
            };
        }
        if let Some(o) = self.once_conjuncts {
            g.once_conjuncts = match o {
                OnceConj::Off => OnceConjuncts::Off,
                OnceConj::Antecedent => OnceConjuncts::Antecedent,
                OnceConj::Everywhere => OnceConjuncts::Everywhere,
            };
        }
        if !g.historically && !g.once {
            return Err(Error::InvalidInput("grammar needs H or P at the top".into()).into());
        }
        Ok(g)
    }
}

#[derive(Args)]
struct ClassArgs {
    #[command(flatten)]
    grammar: GrammarArgs,
    /// Load this concept class instead of generating one.
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long, default_value = ".specinfer-cache")]
    cache_dir: PathBuf,
    #[arg(long)]
    no_cache: bool,
    /// Threads for lattice construction and queries.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl ClassArgs {
    fn resolve(&self, horizon: usize, alphabet: Option<&Alphabet>) -> Result<Generated> {
        if let Some(path) = &self.lattice {
            let file = ClassFile::load(path)?;
            if file.horizon != horizon {
                return Err(Error::InvalidInput(format!(
                    "concept class was built for horizon {}, not {horizon}",
                    file.horizon
                ))
                .into());
            }
            if alphabet.is_some_and(|a| *a != file.alphabet) {
                return Err(Error::InvalidInput("concept class alphabet differs from the world's".into()).into());
            }
            let lattice = file.lattice()?;
            return Ok(Generated {
                file,
                lattice,
                build: None,
                cache_path: Some(path.clone()),
            });
        }
        let grammar = self.grammar.config(alphabet)?;
        let opts = LatticeOptions {
            workers: self.workers.max(1),
            ..LatticeOptions::default()
        };
        let cache = (!self.no_cache).then_some(self.cache_dir.as_path());
        load::generate(&grammar, horizon, cache, &opts)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Enumeration,
    DecisionDiagram,
    MonteCarlo,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "decision-diagram")]
    backend: BackendKind,
    /// Run budget of the enumeration backend.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// Sample count of the Monte-Carlo backend.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BackendArgs {
    fn backend(&self) -> Result<Backend> {
        Ok(match self.backend {
            BackendKind::Enumeration => {
                if self.budget == 0 {
                    return Err(Error::InvalidInput("--budget must be positive".into()).into());
                }
                Backend::Enumeration { budget: self.budget }
            }
            BackendKind::DecisionDiagram => Backend::DecisionDiagram,
            BackendKind::MonteCarlo => {
                if self.samples == 0 {
                    return Err(Error::InvalidInput("--samples must be positive".into()).into());
                }
                Backend::MonteCarlo {
                    samples: self.samples,
                    seed: self.seed,
                }
            }
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Brute,
    Lattice,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeKind {
    Indicator,
    Beta,
}

#[derive(Args)]
struct GenClassArgs {
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    horizon: usize,
    /// Also write the class here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long)]
    demos: PathBuf,
    /// Must match the demonstrations when given.
    #[arg(long)]
    horizon: Option<usize>,
    #[command(flatten)]
    class: ClassArgs,
    /// Known requirements conjoined with every candidate.
    #[arg(long)]
    context: Option<String>,
    #[arg(long, value_enum, default_value = "lattice")]
    algorithm: Algorithm,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, value_enum, default_value = "indicator")]
    mode: ModeKind,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Re-score specs the lattice search skipped.
    #[arg(long)]
    audit: bool,
    /// CSV of every computed query.
    #[arg(long)]
    query_log: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long)]
    demos: PathBuf,
    #[arg(long)]
    formula: String,
    #[arg(long)]
    context: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Trace length of random demonstrations.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gridworld move string such as `NEES`, once per demonstration.
    #[arg(long)]
    moves: Vec<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HasseArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Needed unless `--lattice` is given.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenClass(a) => gen_class(a),
        Command::Infer(a) => infer(a),
        Command::Score(a) => score(a),
        Command::SampleDemos(a) => sample_demos(a),
        Command::HasseExport(a) => hasse_export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return EXIT_FAILURE;
    };
    match err {
        Error::InconsistentModel(_) => EXIT_INCONSISTENT_MODEL,
        Error::BudgetExceeded(_) => EXIT_BUDGET,
        Error::Io(_) => EXIT_FAILURE,
        _ => EXIT_INVALID_INPUT,
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

fn parse_context(text: Option<&str>, alphabet: &Alphabet) -> Result<Option<Formula>> {
    Ok(text.map(|c| parse(c, alphabet)).transpose()?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => load::write(p, text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn gen_class(a: GenClassArgs) -> Result<()> {
    if a.horizon == 0 {
        return Err(Error::InvalidInput("--horizon must be positive".into()).into());
    }
    let generated = a.class.resolve(a.horizon, None)?;
    let c = &generated.file.counts;
    println!("derivations: {}", c.derivations);
    println!("syntactic: {}", c.syntactic);
    println!("non-false: {}", c.non_false);
    println!("tautologies: {}", c.tautologies);
    println!("semantic classes: {} (with false and true)", c.classes);
    println!("edges: {}", c.edges);
    match &generated.build {
        Some(b) => {
            println!("subset checks: {} ({} on decision diagrams)", b.candidate_pairs, b.diagram_checks);
            println!("build seconds: {:.3}", b.seconds);
        }
        None => println!("subset checks: 0"),
    }
    if let Some(p) = &generated.cache_path {
        let state = if generated.build.is_some() { "written" } else { "hit" };
        println!("cache: {state} {}", p.display());
    }
    if let Some(out) = &a.output {
        load::write(out, &generated.file.to_json()?)?;
    }
    Ok(())
}

fn score_mode(kind: ModeKind, alpha: f64, beta: f64) -> Result<ScoreMode> {
    Ok(match kind {
        ModeKind::Indicator => ScoreMode::Indicator,
        ModeKind::Beta => ScoreMode::Beta(BetaPriorConfig::new(alpha, beta)?),
    })
}

fn check_horizon(demos: &DemoSet, horizon: Option<usize>) -> Result<usize> {
    match horizon {
        Some(h) if h != demos.horizon() => Err(Error::InvalidInput(format!(
            "--horizon {h} differs from the demonstrations' horizon {}",
            demos.horizon()
        ))
        .into()),
        _ => Ok(demos.horizon()),
    }
}

fn infer(a: InferArgs) -> Result<()> {
    let started = unix_now();
    let world = load::load_world(&a.world.world, a.world.slip)?;
    let m = &world.automaton;
    let demos = load::load_demos(&a.demos, m)?;
    let horizon = check_horizon(&demos, a.horizon)?;
    let mode = score_mode(a.mode, a.alpha, a.beta)?;
    let backend = a.backend.backend()?;
    let context = parse_context(a.context.as_deref(), m.alphabet())?;

    let class_start = Instant::now();
    let generated = a.class.resolve(horizon, Some(m.alphabet()))?;
    let class_seconds = class_start.elapsed().as_secs_f64();
    let lattice: ConceptLattice = generated.lattice.with_context(context.clone());

    let lanes = DemoLanes::new(&demos, m)?;
    let mut engine = SatQueryEngine::new(m, horizon, backend)?;
    let result = match a.algorithm {
        Algorithm::Brute => brute_force_map(&lattice, &lanes, &mut engine, mode, a.top_k)?,
        Algorithm::Lattice => {
            let opts = SearchOptions {
                top_k: a.top_k,
                audit: a.audit,
                workers: a.class.workers.max(1),
            };
            partial_order_inference(&lattice, &lanes, &mut engine, mode, &opts)?
        }
    };
    let stats = engine.query_stats();

    let queries = result.queries_issued.max(1) as f64;
    let record = InferRecord {
        algorithm: match a.algorithm {
            Algorithm::Brute => "brute",
            Algorithm::Lattice => "lattice",
        },
        backend: backend.name(),
        mode: mode.name(),
        horizon,
        context: context.as_ref().map(ToString::to_string),
        best_spec: result.best_spec.to_string(),
        scored_spec: result.best_spec.with_context(context.as_ref()).to_string(),
        best_score: score_value(result.best_score),
        n_sat: result.stats.n_sat,
        n_total: result.stats.n_total,
        rand_rate: result.stats.rand_rate,
        class_size: lattice.len(),
        specs_scored: result.specs_scored,
        queries_issued: result.queries_issued,
        oracle_computations: result.oracle_computations,
        cache_hits: stats.cache_hits,
        query_fraction: result.queries_issued as f64 / lattice.len() as f64,
        query_speedup: lattice.len() as f64 / queries,
        ranking: result.ranking.iter().map(Into::into).collect(),
        audit: result.audit.as_ref().map(Into::into),
    };
    let report = InferReport {
        result: record,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION"),
            started_unix_seconds: started,
            wall_time_seconds: result.wall_time.as_secs_f64(),
            class_seconds,
            mean_query_seconds: stats.mean_query_seconds,
            stddev_query_seconds: stats.stddev_query_seconds,
            workers: a.class.workers.max(1),
        },
    };

    let r = &report.result;
    println!("winner: {}", r.best_spec);
    if context.is_some() {
        println!("scored as: {}", r.scored_spec);
    }
    println!(
        "score: {}  (N = {}/{}, random rate {:.6e})",
        r.best_score, r.n_sat, r.n_total, r.rand_rate
    );
    println!(
        "queries: {} of {} specs ({:.1}%), {:.2}x fewer than brute force",
        r.queries_issued,
        r.class_size,
        100.0 * r.query_fraction,
        r.query_speedup
    );
    println!(
        "wall time: {:.3} s search, {:.3} s concept class, {:.4} s/query",
        report.metadata.wall_time_seconds, class_seconds, stats.mean_query_seconds
    );
    if let Some(audit) = &r.audit {
        println!("audit: {} skipped, {} violations", audit.skipped, audit.violations.len());
    }

    if let Some(path) = &a.output {
        load::write(path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    }
    if let Some(path) = &a.query_log {
        let mut w = csv::Writer::from_writer(Vec::new());
        for q in engine.query_log() {
            w.serialize(q)?;
        }
        let bytes = w.into_inner().context("flushing query log")?;
        load::write(path, std::str::from_utf8(&bytes)?)?;
    }
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let world = load::load_world(&a.world.world, a.world.slip)?;
    let m = &world.automaton;
    let demos = load::load_demos(&a.demos, m)?;
    let formula = parse(&a.formula, m.alphabet())?;
    let context = parse_context(a.context.as_deref(), m.alphabet())?;
    let scored = formula.with_context(context.as_ref());
    let beta = BetaPriorConfig::new(a.alpha, a.beta)?;

    let lanes = DemoLanes::new(&demos, m)?;
    let n_sat = lanes.count(&specinfer::ptltl::Monitor::compile(&scored, m.alphabet())?);
    let mut engine = SatQueryEngine::new(m, demos.horizon(), a.backend.backend()?)?;
    let rand_rate = engine.query(&scored)?;
    let stats = SatStats::new(n_sat, demos.len(), rand_rate)?;
    let gain = j_score(n_sat, demos.len(), rand_rate);
    let record = ScoreRecord {
        spec: formula.to_string(),
        scored_spec: scored.to_string(),
        n_sat,
        n_total: demos.len(),
        empirical_rate: stats.empirical_rate,
        rand_rate,
        information_gain: score_value(gain),
        scores: ModeScores {
            indicator: score_value(posterior_score(&stats, &ScoreMode::Indicator)),
            beta: score_value(posterior_score(&stats, &ScoreMode::Beta(beta))),
        },
        beta_prior: BetaRecord {
            alpha: a.alpha,
            beta: a.beta,
        },
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    if gain == f64::INFINITY {
        return Err(Error::InconsistentModel(format!(
            "{n_sat} demonstrations satisfy a formula a random agent satisfies with probability 0"
        ))
        .into());
    }
    Ok(())
}

fn sample_demos(a: SampleArgs) -> Result<()> {
    let world = load::load_world(&a.world.world, a.world.slip)?;
    let demos = if a.moves.is_empty() {
        let horizon = a
            .horizon
            .ok_or_else(|| Error::InvalidInput("--horizon is required for random demonstrations".into()))?;
        sample_random_traces(&world.automaton, horizon, a.count, a.seed)?
    } else {
        let grid = world
            .grid
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("--moves needs a gridworld world file".into()))?;
        let traces = a
            .moves
            .iter()
            .map(|mv| grid.trace_from_moves(mv))
            .collect::<specinfer::Result<Vec<_>>>()?;
        let horizon = traces[0].horizon();
        let demos = DemoSet::new(horizon, traces)?;
        check_horizon(&demos, a.horizon)?;
        demos
    };
    emit(a.output.as_deref(), &(demos.to_json()? + "\n"))
}

fn hasse_export(a: HasseArgs) -> Result<()> {
    let horizon = match (&a.class.lattice, a.horizon) {
        (Some(p), h) => {
            let file_horizon = ClassFile::load(p)?.horizon;
            h.unwrap_or(file_horizon)
        }
        (None, Some(h)) if h > 0 => h,
        _ => return Err(Error::InvalidInput("--horizon (positive) or --lattice is required".into()).into()),
    };
    let generated = a.class.resolve(horizon, None)?;
    emit(a.output.as_deref(), &generated.lattice.to_dot())
}
