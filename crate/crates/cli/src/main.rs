use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hypergeo::corpus::{load_problem, load_system};
use hypergeo::eval::{eval_pssr, eval_tpa};
use hypergeo::hypergraph::{build_hypergraph, generate_step_samples, render_solution, serialize_for_predictor};
use hypergeo::lang::Tokenizer;
use hypergeo::search::protocol::serve;
use hypergeo::search::{FrequencyPredictor, OraclePredictor, Predictor, RandomPredictor, RemotePredictor};
use hypergeo::{pac_solve, Corpus, FormalSystem, Problem, Rational, SearchConfig, SearchStatus, StepSample, Strategy};

#[derive(Parser)]
#[command(name = "hypergeo", version, about = "Geometry problem solver driven by theorem prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct SearchArgs {
    #[arg(long, default_value = "gb")]
    strategy: Strategy,
    #[arg(long, default_value_t = 1)]
    beam_size: usize,
    /// Per-problem time limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// `random`, `freq`, `oracle` or `remote:HOST:PORT`.
    #[arg(long, default_value = "oracle")]
    predictor: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print the theorem sequence.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Problems whose annotations feed the frequency predictor.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Print a numbered human-readable solution.
        #[arg(long)]
        render: bool,
        /// Write the final hypergraph, as sent to predictors, to FILE.
        #[arg(long, value_name = "FILE")]
        dump_hypergraph: Option<PathBuf>,
    },
    /// Write step samples of every annotated solution as NDJSON.
    GenData {
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the theorem and token vocabulary as JSON.
    GenVocab {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    #[command(subcommand)]
    Eval(Eval),
    /// Answer predictor requests over TCP with a baseline predictor.
    ServeBaseline {
        kind: Baseline,
        #[arg(long)]
        addr: String,
        /// Corpus whose annotations give the frequency scores.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Eval {
    /// Theorem prediction accuracy over step samples.
    Tpa {
        corpus: PathBuf,
        /// NDJSON samples; generated from the corpus when absent.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long, default_value = "oracle")]
        predictor: String,
        #[arg(short, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Problem-solving success rate, overall and by level.
    Pssr {
        corpus: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Random,
    Freq,
}

fn make_predictor(choice: &str, system: &Arc<FormalSystem>, problems: &[Problem], seed: u64) -> Result<Box<dyn Predictor>> {
    Ok(match choice {
        "random" => Box::new(RandomPredictor::new(system.theorem_count(), seed)),
        "freq" => Box::new(FrequencyPredictor::new(system, problems)),
        "oracle" => Box::new(OraclePredictor::new(system.clone(), problems)),
        _ => match choice.strip_prefix("remote:") {
            Some(addr) => Box::new(
                RemotePredictor::connect(addr, &system.theorem_names()).with_context(|| format!("connecting to {addr}"))?,
            ),
            None => bail!("unknown predictor `{choice}`"),
        },
    })
}

fn config(args: &SearchArgs, tokenizer: Tokenizer) -> Result<SearchConfig> {
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        bail!("timeout must be positive");
    }
    Ok(SearchConfig {
        strategy: args.strategy,
        beam_size: args.beam_size,
        timeout: Duration::from_secs_f64(args.timeout),
        seed: args.seed,
        tokenizer,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn solve(
    problem: &Path,
    system: &Path,
    search: &SearchArgs,
    corpus: Option<&Path>,
    render: bool,
    dump: Option<&Path>,
) -> Result<ExitCode> {
    let system = Arc::new(load_system(system).with_context(|| format!("loading {}", system.display()))?);
    let problem = load_problem(problem, &system).with_context(|| format!("loading {}", problem.display()))?;
    let mut known = vec![problem.clone()];
    if let Some(dir) = corpus {
        known = Corpus::load(dir)?.problems;
        if !known.iter().any(|p| p.id == problem.id) {
            known.push(problem.clone());
        }
    }
    let mut predictor = make_predictor(&search.predictor, &system, &known, search.seed)?;
    let cfg = config(search, Tokenizer::open())?;
    let result = pac_solve::<Rational>(&system, &problem, predictor.as_mut(), &cfg)?;
    eprintln!("{:?} in {:.3}s, {} expanded", result.status, result.elapsed.as_secs_f64(), result.expanded);
    if let Some(e) = &result.error {
        eprintln!("predictor: {e}");
    }
    let Some(state) = &result.state else {
        return Ok(ExitCode::from(1));
    };
    for name in &result.theorem_seqs {
        println!("{name}");
    }
    let h = build_hypergraph(state);
    if render {
        print!("{}", render_solution(&h)?);
    }
    if let Some(path) = dump {
        let mut w = create(path)?;
        serde_json::to_writer(&mut w, &serialize_for_predictor(&h, &cfg.tokenizer))?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(if result.status == SearchStatus::Solved { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn gen_data(corpus: &Path, seed: u64, out: &Path) -> Result<()> {
    let corpus = Corpus::load(corpus)?;
    let tokenizer = corpus.tokenizer();
    let mut w = create(out)?;
    let mut count = 0;
    for (i, p) in corpus.problems.iter().enumerate() {
        // distinct but reproducible orders per problem
        let samples = generate_step_samples::<Rational>(&corpus.system, p, seed.wrapping_add(i as u64), &tokenizer)
            .with_context(|| format!("problem {}", p.id))?;
        for s in &samples {
            serde_json::to_writer(&mut w, s)?;
            writeln!(w)?;
        }
        count += samples.len();
    }
    w.flush()?;
    eprintln!("{count} samples from {} problems", corpus.problems.len());
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<StepSample>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
        }
    }
    Ok(out)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn serve_baseline(kind: Baseline, addr: &str, corpus: Option<&Path>, seed: u64) -> Result<()> {
    let freq = match (kind, corpus) {
        (Baseline::Freq, Some(dir)) => Some(Corpus::load(dir)?),
        (Baseline::Freq, None) => bail!("serve-baseline freq needs --corpus"),
        (Baseline::Random, _) => None,
    };
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    let mut connection = 0u64;
    serve(listener, move |theorems: &[String]| -> Result<Box<dyn Predictor>, String> {
        connection += 1;
        match &freq {
            None => Ok(Box::new(RandomPredictor::new(theorems.len(), seed.wrapping_add(connection)))),
            Some(c) if c.system.theorem_names() == theorems => Ok(Box::new(FrequencyPredictor::new(&c.system, &c.problems))),
            Some(_) => Err("theorem vocabulary differs from the served corpus".into()),
        }
    })?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { problem, system, search, corpus, render, dump_hypergraph } => {
            solve(&problem, &system, &search, corpus.as_deref(), render, dump_hypergraph.as_deref())
        }
        Command::GenData { corpus, seed, out } => gen_data(&corpus, seed, &out).map(|_| ExitCode::SUCCESS),
        Command::GenVocab { corpus, out } => {
            let vocab = Corpus::load(&corpus)?.vocab();
            fs::write(&out, serde_json::to_string_pretty(&vocab)? + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(Eval::Tpa { corpus, samples, predictor, k, seed }) => {
            let corpus = Corpus::load(&corpus)?;
            let samples = match samples {
                Some(path) => read_samples(&path)?,
                None => {
                    let tokenizer = corpus.tokenizer();
                    let mut all = Vec::new();
                    for (i, p) in corpus.problems.iter().enumerate() {
                        all.extend(generate_step_samples::<Rational>(&corpus.system, p, seed.wrapping_add(i as u64), &tokenizer)?);
                    }
                    all
                }
            };
            let mut p = make_predictor(&predictor, &corpus.system, &corpus.problems, seed)?;
            print_json(&eval_tpa(&corpus.system, &samples, p.as_mut(), k)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(Eval::Pssr { corpus, search }) => {
            let corpus = Corpus::load(&corpus)?;
            let mut p = make_predictor(&search.predictor, &corpus.system, &corpus.problems, search.seed)?;
            let cfg = config(&search, corpus.tokenizer())?;
            print_json(&eval_pssr::<Rational>(&corpus.system, &corpus.problems, p.as_mut(), &cfg)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ServeBaseline { kind, addr, corpus, seed } => {
            serve_baseline(kind, &addr, corpus.as_deref(), seed).map(|_| ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
