use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bago_core::answer::{answers_via, bag_cert_with, parse_tuple};
use bago_core::bagalg::parse_balg;
use bago_core::chase::chase_with;
use bago_core::crosscheck::{batch, crosscheck_with};
use bago_core::ontology::{parse_abox, parse_tbox, BagABox};
use bago_core::par::{self, Execution};
use bago_core::rewrite::{rewrite_with, RewriteOptions};
use bago_core::three_col::{colouring_model, gen_3col, is_proper, parse_colouring, parse_graph, Variant};
use bago_core::{parse_cq, BagInterpretation, BagOntology, CertRequest, Error, TBox, Threshold, Via, CQ};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "bago",
    version,
    about = "Bag-semantics query answering over DL-Lite ontologies"
)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViaArg {
    Chase,
    Rewrite,
    Both,
}

impl From<ViaArg> for Via {
    fn from(v: ViaArg) -> Via {
        match v {
            ViaArg::Chase => Via::Chase,
            ViaArg::Rewrite => Via::Rewrite,
            ViaArg::Both => Via::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Core,
    #[value(name = "R")]
    R,
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability of an ontology.
    Check {
        #[arg(short = 'T', long)]
        tbox: PathBuf,
        #[arg(short = 'A', long)]
        abox: PathBuf,
    },
    /// Print the canonical model chased to a given depth.
    Chase {
        #[arg(short = 'T', long)]
        tbox: PathBuf,
        #[arg(short = 'A', long)]
        abox: PathBuf,
        #[arg(long)]
        depth: usize,
    },
    /// Compute the bag certain answers of a rooted CQ.
    Answer {
        #[arg(short = 'T', long)]
        tbox: PathBuf,
        #[arg(short = 'A', long)]
        abox: PathBuf,
        #[arg(short = 'q', long)]
        query: PathBuf,
        #[arg(long, value_enum, default_value = "chase")]
        via: ViaArg,
    },
    /// Decide whether a tuple's certain multiplicity reaches a threshold.
    Cert {
        #[arg(short = 'T', long)]
        tbox: PathBuf,
        #[arg(short = 'A', long)]
        abox: PathBuf,
        #[arg(short = 'q', long)]
        query: PathBuf,
        /// Tuple of individuals, e.g. "(Lee)" or "()".
        #[arg(long, default_value = "()")]
        tuple: String,
        /// Threshold: a decimal number or `inf`.
        #[arg(short = 'k', long)]
        threshold: Threshold,
        #[arg(long, value_enum, default_value = "chase")]
        via: ViaArg,
    },
    /// Compile a rooted CQ into a BALG query over the ABox.
    Rewrite {
        #[arg(short = 'T', long)]
        tbox: PathBuf,
        #[arg(short = 'q', long)]
        query: PathBuf,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        /// Print the realisability table as comment lines.
        #[arg(long)]
        explain: bool,
    },
    /// Evaluate a BALG query over an ABox.
    EvalBalg {
        #[arg(short = 'A', long)]
        abox: PathBuf,
        #[arg(short = 'q', long)]
        query: PathBuf,
    },
    /// Compare chase and rewriting answers.
    Crosscheck {
        #[arg(short = 'T', long, required_unless_present = "random")]
        tbox: Option<PathBuf>,
        #[arg(short = 'A', long, required_unless_present = "random")]
        abox: Option<PathBuf>,
        #[arg(short = 'q', long, required_unless_present = "random")]
        query: Option<PathBuf>,
        /// Number of random instances to generate instead.
        #[arg(long, conflicts_with_all = ["tbox", "abox", "query"])]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Emit the 3-colourability gadget for a graph.
    #[command(name = "gen-3col")]
    Gen3col {
        #[arg(short = 'G', long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "core")]
        variant: VariantArg,
        /// Directory receiving tbox.dl, abox.bag, query.cq and threshold.txt.
        #[arg(short = 'o', long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        coloring: Option<PathBuf>,
        /// Evaluate the query over the model built from --coloring.
        #[arg(long, requires = "coloring")]
        eval_model: bool,
    },
}

enum Failure {
    Engine(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

type Outcome = Result<ExitCode, Failure>;

const FALSE: u8 = 1;
const USAGE: u8 = 2;
const REFUSED: u8 = 3;
const MISMATCH: u8 = 4;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_tbox(path: &Path) -> Result<TBox, Failure> {
    Ok(parse_tbox(&read(path)?)?)
}

fn load_abox(path: &Path) -> Result<BagABox, Failure> {
    Ok(parse_abox(&read(path)?)?)
}

fn load_query(path: &Path) -> Result<CQ, Failure> {
    let q = parse_cq(&read(path)?)?;
    for w in q.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(q)
}

fn load_ontology(t: &Path, a: &Path) -> Result<BagOntology, Failure> {
    Ok(BagOntology::new(load_tbox(t)?, load_abox(a)?))
}

fn run(cli: Cli) -> Outcome {
    let exec = Execution::Auto;
    match cli.command {
        Command::Check { tbox, abox } => {
            let k = load_ontology(&tbox, &abox)?;
            if k.is_satisfiable() {
                println!("satisfiable");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("unsatisfiable");
                Ok(ExitCode::from(FALSE))
            }
        }
        Command::Chase { tbox, abox, depth } => {
            let k = load_ontology(&tbox, &abox)?;
            print!("{}", chase_with(&k, depth, exec)?.dump());
            Ok(ExitCode::SUCCESS)
        }
        Command::Answer { tbox, abox, query, via } => {
            let k = load_ontology(&tbox, &abox)?;
            let q = load_query(&query)?;
            print!("{}", answers_via(&q, &k, via.into(), exec)?.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Cert {
            tbox,
            abox,
            query,
            tuple,
            threshold,
            via,
        } => {
            let k = load_ontology(&tbox, &abox)?;
            let q = load_query(&query)?;
            let req = CertRequest::new(q, k, parse_tuple(&tuple)?, threshold)?;
            let holds = bag_cert_with(&req, via.into(), exec)?;
            println!("{holds}");
            Ok(if holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FALSE)
            })
        }
        Command::Rewrite {
            tbox,
            query,
            out,
            explain,
        } => {
            let t = load_tbox(&tbox)?;
            let q = load_query(&query)?;
            let options = RewriteOptions {
                exec,
                ..RewriteOptions::default()
            };
            let rw = rewrite_with(&q, &t, options)?;
            let mut text = String::new();
            if explain {
                for line in rw.explain().lines() {
                    text.push_str("# ");
                    text.push_str(line);
                    text.push('\n');
                }
            }
            text.push_str(&rw.document().to_text());
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalBalg { abox, query } => {
            let a = load_abox(&abox)?;
            let doc = parse_balg(&read(&query)?)?;
            print!("{}", doc.eval(&BagInterpretation::from_abox(&a))?.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Crosscheck {
            tbox,
            abox,
            query,
            random,
            seed,
        } => {
            if let Some(n) = random {
                let report = batch(seed, n, exec);
                println!("{report}");
                return Ok(if report.failed() == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(MISMATCH)
                });
            }
            let (t, a, q) = (tbox.unwrap(), abox.unwrap(), query.unwrap());
            let k = load_ontology(&t, &a)?;
            let q = load_query(&q)?;
            match crosscheck_with(&q, &k, exec) {
                bago_core::crosscheck::Outcome::Error(e) => Err(e.into()),
                o => {
                    println!("{o}");
                    Ok(if o.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(MISMATCH)
                    })
                }
            }
        }
        Command::Gen3col {
            graph,
            variant,
            out_dir,
            coloring,
            eval_model,
        } => {
            let g = parse_graph(&read(&graph)?)?;
            let variant = match variant {
                VariantArg::Core => Variant::Core,
                VariantArg::R => Variant::R,
            };
            let gadget = gen_3col(&g, variant);
            let tuple = format!("({})", gadget.tuple.join(","));
            let files = [
                ("tbox.dl", gadget.tbox.to_text()),
                ("abox.bag", gadget.abox.to_text()),
                ("query.cq", format!("{}\n", gadget.query.to_text())),
                ("threshold.txt", format!("{tuple} {}\n", gadget.threshold)),
            ];
            match &out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.clone(), e))?;
                    for (name, text) in &files {
                        write(&dir.join(name), text)?;
                    }
                }
                None => {
                    for (name, text) in &files {
                        print!("# {name}\n{text}");
                    }
                }
            }
            if let Some(path) = coloring {
                let c = parse_colouring(&read(&path)?, &g)?;
                if eval_model {
                    if variant == Variant::R {
                        return Err(Error::UnsupportedTBoxKind.into());
                    }
                    let m = colouring_model(&g, &c);
                    let value = bago_core::bagalg::eval_cq(&gadget.query, &m)?.get::<&str>(&[]);
                    let proper = is_proper(&g, &c);
                    println!(
                        "model value {value} ({} colouring, threshold {})",
                        if proper { "proper" } else { "improper" },
                        gadget.threshold
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || !par::init_threads(n) {
            eprintln!("warning: --threads {n} ignored");
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Io(path, e)) => {
            eprintln!("error: {}: {e}", path.display());
            ExitCode::from(USAGE)
        }
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ViaMismatch(_) => MISMATCH,
                e if e.is_semantic_refusal() => REFUSED,
                Error::MultiplicityOverflow(_) => REFUSED,
                _ => USAGE,
            };
            ExitCode::from(code)
        }
    }
}
