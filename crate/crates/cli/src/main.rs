//! `kgsc`: compile N3 decision rules to Solidity, run the interpreter, and check it against the rules.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgsc_core::backend::{emit_pseudocode, emit_solidity, PseudoOptions, SolidityOptions};
use kgsc_core::compile::{compile, Compilation};
use kgsc_core::interp::{execute_contract, generate_fixture, oracle_check, Fixture};
use kgsc_core::ir::{deserialize, serialize, validate, BridgeProgram};
use kgsc_core::logic::LogicOptions;

#[derive(Parser)]
#[command(name = "kgsc", version, about = "Compile N3 decision rules into smart contracts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile rules and write contract, pseudocode, manifest and bridge IR.
    Compile {
        #[command(flatten)]
        input: Input,
        /// Artifacts to write (repeatable); all of them by default.
        #[arg(long, value_enum, value_delimiter = ',')]
        target: Vec<Target>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "Contract1")]
        contract: String,
    },
    /// Execute a compiled program on a fixture and print the transcript as JSON lines.
    Run {
        /// Bridge IR produced by `compile`; compiled from --rules/--ontology when omitted.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long, conflicts_with = "seed")]
        fixture: Option<PathBuf>,
        /// Generate fixtures from this seed instead of reading one (needs --rules/--ontology).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeded fixtures, starting at --seed.
        #[arg(long, default_value_t = 1, requires = "seed")]
        count: u64,
        /// Also evaluate the rules directly and compare emitted events (needs --rules/--ontology).
        #[arg(long)]
        oracle_check: bool,
        #[arg(long, requires = "ontology")]
        rules: Option<PathBuf>,
        #[arg(long, requires = "rules")]
        ontology: Option<PathBuf>,
        #[arg(long)]
        no_requests: bool,
    },
    /// Write the rule graphs in chain order as Graphviz DOT.
    Graph {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Report restriction violations without writing anything.
    Check {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    /// Treat cg:request blocks as ordinary body patterns.
    #[arg(long)]
    no_requests: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Solidity,
    BridgeJson,
    Pseudocode,
}

enum Failure {
    /// Bad invocation or unreadable input.
    Usage(String),
    /// Compilation, runtime, or equivalence failure.
    Semantic(String),
}

impl From<kgsc_core::Error> for Failure {
    fn from(e: kgsc_core::Error) -> Self {
        Failure::Semantic(format!("error: {e}"))
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("error: cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Semantic(format!("error: cannot write {}: {e}", path.display())))
}

fn compile_input(rules: &Path, ontology: &Path, no_requests: bool) -> CliResult<Compilation> {
    Ok(compile(&read(rules)?, &read(ontology)?, LogicOptions { requests: !no_requests })?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Semantic(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Compile { input, target, out, contract } => {
            let c = compile_input(&input.rules, &input.ontology, input.no_requests)?;
            let targets = if target.is_empty() {
                vec![Target::Solidity, Target::BridgeJson, Target::Pseudocode]
            } else {
                target
            };
            fs::create_dir_all(&out)
                .map_err(|e| Failure::Semantic(format!("error: cannot create {}: {e}", out.display())))?;
            for t in targets {
                match t {
                    Target::Solidity => {
                        let sol = emit_solidity(&c.program, &SolidityOptions { contract_name: contract.clone() })?;
                        for w in &sol.manifest.warnings {
                            eprintln!("warning: {w}");
                        }
                        write(&out.join(format!("{contract}.sol")), &sol.source)?;
                        let manifest = serde_json::to_string_pretty(&sol.manifest).expect("manifest serializes");
                        write(&out.join("manifest.json"), &format!("{manifest}\n"))?;
                    }
                    Target::BridgeJson => write(&out.join("bridge.json"), &serialize(&c.program))?,
                    Target::Pseudocode => write(
                        &out.join(format!("{contract}.pseudo.txt")),
                        &emit_pseudocode(&c.program, PseudoOptions::full()),
                    )?,
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { program, fixture, seed, count, oracle_check: check, rules, ontology, no_requests } => {
            let comp = match (&rules, &ontology) {
                (Some(r), Some(o)) => Some(compile_input(r, o, no_requests)?),
                _ => None,
            };
            let program: BridgeProgram = match (&program, &comp) {
                (Some(p), _) => {
                    let p = deserialize(&read(p)?)?;
                    if let Some(d) = validate(&p).into_iter().next() {
                        return Err(Failure::Semantic(format!("error: {d}")));
                    }
                    p
                }
                (None, Some(c)) => c.program.clone(),
                (None, None) => return Err(Failure::Usage("error: run needs --program or --rules with --ontology".into())),
            };
            if (check || seed.is_some()) && comp.is_none() {
                return Err(Failure::Usage("error: --oracle-check and --seed need --rules and --ontology".into()));
            }
            let fixtures: Vec<(String, Fixture)> = match (&fixture, seed) {
                (Some(f), _) => vec![(f.display().to_string(), Fixture::from_json(&read(f)?)?)],
                (None, Some(s)) => {
                    let c = comp.as_ref().expect("checked above");
                    (s..s + count)
                        .map(|i| generate_fixture(c, i).map(|f| (format!("seed {i}"), f)))
                        .collect::<kgsc_core::Result<_>>()?
                }
                (None, None) => return Err(Failure::Usage("error: run needs --fixture or --seed".into())),
            };
            let mut mismatches = 0;
            for (name, fx) in &fixtures {
                if check {
                    let mut c = comp.clone().expect("checked above");
                    c.program = program.clone();
                    let (t, _, cmp) = oracle_check(&c, fx)?;
                    print!("{}", t.to_json_lines());
                    eprintln!("{name}: {}", cmp.report());
                    mismatches += usize::from(!cmp.is_match());
                } else {
                    print!("{}", execute_contract(&program, fx)?.to_json_lines());
                }
                if seed.is_some() {
                    eprintln!("{name}: {}", fx.to_json());
                }
            }
            if mismatches > 0 {
                return Err(Failure::Semantic(format!("error: {mismatches} of {} fixtures mismatched", fixtures.len())));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Graph { input, dot } => {
            let c = compile_input(&input.rules, &input.ontology, input.no_requests)?;
            let text: String = c.graphs.iter().map(|g| g.to_dot()).collect();
            write(&dot, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { input } => {
            let c = compile_input(&input.rules, &input.ontology, input.no_requests)?;
            for w in &c.ontology.warnings {
                eprintln!("warning: {w}");
            }
            println!("ok: {} rules", c.graphs.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}
