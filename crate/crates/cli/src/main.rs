use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_prune::{AdmissibleFamily, FamilySpec, Mechanism};
use levy_prune_cli::{experiments, ExperimentConfig, RunError, CATALOG};

#[derive(Parser)]
#[command(name = "levyprune", version, about = "Levy tree pruning: mechanisms, families and verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a branching mechanism.
    #[command(subcommand)]
    Mech(MechCommand),
    /// Inspect an admissible family.
    #[command(subcommand)]
    Family(FamilyCommand),
    /// Run a verification experiment and write its CSV.
    Verify {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the replicate count of the config file.
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// List the built-in experiments.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct MechArg {
    /// Mechanism as inline JSON or a path to a JSON file.
    #[arg(long)]
    mech: String,
}

#[derive(Subcommand)]
enum MechCommand {
    /// psi and its first two derivatives.
    Eval {
        #[command(flatten)]
        m: MechArg,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// psi^{-1}(y) on [eta, inf).
    Invert {
        #[command(flatten)]
        m: MechArg,
        #[arg(long, value_delimiter = ',', required = true)]
        value: Vec<f64>,
    },
    /// v(a) = N[H > a].
    V {
        #[command(flatten)]
        m: MechArg,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
    },
    /// u(a, lambda).
    U {
        #[command(flatten)]
        m: MechArg,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long)]
        lambda: f64,
    },
}

#[derive(Args)]
struct FamilyArg {
    /// Family as inline JSON or a path to a JSON file.
    #[arg(long)]
    family: String,
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<f64>,
}

#[derive(Subcommand)]
enum FamilyCommand {
    /// Coefficients, eta_q and psi_q on a grid.
    Table {
        #[command(flatten)]
        f: FamilyArg,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        lambda: Vec<f64>,
    },
    /// Admissibility conditions on a grid.
    Check {
        #[command(flatten)]
        f: FamilyArg,
        #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        sizes: Vec<f64>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T, RunError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| RunError::Config(format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| RunError::Config(format!("malformed JSON: {e}")))
}

fn mechanism(m: &MechArg) -> Result<Mechanism, RunError> {
    read_json(&m.mech)
}

fn family(f: &FamilyArg) -> Result<AdmissibleFamily, RunError> {
    let spec: FamilySpec = read_json(&f.family)?;
    AdmissibleFamily::from_spec(&spec).map_err(|e| RunError::Config(format!("invalid family: {e}")))
}

fn mech_command(cmd: MechCommand) -> Result<bool, RunError> {
    match cmd {
        MechCommand::Eval { m, lambda } => {
            let m = mechanism(&m)?;
            println!("lambda,psi,psi_d1,psi_d2");
            for l in lambda {
                println!("{l},{},{},{}", m.psi(l)?, m.psi_d1(l)?, m.psi_d2(l)?);
            }
        }
        MechCommand::Invert { m, value } => {
            let m = mechanism(&m)?;
            println!("value,psi_inverse");
            for y in value {
                println!("{y},{}", m.psi_inverse(y)?);
            }
        }
        MechCommand::V { m, a } => {
            let m = mechanism(&m)?;
            println!("a,v");
            for a in a {
                println!("{a},{}", m.v_of(a)?);
            }
        }
        MechCommand::U { m, a, lambda } => {
            let m = mechanism(&m)?;
            println!("a,lambda,u");
            for a in a {
                println!("{a},{lambda},{}", m.u_of(a, lambda)?);
            }
        }
    }
    Ok(true)
}

fn family_command(cmd: FamilyCommand) -> Result<bool, RunError> {
    match cmd {
        FamilyCommand::Table { f, lambda } => {
            let fam = family(&f)?;
            let head: Vec<String> = lambda.iter().map(|l| format!("psi_q({l})")).collect();
            println!("q,b,c,eta,beta,{}", head.join(","));
            for &q in &f.q {
                let m = fam.psi_at(q)?;
                let vals = lambda.iter().map(|&l| m.psi(l).map(|v| v.to_string())).collect::<Result<Vec<_>, _>>()?;
                println!("{q},{},{},{},{},{}", m.b(), m.c(), m.eta()?, fam.beta(q)?, vals.join(","));
            }
            Ok(true)
        }
        FamilyCommand::Check { f, lambda, sizes } => {
            let report = family(&f)?.check_admissibility(&f.q, &lambda, &sizes)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| RunError::Io(e.to_string()))?);
            Ok(report.passed())
        }
    }
}

fn verify(
    name: &str,
    config: &Path,
    seed: Option<u64>,
    replicates: Option<u64>,
    out: &Path,
    workers: usize,
) -> Result<bool, RunError> {
    if experiments::find(name).is_none() {
        return Err(RunError::Config(format!("unknown experiment '{name}'")));
    }
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.params.seed = s;
    }
    if let Some(r) = replicates {
        cfg.params.replicates = r;
    }
    let report = experiments::run(&cfg, name, workers)?;
    let file = File::create(out).map_err(|e| RunError::Io(format!("cannot create {}: {e}", out.display())))?;
    report.write_csv(BufWriter::new(file))?;
    println!("{}", report.summary());
    Ok(report.passed())
}

fn list(json: bool) -> Result<bool, RunError> {
    if json {
        println!("{}", serde_json::to_string_pretty(&CATALOG[..]).map_err(|e| RunError::Io(e.to_string()))?);
    } else {
        for e in &CATALOG {
            println!("{:<26} oracle: {:<44} {}", e.name, e.oracle, e.description);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mech(cmd) => mech_command(cmd),
        Command::Family(cmd) => family_command(cmd),
        Command::Verify { experiment, config, seed, replicates, out, workers } => {
            verify(&experiment, &config, seed, replicates, &out, workers)
        }
        Command::List { json } => list(json),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
