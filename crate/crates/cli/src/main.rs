use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use conicond_cli::{execute, CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(
    name = "conicond",
    version,
    about = "Conic condition numbers and statistical dimension experiments"
)]
struct Cli {
    /// Master seed; required unless a config file supplies it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Machine-readable reports.
    #[arg(long, global = true)]
    json: bool,
    /// Read the command, parameters and seed from a JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Statistical dimension of TV descent cones over a sparsity range.
    TvStatdim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s_min: Option<usize>,
        #[arg(long)]
        s_max: Option<usize>,
        #[arg(long)]
        s_step: Option<usize>,
    },
    /// Preconditioned bound as a function of the target dimension m.
    OptM {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta_c: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        m_min: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        m_step: Option<usize>,
        #[arg(long)]
        operator: Option<String>,
        /// Use the operator itself rather than its inverse.
        #[arg(long)]
        no_invert: bool,
    },
    /// Condition number of D G for square TV D and Gaussian G.
    KappaDg {
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
        #[arg(long)]
        n_max: usize,
        #[arg(long)]
        n_step: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Basis pursuit phase transition with predicted thresholds.
    Phase {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        m_min: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        m_step: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Run a verification suite; exits nonzero on any failed check.
    Verify {
        /// cones, statdim, kinematic, condition, bounds or gordon.
        #[arg(long)]
        suite: String,
    },
    /// Renegar condition number of A relative to cones C and D.
    Condition {
        /// Rows of A as JSON, e.g. [[1,0],[0,2]].
        #[arg(long)]
        a: String,
        /// Cone C as JSON.
        #[arg(long)]
        c: String,
        /// Cone D as JSON; defaults to the whole space.
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Intrinsic volumes and statistical dimension of a cone given as JSON.
    Statdim {
        #[arg(long)]
        cone: String,
    },
    /// Project a point onto a cone given as JSON.
    Project {
        #[arg(long)]
        cone: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
}

struct Params(Map<String, Value>);

impl Params {
    fn new() -> Self {
        Params(Map::new())
    }

    fn put<T: Serialize>(mut self, key: &str, v: Option<T>) -> Result<Self> {
        if let Some(v) = v {
            self.0.insert(key.into(), serde_json::to_value(v)?);
        }
        Ok(self)
    }

    fn json(mut self, key: &str, raw: Option<&str>) -> Result<Self> {
        if let Some(raw) = raw {
            let v: Value = serde_json::from_str(raw).map_err(|e| CliError::Config(format!("--{key}: {e}")))?;
            self.0.insert(key.into(), v);
        }
        Ok(self)
    }
}

fn to_config(cli: &Cli) -> Result<ExperimentConfig> {
    if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err(CliError::Config("--config replaces the subcommand".into()));
        }
        let mut cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?;
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if cli.samples.is_some() {
            cfg.samples = cli.samples;
        }
        if cli.out.is_some() {
            cfg.out = cli.out.clone();
        }
        return Ok(cfg);
    }
    let Some(cmd) = &cli.command else {
        return Err(CliError::Config("a subcommand or --config is required".into()));
    };
    let seed = cli.seed.ok_or_else(|| CliError::Config("--seed is required".into()))?;
    let p = Params::new();
    let (name, p) = match cmd {
        Command::TvStatdim {
            n,
            s_min,
            s_max,
            s_step,
        } => (
            "tv-statdim",
            p.put("n", Some(n))?
                .put("s_min", *s_min)?
                .put("s_max", *s_max)?
                .put("s_step", *s_step)?,
        ),
        Command::OptM {
            n,
            delta_c,
            eta,
            m_min,
            m_max,
            m_step,
            operator,
            no_invert,
        } => (
            "opt-m",
            p.put("n", Some(n))?
                .put("delta_c", Some(delta_c))?
                .put("eta", Some(eta))?
                .put("m_min", *m_min)?
                .put("m_max", *m_max)?
                .put("m_step", *m_step)?
                .put("operator", operator.clone())?
                .put("invert", Some(!no_invert))?,
        ),
        Command::KappaDg {
            rho,
            n_max,
            n_step,
            trials,
        } => (
            "kappa-dg",
            p.put("rho", rho.clone())?
                .put("n_max", Some(n_max))?
                .put("n_step", *n_step)?
                .put("trials", *trials)?,
        ),
        Command::Phase {
            n,
            s,
            family,
            m_min,
            m_max,
            m_step,
            trials,
            eta,
        } => (
            "phase",
            p.put("n", Some(n))?
                .put("s", Some(s))?
                .put("family", family.clone())?
                .put("m_min", *m_min)?
                .put("m_max", *m_max)?
                .put("m_step", *m_step)?
                .put("trials", *trials)?
                .put("eta", *eta)?,
        ),
        Command::Verify { suite } => ("verify", p.put("suite", Some(suite))?),
        Command::Condition {
            a,
            c,
            d,
            method,
            starts,
        } => (
            "condition",
            p.json("a", Some(a))?
                .json("c", Some(c))?
                .json("d", d.as_deref())?
                .put("method", method.clone())?
                .put("starts", *starts)?,
        ),
        Command::Statdim { cone } => ("statdim", p.json("cone", Some(cone))?),
        Command::Project { cone, x } => ("project", p.json("cone", Some(cone))?.put("x", Some(x))?),
    };
    let cfg = ExperimentConfig {
        command: name.into(),
        params: p.0,
        seed,
        samples: cli.samples,
        out: cli.out.clone(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = to_config(cli)?;
    let out = execute(&cfg, cli.json)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(out.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
