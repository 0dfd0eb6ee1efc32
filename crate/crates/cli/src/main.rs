//! `treestat` command-line interface.
//!
//! Exit codes: 0 success (or H0 kept), 3 H0 rejected, 1 usage error,
//! 2 data error.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treestat::inference::{
    test_one_sample_bootstrap, test_one_sample_with_null, DEFAULT_REPLICATES,
};
use treestat::io::{
    format_tree, parse_decimal, parse_model, parse_tree, read_marginals_file, read_null_file,
    read_sample_file, write_marginals, write_null_file, write_sample, write_sample_file,
};
use treestat::statistic::one_sample_sup;
use treestat::{
    brute_force_mean, clt_covariance_check, distance, distance_otter_neveu, empirical_mean,
    marginal_profile, simulate_null, test_one_sample, test_two_sample, truncation_bound, Error,
    ExpectedDistanceInput, GwModel, MarginalProfile, MetricParams, RngSpec, Sign, TestReport,
    TreeSample, TreeSampler,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_REJECT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "treestat",
    version,
    about = "Statistics on random rooted trees"
)]
struct Cli {
    /// Print `key=value` lines instead of aligned text.
    #[arg(long, global = true)]
    machine: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// `perslot:<rho_1,...,rho_m>` or `countfill:<q_0,...,q_m>`.
    #[arg(long)]
    model: String,
    #[arg(long, default_value_t = 1.0)]
    root_prob: f64,
}

impl ModelArgs {
    fn build(&self) -> treestat::Result<GwModel> {
        parse_model(&self.model, self.root_prob)
    }
}

#[derive(Args)]
struct NullModelArgs {
    /// Null model, same syntax as `--model`.
    #[arg(long)]
    null_model: String,
    #[arg(long, default_value_t = 1.0)]
    root_prob: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample of random trees.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(short = 'n')]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output file (standard output if omitted).
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Distance between two trees given as text (`1.1.1,1.2`, `-` for empty).
    Dist {
        tree_a: String,
        tree_b: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Geometric weight `phi(v) = z^generation`.
        #[arg(long)]
        z: Option<f64>,
        /// Per-generation weights instead of `--z`.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<String>>,
        /// Use `exp(-(g - 1))`, g the first generation where the trees differ.
        #[arg(long)]
        otter_neveu: bool,
    },
    /// Mean tree(s) of a sample.
    Mean {
        sample: PathBuf,
        #[arg(long)]
        z: f64,
        /// Minimize the mean of `d^p`; values other than 1 imply `--brute-force`.
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
        /// List every minimizer by enumeration.
        #[arg(long)]
        brute_force: bool,
    },
    /// Exact vertex marginals of a model.
    Marginals {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        depth: usize,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Sup-deviation statistic of a sample against a null law.
    Stat {
        sample: PathBuf,
        #[arg(
            long,
            conflicts_with = "null_marginals",
            required_unless_present = "null_marginals"
        )]
        null_model: Option<String>,
        #[arg(long)]
        null_marginals: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        root_prob: f64,
        #[arg(long)]
        z: f64,
    },
    /// One-sample goodness-of-fit test.
    Test1 {
        sample: PathBuf,
        #[command(flatten)]
        null: NullModelArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(short = 'B', default_value_t = DEFAULT_REPLICATES)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        z: f64,
        /// Reuse a null distribution written by `nulldist`.
        #[arg(long, conflicts_with = "experimental_bootstrap")]
        null_dist: Option<PathBuf>,
        /// Calibrate by resampling the observed trees (no validity guarantee).
        #[arg(long)]
        experimental_bootstrap: bool,
    },
    /// Two-sample permutation test.
    Test2 {
        sample_a: PathBuf,
        sample_b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(short = 'P', default_value_t = DEFAULT_REPLICATES)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        z: f64,
    },
    /// Simulate and store a one-sample null distribution.
    Nulldist {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'B', default_value_t = DEFAULT_REPLICATES)]
        b: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        z: f64,
        #[arg(short = 'o')]
        output: PathBuf,
    },
    /// Compare simulated and exact covariances of the centered process.
    Cltcheck {
        #[command(flatten)]
        model: ModelArgs,
        /// Sample file holding the probe trees; its depth is the cap.
        #[arg(long)]
        probes: PathBuf,
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'R')]
        r: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        z: f64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArity(_)
            | Error::InvalidParameter(_)
            | Error::CltUnsafe { .. }
            | Error::UnsupportedModel(_)
            | Error::Unsupported(_)
            | Error::EnumerationTooLarge(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Ordered key/value output.
struct Output {
    machine: bool,
    rows: Vec<(String, String)>,
}

impl Output {
    fn new(machine: bool) -> Self {
        Output {
            machine,
            rows: Vec::new(),
        }
    }

    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.rows.push((key.into(), value.to_string()));
    }

    fn print(&self) -> io::Result<()> {
        let mut out = io::stdout().lock();
        let width = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.rows {
            if self.machine {
                writeln!(out, "{k}={v}")?;
            } else {
                writeln!(out, "{k:<width$}  {v}")?;
            }
        }
        Ok(())
    }
}

fn geometric(m: usize, z: f64, depth: usize) -> Result<MetricParams, Failure> {
    Ok(MetricParams::geometric_relaxed(m, z, depth)?)
}

fn check_model_arity(model: &GwModel, m: usize) -> Result<(), Failure> {
    if model.m() != m {
        return Err(usage(format!(
            "--model has {} children per vertex but --m is {m}",
            model.m()
        )));
    }
    Ok(())
}

fn put_report(out: &mut Output, r: &TestReport) {
    out.put("statistic", r.statistic);
    out.put("critical_value", r.critical_value);
    out.put("p_value", r.p_value);
    out.put("alpha", r.alpha);
    out.put("decision", if r.reject { "reject" } else { "accept" });
    out.put("truncation_bound", r.truncation_bound_scaled);
    out.put("witness", format_tree(&r.witness));
    out.put("calibration", r.calibration);
    out.put("replicates", r.replicates);
    out.put(
        "n",
        r.sample_sizes
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    out.put("m", r.m);
    out.put("depth", r.depth);
    out.put("z", r.z);
    out.put("seed", r.seed);
}

fn load_sample(path: &PathBuf) -> Result<TreeSample, Failure> {
    Ok(read_sample_file(path)?)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut out = Output::new(cli.machine);
    let mut code = 0;
    match cli.command {
        Command::Gen {
            model,
            m,
            depth,
            n,
            seed,
            output,
        } => {
            let model = model.build()?;
            check_model_arity(&model, m)?;
            let sampler = TreeSampler::new(&model, depth)?;
            let mut rng = RngSpec::new(seed).stream(0);
            let trees = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            let sample = TreeSample::new(m, depth, trees)?;
            match output {
                Some(path) => {
                    write_sample_file(&sample, &path)?;
                    out.put("written", path.display());
                    out.put("n", n);
                }
                None => write_sample(&sample, io::stdout().lock())?,
            }
        }
        Command::Dist {
            tree_a,
            tree_b,
            m,
            z,
            weights,
            otter_neveu,
        } => {
            let a = parse_tree(&tree_a, m)?;
            let b = parse_tree(&tree_b, m)?;
            let d = if otter_neveu {
                distance_otter_neveu(&a, &b)?
            } else if let Some(w) = weights {
                let w = w
                    .iter()
                    .map(|s| parse_decimal(s))
                    .collect::<treestat::Result<Vec<_>>>()?;
                distance(&a, &b, &MetricParams::per_generation(m, w)?)?
            } else {
                let z =
                    z.ok_or_else(|| usage("one of --z, --weights, --otter-neveu is required"))?;
                let depth = a.depth().max(b.depth());
                distance(&a, &b, &geometric(m, z, depth)?)?
            };
            out.put("distance", d);
        }
        Command::Mean {
            sample,
            z,
            exponent,
            brute_force,
        } => {
            let sample = load_sample(&sample)?;
            let params = geometric(sample.m(), z, sample.depth_cap())?;
            if exponent == 1.0 {
                let mean = empirical_mean(&sample, &params)?;
                out.put("lower", format_tree(&mean.lower));
                out.put("upper", format_tree(&mean.upper));
                out.put("unique", mean.is_unique());
            }
            if brute_force || exponent != 1.0 {
                let minimizers =
                    brute_force_mean(&ExpectedDistanceInput::Sample(sample), &params, exponent)?;
                out.put("minimizers", minimizers.len());
                for t in &minimizers {
                    out.put("minimizer", format_tree(t));
                }
            }
        }
        Command::Marginals {
            model,
            depth,
            output,
        } => {
            let profile = marginal_profile(&model.build()?, depth)?;
            match output {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    write_marginals(&profile, io::BufWriter::new(file))?;
                    out.put("written", path.display());
                }
                None => write_marginals(&profile, io::stdout().lock())?,
            }
        }
        Command::Stat {
            sample,
            null_model,
            null_marginals,
            root_prob,
            z,
        } => {
            let sample = load_sample(&sample)?;
            let params = geometric(sample.m(), z, sample.depth_cap())?;
            let profile: MarginalProfile = match (null_model, null_marginals) {
                (Some(spec), _) => {
                    marginal_profile(&parse_model(&spec, root_prob)?, sample.depth_cap())?
                }
                (None, Some(path)) => read_marginals_file(path)?,
                (None, None) => return Err(usage("--null-model or --null-marginals is required")),
            };
            let s = one_sample_sup(&sample, &profile, &params)?;
            out.put("statistic", s.statistic());
            out.put("witness", format_tree(&s.sup.witness));
            out.put(
                "sign",
                match s.sup.sign {
                    Sign::Positive => "positive",
                    Sign::Negative => "negative",
                },
            );
            out.put(
                "truncation_bound",
                s.scale * truncation_bound(&params, sample.depth_cap())?,
            );
            out.put("n", sample.len());
        }
        Command::Test1 {
            sample,
            null,
            alpha,
            b,
            seed,
            z,
            null_dist,
            experimental_bootstrap,
        } => {
            let sample = load_sample(&sample)?;
            let params = MetricParams::geometric(sample.m(), z, sample.depth_cap())?;
            let model0 = parse_model(&null.null_model, null.root_prob)?;
            let report = if let Some(path) = null_dist {
                let nd = read_null_file(path)?;
                let profile0 = marginal_profile(&model0, sample.depth_cap())?;
                test_one_sample_with_null(&sample, &profile0, &nd, alpha, &params)?
            } else if experimental_bootstrap {
                let profile0 = marginal_profile(&model0, sample.depth_cap())?;
                test_one_sample_bootstrap(
                    &sample,
                    &profile0,
                    alpha,
                    b,
                    &params,
                    RngSpec::new(seed),
                )?
            } else {
                test_one_sample(&sample, &model0, alpha, b, &params, RngSpec::new(seed))?
            };
            put_report(&mut out, &report);
            if report.reject {
                code = EXIT_REJECT;
            }
        }
        Command::Test2 {
            sample_a,
            sample_b,
            alpha,
            p,
            seed,
            z,
        } => {
            let a = load_sample(&sample_a)?;
            let b = load_sample(&sample_b)?;
            let depth = a.depth_cap().max(b.depth_cap());
            let params = MetricParams::geometric(a.m(), z, depth)?;
            let report = test_two_sample(&a, &b, alpha, p, &params, RngSpec::new(seed))?;
            put_report(&mut out, &report);
            if report.reject {
                code = EXIT_REJECT;
            }
        }
        Command::Nulldist {
            model,
            n,
            b,
            depth,
            seed,
            z,
            output,
        } => {
            let model = model.build()?;
            let params = MetricParams::geometric(model.m(), z, depth)?;
            let null = simulate_null(&model, n, b, &params, RngSpec::new(seed))?;
            write_null_file(&null, &output)?;
            out.put("written", output.display());
            out.put("replicates", null.len());
            let v = null.values();
            out.put("min", v[0]);
            out.put("max", v[v.len() - 1]);
        }
        Command::Cltcheck {
            model,
            probes,
            n,
            r,
            seed,
            z,
        } => {
            let model = model.build()?;
            let probes = load_sample(&probes)?;
            let params = MetricParams::geometric(model.m(), z, probes.depth_cap())?;
            let rep =
                clt_covariance_check(&model, probes.trees(), n, r, &params, RngSpec::new(seed))?;
            out.put("probes", rep.probes.len());
            out.put("n", rep.n);
            out.put("draws", rep.draws);
            for (i, (emp, exact)) in rep.empirical.iter().zip(&rep.exact).enumerate() {
                for (j, (e, x)) in emp.iter().zip(exact).enumerate() {
                    out.put(format!("cov[{i},{j}]"), format!("{e} exact={x}"));
                }
            }
            out.put("max_abs_deviation", rep.max_abs_deviation);
            out.put("lipschitz_violations", rep.lipschitz_violations);
        }
    }
    out.print().map_err(Error::from)?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
