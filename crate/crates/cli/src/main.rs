use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmdp_core::{compute_bounds, solve_cmdp_lp, BoundInputs, CmdpSpec};
use cmdp_lab::pipeline::{bounds_block, instantiate_mode};
use cmdp_lab::{read_instance, run_pipeline, sweep, write_csv, LabError, Mode, PipelineOptions, Result, DEFAULT_T_CAP};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cmdp-lab", version, about = "Tabular constrained-MDP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and list every problem found.
    Validate { instance: PathBuf },
    /// Solve the instance exactly with the occupancy LP.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one sample-then-optimize pipeline and report.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the pipeline over a grid of sample sizes and seeds.
    Sweep {
        instance: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated per-pair sample sizes, ascending.
        #[arg(long, default_value = "100,1000,10000")]
        samples: String,
        /// Seeds: a comma-separated list whose items are `k`, `a..b` or `a..=b`.
        #[arg(long, default_value = "0..20")]
        seed: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Evaluate the concentration constants and the prescribed sample size.
    Bounds(BoundsArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = Mode::Relaxed)]
    mode: Mode,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Iteration cap, or `none` to run the prescribed count.
    #[arg(long, default_value_t = DEFAULT_T_CAP.to_string())]
    t_cap: String,
    /// Raw mode: dual box size.
    #[arg(long)]
    upper: Option<f64>,
    /// Raw mode: optimization accuracy.
    #[arg(long)]
    eps_opt: Option<f64>,
    /// Raw mode: reward perturbation size.
    #[arg(long)]
    omega: Option<f64>,
    /// Raw mode: bound on the optimal dual norm.
    #[arg(long)]
    lambda_norm: Option<f64>,
    /// Strict mode: Slater constant lower bound used instead of the exact one.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Instance to derive sizes and parameters from.
    instance: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_t_cap(s: &str) -> Result<Option<u64>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<u64>()
        .map(Some)
        .map_err(|_| LabError::Usage(format!("--t-cap expects an integer or `none`, got {s:?}")))
}

fn parse_u64_list(s: &str, what: &str) -> Result<Vec<u64>> {
    let bad = |item: &str| LabError::Usage(format!("cannot parse {what} item {item:?}"));
    let num = |x: &str, item: &str| x.trim().parse::<u64>().map_err(|_| bad(item));
    let mut out = Vec::new();
    for item in s.split(',').filter(|i| !i.trim().is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            out.extend(num(a, item)?..=num(b, item)?);
        } else if let Some((a, b)) = item.split_once("..") {
            out.extend(num(a, item)?..num(b, item)?);
        } else {
            out.push(num(item, item)?);
        }
    }
    Ok(out)
}

fn options(run: &RunArgs, samples: u64, seed: u64) -> Result<PipelineOptions> {
    Ok(PipelineOptions {
        t_cap: parse_t_cap(&run.t_cap)?,
        upper: run.upper,
        eps_opt: run.eps_opt,
        omega: run.omega,
        lambda_star_norm: run.lambda_norm,
        zeta_bound: run.zeta,
        ..PipelineOptions::new(run.mode, run.epsilon, run.delta, samples, seed)
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| LabError::Output(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| LabError::Output(e.to_string()))
        }
    }
}

fn load(path: &PathBuf) -> Result<CmdpSpec> {
    let loaded = read_instance(path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.spec)
}

fn json_text<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_oracle(instance: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let spec = load(instance)?;
    let res = solve_cmdp_lp(&spec)?;
    let body = match &res.optimum {
        Some(o) => json!({
            "feasible": true,
            "v_star": o.v_star,
            "lambda_star": o.lambda_star,
            "constraint_values": o.constraint_values,
            "zeta_star": res.zeta_star(),
            "policy": o.policy.to_nested(),
        }),
        None => json!({ "feasible": false, "zeta_star": res.zeta_star() }),
    };
    emit(out, &json_text(&body))?;
    if res.feasible {
        Ok(())
    } else {
        Err(LabError::Infeasible)
    }
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let opts = options(&args.run, args.samples, 0)?;
    let body = match &args.instance {
        Some(path) => {
            let spec = load(path)?;
            let oracle = solve_cmdp_lp(&spec)?;
            let lambda_norm = oracle.optimum.as_ref().map(|o| o.lambda_star_norm());
            let (cfg, _) = instantiate_mode(&spec, &opts, oracle.zeta_star(), lambda_norm)?;
            json!({
                "samples": args.samples,
                "delta": opts.delta,
                "omega": cfg.omega,
                "upper": cfg.upper,
                "eps1": cfg.eps1,
                "bounds": bounds_block(&spec, &cfg, &opts),
            })
        }
        None => {
            let need = |name: &str| LabError::Usage(format!("without an instance, --{name} is required"));
            let inputs = BoundInputs {
                delta: opts.delta,
                omega: args.run.omega.ok_or_else(|| need("omega"))?,
                d: args.d.ok_or_else(|| need("d"))?,
                upper: args.run.upper.ok_or_else(|| need("upper"))?,
                eps1: args.eps1.ok_or_else(|| need("eps1"))?,
                num_states: args.states.ok_or_else(|| need("states"))?,
                num_actions: args.actions.ok_or_else(|| need("actions"))?,
                gamma: args.gamma.ok_or_else(|| need("gamma"))?,
                n: args.samples,
            };
            let b = compute_bounds(inputs)?;
            json!({
                "samples": args.samples,
                "delta": inputs.delta,
                "omega": inputs.omega,
                "upper": inputs.upper,
                "eps1": inputs.eps1,
                "bounds": {
                    "iota": b.iota,
                    "log_iota": b.log_iota,
                    "c_delta": b.c_delta,
                    "c_prime_delta": b.c_prime_delta,
                    "b_delta_n": b.b_delta_n,
                    "n_required": b.n_required,
                    "n_required_fixed_policy": b.n_required_fixed_policy,
                    "samples_sufficient": args.samples as f64 >= b.n_required,
                },
            })
        }
    };
    emit(args.run.out.as_ref(), &json_text(&body))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { instance } => {
            let spec = load(&instance)?;
            println!(
                "ok: {} states, {} actions, {} constraints",
                spec.num_states(),
                spec.num_actions(),
                spec.num_constraints()
            );
            Ok(())
        }
        Command::Oracle { instance, out } => cmd_oracle(&instance, out.as_ref()),
        Command::Solve {
            instance,
            run,
            samples,
            seed,
            format,
        } => {
            let spec = load(&instance)?;
            let report = run_pipeline(&spec, &options(&run, samples, seed)?)?;
            if report.config.t_truncated {
                eprintln!(
                    "warning: ran T = {} of the prescribed {:.3e} iterations (--t-cap)",
                    report.config.t, report.config.t_theoretical
                );
            }
            let text = match format {
                Format::Json => json_text(&report),
                Format::Csv => {
                    let row = cmdp_lab::SweepRow {
                        kind: cmdp_lab::sweep::RowKind::Data,
                        n: samples,
                        seed: Some(seed),
                        v_true_mixture: report.result.v_reward,
                        v_star: report.oracle.v_star,
                        subopt: report.result.subopt,
                        max_violation: report.result.max_violation,
                        violations: report.result.violations.clone(),
                        runtime_ms: report.runtime.wall_clock_ms,
                        p90_subopt: None,
                        p90_max_violation: None,
                    };
                    let mut buf = Vec::new();
                    write_csv(&mut buf, spec.num_constraints(), &[row])?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            };
            emit(run.out.as_ref(), &text)
        }
        Command::Sweep {
            instance,
            run,
            samples,
            seed,
            format,
        } => {
            let spec = load(&instance)?;
            let grid = parse_u64_list(&samples, "--samples")?;
            let seeds = parse_u64_list(&seed, "--seed")?;
            let rows = sweep(&spec, &options(&run, 1, 0)?, &grid, &seeds)?;
            let text = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&mut buf, spec.num_constraints(), &rows)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
                Format::Json => json_text(&rows),
            };
            emit(run.out.as_ref(), &text)
        }
        Command::Bounds(args) => cmd_bounds(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
