//! Command-line front end: generate instances, solve them, verify menus,
//! cross-check against the LP oracle, benchmark the single-menu policy, and
//! sweep random corpora.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage or parse
//! errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use infosell::corpus::random_instance;
use infosell::feasibility::{self, check_feasible_with};
use infosell::lp_oracle;
use infosell::model::{generate_family, FamilyParams, Instance, Mechanism};
use infosell::optimal_mechanism::{solve, CaseTag, Solution};
use infosell::single_menu;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "infosell", version, about = "Optimal menus for selling information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance from a named family or a random draw.
    Gen {
        /// Family: uniform_product, equal_revenue, or random.
        #[arg(long, default_value = "random")]
        family: String,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Number of type grid points.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Number of states (defaults to the grid size).
        #[arg(long)]
        states: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        t_hi: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        q_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        q_hi: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        v0: f64,
        /// Scale parameter of the equal_revenue family.
        #[arg(long, default_value_t = 100.0)]
        c_param: f64,
    },
    /// Solve an instance and write the optimal menu.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Verify a menu against the feasibility characterization.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Menu JSON file (as written by solve).
        #[arg(long)]
        mech: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare the closed-form solution against the dense LP optimum.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Benchmark the posted-price fully revealing menu.
    SingleMenu {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve + verify + oracle over a seeded random corpus.
    Sweep {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Rounds to 12 significant digits so serialized files are reproducible.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

fn rounded(value: Value) -> Value {
    match value {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => json!(round_sig(x)),
            _ => Value::Number(n),
        },
        Value::Array(items) => Value::Array(items.into_iter().map(rounded).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v))).collect())
        }
        other => other,
    }
}

fn emit(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn emit_json(path: &Option<PathBuf>, value: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&rounded(value))?;
    emit(path, &text)
}

fn load_instance(path: &PathBuf) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

fn case_name(tag: CaseTag) -> &'static str {
    match tag {
        CaseTag::LowTail => "low_tail",
        CaseTag::HighTail => "high_tail",
        CaseTag::Mixed => "mixed",
    }
}

fn solution_json(sol: &Solution) -> Value {
    json!({
        "theta": sol.policy.theta,
        "pi": sol.mechanism.pi,
        "pay": sol.mechanism.pay,
        "case": case_name(sol.label.tag),
        "c": sol.label.c,
        "D": sol.label.boundary_fraction,
        "revenue": sol.revenue,
        "v_low": sol.label.v_low,
        "v_high": sol.label.v_high,
    })
}

fn solution_csv(inst: &Instance, sol: &Solution) -> String {
    let mut out = String::from("t,theta,pay,P,u,s\n");
    for k in 0..inst.num_types() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            round_sig(inst.types().t(k)),
            round_sig(sol.policy.theta[k]),
            round_sig(sol.mechanism.pay[k]),
            round_sig(feasibility::weighted_prob(inst, &sol.mechanism, k)),
            round_sig(feasibility::utility(inst, &sol.mechanism, k)),
            round_sig(feasibility::surplus(inst, &sol.mechanism, k)),
        ));
    }
    out
}

/// Runs one command; `Ok(false)` means a check failed (exit 1).
fn run(command: Command) -> Result<bool> {
    match command {
        Command::Gen {
            family,
            output,
            grid,
            states,
            seed,
            t_lo,
            t_hi,
            q_lo,
            q_hi,
            v0,
            c_param,
        } => {
            let inst = if family == "random" {
                random_instance(seed)
            } else {
                let params = FamilyParams {
                    t_lo,
                    t_hi,
                    q_lo,
                    q_hi,
                    v0,
                    c: c_param,
                    n: grid,
                    m: states.unwrap_or(grid),
                };
                generate_family(&family, &params)?
            };
            emit_json(&output, serde_json::to_value(&inst)?)?;
            Ok(true)
        }
        Command::Solve {
            input,
            output,
            format,
        } => {
            let inst = load_instance(&input)?;
            let sol = solve(&inst)?;
            eprintln!(
                "case {}  revenue {:.9}  V_L {:.9}  V_H {:.9}",
                case_name(sol.label.tag),
                sol.revenue,
                sol.label.v_low,
                sol.label.v_high
            );
            match format {
                Format::Json => emit_json(&output, solution_json(&sol))?,
                Format::Csv => emit(&output, &solution_csv(&inst, &sol))?,
            }
            Ok(true)
        }
        Command::Verify {
            input,
            mech,
            tol,
            output,
        } => {
            if tol <= 0.0 {
                bail!("tolerance must be positive");
            }
            let inst = load_instance(&input)?;
            let text =
                fs::read_to_string(&mech).with_context(|| format!("reading {}", mech.display()))?;
            let mech: Mechanism = serde_json::from_str(&text).context("parsing menu JSON")?;
            mech.check_shape(&inst, tol).map_err(anyhow::Error::msg)?;
            let report = check_feasible_with(&inst, &mech, tol);
            print!("{}", report.table());
            if output.is_some() {
                emit_json(&output, serde_json::to_value(&report)?)?;
            }
            Ok(report.all_ok())
        }
        Command::Oracle { input, tol, output } => {
            if tol <= 0.0 {
                bail!("tolerance must be positive");
            }
            let inst = load_instance(&input)?;
            let sol = solve(&inst)?;
            let oracle = lp_oracle::oracle(&inst)?;
            if oracle.status != lp_oracle::LpStatus::Optimal {
                bail!("oracle LP did not converge: {:?}", oracle.status);
            }
            let report = lp_oracle::compare(&inst, &sol.mechanism, &oracle);
            println!(
                "closed {:.9}  oracle {:.9}  relative gap {:.3e}  oracle feasible {}",
                report.closed_revenue, report.oracle_revenue, report.rel_gap, report.oracle_feasible
            );
            if output.is_some() {
                emit_json(&output, serde_json::to_value(&report)?)?;
            }
            Ok(report.rel_gap <= tol && report.oracle_feasible)
        }
        Command::SingleMenu { input, output } => {
            let inst = load_instance(&input)?;
            let report = single_menu::ratio_report(&inst)?;
            println!(
                "reserve {:.9}  posted revenue {:.9}  optimal revenue {:.9}  ratio {:.6}  welfare {:.9}  hazard monotone {}",
                report.reserve,
                report.rev_single,
                report.rev_optimal,
                report.ratio,
                report.welfare,
                report.mhr_flag
            );
            if output.is_some() {
                emit_json(&output, serde_json::to_value(&report)?)?;
            }
            Ok(true)
        }
        Command::Sweep {
            count,
            seed,
            output,
        } => {
            let mut cases = [0usize; 3];
            let mut max_gap = 0.0f64;
            let mut violations = 0usize;
            for k in 0..count {
                let inst = random_instance(seed.wrapping_add(k));
                let sol = solve(&inst)?;
                cases[sol.label.tag as usize] += 1;
                let report = check_feasible_with(&inst, &sol.mechanism, 1e-9);
                if !report.all_ok() {
                    violations += 1;
                }
                let oracle = lp_oracle::oracle(&inst)?;
                let cmp = lp_oracle::compare(&inst, &sol.mechanism, &oracle);
                max_gap = max_gap.max(cmp.rel_gap);
                if cmp.rel_gap > 1e-5 {
                    violations += 1;
                }
            }
            let summary = json!({
                "count": count,
                "seed": seed,
                "cases": {
                    "low_tail": cases[0],
                    "high_tail": cases[1],
                    "mixed": cases[2],
                },
                "max_relative_gap": max_gap,
                "violations": violations,
            });
            println!(
                "{count} instances: {} low tail, {} high tail, {} mixed; max relative gap {max_gap:.3e}; {violations} violations",
                cases[0], cases[1], cases[2]
            );
            if output.is_some() {
                emit_json(&output, summary)?;
            }
            Ok(violations == 0)
        }
    }
}
