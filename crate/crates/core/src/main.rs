use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use misspec_alm::experiments::{
    epsilon_tag, generate_instance, plan_cell, run_cell, seqsim_command, table_command,
    ExperimentConfig, RowStatus, Scheme, Specification, TableRow,
};
use misspec_alm::{Error, Result};

#[derive(Parser)]
#[command(name = "misspec-alm", version, about = "Inexact augmented Lagrangian with a learned parameter")]
struct Cli {
    /// JSON file with ExperimentConfig fields; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma separated, e.g. 1e-1,1e-2.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// constant or increasing.
    #[arg(long, global = true)]
    regime: Option<String>,
    /// known or learned.
    #[arg(long, global = true)]
    spec: Option<Specification>,
    /// Record wall-clock columns (otherwise written as 0).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write instance.json and the resolved config.json.
    Generate,
    /// Solve at the first ε and write its trace.
    Solve,
    /// One row per ε; writes table.csv and a trace per ε.
    Table,
    /// Sequential budgets against the simultaneous scheme; writes seqsim.csv.
    Seqsim,
    /// Theory curves for each ε without solving; writes bounds_eps_<ε>.csv.
    Bounds,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if let Some(e) = &cli.epsilon {
        cfg.epsilon = e.clone();
    }
    if let Some(r) = &cli.regime {
        cfg.regime = r.clone();
    }
    if let Some(s) = cli.spec {
        cfg.specification = s;
    }
    cfg.timing |= cli.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn print_rows(rows: &[TableRow]) {
    println!(
        "{:>8} {:>10} {:>8} {:>11} {:>11} {:>11} {:>6} {:>9} {:>9} {:>9}  status",
        "eps", "regime", "spec", "rel_subopt", "infeas", "theta_rel", "outer", "inner", "cpu_learn", "cpu_opt"
    );
    for r in rows {
        println!(
            "{:>8.0e} {:>10} {:>8} {:>11.3e} {:>11.3e} {:>11.3e} {:>6} {:>9} {:>9.3} {:>9.3}  {:?}",
            r.epsilon,
            r.regime,
            r.specification.to_string(),
            r.f_rel_subopt,
            r.infeas,
            r.theta_err_rel,
            r.outer,
            r.inner,
            r.cpu_learn_s,
            r.cpu_opt_s,
            r.status
        );
    }
}

/// Exit status 3 when any row missed ε or hit the inner cap.
fn row_code(rows: &[TableRow]) -> u8 {
    if rows.iter().all(|r| r.status == RowStatus::Ok) {
        0
    } else {
        3
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Generate => {
            let gen = generate_instance(&cfg)?;
            fs::create_dir_all(&cfg.output_dir)?;
            fs::write(cfg.output_dir.join("instance.json"), gen.instance.to_json()?)?;
            fs::write(cfg.output_dir.join("config.json"), cfg.to_json()?)?;
            println!(
                "n = {}, s = {}, samples = {}, f* = {:.10e}, |lambda*| = {:.3e}, admm tau = {:.4}, envelope = {:.3}, sector draws = {}",
                cfg.n,
                cfg.s,
                gen.instance.sample_count,
                gen.reference.f_star,
                gen.reference.lambda_star.norm(),
                gen.learning.tau,
                gen.envelope,
                gen.instance.sector_attempts
            );
            Ok(0)
        }
        Command::Solve => {
            let gen = generate_instance(&cfg)?;
            let eps = cfg.epsilon[0];
            let cfg1 = ExperimentConfig { epsilon: vec![eps], ..cfg.clone() };
            fs::create_dir_all(&cfg.output_dir)?;
            match run_cell(&gen, &cfg1, eps, &cfg.regime, cfg.specification) {
                Ok(run) => {
                    let path = cfg.output_dir.join(format!("trace_eps_{}.csv", epsilon_tag(eps)));
                    run.trace.write_csv(std::io::BufWriter::new(fs::File::create(&path)?))?;
                    let last = run.trace.last().expect("at least one outer step");
                    println!(
                        "outer = {}, inner = {}, rel_subopt = {:.3e}, infeas = {:.3e}, converged = {}",
                        run.trace.outer_count(),
                        run.trace.total_inner(),
                        last.f_rel_subopt,
                        last.infeasibility_at_theta_star,
                        run.trace.converged
                    );
                    println!("trace written to {}", path.display());
                    Ok(if run.trace.converged { 0 } else { 3 })
                }
                Err(e @ Error::InnerBudgetExceeded { .. }) => {
                    eprintln!("{e}");
                    Ok(3)
                }
                Err(e) => Err(e),
            }
        }
        Command::Table => {
            let out = table_command(&cfg)?;
            print_rows(&out.rows);
            Ok(row_code(&out.rows))
        }
        Command::Seqsim => {
            let curves = seqsim_command(&cfg)?;
            for c in &curves {
                let label = match c.scheme {
                    Scheme::Simultaneous => "simultaneous".to_string(),
                    Scheme::Sequential => format!("sequential, budget {}", c.budget),
                };
                let work = c.points.last().map_or(0, |p| p.work);
                println!("{label:<24} final |f - f*| = {:.3e} after work {work}", c.final_error());
            }
            Ok(0)
        }
        Command::Bounds => {
            let gen = generate_instance(&cfg)?;
            fs::create_dir_all(&cfg.output_dir)?;
            for &eps in &cfg.epsilon {
                let plan = plan_cell(&gen, &cfg, eps, &cfg.regime, cfg.specification)?;
                let report = plan.bound_report()?;
                println!("eps = {eps:e}: {}", serde_json::to_string(&report)?);
                let path = cfg.output_dir.join(format!("bounds_eps_{}.csv", epsilon_tag(eps)));
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["k", "v_k", "subopt_upper", "subopt_lower", "dual_gap"])?;
                for k in 1..=cfg.max_outer {
                    let b = report.row(&plan.bound_inputs, k)?;
                    w.write_record([
                        k.to_string(),
                        b.v_k.to_string(),
                        b.subopt_upper.to_string(),
                        b.subopt_lower.to_string(),
                        b.dual_gap.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
