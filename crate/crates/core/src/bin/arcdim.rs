//! Batch front-end: build families, run partition/framework checks, compute
//! energy tables and dimension estimates, and emit machine-readable reports.

use arcdim::error::Error;
use arcdim::families::{FSpec, FamilySpec};
use arcdim::pipeline::{self, Built};
use arcdim::report::{self, RunConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "arcdim", version, about = "conformal and spectral dimension estimation on graph windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML run configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Family name: dyadic | box | gasket | carpet.
    #[arg(long)]
    family: Option<String>,
    /// Level sequence: const:K | id | half | pattern:l3 | explicit:a,b,...
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    n1: Option<u32>,
    #[arg(long)]
    n2: Option<u32>,
    /// Fattening N of the energy pair set.
    #[arg(long)]
    n_fat: Option<u32>,
    /// Extra N2 values checked for stability (N2 .. N2 + sweep).
    #[arg(long)]
    n2_sweep: Option<u32>,
    /// Inclusive k range "lo..hi".
    #[arg(long)]
    k_range: Option<String>,
    /// Comma-separated p grid.
    #[arg(long)]
    p_grid: Option<String>,
    /// Bisection bracket "lo,hi".
    #[arg(long)]
    p_bracket: Option<String>,
    #[arg(long)]
    tol_p: Option<f64>,
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Kernel iteration horizon for walk commands.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory (defaults to the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a family window and export graph and tree files.
    Build(CommonOpts),
    /// Partition axioms and basic-framework checks.
    Check(CommonOpts),
    /// Energy tables E_{p,k} over the configured grid.
    Energy(CommonOpts),
    /// Full dimension report: rates, tilted rates, bisection, formulas.
    Dims(CommonOpts),
    /// Heat-kernel diagonal and exit-time tables.
    Walk(CommonOpts),
    /// Corner-to-corner resistances with reduction cross-checks.
    Resist(CommonOpts),
}

fn parse_family(opts: &CommonOpts) -> Result<Option<FamilySpec>, Error> {
    let name = match &opts.family {
        Some(n) => n.clone(),
        None => return Ok(None),
    };
    let depth = opts
        .depth
        .ok_or_else(|| Error::InvalidParam("--family requires --depth".into()))?;
    let f = match &opts.f {
        Some(spec) => FSpec::parse(spec)?,
        None => FSpec::Const(0),
    };
    let fam = match name.as_str() {
        "dyadic" | "dyadic-halfline" => FamilySpec::Dyadic { depth },
        "box" => FamilySpec::Box { f, depth },
        "gasket" => FamilySpec::Gasket { f, depth },
        "carpet" => FamilySpec::Carpet { depth },
        other => {
            return Err(Error::InvalidParam(format!("unknown family '{other}'")))
        }
    };
    Ok(Some(fam))
}

fn load_config(opts: &CommonOpts) -> Result<RunConfig, Error> {
    let mut config: RunConfig = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::InvalidParam(format!("bad config file: {e}")))?
        }
        None => {
            let family = parse_family(opts)?.ok_or_else(|| {
                Error::InvalidParam("either --config or --family/--depth is required".into())
            })?;
            RunConfig {
                family,
                n1: 0,
                n2: 2,
                n_fat: 1,
                n2_sweep: 0,
                k_range: (1..=6).collect(),
                p_grid: vec![1.0, 1.5, 2.0, 3.0],
                p_bracket: (1.0, 4.0),
                tol_p: 0.1,
                solver_tol: 1e-9,
                seed: 0,
                threads: 0,
                walk_horizon: 1024,
                out_dir: None,
            }
        }
    };
    if let Some(f) = parse_family(opts)? {
        config.family = f;
    }
    if let Some(v) = opts.n1 {
        config.n1 = v;
    }
    if let Some(v) = opts.n2 {
        config.n2 = v;
    }
    if let Some(v) = opts.n_fat {
        config.n_fat = v;
    }
    if let Some(v) = opts.n2_sweep {
        config.n2_sweep = v;
    }
    if let Some(spec) = &opts.k_range {
        let parts: Vec<&str> = spec.split("..").collect();
        if parts.len() != 2 {
            return Err(Error::InvalidParam(format!("bad k range '{spec}'")));
        }
        let lo: u32 = parts[0]
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad k range '{spec}'")))?;
        let hi: u32 = parts[1]
            .parse()
            .map_err(|_| Error::InvalidParam(format!("bad k range '{spec}'")))?;
        config.k_range = (lo..=hi).collect();
    }
    if let Some(spec) = &opts.p_grid {
        config.p_grid = spec
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::InvalidParam(format!("bad p grid '{spec}'")))?;
    }
    if let Some(spec) = &opts.p_bracket {
        let parts: Vec<&str> = spec.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidParam(format!("bad bracket '{spec}'")));
        }
        config.p_bracket = (
            parts[0]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad bracket '{spec}'")))?,
            parts[1]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParam(format!("bad bracket '{spec}'")))?,
        );
    }
    if let Some(v) = opts.tol_p {
        config.tol_p = v;
    }
    if let Some(v) = opts.solver_tol {
        config.solver_tol = v;
    }
    if let Some(v) = opts.seed {
        config.seed = v;
    }
    if let Some(v) = opts.threads {
        config.threads = v;
    }
    if let Some(v) = opts.horizon {
        config.walk_horizon = v;
    }
    if let Some(dir) = &opts.out {
        config.out_dir = Some(dir.display().to_string());
    }
    config.validate()?;
    if config.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }
    Ok(config)
}

fn out_dir(config: &RunConfig) -> PathBuf {
    config
        .out_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Build(opts) => {
            let config = load_config(&opts)?;
            let dir = out_dir(&config);
            let tag = format!("{}-{}", config.family.name(), config.family.depth());
            match pipeline::build_family(&config.family, true)? {
                Built::Graphy { window, tree, .. } => {
                    report::write_json(&dir, &format!("{tag}.graph.json"), &window.to_json())?;
                    report::write_text(&dir, &format!("{tag}.graph.dot"), &window.to_dot())?;
                    if let Some(tree) = tree {
                        report::write_json(
                            &dir,
                            &format!("{tag}.tree.json"),
                            &tree.to_json(&window),
                        )?;
                    }
                    if let FamilySpec::Gasket { depth, f } = &config.family {
                        if *depth > pipeline::GASKET_MATERIALIZE_CAP {
                            // The window materializes up to the cap; the full
                            // pattern is recorded as a profile.
                            let ones: Vec<u32> = (1..=*depth)
                                .map(|n| arcdim::families::gasket::gasket_f(f, n))
                                .collect();
                            report::write_json(
                                &dir,
                                &format!("{tag}.profile.json"),
                                &serde_json::json!({
                                    "depth": depth,
                                    "materialized_depth": pipeline::GASKET_MATERIALIZE_CAP,
                                    "f": ones,
                                }),
                            )?;
                        }
                    }
                    eprintln!(
                        "built {} vertices, {} edges -> {}",
                        window.graph.len(),
                        window.graph.edge_count(),
                        dir.display()
                    );
                }
                Built::Carpet(t) => {
                    let cells: Vec<usize> = (0..=t.depth).map(|m| t.level(m).len()).collect();
                    report::write_json(
                        &dir,
                        &format!("{tag}.tree.json"),
                        &serde_json::json!({"depth": t.depth, "cells_per_level": cells}),
                    )?;
                    eprintln!("built carpet tree to depth {} -> {}", t.depth, dir.display());
                }
            }
            Ok(())
        }
        Command::Check(opts) => {
            let config = load_config(&opts)?;
            let dir = out_dir(&config);
            let value = pipeline::run_check(&config)?;
            let wrapped = serde_json::json!({
                "tool_version": report::TOOL_VERSION,
                "config_hash": config.hash(),
                "config": config,
                "checks": value,
            });
            report::write_json(&dir, "check.json", &wrapped)?;
            println!("{}", serde_json::to_string_pretty(&wrapped)?);
            Ok(())
        }
        Command::Energy(opts) | Command::Dims(opts) => {
            let config = load_config(&opts)?;
            let dir = out_dir(&config);
            let rep = pipeline::run_dims(&config)?;
            report::write_json(&dir, "dims.json", &rep)?;
            report::write_text(&dir, "pk_table.csv", &rep.pk_csv())?;
            for (p, est) in &rep.rates {
                println!(
                    "p = {p}: rate fit {:.6}, last {:.6}, certified {}",
                    est.rate_fit, est.rate_last, est.certified
                );
            }
            if let Some(arc) = &rep.arc {
                println!(
                    "arc-dimension bracket [{:.4}, {:.4}] (estimate {:.4})",
                    arc.bracket.0, arc.bracket.1, arc.estimate
                );
            }
            if let Some(deep) = &rep.deep_gasket {
                println!(
                    "gasket pattern: d_S(walk) = {:.4}, d^S_2 = {:.4}",
                    deep.d_s_walk, deep.d_s2
                );
            }
            for s in &rep.spectral {
                println!(
                    "p = {}: d^S in [{:.4}, {:.4}]",
                    s.p,
                    s.d_lower.min(s.d_upper),
                    s.d_upper.max(s.d_lower)
                );
            }
            for n in &rep.notes {
                println!("note: {n}");
            }
            Ok(())
        }
        Command::Walk(opts) => {
            let config = load_config(&opts)?;
            let dir = out_dir(&config);
            let out = pipeline::run_walk(&config)?;
            report::write_text(&dir, "heat.csv", &report::heat_csv(&out.p2n))?;
            report::write_text(&dir, "exit.csv", &report::exit_csv(&out.exit_rows))?;
            let summary = serde_json::json!({
                "tool_version": report::TOOL_VERSION,
                "config_hash": config.hash(),
                "base_vertex": out.base.0,
                "slope": out.slope,
                "d_s_estimate": out.d_s_estimate,
                "exit_slope": out.exit_slope,
                "seed": config.seed,
            });
            report::write_json(&dir, "walk.json", &summary)?;
            println!(
                "slope {:.4} -> d_s about {:.4}; exit slope {:?}",
                out.slope, out.d_s_estimate, out.exit_slope
            );
            Ok(())
        }
        Command::Resist(opts) => {
            let config = load_config(&opts)?;
            let dir = out_dir(&config);
            let rows = pipeline::run_resist(&config)?;
            let mut csv = String::from("level,solver,reduction,golden\n");
            for r in &rows {
                use std::fmt::Write as _;
                let _ = writeln!(
                    csv,
                    "{},{:.12e},{},{}",
                    r.level,
                    r.solver,
                    r.reduction.map_or(String::new(), |v| format!("{v:.12e}")),
                    r.golden.map_or(String::new(), |v| format!("{v:.12e}")),
                );
            }
            report::write_text(&dir, "resist.csv", &csv)?;
            for r in &rows {
                println!(
                    "level {}: R = {:.9}{}",
                    r.level,
                    r.solver,
                    r.golden
                        .map_or(String::new(), |g| format!(" (golden {g:.9})"))
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidParam(_) | Error::UnknownVertex(_) | Error::Json(_) => 2,
                Error::Truncated(_)
                | Error::HorizonExceedsWindow { .. }
                | Error::LevelOutOfWindow(..)
                | Error::NoCertifiedCells => 3,
                Error::NonConvergence { .. } | Error::ReductionStalled { .. } => 4,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
