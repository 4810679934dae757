use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use boxopt::binpack::{fits, BinPacker, FitQuery, FitVerdict, DEFAULT_NODE_BUDGET};
use boxopt::fitmatrix::BitMatrix;
use boxopt::kdtree::KdConfig;
use boxopt::master::{Backend, BendersConfig, BuiltinSolver, ExternalSolver, MasterConfig, Mode};
use boxopt::model::io::{read_boxes, read_cartons, read_rel, write_boxes, write_cartons, write_rel};
use boxopt::model::{
    derive_cartons, generate_synthetic_units, ingest_packing_units, unit_volumes, write_packing_units, BoxFormat,
    Dim3, GridSpec, QuarterCreaseRule, SyntheticSpec,
};
use boxopt_cli::bench::{dual_suite, end2end_suite, fit_suite, Table};
use boxopt_cli::config::Config;
use boxopt_cli::pipeline::{compute_fit, optimize, FitMode, OptimizeInput, RunResult};
use boxopt_cli::report::report;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "boxopt", version, about = "Optimise a small set of variable-height cartons for a packing-unit history")]
struct Cli {
    /// TOML configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the box grid as CSV.
    GenBoxes {
        #[arg(long)]
        min: Option<Dim3>,
        #[arg(long)]
        max: Option<Dim3>,
        #[arg(long)]
        step: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive cartons with crease lines and the carton/box relation.
    GenCartons {
        #[arg(long)]
        boxes: PathBuf,
        #[arg(long)]
        min_height: Option<u32>,
        #[arg(long)]
        step: Option<u32>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        rel_out: PathBuf,
    },
    /// Generate synthetic packing units as JSON lines.
    GenUnits {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        largest_box: Option<Dim3>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the fitting matrix.
    ComputeFit {
        #[arg(long)]
        boxes: PathBuf,
        #[arg(long)]
        units: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<FitArg>,
        #[arg(long)]
        leaf_threshold: Option<u64>,
        #[arg(long)]
        node_budget: Option<u64>,
        /// Grid bounds for kdtree mode, if not in the config.
        #[arg(long)]
        min: Option<Dim3>,
        #[arg(long)]
        max: Option<Dim3>,
        #[arg(long)]
        step: Option<u32>,
        #[arg(long)]
        out: PathBuf,
        /// Accepted units, one per matrix row.
        #[arg(long)]
        accepted: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Select cartons.
    Optimize {
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        boxes: PathBuf,
        /// Units matching the matrix rows (the `--accepted` output of compute-fit).
        #[arg(long)]
        units: PathBuf,
        #[arg(long)]
        cartons: PathBuf,
        #[arg(long)]
        rel: PathBuf,
        /// Number of cartons to select.
        #[arg(short = 'M', long = "count")]
        count: Option<usize>,
        /// Box ids that must be producible; defaults to the largest box.
        #[arg(long, value_delimiter = ',')]
        fixed_boxes: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// External solver command with `{mps}` and `{sol}` placeholders.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cut pool as JSON lines.
        #[arg(long)]
        cuts: Option<PathBuf>,
    },
    /// Score and KPI from a result file or raw volumes.
    Report {
        #[arg(long, conflicts_with_all = ["objective", "total_volume"])]
        result: Option<PathBuf>,
        #[arg(long, requires = "total_volume")]
        objective: Option<i64>,
        #[arg(long, requires = "objective")]
        total_volume: Option<i64>,
    },
    /// Benchmarks; medians over the repetitions.
    Bench {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// dual: `UNITSxBOXES` pairs; fit: cube sides; end2end: unit counts.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<String>>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long)]
        skip_naive: bool,
        /// `.json` or `.csv`; printed as CSV when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ask the packer whether items fit a box.
    Fits {
        /// Comma separated `LxWxH` items.
        #[arg(long, value_delimiter = ',', required = true)]
        items: Vec<Dim3>,
        #[arg(long = "box")]
        container: Dim3,
        #[arg(long)]
        node_budget: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Grid,
    Kdtree,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Direct,
    BendersX,
    BendersXy,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Builtin,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Dual,
    Fit,
    End2end,
}

/// Bad flag combinations found after parsing; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn load_boxes(path: &Path) -> anyhow::Result<Vec<BoxFormat>> {
    let boxes = read_boxes(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if boxes.is_empty() {
        bail!("{} lists no boxes", path.display());
    }
    Ok(boxes)
}

fn largest(boxes: &[BoxFormat]) -> Dim3 {
    boxes.last().expect("checked nonempty").dims
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).map_err(|e| usage(e.to_string()))?,
        None => Config::default(),
    };
    if let Some(n) = cli.threads.or(cfg.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);

    match cli.command {
        Command::GenBoxes { min, max, step, out } => {
            let grid = cfg.grid(min, max, step).unwrap_or(Ok(GridSpec::reference()))?;
            let boxes = grid.boxes();
            let mut sink = create(&out)?;
            write_boxes(&boxes, &mut sink)?;
            sink.flush()?;
            println!("wrote {} boxes to {}", boxes.len(), out.display());
        }
        Command::GenCartons {
            boxes,
            min_height,
            step,
            out,
            rel_out,
        } => {
            let boxes = load_boxes(&boxes)?;
            let min_height = min_height
                .or(cfg.crease.min_height)
                .or(cfg.grid.min.map(|d| d.h))
                .unwrap_or_else(|| boxes.iter().map(|b| b.dims.h).min().expect("nonempty"));
            let step = step.or(cfg.crease.step).or(cfg.grid.step).unwrap_or_else(|| {
                boxes
                    .iter()
                    .fold(0, |g, b| gcd(gcd(g, b.dims.h - min_height), gcd(b.dims.l, b.dims.w)))
                    .max(1)
            });
            let (cartons, rel) = derive_cartons(&boxes, &QuarterCreaseRule::new(min_height, step));
            let mut sink = create(&out)?;
            write_cartons(&cartons, &mut sink)?;
            sink.flush()?;
            let mut sink = create(&rel_out)?;
            write_rel(&rel, &mut sink)?;
            sink.flush()?;
            println!("wrote {} cartons and {} relation pairs", cartons.len(), rel.len());
        }
        Command::GenUnits { count, largest_box, out } => {
            let count = count.or(cfg.units.count).ok_or_else(|| usage("--count is required"))?;
            let defaults = SyntheticSpec::default();
            let spec = SyntheticSpec {
                mean_items: cfg.units.mean_items.unwrap_or(defaults.mean_items),
                max_items: cfg.units.max_items.unwrap_or(defaults.max_items),
                min_edge: cfg.units.min_edge.unwrap_or(defaults.min_edge),
                max_edge: cfg.units.max_edge.unwrap_or(defaults.max_edge),
                largest_box: largest_box
                    .or(cfg.units.largest_box)
                    .or(cfg.grid.max)
                    .unwrap_or(defaults.largest_box),
                ..defaults
            };
            let units = generate_synthetic_units(seed, count, &spec, &BinPacker::default())?;
            let mut sink = create(&out)?;
            write_packing_units(&units, &mut sink)?;
            sink.flush()?;
            println!("wrote {} units to {}", units.len(), out.display());
        }
        Command::ComputeFit {
            boxes,
            units,
            mode,
            leaf_threshold,
            node_budget,
            min,
            max,
            step,
            out,
            accepted,
            stats,
        } => {
            let boxes = load_boxes(&boxes)?;
            let mode = match mode {
                Some(FitArg::Grid) => FitMode::Grid,
                Some(FitArg::Kdtree) => FitMode::Kdtree,
                None => match cfg.fit.mode.as_deref() {
                    None | Some("kdtree") => FitMode::Kdtree,
                    Some("grid") => FitMode::Grid,
                    Some(other) => return Err(usage(format!("unknown fit mode {other:?} in config"))),
                },
            };
            let grid = match (mode, cfg.grid(min, max, step)) {
                (FitMode::Kdtree, None) => {
                    return Err(usage("kdtree mode needs --min, --max and --step (or a [grid] config section)"))
                }
                (_, g) => g.transpose()?,
            };
            let node_budget = node_budget.or(cfg.fit.node_budget).unwrap_or(DEFAULT_NODE_BUDGET);
            let leaf = leaf_threshold
                .or(cfg.fit.leaf_threshold)
                .unwrap_or(KdConfig::default().leaf_threshold);
            let packer = BinPacker { node_budget };
            let ingest = ingest_packing_units(open(&units)?, largest(&boxes), &packer)
                .with_context(|| format!("reading {}", units.display()))?;
            for r in &ingest.rejected {
                eprintln!("rejected unit {} (line {}): {}", r.external_id, r.line, r.reason);
            }
            if ingest.units.is_empty() {
                bail!("no packing unit fits the largest box");
            }
            let (matrix, fit_stats) = compute_fit(&ingest.units, &boxes, mode, grid.as_ref(), leaf, node_budget)?;
            let mut sink = create(&out)?;
            matrix.serialize(&mut sink)?;
            sink.flush()?;
            if let Some(path) = accepted {
                let mut sink = create(&path)?;
                write_packing_units(&ingest.units, &mut sink)?;
                sink.flush()?;
            }
            if let Some(path) = stats {
                let value = serde_json::json!({
                    "fit": fit_stats,
                    "rejected": ingest.rejected,
                });
                write_json(&path, &value)?;
            }
            println!(
                "{} units x {} boxes: {} oracle calls ({:.4} of exhaustive), density {:.4}, {} rejected",
                fit_stats.units,
                fit_stats.boxes,
                fit_stats.oracle_calls,
                fit_stats.call_ratio,
                fit_stats.density,
                ingest.rejected.len()
            );
        }
        Command::Optimize {
            mode,
            fit,
            boxes,
            units,
            cartons,
            rel,
            count,
            fixed_boxes,
            backend,
            solver,
            tol,
            max_iter,
            time_limit,
            out,
            cuts,
        } => {
            let o = &cfg.optimize;
            let mode = match mode {
                Some(ModeArg::Direct) => Mode::Direct,
                Some(ModeArg::BendersX) => Mode::BendersX,
                Some(ModeArg::BendersXy) => Mode::BendersXy,
                None => o
                    .mode
                    .as_deref()
                    .unwrap_or("benders-xy")
                    .parse()
                    .map_err(|e: boxopt::Error| usage(e.to_string()))?,
            };
            let boxes = load_boxes(&boxes)?;
            let matrix = BitMatrix::deserialize(open(&fit)?).with_context(|| format!("reading {}", fit.display()))?;
            let accept_all = |_: &[Dim3], _: Dim3| FitVerdict::decided(true);
            let units = ingest_packing_units(open(&units)?, largest(&boxes), &accept_all)
                .with_context(|| format!("reading {}", units.display()))?;
            if !units.rejected.is_empty() {
                bail!("{} units exceed the largest box; pass the accepted units from compute-fit", units.rejected.len());
            }
            let cartons = read_cartons(open(&cartons)?).with_context(|| format!("reading {}", cartons.display()))?;
            let rel = read_rel(open(&rel)?, cartons.len(), boxes.len())
                .with_context(|| format!("reading {}", rel.display()))?;

            let backend_name = match backend {
                Some(BackendArg::Builtin) => "builtin",
                Some(BackendArg::External) => "external",
                None => o.backend.as_deref().unwrap_or("builtin"),
            };
            let backend = match backend_name {
                "builtin" => Backend::Builtin(BuiltinSolver {
                    enumeration_cap: o.enumeration_cap.unwrap_or(BuiltinSolver::default().enumeration_cap),
                    time_limit: None,
                }),
                "external" => {
                    let words: Vec<String> = match solver {
                        Some(s) => s.split_whitespace().map(String::from).collect(),
                        None => o.solver.clone().unwrap_or_else(|| {
                            let cbc = ExternalSolver::cbc();
                            std::iter::once(cbc.program).chain(cbc.args).collect()
                        }),
                    };
                    let (program, args) = words.split_first().ok_or_else(|| usage("empty --solver command"))?;
                    Backend::External(ExternalSolver {
                        program: program.clone(),
                        args: args.to_vec(),
                    })
                }
                other => return Err(usage(format!("unknown backend {other:?}"))),
            };
            let time_limit = time_limit.or(o.time_limit);
            if time_limit.is_some_and(|t| !(t > 0.0)) {
                return Err(usage("--time-limit must be positive"));
            }
            let bcfg = BendersConfig {
                master: MasterConfig {
                    cartons: count.or(o.cartons).ok_or_else(|| usage("-M (number of cartons) is required"))?,
                    fixed_boxes: fixed_boxes
                        .or(o.fixed_boxes.clone())
                        .unwrap_or_else(|| vec![boxes.len() - 1]),
                    direct_cap: o.direct_cap.unwrap_or(MasterConfig::default().direct_cap),
                },
                tol: tol.or(o.tol).unwrap_or(1e-6),
                max_iter: max_iter.or(o.max_iter).unwrap_or(100),
                time_limit: time_limit.map(Duration::from_secs_f64),
                backend,
            };
            let volumes = unit_volumes(&units.units);
            let input = OptimizeInput {
                fit: &matrix,
                boxes: &boxes,
                unit_volumes: &volumes,
                cartons: &cartons,
                rel: &rel,
            };
            let (result, pool) = optimize(&input, mode, &bcfg, backend_name)?;
            if let Some(path) = out {
                write_json(&path, &result)?;
            }
            if let Some(path) = cuts {
                let mut sink = create(&path)?;
                pool.write_jsonl(&mut sink)?;
                sink.flush()?;
            }
            print_summary(&result);
        }
        Command::Report {
            result,
            objective,
            total_volume,
        } => match (result, objective, total_volume) {
            (Some(path), _, _) => {
                let r: RunResult = serde_json::from_reader(open(&path)?)
                    .with_context(|| format!("reading result {}", path.display()))?;
                print_summary(&r);
            }
            (None, Some(obj), Some(total)) => {
                println!("{}", serde_json::to_string_pretty(&report(obj, total)?)?);
            }
            _ => return Err(usage("report needs --result or --objective with --total-volume")),
        },
        Command::Bench {
            suite,
            sizes,
            repetitions,
            skip_naive,
            out,
        } => {
            let sizes = sizes.unwrap_or_default();
            let table = match suite {
                SuiteArg::Dual => {
                    let pairs = if sizes.is_empty() {
                        vec![(10_000, 16_384)]
                    } else {
                        sizes
                            .iter()
                            .map(|s| {
                                let (p, b) = s
                                    .split_once('x')
                                    .ok_or_else(|| usage(format!("dual size {s:?} is not UNITSxBOXES")))?;
                                Ok((p.parse()?, b.parse()?))
                            })
                            .collect::<anyhow::Result<Vec<(usize, usize)>>>()
                            .map_err(|e| usage(e.to_string()))?
                    };
                    if pairs.iter().any(|&(p, b)| p == 0 || b == 0) {
                        return Err(usage("dual sizes must be positive"));
                    }
                    dual_suite(&pairs, repetitions, seed, !skip_naive)?
                }
                SuiteArg::Fit => {
                    let ns = parse_list(&sizes, &[8, 16, 32])?;
                    if ns.contains(&0) {
                        return Err(usage("cube sides must be positive"));
                    }
                    fit_suite(&ns, cfg.fit.leaf_threshold.unwrap_or(KdConfig::default().leaf_threshold))?
                }
                SuiteArg::End2end => {
                    let counts = parse_list(&sizes, &[10, 20, 40])?;
                    end2end_suite(&counts, repetitions, seed)?
                }
            };
            emit_table(&table, out.as_deref())?;
        }
        Command::Fits {
            items,
            container,
            node_budget,
        } => {
            let q = FitQuery {
                items: &items,
                container,
                node_budget: node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
            };
            println!("{}", serde_json::to_string(&fits(&q))?);
        }
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(sizes: &[String], default: &[T]) -> anyhow::Result<Vec<T>>
where
    T: Clone,
{
    if sizes.is_empty() {
        return Ok(default.to_vec());
    }
    sizes
        .iter()
        .map(|s| s.parse().map_err(|_| usage(format!("bad size {s:?}"))))
        .collect()
}

fn emit_table(table: &Table, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => write_json(p, table),
        Some(p) => {
            let mut sink = create(p)?;
            table.write_csv(&mut sink)?;
            sink.flush()?;
            Ok(())
        }
        None => {
            table.write_csv(std::io::stdout().lock())?;
            Ok(())
        }
    }
}

fn print_summary(r: &RunResult) {
    let ids: Vec<String> = r.selected_cartons.iter().map(|c| c.id.to_string()).collect();
    println!(
        "{:?}: {} of {} cartons [{}] -> {} boxes",
        r.mode,
        r.selected_cartons.len(),
        r.counts.cartons,
        ids.join(","),
        r.boxes.len()
    );
    println!(
        "objective {} mm3, bound {}, gap {:.3e}, score {}, empty volume {} ({:?}, {} iterations)",
        r.incumbent,
        r.theta,
        r.gap,
        r.score.score_display,
        r.score.kpi_display,
        r.termination,
        r.iterations.len()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
