//! Command-line front end for the rectangle-free grid coloring workbench.
//!
//! Exit codes: 0 success (or expected outcome), 1 verification/expectation
//! failure, 2 usage error, 3 timeout without a decisive answer.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridshift::cnf::{read_dimacs_model, CnfFormula};
use gridshift::dist::{
    check_necessary_for, export_smtlib, search_distributions, DistributionSet, SearchOptions,
};
use gridshift::encoder::{
    add_distribution_constraints, decode_with_map, encode_base, encode_shift_equal,
    encode_shift_merged, encode_shift_selector, VarMap,
};
use gridshift::grid::{find_monochromatic_rectangle, Coloring, GridSpec};
use gridshift::iso::classify;
use gridshift::layout::{matches_layout, DiagonalMode, PatternLayout, ShiftDirection};
use gridshift::render::{render, RenderFormat, RenderOptions};
use gridshift::solver::{
    enumerate, solve, EngineMode, ExternalSolver, SolveConfig, SolveStatus,
};
use gridshift::experiments::{recipe_book, RecipeContext, RecipeReport, RecipeStatus};

#[derive(Parser)]
#[command(name = "gridshift", version, about = "Rectangle-free grid coloring workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Left,
    Right,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagonalArg {
    None,
    Diag,
    Anti,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Cdcl,
    Walksat,
    Portfolio,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    /// Merged variables for one direction, selectors for both.
    Auto,
    /// Binary equality clauses over the full variable set.
    Equal,
}

#[derive(Args)]
struct SpecArgs {
    /// Grid rows, columns, and color count.
    #[arg(long, num_args = 3, value_names = ["M", "N", "K"], required = true)]
    spec: Vec<usize>,
}

impl SpecArgs {
    fn grid_spec(&self) -> Result<GridSpec, String> {
        GridSpec::new(self.spec[0], self.spec[1], self.spec[2]).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct LayoutArgs {
    /// Subgrid size z for the shift pattern.
    #[arg(long)]
    subgrid: Option<usize>,
    #[arg(long, value_enum, default_value = "left")]
    direction: DirectionArg,
    /// Midgrid size (a multiple of z).
    #[arg(long)]
    midgrid: Option<usize>,
    /// Leftover rows continuing the pattern as if the grid were larger.
    #[arg(long, default_value_t = 0)]
    partial_rows: usize,
    #[arg(long, default_value_t = 0)]
    partial_cols: usize,
    #[arg(long, value_enum, default_value = "none")]
    diagonal: DiagonalArg,
}

impl LayoutArgs {
    fn pattern_layout(&self) -> Result<Option<PatternLayout>, String> {
        let Some(z) = self.subgrid else {
            return Ok(None);
        };
        let direction = match self.direction {
            DirectionArg::Left => ShiftDirection::Left,
            DirectionArg::Right => ShiftDirection::Right,
            DirectionArg::Both => ShiftDirection::SelectorBoth,
        };
        let mut layout = PatternLayout::new(z, direction).map_err(|e| e.to_string())?;
        if let Some(m) = self.midgrid {
            layout = layout.with_midgrid(m);
        }
        layout = layout.with_partial(self.partial_rows, self.partial_cols);
        layout = layout.with_diagonal(match self.diagonal {
            DiagonalArg::None => DiagonalMode::None,
            DiagonalArg::Diag => DiagonalMode::Diagonal,
            DiagonalArg::Anti => DiagonalMode::AntiDiagonal,
            DiagonalArg::Both => DiagonalMode::Both,
        });
        Ok(Some(layout))
    }
}

#[derive(Args)]
struct EncodeOpts {
    #[command(flatten)]
    spec: SpecArgs,
    #[command(flatten)]
    layout: LayoutArgs,
    #[arg(long, value_enum, default_value = "auto")]
    encoding: EncodingArg,
    /// Distribution constraint: a file in the block format, or "ones".
    #[arg(long)]
    distribution: Option<String>,
}

#[derive(Args)]
struct SolveOpts {
    #[arg(long, value_enum, default_value = "cdcl")]
    engine: EngineArg,
    /// Seconds before giving up.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// DIMACS-speaking solver command; overrides --engine.
    #[arg(long)]
    external_solver: Option<String>,
}

impl SolveOpts {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            seed: self.seed,
            timeout: Duration::from_secs(self.timeout.max(1)),
            mode: match self.engine {
                EngineArg::Cdcl => EngineMode::Cdcl,
                EngineArg::Walksat => EngineMode::LocalSearch,
                EngineArg::Portfolio => EngineMode::Portfolio,
            },
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the CNF encoding (DIMACS) and the variable map file.
    Encode {
        #[command(flatten)]
        opts: EncodeOpts,
        /// Output path for the DIMACS file.
        #[arg(long, short, default_value = "grid.cnf")]
        out: PathBuf,
        /// Output path for the sidecar variable map.
        #[arg(long, default_value = "grid.map")]
        map: PathBuf,
    },
    /// Encode and solve; prints the status and, when sat, the coloring.
    Solve {
        #[command(flatten)]
        opts: EncodeOpts,
        #[command(flatten)]
        solver: SolveOpts,
        /// Print the decoded coloring in the given format.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Enumerate all colorings of the encoding, streaming them as text.
    Enumerate {
        #[command(flatten)]
        opts: EncodeOpts,
        #[command(flatten)]
        solver: SolveOpts,
        #[arg(long)]
        limit: Option<usize>,
        /// Classify the enumerated colorings up to isomorphism.
        #[arg(long)]
        classify: bool,
        /// Suppress the per-coloring output.
        #[arg(long)]
        quiet: bool,
    },
    /// Check a coloring file for rectangles and layout conformance.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Partition coloring files into isomorphism classes.
    Classify { files: Vec<PathBuf> },
    /// Distribution tooling: check a file, search, or export SMT-LIB.
    Distribute {
        #[command(subcommand)]
        action: DistributeAction,
    },
    /// Decode an external solver model with a sidecar map file.
    Decode {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Render a coloring file as ascii or SVG.
    Render {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "ascii")]
        format: FormatArg,
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long, default_value_t = 20)]
        cell_size: u32,
    },
    /// Run a named experiment recipe, or all of them.
    Repro {
        name: Option<String>,
        #[arg(long)]
        all: bool,
        /// List available recipes.
        #[arg(long)]
        list: bool,
        /// Seconds per ordinary solver call.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        /// Seconds for the heavy non-gating solves.
        #[arg(long, default_value_t = 300)]
        heavy_timeout: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum DistributeAction {
    /// Run the necessary-condition checks on a distribution file.
    Check {
        file: PathBuf,
        #[arg(long)]
        subgrid: usize,
        #[arg(long, value_enum, default_value = "left")]
        direction: DirectionArg,
    },
    /// Search for distribution sets passing all necessary conditions.
    Search {
        x: usize,
        y: usize,
        z: usize,
        k: usize,
        #[arg(long, default_value_t = 10)]
        limit: usize,
        #[arg(long, default_value_t = 50_000_000)]
        node_budget: u64,
    },
    /// Print an SMT-LIB 2 script for the feasibility question.
    Export { x: usize, y: usize, z: usize, k: usize },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ascii,
    Svg,
}

fn build_encoding(opts: &EncodeOpts) -> Result<(CnfFormula, VarMap), String> {
    let spec = opts.spec.grid_spec()?;
    let layout = opts.layout.pattern_layout()?;
    let (mut formula, mut vm) = match (&layout, opts.encoding) {
        (None, _) => encode_base(spec).map_err(|e| e.to_string())?,
        (Some(l), EncodingArg::Equal) => encode_shift_equal(spec, l).map_err(|e| e.to_string())?,
        (Some(l), EncodingArg::Auto) if l.direction == ShiftDirection::SelectorBoth => {
            encode_shift_selector(spec, l).map_err(|e| e.to_string())?
        }
        (Some(l), EncodingArg::Auto) => encode_shift_merged(spec, l).map_err(|e| e.to_string())?,
    };
    if let Some(d) = &opts.distribution {
        let layout = layout.ok_or("--distribution requires --subgrid")?;
        let (x, y) = (layout.band_rows(spec), layout.band_cols(spec));
        let set = if d == "ones" {
            DistributionSet::all_ones(x, y, layout.subgrid, spec.colors).map_err(|e| e.to_string())?
        } else {
            let text = std::fs::read_to_string(d).map_err(|e| format!("{d}: {e}"))?;
            DistributionSet::parse(&text, layout.subgrid).map_err(|e| e.to_string())?
        };
        add_distribution_constraints(&mut formula, &mut vm, &set).map_err(|e| e.to_string())?;
    }
    Ok((formula, vm))
}

fn read_coloring(path: &PathBuf) -> Result<Coloring, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Coloring::parse(&text).map_err(|e| e.to_string())
}

fn print_report(report: &RecipeReport) {
    for line in &report.detail {
        println!("  {line}");
    }
    let verdict = match &report.status {
        RecipeStatus::Pass => "PASS".to_string(),
        RecipeStatus::NonGating(why) => format!("NON-GATING ({why})"),
        RecipeStatus::Timeout(why) => format!("TIMEOUT ({why})"),
        RecipeStatus::Fail(why) => format!("FAIL ({why})"),
    };
    println!("{}: {verdict}", report.name);
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Encode { opts, out, map } => {
            let (formula, vm) = build_encoding(&opts)?;
            std::fs::write(&out, formula.to_dimacs()).map_err(|e| e.to_string())?;
            std::fs::write(&map, vm.to_map_text()).map_err(|e| e.to_string())?;
            println!(
                "wrote {} ({} vars, {} clauses) and {}",
                out.display(),
                formula.num_vars(),
                formula.num_clauses(),
                map.display()
            );
            Ok(0)
        }
        Command::Solve { opts, solver, format } => {
            let (formula, vm) = build_encoding(&opts)?;
            let outcome = match &solver.external_solver {
                Some(cmd) => {
                    let external = ExternalSolver::new(cmd).map_err(|e| e.to_string())?;
                    external.solve(&formula).map_err(|e| e.to_string())?
                }
                None => solve(&formula, &solver.config()).map_err(|e| e.to_string())?,
            };
            match outcome.status {
                SolveStatus::Sat => {
                    println!("s SATISFIABLE");
                    let coloring = vm.decode(outcome.model.as_ref().expect("sat")).map_err(|e| e.to_string())?;
                    match format {
                        Some(FormatArg::Svg) => {
                            let ropts = RenderOptions {
                                format: RenderFormat::Svg,
                                overlay: opts.layout.pattern_layout()?,
                                ..Default::default()
                            };
                            print!("{}", render(&coloring, &ropts).map_err(|e| e.to_string())?);
                        }
                        Some(FormatArg::Ascii) | None => print!("{}", coloring.to_text()),
                    }
                    Ok(0)
                }
                SolveStatus::Unsat => {
                    println!("s UNSATISFIABLE");
                    Ok(0)
                }
                SolveStatus::Unknown => {
                    println!("s UNKNOWN");
                    if let Some(b) = outcome.best_unsat {
                        println!("c best unsatisfied clause count {b}");
                    }
                    Ok(3)
                }
            }
        }
        Command::Enumerate { opts, solver, limit, classify: do_classify, quiet } => {
            let (formula, vm) = build_encoding(&opts)?;
            let result = enumerate(&formula, &vm, limit.unwrap_or(usize::MAX), &solver.config())
                .map_err(|e| e.to_string())?;
            if !quiet {
                for c in &result.colorings {
                    println!("{}", c.to_text());
                }
            }
            println!("{} colorings ({})", result.colorings.len(), if result.complete { "complete" } else { "incomplete" });
            if do_classify && !result.colorings.is_empty() {
                let classes = classify(&result.colorings).map_err(|e| e.to_string())?;
                print!("{}", classes.report());
            }
            Ok(if result.complete { 0 } else { 3 })
        }
        Command::Verify { file, layout } => {
            let coloring = read_coloring(&file)?;
            let mut ok = true;
            match find_monochromatic_rectangle(&coloring) {
                Some(w) => {
                    println!("monochromatic rectangle: {w}");
                    ok = false;
                }
                None => println!("rectangle-free"),
            }
            if let Some(l) = layout.pattern_layout()? {
                if matches_layout(&coloring, &l).map_err(|e| e.to_string())? {
                    println!("layout conformant");
                } else {
                    println!("layout violated");
                    ok = false;
                }
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::Classify { files } => {
            if files.is_empty() {
                return Err("no coloring files given".into());
            }
            let colorings: Result<Vec<Coloring>, String> = files.iter().map(read_coloring).collect();
            let classes = classify(&colorings?).map_err(|e| e.to_string())?;
            print!("{}", classes.report());
            Ok(0)
        }
        Command::Distribute { action } => match action {
            DistributeAction::Check { file, subgrid, direction } => {
                let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
                let set = DistributionSet::parse(&text, subgrid).map_err(|e| e.to_string())?;
                let dir = match direction {
                    DirectionArg::Left => ShiftDirection::Left,
                    DirectionArg::Right => ShiftDirection::Right,
                    DirectionArg::Both => ShiftDirection::SelectorBoth,
                };
                let report = check_necessary_for(&set, dir).map_err(|e| e.to_string())?;
                print!("{report}");
                Ok(if report.passed() { 0 } else { 1 })
            }
            DistributeAction::Search { x, y, z, k, limit, node_budget } => {
                let opts = SearchOptions { node_budget, ..Default::default() };
                let result = search_distributions(x, y, z, k, limit, opts).map_err(|e| e.to_string())?;
                for set in &result.sets {
                    println!("{}", set.to_text());
                }
                println!(
                    "{} distribution sets ({}, {} nodes)",
                    result.sets.len(),
                    if result.complete { "complete" } else { "incomplete" },
                    result.nodes
                );
                Ok(if result.complete { 0 } else { 3 })
            }
            DistributeAction::Export { x, y, z, k } => {
                print!("{}", export_smtlib(x, y, z, k));
                Ok(0)
            }
        },
        Command::Decode { map, model } => {
            let map_text = std::fs::read_to_string(&map).map_err(|e| format!("{}: {e}", map.display()))?;
            let model_text =
                std::fs::read_to_string(&model).map_err(|e| format!("{}: {e}", model.display()))?;
            let assignment = read_dimacs_model(&model_text).map_err(|e| e.to_string())?;
            let coloring = decode_with_map(&map_text, &assignment).map_err(|e| e.to_string())?;
            print!("{}", coloring.to_text());
            Ok(0)
        }
        Command::Render { file, format, layout, cell_size } => {
            let coloring = read_coloring(&file)?;
            let opts = RenderOptions {
                format: match format {
                    FormatArg::Ascii => RenderFormat::Ascii,
                    FormatArg::Svg => RenderFormat::Svg,
                },
                overlay: layout.pattern_layout()?,
                cell_size,
                ..Default::default()
            };
            print!("{}", render(&coloring, &opts).map_err(|e| e.to_string())?);
            Ok(0)
        }
        Command::Repro { name, all, list, timeout, heavy_timeout, seed } => {
            let book = recipe_book();
            if list {
                for recipe in &book {
                    println!(
                        "{:<20} {} [{}] expecting: {}",
                        recipe.name,
                        recipe.description,
                        if recipe.gating { "gating" } else { "non-gating" },
                        recipe.expected
                    );
                }
                return Ok(0);
            }
            let ctx = RecipeContext {
                seed,
                solve_timeout: Duration::from_secs(timeout.max(1)),
                heavy_timeout: Duration::from_secs(heavy_timeout.max(1)),
            };
            let selected: Vec<_> = if all {
                book
            } else {
                let name = name.ok_or("give a recipe name or --all (see --list)")?;
                vec![book.into_iter().find(|r| r.name == name).ok_or(format!("unknown recipe {name:?}"))?]
            };
            let mut worst = 0u8;
            for recipe in selected {
                println!("== {} ({})", recipe.name, recipe.description);
                let report = (recipe.run)(&ctx);
                print_report(&report);
                let code = match (&report.status, recipe.gating) {
                    (RecipeStatus::Pass, _) | (RecipeStatus::NonGating(_), _) => 0,
                    (RecipeStatus::Timeout(_), false) => 0,
                    (RecipeStatus::Timeout(_), true) => 3,
                    (RecipeStatus::Fail(_), true) => 1,
                    (RecipeStatus::Fail(_), false) => 1,
                };
                worst = worst.max(code);
            }
            Ok(worst)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
