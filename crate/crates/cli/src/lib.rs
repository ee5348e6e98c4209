//! Subcommands behind the `meshplan` binary.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use meshplan::analysis::{bound_report, build_worst_chain};
use meshplan::generate::{generate, GenParams, Obstruction};
use meshplan::oracle::{brute_force_steiner_tc, DEFAULT_MAX_SPACE};
use meshplan::plan::{validate, PlanDocument};
use meshplan::{run_pipeline, steiner_tc_solve, Error, HybridOrder, PlanOptions, PlanningInstance};

#[derive(Parser, Debug)]
#[command(
    name = "meshplan",
    version,
    about = "Plan tower heights, link capacity and hyperlinks for rural wireless meshes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random instance, or the worst-case chain with --chain.
    Gen(GenArgs),
    /// Run the planning pipeline on an instance.
    Plan(PlanArgs),
    /// Compare the greedy tower cost against the exhaustive optimum.
    OracleCompare(CompareArgs),
    /// Print the applicable performance bound, and plan costs if given.
    Report(ReportArgs),
    /// Re-check a plan document against its instance.
    Validate(ValidateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObstructionModel {
    Uniform,
    Hill,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Terminals including the landline.
    #[arg(long, default_value_t = 5)]
    pub terminals: usize,
    #[arg(long, default_value_t = 2)]
    pub non_terminals: usize,
    /// Side of the square area in meters.
    #[arg(long, default_value_t = 10_000.0)]
    pub area: f64,
    #[arg(long, default_value_t = 5)]
    pub demand_min: u32,
    #[arg(long, default_value_t = 40)]
    pub demand_max: u32,
    #[arg(long, value_enum, default_value_t = ObstructionModel::Uniform)]
    pub obstruction: ObstructionModel,
    /// Largest uniform obstruction, or the hill peak.
    #[arg(long, default_value_t = 30)]
    pub ob_max: u32,
    #[arg(long, default_value_t = 5.0)]
    pub height_step: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_attempts: usize,
    /// Emit the worst-case chain `|A|,|B|,γ` instead of a random instance.
    #[arg(long, value_name = "A,B,GAMMA", value_parser = parse_chain)]
    pub chain: Option<(usize, usize, usize)>,
    /// Per-terminal demand for --chain.
    #[arg(long, default_value_t = 10.0)]
    pub chain_demand: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "mp,omni", value_parser = parse_order)]
    pub hybrid: HybridOrder,
    /// Include the greedy iteration trace.
    #[arg(long)]
    pub trace: bool,
    /// Override the instance's height discretization.
    #[arg(long)]
    pub height_step: Option<f64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Instance files or glob patterns.
    #[arg(required = true)]
    pub instances: Vec<String>,
    /// Largest height-assignment space the oracle will enumerate.
    #[arg(long, default_value_t = DEFAULT_MAX_SPACE)]
    pub max_space: u128,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    pub plan: PathBuf,
}

fn parse_chain(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, g] => {
            let n = |x: &str| x.parse::<usize>().map_err(|e| format!("'{x}': {e}"));
            Ok((n(a)?, n(b)?, n(g)?))
        }
        _ => Err("expected A,B,GAMMA".into()),
    }
}

fn parse_order(s: &str) -> Result<HybridOrder, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, io::Error),
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Io(..) => 2,
            CliError::Core(e) => match e {
                Error::InvalidInstance(_)
                | Error::UnknownVertex(_)
                | Error::DemandExceedsCapacity { .. }
                | Error::Config(_)
                | Error::Json(_) => 2,
                Error::Infeasible(_) => 3,
                Error::GenerationFailed(_) => 4,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::CheckFailed(msg) => f.write_str(msg),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_instance(path: &Path) -> CliResult<PlanningInstance> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_owned(), e))?;
    Ok(PlanningInstance::from_json(&text)?)
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(path.to_owned(), e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io("<stdout>".into(), e)),
    }
}

pub fn cmd_gen(args: &GenArgs) -> CliResult<()> {
    let inst = match args.chain {
        Some((a, b, gamma)) => build_worst_chain(a, b, gamma, args.chain_demand)?,
        None => {
            let obstruction = match args.obstruction {
                ObstructionModel::Uniform => Obstruction::Uniform { max: args.ob_max },
                ObstructionModel::Hill => {
                    Obstruction::Hill { peak: args.ob_max as f64, sigma: args.area / 4.0, clutter: 5 }
                }
            };
            generate(&GenParams {
                seed: args.seed,
                terminals: args.terminals,
                non_terminals: args.non_terminals,
                area: args.area,
                demand_min: args.demand_min,
                demand_max: args.demand_max,
                obstruction,
                height_step: args.height_step,
                max_attempts: args.max_attempts,
                ..GenParams::default()
            })?
        }
    };
    let mut text = inst.to_json()?;
    text.push('\n');
    emit(args.output.as_deref(), &text)
}

pub fn cmd_plan(args: &PlanArgs) -> CliResult<()> {
    let mut inst = read_instance(&args.instance)?;
    if let Some(step) = args.height_step {
        inst = inst.with_height_step(step)?;
    }
    let doc = run_pipeline(&inst, PlanOptions { hybrid: args.hybrid, trace: args.trace })?;
    log::info!("planned {}: total cost {}", args.instance.display(), doc.cost.total);
    emit(args.output.as_deref(), &doc.to_json()?)
}

pub fn cmd_validate(args: &ValidateArgs) -> CliResult<()> {
    let inst = read_instance(&args.instance)?;
    let text = fs::read_to_string(&args.plan).map_err(|e| CliError::Io(args.plan.clone(), e))?;
    let doc = PlanDocument::from_json(&text)?;
    validate(&inst, &doc).map_err(|e| CliError::CheckFailed(format!("plan does not validate: {e}")))?;
    println!("ok");
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> CliResult<()> {
    let inst = read_instance(&args.instance)?;
    let b = bound_report(&inst)?;
    println!("terminals      {}", b.terminals);
    println!("non-terminals  {}", b.non_terminals);
    println!("gamma          {}", b.gamma);
    println!("case           {}", b.case.number());
    println!("ratio bound    {:.4}", b.ratio);
    if let Some(path) = &args.plan {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
        let doc = PlanDocument::from_json(&text)?;
        println!("tower cost     {}", doc.cost.tower);
        println!("link cost      {}", doc.cost.link);
        println!("antenna cost   {}", doc.cost.antenna);
        println!("total cost     {}", doc.cost.total);
        if let Some(h) = &doc.hybrid {
            println!("hybrid         {} ({} sector, {} omni)", h.order, h.mp.len(), h.omni.len());
            println!("cost delta     {}", h.cost_delta);
        }
    }
    Ok(())
}

/// One row of the oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub enum CompareRow {
    Compared { name: String, terminals: usize, greedy: f64, oracle: f64, bound: f64 },
    Skipped { name: String, reason: String },
}

impl CompareRow {
    /// `oracle ≤ greedy ≤ max(1, 2 ln|A|)·oracle`, compared exactly.
    pub fn passed(&self) -> Option<bool> {
        match *self {
            CompareRow::Compared { greedy, oracle, bound, .. } => Some(oracle <= greedy && greedy <= bound * oracle),
            CompareRow::Skipped { .. } => None,
        }
    }
}

impl fmt::Display for CompareRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompareRow::Compared { name, terminals, greedy, oracle, bound } => {
                let ratio = if *oracle > 0.0 { greedy / oracle } else { f64::NAN };
                let status = if self.passed() == Some(true) { "PASS" } else { "FAIL" };
                write!(f, "{name}\t{terminals}\t{greedy}\t{oracle}\t{ratio:.4}\t{bound:.4}\t{status}")
            }
            CompareRow::Skipped { name, reason } => write!(f, "{name}\t-\t-\t-\t-\t-\tSKIP ({reason})"),
        }
    }
}

pub fn ratio_bound(terminals: usize) -> f64 {
    (2.0 * (terminals as f64).ln()).max(1.0)
}

pub fn compare_instance(name: &str, inst: &PlanningInstance, max_space: u128) -> CompareRow {
    let skip = |reason: String| CompareRow::Skipped { name: name.to_owned(), reason };
    let oracle = match brute_force_steiner_tc(inst, max_space) {
        Ok(r) => r.tower_cost,
        Err(e) => return skip(e.to_string()),
    };
    match steiner_tc_solve(inst) {
        Ok(sol) => CompareRow::Compared {
            name: name.to_owned(),
            terminals: inst.terminals().len(),
            greedy: sol.tower_cost(inst),
            oracle,
            bound: ratio_bound(inst.terminals().len()),
        },
        Err(e) => skip(format!("greedy failed: {e}")),
    }
}

fn expand(patterns: &[String]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        let paths = glob::glob(p).map_err(|e| CliError::Core(Error::Config(format!("bad pattern '{p}': {e}"))))?;
        let before = out.len();
        for entry in paths {
            out.push(entry.map_err(|e| CliError::Io(e.path().to_owned(), io::Error::other(e.to_string())))?);
        }
        if out.len() == before {
            log::warn!("pattern '{p}' matched nothing");
        }
    }
    Ok(out)
}

/// Rows in input order. Files that fail to load become skipped rows.
pub fn compare_paths(paths: &[PathBuf], max_space: u128) -> Vec<CompareRow> {
    paths
        .par_iter()
        .map(|path| {
            let name = path.display().to_string();
            match read_instance(path) {
                Ok(inst) => compare_instance(&name, &inst, max_space),
                Err(e) => CompareRow::Skipped { name, reason: e.to_string() },
            }
        })
        .collect()
}

pub fn cmd_oracle_compare(args: &CompareArgs) -> CliResult<()> {
    let paths = expand(&args.instances)?;
    let rows = compare_paths(&paths, args.max_space);
    println!("instance\t|A|\tgreedy\toracle\tratio\tbound\tstatus");
    let (mut pass, mut fail, mut skipped) = (0, 0, 0);
    for row in &rows {
        println!("{row}");
        match row.passed() {
            Some(true) => pass += 1,
            Some(false) => fail += 1,
            None => {
                log::warn!("skipped: {row}");
                skipped += 1;
            }
        }
    }
    println!("summary: {} instances, {pass} pass, {fail} fail, {skipped} skipped", rows.len());
    if fail > 0 {
        return Err(CliError::CheckFailed(format!("{fail} instance(s) outside the ratio bound")));
    }
    Ok(())
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Plan(a) => cmd_plan(a),
        Command::OracleCompare(a) => cmd_oracle_compare(a),
        Command::Report(a) => cmd_report(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_argument() {
        assert_eq!(parse_chain("8,3,2"), Ok((8, 3, 2)));
        assert_eq!(parse_chain(" 10, 4 ,5"), Ok((10, 4, 5)));
        assert!(parse_chain("8,3").is_err());
        assert!(parse_chain("8,x,2").is_err());
    }

    #[test]
    fn ratio_bound_floor() {
        assert_eq!(ratio_bound(2), 1.3862943611198906);
        assert_eq!(ratio_bound(1), 1.0);
        assert_eq!(ratio_bound(3), 2.0 * 3f64.ln());
    }

    #[test]
    fn compare_row_status() {
        let row = |greedy, oracle| CompareRow::Compared { name: "x".into(), terminals: 3, greedy, oracle, bound: 2.0 };
        assert_eq!(row(300.0, 200.0).passed(), Some(true));
        assert_eq!(row(400.0, 200.0).passed(), Some(true));
        assert_eq!(row(401.0, 200.0).passed(), Some(false));
        assert_eq!(row(199.0, 200.0).passed(), Some(false));
        assert_eq!(CompareRow::Skipped { name: "x".into(), reason: "r".into() }.passed(), None);
        assert!(row(401.0, 200.0).to_string().ends_with("FAIL"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::InvalidInstance("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Infeasible("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::GenerationFailed(3)).exit_code(), 4);
        assert_eq!(CliError::from(Error::Inconsistent("x".into())).exit_code(), 1);
        assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 1);
    }

    #[test]
    fn cli_parses_flags() {
        let cli =
            Cli::try_parse_from(["meshplan", "plan", "i.json", "--hybrid=omni,mp", "--trace", "-o", "p.json"]).unwrap();
        let Command::Plan(p) = cli.command else { panic!("expected plan") };
        assert_eq!(p.hybrid, HybridOrder::OmniMp);
        assert!(p.trace);
        assert!(Cli::try_parse_from(["meshplan", "plan", "i.json", "--hybrid=all"]).is_err());
    }
}
