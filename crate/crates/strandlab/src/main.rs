//! Batch front end: run property checks on builtin or file scenarios, compute
//! policy closures, validate and render bundles.
//!
//! Exit codes: 0 all checks passed, 1 usage or parse error, 2 an attack was
//! found, 3 the state budget was exceeded.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use strandlab::kmp::{closure, ClosureKind, Policy};
use strandlab::protocols;
use strandlab::scenario::{parse_scenario, ParsedScenario};
use strandlab::search::{check_property, SearchError, Verdict};
use strandlab::strand::Bundle;

#[derive(Parser)]
#[command(name = "strandlab", version, about = "symbolic protocol analysis workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the declared property checks of a scenario.
    Check(CheckArgs),
    /// Compute a key-management policy closure and its reachable sets.
    Closure(ClosureArgs),
    /// Validate or render bundle files.
    Bundle(BundleArgs),
    /// List builtin scenarios and their expectation tables.
    List,
}

#[derive(Args)]
struct CheckArgs {
    /// Builtin scenario name or path to a scenario file (builtins win).
    scenario: String,
    /// Only check the named property.
    #[arg(long)]
    property: Option<String>,
    /// Disable unique origination of all fresh parameters.
    #[arg(long)]
    no_unique_origination: bool,
    /// Parallel workers for the search.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write witness bundles (DOT) into this directory.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct ClosureArgs {
    /// Policy file path, or the builtin name 'secure-templates'.
    policy: String,
    /// original | original5 | refined
    #[arg(long, default_value = "refined")]
    kind: String,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BundleArgs {
    #[command(subcommand)]
    action: BundleAction,
}

#[derive(Subcommand)]
enum BundleAction {
    /// Validate a bundle JSON file.
    Validate { file: PathBuf },
    /// Render a bundle JSON file as Graphviz DOT on stdout.
    Dot { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Closure(args) => cmd_closure(args),
        Command::Bundle(args) => match args.action {
            BundleAction::Validate { file } => cmd_bundle_validate(file),
            BundleAction::Dot { file } => cmd_bundle_dot(file),
        },
        Command::List => cmd_list(),
    }
}

fn budget_override() -> Option<u64> {
    std::env::var("STRANDLAB_BUDGET_STATES").ok().and_then(|v| v.parse().ok())
}

fn load_scenario(name_or_path: &str) -> Result<ParsedScenario, String> {
    if let Some(builtin) = protocols::scenario(name_or_path) {
        return Ok(ParsedScenario {
            name: builtin.name.to_string(),
            spec: builtin.spec,
            config: builtin.config,
            properties: builtin.properties,
        });
    }
    let src = std::fs::read_to_string(name_or_path)
        .map_err(|e| format!("cannot read '{}': {}", name_or_path, e))?;
    parse_scenario(&src).map_err(|e| format!("{}: {}", name_or_path, e))
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let mut scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(1);
        }
    };
    scenario.config.workers = args.workers;
    if args.no_unique_origination {
        scenario.config.enforce_unique_origination = false;
    }
    if let Some(budget) = budget_override() {
        scenario.config.max_states = budget;
    }
    let properties: Vec<_> = match &args.property {
        Some(name) => {
            let found: Vec<_> =
                scenario.properties.iter().filter(|p| &p.name == name).cloned().collect();
            if found.is_empty() {
                eprintln!("error: no property named '{}'", name);
                return ExitCode::from(1);
            }
            found
        }
        None => scenario.properties.clone(),
    };
    if properties.is_empty() {
        eprintln!("error: scenario declares no properties");
        return ExitCode::from(1);
    }

    let mut results = Vec::new();
    let mut any_attack = false;
    for prop in &properties {
        match check_property(&scenario.spec, prop, &scenario.config) {
            Ok(verdict) => {
                if let Verdict::Attack { witness, .. } = &verdict {
                    any_attack = true;
                    if let Some(dir) = &args.dot {
                        if std::fs::create_dir_all(dir).is_ok() {
                            let path = dir.join(format!("{}.dot", prop.name));
                            let _ = std::fs::write(&path, witness.to_dot(&prop.name));
                        }
                    }
                }
                results.push((prop.name.clone(), verdict.to_json()));
            }
            Err(SearchError::BudgetExceeded { states_explored }) => {
                let report = serde_json::json!({
                    "scenario": scenario.name,
                    "result": "budget-exceeded",
                    "property": prop.name,
                    "states_explored": states_explored,
                });
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
                return ExitCode::from(3);
            }
            Err(e) => {
                eprintln!("error: {}", e);
                return ExitCode::from(1);
            }
        }
    }
    let report = serde_json::json!({
        "scenario": scenario.name,
        "checks": results.into_iter().map(|(name, v)| {
            serde_json::json!({ "property": name, "verdict": v })
        }).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    ExitCode::from(if any_attack { 2 } else { 0 })
}

fn cmd_closure(args: ClosureArgs) -> ExitCode {
    let policy = if args.policy == "secure-templates" {
        Policy::secure_templates()
    } else {
        match std::fs::read_to_string(&args.policy)
            .map_err(|e| e.to_string())
            .and_then(|src| Policy::parse(&src).map_err(|e| e.to_string()))
        {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {}: {}", args.policy, e);
                return ExitCode::from(1);
            }
        }
    };
    let kind = match args.kind.as_str() {
        "original" => ClosureKind::Original,
        "original5" => ClosureKind::OriginalWithItem5,
        "refined" => ClosureKind::Refined,
        other => {
            eprintln!("error: unknown closure kind '{}'", other);
            return ExitCode::from(1);
        }
    };
    let result = closure(&policy, kind);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result.to_json()).unwrap());
    } else {
        println!("closure kind: {:?}", kind);
        println!("implied:");
        for (s, op, d) in &result.implied {
            println!("  {} ={}=> {}", s, op, d);
        }
        println!("reachable:");
        for (k, r) in &result.reach {
            let names: Vec<String> = r.iter().map(|t| t.to_string()).collect();
            println!("  R_{} = {{{}}}", k, names.join(", "));
        }
        let secure: Vec<String> =
            strandlab::kmp::secure_types(&result).iter().map(|t| t.to_string()).collect();
        println!("secure types: {{{}}}", secure.join(", "));
    }
    ExitCode::from(0)
}

fn cmd_bundle_validate(file: PathBuf) -> ExitCode {
    let src = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", file.display(), e);
            return ExitCode::from(1);
        }
    };
    match Bundle::from_json(&src) {
        Ok(bundle) => {
            let nodes: usize = bundle.strands().map(|s| bundle.included_len(s.id)).sum();
            println!("ok: {} strands, {} nodes", bundle.strands().count(), nodes);
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("invalid bundle: {}", e);
            ExitCode::from(1)
        }
    }
}

fn cmd_bundle_dot(file: PathBuf) -> ExitCode {
    let src = match std::fs::read_to_string(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {}", file.display(), e);
            return ExitCode::from(1);
        }
    };
    match Bundle::from_json(&src) {
        Ok(bundle) => {
            let name = file.file_stem().and_then(|s| s.to_str()).unwrap_or("bundle");
            print!("{}", bundle.to_dot(name));
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("invalid bundle: {}", e);
            ExitCode::from(1)
        }
    }
}

fn cmd_list() -> ExitCode {
    for scenario in protocols::scenarios() {
        println!("{}", scenario.name);
        let mut by_prop: BTreeMap<&str, Vec<&protocols::ExpectedCheck>> = BTreeMap::new();
        for check in &scenario.expected {
            by_prop.entry(check.property.as_str()).or_default().push(check);
        }
        for (prop, checks) in by_prop {
            for c in checks {
                let expect = if c.expect_attack { "attack" } else { "pass" };
                println!("  {:<55} -> {}", c.name, expect);
            }
            let _ = prop;
        }
    }
    ExitCode::from(0)
}
