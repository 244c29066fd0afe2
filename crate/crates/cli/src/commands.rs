use std::path::Path;

use serde_json::{json, Value as Json};
use stipula::analysis::{AnalysisOptions, AnalysisReport, Analyzer, Verdict as Analysis};
use stipula::check::{check_all, has_errors};
use stipula::equivalence::{bisimilar, observable_lts, ObsOptions, Verdict};
use stipula::semantics::{
    explore, run_scenario, Bindings, Contract, Environment, ExploreOptions, Scenario, ScenarioError,
};
use stipula::{parse_source, pretty_print, ContractAst};

use crate::{Bounds, Command, Exit, PropertyArg, FAILED, INCONCLUSIVE, OK};

pub const DEFAULT_BUDGET: usize = 1_000_000;

pub fn dispatch(command: Command) -> Result<u8, Exit> {
    match command {
        Command::Parse { contract, json } => parse(&contract, json),
        Command::Check { contract, json } => check(&contract, json),
        Command::Run {
            contract,
            scenario,
            env,
            show_final,
        } => run(&contract, &scenario, env.as_deref(), show_final),
        Command::Repl {
            contract,
            env,
            export,
        } => {
            let contract = load_contract(&contract)?;
            let env = env.as_deref().map(load_env).transpose()?;
            crate::repl::session(
                &contract,
                env.as_ref(),
                export.as_deref(),
                std::io::stdin().lock(),
                std::io::stdout().lock(),
            )
        }
        Command::Explore {
            contract,
            bounds,
            parallel,
            json,
        } => explore_cmd(&contract, &bounds, parallel, json),
        Command::Equiv {
            left,
            right,
            bounds,
            json,
            witness_json,
        } => equiv(&left, &right, &bounds, json, witness_json.as_deref()),
        Command::Analyze {
            contract,
            bounds,
            property,
            parallel,
            json,
        } => analyze(&contract, &bounds, property, parallel, json),
    }
}

fn read(path: &Path) -> Result<String, Exit> {
    std::fs::read_to_string(path).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))
}

fn parse_file(path: &Path) -> Result<ContractAst, Exit> {
    parse_source(&read(path)?).map_err(|e| Exit::failed(format!("{}:{e}", path.display())))
}

/// Parses and checks; any error diagnostic stops the command.
pub fn load_contract(path: &Path) -> Result<Contract, Exit> {
    let ast = parse_file(path)?;
    let diagnostics = check_all(&ast);
    if has_errors(&diagnostics) {
        let file = path.display().to_string();
        let lines: Vec<String> = diagnostics
            .iter()
            .filter(|d| d.is_error())
            .map(|d| d.render(&file))
            .collect();
        return Err(Exit::failed(lines.join("\n")));
    }
    Ok(Contract::new(ast))
}

pub fn load_env(path: &Path) -> Result<Environment, Exit> {
    Environment::parse(&read(path)?).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))
}

fn parse(path: &Path, json: bool) -> Result<u8, Exit> {
    let ast = parse_file(path)?;
    let text = pretty_print(&ast);
    if json {
        println!("{}", json!({ "contract": ast.name.text, "source": text }));
    } else {
        print!("{text}");
    }
    Ok(OK)
}

fn check(path: &Path, json: bool) -> Result<u8, Exit> {
    let ast = parse_file(path)?;
    let diagnostics = check_all(&ast);
    let file = path.display().to_string();
    if json {
        let items: Vec<Json> = diagnostics.iter().map(|d| d.to_json(&file)).collect();
        println!("{}", Json::Array(items));
    } else {
        for d in &diagnostics {
            println!("{}", d.render(&file));
        }
    }
    Ok(if has_errors(&diagnostics) { FAILED } else { OK })
}

fn run(contract: &Path, scenario: &Path, env: Option<&Path>, show_final: bool) -> Result<u8, Exit> {
    let contract = load_contract(contract)?;
    let bindings: Bindings = match env {
        Some(path) => load_env(path)?.parties,
        None => Bindings::new(),
    };
    let scenario = Scenario::parse(&read(scenario)?)
        .map_err(|e| Exit::failed(format!("{}: {e}", scenario.display())))?;
    match run_scenario(&contract, &bindings, &scenario) {
        Ok(trace) => {
            print!("{}", trace.to_jsonl());
            if show_final {
                println!("{}", json!({ "final": trace.last.to_json(&contract) }));
            }
            Ok(OK)
        }
        Err(err) => {
            if let ScenarioError::Rejected {
                partial: Some(trace), ..
            } = &err
            {
                print!("{}", trace.to_jsonl());
            }
            Err(Exit::failed(err.to_string()))
        }
    }
}

/// Horizon and budget: flags first, then the environment.
fn resolve(bounds: &Bounds) -> Result<(Environment, i64, usize), Exit> {
    let env = load_env(&bounds.env)?;
    let horizon = bounds
        .horizon
        .or(env.horizon)
        .ok_or_else(|| Exit::usage("a horizon is needed: pass --horizon or set one in the environment"))?;
    if horizon < 0 {
        return Err(Exit::usage("the horizon cannot be negative"));
    }
    let budget = bounds.budget.or(env.budget).unwrap_or(DEFAULT_BUDGET);
    Ok((env, horizon, budget))
}

fn explore_cmd(path: &Path, bounds: &Bounds, parallel: bool, json: bool) -> Result<u8, Exit> {
    let contract = load_contract(path)?;
    let (env, horizon, budget) = resolve(bounds)?;
    let domains = env.domains(&contract).map_err(|e| Exit::usage(e.to_string()))?;
    let mut options = ExploreOptions::new(horizon, budget);
    options.parallel = parallel;
    let lts = explore(&contract, &domains, &options);
    let stuck = lts.stuck_nodes().count();
    if json {
        let nodes: Vec<Json> = lts
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                json!({
                    "id": id,
                    "configuration": n.config.to_json(&contract),
                    "stuck": n.stuck.as_ref().map(|e| e.to_string()),
                })
            })
            .collect();
        let edges: Vec<Json> = lts
            .edges
            .iter()
            .map(|e| json!({ "from": e.from, "action": e.action.to_string(), "to": e.to }))
            .collect();
        println!(
            "{}",
            json!({
                "horizon": horizon,
                "budget": budget,
                "complete": lts.complete,
                "configurations": lts.nodes.len(),
                "transitions": lts.edges.len(),
                "stuck": stuck,
                "nodes": nodes,
                "edges": edges,
            })
        );
    } else {
        println!("horizon: {horizon}");
        println!("configurations: {}", lts.nodes.len());
        println!("transitions: {}", lts.edges.len());
        println!("stuck: {stuck}");
        println!("complete: {}", lts.complete);
        for id in lts.stuck_nodes() {
            let node = lts.node(id);
            let error = node.stuck.as_ref().expect("stuck node");
            println!("  {}: {error}", node.config.summary(&contract));
        }
    }
    Ok(if lts.complete { OK } else { INCONCLUSIVE })
}

fn equiv(
    left: &Path,
    right: &Path,
    bounds: &Bounds,
    json: bool,
    witness_json: Option<&Path>,
) -> Result<u8, Exit> {
    let a = load_contract(left)?;
    let b = load_contract(right)?;
    let (env, horizon, budget) = resolve(bounds)?;
    let options = ObsOptions::new(horizon, budget);
    let la =
        observable_lts(&a, &env, &options).map_err(|e| Exit::usage(format!("{}: {e}", left.display())))?;
    let lb =
        observable_lts(&b, &env, &options).map_err(|e| Exit::usage(format!("{}: {e}", right.display())))?;
    let verdict = bisimilar(&la, &lb).map_err(|e| Exit::usage(e.to_string()))?;
    if let (Some(path), Some(w)) = (witness_json, &verdict.witness) {
        std::fs::write(path, w.to_jsonl()).map_err(|e| Exit::usage(format!("{}: {e}", path.display())))?;
    }
    let name = match verdict.verdict {
        Verdict::Bisimilar => "bisimilar",
        Verdict::NotBisimilar => "not-bisimilar",
        Verdict::Inconclusive => "inconclusive",
    };
    if json {
        let witness: Option<Vec<Json>> = verdict.witness.as_ref().map(|w| {
            w.to_jsonl()
                .lines()
                .map(|l| serde_json::from_str(l).expect("witness lines are JSON"))
                .collect()
        });
        println!(
            "{}",
            json!({
                "verdict": name,
                "horizon": horizon,
                "budget": budget,
                "blocks": verdict.blocks,
                "witness": witness,
            })
        );
    } else {
        match verdict.verdict {
            Verdict::Bisimilar => println!(
                "bisimilar up to horizon {horizon} over the environment's domains ({} blocks)",
                verdict.blocks
            ),
            Verdict::NotBisimilar => {
                println!("not bisimilar up to horizon {horizon}; witness:");
                if let Some(w) = &verdict.witness {
                    println!("{w}");
                }
            }
            Verdict::Inconclusive => {
                println!("inconclusive: the budget of {budget} states was exhausted")
            }
        }
    }
    Ok(match verdict.verdict {
        Verdict::Bisimilar => OK,
        Verdict::NotBisimilar => FAILED,
        Verdict::Inconclusive => INCONCLUSIVE,
    })
}

fn analyze(
    path: &Path,
    bounds: &Bounds,
    property: PropertyArg,
    parallel: bool,
    json: bool,
) -> Result<u8, Exit> {
    let contract = load_contract(path)?;
    let (env, horizon, budget) = resolve(bounds)?;
    let mut options = AnalysisOptions::new(horizon, budget);
    options.parallel = parallel;
    let analyzer = Analyzer::new(&contract, &env, &options).map_err(|e| Exit::usage(e.to_string()))?;
    let reports: Vec<AnalysisReport> = match property {
        PropertyArg::All => analyzer.all(),
        PropertyArg::AssetSafety => vec![analyzer.asset_safety()],
        PropertyArg::Liquidity => vec![analyzer.liquidity()],
        PropertyArg::DeadEnds => vec![analyzer.dead_ends()],
    };
    if json {
        let items: Vec<Json> = reports.iter().map(AnalysisReport::to_json).collect();
        println!("{}", Json::Array(items));
    } else {
        for r in &reports {
            print!("{r}");
        }
    }
    let verdicts: Vec<Analysis> = reports.iter().map(|r| r.verdict).collect();
    Ok(if verdicts.contains(&Analysis::Violated) {
        FAILED
    } else if verdicts.contains(&Analysis::InconclusiveBudget) {
        INCONCLUSIVE
    } else {
        OK
    })
}
