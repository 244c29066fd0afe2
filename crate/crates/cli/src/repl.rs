//! Interactive stepping. Every accepted command extends a scenario, and the
//! session state is always the result of running that scenario, so an
//! exported session replays to the same trace.

use std::io::{BufRead, Write};
use std::path::Path;

use stipula::semantics::{
    run_scenario, Bindings, CallAction, Configuration, Contract, Enabled, Environment, Scenario,
    ScenarioEntry, Terms, Trace,
};
use stipula::{AssetValue, TokenId, Value};

use crate::{Exit, OK};

const HELP: &str = "\
commands:
  agree [Role=identity ...] [field=value ...]
  call <party> <function> [value ...] [asset ...]   assets: 50 or token:<id>
  tick [n]          let n ticks pass (default 1)
  fire <id>         fire a ready event
  show              state, assets, pending events and enabled actions
  trace             the trace so far as JSON Lines
  quit";

struct Session<'a> {
    contract: &'a Contract,
    env: Option<&'a Environment>,
    scenario: Scenario,
    trace: Option<Trace>,
}

pub fn session(
    contract: &Contract,
    env: Option<&Environment>,
    export: Option<&Path>,
    input: impl BufRead,
    mut out: impl Write,
) -> Result<u8, Exit> {
    let mut s = Session {
        contract,
        env,
        scenario: Scenario::default(),
        trace: None,
    };
    let io = |e: std::io::Error| Exit::failed(e.to_string());
    writeln!(out, "{}", s.status()).map_err(io)?;
    write!(out, "> ").map_err(io)?;
    out.flush().map_err(io)?;
    for line in input.lines() {
        let line = line.map_err(io)?;
        let words = split(&line);
        let Some(command) = words.first() else {
            write!(out, "> ").map_err(io)?;
            out.flush().map_err(io)?;
            continue;
        };
        let reply = match command.as_str() {
            "quit" | "exit" => break,
            "help" => HELP.to_string(),
            "show" => s.show(),
            "trace" => s.trace.as_ref().map(Trace::to_jsonl).unwrap_or_default(),
            _ => match s.entry(command, &words[1..]) {
                Ok(entry) => s.submit(entry),
                Err(message) => format!("error: {message}"),
            },
        };
        if !reply.is_empty() {
            writeln!(out, "{}", reply.trim_end()).map_err(io)?;
        }
        writeln!(out, "{}", s.status()).map_err(io)?;
        write!(out, "> ").map_err(io)?;
        out.flush().map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    if let Some(path) = export {
        std::fs::write(path, s.scenario.to_text())
            .map_err(|e| Exit::usage(format!("{}: {e}", path.display())))?;
        writeln!(out, "scenario written to {}", path.display()).map_err(io)?;
    }
    Ok(OK)
}

impl Session<'_> {
    fn bindings(&self) -> Bindings {
        self.env.map(|e| e.parties.clone()).unwrap_or_default()
    }

    fn config(&self) -> Option<Configuration> {
        match &self.trace {
            Some(t) => Some(t.last.clone()),
            None => self.contract.init(&self.bindings()).ok(),
        }
    }

    fn enabled(&self) -> Vec<String> {
        match &self.trace {
            Some(t) => self
                .contract
                .enabled_actions(&t.last)
                .iter()
                .map(Enabled::to_string)
                .collect(),
            None => vec!["agree".into()],
        }
    }

    fn status(&self) -> String {
        let head = match &self.trace {
            Some(t) => t.last.summary(self.contract),
            None => "before agreement".to_string(),
        };
        format!("[{head}] enabled {{{}}}", self.enabled().join(", "))
    }

    fn show(&self) -> String {
        let Some(config) = self.config() else {
            return "no agreement yet".into();
        };
        let mut lines = vec![format!("clock: {}", config.clock)];
        if self.trace.is_some() {
            lines.push(format!("state: {}", config.state_name(self.contract)));
        } else {
            lines.push("state: before agreement".into());
        }
        for (name, value) in self.contract.ast.assets.iter().zip(&config.assets) {
            lines.push(format!("asset {name}: {value}"));
        }
        for (name, value) in self.contract.ast.fields.iter().zip(&config.fields) {
            if let Some(v) = value {
                lines.push(format!("field {name}: {v}"));
            }
        }
        for e in &config.events {
            let site = &self.contract.sites[e.site as usize];
            lines.push(format!(
                "event {}: at {} if @{}",
                e.id,
                e.trigger,
                self.contract.state_name(site.guard)
            ));
        }
        lines.push(format!("enabled: {{{}}}", self.enabled().join(", ")));
        lines.join("\n")
    }

    fn entry(&self, command: &str, args: &[String]) -> Result<ScenarioEntry, String> {
        let clock = self.trace.as_ref().map_or(0, |t| t.last.clock);
        match command {
            "agree" => self.agree(args),
            "call" => self.call(args),
            "tick" => {
                let n = match args {
                    [] => 1,
                    [n] => n.parse::<i64>().map_err(|_| format!("not a tick count: {n}"))?,
                    _ => return Err("usage: tick [n]".into()),
                };
                if n < 0 {
                    return Err("time only moves forward".into());
                }
                Ok(ScenarioEntry::TickTo(clock + n))
            }
            "fire" => match args {
                [id] => id
                    .parse()
                    .map(ScenarioEntry::ExpectEvent)
                    .map_err(|_| format!("not an event id: {id}")),
                _ => Err("usage: fire <id>".into()),
            },
            other => Err(format!("unknown command `{other}`; try help")),
        }
    }

    fn agree(&self, args: &[String]) -> Result<ScenarioEntry, String> {
        let roles: Vec<&str> = self
            .contract
            .ast
            .agreement
            .parties
            .iter()
            .map(|p| p.as_str())
            .collect();
        let mut parties = Bindings::new();
        let mut terms = Terms::new();
        for arg in args {
            let (key, value) = arg
                .split_once('=')
                .ok_or_else(|| format!("expected name=value, got {arg}"))?;
            if roles.contains(&key) {
                parties.insert(key.to_string(), value.to_string());
            } else {
                terms.insert(key.to_string(), parse_value(value));
            }
        }
        if let Some(env) = self.env {
            for field in self.contract.agreed_fields() {
                if let (false, Some([only])) = (
                    terms.contains_key(field),
                    env.fields.get(field).map(Vec::as_slice),
                ) {
                    terms.insert(field.to_string(), only.clone());
                }
            }
        }
        Ok(ScenarioEntry::Agree { parties, terms })
    }

    fn call(&self, args: &[String]) -> Result<ScenarioEntry, String> {
        let [party, function, rest @ ..] = args else {
            return Err("usage: call <party> <function> [value ...] [asset ...]".into());
        };
        let values = self
            .contract
            .ast
            .functions
            .iter()
            .find(|f| f.name.as_str() == function && f.caller.as_str() == party)
            .map_or(rest.len(), |f| f.value_params.len().min(rest.len()));
        let assets = rest[values..]
            .iter()
            .map(|a| parse_asset(a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScenarioEntry::Call(CallAction {
            party: party.clone(),
            function: function.clone(),
            args: rest[..values].iter().map(|v| parse_value(v)).collect(),
            assets,
        }))
    }

    /// Runs the scenario extended by `entry`; keeps it if accepted.
    fn submit(&mut self, entry: ScenarioEntry) -> String {
        let mut candidate = self.scenario.clone();
        candidate.entries.push(entry);
        match run_scenario(self.contract, &self.bindings(), &candidate) {
            Ok(trace) => {
                let seen = self.trace.as_ref().map_or(0, |t| t.entries.len());
                let fresh = Trace {
                    entries: trace.entries[seen..].to_vec(),
                    last: trace.last.clone(),
                };
                self.scenario = candidate;
                self.trace = Some(trace);
                fresh.to_jsonl()
            }
            Err(e) => format!("rejected: {e}"),
        }
    }
}

/// Words separated by blanks; double quotes group a word.
fn split(line: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut word = String::new();
    let mut quoted = false;
    let mut started = false;
    for ch in line.chars() {
        match ch {
            '"' => {
                quoted = !quoted;
                word.push(ch);
                started = true;
            }
            c if c.is_whitespace() && !quoted => {
                if started {
                    words.push(std::mem::take(&mut word));
                    started = false;
                }
            }
            c => {
                word.push(c);
                started = true;
            }
        }
    }
    if started {
        words.push(word);
    }
    words
}

/// Numbers, booleans, quoted strings; any other word is a string.
fn parse_value(text: &str) -> Value {
    if let Some(inner) = text.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        return Value::Str(inner.to_string());
    }
    match text {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => text
            .parse()
            .map(Value::Num)
            .unwrap_or_else(|_| Value::Str(text.to_string())),
    }
}

fn parse_asset(text: &str) -> Result<AssetValue, String> {
    if let Some(token) = text.strip_prefix("token:") {
        return Ok(AssetValue::NonFungible(TokenId(token.to_string())));
    }
    text.parse()
        .map(AssetValue::Fungible)
        .map_err(|_| format!("not an asset: {text} (use an amount or token:<id>)"))
}
