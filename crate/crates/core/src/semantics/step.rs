//! The transition relation: agreement, calls, event firing and time.

use std::collections::BTreeSet;

use super::config::{Bindings, Configuration, Holder, PendingEvent, Phase};
use super::contract::Contract;
use super::eval::{EvalError, Evaluator, Scope};
use super::label::{Action, CallAction, ClauseTerms, Enabled, Label, TauCause, Terms};
use crate::syntax::{Name, Span, Stmt, StmtKind, TimeExpr};
use crate::value::{AssetValue, Rational, TokenId, Value};

/// Why an execution cannot continue. The move that would cause it is not
/// performed.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StuckReason {
    #[error("moving {needed} out of `{asset}` holding {available} would leave it negative")]
    NegativeBalance {
        asset: String,
        needed: Rational,
        available: AssetValue,
    },
    #[error("`{asset}` already holds token {token}; the move would overwrite it")]
    TokenOverwrite { asset: String, token: TokenId },
    #[error("cannot combine {incoming} with the {held} held in `{asset}`")]
    KindMismatch {
        asset: String,
        held: AssetValue,
        incoming: AssetValue,
    },
    #[error("{0}")]
    Eval(EvalError),
    #[error("asset parameter `{0}` still holds {1} when the function returns")]
    UnconsumedAssetParam(String, AssetValue),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("no identity is bound to party `{0}`")]
    MissingBinding(String),
    #[error("the agreement has already been signed")]
    AlreadyAgreed,
    #[error("no agreed value for field `{0}`")]
    IncompleteTerms(String),
    #[error("`{0}` is not a field set by the agreement")]
    UnknownTerm(String),
    #[error("{0}")]
    NotEnabled(String),
    #[error("{0}")]
    BadArguments(String),
    #[error("{0}")]
    PreconditionFailed(String),
    #[error("token {0} is not available to the caller")]
    TokenUnavailable(TokenId),
    #[error("events {0:?} are ready at the same time; one must be chosen explicitly")]
    AmbiguousEvents(Vec<u32>),
    #[error("{reason} (line {})", span.line)]
    Stuck { reason: Box<StuckReason>, span: Span },
}

impl StepError {
    pub fn kind(&self) -> &'static str {
        match self {
            StepError::MissingBinding(_) => "MissingBinding",
            StepError::AlreadyAgreed => "AlreadyAgreed",
            StepError::IncompleteTerms(_) => "IncompleteTerms",
            StepError::UnknownTerm(_) => "UnknownTerm",
            StepError::NotEnabled(_) => "NotEnabled",
            StepError::BadArguments(_) => "BadArguments",
            StepError::PreconditionFailed(_) => "PreconditionFailed",
            StepError::TokenUnavailable(_) => "TokenUnavailable",
            StepError::AmbiguousEvents(_) => "AmbiguousEvents",
            StepError::Stuck { .. } => "Stuck",
        }
    }

    /// `Kind: detail`
    pub fn describe(&self) -> String {
        format!("{}: {self}", self.kind())
    }

    pub fn is_stuck(&self) -> bool {
        matches!(self, StepError::Stuck { .. })
    }
}

pub type StepResult = Result<(Configuration, Vec<Label>), StepError>;

impl Contract {
    /// A configuration waiting for the agreement.
    pub fn init(&self, bindings: &Bindings) -> Result<Configuration, StepError> {
        let mut bound = Bindings::new();
        for party in &self.ast.agreement.parties {
            let identity = bindings
                .get(party.as_str())
                .ok_or_else(|| StepError::MissingBinding(party.text.clone()))?;
            bound.insert(party.text.clone(), identity.clone());
        }
        Ok(Configuration {
            phase: Phase::PreAgreement,
            clock: 0,
            fields: vec![None; self.ast.fields.len()],
            assets: vec![AssetValue::empty(); self.ast.assets.len()],
            events: Vec::new(),
            bindings: bound.into(),
            tokens: Default::default(),
            codes: 0,
        })
    }

    pub fn agree(&self, config: &Configuration, terms: &Terms) -> StepResult {
        if config.phase != Phase::PreAgreement {
            return Err(StepError::AlreadyAgreed);
        }
        let agreed: BTreeSet<&str> = self.agreed_fields().into_iter().collect();
        if let Some(extra) = terms.keys().find(|k| !agreed.contains(k.as_str())) {
            return Err(StepError::UnknownTerm(extra.clone()));
        }
        let mut next = config.clone();
        let mut clauses = Vec::new();
        for clause in &self.ast.agreement.clauses {
            let mut values = Vec::new();
            for field in &clause.fields {
                let value = terms
                    .get(field.as_str())
                    .ok_or_else(|| StepError::IncompleteTerms(field.text.clone()))?;
                let index = self.field_index(field.as_str()).expect("declared field");
                next.fields[index] = Some(value.clone());
                values.push((field.text.clone(), value.clone()));
            }
            clauses.push(ClauseTerms {
                parties: clause.parties.iter().map(|p| p.text.clone()).collect(),
                values,
            });
        }
        let parties = self
            .ast
            .agreement
            .parties
            .iter()
            .map(|p| {
                let identity = config.identity(p.as_str()).unwrap_or_default().to_string();
                (p.text.clone(), identity)
            })
            .collect();
        next.phase = Phase::In(self.initial_state());
        self.settle(&mut next);
        Ok((
            next,
            vec![Label::Agreement {
                parties,
                terms: clauses,
            }],
        ))
    }

    /// Action shapes available in `config`. A ready event whose guard is the
    /// current state preempts every call and the passage of time.
    pub fn enabled_actions(&self, config: &Configuration) -> Vec<Enabled> {
        let Phase::In(state) = config.phase else {
            return vec![Enabled::Agree];
        };
        let ready = config.ready_events(self);
        if !ready.is_empty() {
            return ready.into_iter().map(Enabled::Fire).collect();
        }
        let mut out: Vec<Enabled> = self
            .functions_in(state)
            .iter()
            .map(|&index| {
                let f = self.function(index);
                Enabled::Call {
                    party: f.caller.text.clone(),
                    function: f.name.text.clone(),
                    index,
                }
            })
            .collect();
        out.push(Enabled::Tick);
        out
    }

    pub fn step(&self, config: &Configuration, action: &Action) -> StepResult {
        match action {
            Action::Agree(terms) => self.agree(config, terms),
            Action::Call(call) => self.call(config, call),
            Action::Fire(id) => self.fire_event(config, *id),
            Action::Tick => self.tick(config),
        }
    }

    pub fn tick(&self, config: &Configuration) -> StepResult {
        if config.phase == Phase::PreAgreement {
            return Err(StepError::NotEnabled(
                "time cannot pass before the agreement".into(),
            ));
        }
        if let Some(id) = config.ready_events(self).first() {
            return Err(StepError::NotEnabled(format!(
                "event {id} is ready and must fire first"
            )));
        }
        let mut next = config.clone();
        next.clock += 1;
        self.settle(&mut next);
        Ok((next, vec![Label::Tau(TauCause::Tick)]))
    }

    pub fn fire_event(&self, config: &Configuration, id: u32) -> StepResult {
        if !config.ready_events(self).contains(&id) {
            return Err(StepError::NotEnabled(format!("event {id} is not ready")));
        }
        let mut next = config.clone();
        let position = next.events.iter().position(|e| e.id == id).expect("ready");
        let event = next.events.remove(position);
        let site = &self.sites[event.site as usize];
        let mut exec = Exec::new(self, next, Vec::new(), Vec::new());
        exec.labels.push(Label::Tau(TauCause::Event(id)));
        exec.captured = Some((&site.captures, event.captured.clone()));
        exec.function = site.function;
        exec.run(&site.handler)?;
        let (mut next, labels) = exec.finish(None)?;
        next.phase = Phase::In(site.target);
        self.settle(&mut next);
        Ok((next, labels))
    }

    /// Checks that `call` names a permitted function with well-formed
    /// arguments; returns its index.
    fn admit(&self, config: &Configuration, call: &CallAction) -> Result<usize, StepError> {
        let Phase::In(state) = config.phase else {
            return Err(StepError::NotEnabled("the agreement has not been signed".into()));
        };
        if let Some(id) = config.ready_events(self).first() {
            return Err(StepError::NotEnabled(format!(
                "event {id} is ready and must fire first"
            )));
        }
        let index = self
            .find_function(state, &call.party, &call.function)
            .ok_or_else(|| {
                StepError::NotEnabled(format!(
                    "{}:{} is not permitted in state @{}",
                    call.party,
                    call.function,
                    self.state_name(state)
                ))
            })?;
        let f = self.function(index);
        if call.args.len() != f.value_params.len() || call.assets.len() != f.asset_params.len() {
            return Err(StepError::BadArguments(format!(
                "{} takes {} values and {} assets, got {} and {}",
                f.name,
                f.value_params.len(),
                f.asset_params.len(),
                call.args.len(),
                call.assets.len()
            )));
        }
        let caller = config.identity(&call.party).unwrap_or_default();
        let mut offered = BTreeSet::new();
        for asset in &call.assets {
            match asset {
                AssetValue::Fungible(q) if q.is_negative() => {
                    return Err(StepError::BadArguments(format!("asset amount {q} is negative")))
                }
                AssetValue::NonFungible(token) => {
                    let available = match config.tokens.get(token) {
                        None => true,
                        Some(Holder::Party(holder)) => holder == caller,
                        Some(Holder::Contract) => false,
                    };
                    if !available || !offered.insert(token) {
                        return Err(StepError::TokenUnavailable(token.clone()));
                    }
                }
                _ => {}
            }
        }
        Ok(index)
    }

    /// Whether the precondition of function `index` holds for the given
    /// arguments. Evaluation errors count as a refusal.
    pub fn precondition_holds(
        &self,
        config: &Configuration,
        index: usize,
        args: &[Value],
        assets: &[AssetValue],
    ) -> Result<(), String> {
        let f = self.function(index);
        let Some(pre) = &f.precondition else {
            return Ok(());
        };
        let params: Vec<(String, Value)> = f
            .value_params
            .iter()
            .map(|p| p.text.clone())
            .zip(args.iter().cloned())
            .collect();
        let asset_params: Vec<(String, AssetValue)> = f
            .asset_params
            .iter()
            .map(|p| p.text.clone())
            .zip(assets.iter().cloned())
            .collect();
        let scope = Scope {
            params: &params,
            asset_params: &asset_params,
            captured: None,
        };
        let mut codes = config.codes;
        let mut evaluator = Evaluator {
            contract: self,
            config,
            scope: &scope,
            codes: &mut codes,
        };
        match evaluator.eval_bool(pre) {
            Ok(true) => Ok(()),
            Ok(false) => Err(format!("precondition of {} does not hold", f.name)),
            Err(e) => Err(format!("precondition of {} cannot be evaluated: {e}", f.name)),
        }
    }

    pub fn call(&self, config: &Configuration, call: &CallAction) -> StepResult {
        let index = self.admit(config, call)?;
        self.precondition_holds(config, index, &call.args, &call.assets)
            .map_err(StepError::PreconditionFailed)?;
        let f = self.function(index);
        let params = f
            .value_params
            .iter()
            .map(|p| p.text.clone())
            .zip(call.args.iter().cloned())
            .collect();
        let asset_params = f
            .asset_params
            .iter()
            .map(|p| p.text.clone())
            .zip(call.assets.iter().cloned())
            .collect();
        let mut exec = Exec::new(self, config.clone(), params, asset_params);
        exec.function = index;
        exec.labels.push(Label::Call {
            party: call.party.clone(),
            function: call.function.clone(),
            args: call.args.clone(),
            assets: call.assets.clone(),
        });
        exec.run(&f.body)?;
        let (mut next, labels) = exec.finish(Some(f.span))?;
        next.phase = Phase::In(self.state_id(f.target.as_str()).expect("known state"));
        self.settle(&mut next);
        Ok((next, labels))
    }

    /// Drops events whose trigger time has come while their guard differs
    /// from the current state; they can never fire.
    pub fn settle(&self, config: &mut Configuration) {
        let Phase::In(state) = config.phase else {
            return;
        };
        let clock = config.clock;
        config
            .events
            .retain(|e| e.trigger > clock || self.sites[e.site as usize].guard == state);
    }
}

enum Slot {
    Param(usize),
    Asset(usize),
}

/// Executes statements against a working copy of the configuration.
struct Exec<'c> {
    contract: &'c Contract,
    config: Configuration,
    labels: Vec<Label>,
    params: Vec<(String, Value)>,
    asset_params: Vec<(String, AssetValue)>,
    captured: Option<(&'c [String], Vec<Option<Value>>)>,
    /// Function whose body (or event handler) is running.
    function: usize,
}

fn stuck(reason: StuckReason, span: Span) -> StepError {
    StepError::Stuck {
        reason: Box::new(reason),
        span,
    }
}

impl<'c> Exec<'c> {
    fn new(
        contract: &'c Contract,
        config: Configuration,
        params: Vec<(String, Value)>,
        asset_params: Vec<(String, AssetValue)>,
    ) -> Exec<'c> {
        Exec {
            contract,
            config,
            labels: Vec::new(),
            params,
            asset_params,
            captured: None,
            function: 0,
        }
    }

    fn finish(self, owner: Option<Span>) -> Result<(Configuration, Vec<Label>), StepError> {
        if let Some((name, held)) = self.asset_params.iter().find(|(_, a)| !a.is_empty()) {
            return Err(stuck(
                StuckReason::UnconsumedAssetParam(name.clone(), held.clone()),
                owner.unwrap_or_default(),
            ));
        }
        Ok((self.config, self.labels))
    }

    fn eval_with<T>(
        &mut self,
        span: Span,
        f: impl FnOnce(&mut Evaluator) -> Result<T, EvalError>,
    ) -> Result<T, StepError> {
        let captured = self
            .captured
            .as_ref()
            .map(|(names, values)| (*names, values.as_slice()));
        let scope = Scope {
            params: &self.params,
            asset_params: &self.asset_params,
            captured,
        };
        let mut codes = self.config.codes;
        let result = f(&mut Evaluator {
            contract: self.contract,
            config: &self.config,
            scope: &scope,
            codes: &mut codes,
        });
        self.config.codes = codes;
        result.map_err(|e| stuck(StuckReason::Eval(e), span))
    }

    fn run(&mut self, stmts: &'c [Stmt]) -> Result<(), StepError> {
        for stmt in stmts {
            self.exec(stmt)?;
        }
        Ok(())
    }

    fn exec(&mut self, stmt: &'c Stmt) -> Result<(), StepError> {
        let span = stmt.span;
        match &stmt.kind {
            StmtKind::AssetMove {
                amount,
                source,
                target,
            } => {
                let moved = match amount {
                    None => self.take_all(source, span)?,
                    Some(e) => {
                        let q = self.eval_with(span, |ev| ev.eval_number(e))?;
                        if q.is_negative() {
                            return Err(stuck(StuckReason::Eval(EvalError::NegativeAmount(q)), span));
                        }
                        self.take_part(source, q, span)?
                    }
                };
                self.deliver(target, moved, span)
            }
            StmtKind::ValueSend { value, party } => {
                let value = self.eval_with(span, |ev| ev.eval(value))?;
                self.labels.push(Label::ValueSend {
                    value,
                    party: party.text.clone(),
                });
                Ok(())
            }
            StmtKind::FieldUpdate { value, field } => {
                let value = self.eval_with(span, |ev| ev.eval(value))?;
                let index = self.contract.field_index(field.as_str()).expect("field");
                self.config.fields[index] = Some(value);
                Ok(())
            }
            StmtKind::EventSchedule { site, trigger, .. } => self.schedule(*site, trigger, span),
            StmtKind::IfElse {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.eval_with(span, |ev| ev.eval_bool(cond))? {
                    self.run(then_branch)
                } else if let Some(else_branch) = else_branch {
                    self.run(else_branch)
                } else {
                    Ok(())
                }
            }
        }
    }

    fn schedule(&mut self, site: usize, trigger: &TimeExpr, span: Span) -> Result<(), StepError> {
        let clock = self.config.clock;
        let at = match trigger {
            TimeExpr::Relative(offset) => {
                let d = self.eval_with(span, |ev| ev.eval_number(offset))?;
                Rational::from_integer(clock).add(&d)
            }
            TimeExpr::Absolute(at) => self.eval_with(span, |ev| ev.eval_number(at))?,
        };
        let at = at
            .to_i64()
            .ok_or_else(|| stuck(StuckReason::Eval(EvalError::NonIntegerTime(at.clone())), span))?;
        if at < clock {
            // Born expired: it can never fire.
            return Ok(());
        }
        let names = &self.contract.sites[site].captures;
        let mut captured = Vec::with_capacity(names.len());
        for name in names {
            captured.push(self.eval_with(span, |ev| ev.lookup(name)).ok());
        }
        let event = PendingEvent {
            id: self.config.fresh_event_id(),
            trigger: at,
            site: site as u32,
            captured,
        };
        let position = self
            .config
            .events
            .iter()
            .position(|e| e.id > event.id)
            .unwrap_or(self.config.events.len());
        self.config.events.insert(position, event);
        Ok(())
    }

    fn slot(&self, name: &str) -> Option<Slot> {
        if let Some(i) = self.asset_params.iter().position(|(n, _)| n == name) {
            return Some(Slot::Param(i));
        }
        self.contract.asset_index(name).map(Slot::Asset)
    }

    fn slot_mut(&mut self, slot: &Slot) -> &mut AssetValue {
        match *slot {
            Slot::Param(i) => &mut self.asset_params[i].1,
            Slot::Asset(i) => &mut self.config.assets[i],
        }
    }

    fn source(&self, name: &Name, span: Span) -> Result<Slot, StepError> {
        self.slot(name.as_str())
            .ok_or_else(|| stuck(StuckReason::Eval(EvalError::Unbound(name.text.clone())), span))
    }

    fn take_all(&mut self, source: &Name, span: Span) -> Result<AssetValue, StepError> {
        let slot = self.source(source, span)?;
        Ok(std::mem::replace(self.slot_mut(&slot), AssetValue::empty()))
    }

    fn take_part(&mut self, source: &Name, q: Rational, span: Span) -> Result<AssetValue, StepError> {
        let slot = self.source(source, span)?;
        let held = self.slot_mut(&slot);
        match held {
            AssetValue::Fungible(balance) if q <= *balance => {
                *balance = balance.sub(&q);
                Ok(AssetValue::Fungible(q))
            }
            AssetValue::Fungible(_) | AssetValue::NonFungible(_) => Err(stuck(
                StuckReason::NegativeBalance {
                    asset: source.text.clone(),
                    needed: q,
                    available: held.clone(),
                },
                span,
            )),
        }
    }

    fn deliver(&mut self, target: &Name, moved: AssetValue, span: Span) -> Result<(), StepError> {
        let Some(slot) = self.slot(target.as_str()) else {
            let identity = self
                .config
                .identity(target.as_str())
                .ok_or_else(|| StepError::MissingBinding(target.text.clone()))?
                .to_string();
            if let AssetValue::NonFungible(token) = &moved {
                self.config.tokens.insert(token.clone(), Holder::Party(identity));
            }
            self.labels.push(Label::AssetSend {
                asset: moved,
                party: target.text.clone(),
            });
            return Ok(());
        };
        let into_contract = matches!(slot, Slot::Asset(_));
        let held = self.slot_mut(&slot);
        let merged = match (&*held, &moved) {
            (_, incoming) if incoming.is_empty() => held.clone(),
            (current, _) if current.is_empty() => moved.clone(),
            (AssetValue::Fungible(a), AssetValue::Fungible(b)) => AssetValue::Fungible(a.add(b)),
            (AssetValue::NonFungible(token), _) => {
                return Err(stuck(
                    StuckReason::TokenOverwrite {
                        asset: target.text.clone(),
                        token: token.clone(),
                    },
                    span,
                ))
            }
            (current, _) => {
                return Err(stuck(
                    StuckReason::KindMismatch {
                        asset: target.text.clone(),
                        held: current.clone(),
                        incoming: moved,
                    },
                    span,
                ))
            }
        };
        *held = merged;
        if let (true, AssetValue::NonFungible(token)) = (into_contract, &moved) {
            self.config.tokens.insert(token.clone(), Holder::Contract);
        }
        Ok(())
    }
}
