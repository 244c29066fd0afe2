//! Behaviour-preserving normalisations of configurations.

use super::config::{Configuration, Phase};
use super::contract::Contract;
use crate::syntax::{BinOp, Expr, ExprKind, TimeExpr};
use crate::value::Rational;

/// Drops events whose trigger time has already passed.
pub fn drop_elapsed_events(config: &mut Configuration) {
    let clock = config.clock;
    config.events.retain(|e| e.trigger >= clock);
}

/// Lower bound on the clock at which each state can next be occupied,
/// given the pending events and every schedule site that may still run.
pub fn earliest_arrivals(contract: &Contract, config: &Configuration) -> Vec<Option<i64>> {
    let mut dist = vec![None; contract.states.len()];
    let Phase::In(start) = config.phase else {
        return dist;
    };
    dist[start as usize] = Some(config.clock);
    let improve = |dist: &mut Vec<Option<i64>>, state: u16, at: i64| -> bool {
        let slot = &mut dist[state as usize];
        if slot.is_none_or(|d| at < d) {
            *slot = Some(at);
            true
        } else {
            false
        }
    };
    loop {
        let mut changed = false;
        for f in &contract.ast.functions {
            let guard = contract.state_id(f.guard.as_str()).expect("known state");
            let target = contract.state_id(f.target.as_str()).expect("known state");
            if let Some(d) = dist[guard as usize] {
                changed |= improve(&mut dist, target, d);
            }
        }
        for e in &config.events {
            let site = &contract.sites[e.site as usize];
            if dist[site.guard as usize].is_some_and(|d| d <= e.trigger) {
                changed |= improve(&mut dist, site.target, e.trigger);
            }
        }
        for site in &contract.sites {
            let scheduler = contract.state_id(contract.function(site.function).guard.as_str());
            let from = scheduler.and_then(|s| dist[s as usize]);
            if let (Some(at), Some(g)) = (from, dist[site.guard as usize]) {
                let fires = g.max(at + offset_floor(&site.trigger));
                changed |= improve(&mut dist, site.target, fires);
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Drops events that can never fire: their guard state cannot be occupied
/// when the clock reaches their trigger. Such events would be discarded
/// silently, so removing them early changes no observable behaviour.
pub fn drop_dead_events(contract: &Contract, config: &mut Configuration) {
    let Some(state) = config.state() else {
        return;
    };
    if config.events.is_empty() {
        return;
    }
    let dist = earliest_arrivals(contract, config);
    config.events.retain(|e| {
        let guard = contract.sites[e.site as usize].guard;
        guard == state || dist[guard as usize].is_some_and(|d| d < e.trigger)
    });
}

/// Renumbers pending events canonically, by trigger, site and captured
/// values. Event ids only name events; no behaviour depends on them.
pub fn renumber_events(config: &mut Configuration) {
    config
        .events
        .sort_by(|a, b| (a.trigger, a.site, &a.captured).cmp(&(b.trigger, b.site, &b.captured)));
    for (i, e) in config.events.iter_mut().enumerate() {
        e.id = i as u32;
    }
}

/// Smallest delay a trigger can have: its constant offset for relative
/// triggers, zero otherwise.
fn offset_floor(trigger: &TimeExpr) -> i64 {
    match trigger {
        TimeExpr::Relative(e) => constant(e).and_then(|q| q.to_i64()).map_or(0, |n| n.max(0)),
        TimeExpr::Absolute(_) => 0,
    }
}

fn constant(e: &Expr) -> Option<Rational> {
    match &e.kind {
        ExprKind::Number(q) => Some(q.clone()),
        ExprKind::Duration(q, unit) => Some(q.mul(&Rational::from_integer(unit.ticks()))),
        ExprKind::Binary(op, l, r) => {
            let (a, b) = (constant(l)?, constant(r)?);
            match op {
                BinOp::Add => Some(a.add(&b)),
                BinOp::Sub => Some(a.sub(&b)),
                BinOp::Mul => Some(a.mul(&b)),
                _ => None,
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::config::Bindings;
    use crate::semantics::label::{Action, CallAction, Terms};
    use crate::syntax::parse_source;
    use crate::value::{AssetValue, Value};

    fn subscription() -> Contract {
        let path = format!(
            "{}/../../corpus/contracts/subscription.stipula",
            env!("CARGO_MANIFEST_DIR")
        );
        Contract::new(parse_source(&std::fs::read_to_string(path).unwrap()).unwrap())
    }

    fn pay(function: &str, amount: i64) -> Action {
        Action::Call(CallAction {
            party: "Buyer".into(),
            function: function.into(),
            args: vec![],
            assets: vec![AssetValue::amount(amount)],
        })
    }

    #[test]
    fn superseded_default_is_dead() {
        let c = subscription();
        let bindings: Bindings = [("Editor", "e"), ("Buyer", "b")]
            .iter()
            .map(|(r, i)| (r.to_string(), i.to_string()))
            .collect();
        let terms: Terms = [("cost", 120), ("deposit", 50)]
            .iter()
            .map(|(k, v)| (k.to_string(), Value::num(*v)))
            .collect();
        let (config, _) = c.agree(&c.init(&bindings).unwrap(), &terms).unwrap();
        let (config, _) = c.step(&config, &pay("subscribe", 50)).unwrap();
        let mut live = config.clone();
        drop_dead_events(&c, &mut live);
        assert_eq!(live, config);
        let (config, _) = c.step(&config, &pay("annualFee", 120)).unwrap();
        assert_eq!(config.events.len(), 3);
        let arrivals = earliest_arrivals(&c, &config);
        assert_eq!(arrivals[c.state_id("To_Pay").unwrap() as usize], Some(8760));
        let mut live = config.clone();
        drop_dead_events(&c, &mut live);
        assert_eq!(live.events.len(), 2);
        assert!(live.events.iter().all(|e| e.trigger >= 8760));
    }

    #[test]
    fn renumbering_orders_by_trigger() {
        let mut config = Configuration {
            phase: Phase::In(0),
            clock: 0,
            fields: vec![],
            assets: vec![],
            events: vec![
                crate::semantics::PendingEvent {
                    id: 0,
                    trigger: 9,
                    site: 0,
                    captured: vec![],
                },
                crate::semantics::PendingEvent {
                    id: 3,
                    trigger: 4,
                    site: 1,
                    captured: vec![],
                },
            ],
            bindings: Default::default(),
            tokens: Default::default(),
            codes: 0,
        };
        renumber_events(&mut config);
        assert_eq!(
            config
                .events
                .iter()
                .map(|e| (e.id, e.trigger))
                .collect::<Vec<_>>(),
            vec![(0, 4), (1, 9)]
        );
        let mut stale = config.clone();
        stale.clock = 5;
        drop_elapsed_events(&mut stale);
        assert_eq!(stale.events.len(), 1);
    }
}
