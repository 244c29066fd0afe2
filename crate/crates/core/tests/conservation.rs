//! Random runs over every corpus contract: fungible amounts are conserved
//! exactly and every token has exactly one holder.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stipula::semantics::{random_walk, Configuration, Contract, Domains, Environment, Holder, Label, Walk};
use stipula::{parse_source, AssetValue, Rational, TokenId};

const WALKS: u32 = 1000;
const DECISIONS: usize = 80;

fn load(name: &str) -> (Contract, Domains, i64) {
    let root = format!("{}/../../corpus", env!("CARGO_MANIFEST_DIR"));
    let source = std::fs::read_to_string(format!("{root}/contracts/{name}.stipula")).unwrap();
    let env =
        Environment::parse(&std::fs::read_to_string(format!("{root}/envs/{name}.json")).unwrap()).unwrap();
    let contract = Contract::new(parse_source(&source).unwrap());
    let domains = env.domains(&contract).unwrap();
    (contract, domains, env.horizon.unwrap())
}

fn walk(contract: &Contract, domains: &Domains, horizon: i64, seed: u64) -> Walk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_walk(contract, domains, horizon, DECISIONS, |n| rng.gen_range(0..n))
}

fn held_amount(config: &Configuration) -> Rational {
    config.assets.iter().fold(Rational::zero(), |acc, a| match a {
        AssetValue::Fungible(q) => acc.add(q),
        AssetValue::NonFungible(_) => acc,
    })
}

/// Checks one walk; returns a description of the first broken invariant.
fn check(walk: &Walk) -> Result<(), String> {
    let mut paid_in = Rational::zero();
    let mut paid_out = Rational::zero();
    let mut known: BTreeMap<TokenId, ()> = BTreeMap::new();
    for (i, step) in walk.steps.iter().enumerate() {
        for label in &step.labels {
            match label {
                Label::Call { assets, .. } => {
                    for a in assets {
                        match a {
                            AssetValue::Fungible(q) => paid_in = paid_in.add(q),
                            AssetValue::NonFungible(t) => {
                                known.insert(t.clone(), ());
                            }
                        }
                    }
                }
                Label::AssetSend {
                    asset: AssetValue::Fungible(q),
                    ..
                } => paid_out = paid_out.add(q),
                _ => {}
            }
        }
        let config = &step.config;
        if config
            .assets
            .iter()
            .any(|a| matches!(a, AssetValue::Fungible(q) if q.is_negative()))
        {
            return Err(format!("step {i}: negative balance"));
        }
        let expected = paid_in.sub(&paid_out);
        if held_amount(config) != expected {
            return Err(format!(
                "step {i}: contract holds {} but {} was paid in and {} paid out",
                held_amount(config),
                paid_in,
                paid_out
            ));
        }
        for token in known.keys() {
            let slots = config
                .assets
                .iter()
                .filter(|a| matches!(a, AssetValue::NonFungible(t) if t == token))
                .count();
            let holder = config.tokens.get(token);
            let consistent = match holder {
                Some(Holder::Contract) => slots == 1,
                Some(Holder::Party(_)) | None => slots == 0,
            };
            if !consistent {
                return Err(format!(
                    "step {i}: token {token:?} in {slots} slots, holder {holder:?}"
                ));
            }
        }
        for a in &config.assets {
            if let AssetValue::NonFungible(t) = a {
                if config.tokens.get(t) != Some(&Holder::Contract) {
                    return Err(format!("step {i}: token {t:?} stored but not recorded"));
                }
            }
        }
    }
    Ok(())
}

macro_rules! conservation {
    ($test:ident, $name:literal) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(WALKS))]
            #[test]
            fn $test(seed in any::<u64>()) {
                let (contract, domains, horizon) = load($name);
                let w = walk(&contract, &domains, horizon, seed);
                prop_assert!(w.stuck.is_none(), "stuck: {:?}", w.stuck);
                if let Err(e) = check(&w) {
                    return Err(TestCaseError::fail(e));
                }
            }
        }
    };
}

conservation!(subscription_conserves, "subscription");
conservation!(licence_conserves, "licence");
conservation!(bet_conserves, "bet");
conservation!(purchase_conserves, "purchase");
conservation!(bike_rental_conserves, "bike_rental");
conservation!(rescindable_conserves, "rescindable");

#[test]
fn walks_reach_late_deadlines() {
    let (contract, domains, horizon) = load("subscription");
    let latest = (0..200)
        .map(|seed| walk(&contract, &domains, horizon, seed))
        .filter_map(|w| w.steps.last().map(|s| s.config.clock))
        .max()
        .unwrap();
    assert!(latest > 8760, "{latest}");
}

#[test]
fn licence_walks_move_the_token() {
    let (contract, domains, horizon) = load("licence");
    let moved = (0..200).any(|seed| {
        walk(&contract, &domains, horizon, seed)
            .steps
            .iter()
            .any(|s| s.config.tokens.values().any(|h| matches!(h, Holder::Party(_))))
    });
    assert!(moved);
}
