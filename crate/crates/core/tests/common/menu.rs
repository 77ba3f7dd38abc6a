//! A small menu of dialogue actions for reranker fixtures.

use proptest::prelude::*;

use sgsacc::data::{DialogueAction, EvalInstance, GenerationCandidate, ValuePool};
use sgsacc::refs::{build_instance_refs, InstanceRefs, NegativeOptions};
use sgsacc::rerank::FidelityScore;

/// Actions that a generation may or may not realize, with a phrase that
/// realizes each one under the mock rule.
pub const MENU: &[(&str, &str, &[&str], &str)] = &[
    ("INFORM", "city", &["Oakland"], "the city is Oakland"),
    ("OFFER", "restaurant_name", &["Golden Wok"], "the restaurant name is Golden Wok"),
    ("INFORM", "price_range", &["cheap"], "the price range is cheap"),
    ("CONFIRM", "cuisine", &["thai", "indian"], "the cuisine are thai and indian"),
    ("INFORM", "kids_friendly", &["True"], "kids friendly yes"),
    ("REQUEST", "city", &[], "request city"),
];

pub struct Fixture {
    pub instance: EvalInstance,
    pub refs: InstanceRefs,
}

pub fn fixture(actions: &[usize]) -> Fixture {
    let catalog = super::catalog();
    let instance = EvalInstance {
        instance_id: "r1".into(),
        service: "Restaurants_1".into(),
        domain: "Restaurants".into(),
        actions: actions
            .iter()
            .map(|&i| {
                let (intent, slot, values, _) = MENU[i];
                DialogueAction::new(intent, Some(slot), values)
            })
            .collect(),
        ground_truth: "unused".into(),
        previous_turn: None,
        is_unseen_domain: false,
    };
    let pool = ValuePool::build(&catalog, std::slice::from_ref(&instance));
    let refs = build_instance_refs(&instance, &catalog, &pool, NegativeOptions::default()).unwrap();
    Fixture { instance, refs }
}

pub fn generation(system: usize, actions: &[usize], realized: &[bool], ll: Option<f64>) -> GenerationCandidate {
    let mut parts: Vec<&str> = actions
        .iter()
        .zip(realized)
        .filter(|(_, r)| **r)
        .map(|(&i, _)| MENU[i].3)
        .collect();
    if parts.is_empty() {
        parts.push("okay");
    }
    GenerationCandidate {
        instance_id: "r1".into(),
        system_id: format!("sys{system}"),
        text: format!("{}.", parts.join(", ")),
        log_likelihood: ll,
    }
}

pub fn actions() -> impl Strategy<Value = Vec<usize>> {
    prop::sample::subsequence((0..MENU.len()).collect::<Vec<_>>(), 1..=MENU.len())
}

pub fn loglik() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        4 => prop::sample::select(vec![-1.0, -2.5, -2.5, -4.0, -7.25]).prop_map(Some),
    ]
}

/// Per candidate: which actions it realizes, and its log-likelihood.
pub type Candidates = Vec<(Vec<bool>, Option<f64>)>;

pub fn candidates(n_actions: usize) -> impl Strategy<Value = Candidates> {
    prop::collection::vec((prop::collection::vec(any::<bool>(), n_actions), loglik()), 1..6)
}

pub fn setup() -> impl Strategy<Value = (Vec<usize>, Candidates)> {
    actions().prop_flat_map(|a| {
        let n = a.len();
        (Just(a), candidates(n))
    })
}

pub fn build(actions: &[usize], cands: &[(Vec<bool>, Option<f64>)]) -> Vec<GenerationCandidate> {
    cands
        .iter()
        .enumerate()
        .map(|(i, (realized, ll))| generation(i, actions, realized, *ll))
        .collect()
}

pub fn key(s: &FidelityScore) -> (usize, Option<u64>) {
    (s.score, s.log_likelihood.map(f64::to_bits))
}
