#![allow(dead_code)]

//! Shared fixtures: a seeded synthetic dataset and a brute-force oracle that
//! recomputes every metric with its own copy of the mock entailment rule.

pub mod golden;
pub mod menu;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use sgsacc::data::{DialogueAction, EvalInstance, GenerationCandidate, SchemaCatalog, ServiceSchema, SlotSchema};
use sgsacc::refs::InstanceRefs;

pub fn catalog() -> SchemaCatalog {
    SchemaCatalog::from_services(vec![
        ServiceSchema {
            service_name: "Restaurants_1".into(),
            slots: vec![
                SlotSchema::new("restaurant_name", "name of the restaurant"),
                SlotSchema::new("city", "city where the restaurant is located"),
                SlotSchema::new("price_range", "price range of the restaurant")
                    .categorical(&["cheap", "moderate", "expensive"]),
                SlotSchema::new("cuisine", "type of cuisine served")
                    .categorical(&["italian", "mexican", "thai", "indian"]),
                SlotSchema::boolean("has_live_music", "whether the restaurant has live music"),
                SlotSchema::boolean("kids_friendly", "whether the place is kids friendly"),
            ],
        },
        ServiceSchema {
            service_name: "Flights_1".into(),
            slots: vec![
                SlotSchema::new("airline", "airline of the flight"),
                SlotSchema::new("departure_time", "departure time of the flight"),
                SlotSchema::boolean("is_nonstop", "whether the flight is a direct one"),
                SlotSchema::new("seating_class", "seating class of the ticket")
                    .categorical(&["economy", "business"]),
            ],
        },
        ServiceSchema {
            service_name: "Services_1".into(),
            slots: vec![
                SlotSchema::new("name", "the name of the hair stylist"),
                SlotSchema::new("city", "city of the salon"),
            ],
        },
    ])
    .unwrap()
}

pub const UNSEEN: &[&str] = &["Flights"];

fn value_choices(slot: &str) -> &'static [&'static str] {
    match slot {
        "restaurant_name" => &["Sakura House", "Blue Door Bistro", "Casa Lupe", "Golden Wok"],
        "city" => &["Oakland", "San Jose", "Fremont", "Berkeley"],
        "price_range" => &["cheap", "moderate", "expensive"],
        "cuisine" => &["italian", "mexican", "thai", "indian"],
        "has_live_music" | "kids_friendly" | "is_nonstop" => &["True", "False"],
        "airline" => &["American Airlines", "Delta Airlines", "United Airlines"],
        "departure_time" => &["4:10 pm", "6:40 am", "11:15 am"],
        "seating_class" => &["economy", "business"],
        "name" => &["Queens", "Floyd's Barbershop", "Mane Street"],
        _ => unreachable!("{slot}"),
    }
}

fn slot_words(slot: &str) -> String {
    slot.replace('_', " ")
}

/// Phrase realizing one action, sometimes imperfectly.
fn realize(action: &DialogueAction, desc: &str, rng: &mut StdRng) -> String {
    let r: f64 = rng.random();
    match action.intent.as_str() {
        "GOODBYE" => if r < 0.8 { "have a good day".into() } else { "take care".into() },
        "REQ_MORE" => if r < 0.8 { "what else do you need".into() } else { "shall I continue".into() },
        "REQUEST" => {
            let slot = slot_words(action.slot.as_deref().unwrap());
            if r < 0.5 { format!("i request the {slot}") } else { format!("which {slot} do you want") }
        }
        _ => {
            let slot = slot_words(action.slot.as_deref().unwrap());
            let values = action.values.join(" and ");
            match action.values.as_slice() {
                [v] if v == "True" => {
                    if r < 0.7 { format!("yes it is {slot}") } else { String::from("sure thing") }
                }
                [v] if v == "False" => {
                    if r < 0.6 { format!("it is not {slot}") } else if r < 0.8 { slot.clone() } else { String::new() }
                }
                _ => {
                    if r < 0.45 {
                        format!("the {desc} is {values}")
                    } else if r < 0.65 {
                        format!("the {slot} is {values}")
                    } else if r < 0.85 {
                        format!("how about {values}")
                    } else {
                        String::new()
                    }
                }
            }
        }
    }
}

fn sentence(parts: Vec<String>) -> String {
    let body: Vec<String> = parts.into_iter().filter(|p| !p.is_empty()).collect();
    if body.is_empty() {
        "okay.".into()
    } else {
        format!("{}.", body.join(", "))
    }
}

/// `n` instances over the three services plus two systems' generations.
pub fn synthetic(n: usize, seed: u64) -> (SchemaCatalog, Vec<EvalInstance>, Vec<GenerationCandidate>) {
    let catalog = catalog();
    let mut rng = StdRng::seed_from_u64(seed);
    let services = ["Restaurants_1", "Flights_1", "Services_1"];
    let previous = [
        "I want to book a hair cut.",
        "Find me something for tonight.",
        "I need a flight to Las Vegas.",
        "Can you help me?",
    ];
    let mut instances = Vec::with_capacity(n);
    let mut generations = Vec::new();
    for i in 0..n {
        let service_name = *services.choose(&mut rng).unwrap();
        let service = catalog.service(service_name).unwrap();
        let mut actions = Vec::new();
        let k = rng.random_range(1..=3);
        for _ in 0..k {
            let roll: f64 = rng.random();
            let action = if roll < 0.08 {
                DialogueAction::new("GOODBYE", None, &[])
            } else if roll < 0.14 {
                DialogueAction::new("REQ_MORE", None, &[])
            } else {
                let slot = service.slots.choose(&mut rng).unwrap();
                let intent = if roll < 0.22 {
                    "REQUEST"
                } else {
                    *["INFORM", "OFFER", "CONFIRM"].choose(&mut rng).unwrap()
                };
                let choices = value_choices(&slot.name);
                let values: Vec<&str> = if intent == "REQUEST" {
                    Vec::new()
                } else if slot.name == "cuisine" && rng.random_bool(0.3) {
                    choices.choose_multiple(&mut rng, 2).copied().collect()
                } else {
                    vec![*choices.choose(&mut rng).unwrap()]
                };
                DialogueAction::new(intent, Some(&slot.name), &values)
            };
            if !actions.contains(&action) {
                actions.push(action);
            }
        }
        let desc_of = |a: &DialogueAction| {
            a.slot
                .as_deref()
                .and_then(|s| service.slot(s))
                .map(|s| s.description.clone())
                .unwrap_or_default()
        };
        let ground_truth = sentence(actions.iter().map(|a| realize(a, &desc_of(a), &mut rng)).collect());
        let previous_turn = rng
            .random_bool(0.6)
            .then(|| previous.choose(&mut rng).unwrap().to_string());
        let domain = sgsacc::data::domain_of_service(service_name).to_string();
        let instance_id = format!("syn-{i:03}");
        for (system, garble) in [("ft", 0.15), ("pt", 0.3)] {
            let text = sentence(
                actions
                    .iter()
                    .map(|a| {
                        let phrase = realize(a, &desc_of(a), &mut rng);
                        if rng.random_bool(garble) {
                            // drop digits and capitals to garble values
                            phrase.chars().filter(|c| !c.is_ascii_digit()).collect::<String>().replace("a", "")
                        } else {
                            phrase
                        }
                    })
                    .collect(),
            );
            generations.push(GenerationCandidate {
                instance_id: instance_id.clone(),
                system_id: system.into(),
                text,
                log_likelihood: Some(-rng.random_range(1.0..9.0f64)),
            });
        }
        instances.push(EvalInstance {
            instance_id,
            service: service_name.into(),
            is_unseen_domain: UNSEEN.contains(&domain.as_str()),
            domain,
            actions,
            ground_truth,
            previous_turn,
        });
    }
    (catalog, instances, generations)
}

pub mod oracle {
    //! Independent recomputation with a separately written mock rule.

    use super::*;

    const STOP: &str = "a an and are at be by do does for has have in is it its of on or that the this to was were whether with yes";

    fn words(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.to_lowercase().split_whitespace() {
            let neg = raw.contains("n't");
            let cleaned: String = raw
                .replace("n't", " ")
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { ' ' })
                .collect();
            out.extend(cleaned.split_whitespace().map(String::from));
            if neg {
                out.push("not".into());
            }
        }
        out
    }

    /// true = entailment under the mock rule.
    pub fn entails(premise: &str, hypothesis: &str) -> bool {
        let stop: Vec<&str> = STOP.split(' ').collect();
        let mut pool = words(premise);
        let hyp = words(hypothesis);
        let negated = |ws: &[String]| ws.iter().any(|w| w == "not" || w == "no");
        for w in hyp.iter().filter(|w| !stop.contains(&w.as_str()) && *w != "not" && *w != "no") {
            match pool.iter().position(|p| p == w) {
                Some(i) => {
                    pool.swap_remove(i);
                }
                None => return false,
            }
        }
        negated(&words(premise)) == negated(&hyp)
    }

    pub fn augmented(utterance: &str, prev: Option<&str>, desc: Option<&str>) -> String {
        match (prev, desc) {
            (Some(p), Some(d)) => format!("{p} {d}. {utterance}"),
            (Some(p), None) => format!("{p} {utterance}"),
            (None, Some(d)) => format!("{d}. {utterance}"),
            (None, None) => utterance.to_string(),
        }
    }

    fn entails_with_context(utterance: &str, hyp: &str, prev: Option<&str>, desc: Option<&str>) -> bool {
        entails(utterance, hyp)
            || ((prev.is_some() || desc.is_some()) && entails(&augmented(utterance, prev, desc), hyp))
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct Expected {
        pub sgsacc_all: [Option<f64>; 3],
        pub sgsacc_validated: [Option<f64>; 3],
        pub ser: [Option<f64>; 3],
        pub excluded: usize,
        pub exclusion_rate: f64,
        pub faithful: Vec<bool>,
        pub validated: Vec<bool>,
        pub slot_error: Vec<Option<bool>>,
    }

    fn pct(hit: [usize; 3], total: [usize; 3]) -> [Option<f64>; 3] {
        [0, 1, 2].map(|i| (total[i] > 0).then(|| 100.0 * hit[i] as f64 / total[i] as f64))
    }

    /// Brute-force metrics for one system with augmentation and validation on.
    pub fn expected(
        catalog: &SchemaCatalog,
        instances: &[EvalInstance],
        refs: &[InstanceRefs],
        generations: &[GenerationCandidate],
        system: &str,
    ) -> Expected {
        let (mut f_all, mut n_all) = ([0usize; 3], [0usize; 3]);
        let (mut f_val, mut n_val) = ([0usize; 3], [0usize; 3]);
        let (mut ser_err, mut ser_n) = ([0usize; 3], [0usize; 3]);
        let mut out_faithful = Vec::new();
        let mut out_validated = Vec::new();
        let mut out_slot = Vec::new();
        let mut excluded = 0;
        for (inst, r) in instances.iter().zip(refs) {
            let gen = generations
                .iter()
                .find(|g| g.system_id == system && g.instance_id == inst.instance_id)
                .expect("generation present");
            let prev = inst.previous_turn.as_deref();
            let mut valid = true;
            let mut faithful = true;
            for a in &r.actions {
                let desc = a.slot_description.as_deref();
                let cands: Vec<&str> = a.candidates.iter().map(|c| c.text.as_str()).collect();
                // selection: first bare-entailed, else first augmented-entailed, else first
                let bare: Vec<bool> = cands.iter().map(|c| entails(&inst.ground_truth, c)).collect();
                let pick = if let Some(i) = bare.iter().position(|b| *b) {
                    i
                } else if prev.is_some() || desc.is_some() {
                    let aug = augmented(&inst.ground_truth, prev, desc);
                    cands.iter().position(|c| entails(&aug, c)).unwrap_or(0)
                } else {
                    0
                };
                let any_pos = cands.iter().any(|c| entails_with_context(&inst.ground_truth, c, prev, desc));
                let any_neg = a
                    .negatives
                    .iter()
                    .any(|n| entails_with_context(&inst.ground_truth, &n.text, prev, desc));
                valid &= any_pos && !any_neg;
                faithful &= entails_with_context(&gen.text, cands[pick], prev, desc);
            }
            let b = if inst.is_unseen_domain { 2 } else { 1 };
            for idx in [0, b] {
                n_all[idx] += 1;
                if faithful {
                    f_all[idx] += 1;
                }
                if valid {
                    n_val[idx] += 1;
                    if faithful {
                        f_val[idx] += 1;
                    }
                }
            }
            if !valid {
                excluded += 1;
            }
            // slot error over valued non-categorical, non-REQUEST actions
            let service = catalog.service(&inst.service).unwrap();
            let lower = gen.text.to_lowercase();
            let mut evaluable = false;
            let mut error = false;
            for a in &inst.actions {
                if a.intent == "REQUEST" {
                    continue;
                }
                let Some(slot) = a.slot.as_deref().and_then(|s| service.slot(s)) else { continue };
                if slot.is_categorical {
                    continue;
                }
                for v in &a.values {
                    evaluable = true;
                    if !lower.contains(&v.to_lowercase()) {
                        error = true;
                    }
                }
            }
            if evaluable {
                for idx in [0, b] {
                    ser_n[idx] += 1;
                    if error {
                        ser_err[idx] += 1;
                    }
                }
            }
            out_faithful.push(faithful);
            out_validated.push(valid);
            out_slot.push(evaluable.then_some(error));
        }
        Expected {
            sgsacc_all: pct(f_all, n_all),
            sgsacc_validated: pct(f_val, n_val),
            ser: pct(ser_err, ser_n),
            excluded,
            exclusion_rate: 100.0 * excluded as f64 / instances.len() as f64,
            faithful: out_faithful,
            validated: out_validated,
            slot_error: out_slot,
        }
    }
}
