use std::collections::HashMap;

use super::{NliBackend, NliError, NliPair, NliVerdict};

const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "are", "at", "be", "by", "do", "does", "for", "has", "have", "in", "is",
    "it", "its", "of", "on", "or", "that", "the", "this", "to", "was", "were", "whether", "with",
    "yes",
];

const NEGATIONS: &[&str] = &["not", "no"];

/// Lowercased alphanumeric tokens; `n't` contractions contribute a `not`.
pub(crate) fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let lower = word.to_lowercase();
        let negated = lower.contains("n't") || lower.contains("n’t");
        let stem = lower.replace("n't", " ").replace("n’t", " ");
        out.extend(
            stem.split(|c: char| !c.is_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_string),
        );
        if negated {
            out.push("not".to_string());
        }
    }
    out
}

fn is_negation(t: &str) -> bool {
    NEGATIONS.contains(&t)
}

/// Deterministic stand-in for an NLI model.
///
/// Hypothesis content words are its tokens minus stop words and negations.
/// If every content word occurs in the premise (as a multiset) and premise
/// and hypothesis agree on polarity (both or neither contain `not`/`no`),
/// the verdict is entailment. Full coverage with mismatched polarity is a
/// contradiction. Anything else is neutral.
pub fn mock_verdict(premise: &str, hypothesis: &str) -> NliVerdict {
    let premise_tokens = tokens(premise);
    let hypothesis_tokens = tokens(hypothesis);

    let mut available: HashMap<&str, usize> = HashMap::new();
    for t in &premise_tokens {
        *available.entry(t.as_str()).or_default() += 1;
    }
    let mut covered = true;
    for t in &hypothesis_tokens {
        let t = t.as_str();
        if STOP_WORDS.contains(&t) || is_negation(t) {
            continue;
        }
        match available.get_mut(t) {
            Some(n) if *n > 0 => *n -= 1,
            _ => {
                covered = false;
                break;
            }
        }
    }
    if !covered {
        return NliVerdict::NEUTRAL;
    }
    let premise_negated = premise_tokens.iter().any(|t| is_negation(t));
    let hypothesis_negated = hypothesis_tokens.iter().any(|t| is_negation(t));
    if premise_negated == hypothesis_negated {
        NliVerdict::ENTAILED
    } else {
        NliVerdict::CONTRADICTED
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockNli;

impl NliBackend for MockNli {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        pairs
            .iter()
            .map(|p| {
                p.check()?;
                Ok(mock_verdict(&p.premise, &p.hypothesis))
            })
            .collect()
    }

    fn identity(&self) -> String {
        "mock".to_string()
    }
}
