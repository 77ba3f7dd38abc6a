use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use super::{NliBackend, NliError, NliPair, NliVerdict};

/// Memoizes verdicts keyed by the exact (premise, hypothesis) strings.
///
/// Reads are concurrent; concurrent misses on the same key may both reach
/// the inner backend, and the last write wins.
pub struct CachedNli<B> {
    inner: B,
    entries: RwLock<HashMap<(String, String), NliVerdict>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<B: NliBackend> CachedNli<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            entries: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("nli cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (hits, misses) since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: NliBackend> NliBackend for CachedNli<B> {
    fn classify_batch(&self, pairs: &[NliPair]) -> Result<Vec<NliVerdict>, NliError> {
        let mut out: Vec<Option<NliVerdict>> = Vec::with_capacity(pairs.len());
        let mut missing: Vec<NliPair> = Vec::new();
        let mut missing_slots: HashMap<(&str, &str), usize> = HashMap::new();
        {
            let entries = self.entries.read().expect("nli cache poisoned");
            for p in pairs {
                let key = (p.premise.clone(), p.hypothesis.clone());
                let hit = entries.get(&key).copied();
                if hit.is_none() {
                    missing_slots
                        .entry((p.premise.as_str(), p.hypothesis.as_str()))
                        .or_insert_with(|| {
                            missing.push(p.clone());
                            missing.len() - 1
                        });
                }
                out.push(hit);
            }
        }
        let hits = out.iter().filter(|v| v.is_some()).count() as u64;
        self.hits.fetch_add(hits, Ordering::Relaxed);
        if missing.is_empty() {
            return Ok(out.into_iter().map(|v| v.expect("all hits")).collect());
        }
        self.misses.fetch_add(missing.len() as u64, Ordering::Relaxed);

        let fresh = self.inner.classify_batch(&missing)?;
        if fresh.len() != missing.len() {
            return Err(NliError::Protocol(format!(
                "backend answered {} of {} pairs",
                fresh.len(),
                missing.len()
            )));
        }
        {
            let mut entries = self.entries.write().expect("nli cache poisoned");
            for (pair, verdict) in missing.iter().zip(&fresh) {
                entries.insert((pair.premise.clone(), pair.hypothesis.clone()), *verdict);
            }
        }
        Ok(pairs
            .iter()
            .zip(out)
            .map(|(p, hit)| {
                hit.unwrap_or_else(|| {
                    fresh[missing_slots[&(p.premise.as_str(), p.hypothesis.as_str())]]
                })
            })
            .collect())
    }

    fn identity(&self) -> String {
        self.inner.identity()
    }
}
