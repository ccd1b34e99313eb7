//! Topic quality measures: NPMI and C_V coherence from sliding-window
//! co-occurrence counts, topic diversity, and inverted rank-biased overlap.
//!
//! Probabilities are window frequencies: `P(w) = windows containing w / total
//! windows`. Windows never cross document boundaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

pub const NPMI_WINDOW: usize = 10;
pub const CV_WINDOW: usize = 110;
pub const DEFAULT_RBO_P: f64 = 0.9;

/// Boolean-window occurrence counts for a fixed set of target terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceCounts {
    window_size: usize,
    n_windows: u64,
    index: BTreeMap<String, usize>,
    term_count: Vec<u64>,
    /// Dense symmetric table over target terms; the diagonal repeats
    /// `term_count`.
    pair_count: Vec<u64>,
}

impl CooccurrenceCounts {
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn n_windows(&self) -> u64 {
        self.n_windows
    }

    /// `None` for terms outside the target set.
    pub fn term_count(&self, term: &str) -> Option<u64> {
        self.index.get(term).map(|&i| self.term_count[i])
    }

    pub fn pair_count(&self, a: &str, b: &str) -> Option<u64> {
        let (i, j) = (*self.index.get(a)?, *self.index.get(b)?);
        Some(self.pair_count[i * self.index.len() + j])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }
}

/// Slides a `window_size` window with stride 1 over each document; a
/// document no longer than the window yields one window, an empty document
/// none.
pub fn count_cooccurrences<D, S>(docs: &[D], window_size: usize, target_terms: &BTreeSet<String>) -> Result<CooccurrenceCounts>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    if window_size == 0 {
        return Err(Error::Parameter("window_size must be at least 1".into()));
    }
    let index: BTreeMap<String, usize> = target_terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let m = index.len();
    let mut term_count = vec![0u64; m];
    let mut pair_count = vec![0u64; m * m];
    let mut n_windows = 0u64;
    let mut present = Vec::new();
    for doc in docs {
        let ids: Vec<Option<usize>> = doc.as_ref().iter().map(|t| index.get(t.as_ref()).copied()).collect();
        if ids.is_empty() {
            continue;
        }
        let windows = if ids.len() <= window_size { 1 } else { ids.len() - window_size + 1 };
        for start in 0..windows {
            let end = (start + window_size).min(ids.len());
            present.clear();
            present.extend(ids[start..end].iter().flatten().copied());
            present.sort_unstable();
            present.dedup();
            n_windows += 1;
            for (a, &i) in present.iter().enumerate() {
                term_count[i] += 1;
                pair_count[i * m + i] += 1;
                for &j in &present[a + 1..] {
                    pair_count[i * m + j] += 1;
                    pair_count[j * m + i] += 1;
                }
            }
        }
    }
    Ok(CooccurrenceCounts { window_size, n_windows, index, term_count, pair_count })
}

/// Normalized PMI. Pairs that never co-occur score −1 and pairs present in
/// every window score 1.
pub fn npmi_pair(a: &str, b: &str, counts: &CooccurrenceCounts) -> Result<f64> {
    let ca = counts.term_count(a).filter(|&c| c > 0).ok_or_else(|| Error::UndefinedTerm(a.into()))?;
    let cb = counts.term_count(b).filter(|&c| c > 0).ok_or_else(|| Error::UndefinedTerm(b.into()))?;
    let joint = counts.pair_count(a, b).unwrap_or(0);
    if joint == 0 {
        return Ok(-1.0);
    }
    let n = counts.n_windows as f64;
    if joint as f64 == n {
        return Ok(1.0);
    }
    let (pa, pb, pab) = (ca as f64 / n, cb as f64 / n, joint as f64 / n);
    Ok((math::ln(pab / (pa * pb)) / -math::ln(pab)).clamp(-1.0, 1.0))
}

/// Topic word lists. Lists may differ in length but must be non-empty and
/// free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSet {
    topics: Vec<Vec<String>>,
}

impl TopicSet {
    pub fn new(topics: Vec<Vec<String>>) -> Result<Self> {
        if topics.is_empty() {
            return Err(Error::Parameter("a topic set needs at least one topic".into()));
        }
        for (k, t) in topics.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::Parameter(alloc::format!("topic {k} is empty")));
            }
            let distinct: BTreeSet<&String> = t.iter().collect();
            if distinct.len() != t.len() {
                return Err(Error::Parameter(alloc::format!("topic {k} repeats a term")));
            }
        }
        Ok(TopicSet { topics })
    }

    pub fn topics(&self) -> &[Vec<String>] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Every distinct term across topics.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.topics.iter().flatten().cloned().collect()
    }
}

/// A coherence value plus whatever had to be left out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceScore {
    pub value: f64,
    /// Terms with no occurrence in the reference windows.
    pub skipped_terms: Vec<String>,
    /// Topics with fewer than two countable terms.
    pub skipped_topics: Vec<usize>,
}

fn countable<'a>(
    topic: &'a [String],
    counts: &CooccurrenceCounts,
    skipped: &mut BTreeSet<String>,
) -> Vec<&'a str> {
    topic
        .iter()
        .filter(|t| {
            let ok = counts.term_count(t).is_some_and(|c| c > 0);
            if !ok {
                skipped.insert((*t).clone());
            }
            ok
        })
        .map(String::as_str)
        .collect()
}

fn per_topic_mean(
    topics: &TopicSet,
    counts: &CooccurrenceCounts,
    score: impl Fn(&[&str]) -> Result<f64>,
) -> Result<CoherenceScore> {
    let mut skipped_terms = BTreeSet::new();
    let mut skipped_topics = Vec::new();
    let mut scores = Vec::new();
    for (k, topic) in topics.topics.iter().enumerate() {
        let words = countable(topic, counts, &mut skipped_terms);
        if words.len() < 2 {
            skipped_topics.push(k);
            continue;
        }
        scores.push(score(&words)?);
    }
    if scores.is_empty() {
        return Err(Error::NoScorableTopics);
    }
    Ok(CoherenceScore {
        value: scores.iter().sum::<f64>() / scores.len() as f64,
        skipped_terms: skipped_terms.into_iter().collect(),
        skipped_topics,
    })
}

/// Mean pairwise NPMI within each topic, averaged over topics.
pub fn coherence_npmi(topics: &TopicSet, counts: &CooccurrenceCounts) -> Result<CoherenceScore> {
    per_topic_mean(topics, counts, |words| {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                sum += npmi_pair(words[i], words[j], counts)?;
                pairs += 1;
            }
        }
        Ok(sum / pairs as f64)
    })
}

/// C_V with one-set segmentation: each word's context vector holds its
/// clipped NPMI against every topic word, and the word scores the cosine
/// between its vector and the sum of all vectors.
pub fn coherence_cv(topics: &TopicSet, counts: &CooccurrenceCounts) -> Result<CoherenceScore> {
    per_topic_mean(topics, counts, |words| {
        let vectors: Vec<Vec<f64>> = words
            .iter()
            .map(|w| words.iter().map(|s| npmi_pair(w, s, counts).map(|v| v.max(0.0))).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let mut total = vec![0.0; words.len()];
        for v in &vectors {
            for (t, x) in total.iter_mut().zip(v) {
                *t += x;
            }
        }
        let sum: f64 = vectors.iter().map(|v| crate::graph::cosine_similarity(v, &total)).sum();
        Ok((sum / words.len() as f64).clamp(0.0, 1.0))
    })
}

/// Unique words over total words; `1/K` for K identical topics, 1 for
/// disjoint ones.
pub fn topic_diversity(topics: &TopicSet) -> f64 {
    let total: usize = topics.topics.iter().map(Vec::len).sum();
    topics.vocabulary().len() as f64 / total as f64
}

/// Extrapolated rank-biased overlap truncated at `depth`.
pub fn rbo<S: AsRef<str> + Ord>(list1: &[S], list2: &[S], p: f64, depth: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(alloc::format!("persistence p={p} outside (0, 1)")));
    }
    if depth == 0 || depth > list1.len().min(list2.len()) {
        return Err(Error::Parameter(alloc::format!(
            "depth {depth} must be in 1..={}",
            list1.len().min(list2.len())
        )));
    }
    let mut seen1 = BTreeSet::new();
    let mut seen2 = BTreeSet::new();
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    let mut agreement = 0.0;
    for d in 0..depth {
        let (a, b) = (list1[d].as_ref(), list2[d].as_ref());
        if !seen1.insert(a) || !seen2.insert(b) {
            return Err(Error::Parameter("ranked lists must not repeat terms".into()));
        }
        if a == b {
            overlap += 1;
        } else {
            overlap += usize::from(seen2.contains(a)) + usize::from(seen1.contains(b));
        }
        agreement = overlap as f64 / (d + 1) as f64;
        sum += weight * agreement;
        weight *= p;
    }
    Ok(((1.0 - p) * sum + weight * agreement).clamp(0.0, 1.0))
}

/// `1 − mean RBO` over all topic pairs, each pair compared to the depth of
/// its shorter list.
pub fn irbo(topics: &TopicSet, p: f64) -> Result<f64> {
    let k = topics.len();
    if k < 2 {
        return Err(Error::Parameter("IRBO needs at least two topics".into()));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (&topics.topics[i], &topics.topics[j]);
            sum += rbo(a, b, p, a.len().min(b.len()))?;
            pairs += 1;
        }
    }
    Ok(1.0 - sum / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| String::from(*x)).collect()
    }

    fn targets(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|x| String::from(*x)).collect()
    }

    fn set(list: &[&[&str]]) -> TopicSet {
        TopicSet::new(list.iter().map(|t| s(t)).collect()).unwrap()
    }

    #[test]
    fn window_examples() {
        let c = count_cooccurrences(&[s(&["a", "b"])], 2, &targets(&["a", "b"])).unwrap();
        assert_eq!((c.n_windows(), c.term_count("a"), c.term_count("b")), (1, Some(1), Some(1)));
        assert_eq!(c.pair_count("a", "b"), Some(1));

        let c = count_cooccurrences(&[s(&["a", "b", "a"])], 2, &targets(&["a", "b"])).unwrap();
        assert_eq!((c.n_windows(), c.term_count("a"), c.term_count("b")), (2, Some(2), Some(2)));
        assert_eq!(c.pair_count("a", "b"), Some(2));

        let c = count_cooccurrences(&[s(&["a", "z"])], 2, &targets(&["a"])).unwrap();
        assert_eq!(c.term_count("z"), None);
        assert!(count_cooccurrences(&[s(&["a"])], 0, &targets(&["a"])).is_err());
    }

    /// Four one-token-window documents giving P(a)=P(b)=1/2, P(a,b)=1/4.
    fn independent() -> CooccurrenceCounts {
        let docs = [s(&["a", "b"]), s(&["a", "x"]), s(&["b", "x"]), s(&["x", "x"])];
        count_cooccurrences(&docs, 2, &targets(&["a", "b", "x"])).unwrap()
    }

    #[test]
    fn npmi_examples() {
        let c = independent();
        assert_eq!(npmi_pair("a", "a", &c).unwrap(), 1.0);
        assert!(npmi_pair("a", "b", &c).unwrap().abs() < 1e-12);
        let c = count_cooccurrences(&[s(&["a"]), s(&["b"]), s(&["q"])], 1, &targets(&["a", "b", "q"])).unwrap();
        assert_eq!(npmi_pair("a", "b", &c).unwrap(), -1.0);
        assert_eq!(npmi_pair("a", "zz", &c), Err(Error::UndefinedTerm("zz".into())));
    }

    #[test]
    fn npmi_coherence_examples() {
        let c = count_cooccurrences(&[s(&["a", "b"]), s(&["a", "b", "c"]), s(&["d"]), s(&["c"])], 3, &targets(&["a", "b", "c", "d"]))
            .unwrap();
        let always = set(&[&["a", "b"]]);
        // a and b always appear together but not in every window
        assert!((coherence_npmi(&always, &c).unwrap().value - 1.0).abs() < 1e-12);
        let never = set(&[&["a", "d"]]);
        assert_eq!(coherence_npmi(&never, &c).unwrap().value, -1.0);
        let both = set(&[&["a", "b"], &["a", "d"]]);
        assert!(coherence_npmi(&both, &c).unwrap().value.abs() < 1e-12);

        let ind = independent();
        let mixed = set(&[&["a", "b"], &["a", "x", "zzz"]]);
        let score = coherence_npmi(&set(&[&["a", "a2"], &["a", "b"]]), &ind);
        let score = score.unwrap();
        assert_eq!(score.skipped_topics, vec![0]);
        assert_eq!(score.skipped_terms, s(&["a2"]));
        let m = coherence_npmi(&mixed, &ind).unwrap();
        assert_eq!(m.skipped_terms, s(&["zzz"]));
        assert_eq!(coherence_npmi(&set(&[&["q", "r"]]), &ind), Err(Error::NoScorableTopics));
    }

    #[test]
    fn cv_examples() {
        // all topic words always co-occur: identical context vectors
        let c = count_cooccurrences(&[s(&["a", "b", "c"]), s(&["d"])], 5, &targets(&["a", "b", "c", "d"])).unwrap();
        assert!((coherence_cv(&set(&[&["a", "b", "c"]]), &c).unwrap().value - 1.0).abs() < 1e-12);
        // never co-occurring pair: vectors [1,0] and [0,1]
        let v = coherence_cv(&set(&[&["a", "d"]]), &c).unwrap().value;
        assert!(v < 1.0 && v >= 0.0);
        assert!((v - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn diversity_examples() {
        assert_eq!(topic_diversity(&set(&[&["a", "b"], &["a", "b"]])), 0.5);
        assert_eq!(topic_diversity(&set(&[&["a", "b"], &["c", "d"]])), 1.0);
        assert_eq!(topic_diversity(&set(&[&["a", "b"], &["b", "c"]])), 0.75);
    }

    #[test]
    fn rbo_examples() {
        let a = s(&["a", "b", "c"]);
        assert!((rbo(&a, &a, 0.9, 3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rbo(&a, &s(&["x", "y", "z"]), 0.9, 3).unwrap(), 0.0);
        assert!((rbo(&s(&["a", "b"]), &s(&["a", "c"]), 0.9, 2).unwrap() - 0.55).abs() < 1e-12);
        assert!(rbo(&a, &a, 1.0, 3).is_err());
        assert!(rbo(&a, &a, 0.9, 4).is_err());
        assert!(rbo(&s(&["a", "a"]), &a, 0.9, 2).is_err());
    }

    #[test]
    fn irbo_examples() {
        assert_eq!(irbo(&set(&[&["a", "b"], &["a", "b"], &["a", "b"]]), 0.9).unwrap(), 0.0);
        assert_eq!(irbo(&set(&[&["a", "b"], &["c", "d"]]), 0.9).unwrap(), 1.0);
        assert!((irbo(&set(&[&["a", "b"], &["a", "c"]]), 0.9).unwrap() - 0.45).abs() < 1e-12);
        assert!(irbo(&set(&[&["a", "b"]]), 0.9).is_err());
    }

    #[test]
    fn topic_set_validation() {
        assert!(TopicSet::new(vec![]).is_err());
        assert!(TopicSet::new(vec![vec![]]).is_err());
        assert!(TopicSet::new(vec![s(&["a", "a"])]).is_err());
    }
}
