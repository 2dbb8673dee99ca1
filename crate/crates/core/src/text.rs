//! Shared text primitives: tokenization, cosine similarity, and
//! normalized edit similarity.
//!
//! Tokenization is deliberately simple and deterministic: lowercase,
//! split on non-alphanumeric runs, keep everything of length >= 1, no
//! stemming.

use std::collections::HashMap;

pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "to", "of", "and", "or", "is", "are", "was", "were", "be", "do", "does",
    "did",
];

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Tokenize and drop stopwords.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

pub fn count_vector<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> HashMap<String, f64> {
    let mut counts = HashMap::new();
    for t in tokens {
        *counts.entry(t.to_string()).or_insert(0.0) += 1.0;
    }
    counts
}

/// Cosine similarity of two sparse count vectors; 0.0 when either is empty.
pub fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, va)| b.get(k).map(|vb| va * vb))
        .sum();
    if dot == 0.0 {
        return 0.0;
    }
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Edit similarity normalized to [0, 1]: 1 for identical strings.
pub fn normalized_similarity(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(
            tokenize("Got it! Really?"),
            vec!["got", "it", "really"]
        );
        assert_eq!(tokenize("didn't"), vec!["didn", "t"]);
        assert!(tokenize("...").is_empty());
    }

    #[test]
    fn cosine_of_identical_vectors_is_one() {
        let v = count_vector(["what", "hobbies", "you"]);
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_disjoint_vectors_is_zero() {
        let a = count_vector(["cat"]);
        let b = count_vector(["dog"]);
        assert_eq!(cosine(&a, &b), 0.0);
    }

    #[test]
    fn edit_similarity_bounds() {
        assert_eq!(normalized_similarity("abc", "abc"), 1.0);
        assert_eq!(normalized_similarity("abc", "xyz"), 0.0);
        let s = normalized_similarity("What things frighten you now?", "What things frighten you, Sam?");
        assert!(s > 0.8 && s < 1.0, "{s}");
    }
}
