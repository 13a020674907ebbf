//! Deterministic text processing for transfer descriptions: digit masking,
//! tokenization, capped vocabulary, fixed-length encoding, hand-crafted
//! string features, and bag-of-tokens distributions.
//!
//! Digits are masked to `X` before tokenization so that number *lengths*
//! become tokens (`12345` and `98765` both tokenize as `XXXXX`). Tokens are
//! maximal alphanumeric runs; every other non-whitespace character stands as
//! a single-character token. No case folding is applied.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reserved id for right-padding.
pub const PAD_ID: usize = 0;
/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: usize = 1;

/// Display forms of the two sentinels. Real tokens are alphanumeric runs or
/// single punctuation characters, so these can never collide.
pub const PAD_TOKEN: &str = "<PAD>";
pub const UNK_TOKEN: &str = "<UNK>";

/// Default vocabulary cap.
pub const DEFAULT_VOCAB_SIZE: usize = 10_000;
/// Default sequence length; longer token streams are truncated.
pub const DEFAULT_MAX_LEN: usize = 20;
/// Number of hand-crafted dense features.
pub const N_DENSE_FEATURES: usize = 12;

/// Replace every ASCII decimal digit with `X`; all other characters pass
/// through unchanged. Idempotent.
pub fn mask_digits(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_digit() { 'X' } else { c })
        .collect()
}

/// Tokenize a description string.
///
/// Masks digits first, then emits maximal alphanumeric runs as single tokens
/// and every other non-whitespace character as its own one-character token.
/// Whitespace separates tokens and is discarded. Character order is
/// preserved and no case folding is applied.
pub fn tokenize(s: &str) -> Vec<String> {
    let masked = mask_digits(s);
    let mut tokens = Vec::new();
    let mut run = String::new();
    for c in masked.chars() {
        if c.is_alphanumeric() {
            run.push(c);
            continue;
        }
        if !run.is_empty() {
            tokens.push(std::mem::take(&mut run));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !run.is_empty() {
        tokens.push(run);
    }
    tokens
}

/// Capped token→id mapping with reserved PAD (0) and UNK (1) ids.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
    max_size: usize,
}

/// On-disk form: `{"max_size": n, "tokens": [..]}` with tokens listed from
/// id 2 upward.
#[derive(Serialize, Deserialize)]
struct VocabFile {
    max_size: usize,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Build a vocabulary from token streams.
    ///
    /// Tokens are ranked by descending corpus frequency with ties broken
    /// lexicographically ascending; the top `max_size - 2` survive after the
    /// two sentinels. The ranking depends only on aggregate counts, so the
    /// result is stable under reordering of the corpus.
    pub fn build<'a, I>(streams: I, max_size: usize) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        if max_size < 3 {
            return Err(Error::invalid(format!(
                "vocabulary max_size must be at least 3, got {max_size}"
            )));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for stream in streams {
            for tok in stream {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size - 2);
        Ok(Self::from_ranked_tokens(
            ranked.into_iter().map(|(t, _)| t.to_string()).collect(),
            max_size,
        ))
    }

    fn from_ranked_tokens(tokens: Vec<String>, max_size: usize) -> Vocabulary {
        let mut id_to_token = Vec::with_capacity(tokens.len() + 2);
        id_to_token.push(PAD_TOKEN.to_string());
        id_to_token.push(UNK_TOKEN.to_string());
        id_to_token.extend(tokens);
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            token_to_id,
            id_to_token,
            max_size,
        }
    }

    /// Total entries including the two sentinels.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // PAD and UNK are always present
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token_of(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    /// SHA-256 over the canonical serialized form, used to tie checkpoints
    /// to the vocabulary they were trained with.
    pub fn content_hash(&self) -> String {
        let file = VocabFile {
            max_size: self.max_size,
            tokens: self.id_to_token[2..].to_vec(),
        };
        let bytes = serde_json::to_vec(&file).expect("vocab serialization cannot fail");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            max_size: self.max_size,
            tokens: self.id_to_token[2..].to_vec(),
        };
        serde_json::to_string_pretty(&file).expect("vocab serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Vocabulary> {
        let file: VocabFile = serde_json::from_str(json).map_err(|e| Error::MalformedFile {
            what: "vocabulary".into(),
            msg: e.to_string(),
        })?;
        if file.max_size < 3 {
            return Err(Error::MalformedFile {
                what: "vocabulary".into(),
                msg: format!("max_size {} below minimum 3", file.max_size),
            });
        }
        if file.tokens.len() + 2 > file.max_size {
            return Err(Error::MalformedFile {
                what: "vocabulary".into(),
                msg: format!(
                    "{} tokens exceed max_size {} minus sentinels",
                    file.tokens.len(),
                    file.max_size
                ),
            });
        }
        Ok(Self::from_ranked_tokens(file.tokens, file.max_size))
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_file(path: &Path) -> Result<Vocabulary> {
        let json =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&json)
    }
}

/// Fixed-length id sequence. Ids beyond `true_length` are PAD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub true_length: usize,
}

/// Encode tokens against a vocabulary: unknown tokens map to UNK, sequences
/// longer than `max_len` keep their first `max_len` tokens, shorter ones are
/// right-padded with PAD.
pub fn encode(tokens: &[String], vocab: &Vocabulary, max_len: usize) -> TokenSequence {
    let true_length = tokens.len().min(max_len);
    let mut ids = Vec::with_capacity(max_len);
    for tok in &tokens[..true_length] {
        ids.push(vocab.id_of(tok).unwrap_or(UNK_ID));
    }
    ids.resize(max_len, PAD_ID);
    TokenSequence { ids, true_length }
}

/// Hand-crafted dense features plus sparse bag-of-tokens counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dense: [f64; N_DENSE_FEATURES],
    pub sparse_counts: BTreeMap<usize, f64>,
}

/// The 12 hand-crafted string-pattern features:
///
///  0. every letter uppercase (requires at least one letter)
///  1. any lowercase letter present
///  2. fraction of characters that are `X` after masking
///  3. longest `X` run / 20, capped at 1
///  4. contains `#`
///  5. contains `:`
///  6. token count / 20, capped at 1
///  7. mean token length / 10, capped at 1
///  8. masked string contains a date-like `XX/XX` or `XX-XX`
///  9. contains an `ID` token
/// 10. punctuation density (neither alphanumeric nor whitespace)
/// 11. leading token is an all-uppercase word
pub fn extract_features(s: &str) -> [f64; N_DENSE_FEATURES] {
    let mut f = [0.0; N_DENSE_FEATURES];
    if s.is_empty() {
        return f;
    }
    let masked = mask_digits(s);
    let n_chars = masked.chars().count();

    let mut has_letter = false;
    let mut any_lower = false;
    let mut all_upper = true;
    let mut n_punct = 0usize;
    for c in s.chars() {
        if c.is_alphabetic() {
            has_letter = true;
            if c.is_lowercase() {
                any_lower = true;
                all_upper = false;
            }
        } else if !c.is_alphanumeric() && !c.is_whitespace() {
            n_punct += 1;
        }
    }
    f[0] = if has_letter && all_upper { 1.0 } else { 0.0 };
    f[1] = if any_lower { 1.0 } else { 0.0 };

    let n_x = masked.chars().filter(|&c| c == 'X').count();
    f[2] = n_x as f64 / n_chars as f64;

    let mut longest_run = 0usize;
    let mut run = 0usize;
    for c in masked.chars() {
        if c == 'X' {
            run += 1;
            longest_run = longest_run.max(run);
        } else {
            run = 0;
        }
    }
    f[3] = (longest_run as f64 / 20.0).min(1.0);

    f[4] = if s.contains('#') { 1.0 } else { 0.0 };
    f[5] = if s.contains(':') { 1.0 } else { 0.0 };

    let tokens = tokenize(s);
    f[6] = (tokens.len() as f64 / 20.0).min(1.0);
    if !tokens.is_empty() {
        let mean_len = tokens.iter().map(|t| t.chars().count()).sum::<usize>() as f64
            / tokens.len() as f64;
        f[7] = (mean_len / 10.0).min(1.0);
    }

    f[8] = if masked.contains("XX/XX") || masked.contains("XX-XX") {
        1.0
    } else {
        0.0
    };
    f[9] = if tokens.iter().any(|t| t == "ID") { 1.0 } else { 0.0 };
    f[10] = n_punct as f64 / n_chars as f64;
    if let Some(first) = tokens.first() {
        let has = first.chars().any(|c| c.is_alphabetic());
        let upper = first.chars().all(|c| !c.is_alphabetic() || c.is_uppercase());
        f[11] = if has && upper { 1.0 } else { 0.0 };
    }
    f
}

/// Normalized unigram counts over token ids; unknown tokens count under UNK.
/// Empty input yields an empty map; otherwise values sum to 1.
pub fn bag_of_tokens(tokens: &[String], vocab: &Vocabulary) -> BTreeMap<usize, f64> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for tok in tokens {
        let id = vocab.id_of(tok).unwrap_or(UNK_ID);
        if id != PAD_ID {
            *counts.entry(id).or_insert(0.0) += 1.0;
        }
    }
    let total: f64 = counts.values().sum();
    if total > 0.0 {
        for v in counts.values_mut() {
            *v /= total;
        }
    }
    counts
}

/// Convenience: full feature vector (dense + normalized bag) for a string.
pub fn featurize(s: &str, vocab: &Vocabulary) -> FeatureVector {
    let tokens = tokenize(s);
    FeatureVector {
        dense: extract_features(s),
        sparse_counts: bag_of_tokens(&tokens, vocab),
    }
}
