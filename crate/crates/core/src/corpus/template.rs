//! Sender templates and receiver transforms.
//!
//! A sender template is an ordered list of literal words and typed
//! placeholders plus a casing policy; rendering joins the pieces with single
//! spaces, fills placeholders from the transaction attributes, and applies
//! the casing. The receiver transform then prepends an optional prefix,
//! truncates, and optionally upper-cases — in that order — leaving the
//! sender's structure largely intact.

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::mix_seed;

/// Typed placeholder inside a sender template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceholderKind {
    /// Dollar amount, rendered with two decimals (e.g. `1234.56`).
    Amount,
    /// A run of account digits of the given length.
    AccountDigits(usize),
    /// A confirmation number of the given length.
    Confirmation(usize),
    /// A person name drawn from a fixed pool.
    PersonName,
    /// Transaction date rendered `MM/DD/YY`.
    Date,
    /// One to three free-memo words.
    FreeMemo,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Literal(String),
    Placeholder(PlaceholderKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Casing {
    AsIs,
    AllUpper,
    AllLower,
}

/// The issuing formatter of one institution: what it writes into the
/// description field of an outgoing transfer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenderTemplate {
    pub fi_id: u32,
    pub pieces: Vec<Piece>,
    pub casing: Casing,
}

impl SenderTemplate {
    /// Every template must carry at least one non-empty literal; an
    /// institution with no fixed wording would be unidentifiable in
    /// principle.
    pub fn validate(&self) -> Result<()> {
        let mut has_literal = false;
        for p in &self.pieces {
            match p {
                Piece::Literal(s) => {
                    if s.is_empty() {
                        return Err(Error::invalid("empty literal piece"));
                    }
                    has_literal = true;
                }
                Piece::Placeholder(
                    PlaceholderKind::AccountDigits(n) | PlaceholderKind::Confirmation(n),
                ) if *n == 0 => {
                    return Err(Error::invalid("zero-length digit placeholder"));
                }
                _ => {}
            }
        }
        if !has_literal {
            return Err(Error::invalid(format!(
                "template of FI {} has no literal piece",
                self.fi_id
            )));
        }
        Ok(())
    }

    /// All literal strings of this template.
    pub fn literals(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Literal(s) => Some(s.as_str()),
            Piece::Placeholder(_) => None,
        })
    }
}

/// The receiving formatter: prefix, then truncation, then upper-casing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceiverTransform {
    pub fi_id: u32,
    pub prefix: String,
    pub truncate_chars: Option<usize>,
    pub force_upper: bool,
}

impl ReceiverTransform {
    pub fn identity(fi_id: u32) -> Self {
        ReceiverTransform {
            fi_id,
            prefix: String::new(),
            truncate_chars: None,
            force_upper: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.prefix.is_empty() && self.truncate_chars.is_none() && !self.force_upper
    }

    /// Apply the transform to a rendered sender string.
    pub fn apply(&self, s: &str) -> String {
        let mut out = format!("{}{}", self.prefix, s);
        if let Some(n) = self.truncate_chars {
            out = out.chars().take(n).collect();
        }
        if self.force_upper {
            out = out.to_uppercase();
        }
        out
    }
}

// Word pools. Brand words identify bank families; the core pool is kept
// small and heavily shared so that different institutions often reuse the
// same words in different orders.
pub(crate) const BRAND_WORDS: &[&str] = &[
    "BofA", "Chase", "Wells", "Citi", "CapOne", "Ally", "USBank", "PNC", "TDBank", "Schwab",
    "Fidelity", "NavyFed", "Regions", "Truist", "KeyBank", "Zions", "MTB", "Huntington",
    "Comerica", "Frost", "Synchrony", "Discover", "Amex", "BMO",
];

const CORE_WORDS: &[&str] = &[
    "Online", "Transfer", "Payment", "Banking", "ACH", "WEB", "EPAY", "Conf#", "REF", "ID:",
    "ACCT", "SAV", "CHK", "XFER", "DirectPay", "P2P",
];

const FIRST_NAMES: &[&str] = &[
    "John", "Maria", "Wei", "Aisha", "Carlos", "Emma", "Noah", "Olivia", "Liam", "Ava", "Raj",
    "Sofia", "Ethan", "Mia", "Lucas", "Zoe", "Omar", "Nina", "Felix", "Ruth", "Ivan", "Lena",
    "Hugo", "Dana",
];

const LAST_NAMES: &[&str] = &[
    "Smith", "Garcia", "Chen", "Johnson", "Patel", "Brown", "Davis", "Lopez", "Kim", "Nguyen",
    "Miller", "Wilson", "Silva", "Khan", "Moore", "Clark", "Lewis", "Walker", "Hall", "Young",
    "Adams", "Baker", "Rivera", "Reed",
];

const MEMO_WORDS: &[&str] = &[
    "rent", "utilities", "savings", "invoice", "payroll", "thanks", "loan", "monthly", "family",
    "gift", "bills", "car", "tuition", "vacation", "insurance", "misc",
];

const TEMPLATE_SALT: u64 = 0x74_6d70;
const FAMILY_SALT: u64 = 0x66_616d;
const RECEIVER_SALT: u64 = 0x72_6376;

/// The family brand literal shared by all members of a bank family.
pub(crate) fn family_brand(family_id: u32, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, FAMILY_SALT ^ u64::from(family_id)));
    let brand = BRAND_WORDS[rng.gen_range(0..BRAND_WORDS.len())];
    match rng.gen_range(0..3) {
        0 => brand.to_string(),
        1 => format!("from{brand}"),
        _ => brand.to_uppercase(),
    }
}

/// Build the 1–5 sender templates of one institution. Deterministic in
/// `(fi_id, family_id, seed)`; institutions of the same family share the
/// family brand literal. `retry` perturbs the stream when the caller detects
/// a full-set collision with another institution.
pub fn make_templates(fi_id: u32, family_id: u32, seed: u64) -> Vec<SenderTemplate> {
    make_templates_with_retry(fi_id, family_id, seed, 0)
}

pub(crate) fn make_templates_with_retry(
    fi_id: u32,
    family_id: u32,
    seed: u64,
    retry: u64,
) -> Vec<SenderTemplate> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
        seed,
        TEMPLATE_SALT ^ (u64::from(fi_id) << 8) ^ (retry << 48),
    ));
    let brand = family_brand(family_id, seed);
    let n_templates = rng.gen_range(1..=5);
    let mut templates = Vec::with_capacity(n_templates);
    for t in 0..n_templates {
        let casing = match rng.gen_range(0..6) {
            0..=2 => Casing::AsIs,
            3..=4 => Casing::AllUpper,
            _ => Casing::AllLower,
        };
        let mut pieces: Vec<Piece> = Vec::new();

        let n_core = rng.gen_range(2..=4);
        let mut core: Vec<&str> = CORE_WORDS.to_vec();
        core.shuffle(&mut rng);
        for w in core.into_iter().take(n_core) {
            pieces.push(Piece::Literal(w.to_string()));
        }

        // The family brand always appears in the first template so that
        // family members share wording; later templates carry it half the
        // time.
        if t == 0 || rng.gen::<f64>() < 0.5 {
            pieces.push(Piece::Literal(brand.clone()));
        }

        let n_ph = rng.gen_range(1..=3);
        for _ in 0..n_ph {
            let kind = match rng.gen_range(0..20) {
                0..=5 => PlaceholderKind::AccountDigits(rng.gen_range(3..=6)),
                6..=11 => PlaceholderKind::Confirmation(rng.gen_range(4..=7)),
                12..=14 => PlaceholderKind::Amount,
                15..=16 => PlaceholderKind::Date,
                17..=18 => PlaceholderKind::PersonName,
                _ => PlaceholderKind::FreeMemo,
            };
            pieces.push(Piece::Placeholder(kind));
        }

        pieces.shuffle(&mut rng);
        templates.push(SenderTemplate {
            fi_id,
            pieces,
            casing,
        });
    }
    templates
}

/// Build the receiver-side transform of one institution. Roughly half of
/// all institutions pass strings through unchanged; the rest prepend their
/// brand, truncate, or upper-case.
pub fn make_transform(fi_id: u32, family_id: u32, seed: u64) -> ReceiverTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, RECEIVER_SALT ^ u64::from(fi_id)));
    let prefix = if rng.gen::<f64>() < 0.25 {
        format!("{} ", family_brand(family_id, seed).to_uppercase())
    } else {
        String::new()
    };
    let truncate_chars = if rng.gen::<f64>() < 0.15 {
        Some(rng.gen_range(28..=56))
    } else {
        None
    };
    let force_upper = rng.gen::<f64>() < 0.25;
    ReceiverTransform {
        fi_id,
        prefix,
        truncate_chars,
        force_upper,
    }
}

/// Render the sender-side string: pieces in order joined by single spaces,
/// then the casing policy. Returns the string together with the char spans
/// of its literal pieces, which downstream checks use to verify that
/// receiver transforms preserve literal structure.
pub fn render_sender<R: Rng>(
    t: &SenderTemplate,
    amount_cents: i64,
    date: NaiveDate,
    rng: &mut R,
) -> Result<(String, Vec<(usize, usize)>)> {
    t.validate()?;
    let mut out = String::new();
    let mut spans = Vec::new();
    let mut pos = 0usize;
    for (i, piece) in t.pieces.iter().enumerate() {
        if i > 0 {
            out.push(' ');
            pos += 1;
        }
        let rendered = match piece {
            Piece::Literal(s) => s.clone(),
            Piece::Placeholder(kind) => render_placeholder(kind, amount_cents, date, rng),
        };
        let len = rendered.chars().count();
        if matches!(piece, Piece::Literal(_)) {
            spans.push((pos, pos + len));
        }
        out.push_str(&rendered);
        pos += len;
    }
    let cased = match t.casing {
        Casing::AsIs => out,
        Casing::AllUpper => out.to_uppercase(),
        Casing::AllLower => out.to_lowercase(),
    };
    Ok((cased, spans))
}

fn render_placeholder<R: Rng>(
    kind: &PlaceholderKind,
    amount_cents: i64,
    date: NaiveDate,
    rng: &mut R,
) -> String {
    match kind {
        PlaceholderKind::Amount => format!("{:.2}", amount_cents as f64 / 100.0),
        PlaceholderKind::AccountDigits(n) | PlaceholderKind::Confirmation(n) => {
            (0..*n).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
        }
        PlaceholderKind::PersonName => {
            let first = FIRST_NAMES[rng.gen_range(0..FIRST_NAMES.len())];
            let last = LAST_NAMES[rng.gen_range(0..LAST_NAMES.len())];
            format!("{first} {last}")
        }
        PlaceholderKind::Date => {
            format!("{:02}/{:02}/{:02}", date.month(), date.day(), date.year() % 100)
        }
        PlaceholderKind::FreeMemo => {
            let n = rng.gen_range(1..=3);
            let mut words = Vec::with_capacity(n);
            for _ in 0..n {
                words.push(MEMO_WORDS[rng.gen_range(0..MEMO_WORDS.len())]);
            }
            words.join(" ")
        }
    }
}

/// Full description pipeline: sender render followed by the receiver
/// transform.
pub fn render_description<R: Rng>(
    t: &SenderTemplate,
    r: &ReceiverTransform,
    amount_cents: i64,
    date: NaiveDate,
    rng: &mut R,
) -> Result<String> {
    let (sender, _) = render_sender(t, amount_cents, date, rng)?;
    Ok(r.apply(&sender))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2016, 11, 1).unwrap()
    }

    fn lit(s: &str) -> Piece {
        Piece::Literal(s.to_string())
    }

    #[test]
    fn literal_only_identity_transform() {
        let t = SenderTemplate {
            fi_id: 0,
            pieces: vec![lit("Payment")],
            casing: Casing::AsIs,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = render_description(&t, &ReceiverTransform::identity(1), 1000, date(), &mut rng)
            .unwrap();
        assert_eq!(s, "Payment");
    }

    #[test]
    fn confirmation_is_joined_with_single_space() {
        let t = SenderTemplate {
            fi_id: 0,
            pieces: vec![lit("Conf#"), Piece::Placeholder(PlaceholderKind::Confirmation(5))],
            casing: Casing::AsIs,
        };
        // A zero-range RNG is not available, so check shape rather than the
        // exact digits: "Conf# " plus five digits.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = render_description(&t, &ReceiverTransform::identity(1), 1000, date(), &mut rng)
            .unwrap();
        assert_eq!(s.len(), 11);
        assert!(s.starts_with("Conf# "));
        assert!(s[6..].chars().all(|c| c.is_ascii_digit()));
    }

    /// The three transform steps by hand: prefix, truncate to 12 chars,
    /// upper-case. "CHASE " + "Conf# 12345" -> "CHASE Conf# " -> upper.
    #[test]
    fn transform_steps_apply_in_order() {
        let r = ReceiverTransform {
            fi_id: 9,
            prefix: "CHASE ".to_string(),
            truncate_chars: Some(12),
            force_upper: true,
        };
        assert_eq!(r.apply("Conf# 12345"), "CHASE CONF# ");
    }

    #[test]
    fn transform_never_empties_nonempty_input() {
        let r = ReceiverTransform {
            fi_id: 0,
            prefix: String::new(),
            truncate_chars: Some(1),
            force_upper: false,
        };
        assert_eq!(r.apply("Payment"), "P");
    }

    #[test]
    fn templates_are_deterministic_per_key() {
        let a = make_templates(17, 4, 99);
        let b = make_templates(17, 4, 99);
        assert_eq!(a, b);
        let c = make_templates(17, 4, 100);
        assert_ne!(a, c);
        for t in &a {
            t.validate().unwrap();
        }
        assert!((1..=5).contains(&a.len()));
    }

    #[test]
    fn family_members_share_a_literal() {
        let a = make_templates(30, 6, 5);
        let b = make_templates(31, 6, 5);
        let lits_a: std::collections::HashSet<&str> =
            a.iter().flat_map(|t| t.literals()).collect();
        let lits_b: std::collections::HashSet<&str> =
            b.iter().flat_map(|t| t.literals()).collect();
        assert!(
            lits_a.intersection(&lits_b).next().is_some(),
            "same-family institutions must share wording"
        );
    }

    #[test]
    fn casing_applies_to_whole_string() {
        let t = SenderTemplate {
            fi_id: 0,
            pieces: vec![lit("Online"), lit("Transfer")],
            casing: Casing::AllUpper,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (s, spans) = render_sender(&t, 1000, date(), &mut rng).unwrap();
        assert_eq!(s, "ONLINE TRANSFER");
        assert_eq!(spans, vec![(0, 6), (7, 15)]);
    }

    #[test]
    fn templates_without_literals_are_rejected() {
        let t = SenderTemplate {
            fi_id: 0,
            pieces: vec![Piece::Placeholder(PlaceholderKind::Amount)],
            casing: Casing::AsIs,
        };
        assert!(t.validate().is_err());
    }
}
