//! Corpus generation: compose sender templates and receiver transforms over
//! a registry to produce labeled records. Every record derives all of its
//! randomness from `(seed, record_index)`, so generation is reproducible
//! record-by-record and safe to parallelize.

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::mix_seed;

use super::template::{
    make_templates_with_retry, make_transform, render_sender, Casing, Piece, PlaceholderKind,
    ReceiverTransform, SenderTemplate,
};
use super::{FiRegistry, TransactionRecord};

/// Fraction of institutions whose wording collapses to a generic template,
/// capping attainable accuracy below 100%.
pub const DEFAULT_AMBIGUITY_FRACTION: f64 = 0.05;

/// Head ranks that are never assigned the generic template, keeping the
/// most common classes well separated.
const AMBIGUITY_PROTECTED_RANKS: usize = 10;

const GENERATE_SALT: u64 = 0x67_656e;
const AMBIGUITY_SALT: u64 = 0x616d_6267;
const MAX_TEMPLATE_RETRIES: u64 = 16;

const MIN_AMOUNT_CENTS: i64 = 100; // $1
const MAX_AMOUNT_CENTS: i64 = 2_000_000; // $20,000
const CORPUS_DAYS: u64 = 365;

fn corpus_epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 11, 1).expect("valid fixed epoch")
}

/// A registry together with the formatter programs of every institution.
#[derive(Debug, Clone)]
pub struct Generator {
    registry: FiRegistry,
    templates: Vec<Vec<SenderTemplate>>,
    transforms: Vec<ReceiverTransform>,
    cumulative_volume: Vec<f64>,
}

impl Generator {
    /// The standard corpus: head-heavy volumes, family-shared wording,
    /// seeded receiver transforms, and an ambiguity floor of generic
    /// templates planted outside the head.
    pub fn standard(
        n_fis: usize,
        exponent: f64,
        ambiguity_fraction: f64,
        seed: u64,
    ) -> Result<Generator> {
        if !(0.0..=1.0).contains(&ambiguity_fraction) {
            return Err(Error::invalid(format!(
                "ambiguity fraction must lie in [0, 1], got {ambiguity_fraction}"
            )));
        }
        let registry = FiRegistry::sample(n_fis, exponent, seed)?;
        let mut templates = build_distinct_templates(&registry, seed)?;
        apply_ambiguity_floor(&mut templates, ambiguity_fraction, seed);
        let transforms = registry
            .entries
            .iter()
            .map(|e| make_transform(e.fi_id, e.family_id, seed))
            .collect();
        Generator::assemble(registry, templates, transforms)
    }

    /// Adversarial corpus: institutions come in pairs whose templates hold
    /// identical token multisets in different orders, so order-blind models
    /// cannot tell the two members of a pair apart. Receiver transforms are
    /// the identity and volumes are uniform.
    pub fn adversarial_pairs(n_pairs: usize, seed: u64) -> Result<Generator> {
        if n_pairs < 1 {
            return Err(Error::invalid("n_pairs must be at least 1"));
        }
        let n = n_pairs * 2;
        let entries = (0..n)
            .map(|i| super::FiEntry {
                fi_id: i as u32,
                family_id: (i / 2) as u32,
                volume_prob: 1.0 / n as f64,
            })
            .collect();
        let registry = FiRegistry {
            entries,
            exponent: 0.0,
        };
        registry.validate()?;

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x7061_6972));
        let mut pool: Vec<String> = pair_word_pool();
        pool.shuffle(&mut rng);
        if pool.len() < n_pairs * 4 {
            return Err(Error::invalid(format!(
                "at most {} adversarial pairs supported",
                pool.len() / 4
            )));
        }

        let mut templates = Vec::with_capacity(n);
        for pair in 0..n_pairs {
            let words = &pool[pair * 4..pair * 4 + 4];
            let mut pieces: Vec<Piece> = words
                .iter()
                .map(|w| Piece::Literal(w.clone()))
                .collect();
            pieces.insert(2, Piece::Placeholder(PlaceholderKind::Confirmation(5)));

            // A seeded non-identity permutation of the same pieces for the
            // second member of the pair.
            let mut permuted = pieces.clone();
            loop {
                permuted.shuffle(&mut rng);
                if permuted != pieces {
                    break;
                }
            }
            templates.push(vec![SenderTemplate {
                fi_id: (pair * 2) as u32,
                pieces,
                casing: Casing::AsIs,
            }]);
            templates.push(vec![SenderTemplate {
                fi_id: (pair * 2 + 1) as u32,
                pieces: permuted,
                casing: Casing::AsIs,
            }]);
        }
        let transforms = (0..n).map(|i| ReceiverTransform::identity(i as u32)).collect();
        Generator::assemble(registry, templates, transforms)
    }

    /// Planted-family corpus for clustering checks: every family writes from
    /// its own word group, so token distributions cluster by family.
    pub fn planted_families(
        n_families: usize,
        fis_per_family: usize,
        seed: u64,
    ) -> Result<Generator> {
        if n_families < 1 || fis_per_family < 1 {
            return Err(Error::invalid(
                "n_families and fis_per_family must be at least 1",
            ));
        }
        let n = n_families * fis_per_family;
        let entries = (0..n)
            .map(|i| super::FiEntry {
                fi_id: i as u32,
                family_id: (i / fis_per_family) as u32,
                volume_prob: 1.0 / n as f64,
            })
            .collect();
        let registry = FiRegistry {
            entries,
            exponent: 0.0,
        };
        registry.validate()?;

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x706c_616e));
        let mut pool: Vec<String> = pair_word_pool();
        pool.shuffle(&mut rng);
        if pool.len() < n_families * 4 + n {
            return Err(Error::invalid("word pool too small for planted corpus"));
        }
        let (family_words, fi_words) = pool.split_at(n_families * 4);

        let mut templates = Vec::with_capacity(n);
        for fi in 0..n {
            let fam = fi / fis_per_family;
            let base = &family_words[fam * 4..fam * 4 + 4];
            let own = &fi_words[fi];
            let mut fi_templates = Vec::new();
            for _ in 0..2 {
                let mut pieces: Vec<Piece> =
                    base.iter().map(|w| Piece::Literal(w.clone())).collect();
                pieces.push(Piece::Literal(own.clone()));
                pieces.shuffle(&mut rng);
                fi_templates.push(SenderTemplate {
                    fi_id: fi as u32,
                    pieces,
                    casing: Casing::AsIs,
                });
            }
            templates.push(fi_templates);
        }
        let transforms = (0..n).map(|i| ReceiverTransform::identity(i as u32)).collect();
        Generator::assemble(registry, templates, transforms)
    }

    fn assemble(
        registry: FiRegistry,
        templates: Vec<Vec<SenderTemplate>>,
        transforms: Vec<ReceiverTransform>,
    ) -> Result<Generator> {
        debug_assert_eq!(registry.entries.len(), templates.len());
        debug_assert_eq!(registry.entries.len(), transforms.len());
        for (i, e) in registry.entries.iter().enumerate() {
            if e.fi_id != i as u32 {
                return Err(Error::invalid("generator registries must use rank ids"));
            }
        }
        for ts in &templates {
            if ts.is_empty() || ts.len() > 5 {
                return Err(Error::invalid("each FI owns 1-5 templates"));
            }
            for t in ts {
                t.validate()?;
            }
        }
        let mut cumulative_volume = Vec::with_capacity(registry.entries.len());
        let mut acc = 0.0;
        for e in &registry.entries {
            acc += e.volume_prob;
            cumulative_volume.push(acc);
        }
        Ok(Generator {
            registry,
            templates,
            transforms,
            cumulative_volume,
        })
    }

    pub fn registry(&self) -> &FiRegistry {
        &self.registry
    }

    pub fn templates_of(&self, fi_id: u32) -> &[SenderTemplate] {
        &self.templates[fi_id as usize]
    }

    pub fn transform_of(&self, fi_id: u32) -> &ReceiverTransform {
        &self.transforms[fi_id as usize]
    }

    /// Generate `n_records` labeled records. Fully deterministic in `seed`;
    /// record `i` depends only on `(seed, i)`.
    pub fn generate(&self, n_records: usize, seed: u64) -> Vec<TransactionRecord> {
        (0..n_records).map(|i| self.generate_one(seed, i)).collect()
    }

    /// Generate the record at one index. Re-rendering a stored record's
    /// template chain is exactly this call.
    pub fn generate_one(&self, seed: u64, index: usize) -> TransactionRecord {
        let (sender, receiver, template_idx, amount_cents, date, mut rng) =
            self.draw_record_params(seed, index);
        let template = &self.templates[sender as usize][template_idx];
        let transform = &self.transforms[receiver as usize];
        let description = super::template::render_description(
            template,
            transform,
            amount_cents,
            date,
            &mut rng,
        )
        .expect("generator templates are pre-validated");

        TransactionRecord {
            sender_fi: sender,
            receiver_fi: receiver,
            date,
            amount_cents,
            description,
            template_idx: Some(template_idx as u32),
        }
    }

    /// Sender render and literal spans for the record at `index`, before the
    /// receiver transform. Used by structure-preservation checks.
    pub fn rerender_sender(&self, seed: u64, index: usize) -> (String, Vec<(usize, usize)>, u32) {
        let (sender, receiver, template_idx, amount_cents, date, mut rng) =
            self.draw_record_params(seed, index);
        let template = &self.templates[sender as usize][template_idx];
        let (s, spans) = render_sender(template, amount_cents, date, &mut rng)
            .expect("generator templates are pre-validated");
        (s, spans, receiver)
    }

    /// The seeded per-record draws, in the fixed order sender → receiver →
    /// template → amount → date. The returned RNG continues the same stream
    /// and feeds placeholder fills during rendering.
    fn draw_record_params(
        &self,
        seed: u64,
        index: usize,
    ) -> (u32, u32, usize, i64, NaiveDate, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, GENERATE_SALT));
        rng.set_stream(index as u64);
        let sender = self.draw_sender(rng.gen::<f64>());
        let receiver = rng.gen_range(0..self.registry.len()) as u32;
        let template_idx = rng.gen_range(0..self.templates[sender as usize].len());
        let log_min = (MIN_AMOUNT_CENTS as f64).ln();
        let log_max = (MAX_AMOUNT_CENTS as f64).ln();
        let amount_cents = (rng.gen_range(log_min..log_max).exp().round() as i64)
            .clamp(MIN_AMOUNT_CENTS, MAX_AMOUNT_CENTS);
        let date = corpus_epoch() + Days::new(rng.gen_range(0..CORPUS_DAYS));
        (sender, receiver, template_idx, amount_cents, date, rng)
    }

    fn draw_sender(&self, u: f64) -> u32 {
        match self
            .cumulative_volume
            .binary_search_by(|c| c.partial_cmp(&u).expect("finite cumulative volume"))
        {
            Ok(i) => i as u32,
            Err(i) => i.min(self.registry.len() - 1) as u32,
        }
    }
}

/// Build per-institution templates, retrying any institution whose full
/// template set collides with an earlier one.
fn build_distinct_templates(
    registry: &FiRegistry,
    seed: u64,
) -> Result<Vec<Vec<SenderTemplate>>> {
    let mut seen: std::collections::HashSet<String> = Default::default();
    let mut all = Vec::with_capacity(registry.len());
    for e in &registry.entries {
        let mut chosen = None;
        for retry in 0..MAX_TEMPLATE_RETRIES {
            let templates = make_templates_with_retry(e.fi_id, e.family_id, seed, retry);
            let key = template_set_key(&templates);
            if seen.insert(key) {
                chosen = Some(templates);
                break;
            }
        }
        let templates = chosen.ok_or_else(|| {
            Error::invalid(format!(
                "could not build a distinct template set for FI {} after {} retries",
                e.fi_id, MAX_TEMPLATE_RETRIES
            ))
        })?;
        all.push(templates);
    }
    Ok(all)
}

/// Canonical fingerprint of a template set, ignoring the owning id.
fn template_set_key(templates: &[SenderTemplate]) -> String {
    let mut parts: Vec<String> = templates
        .iter()
        .map(|t| {
            let pieces: Vec<String> = t
                .pieces
                .iter()
                .map(|p| match p {
                    Piece::Literal(s) => format!("L({s})"),
                    Piece::Placeholder(k) => format!("P({k:?})"),
                })
                .collect();
            format!("{:?}|{}", t.casing, pieces.join(","))
        })
        .collect();
    parts.sort();
    parts.join(";;")
}

/// Replace the templates of a seeded sample of tail institutions with the
/// generic `Payment` wording.
fn apply_ambiguity_floor(
    templates: &mut [Vec<SenderTemplate>],
    fraction: f64,
    seed: u64,
) {
    let n = templates.len();
    let floor_count = ((fraction * n as f64).floor() as usize).min(n);
    if floor_count == 0 || n <= AMBIGUITY_PROTECTED_RANKS {
        return;
    }
    let mut eligible: Vec<usize> = (AMBIGUITY_PROTECTED_RANKS..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, AMBIGUITY_SALT));
    eligible.shuffle(&mut rng);
    for &fi in eligible.iter().take(floor_count) {
        templates[fi] = vec![SenderTemplate {
            fi_id: fi as u32,
            pieces: vec![Piece::Literal("Payment".to_string())],
            casing: Casing::AsIs,
        }];
    }
}

/// Shared word pool for the adversarial and planted constructors.
fn pair_word_pool() -> Vec<String> {
    const WORDS: &[&str] = &[
        "Harbor", "Summit", "Crest", "Union", "Liberty", "Pioneer", "Granite", "Beacon",
        "Cascade", "Meridian", "Sterling", "Anchor", "Juniper", "Redwood", "Falcon", "Prairie",
        "Lakeside", "Canyon", "Bluff", "Orchard", "Cobalt", "Ivory", "Sentinel", "Caravan",
        "Monarch", "Compass", "Gateway", "Heritage", "Horizon", "Keystone", "Landmark", "Apex",
        "Borough", "Citadel", "Delta", "Ember", "Foundry", "Garland", "Haven", "Inlet",
        "Jubilee", "Kestrel", "Lantern", "Mosaic", "Nimbus", "Outpost", "Pinnacle", "Quarry",
        "Ridgeline", "Sierra", "Trellis", "Umber", "Vantage", "Willow", "Yonder", "Zephyr",
        "Arbor", "Bramble", "Cinder", "Drift", "Elm", "Fern", "Grove", "Hollow",
    ];
    WORDS.iter().map(|w| w.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_request_yields_empty_corpus() {
        let g = Generator::standard(5, 1.2, 0.0, 1).unwrap();
        assert!(g.generate(0, 1).is_empty());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let g = Generator::standard(20, 1.2, 0.05, 2).unwrap();
        let a = g.generate(500, 11);
        let b = g.generate(500, 11);
        assert_eq!(a, b);
        let c = g.generate(500, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn records_are_reproducible_individually() {
        let g = Generator::standard(20, 1.2, 0.05, 2).unwrap();
        let all = g.generate(100, 7);
        for (i, r) in all.iter().enumerate() {
            assert_eq!(*r, g.generate_one(7, i));
        }
    }

    #[test]
    fn sender_frequencies_track_volume() {
        let g = Generator::standard(200, 1.2, 0.05, 3).unwrap();
        let records = g.generate(100_000, 11);
        let head = g.registry().entries[0].volume_prob;
        let count = records.iter().filter(|r| r.sender_fi == 0).count();
        let freq = count as f64 / records.len() as f64;
        assert!(
            (freq - head).abs() <= 0.015,
            "rank-1 frequency {freq} vs volume {head}"
        );
    }

    #[test]
    fn template_sets_are_distinct_across_institutions() {
        let g = Generator::standard(100, 1.2, 0.0, 3).unwrap();
        let mut keys = std::collections::HashSet::new();
        for e in &g.registry().entries {
            assert!(keys.insert(template_set_key(g.templates_of(e.fi_id))));
        }
    }

    #[test]
    fn ambiguity_floor_plants_generic_templates_outside_head() {
        let g = Generator::standard(200, 1.2, 0.05, 4).unwrap();
        let generic: Vec<u32> = g
            .registry()
            .entries
            .iter()
            .map(|e| e.fi_id)
            .filter(|&fi| {
                let ts = g.templates_of(fi);
                ts.len() == 1 && ts[0].pieces == vec![Piece::Literal("Payment".into())]
            })
            .collect();
        assert_eq!(generic.len(), 10);
        assert!(generic.iter().all(|&fi| fi >= 10));
    }

    #[test]
    fn amounts_and_dates_stay_in_range() {
        let g = Generator::standard(10, 1.2, 0.0, 5).unwrap();
        let records = g.generate(2000, 5);
        let epoch = corpus_epoch();
        for r in &records {
            assert!((100..=2_000_000).contains(&r.amount_cents));
            let days = (r.date - epoch).num_days();
            assert!((0..365).contains(&days));
            assert!(!r.description.is_empty());
        }
    }

    #[test]
    fn adversarial_pairs_share_token_multisets() {
        let g = Generator::adversarial_pairs(10, 8).unwrap();
        assert_eq!(g.registry().len(), 20);
        for pair in 0..10u32 {
            let a = &g.templates_of(pair * 2)[0];
            let b = &g.templates_of(pair * 2 + 1)[0];
            let mut pa: Vec<String> = a.pieces.iter().map(|p| format!("{p:?}")).collect();
            let mut pb: Vec<String> = b.pieces.iter().map(|p| format!("{p:?}")).collect();
            assert_ne!(pa, pb, "orders must differ");
            pa.sort();
            pb.sort();
            // Multisets must agree piece-for-piece once the owner id is
            // ignored; pieces carry no id so direct comparison works.
            assert_eq!(pa, pb, "multisets must match");
            assert!(g.transform_of(pair * 2).is_identity());
        }
    }

    #[test]
    fn planted_families_write_from_family_word_groups() {
        let g = Generator::planted_families(4, 5, 9).unwrap();
        assert_eq!(g.registry().len(), 20);
        // Two members of the same family share their base words; members of
        // different families share nothing.
        let lits = |fi: u32| -> std::collections::HashSet<String> {
            g.templates_of(fi)
                .iter()
                .flat_map(|t| t.literals().map(str::to_string))
                .collect()
        };
        let same = lits(0).intersection(&lits(1)).count();
        assert!(same >= 4);
        let cross = lits(0).intersection(&lits(5)).count();
        assert_eq!(cross, 0);
    }
}
