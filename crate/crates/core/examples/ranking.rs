//! Turns a class distribution into ranked results, confidence labels, the
//! compact and detailed views, and a filtered grid.
//!
//! cargo run --example ranking

use signdict::catalog::{load_catalog, Hands};
use signdict::ranking::{compose_view, filter_results, rank, FilterCriteria, ViewKind};
use signdict::recognizer::Distribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = load_catalog(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog.tsv"))?;
    // a made-up distribution with a few strong candidates
    let logits: Vec<f64> = (0..catalog.len()).map(|i| match i { 3 => 9.0, _ if i % 17 == 3 => 4.0 - i as f64 / 60.0, _ => 0.0 }).collect();
    let ranked = rank(&Distribution::from_logits(&logits), &catalog)?;

    let compact = compose_view(&ranked, ViewKind::Compact)?;
    let top = compact.primary.as_ref().unwrap();
    println!("best match: {} ({}, p={:.3})", top.gloss, top.confidence.as_str(), top.probability);
    for r in &compact.grid {
        println!("  #{} {:<12} {}", r.rank, r.gloss, r.confidence.as_str());
    }

    let one_handed = FilterCriteria { hands: Some(Hands::One), ..Default::default() };
    let detailed = compose_view(&filter_results(&ranked, &one_handed), ViewKind::Detailed)?;
    println!("detailed, one-handed only: {} entries", detailed.grid.len());
    for r in detailed.grid.iter().take(5) {
        println!("  #{} (was #{}) {:<12} {}", r.rank, r.original_rank, r.gloss, r.metadata.hands.as_str());
    }
    Ok(())
}
