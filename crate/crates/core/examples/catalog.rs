//! Loads the bundled vocabulary and shows how renditions map to classes.
//!
//! cargo run --example catalog

use signdict::catalog::{load_catalog, shares_attribute};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog.tsv");
    let catalog = load_catalog(path)?;
    println!(
        "{} renditions (classes), {} glosses, {} glosses with several renditions",
        catalog.len(),
        catalog.unique_glosses(),
        catalog.multi_rendition_glosses()
    );
    println!("fingerprint {}", &catalog.fingerprint()[..16]);

    for e in catalog.entries().iter().take(5) {
        let m = &e.metadata;
        println!(
            "class {:>3}  {:<14} {:<10} {:<14} {:<4} {:<8} {}",
            catalog.class_of(&e.rendition_id).unwrap(),
            e.rendition_id,
            e.gloss,
            m.movement.as_str(),
            m.hands.as_str(),
            m.location.as_str(),
            m.handshape.as_deref().unwrap_or("-")
        );
    }

    let (a, b) = (&catalog.entries()[0], &catalog.entries()[1]);
    println!("{} and {} share an attribute: {}", a.gloss, b.gloss, shares_attribute(&a.metadata, &b.metadata));
    Ok(())
}
