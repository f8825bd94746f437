//! Closed sign vocabulary: glosses, renditions and their linguistic metadata.
//!
//! Every rendition is its own classifier class. Glosses are only a display
//! grouping, so two renditions of `TIGER` occupy two distinct class indices.
//! Class indices follow catalog file order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatalogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate rendition id `{0}`")]
    DuplicateId(String),
    #[error("empty catalog")]
    Empty,
    #[error("unknown {kind} token `{token}`")]
    UnknownToken { kind: &'static str, token: String },
    #[error("io error: {0}")]
    Io(String),
}

macro_rules! closed_enum {
    ($(#[$m:meta])* $name:ident, $kind:literal, { $($variant:ident => $tok:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $tok),+
                }
            }
        }

        impl FromStr for $name {
            type Err = CatalogError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($tok => Ok($name::$variant),)+
                    other => Err(CatalogError::UnknownToken {
                        kind: $kind,
                        token: other.to_string(),
                    }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

closed_enum!(
    /// Movement category of a sign.
    Movement, "movement", {
        Unidirectional => "unidirectional",
        Bidirectional => "bidirectional",
        Repeated => "repeated",
        Circular => "circular",
        None => "none",
    }
);

closed_enum!(
    /// Number of hands used.
    Hands, "hands", {
        One => "one",
        Two => "two",
    }
);

closed_enum!(
    /// Where the sign is articulated.
    Location, "location", {
        Torso => "torso",
        Neck => "neck",
        Face => "face",
        InSpace => "in_space",
    }
);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignMetadata {
    pub movement: Movement,
    pub hands: Hands,
    pub location: Location,
    /// `None` when the handshape is ambiguous.
    pub handshape: Option<String>,
}

impl SignMetadata {
    pub fn new(movement: Movement, hands: Hands, location: Location, handshape: Option<&str>) -> Self {
        Self {
            movement,
            hands,
            location,
            handshape: handshape.map(str::to_string),
        }
    }
}

/// True when two signs share the number of hands, the movement, or a labelled
/// handshape. Location does not count, and an absent handshape never matches.
pub fn shares_attribute(a: &SignMetadata, b: &SignMetadata) -> bool {
    if a.hands == b.hands || a.movement == b.movement {
        return true;
    }
    matches!((&a.handshape, &b.handshape), (Some(x), Some(y)) if x == y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlossEntry {
    pub rendition_id: String,
    pub gloss: String,
    pub metadata: SignMetadata,
    pub example_media: String,
}

/// Immutable after construction; class `i` is `entries[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabularyCatalog {
    entries: Vec<GlossEntry>,
    index: HashMap<String, usize>,
}

impl VocabularyCatalog {
    pub fn new(entries: Vec<GlossEntry>) -> Result<Self, CatalogError> {
        if entries.is_empty() {
            return Err(CatalogError::Empty);
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.gloss.trim().is_empty() {
                return Err(CatalogError::Parse {
                    line: i + 1,
                    msg: format!("empty gloss for `{}`", e.rendition_id),
                });
            }
            if index.insert(e.rendition_id.clone(), i).is_some() {
                return Err(CatalogError::DuplicateId(e.rendition_id.clone()));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[GlossEntry] {
        &self.entries
    }

    pub fn entry(&self, class: usize) -> Option<&GlossEntry> {
        self.entries.get(class)
    }

    pub fn class_of(&self, rendition_id: &str) -> Option<usize> {
        self.index.get(rendition_id).copied()
    }

    pub fn rendition_of(&self, class: usize) -> Option<&str> {
        self.entries.get(class).map(|e| e.rendition_id.as_str())
    }

    pub fn unique_glosses(&self) -> usize {
        self.entries.iter().map(|e| e.gloss.as_str()).collect::<HashSet<_>>().len()
    }

    /// Number of glosses that have two or more renditions.
    pub fn multi_rendition_glosses(&self) -> usize {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for e in &self.entries {
            *counts.entry(e.gloss.as_str()).or_default() += 1;
        }
        counts.values().filter(|&&n| n >= 2).count()
    }

    /// SHA-256 over the ordered rendition ids. Binds a trained model to the
    /// class index it was trained against.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.entries.len() as u64).to_le_bytes());
        for e in &self.entries {
            h.update(e.rendition_id.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() != 7 {
                return Err(CatalogError::Parse {
                    line,
                    msg: format!("expected 7 tab-separated fields, found {}", fields.len()),
                });
            }
            let at = |e: CatalogError| match e {
                CatalogError::UnknownToken { kind, token } => CatalogError::Parse {
                    line,
                    msg: format!("unknown {kind} token `{token}`"),
                },
                other => other,
            };
            let rendition_id = fields[0].to_string();
            if rendition_id.is_empty() {
                return Err(CatalogError::Parse {
                    line,
                    msg: "empty rendition id".into(),
                });
            }
            if !seen.insert(rendition_id.clone()) {
                return Err(CatalogError::DuplicateId(rendition_id));
            }
            if fields[1].is_empty() {
                return Err(CatalogError::Parse {
                    line,
                    msg: "empty gloss".into(),
                });
            }
            let handshape = match fields[5] {
                "-" | "" => None,
                hs => Some(hs.to_string()),
            };
            entries.push(GlossEntry {
                rendition_id,
                gloss: fields[1].to_string(),
                metadata: SignMetadata {
                    movement: fields[2].parse().map_err(at)?,
                    hands: fields[3].parse().map_err(at)?,
                    location: fields[4].parse().map_err(at)?,
                    handshape,
                },
                example_media: fields[6].to_string(),
            });
        }
        Self::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# rendition_id\tgloss\tmovement\thands\tlocation\thandshape\texample_media\n");
        for e in &self.entries {
            let m = &e.metadata;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                e.rendition_id,
                e.gloss,
                m.movement,
                m.hands,
                m.location,
                m.handshape.as_deref().unwrap_or("-"),
                e.example_media
            ));
        }
        out
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<VocabularyCatalog, CatalogError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| CatalogError::Io(format!("{}: {e}", path.as_ref().display())))?;
    VocabularyCatalog::parse(&text)
}
