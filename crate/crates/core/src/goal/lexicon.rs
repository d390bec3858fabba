//! Shipped lexicon: synonym table, attribute word lists, and the stop list
//! used to drop directions/regions from context objects. User tables extend
//! the defaults.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug)]
pub struct Lexicon {
    /// variant phrase -> canonical category (lowercase, space-separated)
    pub synonyms: BTreeMap<String, String>,
    pub colors: BTreeSet<String>,
    pub shapes: BTreeSet<String>,
    /// material/size words stripped when reducing a noun phrase to its head
    pub modifiers: BTreeSet<String>,
    /// directions, regions, and non-objects that never become context terms
    pub stop_objects: BTreeSet<String>,
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for Lexicon {
    fn default() -> Self {
        let synonym_pairs: &[(&str, &str)] = &[
            ("couch", "sofa"),
            ("settee", "sofa"),
            ("armchair", "chair"),
            ("stool", "chair"),
            ("television", "tv"),
            ("tv set", "tv"),
            ("telly", "tv"),
            ("painting", "picture"),
            ("photo", "picture"),
            ("picture frame", "picture"),
            ("poster", "picture"),
            ("stairs", "staircase"),
            ("stairway", "staircase"),
            ("chest of drawers", "dresser"),
            ("cupboard", "cabinet"),
            ("closet", "wardrobe"),
            ("potted plant", "plant"),
            ("houseplant", "plant"),
            ("bedside table", "nightstand"),
            ("night table", "nightstand"),
            ("carpet", "rug"),
            ("bookshelf", "shelf"),
            ("bookcase", "shelf"),
            ("washbasin", "sink"),
            ("radiator", "heater"),
        ];
        Lexicon {
            synonyms: synonym_pairs
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            colors: set(&[
                "red", "blue", "green", "yellow", "white", "black", "brown", "gray", "grey",
                "orange", "purple", "pink", "beige", "tan", "cream", "golden", "gold", "silver",
                "dark", "light", "teal", "navy", "maroon", "turquoise", "violet",
            ]),
            shapes: set(&[
                "round",
                "square",
                "rectangular",
                "oval",
                "circular",
                "triangular",
                "curved",
                "l-shaped",
                "u-shaped",
            ]),
            modifiers: set(&[
                "wooden", "wood", "metal", "metallic", "plastic", "leather", "glass", "ceramic",
                "marble", "stone", "fabric", "wicker", "rattan", "velvet", "small", "large",
                "big", "little", "tall", "short", "old", "new", "modern", "antique", "fancy",
                "simple", "cozy", "soft",
            ]),
            stop_objects: set(&[
                "side", "corner", "middle", "center", "centre", "room", "area", "region",
                "image", "frame", "background", "foreground", "top", "bottom", "edge", "wall",
                "floor", "ceiling", "stuff", "thing", "things", "object",
            ]),
        }
    }
}

const ARTICLES: &[&str] = &["a", "an", "the"];

impl Lexicon {
    /// Extends the shipped synonym table with user entries (user wins).
    pub fn with_synonyms(mut self, extra: &BTreeMap<String, String>) -> Self {
        for (k, v) in extra {
            self.synonyms.insert(normalize(k), normalize(v));
        }
        self
    }

    /// Reduces a raw phrase to its canonical category: normalize, look up the
    /// full phrase, then strip leading articles/attribute words and retry.
    /// Unknown phrases map to their stripped normalized form.
    pub fn canonical(&self, phrase: &str) -> String {
        let normalized = normalize(phrase);
        if let Some(c) = self.synonyms.get(&normalized) {
            return c.clone();
        }
        let mut tokens: Vec<&str> = normalized.split(' ').filter(|t| !t.is_empty()).collect();
        while tokens.len() > 1 {
            let head = tokens[0];
            let strippable = ARTICLES.contains(&head)
                || self.modifiers.contains(head)
                || self.colors.contains(head)
                || self.shapes.contains(head);
            if !strippable {
                break;
            }
            tokens.remove(0);
            let candidate = tokens.join(" ");
            if let Some(c) = self.synonyms.get(&candidate) {
                return c.clone();
            }
        }
        if tokens.len() == 1 && ARTICLES.contains(&tokens[0]) {
            return String::new();
        }
        tokens.join(" ")
    }

    pub fn is_color_word(&self, token: &str) -> bool {
        self.colors.contains(token)
    }

    pub fn is_shape_word(&self, token: &str) -> bool {
        self.shapes.contains(token)
    }

    /// True if a canonical phrase should be discarded as a non-object
    /// (direction, region, material-only, ...).
    pub fn is_stop_object(&self, canonical: &str) -> bool {
        if canonical.is_empty() {
            return true;
        }
        if self.stop_objects.contains(canonical) {
            return true;
        }
        // pure attribute expressions like "red" or "round object"
        let head = canonical.rsplit(' ').next().unwrap_or(canonical);
        self.stop_objects.contains(head)
            || (self.colors.contains(canonical) || self.shapes.contains(canonical))
    }
}

/// Lowercase, strip punctuation at token edges, collapse whitespace.
pub fn normalize(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(|tok| {
            tok.trim_matches(|c: char| c.is_ascii_punctuation() && c != '-')
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Maps every phrase to a canonical label. Phrases in the target's synonym
/// group map to the exact target string.
pub fn canonicalize_terms(
    phrases: &[String],
    lexicon: &Lexicon,
    target: &str,
) -> BTreeMap<String, String> {
    let target_canon = lexicon.canonical(target);
    let mut map = BTreeMap::new();
    for phrase in phrases {
        let canon = lexicon.canonical(phrase);
        let label = if canon == target_canon {
            target.to_string()
        } else {
            canon
        };
        map.insert(phrase.clone(), label);
    }
    map
}
