//! Adversary specs bundled with the crate, addressable by name.

use crate::error::{Error, Result};
use crate::model::ValidatedAdversary;

pub const FIXTURES: &[(&str, &str)] = &[
    ("complete-2", include_str!("../../../fixtures/complete-2.json")),
    ("relay-3", include_str!("../../../fixtures/relay-3.json")),
    ("halflink-2", include_str!("../../../fixtures/halflink-2.json")),
    ("lossy-link-2", include_str!("../../../fixtures/lossy-link-2.json")),
    ("silent-2", include_str!("../../../fixtures/silent-2.json")),
    ("star-3", include_str!("../../../fixtures/star-3.json")),
    ("window-right-2", include_str!("../../../fixtures/window-right-2.json")),
    ("window-silent-2", include_str!("../../../fixtures/window-silent-2.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(name, _)| *name)
}

/// Raw JSON of a bundled fixture. A trailing `.json` is ignored.
pub fn source(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn load(name: &str) -> Result<ValidatedAdversary> {
    let text = source(name).ok_or_else(|| Error::BadAlphabet(format!("no bundled fixture named {name}")))?;
    ValidatedAdversary::from_json(text)
}
