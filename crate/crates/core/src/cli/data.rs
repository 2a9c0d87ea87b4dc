//! Bundled example Hamiltonians.

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::hamiltonian::{load_hamiltonian, parse_hamiltonian};

const BUNDLED: [(&str, &str); 5] = [
    ("xz", include_str!("../../data/xz.json")),
    ("ising2", include_str!("../../data/ising2.json")),
    ("heisenberg2", include_str!("../../data/heisenberg2.json")),
    ("mixed2", include_str!("../../data/mixed2.json")),
    ("commuting2", include_str!("../../data/commuting2.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

pub fn bundled(name: &str) -> Result<Hamiltonian> {
    let (_, text) = BUNDLED.iter().find(|b| b.0 == name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no bundled Hamiltonian {name:?}; have {:?}",
            bundled_names()
        ))
    })?;
    parse_hamiltonian(text)
}

pub fn bundled_set() -> Vec<(&'static str, Hamiltonian)> {
    BUNDLED
        .iter()
        .map(|(n, text)| {
            (
                *n,
                parse_hamiltonian(text).expect("bundled Hamiltonians are valid"),
            )
        })
        .collect()
}

/// Resolves `--ham`: `bundled:<name>` or a file path. Without `--ham` the
/// named bundled default is used, if any.
pub fn resolve(spec: Option<&str>, default: Option<&str>) -> Result<Hamiltonian> {
    match (spec, default) {
        (Some(s), _) => match s.strip_prefix("bundled:") {
            Some(name) => bundled(name),
            None => load_hamiltonian(s),
        },
        (None, Some(name)) => bundled(name),
        (None, None) => Err(Error::InvalidArgument("--ham is required".into())),
    }
}
