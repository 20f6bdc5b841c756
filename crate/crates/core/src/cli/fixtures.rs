//! Spec files bundled with the binary.

use super::specfile::{parse_spec, LoadedSpec, SpecError};

pub const EUCLIDEAN_R3: &str = include_str!("../../fixtures/euclidean-r3.json");
pub const SPHERE: &str = include_str!("../../fixtures/sphere.json");
pub const SASAKIAN_R3: &str = include_str!("../../fixtures/sasakian-r3.json");
pub const WORKED_EXAMPLE: &str = include_str!("../../fixtures/worked-example.json");
pub const POTENTIAL_DY_TO_DX: &str = include_str!("../../fixtures/potential-dy-to-dx.json");

/// `(name, source)` of every bundled fixture, in a fixed order.
pub const ALL: [(&str, &str); 5] = [
    ("euclidean-r3", EUCLIDEAN_R3),
    ("sphere", SPHERE),
    ("sasakian-r3", SASAKIAN_R3),
    ("worked-example", WORKED_EXAMPLE),
    ("potential-dy-to-dx", POTENTIAL_DY_TO_DX),
];

pub fn source(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Loads a bundled fixture by name.
pub fn load(name: &str) -> Result<LoadedSpec, SpecError> {
    let text = source(name).ok_or_else(|| SpecError::Semantic {
        origin: name.to_string(),
        message: "no bundled fixture with this name".into(),
    })?;
    parse_spec(text, &format!("<bundled {name}>"))
}

/// Loads a bundled fixture, panicking on failure. Bundled fixtures are
/// validated by the test suite.
pub fn bundled(name: &str) -> LoadedSpec {
    load(name).unwrap_or_else(|e| panic!("bundled fixture {name}: {e}"))
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_bundled_fixtures_load() {
        for (name, _) in super::ALL {
            let s = super::load(name).unwrap();
            assert_eq!(s.file.name, name);
        }
        let e = super::bundled("euclidean-r3");
        assert_eq!(e.expected_failures, vec!["almost_contact".to_string(), "metric_compatibility".to_string()]);
    }
}
