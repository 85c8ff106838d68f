//! The scenario files under `fixtures/`, compiled into the library.

use crate::error::{Error, Result};
use crate::scenario::Scenario;

pub const IDS: [&str; 6] = ["F0", "F1", "F2", "F3", "F4", "F5"];

/// Raw JSON text of a fixture.
pub fn fixture_text(id: &str) -> Result<&'static str> {
    Ok(match id {
        "F0" => include_str!("../../../fixtures/F0.json"),
        "F1" => include_str!("../../../fixtures/F1.json"),
        "F2" => include_str!("../../../fixtures/F2.json"),
        "F3" => include_str!("../../../fixtures/F3.json"),
        "F4" => include_str!("../../../fixtures/F4.json"),
        "F5" => include_str!("../../../fixtures/F5.json"),
        other => {
            return Err(Error::Input(format!(
                "unknown fixture `{other}`; available: {}",
                IDS.join(", ")
            )))
        }
    })
}

pub fn fixture(id: &str) -> Result<Scenario> {
    Scenario::from_json(fixture_text(id)?).map_err(|e| Error::Input(format!("fixture {id}: {e}")))
}
