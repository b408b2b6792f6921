//! JSON schemas for every file the CLI emits.

pub const NAMES: [&str; 4] = ["config", "manifest", "report", "summary"];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "config" => include_str!("../schemas/config.schema.json"),
        "manifest" => include_str!("../schemas/manifest.schema.json"),
        "report" => include_str!("../schemas/report.schema.json"),
        "summary" => include_str!("../schemas/summary.schema.json"),
        _ => return None,
    })
}
