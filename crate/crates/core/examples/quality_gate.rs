//! Runs the submission checks on the bundled pose fixtures.
//!
//! cargo run --example quality_gate

use signdict::gate::{check_technical, check_visibility, gate, ByteStatus, GateThresholds};
use signdict::pose::{FileBackedEstimator, PoseEstimator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = GateThresholds::default();
    for name in ["clean_640x480", "two_person", "hands_invisible", "truncated"] {
        let bytes = std::fs::read(format!("{}/fixtures/{name}.pose", env!("CARGO_MANIFEST_DIR")))?;
        let (status, people) = match FileBackedEstimator.estimate_people(&bytes) {
            Ok(p) => (ByteStatus::Complete, p),
            Err(_) if FileBackedEstimator.is_truncated(&bytes) => (ByteStatus::Truncated, Vec::new()),
            Err(_) => (ByteStatus::Undecodable, Vec::new()),
        };
        let resolution = people.first().map_or((0, 0), |p| p.source_resolution());
        let visibility = if people.is_empty() { Vec::new() } else { check_visibility(&people, &t)? };
        let report = gate(check_technical(resolution, status, &t), visibility);
        println!("== {name}: {:?}", report.verdict);
        print!("{}", report.render_message());
    }
    Ok(())
}
