use std::fmt::Write as _;

use landmark_core::Match;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkResult {
    pub landmark: String,
    pub matches: Vec<Match>,
}

/// Output of `find`: one entry per landmark, in command-line order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindReport {
    pub results: Vec<LandmarkResult>,
}

impl FindReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>4} {:>10} {:>9} {:>9} {:>9} {:>8}",
            "landmark", "rank", "error", "x", "y", "z", "angle"
        );
        for r in &self.results {
            if r.matches.is_empty() {
                let _ = writeln!(s, "{:<16} {:>4}", r.landmark, "-");
            }
            for m in &r.matches {
                let t = m.transform.translation();
                let _ = writeln!(
                    s,
                    "{:<16} {:>4} {:>10.6} {:>9.4} {:>9.4} {:>9.4} {:>7.2}°",
                    r.landmark,
                    m.rank,
                    m.error,
                    t.x,
                    t.y,
                    t.z,
                    m.transform.rotation_angle().to_degrees()
                );
            }
        }
        s
    }
}
