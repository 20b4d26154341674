use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub const TOOL: &str = "geoqs";

/// Record of one invocation, enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Command-line arguments after the program name.
    pub arguments: Vec<String>,
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub output: Option<String>,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
}

pub struct ManifestClock {
    started: SystemTime,
    timer: Instant,
}

impl ManifestClock {
    pub fn start() -> Self {
        ManifestClock {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }

    pub fn finish(
        &self,
        command: &str,
        arguments: &[String],
        seeds: Vec<u64>,
        tolerance: f64,
        output: Option<String>,
    ) -> RunManifest {
        RunManifest {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            arguments: arguments.to_vec(),
            seeds,
            tolerance,
            output,
            started_unix_seconds: self
                .started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0),
            wall_clock_seconds: self.timer.elapsed().as_secs_f64(),
        }
    }
}

/// Arguments for rerunning `manifest`, with `--output` replaced when given.
pub fn replay_arguments(manifest: &RunManifest, output: Option<&str>) -> Vec<String> {
    let mut args = Vec::with_capacity(manifest.arguments.len() + 2);
    let mut skip_next = false;
    for a in &manifest.arguments {
        if skip_next {
            skip_next = false;
            continue;
        }
        if output.is_some() {
            if a == "--output" || a == "-o" {
                skip_next = true;
                continue;
            }
            if a.starts_with("--output=") {
                continue;
            }
        }
        args.push(a.clone());
    }
    if let Some(o) = output {
        args.insert(0, o.to_string());
        args.insert(0, "--output".to_string());
    }
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_replaced() {
        let m = ManifestClock::start().finish(
            "rho",
            &["rho".into(), "--state".into(), "s.json".into(), "--output".into(), "a.json".into()],
            vec![],
            1e-10,
            Some("a.json".into()),
        );
        assert_eq!(
            replay_arguments(&m, Some("b.json")),
            vec!["--output", "b.json", "rho", "--state", "s.json"]
        );
        assert_eq!(replay_arguments(&m, None), m.arguments);
    }
}
