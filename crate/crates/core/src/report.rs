//! Machine-readable run reports and CSV output for intensity profiles.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::IntensityProfile;

/// Output of one experiment or protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub outcome_labels: Vec<String>,
    pub exact_probabilities: Option<Vec<f64>>,
    pub sampled_frequencies: Option<Vec<f64>>,
    pub counts: Option<Vec<u64>>,
    pub shots: u64,
    pub diagnostics: BTreeMap<String, Value>,
    /// Seconds spent; the only field allowed to differ between identical runs.
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            outcome_labels: Vec::new(),
            exact_probabilities: None,
            sampled_frequencies: None,
            counts: None,
            shots: 0,
            diagnostics: BTreeMap::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn diag(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    /// Frequencies and probabilities must each sum to 1 within 1e-9.
    pub fn check(&self) -> Result<()> {
        for v in [&self.exact_probabilities, &self.sampled_frequencies].into_iter().flatten() {
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Normalization(s));
            }
        }
        Ok(())
    }
}

/// Writes `x,density` rows with 17 significant digits.
pub fn emit_csv(profile: &IntensityProfile, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(profile, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

pub fn write_csv<W: Write>(profile: &IntensityProfile, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "x,density")?;
    for (x, d) in profile.x.iter().zip(&profile.density) {
        writeln!(w, "{x:.16e},{d:.16e}")?;
    }
    Ok(())
}
