//! Run configuration: where the arrangement comes from, which `z`, seeds and
//! tolerances. A [`RunConfig`] is resolved into a [`ResolvedRun`] before any
//! command executes.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrangement::{rat_texts, ArrangementSpec, RatText, SpecFile};
use crate::error::{usage, Error, Result};
use crate::symbolic::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "Tolerances::default_newton")]
    pub newton_tol: f64,
    #[serde(default = "Tolerances::default_spectral")]
    pub spectral_tol: f64,
    #[serde(default = "Tolerances::default_fd")]
    pub fd_tol: f64,
    #[serde(default = "Tolerances::default_dedup")]
    pub dedup_tol: f64,
}

impl Tolerances {
    fn default_newton() -> f64 {
        1e-12
    }
    fn default_spectral() -> f64 {
        1e-9
    }
    fn default_fd() -> f64 {
        1e-6
    }
    fn default_dedup() -> f64 {
        1e-7
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("spectral_tol", self.spectral_tol),
            ("fd_tol", self.fd_tol),
            ("dedup_tol", self.dedup_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return usage(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            newton_tol: Self::default_newton(),
            spectral_tol: Self::default_spectral(),
            fd_tol: Self::default_fd(),
            dedup_tol: Self::default_dedup(),
        }
    }
}

/// Parameters of a randomly generated generic arrangement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub n: usize,
    pub k: usize,
    #[serde(default = "RandomSpec::default_bound")]
    pub coeff_bound: i64,
}

impl RandomSpec {
    fn default_bound() -> i64 {
        3
    }
}

/// Either an explicit rational vector or the keyword `"sample"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZChoice {
    Explicit(Vec<RatText>),
    Keyword(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecFile>,
    /// Spec file path; relative paths are resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ZChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Chart samples drawn by `flows` (default 20).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Flow parameters used by `flows`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<RatText>>,
    /// Newton starts used by `solve` (default `50 · C(n-1, k)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_starts: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }
}

/// How `z` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZSource {
    Explicit,
    SpecFile,
    Sampled,
}

/// A fully determined run: the arrangement, `z`, seed and tolerances.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub spec: ArrangementSpec,
    pub z: Vec<Rat>,
    pub z_source: ZSource,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub samples: usize,
    pub s_grid: Option<Vec<Rat>>,
    pub newton_starts: Option<usize>,
    /// Whether the arrangement came from the random generator.
    pub random: Option<RandomSpec>,
}

/// Stable per-purpose seed derived from the run seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, mixed with the seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for byte in label.bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl ResolvedRun {
    /// Seed for a random step; randomness without a seed is a usage error.
    pub fn seed_for(&self, label: &str) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(derive_seed(s, label)),
            None => usage(format!("a seed is required ({label} uses randomness)")),
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": SpecFile::from_spec(&self.spec, None),
            "random": self.random,
            "z": rat_texts(&self.z),
            "z_source": self.z_source,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "samples": self.samples,
            "s_grid": self.s_grid.as_deref().map(rat_texts),
            "newton_starts": self.newton_starts,
        })
    }
}

fn spec_seed_required(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Usage(format!("a seed is required when {what}")))
}

/// Resolves spec source, `z` and defaults. `base` is the directory used for
/// relative `spec_file` paths.
pub fn resolve(config: &RunConfig, base: &Path) -> Result<ResolvedRun> {
    config.tolerances.validate()?;
    let sources = [config.spec.is_some(), config.spec_file.is_some(), config.random.is_some()]
        .iter()
        .filter(|&&x| x)
        .count();
    if sources != 1 {
        return usage("config needs exactly one of `spec`, `spec_file`, `random`");
    }
    let mut seed = config.seed;
    let (spec, file_z) = if let Some(file) = &config.spec {
        (file.to_spec()?, file.z_values())
    } else if let Some(path) = &config.spec_file {
        let full = if path.is_absolute() { path.clone() } else { base.join(path) };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| Error::Usage(format!("cannot read spec file {}: {e}", full.display())))?;
        let file: SpecFile =
            serde_json::from_str(&text).map_err(|e| Error::Usage(format!("invalid spec file: {e}")))?;
        if seed.is_none() {
            seed = file.seed;
        }
        (file.to_spec()?, file.z_values())
    } else {
        let r = config.random.as_ref().expect("checked above");
        let s = spec_seed_required(seed, "the arrangement is random")?;
        (
            ArrangementSpec::random_generic(r.n, r.k, derive_seed(s, "spec"), r.coeff_bound)?,
            None,
        )
    };

    let (z, z_source) = match &config.z {
        Some(ZChoice::Explicit(v)) => (v.iter().map(|x| x.0.clone()).collect::<Vec<_>>(), ZSource::Explicit),
        Some(ZChoice::Keyword(w)) if w == "sample" => (sample_z(&spec, seed)?, ZSource::Sampled),
        Some(ZChoice::Keyword(w)) => return usage(format!("z must be a rational vector or \"sample\", got {w:?}")),
        None => match file_z {
            Some(z) => (z, ZSource::SpecFile),
            None => (sample_z(&spec, seed)?, ZSource::Sampled),
        },
    };
    if z.len() != spec.n() {
        return usage(format!("z must have {} entries", spec.n()));
    }
    Ok(ResolvedRun {
        spec,
        z,
        z_source,
        seed,
        tolerances: config.tolerances,
        samples: config.samples.unwrap_or(20),
        s_grid: config.s_grid.as_ref().map(|g| g.iter().map(|x| x.0.clone()).collect()),
        newton_starts: config.newton_starts,
        random: config.random.clone(),
    })
}

fn sample_z(spec: &ArrangementSpec, seed: Option<u64>) -> Result<Vec<Rat>> {
    let s = spec_seed_required(seed, "z is sampled")?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, "z"));
    spec.sample_z(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::int;

    const WORKED: &str = r#"{
        "spec": {"n": 2, "k": 1, "b": [[1], [1]], "a": [1, 1]},
        "z": ["0", 1]
    }"#;

    #[test]
    fn parses_inline_spec() {
        let cfg = RunConfig::from_json(WORKED).unwrap();
        let run = resolve(&cfg, Path::new(".")).unwrap();
        assert_eq!(run.z, vec![int(0), int(1)]);
        assert_eq!(run.z_source, ZSource::Explicit);
        assert_eq!(run.tolerances, Tolerances::default());
        assert!(run.seed_for("x").is_err());
    }

    #[test]
    fn random_spec_needs_seed() {
        let cfg = RunConfig::from_json(r#"{"random": {"n": 5, "k": 2}}"#).unwrap();
        assert!(matches!(resolve(&cfg, Path::new(".")), Err(Error::Usage(_))));
        let cfg = RunConfig::from_json(r#"{"random": {"n": 5, "k": 2}, "seed": 4, "z": "sample"}"#).unwrap();
        let a = resolve(&cfg, Path::new(".")).unwrap();
        let b = resolve(&cfg, Path::new(".")).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.z, b.z);
        assert!(a.spec.is_off_discriminant(&a.z));
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{}"#,
            r#"{"random": {"n": 5, "k": 2}, "spec_file": "x.json", "seed": 1}"#,
            r#"{"random": {"n": 5, "k": 2}, "seed": 1, "tolerances": {"fd_tol": -1}}"#,
            r#"{"random": {"n": 5, "k": 2}, "seed": 1, "z": "nearby"}"#,
            r#"{"spec": {"n": 2, "k": 1, "b": [[1], [1]], "a": [1, 1]}, "z": [0]}"#,
        ] {
            let parsed = RunConfig::from_json(bad).and_then(|c| resolve(&c, Path::new(".")));
            assert!(matches!(parsed, Err(Error::Usage(_))), "{bad}");
        }
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_ne!(derive_seed(1, "z"), derive_seed(1, "spec"));
        assert_eq!(derive_seed(9, "newton"), derive_seed(9, "newton"));
    }
}
