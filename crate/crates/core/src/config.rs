//! Run configuration: a TOML file, overridden field by field by CLI flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::EvalOptions;
use crate::nli::{CachedNli, MockNli, NliBackend, RemoteConfig, RemoteNli, NLI_URL_ENV};
use crate::refs::{NegativeOptions, DEFAULT_NEGATIVES_PER_SLOT};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error("remote NLI backend selected but no URL given (flag --nli-url, ${NLI_URL_ENV}, or `nli_url`)")]
    MissingUrl,
    #[error("cannot hash input {path}: {message}")]
    Hash { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

/// Settings as they may appear in a config file; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schemas: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    #[serde(default)]
    pub generations: Vec<PathBuf>,
    #[serde(default)]
    pub variants: Vec<PathBuf>,
    pub nli: Option<BackendKind>,
    pub nli_url: Option<String>,
    pub unseen_domains: Option<Vec<String>>,
    pub validation: Option<bool>,
    pub augmentation: Option<bool>,
    pub negatives_per_slot: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub exact_case_ser: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let file: Self = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(file.rebase(path.parent().unwrap_or(Path::new(""))))
    }

    /// Relative paths in a config file are relative to the file itself.
    fn rebase(mut self, dir: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.schemas.iter_mut().for_each(fix);
        self.instances.iter_mut().for_each(fix);
        self.output_dir.iter_mut().for_each(fix);
        self.generations.iter_mut().for_each(fix);
        self.variants.iter_mut().for_each(fix);
        self
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(mut self, over: ConfigFile) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            schemas, instances, nli, nli_url, unseen_domains, validation, augmentation,
            negatives_per_slot, seed, output_dir, workers, exact_case_ser
        );
        if !over.generations.is_empty() {
            self.generations = over.generations;
        }
        if !over.variants.is_empty() {
            self.variants = over.variants;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schemas: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    pub generations: Vec<PathBuf>,
    pub variants: Vec<PathBuf>,
    pub nli: BackendKind,
    pub nli_url: Option<String>,
    pub unseen_domains: Vec<String>,
    pub validation: bool,
    pub augmentation: bool,
    pub negatives_per_slot: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub exact_case_ser: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(ConfigFile::default())
    }
}

impl RunConfig {
    /// Fills defaults for unset fields. See [`resolve_nli_url`] for the URL.
    pub fn resolve(file: ConfigFile) -> Self {
        Self {
            schemas: file.schemas,
            instances: file.instances,
            generations: file.generations,
            variants: file.variants,
            nli: file.nli.unwrap_or_default(),
            nli_url: file.nli_url,
            unseen_domains: file.unseen_domains.unwrap_or_default(),
            validation: file.validation.unwrap_or(true),
            augmentation: file.augmentation.unwrap_or(true),
            negatives_per_slot: file.negatives_per_slot.unwrap_or(DEFAULT_NEGATIVES_PER_SLOT),
            seed: file.seed.unwrap_or(0),
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from("sgsacc-out")),
            workers: file.workers.unwrap_or(0),
            exact_case_ser: file.exact_case_ser.unwrap_or(false),
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            augmentation: self.augmentation,
            validation: self.validation,
            exact_case_ser: self.exact_case_ser,
        }
    }

    pub fn negative_options(&self) -> NegativeOptions {
        NegativeOptions {
            per_slot: self.negatives_per_slot,
            seed: self.seed,
        }
    }

    pub fn require_schemas(&self) -> Result<&Path, ConfigError> {
        self.schemas.as_deref().ok_or(ConfigError::Missing("schemas"))
    }

    pub fn require_instances(&self) -> Result<&Path, ConfigError> {
        self.instances.as_deref().ok_or(ConfigError::Missing("instances"))
    }

    pub fn backend(&self) -> Result<CachedNli<Box<dyn NliBackend>>, ConfigError> {
        let inner: Box<dyn NliBackend> = match self.nli {
            BackendKind::Mock => Box::new(MockNli),
            BackendKind::Remote => {
                let url = self.nli_url.clone().ok_or(ConfigError::MissingUrl)?;
                Box::new(RemoteNli::new(RemoteConfig::new(url)))
            }
        };
        Ok(CachedNli::new(inner))
    }

    /// SHA-256 over every setting that can change results, with input files
    /// identified by content digest rather than path.
    pub fn fingerprint(&self) -> Result<String, ConfigError> {
        let digest = |p: &Path| -> Result<String, ConfigError> {
            let bytes = fs::read(p).map_err(|e| ConfigError::Hash {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(sha256_hex(&bytes))
        };
        let many = |ps: &[PathBuf]| ps.iter().map(|p| digest(p)).collect::<Result<Vec<_>, _>>();
        let inputs = InputDigests {
            schemas: self.schemas.as_deref().map(digest).transpose()?,
            instances: self.instances.as_deref().map(digest).transpose()?,
            generations: many(&self.generations)?,
            variants: many(&self.variants)?,
        };
        Ok(self.fingerprint_with(&inputs))
    }

    /// As [`RunConfig::fingerprint`], for inputs that never touched disk.
    pub fn fingerprint_with(&self, inputs: &InputDigests) -> String {
        let canonical = serde_json::json!({
            "schemas": inputs.schemas,
            "instances": inputs.instances,
            "generations": inputs.generations,
            "variants": inputs.variants,
            "nli": self.nli,
            "nli_url": match self.nli {
                BackendKind::Remote => self.nli_url.clone(),
                BackendKind::Mock => None,
            },
            "unseen_domains": self.unseen_domains,
            "validation": self.validation,
            "augmentation": self.augmentation,
            "negatives_per_slot": self.negatives_per_slot,
            "seed": self.seed,
            "exact_case_ser": self.exact_case_ser,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }
}

/// Content digests of the input files, hex SHA-256.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputDigests {
    pub schemas: Option<String>,
    pub instances: Option<String>,
    pub generations: Vec<String>,
    pub variants: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// URL precedence: explicit flag, then environment, then config file.
pub fn resolve_nli_url(flag: Option<String>, file: Option<String>) -> Option<String> {
    flag.or_else(|| {
        std::env::var(NLI_URL_ENV)
            .ok()
            .filter(|u| !u.trim().is_empty())
    })
    .or(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: ConfigFile = toml::from_str(
            "seed = 4\nvalidation = false\nunseen_domains = [\"Alarm\"]\ngenerations = [\"a.json\"]",
        )
        .unwrap();
        let flags = ConfigFile {
            seed: Some(9),
            generations: vec!["b.json".into()],
            ..Default::default()
        };
        let cfg = RunConfig::resolve(file.overlay(flags));
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.validation);
        assert!(cfg.augmentation);
        assert_eq!(cfg.unseen_domains, vec!["Alarm"]);
        assert_eq!(cfg.generations, vec![PathBuf::from("b.json")]);
        assert_eq!(cfg.negatives_per_slot, 3);
    }

    #[test]
    fn file_paths_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "schemas = \"s.json\"\ninstances = \"/abs/i.json\"\ngenerations = [\"g/a.json\"]").unwrap();
        let file = ConfigFile::load(&path).unwrap();
        assert_eq!(file.schemas, Some(dir.path().join("s.json")));
        assert_eq!(file.instances, Some(PathBuf::from("/abs/i.json")));
        assert_eq!(file.generations, vec![dir.path().join("g/a.json")]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<ConfigFile>("sed = 1").is_err());
    }

    #[test]
    fn remote_requires_url() {
        let cfg = RunConfig { nli: BackendKind::Remote, ..RunConfig::default() };
        assert!(matches!(cfg.backend(), Err(ConfigError::MissingUrl)));
        assert_eq!(RunConfig::default().backend().unwrap().identity(), "mock");
    }

    #[test]
    fn fingerprint_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig { output_dir: "elsewhere".into(), workers: 7, ..RunConfig::default() };
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_ne!(a.fingerprint().unwrap(), c.fingerprint().unwrap());
    }
}
