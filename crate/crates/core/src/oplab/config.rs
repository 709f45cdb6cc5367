use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::exactlin::{random_family, FamilySpec, RationalMatrix};
use crate::Exec;

use super::{NormOptions, OplabError};

/// Where the matrix family comes from. Exactly one source may be given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Only `"paper-example"` is known.
    pub builtin: Option<String>,
    /// Partition of `n` for the canonical projections.
    pub canonical: Option<Vec<usize>>,
    pub random: Option<RandomFamily>,
    /// Partition for explicit `matrices`.
    pub partition: Option<Vec<usize>>,
    /// One matrix per block in the `a,b; c,d` format.
    pub matrices: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub partition: Vec<usize>,
    pub seed: u64,
}

impl FamilyConfig {
    pub fn canonical(partition: &[usize]) -> Self {
        Self {
            canonical: Some(partition.to_vec()),
            ..Self::default()
        }
    }

    pub fn paper_example() -> Self {
        Self {
            builtin: Some("paper-example".into()),
            ..Self::default()
        }
    }

    /// Parses the command line form: `paper-example`, `canonical:1,1` or
    /// `random:1,2:SEED`.
    pub fn parse(text: &str) -> Result<Self, OplabError> {
        let text = text.trim();
        let bad = |why: &str| OplabError::Config(format!("family '{text}': {why}"));
        let parts = |s: &str| -> Result<Vec<usize>, OplabError> {
            s.split(',')
                .map(|k| k.trim().parse::<usize>().map_err(|_| bad(&format!("bad block size '{}'", k.trim()))))
                .collect()
        };
        if text == "paper-example" {
            return Ok(Self::paper_example());
        }
        if let Some(rest) = text.strip_prefix("canonical:") {
            return Ok(Self::canonical(&parts(rest)?));
        }
        if let Some(rest) = text.strip_prefix("random:") {
            let (part, seed) = rest.split_once(':').ok_or_else(|| bad("expected random:PARTITION:SEED"))?;
            let seed = seed.trim().parse().map_err(|_| bad(&format!("bad seed '{seed}'")))?;
            return Ok(Self {
                random: Some(RandomFamily {
                    partition: parts(part)?,
                    seed,
                }),
                ..Self::default()
            });
        }
        Err(bad("expected paper-example, canonical:P or random:P:SEED"))
    }

    fn source_count(&self) -> usize {
        [
            self.builtin.is_some(),
            self.canonical.is_some(),
            self.random.is_some(),
            self.matrices.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    pub fn resolve(&self) -> Result<FamilySpec, OplabError> {
        let err = |m: String| OplabError::Config(m);
        match self.source_count() {
            0 => return Err(err("family: one of builtin, canonical, random, matrices is required".into())),
            1 => {}
            _ => return Err(err("family: builtin, canonical, random and matrices are exclusive".into())),
        }
        if self.partition.is_some() && self.matrices.is_none() {
            return Err(err("family.partition is only used with family.matrices".into()));
        }
        if let Some(name) = &self.builtin {
            return match name.as_str() {
                "paper-example" => Ok(FamilySpec::paper_example()),
                other => Err(err(format!("family.builtin: unknown family '{other}'"))),
            };
        }
        if let Some(p) = &self.canonical {
            check_partition("family.canonical", p)?;
            return Ok(FamilySpec::canonical(p));
        }
        if let Some(r) = &self.random {
            check_partition("family.random.partition", &r.partition)?;
            let n = r.partition.iter().sum();
            return random_family(n, &r.partition, r.seed).map_err(|e| err(format!("family.random: {e}")));
        }
        let texts = self.matrices.as_ref().expect("counted above");
        let partition = self
            .partition
            .as_ref()
            .ok_or_else(|| err("family.partition is required with family.matrices".into()))?;
        check_partition("family.partition", partition)?;
        let matrices = texts
            .iter()
            .enumerate()
            .map(|(i, t)| RationalMatrix::parse(t).map_err(|e| err(format!("family.matrices[{i}]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        FamilySpec::new(partition.clone(), matrices).map_err(|e| err(format!("family.matrices: {e}")))
    }

    /// Short label used in CSV `params`.
    pub fn describe(&self) -> String {
        let join = |p: &[usize]| p.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        if let Some(b) = &self.builtin {
            b.clone()
        } else if let Some(p) = &self.canonical {
            format!("canonical:{}", join(p))
        } else if let Some(r) = &self.random {
            format!("random:{}:{}", join(&r.partition), r.seed)
        } else if let Some(p) = &self.partition {
            format!("matrices:{}", join(p))
        } else {
            "unset".into()
        }
    }
}

fn check_partition(field: &str, p: &[usize]) -> Result<(), OplabError> {
    if p.is_empty() || p.contains(&0) {
        return Err(OplabError::Config(format!("{field}: block sizes must be positive, got {p:?}")));
    }
    Ok(())
}

/// Parameters shared by the `uniform` and `scaling` experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    pub r: f64,
    pub p: Vec<f64>,
    pub atoms: usize,
    pub radii: Vec<f64>,
    pub dilations: Vec<f64>,
    pub q_perturbed: Option<f64>,
    pub seed: u64,
    /// Relative tolerance of each norm estimate.
    pub tol: f64,
    /// Bound on max/min in the uniform experiment.
    pub threshold: f64,
    pub fit_samples: usize,
    pub output: Option<PathBuf>,
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: FamilyConfig::canonical(&[1, 1]),
            r: 0.5,
            p: vec![1.0],
            atoms: 20,
            radii: (-4..=2).map(|k| 2f64.powi(k)).collect(),
            dilations: vec![0.25, 0.5, 0.7, 1.0, 1.5, 2.0, 4.0],
            q_perturbed: None,
            seed: 1,
            tol: 1e-3,
            threshold: 10.0,
            fit_samples: 500,
            output: None,
            exec: Exec::Parallel,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, OplabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| OplabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, OplabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OplabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), OplabError> {
        let err = |m: String| Err(OplabError::Config(m));
        if !(self.r > 0.0 && self.r < 1.0) {
            return err(format!("r = {} must lie in (0, 1)", self.r));
        }
        if self.p.is_empty() {
            return err("p: at least one value is required".into());
        }
        for &p in &self.p {
            if !(p > 0.0 && p <= 1.0 && p < 1.0 / self.r) {
                return err(format!("p = {p} must lie in (0, 1] and below 1/r = {}", 1.0 / self.r));
            }
        }
        if self.atoms == 0 {
            return err("atoms must be positive".into());
        }
        if self.radii.is_empty() || self.radii.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return err(format!("radii must be positive and finite, got {:?}", self.radii));
        }
        if self.dilations.len() < 2 || self.dilations.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return err(format!("dilations needs two or more positive values, got {:?}", self.dilations));
        }
        if let Some(q) = self.q_perturbed {
            if !(q >= 1.0 && q.is_finite()) {
                return err(format!("q_perturbed = {q} must be at least 1"));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 0.1) {
            return err(format!("tol = {} must lie in (0, 0.1]", self.tol));
        }
        if !(self.threshold > 1.0) {
            return err(format!("threshold = {} must exceed 1", self.threshold));
        }
        if self.fit_samples < 10 {
            return err(format!("fit_samples = {} must be at least 10", self.fit_samples));
        }
        self.family.resolve().map(|_| ())
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions {
            fit_samples: self.fit_samples,
            fit_seed: self.seed ^ 0x5eed,
            ..NormOptions::default()
        }
        .with_tol(self.tol)
        .with_exec(self.exec)
    }
}
