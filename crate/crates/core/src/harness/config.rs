//! Experiment configuration files: TOML with a few top-level keys and
//! optional `[ensemble]`, `[reference]`, `[loggas]`, `[chain]`, `[params]`
//! and `[envelopes]` tables.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::ensembles::{BandShape, EnsembleSpec, EntryDistribution, Symmetry, VarianceProfile};
use crate::error::Result;
use crate::loggas::{gaussian_beta_tridiagonal_sample, ChainParams, LogGasSpec, Potential};
use crate::rng::SeedPath;
use crate::semicircle_law::SpectrumSource;
use crate::spectral::{SemicircleLaw, SpectralLaw, UniformLaw};
use crate::stats::poisson_points;

const DEFAULTS: &str = include_str!("envelopes.toml");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(HarnessError::InvalidSpec(format!(
                "unknown format `{other}` (csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_sweep: Option<Vec<usize>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub ensemble: Option<EnsembleBlock>,
    /// Second ensemble for two-sample comparisons.
    #[serde(default)]
    pub reference: Option<EnsembleBlock>,
    #[serde(default)]
    pub loggas: Option<LogGasBlock>,
    #[serde(default)]
    pub chain: ChainBlock,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub envelopes: BTreeMap<String, f64>,
}

fn default_samples() -> usize {
    20
}

fn default_true() -> bool {
    true
}

fn default_entries() -> String {
    "gaussian".into()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    #[default]
    Dense,
    /// Invariant Gaussian β-ensemble through its tridiagonal model.
    Tridiagonal,
    /// iid uniform points; a diagnostic input without level repulsion.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    #[serde(default)]
    pub source: SourceKind,
    #[serde(default)]
    pub symmetry: Option<Symmetry>,
    #[serde(default = "default_entries")]
    pub entries: String,
    /// `(value, probability)` pairs for `entries = "custom"`.
    #[serde(default)]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub profile: Option<ProfileBlock>,
    #[serde(default)]
    pub er_p: Option<f64>,
    #[serde(default = "default_true")]
    pub isotropic_complex: bool,
    /// Tridiagonal sources only; defaults to the symmetry class.
    #[serde(default)]
    pub beta: Option<f64>,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        Self {
            source: SourceKind::Dense,
            symmetry: None,
            entries: default_entries(),
            atoms: None,
            profile: None,
            er_p: None,
            isotropic_complex: true,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileBlock {
    Flat,
    Band {
        width: usize,
        shape: Option<BandShape>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGasBlock {
    pub beta: f64,
    #[serde(default = "default_potential")]
    pub potential: String,
    #[serde(default)]
    pub c: f64,
}

fn default_potential() -> String {
    "quadratic".into()
}

impl LogGasBlock {
    pub fn potential(&self) -> Result<Potential> {
        match self.potential.as_str() {
            "quadratic" => Ok(Potential::Quadratic),
            "quartic" => Ok(Potential::Quartic { c: self.c }),
            other => crate::error::invalid(format!(
                "unknown potential `{other}` (quadratic or quartic)"
            )),
        }
    }

    pub fn spec(&self, n: usize) -> Result<LogGasSpec> {
        LogGasSpec::new(self.beta, self.potential()?, n)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub chains: Option<usize>,
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub thin: Option<usize>,
    pub step: Option<f64>,
    pub target_acceptance: Option<f64>,
}

impl ChainBlock {
    pub fn params(&self) -> ChainParams {
        let d = ChainParams::default();
        ChainParams {
            chains: self.chains.unwrap_or(d.chains),
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            samples: self.samples.unwrap_or(d.samples),
            thin: self.thin.unwrap_or(d.thin),
            step: self.step.unwrap_or(d.step),
            target_acceptance: self.target_acceptance.unwrap_or(d.target_acceptance),
        }
    }
}

/// Experiment-specific knobs; each experiment reads the ones it needs and
/// falls back to its own defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub energy: Option<f64>,
    pub eta: Option<f64>,
    /// `η = N^(-eta_exponent)` when `eta` is not given.
    pub eta_exponent: Option<f64>,
    /// Bulk energies pooled into the local-law median; defaults to `[energy]`.
    pub energies: Option<Vec<f64>>,
    /// Spectral parameters as `[re, im]` pairs.
    pub z: Option<Vec<[f64; 2]>>,
    /// Half-width of the unfolding window around `energy`.
    pub window: Option<f64>,
    pub bins: Option<usize>,
    pub bin_upper: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub detune: Option<f64>,
    pub flow_t: Option<f64>,
    pub alpha_max: Option<f64>,
    pub k: Option<usize>,
    pub k1_oracle: Option<bool>,
    /// Draws per chain for the single-particle oracle.
    pub k1_samples: Option<usize>,
    /// Sample count for the `[reference]` ensemble; defaults to `samples`.
    pub reference_samples: Option<usize>,
    pub seeds: Option<usize>,
    pub swap_n: Option<usize>,
    pub swap_samples: Option<usize>,
    pub route_n: Option<usize>,
    pub route_samples: Option<usize>,
    pub mcmc_n: Option<usize>,
    pub envelope_n: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub ou_t: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    version: u32,
    envelopes: BTreeMap<String, f64>,
}

/// Envelope constants after applying a config's overrides to the shipped
/// defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelopes {
    pub version: u32,
    values: BTreeMap<String, f64>,
}

impl Envelopes {
    pub fn defaults() -> Self {
        let d: DefaultsFile = toml::from_str(DEFAULTS).expect("shipped envelope defaults parse");
        Self {
            version: d.version,
            values: d.envelopes,
        }
    }

    pub fn with_overrides(
        overrides: &BTreeMap<String, f64>,
    ) -> std::result::Result<Self, HarnessError> {
        let mut e = Self::defaults();
        for (k, v) in overrides {
            if !e.values.contains_key(k) {
                return Err(HarnessError::InvalidSpec(format!("unknown envelope `{k}`")));
            }
            e.values.insert(k.clone(), *v);
        }
        Ok(e)
    }

    pub fn get(&self, key: &str) -> f64 {
        *self
            .values
            .get(key)
            .unwrap_or_else(|| panic!("envelope `{key}` missing from defaults"))
    }

    pub fn defaults_text() -> &'static str {
        DEFAULTS
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))
    }

    /// `n_sweep`, or `[n]`.
    pub fn sizes(&self) -> std::result::Result<Vec<usize>, HarnessError> {
        let sizes = match (&self.n_sweep, self.n) {
            (Some(s), None) => s.clone(),
            (None, Some(n)) => vec![n],
            (Some(_), Some(_)) => {
                return Err(HarnessError::InvalidSpec(
                    "give either n or n_sweep, not both".into(),
                ))
            }
            (None, None) => return Err(HarnessError::InvalidSpec("missing n or n_sweep".into())),
        };
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(HarnessError::InvalidSpec("sizes must be positive".into()));
        }
        Ok(sizes)
    }

    pub fn single_size(&self) -> std::result::Result<usize, HarnessError> {
        match self.sizes()?.as_slice() {
            [n] => Ok(*n),
            _ => Err(HarnessError::InvalidSpec(format!(
                "experiment `{}` takes a single n",
                self.experiment
            ))),
        }
    }

    pub fn reference_samples(&self) -> usize {
        self.params.reference_samples.unwrap_or(self.samples)
    }

    pub fn seed(&self) -> SeedPath {
        SeedPath::new(self.master_seed, 0, self.experiment.clone())
    }

    pub fn z_grid(&self, default: &[[f64; 2]]) -> Vec<Complex64> {
        self.params
            .z
            .as_deref()
            .unwrap_or(default)
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect()
    }
}

/// Where a harness experiment draws its spectra from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Matrix(EnsembleSpec),
    Tridiagonal { beta: f64, n: usize },
    Poisson { n: usize },
}

impl EnsembleBlock {
    pub fn entry_law(&self) -> Result<EntryDistribution> {
        match (self.entries.as_str(), &self.atoms) {
            ("custom" | "custom_discrete", Some(atoms)) => EntryDistribution::custom(atoms.clone()),
            ("custom" | "custom_discrete", None) => {
                crate::error::invalid("custom entries need `atoms`")
            }
            (name, _) => EntryDistribution::from_name(name).ok_or_else(|| {
                crate::RmtError::InvalidParameter(format!("unknown entry law `{name}`"))
            }),
        }
    }

    pub fn matrix_spec(&self, n: usize) -> Result<EnsembleSpec> {
        let symmetry = self.symmetry.unwrap_or(Symmetry::RealSymmetric);
        let mut spec = match self.er_p {
            Some(p) => EnsembleSpec::erdos_renyi(n, p)?,
            None => EnsembleSpec::wigner(symmetry, n, self.entry_law()?),
        };
        if let Some(ProfileBlock::Band { width, shape }) = &self.profile {
            spec = spec.with_profile(VarianceProfile::band(
                n,
                *width,
                shape.unwrap_or(BandShape::Indicator),
            )?);
        }
        spec.isotropic_complex = self.isotropic_complex;
        spec.validate()?;
        Ok(spec)
    }

    pub fn source(&self, n: usize) -> Result<Source> {
        match self.source {
            SourceKind::Dense => Ok(Source::Matrix(self.matrix_spec(n)?)),
            SourceKind::Tridiagonal => {
                let beta = self
                    .beta
                    .unwrap_or(self.symmetry.unwrap_or(Symmetry::RealSymmetric).beta());
                if !(beta > 0.0) || n == 0 {
                    return crate::error::invalid("tridiagonal source needs β > 0 and N > 0");
                }
                Ok(Source::Tridiagonal { beta, n })
            }
            SourceKind::Poisson => Ok(Source::Poisson { n }),
        }
    }
}

impl Source {
    pub fn n(&self) -> usize {
        match self {
            Source::Matrix(s) => s.n,
            Source::Tridiagonal { n, .. } | Source::Poisson { n } => *n,
        }
    }

    pub fn eigenvalues(&self, seed: &SeedPath) -> Result<Vec<f64>> {
        match self {
            Source::Matrix(spec) => crate::ensembles::sample(spec, seed)?.eigenvalues(),
            Source::Tridiagonal { beta, n } => {
                Ok(gaussian_beta_tridiagonal_sample(*beta, *n, seed)?.eigenvalues)
            }
            Source::Poisson { n } => Ok(poisson_points(*n, -2.0, 2.0, seed)),
        }
    }

    /// Density the spectra are unfolded against.
    pub fn law(&self) -> Box<dyn SpectralLaw + Sync> {
        match self {
            Source::Poisson { .. } => Box::new(UniformLaw { a: -2.0, b: 2.0 }),
            _ => Box::new(SemicircleLaw),
        }
    }

    /// Symmetry class when the spectra come from a β-ensemble.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Source::Matrix(s) => Some(s.beta()),
            Source::Tridiagonal { beta, .. } => Some(*beta),
            Source::Poisson { .. } => None,
        }
    }

    pub fn spectrum_source(&self) -> Result<SpectrumSource> {
        match self {
            Source::Matrix(s) => Ok(SpectrumSource::Dense(s.clone())),
            Source::Tridiagonal { beta, n } => {
                Ok(SpectrumSource::GaussianTridiagonal { beta: *beta, n: *n })
            }
            Source::Poisson { .. } => {
                crate::error::invalid("Poisson points have no resolvent or classical locations")
            }
        }
    }
}
