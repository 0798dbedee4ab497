//! Config-driven experiment runner behind the `rmtlab` binary.
//!
//! A config names one of the experiments in [`ExperimentKind`]; [`prepare`]
//! checks it and [`Prepared::run`] produces an [`ExperimentReport`] whose rows
//! carry a pass/fail status against the envelope constants.

mod config;
mod jobs;

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    ChainBlock, EnsembleBlock, Envelopes, ExperimentConfig, Format, LogGasBlock, Params,
    ProfileBlock, Source, SourceKind,
};

use crate::RmtError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Run(RmtError),
}

impl From<RmtError> for HarnessError {
    fn from(e: RmtError) -> Self {
        match e {
            RmtError::InvalidParameter(msg) => HarnessError::InvalidSpec(msg),
            other => HarnessError::Run(other),
        }
    }
}

impl HarnessError {
    /// Process exit code: 2 unknown experiment, 3 invalid spec, 4 I/O, 1
    /// anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownExperiment(_) => 2,
            HarnessError::InvalidSpec(_) => 3,
            HarnessError::Io(_) => 4,
            HarnessError::Run(_) => 1,
        }
    }
}

macro_rules! kinds {
    ($($variant:ident => $name:literal, $about:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum ExperimentKind { $($variant),* }

        impl ExperimentKind {
            pub const ALL: &'static [ExperimentKind] = &[$(ExperimentKind::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(ExperimentKind::$variant => $name),* }
            }

            pub fn about(self) -> &'static str {
                match self { $(ExperimentKind::$variant => $about),* }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name { $($name => Some(ExperimentKind::$variant),)* _ => None }
            }
        }
    };
}

kinds! {
    Semicircle => "semicircle", "moments and Stieltjes-transform error down to the local scale";
    Rigidity => "rigidity", "eigenvalue deviations from classical locations";
    Deloc => "deloc", "sup-norm of normalized eigenvectors";
    Gaps => "gaps", "unfolded bulk gap distribution";
    Twopoint => "twopoint", "averaged two-point correlation in a bulk window";
    DbmRelax => "dbm-relax", "gap statistics along the matrix Ornstein-Uhlenbeck flow";
    Edge => "edge", "largest-eigenvalue fluctuations across entry laws";
    Er => "er", "sparse Erdos-Renyi outlier and second eigenvalue";
    Loggas => "loggas", "equilibrium measure, sampling routes and log-gas rigidity";
    Conditional => "conditional", "local gap statistics with frozen boundary particles";
    Loop => "loop", "first loop equation residual";
    Compare => "compare", "resolvent comparison under three and four matched moments";
    Flucavg => "flucavg", "averaged versus individual resolvent fluctuations";
    HsCheck => "hs-check", "exact identities: Helffer-Sjostrand, Ward, Schur, interlacing";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Informational row with no envelope.
    Na,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Na => "na",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub statistic: String,
    pub n: Option<usize>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub samples: Option<usize>,
    pub status: Status,
}

impl Row {
    pub fn info(statistic: &str, n: Option<usize>, value: f64) -> Self {
        Self {
            statistic: statistic.into(),
            n,
            value,
            stderr: None,
            lo: None,
            hi: None,
            samples: None,
            status: Status::Na,
        }
    }

    /// Bounds are inclusive; a non-finite value always fails.
    pub fn check(
        statistic: &str,
        n: Option<usize>,
        value: f64,
        lo: Option<f64>,
        hi: Option<f64>,
    ) -> Self {
        let ok =
            value.is_finite() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            lo,
            hi,
            ..Self::info(statistic, n, value)
        }
    }

    pub fn with_stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = Some(samples);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub tool_version: String,
    pub envelope_version: u32,
    pub config_hash: String,
    pub input_hash: String,
    pub master_seed: u64,
    pub wall_time_s: f64,
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.status == Status::Fail)
    }

    /// The row named `statistic` at size `n` (or the first one if `n` is
    /// `None`).
    pub fn row(&self, statistic: &str, n: Option<usize>) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.statistic == statistic && (n.is_none() || r.n == n))
    }

    /// Everything except the wall time, which is the only field allowed to
    /// differ between reruns.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("experiment", self.experiment.clone()),
            ("tool_version", self.tool_version.clone()),
            ("envelope_version", self.envelope_version.to_string()),
            ("config_hash", self.config_hash.clone()),
            ("input_hash", self.input_hash.clone()),
            ("master_seed", self.master_seed.to_string()),
            ("wall_time_s", format!("{:.3}", self.wall_time_s)),
        ] {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "experiment",
            "statistic",
            "n",
            "value",
            "stderr",
            "lo",
            "hi",
            "samples",
            "status",
        ])
        .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                self.experiment.clone(),
                r.statistic.clone(),
                r.n.map(|n| n.to_string()).unwrap_or_default(),
                fmt_f64(r.value),
                opt(r.stderr),
                opt(r.lo),
                opt(r.hi),
                r.samples.map(|n| n.to_string()).unwrap_or_default(),
                r.status.as_str().to_string(),
            ])
            .expect("in-memory write");
        }
        out + &String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Shortest round-trip representation.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// A checked config ready to run.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub envelopes: Envelopes,
    pub kind: ExperimentKind,
    input_hash: String,
    job: jobs::Job,
}

impl std::fmt::Debug for Prepared {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prepared")
            .field("kind", &self.kind)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Parses and checks a config without sampling anything.
pub fn prepare(text: &str) -> Result<Prepared, HarnessError> {
    let config = ExperimentConfig::parse(text)?;
    prepare_config(config, text)
}

/// Like [`prepare`] for an already-parsed config; `raw` feeds the input hash.
pub fn prepare_config(config: ExperimentConfig, raw: &str) -> Result<Prepared, HarnessError> {
    let kind = ExperimentKind::from_name(&config.experiment)
        .ok_or_else(|| HarnessError::UnknownExperiment(config.experiment.clone()))?;
    let envelopes = Envelopes::with_overrides(&config.envelopes)?;
    let job = jobs::prepare(kind, &config, &envelopes)?;
    let blob = format!("{raw}\n{}", Envelopes::defaults_text());
    let input_hash = sha256_hex(format!("blob {}\0{blob}", blob.len()).as_bytes());
    Ok(Prepared {
        config,
        envelopes,
        kind,
        input_hash,
        job,
    })
}

impl Prepared {
    pub fn config_hash(&self) -> String {
        let canonical =
            serde_json::to_string(&(&self.config, &self.envelopes)).expect("config serializes");
        sha256_hex(canonical.as_bytes())
    }

    /// Runs on a dedicated pool of `threads` workers. Results do not depend
    /// on `threads`.
    pub fn run(&self, threads: usize) -> Result<ExperimentReport, HarnessError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| HarnessError::Run(RmtError::InvalidParameter(e.to_string())))?;
        let start = Instant::now();
        let rows = pool.install(|| (self.job)()).map_err(HarnessError::Run)?;
        Ok(ExperimentReport {
            experiment: self.kind.name().into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            envelope_version: self.envelopes.version,
            config_hash: self.config_hash(),
            input_hash: self.input_hash.clone(),
            master_seed: self.config.master_seed,
            wall_time_s: start.elapsed().as_secs_f64(),
            rows,
        })
    }
}
