//! General-β log-gases `∝ exp(-βN 𝓗(λ))` with
//! `𝓗(λ) = Σ V(λ_k)/2 - (1/N) Σ_{i<j} log(λ_j - λ_i)`.

mod equilibrium;
mod experiments;
mod mcmc;
mod tridiagonal;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use equilibrium::{equilibrium_density, EquilibriumLaw};
pub use experiments::{
    conditional_measure_experiment, conditional_samples, k1_conditional_cdf,
    loggas_rigidity_report, loggas_rigidity_slope, loop_equation_residual, ConditionalRecord,
    ConditionalSpec, LogGasRigidity, LoopRow,
};
pub use mcmc::{
    hamiltonian, log_target, loggas_mcmc_sample, metropolis_log_acceptance, ChainParams,
    ConditionalChain, McmcRun,
};
pub use tridiagonal::{gaussian_beta_tridiagonal, gaussian_beta_tridiagonal_sample};

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V = x²/2`.
    Quadratic,
    /// `V = x²/2 + c x⁴`, `c ≥ 0`.
    Quartic { c: f64 },
    /// User-supplied `V`, `V'` and a lower bound on `V''`; MCMC only.
    #[serde(skip)]
    Custom {
        name: String,
        v: Callable,
        dv: Callable,
        inf_v2: f64,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Quadratic => write!(f, "Quadratic"),
            Potential::Quartic { c } => write!(f, "Quartic {{ c: {c} }}"),
            Potential::Custom { name, inf_v2, .. } => {
                write!(f, "Custom {{ name: {name:?}, inf_v2: {inf_v2} }}")
            }
        }
    }
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Potential::Quadratic, Potential::Quadratic) => true,
            (Potential::Quartic { c: a }, Potential::Quartic { c: b }) => a == b,
            (Potential::Custom { name: a, .. }, Potential::Custom { name: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Potential {
    pub fn v(&self, x: f64) -> f64 {
        match self {
            Potential::Quadratic => 0.5 * x * x,
            Potential::Quartic { c } => 0.5 * x * x + c * x.powi(4),
            Potential::Custom { v, .. } => v(x),
        }
    }

    pub fn dv(&self, x: f64) -> f64 {
        match self {
            Potential::Quadratic => x,
            Potential::Quartic { c } => x + 4.0 * c * x.powi(3),
            Potential::Custom { dv, .. } => dv(x),
        }
    }

    /// Coefficients of `V'` in the monomial basis, when it is a polynomial.
    pub fn dv_poly(&self) -> Option<Vec<f64>> {
        match self {
            Potential::Quadratic => Some(vec![0.0, 1.0]),
            Potential::Quartic { c } => Some(vec![0.0, 1.0, 0.0, 4.0 * c]),
            Potential::Custom { .. } => None,
        }
    }

    /// `inf V''`.
    pub fn convexity(&self) -> f64 {
        match self {
            Potential::Quadratic | Potential::Quartic { .. } => 1.0,
            Potential::Custom { inf_v2, .. } => *inf_v2,
        }
    }

    pub fn is_even(&self) -> bool {
        !matches!(self, Potential::Custom { .. })
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Quadratic => "quadratic".into(),
            Potential::Quartic { c } => format!("quartic({c})"),
            Potential::Custom { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGasSpec {
    pub beta: f64,
    pub potential: Potential,
    pub n: usize,
}

impl LogGasSpec {
    pub fn new(beta: f64, potential: Potential, n: usize) -> Result<Self> {
        let s = Self { beta, potential, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return invalid(format!("β = {} must be positive", self.beta));
        }
        if self.n == 0 {
            return invalid("N must be positive");
        }
        if let Potential::Quartic { c } = self.potential {
            if !(c >= 0.0 && c.is_finite()) {
                return invalid(format!("quartic coefficient {c} must be nonnegative"));
            }
        }
        Ok(())
    }

    /// `inf V'' = 2ϖ`.
    pub fn convexity(&self) -> f64 {
        self.potential.convexity()
    }
}
