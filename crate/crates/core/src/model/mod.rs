//! Domain types shared by every evaluator: the design, the target, the
//! noise model, the penalty and the instance tuple that bundles them.

pub(crate) mod design;
pub mod io;
pub(crate) mod penalty;

pub use design::DesignMatrix;
pub use penalty::{eval_penalty, prox_penalty, ConvexSet, NamedNorm, PenaltySpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// The unknown coefficient vector β*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetVector(pub Vec<f64>);

impl TargetVector {
    pub fn zeros(p: usize) -> Self {
        TargetVector(vec![0.0; p])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of entries that are exactly nonzero.
    pub fn sparsity(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j] != 0.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("target vector has non-finite entries"));
        }
        Ok(())
    }
}

/// How the noise vector ε is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    FixedVector(Vec<f64>),
    Gaussian { sigma: f64, seed: u64 },
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        let spec = NoiseSpec::Gaussian { sigma, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::FixedVector(v) if v.iter().any(|x| !x.is_finite()) => {
                Err(Error::arg("fixed noise vector has non-finite entries"))
            }
            NoiseSpec::Gaussian { sigma, .. } if !(*sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::arg(format!("noise level must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            NoiseSpec::Gaussian { sigma, .. } => Some(*sigma),
            NoiseSpec::FixedVector(_) => None,
        }
    }

    /// Noise with the same law but a different seed. Fixed vectors are
    /// returned unchanged.
    pub fn with_seed(&self, seed: u64) -> NoiseSpec {
        match self {
            NoiseSpec::Gaussian { sigma, .. } => NoiseSpec::Gaussian {
                sigma: *sigma,
                seed,
            },
            other => other.clone(),
        }
    }
}

/// Returns the noise vector of length `n`.
///
/// The Gaussian variant is a pure function of `(sigma, seed, n)`: the same
/// triple always yields the same bits.
pub fn materialize_noise(noise: &NoiseSpec, n: usize) -> Result<Vec<f64>> {
    noise.validate()?;
    match noise {
        NoiseSpec::FixedVector(v) => {
            if v.len() != n {
                return Err(Error::dim("noise vector length", n, v.len()));
            }
            Ok(v.clone())
        }
        NoiseSpec::Gaussian { sigma, seed } => {
            let mut rng = rng::rng_from_seed(*seed);
            Ok(rng::gaussian_vec(&mut rng, n, *sigma))
        }
    }
}

/// The tuple every evaluator consumes.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub design: DesignMatrix,
    pub beta_star: TargetVector,
    pub noise: NoiseSpec,
    pub penalty: PenaltySpec,
}

impl ProblemInstance {
    pub fn new(
        design: DesignMatrix,
        beta_star: TargetVector,
        noise: NoiseSpec,
        penalty: PenaltySpec,
    ) -> Result<Self> {
        let inst = ProblemInstance {
            design,
            beta_star,
            noise,
            penalty,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p) = (self.n(), self.p());
        if self.beta_star.len() != p {
            return Err(Error::dim("target vector length", p, self.beta_star.len()));
        }
        self.beta_star.validate()?;
        self.noise.validate()?;
        if let NoiseSpec::FixedVector(v) = &self.noise {
            if v.len() != n {
                return Err(Error::dim("noise vector length", n, v.len()));
            }
        }
        self.penalty.validate(p)
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn noise_vector(&self) -> Result<Vec<f64>> {
        materialize_noise(&self.noise, self.n())
    }

    /// Xβ*
    pub fn signal(&self) -> Vec<f64> {
        self.design.apply(self.beta_star.as_slice())
    }

    /// y = Xβ* + ε for a given noise realization.
    pub fn response_for(&self, eps: &[f64]) -> Result<Vec<f64>> {
        if eps.len() != self.n() {
            return Err(Error::dim("noise vector length", self.n(), eps.len()));
        }
        Ok(self
            .signal()
            .iter()
            .zip(eps)
            .map(|(a, b)| a + b)
            .collect())
    }

    /// y = Xβ* + ε with ε from the instance's own noise spec.
    pub fn response(&self) -> Result<Vec<f64>> {
        let eps = self.noise_vector()?;
        self.response_for(&eps)
    }

    /// h(β*)
    pub fn penalty_at_target(&self) -> f64 {
        eval_penalty(&self.penalty, self.beta_star.as_slice(), self.n())
            .expect("instance dimensions validated")
    }

    /// Same design and penalty with a different target.
    pub fn with_target(&self, beta_star: TargetVector) -> Result<Self> {
        ProblemInstance::new(
            self.design.clone(),
            beta_star,
            self.noise.clone(),
            self.penalty.clone(),
        )
    }

    pub fn with_penalty(&self, penalty: PenaltySpec) -> Result<Self> {
        ProblemInstance::new(
            self.design.clone(),
            self.beta_star.clone(),
            self.noise.clone(),
            penalty,
        )
    }
}
