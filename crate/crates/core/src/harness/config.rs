//! TOML system configuration.

use super::HarnessError;
use crate::bounds::RcuEnsemble;
use crate::chain::{Chain, PriorMode};
use crate::crc::CrcSpec;
use crate::decoder::{DecoderConfig, SlvdDecoder};
use crate::modulation::snr_to_sigma;
use crate::shaping::{
    AmplitudeDistribution, CcdmMapper, DistributionMatcher, Matcher, ShellMapper, DEFAULT_WEIGHT_SCALE,
};
use crate::tbcc::ConvCodeSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherKind {
    Smdm,
    Ccdm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmConfig {
    pub kind: MatcherKind,
    /// Message bits; ignored by the constant-composition matcher, which
    /// takes the largest width its composition class allows.
    pub k: usize,
    pub n: usize,
    /// Target amplitude PMF; rescaled to sum to one.
    pub pmf: Vec<f64>,
    #[serde(default = "default_weight_scale")]
    pub weight_scale: u64,
}

fn default_weight_scale() -> u64 {
    DEFAULT_WEIGHT_SCALE
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcConfig {
    pub degree: usize,
    /// Hex coefficient string including `x^degree`, e.g. `0x43`.
    pub coefficients: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeConfig {
    pub k0: usize,
    pub nu: usize,
    /// Octal parity-check polynomials, `h^0` first.
    pub parity: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderSettings {
    pub list_size: usize,
    #[serde(default)]
    pub prior_mode: PriorMode,
    /// Amplitude PMF used by the metric; defaults to the matcher's realized
    /// distribution.
    #[serde(default)]
    pub prior_pmf: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stopping {
    pub min_errors: usize,
    pub max_frames: usize,
    /// Frames simulated between stopping checks.
    #[serde(default = "default_round")]
    pub round: usize,
}

fn default_round() -> usize {
    64
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_frames: 1_000_000,
            round: default_round(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub dm: DmConfig,
    pub crc: CrcConfig,
    pub code: CodeConfig,
    pub decoder: DecoderSettings,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub stopping: Stopping,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

/// Target PMF of the worked example: 64 amplitudes, 87 bits.
pub const EXAMPLE_PMF: [f64; 4] = [0.587, 0.312, 0.014, 0.085];

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The full-size system: `k = 87`, `n = 64`, list size 30.
    pub fn reference_system(code: &ConvCodeSpec, crc: &CrcSpec) -> Self {
        Self {
            dm: DmConfig {
                kind: MatcherKind::Smdm,
                k: 87,
                n: 64,
                pmf: EXAMPLE_PMF.to_vec(),
                weight_scale: DEFAULT_WEIGHT_SCALE,
            },
            crc: CrcConfig {
                degree: crc.degree(),
                coefficients: crc.to_hex(),
            },
            code: CodeConfig {
                k0: code.k0(),
                nu: code.nu(),
                parity: code.parity_octal(),
            },
            decoder: DecoderSettings {
                list_size: 30,
                prior_mode: PriorMode::PerPosition,
                prior_pmf: None,
            },
            snr_db: Vec::new(),
            stopping: Stopping::default(),
            master_seed: 1,
            workers: 1,
        }
    }

    /// A reduced system for quick runs: `k = 21`, `n = 16`.
    pub fn small_system(code: &ConvCodeSpec, crc: &CrcSpec) -> Self {
        let mut cfg = Self::reference_system(code, crc);
        cfg.dm.k = 21;
        cfg.dm.n = 16;
        cfg.decoder.list_size = 8;
        cfg
    }

    pub fn build(&self) -> Result<System, HarnessError> {
        let dist = AmplitudeDistribution::normalized(&self.dm.pmf)?;
        let matcher = match self.dm.kind {
            MatcherKind::Smdm => Matcher::Shell(ShellMapper::with_weight_scale(
                self.dm.k,
                self.dm.n,
                dist,
                self.dm.weight_scale,
            )?),
            MatcherKind::Ccdm => Matcher::ConstantComposition(CcdmMapper::new(self.dm.n, dist)?),
        };
        let crc = CrcSpec::from_hex(self.crc.degree, &self.crc.coefficients)?;
        let code = ConvCodeSpec::from_octal(self.code.k0, self.code.nu, &self.code.parity)?;
        let prior_dist = match &self.decoder.prior_pmf {
            Some(p) => AmplitudeDistribution::normalized(p)?,
            None => AmplitudeDistribution::normalized(&matcher.realized_pmf())?,
        };
        let chain = Chain::new(matcher, crc, &code)?;
        if self.decoder.list_size == 0 {
            return Err(HarnessError::Config("list size must be at least 1".into()));
        }
        Ok(System {
            chain,
            prior_dist,
            list_size: self.decoder.list_size,
            prior_mode: self.decoder.prior_mode,
        })
    }
}

/// A built configuration: the chain plus the decoder settings.
#[derive(Debug, Clone)]
pub struct System {
    pub chain: Chain,
    /// Amplitude distribution assumed by the decoder metric and the SNR scale.
    pub prior_dist: AmplitudeDistribution,
    pub list_size: usize,
    pub prior_mode: PriorMode,
}

impl System {
    /// Mean transmitted `E[X^2]` per symbol: shaped amplitudes on the matcher
    /// positions, uniform ones on the CRC positions. This is the energy that
    /// defines the SNR axis.
    pub fn energy(&self) -> f64 {
        let c = self.chain.constellation();
        let priors = self
            .chain
            .position_priors(&self.prior_dist, PriorMode::PerPosition)
            .expect("prior matches constellation");
        priors.iter().map(|p| p.energy(c)).sum::<f64>() / priors.len() as f64
    }

    pub fn sigma(&self, snr_db: f64) -> f64 {
        snr_to_sigma(snr_db, self.energy())
    }

    pub fn decoder(&self, sigma: f64) -> Result<SlvdDecoder<'_>, HarnessError> {
        Ok(SlvdDecoder::new(
            &self.chain,
            &self.prior_dist,
            DecoderConfig {
                list_size: self.list_size,
                sigma,
                prior_mode: self.prior_mode,
            },
        )?)
    }

    pub fn message_bits(&self) -> usize {
        self.chain.matcher().input_bits()
    }

    /// Random-coding ensemble matched to the system: every one of the `T`
    /// symbols drawn from the shaped prior. Its SNR axis uses its own energy,
    /// `snr_to_sigma(snr, ensemble.energy())`.
    pub fn rcu_ensemble(&self) -> Result<RcuEnsemble, HarnessError> {
        let priors = self.chain.position_priors(&self.prior_dist, PriorMode::Homogeneous)?;
        Ok(RcuEnsemble::from_constellation(self.chain.constellation(), &priors)?)
    }
}
