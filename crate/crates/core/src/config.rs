//! Experiment configuration, read from TOML. Every field has a default, so an
//! empty file is a valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupParams, ResourceCaps};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub group: GroupSection,
    pub oracles: OracleSection,
    pub series: SeriesSection,
    pub theta: ThetaSection,
    pub gns: GnsSection,
    pub knapp_stein: KnappSteinSection,
    pub harish_chandra: HarishChandraSection,
    pub spectral: SpectralSection,
    pub boundary: BoundarySection,
    pub caps: CapsSection,
    pub acceptance: AcceptanceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupSection {
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub specs: Vec<String>,
    pub psd_radius: usize,
    pub psd_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    pub sigmas: Vec<f64>,
    pub m_max: usize,
    pub window: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSection {
    pub stages: usize,
    pub eps_scale: f64,
    pub audit_eps: f64,
    pub audit_span: usize,
    pub max_width: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnsSection {
    pub s: f64,
    pub depth: usize,
    pub schedule_steps: usize,
    pub tail_frac: f64,
    pub max_truncation: usize,
    pub conformal_limit: f64,
    pub mu_t_offsets: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnappSteinSection {
    pub s_values: Vec<f64>,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarishChandraSection {
    pub s: f64,
    pub max_len: usize,
    pub fusion: (f64, f64, f64),
    pub bracket_limit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub n_max: usize,
    pub entropy_n_max: usize,
    pub entropy_range: (usize, usize),
    pub fuzz_count: usize,
    pub fuzz_radius: usize,
    pub fuzz_n_max: usize,
    pub fuzz_oracles: Vec<String>,
    pub random_probes: usize,
    pub rrd_range: (usize, usize),
    pub rrd_n_max: usize,
    pub rrd_r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub s: f64,
    pub l_range: (usize, usize),
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapsSection {
    pub max_sphere_words: u64,
    pub max_support: usize,
    pub max_dense_dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcceptanceSection {
    /// Re-run the suite and compare serialized reports byte for byte.
    pub reproducibility_rerun: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            group: GroupSection::default(),
            oracles: OracleSection::default(),
            series: SeriesSection::default(),
            theta: ThetaSection::default(),
            gns: GnsSection::default(),
            knapp_stein: KnappSteinSection::default(),
            harish_chandra: HarishChandraSection::default(),
            spectral: SpectralSection::default(),
            boundary: BoundarySection::default(),
            caps: CapsSection::default(),
            acceptance: AcceptanceSection::default(),
        }
    }
}

impl Default for GroupSection {
    fn default() -> Self {
        Self { k: 2 }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            specs: vec![
                "trivial".into(),
                "dirac".into(),
                "cyclic:a".into(),
                "kernel:b:3".into(),
                "haagerup-s:0.75".into(),
                "hc:0.6".into(),
            ],
            psd_radius: 4,
            psd_tolerance: 1e-8,
        }
    }
}

impl Default for SeriesSection {
    fn default() -> Self {
        Self {
            sigmas: vec![2.0, 1.5, 1.2],
            m_max: 200,
            window: (4, 12),
        }
    }
}

impl Default for ThetaSection {
    fn default() -> Self {
        Self {
            stages: 8,
            eps_scale: 2.0,
            audit_eps: 0.05,
            audit_span: 400,
            max_width: 100_000,
        }
    }
}

impl Default for GnsSection {
    fn default() -> Self {
        Self {
            s: 0.75,
            depth: 4,
            schedule_steps: 5,
            tail_frac: 1e-6,
            max_truncation: 1 << 15,
            conformal_limit: 0.25,
            mu_t_offsets: vec![0.5, 0.25, 0.125, 0.0625],
        }
    }
}

impl Default for KnappSteinSection {
    fn default() -> Self {
        Self {
            s_values: vec![0.6, 0.75, 0.9, 1.0],
            depth: 6,
        }
    }
}

impl Default for HarishChandraSection {
    fn default() -> Self {
        Self {
            s: 0.75,
            max_len: 12,
            fusion: (0.8, 0.9, 0.7),
            bracket_limit: 10.0,
        }
    }
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            n_max: 2048,
            entropy_n_max: 256,
            entropy_range: (1, 12),
            fuzz_count: 100,
            fuzz_radius: 3,
            fuzz_n_max: 1,
            fuzz_oracles: vec![
                "dirac".into(),
                "haagerup:0.6".into(),
                "haagerup:0.9".into(),
                "cyclic:a".into(),
            ],
            random_probes: 2,
            rrd_range: (2, 10),
            rrd_n_max: 64,
            rrd_r2: 0.98,
        }
    }
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self {
            s: 0.75,
            l_range: (4, 10),
            depth: 4,
        }
    }
}

impl Default for CapsSection {
    fn default() -> Self {
        let c = ResourceCaps::default();
        Self {
            max_sphere_words: c.max_sphere_words.min(u64::MAX as u128) as u64,
            max_support: c.max_support,
            max_dense_dim: c.max_dense_dim,
        }
    }
}

impl Default for AcceptanceSection {
    fn default() -> Self {
        Self {
            reproducibility_rerun: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<GroupParams> {
        GroupParams::new(self.group.k)
    }

    pub fn resource_caps(&self) -> ResourceCaps {
        ResourceCaps {
            max_sphere_words: self.caps.max_sphere_words as u128,
            max_support: self.caps.max_support,
            max_dense_dim: self.caps.max_dense_dim,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default_and_round_trips() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c.group.k, 2);
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again.to_toml_string(), c.to_toml_string());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("[gns]\ndepht = 3\n"),
            Err(Error::Config(_))
        ));
        let c = ExperimentConfig::from_toml_str("seed = 9\n[gns]\ndepth = 3\n").unwrap();
        assert_eq!((c.seed, c.gns.depth, c.gns.s), (9, 3, 0.75));
    }
}
