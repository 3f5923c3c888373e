//! Shared parameter types, dB conversions and validation.
//!
//! Everything downstream works in linear units (mW, linear SINR). Decibel
//! values only appear when a configuration is read or written.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// A power ratio or absolute power in dB / dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Decibel(pub f64);

impl Decibel {
    pub fn to_linear(self) -> f64 {
        db_to_linear(self)
    }

    pub fn from_linear(x: f64) -> Self {
        linear_to_db(x)
    }
}

/// `10^(x/10)`.
pub fn db_to_linear(x: Decibel) -> f64 {
    10f64.powf(x.0 / 10.0)
}

/// `10·log10(x)`; `x` must be positive for a finite result.
pub fn linear_to_db(x: f64) -> Decibel {
    Decibel(10.0 * x.log10())
}

/// How the contention area Θ is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaModel {
    /// Quadrature of `2π∫exp(-Γ r^α) r dr`.
    #[default]
    Numeric,
    /// The erf closed form, with the mean path loss as erf argument.
    ClosedForm,
}

/// How the successful-transmission probability is evaluated inside the
/// throughput and optimizer code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StpModel {
    /// Laplace functional of the PPP interference with Gamma SI.
    #[default]
    Laplace,
    /// The bidirectional closed form, clamped to [0, 1].
    ClosedForm,
}

impl FromStr for StpModel {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "laplace" => Ok(Self::Laplace),
            "closed_form" => Ok(Self::ClosedForm),
            _ => Err(ConfigError::BadValue {
                key: "stp_model".into(),
                value: s.into(),
            }),
        }
    }
}

impl fmt::Display for StpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Laplace => "laplace",
            Self::ClosedForm => "closed_form",
        })
    }
}

impl fmt::Display for ThetaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Numeric => "numeric",
            Self::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: density must be positive (got {value})")]
    NonPositiveDensity { field: &'static str, value: f64 },
    #[error("alpha must exceed 2 (got {0})")]
    AlphaTooSmall(f64),
    #[error("{field}: must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field}: at least one antenna is required")]
    NoAntennas { field: &'static str },
    #[error("k_factor must be non-negative (got {0})")]
    NegativeKFactor(f64),
    #[error("window area must be positive (got {0} x {1})")]
    EmptyWindow(f64, f64),
    #[error("{field}: value is not finite")]
    NotFinite { field: &'static str },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
}

/// All scalar model parameters, in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// STAs per unit area.
    pub lambda_s: f64,
    /// APs per unit area.
    pub lambda_a: f64,
    pub alpha: f64,
    /// Transmit power, mW.
    pub p_tx: f64,
    /// Noise power, mW.
    pub noise: f64,
    /// Linear SINR threshold.
    pub gamma: f64,
    /// PCS threshold, mW.
    pub pcs: f64,
    pub m_tx: u32,
    pub n_rx: u32,
    pub k_factor: f64,
    /// Linear SI attenuation.
    pub si_atten: f64,
    pub window: (f64, f64),
    pub seed: u64,
    pub theta_model: ThetaModel,
    pub stp_model: StpModel,
}

impl Default for NetworkConfig {
    /// The evaluation setup: λ_a = 0.3, α = 3.4, σ² = -100 dBm,
    /// Γ = -70 dBm, P_t = 20 dBm, M = 4, N = 2, K = 1, Ω = -80 dB.
    fn default() -> Self {
        Self {
            lambda_s: 0.5,
            lambda_a: 0.3,
            alpha: 3.4,
            p_tx: 100.0,
            noise: 1e-10,
            gamma: 1.0,
            pcs: 1e-7,
            m_tx: 4,
            n_rx: 2,
            k_factor: 1.0,
            si_atten: 1e-8,
            window: (10.0, 10.0),
            seed: 1,
            theta_model: ThetaModel::Numeric,
            stp_model: StpModel::Laplace,
        }
    }
}

/// Keys accepted by [`NetworkConfig::set`], in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "lambda_s",
    "lambda_a",
    "alpha",
    "p_tx",
    "noise",
    "gamma",
    "pcs",
    "m_tx",
    "n_rx",
    "antennas",
    "k_factor",
    "si_atten",
    "window",
    "seed",
    "stp_model",
];

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.trim().parse::<f64>().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_u32(key: &str, value: &str) -> Result<u32, ConfigError> {
    value.trim().parse::<u32>().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

impl NetworkConfig {
    /// Checks every invariant and returns the config unchanged when it holds.
    pub fn validate(&self) -> Result<Self, ConfigError> {
        let finite = [
            ("lambda_s", self.lambda_s),
            ("lambda_a", self.lambda_a),
            ("alpha", self.alpha),
            ("p_tx", self.p_tx),
            ("noise", self.noise),
            ("gamma", self.gamma),
            ("pcs", self.pcs),
            ("k_factor", self.k_factor),
            ("si_atten", self.si_atten),
            ("window", self.window.0 * self.window.1),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::NotFinite { field });
            }
        }
        for (field, value) in [("lambda_s", self.lambda_s), ("lambda_a", self.lambda_a)] {
            if value <= 0.0 {
                return Err(ConfigError::NonPositiveDensity { field, value });
            }
        }
        if self.alpha <= 2.0 {
            return Err(ConfigError::AlphaTooSmall(self.alpha));
        }
        for (field, value) in [
            ("p_tx", self.p_tx),
            ("noise", self.noise),
            ("gamma", self.gamma),
            ("pcs", self.pcs),
            ("si_atten", self.si_atten),
        ] {
            if value <= 0.0 {
                return Err(ConfigError::NonPositive { field, value });
            }
        }
        if self.m_tx == 0 {
            return Err(ConfigError::NoAntennas { field: "m_tx" });
        }
        if self.n_rx == 0 {
            return Err(ConfigError::NoAntennas { field: "n_rx" });
        }
        if self.k_factor < 0.0 {
            return Err(ConfigError::NegativeKFactor(self.k_factor));
        }
        let (w, h) = self.window;
        if !(w > 0.0 && h > 0.0) {
            return Err(ConfigError::EmptyWindow(w, h));
        }
        Ok(self.clone())
    }

    /// Sets one field from its config-file representation. Powers are in
    /// dBm, `gamma` and `si_atten` in dB, `window` as `WxH`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let dbm = |v: &str| parse_f64(key, v).map(|x| db_to_linear(Decibel(x)));
        match key {
            "lambda_s" => self.lambda_s = parse_f64(key, value)?,
            "lambda_a" => self.lambda_a = parse_f64(key, value)?,
            "alpha" => self.alpha = parse_f64(key, value)?,
            "p_tx" => self.p_tx = dbm(value)?,
            "noise" => self.noise = dbm(value)?,
            "gamma" => self.gamma = dbm(value)?,
            "pcs" => self.pcs = dbm(value)?,
            "si_atten" => self.si_atten = dbm(value)?,
            "k_factor" => self.k_factor = parse_f64(key, value)?,
            "m_tx" => self.m_tx = parse_u32(key, value)?,
            "n_rx" => self.n_rx = parse_u32(key, value)?,
            "antennas" => {
                let n = parse_u32(key, value)?;
                self.m_tx = n;
                self.n_rx = n;
            }
            "window" => {
                let (w, h) = value.split_once(['x', ',']).ok_or_else(|| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?;
                self.window = (parse_f64(key, w)?, parse_f64(key, h)?);
            }
            "seed" => {
                self.seed = value.trim().parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "stp_model" => self.stp_model = value.trim().parse()?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file on top of the defaults. `#` starts
    /// a comment. The result is not validated.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Canonical text of every physical parameter, in linear units with
    /// shortest round-trip float formatting. The Θ model is left out so the
    /// hash is unchanged by the closed-form switch.
    pub fn canonical_string(&self) -> String {
        format!(
            "lambda_s={:?}\nlambda_a={:?}\nalpha={:?}\np_tx={:?}\nnoise={:?}\ngamma={:?}\n\
             pcs={:?}\nm_tx={}\nn_rx={}\nk_factor={:?}\nsi_atten={:?}\nwindow={:?}x{:?}\n\
             seed={}\nstp_model={}\n",
            self.lambda_s,
            self.lambda_a,
            self.alpha,
            self.p_tx,
            self.noise,
            self.gamma,
            self.pcs,
            self.m_tx,
            self.n_rx,
            self.k_factor,
            self.si_atten,
            self.window.0,
            self.window.1,
            self.seed,
            self.stp_model,
        )
    }

    /// Inverse of [`Self::canonical_string`]: linear units throughout. The
    /// Θ model is not part of the text and is passed separately.
    pub fn from_canonical_string(text: &str, theta_model: ThetaModel) -> Result<Self, ConfigError> {
        let mut cfg = Self {
            theta_model,
            ..Self::default()
        };
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let linear = |field: &mut f64| parse_f64(k, v).map(|x| *field = x);
            match k {
                "p_tx" => linear(&mut cfg.p_tx)?,
                "noise" => linear(&mut cfg.noise)?,
                "gamma" => linear(&mut cfg.gamma)?,
                "pcs" => linear(&mut cfg.pcs)?,
                "si_atten" => linear(&mut cfg.si_atten)?,
                _ => cfg.set(k, v)?,
            }
        }
        cfg.validate()
    }

    /// Hex SHA-256 of [`Self::canonical_string`].
    pub fn content_hash(&self) -> String {
        hex_digest(self.canonical_string().as_bytes())
    }

    pub fn window_area(&self) -> f64 {
        self.window.0 * self.window.1
    }

    /// λ_FD = λ_s + λ_a.
    pub fn lambda_fd(&self) -> f64 {
        self.lambda_s + self.lambda_a
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn db_reference_points() {
        assert_eq!(db_to_linear(Decibel(0.0)), 1.0);
        assert!((db_to_linear(Decibel(-100.0)) - 1e-10).abs() < 1e-24);
        assert!((db_to_linear(Decibel(20.0)) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn defaults_validate() {
        NetworkConfig::default().validate().unwrap();
    }

    #[test]
    fn alpha_error_names_field() {
        let cfg = NetworkConfig {
            alpha: 1.5,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert_eq!(err, ConfigError::AlphaTooSmall(1.5));
        assert!(err.to_string().contains("alpha must exceed 2"));
    }

    #[test]
    fn zero_density_rejected() {
        let cfg = NetworkConfig {
            lambda_s: 0.0,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("density must be positive"));
    }

    #[test]
    fn each_invariant_has_its_own_error() {
        let base = NetworkConfig::default();
        type Case = (NetworkConfig, fn(&ConfigError) -> bool);
        let cases: Vec<Case> = vec![
            (
                NetworkConfig {
                    m_tx: 0,
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::NoAntennas { field: "m_tx" }),
            ),
            (
                NetworkConfig {
                    n_rx: 0,
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::NoAntennas { field: "n_rx" }),
            ),
            (
                NetworkConfig {
                    window: (0.0, 3.0),
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::EmptyWindow(..)),
            ),
            (
                NetworkConfig {
                    k_factor: -1.0,
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::NegativeKFactor(_)),
            ),
            (
                NetworkConfig {
                    pcs: 0.0,
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::NonPositive { field: "pcs", .. }),
            ),
            (
                NetworkConfig {
                    lambda_a: f64::NAN,
                    ..base.clone()
                },
                |e| matches!(e, ConfigError::NotFinite { field: "lambda_a" }),
            ),
        ];
        for (cfg, check) in cases {
            let e = cfg.validate().unwrap_err();
            assert!(check(&e), "unexpected {e:?}");
        }
    }

    #[test]
    fn config_text_uses_db_units() {
        let cfg = NetworkConfig::from_config_str(
            "# setup\nlambda_s = 0.9\npcs = -30\ngamma = 10\np_tx = 20\nwindow = 8x6\nantennas = 8\n",
        )
        .unwrap();
        assert_eq!(cfg.lambda_s, 0.9);
        assert!((cfg.pcs - 1e-3).abs() < 1e-15);
        assert!((cfg.gamma - 10.0).abs() < 1e-12);
        assert!((cfg.p_tx - 100.0).abs() < 1e-12);
        assert_eq!(cfg.window, (8.0, 6.0));
        assert_eq!((cfg.m_tx, cfg.n_rx), (8, 8));
    }

    #[test]
    fn config_text_errors() {
        assert_eq!(
            NetworkConfig::from_config_str("beta = 3").unwrap_err(),
            ConfigError::UnknownKey("beta".into())
        );
        assert_eq!(
            NetworkConfig::from_config_str("alpha 3").unwrap_err(),
            ConfigError::Syntax { line: 1 }
        );
        assert!(matches!(
            NetworkConfig::from_config_str("alpha = x").unwrap_err(),
            ConfigError::BadValue { .. }
        ));
    }

    #[test]
    fn hash_ignores_theta_model_only() {
        let a = NetworkConfig::default();
        let b = NetworkConfig {
            theta_model: ThetaModel::ClosedForm,
            ..a.clone()
        };
        let c = NetworkConfig { seed: 2, ..a.clone() };
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }

    proptest! {
        #[test]
        fn canonical_text_round_trips(ls in 0.01f64..5.0, pcs in 1e-12f64..1.0, g in 1e-3f64..1e3, seed in any::<u64>()) {
            let cfg = NetworkConfig { lambda_s: ls, pcs, gamma: g, seed, m_tx: 3, ..Default::default() };
            let back = NetworkConfig::from_canonical_string(&cfg.canonical_string(), cfg.theta_model).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.content_hash(), cfg.content_hash());
        }

        #[test]
        fn db_round_trip(x in -200.0f64..60.0) {
            let back = linear_to_db(db_to_linear(Decibel(x))).0;
            let tol = 1e-12 * x.abs().max(1.0);
            prop_assert!((back - x).abs() <= tol, "{x} -> {back}");
        }

        #[test]
        fn validate_is_idempotent(
            ls in -1.0f64..2.0, alpha in 1.0f64..5.0, m in 0u32..4, k in -1.0f64..3.0
        ) {
            let cfg = NetworkConfig { lambda_s: ls, alpha, m_tx: m, k_factor: k, ..Default::default() };
            match cfg.validate() {
                Ok(v) => prop_assert_eq!(v.validate(), Ok(v.clone())),
                Err(e) => prop_assert_eq!(cfg.validate().unwrap_err(), e),
            }
        }
    }
}
