//! Scenario constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every constant of one uplink scenario.
///
/// Powers are linear watts, distances meters. Path-loss gains follow
/// `PL(d) = PL0 - 10 α log10(d / 1 m)` (dB). The serialized key names are
/// the ones accepted by the configuration file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antenna count.
    #[serde(rename = "K")]
    pub k: usize,
    /// IRS element count.
    #[serde(rename = "N")]
    pub n: usize,
    /// Pilot length; `None` means `Q = N`.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    /// Total power budget shared by the device and the IRS.
    #[serde(rename = "P_t")]
    pub p_t: f64,
    /// Power-allocation factor: fraction of `P_t` spent by the device.
    pub beta: f64,
    pub sigma_i2: f64,
    pub sigma_b2: f64,
    pub sigma_x2: f64,
    pub d_ub: f64,
    pub d_ui: f64,
    pub d_ib: f64,
    pub alpha_ub: f64,
    pub alpha_ui: f64,
    pub alpha_ib: f64,
    #[serde(rename = "PL0_dB")]
    pub pl0_db: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            k: 16,
            n: 64,
            q: None,
            p_t: 1.0,
            beta: 0.5,
            sigma_i2: 1e-12,
            sigma_b2: 1e-12,
            sigma_x2: 1.0,
            d_ub: 100.0,
            d_ui: 70.0,
            d_ib: 60.0,
            alpha_ub: 3.5,
            alpha_ui: 2.4,
            alpha_ib: 2.2,
            pl0_db: -30.0,
            seed: 0,
        }
    }
}

/// Keys accepted in configuration files, in declaration order.
pub const CONFIG_KEYS: &[&str] = &[
    "K", "N", "Q", "P_t", "beta", "sigma_i2", "sigma_b2", "sigma_x2", "d_ub", "d_ui", "d_ib",
    "alpha_ub", "alpha_ui", "alpha_ib", "PL0_dB", "seed",
];

impl SystemConfig {
    /// Pilot length `Q`.
    pub fn pilot_len(&self) -> usize {
        self.q.unwrap_or(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 {
            return Err(Error::Config("K and N must be positive".into()));
        }
        if self.pilot_len() < self.n {
            return Err(Error::Config(format!(
                "Q = {} < N = {}: the phase schedule has no right pseudo-inverse",
                self.pilot_len(),
                self.n
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!(
                "beta = {} must lie in (0, 1)",
                self.beta
            )));
        }
        let positive = [
            ("P_t", self.p_t),
            ("sigma_i2", self.sigma_i2),
            ("sigma_b2", self.sigma_b2),
            ("sigma_x2", self.sigma_x2),
            ("d_ub", self.d_ub),
            ("d_ui", self.d_ui),
            ("d_ib", self.d_ib),
            ("alpha_ub", self.alpha_ub),
            ("alpha_ui", self.alpha_ui),
            ("alpha_ib", self.alpha_ib),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "{name} = {v} must be finite and positive"
                )));
            }
        }
        if !self.pl0_db.is_finite() {
            return Err(Error::Config("PL0_dB must be finite".into()));
        }
        Ok(())
    }

    /// Set one field from its configuration-file key and textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        match key {
            "K" => self.k = parse(key, value)?,
            "N" => self.n = parse(key, value)?,
            "Q" => self.q = Some(parse(key, value)?),
            "P_t" => self.p_t = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "sigma_i2" => self.sigma_i2 = parse(key, value)?,
            "sigma_b2" => self.sigma_b2 = parse(key, value)?,
            "sigma_x2" => self.sigma_x2 = parse(key, value)?,
            "d_ub" => self.d_ub = parse(key, value)?,
            "d_ui" => self.d_ui = parse(key, value)?,
            "d_ib" => self.d_ib = parse(key, value)?,
            "alpha_ub" => self.alpha_ub = parse(key, value)?,
            "alpha_ui" => self.alpha_ui = parse(key, value)?,
            "alpha_ib" => self.alpha_ib = parse(key, value)?,
            "PL0_dB" => self.pl0_db = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?}; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// The same scenario with a different power-allocation factor.
    pub fn with_beta(&self, beta: f64) -> Self {
        SystemConfig {
            beta,
            ..self.clone()
        }
    }
}
