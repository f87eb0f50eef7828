//! Flat `key = value` configuration files.

use std::path::Path;

use activeirs::{Error, SystemConfig};

/// Listing appended to `--help`.
pub const KEYS_HELP: &str = "\
Configuration keys (config file lines and --override take `key=value`):
  K         BS antennas                    N         IRS elements
  Q         pilot length (default N)       P_t       total power budget [W]
  beta      device share of P_t            sigma_i2  IRS noise power [W]
  sigma_b2  BS noise power [W]             sigma_x2  pilot symbol power
  d_ub      device-BS distance [m]         d_ui      device-IRS distance [m]
  d_ib      IRS-BS distance [m]            alpha_ub  device-BS path-loss exponent
  alpha_ui  device-IRS exponent            alpha_ib  IRS-BS exponent
  PL0_dB    path loss at 1 m [dB]          seed      base RNG seed

Relative output paths resolve against $ACTIVEIRS_OUTPUT_DIR when it is set.
Exit codes: 0 success, 2 configuration error, 1 runtime error.";

/// Apply `key=value` lines on top of `cfg`. `#` starts a comment.
pub fn apply_text(cfg: &mut SystemConfig, text: &str, origin: &str) -> Result<(), Error> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{origin}:{}: expected key=value, got {line:?}",
                i + 1
            ))
        })?;
        cfg.set(key.trim(), value)
            .map_err(|e| Error::Config(format!("{origin}:{}: {e}", i + 1)))?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<SystemConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let mut cfg = SystemConfig::default();
    apply_text(&mut cfg, &text, &path.display().to_string())?;
    Ok(cfg)
}

pub fn apply_override(cfg: &mut SystemConfig, kv: &str) -> Result<(), Error> {
    let (key, value) = kv
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
    cfg.set(key.trim(), value)
}
