//! Channel synthesis and the active-IRS amplification factor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{norm2, CMat, CVec, C64};

/// Linear power gain of the log-distance law with `d0 = 1 m`.
pub fn path_loss_gain(d: f64, alpha: f64, pl0_db: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            name: "distance",
            value: d,
            expected: "d > 0",
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            expected: "alpha > 0",
        });
    }
    let pl_db = pl0_db - 10.0 * alpha * d.log10();
    Ok(10f64.powf(pl_db / 10.0))
}

/// Per-entry variances of the three links.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinkGains {
    /// device -> BS
    pub ub: f64,
    /// device -> IRS
    pub ui: f64,
    /// IRS -> BS
    pub ib: f64,
}

impl LinkGains {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Ok(LinkGains {
            ub: path_loss_gain(cfg.d_ub, cfg.alpha_ub, cfg.pl0_db)?,
            ui: path_loss_gain(cfg.d_ui, cfg.alpha_ui, cfg.pl0_db)?,
            ib: path_loss_gain(cfg.d_ib, cfg.alpha_ib, cfg.pl0_db)?,
        })
    }

    /// Per-entry variance of the cascaded channel `F diag(g)`.
    pub fn cascaded(&self) -> f64 {
        self.ui * self.ib
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng, var))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVec {
    CVec::from_fn(len, |_, _| complex_gaussian(rng, var))
}

/// One draw of the three links plus the derived cascaded channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// device -> BS, length K
    pub h: CVec,
    /// IRS -> BS, K x N
    pub f: CMat,
    /// device -> IRS, length N
    pub g: CVec,
    /// `F diag(g)`, K x N
    pub h_biu: CMat,
}

impl ChannelRealization {
    /// Assemble a realization from explicit links.
    pub fn from_links(h: CVec, f: CMat, g: CVec) -> Result<Self> {
        if f.nrows() != h.len() || f.ncols() != g.len() {
            return Err(Error::Shape(format!(
                "h is {}, F is {}x{}, g is {}",
                h.len(),
                f.nrows(),
                f.ncols(),
                g.len()
            )));
        }
        let mut h_biu = f.clone();
        for (mut col, gn) in h_biu.column_iter_mut().zip(g.iter()) {
            col *= *gn;
        }
        Ok(ChannelRealization { h, f, g, h_biu })
    }

    pub fn k(&self) -> usize {
        self.h.len()
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    /// `diag(g)` as a dense matrix.
    pub fn g_diag(&self) -> CMat {
        CMat::from_diagonal(&self.g)
    }

    /// `‖G θ̃‖²` for a phase vector.
    pub fn g_theta_norm2(&self, theta_tilde: &CVec) -> f64 {
        self.g
            .iter()
            .zip(theta_tilde.iter())
            .map(|(g, t)| (g * t).norm_sqr())
            .sum()
    }
}

/// Draw i.i.d. Rayleigh links with path-loss variances.
///
/// Draw order is `g`, then `h`, then `F` column by column.
pub fn draw_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let gains = LinkGains::from_config(cfg)?;
    let g = gaussian_vector(rng, cfg.n, gains.ui);
    let h = gaussian_vector(rng, cfg.k, gains.ub);
    let f = gaussian_matrix(rng, cfg.k, cfg.n, gains.ib);
    ChannelRealization::from_links(h, f, g)
}

/// Amplification factor that makes the IRS spend exactly `(1-β) P_t`.
///
/// `g_theta_norm2` is `‖G θ̃‖²`.
pub fn compute_rho(cfg: &SystemConfig, g_theta_norm2: f64) -> Result<f64> {
    let beta = cfg.beta;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            expected: "0 < beta < 1",
        });
    }
    let reflected = (1.0 - beta) * cfg.p_t;
    let incident = beta * cfg.p_t * g_theta_norm2 + cfg.sigma_i2;
    Ok((reflected / incident).sqrt())
}

/// IRS reflection state: unit-modulus phases and common amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct IrsGain {
    pub rho: f64,
    pub theta_tilde: CVec,
}

impl IrsGain {
    pub fn new(cfg: &SystemConfig, chan: &ChannelRealization, theta_tilde: CVec) -> Result<Self> {
        if theta_tilde.len() != chan.n() {
            return Err(Error::Shape(format!(
                "phase vector has {} entries, IRS has {}",
                theta_tilde.len(),
                chan.n()
            )));
        }
        if theta_tilde.iter().any(|t| (t.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Domain {
                name: "theta_tilde",
                value: theta_tilde.iter().map(|t| t.norm()).fold(0.0, f64::max),
                expected: "unit-modulus entries",
            });
        }
        let rho = compute_rho(cfg, chan.g_theta_norm2(&theta_tilde))?;
        Ok(IrsGain { rho, theta_tilde })
    }

    /// `θ = ρ θ̃`.
    pub fn theta(&self) -> CVec {
        &self.theta_tilde * C64::from(self.rho)
    }

    /// Left side of the IRS power budget, `ρ²(β P_t ‖Gθ̃‖² + σ_i²)`.
    pub fn reflected_power(&self, cfg: &SystemConfig, chan: &ChannelRealization) -> f64 {
        self.rho
            * self.rho
            * (cfg.beta * cfg.p_t * chan.g_theta_norm2(&self.theta_tilde) + cfg.sigma_i2)
    }
}

/// `‖θ‖₂`, used by the `ρ = ‖θ‖/√N` identity checks.
pub fn theta_norm(irs: &IrsGain) -> f64 {
    norm2(&irs.theta()).sqrt()
}
