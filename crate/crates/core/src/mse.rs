//! Closed-form LS estimation errors and the rational objectives built on
//! them.
//!
//! Both errors use the `1/(4N)` normalizer:
//!
//! ```text
//! ε₁ = E‖ĥ − h‖² / 4N       = (ρ²σ_i²‖FV‖² + Kσ_b²) / (16 N Q β P_t)
//! ε₂ = E‖vec(Ĥ − H)‖² / 4N  = (ρ²σ_i²‖B‖² + σ_b²‖A_s⁻¹‖²) / (16 N ρ² β P_t)
//! ```
//!
//! with `A_s = (VX)ᵀ ⊗ I_K` and `B = A_s⁻¹ (I ⊗ FV)`. The BS noise in `ĥ`
//! is summed over K antennas, hence the `Kσ_b²` term.
//!
//! Substituting `ρ(β)` turns `ε₁ + ε₂` into a ratio of a quadratic and a
//! cubic in `β` ([`BetaObjective`]); fixing the device power instead gives a
//! ratio in the IRS power ([`PirsObjective`]).

use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::fro2;
use crate::pilot::PilotSchedule;
use crate::system::{compute_rho, ChannelRealization, IrsGain};

/// Realization-dependent norms that the closed forms consume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelNorms {
    /// `‖F V‖_F²`
    pub fv_norm2: f64,
    /// `‖B‖_F²`
    pub b_norm2: f64,
    /// `‖A_s⁻¹‖_F²`
    pub as_inv_norm2: f64,
    /// `‖G θ̃‖₂²`
    pub g_theta_norm2: f64,
    /// `xᵀ x*`
    pub pilot_energy: f64,
}

impl ChannelNorms {
    /// Factored evaluation: with `A_s⁻¹ = (VX)⁻ᵀ ⊗ I_K`,
    /// `B = (VX)⁻ᵀ ⊗ FV` so `‖B‖² = ‖(VX)⁻¹‖² ‖FV‖²` and
    /// `‖A_s⁻¹‖² = K ‖(VX)⁻¹‖²`.
    pub fn compute(
        chan: &ChannelRealization,
        sched: &PilotSchedule,
        theta_tilde: &crate::linalg::CVec,
    ) -> Result<Self> {
        if chan.n() != sched.n() {
            return Err(Error::Shape(format!(
                "channel has N = {}, schedule N = {}",
                chan.n(),
                sched.n()
            )));
        }
        let fv_norm2 = fro2(&(&chan.f * &sched.v));
        let inv_norm2 = fro2(sched.vx_right_inverse()?);
        Ok(ChannelNorms {
            fv_norm2,
            b_norm2: inv_norm2 * fv_norm2,
            as_inv_norm2: chan.k() as f64 * inv_norm2,
            g_theta_norm2: chan.g_theta_norm2(theta_tilde),
            pilot_energy: sched.pilot_energy(),
        })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "beta",
            value: beta,
            expected: "0 < beta < 1",
        })
    }
}

fn direct_error(cfg: &SystemConfig, rho: f64, fv_norm2: f64, pilot_energy: f64) -> Result<f64> {
    check_beta(cfg.beta)?;
    let n = cfg.n as f64;
    let num = rho * rho * cfg.sigma_i2 * fv_norm2 + cfg.k as f64 * cfg.sigma_b2;
    Ok(num / (16.0 * n * pilot_energy * cfg.beta * cfg.p_t))
}

/// `ε₁` for unit-modulus pilots (`xᵀx* = Q`).
pub fn mse_direct(cfg: &SystemConfig, rho: f64, fv_norm2: f64) -> Result<f64> {
    direct_error(cfg, rho, fv_norm2, cfg.pilot_len() as f64)
}

/// `ε₂`.
pub fn mse_cascaded(cfg: &SystemConfig, rho: f64, b_norm2: f64, as_inv_norm2: f64) -> Result<f64> {
    check_beta(cfg.beta)?;
    if !(rho > 0.0) {
        return Err(Error::Domain {
            name: "rho",
            value: rho,
            expected: "rho > 0",
        });
    }
    let rho2 = rho * rho;
    let num = rho2 * cfg.sigma_i2 * b_norm2 + cfg.sigma_b2 * as_inv_norm2;
    Ok(num / (16.0 * cfg.n as f64 * rho2 * cfg.beta * cfg.p_t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MseBreakdown {
    pub eps1: f64,
    pub eps2: f64,
    pub eps_sum: f64,
    pub beta: f64,
    pub rho: f64,
    pub norms: ChannelNorms,
}

/// Closed-form errors of one realization at `cfg.beta`.
pub fn sum_mse(
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    irs: &IrsGain,
    sched: &PilotSchedule,
) -> Result<MseBreakdown> {
    let norms = ChannelNorms::compute(chan, sched, &irs.theta_tilde)?;
    breakdown(cfg, irs.rho, norms)
}

/// Closed-form errors from precomputed norms.
pub fn breakdown(cfg: &SystemConfig, rho: f64, norms: ChannelNorms) -> Result<MseBreakdown> {
    let eps1 = direct_error(cfg, rho, norms.fv_norm2, norms.pilot_energy)?;
    let eps2 = mse_cascaded(cfg, rho, norms.b_norm2, norms.as_inv_norm2)?;
    Ok(MseBreakdown {
        eps1,
        eps2,
        eps_sum: eps1 + eps2,
        beta: cfg.beta,
        rho,
        norms,
    })
}

/// Sum-MSE written over the common denominator `16 N² ρ² β P_t`.
/// Requires `Q = N` and unit-modulus pilots.
pub fn sum_mse_single_fraction(cfg: &SystemConfig, rho: f64, norms: &ChannelNorms) -> Result<f64> {
    check_beta(cfg.beta)?;
    require_square(cfg)?;
    let n = cfg.n as f64;
    let (rho2, si, sb) = (rho * rho, cfg.sigma_i2, cfg.sigma_b2);
    let num = rho2 * rho2 * si * norms.fv_norm2
        + rho2 * cfg.k as f64 * sb
        + n * rho2 * si * norms.b_norm2
        + n * sb * norms.as_inv_norm2;
    Ok(num / (16.0 * n * n * rho2 * cfg.beta * cfg.p_t))
}

fn require_square(cfg: &SystemConfig) -> Result<()> {
    if cfg.pilot_len() != cfg.n {
        return Err(Error::Config(format!(
            "power-allocation objectives assume Q = N (got Q = {}, N = {})",
            cfg.pilot_len(),
            cfg.n
        )));
    }
    Ok(())
}

/// `ε(β) = (a₁β² + a₂β + a₃) / (a₄β³ + a₅β² + a₆β)` and its derivative
/// numerator `c₁β⁴ + … + c₅`.
///
/// Arrays are zero-indexed: `a[0]` is `a₁`, `d[0]` is `d₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BetaObjective {
    pub b: [f64; 5],
    pub a: [f64; 6],
    pub c: [f64; 5],
    /// Monic quartic coefficients `d₀..d₃`; `None` when `c₁ = 0`.
    pub d: Option<[f64; 4]>,
    pub p_t: f64,
    pub sigma_i2: f64,
    /// BS-noise contribution to the direct error, `K σ_b²`.
    pub direct_bs_noise: f64,
}

impl BetaObjective {
    pub fn build(cfg: &SystemConfig, norms: &ChannelNorms) -> Result<Self> {
        require_square(cfg)?;
        let n = cfg.n as f64;
        let (p, si, sb) = (cfg.p_t, cfg.sigma_i2, cfg.sigma_b2);
        let b = [
            p * norms.g_theta_norm2,
            si * norms.fv_norm2,
            n * si * norms.b_norm2,
            n * sb * norms.as_inv_norm2,
            16.0 * n * n * p,
        ];
        let s = cfg.k as f64 * sb;
        let [b1, b2, b3, b4, b5] = b;
        let a = [
            b2 * p * p - b1 * (s + b3) * p + b1 * b1 * b4,
            -2.0 * b2 * p * p + (s + b3) * (b1 - si) * p + 2.0 * b1 * b4 * si,
            b2 * p * p + (s + b3) * si * p + b4 * si * si,
            -b1 * b5 * p,
            (b1 - si) * b5 * p,
            b5 * si * p,
        ];
        Ok(Self::from_a(a, b, p, si, s))
    }

    /// Objective from explicit `a` coefficients (remaining fields derived).
    pub fn from_a(a: [f64; 6], b: [f64; 5], p_t: f64, sigma_i2: f64, direct_bs_noise: f64) -> Self {
        let [a1, a2, a3, a4, a5, a6] = a;
        let c = [
            -a1 * a4,
            -2.0 * a2 * a4,
            a1 * a6 - a2 * a5 - 3.0 * a3 * a4,
            -2.0 * a3 * a5,
            -a3 * a6,
        ];
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let d = (c[0].abs() > 1e-14 * scale && c[0] != 0.0).then(|| {
            let c1 = c[0];
            [c[4] / c1, c[3] / c1, c[2] / c1, c[1] / c1]
        });
        BetaObjective {
            b,
            a,
            c,
            d,
            p_t,
            sigma_i2,
            direct_bs_noise,
        }
    }

    pub fn numerator(&self, beta: f64) -> f64 {
        let [a1, a2, a3, ..] = self.a;
        (a1 * beta + a2) * beta + a3
    }

    pub fn denominator(&self, beta: f64) -> f64 {
        let [.., a4, a5, a6] = self.a;
        ((a4 * beta + a5) * beta + a6) * beta
    }

    pub fn eval(&self, beta: f64) -> Result<f64> {
        check_beta(beta)?;
        let den = self.denominator(beta);
        if !(den > 0.0) {
            return Err(Error::Domain {
                name: "objective denominator",
                value: den,
                expected: "positive on (0, 1)",
            });
        }
        Ok(self.numerator(beta) / den)
    }

    /// Numerator of `ε'(β)`; its denominator is `(a₄β³ + a₅β² + a₆β)²`.
    pub fn derivative_numerator(&self, beta: f64) -> f64 {
        self.c.iter().fold(0.0, |acc, c| acc * beta + c)
    }
}

/// `ε(P_IRS) = (e₁P² + e₂P + e₃) / (e₄P)` at fixed device power.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PirsObjective {
    /// `e₁..e₄`, zero-indexed.
    pub e: [f64; 4],
    pub p_iot: f64,
}

impl PirsObjective {
    pub fn build(cfg: &SystemConfig, norms: &ChannelNorms, p_iot: f64) -> Result<Self> {
        require_square(cfg)?;
        if !(p_iot > 0.0 && p_iot.is_finite()) {
            return Err(Error::Domain {
                name: "P_IoT",
                value: p_iot,
                expected: "P_IoT > 0",
            });
        }
        let n = cfg.n as f64;
        let (si, sb) = (cfg.sigma_i2, cfg.sigma_b2);
        let incident = p_iot * norms.g_theta_norm2 + si;
        let e = [
            si * norms.fv_norm2,
            (cfg.k as f64 * sb + n * si * norms.b_norm2) * incident,
            incident * incident * n * sb * norms.as_inv_norm2,
            16.0 * n * n * p_iot * incident,
        ];
        Ok(PirsObjective { e, p_iot })
    }

    pub fn eval(&self, p_irs: f64) -> Result<f64> {
        if !(p_irs > 0.0) {
            return Err(Error::Domain {
                name: "P_IRS",
                value: p_irs,
                expected: "P_IRS > 0",
            });
        }
        let [e1, e2, e3, e4] = self.e;
        Ok(((e1 * p_irs + e2) * p_irs + e3) / (e4 * p_irs))
    }

    /// `ε''(P) = 2 e₃ / (e₄ P³)`.
    pub fn second_derivative(&self, p_irs: f64) -> f64 {
        2.0 * self.e[2] / (self.e[3] * p_irs.powi(3))
    }
}

/// Sum-MSE of a realization with `ρ(β)` substituted, evaluated directly.
pub fn sum_mse_at_beta(cfg: &SystemConfig, norms: &ChannelNorms, beta: f64) -> Result<f64> {
    let cfg = cfg.with_beta(beta);
    let rho = compute_rho(&cfg, norms.g_theta_norm2)?;
    Ok(breakdown(&cfg, rho, *norms)?.eps_sum)
}
