//! Least-squares and linear-MMSE estimators for the direct channel `h` and
//! the cascaded channel `H_biu`.
//!
//! The cascaded LS solve uses `vec(A C) = (Cᵀ ⊗ I) vec(A)` in reverse: the
//! Kronecker system `((VX)ᵀ ⊗ I_K) vec(H) = vec(Ỹ₂) / c` is the matrix
//! equation `H (VX) = Ỹ₂ / c`, so only the N x N (or N x Q) factor is ever
//! inverted.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{fro2, norm2, unvec, vec_of, CMat, CVec, C64};
use crate::pilot::PilotSchedule;
use crate::system::LinkGains;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ls,
    Mmse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DirectEstimate {
    pub h_hat: CVec,
    pub method: Method,
    /// `‖ĥ − h‖²` once compared against the truth.
    pub squared_error: Option<f64>,
}

impl DirectEstimate {
    pub fn with_truth(mut self, h: &CVec) -> Self {
        self.squared_error = Some(norm2(&(&self.h_hat - h)));
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadedEstimate {
    pub h_hat: CMat,
    /// Column-major `vec(Ĥ)`.
    pub h_hat_vec: CVec,
    pub method: Method,
    pub squared_error: Option<f64>,
}

impl CascadedEstimate {
    fn new(h_hat: CMat, method: Method) -> Self {
        let h_hat_vec = vec_of(&h_hat);
        CascadedEstimate {
            h_hat,
            h_hat_vec,
            method,
            squared_error: None,
        }
    }

    pub fn with_truth(mut self, h_biu: &CMat) -> Self {
        self.squared_error = Some(fro2(&(&self.h_hat - h_biu)));
        self
    }
}

fn signal_amplitude(beta: f64, p_t: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            expected: "0 < beta < 1",
        });
    }
    if !(p_t > 0.0) {
        return Err(Error::Domain {
            name: "P_t",
            value: p_t,
            expected: "P_t > 0",
        });
    }
    Ok((beta * p_t).sqrt())
}

/// `ĥ = Ỹ₁ x* / (4 √(βP_t) xᵀx*)`.
pub fn ls_direct(ytilde1: &CMat, x: &CVec, beta: f64, p_t: f64) -> Result<DirectEstimate> {
    if ytilde1.ncols() != x.len() {
        return Err(Error::Shape(format!(
            "Ỹ₁ has {} columns, pilot has {} symbols",
            ytilde1.ncols(),
            x.len()
        )));
    }
    let energy = norm2(x);
    if energy == 0.0 {
        return Err(Error::Domain {
            name: "pilot energy",
            value: 0.0,
            expected: "xᵀx* > 0",
        });
    }
    let amp = signal_amplitude(beta, p_t)?;
    let h_hat = ytilde1 * x.conjugate() / C64::from(4.0 * amp * energy);
    Ok(DirectEstimate {
        h_hat,
        method: Method::Ls,
        squared_error: None,
    })
}

/// `Ĥ_biu` solving `Ĥ (VX) = Ỹ₂ / (4ρ√(βP_t))`.
pub fn ls_cascaded(
    ytilde2: &CMat,
    sched: &PilotSchedule,
    rho: f64,
    beta: f64,
    p_t: f64,
) -> Result<CascadedEstimate> {
    if ytilde2.ncols() != sched.q() {
        return Err(Error::Shape(format!(
            "Ỹ₂ has {} columns, schedule has {} symbols",
            ytilde2.ncols(),
            sched.q()
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::Domain {
            name: "rho",
            value: rho,
            expected: "rho > 0",
        });
    }
    let amp = signal_amplitude(beta, p_t)?;
    let inv = sched.vx_right_inverse()?;
    let h_hat = ytilde2 * inv / C64::from(4.0 * rho * amp);
    Ok(CascadedEstimate::new(h_hat, Method::Ls))
}

/// Cross- and auto-correlation of (truth, LS estimate) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlations {
    /// `E{h ĥᴴ}`
    pub cross: CMat,
    /// `E{ĥ ĥᴴ}`
    pub auto: CMat,
}

impl Correlations {
    /// i.i.d. model: `R_hĥ = γ I`, `R_ĥĥ = (γ + v) I` where `v` is the
    /// per-entry LS error variance.
    pub fn analytic(dim: usize, gamma: f64, error_var: f64) -> Self {
        Correlations {
            cross: CMat::identity(dim, dim) * C64::from(gamma),
            auto: CMat::identity(dim, dim) * C64::from(gamma + error_var),
        }
    }

    /// Sample correlations over calibration pairs.
    pub fn empirical<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a CVec, &'a CVec)>,
    {
        let mut count = 0usize;
        let mut acc: Option<(CMat, CMat)> = None;
        for (truth, est) in pairs {
            if truth.len() != est.len() {
                return Err(Error::Shape("calibration pair lengths differ".into()));
            }
            let (cross, auto) = acc.get_or_insert_with(|| {
                let d = truth.len();
                (CMat::zeros(d, d), CMat::zeros(d, d))
            });
            if cross.nrows() != truth.len() {
                return Err(Error::Shape(
                    "calibration pairs have mixed dimensions".into(),
                ));
            }
            *cross += truth * est.adjoint();
            *auto += est * est.adjoint();
            count += 1;
        }
        let (cross, auto) = acc.ok_or_else(|| Error::Shape("no calibration pairs".into()))?;
        let scale = C64::from(1.0 / count as f64);
        Ok(Correlations {
            cross: cross * scale,
            auto: auto * scale,
        })
    }
}

/// Extra diagonal loading added to `R_ĥĥ` before inversion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseLoading {
    /// No extra loading: `R_ĥĥ` already contains the LS error variance.
    #[default]
    LsErrorOnly,
    /// Add `σ_b² / σ_x²`.
    PilotNoiseRatio,
}

impl NoiseLoading {
    pub fn value(self, cfg: &SystemConfig) -> f64 {
        match self {
            NoiseLoading::LsErrorOnly => 0.0,
            NoiseLoading::PilotNoiseRatio => cfg.sigma_b2 / cfg.sigma_x2,
        }
    }
}

/// `W = R_hĥ (R_ĥĥ + λ I)⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct MmseWeights {
    pub w: CMat,
    pub loading: f64,
}

impl MmseWeights {
    pub fn from_correlations(corr: &Correlations, loading: f64) -> Result<Self> {
        let d = corr.auto.nrows();
        if !corr.auto.is_square() || corr.cross.shape() != (d, d) {
            return Err(Error::Shape(
                "correlation matrices must be square and equal-sized".into(),
            ));
        }
        let loaded = &corr.auto + CMat::identity(d, d) * C64::from(loading);
        let chol = loaded.cholesky().ok_or(Error::NotPositiveDefinite)?;
        // Complex square roots never fail, so check the factor's diagonal.
        let l = chol.l_dirty();
        if (0..d).any(|i| !(l[(i, i)].re > 0.0) || l[(i, i)].im.abs() > 1e-12 * l[(i, i)].re) {
            return Err(Error::NotPositiveDefinite);
        }
        // W = R_hĥ M⁻¹ with M Hermitian, so Wᴴ = M⁻¹ R_hĥᴴ.
        let w = chol.solve(&corr.cross.adjoint()).adjoint();
        Ok(MmseWeights { w, loading })
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Direct-channel weights from the closed-form LS error `ε₁`.
///
/// `E‖ĥ − h‖² = 4N ε₁`, spread evenly over K entries.
pub fn mmse_weights_direct(
    cfg: &SystemConfig,
    eps1: f64,
    loading: NoiseLoading,
) -> Result<MmseWeights> {
    let gains = LinkGains::from_config(cfg)?;
    let err_var = 4.0 * cfg.n as f64 * eps1 / cfg.k as f64;
    let corr = Correlations::analytic(cfg.k, gains.ub, err_var);
    MmseWeights::from_correlations(&corr, loading.value(cfg))
}

/// Cascaded-channel weights from `ε₂`; the error spreads over K·N entries.
pub fn mmse_weights_cascaded(
    cfg: &SystemConfig,
    eps2: f64,
    loading: NoiseLoading,
) -> Result<MmseWeights> {
    let gains = LinkGains::from_config(cfg)?;
    let dim = cfg.k * cfg.n;
    let err_var = 4.0 * cfg.n as f64 * eps2 / dim as f64;
    let corr = Correlations::analytic(dim, gains.cascaded(), err_var);
    MmseWeights::from_correlations(&corr, loading.value(cfg))
}

pub fn mmse_apply_direct(weights: &MmseWeights, est: &DirectEstimate) -> Result<DirectEstimate> {
    if weights.dim() != est.h_hat.len() {
        return Err(Error::Shape(format!(
            "weights are {0}x{0}, estimate has {1} entries",
            weights.dim(),
            est.h_hat.len()
        )));
    }
    Ok(DirectEstimate {
        h_hat: &weights.w * &est.h_hat,
        method: Method::Mmse,
        squared_error: None,
    })
}

pub fn mmse_apply_cascaded(
    weights: &MmseWeights,
    est: &CascadedEstimate,
) -> Result<CascadedEstimate> {
    if weights.dim() != est.h_hat_vec.len() {
        return Err(Error::Shape(format!(
            "weights are {0}x{0}, estimate has {1} entries",
            weights.dim(),
            est.h_hat_vec.len()
        )));
    }
    let v = &weights.w * &est.h_hat_vec;
    let h_hat = unvec(&v, est.h_hat.nrows(), est.h_hat.ncols());
    Ok(CascadedEstimate::new(h_hat, Method::Mmse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_direct_estimate() {
        // 4√(βP_t) = 8 and xᵀx* = 1.
        let y = CMat::from_element(1, 1, C64::new(8.0, 0.0));
        let x = CVec::from_element(1, C64::new(1.0, 0.0));
        let est = ls_direct(&y, &x, 0.5, 8.0).unwrap();
        assert!((est.h_hat[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(est.method, Method::Ls);
    }

    #[test]
    fn zero_pilot_energy_is_a_domain_error() {
        let y = CMat::zeros(2, 2);
        let x = CVec::zeros(2);
        assert!(matches!(
            ls_direct(&y, &x, 0.5, 1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn hand_evaluated_cascaded_estimate() {
        let cfg = SystemConfig {
            k: 1,
            n: 2,
            ..SystemConfig::default()
        };
        let sched = PilotSchedule::build(&cfg).unwrap();
        // H = [1, 2], V = [[1,1],[1,-1]], X = I: H V = [3, -1].
        let (rho, beta, p_t) = (0.7, 0.5, 2.0);
        let c = 4.0 * rho * f64::sqrt(beta * p_t);
        let y2 = CMat::from_row_slice(1, 2, &[C64::new(3.0 * c, 0.0), C64::new(-c, 0.0)]);
        let est = ls_cascaded(&y2, &sched, rho, beta, p_t).unwrap();
        assert!((est.h_hat[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((est.h_hat[(0, 1)] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert_eq!(est.h_hat_vec, vec_of(&est.h_hat));
    }

    #[test]
    fn cascaded_rejects_zero_rho() {
        let cfg = SystemConfig {
            k: 1,
            n: 2,
            ..SystemConfig::default()
        };
        let sched = PilotSchedule::build(&cfg).unwrap();
        let y2 = CMat::zeros(1, 2);
        assert!(matches!(
            ls_cascaded(&y2, &sched, 0.0, 0.5, 1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn literal_loading_example() {
        // γ = 1, v = 1, loading 1 → W = 1/(1 + 1 + 1).
        let corr = Correlations::analytic(3, 1.0, 1.0);
        let w = MmseWeights::from_correlations(&corr, 1.0).unwrap();
        let expect = CMat::identity(3, 3) * C64::from(1.0 / 3.0);
        assert!(fro2(&(w.w - expect)).sqrt() < 1e-15);
    }

    #[test]
    fn weights_approach_identity_without_noise() {
        let corr = Correlations::analytic(4, 2.0, 0.0);
        let w = MmseWeights::from_correlations(&corr, 0.0).unwrap();
        assert!(fro2(&(w.w - CMat::identity(4, 4))).sqrt() < 1e-14);
        // Noiseless LS error but literal loading λ: W → γ/(γ+λ).
        let w = MmseWeights::from_correlations(&corr, 2.0).unwrap();
        assert!((w.w[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn indefinite_loaded_matrix_is_rejected() {
        let corr = Correlations {
            cross: CMat::identity(2, 2),
            auto: CMat::identity(2, 2) * C64::from(-1.0),
        };
        assert!(matches!(
            MmseWeights::from_correlations(&corr, 0.5),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn identity_weights_leave_estimates_unchanged() {
        let w = MmseWeights {
            w: CMat::identity(6, 6),
            loading: 0.0,
        };
        let h = CMat::from_fn(2, 3, |r, c| C64::new(r as f64, c as f64 - 1.0));
        let est = CascadedEstimate::new(h.clone(), Method::Ls);
        let out = mmse_apply_cascaded(&w, &est).unwrap();
        assert_eq!(out.h_hat, h);
        assert_eq!(out.method, Method::Mmse);
        let d = DirectEstimate {
            h_hat: CVec::from_element(6, C64::new(0.5, 0.25)),
            method: Method::Ls,
            squared_error: None,
        };
        assert_eq!(mmse_apply_direct(&w, &d).unwrap().h_hat, d.h_hat);
        let short = DirectEstimate {
            h_hat: CVec::zeros(3),
            ..d
        };
        assert!(matches!(
            mmse_apply_direct(&w, &short),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn empirical_correlations_average_outer_products() {
        let a = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let b = CVec::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        let corr = Correlations::empirical([(&a, &a), (&b, &a)]).unwrap();
        let expect_cross = (&a * a.adjoint() + &b * a.adjoint()) * C64::from(0.5);
        assert!(fro2(&(corr.cross - expect_cross)).sqrt() < 1e-15);
        assert!(Correlations::empirical(std::iter::empty()).is_err());
    }
}
