//! Four-block pilot pattern and its direct/cascaded separation.
//!
//! Each block `b` is sent with signs `(s_d, s_c, s_n)` on the direct
//! signal, the IRS-reflected signal and the IRS noise:
//!
//! | block | direct | cascaded | IRS noise |
//! |-------|--------|----------|-----------|
//! | Y1    | +      | +        | +         |
//! | Y2    | −      | −        | +         |
//! | Y3    | +      | −        | −         |
//! | Y4    | −      | +        | −         |
//!
//! `Y1 − Y2 + Y3 − Y4` then keeps only the direct term and
//! `Y1 − Y2 − Y3 + Y4` only the cascaded term.

use std::sync::OnceLock;

use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{right_inverse, CMat, CVec, C64};
use crate::system::{gaussian_matrix, ChannelRealization, IrsGain};

/// Signs of (direct, cascaded, IRS noise) per block.
pub const BLOCK_SIGNS: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
];

/// Combination weights producing `Ỹ₁` (direct) and `Ỹ₂` (cascaded).
pub const DIRECT_COMBINER: [f64; 4] = [1.0, -1.0, 1.0, -1.0];
pub const CASCADED_COMBINER: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

/// Pilot symbols and the per-symbol IRS phase columns.
#[derive(Debug)]
pub struct PilotSchedule {
    /// Pilot sequence, length Q.
    pub x: CVec,
    /// N x Q phase schedule; column q is the IRS phase vector during symbol q.
    pub v: CMat,
    vx_right_inverse: OnceLock<Option<CMat>>,
}

impl Clone for PilotSchedule {
    fn clone(&self) -> Self {
        PilotSchedule {
            x: self.x.clone(),
            v: self.v.clone(),
            vx_right_inverse: self.vx_right_inverse.clone(),
        }
    }
}

impl PartialEq for PilotSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.v == other.v
    }
}

/// Sylvester-Hadamard matrix of order `n` (a power of two).
pub fn hadamard(n: usize) -> CMat {
    assert!(n.is_power_of_two(), "Hadamard order must be a power of two");
    CMat::from_fn(n, n, |r, c| {
        let sign = if (r & c).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        C64::new(sign, 0.0)
    })
}

/// `n`-point DFT matrix with unit-modulus entries.
pub fn dft(n: usize) -> CMat {
    CMat::from_fn(n, n, |r, c| {
        let phase = -2.0 * std::f64::consts::PI * ((r * c) % n) as f64 / n as f64;
        C64::from_polar(1.0, phase)
    })
}

impl PilotSchedule {
    /// Default schedule for `cfg`: all-ones pilots and the first `N` rows of
    /// an order-`Q` Hadamard matrix (DFT when `Q` is not a power of two).
    pub fn build(cfg: &SystemConfig) -> Result<Self> {
        let (n, q) = (cfg.n, cfg.pilot_len());
        if q < n {
            return Err(Error::Config(format!(
                "Q = {q} < N = {n}: the phase schedule has no right pseudo-inverse"
            )));
        }
        let square = if q.is_power_of_two() {
            hadamard(q)
        } else {
            dft(q)
        };
        let v = square.rows(0, n).into_owned();
        Self::from_parts(CVec::from_element(q, C64::new(1.0, 0.0)), v)
    }

    /// Custom schedule. Pilots must be constant modulus and `V` unit modulus.
    pub fn from_parts(x: CVec, v: CMat) -> Result<Self> {
        if v.ncols() != x.len() {
            return Err(Error::Shape(format!(
                "V is {}x{} but there are {} pilot symbols",
                v.nrows(),
                v.ncols(),
                x.len()
            )));
        }
        if v.nrows() > v.ncols() {
            return Err(Error::Config(format!(
                "Q = {} < N = {}: the phase schedule has no right pseudo-inverse",
                v.ncols(),
                v.nrows()
            )));
        }
        let modulus = x.iter().next().map(|z| z.norm()).unwrap_or(0.0);
        if modulus == 0.0
            || x.iter()
                .any(|z| (z.norm() - modulus).abs() > 1e-12 * modulus)
        {
            return Err(Error::Domain {
                name: "pilot modulus",
                value: modulus,
                expected: "nonzero constant-modulus pilots",
            });
        }
        if v.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::Domain {
                name: "phase schedule modulus",
                value: v.iter().map(|z| z.norm()).fold(0.0, f64::max),
                expected: "unit-modulus IRS phases",
            });
        }
        Ok(PilotSchedule {
            x,
            v,
            vx_right_inverse: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn q(&self) -> usize {
        self.v.ncols()
    }

    /// `xᵀ x*`.
    pub fn pilot_energy(&self) -> f64 {
        self.x.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `V X`, i.e. column q of V scaled by `x_q`.
    pub fn vx(&self) -> CMat {
        let mut vx = self.v.clone();
        for (mut col, xq) in vx.column_iter_mut().zip(self.x.iter()) {
            col *= *xq;
        }
        vx
    }

    /// Right inverse of `V X` (Q x N), cached after the first call.
    pub fn vx_right_inverse(&self) -> Result<&CMat> {
        self.vx_right_inverse
            .get_or_init(|| right_inverse(&self.vx()))
            .as_ref()
            .ok_or(Error::SingularSchedule)
    }

    /// IRS phase vector used to size the amplification factor.
    ///
    /// All unit-modulus columns give the same `‖Gθ̃‖²`, so the choice only
    /// fixes which vector is reported.
    pub fn reference_phases(&self) -> CVec {
        self.v.column(0).into_owned()
    }
}

/// Noise draws kept for audit: `W_i` blocks are Q x Q, `W_b` blocks K x Q.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRecord {
    pub irs: [CMat; 4],
    pub bs: [CMat; 4],
}

/// The four received blocks and their two combinations.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedFrame {
    pub blocks: [CMat; 4],
    /// Direct-channel observation `Y1 − Y2 + Y3 − Y4`.
    pub ytilde1: CMat,
    /// Cascaded-channel observation `Y1 − Y2 − Y3 + Y4`.
    pub ytilde2: CMat,
    pub noise: Option<NoiseRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransmitOptions {
    /// Add IRS and BS noise. When false no noise is drawn at all.
    pub noise: bool,
    /// Keep every noise draw in the frame.
    pub retain_noise: bool,
}

impl Default for TransmitOptions {
    fn default() -> Self {
        TransmitOptions {
            noise: true,
            retain_noise: false,
        }
    }
}

impl TransmitOptions {
    pub fn noiseless() -> Self {
        TransmitOptions {
            noise: false,
            retain_noise: false,
        }
    }
}

/// Noise-free signal components shared by the four blocks.
struct SignalTerms {
    /// `√(βP_t) h xᵀ`
    direct: CMat,
    /// `ρ √(βP_t) H_biu V X`
    cascaded: CMat,
    /// `ρ F V`
    irs_noise_map: CMat,
}

fn signal_terms(
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    irs: &IrsGain,
    sched: &PilotSchedule,
) -> Result<SignalTerms> {
    if chan.n() != sched.n() || chan.k() != cfg.k || chan.n() != cfg.n {
        return Err(Error::Shape(format!(
            "channel is {}x{}, schedule is for N = {}, config K = {} N = {}",
            chan.k(),
            chan.n(),
            sched.n(),
            cfg.k,
            cfg.n
        )));
    }
    let amp = (cfg.beta * cfg.p_t).sqrt();
    let direct = &chan.h * sched.x.transpose() * C64::from(amp);
    let cascaded = &chan.h_biu * sched.vx() * C64::from(irs.rho * amp);
    let irs_noise_map = &chan.f * &sched.v * C64::from(irs.rho);
    Ok(SignalTerms {
        direct,
        cascaded,
        irs_noise_map,
    })
}

fn assemble_block(terms: &SignalTerms, signs: [f64; 3], w_irs: &CMat, w_bs: &CMat) -> CMat {
    let [sd, sc, sn] = signs;
    &terms.direct * C64::from(sd)
        + &terms.cascaded * C64::from(sc)
        + &terms.irs_noise_map * w_irs * C64::from(sn)
        + w_bs
}

fn combine_blocks(blocks: &[CMat; 4], weights: [f64; 4]) -> CMat {
    let mut out = CMat::zeros(blocks[0].nrows(), blocks[0].ncols());
    for (b, w) in blocks.iter().zip(weights) {
        if w > 0.0 {
            out += b;
        } else {
            out -= b;
        }
    }
    out
}

/// Transmit the four pilot blocks through one channel realization.
///
/// Each block draws fresh `W_i` (Q x Q, variance σ_i²) then `W_b`
/// (K x Q, variance σ_b²).
pub fn transmit_four_blocks<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    irs: &IrsGain,
    sched: &PilotSchedule,
    opts: TransmitOptions,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let terms = signal_terms(cfg, chan, irs, sched)?;
    let (k, q) = (cfg.k, sched.q());
    let mut irs_noise: [CMat; 4] = std::array::from_fn(|_| CMat::zeros(q, q));
    let mut bs_noise: [CMat; 4] = std::array::from_fn(|_| CMat::zeros(k, q));
    if opts.noise {
        for b in 0..4 {
            irs_noise[b] = gaussian_matrix(rng, q, q, cfg.sigma_i2);
            bs_noise[b] = gaussian_matrix(rng, k, q, cfg.sigma_b2);
        }
    }
    let blocks: [CMat; 4] = std::array::from_fn(|b| {
        assemble_block(&terms, BLOCK_SIGNS[b], &irs_noise[b], &bs_noise[b])
    });
    let (ytilde1, ytilde2) = combine(&blocks);
    let noise = (opts.noise && opts.retain_noise).then_some(NoiseRecord {
        irs: irs_noise,
        bs: bs_noise,
    });
    Ok(ReceivedFrame {
        blocks,
        ytilde1,
        ytilde2,
        noise,
    })
}

/// `(Y1 − Y2 + Y3 − Y4, Y1 − Y2 − Y3 + Y4)`.
pub fn combine(blocks: &[CMat; 4]) -> (CMat, CMat) {
    (
        combine_blocks(blocks, DIRECT_COMBINER),
        combine_blocks(blocks, CASCADED_COMBINER),
    )
}

/// Rebuild the four blocks from a retained noise record.
pub fn replay_blocks(
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    irs: &IrsGain,
    sched: &PilotSchedule,
    noise: &NoiseRecord,
) -> Result<[CMat; 4]> {
    let terms = signal_terms(cfg, chan, irs, sched)?;
    Ok(std::array::from_fn(|b| {
        assemble_block(&terms, BLOCK_SIGNS[b], &noise.irs[b], &noise.bs[b])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro2;
    use crate::rng;
    use crate::system::draw_channels;

    fn setup(
        k: usize,
        n: usize,
        seed: u64,
    ) -> (SystemConfig, ChannelRealization, IrsGain, PilotSchedule) {
        let cfg = SystemConfig {
            k,
            n,
            ..SystemConfig::default()
        };
        let sched = PilotSchedule::build(&cfg).unwrap();
        let chan = draw_channels(&cfg, &mut rng::single(seed)).unwrap();
        let irs = IrsGain::new(&cfg, &chan, sched.reference_phases()).unwrap();
        (cfg, chan, irs, sched)
    }

    #[test]
    fn order_two_hadamard() {
        let cfg = SystemConfig {
            k: 1,
            n: 2,
            ..SystemConfig::default()
        };
        let s = PilotSchedule::build(&cfg).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for (r, row) in expect.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert_eq!(s.v[(r, c)], C64::new(*want, 0.0));
            }
        }
        for col in s.v.column_iter() {
            assert!((col.norm() - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn hadamard_64_is_orthogonal() {
        let cfg = SystemConfig {
            k: 1,
            n: 64,
            ..SystemConfig::default()
        };
        let s = PilotSchedule::build(&cfg).unwrap();
        let gram = &s.v * s.v.adjoint();
        let target = CMat::identity(64, 64) * C64::from(64.0);
        assert!(fro2(&(gram - target)).sqrt() < 1e-10);
        assert_eq!(s.pilot_energy(), 64.0);
    }

    #[test]
    fn non_power_of_two_uses_dft() {
        let cfg = SystemConfig {
            k: 1,
            n: 3,
            ..SystemConfig::default()
        };
        let s = PilotSchedule::build(&cfg).unwrap();
        assert!(s.v.iter().any(|z| z.im.abs() > 0.5));
        for col in s.v.column_iter() {
            assert!((col.norm() - 3f64.sqrt()).abs() < 1e-12);
        }
        s.vx_right_inverse().unwrap();
    }

    #[test]
    fn wide_schedule_has_right_inverse() {
        let cfg = SystemConfig {
            k: 1,
            n: 4,
            q: Some(6),
            ..SystemConfig::default()
        };
        let s = PilotSchedule::build(&cfg).unwrap();
        assert_eq!((s.v.nrows(), s.v.ncols()), (4, 6));
        let prod = s.vx() * s.vx_right_inverse().unwrap();
        assert!(fro2(&(prod - CMat::identity(4, 4))).sqrt() < 1e-12);
    }

    #[test]
    fn short_pilot_is_a_config_error() {
        let v = hadamard(4);
        let err = PilotSchedule::from_parts(
            CVec::from_element(2, C64::new(1.0, 0.0)),
            v.columns(0, 2).into_owned(),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn singular_schedule_is_reported() {
        let v = CMat::from_element(2, 2, C64::new(1.0, 0.0));
        let s = PilotSchedule::from_parts(CVec::from_element(2, C64::new(1.0, 0.0)), v).unwrap();
        assert!(matches!(s.vx_right_inverse(), Err(Error::SingularSchedule)));
    }

    #[test]
    fn noiseless_blocks_cancel() {
        let (cfg, chan, irs, sched) = setup(3, 8, 1);
        let f = transmit_four_blocks(
            &cfg,
            &chan,
            &irs,
            &sched,
            TransmitOptions::noiseless(),
            &mut rng::single(9),
        )
        .unwrap();
        let sum = &f.blocks[0] + &f.blocks[1];
        assert!(sum.iter().all(|z| z.norm() == 0.0));

        let diff = &f.blocks[0] - &f.blocks[2];
        let amp = (cfg.beta * cfg.p_t).sqrt();
        let expect = &chan.h_biu * sched.vx() * C64::from(2.0 * irs.rho * amp);
        assert!(fro2(&(diff - &expect)).sqrt() <= 1e-12 * fro2(&expect).sqrt());
    }

    #[test]
    fn noiseless_combinations_separate_channels() {
        for seed in 0..10 {
            let (cfg, chan, irs, sched) = setup(4, 8, seed);
            let f = transmit_four_blocks(
                &cfg,
                &chan,
                &irs,
                &sched,
                TransmitOptions::noiseless(),
                &mut rng::single(0),
            )
            .unwrap();
            let amp = (cfg.beta * cfg.p_t).sqrt();
            let direct = &chan.h * sched.x.transpose() * C64::from(4.0 * amp);
            assert!(fro2(&(&f.ytilde1 - &direct)).sqrt() <= 1e-12 * fro2(&direct).sqrt());

            let recovered =
                &f.ytilde2 * sched.vx_right_inverse().unwrap() / C64::from(4.0 * irs.rho * amp);
            let err = fro2(&(recovered - &chan.h_biu)).sqrt() / fro2(&chan.h_biu).sqrt();
            assert!(err < 1e-10, "{err}");
        }
    }

    #[test]
    fn direct_scaling_is_linear_and_isolated() {
        let (cfg, chan, irs, sched) = setup(2, 4, 5);
        let scaled = ChannelRealization::from_links(
            &chan.h * C64::new(2.0, -1.0),
            chan.f.clone(),
            chan.g.clone(),
        )
        .unwrap();
        let opts = TransmitOptions::noiseless();
        let a = transmit_four_blocks(&cfg, &chan, &irs, &sched, opts, &mut rng::single(0)).unwrap();
        let b =
            transmit_four_blocks(&cfg, &scaled, &irs, &sched, opts, &mut rng::single(0)).unwrap();
        let expect = &a.ytilde1 * C64::new(2.0, -1.0);
        assert!(fro2(&(&b.ytilde1 - &expect)).sqrt() <= 1e-12 * fro2(&expect).sqrt());
        assert!(fro2(&(&b.ytilde2 - &a.ytilde2)).sqrt() <= 1e-12 * fro2(&a.ytilde2).sqrt());
    }

    #[test]
    fn retained_noise_replays_exactly() {
        let (cfg, chan, irs, sched) = setup(3, 4, 2);
        let opts = TransmitOptions {
            noise: true,
            retain_noise: true,
        };
        let f = transmit_four_blocks(&cfg, &chan, &irs, &sched, opts, &mut rng::single(4)).unwrap();
        let noise = f.noise.as_ref().unwrap();
        let blocks = replay_blocks(&cfg, &chan, &irs, &sched, noise).unwrap();
        assert_eq!(blocks, f.blocks);
        let (y1, y2) = combine(&blocks);
        assert_eq!(y1, f.ytilde1);
        assert_eq!(y2, f.ytilde2);

        // Expanded form of the direct combination. The block signs on the IRS
        // noise (+, +, −, −) turn the direct combiner into W1 − W2 − W3 + W4.
        let amp = (cfg.beta * cfg.p_t).sqrt();
        let w_irs = &noise.irs[0] - &noise.irs[1] - &noise.irs[2] + &noise.irs[3];
        let w_bs = &noise.bs[0] - &noise.bs[1] + &noise.bs[2] - &noise.bs[3];
        let expanded = &chan.h * sched.x.transpose() * C64::from(4.0 * amp)
            + &chan.f * &sched.v * w_irs * C64::from(irs.rho)
            + w_bs;
        assert!(fro2(&(expanded - &f.ytilde1)).sqrt() <= 1e-12 * fro2(&f.ytilde1).sqrt());
    }

    #[test]
    fn zero_channels_leave_only_noise() {
        let (cfg, chan, irs, sched) = setup(2, 4, 3);
        let zero =
            ChannelRealization::from_links(CVec::zeros(2), chan.f.clone(), CVec::zeros(4)).unwrap();
        let opts = TransmitOptions {
            noise: true,
            retain_noise: true,
        };
        let f = transmit_four_blocks(&cfg, &zero, &irs, &sched, opts, &mut rng::single(8)).unwrap();
        let noise = f.noise.unwrap();
        let mut expect = CMat::zeros(2, 4);
        for b in 0..4 {
            let w = DIRECT_COMBINER[b];
            expect += (&chan.f * &sched.v * &noise.irs[b] * C64::from(irs.rho * BLOCK_SIGNS[b][2])
                + &noise.bs[b])
                * C64::from(w);
        }
        assert!(fro2(&(expect - &f.ytilde1)).sqrt() <= 1e-12 * fro2(&f.ytilde1).sqrt());
    }
}
