//! Transmitter and channel impairments: the parallel Hammerstein PA model,
//! the fading self-interference channel, the analog-cancellation stage and
//! additive receiver noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::signal::Waveform;
use crate::{db_to_lin, mix_seed, FdError, Result, C64};

/// Odd-order memory polynomial
/// `y[n] = sum_k sum_l b[k][l] |x[n-l]|^(2k) x[n-l]`
/// with `K` branches (order `2K-1`) and `L` taps.
#[derive(Debug, Clone, PartialEq)]
pub struct HammersteinModel {
    k_terms: usize,
    l_taps: usize,
    /// Row-major `K x L`: `coeffs[k * L + l]`.
    coeffs: Vec<C64>,
}

impl HammersteinModel {
    pub fn new(k_terms: usize, l_taps: usize, coeffs: Vec<C64>) -> Result<Self> {
        if k_terms == 0 || l_taps == 0 {
            return Err(FdError::Config(format!(
                "Hammerstein model needs K >= 1 and L >= 1, got K={k_terms}, L={l_taps}"
            )));
        }
        if coeffs.len() != k_terms * l_taps {
            return Err(FdError::Config(format!(
                "expected {} coefficients for K={k_terms}, L={l_taps}, got {}",
                k_terms * l_taps,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(FdError::Config("non-finite Hammerstein coefficient".into()));
        }
        Ok(Self {
            k_terms,
            l_taps,
            coeffs,
        })
    }

    /// Unit-gain memoryless linear model (`K = L = 1`).
    pub fn identity() -> Self {
        Self::linear(&[C64::new(1.0, 0.0)])
    }

    /// Pure FIR model (`K = 1`).
    pub fn linear(taps: &[C64]) -> Self {
        Self {
            k_terms: 1,
            l_taps: taps.len().max(1),
            coeffs: if taps.is_empty() {
                vec![C64::new(1.0, 0.0)]
            } else {
                taps.to_vec()
            },
        }
    }

    pub fn k_terms(&self) -> usize {
        self.k_terms
    }

    pub fn l_taps(&self) -> usize {
        self.l_taps
    }

    /// Model order `2K - 1`.
    pub fn order(&self) -> usize {
        2 * self.k_terms - 1
    }

    pub fn coeff(&self, k: usize, l: usize) -> C64 {
        self.coeffs[k * self.l_taps + l]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn n_coeffs(&self) -> usize {
        self.coeffs.len()
    }

    /// Apply to `x`, producing outputs for indices `range` and using
    /// samples of `x` before `range.start` as memory (zero before index 0).
    pub fn apply_range(&self, x: &[C64], range: std::ops::Range<usize>) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); range.len()];
        let lo = range.start.saturating_sub(self.l_taps - 1);
        // branch signals |x|^(2k) x over the span that can be touched
        let span = &x[lo..range.end];
        let mut branches: Vec<Vec<C64>> = Vec::with_capacity(self.k_terms);
        let mags: Vec<f64> = span.iter().map(|s| s.norm_sqr()).collect();
        let mut cur: Vec<C64> = span.to_vec();
        for k in 0..self.k_terms {
            if k > 0 {
                for (c, m) in cur.iter_mut().zip(&mags) {
                    *c *= *m;
                }
            }
            branches.push(cur.clone());
        }
        for (i, o) in out.iter_mut().enumerate() {
            let n = range.start + i;
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..self.l_taps {
                if n < l || n - l < lo {
                    break;
                }
                let j = n - l - lo;
                for (k, br) in branches.iter().enumerate() {
                    acc += self.coeffs[k * self.l_taps + l] * br[j];
                }
            }
            *o = acc;
        }
        out
    }

    /// Output of branch `k` alone (all other coefficients zeroed).
    pub fn branch(&self, k: usize) -> HammersteinModel {
        let mut m = self.clone();
        for kk in 0..self.k_terms {
            if kk != k {
                for l in 0..self.l_taps {
                    m.coeffs[kk * self.l_taps + l] = C64::new(0.0, 0.0);
                }
            }
        }
        m
    }
}

/// `y = PA(x)` with zero initial memory.
pub fn apply_hammerstein(model: &HammersteinModel, x: &Waveform) -> Waveform {
    Waveform::new(
        model.apply_range(&x.samples, 0..x.len()),
        x.sample_rate_hz,
    )
}

/// Speed-of-light default used by configuration files.
pub const DEFAULT_SPEED_OF_LIGHT_MPS: f64 = 3.0e8;

/// `T_c = 1/f_d` with Doppler `f_d = v f_c / c`. Zero speed gives an infinite
/// coherence time (static channel).
pub fn coherence_time(speed_mps: f64, carrier_hz: f64, c_mps: f64) -> f64 {
    if speed_mps <= 0.0 {
        return f64::INFINITY;
    }
    c_mps / (speed_mps * carrier_hz)
}

/// Gauss-Markov step correlation `exp(-step/T_c)`, clamped to `[0, 1]`.
pub fn fading_corr_from_coherence(t_c: f64, step_s: f64) -> f64 {
    if t_c.is_infinite() {
        return 1.0;
    }
    (-step_s / t_c).exp().clamp(0.0, 1.0)
}

fn complex_gaussian<R: Rng>(rng: &mut R, power: f64) -> C64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Exponential power-delay profile normalized to unit total power.
pub fn exponential_profile(l_taps: usize, decay_db_per_tap: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..l_taps)
        .map(|d| db_to_lin(-decay_db_per_tap * d as f64))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / sum).collect()
}

/// Construction parameters for a randomly drawn [`SiChannel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiChannelParams {
    pub l_taps: usize,
    pub decay_db_per_tap: f64,
    /// Ratio of fixed (specular) to fading (diffuse) power per tap, dB.
    /// `+inf` gives a static channel regardless of coherence time.
    pub k_factor_db: f64,
    pub power_gain_db: f64,
}

/// Tapped-delay-line self-interference channel.
///
/// Each tap is the sum of a fixed specular part of deterministic magnitude
/// and a diffuse part following a first-order Gauss-Markov process, so that
/// the mean tap power equals the profile value at every instant. The diffuse
/// part is advanced once per `step_samples` when fading is enabled.
/// The channel keeps its own input memory, so consecutive calls to
/// [`apply_channel`] continue one stream.
#[derive(Debug, Clone)]
pub struct SiChannel {
    profile: Vec<f64>,
    specular: Vec<C64>,
    diffuse: Vec<C64>,
    diffuse_fraction: f64,
    k_factor_db: f64,
    decay_db_per_tap: f64,
    coherence_time_s: f64,
    fading_corr: f64,
    step_samples: usize,
    power_gain_db: f64,
    seed: u64,
    rng: ChaCha8Rng,
    history: Vec<C64>,
    phase: usize,
}

impl SiChannel {
    /// Draw taps for `params` from `seed`. The channel is static until
    /// [`SiChannel::with_fading`] is called.
    pub fn random(params: &SiChannelParams, seed: u64) -> Result<Self> {
        if params.l_taps == 0 {
            return Err(FdError::Config("SI channel needs at least one tap".into()));
        }
        let profile = exponential_profile(params.l_taps, params.decay_db_per_tap);
        Ok(Self::draw(
            profile,
            params.k_factor_db,
            params.decay_db_per_tap,
            params.power_gain_db,
            seed,
        ))
    }

    fn draw(
        profile: Vec<f64>,
        k_factor_db: f64,
        decay_db_per_tap: f64,
        power_gain_db: f64,
        seed: u64,
    ) -> Self {
        let diffuse_fraction = if k_factor_db.is_infinite() && k_factor_db > 0.0 {
            0.0
        } else {
            1.0 / (1.0 + db_to_lin(k_factor_db))
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut specular = Vec::with_capacity(profile.len());
        let mut diffuse = Vec::with_capacity(profile.len());
        for &p in &profile {
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            specular.push(C64::from_polar((p * (1.0 - diffuse_fraction)).sqrt(), phase));
            diffuse.push(complex_gaussian(&mut rng, p * diffuse_fraction));
        }
        let l = profile.len();
        Self {
            profile,
            specular,
            diffuse,
            diffuse_fraction,
            k_factor_db,
            decay_db_per_tap,
            coherence_time_s: f64::INFINITY,
            fading_corr: 1.0,
            step_samples: usize::MAX,
            power_gain_db,
            seed,
            rng,
            history: vec![C64::new(0.0, 0.0); l.saturating_sub(1)],
            phase: 0,
        }
    }

    /// Static channel with exactly these taps.
    pub fn from_taps(taps: &[C64], power_gain_db: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(FdError::Config("SI channel needs at least one tap".into()));
        }
        let profile: Vec<f64> = taps.iter().map(|t| t.norm_sqr()).collect();
        Ok(Self {
            history: vec![C64::new(0.0, 0.0); taps.len() - 1],
            profile,
            specular: taps.to_vec(),
            diffuse: vec![C64::new(0.0, 0.0); taps.len()],
            diffuse_fraction: 0.0,
            k_factor_db: f64::INFINITY,
            decay_db_per_tap: 0.0,
            coherence_time_s: f64::INFINITY,
            fading_corr: 1.0,
            step_samples: usize::MAX,
            power_gain_db,
            seed: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            phase: 0,
        })
    }

    /// Enable Gauss-Markov evolution: one step every `step_samples` samples
    /// lasting `step_s` seconds.
    pub fn with_fading(mut self, coherence_time_s: f64, step_samples: usize, step_s: f64) -> Self {
        self.coherence_time_s = coherence_time_s;
        self.fading_corr = fading_corr_from_coherence(coherence_time_s, step_s);
        self.step_samples = step_samples.max(1);
        self
    }

    /// Directly set the per-step correlation.
    pub fn with_corr(mut self, rho: f64, step_samples: usize) -> Self {
        self.fading_corr = rho.clamp(0.0, 1.0);
        self.step_samples = step_samples.max(1);
        self
    }

    pub fn l_taps(&self) -> usize {
        self.profile.len()
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn power_gain_db(&self) -> f64 {
        self.power_gain_db
    }

    pub fn fading_corr(&self) -> f64 {
        self.fading_corr
    }

    pub fn coherence_time_s(&self) -> f64 {
        self.coherence_time_s
    }

    pub fn k_factor_db(&self) -> f64 {
        self.k_factor_db
    }

    /// Current taps, excluding the overall power gain.
    pub fn tap_gains(&self) -> Vec<C64> {
        self.specular
            .iter()
            .zip(&self.diffuse)
            .map(|(s, d)| s + d)
            .collect()
    }

    /// Current taps including the overall power gain.
    pub fn effective_taps(&self) -> Vec<C64> {
        let g = db_to_lin(self.power_gain_db).sqrt();
        self.tap_gains().into_iter().map(|t| t * g).collect()
    }

    /// One Gauss-Markov step of the diffuse part:
    /// `h <- rho h + sqrt(1 - rho^2) w`.
    pub fn step_fading(&mut self) {
        let rho = self.fading_corr;
        if rho >= 1.0 || self.diffuse_fraction == 0.0 {
            return;
        }
        let innov = (1.0 - rho * rho).sqrt();
        for (d, &p) in self.diffuse.iter_mut().zip(&self.profile) {
            let w = complex_gaussian(&mut self.rng, p * self.diffuse_fraction);
            *d = *d * rho + w * innov;
        }
    }

    /// Convolve `x` with the channel, continuing from the previous call.
    /// Returns the output and the taps in force for each step segment.
    pub fn apply_recording(
        &mut self,
        x: &Waveform,
        advance_fading: bool,
    ) -> (Waveform, Vec<Vec<C64>>) {
        let l = self.profile.len();
        let mut buf = self.history.clone();
        buf.extend_from_slice(&x.samples);
        let mut out = Vec::with_capacity(x.len());
        let mut snapshots = Vec::new();
        let mut taps = self.effective_taps();
        snapshots.push(taps.clone());
        for n in 0..x.len() {
            if self.phase == self.step_samples {
                self.phase = 0;
                if advance_fading {
                    self.step_fading();
                    taps = self.effective_taps();
                }
                snapshots.push(taps.clone());
            }
            let base = n + l - 1;
            let mut acc = C64::new(0.0, 0.0);
            for (d, t) in taps.iter().enumerate() {
                acc += t * buf[base - d];
            }
            out.push(acc);
            self.phase += 1;
        }
        self.history = buf[buf.len() - (l - 1)..].to_vec();
        (Waveform::new(out, x.sample_rate_hz), snapshots)
    }
}

/// `y = 10^(g/20) conv(h, x)`; when `advance_fading` is set the taps evolve
/// once per step (OFDM symbol).
pub fn apply_channel(ch: &mut SiChannel, x: &Waveform, advance_fading: bool) -> Waveform {
    ch.apply_recording(x, advance_fading).0
}

/// Residual channel after analog cancellation: `sic_db` lower power gain and,
/// when `delay_spread_mult != 1`, a longer exponential profile redrawn from
/// the channel's seed.
pub fn apply_analog_sic(
    ch: &SiChannel,
    sic_db: f64,
    delay_spread_mult: usize,
    decay_db_per_tap: f64,
) -> Result<SiChannel> {
    if !(sic_db >= 0.0) {
        return Err(FdError::Config(format!(
            "analog SIC must be >= 0 dB, got {sic_db}"
        )));
    }
    if delay_spread_mult == 0 {
        return Err(FdError::Config("delay-spread multiplier must be >= 1".into()));
    }
    let mut out = if delay_spread_mult == 1 {
        ch.clone()
    } else {
        let l = ch.l_taps() * delay_spread_mult;
        let mut fresh = SiChannel::draw(
            exponential_profile(l, decay_db_per_tap),
            ch.k_factor_db,
            decay_db_per_tap,
            ch.power_gain_db,
            mix_seed(ch.seed, 0x5AC0),
        );
        fresh.coherence_time_s = ch.coherence_time_s;
        fresh.fading_corr = ch.fading_corr;
        fresh.step_samples = ch.step_samples;
        fresh
    };
    out.power_gain_db -= sic_db;
    out.decay_db_per_tap = if delay_spread_mult == 1 {
        ch.decay_db_per_tap
    } else {
        decay_db_per_tap
    };
    Ok(out)
}

/// Circularly-symmetric complex Gaussian noise of `noise_dbm` mean power per
/// sample. `-inf` leaves `x` unchanged.
pub fn add_awgn(x: &Waveform, noise_dbm: f64, seed: u64) -> Waveform {
    if noise_dbm == f64::NEG_INFINITY {
        return x.clone();
    }
    let p = db_to_lin(noise_dbm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = x
        .samples
        .iter()
        .map(|s| s + complex_gaussian(&mut rng, p))
        .collect();
    Waveform::new(samples, x.sample_rate_hz)
}

/// PA output as seen by an auxiliary receive chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChainCapture {
    pub samples: Waveform,
    pub noise_power_dbm: f64,
}

pub fn capture_aux(y_pa: &Waveform, capture_noise_dbm: f64, seed: u64) -> AuxChainCapture {
    AuxChainCapture {
        samples: add_awgn(y_pa, capture_noise_dbm, seed),
        noise_power_dbm: capture_noise_dbm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_dbm;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_signal(n: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect(),
            1.0,
        )
    }

    fn convolve(h: &[C64], x: &[C64]) -> Vec<C64> {
        (0..x.len())
            .map(|n| {
                (0..h.len())
                    .filter(|&d| d <= n)
                    .map(|d| h[d] * x[n - d])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn identity_model_is_identity() {
        let x = test_signal(100, 1);
        assert_eq!(apply_hammerstein(&HammersteinModel::identity(), &x), x);
    }

    #[test]
    fn linear_model_matches_convolution() {
        let x = test_signal(200, 2);
        let taps = [c(0.9, 0.1), c(-0.2, 0.3)];
        let y = apply_hammerstein(&HammersteinModel::linear(&taps), &x);
        let r = convolve(&taps, &x.samples);
        for (a, b) in y.samples.iter().zip(&r) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_memoryless_closed_form() {
        let m = HammersteinModel::new(2, 1, vec![c(1.0, 0.0), c(-0.1, 0.0)]).unwrap();
        let x: Vec<C64> = (0..64)
            .map(|n| C64::from_polar(1.0, 0.3 * n as f64))
            .collect();
        let y = apply_hammerstein(&m, &Waveform::new(x.clone(), 1.0));
        for (yi, xi) in y.samples.iter().zip(&x) {
            let want = xi * (1.0 - 0.1 * xi.norm_sqr());
            assert!((yi - want).norm() < 1e-12);
        }
    }

    #[test]
    fn branch_scales_with_odd_power() {
        let coeffs = vec![c(0.7, 0.1), c(0.2, -0.1), c(-0.05, 0.02), c(0.01, 0.0), c(0.003, 0.001), c(-0.001, 0.0)];
        let m = HammersteinModel::new(3, 2, coeffs).unwrap();
        let x = test_signal(50, 3);
        let alpha = 1.7;
        let xs = Waveform::new(x.samples.iter().map(|s| s * alpha).collect(), 1.0);
        for k in 0..3 {
            let b = m.branch(k);
            let y1 = apply_hammerstein(&b, &x);
            let y2 = apply_hammerstein(&b, &xs);
            let f = alpha.powi(2 * k as i32 + 1);
            for (a, bb) in y1.samples.iter().zip(&y2.samples) {
                assert!((a * f - bb).norm() < 1e-10 * bb.norm().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(HammersteinModel::new(0, 1, vec![]).is_err());
        assert!(HammersteinModel::new(2, 2, vec![c(1.0, 0.0); 3]).is_err());
        assert!(HammersteinModel::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn apply_range_continues_memory() {
        let m = HammersteinModel::new(2, 3, vec![c(1.0, 0.0), c(0.3, 0.1), c(0.1, 0.0), c(-0.05, 0.0), c(0.01, 0.0), c(0.0, 0.01)]).unwrap();
        let x = test_signal(90, 4);
        let full = m.apply_range(&x.samples, 0..90);
        let tail = m.apply_range(&x.samples, 40..90);
        for (a, b) in full[40..].iter().zip(&tail) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn unit_tap_channel_is_identity() {
        let x = test_signal(64, 5);
        let mut ch = SiChannel::from_taps(&[c(1.0, 0.0)], 0.0).unwrap();
        assert_eq!(apply_channel(&mut ch, &x, true), x);
    }

    #[test]
    fn rho_one_keeps_taps() {
        let p = SiChannelParams {
            l_taps: 4,
            decay_db_per_tap: 3.0,
            k_factor_db: 0.0,
            power_gain_db: 0.0,
        };
        let mut ch = SiChannel::random(&p, 7).unwrap().with_corr(1.0, 10);
        let x = test_signal(100, 6);
        let before = ch.tap_gains();
        apply_channel(&mut ch, &x, true);
        assert_eq!(before, ch.tap_gains());
        apply_channel(&mut ch, &x, true);
        assert_eq!(before, ch.tap_gains());
    }

    #[test]
    fn channel_gain_scales_power() {
        let p = SiChannelParams {
            l_taps: 6,
            decay_db_per_tap: 2.0,
            k_factor_db: 3.0,
            power_gain_db: -50.0,
        };
        let x = test_signal(4000, 8);
        let mut ch = SiChannel::random(&p, 9).unwrap();
        let taps = ch.tap_gains();
        let y = apply_channel(&mut ch, &x, false);
        let reference = convolve(&taps, &x.samples);
        let ratio = crate::db_to_lin(power_dbm(&y.samples) - power_dbm(&reference));
        assert!((ratio - 1e-5).abs() / 1e-5 < 1e-9);
    }

    #[test]
    fn consecutive_calls_equal_one_call() {
        let p = SiChannelParams {
            l_taps: 5,
            decay_db_per_tap: 1.0,
            k_factor_db: 0.0,
            power_gain_db: 0.0,
        };
        let x = test_signal(300, 10);
        let mut a = SiChannel::random(&p, 3).unwrap().with_corr(0.9, 20);
        let mut b = a.clone();
        let whole = apply_channel(&mut a, &x, true);
        let first = apply_channel(&mut b, &Waveform::new(x.samples[..130].to_vec(), 1.0), true);
        let second = apply_channel(&mut b, &Waveform::new(x.samples[130..].to_vec(), 1.0), true);
        let joined: Vec<C64> = first.samples.into_iter().chain(second.samples).collect();
        assert_eq!(whole.samples, joined);
    }

    #[test]
    fn fading_is_stationary_per_tap() {
        let p = SiChannelParams {
            l_taps: 3,
            decay_db_per_tap: 3.0,
            k_factor_db: f64::NEG_INFINITY,
            power_gain_db: 0.0,
        };
        let mut ch = SiChannel::random(&p, 11).unwrap().with_corr(0.9, 1);
        let steps = 20_000;
        let mut acc = vec![0.0; 3];
        for _ in 0..steps {
            ch.step_fading();
            for (a, t) in acc.iter_mut().zip(ch.tap_gains()) {
                *a += t.norm_sqr();
            }
        }
        for (a, want) in acc.iter().zip(ch.profile()) {
            let got = a / steps as f64;
            assert!(
                (crate::lin_to_db(got) - crate::lin_to_db(*want)).abs() < 0.5,
                "tap power {got} vs profile {want}"
            );
        }
    }

    #[test]
    fn coherence_time_from_doppler() {
        let c0 = DEFAULT_SPEED_OF_LIGHT_MPS;
        let fast = coherence_time(60.0 / 3.6, 2.52e9, c0);
        let slow = coherence_time(3.0 / 3.6, 2.52e9, c0);
        assert!((fast * 1e3 - 7.14).abs() < 0.01);
        assert!((slow * 1e3 - 142.86).abs() < 0.01);
        let t1 = coherence_time(10.0, 2e9, c0);
        let t2 = coherence_time(20.0, 2e9, c0);
        assert!((t1 / t2 - 2.0).abs() < 1e-12);
        assert!(coherence_time(0.0, 2e9, c0).is_infinite());
    }

    #[test]
    fn fading_corr_definition() {
        assert_eq!(fading_corr_from_coherence(f64::INFINITY, 1e-3), 1.0);
        assert!((fading_corr_from_coherence(2e-3, 2e-3) - (-1f64).exp()).abs() < 1e-15);
        assert!(fading_corr_from_coherence(1e-3, 1e-4) < fading_corr_from_coherence(2e-3, 1e-4));
    }

    #[test]
    fn analog_sic_identity_and_composition() {
        let p = SiChannelParams {
            l_taps: 8,
            decay_db_per_tap: 3.0,
            k_factor_db: 10.0,
            power_gain_db: 0.0,
        };
        let ch = SiChannel::random(&p, 12).unwrap();
        let same = apply_analog_sic(&ch, 0.0, 1, 3.0).unwrap();
        assert_eq!(same.tap_gains(), ch.tap_gains());
        assert_eq!(same.power_gain_db(), ch.power_gain_db());

        let fifty = apply_analog_sic(&ch, 50.0, 1, 3.0).unwrap();
        assert_eq!(fifty.power_gain_db(), -50.0);
        let staged =
            apply_analog_sic(&apply_analog_sic(&ch, 20.0, 1, 3.0).unwrap(), 30.0, 1, 3.0).unwrap();
        assert_eq!(staged.effective_taps(), fifty.effective_taps());

        let longer = apply_analog_sic(&ch, 50.0, 4, 3.0).unwrap();
        assert_eq!(longer.l_taps(), 32);
        assert_eq!(longer.power_gain_db(), -50.0);
        assert!(apply_analog_sic(&ch, -1.0, 1, 3.0).is_err());
    }

    #[test]
    fn awgn_power_and_determinism() {
        let x = Waveform::zeros(1_000_000, 1.0);
        let y = add_awgn(&x, -20.0, 42);
        assert!((power_dbm(&y.samples) + 20.0).abs() < 0.1);
        assert_eq!(y, add_awgn(&x, -20.0, 42));
        let z = test_signal(10, 1);
        assert_eq!(add_awgn(&z, f64::NEG_INFINITY, 1), z);
    }

    #[test]
    fn aux_capture() {
        let y = test_signal(256, 13);
        let clean = capture_aux(&y, f64::NEG_INFINITY, 1);
        assert_eq!(clean.samples, y);
        let noisy = capture_aux(&y, -30.0, 1);
        assert_eq!(noisy.samples.len(), y.len());
        assert_eq!(noisy.samples, add_awgn(&y, -30.0, 1));
    }
}
