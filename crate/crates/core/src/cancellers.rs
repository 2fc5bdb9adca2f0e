//! Over-the-air scenario generation and the digital cancellers.
//!
//! A [`ScenarioBuilder`] produces one frame at a time: QPSK grid, OFDM
//! modulation, optional pre-calibration, PA, residual SI channel after the
//! analog stage, receiver noise and an optional auxiliary capture of the PA
//! output. Each canceller turns a [`ScenarioTrace`] into a [`Residual`].

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::estimation::{
    estimate_full_symbol, fit_precalibrator_in_band, ls_fit_freq_domain,
    ls_fit_hammerstein_in_band, ls_fit_hammerstein_window, ls_fit_time_domain_window,
    recover_pa_output, Precalibrator,
};
use crate::impairments::{
    add_awgn, apply_analog_sic, capture_aux, AuxChainCapture, HammersteinModel, SiChannel,
    SiChannelParams,
};
use crate::signal::{
    build_grid, build_grid_with, ofdm_demodulate, ofdm_modulate, Numerology, PatternKind, ReKind, RefLevels,
    ResourceGrid, RsPattern, ScatteredLattice, Waveform,
};
use crate::{db_to_lin, lin_to_db, mix_seed, FdError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CancellerKind {
    LinearFreq,
    LinearTime,
    Reconstruction,
    AuxChain,
    Precal,
}

impl CancellerKind {
    pub const ALL: [CancellerKind; 5] = [
        CancellerKind::LinearFreq,
        CancellerKind::LinearTime,
        CancellerKind::Reconstruction,
        CancellerKind::AuxChain,
        CancellerKind::Precal,
    ];

    /// Reference-signal layout each method is designed around.
    pub fn pattern_kind(self) -> PatternKind {
        match self {
            CancellerKind::LinearFreq | CancellerKind::AuxChain => PatternKind::ScatteredCellSpecific,
            CancellerKind::LinearTime | CancellerKind::Reconstruction => {
                PatternKind::FullSymbolPerSubframe
            }
            CancellerKind::Precal => PatternKind::PrecalFrame,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CancellerKind::LinearFreq => "linear_freq",
            CancellerKind::LinearTime => "linear_time",
            CancellerKind::Reconstruction => "reconstruction",
            CancellerKind::AuxChain => "aux_chain",
            CancellerKind::Precal => "precal",
        }
    }
}

impl fmt::Display for CancellerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CancellerKind {
    type Err = FdError;

    fn from_str(s: &str) -> Result<Self> {
        CancellerKind::ALL
            .into_iter()
            .find(|k| k.name() == s || format!("{k:?}") == s)
            .ok_or_else(|| FdError::Config(format!("unknown canceller `{s}`")))
    }
}

/// Everything needed to synthesize the over-the-air chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub numerology: Numerology,
    pub pattern: PatternKind,
    pub lattice: ScatteredLattice,
    pub ref_levels: RefLevels,
    pub rs_symbol: usize,
    pub l0_symbol: usize,
    pub h0_symbol: usize,
    pub pa: HammersteinModel,
    pub tx_power_dbm: f64,
    /// Receiver noise per sample; `-inf` disables it.
    pub noise_dbm: f64,
    /// SI channel before the analog stage.
    pub si_channel: SiChannelParams,
    pub analog_sic_db: f64,
    pub delay_spread_mult: usize,
    pub residual_decay_db_per_tap: f64,
    /// `inf` for a static channel.
    pub coherence_time_s: f64,
    /// Auxiliary receive chain noise; `None` disables the capture.
    pub aux_noise_dbm: Option<f64>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn build_pattern(&self) -> Result<RsPattern> {
        let num = &self.numerology;
        match self.pattern {
            PatternKind::FullSymbolPerSubframe => RsPattern::full_symbol_per_subframe(num, self.rs_symbol),
            PatternKind::ScatteredCellSpecific => RsPattern::scattered(num, &self.lattice),
            PatternKind::PrecalFrame => {
                RsPattern::precal_frame(num, &self.lattice, self.l0_symbol, self.h0_symbol)
            }
            PatternKind::Empty => Ok(RsPattern::empty(num)),
        }
    }

    /// REs scored by the cancellation metric, indexed `sym * n_sub + sub`
    /// over one frame. An RE counts only if it carries data in every frame
    /// layout, so all cancellers are scored on the same elements.
    pub fn evaluation_mask(&self) -> Result<Vec<bool>> {
        let num = &self.numerology;
        let layouts = [
            RsPattern::full_symbol_per_subframe(num, self.rs_symbol)?,
            RsPattern::scattered(num, &self.lattice)?,
            RsPattern::precal_frame(num, &self.lattice, self.l0_symbol, self.h0_symbol)?,
        ];
        Ok((0..num.symbols_per_frame())
            .flat_map(|sym| (0..num.n_sub).map(move |sub| (sub, sym)))
            .map(|(sub, sym)| layouts.iter().all(|p| p.kind_at(sub, sym) == ReKind::Data))
            .collect())
    }
}

/// One frame of the simulated chain.
#[derive(Debug, Clone)]
pub struct ScenarioTrace {
    pub frame: usize,
    pub numerology: Numerology,
    pub pattern: RsPattern,
    pub tx_grid: ResourceGrid,
    /// OFDM waveform at unit RMS drive, before pre-calibration.
    pub tx_ideal: Waveform,
    /// Actual PA input.
    pub tx_pre_pa: Waveform,
    pub pa_out: Waveform,
    pub aux: Option<AuxChainCapture>,
    /// Noise-free SI at the receiver (after the analog stage).
    pub si: Waveform,
    pub rx: Waveform,
    /// Channel taps in force for each OFDM symbol (diagnostics).
    pub channel_truth: Vec<Vec<C64>>,
    /// REs scored by the cancellation metric, see
    /// [`ScenarioConfig::evaluation_mask`].
    pub eval_mask: Vec<bool>,
}

impl ScenarioTrace {
    /// Mean SI power per scored RE for every subframe, dBm.
    pub fn si_power_per_subframe(&self) -> Result<Vec<f64>> {
        let g = ofdm_demodulate(&self.si, &self.numerology)?;
        Ok(data_power_per_subframe(&g, &self.eval_mask, &self.numerology))
    }
}

/// Mean power over the REs selected by `mask` (`sym * n_sub + sub`) of
/// each subframe, dBm.
pub fn data_power_per_subframe(grid: &ResourceGrid, mask: &[bool], num: &Numerology) -> Vec<f64> {
    let sps = num.symbols_per_subframe;
    (0..grid.n_sym() / sps)
        .map(|sf| {
            let mut acc = 0.0;
            let mut n = 0usize;
            for sym in sf * sps..(sf + 1) * sps {
                let row = &mask[sym * num.n_sub..(sym + 1) * num.n_sub];
                for (v, keep) in grid.column(sym).iter().zip(row) {
                    if *keep {
                        acc += v.norm_sqr();
                        n += 1;
                    }
                }
            }
            if n == 0 {
                f64::NEG_INFINITY
            } else {
                lin_to_db(acc / n as f64)
            }
        })
        .collect()
}

/// One frame of all-data OFDM at unit RMS drive and the PA's response,
/// both in drive units (what a bench capture of PA input and output would
/// hold after gain normalization).
pub fn synthetic_pa_capture(pa: &HammersteinModel, num: &Numerology, seed: u64) -> Result<(Waveform, Waveform)> {
    let grid = build_grid(num, &RsPattern::empty(num), mix_seed(seed, 2), mix_seed(seed, 3))?;
    let mut x = ofdm_modulate(&grid, num)?;
    let scale = (num.n_fft as f64 / num.n_sub as f64).sqrt();
    x.samples.iter_mut().for_each(|s| *s *= scale);
    let y = pa.apply_range(&x.samples, 0..x.len());
    let rate = x.sample_rate_hz;
    Ok((x, Waveform::new(y, rate)))
}

/// Stateful frame generator. Channel fading, PA memory and channel memory
/// carry over from one frame to the next.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    cfg: ScenarioConfig,
    pattern: RsPattern,
    eval_mask: Vec<bool>,
    channel: SiChannel,
    frame: usize,
    pa_hist: Vec<C64>,
    drive_scale: f64,
    out_amp: f64,
}

impl ScenarioBuilder {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        let num = &cfg.numerology;
        num.validate()?;
        if !(cfg.analog_sic_db >= 0.0) {
            return Err(FdError::Config(format!(
                "analog_sic_db must be >= 0, got {}",
                cfg.analog_sic_db
            )));
        }
        if !(cfg.coherence_time_s > 0.0) {
            return Err(FdError::Config("coherence time must be > 0 (inf for static)".into()));
        }
        let pattern = cfg.build_pattern()?;
        let eval_mask = cfg.evaluation_mask()?;
        let raw = SiChannel::random(&cfg.si_channel, mix_seed(cfg.seed, 1))?;
        let channel = apply_analog_sic(
            &raw,
            cfg.analog_sic_db,
            cfg.delay_spread_mult,
            cfg.residual_decay_db_per_tap,
        )?
        .with_fading(cfg.coherence_time_s, num.symbol_len(), num.symbol_duration_s());
        Ok(Self {
            drive_scale: (num.n_fft as f64 / num.n_sub as f64).sqrt(),
            out_amp: db_to_lin(cfg.tx_power_dbm).sqrt(),
            pa_hist: vec![C64::new(0.0, 0.0); cfg.pa.l_taps() - 1],
            frame: 0,
            channel,
            pattern,
            eval_mask,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn pattern(&self) -> &RsPattern {
        &self.pattern
    }

    pub fn frame_index(&self) -> usize {
        self.frame
    }

    /// Generate the next frame. `precal` (if any) is applied to everything
    /// except the L0/H0 calibration symbols.
    pub fn next_frame(&mut self, precal: Option<&Precalibrator>) -> Result<ScenarioTrace> {
        let f = self.frame;
        self.build(precal).map_err(|e| e.in_frame(f))
    }

    fn build(&mut self, precal: Option<&Precalibrator>) -> Result<ScenarioTrace> {
        let num = self.cfg.numerology.clone();
        let seed = self.cfg.seed;
        let f = self.frame as u64;
        let grid = build_grid_with(
            &num,
            &self.pattern,
            mix_seed(mix_seed(seed, 2), f),
            mix_seed(seed, 3),
            &self.cfg.ref_levels,
        )?;
        let mut tx_ideal = ofdm_modulate(&grid, &num)?;
        tx_ideal.samples.iter_mut().for_each(|s| *s *= self.drive_scale);

        let mut u = match precal {
            Some(p) => {
                let v = p.model.apply_range(&tx_ideal.samples, 0..tx_ideal.len());
                Waveform::new(v, tx_ideal.sample_rate_hz)
            }
            None => tx_ideal.clone(),
        };
        if precal.is_some() {
            let sl = num.symbol_len();
            for kind in [ReKind::LowPowerRef, ReKind::HighPowerRef] {
                for sym in self.pattern.symbols_with(kind) {
                    let r = sym * sl..(sym + 1) * sl;
                    u.samples[r.clone()].copy_from_slice(&tx_ideal.samples[r]);
                }
            }
        }
        if !u.is_finite() {
            return Err(FdError::Config("pre-calibrated drive is not finite".into()));
        }

        let h = self.pa_hist.len();
        let mut buf = std::mem::take(&mut self.pa_hist);
        buf.extend_from_slice(&u.samples);
        let mut y = self.cfg.pa.apply_range(&buf, h..buf.len());
        self.pa_hist = buf[buf.len() - h..].to_vec();
        y.iter_mut().for_each(|s| *s *= self.out_amp);
        let pa_out = Waveform::new(y, num.sample_rate_hz());

        let (si, channel_truth) = self.channel.apply_recording(&pa_out, true);
        let rx = add_awgn(&si, self.cfg.noise_dbm, mix_seed(mix_seed(seed, 4), f));
        let aux = self
            .cfg
            .aux_noise_dbm
            .map(|n| capture_aux(&pa_out, n, mix_seed(mix_seed(seed, 5), f)));
        self.frame += 1;
        Ok(ScenarioTrace {
            frame: f as usize,
            numerology: num,
            pattern: self.pattern.clone(),
            tx_grid: grid,
            tx_ideal,
            tx_pre_pa: u,
            pa_out,
            aux,
            si,
            rx,
            channel_truth,
            eval_mask: self.eval_mask.clone(),
        })
    }
}

/// Cancellation output for one frame.
#[derive(Debug, Clone)]
pub struct Residual {
    pub samples: Waveform,
    pub grid: ResourceGrid,
    /// Mean residual power over data REs, per subframe.
    pub per_subframe_power_dbm: Vec<f64>,
}

impl Residual {
    fn from_grid(grid: ResourceGrid, trace: &ScenarioTrace) -> Result<Self> {
        let samples = ofdm_modulate(&grid, &trace.numerology)?;
        Self::finish(samples, grid, trace)
    }

    fn from_time(samples: Waveform, trace: &ScenarioTrace) -> Result<Self> {
        let grid = ofdm_demodulate(&samples, &trace.numerology)?;
        Self::finish(samples, grid, trace)
    }

    fn finish(samples: Waveform, grid: ResourceGrid, trace: &ScenarioTrace) -> Result<Self> {
        let per_subframe_power_dbm = data_power_per_subframe(&grid, &trace.eval_mask, &trace.numerology);
        Ok(Self {
            samples,
            grid,
            per_subframe_power_dbm,
        })
    }
}

fn subtract_per_re(rx: &ResourceGrid, est: &crate::estimation::FreqChannelEstimate, reference: &ResourceGrid) -> ResourceGrid {
    let mut out = rx.clone();
    for sym in 0..rx.n_sym() {
        for sub in 0..rx.n_sub() {
            out.set(sub, sym, rx.get(sub, sym) - est.at(sub, sym) * reference.get(sub, sym));
        }
    }
    out
}

/// Per-RE linear cancellation with a channel estimated from the scattered
/// reference elements.
pub fn cancel_linear_freq(trace: &ScenarioTrace) -> Result<Residual> {
    let num = &trace.numerology;
    let rx = ofdm_demodulate(&trace.rx, num)?;
    let est = ls_fit_freq_domain(&rx, &trace.pattern, &trace.tx_grid, num)?;
    Residual::from_grid(subtract_per_re(&rx, &est, &trace.tx_grid), trace)
}

/// Linear cancellation using the auxiliary capture of the PA output as the
/// reference: the channel is estimated against the captured RS values and
/// the SI rebuilt from the whole captured grid.
pub fn cancel_aux_chain(trace: &ScenarioTrace) -> Result<Residual> {
    let num = &trace.numerology;
    let aux = trace
        .aux
        .as_ref()
        .ok_or_else(|| FdError::Config("aux-chain cancellation needs an auxiliary capture".into()))?;
    let rx = ofdm_demodulate(&trace.rx, num)?;
    let aux_grid = ofdm_demodulate(&aux.samples, num)?;
    let est = ls_fit_freq_domain(&rx, &trace.pattern, &aux_grid, num)?;
    Residual::from_grid(subtract_per_re(&rx, &est, &aux_grid), trace)
}

/// Time-domain per-subframe cancellation: fit on the useful part of the
/// subframe's full reference symbol, rebuild over the whole subframe from
/// the PA input, subtract.
fn cancel_time_domain(
    trace: &ScenarioTrace,
    fit: impl Fn(&[C64], &[C64], Range<usize>) -> Result<HammersteinModel>,
) -> Result<Residual> {
    let num = &trace.numerology;
    let sps = num.symbols_per_subframe;
    let sl = num.symbol_len();
    let rs = trace
        .pattern
        .symbols_with(ReKind::RefSignal)
        .into_iter()
        .find(|&s| s < sps && (0..num.n_sub).all(|k| trace.pattern.kind_at(k, s) == ReKind::RefSignal))
        .ok_or_else(|| {
            FdError::Config("time-domain cancellation needs a full reference symbol per subframe".into())
        })?;
    let u = &trace.tx_pre_pa.samples;
    let n_sf = trace.rx.len() / (sps * sl);
    let mut res = trace.rx.samples.clone();
    for sf in 0..n_sf {
        let start = (sf * sps + rs) * sl + num.cp_len;
        let model = fit(u, &trace.rx.samples, start..start + num.n_fft)?;
        let span = sf * sps * sl..(sf + 1) * sps * sl;
        let si_hat = model.apply_range(u, span.clone());
        for (r, s) in res[span].iter_mut().zip(si_hat) {
            *r -= s;
        }
    }
    Residual::from_time(Waveform::new(res, trace.rx.sample_rate_hz), trace)
}

/// Joint PA-plus-channel Hammerstein fit (`K` branches, `l_total` taps)
/// once per subframe.
pub fn cancel_reconstruction(trace: &ScenarioTrace, k_terms: usize, l_total: usize) -> Result<Residual> {
    cancel_time_domain(trace, |u, y, rows| ls_fit_hammerstein_window(u, y, k_terms, l_total, rows))
}

/// Linear time-domain LS fit once per subframe.
pub fn cancel_linear_time(trace: &ScenarioTrace, l_taps: usize) -> Result<Residual> {
    cancel_time_domain(trace, |u, y, rows| {
        ls_fit_time_domain_window(u, y, l_taps, rows).map(|t| HammersteinModel::linear(&t))
    })
}

/// Generate the next frame with `precal` in the transmit chain and cancel
/// it with the linear frequency-domain canceller.
pub fn cancel_precalibrated(
    builder: &mut ScenarioBuilder,
    precal: &Precalibrator,
) -> Result<(ScenarioTrace, Residual)> {
    if builder.pattern().kind() != PatternKind::PrecalFrame {
        return Err(FdError::Config(
            "pre-calibration needs the calibration frame pattern".into(),
        ));
    }
    let trace = builder.next_frame(Some(precal))?;
    let res = cancel_linear_freq(&trace).map_err(|e| e.in_frame(trace.frame))?;
    Ok((trace, res))
}

/// Over-the-air PA estimate from a frame's L0/H0 symbols: the L0 symbol
/// gives the channel, equalizing H0 by it gives the PA output. Returns the
/// known PA input and the estimated output of the H0 symbol (one cyclic
/// symbol each, drive units).
pub fn estimate_pa_over_the_air(trace: &ScenarioTrace) -> Result<(Vec<C64>, Vec<C64>)> {
    let num = &trace.numerology;
    let l0 = single_symbol(&trace.pattern, ReKind::LowPowerRef)?;
    let h0 = single_symbol(&trace.pattern, ReKind::HighPowerRef)?;
    let rx = ofdm_demodulate(&trace.rx, num)?;
    let est = estimate_full_symbol(rx.column(l0), trace.tx_grid.column(l0))?;
    let y = recover_pa_output(rx.column(h0), est.column(0), num)?;
    let scale = (num.n_fft as f64 / num.n_sub as f64).sqrt();
    let y: Vec<C64> = y.samples.iter().map(|s| s * scale).collect();
    let sl = num.symbol_len();
    let x = trace.tx_ideal.samples[h0 * sl + num.cp_len..(h0 + 1) * sl].to_vec();
    Ok((x, y))
}

fn single_symbol(pattern: &RsPattern, kind: ReKind) -> Result<usize> {
    match pattern.symbols_with(kind).as_slice() {
        [s] => Ok(*s),
        other => Err(FdError::Config(format!(
            "expected exactly one {kind:?} symbol per frame, found {}",
            other.len()
        ))),
    }
}

/// Fit the pre-calibrator for the next frame from this frame's L0/H0
/// symbols. The target gain is the linear gain of an in-band PA fit.
pub fn refit_precalibrator(trace: &ScenarioTrace, k_pc: usize, l_pc: usize) -> Result<Precalibrator> {
    let num = &trace.numerology;
    let (x, y) = estimate_pa_over_the_air(trace)?;
    let pa = ls_fit_hammerstein_in_band(&x, &y, 1, 1, num)?;
    fit_precalibrator_in_band(&x, &y, k_pc, l_pc, pa.coeff(0, 0), num)
}

/// Pre-cancellation SI power minus residual power, element-wise.
pub fn cancellation_db(si_power_dbm: &[f64], residual_power_dbm: &[f64]) -> Result<Vec<f64>> {
    if si_power_dbm.len() != residual_power_dbm.len() {
        return Err(FdError::Config(format!(
            "{} SI powers but {} residual powers",
            si_power_dbm.len(),
            residual_power_dbm.len()
        )));
    }
    Ok(si_power_dbm
        .iter()
        .zip(residual_power_dbm)
        .map(|(s, r)| s - r)
        .collect())
}

/// Transmit EVM (RMS ratio) of the PA output over the frame's data REs,
/// after a per-subcarrier complex gain fit.
pub fn transmit_evm(trace: &ScenarioTrace) -> Result<f64> {
    let num = &trace.numerology;
    let y = ofdm_demodulate(&trace.pa_out, num)?;
    let x = &trace.tx_grid;
    let mut err = 0.0;
    let mut sig = 0.0;
    for sub in 0..num.n_sub {
        let mut xy = C64::new(0.0, 0.0);
        let mut xx = 0.0;
        for sym in 0..x.n_sym() {
            if x.kind(sub, sym) == ReKind::Data {
                xy += y.get(sub, sym) * x.get(sub, sym).conj();
                xx += x.get(sub, sym).norm_sqr();
            }
        }
        if xx == 0.0 {
            continue;
        }
        let g = xy / xx;
        for sym in 0..x.n_sym() {
            if x.kind(sub, sym) == ReKind::Data {
                err += (y.get(sub, sym) - g * x.get(sub, sym)).norm_sqr();
                sig += (g * x.get(sub, sym)).norm_sqr();
            }
        }
    }
    if sig == 0.0 {
        return Err(FdError::Config("no data elements to measure EVM on".into()));
    }
    Ok((err / sig).sqrt())
}

/// Power of the third-order branch relative to the linear branch, dB, in
/// an order-7 Hammerstein fit from the ideal drive to the PA output. Fit
/// rows start after the last L0/H0 symbol so only pre-calibrated symbols
/// count.
pub fn third_order_distortion_db(trace: &ScenarioTrace, l_taps: usize) -> Result<f64> {
    let num = &trace.numerology;
    let sl = num.symbol_len();
    let first = [ReKind::LowPowerRef, ReKind::HighPowerRef]
        .into_iter()
        .flat_map(|k| trace.pattern.symbols_with(k))
        .max()
        .map_or(0, |s| s + 1);
    let x = &trace.tx_ideal.samples;
    let m = ls_fit_hammerstein_window(x, &trace.pa_out.samples, 4, l_taps, first * sl..x.len())?;
    let lin = crate::power_dbm(&m.branch(0).apply_range(x, first * sl..x.len()));
    let cubic = crate::power_dbm(&m.branch(1).apply_range(x, first * sl..x.len()));
    Ok(cubic - lin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impairments::SiChannelParams;

    pub(crate) fn base_config(pattern: PatternKind, pa: HammersteinModel) -> ScenarioConfig {
        ScenarioConfig {
            numerology: Numerology::reduced(),
            pattern,
            lattice: ScatteredLattice::default(),
            ref_levels: RefLevels::default(),
            rs_symbol: 0,
            l0_symbol: 1,
            h0_symbol: 2,
            pa,
            tx_power_dbm: 23.0,
            noise_dbm: -90.0,
            si_channel: SiChannelParams {
                l_taps: 1,
                decay_db_per_tap: 0.0,
                k_factor_db: 10.0,
                power_gain_db: 0.0,
            },
            analog_sic_db: 50.0,
            delay_spread_mult: 4,
            residual_decay_db_per_tap: 12.0,
            coherence_time_s: f64::INFINITY,
            aux_noise_dbm: Some(f64::NEG_INFINITY),
            seed: 11,
        }
    }

    #[test]
    fn canceller_names_round_trip() {
        for k in CancellerKind::ALL {
            assert_eq!(k.name().parse::<CancellerKind>().unwrap(), k);
        }
        assert!("nope".parse::<CancellerKind>().is_err());
    }

    #[test]
    fn cancellation_arithmetic() {
        assert_eq!(cancellation_db(&[-27.0], &[-90.0]).unwrap(), vec![63.0]);
        assert_eq!(cancellation_db(&[-10.0, -20.0], &[-10.0, -20.0]).unwrap(), vec![0.0, 0.0]);
        assert!(cancellation_db(&[1.0], &[]).is_err());
    }

    #[test]
    fn trace_levels() {
        let cfg = base_config(PatternKind::ScatteredCellSpecific, HammersteinModel::identity());
        let mut b = ScenarioBuilder::new(cfg).unwrap();
        let t = b.next_frame(None).unwrap();
        assert!((t.tx_ideal.power_dbm()).abs() < 0.2);
        assert!((t.pa_out.power_dbm() - 23.0).abs() < 0.2);
        assert!((t.si.power_dbm() + 27.0).abs() < 3.0, "{}", t.si.power_dbm());
        assert_eq!(t.channel_truth.len(), t.tx_grid.n_sym());
        assert_eq!(t.channel_truth[0].len(), 4);
    }

    #[test]
    fn zero_rx_gives_empty_residual() {
        let mut cfg = base_config(PatternKind::ScatteredCellSpecific, HammersteinModel::identity());
        cfg.tx_power_dbm = f64::NEG_INFINITY;
        cfg.noise_dbm = f64::NEG_INFINITY;
        let mut b = ScenarioBuilder::new(cfg).unwrap();
        let t = b.next_frame(None).unwrap();
        let r = cancel_linear_freq(&t).unwrap();
        assert!(r.per_subframe_power_dbm.iter().all(|p| *p == f64::NEG_INFINITY));
    }

    #[test]
    fn exact_aux_through_identity_channel_cancels_completely() {
        let mut cfg = base_config(
            PatternKind::ScatteredCellSpecific,
            HammersteinModel::new(2, 1, vec![C64::new(1.0, 0.0), C64::new(-0.05, 0.02)]).unwrap(),
        );
        cfg.analog_sic_db = 0.0;
        cfg.delay_spread_mult = 1;
        cfg.si_channel.k_factor_db = f64::INFINITY;
        cfg.noise_dbm = f64::NEG_INFINITY;
        let mut b = ScenarioBuilder::new(cfg).unwrap();
        b.next_frame(None).unwrap();
        let t = b.next_frame(None).unwrap();
        let si = t.si_power_per_subframe().unwrap();
        let r = cancel_aux_chain(&t).unwrap();
        let c = cancellation_db(&si, &r.per_subframe_power_dbm).unwrap();
        assert!(c.iter().all(|v| *v > 250.0), "{c:?}");
    }

    #[test]
    fn missing_aux_is_config_error() {
        let mut cfg = base_config(PatternKind::ScatteredCellSpecific, HammersteinModel::identity());
        cfg.aux_noise_dbm = None;
        let t = ScenarioBuilder::new(cfg).unwrap().next_frame(None).unwrap();
        assert!(cancel_aux_chain(&t).unwrap_err().is_config());
    }

    #[test]
    fn linear_pa_static_noiseless_cancels_to_interpolation_floor() {
        let mut cfg = base_config(PatternKind::ScatteredCellSpecific, HammersteinModel::identity());
        cfg.noise_dbm = f64::NEG_INFINITY;
        cfg.delay_spread_mult = 1;
        let mut b = ScenarioBuilder::new(cfg).unwrap();
        b.next_frame(None).unwrap();
        let t = b.next_frame(None).unwrap();
        let si = t.si_power_per_subframe().unwrap();
        let r = cancel_linear_freq(&t).unwrap();
        let c = cancellation_db(&si, &r.per_subframe_power_dbm).unwrap();
        assert!(c.iter().all(|v| *v > 80.0), "{c:?}");
    }

    #[test]
    fn reconstruction_k1_matches_linear_time() {
        let pa = HammersteinModel::linear(&[C64::new(1.0, 0.0), C64::new(0.1, -0.05)]);
        let cfg = base_config(PatternKind::FullSymbolPerSubframe, pa);
        let t = ScenarioBuilder::new(cfg).unwrap().next_frame(None).unwrap();
        let a = cancel_reconstruction(&t, 1, 6).unwrap();
        let b = cancel_linear_time(&t, 6).unwrap();
        for (x, y) in a.samples.samples.iter().zip(&b.samples.samples) {
            assert!((x - y).norm() <= 1e-10);
        }
    }

    #[test]
    fn precal_requires_calibration_pattern() {
        let cfg = base_config(PatternKind::ScatteredCellSpecific, HammersteinModel::identity());
        let mut b = ScenarioBuilder::new(cfg).unwrap();
        assert!(cancel_precalibrated(&mut b, &Precalibrator::identity()).is_err());
    }

    #[test]
    fn over_the_air_pa_estimate_is_exact_without_noise() {
        let pa = HammersteinModel::new(
            2,
            1,
            vec![C64::new(1.0, 0.0), C64::new(-0.03, 0.01)],
        )
        .unwrap();
        let mut cfg = base_config(PatternKind::PrecalFrame, pa.clone());
        cfg.noise_dbm = f64::NEG_INFINITY;
        cfg.residual_decay_db_per_tap = 60.0;
        cfg.delay_spread_mult = 1;
        let t = ScenarioBuilder::new(cfg).unwrap().next_frame(None).unwrap();
        let (x, y) = estimate_pa_over_the_air(&t).unwrap();
        let fit = ls_fit_hammerstein_in_band(&x, &y, 2, 1, &t.numerology).unwrap();
        // normalized by the L0-level gain, so compare the ratio of branches
        let ratio = fit.coeff(1, 0) / fit.coeff(0, 0);
        let want = pa.coeff(1, 0) / pa.coeff(0, 0);
        assert!((ratio - want).norm() < 2e-2 * want.norm(), "{ratio} vs {want}");
    }
}
