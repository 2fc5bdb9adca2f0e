//! Link-level runs: one canceller over a multi-frame scenario, summarized as
//! per-subframe cancellation in dB.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cancellers::{
    cancel_aux_chain, cancel_linear_freq, cancel_linear_time, cancel_precalibrated,
    cancel_reconstruction, cancellation_db, refit_precalibrator, transmit_evm, CancellerKind,
    ScenarioBuilder, ScenarioConfig,
};
use crate::estimation::Precalibrator;
use crate::impairments::{coherence_time, HammersteinModel, SiChannelParams, DEFAULT_SPEED_OF_LIGHT_MPS};
use crate::signal::{Numerology, RefLevels, ScatteredLattice};
use crate::{formats, FdError, Result, C64};

pub const LINK_SCHEMA_VERSION: u32 = 1;

/// Numerology and channel-size presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 2048-point FFT, 1200 subcarriers, 32-tap residual channel.
    Full,
    /// 256-point FFT, 180 subcarriers, 4-tap residual channel.
    #[default]
    Reduced,
}

impl std::str::FromStr for Profile {
    type Err = FdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "reduced" => Ok(Profile::Reduced),
            _ => Err(FdError::Config(format!("unknown profile `{s}` (full|reduced)"))),
        }
    }
}

/// Where the PA coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PaSource {
    /// Path to a PA coefficient file, relative to the config file.
    Path { path: PathBuf },
    Inline {
        k_terms: usize,
        l_taps: usize,
        coeffs: Vec<[f64; 2]>,
    },
}

/// Channel section of a link config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub l_taps: Option<usize>,
    pub decay_db_per_tap: Option<f64>,
    pub k_factor_db: Option<f64>,
    pub power_gain_db: Option<f64>,
    pub delay_spread_mult: Option<usize>,
    pub residual_decay_db_per_tap: Option<f64>,
}

/// Fading section: give either `coherence_time_ms` or `speed_kmh`, or
/// neither for a static channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSection {
    pub coherence_time_ms: Option<f64>,
    pub speed_kmh: Option<f64>,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default = "default_c")]
    pub speed_of_light_mps: f64,
}

impl Default for FadingSection {
    fn default() -> Self {
        Self {
            coherence_time_ms: None,
            speed_kmh: None,
            carrier_hz: default_carrier(),
            speed_of_light_mps: default_c(),
        }
    }
}

fn default_carrier() -> f64 {
    2.52e9
}

fn default_c() -> f64 {
    DEFAULT_SPEED_OF_LIGHT_MPS
}

impl FadingSection {
    pub fn coherence_time_s(&self) -> Result<f64> {
        match (self.coherence_time_ms, self.speed_kmh) {
            (Some(_), Some(_)) => Err(FdError::Config(
                "fading: give coherence_time_ms or speed_kmh, not both".into(),
            )),
            (Some(ms), None) if ms > 0.0 => Ok(ms * 1e-3),
            (Some(ms), None) => Err(FdError::Config(format!(
                "fading.coherence_time_ms must be > 0, got {ms}"
            ))),
            (None, Some(kmh)) if kmh >= 0.0 => {
                Ok(coherence_time(kmh / 3.6, self.carrier_hz, self.speed_of_light_mps))
            }
            (None, Some(kmh)) => Err(FdError::Config(format!("fading.speed_kmh must be >= 0, got {kmh}"))),
            (None, None) => Ok(f64::INFINITY),
        }
    }
}

/// Model orders of the cancellers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orders {
    /// Reconstruction branches (order `2K-1`).
    #[serde(default = "default_recon_k")]
    pub recon_k: usize,
    /// Reconstruction taps; defaults to PA taps plus residual channel taps.
    pub recon_taps: Option<usize>,
    #[serde(default = "default_precal_k")]
    pub precal_k: usize,
    /// Pre-calibrator taps; defaults to the PA's.
    pub precal_taps: Option<usize>,
    /// Linear time-domain taps; defaults to `recon_taps`.
    pub linear_taps: Option<usize>,
}

impl Default for Orders {
    fn default() -> Self {
        Self {
            recon_k: default_recon_k(),
            recon_taps: None,
            precal_k: default_precal_k(),
            precal_taps: None,
            linear_taps: None,
        }
    }
}

fn default_recon_k() -> usize {
    4
}

fn default_precal_k() -> usize {
    3
}

/// On-disk link configuration (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub schema_version: u32,
    #[serde(default)]
    pub profile: Profile,
    /// Overrides the profile's numerology.
    pub numerology: Option<Numerology>,
    pub pa: PaSource,
    #[serde(default = "default_tx")]
    pub tx_power_dbm: f64,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default = "default_sic")]
    pub analog_sic_db: f64,
    /// Auxiliary chain capture noise; `-inf` for a noiseless capture.
    #[serde(default = "default_aux_noise")]
    pub aux_noise_dbm: f64,
    pub cancellers: Vec<CancellerKind>,
    #[serde(default = "default_frames")]
    pub n_frames: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub channel: ChannelSection,
    /// One run per entry; an empty list means a single static run.
    #[serde(default)]
    pub fading: Vec<FadingSection>,
    #[serde(default)]
    pub orders: Orders,
    #[serde(default)]
    pub lattice: Option<ScatteredLattice>,
    #[serde(default)]
    pub ref_levels: Option<RefLevels>,
}

fn default_tx() -> f64 {
    23.0
}

fn default_noise() -> f64 {
    -90.0
}

fn default_sic() -> f64 {
    50.0
}

fn default_aux_noise() -> f64 {
    -60.0
}

fn default_frames() -> usize {
    3
}

impl LinkFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: LinkFile = toml::from_str(text).map_err(|e| FdError::Parse(e.to_string()))?;
        if f.schema_version != LINK_SCHEMA_VERSION {
            return Err(FdError::Parse(format!(
                "unsupported link schema_version {} (expected {LINK_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        Ok(f)
    }

    /// Expand into one [`LinkConfig`] per canceller, fading setting and
    /// seed. `base_dir` resolves a relative PA path.
    pub fn expand(&self, base_dir: &Path) -> Result<Vec<LinkConfig>> {
        let pa = match &self.pa {
            PaSource::Path { path } => formats::read_pa_model(&base_dir.join(path))?,
            PaSource::Inline {
                k_terms,
                l_taps,
                coeffs,
            } => HammersteinModel::new(
                *k_terms,
                *l_taps,
                coeffs.iter().map(|[r, i]| C64::new(*r, *i)).collect(),
            )?,
        };
        let fading = if self.fading.is_empty() {
            vec![FadingSection::default()]
        } else {
            self.fading.clone()
        };
        let mut base = LinkConfig::defaults(self.profile, pa);
        if let Some(n) = &self.numerology {
            base.numerology = n.clone();
        }
        base.tx_power_dbm = self.tx_power_dbm;
        base.noise_dbm = self.noise_dbm;
        base.analog_sic_db = self.analog_sic_db;
        base.aux_noise_dbm = self.aux_noise_dbm;
        base.n_frames = self.n_frames;
        let ch = &self.channel;
        base.channel.l_taps = ch.l_taps.unwrap_or(base.channel.l_taps);
        base.channel.decay_db_per_tap = ch.decay_db_per_tap.unwrap_or(base.channel.decay_db_per_tap);
        base.channel.k_factor_db = ch.k_factor_db.unwrap_or(base.channel.k_factor_db);
        base.channel.power_gain_db = ch.power_gain_db.unwrap_or(base.channel.power_gain_db);
        base.delay_spread_mult = ch.delay_spread_mult.unwrap_or(base.delay_spread_mult);
        base.residual_decay_db_per_tap =
            ch.residual_decay_db_per_tap.unwrap_or(base.residual_decay_db_per_tap);
        base.orders = self.orders.clone();
        if let Some(l) = &self.lattice {
            base.lattice = l.clone();
        }
        if let Some(r) = &self.ref_levels {
            base.ref_levels = *r;
        }
        let mut out = Vec::new();
        for &canceller in &self.cancellers {
            for fd in &fading {
                let tc = fd.coherence_time_s()?;
                for &seed in &self.seeds {
                    let mut c = base.clone();
                    c.canceller = canceller;
                    c.coherence_time_s = tc;
                    c.seed = seed;
                    c.validate()?;
                    out.push(c);
                }
            }
        }
        Ok(out)
    }
}

/// One link-level job.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub numerology: Numerology,
    pub pa: HammersteinModel,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    pub analog_sic_db: f64,
    pub aux_noise_dbm: f64,
    pub channel: SiChannelParams,
    pub delay_spread_mult: usize,
    pub residual_decay_db_per_tap: f64,
    pub coherence_time_s: f64,
    pub canceller: CancellerKind,
    pub orders: Orders,
    pub lattice: ScatteredLattice,
    pub ref_levels: RefLevels,
    pub n_frames: usize,
    pub seed: u64,
}

impl LinkConfig {
    /// Operating point: 23 dBm transmit power, -90 dBm noise, 50 dB analog
    /// cancellation, static channel, reconstruction canceller.
    pub fn defaults(profile: Profile, pa: HammersteinModel) -> Self {
        let (numerology, channel, mult, residual_decay) = match profile {
            Profile::Full => (
                Numerology::lte_extended_cp(),
                SiChannelParams {
                    l_taps: 8,
                    decay_db_per_tap: 3.0,
                    k_factor_db: 10.0,
                    power_gain_db: 0.0,
                },
                4,
                3.0,
            ),
            Profile::Reduced => (
                Numerology::reduced(),
                SiChannelParams {
                    l_taps: 1,
                    decay_db_per_tap: 0.0,
                    k_factor_db: 10.0,
                    power_gain_db: 0.0,
                },
                4,
                // steep enough that band-edge extrapolation over 180
                // subcarriers stays below the IMD floor
                20.0,
            ),
        };
        Self {
            numerology,
            pa,
            tx_power_dbm: 23.0,
            noise_dbm: -90.0,
            analog_sic_db: 50.0,
            aux_noise_dbm: -60.0,
            channel,
            delay_spread_mult: mult,
            residual_decay_db_per_tap: residual_decay,
            coherence_time_s: f64::INFINITY,
            canceller: CancellerKind::Reconstruction,
            orders: Orders::default(),
            lattice: ScatteredLattice::default(),
            ref_levels: RefLevels::default(),
            n_frames: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.numerology.validate()?;
        if self.n_frames < 2 {
            return Err(FdError::Config(format!(
                "n_frames must be >= 2 (frame 0 is a cold start), got {}",
                self.n_frames
            )));
        }
        if !(self.analog_sic_db >= 0.0) {
            return Err(FdError::Config(format!(
                "analog_sic_db must be >= 0, got {}",
                self.analog_sic_db
            )));
        }
        if !(self.coherence_time_s > 0.0) {
            return Err(FdError::Config("coherence time must be > 0".into()));
        }
        if self.orders.recon_k == 0 || self.orders.precal_k == 0 {
            return Err(FdError::Config("model orders need K >= 1".into()));
        }
        Ok(())
    }

    /// Residual SI channel length after the analog stage.
    pub fn residual_channel_taps(&self) -> usize {
        self.channel.l_taps * self.delay_spread_mult
    }

    pub fn recon_taps(&self) -> usize {
        self.orders
            .recon_taps
            .unwrap_or(self.pa.l_taps() + self.residual_channel_taps())
    }

    pub fn precal_taps(&self) -> usize {
        self.orders.precal_taps.unwrap_or(self.pa.l_taps())
    }

    pub fn linear_taps(&self) -> usize {
        self.orders.linear_taps.unwrap_or(self.recon_taps())
    }

    /// Coefficients estimated per estimation event and events per frame.
    pub fn estimator_dimensions(&self) -> (usize, usize) {
        let n = &self.numerology;
        match self.canceller {
            CancellerKind::Reconstruction => {
                (self.orders.recon_k * self.recon_taps(), n.subframes_per_frame)
            }
            CancellerKind::LinearTime => (self.linear_taps(), n.subframes_per_frame),
            CancellerKind::Precal => (self.orders.precal_k * self.precal_taps(), 1),
            CancellerKind::LinearFreq | CancellerKind::AuxChain => (n.n_sub, 1),
        }
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            numerology: self.numerology.clone(),
            pattern: self.canceller.pattern_kind(),
            lattice: self.lattice.clone(),
            ref_levels: self.ref_levels,
            rs_symbol: 0,
            l0_symbol: 1,
            h0_symbol: 2,
            pa: self.pa.clone(),
            tx_power_dbm: self.tx_power_dbm,
            noise_dbm: self.noise_dbm,
            si_channel: self.channel.clone(),
            analog_sic_db: self.analog_sic_db,
            delay_spread_mult: self.delay_spread_mult,
            residual_decay_db_per_tap: self.residual_decay_db_per_tap,
            coherence_time_s: self.coherence_time_s,
            aux_noise_dbm: match self.canceller {
                CancellerKind::AuxChain => Some(self.aux_noise_dbm),
                _ => None,
            },
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkResult {
    pub canceller: CancellerKind,
    pub coherence_time_s: f64,
    pub seed: u64,
    /// Digital cancellation per subframe, cold-start frame excluded.
    pub cancellation_db: Vec<f64>,
    pub mean_db: f64,
    pub median_db: f64,
    pub analog_sic_db: f64,
    /// `analog_sic_db + mean_db`.
    pub total_mean_db: f64,
    /// Mean transmit EVM (RMS ratio) over the counted frames.
    pub tx_evm: f64,
    /// Simulated air time covered by the run.
    pub sim_time_s: f64,
    pub coeffs_per_estimate: usize,
    pub estimates_per_frame: usize,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Build `n_frames` frames, cancel each with the configured method and
/// summarize. Frame 0 is excluded from the statistics.
pub fn run_link(cfg: &LinkConfig) -> Result<LinkResult> {
    cfg.validate()?;
    let mut builder = ScenarioBuilder::new(cfg.scenario())?;
    let mut series = Vec::new();
    let mut evms = Vec::new();
    let mut precal = Precalibrator::identity();
    for f in 0..cfg.n_frames {
        let (trace, res) = match cfg.canceller {
            CancellerKind::Precal => {
                let (t, r) = cancel_precalibrated(&mut builder, &precal)?;
                precal = refit_precalibrator(&t, cfg.orders.precal_k, cfg.precal_taps())
                    .map_err(|e| e.in_frame(f))?;
                (t, r)
            }
            kind => {
                let t = builder.next_frame(None)?;
                let r = match kind {
                    CancellerKind::LinearFreq => cancel_linear_freq(&t),
                    CancellerKind::AuxChain => cancel_aux_chain(&t),
                    CancellerKind::Reconstruction => {
                        cancel_reconstruction(&t, cfg.orders.recon_k, cfg.recon_taps())
                    }
                    CancellerKind::LinearTime => cancel_linear_time(&t, cfg.linear_taps()),
                    CancellerKind::Precal => unreachable!(),
                }
                .map_err(|e| e.in_frame(f))?;
                (t, r)
            }
        };
        if f == 0 {
            continue;
        }
        let si = trace.si_power_per_subframe()?;
        series.extend(cancellation_db(&si, &res.per_subframe_power_dbm)?);
        evms.push(transmit_evm(&trace)?);
    }
    let num = &cfg.numerology;
    let frame_s = num.symbols_per_frame() as f64 * num.symbol_duration_s();
    let mean_db = mean(&series);
    let (coeffs_per_estimate, estimates_per_frame) = cfg.estimator_dimensions();
    Ok(LinkResult {
        canceller: cfg.canceller,
        coherence_time_s: cfg.coherence_time_s,
        seed: cfg.seed,
        median_db: median(&series),
        mean_db,
        analog_sic_db: cfg.analog_sic_db,
        total_mean_db: cfg.analog_sic_db + mean_db,
        tx_evm: mean(&evms),
        sim_time_s: cfg.n_frames as f64 * frame_s,
        coeffs_per_estimate,
        estimates_per_frame,
        cancellation_db: series,
    })
}

/// Run independent configurations; each entry's outcome is isolated.
pub fn sweep(configs: &[LinkConfig]) -> Vec<Result<LinkResult>> {
    configs.iter().map(run_link).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!(mean(&[]).is_nan());
    }

    #[test]
    fn fading_section_resolution() {
        let mut f = FadingSection::default();
        assert_eq!(f.coherence_time_s().unwrap(), f64::INFINITY);
        f.speed_kmh = Some(60.0);
        assert!((f.coherence_time_s().unwrap() - 7.142857e-3).abs() < 1e-8);
        f.coherence_time_ms = Some(5.0);
        assert!(f.coherence_time_s().is_err());
    }

    #[test]
    fn link_file_rejects_unknown_key() {
        let text = "schema_version = 1\npa = { path = \"x.toml\" }\ncancellers = [\"precal\"]\nseeds = [1]\nbogus = 2\n";
        let e = LinkFile::parse(text).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn one_frame_is_rejected() {
        let mut c = LinkConfig::defaults(Profile::Reduced, HammersteinModel::identity());
        c.n_frames = 1;
        assert!(run_link(&c).unwrap_err().is_config());
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(&[]).is_empty());
    }
}
