//! OFDM baseband construction: numerology, resource grids, reference-signal
//! patterns and extended-CP modulation.
//!
//! Subcarrier `i` of a grid maps to FFT bin [`Numerology::bin_of`]; the lower
//! half of the used band sits below DC, the upper half above it, and the DC
//! bin itself is never used. The DFT is normalized by `1/sqrt(n_fft)` in both
//! directions, so the energy of one symbol (CP excluded) equals the energy of
//! its grid column.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{db_to_lin, FdError, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerology {
    /// Samples per OFDM symbol, CP excluded. Power of two.
    pub n_fft: usize,
    /// Used subcarriers.
    pub n_sub: usize,
    pub cp_len: usize,
    pub scs_hz: f64,
    pub symbols_per_subframe: usize,
    pub subframes_per_frame: usize,
}

impl Numerology {
    /// 20 MHz LTE-like numerology with extended cyclic prefix.
    pub fn lte_extended_cp() -> Self {
        Self {
            n_fft: 2048,
            n_sub: 1200,
            cp_len: 512,
            scs_hz: 15e3,
            symbols_per_subframe: 12,
            subframes_per_frame: 10,
        }
    }

    /// Same symbol timing as [`Numerology::lte_extended_cp`] at 1/8 of the
    /// sample rate. Used by tests and quick runs.
    pub fn reduced() -> Self {
        Self {
            n_fft: 256,
            n_sub: 180,
            cp_len: 64,
            scs_hz: 15e3,
            symbols_per_subframe: 12,
            subframes_per_frame: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 2 || !self.n_fft.is_power_of_two() {
            return Err(FdError::Config(format!(
                "n_fft must be a power of two >= 2, got {}",
                self.n_fft
            )));
        }
        if self.n_sub == 0 || self.n_sub >= self.n_fft {
            return Err(FdError::Config(format!(
                "n_sub must be in 1..n_fft (DC is never used), got {} for n_fft {}",
                self.n_sub, self.n_fft
            )));
        }
        if !(self.scs_hz.is_finite() && self.scs_hz > 0.0) {
            return Err(FdError::Config("scs_hz must be positive".into()));
        }
        if self.symbols_per_subframe == 0 || self.subframes_per_frame == 0 {
            return Err(FdError::Config(
                "symbols_per_subframe and subframes_per_frame must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.n_fft as f64 * self.scs_hz
    }

    /// Samples per symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.cp_len
    }

    pub fn symbol_duration_s(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate_hz()
    }

    pub fn subframe_duration_s(&self) -> f64 {
        self.symbols_per_subframe as f64 * self.symbol_duration_s()
    }

    pub fn symbols_per_frame(&self) -> usize {
        self.symbols_per_subframe * self.subframes_per_frame
    }

    pub fn frame_len(&self) -> usize {
        self.symbols_per_frame() * self.symbol_len()
    }

    /// Fraction of air time carrying the useful part of a symbol.
    pub fn cp_efficiency(&self) -> f64 {
        self.n_fft as f64 / self.symbol_len() as f64
    }

    fn lower_half(&self) -> usize {
        self.n_sub / 2
    }

    /// FFT bin carrying used subcarrier `sub`.
    pub fn bin_of(&self, sub: usize) -> usize {
        let lower = self.lower_half();
        if sub < lower {
            self.n_fft - lower + sub
        } else {
            sub - lower + 1
        }
    }

    /// Signed frequency offset of subcarrier `sub` in units of the spacing.
    pub fn freq_offset(&self, sub: usize) -> f64 {
        let lower = self.lower_half() as f64;
        if (sub as f64) < lower {
            sub as f64 - lower
        } else {
            sub as f64 - lower + 1.0
        }
    }

    /// Whether FFT bin `bin` is one of the used subcarriers.
    pub fn bin_is_used(&self, bin: usize) -> bool {
        let lower = self.lower_half();
        let upper = self.n_sub - lower;
        (bin >= 1 && bin <= upper) || (bin >= self.n_fft - lower && bin < self.n_fft)
    }
}

/// What a resource element carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReKind {
    Data,
    RefSignal,
    /// Low-power full-band reference (channel sounding in the linear PA region).
    LowPowerRef,
    /// High-power full-band reference (PA distortion measurement).
    HighPowerRef,
    Null,
}

/// `n_sub x n_sym` frequency-domain symbol grid, stored symbol-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_sub: usize,
    n_sym: usize,
    symbols: Vec<C64>,
    re_kind: Vec<ReKind>,
}

impl ResourceGrid {
    pub fn zeros(n_sub: usize, n_sym: usize) -> Self {
        Self {
            n_sub,
            n_sym,
            symbols: vec![C64::new(0.0, 0.0); n_sub * n_sym],
            re_kind: vec![ReKind::Data; n_sub * n_sym],
        }
    }

    pub fn from_parts(
        n_sub: usize,
        n_sym: usize,
        symbols: Vec<C64>,
        re_kind: Vec<ReKind>,
    ) -> Result<Self> {
        if symbols.len() != n_sub * n_sym || re_kind.len() != n_sub * n_sym {
            return Err(FdError::Config(format!(
                "grid parts do not match {n_sub}x{n_sym}"
            )));
        }
        Ok(Self {
            n_sub,
            n_sym,
            symbols,
            re_kind,
        })
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    #[inline]
    fn idx(&self, sub: usize, sym: usize) -> usize {
        debug_assert!(sub < self.n_sub && sym < self.n_sym);
        sym * self.n_sub + sub
    }

    pub fn get(&self, sub: usize, sym: usize) -> C64 {
        self.symbols[self.idx(sub, sym)]
    }

    pub fn set(&mut self, sub: usize, sym: usize, v: C64) {
        let i = self.idx(sub, sym);
        self.symbols[i] = v;
    }

    pub fn kind(&self, sub: usize, sym: usize) -> ReKind {
        self.re_kind[self.idx(sub, sym)]
    }

    pub fn set_kind(&mut self, sub: usize, sym: usize, k: ReKind) {
        let i = self.idx(sub, sym);
        self.re_kind[i] = k;
    }

    pub fn column(&self, sym: usize) -> &[C64] {
        &self.symbols[sym * self.n_sub..(sym + 1) * self.n_sub]
    }

    pub fn column_mut(&mut self, sym: usize) -> &mut [C64] {
        let n = self.n_sub;
        &mut self.symbols[sym * n..(sym + 1) * n]
    }

    pub fn kinds_column(&self, sym: usize) -> &[ReKind] {
        &self.re_kind[sym * self.n_sub..(sym + 1) * self.n_sub]
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn kinds(&self) -> &[ReKind] {
        &self.re_kind
    }

    /// Copy the RE markers of `other` (same dimensions) onto this grid.
    pub fn with_kinds_of(mut self, other: &ResourceGrid) -> Result<Self> {
        if other.n_sub != self.n_sub || other.n_sym != self.n_sym {
            return Err(FdError::Config("grid dimension mismatch".into()));
        }
        self.re_kind.clone_from(&other.re_kind);
        Ok(self)
    }

    /// Mean power of the elements of `kind` within symbols `syms`.
    pub fn mean_power(&self, syms: std::ops::Range<usize>, kind: ReKind) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for sym in syms {
            for sub in 0..self.n_sub {
                let i = self.idx(sub, sym);
                if self.re_kind[i] == kind {
                    acc += self.symbols[i].norm_sqr();
                    n += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }
}

/// Time-domain complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<C64>,
    pub sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<C64>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); len], sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }

    pub fn power_dbm(&self) -> f64 {
        crate::power_dbm(&self.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    /// One full-band reference symbol per subframe.
    FullSymbolPerSubframe,
    /// LTE-like cell-specific lattice.
    ScatteredCellSpecific,
    /// Cell-specific lattice plus one L0 and one H0 symbol per frame.
    PrecalFrame,
    /// No reference elements at all.
    Empty,
}

/// Geometry of the scattered cell-specific lattice, repeated every slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteredLattice {
    /// Subcarrier spacing between RS elements on one RS symbol.
    pub spacing: usize,
    pub slot_symbols: usize,
    /// `(symbol within slot, subcarrier offset)` of each RS symbol.
    pub rs_symbols: Vec<(usize, usize)>,
    /// Cell-specific frequency shift added to every offset.
    pub v_shift: usize,
}

impl Default for ScatteredLattice {
    /// One antenna port, extended CP: symbols 0 and 3 of each 6-symbol slot,
    /// every 6th subcarrier, staggered by 3.
    fn default() -> Self {
        Self {
            spacing: 6,
            slot_symbols: 6,
            rs_symbols: vec![(0, 0), (3, 3)],
            v_shift: 0,
        }
    }
}

/// Which resource elements carry reference symbols, over one repetition
/// period.
#[derive(Debug, Clone, PartialEq)]
pub struct RsPattern {
    kind: PatternKind,
    period_symbols: usize,
    n_sub: usize,
    mask: Vec<ReKind>,
}

impl RsPattern {
    fn blank(kind: PatternKind, period_symbols: usize, n_sub: usize) -> Self {
        Self {
            kind,
            period_symbols,
            n_sub,
            mask: vec![ReKind::Data; period_symbols * n_sub],
        }
    }

    fn mark_symbol(&mut self, sym: usize, k: ReKind) {
        for sub in 0..self.n_sub {
            self.mask[sym * self.n_sub + sub] = k;
        }
    }

    pub fn empty(num: &Numerology) -> Self {
        Self::blank(PatternKind::Empty, num.symbols_per_subframe, num.n_sub)
    }

    /// A full-band reference symbol at `rs_symbol` of every subframe.
    pub fn full_symbol_per_subframe(num: &Numerology, rs_symbol: usize) -> Result<Self> {
        if rs_symbol >= num.symbols_per_subframe {
            return Err(FdError::Config(format!(
                "reference symbol {rs_symbol} outside a {}-symbol subframe",
                num.symbols_per_subframe
            )));
        }
        let mut p = Self::blank(
            PatternKind::FullSymbolPerSubframe,
            num.symbols_per_subframe,
            num.n_sub,
        );
        p.mark_symbol(rs_symbol, ReKind::RefSignal);
        Ok(p)
    }

    pub fn scattered(num: &Numerology, lattice: &ScatteredLattice) -> Result<Self> {
        let mut p = Self::blank(
            PatternKind::ScatteredCellSpecific,
            lattice.slot_symbols,
            num.n_sub,
        );
        p.fill_lattice(lattice)?;
        Ok(p)
    }

    /// Cell-specific lattice over a whole frame plus one low-power (`l0`) and
    /// one high-power (`h0`) full-band symbol. Symbol indices are within the
    /// frame and must not collide with lattice symbols.
    pub fn precal_frame(
        num: &Numerology,
        lattice: &ScatteredLattice,
        l0_symbol: usize,
        h0_symbol: usize,
    ) -> Result<Self> {
        let period = num.symbols_per_frame();
        let mut p = Self::blank(PatternKind::PrecalFrame, period, num.n_sub);
        p.fill_lattice(lattice)?;
        for (name, s) in [("l0", l0_symbol), ("h0", h0_symbol)] {
            if s >= period {
                return Err(FdError::Config(format!(
                    "{name} symbol {s} outside a {period}-symbol frame"
                )));
            }
            if p.mask[s * p.n_sub..(s + 1) * p.n_sub]
                .iter()
                .any(|k| *k != ReKind::Data)
            {
                return Err(FdError::Config(format!(
                    "{name} symbol {s} collides with another reference symbol"
                )));
            }
            let k = if name == "l0" {
                ReKind::LowPowerRef
            } else {
                ReKind::HighPowerRef
            };
            p.mark_symbol(s, k);
        }
        Ok(p)
    }

    fn fill_lattice(&mut self, lat: &ScatteredLattice) -> Result<()> {
        if lat.spacing == 0 || lat.slot_symbols == 0 {
            return Err(FdError::Config("lattice spacing and slot length must be >= 1".into()));
        }
        if self.period_symbols % lat.slot_symbols != 0 {
            return Err(FdError::Config(format!(
                "slot of {} symbols does not tile a {}-symbol period",
                lat.slot_symbols, self.period_symbols
            )));
        }
        for &(sym, _) in &lat.rs_symbols {
            if sym >= lat.slot_symbols {
                return Err(FdError::Config(format!(
                    "lattice symbol {sym} outside a {}-symbol slot",
                    lat.slot_symbols
                )));
            }
        }
        for slot in 0..self.period_symbols / lat.slot_symbols {
            for &(sym, off) in &lat.rs_symbols {
                let s = slot * lat.slot_symbols + sym;
                let first = (off + lat.v_shift) % lat.spacing;
                for sub in (first..self.n_sub).step_by(lat.spacing) {
                    self.mask[s * self.n_sub + sub] = ReKind::RefSignal;
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn period_symbols(&self) -> usize {
        self.period_symbols
    }

    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    /// Marker for subcarrier `sub` of absolute symbol `sym`.
    pub fn kind_at(&self, sub: usize, sym: usize) -> ReKind {
        self.mask[(sym % self.period_symbols) * self.n_sub + sub]
    }

    /// All non-data `(subcarrier, symbol)` positions within one period.
    pub fn re_positions(&self) -> Vec<(usize, usize, ReKind)> {
        let mut out = Vec::new();
        for sym in 0..self.period_symbols {
            for sub in 0..self.n_sub {
                let k = self.mask[sym * self.n_sub + sub];
                if k != ReKind::Data {
                    out.push((sub, sym, k));
                }
            }
        }
        out
    }

    /// Symbols (within one period) holding at least one element of `kind`.
    pub fn symbols_with(&self, kind: ReKind) -> Vec<usize> {
        (0..self.period_symbols)
            .filter(|&s| {
                self.mask[s * self.n_sub..(s + 1) * self.n_sub]
                    .iter()
                    .any(|k| *k == kind)
            })
            .collect()
    }

    pub fn check(&self, num: &Numerology) -> Result<()> {
        if self.n_sub != num.n_sub {
            return Err(FdError::Config(format!(
                "pattern built for {} subcarriers, numerology has {}",
                self.n_sub, num.n_sub
            )));
        }
        if num.symbols_per_frame() % self.period_symbols != 0 {
            return Err(FdError::Config(format!(
                "pattern period of {} symbols does not tile a {}-symbol frame",
                self.period_symbols,
                num.symbols_per_frame()
            )));
        }
        Ok(())
    }
}

/// Power levels of the full-band calibration symbols relative to nominal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefLevels {
    pub l0_backoff_db: f64,
    pub h0_level_db: f64,
}

impl Default for RefLevels {
    fn default() -> Self {
        Self {
            l0_backoff_db: -15.0,
            h0_level_db: 0.0,
        }
    }
}

const QPSK_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn qpsk(bits: u32) -> C64 {
    let re = if bits & 1 == 0 { QPSK_SCALE } else { -QPSK_SCALE };
    let im = if bits & 2 == 0 { QPSK_SCALE } else { -QPSK_SCALE };
    C64::new(re, im)
}

/// One frame of unit-power QPSK data and reference symbols laid out per
/// `pattern`, with default calibration-symbol levels.
pub fn build_grid(
    num: &Numerology,
    pattern: &RsPattern,
    data_seed: u64,
    rs_seed: u64,
) -> Result<ResourceGrid> {
    build_grid_with(num, pattern, data_seed, rs_seed, &RefLevels::default())
}

pub fn build_grid_with(
    num: &Numerology,
    pattern: &RsPattern,
    data_seed: u64,
    rs_seed: u64,
    levels: &RefLevels,
) -> Result<ResourceGrid> {
    num.validate()?;
    pattern.check(num)?;
    let n_sym = num.symbols_per_frame();
    let mut grid = ResourceGrid::zeros(num.n_sub, n_sym);
    let mut data_rng = ChaCha8Rng::seed_from_u64(data_seed);
    let mut rs_rng = ChaCha8Rng::seed_from_u64(rs_seed);
    let l0 = db_to_lin(levels.l0_backoff_db).sqrt();
    let h0 = db_to_lin(levels.h0_level_db).sqrt();
    for sym in 0..n_sym {
        for sub in 0..num.n_sub {
            let k = pattern.kind_at(sub, sym);
            let v = match k {
                ReKind::Data => qpsk(data_rng.next_u32()),
                ReKind::RefSignal => qpsk(rs_rng.next_u32()),
                ReKind::LowPowerRef => qpsk(rs_rng.next_u32()) * l0,
                ReKind::HighPowerRef => qpsk(rs_rng.next_u32()) * h0,
                ReKind::Null => C64::new(0.0, 0.0),
            };
            grid.set(sub, sym, v);
            grid.set_kind(sub, sym, k);
        }
    }
    Ok(grid)
}

/// Per-symbol inverse DFT with cyclic-prefix insertion.
pub fn ofdm_modulate(grid: &ResourceGrid, num: &Numerology) -> Result<Waveform> {
    num.validate()?;
    if grid.n_sub() != num.n_sub {
        return Err(FdError::Config(format!(
            "grid has {} subcarriers, numerology {}",
            grid.n_sub(),
            num.n_sub
        )));
    }
    let n = num.n_fft;
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = Vec::with_capacity(grid.n_sym() * num.symbol_len());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for sym in 0..grid.n_sym() {
        buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
        for (sub, v) in grid.column(sym).iter().enumerate() {
            buf[num.bin_of(sub)] = *v;
        }
        ifft.process(&mut buf);
        buf.iter_mut().for_each(|b| *b *= scale);
        out.extend_from_slice(&buf[n - num.cp_len..]);
        out.extend_from_slice(&buf);
    }
    Ok(Waveform::new(out, num.sample_rate_hz()))
}

/// Strip the cyclic prefix of every symbol and return the used subcarriers.
/// All elements are marked [`ReKind::Data`].
pub fn ofdm_demodulate(wave: &Waveform, num: &Numerology) -> Result<ResourceGrid> {
    num.validate()?;
    let sl = num.symbol_len();
    if wave.len() % sl != 0 {
        return Err(FdError::Framing {
            len: wave.len(),
            symbol_len: sl,
        });
    }
    let n = num.n_fft;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = 1.0 / (n as f64).sqrt();
    let n_sym = wave.len() / sl;
    let mut grid = ResourceGrid::zeros(num.n_sub, n_sym);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for sym in 0..n_sym {
        let start = sym * sl + num.cp_len;
        buf.copy_from_slice(&wave.samples[start..start + n]);
        fft.process(&mut buf);
        let col = grid.column_mut(sym);
        for (sub, c) in col.iter_mut().enumerate() {
            *c = buf[num.bin_of(sub)] * scale;
        }
    }
    Ok(grid)
}

/// Reference elements (RS, L0, H0) over total elements within one period.
pub fn overhead_ratio(pattern: &RsPattern, num: &Numerology) -> f64 {
    let _ = num;
    let total = pattern.mask.len();
    if total == 0 {
        return 0.0;
    }
    let rs = pattern
        .mask
        .iter()
        .filter(|k| {
            matches!(
                k,
                ReKind::RefSignal | ReKind::LowPowerRef | ReKind::HighPowerRef
            )
        })
        .count();
    rs as f64 / total as f64
}
