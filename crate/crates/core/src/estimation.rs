//! Least-squares fitters: linear taps in the time domain, per-subcarrier
//! channel estimates with interpolation, parallel Hammerstein coefficients,
//! and the transmit pre-calibrator (postinverse used as a preinverse).

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rustfft::FftPlanner;

use crate::impairments::HammersteinModel;
use crate::linalg::solve_ls;
use crate::signal::{Numerology, ReKind, ResourceGrid, RsPattern, Waveform};
use crate::{FdError, Result, C64};

/// Equalizer guard: `|H| < GUARD * median |H|` is ill-conditioned.
pub const EQUALIZATION_GUARD: f64 = 1e-3;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Linear taps minimizing `||rx - conv(taps, tx)||` over all of `tx`.
pub fn ls_fit_time_domain(tx_ref: &Waveform, rx: &Waveform, l_taps: usize) -> Result<Vec<C64>> {
    if rx.len() < tx_ref.len() {
        return Err(FdError::Config(format!(
            "rx has {} samples, fewer than the {}-sample reference",
            rx.len(),
            tx_ref.len()
        )));
    }
    ls_fit_time_domain_window(&tx_ref.samples, &rx.samples, l_taps, 0..tx_ref.len())
}

/// As [`ls_fit_time_domain`], using only output rows `rows`. Samples of `tx`
/// before `rows.start` act as channel memory.
pub fn ls_fit_time_domain_window(
    tx: &[C64],
    rx: &[C64],
    l_taps: usize,
    rows: Range<usize>,
) -> Result<Vec<C64>> {
    if l_taps == 0 {
        return Err(FdError::Config("need at least one tap".into()));
    }
    if rows.end > tx.len() || rows.end > rx.len() {
        return Err(FdError::Config("fit window exceeds the signals".into()));
    }
    let lo = rows.start.saturating_sub(l_taps - 1);
    let nonzero = tx[lo..rows.end].iter().filter(|s| s.norm_sqr() > 0.0).count();
    if nonzero < l_taps {
        return Err(FdError::Singular {
            column: nonzero,
            label: format!("{nonzero} nonzero reference samples for {l_taps} taps"),
        });
    }
    let a = DMatrix::from_fn(rows.len(), l_taps, |i, d| {
        let n = rows.start + i;
        if n >= d {
            tx[n - d]
        } else {
            zero()
        }
    });
    let b = DVector::from_iterator(rows.len(), rx[rows.clone()].iter().copied());
    let x = solve_ls(a, b, |d| format!("tap {d}"))?;
    Ok(x.iter().copied().collect())
}

/// Per-RE channel estimate covering every used subcarrier of every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqChannelEstimate {
    n_sub: usize,
    n_sym: usize,
    h: Vec<C64>,
    /// `(subcarrier, symbol)` of the raw LS points.
    pub rs_positions: Vec<(usize, usize)>,
    /// Symbols that carried reference elements (time-interpolation knots).
    pub rs_symbols: Vec<usize>,
}

impl FreqChannelEstimate {
    pub fn n_sub(&self) -> usize {
        self.n_sub
    }

    pub fn n_sym(&self) -> usize {
        self.n_sym
    }

    pub fn at(&self, sub: usize, sym: usize) -> C64 {
        self.h[sym * self.n_sub + sub]
    }

    pub fn column(&self, sym: usize) -> &[C64] {
        &self.h[sym * self.n_sub..(sym + 1) * self.n_sub]
    }
}

/// Piecewise-linear interpolation through `(xs, ys)` (sorted `xs`), holding
/// the nearest value outside the knots.
fn interp(xs: &[f64], ys: &[C64], x: f64) -> C64 {
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - t) + ys[j] * t
}

/// Divide received reference elements by the reference, then interpolate
/// linearly across frequency on every reference symbol and across time for
/// every subcarrier.
pub fn ls_fit_freq_domain(
    rx_grid: &ResourceGrid,
    pattern: &RsPattern,
    ref_grid: &ResourceGrid,
    num: &Numerology,
) -> Result<FreqChannelEstimate> {
    if rx_grid.n_sub() != ref_grid.n_sub()
        || rx_grid.n_sym() != ref_grid.n_sym()
        || rx_grid.n_sub() != num.n_sub
    {
        return Err(FdError::Config("grid dimension mismatch".into()));
    }
    let (n_sub, n_sym) = (rx_grid.n_sub(), rx_grid.n_sym());
    let freqs: Vec<f64> = (0..n_sub).map(|s| num.freq_offset(s)).collect();

    let mut rs_positions = Vec::new();
    let mut rs_symbols = Vec::new();
    let mut per_symbol: Vec<Vec<C64>> = Vec::new();
    for sym in 0..n_sym {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for sub in 0..n_sub {
            if pattern.kind_at(sub, sym) != ReKind::RefSignal {
                continue;
            }
            let r = ref_grid.get(sub, sym);
            if r.norm_sqr() == 0.0 {
                return Err(FdError::ZeroReference {
                    subcarrier: sub,
                    symbol: sym,
                });
            }
            xs.push(freqs[sub]);
            ys.push(rx_grid.get(sub, sym) / r);
            rs_positions.push((sub, sym));
        }
        if xs.is_empty() {
            continue;
        }
        rs_symbols.push(sym);
        per_symbol.push(freqs.iter().map(|&f| interp(&xs, &ys, f)).collect());
    }
    if rs_symbols.is_empty() {
        return Err(FdError::Config(
            "pattern places no reference elements in this grid".into(),
        ));
    }

    let knots: Vec<f64> = rs_symbols.iter().map(|&s| s as f64).collect();
    let mut h = vec![zero(); n_sub * n_sym];
    let mut col = vec![zero(); rs_symbols.len()];
    for sub in 0..n_sub {
        for (c, est) in col.iter_mut().zip(&per_symbol) {
            *c = est[sub];
        }
        for sym in 0..n_sym {
            h[sym * n_sub + sub] = interp(&knots, &col, sym as f64);
        }
    }
    Ok(FreqChannelEstimate {
        n_sub,
        n_sym,
        h,
        rs_positions,
        rs_symbols,
    })
}

/// Single-symbol LS estimate from a full-band reference symbol.
pub fn estimate_full_symbol(rx: &[C64], reference: &[C64]) -> Result<FreqChannelEstimate> {
    if rx.len() != reference.len() {
        return Err(FdError::Config("reference and received lengths differ".into()));
    }
    let mut h = Vec::with_capacity(rx.len());
    for (sub, (y, r)) in rx.iter().zip(reference).enumerate() {
        if r.norm_sqr() == 0.0 {
            return Err(FdError::ZeroReference {
                subcarrier: sub,
                symbol: 0,
            });
        }
        h.push(y / r);
    }
    Ok(FreqChannelEstimate {
        n_sub: rx.len(),
        n_sym: 1,
        rs_positions: (0..rx.len()).map(|s| (s, 0)).collect(),
        rs_symbols: vec![0],
        h,
    })
}

fn branch_label(l_taps: usize) -> impl Fn(usize) -> String {
    move |j| {
        let (k, l) = (j / l_taps, j % l_taps);
        format!("b[{k}][{l}]: order {} tap {l}", 2 * k + 1)
    }
}

/// `|x|^(2k) x` for `k = 0..K` over `span`.
fn branches(span: &[C64], k_terms: usize) -> Vec<Vec<C64>> {
    let mags: Vec<f64> = span.iter().map(|s| s.norm_sqr()).collect();
    let mut out = Vec::with_capacity(k_terms);
    let mut cur = span.to_vec();
    for k in 0..k_terms {
        if k > 0 {
            for (c, m) in cur.iter_mut().zip(&mags) {
                *c *= *m;
            }
        }
        out.push(cur.clone());
    }
    out
}

fn basis_window(x: &[C64], k_terms: usize, l_taps: usize, rows: Range<usize>) -> DMatrix<C64> {
    let br = branches(&x[..rows.end], k_terms);
    DMatrix::from_fn(rows.len(), k_terms * l_taps, |i, j| {
        let (k, l) = (j / l_taps, j % l_taps);
        let n = rows.start + i;
        if n >= l {
            br[k][n - l]
        } else {
            zero()
        }
    })
}

fn basis_cyclic(x: &[C64], k_terms: usize, l_taps: usize) -> DMatrix<C64> {
    let n = x.len();
    let br = branches(x, k_terms);
    DMatrix::from_fn(n, k_terms * l_taps, |i, j| {
        let (k, l) = (j / l_taps, j % l_taps);
        br[k][(i + n - l % n) % n]
    })
}

/// Regression matrix with one row per sample and column `k*L + l` holding
/// `|x[n-l]|^(2k) x[n-l]` (zero before the start).
pub fn build_hammerstein_basis(x: &Waveform, k_terms: usize, l_taps: usize) -> Result<DMatrix<C64>> {
    if k_terms == 0 || l_taps == 0 {
        return Err(FdError::Config("K and L must be >= 1".into()));
    }
    if x.len() < k_terms * l_taps {
        return Err(FdError::Undetermined {
            rows: x.len(),
            unknowns: k_terms * l_taps,
        });
    }
    Ok(basis_window(&x.samples, k_terms, l_taps, 0..x.len()))
}

pub fn ls_fit_hammerstein(
    x: &Waveform,
    y: &Waveform,
    k_terms: usize,
    l_taps: usize,
) -> Result<HammersteinModel> {
    if y.len() < x.len() {
        return Err(FdError::Config(format!(
            "output has {} samples, input {}",
            y.len(),
            x.len()
        )));
    }
    ls_fit_hammerstein_window(&x.samples, &y.samples, k_terms, l_taps, 0..x.len())
}

/// Fit on output rows `rows` only; earlier input samples act as memory.
pub fn ls_fit_hammerstein_window(
    x: &[C64],
    y: &[C64],
    k_terms: usize,
    l_taps: usize,
    rows: Range<usize>,
) -> Result<HammersteinModel> {
    if k_terms == 0 || l_taps == 0 {
        return Err(FdError::Config("K and L must be >= 1".into()));
    }
    if rows.end > x.len() || rows.end > y.len() {
        return Err(FdError::Config("fit window exceeds the signals".into()));
    }
    if rows.len() < k_terms * l_taps {
        return Err(FdError::Undetermined {
            rows: rows.len(),
            unknowns: k_terms * l_taps,
        });
    }
    let a = basis_window(x, k_terms, l_taps, rows.clone());
    let b = DVector::from_iterator(rows.len(), y[rows].iter().copied());
    let c = solve_ls(a, b, branch_label(l_taps))?;
    HammersteinModel::new(k_terms, l_taps, c.iter().copied().collect())
}

/// Hammerstein fit over one cyclic OFDM symbol (`n_fft` samples, CP
/// removed), matching only the used subcarriers. Energy the model puts
/// outside the band is not penalized.
pub fn ls_fit_hammerstein_in_band(
    x: &[C64],
    y: &[C64],
    k_terms: usize,
    l_taps: usize,
    num: &Numerology,
) -> Result<HammersteinModel> {
    let n = num.n_fft;
    if x.len() != n || y.len() != n {
        return Err(FdError::Config(format!(
            "in-band fit needs one {n}-sample symbol, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if num.n_sub < k_terms * l_taps {
        return Err(FdError::Undetermined {
            rows: num.n_sub,
            unknowns: k_terms * l_taps,
        });
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let basis = basis_cyclic(x, k_terms, l_taps);
    let cols = k_terms * l_taps;
    let mut a = DMatrix::from_element(num.n_sub, cols, zero());
    let mut buf = vec![zero(); n];
    for j in 0..cols {
        buf.copy_from_slice(basis.column(j).as_slice());
        fft.process(&mut buf);
        for sub in 0..num.n_sub {
            a[(sub, j)] = buf[num.bin_of(sub)];
        }
    }
    buf.copy_from_slice(y);
    fft.process(&mut buf);
    let b = DVector::from_iterator(num.n_sub, (0..num.n_sub).map(|s| buf[num.bin_of(s)]));
    let c = solve_ls(a, b, branch_label(l_taps))?;
    HammersteinModel::new(k_terms, l_taps, c.iter().copied().collect())
}

/// Equalize one received high-power symbol by a channel estimate and return
/// the time-domain PA output estimate (`n_fft` samples, no CP).
pub fn recover_pa_output(rx_h0: &[C64], chan: &[C64], num: &Numerology) -> Result<Waveform> {
    if rx_h0.len() != num.n_sub || chan.len() != num.n_sub {
        return Err(FdError::Config(format!(
            "expected {} subcarriers, got {} received and {} channel",
            num.n_sub,
            rx_h0.len(),
            chan.len()
        )));
    }
    let mut mags: Vec<f64> = chan.iter().map(|h| h.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let median = mags[mags.len() / 2];
    let bad: Vec<usize> = chan
        .iter()
        .enumerate()
        .filter(|(_, h)| !(h.norm() >= EQUALIZATION_GUARD * median) || median == 0.0)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(FdError::IllConditioned { subcarriers: bad });
    }
    let n = num.n_fft;
    let mut buf = vec![zero(); n];
    for (sub, (y, h)) in rx_h0.iter().zip(chan).enumerate() {
        buf[num.bin_of(sub)] = y / h;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(Waveform::new(buf, num.sample_rate_hz()))
}

/// Polynomial pre-calibration function applied ahead of the PA.
#[derive(Debug, Clone, PartialEq)]
pub struct Precalibrator {
    pub model: HammersteinModel,
    /// Desired small-signal gain of the linearized PA.
    pub target_gain: C64,
}

impl Precalibrator {
    pub fn identity() -> Self {
        Self {
            model: HammersteinModel::identity(),
            target_gain: C64::new(1.0, 0.0),
        }
    }

    pub fn n_coeffs(&self) -> usize {
        self.model.n_coeffs()
    }
}

fn check_gain(g: C64) -> Result<()> {
    if g.norm_sqr() == 0.0 || !g.re.is_finite() || !g.im.is_finite() {
        return Err(FdError::Config("pre-calibrator target gain must be nonzero".into()));
    }
    Ok(())
}

/// Fit the reversed PA function: regressor `pa_out_est / g`, response
/// `pa_in`. Applying the result before the PA approximates gain `g`.
pub fn fit_precalibrator(
    pa_in: &Waveform,
    pa_out_est: &Waveform,
    k_terms: usize,
    l_taps: usize,
    target_gain: C64,
) -> Result<Precalibrator> {
    check_gain(target_gain)?;
    let reg = Waveform::new(
        pa_out_est.samples.iter().map(|s| s / target_gain).collect(),
        pa_out_est.sample_rate_hz,
    );
    let model = ls_fit_hammerstein(&reg, pa_in, k_terms, l_taps)?;
    Ok(Precalibrator { model, target_gain })
}

/// As [`fit_precalibrator`] for one cyclic symbol, matched on the used
/// subcarriers only (the receiver never observes the PA's out-of-band
/// output).
pub fn fit_precalibrator_in_band(
    pa_in: &[C64],
    pa_out_est: &[C64],
    k_terms: usize,
    l_taps: usize,
    target_gain: C64,
    num: &Numerology,
) -> Result<Precalibrator> {
    check_gain(target_gain)?;
    let reg: Vec<C64> = pa_out_est.iter().map(|s| s / target_gain).collect();
    let model = ls_fit_hammerstein_in_band(&reg, pa_in, k_terms, l_taps, num)?;
    Ok(Precalibrator { model, target_gain })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impairments::apply_hammerstein;
    use crate::signal::{build_grid, ofdm_modulate, RsPattern, ScatteredLattice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn gaussian(n: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..n)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 2.0)
                .collect(),
            1.0,
        )
    }

    fn conv(h: &[C64], x: &[C64]) -> Vec<C64> {
        (0..x.len())
            .map(|n| (0..h.len()).filter(|&d| d <= n).map(|d| h[d] * x[n - d]).sum())
            .collect()
    }

    fn ofdm_burst(num: &Numerology, seed: u64) -> Waveform {
        let p = RsPattern::empty(num);
        let g = build_grid(num, &p, seed, 0).unwrap();
        ofdm_modulate(&g, num).unwrap()
    }

    #[test]
    fn time_domain_recovers_taps() {
        let x = gaussian(400, 1);
        let h = [c(1.0, 0.2), c(-0.3, 0.1), c(0.05, -0.02)];
        let y = Waveform::new(conv(&h, &x.samples), 1.0);
        let got = ls_fit_time_domain(&x, &y, 3).unwrap();
        for (g, w) in got.iter().zip(&h) {
            assert!((g - w).norm() / w.norm() < 1e-8);
        }
    }

    #[test]
    fn time_domain_scalar_gain() {
        let x = gaussian(10, 2);
        let y = Waveform::new(x.samples.iter().map(|s| s * 2.0).collect(), 1.0);
        let t = ls_fit_time_domain(&x, &y, 1).unwrap();
        assert!((t[0] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn time_domain_zero_reference_is_singular() {
        let x = Waveform::zeros(50, 1.0);
        let y = gaussian(50, 3);
        assert!(matches!(
            ls_fit_time_domain(&x, &y, 2),
            Err(FdError::Singular { .. })
        ));
    }

    #[test]
    fn freq_domain_flat_channel() {
        let num = Numerology::reduced();
        let p = RsPattern::scattered(&num, &ScatteredLattice::default()).unwrap();
        let tx = build_grid(&num, &p, 1, 2).unwrap();
        let h0 = c(0.3, -0.7);
        let mut rx = tx.clone();
        rx.column_mut(0); // keep borrowck simple
        let rx = ResourceGrid::from_parts(
            tx.n_sub(),
            tx.n_sym(),
            tx.symbols().iter().map(|s| s * h0).collect(),
            tx.kinds().to_vec(),
        )
        .unwrap();
        let est = ls_fit_freq_domain(&rx, &p, &tx, &num).unwrap();
        for sym in 0..tx.n_sym() {
            for sub in 0..tx.n_sub() {
                assert!((est.at(sub, sym) - h0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn freq_domain_dense_rs_matches_dft_of_taps() {
        let num = Numerology::reduced();
        let p = RsPattern::full_symbol_per_subframe(&num, 0).unwrap();
        let g = build_grid(&num, &p, 5, 6).unwrap();
        let taps = [c(0.8, 0.1), c(0.0, 0.0), c(-0.25, 0.3)];
        let x = ofdm_modulate(&g, &num).unwrap();
        let y = Waveform::new(conv(&taps, &x.samples), x.sample_rate_hz);
        let rx = crate::signal::ofdm_demodulate(&y, &num).unwrap();
        let est = ls_fit_freq_domain(&rx, &p, &g, &num).unwrap();
        for sub in 0..num.n_sub {
            let bin = num.bin_of(sub) as f64;
            let want: C64 = taps
                .iter()
                .enumerate()
                .map(|(d, t)| {
                    t * C64::from_polar(1.0, -std::f64::consts::TAU * bin * d as f64 / num.n_fft as f64)
                })
                .sum();
            assert!((est.at(sub, 0) - want).norm() < 1e-8);
        }
    }

    #[test]
    fn sparse_rs_reproduces_affine_channel() {
        let num = Numerology::reduced();
        let lat = ScatteredLattice::default();
        let p = RsPattern::scattered(&num, &lat).unwrap();
        let tx = build_grid(&num, &p, 7, 8).unwrap();
        let h = |sub: usize, sym: usize| {
            c(0.5, 0.1) + c(0.01, -0.02) * num.freq_offset(sub) + c(-0.003, 0.004) * sym as f64
        };
        let mut rx = tx.clone();
        for sym in 0..tx.n_sym() {
            for sub in 0..tx.n_sub() {
                rx.set(sub, sym, tx.get(sub, sym) * h(sub, sym));
            }
        }
        let est = ls_fit_freq_domain(&rx, &p, &tx, &num).unwrap();
        let last_rs = *est.rs_symbols.last().unwrap();
        // interior of the lattice (both frequency edges hold the nearest value)
        for sym in 0..=last_rs {
            for sub in 6..num.n_sub - 6 {
                assert!((est.at(sub, sym) - h(sub, sym)).norm() < 1e-12, "sub {sub} sym {sym}");
            }
        }
    }

    #[test]
    fn zero_reference_is_guarded() {
        let num = Numerology::reduced();
        let p = RsPattern::scattered(&num, &ScatteredLattice::default()).unwrap();
        let mut tx = build_grid(&num, &p, 1, 1).unwrap();
        tx.set(6, 0, c(0.0, 0.0));
        let e = ls_fit_freq_domain(&tx.clone(), &p, &tx, &num).unwrap_err();
        assert_eq!(e, FdError::ZeroReference { subcarrier: 6, symbol: 0 });
    }

    #[test]
    fn basis_shape_and_linear_columns() {
        let x = gaussian(40, 9);
        let b = build_hammerstein_basis(&x, 3, 4).unwrap();
        assert_eq!(b.ncols(), 12);
        let lin = build_hammerstein_basis(&x, 1, 3).unwrap();
        for n in 0..40 {
            for l in 0..3 {
                let want = if n >= l { x.samples[n - l] } else { c(0.0, 0.0) };
                assert_eq!(lin[(n, l)], want);
            }
        }
        assert!(matches!(
            build_hammerstein_basis(&gaussian(5, 1), 2, 3),
            Err(FdError::Undetermined { rows: 5, unknowns: 6 })
        ));
    }

    #[test]
    fn constant_modulus_branches_coincide() {
        let x = Waveform::new((0..32).map(|n| C64::from_polar(1.0, 0.7 * n as f64)).collect(), 1.0);
        let b = build_hammerstein_basis(&x, 3, 2).unwrap();
        for n in 0..32 {
            assert!((b[(n, 0)] - b[(n, 2)]).norm() < 1e-15);
            assert!((b[(n, 0)] - b[(n, 4)]).norm() < 1e-15);
        }
        let y = x.clone();
        assert!(matches!(
            ls_fit_hammerstein(&x, &y, 2, 1),
            Err(FdError::Singular { .. })
        ));
    }

    #[test]
    fn hammerstein_fit_recovers_model() {
        let num = Numerology::reduced();
        let x = ofdm_burst(&num, 3);
        let truth = HammersteinModel::new(
            2,
            2,
            vec![c(1.0, 0.05), c(0.08, -0.03), c(-0.04, 0.01), c(0.006, 0.002)],
        )
        .unwrap();
        let y = apply_hammerstein(&truth, &x);
        let fit = ls_fit_hammerstein(&x, &y, 2, 2).unwrap();
        for (g, w) in fit.coeffs().iter().zip(truth.coeffs()) {
            assert!((g - w).norm() / w.norm() < 1e-6);
        }
        let lin = ls_fit_hammerstein(&x, &x, 2, 1).unwrap();
        assert!((lin.coeff(0, 0) - c(1.0, 0.0)).norm() < 1e-6);
        assert!(lin.coeff(1, 0).norm() < 1e-6);
    }

    #[test]
    fn k1_hammerstein_equals_time_domain_fit() {
        let x = gaussian(300, 4);
        let y = gaussian(300, 5);
        let a = ls_fit_time_domain(&x, &y, 4).unwrap();
        let b = ls_fit_hammerstein(&x, &y, 1, 4).unwrap();
        for (p, q) in a.iter().zip(b.coeffs()) {
            assert!((p - q).norm() < 1e-10 * p.norm().max(1.0));
        }
    }

    #[test]
    fn in_band_fit_recovers_in_band_model() {
        let num = Numerology::reduced();
        let x = ofdm_burst(&num, 4);
        let sym = &x.samples[num.cp_len..num.symbol_len()];
        let truth =
            HammersteinModel::new(2, 2, vec![c(0.9, 0.0), c(0.1, 0.02), c(-0.03, 0.01), c(0.004, 0.0)]).unwrap();
        let y = apply_hammerstein(&truth, &x);
        let ysym = &y.samples[num.cp_len..num.symbol_len()];
        let fit = ls_fit_hammerstein_in_band(sym, ysym, 2, 2, &num).unwrap();
        for (g, w) in fit.coeffs().iter().zip(truth.coeffs()) {
            assert!((g - w).norm() / w.norm() < 1e-6);
        }
    }

    #[test]
    fn identity_channel_recovery_is_pass_through() {
        let num = Numerology::reduced();
        let x = ofdm_burst(&num, 5);
        let g = crate::signal::ofdm_demodulate(&x, &num).unwrap();
        let ones = vec![c(1.0, 0.0); num.n_sub];
        let w = recover_pa_output(g.column(0), &ones, &num).unwrap();
        for (a, b) in w.samples.iter().zip(&x.samples[num.cp_len..num.symbol_len()]) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn faded_subcarrier_is_reported() {
        let num = Numerology::reduced();
        let rx = vec![c(1.0, 0.0); num.n_sub];
        let mut h = vec![c(1.0, 0.0); num.n_sub];
        h[17] = c(1e-5, 0.0);
        assert_eq!(
            recover_pa_output(&rx, &h, &num).unwrap_err(),
            FdError::IllConditioned { subcarriers: vec![17] }
        );
    }

    #[test]
    fn precalibrator_for_pure_gain() {
        let x = gaussian(200, 6);
        let g = c(3.0, -1.0);
        let y = Waveform::new(x.samples.iter().map(|s| s * g).collect(), 1.0);
        let pc = fit_precalibrator(&x, &y, 1, 1, g).unwrap();
        let pre = apply_hammerstein(&pc.model, &x);
        for (o, i) in pre.samples.iter().zip(&x.samples) {
            assert!((o * g - i * g).norm() < 1e-8);
        }
        let again = fit_precalibrator(&x, &y, 1, 1, g).unwrap();
        assert_eq!(pc, again);
        assert!(fit_precalibrator(&x, &y, 1, 1, c(0.0, 0.0)).is_err());
    }
}
