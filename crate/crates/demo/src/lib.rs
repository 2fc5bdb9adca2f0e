//! Browser demo: three small entry points over the simulator, exported with
//! wasm-bindgen. Each wrapper forwards to a plain Rust function so the same
//! code runs in native tests.

use fdsim::cancellers::{synthetic_pa_capture, CancellerKind};
use fdsim::estimation::fit_precalibrator;
use fdsim::formats::pa_model_from_toml;
use fdsim::impairments::HammersteinModel;
use fdsim::link_eval::{run_link, LinkConfig, Profile};
use fdsim::signal::Numerology;
use fdsim::system_eval::{report, DuplexMode, DuplexScenario, Scheduling, SystemFile, Topology};
use fdsim::{impairments::coherence_time, C64};
use wasm_bindgen::prelude::*;

const PA_TOML: &str = include_str!("../../../configs/pa_synthetic.toml");
const SYSTEM_TOML: &str = include_str!("../../../configs/system_paper.toml");
const TOPOLOGY_TOML: &str = include_str!("../../../data/topology_5bs5ms.toml");

fn js(e: fdsim::FdError) -> JsError {
    JsError::new(&e.to_string())
}

fn pa() -> fdsim::Result<HammersteinModel> {
    pa_model_from_toml(PA_TOML)
}

/// Steady-state output of `m` for a constant input `a`.
fn settle(m: &HammersteinModel, a: C64) -> C64 {
    let x = vec![a; m.l_taps()];
    *m.apply_range(&x, 0..x.len()).last().unwrap()
}

/// AM/AM of the shipped PA with and without a pre-calibrator fitted on a
/// synthetic capture. Output layout: `[amp; n]`, `[raw; n]`, `[calibrated; n]`.
pub fn am_am(max_amp: f64, n: usize, k_terms: usize) -> fdsim::Result<Vec<f64>> {
    if !(max_amp > 0.0) || n < 2 {
        return Err(fdsim::FdError::Config("need max_amp > 0 and at least 2 points".into()));
    }
    let pa = pa()?;
    let (x, y) = synthetic_pa_capture(&pa, &Numerology::reduced(), 0)?;
    let g: C64 = (0..pa.l_taps()).map(|l| pa.coeff(0, l)).sum();
    let pc = fit_precalibrator(&x, &y, k_terms, pa.l_taps(), g)?;
    let amps: Vec<f64> = (0..n).map(|i| max_amp * i as f64 / (n - 1) as f64).collect();
    let raw = amps.iter().map(|&a| settle(&pa, C64::new(a, 0.0)).norm());
    let cal = amps
        .iter()
        .map(|&a| settle(&pa, settle(&pc.model, C64::new(a, 0.0))).norm() / g.norm());
    let raw: Vec<f64> = raw.map(|v| v / g.norm()).collect();
    Ok(amps.iter().copied().chain(raw).chain(cal).collect())
}

pub fn canceller_by_name(name: &str) -> fdsim::Result<CancellerKind> {
    Ok(match name {
        "linear_freq" => CancellerKind::LinearFreq,
        "linear_time" => CancellerKind::LinearTime,
        "reconstruction" => CancellerKind::Reconstruction,
        "aux_chain" => CancellerKind::AuxChain,
        "precal" => CancellerKind::Precal,
        other => return Err(fdsim::FdError::Config(format!("unknown canceller {other:?}"))),
    })
}

/// Digital cancellation per subframe (dB) on the reduced profile.
/// `speed_kmh == 0` is a static channel.
pub fn cancellation_series(canceller: &str, speed_kmh: f64, seed: u64, n_frames: usize) -> fdsim::Result<Vec<f64>> {
    let mut cfg = LinkConfig::defaults(Profile::Reduced, pa()?);
    cfg.canceller = canceller_by_name(canceller)?;
    cfg.seed = seed;
    cfg.n_frames = n_frames;
    cfg.coherence_time_s = if speed_kmh > 0.0 {
        coherence_time(speed_kmh / 3.6, 2.52e9, 3e8)
    } else {
        f64::INFINITY
    };
    Ok(run_link(&cfg)?.cancellation_db)
}

/// Per-MS throughput on the embedded five-cell topology.
/// Output layout: `[hd_mean, fd_mean]`, then sorted HD and FD throughputs.
pub fn throughput_cdf(total_cancellation_db: f64, perfect: bool) -> fdsim::Result<Vec<f64>> {
    let topo = [Topology::parse(TOPOLOGY_TOML)?];
    let hd = SystemFile::parse(SYSTEM_TOML)?.scenarios()?.remove(0);
    let fd = DuplexScenario {
        name: "fd".into(),
        mode: DuplexMode::FullDuplex,
        total_cancellation_db,
        scheduling: if perfect { Scheduling::Perfect } else { Scheduling::Random },
        ..hd.clone()
    };
    let (h, f) = (report(&topo, &hd)?, report(&topo, &fd)?);
    let mut out = vec![h.mean_bps, f.mean_bps];
    out.extend(h.cdf.iter().map(|p| p.0));
    out.extend(f.cdf.iter().map(|p| p.0));
    Ok(out)
}

#[wasm_bindgen(js_name = amAm)]
pub fn am_am_js(max_amp: f64, n: usize, k_terms: usize) -> Result<Vec<f64>, JsError> {
    am_am(max_amp, n, k_terms).map_err(js)
}

#[wasm_bindgen(js_name = cancellationSeries)]
pub fn cancellation_series_js(canceller: &str, speed_kmh: f64, seed: u32, n_frames: usize) -> Result<Vec<f64>, JsError> {
    cancellation_series(canceller, speed_kmh, seed as u64, n_frames).map_err(js)
}

#[wasm_bindgen(js_name = throughputCdf)]
pub fn throughput_cdf_js(total_cancellation_db: f64, perfect: bool) -> Result<Vec<f64>, JsError> {
    throughput_cdf(total_cancellation_db, perfect).map_err(js)
}
