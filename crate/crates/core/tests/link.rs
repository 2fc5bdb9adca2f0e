use std::path::Path;

use fdsim::cancellers::{synthetic_pa_capture, CancellerKind};
use fdsim::estimation::ls_fit_hammerstein;
use fdsim::formats::read_pa_model;
use fdsim::link_eval::{run_link, sweep, LinkConfig, LinkFile, Profile};
use fdsim::signal::Numerology;
use fdsim::FdError;

fn pa() -> fdsim::impairments::HammersteinModel {
    read_pa_model(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pa_synthetic.toml")).unwrap()
}

fn cfg(kind: CancellerKind, seed: u64) -> LinkConfig {
    let mut c = LinkConfig::defaults(Profile::Reduced, pa());
    c.canceller = kind;
    c.seed = seed;
    c
}

#[test]
fn total_is_analog_plus_digital() {
    for kind in [CancellerKind::LinearFreq, CancellerKind::Precal] {
        let r = run_link(&cfg(kind, 4)).unwrap();
        assert_eq!(r.total_mean_db, r.analog_sic_db + r.mean_db);
        assert_eq!(r.analog_sic_db, 50.0);
        // three frames, frame 0 not counted
        let n = cfg(kind, 4).numerology;
        let per_frame = n.symbols_per_frame() / n.symbols_per_subframe;
        assert_eq!(r.cancellation_db.len(), 2 * per_frame);
    }
}

#[test]
fn empty_sweep_is_empty() {
    assert!(sweep(&[]).is_empty());
}

#[test]
fn sweep_is_order_independent() {
    let cfgs: Vec<_> = [CancellerKind::LinearFreq, CancellerKind::AuxChain, CancellerKind::Reconstruction]
        .into_iter()
        .enumerate()
        .map(|(i, k)| cfg(k, i as u64))
        .collect();
    let fwd = sweep(&cfgs);
    let mut rev_cfgs = cfgs.clone();
    rev_cfgs.reverse();
    let mut rev = sweep(&rev_cfgs);
    rev.reverse();
    for (a, b) in fwd.iter().zip(&rev) {
        assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
    }
}

#[test]
fn sweep_isolates_failures() {
    let mut bad = cfg(CancellerKind::LinearFreq, 0);
    bad.n_frames = 1;
    let out = sweep(&[bad, cfg(CancellerKind::LinearFreq, 0)]);
    assert!(matches!(out[0], Err(FdError::Config(_))));
    assert!(out[1].is_ok());
}

/// When the auxiliary receiver's own noise dominates, raising it by 10 dB
/// lowers the achieved cancellation by 10 dB.
#[test]
fn aux_chain_ceiling_tracks_capture_noise() {
    let at = |noise: f64| {
        let mut c = cfg(CancellerKind::AuxChain, 2);
        c.aux_noise_dbm = noise;
        run_link(&c).unwrap().mean_db
    };
    let (a, b) = (at(-20.0), at(-10.0));
    assert!(((a - b) - 10.0).abs() < 1.0, "{a} -> {b}");
}

#[test]
fn shipped_link_configs_expand() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (f, n) in [("link_static.toml", 80), ("link_fading.toml", 160), ("link_full.toml", 10)] {
        let text = std::fs::read_to_string(root.join(f)).unwrap();
        let cfgs = LinkFile::parse(&text).unwrap().expand(&root).unwrap();
        assert_eq!(cfgs.len(), n, "{f}");
    }
}

#[test]
fn unknown_link_key_is_rejected() {
    let e = LinkFile::parse("n_frames = 3\nbogus = 1\n").unwrap_err();
    assert!(e.is_config(), "{e}");
    assert!(e.to_string().contains("bogus"), "{e}");
}

#[test]
fn synthetic_capture_is_fittable() {
    let num = Numerology::reduced();
    let (x, y) = synthetic_pa_capture(&pa(), &num, 5).unwrap();
    assert_eq!(x.len(), num.frame_len());
    assert_eq!(x.len(), y.len());
    let rms = (x.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64).sqrt();
    assert!((rms - 1.0).abs() < 0.05, "{rms}");
    let fit = ls_fit_hammerstein(&x, &y, pa().k_terms(), pa().l_taps()).unwrap();
    for (a, b) in fit.coeffs().iter().zip(pa().coeffs()) {
        assert!((a - b).norm() < 1e-9);
    }
    let (x2, _) = synthetic_pa_capture(&pa(), &num, 5).unwrap();
    assert_eq!(x, x2);
}
