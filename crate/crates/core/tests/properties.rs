use fdsim::estimation::ls_fit_hammerstein;
use fdsim::formats::{pa_model_from_toml, pa_model_to_toml, read_waveform, write_waveform};
use fdsim::impairments::{apply_hammerstein, HammersteinModel};
use fdsim::signal::{build_grid, ofdm_demodulate, ofdm_modulate, Numerology, RsPattern, Waveform};
use fdsim::system_eval::{
    compute_sinr, report, DuplexMode, DuplexScenario, HdBaseline, Scheduling, Topology,
};
use fdsim::C64;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn model() -> impl Strategy<Value = HammersteinModel> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(k, l)| {
        prop::collection::vec(c64(), k * l)
            .prop_map(move |c| HammersteinModel::new(k, l, c).unwrap())
    })
}

fn waveform(n: usize) -> impl Strategy<Value = Waveform> {
    prop::collection::vec(c64(), n).prop_map(|s| Waveform::new(s, 1.0))
}

/// Random topology: path losses 60..130 dB, symmetric peer matrices.
fn topology() -> impl Strategy<Value = Topology> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(nb, nm)| {
        let pl = || 60.0f64..130.0;
        (
            prop::collection::vec(prop::collection::vec(pl(), nm), nb),
            prop::collection::vec(pl(), nm * nm),
            prop::collection::vec(pl(), nb * nb),
        )
            .prop_map(move |(bm, mm, bb)| {
                let sym = |v: &[f64], n: usize| -> Vec<Vec<f64>> {
                    (0..n)
                        .map(|i| (0..n).map(|j| v[i.min(j) * n + i.max(j)]).collect())
                        .collect()
                };
                Topology::new(bm, sym(&mm, nm), sym(&bb, nb), None).unwrap()
            })
    })
}

fn fd(cancel_db: f64, scheduling: Scheduling) -> DuplexScenario {
    DuplexScenario {
        name: "fd".into(),
        mode: DuplexMode::FullDuplex,
        total_cancellation_db: cancel_db,
        scheduling,
        tx_power_bs_dbm: 23.0,
        tx_power_ms_dbm: 23.0,
        noise_dbm: -90.0,
        bandwidth_hz: 20e6,
        overhead_fraction: 1.0 / 12.0,
        cp_efficiency: 0.8,
        sinr_cap_db: None,
        hd_baseline: HdBaseline::FullBandDownlink,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ofdm_round_trip(seed in any::<u64>(), reduced in any::<bool>()) {
        let num = if reduced { Numerology::reduced() } else { Numerology::lte_extended_cp() };
        let grid = build_grid(&num, &RsPattern::empty(&num), seed, seed ^ 1).unwrap();
        let back = ofdm_demodulate(&ofdm_modulate(&grid, &num).unwrap(), &num).unwrap();
        for (a, b) in back.symbols().iter().zip(grid.symbols()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn pa_file_round_trip(m in model()) {
        prop_assert_eq!(pa_model_from_toml(&pa_model_to_toml(&m)).unwrap(), m);
    }

    #[test]
    fn waveform_file_round_trip(w in waveform(37), rate in 1.0f64..1e9) {
        let w = Waveform::new(w.samples, rate);
        let mut bytes = Vec::new();
        write_waveform(&mut bytes, &w).unwrap();
        prop_assert_eq!(read_waveform(&bytes[..]).unwrap(), w);
    }

    /// The model output is linear in the coefficients.
    #[test]
    fn hammerstein_linear_in_coeffs(a in model(), x in waveform(64), alpha in c64()) {
        let b = HammersteinModel::new(
            a.k_terms(),
            a.l_taps(),
            a.coeffs().iter().rev().copied().collect(),
        ).unwrap();
        let sum = HammersteinModel::new(
            a.k_terms(),
            a.l_taps(),
            a.coeffs().iter().zip(b.coeffs()).map(|(p, q)| p * alpha + q).collect(),
        ).unwrap();
        let (ya, yb, ys) = (apply_hammerstein(&a, &x), apply_hammerstein(&b, &x), apply_hammerstein(&sum, &x));
        for i in 0..x.len() {
            prop_assert!((ya.samples[i] * alpha + yb.samples[i] - ys.samples[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn hammerstein_fit_recovers_model(m in model(), x in waveform(600)) {
        let fit = ls_fit_hammerstein(&x, &apply_hammerstein(&m, &x), m.k_terms(), m.l_taps()).unwrap();
        for (a, b) in fit.coeffs().iter().zip(m.coeffs()) {
            prop_assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn fd_throughput_monotone_in_cancellation(t in topology(), c in 40.0f64..120.0, d in 0.0f64..30.0) {
        for s in [Scheduling::Random, Scheduling::Perfect] {
            let lo = report(std::slice::from_ref(&t), &fd(c, s)).unwrap();
            let hi = report(std::slice::from_ref(&t), &fd(c + d, s)).unwrap();
            for (a, b) in lo.per_ms_bps.iter().zip(&hi.per_ms_bps) {
                prop_assert!(b >= a);
            }
        }
    }

    #[test]
    fn perfect_scheduling_never_worse(t in topology(), c in 40.0f64..120.0) {
        let r = report(std::slice::from_ref(&t), &fd(c, Scheduling::Random)).unwrap();
        let p = report(std::slice::from_ref(&t), &fd(c, Scheduling::Perfect)).unwrap();
        for (a, b) in r.per_ms_bps.iter().zip(&p.per_ms_bps) {
            prop_assert!(b >= a);
        }
    }

    /// Half duplex ignores cancellation and scheduling.
    #[test]
    fn half_duplex_invariant(t in topology(), c in 0.0f64..150.0) {
        let base = DuplexScenario { mode: DuplexMode::HalfDuplexFdd, ..fd(0.0, Scheduling::Random) };
        let other = DuplexScenario { total_cancellation_db: c, scheduling: Scheduling::Perfect, ..base.clone() };
        prop_assert_eq!(compute_sinr(&t, &base), compute_sinr(&t, &other));
        prop_assert!(compute_sinr(&t, &base).ul.is_none());
    }

    #[test]
    fn cdf_is_monotone(t in topology(), c in 40.0f64..120.0) {
        let r = report(std::slice::from_ref(&t), &fd(c, Scheduling::Random)).unwrap();
        prop_assert_eq!(r.cdf.len(), t.n_ms);
        for w in r.cdf.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 > w[0].1);
        }
        prop_assert!((r.cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
    }
}
