use std::path::Path;

use fdsim::cancellers::synthetic_pa_capture;
use fdsim::estimation::ls_fit_hammerstein;
use fdsim::formats::{pa_model_from_toml, read_waveform, write_pa_model, write_waveform_file};
use fdsim::impairments::apply_hammerstein;
use fdsim::link_eval::{mean, median, run_link, LinkConfig, LinkFile, LinkResult, PaSource};
use fdsim::signal::Numerology;
use fdsim::system_eval::{
    generate_topology, report, scheduling_name, DuplexMode, LayoutParams, SystemFile, ThroughputReport,
    Topology,
};
use fdsim::{lin_to_db, power_dbm, FdError};
use rayon::prelude::*;

use crate::output::{
    coherence_ms, create_dir, num, read_input, read_input_text, write_csv, write_err, Manifest,
};
use crate::{Failure, LinkArgs, PaCaptureArgs, PaFitArgs, SystemArgs, TopologyArgs};

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

fn config_dir(p: &Path) -> &Path {
    p.parent().unwrap_or(Path::new("."))
}

fn describe(c: &LinkConfig) -> String {
    format!(
        "{} coherence_ms={} seed={}",
        c.canceller,
        coherence_ms(c.coherence_time_s),
        c.seed
    )
}

pub fn link(a: &LinkArgs) -> Result<(), Failure> {
    let mut man = Manifest::start("link");
    let (text, digest) = read_input_text(&a.config, "config")?;
    man.inputs.push(digest);
    let mut file = LinkFile::parse(&text)?;
    if let Some(p) = a.profile {
        file.profile = p;
    }
    if let Some(s) = a.seed {
        file.seeds = vec![s];
    }
    let base = config_dir(&a.config);
    if let PaSource::Path { path } = &file.pa {
        man.inputs.push(read_input(&base.join(path), "pa")?.1);
    }
    let cfgs = file.expand(base)?;
    man.config = Some(text);
    man.seeds = file.seeds.clone();
    man.set("profile", format!("{:?}", file.profile).to_lowercase());
    man.set("n_frames", file.n_frames);
    man.set("runs", cfgs.len());

    let results: Vec<_> = pool(a.jobs)?.install(|| cfgs.par_iter().map(run_link).collect());

    create_dir(&a.out)?;
    let mut ok: Vec<(&LinkConfig, LinkResult)> = Vec::new();
    let mut failed: Vec<(String, FdError)> = Vec::new();
    for (c, r) in cfgs.iter().zip(results) {
        match r {
            Ok(r) => ok.push((c, r)),
            Err(e) => failed.push((describe(c), e)),
        }
    }

    let mut rows = Vec::new();
    for (c, r) in &ok {
        let first = c.numerology.subframes_per_frame;
        for (i, v) in r.cancellation_db.iter().enumerate() {
            rows.push(vec![
                (first + i).to_string(),
                r.canceller.to_string(),
                coherence_ms(r.coherence_time_s),
                r.seed.to_string(),
                num(*v),
            ]);
        }
    }
    write_csv(
        &a.out.join("link_results.csv"),
        &["subframe", "canceller", "coherence_ms", "seed", "cancellation_db"],
        &rows,
    )?;

    let runs: Vec<Vec<String>> = ok
        .iter()
        .map(|(_, r)| {
            vec![
                r.canceller.to_string(),
                coherence_ms(r.coherence_time_s),
                r.seed.to_string(),
                num(r.mean_db),
                num(r.median_db),
                num(r.total_mean_db),
                num(r.tx_evm),
            ]
        })
        .collect();
    write_csv(
        &a.out.join("runs.csv"),
        &["canceller", "coherence_ms", "seed", "mean_db", "median_db", "total_mean_db", "tx_evm"],
        &runs,
    )?;

    // group by (canceller, coherence) in config order
    let mut groups: Vec<((String, String), Vec<&LinkResult>)> = Vec::new();
    for (_, r) in &ok {
        let key = (r.canceller.to_string(), coherence_ms(r.coherence_time_s));
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut summary = Vec::new();
    println!("{:<16} {:>12} {:>6} {:>10} {:>10} {:>10}", "canceller", "coherence_ms", "seeds", "mean_db", "total_db", "tx_evm");
    for ((canceller, tc), rs) in &groups {
        let all: Vec<f64> = rs.iter().flat_map(|r| r.cancellation_db.iter().copied()).collect();
        let seed_means: Vec<f64> = rs.iter().map(|r| r.mean_db).collect();
        let m = mean(&all);
        let analog = rs[0].analog_sic_db;
        let evm = mean(&rs.iter().map(|r| r.tx_evm).collect::<Vec<_>>());
        println!("{canceller:<16} {tc:>12} {:>6} {m:>10.2} {:>10.2} {evm:>10.5}", rs.len(), analog + m);
        summary.push(vec![
            canceller.clone(),
            tc.clone(),
            rs.len().to_string(),
            num(m),
            num(median(&all)),
            num(seed_means.iter().copied().fold(f64::INFINITY, f64::min)),
            num(seed_means.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            num(analog),
            num(analog + m),
            num(evm),
            rs[0].coeffs_per_estimate.to_string(),
            rs[0].estimates_per_frame.to_string(),
            num(rs[0].sim_time_s),
        ]);
    }
    write_csv(
        &a.out.join("summary.csv"),
        &[
            "canceller",
            "coherence_ms",
            "n_seeds",
            "mean_db",
            "median_db",
            "seed_mean_min_db",
            "seed_mean_max_db",
            "analog_sic_db",
            "total_mean_db",
            "tx_evm",
            "coeffs_per_estimate",
            "estimates_per_frame",
            "sim_time_s",
        ],
        &summary,
    )?;
    man.outputs = vec!["link_results.csv".into(), "runs.csv".into(), "summary.csv".into()];
    man.set("failed_runs", failed.len());
    man.write(&a.out.join("manifest.json"))?;

    if failed.is_empty() {
        return Ok(());
    }
    for (what, e) in &failed {
        eprintln!("fdsim: run {what} failed: {e}");
    }
    let msg = format!("{} of {} runs failed", failed.len(), cfgs.len());
    if failed.iter().all(|(_, e)| e.is_config()) {
        Err(Failure::Config(msg))
    } else {
        Err(Failure::Runtime(msg))
    }
}

/// Total cancellation per canceller from a `link` summary.csv at the given
/// coherence time.
fn link_totals(text: &str, coherence: f64) -> Result<Vec<(String, f64)>, Failure> {
    let bad = |m: String| Failure::Config(format!("link summary: {m}"));
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let head = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        head.iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (ci, ti, vi) = (col("canceller")?, col("coherence_ms")?, col("total_mean_db")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let tc: f64 = rec[ti].parse().map_err(|_| bad(format!("bad coherence `{}`", &rec[ti])))?;
        if (tc - coherence).abs() <= 0.01 {
            let v: f64 = rec[vi].parse().map_err(|_| bad(format!("bad total `{}`", &rec[vi])))?;
            out.push((rec[ci].to_string(), v));
        }
    }
    Ok(out)
}

pub fn system(a: &SystemArgs) -> Result<(), Failure> {
    let mut man = Manifest::start("system");
    let (text, digest) = read_input_text(&a.config, "config")?;
    man.inputs.push(digest);
    let mut file = SystemFile::parse(&text)?;
    if let Some(p) = a.profile {
        file.profile = p;
    }
    if let Some(s) = a.seed {
        file.seed = s;
    }
    let given = match &a.topology {
        Some(p) => {
            let (t, d) = read_input_text(p, "topology")?;
            man.inputs.push(d);
            Some(Topology::parse(&t).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let mut source = "config".to_string();
    if let Some(p) = &a.from_link_sim {
        let (t, d) = read_input_text(p, "link_summary")?;
        man.inputs.push(d);
        let totals = link_totals(&t, a.link_coherence_ms)?;
        for fd in &mut file.fd {
            let name = fd.method.to_string();
            fd.total_cancellation_db = totals
                .iter()
                .find(|(c, _)| *c == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    Failure::Config(format!(
                        "link summary has no `{name}` row at {} ms",
                        a.link_coherence_ms
                    ))
                })?;
        }
        source = format!("link summary at {} ms", a.link_coherence_ms);
    }
    let scenarios = file.scenarios()?;
    let drops = file.drops(given)?;
    man.config = Some(text);
    man.seeds = vec![file.seed];
    man.set("profile", format!("{:?}", file.profile).to_lowercase());
    man.set("hd_baseline", format!("{:?}", file.hd_baseline));
    man.set("n_drops", drops.len());
    man.set("cancellation_source", &source);

    let reports: Vec<ThroughputReport> = pool(a.jobs)?
        .install(|| scenarios.par_iter().map(|s| report(&drops, s)).collect::<fdsim::Result<_>>())?;
    create_dir(&a.out)?;

    let hd = &reports[0];
    let mut summary = Vec::new();
    let mut cdf = Vec::new();
    let mut per_ms = Vec::new();
    println!("{:<24} {:>10} {:>12} {:>12} {:>9}", "scenario", "cancel_db", "mean_Mbps", "median_Mbps", "gain");
    for (s, r) in scenarios.iter().zip(&reports) {
        let fd = s.mode == DuplexMode::FullDuplex;
        let gain = r.mean_bps / hd.mean_bps - 1.0;
        println!(
            "{:<24} {:>10} {:>12.2} {:>12.2} {:>8.1}%",
            s.name,
            if fd { format!("{:.2}", s.total_cancellation_db) } else { "-".into() },
            r.mean_bps / 1e6,
            r.median_bps / 1e6,
            100.0 * gain
        );
        summary.push(vec![
            s.name.clone(),
            if fd { "full_duplex" } else { "half_duplex_fdd" }.into(),
            if fd { scheduling_name(s.scheduling) } else { "" }.into(),
            if fd { num(s.total_cancellation_db) } else { String::new() },
            num(s.overhead_fraction),
            num(s.cp_efficiency),
            num(r.mean_bps),
            num(r.median_bps),
            num(r.p10_bps),
            num(r.p90_bps),
            num(r.sum_rate_bps),
            num(gain),
            num(r.sum_rate_bps / hd.sum_rate_bps - 1.0),
        ]);
        for (v, p) in &r.cdf {
            cdf.push(vec![s.name.clone(), num(*v), num(*p)]);
        }
        let mut k = 0;
        for (d, topo) in drops.iter().enumerate() {
            for ms in 0..topo.n_ms {
                per_ms.push(vec![
                    s.name.clone(),
                    d.to_string(),
                    ms.to_string(),
                    topo.association[ms].to_string(),
                    num(lin_to_db(r.dl_sinr[k])),
                    r.ul_sinr.get(k).map_or(String::new(), |u| num(lin_to_db(*u))),
                    num(r.per_ms_bps[k]),
                ]);
                k += 1;
            }
        }
    }
    write_csv(
        &a.out.join("summary.csv"),
        &[
            "scenario",
            "mode",
            "scheduling",
            "total_cancellation_db",
            "overhead_fraction",
            "cp_efficiency",
            "mean_bps",
            "median_bps",
            "p10_bps",
            "p90_bps",
            "sum_rate_bps",
            "mean_gain_vs_hd",
            "sum_rate_gain_vs_hd",
        ],
        &summary,
    )?;
    write_csv(&a.out.join("throughput_cdf.csv"), &["scenario", "throughput_bps", "cdf"], &cdf)?;
    write_csv(
        &a.out.join("per_ms.csv"),
        &["scenario", "drop", "ms", "serving_bs", "dl_sinr_db", "ul_sinr_db", "throughput_bps"],
        &per_ms,
    )?;
    man.outputs = vec!["summary.csv".into(), "throughput_cdf.csv".into(), "per_ms.csv".into()];
    man.write(&a.out.join("manifest.json"))
}

fn read_capture(path: &Path, role: &str, man: &mut Manifest) -> Result<fdsim::signal::Waveform, Failure> {
    let (bytes, d) = read_input(path, role)?;
    man.inputs.push(d);
    read_waveform(&bytes[..]).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn pa_fit(a: &PaFitArgs) -> Result<(), Failure> {
    let mut man = Manifest::start("pa-fit");
    let x = read_capture(&a.input, "pa_input", &mut man)?;
    let y = read_capture(&a.output, "pa_output", &mut man)?;
    if x.len() != y.len() {
        return Err(Failure::Config(format!(
            "capture lengths differ: input {} samples, output {}",
            x.len(),
            y.len()
        )));
    }
    if x.sample_rate_hz != y.sample_rate_hz {
        return Err(Failure::Config(format!(
            "capture sample rates differ: {} vs {} Hz",
            x.sample_rate_hz, y.sample_rate_hz
        )));
    }
    let model = ls_fit_hammerstein(&x, &y, a.k_terms, a.l_taps).map_err(|e| match e {
        FdError::Singular { column, label } => Failure::Runtime(format!(
            "PA fit is ill-conditioned for K={} L={}: basis column {column} ({label}) is a \
             combination of the earlier ones; the capture does not excite that order. \
             Lower K or L, or capture a signal with amplitude variation",
            a.k_terms, a.l_taps
        )),
        other => other.into(),
    })?;
    let fit = apply_hammerstein(&model, &x);
    let err: Vec<_> = fit.samples.iter().zip(&y.samples).map(|(f, t)| f - t).collect();
    let nmse = power_dbm(&err) - power_dbm(&y.samples);
    println!("fitted K={} L={} on {} samples, NMSE {nmse:.2} dB", a.k_terms, a.l_taps, x.len());
    write_pa_model(&a.out, &model).map_err(|e| write_err(&a.out, e))?;
    man.set("k_terms", a.k_terms);
    man.set("l_taps", a.l_taps);
    man.set("nmse_db", nmse);
    man.outputs = vec![a.out.display().to_string()];
    man.write(&a.out.with_extension("manifest.json"))
}

pub fn pa_capture(a: &PaCaptureArgs) -> Result<(), Failure> {
    let mut man = Manifest::start("pa-capture");
    let (text, d) = read_input_text(&a.pa, "pa")?;
    man.inputs.push(d);
    let pa = pa_model_from_toml(&text).map_err(|e| Failure::Config(format!("{}: {e}", a.pa.display())))?;
    let num = match a.profile {
        fdsim::link_eval::Profile::Full => Numerology::lte_extended_cp(),
        fdsim::link_eval::Profile::Reduced => Numerology::reduced(),
    };
    let (x, y) = synthetic_pa_capture(&pa, &num, a.seed)?;
    create_dir(&a.out)?;
    for (name, w) in [("pa_in.fdwf", &x), ("pa_out.fdwf", &y)] {
        let p = a.out.join(name);
        write_waveform_file(&p, w).map_err(|e| write_err(&p, e))?;
    }
    man.seeds = vec![a.seed];
    man.set("profile", format!("{:?}", a.profile).to_lowercase());
    man.set("samples", x.len());
    man.outputs = vec!["pa_in.fdwf".into(), "pa_out.fdwf".into()];
    man.write(&a.out.join("manifest.json"))
}

pub fn topology(a: &TopologyArgs) -> Result<(), Failure> {
    let params = match &a.layout {
        Some(p) => {
            let (t, _) = read_input_text(p, "layout")?;
            toml::from_str::<LayoutParams>(&t)
                .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => LayoutParams::default(),
    };
    let topo = generate_topology(&params, a.seed)?;
    let text = format!(
        "# generated: fdsim topology{} --seed {}\n{}",
        a.layout
            .as_ref()
            .map_or(String::new(), |p| format!(" --layout {}", p.display())),
        a.seed,
        topo.to_toml()
    );
    std::fs::write(&a.out, text).map_err(|e| write_err(&a.out, e))?;
    println!("{} BS, {} MS, association {:?}", topo.n_bs, topo.n_ms, topo.association);
    Ok(())
}
