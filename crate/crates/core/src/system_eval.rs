//! System-level SINR and Shannon throughput over a multi-cell topology,
//! half-duplex versus full-duplex with a given total SI cancellation.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cancellers::CancellerKind;
use crate::link_eval::{mean, median, Profile};
use crate::signal::{overhead_ratio, Numerology, RsPattern, ScatteredLattice};
use crate::{db_to_lin, mix_seed, FdError, Result};

pub const TOPOLOGY_SCHEMA_VERSION: u32 = 1;
pub const SYSTEM_SCHEMA_VERSION: u32 = 1;

/// Path losses (positive dB) between every pair of nodes plus the MS to BS
/// association.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub n_bs: usize,
    pub n_ms: usize,
    /// `[bs][ms]`
    pub pathloss_bs_ms: Vec<Vec<f64>>,
    /// `[ms][ms]`, symmetric; diagonal ignored.
    pub pathloss_ms_ms: Vec<Vec<f64>>,
    /// `[bs][bs]`, symmetric; diagonal ignored.
    pub pathloss_bs_bs: Vec<Vec<f64>>,
    /// Serving BS of each MS.
    pub association: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    schema_version: u32,
    n_bs: usize,
    n_ms: usize,
    pathloss_bs_ms: Vec<Vec<f64>>,
    pathloss_ms_ms: Vec<Vec<f64>>,
    pathloss_bs_bs: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    association: Option<Vec<usize>>,
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(FdError::Config(format!("{name} must be {rows} x {cols}")));
    }
    for (i, r) in m.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            if !v.is_finite() {
                return Err(FdError::Config(format!("{name}[{i}][{j}] is not finite")));
            }
        }
    }
    Ok(())
}

fn check_symmetric(name: &str, m: &[Vec<f64>]) -> Result<()> {
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            if (m[i][j] - m[j][i]).abs() > 1e-9 * m[i][j].abs().max(1.0) {
                return Err(FdError::Config(format!(
                    "{name} is not symmetric at [{i}][{j}]: {} vs {}",
                    m[i][j], m[j][i]
                )));
            }
        }
    }
    Ok(())
}

impl Topology {
    /// Validate and, when `association` is `None`, associate every MS with
    /// the BS of least path loss (strongest downlink at equal BS power).
    pub fn new(
        pathloss_bs_ms: Vec<Vec<f64>>,
        pathloss_ms_ms: Vec<Vec<f64>>,
        pathloss_bs_bs: Vec<Vec<f64>>,
        association: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n_bs = pathloss_bs_ms.len();
        let n_ms = pathloss_ms_ms.len();
        if n_bs == 0 || n_ms == 0 {
            return Err(FdError::Config("topology needs at least one BS and one MS".into()));
        }
        check_matrix("pathloss_bs_ms", &pathloss_bs_ms, n_bs, n_ms)?;
        check_matrix("pathloss_ms_ms", &pathloss_ms_ms, n_ms, n_ms)?;
        check_matrix("pathloss_bs_bs", &pathloss_bs_bs, n_bs, n_bs)?;
        check_symmetric("pathloss_ms_ms", &pathloss_ms_ms)?;
        check_symmetric("pathloss_bs_bs", &pathloss_bs_bs)?;
        let association = match association {
            Some(a) => {
                if a.len() != n_ms {
                    return Err(FdError::Config(format!(
                        "association lists {} MSs, topology has {n_ms}",
                        a.len()
                    )));
                }
                if let Some((ms, bs)) = a.iter().enumerate().find(|(_, b)| **b >= n_bs) {
                    return Err(FdError::Config(format!("MS {ms} associated with missing BS {bs}")));
                }
                a
            }
            None => (0..n_ms)
                .map(|ms| {
                    (0..n_bs)
                        .min_by(|&a, &b| pathloss_bs_ms[a][ms].total_cmp(&pathloss_bs_ms[b][ms]))
                        .unwrap()
                })
                .collect(),
        };
        Ok(Self {
            n_bs,
            n_ms,
            pathloss_bs_ms,
            pathloss_ms_ms,
            pathloss_bs_bs,
            association,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: TopologyFile = toml::from_str(text).map_err(|e| FdError::Parse(e.to_string()))?;
        if f.schema_version != TOPOLOGY_SCHEMA_VERSION {
            return Err(FdError::Parse(format!(
                "unsupported topology schema_version {} (expected {TOPOLOGY_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        if f.pathloss_bs_ms.len() != f.n_bs || f.pathloss_ms_ms.len() != f.n_ms {
            return Err(FdError::Config(format!(
                "header says {} BS / {} MS but matrices have {} / {} rows",
                f.n_bs,
                f.n_ms,
                f.pathloss_bs_ms.len(),
                f.pathloss_ms_ms.len()
            )));
        }
        Self::new(f.pathloss_bs_ms, f.pathloss_ms_ms, f.pathloss_bs_bs, f.association)
    }

    pub fn to_toml(&self) -> String {
        let f = TopologyFile {
            schema_version: TOPOLOGY_SCHEMA_VERSION,
            n_bs: self.n_bs,
            n_ms: self.n_ms,
            pathloss_bs_ms: self.pathloss_bs_ms.clone(),
            pathloss_ms_ms: self.pathloss_ms_ms.clone(),
            pathloss_bs_bs: self.pathloss_bs_bs.clone(),
            association: Some(self.association.clone()),
        };
        toml::to_string(&f).expect("topology serializes")
    }

    /// Fraction of air time each MS gets from its (round-robin) serving BS.
    pub fn activity(&self) -> Vec<f64> {
        let mut load = vec![0usize; self.n_bs];
        for &b in &self.association {
            load[b] += 1;
        }
        self.association.iter().map(|&b| 1.0 / load[b] as f64).collect()
    }
}

pub fn load_topology(path: &Path) -> Result<Topology> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FdError::Io(format!("{}: {e}", path.display())))?;
    Topology::parse(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplexMode {
    HalfDuplexFdd,
    FullDuplex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    /// Uplink users picked without regard to MS-to-MS interference.
    Random,
    /// Genie pairing that removes MS-to-MS interference.
    Perfect,
}

/// How the half-duplex baseline uses the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HdBaseline {
    /// Downlink on the whole bandwidth; uplink not counted.
    #[default]
    FullBandDownlink,
    /// Bandwidth split evenly between downlink and uplink, both counted.
    SplitBand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuplexScenario {
    pub name: String,
    pub mode: DuplexMode,
    /// Analog plus digital; `inf` for perfect cancellation.
    pub total_cancellation_db: f64,
    pub scheduling: Scheduling,
    pub tx_power_bs_dbm: f64,
    pub tx_power_ms_dbm: f64,
    pub noise_dbm: f64,
    pub bandwidth_hz: f64,
    pub overhead_fraction: f64,
    pub cp_efficiency: f64,
    pub sinr_cap_db: Option<f64>,
    pub hd_baseline: HdBaseline,
}

impl DuplexScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_cancellation_db >= 0.0) {
            return Err(FdError::Config(format!(
                "{}: cancellation must be >= 0 dB",
                self.name
            )));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(FdError::Config(format!("{}: bandwidth must be > 0", self.name)));
        }
        if !(0.0..1.0).contains(&self.overhead_fraction) {
            return Err(FdError::Config(format!(
                "{}: overhead must be in [0, 1)",
                self.name
            )));
        }
        if !(self.cp_efficiency > 0.0 && self.cp_efficiency <= 1.0) {
            return Err(FdError::Config(format!(
                "{}: CP efficiency must be in (0, 1]",
                self.name
            )));
        }
        Ok(())
    }

    /// Residual SI power at the BS receiver, dBm.
    pub fn si_residual_dbm(&self) -> f64 {
        self.tx_power_bs_dbm - self.total_cancellation_db
    }
}

/// Linear SINRs per MS. `ul[i]` is the SINR at MS i's serving BS.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub dl: Vec<f64>,
    pub ul: Option<Vec<f64>>,
}

/// Received powers in mW, `[tx][rx]` style: `p(tx_dbm - pl)`.
fn rx_mw(tx_dbm: f64, pl_db: f64) -> f64 {
    db_to_lin(tx_dbm - pl_db)
}

pub fn compute_sinr(topo: &Topology, scen: &DuplexScenario) -> SinrReport {
    let act = topo.activity();
    let n = db_to_lin(scen.noise_dbm);
    let fd = scen.mode == DuplexMode::FullDuplex;
    let dl = (0..topo.n_ms)
        .map(|i| {
            let c = topo.association[i];
            let s = rx_mw(scen.tx_power_bs_dbm, topo.pathloss_bs_ms[c][i]);
            let i_bs: f64 = (0..topo.n_bs)
                .filter(|&b| b != c)
                .map(|b| rx_mw(scen.tx_power_bs_dbm, topo.pathloss_bs_ms[b][i]))
                .sum();
            let i_ms: f64 = if fd && scen.scheduling == Scheduling::Random {
                (0..topo.n_ms)
                    .filter(|&j| topo.association[j] != c)
                    .map(|j| act[j] * rx_mw(scen.tx_power_ms_dbm, topo.pathloss_ms_ms[i][j]))
                    .sum()
            } else {
                0.0
            };
            s / (i_bs + i_ms + n)
        })
        .collect();
    let split = !fd && scen.hd_baseline == HdBaseline::SplitBand;
    let ul = (fd || split).then(|| {
        let si = if fd {
            db_to_lin(scen.si_residual_dbm())
        } else {
            0.0
        };
        (0..topo.n_ms)
            .map(|i| {
                let c = topo.association[i];
                let s = rx_mw(scen.tx_power_ms_dbm, topo.pathloss_bs_ms[c][i]);
                let i_ms: f64 = (0..topo.n_ms)
                    .filter(|&j| topo.association[j] != c)
                    .map(|j| act[j] * rx_mw(scen.tx_power_ms_dbm, topo.pathloss_bs_ms[c][j]))
                    .sum();
                let i_bs: f64 = if fd {
                    (0..topo.n_bs)
                        .filter(|&b| b != c)
                        .map(|b| rx_mw(scen.tx_power_bs_dbm, topo.pathloss_bs_bs[c][b]))
                        .sum()
                } else {
                    0.0
                };
                s / (i_ms + i_bs + si + n)
            })
            .collect()
    });
    SinrReport { dl, ul }
}

/// `bandwidth (1 - overhead) cp_eff log2(1 + sinr)`.
pub fn shannon_bps(sinr: f64, bandwidth_hz: f64, overhead: f64, cp_efficiency: f64) -> f64 {
    bandwidth_hz * (1.0 - overhead) * cp_efficiency * (1.0 + sinr.max(0.0)).log2()
}

/// Per-MS throughput, bit/s, including the MS's share of air time.
pub fn throughput(topo: &Topology, sinr: &SinrReport, scen: &DuplexScenario) -> Vec<f64> {
    let act = topo.activity();
    let cap = scen.sinr_cap_db.map(db_to_lin).unwrap_or(f64::INFINITY);
    let bw = match (scen.mode, scen.hd_baseline) {
        (DuplexMode::HalfDuplexFdd, HdBaseline::SplitBand) => scen.bandwidth_hz / 2.0,
        _ => scen.bandwidth_hz,
    };
    let rate = |s: f64| shannon_bps(s.min(cap), bw, scen.overhead_fraction, scen.cp_efficiency);
    (0..topo.n_ms)
        .map(|i| {
            let ul = sinr.ul.as_ref().map_or(0.0, |u| rate(u[i]));
            act[i] * (rate(sinr.dl[i]) + ul)
        })
        .collect()
}

/// Linear-interpolated percentile (`p` in `[0, 100]`) of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub scenario: String,
    pub per_ms_bps: Vec<f64>,
    pub dl_sinr: Vec<f64>,
    pub ul_sinr: Vec<f64>,
    pub mean_bps: f64,
    pub median_bps: f64,
    pub p10_bps: f64,
    pub p90_bps: f64,
    /// Mean over drops of the per-drop sum over MSs.
    pub sum_rate_bps: f64,
    /// `(throughput, cumulative probability)`, one step per MS sample.
    pub cdf: Vec<(f64, f64)>,
}

/// Evaluate `scen` on every drop and aggregate the per-MS samples.
pub fn report(drops: &[Topology], scen: &DuplexScenario) -> Result<ThroughputReport> {
    scen.validate()?;
    if drops.is_empty() {
        return Err(FdError::Config("need at least one drop".into()));
    }
    let mut per_ms = Vec::new();
    let mut dl_sinr = Vec::new();
    let mut ul_sinr = Vec::new();
    let mut sums = Vec::new();
    for topo in drops {
        let s = compute_sinr(topo, scen);
        let t = throughput(topo, &s, scen);
        sums.push(t.iter().sum::<f64>());
        per_ms.extend(t);
        dl_sinr.extend(&s.dl);
        if let Some(u) = &s.ul {
            ul_sinr.extend(u);
        }
    }
    let mut sorted = per_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cdf = sorted
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, (i + 1) as f64 / n))
        .collect();
    Ok(ThroughputReport {
        scenario: scen.name.clone(),
        mean_bps: mean(&per_ms),
        median_bps: median(&per_ms),
        p10_bps: percentile(&sorted, 10.0),
        p90_bps: percentile(&sorted, 90.0),
        sum_rate_bps: mean(&sums),
        per_ms_bps: per_ms,
        dl_sinr,
        ul_sinr,
        cdf,
    })
}

/// Log-distance indoor layout: BSs along a corridor, one cluster of MSs
/// around each BS. Missing fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutParams {
    pub n_bs: usize,
    pub ms_per_bs: usize,
    /// BS spacing along the corridor, m.
    pub bs_spacing_m: f64,
    /// Maximum MS distance from its BS, m.
    pub cell_radius_m: f64,
    /// Path loss at 1 m, dB.
    pub pl_1m_db: f64,
    pub exponent: f64,
    /// Extra loss per wall crossed; walls sit halfway between BSs.
    pub wall_loss_db: f64,
    pub shadowing_std_db: f64,
    /// Minimum separation used in the distance law, m.
    pub min_distance_m: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            n_bs: 5,
            ms_per_bs: 1,
            bs_spacing_m: 20.0,
            cell_radius_m: 8.0,
            pl_1m_db: 40.0,
            exponent: 3.0,
            wall_loss_db: 6.0,
            shadowing_std_db: 4.0,
            min_distance_m: 1.0,
        }
    }
}

/// Draw one drop. Shadowing is symmetric per node pair.
pub fn generate_topology(p: &LayoutParams, seed: u64) -> Result<Topology> {
    if p.n_bs == 0 || p.ms_per_bs == 0 {
        return Err(FdError::Config("layout needs at least one BS and one MS per BS".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x70B0));
    let bs: Vec<(f64, f64)> = (0..p.n_bs).map(|b| (b as f64 * p.bs_spacing_m, 0.0)).collect();
    let mut ms = Vec::new();
    for &(bx, by) in &bs {
        for _ in 0..p.ms_per_bs {
            let r = p.cell_radius_m * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            ms.push((bx + r * a.cos(), by + r * a.sin()));
        }
    }
    let walls = |x0: f64, x1: f64| -> f64 {
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        (0..p.n_bs.saturating_sub(1))
            .map(|k| (k as f64 + 0.5) * p.bs_spacing_m)
            .filter(|w| *w > lo && *w < hi)
            .count() as f64
    };
    let pl = |a: (f64, f64), b: (f64, f64), rng: &mut ChaCha8Rng| -> f64 {
        let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt().max(p.min_distance_m);
        let z: f64 = rng.sample(StandardNormal);
        p.pl_1m_db + 10.0 * p.exponent * d.log10() + p.wall_loss_db * walls(a.0, b.0)
            + p.shadowing_std_db * z
    };
    let n_ms = ms.len();
    let bs_ms: Vec<Vec<f64>> = bs
        .iter()
        .map(|&b| ms.iter().map(|&m| pl(b, m, &mut rng)).collect())
        .collect();
    let mut ms_ms = vec![vec![0.0; n_ms]; n_ms];
    for i in 0..n_ms {
        for j in i + 1..n_ms {
            let v = pl(ms[i], ms[j], &mut rng);
            ms_ms[i][j] = v;
            ms_ms[j][i] = v;
        }
    }
    let mut bs_bs = vec![vec![0.0; p.n_bs]; p.n_bs];
    for i in 0..p.n_bs {
        for j in i + 1..p.n_bs {
            let v = pl(bs[i], bs[j], &mut rng);
            bs_bs[i][j] = v;
            bs_bs[j][i] = v;
        }
    }
    Topology::new(bs_ms, ms_ms, bs_bs, None)
}

/// One full-duplex operating point of a system file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdPoint {
    pub name: String,
    /// Canceller whose reference pattern sets the overhead.
    pub method: CancellerKind,
    pub total_cancellation_db: f64,
}

/// On-disk system scenario (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub schema_version: u32,
    #[serde(default = "default_profile")]
    pub profile: Profile,
    #[serde(default = "default_bw")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_p")]
    pub tx_power_bs_dbm: f64,
    #[serde(default = "default_p")]
    pub tx_power_ms_dbm: f64,
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default)]
    pub hd_baseline: HdBaseline,
    pub sinr_cap_db: Option<f64>,
    #[serde(default = "default_sched")]
    pub scheduling: Vec<Scheduling>,
    pub fd: Vec<FdPoint>,
    /// Random drops; without it the given topology is the single drop.
    pub layout: Option<LayoutParams>,
    #[serde(default = "default_drops")]
    pub n_drops: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_profile() -> Profile {
    Profile::Full
}

fn default_bw() -> f64 {
    20e6
}

fn default_p() -> f64 {
    23.0
}

fn default_noise() -> f64 {
    -90.0
}

fn default_sched() -> Vec<Scheduling> {
    vec![Scheduling::Random, Scheduling::Perfect]
}

fn default_drops() -> usize {
    1
}

/// Reference-signal overhead of a canceller's pattern.
pub fn method_overhead(method: CancellerKind, num: &Numerology) -> Result<f64> {
    let lat = ScatteredLattice::default();
    let p = match method.pattern_kind() {
        crate::signal::PatternKind::FullSymbolPerSubframe => RsPattern::full_symbol_per_subframe(num, 0)?,
        crate::signal::PatternKind::PrecalFrame => RsPattern::precal_frame(num, &lat, 1, 2)?,
        _ => RsPattern::scattered(num, &lat)?,
    };
    Ok(overhead_ratio(&p, num))
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: SystemFile = toml::from_str(text).map_err(|e| FdError::Parse(e.to_string()))?;
        if f.schema_version != SYSTEM_SCHEMA_VERSION {
            return Err(FdError::Parse(format!(
                "unsupported system schema_version {} (expected {SYSTEM_SCHEMA_VERSION})",
                f.schema_version
            )));
        }
        if f.n_drops == 0 {
            return Err(FdError::Config("n_drops must be >= 1".into()));
        }
        Ok(f)
    }

    pub fn numerology(&self) -> Numerology {
        match self.profile {
            Profile::Full => Numerology::lte_extended_cp(),
            Profile::Reduced => Numerology::reduced(),
        }
    }

    /// The half-duplex baseline followed by every FD point under every
    /// scheduling policy.
    pub fn scenarios(&self) -> Result<Vec<DuplexScenario>> {
        let num = self.numerology();
        let base = DuplexScenario {
            name: "hd".into(),
            mode: DuplexMode::HalfDuplexFdd,
            total_cancellation_db: 0.0,
            scheduling: Scheduling::Random,
            tx_power_bs_dbm: self.tx_power_bs_dbm,
            tx_power_ms_dbm: self.tx_power_ms_dbm,
            noise_dbm: self.noise_dbm,
            bandwidth_hz: self.bandwidth_hz,
            overhead_fraction: method_overhead(CancellerKind::LinearFreq, &num)?,
            cp_efficiency: num.cp_efficiency(),
            sinr_cap_db: self.sinr_cap_db,
            hd_baseline: self.hd_baseline,
        };
        let mut out = vec![base.clone()];
        for p in &self.fd {
            for &s in &self.scheduling {
                let sc = DuplexScenario {
                    name: format!("{}_{}", p.name, scheduling_name(s)),
                    mode: DuplexMode::FullDuplex,
                    total_cancellation_db: p.total_cancellation_db,
                    scheduling: s,
                    overhead_fraction: method_overhead(p.method, &num)?,
                    ..base.clone()
                };
                sc.validate()?;
                out.push(sc);
            }
        }
        Ok(out)
    }

    /// Drops to evaluate: `n_drops` generated layouts, or `given` alone.
    pub fn drops(&self, given: Option<Topology>) -> Result<Vec<Topology>> {
        match (&self.layout, given) {
            (Some(l), _) => (0..self.n_drops as u64)
                .map(|d| generate_topology(l, mix_seed(self.seed, d)))
                .collect(),
            (None, Some(t)) => Ok(vec![t]),
            (None, None) => Err(FdError::Config(
                "system run needs a topology file or a [layout] section".into(),
            )),
        }
    }
}

pub fn scheduling_name(s: Scheduling) -> &'static str {
    match s {
        Scheduling::Random => "random",
        Scheduling::Perfect => "perfect",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair() -> Topology {
        Topology::new(vec![vec![80.0]], vec![vec![0.0]], vec![vec![0.0]], None).unwrap()
    }

    fn scen(mode: DuplexMode, c: f64) -> DuplexScenario {
        DuplexScenario {
            name: "t".into(),
            mode,
            total_cancellation_db: c,
            scheduling: Scheduling::Random,
            tx_power_bs_dbm: 23.0,
            tx_power_ms_dbm: 23.0,
            noise_dbm: -90.0,
            bandwidth_hz: 20e6,
            overhead_fraction: 0.0,
            cp_efficiency: 1.0,
            sinr_cap_db: None,
            hd_baseline: HdBaseline::FullBandDownlink,
        }
    }

    #[test]
    fn single_pair_perfect_cancellation_is_snr() {
        let s = compute_sinr(&pair(), &scen(DuplexMode::FullDuplex, f64::INFINITY));
        let snr = db_to_lin(23.0 - 80.0 + 90.0);
        assert!((s.dl[0] - snr).abs() <= 1e-12 * snr);
        assert!((s.ul.unwrap()[0] - snr).abs() <= 1e-12 * snr);
    }

    #[test]
    fn si_residual_arithmetic() {
        let s = scen(DuplexMode::FullDuplex, 106.20);
        assert!((s.si_residual_dbm() + 83.20).abs() < 1e-12);
    }

    #[test]
    fn shannon_points() {
        assert_eq!(shannon_bps(0.0, 20e6, 0.0, 1.0), 0.0);
        assert!((shannon_bps(1.0, 20e6, 0.0, 1.0) - 20e6).abs() < 1e-6);
    }

    #[test]
    fn asymmetric_ms_ms_rejected() {
        let e = Topology::new(
            vec![vec![80.0, 81.0]],
            vec![vec![0.0, 70.0], vec![71.0, 0.0]],
            vec![vec![0.0]],
            None,
        )
        .unwrap_err();
        assert!(e.to_string().contains("symmetric"));
    }

    #[test]
    fn auto_association_picks_least_loss() {
        let t = Topology::new(
            vec![vec![90.0, 70.0], vec![60.0, 95.0]],
            vec![vec![0.0, 80.0], vec![80.0, 0.0]],
            vec![vec![0.0, 85.0], vec![85.0, 0.0]],
            None,
        )
        .unwrap();
        assert_eq!(t.association, vec![1, 0]);
    }

    #[test]
    fn topology_round_trip() {
        let t = generate_topology(&LayoutParams::default(), 3).unwrap();
        assert_eq!(Topology::parse(&t.to_toml()).unwrap(), t);
    }

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 10.0), 1.4);
        assert_eq!(percentile(&v, 100.0), 5.0);
    }
}
