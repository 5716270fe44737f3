//! Macroscopic metrics, ensemble cross-covariance and the binned
//! fundamental diagram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::multilane::RoadConfiguration;

/// Seconds per throughput and latency window.
pub const WINDOW: u64 = 10;

/// A vehicle leaving the road.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exit {
    pub vid: u64,
    pub entry_time: u64,
    pub exit_time: u64,
}

/// Exit counts and latencies, published at the end of every window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowStats {
    count: u64,
    latency_sum: u64,
    throughput: u64,
    latency: f64,
}

impl WindowStats {
    pub fn record(&mut self, t: u64, exits: &[Exit]) {
        self.count += exits.len() as u64;
        self.latency_sum += exits.iter().map(|e| e.exit_time - e.entry_time).sum::<u64>();
        if t.is_multiple_of(WINDOW) {
            self.throughput = self.count;
            self.latency = if self.count == 0 { 0.0 } else { self.latency_sum as f64 / self.count as f64 };
            self.count = 0;
            self.latency_sum = 0;
        }
    }

    /// Vehicles processed in the last complete window.
    pub fn throughput(&self) -> u64 {
        self.throughput
    }

    /// Mean travel time (s) of the vehicles of the last complete window.
    pub fn latency(&self) -> f64 {
        self.latency
    }
}

/// Macroscopic state of the road at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub t: u64,
    #[serde(rename = "N")]
    pub n: u64,
    /// veh/m over all lanes
    #[serde(rename = "D")]
    pub d: f64,
    /// m/s, 0 on an empty road
    pub v_av: f64,
    /// veh/s
    pub q: f64,
    pub throughput10: u64,
    pub latency: f64,
    /// 1 when no vehicle is on the road.
    pub empty: u8,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsSeries {
    pub samples: Vec<MetricsSample>,
}

pub fn sample(road: &RoadConfiguration, t: u64, road_length: f64, window: &WindowStats) -> MetricsSample {
    let (n, v_sum) = road
        .vehicles()
        .filter(|c| !c.is_obstacle())
        .fold((0u64, 0.0), |(n, s), c| (n + 1, s + c.v));
    let d = n as f64 / road_length;
    let v_av = if n == 0 { 0.0 } else { v_sum / n as f64 };
    MetricsSample {
        t,
        n,
        d,
        v_av,
        q: d * v_av,
        throughput10: window.throughput(),
        latency: window.latency(),
        empty: u8::from(n == 0),
    }
}

/// Pearson correlation of paired values; `None` when either side is
/// constant or fewer than two pairs are given.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 || xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Flow-density cross-covariance at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcPoint {
    pub t: u64,
    pub cc: f64,
}

/// Normalised cross-covariance of `q` and `D` across repetitions at each
/// time. Instants where it is undefined are left out.
pub fn cross_covariance(ensemble: &[MetricsSeries]) -> Vec<CcPoint> {
    let steps = ensemble.iter().map(|s| s.samples.len()).min().unwrap_or(0);
    let mut out = Vec::new();
    let mut ds = Vec::with_capacity(ensemble.len());
    let mut qs = Vec::with_capacity(ensemble.len());
    for k in 0..steps {
        ds.clear();
        qs.clear();
        for s in ensemble {
            ds.push(s.samples[k].d);
            qs.push(s.samples[k].q);
        }
        if let Some(cc) = pearson(&qs, &ds) {
            out.push(CcPoint { t: ensemble[0].samples[k].t, cc });
        }
    }
    out
}

/// One density bin of the fundamental diagram. Densities in veh/m/lane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramBin {
    pub bin_lo: f64,
    pub center: f64,
    pub count: u64,
    pub mean_q: f64,
    /// Mean of the defined `cc` values at the pooled samples' instants.
    pub mean_cc: Option<f64>,
}

fn sorted_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pools every sample of the ensemble and bins it by per-lane density.
pub fn fundamental_diagram(
    ensemble: &[MetricsSeries],
    cc: &[CcPoint],
    bin_width: f64,
    lanes: usize,
) -> Vec<DiagramBin> {
    let cc_at: BTreeMap<u64, f64> = cc.iter().map(|p| (p.t, p.cc)).collect();
    let mut bins: BTreeMap<i64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in ensemble.iter().flat_map(|s| &s.samples) {
        let key = (s.d / lanes as f64 / bin_width).floor() as i64;
        let (qs, ccs) = bins.entry(key).or_default();
        qs.push(s.q);
        if let Some(&c) = cc_at.get(&s.t) {
            ccs.push(c);
        }
    }
    bins.into_iter()
        .map(|(key, (mut qs, mut ccs))| DiagramBin {
            bin_lo: key as f64 * bin_width,
            center: (key as f64 + 0.5) * bin_width,
            count: qs.len() as u64,
            mean_q: sorted_mean(&mut qs),
            mean_cc: (!ccs.is_empty()).then(|| sorted_mean(&mut ccs)),
        })
        .collect()
}

/// Largest bin mean flow among bins holding at least `min_share` of all
/// pooled samples.
pub fn peak_flow(bins: &[DiagramBin], min_share: f64) -> Option<f64> {
    let total: u64 = bins.iter().map(|b| b.count).sum();
    bins.iter()
        .filter(|b| b.count as f64 >= min_share * total as f64)
        .map(|b| b.mean_q)
        .max_by(f64::total_cmp)
}

/// Centered moving average over `window` points; the window shrinks at
/// the ends.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return values.to_vec();
    }
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + window - half).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Least-squares slope of `y` on `x` with intercept.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
