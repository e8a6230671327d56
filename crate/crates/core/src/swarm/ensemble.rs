use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::Simulation;
use crate::error::{Error, Result};
use crate::frame::Counts;

/// Headline numbers of one ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub peak_infected: usize,
    pub time_of_peak: u64,
    pub final_counts: Counts,
    pub total_control_deviation: f64,
}

/// Per-step mean and sample standard deviation of `[S, I, R, V]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub mean: Vec<[f64; 4]>,
    pub std: Vec<[f64; 4]>,
    pub runs: Vec<RunSummary>,
}

impl EnsembleSummary {
    fn field_stats(&self, f: impl Fn(&RunSummary) -> f64) -> (f64, f64) {
        let xs: Vec<f64> = self.runs.iter().map(f).collect();
        mean_std(&xs)
    }

    pub fn peak_infected(&self) -> (f64, f64) {
        self.field_stats(|r| r.peak_infected as f64)
    }

    pub fn time_of_peak(&self) -> (f64, f64) {
        self.field_stats(|r| r.time_of_peak as f64)
    }

    pub fn final_susceptible(&self) -> (f64, f64) {
        self.field_stats(|r| r.final_counts.s as f64)
    }

    pub fn mean_infected(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m[1]).collect()
    }
}

/// Centered moving average over `2 * half_window + 1` samples, truncated
/// at the ends.
pub fn smooth(series: &[f64], half_window: usize) -> Vec<f64> {
    (0..series.len())
        .map(|t| {
            let lo = t.saturating_sub(half_window);
            let hi = (t + half_window + 1).min(series.len());
            series[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Non-decreasing up to the (first) maximum and non-increasing after it,
/// once smoothed by [`smooth`] with the given half window.
pub fn is_unimodal(series: &[f64], half_window: usize) -> bool {
    let s = smooth(series, half_window);
    let Some(peak) = s
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (k, &v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((k, v)),
        })
        .map(|(k, _)| k)
    else {
        return true;
    };
    s[..=peak].windows(2).all(|w| w[1] >= w[0]) && s[peak..].windows(2).all(|w| w[1] <= w[0])
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn run_counts(config: SimConfig) -> Result<(Vec<Counts>, RunSummary)> {
    let seed = config.seed;
    let mut sim = Simulation::new(config)?;
    let mut counts = vec![sim.last_frame().counts];
    let mut deviation = 0.0;
    while let Some(frame) = sim.advance()? {
        counts.push(frame.counts);
        deviation += frame.control_deviation;
    }
    let (peak_at, peak) = counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (k, c)| if c.i > best.1 { (k, c.i) } else { best });
    let summary = RunSummary {
        seed,
        peak_infected: peak,
        time_of_peak: peak_at as u64,
        final_counts: *counts.last().expect("frame 0 is always present"),
        total_control_deviation: deviation,
    };
    Ok((counts, summary))
}

/// Runs seeds `seed .. seed + n_runs` in parallel and aggregates per step.
pub fn ensemble_run(config: &SimConfig, n_runs: usize) -> Result<EnsembleSummary> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs", "must be >= 1"));
    }
    let results: Vec<(Vec<Counts>, RunSummary)> = (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            let seed = config.seed.wrapping_add(k);
            let cfg = SimConfig { seed, ..config.clone() };
            run_counts(cfg).map_err(|e| Error::Run {
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let steps = results[0].0.len();
    let mut mean = Vec::with_capacity(steps);
    let mut std = Vec::with_capacity(steps);
    let mut column = vec![0.0; n_runs];
    for t in 0..steps {
        let mut m = [0.0; 4];
        let mut s = [0.0; 4];
        for c in 0..4 {
            for (slot, (counts, _)) in column.iter_mut().zip(&results) {
                *slot = counts[t].as_array()[c] as f64;
            }
            (m[c], s[c]) = mean_std(&column);
        }
        mean.push(m);
        std.push(s);
    }
    let runs = results.into_iter().map(|(_, s)| s).collect();
    Ok(EnsembleSummary { mean, std, runs })
}
