use crate::sim::CompletionCurve;

use super::{HarnessError, TrialResult};

/// Completion curves of one goal's trials sampled on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveStats {
    pub time_s: Vec<f64>,
    pub mean_pct: Vec<f64>,
    /// Population standard deviation across trials.
    pub std_pct: Vec<f64>,
    pub best_pct: Vec<f64>,
    pub best_repeat: u32,
}

/// Highest final completion, then shortest total time, then earliest repeat.
pub fn best_trial(trials: &[TrialResult]) -> Option<&TrialResult> {
    trials.iter().min_by(|a, b| {
        b.final_completion_pct
            .total_cmp(&a.final_completion_pct)
            .then(a.total_time_s.total_cmp(&b.total_time_s))
            .then(a.repeat_index.cmp(&b.repeat_index))
    })
}

/// Number of grid rows covering `[0, max_time_s]` at spacing `dt`.
pub fn grid_len(max_time_s: f64, dt: f64) -> usize {
    (max_time_s / dt).ceil() as usize + 1
}

pub fn curve_stats(trials: &[TrialResult], grid_dt_s: f64) -> Result<CurveStats, HarnessError> {
    if !(grid_dt_s.is_finite() && grid_dt_s > 0.0) {
        return Err(HarnessError::Grid(format!("grid spacing {grid_dt_s} is not positive")));
    }
    let best = best_trial(trials).ok_or_else(|| HarnessError::Protocol("no trials to summarize".into()))?;
    let max_t = trials.iter().map(|t| t.total_time_s).fold(0.0, f64::max);
    let time_s: Vec<f64> = (0..grid_len(max_t, grid_dt_s)).map(|k| k as f64 * grid_dt_s).collect();
    let curves: Vec<&CompletionCurve> = trials.iter().map(|t| &t.curve).collect();
    let n = curves.len() as f64;
    let mut mean_pct = Vec::with_capacity(time_s.len());
    let mut std_pct = Vec::with_capacity(time_s.len());
    for &t in &time_s {
        let xs: Vec<f64> = curves.iter().map(|c| c.value_at(t)).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        mean_pct.push(mean);
        std_pct.push(var.sqrt());
    }
    let best_pct = time_s.iter().map(|&t| best.curve.value_at(t)).collect();
    Ok(CurveStats { time_s, mean_pct, std_pct, best_pct, best_repeat: best.repeat_index })
}
