//! Run metrics recomputed from a trace.

use serde::Serialize;

use super::trace::TraceRow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("cannot compute an RMSE over an empty series")]
    Empty,
    #[error("series lengths differ ({0} vs {1})")]
    Length(usize, usize),
}

pub fn compute_rmse(series: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if series.len() != reference.len() {
        return Err(MetricsError::Length(series.len(), reference.len()));
    }
    if series.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sum: f64 = series.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / series.len() as f64).sqrt())
}

/// Fraction of the step magnitude that `|f̃|` must settle within.
pub const SETTLING_BAND: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    /// RMSE of the position midpoint against the true leader position (m).
    pub position_rmse: f64,
    /// RMSE of the gap against the desired gap (m).
    pub distance_rmse: f64,
    pub min_gap: f64,
    pub containment_rate: f64,
    /// Time after attack onset from which `|f̃|` stays within the band; `None`
    /// when there is no attack or it never settles.
    pub settling_time: Option<f64>,
    pub collision: bool,
}

/// First time the attack column becomes nonzero, with the value there.
pub fn detect_onset(rows: &[TraceRow]) -> Option<(f64, f64)> {
    rows.iter().find(|r| r.f != 0.0).map(|r| (r.t, r.f))
}

/// Settling time of `|f̃|` into `band` after `onset`.
pub fn settling_time(rows: &[TraceRow], onset: f64, band: f64) -> Option<f64> {
    let post: Vec<&TraceRow> = rows.iter().filter(|r| r.t >= onset).collect();
    let last = post.last()?;
    match post.iter().rposition(|r| r.f_tilde.abs() > band) {
        None => Some(0.0),
        Some(i) if i + 1 == post.len() => None,
        Some(i) => {
            let settled_at = post[i + 1].t;
            debug_assert!(settled_at <= last.t);
            Some(settled_at - onset)
        }
    }
}

impl RunMetrics {
    pub fn from_trace(rows: &[TraceRow], desired_gap: f64) -> Result<Self, MetricsError> {
        if rows.is_empty() {
            return Err(MetricsError::Empty);
        }
        let x_hat: Vec<f64> = rows.iter().map(|r| r.x_hat).collect();
        let x_true: Vec<f64> = rows.iter().map(|r| r.leader_x).collect();
        let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
        let desired = vec![desired_gap; rows.len()];
        let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let contained = rows.iter().filter(|r| r.contained).count();
        let settling = detect_onset(rows)
            .and_then(|(onset, magnitude)| settling_time(rows, onset, SETTLING_BAND * magnitude.abs()));
        Ok(Self {
            position_rmse: compute_rmse(&x_hat, &x_true)?,
            distance_rmse: compute_rmse(&gaps, &desired)?,
            min_gap,
            containment_rate: contained as f64 / rows.len() as f64,
            settling_time: settling,
            collision: min_gap <= 0.0,
        })
    }

    pub fn summary(&self) -> String {
        let settle = match self.settling_time {
            Some(s) => format!("{s:.3} s"),
            None => "n/a".to_string(),
        };
        format!(
            "position RMSE     {:.6} m\n\
             distance RMSE     {:.6} m\n\
             minimum gap       {:.6} m\n\
             containment rate  {:.6}\n\
             f_tilde settling  {settle}\n\
             collision         {}",
            self.position_rmse, self.distance_rmse, self.min_gap, self.containment_rate, self.collision
        )
    }
}
