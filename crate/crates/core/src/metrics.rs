//! Evaluation quantities: order metric, formation error, distance
//! statistics and reconfiguration activity, per step and per run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::BehaviorBreakdown;
use crate::formation::{desired_position, FormationSpec, UavState};
use crate::geometry::Vec2;
use crate::scalar::Scalar;

/// ‖u_r‖ above which a UAV counts as actively reconfiguring (m/s).
pub const DEFAULT_EPS_ACT: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cannot summarize an empty metrics series")]
    EmptySeries,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GoalReached,
    MaxSteps,
    ObstaclePenetration,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::GoalReached => "GoalReached",
            Termination::MaxSteps => "MaxSteps",
            Termination::ObstaclePenetration => "ObstaclePenetration",
        };
        f.write_str(s)
    }
}

/// Metrics for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MetricsRow<T> {
    pub step: usize,
    pub time: T,
    pub phi: T,
    pub avg_error: T,
    pub min_pairwise: T,
    pub avg_consecutive: T,
    pub n_reconfig_active: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MetricsSeries<T> {
    pub rows: Vec<MetricsRow<T>>,
}

/// Run-level statistics in the layout of the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RunSummary<T> {
    pub avg_error_mean: T,
    pub min_pairwise_overall: T,
    pub avg_consecutive_mean: T,
    pub termination: Termination,
    pub steps_used: usize,
}

/// Mean resultant length of the heading unit vectors, in [0, 1].
pub fn order_metric<T: Scalar>(headings: &[T]) -> T {
    if headings.is_empty() {
        return T::zero();
    }
    let sum: Vec2<T> = headings.iter().map(|&psi| Vec2::from_angle(psi)).sum();
    let n = T::from_usize(headings.len()).expect("count fits scalar");
    // rounding can push an aligned sum a hair above n
    (sum.norm() / n).min(T::one())
}

/// Mean distance of followers from their slots relative to the current
/// leader pose. `uavs` must be ordered by id.
pub fn avg_formation_error<T: Scalar>(uavs: &[UavState<T>], spec: &FormationSpec<T>) -> T {
    let leader = &uavs[spec.leader - 1];
    let mut total = T::zero();
    let mut count = 0usize;
    for u in uavs.iter().filter(|u| u.id != spec.leader) {
        let target = desired_position(leader.position, leader.heading, u.id, spec)
            .expect("follower index in range");
        total = total + u.position.distance(target);
        count += 1;
    }
    if count == 0 {
        T::zero()
    } else {
        total / T::from_usize(count).expect("count fits scalar")
    }
}

/// Minimum pairwise distance and the full list of `(i, j, ‖p_ij‖)` for `i < j`
/// (1-based ids, positions ordered by id).
pub fn pairwise_stats<T: Scalar>(positions: &[Vec2<T>]) -> (T, Vec<(usize, usize, T)>) {
    let mut pairs = Vec::with_capacity(positions.len() * positions.len().saturating_sub(1) / 2);
    let mut min = T::infinity();
    for (a, pa) in positions.iter().enumerate() {
        for (b, pb) in positions.iter().enumerate().skip(a + 1) {
            let dist = pa.distance(*pb);
            min = min.min(dist);
            pairs.push((a + 1, b + 1, dist));
        }
    }
    (min, pairs)
}

/// Mean of `‖p_i − p_{i+1}‖` over index-consecutive pairs.
pub fn avg_consecutive_distance<T: Scalar>(positions: &[Vec2<T>]) -> T {
    let gaps = positions.len().saturating_sub(1);
    if gaps == 0 {
        return T::zero();
    }
    let total = positions
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]));
    total / T::from_usize(gaps).expect("count fits scalar")
}

/// Number of UAVs whose reconfiguration output exceeds `eps_act`.
pub fn reconfig_activation_count<T: Scalar>(
    breakdowns: &[BehaviorBreakdown<T>],
    eps_act: T,
) -> usize {
    breakdowns.iter().filter(|b| b.u_r.norm() > eps_act).count()
}

/// Largest spread of the formation perpendicular to `heading`.
pub fn lateral_extent<T: Scalar>(positions: &[Vec2<T>], heading: T) -> T {
    let normal = Vec2::from_angle(heading + T::FRAC_PI_2());
    let (lo, hi) = positions
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), p| {
            let s = p.dot(normal);
            (lo.min(s), hi.max(s))
        });
    if positions.is_empty() {
        T::zero()
    } else {
        hi - lo
    }
}

/// Computes one metrics row from a snapshot. `u_r_norms` lists ‖u_r‖ per UAV.
pub fn metrics_row<T: Scalar>(
    step: usize,
    time: T,
    uavs: &[UavState<T>],
    u_r_norms: impl IntoIterator<Item = T>,
    spec: &FormationSpec<T>,
    eps_act: T,
) -> MetricsRow<T> {
    let positions: Vec<Vec2<T>> = uavs.iter().map(|u| u.position).collect();
    let headings: Vec<T> = uavs.iter().map(|u| u.heading).collect();
    MetricsRow {
        step,
        time,
        phi: order_metric(&headings),
        avg_error: avg_formation_error(uavs, spec),
        min_pairwise: pairwise_stats(&positions).0,
        avg_consecutive: avg_consecutive_distance(&positions),
        n_reconfig_active: u_r_norms.into_iter().filter(|n| *n > eps_act).count(),
    }
}

/// Time-means of error and consecutive distance, global minimum distance.
pub fn summarize<T: Scalar>(
    series: &MetricsSeries<T>,
    termination: Termination,
) -> Result<RunSummary<T>, MetricsError> {
    let rows = &series.rows;
    let last = rows.last().ok_or(MetricsError::EmptySeries)?;
    let n = T::from_usize(rows.len()).expect("count fits scalar");
    let mean = |f: fn(&MetricsRow<T>) -> T| rows.iter().map(f).fold(T::zero(), |a, b| a + b) / n;
    Ok(RunSummary {
        avg_error_mean: mean(|r| r.avg_error),
        min_pairwise_overall: rows
            .iter()
            .map(|r| r.min_pairwise)
            .fold(T::infinity(), T::min),
        avg_consecutive_mean: mean(|r| r.avg_consecutive),
        termination,
        steps_used: last.step,
    })
}
