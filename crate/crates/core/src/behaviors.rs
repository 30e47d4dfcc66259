//! Distributed potential-field behaviors and the per-UAV combination law.
//!
//! Every behavior maps locally observed state to a velocity contribution.
//! The leader combines goal reaching, reconfiguration, collision and
//! obstacle terms; followers swap goal reaching for the formation term.
//! Pair terms are computed by [`collision_term`] and
//! [`reconfiguration_term`], which are antisymmetric in `(i, j)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formation::{same_wing, FormationSpec};
use crate::geometry::{Obstacle, Vec2};
use crate::scalar::{eps_zero, Scalar};
use crate::simulator::{sense_obstacles, SensedObstacle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("gain `{0}` must be strictly positive and finite")]
    NonPositiveGain(&'static str),
    #[error("sensing ranges need 0 < r_a < r_s, got r_a={r_a}, r_s={r_s}")]
    InvalidRanges { r_a: f64, r_s: f64 },
}

/// Behavior coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Gains<T> {
    pub k_f: T,
    pub k_g: T,
    pub k_o: T,
    pub k_c: T,
    pub k_r: T,
    pub beta_c: T,
    pub beta_r: T,
}

impl<T: Scalar> Default for Gains<T> {
    fn default() -> Self {
        Self {
            k_f: T::lit(1.0),
            k_g: T::lit(0.5),
            k_o: T::lit(0.3),
            k_c: T::lit(0.5),
            k_r: T::lit(8.0),
            beta_c: T::lit(20.0),
            beta_r: T::lit(1.5),
        }
    }
}

impl<T: Scalar> Gains<T> {
    pub fn named(&self) -> [(&'static str, T); 7] {
        [
            ("k_f", self.k_f),
            ("k_g", self.k_g),
            ("k_o", self.k_o),
            ("k_c", self.k_c),
            ("k_r", self.k_r),
            ("beta_c", self.beta_c),
            ("beta_r", self.beta_r),
        ]
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > T::zero()) {
                return Err(BehaviorError::NonPositiveGain(name));
            }
        }
        Ok(())
    }
}

/// Sensing (`r_s`) and alert (`r_a`) radii in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SensingRanges<T> {
    pub r_s: T,
    pub r_a: T,
}

impl<T: Scalar> Default for SensingRanges<T> {
    fn default() -> Self {
        Self {
            r_s: T::lit(2.0),
            r_a: T::lit(0.3),
        }
    }
}

impl<T: Scalar> SensingRanges<T> {
    pub fn new(r_a: T, r_s: T) -> Result<Self, BehaviorError> {
        let ranges = Self { r_s, r_a };
        ranges.validate()?;
        Ok(ranges)
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        if self.r_a > T::zero() && self.r_a < self.r_s && self.r_s.is_finite() {
            Ok(())
        } else {
            Err(BehaviorError::InvalidRanges {
                r_a: self.r_a.as_f64(),
                r_s: self.r_s.as_f64(),
            })
        }
    }
}

/// Direction convention for the reconfiguration pair force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconfigMode {
    /// Always along `p_i − p_j`.
    Literal,
    /// Repulsive below the desired distance, attractive above it.
    #[default]
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower,
}

/// A summed velocity contribution plus whether any pair/obstacle term hit a
/// zero-length direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution<T> {
    pub value: Vec2<T>,
    pub degenerate: bool,
}

impl<T: Scalar> Contribution<T> {
    pub fn zero() -> Self {
        Self {
            value: Vec2::zero(),
            degenerate: false,
        }
    }

    fn accumulate(mut self, other: Self) -> Self {
        self.value += other.value;
        self.degenerate |= other.degenerate;
        self
    }
}

/// Raw behavior outputs for one UAV, before combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorTerms<T> {
    pub u_f: Vec2<T>,
    pub u_g: Vec2<T>,
    pub u_o: Vec2<T>,
    pub u_c: Vec2<T>,
    pub u_r: Vec2<T>,
}

impl<T: Scalar> Default for BehaviorTerms<T> {
    fn default() -> Self {
        Self {
            u_f: Vec2::zero(),
            u_g: Vec2::zero(),
            u_o: Vec2::zero(),
            u_c: Vec2::zero(),
            u_r: Vec2::zero(),
        }
    }
}

/// Per-UAV behavior outputs for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BehaviorBreakdown<T> {
    pub u_f: Vec2<T>,
    pub u_g: Vec2<T>,
    pub u_o: Vec2<T>,
    pub u_c: Vec2<T>,
    pub u_r: Vec2<T>,
    pub u_total: Vec2<T>,
    pub reconfig_active: bool,
}

impl<T: Scalar> Default for BehaviorBreakdown<T> {
    fn default() -> Self {
        combine_control(
            Role::Follower,
            BehaviorTerms::default(),
            T::one(),
            T::lit(crate::metrics::DEFAULT_EPS_ACT),
        )
    }
}

/// `−k_f (p_i − p_d) + u_l`.
pub fn formation_behavior<T: Scalar>(
    p_i: Vec2<T>,
    p_desired: Vec2<T>,
    u_l: Vec2<T>,
    k_f: T,
) -> Vec2<T> {
    -(p_i - p_desired) * k_f + u_l
}

/// `−k_g (p_i − p_g)`.
pub fn goal_behavior<T: Scalar>(p_i: Vec2<T>, p_g: Vec2<T>, k_g: T) -> Vec2<T> {
    -(p_i - p_g) * k_g
}

/// Repulsion from one sensed obstacle point, zero at and beyond `r_s`.
pub fn obstacle_term<T: Scalar>(
    p_i: Vec2<T>,
    sensed: SensedObstacle<T>,
    r_s: T,
    k_o: T,
) -> Contribution<T> {
    if sensed.distance >= r_s {
        return Contribution::zero();
    }
    let u = (p_i - sensed.closest_point).unit();
    if u.degenerate || sensed.distance < eps_zero() {
        return Contribution {
            value: Vec2::zero(),
            degenerate: true,
        };
    }
    let d2 = sensed.distance * sensed.distance;
    let magnitude = k_o * (d2.recip() - (r_s * r_s).recip());
    Contribution {
        value: u.dir * magnitude,
        degenerate: false,
    }
}

/// Sum of obstacle repulsions over every obstacle inside the sensing radius.
pub fn obstacle_behavior<T: Scalar>(
    p_i: Vec2<T>,
    obstacles: &[Obstacle<T>],
    ranges: &SensingRanges<T>,
    k_o: T,
) -> Contribution<T> {
    sense_obstacles(p_i, obstacles, ranges.r_s)
        .into_iter()
        .map(|s| obstacle_term(p_i, s, ranges.r_s, k_o))
        .fold(Contribution::zero(), Contribution::accumulate)
}

/// Direction used when two UAVs coincide: opposite along x, ordered by index.
fn coincident_push<T: Scalar>(i: usize, j: usize) -> Vec2<T> {
    if i < j {
        Vec2::new(-T::one(), T::zero())
    } else {
        Vec2::new(T::one(), T::zero())
    }
}

/// Collision repulsion UAV `i` receives from `j`.
///
/// Magnitude `k_c e^{−β_c(‖p_ij‖ − r_a)} / (‖p_ij‖ − r_a)`, capped at
/// `cap`; pairs at or inside the alert radius get the cap.
pub fn collision_term<T: Scalar>(
    (i, p_i): (usize, Vec2<T>),
    (j, p_j): (usize, Vec2<T>),
    ranges: &SensingRanges<T>,
    gains: &Gains<T>,
    cap: T,
) -> Contribution<T> {
    let offset = p_i - p_j;
    let dist = offset.norm();
    if dist >= ranges.r_s {
        return Contribution::zero();
    }
    let u = offset.unit();
    if u.degenerate {
        return Contribution {
            value: coincident_push(i, j) * cap,
            degenerate: true,
        };
    }
    let gap = dist - ranges.r_a;
    let magnitude = if gap <= eps_zero() {
        cap
    } else {
        (gains.k_c * (-gains.beta_c * gap).exp() / gap).min(cap)
    };
    Contribution {
        value: u.dir * magnitude,
        degenerate: false,
    }
}

/// Collision avoidance against every cross-wing neighbor within `r_s`.
pub fn collision_behavior<T: Scalar>(
    (i, p_i): (usize, Vec2<T>),
    neighbors: &[(usize, Vec2<T>)],
    leader: usize,
    ranges: &SensingRanges<T>,
    gains: &Gains<T>,
    cap: T,
) -> Contribution<T> {
    neighbors
        .iter()
        .filter(|(j, _)| *j != i && !same_wing(i, *j, leader))
        .map(|&other| collision_term((i, p_i), other, ranges, gains, cap))
        .fold(Contribution::zero(), Contribution::accumulate)
}

/// Reconfiguration force UAV `i` receives from same-wing UAV `j` whose
/// desired distance is `d_ij`.
///
/// Magnitude `k_r |‖p_ij‖ − d_ij|^β_r / (‖p_ij‖ − r_a)²`, capped at `cap`.
/// Pairs at or inside the alert radius are pushed apart at the cap in
/// either mode.
pub fn reconfiguration_term<T: Scalar>(
    (i, p_i): (usize, Vec2<T>),
    (j, p_j): (usize, Vec2<T>),
    d_ij: T,
    ranges: &SensingRanges<T>,
    gains: &Gains<T>,
    mode: ReconfigMode,
    cap: T,
) -> Contribution<T> {
    let offset = p_i - p_j;
    let dist = offset.norm();
    if dist >= ranges.r_s {
        return Contribution::zero();
    }
    let u = offset.unit();
    if u.degenerate {
        return Contribution {
            value: coincident_push(i, j) * cap,
            degenerate: true,
        };
    }
    let gap = dist - ranges.r_a;
    if gap <= eps_zero() {
        return Contribution {
            value: u.dir * cap,
            degenerate: false,
        };
    }
    let error = dist - d_ij;
    let magnitude = (gains.k_r * error.abs().powf(gains.beta_r) / (gap * gap)).min(cap);
    let sign = match mode {
        ReconfigMode::Literal => T::one(),
        ReconfigMode::Signed => {
            if error > T::zero() {
                -T::one()
            } else {
                T::one()
            }
        }
    };
    Contribution {
        value: u.dir * (magnitude * sign),
        degenerate: false,
    }
}

/// Reconfiguration against every same-wing neighbor (leader included) within `r_s`.
#[allow(clippy::too_many_arguments)]
pub fn reconfiguration_behavior<T: Scalar>(
    (i, p_i): (usize, Vec2<T>),
    neighbors: &[(usize, Vec2<T>)],
    spec: &FormationSpec<T>,
    ranges: &SensingRanges<T>,
    gains: &Gains<T>,
    mode: ReconfigMode,
    cap: T,
) -> Contribution<T> {
    neighbors
        .iter()
        .filter(|(j, _)| *j != i && spec.same_wing(i, *j))
        .map(|&(j, p_j)| {
            let d_ij = spec.d * T::from_usize(i.abs_diff(j)).expect("index fits scalar");
            reconfiguration_term((i, p_i), (j, p_j), d_ij, ranges, gains, mode, cap)
        })
        .fold(Contribution::zero(), Contribution::accumulate)
}

/// Role-dependent sum of behaviors, saturated at `v_max`.
///
/// The leader ignores `u_f`, followers ignore `u_g`; the ignored term is
/// recorded as zero in the breakdown.
pub fn combine_control<T: Scalar>(
    role: Role,
    terms: BehaviorTerms<T>,
    v_max: T,
    eps_act: T,
) -> BehaviorBreakdown<T> {
    let (u_f, u_g) = match role {
        Role::Leader => (Vec2::zero(), terms.u_g),
        Role::Follower => (terms.u_f, Vec2::zero()),
    };
    let raw = u_f + u_g + terms.u_r + terms.u_c + terms.u_o;
    BehaviorBreakdown {
        u_f,
        u_g,
        u_o: terms.u_o,
        u_c: terms.u_c,
        u_r: terms.u_r,
        u_total: raw.clamp_norm(v_max),
        reconfig_active: terms.u_r.norm() > eps_act,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::SensedObstacle;

    type V = Vec2<f64>;

    fn v(x: f64, y: f64) -> V {
        Vec2::new(x, y)
    }

    fn near(a: V, b: V) -> bool {
        (a - b).norm() < 1e-6
    }

    fn unit_gains() -> Gains<f64> {
        Gains {
            k_f: 1.0,
            k_g: 1.0,
            k_o: 1.0,
            k_c: 1.0,
            k_r: 1.0,
            beta_c: 1.0,
            beta_r: 1.0,
        }
    }

    #[test]
    fn formation_examples() {
        assert!(near(
            formation_behavior(v(1.0, 0.0), v(0.0, 0.0), v(0.5, 0.0), 1.0),
            v(-0.5, 0.0)
        ));
        assert!(near(
            formation_behavior(v(2.0, 2.0), v(2.0, 2.0), v(0.3, 0.1), 1.0),
            v(0.3, 0.1)
        ));
        assert!(near(
            formation_behavior(v(0.0, 2.0), v(0.0, 0.0), v(0.0, 0.0), 2.0),
            v(0.0, -4.0)
        ));
    }

    #[test]
    fn goal_examples() {
        assert!(near(
            goal_behavior(v(3.0, 1.0), v(3.0, 1.0), 0.5),
            v(0.0, 0.0)
        ));
        assert!(near(
            goal_behavior(v(0.0, 0.0), v(4.0, 0.0), 0.5),
            v(2.0, 0.0)
        ));
        assert!(near(
            goal_behavior(v(1.0, 1.0), v(0.0, 0.0), 1.0),
            v(-1.0, -1.0)
        ));
    }

    #[test]
    fn obstacle_term_examples() {
        let at = |closest: V, distance: f64| SensedObstacle {
            closest_point: closest,
            distance,
        };
        // at the sensing boundary
        let c = obstacle_term(v(2.0, 0.0), at(v(0.0, 0.0), 2.0), 2.0, 3.0);
        assert_eq!(c.value, v(0.0, 0.0));
        let c = obstacle_term(v(1.0, 0.0), at(v(0.0, 0.0), 1.0), 2.0, 1.0);
        assert!(near(c.value, v(0.75, 0.0)));
        let c = obstacle_term(v(1.0, 0.0), at(v(1.0, 0.0), 0.0), 2.0, 1.0);
        assert!(c.degenerate);
        assert_eq!(c.value, v(0.0, 0.0));
    }

    #[test]
    fn obstacle_behavior_repels_and_cancels_symmetrically() {
        let ranges = SensingRanges::default();
        let circle = Obstacle::circle(v(-1.0, 0.0), 1.0).unwrap();
        // closest point at the origin, UAV at (1, 0)
        let c = obstacle_behavior(v(1.0, 0.0), &[circle], &ranges, 1.0);
        assert!(near(c.value, v(0.75, 0.0)));

        let above = Obstacle::circle(v(0.0, 1.5), 0.5).unwrap();
        let below = Obstacle::circle(v(0.0, -1.5), 0.5).unwrap();
        let c = obstacle_behavior(v(0.0, 0.0), &[above, below], &ranges, 1.0);
        assert_eq!(c.value.y, 0.0);

        let far = Obstacle::circle(v(10.0, 0.0), 1.0).unwrap();
        assert_eq!(
            obstacle_behavior(v(0.0, 0.0), &[far], &ranges, 1.0).value,
            v(0.0, 0.0)
        );
    }

    #[test]
    fn collision_examples() {
        let ranges = SensingRanges { r_s: 2.0, r_a: 0.3 };
        let g = unit_gains();
        let out = collision_term((1, v(2.5, 0.0)), (3, v(0.0, 0.0)), &ranges, &g, 20.0);
        assert_eq!(out.value, v(0.0, 0.0));
        let out = collision_term((1, v(1.3, 0.0)), (3, v(0.0, 0.0)), &ranges, &g, 20.0);
        assert!(near(out.value, v((-1f64).exp(), 0.0)));
        assert!((out.value.x - 0.36788).abs() < 1e-5);
        let out = collision_term(
            (1, v(0.3 + 1e-6, 0.0)),
            (3, v(0.0, 0.0)),
            &ranges,
            &g,
            100.0,
        );
        assert!((out.value.norm() - 100.0).abs() < 1e-9);
        let inside = collision_term((1, v(0.1, 0.0)), (3, v(0.0, 0.0)), &ranges, &g, 100.0);
        assert_eq!(inside.value, v(100.0, 0.0));
    }

    #[test]
    fn coincident_uavs_are_pushed_apart() {
        let ranges = SensingRanges::default();
        let g = Gains::default();
        let a = collision_term((1, v(1.0, 1.0)), (3, v(1.0, 1.0)), &ranges, &g, 20.0);
        let b = collision_term((3, v(1.0, 1.0)), (1, v(1.0, 1.0)), &ranges, &g, 20.0);
        assert!(a.degenerate && b.degenerate);
        assert_eq!(a.value, v(-20.0, 0.0));
        assert_eq!(b.value, v(20.0, 0.0));
    }

    #[test]
    fn collision_behavior_skips_same_wing() {
        let ranges = SensingRanges::default();
        let g = unit_gains();
        let neighbors = [(2, v(0.0, 0.0)), (3, v(0.0, 1.0)), (4, v(1.0, 0.0))];
        // UAV 1 with leader 3: only UAV 4 is cross-wing
        let out = collision_behavior((1, v(1.0, 1.0)), &neighbors, 3, &ranges, &g, 20.0);
        let expected = collision_term((1, v(1.0, 1.0)), (4, v(1.0, 0.0)), &ranges, &g, 20.0);
        assert_eq!(out.value, expected.value);
    }

    #[test]
    fn reconfiguration_examples() {
        let ranges = SensingRanges { r_s: 2.0, r_a: 0.3 };
        let g = unit_gains();
        let term = |p_i: V, d: f64, mode| {
            reconfiguration_term((1, p_i), (2, v(0.0, 0.0)), d, &ranges, &g, mode, 20.0).value
        };
        assert_eq!(term(v(0.8, 0.0), 0.8, ReconfigMode::Signed), v(0.0, 0.0));
        let repel = term(v(0.6, 0.0), 0.8, ReconfigMode::Signed);
        assert!(near(repel, v(0.2 / 0.09, 0.0)));
        assert!((repel.x - 2.22222).abs() < 1e-5);
        let attract = term(v(1.0, 0.0), 0.8, ReconfigMode::Signed);
        assert!((attract.x + 0.40816).abs() < 1e-5 && attract.y == 0.0);
        let literal = term(v(1.0, 0.0), 0.8, ReconfigMode::Literal);
        assert!((literal.x - 0.40816).abs() < 1e-5);
        assert_eq!(term(v(2.5, 0.0), 0.8, ReconfigMode::Signed), v(0.0, 0.0));
        // inside alert radius: capped repulsion in both modes
        assert_eq!(term(v(0.2, 0.0), 0.1, ReconfigMode::Signed), v(20.0, 0.0));
    }

    #[test]
    fn reconfiguration_behavior_uses_leader_inclusive_wings() {
        let spec = FormationSpec::new(5, 0.8, 3.0 * std::f64::consts::PI / 4.0).unwrap();
        let ranges = SensingRanges::default();
        let g = Gains::default();
        let neighbors = [(3, v(0.0, 0.0)), (4, v(0.5, 0.0)), (1, v(0.0, 0.6))];
        let out = reconfiguration_behavior(
            (5, v(1.0, 0.0)),
            &neighbors,
            &spec,
            &ranges,
            &g,
            ReconfigMode::Signed,
            20.0,
        );
        let expected = reconfiguration_term(
            (5, v(1.0, 0.0)),
            (3, v(0.0, 0.0)),
            1.6,
            &ranges,
            &g,
            ReconfigMode::Signed,
            20.0,
        )
        .value
            + reconfiguration_term(
                (5, v(1.0, 0.0)),
                (4, v(0.5, 0.0)),
                0.8,
                &ranges,
                &g,
                ReconfigMode::Signed,
                20.0,
            )
            .value;
        assert!(near(out.value, expected));
    }

    #[test]
    fn combine_examples() {
        let leader = combine_control(
            Role::Leader,
            BehaviorTerms {
                u_g: v(1.0, 0.0),
                u_f: v(5.0, 5.0),
                ..Default::default()
            },
            2.0,
            1e-3,
        );
        assert_eq!(leader.u_total, v(1.0, 0.0));
        assert_eq!(leader.u_f, v(0.0, 0.0));

        let sat = combine_control(
            Role::Follower,
            BehaviorTerms {
                u_f: v(3.0, 4.0),
                ..Default::default()
            },
            2.0,
            1e-3,
        );
        assert!(near(sat.u_total, v(1.2, 1.6)));

        let idle = combine_control(Role::Follower, BehaviorTerms::<f64>::default(), 2.0, 1e-3);
        assert_eq!(idle.u_total, v(0.0, 0.0));
        assert!(!idle.reconfig_active);

        let active = combine_control(
            Role::Follower,
            BehaviorTerms {
                u_r: v(0.0, 0.5),
                u_g: v(9.0, 0.0),
                ..Default::default()
            },
            2.0,
            1e-3,
        );
        assert!(active.reconfig_active);
        assert_eq!(active.u_g, v(0.0, 0.0));
    }

    #[test]
    fn gain_and_range_validation() {
        let mut g = Gains::<f64>::default();
        assert!(g.validate().is_ok());
        g.beta_r = 0.0;
        assert_eq!(g.validate(), Err(BehaviorError::NonPositiveGain("beta_r")));
        assert!(SensingRanges::new(0.3, 2.0).is_ok());
        assert!(SensingRanges::new(2.0, 2.0).is_err());
        assert!(SensingRanges::new(0.0, 2.0).is_err());
    }
}
