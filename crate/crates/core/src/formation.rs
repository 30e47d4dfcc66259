//! V-shape blueprint: leader choice, wing membership and desired slots.
//!
//! UAVs are numbered `1..=n`. The leader `l = ⌈n/2⌉` sits at the apex; UAVs
//! with a smaller index form one wing, those with a larger index the other.
//! Follower `i` is placed `d·|l − i|` behind the leader along a ray rotated
//! `±alpha` from the leader heading.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::scalar::{eps_zero, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    #[error("formation needs at least 2 UAVs, got {0}")]
    TooFewUavs(usize),
    #[error("UAV index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("the leader (index {0}) has no formation offset")]
    LeaderHasNoOffset(usize),
    #[error("UAVs {0} and {1} are not on the same wing")]
    CrossWingPair(usize, usize),
    #[error("a pair needs two distinct UAVs, got {0} twice")]
    SameUav(usize),
    #[error("desired spacing d must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("wing angle alpha must lie in (pi/2, pi), got {0}")]
    AlphaOutOfRange(f64),
}

/// Which part of the V a UAV belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wing {
    Left,
    Right,
    Leader,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FormationSpec<T> {
    pub n: usize,
    /// Spacing between consecutive UAVs on a wing (m).
    pub d: T,
    /// Wing bearing relative to the formation heading (rad).
    pub alpha: T,
    /// 1-based leader index.
    pub leader: usize,
}

impl<T: Scalar> FormationSpec<T> {
    /// Spec with the default leader `⌈n/2⌉`.
    pub fn new(n: usize, d: T, alpha: T) -> Result<Self, FormationError> {
        let spec = Self {
            n,
            d,
            alpha,
            leader: leader_index(n)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FormationError> {
        if self.n < 2 {
            return Err(FormationError::TooFewUavs(self.n));
        }
        if !(self.d.is_finite() && self.d > T::zero()) {
            return Err(FormationError::NonPositiveSpacing(self.d.as_f64()));
        }
        if !(self.alpha > T::FRAC_PI_2() && self.alpha < T::PI()) {
            return Err(FormationError::AlphaOutOfRange(self.alpha.as_f64()));
        }
        self.check_index(self.leader)
    }

    fn check_index(&self, i: usize) -> Result<(), FormationError> {
        if i == 0 || i > self.n {
            Err(FormationError::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn wing_of(&self, i: usize) -> Wing {
        wing_of(i, self.leader)
    }

    pub fn same_wing(&self, i: usize, j: usize) -> bool {
        same_wing(i, j, self.leader)
    }

    /// Desired slots for every UAV, leader included, indexed `0..n` by `id − 1`.
    pub fn desired_positions(&self, p_l: Vec2<T>, psi_l: T) -> Vec<Vec2<T>> {
        (1..=self.n)
            .map(|i| {
                if i == self.leader {
                    p_l
                } else {
                    desired_position(p_l, psi_l, i, self).expect("index in range")
                }
            })
            .collect()
    }
}

/// Kinematic state of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UavState<T> {
    pub id: usize,
    pub position: Vec2<T>,
    pub velocity: Vec2<T>,
    pub heading: T,
}

impl<T: Scalar> UavState<T> {
    pub fn at_rest(id: usize, position: Vec2<T>) -> Self {
        Self {
            id,
            position,
            velocity: Vec2::zero(),
            heading: T::zero(),
        }
    }

    /// Applies a commanded velocity: stores it and refreshes the heading
    /// unless the velocity is too short to define one.
    pub fn set_velocity(&mut self, velocity: Vec2<T>) {
        self.velocity = velocity;
        if velocity.norm() > eps_zero() {
            self.heading = velocity.angle();
        }
    }
}

/// `⌈n/2⌉`, 1-based.
pub fn leader_index(n: usize) -> Result<usize, FormationError> {
    if n < 2 {
        return Err(FormationError::TooFewUavs(n));
    }
    Ok(n.div_ceil(2))
}

/// Desired distance and bearing of follower `i` relative to the leader.
pub fn desired_offset<T: Scalar>(
    i: usize,
    spec: &FormationSpec<T>,
    psi_l: T,
) -> Result<(T, T), FormationError> {
    spec.check_index(i)?;
    let l = spec.leader;
    if i == l {
        return Err(FormationError::LeaderHasNoOffset(l));
    }
    let steps = T::from_usize(i.abs_diff(l)).expect("index fits scalar");
    let bearing = if i < l {
        psi_l + spec.alpha
    } else {
        psi_l - spec.alpha
    };
    Ok((spec.d * steps, bearing))
}

/// Desired position of follower `i` given the leader pose.
pub fn desired_position<T: Scalar>(
    p_l: Vec2<T>,
    psi_l: T,
    i: usize,
    spec: &FormationSpec<T>,
) -> Result<Vec2<T>, FormationError> {
    let (dist, bearing) = desired_offset(i, spec, psi_l)?;
    Ok(p_l + Vec2::from_angle(bearing) * dist)
}

pub fn wing_of(i: usize, l: usize) -> Wing {
    match i.cmp(&l) {
        std::cmp::Ordering::Less => Wing::Left,
        std::cmp::Ordering::Equal => Wing::Leader,
        std::cmp::Ordering::Greater => Wing::Right,
    }
}

/// Same-wing test; the leader belongs to both wings.
pub fn same_wing(i: usize, j: usize, l: usize) -> bool {
    (i <= l && j <= l) || (i >= l && j >= l)
}

/// `d·|i − j|` for a same-wing pair.
pub fn desired_pair_distance<T: Scalar>(
    i: usize,
    j: usize,
    spec: &FormationSpec<T>,
) -> Result<T, FormationError> {
    spec.check_index(i)?;
    spec.check_index(j)?;
    if i == j {
        return Err(FormationError::SameUav(i));
    }
    if !spec.same_wing(i, j) {
        return Err(FormationError::CrossWingPair(i, j));
    }
    Ok(spec.d * T::from_usize(i.abs_diff(j)).expect("index fits scalar"))
}
