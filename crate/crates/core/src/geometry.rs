//! 2D vector algebra and static obstacle shapes.
//!
//! Everything here is a pure function of immutable values. Obstacles are
//! either circles or convex counter-clockwise polygons; both answer the one
//! query the behaviors need, the closest point on their boundary.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{eps_zero, Scalar};

/// Position (m) or velocity (m/s) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

/// Result of normalizing a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec<T> {
    pub dir: Vec2<T>,
    /// Set when the input was shorter than the zero threshold; `dir` is then zero.
    pub degenerate: bool,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Heading vector `[cos θ, sin θ]`.
    pub fn from_angle(theta: T) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn unit(self) -> UnitVec<T> {
        let n = self.norm();
        if n < eps_zero() {
            UnitVec {
                dir: Self::zero(),
                degenerate: true,
            }
        } else {
            UnitVec {
                dir: self / n,
                degenerate: false,
            }
        }
    }

    /// `atan2(y, x)`, in (−π, π].
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotate(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Rescales to norm `limit` if longer, preserving direction.
    pub fn clamp_norm(self, limit: T) -> Self {
        let n = self.norm();
        if n > limit && n > T::zero() {
            self * (limit / n)
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Div<T> for Vec2<T> {
    type Output = Self;
    fn div(self, k: T) -> Self {
        Self::new(self.x / k, self.y / k)
    }
}

impl<T: Scalar> std::iter::Sum for Vec2<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), Add::add)
    }
}

/// Euclidean length of `v`.
pub fn norm<T: Scalar>(v: Vec2<T>) -> T {
    v.norm()
}

/// Unit vector parallel to `v`, or zero with the degeneracy flag set.
pub fn unit<T: Scalar>(v: Vec2<T>) -> UnitVec<T> {
    v.unit()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("circle radius must be strictly positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFiniteVertex(usize),
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon vertices must be listed counter-clockwise")]
    Clockwise,
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
}

/// Static obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "type", rename_all = "snake_case")]
pub enum Obstacle<T> {
    Circle { center: Vec2<T>, radius: T },
    ConvexPolygon { vertices: Vec<Vec2<T>> },
}

impl<T: Scalar> Obstacle<T> {
    pub fn circle(center: Vec2<T>, radius: T) -> Result<Self, GeometryError> {
        let obstacle = Obstacle::Circle { center, radius };
        obstacle.validate()?;
        Ok(obstacle)
    }

    pub fn polygon(vertices: Vec<Vec2<T>>) -> Result<Self, GeometryError> {
        let obstacle = Obstacle::ConvexPolygon { vertices };
        obstacle.validate()?;
        Ok(obstacle)
    }

    /// Axis-aligned rectangle, stored as a counter-clockwise polygon.
    pub fn rect(min: Vec2<T>, max: Vec2<T>) -> Result<Self, GeometryError> {
        Self::polygon(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Obstacle::Circle { center, radius } => {
                if !(radius.is_finite() && *radius > T::zero()) || !center.is_finite() {
                    return Err(GeometryError::NonPositiveRadius(radius.as_f64()));
                }
                Ok(())
            }
            Obstacle::ConvexPolygon { vertices } => validate_convex_ccw(vertices),
        }
    }

    /// Closest point on the boundary; also defined for interior points.
    pub fn closest_boundary_point(&self, p: Vec2<T>) -> Vec2<T> {
        match self {
            Obstacle::Circle { center, radius } => {
                let u = (p - *center).unit();
                let dir = if u.degenerate {
                    Vec2::new(T::one(), T::zero())
                } else {
                    u.dir
                };
                *center + dir * *radius
            }
            Obstacle::ConvexPolygon { vertices } => {
                let mut best = vertices[0];
                let mut best_d2 = T::infinity();
                for (a, b) in edges(vertices) {
                    let q = closest_on_segment(a, b, p);
                    let d2 = (p - q).norm_squared();
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = q;
                    }
                }
                best
            }
        }
    }

    /// Distance to the boundary for outside points, 0 on or inside.
    pub fn distance(&self, p: Vec2<T>) -> T {
        match self {
            Obstacle::Circle { center, radius } => (p.distance(*center) - *radius).max(T::zero()),
            Obstacle::ConvexPolygon { .. } => {
                if self.contains(p) {
                    T::zero()
                } else {
                    p.distance(self.closest_boundary_point(p))
                }
            }
        }
    }

    /// True when `p` lies strictly inside (boundary points excluded).
    pub fn contains(&self, p: Vec2<T>) -> bool {
        match self {
            Obstacle::Circle { center, radius } => p.distance(*center) < *radius,
            Obstacle::ConvexPolygon { vertices } => {
                edges(vertices).all(|(a, b)| (b - a).cross(p - a) > T::zero())
            }
        }
    }

    pub fn translate(&self, offset: Vec2<T>) -> Self {
        self.map_points(|v| v + offset)
    }

    pub fn rotate(&self, theta: T) -> Self {
        self.map_points(|v| v.rotate(theta))
    }

    fn map_points(&self, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Self {
        match self {
            Obstacle::Circle { center, radius } => Obstacle::Circle {
                center: f(*center),
                radius: *radius,
            },
            Obstacle::ConvexPolygon { vertices } => Obstacle::ConvexPolygon {
                vertices: vertices.iter().map(|v| f(*v)).collect(),
            },
        }
    }
}

/// Closest boundary point of `obstacle` to `p`.
pub fn closest_boundary_point<T: Scalar>(obstacle: &Obstacle<T>, p: Vec2<T>) -> Vec2<T> {
    obstacle.closest_boundary_point(p)
}

/// Distance from `p` to `obstacle`, clamped at 0 for interior points.
pub fn obstacle_distance<T: Scalar>(obstacle: &Obstacle<T>, p: Vec2<T>) -> T {
    obstacle.distance(p)
}

fn edges<T: Scalar>(vertices: &[Vec2<T>]) -> impl Iterator<Item = (Vec2<T>, Vec2<T>)> + '_ {
    vertices
        .iter()
        .zip(vertices.iter().cycle().skip(1))
        .map(|(a, b)| (*a, *b))
}

fn closest_on_segment<T: Scalar>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> Vec2<T> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= T::zero() {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    a + ab * t
}

fn validate_convex_ccw<T: Scalar>(vertices: &[Vec2<T>]) -> Result<(), GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::TooFewVertices(vertices.len()));
    }
    if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
        return Err(GeometryError::NonFiniteVertex(i));
    }
    let twice_area: T = edges(vertices)
        .map(|(a, b)| a.cross(b))
        .fold(T::zero(), |s, c| s + c);
    if twice_area.abs() <= eps_zero() {
        return Err(GeometryError::Degenerate);
    }
    if twice_area < T::zero() {
        return Err(GeometryError::Clockwise);
    }
    let n = vertices.len();
    for i in 0..n {
        let prev = vertices[(i + n - 1) % n];
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        // collinear vertices are tolerated, reflex ones are not
        if (cur - prev).cross(next - cur) < T::zero() {
            return Err(GeometryError::NotConvex(i));
        }
    }
    Ok(())
}
