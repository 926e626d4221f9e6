//! Planar points, rigid transforms and exact segment predicates.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, Serializer};

use crate::scalar::Real;

/// A point (or vector) in the plane, meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Point2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T: Real> Point2<T> {
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn distance_squared(self, other: Self) -> T {
        (self - other).norm_squared()
    }

    /// Unit vector at `angle` radians.
    pub fn from_angle(angle: T) -> Self {
        Self::new(angle.cos(), angle.sin())
    }

    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    pub fn cast<U: Real>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

// Points travel as `[x, y]` in every document format.
impl<T: Serialize> Serialize for Point2<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(serializer)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Point2<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (x, y) = <(T, T)>::deserialize(deserializer)?;
        Ok(Self { x, y })
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle<T: Real>(angle: T) -> T {
    let tau = T::TAU();
    let pi = T::PI();
    let mut a = angle % tau;
    if a > pi {
        a -= tau;
    } else if a <= -pi {
        a += tau;
    }
    a
}

/// Rigid planar transform. As a pose it places a child frame inside a parent
/// frame; `apply` maps child coordinates to parent coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Transform2D<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Transform2D<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn translation(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    pub fn rotate(&self, v: Point2<T>) -> Point2<T> {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        let t = self.apply(other.translation());
        Self::new(t.x, t.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Self {
        let (s, c) = self.theta.sin_cos();
        Self::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)
    }

    /// Transform taking `self` to `other`: `self.inverse() ∘ other`.
    pub fn between(&self, other: &Self) -> Self {
        self.inverse().compose(other)
    }

    pub fn translation_distance(&self, other: &Self) -> T {
        self.translation().distance(other.translation())
    }

    pub fn angle_distance(&self, other: &Self) -> T {
        normalize_angle(self.theta - other.theta).abs()
    }

    pub fn cast<U: Real>(&self) -> Transform2D<U> {
        Transform2D::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.theta.as_f64()))
    }
}

impl<T: Real> fmt::Display for Transform2D<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4} rad)", self.x, self.y, self.theta)
    }
}

/// Sign-exact orientation test. Implementations must return the true sign of
/// `(b - a) × (c - a)` for the exact input values.
pub trait ExactOrient: Clone + PartialOrd {
    fn orient(a: &Point2<Self>, b: &Point2<Self>, c: &Point2<Self>) -> Ordering;
}

fn sign_of(v: f64) -> Ordering {
    v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

impl ExactOrient for f64 {
    fn orient(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> Ordering {
        let det = robust::orient2d(
            robust::Coord { x: a.x, y: a.y },
            robust::Coord { x: b.x, y: b.y },
            robust::Coord { x: c.x, y: c.y },
        );
        sign_of(det)
    }
}

impl ExactOrient for f32 {
    // f32 -> f64 widening is exact, so the f64 predicate stays exact.
    fn orient(a: &Point2<f32>, b: &Point2<f32>, c: &Point2<f32>) -> Ordering {
        let w = |p: &Point2<f32>| Point2::new(p.x as f64, p.y as f64);
        f64::orient(&w(a), &w(b), &w(c))
    }
}

impl ExactOrient for BigRational {
    fn orient(a: &Point2<Self>, b: &Point2<Self>, c: &Point2<Self>) -> Ordering {
        let det = (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x);
        if det.is_zero() {
            Ordering::Equal
        } else if det.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

/// Exact rational copy of an `f64` point (every finite double is a rational).
pub fn to_rational(p: Point2<f64>) -> Point2<BigRational> {
    let conv = |v: f64| BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()));
    Point2::new(conv(p.x), conv(p.y))
}

fn within<T: PartialOrd>(v: &T, a: &T, b: &T) -> bool {
    if a <= b {
        a <= v && v <= b
    } else {
        b <= v && v <= a
    }
}

/// Closed segment `p1-p2` intersects closed segment `q1-q2`, endpoints
/// included. Exact for every `ExactOrient` scalar.
pub fn segments_intersect<T: ExactOrient>(p1: &Point2<T>, p2: &Point2<T>, q1: &Point2<T>, q2: &Point2<T>) -> bool {
    let o1 = T::orient(p1, p2, q1);
    let o2 = T::orient(p1, p2, q2);
    let o3 = T::orient(q1, q2, p1);
    let o4 = T::orient(q1, q2, p2);
    if o1 != o2 && o3 != o4 {
        return true;
    }
    let on = |a: &Point2<T>, b: &Point2<T>, c: &Point2<T>| within(&c.x, &a.x, &b.x) && within(&c.y, &a.y, &b.y);
    (o1 == Ordering::Equal && on(p1, p2, q1))
        || (o2 == Ordering::Equal && on(p1, p2, q2))
        || (o3 == Ordering::Equal && on(q1, q2, p1))
        || (o4 == Ordering::Equal && on(q1, q2, p2))
}

/// Euclidean distance from `p` to the closed segment `a-b`.
pub fn point_segment_distance<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).max(T::zero()).min(T::one());
    p.distance(a + ab * t)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point2<f64>, polygon: &[Point2<f64>]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Polygon has no two non-adjacent edges that touch.
pub fn polygon_is_simple(polygon: &[Point2<f64>]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a1, a2) = (polygon[i], polygon[(i + 1) % n]);
        if a1 == a2 {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (b1, b2) = (polygon[j], polygon[(j + 1) % n]);
            if segments_intersect(&a1, &a2, &b1, &b2) {
                return false;
            }
        }
    }
    true
}
