//! Positions in R^nu, nu <= 3. Unused trailing coordinates are kept at zero so
//! norms and differences never need to know the dimension.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

/// Ordered list of particle positions.
pub type Configuration = Vec<Point>;

impl Point {
    pub const ORIGIN: Point = Point([0.0; 3]);

    pub fn new1(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }

    pub fn from_slice(c: &[f64]) -> Self {
        let mut p = [0.0; 3];
        for (dst, src) in p.iter_mut().zip(c) {
            *dst = *src;
        }
        Point(p)
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Unit vector along axis `i`.
    pub fn axis(i: usize) -> Self {
        let mut p = [0.0; 3];
        p[i] = 1.0;
        Point(p)
    }

    pub fn coords(&self, nu: usize) -> Vec<f64> {
        self.0[..nu].to_vec()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Shorthand for a one-dimensional configuration.
pub fn line(xs: &[f64]) -> Configuration {
    xs.iter().map(|&x| Point::new1(x)).collect()
}

pub fn translate(config: &[Point], a: Point) -> Configuration {
    config.iter().map(|&q| q + a).collect()
}
