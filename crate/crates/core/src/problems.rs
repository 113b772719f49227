//! Manufactured solutions for `-Δu = f` on the unit square.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::mesh::Point;

/// A smooth exact solution with known gradient.
pub trait ExactSolution {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];
}

/// The zero function; norms of a discrete `v` are its errors against this.
pub struct Zero;

impl ExactSolution for Zero {
    fn value(&self, _: Point) -> f64 {
        0.0
    }
    fn gradient(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "id")]
pub enum Problem {
    /// `u = sin(2πx) cos(2πy)`; nonzero on `y = 0, 1`, so `g = u` on the boundary.
    Paper,
    /// `u = sin(2πx) sin(2πy)`, homogeneous boundary data.
    SinSin,
    /// `u = c + a x + b y`, reproduced exactly by any degree >= 1.
    Linear { c: f64, a: f64, b: f64 },
}

impl Problem {
    pub fn parse(s: &str) -> Option<Problem> {
        match s {
            "paper" => Some(Problem::Paper),
            "sinsin" => Some(Problem::SinSin),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Paper => "paper",
            Problem::SinSin => "sinsin",
            Problem::Linear { .. } => "linear",
        }
    }

    /// Right-hand side `f = -Δu`.
    pub fn forcing(&self, p: Point) -> f64 {
        match self {
            Problem::Paper | Problem::SinSin => 8.0 * PI * PI * self.value(p),
            Problem::Linear { .. } => 0.0,
        }
    }

    /// Dirichlet data, the trace of the exact solution.
    pub fn boundary(&self, p: Point) -> f64 {
        self.value(p)
    }
}

impl ExactSolution for Problem {
    fn value(&self, p: Point) -> f64 {
        let (tx, ty) = (2.0 * PI * p.x, 2.0 * PI * p.y);
        match *self {
            Problem::Paper => tx.sin() * ty.cos(),
            Problem::SinSin => tx.sin() * ty.sin(),
            Problem::Linear { c, a, b } => c + a * p.x + b * p.y,
        }
    }

    fn gradient(&self, p: Point) -> [f64; 2] {
        let (tx, ty) = (2.0 * PI * p.x, 2.0 * PI * p.y);
        let k = 2.0 * PI;
        match *self {
            Problem::Paper => [k * tx.cos() * ty.cos(), -k * tx.sin() * ty.sin()],
            Problem::SinSin => [k * tx.cos() * ty.sin(), k * tx.sin() * ty.cos()],
            Problem::Linear { a, b, .. } => [a, b],
        }
    }
}
