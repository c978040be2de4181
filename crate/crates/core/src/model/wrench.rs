use std::ops::{Add, Mul, Sub};

use nalgebra::Vector6;

use crate::Axis;

/// Six-axis force/torque vector. Forces in N, moments in N*m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench { fx: 0.0, fy: 0.0, fz: 0.0, mx: 0.0, my: 0.0, mz: 0.0 };

    pub const fn new(fx: f64, fy: f64, fz: f64, mx: f64, my: f64, mz: f64) -> Wrench {
        Wrench { fx, fy, fz, mx, my, mz }
    }

    pub fn from_array(v: [f64; 6]) -> Wrench {
        Wrench::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn from_vector(v: &Vector6<f64>) -> Wrench {
        Wrench::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    /// A wrench with `value` on one axis and zero elsewhere.
    pub fn single(axis: Axis, value: f64) -> Wrench {
        let mut w = Wrench::ZERO;
        w.set(axis, value);
        w
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.fx, self.fy, self.fz, self.mx, self.my, self.mz]
    }

    pub fn to_vector(self) -> Vector6<f64> {
        Vector6::from(self.to_array())
    }

    pub fn get(&self, axis: Axis) -> f64 {
        self.to_array()[axis.index()]
    }

    pub fn set(&mut self, axis: Axis, value: f64) {
        match axis {
            Axis::Fx => self.fx = value,
            Axis::Fy => self.fy = value,
            Axis::Fz => self.fz = value,
            Axis::Mx => self.mx = value,
            Axis::My => self.my = value,
            Axis::Mz => self.mz = value,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::from_vector(&(self.to_vector() + rhs.to_vector()))
    }
}

impl Sub for Wrench {
    type Output = Wrench;

    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench::from_vector(&(self.to_vector() - rhs.to_vector()))
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;

    fn mul(self, k: f64) -> Wrench {
        Wrench::from_vector(&(self.to_vector() * k))
    }
}
