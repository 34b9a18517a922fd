//! Closed-form solution on the unit square with a sheet along `y = 1/2`,
//! and the source terms it induces.
//!
//! `E = (sin kx sin ky, cos kx cos ky) sin kt`, `H = a sin kx sin ky · g(t)`
//! with `k = 2π`, `a = 1/(1 + 4π²)`, `g = sin kt` above the sheet and
//! `g = k cos kt − k e^{−t}` below it.

use std::f64::consts::PI;

use crate::mesh::Point;
use crate::physics::MaterialParams;

const K: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub params: MaterialParams,
    pub interface_y: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        ManufacturedCase {
            params: MaterialParams::unit(),
            interface_y: 0.5,
        }
    }
}

fn amplitude() -> f64 {
    1.0 / (1.0 + 4.0 * PI * PI)
}

struct Trig {
    sx: f64,
    cx: f64,
    sy: f64,
    cy: f64,
}

fn trig(p: Point) -> Trig {
    let (sx, cx) = (K * p[0]).sin_cos();
    let (sy, cy) = (K * p[1]).sin_cos();
    Trig { sx, cx, sy, cy }
}

impl ManufacturedCase {
    pub fn new(params: MaterialParams) -> Self {
        ManufacturedCase {
            params,
            ..Default::default()
        }
    }

    /// Upper subdomain, where `H = H1`.
    pub fn in_upper(&self, p: Point) -> bool {
        p[1] >= self.interface_y
    }

    /// Time factor of `H` and its derivative.
    fn h_time(&self, p: Point, t: f64) -> (f64, f64) {
        if self.in_upper(p) {
            ((K * t).sin(), K * (K * t).cos())
        } else {
            let (s, c) = (K * t).sin_cos();
            let e = (-t).exp();
            (K * c - K * e, -K * K * s + K * e)
        }
    }

    pub fn electric(&self, p: Point, t: f64) -> [f64; 2] {
        let g = trig(p);
        let st = (K * t).sin();
        [g.sx * g.sy * st, g.cx * g.cy * st]
    }

    pub fn electric_dt(&self, p: Point, t: f64) -> [f64; 2] {
        let g = trig(p);
        let ct = K * (K * t).cos();
        [g.sx * g.sy * ct, g.cx * g.cy * ct]
    }

    /// `∂_x E_y − ∂_y E_x`.
    pub fn curl_electric(&self, p: Point, t: f64) -> f64 {
        let g = trig(p);
        -2.0 * K * g.sx * g.cy * (K * t).sin()
    }

    pub fn magnetic(&self, p: Point, t: f64) -> f64 {
        let g = trig(p);
        amplitude() * g.sx * g.sy * self.h_time(p, t).0
    }

    pub fn magnetic_dt(&self, p: Point, t: f64) -> f64 {
        let g = trig(p);
        amplitude() * g.sx * g.sy * self.h_time(p, t).1
    }

    /// Vector curl of the scalar field, `(∂_y H, −∂_x H)`.
    pub fn curl_magnetic(&self, p: Point, t: f64) -> [f64; 2] {
        let g = trig(p);
        let (h, _) = self.h_time(p, t);
        let a = amplitude() * K * h;
        [a * g.sx * g.cy, -a * g.cx * g.sy]
    }

    /// `ε0 ∂_t E − ∇×H` (f1 above the sheet, f3 below).
    pub fn source_electric(&self, p: Point, t: f64) -> [f64; 2] {
        let e = self.electric_dt(p, t);
        let c = self.curl_magnetic(p, t);
        let eps = self.params.epsilon0;
        [eps * e[0] - c[0], eps * e[1] - c[1]]
    }

    /// Time derivative of [`Self::source_electric`].
    pub fn source_electric_dt(&self, p: Point, t: f64) -> [f64; 2] {
        let g = trig(p);
        let (_, dh) = self.h_time(p, t);
        let ett = -K * K * (K * t).sin();
        let a = amplitude() * K * dh;
        let eps = self.params.epsilon0;
        [
            eps * g.sx * g.sy * ett - a * g.sx * g.cy,
            eps * g.cx * g.cy * ett + a * g.cx * g.sy,
        ]
    }

    /// `μ0 ∂_t H + ∇×E` (f2 above the sheet, f4 below).
    pub fn source_magnetic(&self, p: Point, t: f64) -> f64 {
        self.params.mu0 * self.magnetic_dt(p, t) + self.curl_electric(p, t)
    }

    /// Volume load density of the second-order electric equation,
    /// `f/τ0 + ∂_t f`.
    pub fn electric_load(&self, p: Point, t: f64) -> [f64; 2] {
        let f = self.source_electric(p, t);
        let df = self.source_electric_dt(p, t);
        let tau0 = self.params.tau0;
        [f[0] / tau0 + df[0], f[1] / tau0 + df[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_fields_vanish() {
        let m = ManufacturedCase::default();
        for p in [[0.3, 0.7], [0.6, 0.2]] {
            assert_eq!(m.electric(p, 0.0), [0.0, 0.0]);
            assert!(m.magnetic(p, 0.0).abs() < 1e-15);
        }
    }

    #[test]
    fn left_edge_vanishes() {
        let m = ManufacturedCase::default();
        assert_eq!(m.electric([0.0, 0.3], 0.4)[0], 0.0);
        assert_eq!(m.magnetic([0.0, 0.3], 0.4), 0.0);
        assert_eq!(m.magnetic([0.0, 0.8], 0.4), 0.0);
    }

    #[test]
    fn compatible_across_sheet() {
        let m = ManufacturedCase::default();
        for i in 0..100 {
            let x = i as f64 / 99.0;
            let t = 0.013 * i as f64;
            let up = m.magnetic([x, 0.5], t);
            let down = amplitude() * (K * x).sin() * (K * 0.5).sin() * (K * (K * t).cos() - K * (-t).exp());
            assert!((up - down).abs() <= 1e-14);
            assert!(m.electric([x, 0.5], t)[0].abs() <= 1e-14);
        }
    }
}
