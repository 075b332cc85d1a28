//! Exact swallowing probabilities through the Schwarz-Christoffel map
//!
//! `F(z) = c_F * int_0^{1-z} xi^{4a-2} (1 - xi)^{-2a} dxi`,
//! `c_F = Gamma(2a) / (Gamma(1-2a) Gamma(4a-1))`,
//!
//! which sends the closed upper half-plane onto an isosceles triangle with
//! `F(0) = 1`, `F(1) = 0` and apex angle `(4a-1) pi` at `F(1)`. The weights of
//! `F(z)` on the three vertices are the probabilities that `z` is swallowed
//! before, together with, or after the point 1.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};
use crate::params::SleParams;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::gamma;

/// Beyond this modulus `F` is evaluated as `F(inf)` minus a tail integral.
const FAR: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitMap {
    pub a: f64,
    pub c_f: f64,
    pub quadrature: QuadratureSpec,
}

impl HitMap {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_quadrature(a, QuadratureSpec::default())
    }

    pub fn with_quadrature(a: f64, quadrature: QuadratureSpec) -> Result<Self> {
        if !(a > 0.25 && a < 0.5) {
            return Err(SleError::Validation(format!(
                "a = {a} outside (1/4, 1/2), i.e. kappa outside the admissible interval (4, 8)"
            )));
        }
        let c_f = gamma(2.0 * a) / (gamma(1.0 - 2.0 * a) * gamma(4.0 * a - 1.0));
        Ok(Self { a, c_f, quadrature })
    }

    pub fn for_params(params: &SleParams) -> Result<Self> {
        params.require_hitting_regime()?;
        Self::new(params.a)
    }

    /// Exponent of `xi` near 0, plus one: `4a - 1`.
    fn p(&self) -> f64 {
        4.0 * self.a - 1.0
    }

    /// Exponent of `1 - xi` near 1, plus one: `1 - 2a`.
    fn q(&self) -> f64 {
        1.0 - 2.0 * self.a
    }

    /// `F(z)` for `z` in the closed upper half-plane.
    ///
    /// On the real axis the value is the limit from above; `-0.0` imaginary
    /// parts are read as `+0.0`.
    pub fn map_f(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 {
            return Err(SleError::Domain(format!("{z} is not in the closed upper half-plane")));
        }
        let z = Complex64::new(z.re, z.im.abs());
        let (p, q, c) = (self.p(), self.q(), self.c_f);
        // w = 1 - z, kept in the closed lower half-plane
        let w = Complex64::new(1.0 - z.re, -z.im);
        let one = Complex64::new(1.0, 0.0);
        if z.norm() >= FAR {
            // F(z) = F(inf) - c int_w^inf, along the ray through w
            let inv_q = 1.0 / q;
            let tail = integrate(
                |u: f64| (Complex64::new(u.powf(inv_q), 0.0) - w).powf(q - 1.0),
                0.0,
                1.0,
                self.quadrature,
            )?;
            return Ok(self.f_infinity_exact() - tail * w.powf(p) * (c / q));
        }
        if z.re >= 0.5 {
            // xi = w t, t = u^(1/p)
            let inv_p = 1.0 / p;
            let body = integrate(
                |u: f64| (one - w * u.powf(inv_p)).powf(q - 1.0),
                0.0,
                1.0,
                self.quadrature,
            )?;
            Ok(body * w.powf(p) * (c / p))
        } else {
            // F = 1 - c int_w^1, with 1 - xi = z s, s = u^(1/q)
            let inv_q = 1.0 / q;
            let body = integrate(
                |u: f64| (one - z * u.powf(inv_q)).powf(p - 1.0),
                0.0,
                1.0,
                self.quadrature,
            )?;
            Ok(one - body * z.powf(q) * (c / q))
        }
    }

    /// `F(v)` for real `v`; real valued on `[0, 1]`.
    pub fn f_real(&self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(SleError::Domain(format!("{v} outside [0, 1]")));
        }
        Ok(self.map_f(Complex64::new(v, 0.0))?.re)
    }

    /// `F(inf)` by quadrature along the negative real axis of the
    /// integration variable, split at `-1` and folded onto `[0, 1]`.
    pub fn f_infinity(&self) -> Result<Complex64> {
        let (p, q, a) = (self.p(), self.q(), self.a);
        let inv_p = 1.0 / p;
        let inv_q = 1.0 / q;
        // int_0^1 t^(p-1) (1+t)^(q-1) dt with t = u^(1/p)
        let near = integrate(
            |u: f64| (1.0 + u.powf(inv_p)).powf(q - 1.0) / p,
            0.0,
            1.0,
            self.quadrature,
        )?;
        // int_1^inf = int_0^1 s^(-2a) (1+s)^(-2a) ds with s = u^(1/q)
        let far = integrate(
            |u: f64| (1.0 + u.powf(inv_q)).powf(-2.0 * a) / q,
            0.0,
            1.0,
            self.quadrature,
        )?;
        // xi = -t: xi^(p-1) = t^(p-1) e^(-i pi (p-1)) and dxi = -dt
        Ok(Complex64::from_polar(self.c_f * (near + far), -PI * p))
    }

    /// Closed form `F(inf) = exp(-i pi (4a - 1))`: the side from `F(1)` to
    /// `F(inf)` has the same unit length as the side to `F(0)`.
    pub fn f_infinity_exact(&self) -> Complex64 {
        Complex64::from_polar(1.0, -PI * self.p())
    }

    /// `lim F(v) / (1 - v)^(4a-1)` as `v -> 1`.
    pub fn asympt_const(&self) -> f64 {
        asympt_const(self.a)
    }

    /// `(v, F(v))` on `lo, lo + step, ..., hi`.
    pub fn table(&self, lo: f64, hi: f64, step: f64) -> Result<Vec<(f64, f64)>> {
        if !(step > 0.0 && lo <= hi && lo >= 0.0 && hi <= 1.0) {
            return Err(SleError::Validation(format!(
                "table grid {lo}:{hi}:{step} must satisfy 0 <= lo <= hi <= 1 and step > 0"
            )));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| {
                let v = (lo + k as f64 * step).min(hi);
                self.f_real(v).map(|f| (v, f))
            })
            .collect()
    }

    pub fn write_table_csv<W: Write>(&self, rows: &[(f64, f64)], mut out: W) -> Result<()> {
        writeln!(out, "v,F")?;
        for (v, f) in rows {
            writeln!(out, "{v},{f}")?;
        }
        Ok(())
    }
}

pub fn asympt_const(a: f64) -> f64 {
    gamma(2.0 * a) / ((4.0 * a - 1.0) * gamma(1.0 - 2.0 * a) * gamma(4.0 * a - 1.0))
}

/// A line `nx x + ny y + c = 0` with unit normal pointing into the triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub nx: f64,
    pub ny: f64,
    pub c: f64,
}

impl Line {
    fn through(p: Complex64, q: Complex64, inside: Complex64) -> Result<Self> {
        let d = q - p;
        let len = d.norm();
        if !(len > 1e-12) {
            return Err(SleError::Geometry(format!("side {p} -- {q} has no length")));
        }
        let (mut nx, mut ny) = (-d.im / len, d.re / len);
        let mut c = -(nx * p.re + ny * p.im);
        if nx * inside.re + ny * inside.im + c < 0.0 {
            nx = -nx;
            ny = -ny;
            c = -c;
        }
        Ok(Self { nx, ny, c })
    }

    /// Signed distance, positive on the triangle's side.
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        self.nx * z.re + self.ny * z.im + self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub v0: Complex64,
    pub v1: Complex64,
    pub vinf: Complex64,
    /// Sides opposite `v0`, `v1`, `vinf`.
    pub s0: Line,
    pub s1: Line,
    pub sinf: Line,
    /// Trilinear constants `D_j = 1 / dist(v_j, S_j)`.
    pub d0: f64,
    pub d1: f64,
    pub dinf: f64,
}

impl Triangle {
    pub fn new(hitmap: &HitMap) -> Result<Self> {
        let v0 = hitmap.map_f(Complex64::new(0.0, 0.0))?;
        let v1 = hitmap.map_f(Complex64::new(1.0, 0.0))?;
        let vinf = hitmap.f_infinity()?;
        Self::from_vertices(v0, v1, vinf)
    }

    pub fn from_vertices(v0: Complex64, v1: Complex64, vinf: Complex64) -> Result<Self> {
        let area2 = ((v1 - v0).conj() * (vinf - v0)).im;
        if !(area2.abs() > 1e-12) {
            return Err(SleError::Geometry("triangle vertices are collinear".into()));
        }
        let s0 = Line::through(v1, vinf, v0)?;
        let s1 = Line::through(v0, vinf, v1)?;
        let sinf = Line::through(v0, v1, vinf)?;
        Ok(Self {
            v0,
            v1,
            vinf,
            s0,
            s1,
            sinf,
            d0: 1.0 / s0.signed_distance(v0),
            d1: 1.0 / s1.signed_distance(v1),
            dinf: 1.0 / sinf.signed_distance(vinf),
        })
    }

    /// Interior angles at `v0`, `v1`, `vinf`.
    pub fn angles(&self) -> [f64; 3] {
        let angle = |at: Complex64, p: Complex64, q: Complex64| {
            let u = p - at;
            let v = q - at;
            let cross = u.re * v.im - u.im * v.re;
            let dot = u.re * v.re + u.im * v.im;
            cross.abs().atan2(dot)
        };
        [
            angle(self.v0, self.v1, self.vinf),
            angle(self.v1, self.v0, self.vinf),
            angle(self.vinf, self.v0, self.v1),
        ]
    }

    pub fn trilinear_constants(&self) -> (f64, f64, f64) {
        (self.d0, self.d1, self.dinf)
    }

    /// Weights of `p` on the vertices from the trilinear distances.
    pub fn weights(&self, p: Complex64) -> [f64; 3] {
        [
            self.d0 * self.s0.signed_distance(p),
            self.d1 * self.s1.signed_distance(p),
            self.dinf * self.sinf.signed_distance(p),
        ]
    }
}

/// Probabilities that `z` is swallowed before, together with, or after 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barycentric {
    pub c0: f64,
    pub c1: f64,
    pub cinf: f64,
}

impl Barycentric {
    pub fn sum(&self) -> f64 {
        self.c0 + self.c1 + self.cinf
    }
}

/// Allowed overshoot of a weight outside `[0, 1]` before the image is
/// declared outside the triangle.
pub const BARYCENTRIC_TOL: f64 = 1e-9;

pub fn barycentric(z: Complex64, triangle: &Triangle, hitmap: &HitMap) -> Result<Barycentric> {
    if z == Complex64::new(0.0, 0.0) || z == Complex64::new(1.0, 0.0) {
        return Err(SleError::Domain(format!("{z} is a vertex preimage")));
    }
    let p = hitmap.map_f(z)?;
    let [c0, c1, cinf] = triangle.weights(p);
    let mut out = [c0, c1, cinf];
    for c in out.iter_mut() {
        if *c < -BARYCENTRIC_TOL || *c > 1.0 + BARYCENTRIC_TOL || !c.is_finite() {
            return Err(SleError::Consistency(format!(
                "F({z}) = {p} lies outside the triangle (weights {c0}, {c1}, {cinf})"
            )));
        }
        *c = c.clamp(0.0, 1.0);
    }
    Ok(Barycentric {
        c0: out[0],
        c1: out[1],
        cinf: out[2],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitProbability {
    pub value: f64,
    /// Set when the interval is a single point.
    pub degenerate: bool,
}

/// Probability that the curve hits `[y, x]`, i.e. `P(T_x > T_y) = F(y/x)`.
pub fn hit_prob_interval(y: f64, x: f64, hitmap: &HitMap) -> Result<HitProbability> {
    if !(y > 0.0 && x.is_finite() && y <= x) {
        return Err(SleError::Domain(format!("need 0 < y <= x, got y = {y}, x = {x}")));
    }
    if y == x {
        log::info!("degenerate interval [{y}, {x}]: hit probability 0");
        return Ok(HitProbability {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(HitProbability {
        value: hitmap.f_real(y / x)?,
        degenerate: false,
    })
}

/// `P(T_x > T_y | F_tau)` from the mapped configuration at a stopping time
/// before `T_y`: `F((g_y - U) / (g_x - U))`.
///
/// The ratio is taken as `(g_y - U) / (g_x - U)` so that `tau = 0` gives back
/// `F(y / x)`; the complementary ratio `(g_x - g_y) / (g_x - U)` would give
/// `F(1 - y/x)` instead.
pub fn conditional_hit_prob(g_x: f64, g_y: f64, u: f64, hitmap: &HitMap) -> Result<f64> {
    if !(u < g_y && g_y < g_x && g_x.is_finite() && u.is_finite()) {
        return Err(SleError::Domain(format!(
            "need u < g_y < g_x, got u = {u}, g_y = {g_y}, g_x = {g_x}"
        )));
    }
    let v = ((g_y - u) / (g_x - u)).clamp(0.0, 1.0);
    hitmap.f_real(v)
}

/// `P(T_{x1} < T_{x2} < T_{x3}) = F(x1/x2) + F(x2/x3) - F(x1/x3)`: the curve
/// hits both `[x1, x2]` and `[x2, x3]`.
pub fn adjacent_two_interval(x1: f64, x2: f64, x3: f64, hitmap: &HitMap) -> Result<f64> {
    if !(0.0 < x1 && x1 < x2 && x2 < x3 && x3.is_finite()) {
        return Err(SleError::Domain(format!(
            "need 0 < x1 < x2 < x3, got {x1}, {x2}, {x3}"
        )));
    }
    let value = hitmap.f_real(x1 / x2)? + hitmap.f_real(x2 / x3)? - hitmap.f_real(x1 / x3)?;
    Ok(value.clamp(0.0, 1.0))
}

/// Shape `y^(1-2a) x^(-2a) (x-y)^(4a-2) r sin(theta)` of
/// `P(T_{x + r e^{i theta}} < T_y)` for small `r`, without its constant.
pub fn near_point_asymptote(x: f64, y: f64, r: f64, theta: f64, params: &SleParams) -> Result<f64> {
    params.require_hitting_regime()?;
    if !(0.0 < y && y < x && x.is_finite()) {
        return Err(SleError::Domain(format!("need 0 < y < x, got y = {y}, x = {x}")));
    }
    if !(0.0..=PI).contains(&theta) || !(r >= 0.0) {
        return Err(SleError::Domain(format!("need r >= 0 and theta in [0, pi], got {r}, {theta}")));
    }
    if r > (x - y) / 4.0 {
        return Err(SleError::OutOfRegime(format!(
            "r = {r} exceeds (x - y)/4 = {}",
            (x - y) / 4.0
        )));
    }
    let a = params.a;
    Ok(y.powf(1.0 - 2.0 * a) / x.powf(2.0 * a) * (x - y).powf(4.0 * a - 2.0) * r * theta.sin())
}

/// Exact `P(T_z < T_y)` for `z` in the closed upper half-plane, by scaling
/// to `z / y` and reading the `F(0)` weight.
pub fn swallowed_before(z: Complex64, y: f64, triangle: &Triangle, hitmap: &HitMap) -> Result<f64> {
    if !(y > 0.0) {
        return Err(SleError::Domain(format!("need y > 0, got {y}")));
    }
    Ok(barycentric(z / y, triangle, hitmap)?.c0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h6() -> HitMap {
        HitMap::new(1.0 / 3.0).unwrap()
    }

    #[test]
    fn vertices() {
        for a in [0.26, 1.0 / 3.0, 0.45] {
            let h = HitMap::new(a).unwrap();
            assert!((h.map_f(Complex64::new(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-12);
            assert!(h.map_f(Complex64::new(1.0, 0.0)).unwrap().norm() < 1e-12);
            assert!((h.f_infinity().unwrap() - h.f_infinity_exact()).norm() < 1e-11);
        }
    }

    #[test]
    fn half_at_kappa_six() {
        assert!((h6().f_real(0.5).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn kappa_six_third_vertex() {
        let v = h6().f_infinity().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-8);
        assert!((v.arg() + PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn continuous_across_region_boundaries() {
        let h = HitMap::new(0.3).unwrap();
        let eps = 1e-9;
        for z in [
            Complex64::new(0.5, 0.7),
            Complex64::new(0.5, 3.0),
            Complex64::new(2.0, (FAR * FAR - 4.0).sqrt()),
            Complex64::new(-FAR, 0.0),
            Complex64::new(FAR, 0.0),
        ] {
            let left = h.map_f(z - Complex64::new(eps, 0.0)).unwrap();
            let right = h.map_f(z + Complex64::new(eps, 0.0)).unwrap();
            assert!((left - right).norm() < 1e-7, "{z}: {left} {right}");
        }
    }

    #[test]
    fn rejects_lower_half_plane() {
        assert!(h6().map_f(Complex64::new(0.3, -0.1)).is_err());
        assert!(HitMap::new(0.25).is_err());
        assert!(HitMap::new(0.5).is_err());
    }

    #[test]
    fn triangle_of_kappa_six_is_equilateral() {
        let t = Triangle::new(&h6()).unwrap();
        for angle in t.angles() {
            assert!((angle - PI / 3.0).abs() < 1e-10);
        }
        let want = 2.0 / 3f64.sqrt();
        let (d0, d1, dinf) = t.trilinear_constants();
        for d in [d0, d1, dinf] {
            assert!((d - want).abs() < 1e-10);
        }
    }

    #[test]
    fn real_points_sit_on_the_base() {
        let h = HitMap::new(0.4).unwrap();
        let t = Triangle::new(&h).unwrap();
        for v in [0.1, 0.5, 0.9] {
            let b = barycentric(Complex64::new(v, 0.0), &t, &h).unwrap();
            assert!(b.cinf.abs() < 1e-12);
            assert!((b.c0 - h.f_real(v).unwrap()).abs() < 1e-12);
        }
        // beyond 1 the point is never swallowed before 1
        let b = barycentric(Complex64::new(3.0, 0.0), &t, &h).unwrap();
        assert!(b.c0.abs() < 1e-12);
        assert!((b.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_limits() {
        let h = h6();
        let t = Triangle::new(&h).unwrap();
        // both limits are approached like a power 1/3 of the distance
        let near0 = barycentric(Complex64::new(1e-12, 0.0), &t, &h).unwrap();
        assert!(near0.c0 > 1.0 - 1e-3);
        let near1 = barycentric(Complex64::new(1.0 - 1e-12, 1e-13), &t, &h).unwrap();
        assert!(near1.c1 > 1.0 - 1e-3);
        assert!(barycentric(Complex64::new(1.0, 0.0), &t, &h).is_err());
    }

    #[test]
    fn asymptotic_constant() {
        let h = h6();
        let want = gamma(2.0 / 3.0) / (gamma(1.0 / 3.0).powi(2) / 3.0);
        assert!((h.asympt_const() - want).abs() < 1e-12);
        let v = 1e-6;
        let ratio = h.f_real(1.0 - v).unwrap() / v.powf(1.0 / 3.0);
        assert!((ratio / want - 1.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_interval() {
        let p = hit_prob_interval(0.7, 0.7, &h6()).unwrap();
        assert_eq!(p.value, 0.0);
        assert!(p.degenerate);
        assert!(hit_prob_interval(0.8, 0.7, &h6()).is_err());
    }

    #[test]
    fn conditional_examples() {
        let h = h6();
        assert!((conditional_hit_prob(1.0, 0.5, 0.0, &h).unwrap() - 0.5).abs() < 1e-13);
        let shifted = conditional_hit_prob(3.7, 3.2, 2.7, &h).unwrap();
        assert!((shifted - 0.5).abs() < 1e-12);
        let close = conditional_hit_prob(1.0, 1.0 - 1e-9, 0.0, &h).unwrap();
        assert!(close < 1e-2);
        assert!(conditional_hit_prob(1.0, 0.5, 0.6, &h).is_err());
        // tau = 0 reproduces the unconditional value
        for (y, x) in [(0.2, 1.0), (0.9, 1.3)] {
            let c = conditional_hit_prob(x, y, 0.0, &h).unwrap();
            assert_eq!(c, hit_prob_interval(y, x, &h).unwrap().value);
        }
    }

    #[test]
    fn adjacent_limits() {
        let h = h6();
        assert!(adjacent_two_interval(1.0, 1.0 + 1e-12, 3.0, &h).unwrap() < 1e-3);
        let v = adjacent_two_interval(1.0, 2.0, 3.0, &h).unwrap();
        let want = 0.5 + h.f_real(2.0 / 3.0).unwrap() - h.f_real(1.0 / 3.0).unwrap();
        assert!((v - want).abs() < 1e-14);
        assert!(adjacent_two_interval(1.0, 0.5, 3.0, &h).is_err());
    }

    #[test]
    fn near_point_shape() {
        let p = SleParams::new(6.0).unwrap();
        assert_eq!(near_point_asymptote(1.0, 0.5, 0.1, 0.0, &p).unwrap(), 0.0);
        assert!(near_point_asymptote(1.0, 0.5, 0.1, PI, &p).unwrap().abs() < 1e-16);
        let one = near_point_asymptote(1.0, 0.5, 0.05, 1.0, &p).unwrap();
        let two = near_point_asymptote(1.0, 0.5, 0.1, 1.0, &p).unwrap();
        assert_eq!(two / one, 2.0);
        assert!(matches!(
            near_point_asymptote(1.0, 0.5, 0.2, 1.0, &p),
            Err(SleError::OutOfRegime(_))
        ));
    }

    #[test]
    fn table_grid() {
        let rows = h6().table(0.0, 1.0, 0.01).unwrap();
        assert_eq!(rows.len(), 101);
        assert_eq!(rows[0], (0.0, 1.0));
        assert!(rows[100].1.abs() < 1e-12);
        let mut buf = Vec::new();
        h6().write_table_csv(&rows[..2], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("v,F\n0,1\n"));
    }
}
