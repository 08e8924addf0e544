//! Möbius automorphisms of the unit disk.
//!
//! `M_a(x) = (x − a)/(ā·x − 1)` is an involution of the closed unit disk. For
//! every ball `B_{C,R}` strictly inside the disk there is a unique `a` with
//! `M_a(B_{C,R}) = B_{0,r}`, which is what lets the ND map of an arbitrary ball
//! be written in terms of the diagonal ND map of a concentric one.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Open disk `B_{C,R}` in the unit disk, in complex coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Complex64,
    pub radius: f64,
}

impl Ball {
    /// Builds a ball contained in the closed unit disk (`|C| + R ≤ 1`).
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::InvalidRadius(radius));
        }
        let ball = Self { center, radius };
        if center.norm() + radius > 1.0 {
            return Err(ball.not_inside());
        }
        Ok(ball)
    }

    pub fn from_xy(x: f64, y: f64, radius: f64) -> Result<Self> {
        Self::new(Complex64::new(x, y), radius)
    }

    /// `|C| + R < 1`: the closure of the ball does not touch the boundary.
    pub fn is_strictly_inside(&self) -> bool {
        self.center.norm() + self.radius < 1.0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Rotation of the ball about the origin by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            center: self.center * Complex64::from_polar(1.0, phi),
            radius: self.radius,
        }
    }

    fn not_inside(&self) -> Error {
        Error::BallNotInside {
            cx: self.center.re,
            cy: self.center.im,
            radius: self.radius,
        }
    }
}

/// Transformation parameter `a = ρe^{iζ}` together with the radius `r` of the
/// concentric ball it pairs with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusParams {
    pub a: Complex64,
    pub r: f64,
}

impl MobiusParams {
    pub fn rho(&self) -> f64 {
        self.a.norm()
    }

    /// Angle `ζ` of `a`; zero when `a = 0`.
    pub fn zeta(&self) -> f64 {
        if self.a == Complex64::new(0.0, 0.0) {
            0.0
        } else {
            self.a.arg()
        }
    }
}

fn check_parameter(a: Complex64) -> Result<()> {
    let rho = a.norm();
    if rho < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutsideDisk(rho))
    }
}

/// `M_a(x) = (x − a)/(ā·x − 1)`.
pub fn mobius_apply(a: Complex64, x: Complex64) -> Result<Complex64> {
    check_parameter(a)?;
    Ok((x - a) / (a.conj() * x - 1.0))
}

/// The parameters `(a, r)` with `M_a(B_{C,R}) = B_{0,r}`.
pub fn ball_to_concentric(ball: &Ball) -> Result<MobiusParams> {
    let r = concentric_radius(ball.center.norm(), ball.radius).map_err(|_| ball.not_inside())?;
    let a = ball.center / (1.0 - ball.radius * r);
    Ok(MobiusParams { a, r })
}

/// Radius `r` of the concentric image of a ball of radius `R` centered at
/// distance `c` from the origin. Depends on `c` and `R` only, so balls related
/// by a rotation share it bit for bit when `c` is computed the same way.
pub fn concentric_radius(c: f64, big_r: f64) -> Result<f64> {
    if !(big_r > 0.0) || !(c >= 0.0) || !(big_r < 1.0 - c) {
        return Err(Error::BallNotInside {
            cx: c,
            cy: 0.0,
            radius: big_r,
        });
    }
    // r = (u − √(u² − 4R²))/(2R) with u = 1 + R² − c², rationalized so that
    // small radii do not lose digits to cancellation.
    let u = 1.0 + big_r * big_r - c * c;
    let lower = (1.0 - big_r - c) * (1.0 - big_r + c); // (1 − R)² − c²
    let upper = (1.0 + big_r - c) * (1.0 + big_r + c); // (1 + R)² − c²
    Ok(2.0 * big_r / (u + (lower * upper).sqrt()))
}

/// The ball `M_a(B_{0,r})`.
pub fn concentric_to_ball(a: Complex64, r: f64) -> Result<Ball> {
    check_parameter(a)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidRadius(r));
    }
    let rho = a.norm();
    let denom = rho * rho * r * r - 1.0;
    let c = rho * (r * r - 1.0) / denom;
    let radius = r * (rho * rho - 1.0) / denom;
    let direction = if rho > 0.0 { a / rho } else { Complex64::new(1.0, 0.0) };
    Ok(Ball {
        center: direction * c,
        radius,
    })
}

/// The angular form `ψ_a` of `M_a` on the unit circle, `e^{iψ_a(θ)} = M_a(e^{iθ})`,
/// reduced to `[0, 2π)`.
///
/// `2·arctan(k·tan(x/2))` is evaluated as `2·atan2(k·sin(x/2), cos(x/2))`; the
/// two differ by a multiple of `2π`, and the second form has no pole at `x = π`.
pub fn boundary_angle_map(a: Complex64, theta: f64) -> f64 {
    let rho = a.norm();
    let zeta = if rho > 0.0 { a.arg() } else { 0.0 };
    let k = (1.0 + rho) / (1.0 - rho);
    let half = 0.5 * (theta - zeta);
    let psi = PI + zeta + 2.0 * (k * half.sin()).atan2(half.cos());
    let reduced = psi.rem_euclid(TAU);
    if reduced >= TAU {
        0.0
    } else {
        reduced
    }
}

/// Boundary Jacobian `(1 − ρ²)/|ā·e^{iθ} − 1|²` of the change of variables `M_a`.
pub fn boundary_jacobian(a: Complex64, theta: f64) -> f64 {
    let rho = a.norm();
    let denom = (a.conj() * Complex64::from_polar(1.0, theta) - 1.0).norm_sqr();
    (1.0 - rho * rho) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn apply_examples() {
        let z = mobius_apply(c(0.0, 0.0), c(0.3, 0.1)).unwrap();
        assert_abs_diff_eq!(z.re, -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, -0.1, epsilon = 1e-15);

        let z = mobius_apply(c(0.5, 0.0), c(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);

        let once = mobius_apply(c(0.5, 0.0), c(0.0, 0.7)).unwrap();
        let twice = mobius_apply(c(0.5, 0.0), once).unwrap();
        assert_abs_diff_eq!((twice - c(0.0, 0.7)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn apply_rejects_parameter_on_circle() {
        assert!(matches!(
            mobius_apply(c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::ParameterOutsideDisk(_))
        ));
        assert!(mobius_apply(c(0.0, 1.5), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn concentric_pairs() {
        let p = ball_to_concentric(&Ball::from_xy(0.0, 0.0, 0.3).unwrap()).unwrap();
        assert_eq!(p.a, c(0.0, 0.0));
        assert_abs_diff_eq!(p.r, 0.3, epsilon = 1e-15);

        let p = ball_to_concentric(&Ball::from_xy(0.4, 0.0, 0.4).unwrap()).unwrap();
        assert_abs_diff_eq!(p.a.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.r, 0.5, epsilon = 1e-15);

        let rot = Complex64::from_polar(1.0, PI / 3.0);
        let p = ball_to_concentric(&Ball::new(rot * 0.4, 0.4).unwrap()).unwrap();
        assert_abs_diff_eq!((p.a - rot * 0.5).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.r, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ball_touching_boundary_is_rejected() {
        let ball = Ball::from_xy(0.5, 0.0, 0.5).unwrap();
        assert!(ball_to_concentric(&ball).is_err());
        assert!(Ball::from_xy(0.5, 0.0, 0.6).is_err());
        assert!(Ball::from_xy(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn concentric_to_ball_examples() {
        let b = concentric_to_ball(c(0.0, 0.0), 0.3).unwrap();
        assert_eq!(b.center, c(0.0, 0.0));
        assert_abs_diff_eq!(b.radius, 0.3, epsilon = 1e-15);

        let b = concentric_to_ball(c(0.5, 0.0), 0.5).unwrap();
        assert_abs_diff_eq!(b.center.re, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(b.radius, 0.4, epsilon = 1e-15);

        let ball = Ball::from_xy(0.2, 0.3, 0.15).unwrap();
        let p = ball_to_concentric(&ball).unwrap();
        let back = concentric_to_ball(p.a, p.r).unwrap();
        assert_abs_diff_eq!((back.center - ball.center).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.radius, ball.radius, epsilon = 1e-12);
    }

    #[test]
    fn angle_map_examples() {
        assert_abs_diff_eq!(boundary_angle_map(c(0.0, 0.0), 0.0), PI, epsilon = 1e-15);
        let psi = boundary_angle_map(c(0.5, 0.0), PI);
        assert!(psi < 1e-12 || TAU - psi < 1e-12, "psi = {psi}");
        let a = Complex64::from_polar(0.7, 1.1);
        assert_abs_diff_eq!(boundary_angle_map(a, 1.1), PI + 1.1, epsilon = 1e-14);
    }

    #[test]
    fn angle_map_matches_mobius_at_360_angles_including_pole() {
        let a = Complex64::from_polar(0.83, -2.2);
        let zeta = a.arg();
        let mut thetas: Vec<f64> = (0..359).map(|j| j as f64 * TAU / 359.0).collect();
        thetas.push(zeta + PI);
        for theta in thetas {
            let psi = boundary_angle_map(a, theta);
            assert!((0.0..TAU).contains(&psi));
            let direct = mobius_apply(a, Complex64::from_polar(1.0, theta)).unwrap();
            assert!((Complex64::from_polar(1.0, psi) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn jacobian_examples() {
        assert_abs_diff_eq!(boundary_jacobian(c(0.0, 0.0), 1.234), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(boundary_jacobian(c(0.5, 0.0), 0.0), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(boundary_jacobian(c(0.5, 0.0), PI), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_has_unit_mean() {
        // Composite midpoint rule; spectrally accurate for smooth periodic integrands.
        for a in [c(0.3, 0.1), Complex64::from_polar(0.8, 2.0), c(-0.6, -0.2)] {
            let q = 4000;
            let h = TAU / q as f64;
            let mean: f64 = (0..q)
                .map(|j| boundary_jacobian(a, (j as f64 + 0.5) * h))
                .sum::<f64>()
                * h
                / TAU;
            assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-10);
            assert!(boundary_jacobian(a, 0.4) > 0.0);
        }
    }

    fn disk_point() -> impl Strategy<Value = Complex64> {
        (0.0..0.999f64, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn involution(a in disk_point(), x in disk_point()) {
            let back = mobius_apply(a, mobius_apply(a, x).unwrap()).unwrap();
            prop_assert!((back - x).norm() < 1e-12);
        }

        #[test]
        fn circle_is_preserved(a in disk_point(), theta in 0.0..TAU) {
            let z = mobius_apply(a, Complex64::from_polar(1.0, theta)).unwrap();
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ball_boundary_maps_to_concentric_circle(
            c_mod in 0.0..0.9f64, angle in 0.0..TAU, frac in 0.02..0.98f64,
        ) {
            let radius = frac * (1.0 - c_mod);
            let ball = Ball::new(Complex64::from_polar(c_mod, angle), radius).unwrap();
            let p = ball_to_concentric(&ball).unwrap();
            prop_assert!(p.r > 0.0 && p.r < 1.0);
            for j in 0..100 {
                let t = j as f64 * TAU / 100.0;
                let z = ball.center + Complex64::from_polar(radius, t);
                let w = mobius_apply(p.a, z).unwrap();
                prop_assert!((w.norm() - p.r).abs() < 1e-10);
            }
            let back = concentric_to_ball(p.a, p.r).unwrap();
            prop_assert!((back.center - ball.center).norm() < 1e-12);
            prop_assert!((back.radius - ball.radius).abs() < 1e-12);
        }
    }
}
