//! Exact quantum propagator of a spin-1/2: adaptive integration of the linear
//! coefficient equations, coherent-state matrix elements, label evolution,
//! and the accumulated quantum phase.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::ode::{integrate, IntegratorConfig};
use crate::sphere::SphereAngles;

/// The two complex coefficients of the SU(2) evolution operator
/// `U = [[a, b], [-conj(b), conj(a)]]` with `|a|^2 + |b|^2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Propagator {
    pub a: Complex64,
    pub b: Complex64,
    /// Elapsed evolution time.
    pub t: f64,
}

impl Su2Propagator {
    pub fn identity() -> Self {
        Self {
            a: Complex64::new(1.0, 0.0),
            b: Complex64::new(0.0, 0.0),
            t: 0.0,
        }
    }

    /// `| |a|^2 + |b|^2 - 1 |`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() - 1.0).abs()
    }

    /// Matrix product `self * earlier` (apply `earlier` first).
    pub fn compose(&self, earlier: &Su2Propagator) -> Self {
        Self {
            a: self.a * earlier.a - self.b * earlier.b.conj(),
            b: self.a * earlier.b + self.b * earlier.a.conj(),
            t: self.t + earlier.t,
        }
    }

    /// Applies the operator to a spinor (column vector).
    pub fn apply(&self, psi: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.a * psi[0] + self.b * psi[1],
            -self.b.conj() * psi[0] + self.a.conj() * psi[1],
        ]
    }
}

/// Per-run integrator statistics, mainly for CLI diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub steps: usize,
    pub rhs_evals: usize,
}

/// Integrates the coefficient equations
/// `a' = -(i/2) Bz a + (i Bx + By)/2 conj(b)`,
/// `b' = -(i/2) Bz b - (i Bx + By)/2 conj(a)`
/// from `(a, b)(0) = (1, 0)` up to time `t`.
pub fn integrate_ab(f: &FieldSpec, t: f64, cfg: &IntegratorConfig) -> Result<Su2Propagator> {
    Ok(integrate_ab_stats(f, t, cfg)?.0)
}

/// Same as [`integrate_ab`], also returning step statistics.
pub fn integrate_ab_stats(
    f: &FieldSpec,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(Su2Propagator, OdeStats)> {
    assert!(t >= 0.0, "horizon must be nonnegative");
    let rhs = |time: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        let b = f.field_at(time)?;
        let (ar, ai, br, bi) = (y[0], y[1], y[2], y[3]);
        let a = Complex64::new(ar, ai);
        let bb = Complex64::new(br, bi);
        let i = Complex64::i();
        let da = -0.5 * i * b.bz * a + 0.5 * (i * b.bx + b.by) * bb.conj();
        let db = -0.5 * i * b.bz * bb - 0.5 * (i * b.bx + b.by) * a.conj();
        Ok([da.re, da.im, db.re, db.im])
    };
    let run = integrate(rhs, 0.0, t, [1.0, 0.0, 0.0, 0.0], cfg, t, false, |_, _| {
        false
    })?;
    Ok((
        Su2Propagator {
            a: Complex64::new(run.y[0], run.y[1]),
            b: Complex64::new(run.y[2], run.y[3]),
            t,
        },
        OdeStats {
            steps: run.steps,
            rhs_evals: run.rhs_evals,
        },
    ))
}

/// Coherent-state matrix element `<to|U|from>`.
pub fn matrix_element(u: &Su2Propagator, to: SphereAngles, from: SphereAngles) -> Complex64 {
    let (c2, s2) = ((to.theta() / 2.0).cos(), (to.theta() / 2.0).sin());
    let (c1, s1) = ((from.theta() / 2.0).cos(), (from.theta() / 2.0).sin());
    let diff = Complex64::from_polar(1.0, (to.phi() - from.phi()) / 2.0);
    let sum = Complex64::from_polar(1.0, (to.phi() + from.phi()) / 2.0);
    u.a * c2 * c1 * diff + u.a.conj() * s2 * s1 * diff.conj() + u.b * c2 * s1 * sum
        - u.b.conj() * s2 * c1 * sum.conj()
}

/// Evolves a coherent-state label: `U|Omega> = e^{i Phi} |Omega(t)>`.
///
/// The label is reconstructed from the two spinor components rather than from
/// closed arccos/log expressions, which fixes all branch choices. At a pole of
/// the reconstructed label the azimuth is returned as 0 by convention, and the
/// phase refers to that label choice (with `phi(t)` canonical in `(-pi, pi]`).
pub fn evolve_label(u: &Su2Propagator, p: SphereAngles) -> (SphereAngles, f64) {
    let psi = u.apply(p.spinor());
    let (up, dn) = (psi[0], psi[1]);
    let theta_t = 2.0 * dn.norm().atan2(up.norm());
    if theta_t < 1e-12 {
        return (SphereAngles::new(0.0, 0.0), up.arg());
    }
    if theta_t > PI - 1e-12 {
        return (SphereAngles::new(PI, 0.0), dn.arg());
    }
    let phi_t = {
        let raw = dn.arg() - up.arg();
        if raw > PI {
            raw - 2.0 * PI
        } else if raw <= -PI {
            raw + 2.0 * PI
        } else {
            raw
        }
    };
    let phase = (up * Complex64::from_polar(1.0, phi_t / 2.0)).arg();
    (SphereAngles::new(theta_t, phi_t), phase)
}

/// Classical action phase along the evolved label:
/// `Phi(t) = int_0^t [cos(theta) phi'/2 - H(theta, phi, s)] ds`,
/// integrated as one quadrature state of the label equations of motion.
///
/// Away from the poles the label obeys
/// `d cos(theta)/ds = Bx sin(theta) sin(phi) - By sin(theta) cos(phi)` and
/// `d phi/ds = -(Bx cos(phi) + By sin(phi)) cot(theta) + Bz`; a pole crossed
/// with a transverse field leaves the azimuth undefined and is an error.
pub fn accumulated_phase(
    f: &FieldSpec,
    p: SphereAngles,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    Ok(accumulated_phase_label(f, p, t, cfg)?.2)
}

/// Returns `(cos(theta(t)), unwrapped phi(t), phase)` of the classically
/// evolved label; the azimuth is continuous rather than reduced.
pub fn accumulated_phase_label(
    f: &FieldSpec,
    p: SphereAngles,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64, f64)> {
    assert!(t >= 0.0, "horizon must be nonnegative");
    let rhs = |time: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let b = f.field_at(time)?;
        let c = y[0].clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        let (sp, cp) = y[1].sin_cos();
        if s < 1e-9 {
            if b.bx * b.bx + b.by * b.by > 1e-24 {
                return Err(Error::DegenerateLabel);
            }
            // Polar orbit under a pure z field: integrand cancels exactly.
            return Ok([0.0, b.bz, 0.0]);
        }
        let dc = b.bx * s * sp - b.by * s * cp;
        let dphi = -(b.bx * cp + b.by * sp) * (c / s) + b.bz;
        let h = 0.5 * (b.bx * s * cp + b.by * s * sp + b.bz * c);
        Ok([dc, dphi, 0.5 * c * dphi - h])
    };
    let y0 = [p.theta().cos(), p.phi(), 0.0];
    let run = integrate(rhs, 0.0, t, y0, cfg, t, false, |_, _| false)?;
    Ok((run.y[0], run.y[1], run.y[2]))
}

/// Rotates both labels by pi about the y axis and conjugates the field so
/// that `<to|U|from>` is invariant; maps a label at theta onto pi - theta.
/// Used to evaluate propagators whose stereographic coordinates would be
/// singular.
pub(crate) fn rotate_pi_y(p: SphereAngles) -> SphereAngles {
    SphereAngles::new(PI - p.theta(), PI - p.phi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::overlap;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wrap(x: f64) -> f64 {
        let mut r = x.rem_euclid(2.0 * PI);
        if r > PI {
            r -= 2.0 * PI;
        }
        r
    }

    #[test]
    fn pure_z_field_dephases() {
        let cfg = IntegratorConfig::default();
        let eps = 1.3;
        let t = 2.7;
        let u = integrate_ab(&FieldSpec::constant(0.0, 0.0, eps), t, &cfg).unwrap();
        let expect = Complex64::from_polar(1.0, -eps * t / 2.0);
        assert!((u.a - expect).norm() < 1e-11);
        assert!(u.b.norm() < 1e-12);
    }

    #[test]
    fn pure_x_field_half_period_flip() {
        let cfg = IntegratorConfig::default();
        let delta = 0.9;
        let u = integrate_ab(&FieldSpec::constant(delta, 0.0, 0.0), PI / delta, &cfg).unwrap();
        assert!(u.a.norm() < 1e-11);
        assert!((u.b - Complex64::new(0.0, -1.0)).norm() < 1e-11);
    }

    #[test]
    fn zero_field_is_identity() {
        let cfg = IntegratorConfig::default();
        let u = integrate_ab(&FieldSpec::zero(), 3.0, &cfg).unwrap();
        assert!((u.a - 1.0).norm() < 1e-13 && u.b.norm() < 1e-13);
    }

    #[test]
    fn matrix_element_of_identity_is_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = Su2Propagator::identity();
        for _ in 0..100 {
            let to = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let from = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            assert!((matrix_element(&u, to, from) - overlap(to, from)).norm() < 1e-14);
        }
    }

    #[test]
    fn matrix_element_spin_flip() {
        let u = Su2Propagator {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(0.0, -1.0),
            t: 0.0,
        };
        let v = matrix_element(&u, SphereAngles::new(PI, 0.0), SphereAngles::new(0.0, 0.0));
        assert!((v - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_elements_are_contractions() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let cfg = IntegratorConfig::default();
        for _ in 0..50 {
            let f = FieldSpec::constant(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = integrate_ab(&f, rng.gen_range(0.0..4.0), &cfg).unwrap();
            let to = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let from = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            assert!(matrix_element(&u, to, from).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn unitarity_holds_on_long_horizons() {
        let cfg = IntegratorConfig::default();
        let fields = [
            FieldSpec::constant(1.7, -0.6, 2.2),
            FieldSpec::constant(4.9, 0.1, -0.8),
            FieldSpec::LandauZener {
                omega: 1.0,
                gamma: 0.7,
                t_offset: -25.0,
            },
        ];
        for f in &fields {
            let u = integrate_ab(f, 50.0, &cfg).unwrap();
            assert!(
                u.unitarity_defect() <= 1e-10,
                "defect {}",
                u.unitarity_defect()
            );
        }
    }

    #[test]
    fn composition_matches_direct_integration() {
        let cfg = IntegratorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let b: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let f = FieldSpec::constant(b[0], b[1], b[2]);
            let (t1, t2) = (rng.gen_range(0.2..1.5), rng.gen_range(1.6..3.0));
            let u1 = integrate_ab(&f, t1, &cfg).unwrap();
            // Constant fields are shift-invariant, so the second leg reuses f.
            let u2 = integrate_ab(&f, t2 - t1, &cfg).unwrap();
            let direct = integrate_ab(&f, t2, &cfg).unwrap();
            let composed = u2.compose(&u1);
            assert!((composed.a - direct.a).norm() < 1e-9);
            assert!((composed.b - direct.b).norm() < 1e-9);
        }
    }

    /// Composition with a genuinely time-dependent field: evolving over
    /// [0, t1] and then [t1, t2] with the field time-shifted matches direct
    /// integration over [0, t2].
    #[test]
    fn composition_with_time_shifted_field() {
        let cfg = IntegratorConfig::default();
        let (omega, gamma) = (1.3, 0.8);
        let (t1, t2) = (0.9, 2.4);
        let full = FieldSpec::LandauZener {
            omega,
            gamma,
            t_offset: 0.0,
        };
        let shifted = FieldSpec::LandauZener {
            omega,
            gamma,
            t_offset: t1,
        };
        let u1 = integrate_ab(&full, t1, &cfg).unwrap();
        let u2 = integrate_ab(&shifted, t2 - t1, &cfg).unwrap();
        let direct = integrate_ab(&full, t2, &cfg).unwrap();
        let composed = u2.compose(&u1);
        assert!((composed.a - direct.a).norm() < 1e-9);
        assert!((composed.b - direct.b).norm() < 1e-9);
    }

    #[test]
    fn evolve_label_identity() {
        let p = SphereAngles::new(1.2, -0.7);
        let (q, phase) = evolve_label(&Su2Propagator::identity(), p);
        assert!((q.theta() - p.theta()).abs() < 1e-14);
        assert!((q.phi() - p.phi()).abs() < 1e-14);
        assert!(phase.abs() < 1e-14);
    }

    #[test]
    fn evolve_label_z_field_advances_azimuth() {
        let cfg = IntegratorConfig::default();
        let (bz, t) = (1.4, 1.9);
        let u = integrate_ab(&FieldSpec::constant(0.0, 0.0, bz), t, &cfg).unwrap();
        let p = SphereAngles::new(0.9, 0.3);
        let (q, _) = evolve_label(&u, p);
        assert!((q.theta() - p.theta()).abs() < 1e-11);
        assert!(wrap(q.phi() - (p.phi() + bz * t)).abs() < 1e-11);
    }

    #[test]
    fn evolve_label_x_field_precesses_pole() {
        let cfg = IntegratorConfig::default();
        let (bx, t) = (1.1, 0.8);
        let u = integrate_ab(&FieldSpec::constant(bx, 0.0, 0.0), t, &cfg).unwrap();
        let (q, _) = evolve_label(&u, SphereAngles::new(0.0, 0.0));
        assert!((q.theta().cos() - (bx * t).cos()).abs() < 1e-11);
    }

    /// Closed logarithmic form of the evolved phase, compared through its
    /// square to stay clear of the principal-branch ambiguity.
    #[test]
    fn evolve_label_phase_matches_log_expression() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let cfg = IntegratorConfig::default();
        for _ in 0..100 {
            let f = FieldSpec::constant(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = integrate_ab(&f, rng.gen_range(0.1..3.0), &cfg).unwrap();
            let p = SphereAngles::new(rng.gen_range(0.3..PI - 0.3), rng.gen_range(-PI..PI));
            let (q, phase) = evolve_label(&u, p);
            if q.theta() < 0.05 || q.theta() > PI - 0.05 {
                continue;
            }
            let (c, sn) = ((p.theta() / 2.0).cos(), (p.theta() / 2.0).sin());
            let eiphi = Complex64::from_polar(1.0, p.phi());
            let num = u.a * c / eiphi + u.b * sn;
            let den = u.a.conj() * c + u.b.conj() * sn / eiphi;
            let closed = Complex64::from_polar(1.0, q.phi()) * num / den;
            let mine = Complex64::from_polar(1.0, 2.0 * phase);
            assert!((closed - mine).norm() < 1e-10, "{closed} vs {mine}");
        }
    }

    /// Closed arccos form of the evolved polar angle.
    #[test]
    fn evolve_label_matches_arccos_expression() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let cfg = IntegratorConfig::default();
        for _ in 0..100 {
            let f = FieldSpec::constant(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = integrate_ab(&f, rng.gen_range(0.1..3.0), &cfg).unwrap();
            let p = SphereAngles::new(rng.gen_range(0.2..PI - 0.2), rng.gen_range(-PI..PI));
            let (q, _) = evolve_label(&u, p);
            let eiphi = Complex64::from_polar(1.0, p.phi());
            let cos_expect = (u.a.norm_sqr() - u.b.norm_sqr()) * p.theta().cos()
                + ((u.a.conj() * u.b * eiphi).re * 2.0) * p.theta().sin();
            assert!((q.theta().cos() - cos_expect).abs() < 1e-11);
        }
    }

    /// The evolved label obeys the classical equations of motion (checked by
    /// central differences in the horizon).
    #[test]
    fn evolved_label_satisfies_classical_eom() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let cfg = IntegratorConfig::default();
        let h = 1e-5;
        for _ in 0..20 {
            let bvec: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = FieldSpec::constant(bvec[0], bvec[1], bvec[2]);
            let t = rng.gen_range(0.3..2.0);
            let p = SphereAngles::new(rng.gen_range(0.6..PI - 0.6), rng.gen_range(-1.5..1.5));
            let label_at = |tt: f64| {
                let u = integrate_ab(&f, tt, &cfg).unwrap();
                evolve_label(&u, p).0
            };
            let (lm, l0, lp) = (label_at(t - h), label_at(t), label_at(t + h));
            // Skip samples whose azimuth wraps inside the stencil.
            if (lp.phi() - lm.phi()).abs() > PI {
                continue;
            }
            let dcos = (lp.theta().cos() - lm.theta().cos()) / (2.0 * h);
            let dphi = (lp.phi() - lm.phi()) / (2.0 * h);
            let (st, ct) = l0.theta().sin_cos();
            let (sp, cp) = l0.phi().sin_cos();
            let expect_dcos = bvec[0] * st * sp - bvec[1] * st * cp;
            let expect_dphi = -(bvec[0] * cp + bvec[1] * sp) * ct / st + bvec[2];
            assert!(
                (dcos - expect_dcos).abs() < 1e-6,
                "dcos {dcos} vs {expect_dcos}"
            );
            assert!(
                (dphi - expect_dphi).abs() < 1e-6,
                "dphi {dphi} vs {expect_dphi}"
            );
        }
    }

    /// Factorization through the evolved label: for a real start label the
    /// propagator to any probe splits into overlap times diagonal element.
    #[test]
    fn label_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let cfg = IntegratorConfig::default();
        for _ in 0..50 {
            let f = FieldSpec::constant(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let u = integrate_ab(&f, rng.gen_range(0.1..3.0), &cfg).unwrap();
            let start = SphereAngles::new(rng.gen_range(0.1..PI - 0.1), rng.gen_range(-PI..PI));
            let probe = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let (evolved, _) = evolve_label(&u, start);
            let lhs = matrix_element(&u, probe, start);
            let rhs = overlap(probe, evolved) * matrix_element(&u, evolved, start);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn accumulated_phase_vanishes_on_polar_orbit() {
        let cfg = IntegratorConfig::default();
        let f = FieldSpec::constant(0.0, 0.0, 1.7);
        let phase = accumulated_phase(&f, SphereAngles::new(0.0, 0.0), 2.0, &cfg).unwrap();
        assert!(phase.abs() < 1e-12);
        let phase =
            accumulated_phase(&FieldSpec::zero(), SphereAngles::new(1.0, 0.5), 2.0, &cfg).unwrap();
        assert!(phase.abs() < 1e-12);
    }

    #[test]
    fn accumulated_phase_errors_on_transverse_pole() {
        let cfg = IntegratorConfig::default();
        let f = FieldSpec::constant(1.0, 0.0, 0.0);
        let err = accumulated_phase(&f, SphereAngles::new(0.0, 0.0), 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateLabel));
    }

    /// The action phase reproduces the full quantum state: the spinor built
    /// from the classically evolved label and accumulated phase matches U
    /// applied to the initial state, windings included.
    #[test]
    fn accumulated_phase_reconstructs_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let cfg = IntegratorConfig::default();
        for _ in 0..30 {
            let f = FieldSpec::constant(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let t = rng.gen_range(0.2..3.0);
            let p = SphereAngles::new(rng.gen_range(0.7..PI - 0.7), rng.gen_range(-PI..PI));
            let (cos_t, phi_u, phase) = match accumulated_phase_label(&f, p, t, &cfg) {
                Ok(v) => v,
                Err(Error::DegenerateLabel) => continue,
                Err(e) => panic!("{e}"),
            };
            let theta_t = cos_t.clamp(-1.0, 1.0).acos();
            let half = Complex64::from_polar(1.0, phi_u / 2.0);
            let pref = Complex64::from_polar(1.0, phase);
            let predicted = [
                pref * (theta_t / 2.0).cos() * half.conj(),
                pref * (theta_t / 2.0).sin() * half,
            ];
            let u = integrate_ab(&f, t, &cfg).unwrap();
            let actual = u.apply(p.spinor());
            assert!((predicted[0] - actual[0]).norm() < 1e-8);
            assert!((predicted[1] - actual[1]).norm() < 1e-8);
        }
    }

    /// On short horizons where the azimuth cannot wind, the action phase
    /// agrees with the label-evolution phase modulo 2 pi.
    #[test]
    fn accumulated_phase_matches_label_phase_mod_two_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let cfg = IntegratorConfig::default();
        for _ in 0..40 {
            let f = FieldSpec::constant(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let t = rng.gen_range(0.1..0.8);
            let p = SphereAngles::new(rng.gen_range(1.0..PI - 1.0), rng.gen_range(-1.0..1.0));
            let (_, phi_u, acc) = match accumulated_phase_label(&f, p, t, &cfg) {
                Ok(v) => v,
                Err(Error::DegenerateLabel) => continue,
                Err(e) => panic!("{e}"),
            };
            let u = integrate_ab(&f, t, &cfg).unwrap();
            let (label, lphase) = evolve_label(&u, p);
            // Confirm no winding occurred, then compare mod 2 pi.
            assert!((phi_u - label.phi()).abs() < 1e-6);
            assert!(wrap(acc - lphase).abs() < 1e-8, "{acc} vs {lphase}");
        }
    }
}
