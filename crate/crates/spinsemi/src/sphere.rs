//! Spin coherent-state geometry: angle labels, stereographic coordinates,
//! overlaps, spin-operator matrix elements, and the identity-resolution check.
//!
//! A coherent state is labeled by a point (theta, phi) on the unit sphere and
//! has spinor components (cos(theta/2) e^{-i phi/2}, sin(theta/2) e^{i phi/2}).
//! Note the half-angle phases: phi and phi + 2pi label the same ray only up to
//! a sign, so only sign-insensitive quantities are invariant under that shift.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Real point on the unit sphere labeling a spin coherent state.
///
/// Invariants: `0 <= theta <= pi` and `phi` reduced to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereAngles {
    theta: f64,
    phi: f64,
}

impl SphereAngles {
    /// Builds a normalized label. `theta` is clamped onto `[0, pi]` when
    /// within 1e-12 of the boundary; `phi` is reduced modulo 2pi to `(-pi, pi]`.
    ///
    /// Panics if `theta` lies outside `[0, pi]` by more than 1e-12.
    pub fn new(theta: f64, phi: f64) -> Self {
        assert!(
            (-1e-12..=PI + 1e-12).contains(&theta),
            "polar angle {theta} outside [0, pi]"
        );
        let theta = theta.clamp(0.0, PI);
        Self {
            theta,
            phi: reduce_phi(phi),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Spinor components (amplitude on spin-up, amplitude on spin-down).
    pub fn spinor(&self) -> [Complex64; 2] {
        let (c, s) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        let half = Complex64::from_polar(1.0, self.phi / 2.0);
        [c * half.conj(), s * half]
    }

    /// Stereographic projection from the south pole,
    /// `zeta = tan(theta/2) e^{i phi}`, `eta = conj(zeta)`.
    ///
    /// The south pole itself has no finite image and is rejected.
    pub fn to_stereo(&self) -> Result<StereoPair> {
        if self.theta >= PI {
            return Err(Error::Pole("south pole has no stereographic image"));
        }
        let r = (self.theta / 2.0).tan();
        let zeta = Complex64::from_polar(r, self.phi);
        Ok(StereoPair {
            zeta,
            eta: zeta.conj(),
        })
    }
}

fn reduce_phi(phi: f64) -> f64 {
    if (-PI..=PI).contains(&phi) {
        if phi == -PI {
            return PI;
        }
        return phi;
    }
    let r = phi.rem_euclid(2.0 * PI); // [0, 2pi)
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Independent pair of complex stereographic coordinates (zeta, eta).
///
/// For a real sphere point `eta = conj(zeta)`; along complexified classical
/// trajectories the two components evolve independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoPair {
    pub zeta: Complex64,
    pub eta: Complex64,
}

impl StereoPair {
    pub fn new(zeta: Complex64, eta: Complex64) -> Self {
        Self { zeta, eta }
    }

    /// The pair representing a real sphere point with coordinate `zeta`.
    pub fn real_point(zeta: Complex64) -> Self {
        Self {
            zeta,
            eta: zeta.conj(),
        }
    }

    /// True when the pair represents a real sphere point within tolerance.
    pub fn is_real_point(&self) -> bool {
        (self.eta - self.zeta.conj()).norm() <= 1e-12 * (1.0 + self.zeta.norm())
    }

    /// Inverse stereographic map back to sphere angles.
    ///
    /// Only real points are converted; complex pairs stay in stereographic
    /// coordinates to avoid multivalued inverse trigonometry.
    pub fn to_angles(&self) -> Result<SphereAngles> {
        if !self.is_real_point() {
            return Err(Error::NotRealPoint);
        }
        let r2 = (self.zeta * self.eta).re.max(0.0);
        let cos_theta = ((1.0 - r2) / (1.0 + r2)).clamp(-1.0, 1.0);
        let phi = if self.zeta.norm() == 0.0 {
            0.0
        } else {
            self.zeta.arg()
        };
        Ok(SphereAngles::new(cos_theta.acos(), phi))
    }
}

/// Coherent-state overlap `<to|from>`.
pub fn overlap(to: SphereAngles, from: SphereAngles) -> Complex64 {
    let (c2, s2) = ((to.theta / 2.0).cos(), (to.theta / 2.0).sin());
    let (c1, s1) = ((from.theta / 2.0).cos(), (from.theta / 2.0).sin());
    let half = Complex64::from_polar(1.0, (to.phi - from.phi) / 2.0);
    c2 * c1 * half + s2 * s1 * half.conj()
}

/// Matrix elements `<to|S_i|from>` of the three spin operators, together with
/// the overlap `<to|from>`.
#[derive(Debug, Clone, Copy)]
pub struct SpinMatrixElements {
    pub sx: Complex64,
    pub sy: Complex64,
    pub sz: Complex64,
    pub overlap: Complex64,
}

pub fn spin_matrix_elements(to: SphereAngles, from: SphereAngles) -> SpinMatrixElements {
    let (c2, s2) = ((to.theta / 2.0).cos(), (to.theta / 2.0).sin());
    let (c1, s1) = ((from.theta / 2.0).cos(), (from.theta / 2.0).sin());
    let diff = Complex64::from_polar(1.0, (to.phi - from.phi) / 2.0);
    let sum = Complex64::from_polar(1.0, (to.phi + from.phi) / 2.0);
    let i = Complex64::i();

    let plus = c2 * s1 * sum + s2 * c1 * sum.conj();
    let minus = c2 * s1 * sum - s2 * c1 * sum.conj();
    SpinMatrixElements {
        sx: 0.5 * plus,
        sy: minus / (2.0 * i),
        sz: 0.5 * (c2 * c1 * diff - s2 * s1 * diff.conj()),
        overlap: c2 * c1 * diff + s2 * s1 * diff.conj(),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Numerically evaluates `(1/2pi) \int dcos(theta) dphi |Omega><Omega|` with
/// Gauss-Legendre in cos(theta) and the periodic trapezoid rule in phi, and
/// returns the maximum entrywise deviation from the 2x2 identity.
///
/// The integrand is degree-1 in cos(theta) and a first-harmonic Fourier
/// series in phi, so tiny orders are already exact.
pub fn identity_resolution_defect(n_theta: usize, n_phi: usize) -> f64 {
    assert!(n_theta >= 2 && n_phi >= 2, "quadrature orders must be >= 2");
    let (nodes, weights) = gauss_legendre(n_theta);
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (&x, &w) in nodes.iter().zip(&weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for k in 0..n_phi {
            let phi = 2.0 * PI * k as f64 / n_phi as f64;
            let psi = SphereAngles::new(theta, phi).spinor();
            for r in 0..2 {
                for c in 0..2 {
                    m[r][c] += w * psi[r] * psi[c].conj();
                }
            }
        }
    }
    let scale = 1.0 / n_phi as f64;
    let mut defect: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let id = if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            defect = defect.max((scale * m[r][c] - id).norm());
        }
    }
    defect
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn overlap_of_state_with_itself_is_one() {
        let p = SphereAngles::new(0.7, 1.1);
        assert!((overlap(p, p) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn antipodal_poles_are_orthogonal() {
        let n = SphereAngles::new(0.0, 0.0);
        let s = SphereAngles::new(PI, 0.0);
        assert!(overlap(n, s).norm() < 1e-15);
        assert!(overlap(s, n).norm() < 1e-15);
    }

    #[test]
    fn overlap_equator_with_pole() {
        let v = overlap(
            SphereAngles::new(PI / 2.0, 0.0),
            SphereAngles::new(0.0, 0.0),
        );
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).norm() < 1e-15);
    }

    #[test]
    fn overlap_is_hermitian_and_contractive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let b = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let ab = overlap(a, b);
            let ba = overlap(b, a);
            assert!((ab - ba.conj()).norm() < 1e-14);
            assert!(ab.norm() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn overlap_magnitude_one_only_on_the_same_ray() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let a = SphereAngles::new(rng.gen_range(0.1..PI - 0.1), rng.gen_range(-PI..PI));
            let b = SphereAngles::new(rng.gen_range(0.1..PI - 0.1), rng.gen_range(-PI..PI));
            let cos_angle = a.theta().cos() * b.theta().cos()
                + a.theta().sin() * b.theta().sin() * (a.phi() - b.phi()).cos();
            if cos_angle < 0.999 {
                assert!(overlap(a, b).norm() < 1.0 - 1e-5);
            }
            assert!((overlap(a, a).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn stereo_forward_examples() {
        let p = SphereAngles::new(0.0, 2.3).to_stereo().unwrap();
        assert!(p.zeta.norm() < 1e-15 && p.eta.norm() < 1e-15);

        let p = SphereAngles::new(PI / 2.0, 0.0).to_stereo().unwrap();
        assert!((p.zeta - 1.0).norm() < 1e-15 && (p.eta - 1.0).norm() < 1e-15);

        let p = SphereAngles::new(PI / 2.0, PI / 2.0).to_stereo().unwrap();
        assert!((p.zeta - c64(0.0, 1.0)).norm() < 1e-15);
        assert!((p.eta - c64(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn stereo_rejects_south_pole() {
        assert!(matches!(
            SphereAngles::new(PI, 0.0).to_stereo(),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn stereo_inverse_examples() {
        let p = StereoPair::new(c64(0.0, 0.0), c64(0.0, 0.0))
            .to_angles()
            .unwrap();
        assert!(p.theta() < 1e-15 && p.phi().abs() < 1e-15);

        let p = StereoPair::new(c64(1.0, 0.0), c64(1.0, 0.0))
            .to_angles()
            .unwrap();
        assert!((p.theta() - PI / 2.0).abs() < 1e-15 && p.phi().abs() < 1e-15);

        let p = StereoPair::new(c64(0.0, 1.0), c64(0.0, -1.0))
            .to_angles()
            .unwrap();
        assert!((p.theta() - PI / 2.0).abs() < 1e-15);
        assert!((p.phi() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn stereo_inverse_rejects_complex_points() {
        let p = StereoPair::new(c64(1.0, 0.0), c64(0.5, 0.0));
        assert!(matches!(p.to_angles(), Err(Error::NotRealPoint)));
    }

    #[test]
    fn stereo_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let p = SphereAngles::new(rng.gen_range(0.0..PI - 1e-6), rng.gen_range(-PI..PI));
            let q = p.to_stereo().unwrap().to_angles().unwrap();
            assert!((p.theta() - q.theta()).abs() < 1e-12 * (1.0 + p.theta()));
            if p.theta() > 1e-9 {
                assert!((p.phi() - q.phi()).abs() < 1e-12 * (1.0 + p.phi().abs()));
            }
        }
    }

    #[test]
    fn diagonal_spin_elements() {
        let up = SphereAngles::new(0.0, 0.0);
        let m = spin_matrix_elements(up, up);
        assert!((m.sz - 0.5).norm() < 1e-15 && m.sx.norm() < 1e-15 && m.sy.norm() < 1e-15);

        let down = SphereAngles::new(PI, 0.0);
        let m = spin_matrix_elements(down, down);
        assert!((m.sz + 0.5).norm() < 1e-15);

        let eq = SphereAngles::new(PI / 2.0, 0.0);
        let m = spin_matrix_elements(eq, eq);
        assert!((m.sx - 0.5).norm() < 1e-15 && m.sy.norm() < 1e-15 && m.sz.norm() < 1e-15);
    }

    #[test]
    fn diagonal_spin_elements_match_bloch_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let p = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            let m = spin_matrix_elements(p, p);
            assert!((m.overlap - 1.0).norm() < 1e-14);
            assert!((m.sx - 0.5 * p.theta().sin() * p.phi().cos()).norm() < 1e-14);
            assert!((m.sy - 0.5 * p.theta().sin() * p.phi().sin()).norm() < 1e-14);
            assert!((m.sz - 0.5 * p.theta().cos()).norm() < 1e-14);
        }
    }

    /// Off-diagonal ratio identities: dividing out the overlap leaves simple
    /// rational functions of the two stereographic coordinates.
    #[test]
    fn ratio_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..300 {
            let to = SphereAngles::new(rng.gen_range(0.05..PI - 0.05), rng.gen_range(-PI..PI));
            let from = SphereAngles::new(rng.gen_range(0.05..PI - 0.05), rng.gen_range(-PI..PI));
            let m = spin_matrix_elements(to, from);
            if m.overlap.norm() < 1e-6 {
                continue;
            }
            let zeta1 = from.to_stereo().unwrap().zeta;
            let eta2 = to.to_stereo().unwrap().eta;
            let den = 1.0 + eta2 * zeta1;
            let i = Complex64::i();
            assert!((m.sx / m.overlap - 0.5 * (zeta1 + eta2) / den).norm() < 1e-11);
            assert!((m.sy / m.overlap + 0.5 * i * (zeta1 - eta2) / den).norm() < 1e-11);
            assert!((m.sz / m.overlap - 0.5 * (1.0 - eta2 * zeta1) / den).norm() < 1e-11);
        }
    }

    #[test]
    fn identity_resolution_at_tiny_and_moderate_orders() {
        assert!(identity_resolution_defect(64, 64) <= 1e-12);
        assert!(identity_resolution_defect(2, 4) <= 1e-12);
    }

    /// Low-order quadrature agrees with a brute-force fine grid.
    #[test]
    fn identity_resolution_matches_fine_grid() {
        let coarse = identity_resolution_defect(2, 4);
        let fine = identity_resolution_defect(200, 256);
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn identity_resolution_diagonal_is_normalized() {
        // Diagonal entries of the quadrature matrix must come out 1 exactly;
        // the defect therefore bounds their deviation.
        assert!(identity_resolution_defect(16, 16) <= 1e-13);
    }

    #[test]
    fn identity_resolution_weakly_decreases_under_doubling() {
        // The true defect is zero at every tested order, so the measured
        // values are rounding noise; the slack covers its accumulation.
        let mut prev = identity_resolution_defect(8, 8);
        for k in [16, 32, 64] {
            let d = identity_resolution_defect(k, k);
            assert!(d <= prev + 1e-13);
            prev = d;
        }
    }

    #[test]
    fn phi_reduction_is_canonical() {
        assert_eq!(SphereAngles::new(1.0, 3.0 * PI).phi(), PI);
        assert!((SphereAngles::new(1.0, -3.0 * PI / 2.0).phi() - PI / 2.0).abs() < 1e-15);
        assert_eq!(SphereAngles::new(1.0, -PI).phi(), PI);
    }

    /// Propagator magnitudes and expectation values are insensitive to
    /// phi -> phi + 2pi even though amplitudes flip sign.
    #[test]
    fn two_pi_shift_is_a_ray_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let theta = rng.gen_range(0.1..PI - 0.1);
            let phi = rng.gen_range(-PI..PI);
            let a = SphereAngles::new(theta, phi);
            let b = SphereAngles::new(theta, phi + 2.0 * PI);
            let probe = SphereAngles::new(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI));
            assert!((overlap(probe, a).norm() - overlap(probe, b).norm()).abs() < 1e-14);
            let (ma, mb) = (spin_matrix_elements(a, a), spin_matrix_elements(b, b));
            assert!((ma.sx - mb.sx).norm() < 1e-14);
            assert!((ma.sz - mb.sz).norm() < 1e-14);
        }
    }
}
