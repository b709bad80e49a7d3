//! Seeded random case generation for verification ensembles, shared by the
//! CLI `verify` command and the acceptance suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exact::{integrate_ab, matrix_element};
use crate::field::FieldSpec;
use crate::ode::IntegratorConfig;
use crate::semiclassical::endpoint_propagator;
use crate::sphere::SphereAngles;

/// Field families available for randomized verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFamily {
    Const,
    Fourier,
    TableRandom,
    LandauZener,
}

impl FieldFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "const" => Ok(Self::Const),
            "fourier" => Ok(Self::Fourier),
            "table-random" => Ok(Self::TableRandom),
            "lz" => Ok(Self::LandauZener),
            other => Err(Error::Parse(format!(
                "unknown family `{other}` (expected const, fourier, table-random or lz)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Const => "const",
            Self::Fourier => "fourier",
            Self::TableRandom => "table-random",
            Self::LandauZener => "lz",
        }
    }
}

/// One randomized comparison case.
#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub field: FieldSpec,
    pub from: SphereAngles,
    pub to: SphereAngles,
    pub t: f64,
}

pub fn sample_field(family: FieldFamily, rng: &mut ChaCha8Rng, t_max: f64) -> FieldSpec {
    match family {
        FieldFamily::Const => FieldSpec::constant(
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0),
        ),
        FieldFamily::Fourier => {
            let component = |rng: &mut ChaCha8Rng| {
                (0..3)
                    .map(|_| crate::field::Harmonic {
                        omega: rng.gen_range(0.5..3.0),
                        cos_amp: rng.gen_range(-2.0..2.0),
                        sin_amp: rng.gen_range(-2.0..2.0),
                    })
                    .collect()
            };
            FieldSpec::Fourier {
                x: component(rng),
                y: component(rng),
                z: component(rng),
            }
        }
        FieldFamily::TableRandom => {
            let step = 0.25;
            let n = (t_max / step).ceil() as usize + 2;
            let samples = (0..n)
                .map(|k| {
                    [
                        k as f64 * step,
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ]
                })
                .collect();
            FieldSpec::tabulated(samples).expect("strictly increasing by construction")
        }
        FieldFamily::LandauZener => FieldSpec::LandauZener {
            omega: rng.gen_range(0.2..3.0),
            gamma: rng.gen_range(0.2..1.0),
            t_offset: rng.gen_range(-2.0..2.0),
        },
    }
}

/// Pole-safe endpoint label: theta in [0.1 pi, 0.9 pi], phi in (-pi, pi].
pub fn sample_endpoint(rng: &mut ChaCha8Rng) -> SphereAngles {
    SphereAngles::new(rng.gen_range(0.1 * PI..0.9 * PI), rng.gen_range(-PI..PI))
}

pub fn sample_case(family: FieldFamily, rng: &mut ChaCha8Rng) -> VerifyCase {
    let t_max = 5.0;
    VerifyCase {
        field: sample_field(family, rng, t_max),
        from: sample_endpoint(rng),
        to: sample_endpoint(rng),
        t: rng.gen_range(0.05..t_max),
    }
}

/// Outcome of a randomized endpoint-route-versus-exact ensemble.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOutcome {
    pub cases: usize,
    pub max_error: f64,
    pub mean_error: f64,
}

/// Runs `n` seeded comparisons of the semiclassical endpoint route against
/// the exact propagator. Deterministic for a fixed seed.
pub fn run_verification(
    family: FieldFamily,
    n: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<VerifyOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    let mut sum = 0.0f64;
    for _ in 0..n {
        let case = sample_case(family, &mut rng);
        let semi = endpoint_propagator(&case.field, case.from, case.to, case.t, cfg)?;
        let exact = matrix_element(&integrate_ab(&case.field, case.t, cfg)?, case.to, case.from);
        let err = (semi.value - exact).norm();
        max_error = max_error.max(err);
        sum += err;
    }
    Ok(VerifyOutcome {
        cases: n,
        max_error,
        mean_error: if n > 0 { sum / n as f64 } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for family in [
            FieldFamily::Const,
            FieldFamily::Fourier,
            FieldFamily::TableRandom,
            FieldFamily::LandauZener,
        ] {
            let ca = sample_case(family, &mut a);
            let cb = sample_case(family, &mut b);
            assert_eq!(ca.field, cb.field);
            assert_eq!(ca.t, cb.t);
        }
    }

    #[test]
    fn small_ensembles_verify() {
        let cfg = IntegratorConfig::default();
        for family in [FieldFamily::Const, FieldFamily::LandauZener] {
            let out = run_verification(family, 5, 123, &cfg).unwrap();
            assert_eq!(out.cases, 5);
            assert!(out.max_error <= 1e-8, "{family:?}: {}", out.max_error);
            assert!(out.mean_error <= out.max_error);
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            FieldFamily::Const,
            FieldFamily::Fourier,
            FieldFamily::TableRandom,
            FieldFamily::LandauZener,
        ] {
            assert_eq!(FieldFamily::parse(f.name()).unwrap(), f);
        }
        assert!(FieldFamily::parse("nope").is_err());
    }
}
