//! Time-dependent magnetic field models and the classical Hamiltonian in both
//! coordinate systems (hbar = 1, field components in angular-frequency units).

use num_complex::Complex64;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sphere::{SphereAngles, StereoPair};

/// One Fourier harmonic of a field component:
/// `cos_amp * cos(omega t) + sin_amp * sin(omega t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub omega: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// A time-dependent magnetic field B(t) = (Bx, By, Bz).
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// Time-independent field.
    Constant { bx: f64, by: f64, bz: f64 },
    /// Linear sweep through an avoided crossing:
    /// `B(t) = (omega, 0, -gamma^2 (t + t_offset))`.
    LandauZener {
        omega: f64,
        gamma: f64,
        t_offset: f64,
    },
    /// Linear interpolation of samples `(t, bx, by, bz)` with strictly
    /// increasing times; evaluation outside the range is an error.
    Tabulated { samples: Vec<[f64; 4]> },
    /// Per-component finite Fourier series.
    Fourier {
        x: Vec<Harmonic>,
        y: Vec<Harmonic>,
        z: Vec<Harmonic>,
    },
}

/// Field components at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldSample {
    pub fn norm(&self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }
}

impl FieldSpec {
    pub fn constant(bx: f64, by: f64, bz: f64) -> Self {
        FieldSpec::Constant { bx, by, bz }
    }

    pub fn zero() -> Self {
        FieldSpec::Constant {
            bx: 0.0,
            by: 0.0,
            bz: 0.0,
        }
    }

    /// Builds a tabulated field, validating strict monotonicity of the times.
    pub fn tabulated(samples: Vec<[f64; 4]>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Parse(
                "tabulated field needs at least 2 samples".into(),
            ));
        }
        for w in samples.windows(2) {
            if w[1][0] <= w[0][0] {
                return Err(Error::Parse(format!(
                    "tabulated times must be strictly increasing (got {} after {})",
                    w[1][0], w[0][0]
                )));
            }
        }
        Ok(FieldSpec::Tabulated { samples })
    }

    /// Evaluates B(t).
    pub fn field_at(&self, t: f64) -> Result<FieldSample> {
        match self {
            FieldSpec::Constant { bx, by, bz } => Ok(FieldSample {
                bx: *bx,
                by: *by,
                bz: *bz,
            }),
            FieldSpec::LandauZener {
                omega,
                gamma,
                t_offset,
            } => Ok(FieldSample {
                bx: *omega,
                by: 0.0,
                bz: -gamma * gamma * (t + t_offset),
            }),
            FieldSpec::Tabulated { samples } => {
                let (t0, t1) = (samples[0][0], samples[samples.len() - 1][0]);
                if t < t0 || t > t1 {
                    return Err(Error::OutOfRange {
                        t,
                        min: t0,
                        max: t1,
                    });
                }
                let idx = samples
                    .partition_point(|s| s[0] <= t)
                    .min(samples.len() - 1);
                let (lo, hi) = (&samples[idx - 1], &samples[idx]);
                let w = (t - lo[0]) / (hi[0] - lo[0]);
                Ok(FieldSample {
                    bx: lo[1] + w * (hi[1] - lo[1]),
                    by: lo[2] + w * (hi[2] - lo[2]),
                    bz: lo[3] + w * (hi[3] - lo[3]),
                })
            }
            FieldSpec::Fourier { x, y, z } => {
                let eval = |hs: &[Harmonic]| {
                    hs.iter()
                        .map(|h| h.cos_amp * (h.omega * t).cos() + h.sin_amp * (h.omega * t).sin())
                        .sum()
                };
                Ok(FieldSample {
                    bx: eval(x),
                    by: eval(y),
                    bz: eval(z),
                })
            }
        }
    }

    /// Parses the textual mini-language:
    /// `const:bx,by,bz` | `lz:omega,gamma[,t_offset]` | `table:<path>` | `fourier:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("field spec `{spec}` has no `:`")))?;
        match kind {
            "const" => {
                let v = parse_numbers(rest, 3, 3)?;
                Ok(FieldSpec::constant(v[0], v[1], v[2]))
            }
            "lz" => {
                let v = parse_numbers(rest, 2, 3)?;
                Ok(FieldSpec::LandauZener {
                    omega: v[0],
                    gamma: v[1],
                    t_offset: v.get(2).copied().unwrap_or(0.0),
                })
            }
            "table" => Self::load_table(Path::new(rest)),
            "fourier" => Self::load_fourier(Path::new(rest)),
            other => Err(Error::Parse(format!("unknown field kind `{other}`"))),
        }
    }

    /// Reads a tabulated field from CSV with header `t,bx,by,bz`.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "t,bx,by,bz" => {}
            _ => {
                return Err(Error::Parse(format!(
                    "{}: expected header `t,bx,by,bz`",
                    path.display()
                )))
            }
        }
        let mut samples = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let v = parse_numbers(line, 4, 4)
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
            samples.push([v[0], v[1], v[2], v[3]]);
        }
        Self::tabulated(samples)
    }

    /// Reads a Fourier field from CSV with header `component,omega,cos_amp,sin_amp`.
    pub fn load_fourier(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "component,omega,cos_amp,sin_amp" => {}
            _ => {
                return Err(Error::Parse(format!(
                    "{}: expected header `component,omega,cos_amp,sin_amp`",
                    path.display()
                )))
            }
        }
        let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let comp = parts.next().unwrap_or("").trim();
            let nums: Vec<&str> = parts.collect();
            if nums.len() != 3 {
                return Err(Error::Parse(format!(
                    "{}:{}: expected 4 columns",
                    path.display(),
                    n + 1
                )));
            }
            let v = parse_numbers(&nums.join(","), 3, 3)
                .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
            let h = Harmonic {
                omega: v[0],
                cos_amp: v[1],
                sin_amp: v[2],
            };
            match comp {
                "x" => x.push(h),
                "y" => y.push(h),
                "z" => z.push(h),
                other => {
                    return Err(Error::Parse(format!(
                        "{}:{}: component must be x, y or z (got `{other}`)",
                        path.display(),
                        n + 1
                    )))
                }
            }
        }
        Ok(FieldSpec::Fourier { x, y, z })
    }
}

fn parse_numbers(s: &str, min: usize, max: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{}` is not a number", p.trim())))
        })
        .collect::<Result<_>>()?;
    if vals.len() < min || vals.len() > max {
        return Err(Error::Parse(format!(
            "expected {min}..={max} comma-separated numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

/// Classical Hamiltonian `<Omega|H(t)|Omega>` in angle variables:
/// `(Bx sin(theta) cos(phi) + By sin(theta) sin(phi) + Bz cos(theta)) / 2`.
pub fn hamiltonian_angles(f: &FieldSpec, p: SphereAngles, t: f64) -> Result<f64> {
    let b = f.field_at(t)?;
    let (st, ct) = p.theta().sin_cos();
    let (sp, cp) = p.phi().sin_cos();
    Ok(0.5 * (b.bx * st * cp + b.by * st * sp + b.bz * ct))
}

/// Classical Hamiltonian in stereographic variables:
/// `(Bx (zeta+eta) - i By (zeta-eta) + Bz (1 - zeta eta)) / (2 (1 + zeta eta))`.
pub fn hamiltonian_stereo(f: &FieldSpec, p: StereoPair, t: f64) -> Result<Complex64> {
    let b = f.field_at(t)?;
    hamiltonian_stereo_sample(&b, p.zeta, p.eta)
}

pub(crate) fn hamiltonian_stereo_sample(
    b: &FieldSample,
    zeta: Complex64,
    eta: Complex64,
) -> Result<Complex64> {
    let ze = zeta * eta;
    let den = 1.0 + ze;
    if den.norm() < 1e-14 * (1.0 + ze.norm()) {
        return Err(Error::Pole("1 + zeta*eta vanishes in the Hamiltonian"));
    }
    let i = Complex64::i();
    Ok(0.5 * (b.bx * (zeta + eta) - i * b.by * (zeta - eta) + b.bz * (1.0 - ze)) / den)
}

/// Same Hamiltonian in homogeneous coordinates `zeta = u/v`, stable when the
/// trajectory passes near the point at infinity.
pub(crate) fn hamiltonian_stereo_proj(
    b: &FieldSample,
    u: Complex64,
    v: Complex64,
    eta: Complex64,
) -> Result<Complex64> {
    let den = v + u * eta;
    if den.norm() < 1e-14 * (v.norm() + (u * eta).norm() + 1e-300) {
        return Err(Error::Pole("1 + zeta*eta vanishes in the Hamiltonian"));
    }
    let i = Complex64::i();
    Ok(0.5 * (b.bx * (u + eta * v) - i * b.by * (u - eta * v) + b.bz * (v - u * eta)) / den)
}
