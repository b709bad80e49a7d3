//! Embedded Dormand-Prince 5(4) integrator with PI step-size control and
//! 4th-order dense output. Coefficients from Dormand & Prince (1980) and the
//! Hairer-Norsett-Wanner DOPRI5 code.

use crate::error::{Error, Result};

/// Tolerances and budgets for the adaptive integrators.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum step size; `None` means 1e-2 of the integration horizon.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: None,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol: rel_tol * 1e-2,
            ..Self::default()
        }
    }

    pub(crate) fn resolved_max_step(&self, horizon: f64) -> f64 {
        self.max_step.unwrap_or(1e-2 * horizon.abs().max(1e-12))
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_SHRINK_MAX: f64 = 10.0; // at most /10 per rejection
const FAC_GROW_MAX: f64 = 5.0; // at most x5 per acceptance

/// One accepted step with its interpolation polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Evaluates the interpolant at `t` inside `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.cont[0][i]
                + th * (self.cont[1][i]
                    + th1 * (self.cont[2][i] + th * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        out
    }
}

/// Result of one adaptive integration run.
#[derive(Debug, Clone)]
pub struct Integration<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dense: Vec<DenseStep<N>>,
    pub steps: usize,
    pub rhs_evals: usize,
    /// True when the run ended early because the stop predicate fired.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`.
///
/// `stop` is checked after every accepted step; returning true ends the run
/// at that step boundary. `horizon` only scales the default maximum step.
pub fn integrate<const N: usize>(
    mut rhs: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    horizon: f64,
    collect_dense: bool,
    mut stop: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<Integration<N>> {
    let mut out = Integration {
        t: t0,
        y: y0,
        dense: Vec::new(),
        steps: 0,
        rhs_evals: 0,
        stopped: false,
    };
    if t1 <= t0 {
        return Ok(out);
    }
    assert!(
        cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.max_step.map_or(true, |h| h > 0.0),
        "tolerances and max_step must be positive"
    );
    let hmax = cfg.resolved_max_step(horizon).min(t1 - t0);
    let mut k1 = rhs(t0, &y0)?;
    out.rhs_evals += 1;

    // Classic two-evaluation starting-step heuristic.
    let sc = |y: &[f64; N], i: usize| cfg.abs_tol + cfg.rel_tol * y[i].abs();
    let mut d0 = 0.0f64;
    let mut d1 = 0.0f64;
    for i in 0..N {
        d0 += (y0[i] / sc(&y0, i)).powi(2);
        d1 += (k1[i] / sc(&y0, i)).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h = h.min(hmax);
    {
        // A failed probe (pole near the Euler prediction) just keeps the
        // conservative first guess; the controller recovers from there.
        let y1 = axpy(&y0, h, &[(1.0, &k1)]);
        if let Ok(f1) = rhs(t0 + h, &y1) {
            out.rhs_evals += 1;
            let mut d2 = 0.0f64;
            for i in 0..N {
                d2 += ((f1[i] - k1[i]) / sc(&y0, i)).powi(2);
            }
            let d2 = (d2 / N as f64).sqrt() / h;
            let dm = d1.max(d2);
            let h1 = if dm <= 1e-15 {
                (h * 1e-3).max(1e-6)
            } else {
                (0.01 / dm).powf(0.2)
            };
            h = (100.0 * h).min(h1).min(hmax);
        }
    }

    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    loop {
        if out.steps >= cfg.max_steps {
            return Err(Error::StepLimit(cfg.max_steps));
        }
        if h < 1e-14 * out.t.abs().max(1.0) {
            return Err(Error::StepUnderflow(out.t));
        }
        let mut last = false;
        if out.t + h >= t1 {
            h = t1 - out.t;
            last = true;
        }
        let (t, y) = (out.t, out.y);

        let k2 = rhs(t + C[1] * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = rhs(t + C[2] * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = rhs(
            t + C[3] * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = rhs(
            t + C[4] * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let ynew = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &ynew)?;
        out.rhs_evals += 5;

        let mut err = 0.0f64;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            err += (e / scale).powi(2);
        }
        err = (err / N as f64).sqrt();
        if !err.is_finite() {
            // Poisoned stage (pole in the RHS); retry with a smaller step.
            h *= 0.1;
            rejected = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept.
            let fac =
                ((fac11 / facold.powf(BETA)) / SAFE).clamp(1.0 / FAC_GROW_MAX, FAC_SHRINK_MAX);
            facold = err.max(1e-4);
            out.steps += 1;
            if collect_dense {
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = ynew[i] - y[i];
                    cont[0][i] = y[i];
                    cont[1][i] = dy;
                    cont[2][i] = h * k1[i] - dy;
                    cont[3][i] = dy - h * k7[i] - cont[2][i];
                    cont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                out.dense.push(DenseStep { t0: t, h, cont });
            }
            out.t = t + h;
            out.y = ynew;
            k1 = k7; // FSAL
            if last {
                out.t = t1;
                return Ok(out);
            }
            if stop(out.t, &out.y) {
                out.stopped = true;
                return Ok(out);
            }
            let mut hnew = h / fac;
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
            h = hnew.min(hmax);
        } else {
            rejected = true;
            h /= (fac11 / SAFE).min(FAC_SHRINK_MAX);
        }
    }
}

/// Evaluates a dense-output sequence at `t`, assuming steps are contiguous
/// and ordered.
pub fn eval_dense<const N: usize>(dense: &[DenseStep<N>], t: f64) -> [f64; N] {
    assert!(!dense.is_empty(), "no dense output collected");
    let idx = dense.partition_point(|s| s.t0 + s.h < t);
    dense[idx.min(dense.len() - 1)].eval(t)
}
