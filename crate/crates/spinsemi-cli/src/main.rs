//! Command-line front end: exact and semiclassical propagators, randomized
//! verification ensembles, parameter sweeps, and trajectory dumps.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 numerical failure.

mod output;

use clap::{Parser, Subcommand, ValueEnum};
use std::process::ExitCode;

use output::{angles_json, complex_json, fnum, json_str};
use spinsemi::ensemble::{run_verification, FieldFamily};
use spinsemi::error::Error;
use spinsemi::exact::{integrate_ab, integrate_ab_stats, matrix_element};
use spinsemi::field::FieldSpec;
use spinsemi::ode::IntegratorConfig;
use spinsemi::semiclassical::{action_propagator, endpoint_propagator, solve_trajectory};
use spinsemi::sphere::SphereAngles;

#[derive(Parser)]
#[command(
    name = "spinsemi",
    version,
    about = "Spin-1/2 propagators in time-dependent magnetic fields",
    long_about = "Computes coherent-state propagators of a spin-1/2 in a time-dependent \
magnetic field by exact SU(2) integration and by the semiclassical construction in \
stereographic variables, plus verification ensembles, parameter sweeps and trajectory dumps.\n\
\n\
Field mini-language: const:bx,by,bz | lz:omega,gamma[,t_offset] | table:<path> | fourier:<path>\n\
Angles are decimal radians `theta,phi`. The environment variable SPINSEMI_TOL \
overrides the default relative tolerance (1e-12)."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Endpoint,
    Action,
}

#[derive(Clone, Copy, ValueEnum)]
enum Observable {
    ProbUpUp,
    ProbUpDown,
    ElementRe,
    ElementIm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFamily {
    Lz,
    Const,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact propagator matrix element <to|U(t)|from>.
    Exact {
        #[arg(long)]
        field: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Semiclassical propagator (endpoint-Hamiltonian or action route).
    Semiclassical {
        #[arg(long)]
        field: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value = "endpoint")]
        route: Route,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Randomized semiclassical-versus-exact comparison ensemble.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        family: String,
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Sweep one parameter and print a CSV stream of an observable.
    Sweep {
        #[arg(long, value_enum)]
        family: SweepFamily,
        /// Swept parameter: omega | gamma | window (lz), bx | by | bz | t (const).
        #[arg(long)]
        param: String,
        /// Range `lo,hi` of the swept parameter.
        #[arg(long)]
        range: String,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum)]
        observable: Observable,
        /// Fixed coupling for the lz family.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Fixed sweep-rate parameter for the lz family.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Half-width T of the symmetric window [-T, T] for the lz family.
        #[arg(long, default_value_t = 30.0)]
        window: f64,
        #[arg(long, default_value_t = 0.0)]
        bx: f64,
        #[arg(long, default_value_t = 0.0)]
        by: f64,
        #[arg(long, default_value_t = 0.0)]
        bz: f64,
        /// Horizon for the const family.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Endpoints for the element observables.
        #[arg(long, default_value = "0,0")]
        from: String,
        #[arg(long, default_value = "0,0")]
        to: String,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
    /// Dump the complexified classical trajectory as CSV.
    Traj {
        #[arg(long)]
        field: String,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Number of equally spaced samples.
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
    },
}

enum CliError {
    Input(String),
    Numerical(String),
    VerifyFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::OutOfRange { .. } => CliError::Input(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn parse_angles(s: &str, what: &str) -> Result<SphereAngles, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Input(format!(
            "{what}: expected `theta,phi` in radians, got `{s}`"
        )));
    }
    let theta: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{what}: `{}` is not a number", parts[0])))?;
    let phi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{what}: `{}` is not a number", parts[1])))?;
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&theta) {
        return Err(CliError::Input(format!(
            "{what}: polar angle {theta} outside [0, pi]"
        )));
    }
    Ok(SphereAngles::new(theta, phi))
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Input(format!(
            "range: expected `lo,hi`, got `{s}`"
        )));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("range: `{}` is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("range: `{}` is not a number", parts[1])))?;
    Ok((lo, hi))
}

/// Default tolerances, honoring SPINSEMI_TOL and per-command overrides.
fn config(rel: Option<f64>, abs: Option<f64>) -> Result<IntegratorConfig, CliError> {
    let mut cfg = IntegratorConfig::default();
    if let Ok(env) = std::env::var("SPINSEMI_TOL") {
        let v: f64 = env
            .parse()
            .map_err(|_| CliError::Input(format!("SPINSEMI_TOL: `{env}` is not a number")))?;
        if v <= 0.0 {
            return Err(CliError::Input(format!(
                "SPINSEMI_TOL must be positive, got {v}"
            )));
        }
        cfg.rel_tol = v;
        cfg.abs_tol = v * 1e-2;
    }
    if let Some(r) = rel {
        if r <= 0.0 {
            return Err(CliError::Input(format!(
                "rel_tol must be positive, got {r}"
            )));
        }
        cfg.rel_tol = r;
    }
    if let Some(a) = abs {
        if a <= 0.0 {
            return Err(CliError::Input(format!(
                "abs_tol must be positive, got {a}"
            )));
        }
        cfg.abs_tol = a;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Exact {
            field,
            t,
            from,
            to,
            rel_tol,
            abs_tol,
        } => {
            if t < 0.0 {
                return Err(CliError::Input(format!("t must be nonnegative, got {t}")));
            }
            let cfg = config(rel_tol, abs_tol)?;
            let spec = FieldSpec::parse(&field)?;
            let from_a = parse_angles(&from, "--from")?;
            let to_a = parse_angles(&to, "--to")?;
            let (u, stats) = integrate_ab_stats(&spec, t, &cfg)?;
            let element = matrix_element(&u, to_a, from_a);
            println!(
                "{{\"command\":\"exact\",\"inputs\":{{\"field\":{},\"t\":{},\"from\":{},\"to\":{},\"rel_tol\":{},\"abs_tol\":{}}},\"result\":{},\"prob\":{},\"diagnostics\":{{\"steps\":{},\"rhs_evals\":{}}}}}",
                json_str(&field),
                fnum(t),
                angles_json(from_a.theta(), from_a.phi()),
                angles_json(to_a.theta(), to_a.phi()),
                fnum(cfg.rel_tol),
                fnum(cfg.abs_tol),
                complex_json(element),
                fnum(element.norm_sqr()),
                stats.steps,
                stats.rhs_evals,
            );
            Ok(())
        }
        Cmd::Semiclassical {
            field,
            t,
            from,
            to,
            route,
            rel_tol,
            abs_tol,
        } => {
            if t < 0.0 {
                return Err(CliError::Input(format!("t must be nonnegative, got {t}")));
            }
            let cfg = config(rel_tol, abs_tol)?;
            let spec = FieldSpec::parse(&field)?;
            let from_a = parse_angles(&from, "--from")?;
            let to_a = parse_angles(&to, "--to")?;
            let (route_name, rv) = match route {
                Route::Endpoint => (
                    "endpoint",
                    endpoint_propagator(&spec, from_a, to_a, t, &cfg)?,
                ),
                Route::Action => ("action", action_propagator(&spec, from_a, to_a, t, &cfg)?),
            };
            println!(
                "{{\"command\":\"semiclassical\",\"inputs\":{{\"field\":{},\"t\":{},\"from\":{},\"to\":{},\"route\":{},\"rel_tol\":{},\"abs_tol\":{}}},\"result\":{},\"prob\":{},\"diagnostics\":{{\"forward_steps\":{},\"backward_steps\":{},\"chart_switches\":{},\"branch_grid\":{}}}}}",
                json_str(&field),
                fnum(t),
                angles_json(from_a.theta(), from_a.phi()),
                angles_json(to_a.theta(), to_a.phi()),
                json_str(route_name),
                fnum(cfg.rel_tol),
                fnum(cfg.abs_tol),
                complex_json(rv.value),
                fnum(rv.value.norm_sqr()),
                rv.forward_steps,
                rv.backward_steps,
                rv.chart_switches,
                rv.branch_grid,
            );
            Ok(())
        }
        Cmd::Verify {
            n,
            seed,
            family,
            tol,
            rel_tol,
            abs_tol,
        } => {
            if tol <= 0.0 {
                return Err(CliError::Input(format!("tol must be positive, got {tol}")));
            }
            let cfg = config(rel_tol, abs_tol)?;
            let fam = FieldFamily::parse(&family)?;
            let outcome = run_verification(fam, n, seed, &cfg)?;
            let pass = outcome.max_error <= tol;
            println!(
                "{{\"command\":\"verify\",\"inputs\":{{\"n\":{},\"seed\":{},\"family\":{},\"tol\":{},\"rel_tol\":{},\"abs_tol\":{}}},\"result\":{{\"max_error\":{},\"mean_error\":{},\"pass\":{}}},\"diagnostics\":{{\"cases\":{}}}}}",
                n,
                seed,
                json_str(fam.name()),
                fnum(tol),
                fnum(cfg.rel_tol),
                fnum(cfg.abs_tol),
                fnum(outcome.max_error),
                fnum(outcome.mean_error),
                pass,
                outcome.cases,
            );
            if pass {
                Ok(())
            } else {
                Err(CliError::VerifyFailed)
            }
        }
        Cmd::Sweep {
            family,
            param,
            range,
            steps,
            observable,
            omega,
            gamma,
            window,
            bx,
            by,
            bz,
            t,
            from,
            to,
            rel_tol,
            abs_tol,
        } => {
            if steps == 0 {
                return Err(CliError::Input("steps must be at least 1".into()));
            }
            let cfg = config(rel_tol, abs_tol)?;
            let from_a = parse_angles(&from, "--from")?;
            let to_a = parse_angles(&to, "--to")?;
            let (lo, hi) = parse_range(&range)?;
            let known: &[&str] = match family {
                SweepFamily::Lz => &["omega", "gamma", "window"],
                SweepFamily::Const => &["bx", "by", "bz", "t"],
            };
            if !known.contains(&param.as_str()) {
                return Err(CliError::Input(format!(
                    "sweep parameter must be one of {} (got `{param}`)",
                    known.join(", ")
                )));
            }
            println!("param,value");
            for k in 0..steps {
                let p = if steps == 1 {
                    lo
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                };
                let (spec, horizon) = match family {
                    SweepFamily::Lz => {
                        let (mut w, mut g, mut win) = (omega, gamma, window);
                        match param.as_str() {
                            "omega" => w = p,
                            "gamma" => g = p,
                            "window" => win = p,
                            other => {
                                return Err(CliError::Input(format!(
                                "lz sweep parameter must be omega, gamma or window (got `{other}`)"
                            )))
                            }
                        }
                        if win < 0.0 {
                            return Err(CliError::Input(format!(
                                "window must be nonnegative, got {win}"
                            )));
                        }
                        (
                            FieldSpec::LandauZener {
                                omega: w,
                                gamma: g,
                                t_offset: -win,
                            },
                            2.0 * win,
                        )
                    }
                    SweepFamily::Const => {
                        let (mut x, mut y, mut z, mut horizon) = (bx, by, bz, t);
                        match param.as_str() {
                            "bx" => x = p,
                            "by" => y = p,
                            "bz" => z = p,
                            "t" => horizon = p,
                            _ => unreachable!("validated above"),
                        }
                        if horizon < 0.0 {
                            return Err(CliError::Input(format!(
                                "horizon must be nonnegative, got {horizon}"
                            )));
                        }
                        (FieldSpec::constant(x, y, z), horizon)
                    }
                };
                let u = integrate_ab(&spec, horizon, &cfg)?;
                let value = match observable {
                    Observable::ProbUpUp => u.a.norm_sqr(),
                    Observable::ProbUpDown => u.b.norm_sqr(),
                    Observable::ElementRe => matrix_element(&u, to_a, from_a).re,
                    Observable::ElementIm => matrix_element(&u, to_a, from_a).im,
                };
                println!("{},{}", fnum(p), fnum(value));
            }
            Ok(())
        }
        Cmd::Traj {
            field,
            t,
            from,
            to,
            samples,
            rel_tol,
            abs_tol,
        } => {
            if t < 0.0 {
                return Err(CliError::Input(format!("t must be nonnegative, got {t}")));
            }
            if samples == 0 {
                return Err(CliError::Input("samples must be at least 1".into()));
            }
            let cfg = config(rel_tol, abs_tol)?;
            let spec = FieldSpec::parse(&field)?;
            let from_a = parse_angles(&from, "--from")?;
            let to_a = parse_angles(&to, "--to")?;
            let traj = solve_trajectory(&spec, from_a, to_a, t, &cfg)?;
            println!("s,re_zeta,im_zeta,re_eta,im_eta");
            for k in 0..samples {
                let s = if samples == 1 {
                    0.0
                } else {
                    t * k as f64 / (samples - 1) as f64
                };
                let zeta = traj.zeta_at(s);
                let eta = traj.eta_at(s);
                println!(
                    "{},{},{},{},{}",
                    fnum(s),
                    fnum(zeta.re),
                    fnum(zeta.im),
                    fnum(eta.re),
                    fnum(eta.im)
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerifyFailed) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
