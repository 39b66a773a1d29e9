//! Quadratic functional `Q(T) = ∫_0^T U_t² dt` of a Lévy-driven
//! Ornstein–Uhlenbeck process with finitely many jump sizes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::poisson;

const NORM_TOL: f64 = 1e-9;
/// Highest moment order checked against the envelope `M^m`.
const ENVELOPE_ORDERS: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkAtom {
    pub u: f64,
    pub mass: f64,
}

fn default_nu() -> Vec<MarkAtom> {
    vec![MarkAtom { u: -1.0, mass: 0.5 }, MarkAtom { u: 1.0, mass: 0.5 }]
}

fn default_envelope() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-12
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuConfig {
    pub rho: f64,
    pub horizon: f64,
    #[serde(default = "default_nu")]
    pub nu: Vec<MarkAtom>,
    /// `M` with `Σ |u|^m ν(u) <= M^m`.
    #[serde(default = "default_envelope")]
    pub envelope: f64,
    /// Window start is chosen so that `e^{-2ρ T_0}` equals this.
    #[serde(default = "default_tol")]
    pub truncation_tol: f64,
    /// Subtract the drift `Σ u ν(u) / ρ` when the marks are not centred.
    #[serde(default = "default_true")]
    pub compensate: bool,
}

impl OuConfig {
    pub fn new(rho: f64, horizon: f64) -> Self {
        Self {
            rho,
            horizon,
            nu: default_nu(),
            envelope: default_envelope(),
            truncation_tol: default_tol(),
            compensate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return Err(Error::InvalidConfig("truncation_tol must lie in (0, 1)".into()));
        }
        if self.nu.is_empty() || self.nu.iter().any(|a| !(a.mass > 0.0) || !a.u.is_finite()) {
            return Err(Error::InvalidConfig("nu needs atoms with positive mass".into()));
        }
        let m2 = self.moment(2);
        if (m2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidConfig(format!("nu must satisfy sum u^2 nu(u) = 1, got {m2}")));
        }
        if !(self.envelope >= 1.0) {
            return Err(Error::InvalidConfig(format!("envelope must be at least 1, got {}", self.envelope)));
        }
        let umax = self.nu.iter().map(|a| a.u.abs()).fold(0.0, f64::max);
        let fits = umax <= self.envelope
            && (1..=ENVELOPE_ORDERS)
                .all(|m| self.abs_moment(m) <= self.envelope.powi(m) * (1.0 + NORM_TOL));
        if !fits {
            return Err(Error::InvalidConfig("nu violates the moment envelope".into()));
        }
        if !self.compensate && self.moment(1).abs() > NORM_TOL {
            return Err(Error::NonSymmetricNuWithoutCompensator(self.moment(1)));
        }
        Ok(())
    }

    fn moment(&self, m: i32) -> f64 {
        self.nu.iter().map(|a| a.u.powi(m) * a.mass).sum()
    }

    fn abs_moment(&self, m: i32) -> f64 {
        self.nu.iter().map(|a| a.u.abs().powi(m) * a.mass).sum()
    }

    /// `c_ν = Σ u⁴ ν(u)`.
    pub fn c_nu(&self) -> f64 {
        self.moment(4)
    }

    pub fn total_mass(&self) -> f64 {
        self.nu.iter().map(|a| a.mass).sum()
    }

    /// Length of the burn-in window before time zero.
    pub fn window_start(&self) -> f64 {
        (1.0 / self.truncation_tol).ln() / (2.0 * self.rho)
    }

    /// Constant subtracted from the shot noise before scaling.
    fn drift(&self) -> f64 {
        if self.compensate {
            self.moment(1) / self.rho
        } else {
            0.0
        }
    }
}

/// One jump of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub x: f64,
    pub u: f64,
}

/// Jumps on `[-T_0, T]` in increasing time order.
pub fn sample_jumps<R: Rng + ?Sized>(config: &OuConfig, rng: &mut R) -> Vec<Jump> {
    let t0 = config.window_start();
    let span = t0 + config.horizon;
    let total = config.total_mass();
    let n = poisson(rng, total * span);
    let mut jumps: Vec<Jump> = (0..n)
        .map(|_| {
            let x = -t0 + rng.random::<f64>() * span;
            let mut pick = rng.random::<f64>() * total;
            let mut u = config.nu[config.nu.len() - 1].u;
            for a in &config.nu {
                if pick < a.mass {
                    u = a.u;
                    break;
                }
                pick -= a.mass;
            }
            Jump { x, u }
        })
        .collect();
    jumps.sort_by(|a, b| a.x.total_cmp(&b.x));
    jumps
}

/// `U_t = √(2ρ) (Σ_{x <= t} u e^{-ρ(t-x)} - drift)`.
pub fn u_at(config: &OuConfig, jumps: &[Jump], t: f64) -> f64 {
    let rho = config.rho;
    let shot: f64 = jumps.iter().take_while(|j| j.x <= t).map(|j| j.u * (-rho * (t - j.x)).exp()).sum();
    (2.0 * rho).sqrt() * (shot - config.drift())
}

/// `Q(T)` for a fixed jump list, integrating exactly between jumps.
pub fn quadratic_functional(config: &OuConfig, jumps: &[Jump]) -> f64 {
    let rho = config.rho;
    let c = config.drift();
    let mut level: f64 = jumps.iter().take_while(|j| j.x <= 0.0).map(|j| j.u * (rho * j.x).exp()).sum();
    let mut now = 0.0;
    let mut q = 0.0;
    // ∫_0^h (A e^{-ρs} - c)² ds
    let piece = |a: f64, h: f64| {
        let e1 = -(-rho * h).exp_m1();
        let e2 = -(-2.0 * rho * h).exp_m1();
        a * a * e2 / (2.0 * rho) - 2.0 * a * c * e1 / rho + c * c * h
    };
    for j in jumps.iter().skip_while(|j| j.x <= 0.0).take_while(|j| j.x <= config.horizon) {
        let h = j.x - now;
        q += piece(level, h);
        level = level * (-rho * h).exp() + j.u;
        now = j.x;
    }
    q += piece(level, config.horizon - now);
    2.0 * rho * q
}

pub fn ou_simulate<R: Rng + ?Sized>(config: &OuConfig, rng: &mut R) -> f64 {
    quadratic_functional(config, &sample_jumps(config, rng))
}

/// Time part of the first-order kernel, `f^(1)((x, u)) = u² f̃1(x)`.
pub fn f1_tilde(config: &OuConfig, x: f64) -> f64 {
    let (rho, t) = (config.rho, config.horizon);
    if x > t {
        0.0
    } else if x <= 0.0 {
        (2.0 * rho * x).exp() * -(-2.0 * rho * t).exp_m1()
    } else {
        -(2.0 * rho * (x - t)).exp_m1()
    }
}

/// Time part of the second-order kernel, `f^(2) = u_1 u_2 f̃2(x_1, x_2)`.
pub fn f2_tilde(config: &OuConfig, x1: f64, x2: f64) -> f64 {
    let (rho, t) = (config.rho, config.horizon);
    let top = x1.max(x2);
    if top > t {
        0.0
    } else if top <= 0.0 {
        (rho * (x1 + x2)).exp() * -(-2.0 * rho * t).exp_m1()
    } else {
        (rho * (x1 + x2)).exp() * ((-2.0 * rho * top).exp() - (-2.0 * rho * t).exp())
    }
}

/// `∫ f̃1² dx`, which also equals `ρ ∫∫ f̃2² dx`: both reduce to
/// `T - (1 - e^{-2ρT}) / (2ρ)`.
pub fn kernel_time_norm(config: &OuConfig) -> f64 {
    let (rho, t) = (config.rho, config.horizon);
    t + (-2.0 * rho * t).exp_m1() / (2.0 * rho)
}

/// `Var Q(T) = c_ν ‖f̃1‖² + 2 (Σ u² ν)² ‖f̃2‖²`.
pub fn ou_variance_exact(config: &OuConfig) -> f64 {
    let a = kernel_time_norm(config);
    let m2 = config.moment(2);
    config.c_nu() * a + 2.0 * m2 * m2 * a / config.rho
}

/// `c_ν (T - 1/ρ)`.
pub fn variance_lower_bound(config: &OuConfig) -> f64 {
    config.c_nu() * (config.horizon - 1.0 / config.rho)
}

pub fn tau_ou(config: &OuConfig) -> Result<f64> {
    let (rho, t) = (config.rho, config.horizon);
    if t <= 1.0 / rho {
        return Err(Error::HorizonTooShort { horizon: t, min: 1.0 / rho });
    }
    config.validate()?;
    let low = variance_lower_bound(config);
    let m4 = 4.0 * config.envelope.powi(4);
    let s = 1f64.max(2.0 / rho);
    let inner = low / (m4 * m4 * s * s * (t + 1.0 / (2.0 * rho)));
    Ok(inner.min(1.0) * low.sqrt() / (512.0 * m4 * s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuSummary {
    pub c_nu: f64,
    pub mean: f64,
    pub variance: f64,
    pub variance_lower_bound: f64,
    pub tau: f64,
    pub window_start: f64,
    /// Second moment of the part of `U_0` dropped by the window; it decays
    /// like `e^{-2ρt}` for later times.
    pub truncation_second_moment: f64,
}

pub fn summary(config: &OuConfig) -> Result<OuSummary> {
    let tau = tau_ou(config)?;
    Ok(OuSummary {
        c_nu: config.c_nu(),
        mean: config.horizon * config.moment(2),
        variance: ou_variance_exact(config),
        variance_lower_bound: variance_lower_bound(config),
        tau,
        window_start: config.window_start(),
        truncation_second_moment: config.truncation_tol * config.moment(2),
    })
}
