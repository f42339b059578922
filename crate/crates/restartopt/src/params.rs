//! Closed-form parameter settings for the restarted solvers.
//!
//! Strict constructors derive every quantity from the Lipschitz constants and
//! the target accuracy exactly as the guarantees require, and refuse
//! parameter regimes the guarantees do not cover. Practical constructors
//! accept experiment-style settings (small momentum multipliers, large
//! restart radii) and record that no descent or output bound is asserted for
//! them.

use crate::error::{Error, Result};
use crate::{int, lit, Scalar};

/// Whether a parameter set was derived strictly from a guarantee or chosen
/// freely for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Practical,
}

/// Whether the adaptive runners trust the supplied Lipschitz constants or
/// tune the step size and curvature estimate on the fly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaMode {
    KnownLipschitz,
    UnknownLipschitz,
}

/// Floor of a computed ratio with a relative guard, so that inputs sitting
/// exactly on a regime boundary derive the intended integer instead of
/// falling one short through representation error.
fn guarded_floor<F: Scalar>(q: F) -> usize {
    let guard = lit::<F>(1.0 + 1e-12);
    (q * guard).floor().to_usize().unwrap_or(usize::MAX)
}

fn guarded_ceil<F: Scalar>(q: F) -> usize {
    let guard = lit::<F>(1.0 - 1e-12);
    (q * guard).ceil().to_usize().unwrap_or(usize::MAX)
}

/// `true` when `theta` exceeds `limit` beyond representation error.
fn beyond<F: Scalar>(theta: F, limit: F) -> bool {
    theta > limit * lit::<F>(1.0 + 1e-12)
}

fn require_positive<F: Scalar>(value: F, name: &str) -> Result<()> {
    if !(value > F::zero() && value.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

/// Parameters for the restarted accelerated gradient runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RagdParams<F> {
    /// Step size.
    pub eta: F,
    /// Momentum parameter in (0, 1].
    pub theta: F,
    /// Restart radius.
    pub big_b: F,
    /// Epoch length.
    pub big_k: usize,
    /// Target accuracy.
    pub epsilon: F,
    /// Hessian-Lipschitz constant (or its running estimate).
    pub rho: F,
    pub mode: Mode,
    /// Coefficient `c` in `theta = c * (eps * rho * eta^2)^(1/4)`, kept so the
    /// unknown-Lipschitz update can re-derive `theta` consistently.
    pub theta_coeff: F,
}

impl<F: Scalar> RagdParams<F> {
    /// Strict derivation: `eta = 1/(4L)`, `B = sqrt(eps/rho)`,
    /// `theta = 4 (eps rho eta^2)^(1/4)`, `K = max(1, floor(1/theta))`.
    pub fn strict(l: F, rho: F, epsilon: F) -> Result<Self> {
        require_positive(l, "L")?;
        require_positive(rho, "rho")?;
        require_positive(epsilon, "epsilon")?;
        let eta = F::one() / (lit::<F>(4.0) * l);
        let coeff = lit::<F>(4.0);
        let theta = coeff * (epsilon * rho * eta * eta).sqrt().sqrt();
        if beyond(theta, F::one()) {
            return Err(Error::Regime {
                context: "accelerated restart derivation (epsilon too large)",
                theta: theta.to_f64().unwrap_or(f64::NAN),
                limit: 1.0,
            });
        }
        let big_b = (epsilon / rho).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Strict,
            theta_coeff: coeff,
        })
    }

    /// Experiment-style parameters; no descent or output bound is asserted.
    pub fn practical(eta: F, theta: F, big_b: F, big_k: usize, epsilon: F, rho: F) -> Result<Self> {
        require_positive(eta, "eta")?;
        require_positive(theta, "theta")?;
        require_positive(big_b, "B")?;
        require_positive(epsilon, "epsilon")?;
        require_positive(rho, "rho")?;
        if theta > F::one() {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        if big_k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        let theta_coeff = theta / (epsilon * rho * eta * eta).sqrt().sqrt();
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Practical,
            theta_coeff,
        })
    }

    /// Practical parameters with `theta = multiplier * (eps rho eta^2)^(1/4)`
    /// and the standard restart radius, as used in the experiments.
    pub fn practical_multiplier(eta: F, multiplier: F, epsilon: F, rho: F) -> Result<Self> {
        require_positive(eta, "eta")?;
        require_positive(multiplier, "theta multiplier")?;
        require_positive(epsilon, "epsilon")?;
        require_positive(rho, "rho")?;
        let theta = multiplier * (epsilon * rho * eta * eta).sqrt().sqrt();
        if !(theta > F::zero() && theta <= F::one()) {
            return Err(Error::InvalidParameter(format!(
                "derived theta {theta} outside (0, 1]"
            )));
        }
        let big_b = (epsilon / rho).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Practical,
            theta_coeff: multiplier,
        })
    }

    /// Re-derive `B`, `theta`, `K` from a new step size and curvature
    /// estimate, keeping the stored coefficient. Used by the
    /// unknown-Lipschitz adaptive update.
    pub fn rederived(&self, eta: F, rho: F) -> Self {
        let theta = self.theta_coeff * (self.epsilon * rho * eta * eta).sqrt().sqrt();
        let big_b = (self.epsilon / rho).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon: self.epsilon,
            rho,
            mode: self.mode,
            theta_coeff: self.theta_coeff,
        }
    }
}

/// Parameters for the restarted heavy-ball runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhbParams<F> {
    pub eta: F,
    /// Momentum parameter; at most 1/10 in strict mode.
    pub theta: F,
    pub big_b: F,
    pub big_k: usize,
    pub epsilon: F,
    pub rho: F,
    pub mode: Mode,
    pub theta_coeff: F,
}

impl<F: Scalar> RhbParams<F> {
    /// Strict derivation: `eta = 1/(4L)`, `B = sqrt(eps/(4 rho))`,
    /// `theta = 10 (eps rho eta^2)^(1/4)`, `K = max(1, floor(1/theta))`.
    pub fn strict(l: F, rho: F, epsilon: F) -> Result<Self> {
        require_positive(l, "L")?;
        require_positive(rho, "rho")?;
        require_positive(epsilon, "epsilon")?;
        let eta = F::one() / (lit::<F>(4.0) * l);
        let coeff = lit::<F>(10.0);
        let theta = coeff * (epsilon * rho * eta * eta).sqrt().sqrt();
        let limit = lit::<F>(0.1);
        if beyond(theta, limit) {
            return Err(Error::Regime {
                context: "heavy-ball restart derivation (epsilon too large)",
                theta: theta.to_f64().unwrap_or(f64::NAN),
                limit: 0.1,
            });
        }
        let big_b = (epsilon / (lit::<F>(4.0) * rho)).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Strict,
            theta_coeff: coeff,
        })
    }

    pub fn practical(eta: F, theta: F, big_b: F, big_k: usize, epsilon: F, rho: F) -> Result<Self> {
        require_positive(eta, "eta")?;
        require_positive(theta, "theta")?;
        require_positive(big_b, "B")?;
        require_positive(epsilon, "epsilon")?;
        require_positive(rho, "rho")?;
        if theta > F::one() {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in (0, 1], got {theta}"
            )));
        }
        if big_k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        let theta_coeff = theta / (epsilon * rho * eta * eta).sqrt().sqrt();
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Practical,
            theta_coeff,
        })
    }

    pub fn practical_multiplier(eta: F, multiplier: F, epsilon: F, rho: F) -> Result<Self> {
        require_positive(eta, "eta")?;
        require_positive(multiplier, "theta multiplier")?;
        require_positive(epsilon, "epsilon")?;
        require_positive(rho, "rho")?;
        let theta = multiplier * (epsilon * rho * eta * eta).sqrt().sqrt();
        if !(theta > F::zero() && theta <= F::one()) {
            return Err(Error::InvalidParameter(format!(
                "derived theta {theta} outside (0, 1]"
            )));
        }
        let big_b = (epsilon / (lit::<F>(4.0) * rho)).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Ok(Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon,
            rho,
            mode: Mode::Practical,
            theta_coeff: multiplier,
        })
    }

    pub fn rederived(&self, eta: F, rho: F) -> Self {
        let theta = self.theta_coeff * (self.epsilon * rho * eta * eta).sqrt().sqrt();
        let big_b = (self.epsilon / (lit::<F>(4.0) * rho)).sqrt();
        let big_k = guarded_floor(F::one() / theta).max(1);
        Self {
            eta,
            theta,
            big_b,
            big_k,
            epsilon: self.epsilon,
            rho,
            mode: self.mode,
            theta_coeff: self.theta_coeff,
        }
    }
}

/// Common view of the two parameter families, used by the audit monitors.
pub trait RestartParams<F: Scalar> {
    fn eta(&self) -> F;
    fn theta(&self) -> F;
    fn big_b(&self) -> F;
    fn big_k(&self) -> usize;
    fn epsilon(&self) -> F;
    fn rho(&self) -> F;
    fn mode(&self) -> Mode;
}

macro_rules! impl_restart_params {
    ($ty:ident) => {
        impl<F: Scalar> RestartParams<F> for $ty<F> {
            fn eta(&self) -> F {
                self.eta
            }
            fn theta(&self) -> F {
                self.theta
            }
            fn big_b(&self) -> F {
                self.big_b
            }
            fn big_k(&self) -> usize {
                self.big_k
            }
            fn epsilon(&self) -> F {
                self.epsilon
            }
            fn rho(&self) -> F {
                self.rho
            }
            fn mode(&self) -> Mode {
                self.mode
            }
        }
    };
}

impl_restart_params!(RagdParams);
impl_restart_params!(RhbParams);

/// Perturbation settings for the saddle-escaping variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbParams<F> {
    /// Logarithmic factor, at least 1.
    pub chi: F,
    /// Radius of the uniform sampling ball.
    pub radius: F,
    /// Failure probability in (0, 1).
    pub zeta: F,
    pub seed: u64,
}

/// Derive the perturbed-restart setting: `chi = max(1, ln(d/(zeta eps)))`,
/// `eta = 1/(4L)`, `B = sqrt(eps/rho)/(288 chi^2)`,
/// `theta = (eps rho / L^2)^(1/4) / 2`, `K = ceil(2 chi / theta)`,
/// `r = min(B/2, theta B/(20K), sqrt(theta B^2/(2K)))`.
pub fn perturbed_params<F: Scalar>(
    l: F,
    rho: F,
    epsilon: F,
    dim: usize,
    zeta: F,
    seed: u64,
) -> Result<(RagdParams<F>, PerturbParams<F>)> {
    require_positive(l, "L")?;
    require_positive(rho, "rho")?;
    require_positive(epsilon, "epsilon")?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(zeta > F::zero() && zeta < F::one()) {
        return Err(Error::InvalidParameter(format!(
            "zeta must lie in (0, 1), got {zeta}"
        )));
    }
    let chi = (int::<F>(dim) / (zeta * epsilon)).ln().max(F::one());
    let eta = F::one() / (lit::<F>(4.0) * l);
    let theta = lit::<F>(0.5) * (epsilon * rho / (l * l)).sqrt().sqrt();
    if theta >= F::one() {
        return Err(Error::Regime {
            context: "perturbed restart derivation (epsilon too large)",
            theta: theta.to_f64().unwrap_or(f64::NAN),
            limit: 1.0,
        });
    }
    let big_b = (epsilon / rho).sqrt() / (lit::<F>(288.0) * chi * chi);
    let big_k = guarded_ceil(lit::<F>(2.0) * chi / theta).max(1);
    let k_f = int::<F>(big_k);
    let radius = (big_b / lit::<F>(2.0))
        .min(theta * big_b / (lit::<F>(20.0) * k_f))
        .min((theta * big_b * big_b / (lit::<F>(2.0) * k_f)).sqrt());
    let params = RagdParams {
        eta,
        theta,
        big_b,
        big_k,
        epsilon,
        rho,
        mode: Mode::Strict,
        theta_coeff: theta / (epsilon * rho * eta * eta).sqrt().sqrt(),
    };
    let perturb = PerturbParams {
        chi,
        radius,
        zeta,
        seed,
    };
    Ok((params, perturb))
}

/// Restart-radius divisor schedule for the adaptive runners. The experiments
/// grow the divisor affinely with the epoch count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0Schedule<F> {
    Constant(F),
    /// `base + slope * t` at the t-th triggered epoch (t starts at 1).
    Affine { base: F, slope: F },
}

impl<F: Scalar> C0Schedule<F> {
    pub fn value(&self, trigger_index: u64) -> F {
        match *self {
            C0Schedule::Constant(c) => c,
            C0Schedule::Affine { base, slope } => {
                base + slope * F::from(trigger_index).expect("trigger index fits scalar")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            C0Schedule::Constant(c) => {
                if !(c > F::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "c0 must exceed 1, got {c}"
                    )));
                }
            }
            C0Schedule::Affine { base, slope } => {
                if !(base >= F::one() && slope >= F::zero() && base + slope > F::one()) {
                    return Err(Error::InvalidParameter(
                        "affine c0 schedule must start above 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Settings for the adaptive runners: initial relaxed restart radius, the
/// divisors applied on triggers and rollbacks, the descent-test margin, and
/// the clamps for the unknown-Lipschitz update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams<F> {
    pub b0_init: F,
    /// Margin of the per-epoch decrease test.
    pub gamma: F,
    pub c0: C0Schedule<F>,
    pub c1: F,
    /// Step-size divisor of the unknown-Lipschitz update.
    pub c2: F,
    pub eta_min: F,
    pub rho_max: F,
}

impl<F: Scalar> AdaptiveParams<F> {
    pub fn new(b0_init: F, gamma: F, c0: C0Schedule<F>, c1: F) -> Result<Self> {
        require_positive(b0_init, "B0")?;
        if gamma < F::zero() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        c0.validate()?;
        if !(c1 > F::one()) {
            return Err(Error::InvalidParameter(format!(
                "c1 must exceed 1, got {c1}"
            )));
        }
        Ok(Self {
            b0_init,
            gamma,
            c0,
            c1,
            c2: c1,
            eta_min: F::zero(),
            rho_max: F::infinity(),
        })
    }

    /// Enable the unknown-Lipschitz update: on a rollback, `eta` is divided
    /// by `c2` down to `eta_min` and `rho` multiplied by `c2^2` up to
    /// `rho_max`. Requires `c1 >= c2 > 1`; picking
    /// `rho_max = rho_init * (eta_init/eta_min)^2` keeps `theta` and `K`
    /// invariant under the joint update.
    pub fn with_unknown_lipschitz(mut self, c2: F, eta_min: F, rho_max: F) -> Result<Self> {
        if !(c2 > F::one() && self.c1 >= c2) {
            return Err(Error::InvalidParameter(format!(
                "need c1 >= c2 > 1, got c1 = {}, c2 = {c2}",
                self.c1
            )));
        }
        require_positive(eta_min, "eta_min")?;
        require_positive(rho_max, "rho_max")?;
        self.c2 = c2;
        self.eta_min = eta_min;
        self.rho_max = rho_max;
        Ok(self)
    }
}
