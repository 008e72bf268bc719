//! Path simulation of the perturbed walk `S_n + xi_n` and the Monte Carlo
//! estimators of `P(M > x)`, `M = max_n (S_n + xi_n)`.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::stats::{replicate, EstimateResult, Method, Moments};
use crate::stream::RandomStream;
use crate::tilt::{convex_positive_root, LundbergSolution, TiltedIncrement, STEP_CAP};

/// Minimum crude-simulation horizon.
pub const MIN_HORIZON: u64 = 10_000;

/// How the perturbations relate to the increments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    Independent,
    /// `X_i = R_i - R'_i`, `xi_i = R_i` for `i >= 1` with
    /// `R ~ Exponential(lambda1)`, `R' ~ Exponential(lambda2)`; `xi_0` is an
    /// independent `Exponential(lambda1)`.
    CorrelatedExample {
        lambda1: f64,
        lambda2: f64,
    },
}

impl fmt::Display for Dependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dependence::Independent => f.write_str("independent"),
            Dependence::CorrelatedExample { lambda1, lambda2 } => {
                write!(f, "correlated({lambda1},{lambda2})")
            }
        }
    }
}

/// Increment law, perturbation law and their dependence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkModel {
    pub increment: DistributionSpec,
    pub perturbation: DistributionSpec,
    pub dependence: Dependence,
}

impl WalkModel {
    /// Independent perturbations.
    pub fn new(increment: DistributionSpec, perturbation: DistributionSpec) -> Result<Self> {
        Self::with_dependence(increment, perturbation, Dependence::Independent)
    }

    /// The correlated counterexample with rates `lambda1 > lambda2`.
    pub fn correlated(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 > 0.0 && lambda2 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "correlated rates must be positive, got ({lambda1}, {lambda2})"
            )));
        }
        if lambda2 >= lambda1 {
            return Err(Error::InvalidDrift {
                mean: 1.0 / lambda1 - 1.0 / lambda2,
            });
        }
        Self::with_dependence(
            DistributionSpec::exp_difference(lambda1, lambda2)?,
            DistributionSpec::exponential(lambda1)?,
            Dependence::CorrelatedExample { lambda1, lambda2 },
        )
    }

    pub fn with_dependence(
        increment: DistributionSpec,
        perturbation: DistributionSpec,
        dependence: Dependence,
    ) -> Result<Self> {
        let model = Self {
            increment,
            perturbation,
            dependence,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.increment.validate()?;
        self.perturbation.validate()?;
        let mean = self.increment.mean()?;
        if !(mean < 0.0) {
            return Err(Error::InvalidDrift { mean });
        }
        if !self.perturbation.positive_part_mean().is_finite() {
            return Err(Error::InfiniteMean(format!(
                "positive part of {}",
                self.perturbation
            )));
        }
        if let Dependence::CorrelatedExample { lambda1, lambda2 } = self.dependence {
            let inc = DistributionSpec::exp_difference(lambda1, lambda2)?;
            let pert = DistributionSpec::exponential(lambda1)?;
            if self.increment != inc || self.perturbation != pert {
                return Err(Error::InvalidParameter(format!(
                    "correlated({lambda1},{lambda2}) requires increment {inc} and perturbation {pert}"
                )));
            }
        }
        Ok(())
    }

    /// `E X_1`, negative for a valid model.
    pub fn drift(&self) -> f64 {
        self.increment.mean().unwrap_or(f64::NAN)
    }

    pub fn require_independent(&self) -> Result<()> {
        match self.dependence {
            Dependence::Independent => Ok(()),
            _ => Err(Error::UnsupportedDependence),
        }
    }

    /// The same marginals with the dependence dropped.
    pub fn independent_marginals(&self) -> Self {
        Self {
            dependence: Dependence::Independent,
            ..*self
        }
    }

    fn first_perturbation<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.perturbation.sample(rng)
    }

    /// One step `(X_n, xi_n)` for `n >= 1`.
    fn step<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self.dependence {
            Dependence::Independent => (self.increment.sample(rng), self.perturbation.sample(rng)),
            Dependence::CorrelatedExample { lambda1, lambda2 } => {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                let r = e1 / lambda1;
                (r - e2 / lambda2, r)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Production model and the Lindley recursion

/// A make-to-order facility: order interarrival times, processing times and
/// supplier delays, all i.i.d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionModel {
    pub interarrival: DistributionSpec,
    pub service: DistributionSpec,
    pub delay: DistributionSpec,
}

impl ProductionModel {
    /// The perturbed walk whose maximum is the steady-state time in system:
    /// increments `V - tau`, perturbations the delays.
    pub fn walk_model(&self) -> Result<WalkModel> {
        use DistributionSpec::*;
        let increment = match (self.service, self.interarrival) {
            (Exponential { rate: s }, Exponential { rate: a }) => {
                DistributionSpec::exp_difference(s, a)?
            }
            (Deterministic { value: 0.0 }, Exponential { rate: a }) => {
                DistributionSpec::negated_exponential(a)?
            }
            _ => {
                return Err(Error::UnsupportedFamily(format!(
                    "service {} minus interarrival {} is not a catalogue law",
                    self.service, self.interarrival
                )))
            }
        };
        WalkModel::new(increment, self.delay)
    }

    pub fn sample_inputs<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> LindleyInputs {
        let mut interarrivals = Vec::with_capacity(n);
        let mut services = Vec::with_capacity(n);
        let mut delays = Vec::with_capacity(n + 1);
        delays.push(self.delay.sample(rng));
        for _ in 0..n {
            interarrivals.push(self.interarrival.sample(rng));
            services.push(self.service.sample(rng));
            delays.push(self.delay.sample(rng));
        }
        LindleyInputs {
            interarrivals,
            services,
            delays,
        }
    }
}

/// One realisation of the production inputs over orders `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindleyInputs {
    /// `tau_k = A~_k - A~_{k-1}` for `k = 1..=n`.
    pub interarrivals: Vec<f64>,
    /// `V_k` for `k = 0..n`.
    pub services: Vec<f64>,
    /// `eta_k` for `k = 0..=n`.
    pub delays: Vec<f64>,
}

impl LindleyInputs {
    pub fn len(&self) -> usize {
        self.interarrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interarrivals.is_empty()
    }

    /// Round every input to a multiple of `2^-bits`, so that sums of a few
    /// thousand of them are exact in `f64`.
    pub fn quantized(&self, bits: i32) -> Self {
        let q = 2f64.powi(bits);
        let round = |v: &Vec<f64>| v.iter().map(|x| (x * q).round() / q).collect();
        Self {
            interarrivals: round(&self.interarrivals),
            services: round(&self.services),
            delays: round(&self.delays),
        }
    }

    /// `Z_k = V_{k-1} - tau_k`.
    fn z(&self, k: usize) -> f64 {
        self.services[k - 1] - self.interarrivals[k - 1]
    }
}

/// Waiting times `W~_0..=W~_n` by the recursion
/// `W~_{k+1} = max(W~_k + A_k - A_{k+1} + V_k, 0)`, `A_k = A~_k + eta_k`,
/// starting from an empty facility with `A~_0 = 0`.
pub fn lindley_recursion(inputs: &LindleyInputs) -> Vec<f64> {
    let n = inputs.len();
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut arrival = 0.0;
    for k in 0..n {
        let next_arrival = arrival + inputs.interarrivals[k];
        let a_k = arrival + inputs.delays[k];
        let a_next = next_arrival + inputs.delays[k + 1];
        let prev = w[k];
        w.push((prev + a_k - a_next + inputs.services[k]).max(0.0));
        arrival = next_arrival;
    }
    w
}

/// `W~_n = max_{0<=k<=n} (Z_{k+1} + ... + Z_n + eta_k - eta_n)`, evaluated
/// directly from suffix sums.
pub fn max_representation(inputs: &LindleyInputs, n: usize) -> f64 {
    assert!(n <= inputs.len());
    let eta_n = inputs.delays[n];
    let mut suffix = 0.0;
    let mut best = 0.0; // k = n
    for k in (0..n).rev() {
        suffix += inputs.z(k + 1);
        best = f64::max(best, suffix + inputs.delays[k] - eta_n);
    }
    best
}

/// Total times in system `W_k = W~_k + eta_k`, `k = 0..=n`, for one
/// simulated run of the facility.
pub fn lindley_path(
    model: &ProductionModel,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "path length must be at least 1".into(),
        ));
    }
    let inputs = model.sample_inputs(n, stream);
    let w = lindley_recursion(&inputs);
    Ok(w.iter()
        .zip(&inputs.delays)
        .map(|(w, eta)| w + eta)
        .collect())
}

/// Empirical `P(W_n > x)` for the total time in system of order `n`, from
/// `reps` independent runs of the facility started empty.
pub fn lindley_tail(
    model: &ProductionModel,
    xs: &[f64],
    n: usize,
    reps: u64,
    stream: &RandomStream,
) -> Result<Vec<EstimateResult>> {
    check_reps(reps)?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "path length must be at least 1".into(),
        ));
    }
    let k = xs.len();
    let moments = replicate(
        reps,
        stream.seed(),
        || vec![Moments::new(); k],
        |rng, acc| {
            let mut w = 0.0;
            let mut arrival = 0.0;
            let mut eta = model.delay.sample(rng);
            for _ in 0..n {
                let next_arrival = arrival + model.interarrival.sample(rng);
                let v = model.service.sample(rng);
                let next_eta = model.delay.sample(rng);
                w = f64::max(w + (arrival + eta) - (next_arrival + next_eta) + v, 0.0);
                arrival = next_arrival;
                eta = next_eta;
            }
            let total = w + eta;
            for (slot, &x) in acc.iter_mut().zip(xs) {
                slot.push(if total > x { 1.0 } else { 0.0 });
            }
            Ok(())
        },
    )?;
    Ok(moments
        .iter()
        .map(|m| EstimateResult::from_indicator(m, stream.seed(), Method::Lindley))
        .collect())
}

// ---------------------------------------------------------------------------
// Crude simulation

/// Smallest horizon accepted for level `x`.
pub fn required_horizon(model: &WalkModel, x: f64) -> u64 {
    (50.0 * x.max(0.0) / model.drift().abs()).ceil() as u64
}

/// The default horizon `max(50 x / |mu|, 10^4)`.
pub fn default_horizon(model: &WalkModel, x: f64) -> u64 {
    required_horizon(model, x).max(MIN_HORIZON)
}

/// Crude estimates of `P(M_h > x)` for every `x` in `xs`, sharing paths.
///
/// The horizon `h` defaults to the rule for `max(xs)`; an explicit horizon
/// below the rule is rejected. Estimates are biased low as approximations of
/// the all-time maximum and flagged so.
pub fn crude_tail_many(
    model: &WalkModel,
    xs: &[f64],
    horizon: Option<u64>,
    reps: u64,
    stream: &RandomStream,
) -> Result<Vec<EstimateResult>> {
    check_reps(reps)?;
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let required = required_horizon(model, x_max);
    let horizon = match horizon {
        Some(h) if h < required => {
            return Err(Error::HorizonTooSmall {
                horizon: h,
                required,
            })
        }
        Some(h) => h,
        None => required.max(MIN_HORIZON),
    };
    let k = xs.len();
    let moments = replicate(
        reps,
        stream.seed(),
        || vec![Moments::new(); k],
        |rng, acc| {
            let mut m = model.first_perturbation(rng);
            let mut s = 0.0;
            for _ in 0..horizon {
                if m > x_max {
                    break;
                }
                let (x, xi) = model.step(rng);
                s += x;
                m = m.max(s + xi);
            }
            for (slot, &x) in acc.iter_mut().zip(xs) {
                slot.push(if m > x { 1.0 } else { 0.0 });
            }
            Ok(())
        },
    )?;
    Ok(moments
        .iter()
        .map(|m| {
            let mut r = EstimateResult::from_indicator(m, stream.seed(), Method::Crude);
            r.biased_low = true;
            r.warnings.push(format!(
                "finite horizon {horizon}: estimates P(M_{horizon} > x), biased low"
            ));
            r
        })
        .collect())
}

/// Crude estimate of `P(M > x)` from the finite-horizon maximum.
pub fn crude_tail(
    model: &WalkModel,
    x: f64,
    horizon: Option<u64>,
    reps: u64,
    stream: &RandomStream,
) -> Result<EstimateResult> {
    Ok(crude_tail_many(model, &[x], horizon, reps, stream)?.remove(0))
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        Err(Error::InvalidParameter("reps must be at least 1".into()))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Importance sampling

/// Where and how a tilted path first crossed the level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingRecord {
    /// `T(x) = inf { n >= 0 : S_n + xi_n > x }`.
    pub t: u64,
    /// `S_T - x`.
    pub overshoot: f64,
    /// `exp(-theta* (S_T - x))`.
    pub weight: f64,
}

/// Run one walk with tilted increments and untilted perturbations until
/// `S_n + xi_n > x`.
pub fn hitting_record<R: Rng + ?Sized>(
    model: &WalkModel,
    tilted: &TiltedIncrement,
    x: f64,
    rng: &mut R,
) -> Result<HittingRecord> {
    let theta = tilted.theta;
    let mut s = 0.0;
    let mut xi = model.perturbation.sample(rng);
    let mut t = 0u64;
    while s + xi <= x {
        if t >= STEP_CAP {
            return Err(Error::StepLimit {
                limit: STEP_CAP,
                context: format!("importance sampling at x = {x}"),
            });
        }
        s += tilted.sample(rng);
        xi = model.perturbation.sample(rng);
        t += 1;
    }
    Ok(HittingRecord {
        t,
        overshoot: s - x,
        weight: (-theta * (s - x)).exp(),
    })
}

/// Unbiased estimate of `P(M > x)` as `E* exp(-theta* S_T)` with the
/// increments tilted by `theta*` and the perturbations left alone.
pub fn is_tail(
    model: &WalkModel,
    sol: &LundbergSolution,
    x: f64,
    reps: u64,
    stream: &RandomStream,
) -> Result<EstimateResult> {
    check_reps(reps)?;
    model.require_independent()?;
    let tilted = TiltedIncrement::new(model.increment, sol.theta_star)?;
    let theta = sol.theta_star;
    let m = replicate(reps, stream.seed(), Moments::new, |rng, acc| {
        let hit = hitting_record(model, &tilted, x, rng)?;
        acc.push((-theta * (hit.overshoot + x)).exp());
        Ok(())
    })?;
    let mut r = EstimateResult::from_moments(&m, stream.seed(), Method::ImportanceSampling);
    if !model.perturbation.mgf(theta).is_finite() {
        r.warnings.push(format!(
            "E exp(theta* xi) is infinite at theta* = {theta}; variance may be infinite"
        ));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Conditional Monte Carlo

/// Level below which a path may stop contributing terms.
///
/// With `mu' = mu/2` and `gamma` the Lundberg root of `X - mu'`, the future
/// walk stays below `S_n + k mu' + ln(1/eps)/gamma` for all `k` with
/// probability at least `1 - eps`; on that event the remaining terms sum to
/// at most `R(x - S_n - ln(1/eps)/gamma) / |mu'|`. The path stops once this
/// is at most `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub eps: f64,
    pub envelope: f64,
    /// Stop once `x - S_n >= distance`.
    pub distance: f64,
}

impl Truncation {
    pub fn new(model: &WalkModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0, 1e-3], got {eps}"
            )));
        }
        let half = 0.5 * model.drift();
        let envelope = match model.increment {
            DistributionSpec::Deterministic { .. } => 0.0,
            inc => {
                let (gamma, _) = convex_positive_root(
                    |t| inc.cgf(t) - t * half,
                    1e-3 / inc.scale(),
                    &inc.to_string(),
                )
                .map_err(|_| {
                    Error::TruncationUnbounded(format!(
                        "no exponential envelope for increments {inc}"
                    ))
                })?;
                (1.0 / eps).ln() / gamma
            }
        };
        let target = eps * half.abs();
        let pert = model.perturbation;
        let r = |y: f64| -> Result<f64> {
            pert.integrated_tail(y)
                .map_err(|e| Error::TruncationUnbounded(format!("{pert}: {e}")))
        };
        // Smallest y with R(y) <= target, by bracketing then bisection.
        let scale = pert.scale();
        let (inf, _) = pert.support();
        let mut lo = if inf.is_finite() { inf - scale } else { -scale };
        while r(lo)? <= target {
            lo -= scale;
        }
        let mut step = scale;
        let mut hi = lo + step;
        while r(hi)? > target {
            lo = hi;
            step *= 2.0;
            hi = lo + step;
            if !hi.is_finite() {
                return Err(Error::TruncationUnbounded(format!(
                    "{pert}: integrated tail never drops below {target}"
                )));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if r(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            eps,
            envelope,
            distance: hi + envelope,
        })
    }
}

/// Conditional Monte Carlo: given the unperturbed path,
/// `P(M <= x | S) = prod_j P(xi <= x - S_j)`, so each replication averages
/// `1 - exp(sum_j ln F_xi(x - S_j))`. The path is truncated per
/// [`Truncation`], which biases the estimate low by at most `2 eps`.
pub fn conditional_tail(
    model: &WalkModel,
    x: f64,
    reps: u64,
    eps: f64,
    stream: &RandomStream,
) -> Result<EstimateResult> {
    check_reps(reps)?;
    model.require_independent()?;
    let trunc = Truncation::new(model, eps)?;
    let stop = x - trunc.distance;
    let inc = model.increment;
    let pert = model.perturbation;
    let m = replicate(reps, stream.seed(), Moments::new, |rng, acc| {
        let mut s = 0.0;
        let mut log_sum = pert.log_cdf(x);
        let mut steps = 0u64;
        while log_sum > f64::NEG_INFINITY && s > stop {
            if steps >= STEP_CAP {
                return Err(Error::StepLimit {
                    limit: STEP_CAP,
                    context: format!("conditional estimator at x = {x}"),
                });
            }
            s += inc.sample(rng);
            log_sum += pert.log_cdf(x - s);
            steps += 1;
        }
        acc.push(-log_sum.exp_m1());
        Ok(())
    })?;
    let mut r = EstimateResult::from_moments(&m, stream.seed(), Method::Conditional);
    if 2.0 * eps > 0.01 * r.estimate {
        r.warnings.push(format!(
            "truncation bias bound 2*eps = {:e} exceeds 1% of the estimate",
            2.0 * eps
        ));
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// Decay-rate fits

/// Least-squares fit of `ln P(M > x)` against `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Minus the fitted slope.
    pub rate: f64,
    pub intercept: f64,
    /// Standard error of `rate` propagated from the point estimates.
    pub rate_std_error: f64,
    pub xs: Vec<f64>,
    pub estimates: Vec<EstimateResult>,
}

/// Fit the exponential decay rate of crude tail estimates over `xs`.
pub fn decay_fit(
    model: &WalkModel,
    xs: &[f64],
    reps: u64,
    stream: &RandomStream,
) -> Result<DecayFit> {
    if xs.len() < 4 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "need at least 4 increasing x values".into(),
        ));
    }
    let estimates = crude_tail_many(model, xs, None, reps, stream)?;
    if let Some((x, _)) = xs.iter().zip(&estimates).find(|(_, e)| e.estimate <= 0.0) {
        return Err(Error::DegenerateFit(format!("zero estimate at x = {x}")));
    }
    let n = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / n;
    let logs: Vec<f64> = estimates.iter().map(|e| e.estimate.ln()).collect();
    let y_bar = logs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let slope = xs
        .iter()
        .zip(&logs)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum::<f64>()
        / sxx;
    let var: f64 = xs
        .iter()
        .zip(&estimates)
        .map(|(x, e)| ((x - x_bar) / sxx).powi(2) * (e.std_error / e.estimate).powi(2))
        .sum();
    Ok(DecayFit {
        rate: -slope,
        intercept: y_bar - slope * x_bar,
        rate_std_error: var.sqrt(),
        xs: xs.to_vec(),
        estimates,
    })
}

/// Decay rate of the correlated counterexample with `lambda2 = lambda1 / 4`.
pub fn counterexample_decay(
    lambda1: f64,
    xs: &[f64],
    reps: u64,
    stream: &RandomStream,
) -> Result<DecayFit> {
    decay_fit(
        &WalkModel::correlated(lambda1, lambda1 / 4.0)?,
        xs,
        reps,
        stream,
    )
}
