//! Lundberg roots and the exponentially tilted increment law.
//!
//! For an increment `X` with negative mean and cumulant generating function
//! `psi(theta) = ln E exp(theta X)`, the Lundberg root `theta*` is the positive
//! zero of `psi` and `kappa` is the minimiser of `psi` on `(0, theta*)`.
//! Under the tilted law `P*(X ∈ dx) = exp(theta* x) P(X ∈ dx)` the walk drifts
//! upward with mean `psi'(theta*)`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::stats::{replicate, EstimateResult, Method, PairMoments, Z95};
use crate::stream::RandomStream;

/// Maximum steps of a tilted walk before it is declared broken.
pub const STEP_CAP: u64 = 10_000_000;

const ROOT_TOL: f64 = 1e-13;
const KAPPA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LundbergSolution {
    pub theta_star: f64,
    pub kappa: f64,
    pub psi_prime_at_theta_star: f64,
    /// `psi(kappa)`, the minimum of the CGF (negative).
    pub psi_at_kappa: f64,
    /// Sign-change interval found by the bracketing search.
    pub bracket: (f64, f64),
}

/// Positive root of a convex function with `f(0) = 0` and `f'(0) < 0`.
///
/// Expands an upper bracket geometrically from `eps`; when the function
/// diverges first, bisects toward the divergence boundary looking for a
/// positive value. Returns the root and the sign-change bracket.
pub(crate) fn convex_positive_root<F: Fn(f64) -> f64>(
    f: F,
    eps: f64,
    what: &str,
) -> Result<(f64, (f64, f64))> {
    let no_root = || Error::NoRoot(what.to_string());
    let mut lo = 0.0;
    let mut hi = eps;
    let limit = eps * 1e12;
    loop {
        let v = f(hi);
        if v.is_nan() {
            return Err(no_root());
        }
        if v > 0.0 && v.is_finite() {
            break;
        }
        if v == f64::INFINITY {
            // Root (if any) sits between lo and the divergence boundary.
            let mut inf_side = hi;
            let mut found = false;
            for _ in 0..200 {
                let mid = 0.5 * (lo + inf_side);
                let fm = f(mid);
                if fm == f64::INFINITY {
                    inf_side = mid;
                } else if fm > 0.0 {
                    hi = mid;
                    found = true;
                    break;
                } else {
                    lo = mid;
                }
                if inf_side - lo <= f64::EPSILON * inf_side {
                    break;
                }
            }
            if !found {
                return Err(no_root());
            }
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > limit {
            return Err(no_root());
        }
    }
    let bracket = (lo, hi);
    let (mut a, mut b) = bracket;
    for _ in 0..400 {
        if b - a <= ROOT_TOL * b.max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        if f(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    let root = if f(a).abs() <= f(b).abs() { a } else { b };
    Ok((root, bracket))
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

/// Solve `E exp(theta* X) = 1` for `theta* > 0` and locate `kappa`.
pub fn solve_theta_star(increment: &DistributionSpec) -> Result<LundbergSolution> {
    let mean = increment.mean()?;
    if mean >= 0.0 {
        return Err(Error::InvalidDrift { mean });
    }
    let eps = 1e-3 / increment.scale();
    let (theta_star, bracket) =
        convex_positive_root(|t| increment.cgf(t), eps, &increment.to_string())?;

    // Golden section narrows the minimiser; the CGF is too flat near its
    // minimum to resolve it below ~1e-8 from function values alone, so the
    // final digits come from the sign change of psi'.
    let (ga, gb) = golden_section_min(|t| increment.cgf(t), 0.0, theta_star, KAPPA_TOL);
    let slope = |t: f64| increment.cgf_derivative(t);
    let width = (gb - ga).max(1e-6 * theta_star);
    let (mut a, mut b) = ((ga - width).max(0.0), (gb + width).min(theta_star));
    if slope(a) > 0.0 || slope(b) < 0.0 {
        a = 0.0;
        b = theta_star;
    }
    for _ in 0..200 {
        if b - a <= 1e-15 * b.max(1.0) {
            break;
        }
        let mid = 0.5 * (a + b);
        if slope(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let kappa = if slope(a).abs() <= slope(b).abs() {
        a
    } else {
        b
    };

    let psi_prime = increment.cgf_derivative(theta_star);
    if !(psi_prime > 0.0 && psi_prime.is_finite()) {
        return Err(Error::NoRoot(format!(
            "{increment}: psi'(theta*) = {psi_prime} is not positive"
        )));
    }
    Ok(LundbergSolution {
        theta_star,
        kappa,
        psi_prime_at_theta_star: psi_prime,
        psi_at_kappa: increment.cgf(kappa),
        bracket,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TiltSampler {
    /// The tilted law is again a catalogue family.
    Exact(DistributionSpec),
    /// Devroye's universal sampler for log-concave densities: with mode `m`
    /// and modal density `M`, `f(x) <= M min(1, exp(1 - M|x - m|))`.
    LogConcave { mode: f64, mode_density: f64 },
}

/// The increment law under `P*(X ∈ dx) = exp(theta x) P(X ∈ dx) / E exp(theta X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedIncrement {
    pub base: DistributionSpec,
    pub theta: f64,
    log_norm: f64,
    sampler: TiltSampler,
}

impl TiltedIncrement {
    /// Tilt `base` by `theta`, exactly when the family is closed under
    /// tilting and by log-concave rejection otherwise.
    pub fn new(base: DistributionSpec, theta: f64) -> Result<Self> {
        match exact_tilt(&base, theta)? {
            Some(d) => Ok(Self {
                base,
                theta,
                log_norm: base.cgf(theta),
                sampler: TiltSampler::Exact(d),
            }),
            None => Self::rejection(base, theta),
        }
    }

    /// Force the rejection sampler, even for families with an exact tilt.
    pub fn rejection(base: DistributionSpec, theta: f64) -> Result<Self> {
        if !base.is_log_concave() || !base.mgf(theta).is_finite() {
            return Err(Error::UnsupportedFamily(format!(
                "no certified sampler for {base} tilted by {theta}"
            )));
        }
        let mode = tilted_mode(&base, theta)?;
        let mode_density = tilted_sup_density(&base, theta, mode);
        if !(mode_density.is_finite() && mode_density > 0.0) {
            return Err(Error::UnsupportedFamily(format!(
                "unbounded tilted density for {base}"
            )));
        }
        Ok(Self {
            base,
            theta,
            log_norm: base.cgf(theta),
            sampler: TiltSampler::LogConcave { mode, mode_density },
        })
    }

    /// The tilted law as a catalogue family, when it is one.
    pub fn exact_law(&self) -> Option<DistributionSpec> {
        match self.sampler {
            TiltSampler::Exact(d) => Some(d),
            TiltSampler::LogConcave { .. } => None,
        }
    }

    /// `psi'(theta)`, the tilted mean.
    pub fn mean(&self) -> f64 {
        self.base.cgf_derivative(self.theta)
    }

    /// Density of the tilted law.
    pub fn density(&self, x: f64) -> Option<f64> {
        let d = self.base.density(x)?;
        if d == 0.0 {
            return Some(0.0);
        }
        Some((self.theta * x + d.ln() - self.log_norm).exp())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.sampler {
            TiltSampler::Exact(d) => d.sample(rng),
            TiltSampler::LogConcave { mode, mode_density } => loop {
                let t: f64 = if rng.random::<bool>() {
                    rng.random::<f64>()
                } else {
                    let e: f64 = Exp1.sample(rng);
                    1.0 + e
                };
                let x = if rng.random::<bool>() {
                    mode + t / mode_density
                } else {
                    mode - t / mode_density
                };
                let envelope = if t <= 1.0 { 1.0 } else { (1.0 - t).exp() };
                let u: f64 = rng.random();
                if u * mode_density * envelope <= self.density(x).unwrap_or(0.0) {
                    return x;
                }
            },
        }
    }
}

fn exact_tilt(base: &DistributionSpec, theta: f64) -> Result<Option<DistributionSpec>> {
    use DistributionSpec::*;
    if theta == 0.0 {
        return Ok(Some(*base));
    }
    if !base.mgf(theta).is_finite() {
        return Err(Error::Divergent(format!(
            "E exp({theta} X) is infinite for {base}"
        )));
    }
    let d = match *base {
        ExpDifference { pos_rate, neg_rate } => {
            DistributionSpec::exp_difference(pos_rate - theta, neg_rate + theta)?
        }
        Normal { mean, std } => DistributionSpec::normal(mean + theta * std * std, std)?,
        Exponential { rate } => DistributionSpec::exponential(rate - theta)?,
        NegatedExponential { rate } => DistributionSpec::negated_exponential(rate + theta)?,
        Weibull { shape: 1.0, scale } => DistributionSpec::exponential(1.0 / scale - theta)?,
        Deterministic { .. } => *base,
        _ => return Ok(None),
    };
    Ok(Some(d))
}

fn tilted_mode(base: &DistributionSpec, theta: f64) -> Result<f64> {
    use DistributionSpec::*;
    Ok(match *base {
        ExpDifference { .. } | Exponential { .. } | NegatedExponential { .. } => 0.0,
        Normal { mean, std } => mean + theta * std * std,
        Weibull { shape, scale } if shape > 1.0 => {
            // d/dx [theta x + (k-1) ln x - (x/s)^k] is decreasing from +inf to -inf.
            let g =
                |x: f64| theta + (shape - 1.0) / x - shape / scale * (x / scale).powf(shape - 1.0);
            let (mut a, mut b) = (scale * 1e-12, scale);
            while g(b) > 0.0 {
                b *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if g(mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        }
        Weibull { .. } => 0.0,
        _ => return Err(Error::UnsupportedFamily(base.to_string())),
    })
}

/// Supremum of the tilted density, attained at the mode (taking the
/// one-sided limit where the density jumps there).
fn tilted_sup_density(base: &DistributionSpec, theta: f64, mode: f64) -> f64 {
    let raw = match *base {
        DistributionSpec::NegatedExponential { rate } if mode == 0.0 => rate,
        _ => base.density(mode).unwrap_or(0.0),
    };
    (theta * mode - base.cgf(theta)).exp() * raw
}

/// Tilt `increment` by the Lundberg root of `sol`.
pub fn tilt(increment: &DistributionSpec, sol: &LundbergSolution) -> Result<TiltedIncrement> {
    TiltedIncrement::new(*increment, sol.theta_star)
}

/// First strict ascending ladder height of the walk with the given steps.
pub(crate) fn ladder_height<R: Rng + ?Sized>(tilted: &TiltedIncrement, rng: &mut R) -> Result<f64> {
    let mut s = 0.0;
    for _ in 0..STEP_CAP {
        s += tilted.sample(rng);
        if s > 0.0 {
            return Ok(s);
        }
    }
    Err(Error::StepLimit {
        limit: STEP_CAP,
        context: "ladder epoch of the tilted walk".into(),
    })
}

/// Estimate the Cramér–Lundberg constant `r` of the unperturbed walk,
/// `P(max_n S_n > x) ~ r exp(-theta* x)`, as
/// `E*[(1 - exp(-theta* H)) / theta*] / E*[H]` over tilted ladder heights `H`.
pub fn estimate_r_ladder(
    increment: &DistributionSpec,
    sol: &LundbergSolution,
    reps: u64,
    stream: &RandomStream,
) -> Result<EstimateResult> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let tilted = tilt(increment, sol)?;
    let theta = sol.theta_star;
    let m = replicate(reps, stream.seed(), PairMoments::default, |rng, acc| {
        let h = ladder_height(&tilted, rng)?;
        acc.push(-(-theta * h).exp_m1() / theta, h);
        Ok(())
    })?;
    let est = m.ratio();
    let se = m.ratio_std_error();
    Ok(EstimateResult {
        estimate: est,
        std_error: se,
        ci_lo: est - Z95 * se,
        ci_hi: est + Z95 * se,
        reps,
        seed: stream.seed(),
        method: Method::Ladder,
        sample_variance: se * se * reps as f64,
        biased_low: false,
        warnings: Vec::new(),
    })
}
