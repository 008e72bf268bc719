//! Closed forms, asymptotic approximations and bounds for `P(M > x)`.

use std::fmt;
use std::str::FromStr;

use crate::distributions::{DistributionSpec, ExpTailFit};
use crate::error::{Error, Result};
use crate::quadrature;
use crate::stats::EstimateResult;
use crate::tilt::LundbergSolution;
use crate::walk::WalkModel;

/// `P(M <= x)` for increments `-Exponential(lambda)` and i.i.d.
/// perturbations independent of them: `P(xi <= x) exp(-lambda R(x))`.
pub fn exact_cdf(lambda: f64, xi: &DistributionSpec, x: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rate must be positive, got {lambda}"
        )));
    }
    let f = xi.cdf(x);
    if f == 0.0 {
        return Ok(0.0);
    }
    Ok(f * (-lambda * xi.integrated_tail(x)?).exp())
}

/// [`exact_cdf`] for a model, which must have negated-exponential
/// increments and independent perturbations.
pub fn exact_cdf_for(model: &WalkModel, x: f64) -> Result<f64> {
    match (model.increment, model.dependence) {
        (DistributionSpec::NegatedExponential { rate }, crate::walk::Dependence::Independent) => {
            exact_cdf(rate, &model.perturbation, x)
        }
        _ => Err(Error::Inapplicable(format!(
            "closed form needs negatedexponential increments with independent perturbations, got {}",
            model.increment
        ))),
    }
}

/// The constant `r` in `P(max_n S_n > z) ~ r exp(-theta* z)`, when known in
/// closed form.
pub fn exact_r(increment: &DistributionSpec) -> Option<f64> {
    match *increment {
        DistributionSpec::ExpDifference { pos_rate, neg_rate } if neg_rate < pos_rate => {
            Some(neg_rate / pos_rate)
        }
        _ => None,
    }
}

/// `P(max_n S_n > z)` and whether it is only the asymptotic form.
pub fn unperturbed_tail(
    increment: &DistributionSpec,
    sol: Option<&LundbergSolution>,
    r: f64,
    z: f64,
) -> (f64, bool) {
    if z < 0.0 {
        return (1.0, false);
    }
    match *increment {
        DistributionSpec::ExpDifference { pos_rate, neg_rate } => (
            neg_rate / pos_rate * (-(pos_rate - neg_rate) * z).exp(),
            false,
        ),
        DistributionSpec::NegatedExponential { .. } => (0.0, false),
        DistributionSpec::Deterministic { value } if value <= 0.0 => (0.0, false),
        _ => {
            let theta = sol.map(|s| s.theta_star).unwrap_or(f64::NAN);
            ((r * (-theta * z).exp()).min(1.0), true)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    CramerLundberg,
    ExpPerturbation,
    HeavyTail,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::CramerLundberg => "cl",
            Regime::ExpPerturbation => "exp",
            Regime::HeavyTail => "heavy",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cl" | "cramer-lundberg" => Ok(Regime::CramerLundberg),
            "exp" => Ok(Regime::ExpPerturbation),
            "heavy" => Ok(Regime::HeavyTail),
            other => Err(Error::Parse(format!(
                "unknown regime `{other}` (expected cl, exp or heavy)"
            ))),
        }
    }
}

/// One verified (or failed) applicability condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64) -> Self {
        Self {
            name: name.to_string(),
            passed,
            value,
        }
    }
}

/// `e^{theta* x} P(M > x)` estimates over the plateau used for `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub xs: Vec<f64>,
    pub scaled: Vec<f64>,
    pub scaled_std_error: Vec<f64>,
    /// Index of the first point of the plateau.
    pub start: usize,
}

impl Plateau {
    /// Largest `|z_i - z_j| / sqrt(se_i^2 + se_j^2)` over all pairs.
    pub fn max_pooled_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.scaled.len() {
            for j in i + 1..self.scaled.len() {
                let pooled = self.scaled_std_error[i].hypot(self.scaled_std_error[j]);
                worst = worst.max((self.scaled[i] - self.scaled[j]).abs() / pooled);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteReport {
    pub regime: Regime,
    /// `theta*`, `nu`, or for the heavy regime the mean excess at the probe level.
    pub rate_or_scale: f64,
    /// `c`, `d / (1 - E e^{nu X})`, or `1 / |mu|`.
    pub constant: f64,
    pub constant_std_error: Option<f64>,
    pub checks: Vec<Check>,
    pub plateau: Option<Plateau>,
    pub notes: Vec<String>,
}

impl AsymptoteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn fail_on_checks(self) -> Result<Self> {
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            return Err(Error::ConditionViolated(format!(
                "{} (measured {})",
                c.name, c.value
            )));
        }
        Ok(self)
    }
}

/// Estimate `c` in `P(M > x) ~ c exp(-theta* x)` from tail estimates.
///
/// With `z_i = exp(theta* x_i) p_i`, the plateau is the longest suffix of
/// `xs` along which consecutive `z_i` differ by less than two pooled
/// standard errors; `c` is the inverse-variance weighted mean over it.
pub fn cl_constant(
    model: &WalkModel,
    sol: &LundbergSolution,
    xs: &[f64],
    estimates: &[EstimateResult],
) -> Result<AsymptoteReport> {
    if xs.len() != estimates.len() {
        return Err(Error::InvalidParameter(
            "one estimate per x is required".into(),
        ));
    }
    if xs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 levels, got {}",
            xs.len()
        )));
    }
    if let Some((x, e)) = xs
        .iter()
        .zip(estimates)
        .find(|(_, e)| !(e.relative_error() <= 0.05))
    {
        return Err(Error::InvalidParameter(format!(
            "relative standard error {:.3} at x = {x} exceeds 5%",
            e.relative_error()
        )));
    }
    let theta = sol.theta_star;
    let scaled: Vec<f64> = xs
        .iter()
        .zip(estimates)
        .map(|(x, e)| (theta * x).exp() * e.estimate)
        .collect();
    let scaled_se: Vec<f64> = xs
        .iter()
        .zip(estimates)
        .map(|(x, e)| (theta * x).exp() * e.std_error)
        .collect();
    let n = xs.len();
    let mut start = n - 1;
    while start > 0 {
        let pooled = scaled_se[start].hypot(scaled_se[start - 1]);
        if (scaled[start] - scaled[start - 1]).abs() < 2.0 * pooled {
            start -= 1;
        } else {
            break;
        }
    }
    if n - start < 2 {
        return Err(Error::NoPlateau(format!(
            "last two scaled estimates {} and {} disagree",
            scaled[n - 2],
            scaled[n - 1]
        )));
    }
    let (mut sw, mut swz) = (0.0, 0.0);
    for i in start..n {
        let w = 1.0 / (scaled_se[i] * scaled_se[i]).max(f64::MIN_POSITIVE);
        sw += w;
        swz += w * scaled[i];
    }
    let mgf = model.perturbation.mgf(theta);
    Ok(AsymptoteReport {
        regime: Regime::CramerLundberg,
        rate_or_scale: theta,
        constant: swz / sw,
        constant_std_error: Some(1.0 / sw.sqrt()),
        checks: vec![
            Check::new("E exp(theta* xi) finite", mgf.is_finite(), mgf),
            Check::new("plateau length", true, (n - start) as f64),
        ],
        plateau: Some(Plateau {
            xs: xs[start..].to_vec(),
            scaled: scaled[start..].to_vec(),
            scaled_std_error: scaled_se[start..].to_vec(),
            start,
        }),
        notes: vec!["c is estimated; only its existence is guaranteed".into()],
    })
}

/// Constant of the approximation `d / (1 - E exp(nu X)) exp(-nu x)` for
/// perturbations with tail `d exp(-nu x)`.
pub fn exp_perturbation_report(model: &WalkModel, fit: ExpTailFit) -> Result<AsymptoteReport> {
    let mgf = model.increment.mgf(fit.nu);
    let report = AsymptoteReport {
        regime: Regime::ExpPerturbation,
        rate_or_scale: fit.nu,
        constant: fit.d / (1.0 - mgf),
        constant_std_error: None,
        checks: vec![
            Check::new("E exp(nu X) < 1", mgf < 1.0, mgf),
            Check::new(
                "independent perturbations",
                model.dependence == crate::walk::Dependence::Independent,
                f64::NAN,
            ),
        ],
        plateau: None,
        notes: Vec::new(),
    };
    report.fail_on_checks()
}

pub fn exp_perturbation_asymptote(model: &WalkModel, fit: ExpTailFit, x: f64) -> Result<f64> {
    let r = exp_perturbation_report(model, fit)?;
    Ok(r.constant * (-fit.nu * x).exp())
}

/// Finite proxy for `h(x) -> 0`: the hazard at `2^k * scale`, `k = 0..=10`,
/// must decrease strictly and end below a tenth of its first value.
pub fn hazard_gate(dist: &DistributionSpec) -> Check {
    let scale = dist.scale();
    let hs: Vec<f64> = (0..=10)
        .map(|k| dist.hazard(2f64.powi(k) * scale).unwrap_or(f64::NAN))
        .collect();
    let decreasing = hs.windows(2).all(|w| w[1] < w[0]);
    let ratio = hs[10] / hs[0];
    Check::new(
        "hazard decreasing toward 0",
        decreasing && ratio < 0.1,
        ratio,
    )
}

/// Checks for the heavy-tailed regime: decaying hazard, an exponential
/// moment of `|X|`, negative drift.
pub fn heavy_tail_report(model: &WalkModel, x: f64) -> Result<AsymptoteReport> {
    let inc = model.increment;
    let eps = 0.01 / inc.scale();
    let moment = inc.mgf(eps).max(inc.mgf(-eps));
    let mu = inc.mean()?;
    let pert = model.perturbation;
    let tail = pert.tail(x);
    let mean_excess = if tail > 0.0 {
        pert.integrated_tail(x)? / tail
    } else {
        0.0
    };
    let report = AsymptoteReport {
        regime: Regime::HeavyTail,
        rate_or_scale: mean_excess,
        constant: 1.0 / mu.abs(),
        constant_std_error: None,
        checks: vec![
            hazard_gate(&pert),
            Check::new("E exp(eps |X|) finite", moment.is_finite(), moment),
            Check::new("E X < 0", mu < 0.0, mu),
            Check::new(
                "independent perturbations",
                model.dependence == crate::walk::Dependence::Independent,
                f64::NAN,
            ),
        ],
        plateau: None,
        notes: Vec::new(),
    };
    report.fail_on_checks()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTailValue {
    /// `R(x) / |mu|`.
    pub value: f64,
    /// The formula exceeded 1 and is not a probability here.
    pub out_of_range: bool,
}

/// `R(x) / |E X|` with `R(x) = ∫_x^∞ P(xi > y) dy`.
pub fn heavy_tail_asymptote(model: &WalkModel, x: f64) -> Result<HeavyTailValue> {
    let report = heavy_tail_report(model, x)?;
    let value = model.perturbation.integrated_tail(x)? * report.constant;
    Ok(HeavyTailValue {
        value,
        out_of_range: value > 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    /// `∫ P(max_n S_n > x - y) P(xi ∈ dy)`.
    pub value: f64,
    /// `r E exp(theta* xi)`, the bound on `liminf e^{theta* x} P(M > x)`.
    pub asymptotic_constant: f64,
    /// The unperturbed tail was replaced by `r exp(-theta* z)`.
    pub approximate: bool,
}

/// Lower bound from the time the unperturbed walk reaches its maximum.
pub fn lower_bound(
    model: &WalkModel,
    sol: &LundbergSolution,
    r: f64,
    x: f64,
) -> Result<LowerBound> {
    model.require_independent()?;
    let pert = model.perturbation;
    let mgf = pert.mgf(sol.theta_star);
    if !mgf.is_finite() {
        return Err(Error::Divergent(format!(
            "E exp(theta* xi) is infinite for {pert}"
        )));
    }
    let inc = model.increment;
    let (_, approximate) = unperturbed_tail(&inc, Some(sol), r, 1.0);
    let g = |z: f64| unperturbed_tail(&inc, Some(sol), r, z).0;
    // G(z) = 1 for z < 0, i.e. for xi > x.
    let value = match pert {
        DistributionSpec::Deterministic { value } => g(x - value),
        _ => {
            let (inf, _) = pert.support();
            let lo = if inf.is_finite() {
                inf
            } else {
                let mut y = x.min(0.0) - pert.scale();
                while pert.cdf(y) > 1e-16 {
                    y -= pert.scale();
                }
                y
            };
            let body = if lo < x {
                quadrature::integrate(
                    |y| g(x - y) * pert.density(y).unwrap_or(0.0),
                    lo,
                    x,
                    1e-15,
                    1e-11,
                )
            } else {
                0.0
            };
            pert.tail(x) + body
        }
    };
    Ok(LowerBound {
        value,
        asymptotic_constant: r * mgf,
        approximate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    /// `E xi e^{theta xi} / psi'(theta*) + 1 + E e^{theta xi} / (1 - e^{psi(kappa)})`.
    pub value: f64,
    /// The same with the second group replaced by `r`; only for `xi >= 0`,
    /// `theta = theta*` and a supplied `r`.
    pub refined: Option<f64>,
}

/// Upper bound on `limsup E* exp(-theta (S_T - x))`; at `theta = theta*`
/// this bounds `limsup e^{theta* x} P(M > x)`.
pub fn upper_bound(
    model: &WalkModel,
    sol: &LundbergSolution,
    theta: f64,
    r: Option<f64>,
) -> Result<UpperBound> {
    model.require_independent()?;
    let pert = model.perturbation;
    let m0 = pert.mgf(theta);
    let m1 = pert.mgf_derivative(theta);
    if !m0.is_finite() || !m1.is_finite() {
        return Err(Error::Divergent(format!(
            "E exp({theta} xi) is infinite for {pert}"
        )));
    }
    let first = m1 / sol.psi_prime_at_theta_star;
    let value = first + 1.0 + m0 / (1.0 - sol.psi_at_kappa.exp());
    let nonneg = pert.support().0 >= 0.0;
    let refined = match r {
        Some(r) if nonneg && theta == sol.theta_star => Some(first + r),
        _ => None,
    };
    Ok(UpperBound { value, refined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilt::solve_theta_star;

    fn d(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn closed_form_values() {
        let xi = d("exponential(1)");
        let v = exact_cdf(1.0, &xi, 2f64.ln()).unwrap();
        assert!((v - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(exact_cdf(1.0, &xi, -1.0).unwrap(), 0.0);
        assert_eq!(exact_cdf(1.0, &d("deterministic(2)"), 2.0).unwrap(), 1.0);
        let m = WalkModel::new(d("normal(-1,1)"), xi).unwrap();
        assert!(matches!(
            exact_cdf_for(&m, 1.0),
            Err(Error::Inapplicable(_))
        ));
        assert!(exact_cdf(1.0, &d("pareto(0.5,1)"), 1.0).is_err());
    }

    #[test]
    fn closed_form_is_a_cdf() {
        for xi in [
            d("exponential(1)"),
            d("pareto(2,1)"),
            d("normal(0,1)"),
            d("weibull(0.5,1)"),
        ] {
            let xs: Vec<f64> = (0..1000).map(|i| -20.0 + 0.06 * i as f64).collect();
            let vals: Vec<f64> = xs
                .iter()
                .map(|&x| exact_cdf(1.0, &xi, x).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{xi}");
            assert!(vals[0] < 1e-6);
            assert!(exact_cdf(1.0, &xi, 1e7).unwrap() > 1.0 - 1e-5);
        }
    }

    #[test]
    fn exp_regime_constant() {
        let m = WalkModel::new(d("normal(-1,0.5)"), d("exponential(1)")).unwrap();
        let fit = m.perturbation.exp_tail_fit().unwrap();
        let r = exp_perturbation_report(&m, fit).unwrap();
        let expected = 1.0 / (1.0 - (-0.875f64).exp());
        assert!((r.constant - expected).abs() < 1e-12);
        assert!((r.constant - 1.7152).abs() < 1e-3);
        let v = exp_perturbation_asymptote(&m, fit, 10.0).unwrap();
        assert!((v - expected * (-10.0f64).exp()).abs() < 1e-18);
        // mgf(nu) = 0.5 gives constant 2.
        let half = WalkModel::new(d("negexp(1)"), d("exponential(1)")).unwrap();
        let r = exp_perturbation_report(&half, ExpTailFit { d: 1.0, nu: 1.0 }).unwrap();
        assert!((r.constant - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exp_regime_needs_contraction() {
        let m = WalkModel::new(d("normal(-1,1)"), d("exponential(3)")).unwrap();
        // theta* = 2 < nu = 3, so E exp(3 X) > 1.
        let fit = m.perturbation.exp_tail_fit().unwrap();
        assert!(matches!(
            exp_perturbation_report(&m, fit),
            Err(Error::ConditionViolated(_))
        ));
    }

    #[test]
    fn heavy_regime_values() {
        let m = WalkModel::new(d("normal(-0.5,0.5)"), d("pareto(2,1)")).unwrap();
        let v = heavy_tail_asymptote(&m, 9.0).unwrap();
        assert!((v.value - 0.2).abs() < 1e-14);
        assert!(!v.out_of_range);
        let v = heavy_tail_asymptote(&m, 0.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-14);
        assert!(v.out_of_range);
    }

    #[test]
    fn hazard_gate_per_family() {
        for ok in [
            "pareto(2,1)",
            "weibull(0.5,1)",
            "pareto(1.5,3)",
            "weibull(0.3,2)",
        ] {
            assert!(hazard_gate(&d(ok)).passed, "{ok}");
        }
        for bad in [
            "exponential(1)",
            "normal(0,1)",
            "weibull(2,1)",
            "deterministic(1)",
            "expdifference(1,1)",
        ] {
            assert!(!hazard_gate(&d(bad)).passed, "{bad}");
        }
        let m = WalkModel::new(d("normal(-0.5,0.5)"), d("exponential(1)")).unwrap();
        assert!(matches!(
            heavy_tail_asymptote(&m, 5.0),
            Err(Error::ConditionViolated(_))
        ));
    }

    #[test]
    fn bound_constants() {
        let m = WalkModel::new(d("expdifference(2,1)"), d("exponential(3)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        let lb = lower_bound(&m, &sol, 0.5, 5.0).unwrap();
        assert!((lb.asymptotic_constant - 0.75).abs() < 1e-9);
        assert!(!lb.approximate);
        let ub = upper_bound(&m, &sol, sol.theta_star, Some(0.5)).unwrap();
        assert!((ub.value - 16.0).abs() < 1e-7, "{}", ub.value);
        assert!((ub.refined.unwrap() - 2.0).abs() < 1e-9);

        let n = WalkModel::new(d("normal(-1,1)"), d("exponential(3)")).unwrap();
        let sol = solve_theta_star(&n.increment).unwrap();
        let ub = upper_bound(&n, &sol, 2.0, None).unwrap();
        let expected = 3.0 + 1.0 + 3.0 / (1.0 - (-0.5f64).exp());
        assert!((ub.value - expected).abs() < 1e-8);
        assert!(ub.refined.is_none());

        let z = WalkModel::new(d("normal(-1,1)"), d("deterministic(0)")).unwrap();
        let ub = upper_bound(&z, &sol, 2.0, Some(0.3)).unwrap();
        assert!((ub.value - (1.0 + 1.0 / (1.0 - (-0.5f64).exp()))).abs() < 1e-9);
        assert!(ub.refined.unwrap() <= ub.value);
    }

    #[test]
    fn lower_bound_point_mass_is_unperturbed_tail() {
        let m = WalkModel::new(d("expdifference(2,1)"), d("deterministic(0)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        for x in [0.5, 3.0, 8.0] {
            let lb = lower_bound(&m, &sol, 0.5, x).unwrap();
            assert!((lb.value - 0.5 * (-x).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn lower_bound_matches_direct_integration() {
        // Oracle: split the y integral at x and at 0 by hand.
        let m = WalkModel::new(d("expdifference(2,1)"), d("exponential(3)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        let x = 4.0;
        let lb = lower_bound(&m, &sol, 0.5, x).unwrap();
        let body = quadrature::integrate(
            |y| 0.5 * (-(x - y)).exp() * 3.0 * (-3.0 * y).exp(),
            0.0,
            x,
            1e-16,
            1e-13,
        );
        let oracle = (-3.0 * x).exp() + body;
        assert!((lb.value - oracle).abs() < 1e-12 * oracle.max(1e-300).max(1.0));
        // Closed form: 0.5 e^{-x} * 3/2 (1 - e^{-2x}) + e^{-3x}.
        let closed = 0.75 * (-x).exp() * (1.0 - (-2.0 * x).exp()) + (-3.0 * x).exp();
        assert!((lb.value - closed).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_requires_moment() {
        let m = WalkModel::new(d("expdifference(2,1)"), d("exponential(1)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        assert!(matches!(
            lower_bound(&m, &sol, 0.5, 1.0),
            Err(Error::Divergent(_))
        ));
        assert!(matches!(
            upper_bound(&m, &sol, 1.0, None),
            Err(Error::Divergent(_))
        ));
    }

    fn synthetic(xs: &[f64], c: f64, theta: f64, rel: f64) -> Vec<EstimateResult> {
        xs.iter()
            .map(|&x| {
                let p = c * (-theta * x).exp();
                EstimateResult {
                    estimate: p,
                    std_error: rel * p,
                    ci_lo: p * (1.0 - 2.0 * rel),
                    ci_hi: p * (1.0 + 2.0 * rel),
                    reps: 1000,
                    seed: 0,
                    method: crate::stats::Method::ImportanceSampling,
                    sample_variance: 0.0,
                    biased_low: false,
                    warnings: Vec::new(),
                }
            })
            .collect()
    }

    #[test]
    fn plateau_fit() {
        let m = WalkModel::new(d("expdifference(2,1)"), d("deterministic(0)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut est = synthetic(&xs, 0.5, 1.0, 0.01);
        // A pre-asymptotic first point is excluded from the plateau.
        est[0].estimate *= 1.5;
        let rep = cl_constant(&m, &sol, &xs, &est).unwrap();
        assert_eq!(rep.plateau.as_ref().unwrap().start, 1);
        assert!((rep.constant - 0.5).abs() < 1e-9);

        let mut est = synthetic(&xs, 0.5, 1.0, 0.01);
        est[3].estimate *= 2.0;
        assert!(matches!(
            cl_constant(&m, &sol, &xs, &est),
            Err(Error::NoPlateau(_))
        ));
        let noisy = synthetic(&xs, 0.5, 1.0, 0.2);
        assert!(cl_constant(&m, &sol, &xs, &noisy).is_err());
        assert!(cl_constant(&m, &sol, &xs[..3], &synthetic(&xs[..3], 0.5, 1.0, 0.01)).is_err());
    }

    #[test]
    fn evaluations_are_deterministic() {
        let m = WalkModel::new(d("expdifference(2,1)"), d("exponential(3)")).unwrap();
        let sol = solve_theta_star(&m.increment).unwrap();
        let a = lower_bound(&m, &sol, 0.5, 3.3).unwrap();
        let b = lower_bound(&m, &sol, 0.5, 3.3).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let u1 = upper_bound(&m, &sol, 1.0, Some(0.5)).unwrap();
        let u2 = upper_bound(&m, &sol, 1.0, Some(0.5)).unwrap();
        assert_eq!(u1, u2);
    }

    #[test]
    fn regime_parse() {
        assert_eq!("CL".parse::<Regime>().unwrap(), Regime::CramerLundberg);
        assert_eq!("heavy".parse::<Regime>().unwrap(), Regime::HeavyTail);
        assert!("nope".parse::<Regime>().is_err());
    }
}
