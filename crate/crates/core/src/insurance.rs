//! Privacy insurance: the consumer's coverage choice and the monopolist insurer's
//! two-type menu.
//!
//! A consumer with wealth `y` loses `ℓ` with probability `1−η`. Buying `β` units
//! at rate `c` leaves wealth `y − βc` if nothing happens and `y + (1−c)β − ℓ` after
//! an attack. The insurer instead offers contracts `(α_a, α_n)`: a payout on attack
//! and a premium otherwise.
//!
//! The insurer's problem is solved in transformed variables `Ũ_a = Ũ(y−ℓ+α_a)`,
//! `Ũ_n = Ũ(y−α_n)`, where the costs are convex through the inverse `W = Ũ⁻¹`.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::numerics::optimize::golden_section_bracket;
use crate::numerics::Interval;

/// Bisection steps after the golden-section bracket; enough to reach one ulp.
const POLISH_STEPS: usize = 200;

/// Utility of wealth, normalized so `Ũ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityFamily {
    /// `ln(1 + w)` on `w > −1`.
    Logarithmic,
    /// `1 − e^{−a w}`, constant absolute risk aversion `a > 0`.
    Exponential { a: f64 },
    /// `((1 + w)^{1−γ} − 1)/(1 − γ)` on `w > −1`, relative risk aversion `γ > 0`, `γ ≠ 1`.
    Power { gamma: f64 },
}

impl UtilityFamily {
    /// Builds a family from its scenario-file name (`logarithmic`, `exponential`,
    /// `power`) and parameter. The logarithmic family ignores the parameter.
    pub fn from_kind(kind: &str, parameter: f64) -> Result<Self> {
        let family = match kind {
            "logarithmic" | "log" => UtilityFamily::Logarithmic,
            "exponential" | "exp" => UtilityFamily::Exponential { a: parameter },
            "power" => UtilityFamily::Power { gamma: parameter },
            other => return Err(Error::domain("UtilityFamily", format!("unknown kind {other:?}"))),
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilityFamily::Logarithmic => Ok(()),
            UtilityFamily::Exponential { a } if a > 0.0 && a.is_finite() => Ok(()),
            UtilityFamily::Exponential { .. } => Err(Error::domain("UtilityFamily", "exponential parameter must be > 0")),
            UtilityFamily::Power { gamma } if gamma > 0.0 && gamma.is_finite() && gamma != 1.0 => Ok(()),
            UtilityFamily::Power { .. } => Err(Error::domain("UtilityFamily", "power parameter must be > 0 and != 1")),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UtilityFamily::Logarithmic => "logarithmic",
            UtilityFamily::Exponential { .. } => "exponential",
            UtilityFamily::Power { .. } => "power",
        }
    }

    /// Infimum of the wealth domain (exclusive), `−∞` when unbounded.
    pub fn wealth_lower_bound(&self) -> f64 {
        match self {
            UtilityFamily::Exponential { .. } => f64::NEG_INFINITY,
            _ => -1.0,
        }
    }

    fn check_wealth(&self, w: f64) -> Result<()> {
        if w.is_finite() && w > self.wealth_lower_bound() {
            Ok(())
        } else {
            Err(Error::domain("utility", format!("wealth {w} outside the {} domain", self.kind())))
        }
    }

    pub fn value(&self, w: f64) -> Result<f64> {
        self.check_wealth(w)?;
        Ok(match *self {
            UtilityFamily::Logarithmic => libm::log1p(w),
            UtilityFamily::Exponential { a } => -libm::expm1(-a * w),
            UtilityFamily::Power { gamma } => libm::expm1((1.0 - gamma) * libm::log1p(w)) / (1.0 - gamma),
        })
    }

    pub fn derivative(&self, w: f64) -> Result<f64> {
        self.check_wealth(w)?;
        Ok(match *self {
            UtilityFamily::Logarithmic => 1.0 / (1.0 + w),
            UtilityFamily::Exponential { a } => a * libm::exp(-a * w),
            UtilityFamily::Power { gamma } => libm::pow(1.0 + w, -gamma),
        })
    }

    /// `(1 − γ)u` style argument of the inverse, checked against the range of `Ũ`.
    fn check_utility(&self, u: f64) -> Result<()> {
        let ok = u.is_finite()
            && match *self {
                UtilityFamily::Logarithmic => true,
                UtilityFamily::Exponential { .. } => u < 1.0,
                UtilityFamily::Power { gamma } => 1.0 + (1.0 - gamma) * u > 0.0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("utility inverse", format!("utility level {u} outside the {} range", self.kind())))
        }
    }

    /// `W(u)`, the wealth that yields utility `u`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        self.check_utility(u)?;
        Ok(match *self {
            UtilityFamily::Logarithmic => libm::expm1(u),
            UtilityFamily::Exponential { a } => -libm::log1p(-u) / a,
            UtilityFamily::Power { gamma } => libm::expm1(libm::log1p((1.0 - gamma) * u) / (1.0 - gamma)),
        })
    }

    /// `W′(u) = 1/Ũ′(W(u))`.
    pub fn inverse_derivative(&self, u: f64) -> Result<f64> {
        self.check_utility(u)?;
        Ok(match *self {
            UtilityFamily::Logarithmic => libm::exp(u),
            UtilityFamily::Exponential { a } => 1.0 / (a * (1.0 - u)),
            UtilityFamily::Power { gamma } => libm::pow(1.0 + (1.0 - gamma) * u, gamma / (1.0 - gamma)),
        })
    }
}

/// One consumer deciding how much coverage to buy at a linear rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumerInsuranceProblem {
    pub wealth: f64,
    pub loss: f64,
    /// Probability the adversary fails.
    pub eta: f64,
    pub premium_rate: f64,
    pub utility: UtilityFamily,
}

impl ConsumerInsuranceProblem {
    pub fn new(wealth: f64, loss: f64, eta: f64, premium_rate: f64, utility: UtilityFamily) -> Result<Self> {
        utility.validate()?;
        if !(loss > 0.0 && loss <= wealth && wealth.is_finite()) {
            return Err(Error::domain("ConsumerInsuranceProblem", "need 0 < loss <= wealth"));
        }
        if !(0.0 < eta && eta < 1.0) {
            return Err(Error::domain("ConsumerInsuranceProblem", "eta must lie in (0, 1)"));
        }
        if !(0.0 < premium_rate && premium_rate < 1.0) {
            return Err(Error::domain("ConsumerInsuranceProblem", "premium_rate must lie in (0, 1)"));
        }
        Ok(ConsumerInsuranceProblem { wealth, loss, eta, premium_rate, utility })
    }

    /// Largest coverage considered: `ℓ/c`, where the no-attack wealth reaches `y − ℓ`.
    pub fn beta_max(&self) -> f64 {
        self.loss / self.premium_rate
    }

    /// Expected utility of buying `beta`.
    pub fn expected_utility(&self, beta: f64) -> Result<f64> {
        let (y, l, eta, c) = (self.wealth, self.loss, self.eta, self.premium_rate);
        Ok(eta * self.utility.value(y - beta * c)? + (1.0 - eta) * self.utility.value(y + (1.0 - c) * beta - l)?)
    }
}

/// Derivative of the expected utility in `beta`:
/// `−ηcŨ′(y − βc) + (1−η)(1−c)Ũ′(y + (1−c)β − ℓ)`.
///
/// Zero at an interior optimum; nonpositive when the optimum is `β = 0`.
pub fn kkt_residual(beta: f64, prob: &ConsumerInsuranceProblem) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::domain("kkt_residual", format!("beta = {beta} must be >= 0")));
    }
    let (y, l, eta, c) = (prob.wealth, prob.loss, prob.eta, prob.premium_rate);
    let u = &prob.utility;
    Ok(-eta * c * u.derivative(y - beta * c)? + (1.0 - eta) * (1.0 - c) * u.derivative(y + (1.0 - c) * beta - l)?)
}

/// Maximizes a concave `f` on `domain` given its derivative `df`.
///
/// Golden-section locates the optimum; the sign of `df` then settles corners
/// exactly and bisection on `df` polishes interior optima to machine precision.
fn maximize_concave<F, D>(mut f: F, mut df: D, domain: Interval) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    let mut failure = None;
    let tol = 1e-9 * (1.0 + domain.width());
    let (report, bracket) = golden_section_bracket(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        domain,
        tol,
    )
    .map_err(|e| failure.take().unwrap_or(e))?;
    if df(domain.lo())? <= 0.0 {
        return Ok(domain.lo());
    }
    if df(domain.hi())? >= 0.0 {
        return Ok(domain.hi());
    }
    // Widen the golden bracket until `df` changes sign across it.
    let x0 = report.scalar();
    let mut half = bracket.width().max(tol);
    let (mut a, mut b) = loop {
        let a = (x0 - half).max(domain.lo());
        let b = (x0 + half).min(domain.hi());
        if df(a)? > 0.0 && df(b)? < 0.0 {
            break (a, b);
        }
        half *= 4.0;
    };
    for _ in 0..POLISH_STEPS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if df(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Optimal coverage `β* ∈ [0, ℓ/c]`.
pub fn consumer_optimal_coverage(prob: &ConsumerInsuranceProblem) -> Result<f64> {
    maximize_concave(|b| prob.expected_utility(b), |b| kkt_residual(b, prob), Interval::new(0.0, prob.beta_max())?)
}

/// Two risk types facing a monopolist insurer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsuranceScenario {
    pub wealth: f64,
    pub loss: f64,
    /// Adversary failure probability for the high-risk type.
    pub eta_high_risk: f64,
    pub eta_low_risk: f64,
    /// Share of high-risk consumers.
    pub p_risky: f64,
    pub utility: UtilityFamily,
}

impl InsuranceScenario {
    pub fn new(
        wealth: f64,
        loss: f64,
        eta_high_risk: f64,
        eta_low_risk: f64,
        p_risky: f64,
        utility: UtilityFamily,
    ) -> Result<Self> {
        utility.validate()?;
        if !(loss > 0.0 && loss <= wealth && wealth.is_finite()) {
            return Err(Error::domain("InsuranceScenario", "need 0 < loss <= wealth"));
        }
        if !(0.0 < eta_high_risk && eta_high_risk < eta_low_risk && eta_low_risk < 1.0) {
            return Err(Error::domain("InsuranceScenario", "need 0 < eta_high_risk < eta_low_risk < 1"));
        }
        if !(0.0 < p_risky && p_risky < 1.0) {
            return Err(Error::domain("InsuranceScenario", "p_risky must lie in (0, 1)"));
        }
        Ok(InsuranceScenario { wealth, loss, eta_high_risk, eta_low_risk, p_risky, utility })
    }

    /// Utility after an attack with no cover, `Ũ(y − ℓ)`.
    pub fn utility_attacked(&self) -> Result<f64> {
        self.utility.value(self.wealth - self.loss)
    }

    pub fn utility_intact(&self) -> Result<f64> {
        self.utility.value(self.wealth)
    }

    /// Reservation expected utility of a type with failure probability `eta`.
    pub fn reservation(&self, eta: f64) -> Result<f64> {
        Ok((1.0 - eta) * self.utility_attacked()? + eta * self.utility_intact()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsuranceContract {
    /// Payout on attack, `α_a`.
    pub alpha_attack: f64,
    /// Premium when no attack occurs, `α_n`.
    pub alpha_premium: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsuranceMenu {
    pub high_risk: InsuranceContract,
    pub low_risk: InsuranceContract,
}

/// A menu in transformed variables `(Ũ_a^h, Ũ_n^h, Ũ_a^l, Ũ_n^l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedMenu {
    pub ua_high: f64,
    pub un_high: f64,
    pub ua_low: f64,
    pub un_low: f64,
}

impl TransformedMenu {
    pub fn as_array(&self) -> [f64; 4] {
        [self.ua_high, self.un_high, self.ua_low, self.un_low]
    }
}

impl InsuranceContract {
    /// `(Ũ(y − ℓ + α_a), Ũ(y − α_n))`.
    pub fn transformed(&self, s: &InsuranceScenario) -> Result<(f64, f64)> {
        Ok((
            s.utility.value(s.wealth - s.loss + self.alpha_attack)?,
            s.utility.value(s.wealth - self.alpha_premium)?,
        ))
    }

    fn from_transformed(s: &InsuranceScenario, ua: f64, un: f64) -> Result<Self> {
        Ok(InsuranceContract {
            alpha_attack: s.utility.inverse(ua)? - s.wealth + s.loss,
            alpha_premium: s.wealth - s.utility.inverse(un)?,
        })
    }

    /// `−(1−η)α_a + ηα_n`.
    pub fn expected_profit(&self, eta: f64) -> f64 {
        -(1.0 - eta) * self.alpha_attack + eta * self.alpha_premium
    }
}

impl InsuranceMenu {
    pub fn transformed(&self, s: &InsuranceScenario) -> Result<TransformedMenu> {
        let (ua_high, un_high) = self.high_risk.transformed(s)?;
        let (ua_low, un_low) = self.low_risk.transformed(s)?;
        Ok(TransformedMenu { ua_high, un_high, ua_low, un_low })
    }

    pub fn from_transformed(t: &TransformedMenu, s: &InsuranceScenario) -> Result<Self> {
        Ok(InsuranceMenu {
            high_risk: InsuranceContract::from_transformed(s, t.ua_high, t.un_high)?,
            low_risk: InsuranceContract::from_transformed(s, t.ua_low, t.un_low)?,
        })
    }
}

/// Residuals and multipliers at a menu. Residuals are `own − reference`, so a
/// nonnegative slack means the constraint holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MenuDiagnostics {
    /// High type's value of its contract minus the value of mimicking (binding at optimum).
    pub ic_h_residual: f64,
    /// Low type's value of its contract minus its reservation value (binding at optimum).
    pub ir_l_residual: f64,
    pub ic_l_slack: f64,
    pub ir_h_slack: f64,
    /// `|ℓ − α_a^h − α_n^h|`.
    pub full_insurance_gap_h: f64,
    /// `Ũ_n^l − Ũ_a^l`.
    pub partial_insurance_margin_l: f64,
    pub lagrange_lambda1: f64,
    pub lagrange_lambda2: f64,
    /// The two Lagrangian first-order conditions not used to recover the multipliers.
    pub stationarity_un_high: f64,
    pub stationarity_un_low: f64,
    pub tol: f64,
}

impl MenuDiagnostics {
    /// All four original constraints hold to `tol`.
    pub fn feasible(&self) -> bool {
        [self.ic_h_residual, self.ir_l_residual, self.ic_l_slack, self.ir_h_slack]
            .iter()
            .all(|&r| r >= -self.tol)
    }
}

/// `p(−(1−η_h)α_a^h + η_h α_n^h) + (1−p)(−(1−η_l)α_a^l + η_l α_n^l)`.
pub fn expected_insurer_profit(menu: &InsuranceMenu, s: &InsuranceScenario) -> f64 {
    s.p_risky * menu.high_risk.expected_profit(s.eta_high_risk)
        + (1.0 - s.p_risky) * menu.low_risk.expected_profit(s.eta_low_risk)
}

/// Contribution of each type to expected profit, `(high, low)`.
pub fn profit_shares(menu: &InsuranceMenu, s: &InsuranceScenario) -> (f64, f64) {
    (
        s.p_risky * menu.high_risk.expected_profit(s.eta_high_risk),
        (1.0 - s.p_risky) * menu.low_risk.expected_profit(s.eta_low_risk),
    )
}

/// Evaluates every constraint of the insurer's problem at `menu` and recovers
/// the multipliers of the reduced problem.
pub fn verify_menu(menu: &InsuranceMenu, s: &InsuranceScenario, tol: f64) -> Result<MenuDiagnostics> {
    let t = menu.transformed(s)?;
    let (eh, el, p) = (s.eta_high_risk, s.eta_low_risk, s.p_risky);
    let value = |eta: f64, ua: f64, un: f64| (1.0 - eta) * ua + eta * un;
    let w = &s.utility;
    let lambda1 = p * w.inverse_derivative(t.ua_high)?;
    let lambda2 = ((1.0 - el) * (1.0 - p) * w.inverse_derivative(t.ua_low)? + lambda1 * (1.0 - eh)) / (1.0 - el);
    Ok(MenuDiagnostics {
        ic_h_residual: value(eh, t.ua_high, t.un_high) - value(eh, t.ua_low, t.un_low),
        ir_l_residual: value(el, t.ua_low, t.un_low) - s.reservation(el)?,
        ic_l_slack: value(el, t.ua_low, t.un_low) - value(el, t.ua_high, t.un_high),
        ir_h_slack: value(eh, t.ua_high, t.un_high) - s.reservation(eh)?,
        full_insurance_gap_h: (s.loss - menu.high_risk.alpha_attack - menu.high_risk.alpha_premium).abs(),
        partial_insurance_margin_l: t.un_low - t.ua_low,
        lagrange_lambda1: lambda1,
        lagrange_lambda2: lambda2,
        stationarity_un_high: -p * eh * w.inverse_derivative(t.un_high)? + lambda1 * eh,
        stationarity_un_low: -(1.0 - p) * el * w.inverse_derivative(t.un_low)? - lambda1 * eh + lambda2 * el,
        tol,
    })
}

/// The low type's reduced problem: `s = Ũ_a^l` on the binding IR-l line.
struct Reduced<'a> {
    s: &'a InsuranceScenario,
    u_attacked: f64,
    reservation_low: f64,
}

impl<'a> Reduced<'a> {
    fn new(s: &'a InsuranceScenario) -> Result<Self> {
        Ok(Reduced { s, u_attacked: s.utility_attacked()?, reservation_low: s.reservation(s.eta_low_risk)? })
    }

    /// From no cover (`Ũ_a^l = Ũ(y−ℓ)`) to full cover (`Ũ_a^l = Ũ_n^l`).
    fn range(&self) -> Result<Interval> {
        Interval::new(self.u_attacked, self.reservation_low).map_err(|_| {
            Error::infeasible(
                "insurer_optimal_menu",
                format!("empty search range [{}, {}]", self.u_attacked, self.reservation_low),
            )
        })
    }

    fn un_low(&self, ua_low: f64) -> f64 {
        let el = self.s.eta_low_risk;
        (self.reservation_low - (1.0 - el) * ua_low) / el
    }

    /// High type's value of mimicking, which binding IC-h grants it.
    fn value_high(&self, ua_low: f64) -> f64 {
        let eh = self.s.eta_high_risk;
        (1.0 - eh) * ua_low + eh * self.un_low(ua_low)
    }

    fn menu(&self, ua_low: f64) -> TransformedMenu {
        let v = self.value_high(ua_low);
        TransformedMenu { ua_high: v, un_high: v, ua_low, un_low: self.un_low(ua_low) }
    }

    fn profit(&self, ua_low: f64) -> Result<f64> {
        transformed_profit(self.s, &self.menu(ua_low))
    }

    fn derivative(&self, ua_low: f64) -> Result<f64> {
        let s = self.s;
        let (eh, el, p) = (s.eta_high_risk, s.eta_low_risk, s.p_risky);
        let w = &s.utility;
        let dv = (el - eh) / el;
        Ok(-p * w.inverse_derivative(self.value_high(ua_low))? * dv
            + (1.0 - p) * (1.0 - el) * (w.inverse_derivative(self.un_low(ua_low))? - w.inverse_derivative(ua_low)?))
    }
}

/// Insurer profit written in transformed variables, with the type-independent
/// constant equal to the wealth `y`.
pub fn transformed_profit(s: &InsuranceScenario, t: &TransformedMenu) -> Result<f64> {
    let w = &s.utility;
    let part = |eta: f64, ua: f64, un: f64| -> Result<f64> {
        Ok(s.wealth - (1.0 - eta) * s.loss - (1.0 - eta) * w.inverse(ua)? - eta * w.inverse(un)?)
    };
    Ok(s.p_risky * part(s.eta_high_risk, t.ua_high, t.un_high)?
        + (1.0 - s.p_risky) * part(s.eta_low_risk, t.ua_low, t.un_low)?)
}

/// Profit-maximizing menu with binding IC-h and IR-l.
///
/// Given the low type's contract, the cheapest way to deliver the high type its
/// mimicking value is full insurance (`W` is convex), so only `Ũ_a^l` is searched.
pub fn insurer_optimal_menu(s: &InsuranceScenario) -> Result<(InsuranceMenu, MenuDiagnostics)> {
    let r = Reduced::new(s)?;
    let ua_low = maximize_concave(|x| r.profit(x), |x| r.derivative(x), r.range()?)?;
    let menu = InsuranceMenu::from_transformed(&r.menu(ua_low), s)?;
    let diagnostics = verify_menu(&menu, s, 1e-8)?;
    Ok((menu, diagnostics))
}

/// Brute-force referee: a `grid_points × grid_points` search over `Ũ_a^l` on the
/// IR-l line and `Ũ_a^h` on the IC-h line, keeping wealth inside `[y−ℓ, y]` and
/// skipping points that violate IC-l or IR-h. Ties keep the lowest premium.
pub fn insurer_oracle_menu(s: &InsuranceScenario, grid_points: usize) -> Result<InsuranceMenu> {
    if grid_points < 201 {
        return Err(Error::domain("insurer_oracle_menu", "grid_points must be >= 201"));
    }
    let r = Reduced::new(s)?;
    let low = r.range()?;
    let u_intact = s.utility_intact()?;
    let eh = s.eta_high_risk;
    let (el, p) = (s.eta_low_risk, s.p_risky);
    let reservation_high = s.reservation(eh)?;
    let step = |iv: &Interval, i: usize| iv.lo() + iv.width() * i as f64 / (grid_points - 1) as f64;
    let mut best: Option<(f64, f64, TransformedMenu)> = None;
    for i in 0..grid_points {
        let ua_low = step(&low, i);
        let un_low = r.un_low(ua_low);
        let v = r.value_high(ua_low);
        // IC-h binds by construction, so the high type's value is `v` on the whole row.
        if v - reservation_high < -1e-9 {
            continue;
        }
        let low_contract = InsuranceContract::from_transformed(s, ua_low, un_low)?;
        let low_profit = (1.0 - p) * low_contract.expected_profit(el);
        // Ũ_n^h = (v − (1−η_h)Ũ_a^h)/η_h must also stay in [Ũ(y−ℓ), Ũ(y)].
        let lo = r.u_attacked.max((v - eh * u_intact) / (1.0 - eh));
        let hi = u_intact.min((v - eh * r.u_attacked) / (1.0 - eh));
        let Ok(high) = Interval::new(lo, hi.max(lo)) else { continue };
        for j in 0..grid_points {
            let ua_high = step(&high, j);
            let un_high = (v - (1.0 - eh) * ua_high) / eh;
            if r.reservation_low - ((1.0 - el) * ua_high + el * un_high) < -1e-9 {
                continue;
            }
            let high_contract = InsuranceContract::from_transformed(s, ua_high, un_high)?;
            let profit = p * high_contract.expected_profit(eh) + low_profit;
            let premium = high_contract.alpha_premium + low_contract.alpha_premium;
            let better = match &best {
                None => true,
                Some((bp, bprem, _)) => profit > *bp || (profit == *bp && premium < *bprem),
            };
            if better {
                best = Some((profit, premium, TransformedMenu { ua_high, un_high, ua_low, un_low }));
            }
        }
    }
    let (_, _, t) = best.ok_or_else(|| Error::infeasible("insurer_oracle_menu", String::from("no feasible grid point")))?;
    InsuranceMenu::from_transformed(&t, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FAMILIES: [UtilityFamily; 5] = [
        UtilityFamily::Logarithmic,
        UtilityFamily::Exponential { a: 0.3 },
        UtilityFamily::Exponential { a: 0.05 },
        UtilityFamily::Power { gamma: 0.5 },
        UtilityFamily::Power { gamma: 2.5 },
    ];

    fn running() -> InsuranceScenario {
        InsuranceScenario::new(10.0, 5.0, 0.6, 0.9, 0.3, UtilityFamily::Logarithmic).unwrap()
    }

    #[test]
    fn families_vanish_at_zero_and_round_trip() {
        for f in FAMILIES {
            assert_eq!(f.value(0.0).unwrap(), 0.0);
            for k in 0..=200 {
                let w = -0.9 + 20.9 * k as f64 / 200.0;
                let u = f.value(w).unwrap();
                assert!((f.inverse(u).unwrap() - w).abs() <= 1e-10 * (1.0 + w.abs()), "{f:?} w={w}");
                let dw = f.inverse_derivative(u).unwrap() * f.derivative(w).unwrap();
                assert!((dw - 1.0).abs() <= 1e-10, "{f:?} w={w}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        for f in FAMILIES {
            for w in [-0.5, 0.0, 1.0, 7.5] {
                let h = 1e-5;
                let fd = (f.value(w + h).unwrap() - f.value(w - h).unwrap()) / (2.0 * h);
                assert!((fd - f.derivative(w).unwrap()).abs() <= 1e-8, "{f:?} w={w}");
            }
        }
    }

    #[test]
    fn domain_errors_name_the_wealth() {
        let e = UtilityFamily::Logarithmic.value(-1.0).unwrap_err();
        assert!(alloc::format!("{e}").contains("-1"));
        assert!(UtilityFamily::Exponential { a: 1.0 }.inverse(1.0).is_err());
        assert!(UtilityFamily::from_kind("cubic", 1.0).is_err());
        assert!(UtilityFamily::from_kind("power", 1.0).is_err());
        assert!(UtilityFamily::from_kind("exponential", 0.0).is_err());
    }

    #[test]
    fn fair_premium_buys_full_cover() {
        for f in FAMILIES {
            let prob = ConsumerInsuranceProblem::new(10.0, 5.0, 0.8, 0.2, f).unwrap();
            let beta = consumer_optimal_coverage(&prob).unwrap();
            assert!((beta - 5.0).abs() <= 1e-6, "{f:?} {beta}");
            assert!(kkt_residual(5.0, &prob).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn logarithmic_worked_example() {
        // 0.24(6 + 0.7β) = 0.14(11 − 0.3β) ⇒ β = 0.1/0.21.
        let prob = ConsumerInsuranceProblem::new(10.0, 5.0, 0.8, 0.3, UtilityFamily::Logarithmic).unwrap();
        let beta = consumer_optimal_coverage(&prob).unwrap();
        assert!((beta - 0.1 / 0.21).abs() <= 1e-9, "{beta}");
        assert!(kkt_residual(beta, &prob).unwrap().abs() <= 1e-8);
        assert!(kkt_residual(5.0, &prob).unwrap() < 0.0);
    }

    #[test]
    fn expensive_cover_is_declined() {
        let prob = ConsumerInsuranceProblem::new(10.0, 5.0, 0.8, 0.6, UtilityFamily::Logarithmic).unwrap();
        assert!(kkt_residual(0.0, &prob).unwrap() < 0.0);
        assert_eq!(consumer_optimal_coverage(&prob).unwrap(), 0.0);
    }

    #[test]
    fn kkt_rejects_negative_beta() {
        let prob = ConsumerInsuranceProblem::new(10.0, 5.0, 0.8, 0.6, UtilityFamily::Logarithmic).unwrap();
        assert!(kkt_residual(-1.0, &prob).is_err());
    }

    #[test]
    fn scenario_invariants() {
        let f = UtilityFamily::Logarithmic;
        assert!(InsuranceScenario::new(10.0, 5.0, 0.9, 0.6, 0.3, f).is_err());
        assert!(InsuranceScenario::new(10.0, 11.0, 0.6, 0.9, 0.3, f).is_err());
        assert!(InsuranceScenario::new(10.0, 5.0, 0.6, 0.9, 1.0, f).is_err());
        assert!(ConsumerInsuranceProblem::new(10.0, 5.0, 0.8, 1.0, f).is_err());
    }

    #[test]
    fn zero_menu_has_zero_profit() {
        let zero = InsuranceContract { alpha_attack: 0.0, alpha_premium: 0.0 };
        assert_eq!(expected_insurer_profit(&InsuranceMenu { high_risk: zero, low_risk: zero }, &running()), 0.0);
    }

    #[test]
    fn fair_full_cover_earns_nothing() {
        // β = ℓ at c = 1 − η: α_a = (1−c)ℓ = ηℓ, α_n = cℓ.
        let eta = 0.6;
        let c = InsuranceContract { alpha_attack: eta * 5.0, alpha_premium: (1.0 - eta) * 5.0 };
        assert!(c.expected_profit(eta).abs() < 1e-15);
    }

    #[test]
    fn running_scenario_menu() {
        let s = running();
        let (menu, d) = insurer_optimal_menu(&s).unwrap();
        assert!(d.full_insurance_gap_h <= 1e-6);
        assert!(d.partial_insurance_margin_l > 0.0);
        assert!(d.ic_h_residual.abs() <= 1e-8 && d.ir_l_residual.abs() <= 1e-8);
        assert!(d.feasible());
        assert!(d.stationarity_un_high.abs() <= 1e-8);
        assert!(expected_insurer_profit(&menu, &s) > 0.0);
        // Here the risky share is high enough that the low type is left uninsured.
        assert!(menu.low_risk.alpha_attack.abs() <= 1e-12 && menu.low_risk.alpha_premium.abs() <= 1e-12);
        assert!(menu.high_risk.alpha_attack > 0.0 && menu.high_risk.alpha_premium > 0.0);
    }

    #[test]
    fn interior_low_cover_when_risky_type_is_rare() {
        let s = InsuranceScenario::new(10.0, 5.0, 0.6, 0.9, 0.1, UtilityFamily::Logarithmic).unwrap();
        let (menu, d) = insurer_optimal_menu(&s).unwrap();
        assert!(menu.low_risk.alpha_attack > 0.0 && menu.low_risk.alpha_premium > 0.0);
        assert!(d.stationarity_un_high.abs() <= 1e-8 && d.stationarity_un_low.abs() <= 1e-8, "{d:?}");
        assert!(d.partial_insurance_margin_l > 0.0 && d.full_insurance_gap_h <= 1e-6);
    }

    #[test]
    fn transformed_profit_agrees_with_direct_profit() {
        let s = running();
        let (menu, _) = insurer_optimal_menu(&s).unwrap();
        let t = menu.transformed(&s).unwrap();
        assert!((transformed_profit(&s, &t).unwrap() - expected_insurer_profit(&menu, &s)).abs() <= 1e-12);
    }

    #[test]
    fn raised_low_premium_breaks_participation() {
        let s = running();
        let (mut menu, _) = insurer_optimal_menu(&s).unwrap();
        let un = menu.low_risk.transformed(&s).unwrap().1;
        menu.low_risk.alpha_premium += 0.1;
        let d = verify_menu(&menu, &s, 1e-8).unwrap();
        let expected = -s.eta_low_risk * (un - menu.low_risk.transformed(&s).unwrap().1);
        assert!(d.ir_l_residual < 0.0);
        assert!((d.ir_l_residual - expected).abs() < 1e-12);
        assert!(!d.feasible());
    }

    #[test]
    fn lagrangian_is_stationary_at_the_solver_menu() {
        let s = InsuranceScenario::new(10.0, 5.0, 0.6, 0.9, 0.1, UtilityFamily::Logarithmic).unwrap();
        let (menu, d) = insurer_optimal_menu(&s).unwrap();
        let t = menu.transformed(&s).unwrap().as_array();
        let (eh, el) = (s.eta_high_risk, s.eta_low_risk);
        let lagrangian = |x: [f64; 4]| {
            let tm = TransformedMenu { ua_high: x[0], un_high: x[1], ua_low: x[2], un_low: x[3] };
            transformed_profit(&s, &tm).unwrap()
                + d.lagrange_lambda1 * ((1.0 - eh) * x[0] + eh * x[1] - (1.0 - eh) * x[2] - eh * x[3])
                + d.lagrange_lambda2 * ((1.0 - el) * x[2] + el * x[3])
        };
        let h = 1e-6;
        let mut norm2 = 0.0;
        for k in 0..4 {
            let (mut up, mut dn) = (t, t);
            up[k] += h;
            dn[k] -= h;
            let g = (lagrangian(up) - lagrangian(dn)) / (2.0 * h);
            norm2 += g * g;
        }
        assert!(norm2.sqrt() <= 1e-5, "{}", norm2.sqrt());
    }

    #[test]
    fn oracle_referees_running_scenario() {
        let s = running();
        let (menu, _) = insurer_optimal_menu(&s).unwrap();
        let oracle = insurer_oracle_menu(&s, 401).unwrap();
        let (a, b) = (expected_insurer_profit(&menu, &s), expected_insurer_profit(&oracle, &s));
        assert!(a >= b - 1e-12 && a - b <= 1e-2, "{a} {b}");
        assert!(insurer_oracle_menu(&s, 200).is_err());
    }

    #[test]
    fn merging_types_pool_on_fair_full_cover() {
        let s = InsuranceScenario::new(10.0, 5.0, 0.75, 0.75 + 1e-9, 0.3, UtilityFamily::Logarithmic).unwrap();
        let (menu, d) = insurer_optimal_menu(&s).unwrap();
        assert!(d.partial_insurance_margin_l.abs() <= 1e-6);
        assert!((menu.high_risk.alpha_attack - menu.low_risk.alpha_attack).abs() <= 1e-6);
        assert!((s.loss - menu.low_risk.alpha_attack - menu.low_risk.alpha_premium).abs() <= 1e-6);
    }

    #[test]
    fn rare_risky_type_leaves_low_type_nearly_fully_covered() {
        let mk = |p| InsuranceScenario::new(10.0, 5.0, 0.6, 0.9, p, UtilityFamily::Logarithmic).unwrap();
        let margins: alloc::vec::Vec<f64> =
            [0.3, 0.1, 0.01, 1e-4].iter().map(|&p| insurer_optimal_menu(&mk(p)).unwrap().1.partial_insurance_margin_l).collect();
        assert!(margins.windows(2).all(|w| w[1] < w[0]), "{margins:?}");
        assert!(margins[3] < 1e-3);
    }

    fn family() -> impl Strategy<Value = UtilityFamily> {
        prop_oneof![
            Just(UtilityFamily::Logarithmic),
            (0.02f64..0.5).prop_map(|a| UtilityFamily::Exponential { a }),
            (0.2f64..3.0).prop_filter("gamma != 1", |g| (g - 1.0).abs() > 0.05).prop_map(|gamma| UtilityFamily::Power { gamma }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn demand_falls_with_price(f in family(), y in 2.0f64..20.0, frac in 0.1f64..1.0, eta in 0.3f64..0.95) {
            let loss = frac * y;
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let c = (1.0 - eta) + eta * k as f64 / 20.0;
                let beta = consumer_optimal_coverage(&ConsumerInsuranceProblem::new(y, loss, eta, c, f).unwrap()).unwrap();
                prop_assert!(beta <= prev + 1e-9, "c={c} beta={beta} prev={prev}");
                prev = beta;
            }
        }

        #[test]
        fn solver_menus_are_feasible(f in family(), y in 2.0f64..20.0, frac in 0.1f64..1.0,
                                     eh in 0.2f64..0.8, gap in 0.02f64..0.18, p in 0.05f64..0.95) {
            let s = InsuranceScenario::new(y, frac * y, eh, eh + gap, p, f).unwrap();
            let (menu, d) = insurer_optimal_menu(&s).unwrap();
            prop_assert!(d.feasible(), "{d:?}");
            prop_assert!(d.full_insurance_gap_h <= 1e-6);
            prop_assert!(d.partial_insurance_margin_l > 0.0);
            prop_assert!(menu.low_risk.alpha_attack >= -1e-12 && menu.low_risk.alpha_premium >= -1e-12);
        }
    }
}
