//! Two-type screening: the utility offers a menu `{(t_L, q_L), (t_H, q_H)}` of
//! prices and privacy settings so that each consumer type picks its own contract.
//!
//! Consumers value a setting `q ∈ [0, q̄]` at `U(q, θ) = ½(q̄² − (q − q̄)²)·θ` and the
//! utility bears cost `g(q) = ζq`. At the optimum IR-low and IC-high bind, which
//! pins the prices, and the settings solve
//!
//! ```text
//! q_H = q̄ − ζ/θ̄
//! q_L = [q̄ − (1−p)ζ/(θ̲ − pθ̄)]₊      (when θ̲ > pθ̄; otherwise q_L = 0)
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default resolution of the brute-force menu search, per axis.
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Absolute slack below which a constraint counts as binding.
pub const BINDING_TOL: f64 = 1e-9;

/// Everything about the market except the type probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningMarket {
    pub theta_low: f64,
    pub theta_high: f64,
    pub q_bar: f64,
    pub zeta: f64,
}

impl ScreeningMarket {
    pub fn new(theta_low: f64, theta_high: f64, q_bar: f64, zeta: f64) -> Result<Self> {
        let finite = [theta_low, theta_high, q_bar, zeta].iter().all(|v| v.is_finite());
        if !finite || !(0.0 < theta_low && theta_low < theta_high) {
            return Err(Error::domain("ScreeningScenario", "need 0 < theta_low < theta_high"));
        }
        if !(q_bar > 0.0) {
            return Err(Error::domain("ScreeningScenario", "q_bar must be > 0"));
        }
        if !(zeta > 0.0) {
            return Err(Error::domain("ScreeningScenario", "zeta must be > 0"));
        }
        Ok(ScreeningMarket { theta_low, theta_high, q_bar, zeta })
    }

    pub fn with_p(&self, p_high: f64) -> Result<ScreeningScenario> {
        ScreeningScenario::new(*self, p_high)
    }

    pub fn utility(&self, q: f64, theta: f64) -> f64 {
        quadratic_utility(q, theta, self.q_bar)
    }

    pub fn cost(&self, q: f64) -> f64 {
        self.zeta * q
    }
}

/// A market together with `p = P(θ = θ̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningScenario {
    pub market: ScreeningMarket,
    pub p_high: f64,
}

impl ScreeningScenario {
    pub fn new(market: ScreeningMarket, p_high: f64) -> Result<Self> {
        if !(0.0 < p_high && p_high < 1.0) {
            return Err(Error::domain("ScreeningScenario", "p_high must lie in (0, 1)"));
        }
        Ok(ScreeningScenario { market, p_high })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractMenu {
    pub q_low: f64,
    pub t_low: f64,
    pub q_high: f64,
    pub t_high: f64,
}

impl ContractMenu {
    pub const ZERO: ContractMenu = ContractMenu { q_low: 0.0, t_low: 0.0, q_high: 0.0, t_high: 0.0 };
}

/// Slacks of the four participation/self-selection constraints; `≥ 0` means satisfied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// High type prefers its own contract to the low one.
    pub ic_high_slack: f64,
    /// Low type prefers its own contract to the high one.
    pub ic_low_slack: f64,
    pub ir_high_slack: f64,
    pub ir_low_slack: f64,
    pub ic_high_binding: bool,
    pub ic_low_binding: bool,
    pub ir_high_binding: bool,
    pub ir_low_binding: bool,
}

impl ConstraintReport {
    pub fn min_slack(&self) -> f64 {
        self.ic_high_slack.min(self.ic_low_slack).min(self.ir_high_slack).min(self.ir_low_slack)
    }

    pub fn all_satisfied(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfarePoint {
    pub p: f64,
    pub welfare: f64,
    pub profit: f64,
    pub consumer_surplus: f64,
    /// The piecewise closed form with branch point `θ̲/θ̄`, kept alongside for comparison.
    pub piecewise_welfare: f64,
    pub shutdown: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShutdownReport {
    pub p_shutdown: f64,
    /// `ζ ≥ q̄θ̲`: the low type is excluded at every `p`.
    pub degenerate: bool,
}

/// Preferences and cost as black boxes, for the brute-force search.
pub trait Preferences {
    /// Consumer value of setting `q` to type `theta`; increasing in both.
    fn utility(&self, q: f64, theta: f64) -> f64;
    /// Utility's unit cost of offering `q`.
    fn cost(&self, q: f64) -> f64;
}

impl Preferences for ScreeningMarket {
    fn utility(&self, q: f64, theta: f64) -> f64 {
        ScreeningMarket::utility(self, q, theta)
    }

    fn cost(&self, q: f64) -> f64 {
        ScreeningMarket::cost(self, q)
    }
}

fn quadratic_utility(q: f64, theta: f64, q_bar: f64) -> f64 {
    0.5 * (q_bar * q_bar - (q - q_bar) * (q - q_bar)) * theta
}

/// `½(q̄² − (q − q̄)²)·θ` for `q ∈ [0, q̄]`.
pub fn consumer_utility(q: f64, theta: f64, q_bar: f64) -> Result<f64> {
    if !(0.0..=q_bar).contains(&q) {
        return Err(Error::domain("consumer_utility", format!("q = {q} outside [0, {q_bar}]")));
    }
    Ok(quadratic_utility(q, theta, q_bar))
}

/// Prices from binding IR-low and IC-high.
pub fn binding_prices<P: Preferences>(prefs: &P, theta_low: f64, theta_high: f64, q_low: f64, q_high: f64) -> ContractMenu {
    let t_low = prefs.utility(q_low, theta_low);
    let t_high = t_low + prefs.utility(q_high, theta_high) - prefs.utility(q_low, theta_high);
    ContractMenu { q_low, t_low, q_high, t_high }
}

/// Stationary point of the low-type problem, unclamped; `None` when that problem
/// is not strictly concave (`θ̲ ≤ pθ̄`).
fn low_stationary_point(s: &ScreeningScenario) -> Option<f64> {
    let m = &s.market;
    let curvature = m.theta_low - s.p_high * m.theta_high;
    (curvature > 0.0).then(|| m.q_bar - (1.0 - s.p_high) * m.zeta / curvature)
}

/// Low-type objective: `−p(U(q,θ̄) − U(q,θ̲)) + (1−p)(U(q,θ̲) − ζq)`.
fn low_objective(s: &ScreeningScenario, q: f64) -> f64 {
    let m = &s.market;
    let p = s.p_high;
    -p * (m.utility(q, m.theta_high) - m.utility(q, m.theta_low)) + (1.0 - p) * (m.utility(q, m.theta_low) - m.cost(q))
}

fn optimal_q_low(s: &ScreeningScenario) -> f64 {
    match low_stationary_point(s) {
        Some(q) => q.clamp(0.0, s.market.q_bar),
        // Convex objective: the maximum is at an end of [0, q̄]; ties go to 0.
        None => {
            let q_bar = s.market.q_bar;
            if low_objective(s, q_bar) > low_objective(s, 0.0) {
                q_bar
            } else {
                0.0
            }
        }
    }
}

/// Profit-maximizing menu under asymmetric information.
pub fn closed_form_menu(s: &ScreeningScenario) -> Result<ContractMenu> {
    let m = &s.market;
    if m.zeta / m.theta_high > m.q_bar {
        return Err(Error::infeasible(
            "closed_form_menu",
            format!("zeta/theta_high = {} exceeds q_bar = {}", m.zeta / m.theta_high, m.q_bar),
        ));
    }
    let q_high = (m.q_bar - m.zeta / m.theta_high).clamp(0.0, m.q_bar);
    let q_low = optimal_q_low(s);
    Ok(binding_prices(m, m.theta_low, m.theta_high, q_low, q_high))
}

/// Menu the utility would offer if it observed types: each type at its efficient
/// setting, charged its full surplus.
pub fn full_information_menu(s: &ScreeningScenario) -> Result<ContractMenu> {
    let m = &s.market;
    if m.zeta / m.theta_low > m.q_bar {
        return Err(Error::infeasible(
            "full_information_menu",
            format!("zeta/theta_low = {} exceeds q_bar = {}", m.zeta / m.theta_low, m.q_bar),
        ));
    }
    let q_high = m.q_bar - m.zeta / m.theta_high;
    let q_low = m.q_bar - m.zeta / m.theta_low;
    Ok(ContractMenu {
        q_low,
        t_low: m.utility(q_low, m.theta_low),
        q_high,
        t_high: m.utility(q_high, m.theta_high),
    })
}

/// `(1−p)(t_L − g(q_L)) + p(t_H − g(q_H))`.
pub fn expected_profit(menu: &ContractMenu, s: &ScreeningScenario) -> f64 {
    expected_profit_with(&s.market, s.p_high, menu)
}

fn expected_profit_with<P: Preferences>(prefs: &P, p: f64, menu: &ContractMenu) -> f64 {
    (1.0 - p) * (menu.t_low - prefs.cost(menu.q_low)) + p * (menu.t_high - prefs.cost(menu.q_high))
}

fn constraint_report<P: Preferences>(prefs: &P, theta_low: f64, theta_high: f64, menu: &ContractMenu, tol: f64) -> ConstraintReport {
    let own_high = prefs.utility(menu.q_high, theta_high) - menu.t_high;
    let own_low = prefs.utility(menu.q_low, theta_low) - menu.t_low;
    let ic_high_slack = own_high - (prefs.utility(menu.q_low, theta_high) - menu.t_low);
    let ic_low_slack = own_low - (prefs.utility(menu.q_high, theta_low) - menu.t_high);
    ConstraintReport {
        ic_high_slack,
        ic_low_slack,
        ir_high_slack: own_high,
        ir_low_slack: own_low,
        ic_high_binding: ic_high_slack.abs() <= tol,
        ic_low_binding: ic_low_slack.abs() <= tol,
        ir_high_binding: own_high.abs() <= tol,
        ir_low_binding: own_low.abs() <= tol,
    }
}

/// Evaluates all four original constraints of the menu.
pub fn verify_constraints(menu: &ContractMenu, s: &ScreeningScenario, tol: f64) -> ConstraintReport {
    constraint_report(&s.market, s.market.theta_low, s.market.theta_high, menu, tol)
}

/// Brute-force referee with the quadratic family.
pub fn oracle_menu(s: &ScreeningScenario, grid_points: usize) -> Result<ContractMenu> {
    let m = &s.market;
    oracle_menu_with(&s.market, m.theta_low, m.theta_high, m.q_bar, s.p_high, grid_points)
}

/// Exhaustive search over `q_L ≤ q_H` on a uniform grid of `[0, q̄]²`, with prices
/// from the binding constraints. Points violating any original constraint by more
/// than [`BINDING_TOL`] are skipped; ties keep the lowest grid index.
pub fn oracle_menu_with<P: Preferences>(
    prefs: &P,
    theta_low: f64,
    theta_high: f64,
    q_bar: f64,
    p: f64,
    grid_points: usize,
) -> Result<ContractMenu> {
    if grid_points < 101 {
        return Err(Error::domain("oracle_menu", "grid_points must be >= 101"));
    }
    let step = q_bar / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 * step).collect();
    let mut best: Option<(f64, ContractMenu)> = None;
    for (i, &q_low) in grid.iter().enumerate() {
        for &q_high in &grid[i..] {
            let menu = binding_prices(prefs, theta_low, theta_high, q_low, q_high);
            if !constraint_report(prefs, theta_low, theta_high, &menu, BINDING_TOL).all_satisfied(BINDING_TOL) {
                continue;
            }
            let profit = expected_profit_with(prefs, p, &menu);
            if best.as_ref().is_none_or(|(b, _)| profit > *b) {
                best = Some((profit, menu));
            }
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| Error::infeasible("oracle_menu", "no grid point satisfies all constraints"))
}

/// Piecewise closed-form welfare with branch point `p₀ = θ̲/θ̄`, evaluated as written.
pub fn piecewise_welfare(s: &ScreeningScenario) -> f64 {
    let m = &s.market;
    let p = s.p_high;
    let x = (1.0 - p) * m.zeta / (p * m.theta_high - m.theta_low);
    let base = -p * m.zeta * (m.q_bar - m.zeta / m.theta_high);
    let p0 = m.theta_low / m.theta_high;
    if p <= p0 {
        let phi = (1.0 - p)
            * (0.5 * (m.q_bar * m.q_bar - x * x) * m.theta_low - m.zeta * (m.q_bar - x));
        base + phi
    } else {
        base + p * (0.5 * (m.q_bar * m.q_bar - x * x) * (m.theta_high - m.theta_low))
    }
}

/// Profit, high-type rent and welfare at each `p`, with the market held fixed.
pub fn welfare_curve(market: &ScreeningMarket, p_grid: &[f64]) -> Result<Vec<WelfarePoint>> {
    if p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("welfare_curve", "p_grid must be sorted"));
    }
    p_grid
        .iter()
        .map(|&p| {
            let s = market.with_p(p)?;
            let menu = closed_form_menu(&s)?;
            let profit = expected_profit(&menu, &s);
            let consumer_surplus = p * (market.utility(menu.q_high, market.theta_high) - menu.t_high);
            Ok(WelfarePoint {
                p,
                welfare: profit + consumer_surplus,
                profit,
                consumer_surplus,
                piecewise_welfare: piecewise_welfare(&s),
                shutdown: menu.q_low == 0.0,
            })
        })
        .collect()
}

/// Smallest `p` at which the low type is shut out, by bisection on the clamp
/// condition `q̄(θ̲ − pθ̄) ≤ (1−p)ζ`.
pub fn shutdown_probability(market: &ScreeningMarket) -> ShutdownReport {
    let m = market;
    if m.zeta >= m.q_bar * m.theta_low {
        return ShutdownReport { p_shutdown: 0.0, degenerate: true };
    }
    let shut = |p: f64| m.q_bar * (m.theta_low - p * m.theta_high) <= (1.0 - p) * m.zeta;
    // shut(0) is false; shut(θ̲/θ̄) is true.
    let (mut lo, mut hi) = (0.0, m.theta_low / m.theta_high);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if shut(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ShutdownReport { p_shutdown: hi, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn running(p: f64) -> ScreeningScenario {
        ScreeningMarket::new(0.5, 1.0, 10.0, 2.0).unwrap().with_p(p).unwrap()
    }

    #[test]
    fn utility_values() {
        assert_eq!(consumer_utility(10.0, 1.0, 10.0).unwrap(), 50.0);
        assert_eq!(consumer_utility(0.0, 3.7, 10.0).unwrap(), 0.0);
        assert_eq!(consumer_utility(1.0, 1.0, 2.0).unwrap(), 1.5);
        assert!(consumer_utility(-0.1, 1.0, 2.0).is_err());
        assert!(consumer_utility(2.1, 1.0, 2.0).is_err());
    }

    #[test]
    fn running_example_menu() {
        let m = closed_form_menu(&running(0.2)).unwrap();
        assert_eq!(m.q_high, 8.0);
        assert!((m.q_low - 4.6667).abs() <= 1e-4);
        assert!((m.t_low - 17.8889).abs() <= 1e-3);
        assert!((m.t_high - 30.1111).abs() <= 1e-3);
    }

    #[test]
    fn shutdown_beyond_three_eighths() {
        for p in [0.375, 0.4, 0.5, 0.7, 0.99] {
            assert_eq!(closed_form_menu(&running(p)).unwrap().q_low, 0.0, "p={p}");
        }
        assert!(closed_form_menu(&running(0.37)).unwrap().q_low > 0.0);
    }

    #[test]
    fn vanishing_p_recovers_full_information_low_setting() {
        let m = closed_form_menu(&running(1e-9)).unwrap();
        assert!((m.q_low - 6.0).abs() < 1e-6);
    }

    #[test]
    fn priced_out_high_type() {
        let s = ScreeningMarket::new(0.5, 1.0, 1.0, 2.0).unwrap().with_p(0.3).unwrap();
        assert!(matches!(closed_form_menu(&s), Err(Error::Infeasible { .. })));
        assert!(full_information_menu(&s).is_err());
    }

    #[test]
    fn full_information_settings() {
        let m = full_information_menu(&running(0.2)).unwrap();
        assert_eq!((m.q_high, m.q_low), (8.0, 6.0));
    }

    #[test]
    fn full_information_limits() {
        let eps = 1e-9;
        let m = ScreeningMarket::new(1.0 - eps, 1.0, 10.0, 2.0).unwrap().with_p(0.2).unwrap();
        let menu = full_information_menu(&m).unwrap();
        assert!((menu.q_low - menu.q_high).abs() < 1e-6);
        let free = ScreeningMarket::new(0.5, 1.0, 10.0, 1e-12).unwrap().with_p(0.2).unwrap();
        let menu = full_information_menu(&free).unwrap();
        assert!((menu.q_low - 10.0).abs() < 1e-9 && (menu.q_high - 10.0).abs() < 1e-9);
    }

    #[test]
    fn scenario_invariants() {
        assert!(ScreeningMarket::new(1.0, 1.0, 10.0, 2.0).is_err());
        assert!(ScreeningMarket::new(0.0, 1.0, 10.0, 2.0).is_err());
        assert!(ScreeningMarket::new(0.5, 1.0, 0.0, 2.0).is_err());
        assert!(ScreeningMarket::new(0.5, 1.0, 10.0, 0.0).is_err());
        let m = ScreeningMarket::new(0.5, 1.0, 10.0, 2.0).unwrap();
        assert!(m.with_p(0.0).is_err() && m.with_p(1.0).is_err());
    }

    #[test]
    fn profit_values() {
        let s = running(0.2);
        assert_eq!(expected_profit(&ContractMenu::ZERO, &s), 0.0);
        // Prices equal to cost on both contracts.
        let s5 = running(0.5);
        let menu = ContractMenu { q_low: 1.0, t_low: 2.0, q_high: 3.0, t_high: 6.0 };
        assert_eq!(expected_profit(&menu, &s5), 0.0);
    }

    #[test]
    fn running_example_profit_matches_hand_arithmetic() {
        // 0.8·(161/9 − 28/3) + 0.2·(271/9 − 16) = 29/3
        let s = running(0.2);
        let v = expected_profit(&closed_form_menu(&s).unwrap(), &s);
        assert!((v - 29.0 / 3.0).abs() <= 1e-9, "{v}");
    }

    #[test]
    fn binding_structure_at_optimum() {
        let s = running(0.2);
        let r = verify_constraints(&closed_form_menu(&s).unwrap(), &s, BINDING_TOL);
        assert!(r.ir_low_binding && r.ic_high_binding);
        assert!(r.ic_low_slack >= -1e-9 && r.ir_high_slack >= -1e-9);
    }

    #[test]
    fn full_information_menu_is_not_incentive_compatible() {
        let s = running(0.2);
        let r = verify_constraints(&full_information_menu(&s).unwrap(), &s, BINDING_TOL);
        // The high type would rather take (q_L, t_L): 42 − 21 vs 48 − 48.
        assert!((r.ic_high_slack + 21.0).abs() < 1e-9);
        assert!(r.ic_low_slack >= 0.0);
    }

    #[test]
    fn inflated_low_price_breaks_ir() {
        let s = running(0.2);
        let mut m = closed_form_menu(&s).unwrap();
        m.t_low += 1.0;
        let r = verify_constraints(&m, &s, BINDING_TOL);
        assert!((r.ir_low_slack + 1.0).abs() < 1e-9);
        assert!(!r.ir_low_binding);
    }

    #[test]
    fn shutdown_running_example() {
        let r = shutdown_probability(&running(0.2).market);
        assert!(!r.degenerate);
        assert!((r.p_shutdown - 0.375).abs() <= 1e-9);
    }

    #[test]
    fn shutdown_free_privacy_limit() {
        let r = shutdown_probability(&ScreeningMarket::new(0.5, 1.0, 10.0, 1e-9).unwrap());
        assert!((r.p_shutdown - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shutdown_degenerate() {
        let r = shutdown_probability(&ScreeningMarket::new(0.5, 1.0, 10.0, 5.0).unwrap());
        assert!(r.degenerate);
        assert_eq!(r.p_shutdown, 0.0);
    }

    #[test]
    fn oracle_requires_resolution() {
        assert!(oracle_menu(&running(0.2), 100).is_err());
    }

    #[test]
    fn welfare_running_example() {
        let pts = welfare_curve(&running(0.2).market, &[0.2]).unwrap();
        let w = pts[0];
        assert!((w.consumer_surplus - 3.5778).abs() <= 1e-3);
        assert!((w.welfare - (w.profit + w.consumer_surplus)).abs() <= 1e-12);
        assert!(!w.shutdown);
    }

    #[test]
    fn welfare_flags_shutdown() {
        let pts = welfare_curve(&running(0.2).market, &[0.1, 0.5, 0.999]).unwrap();
        assert_eq!(pts.iter().map(|w| w.shutdown).collect::<Vec<_>>(), [false, true, true]);
        assert!(welfare_curve(&running(0.2).market, &[0.5, 0.1]).is_err());
        assert!(welfare_curve(&running(0.2).market, &[1.0]).is_err());
    }

    #[test]
    fn direct_welfare_matches_allocative_surplus() {
        // Transfers cancel: Ψ = p(U(q_H,θ̄) − ζq_H) + (1−p)(U(q_L,θ̲) − ζq_L).
        let market = running(0.2).market;
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for w in welfare_curve(&market, &grid).unwrap() {
            let menu = closed_form_menu(&market.with_p(w.p).unwrap()).unwrap();
            let surplus = |q: f64, th: f64| 0.5 * (100.0 - (q - 10.0) * (q - 10.0)) * th - 2.0 * q;
            let expected = w.p * surplus(menu.q_high, 1.0) + (1.0 - w.p) * surplus(menu.q_low, 0.5);
            assert!((w.welfare - expected).abs() <= 1e-9, "p={}", w.p);
        }
    }

    #[test]
    fn piecewise_welfare_differs_from_direct() {
        let w = welfare_curve(&running(0.2).market, &[0.2]).unwrap()[0];
        // Drops the high type's gross value and flips the sign in the squared term.
        assert!((w.piecewise_welfare - w.welfare).abs() > 1.0);
        assert!(w.piecewise_welfare.is_finite());
    }

    fn market_strategy() -> impl Strategy<Value = ScreeningMarket> {
        (0.1f64..2.0, 1.05f64..3.0, 1.0f64..20.0, 0.01f64..0.9).prop_map(|(tl, ratio, q_bar, frac)| {
            // ζ below q̄θ̲ keeps both full-information settings interior.
            ScreeningMarket::new(tl, tl * ratio, q_bar, frac * q_bar * tl).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn no_distortion_at_top(m in market_strategy(), p in 0.01f64..0.99) {
            let s = m.with_p(p).unwrap();
            prop_assert_eq!(closed_form_menu(&s).unwrap().q_high, full_information_menu(&s).unwrap().q_high);
        }

        #[test]
        fn downward_distortion(m in market_strategy(), u in 0.01f64..0.99) {
            let shut = shutdown_probability(&m).p_shutdown;
            let p = u * shut;
            let s = m.with_p(p).unwrap();
            let q = closed_form_menu(&s).unwrap().q_low;
            let q_fi = full_information_menu(&s).unwrap().q_low;
            prop_assert!(q < q_fi, "q={q} q_fi={q_fi}");
        }

        #[test]
        fn constraints_hold_and_bind(m in market_strategy(), p in 0.01f64..0.99) {
            let s = m.with_p(p).unwrap();
            let r = verify_constraints(&closed_form_menu(&s).unwrap(), &s, BINDING_TOL);
            prop_assert!(r.all_satisfied(1e-9), "{r:?}");
            prop_assert!(r.ir_low_binding && r.ic_high_binding, "{r:?}");
        }

        #[test]
        fn spence_mirrlees(m in market_strategy(), seed in any::<u64>()) {
            let mut rng = crate::numerics::seeded_normal_stream(seed);
            let gap = |q: f64| m.utility(q, m.theta_high) - m.utility(q, m.theta_low);
            for _ in 0..1000 {
                let a = rng.next_unit() * m.q_bar;
                let b = rng.next_unit() * m.q_bar;
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(gap(hi) - gap(lo) >= -1e-12 * (1.0 + gap(hi).abs()));
                prop_assert!((m.q_bar - lo) * (m.theta_high - m.theta_low) >= 0.0);
            }
        }

        #[test]
        fn information_costs_profit(m in market_strategy(), p in 0.01f64..0.99) {
            let s = m.with_p(p).unwrap();
            let asym = expected_profit(&closed_form_menu(&s).unwrap(), &s);
            let full = expected_profit(&full_information_menu(&s).unwrap(), &s);
            prop_assert!(asym <= full + 1e-12);
        }

        #[test]
        fn welfare_additive(m in market_strategy()) {
            let grid: Vec<f64> = (1..50).map(|i| i as f64 / 50.0).collect();
            for w in welfare_curve(&m, &grid).unwrap() {
                prop_assert!((w.welfare - (w.profit + w.consumer_surplus)).abs() <= 1e-12);
                prop_assert_eq!(w.shutdown, w.p >= shutdown_probability(&m).p_shutdown);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn coarse_oracle_never_beats_closed_form(m in market_strategy(), p in 0.01f64..0.99) {
            let s = m.with_p(p).unwrap();
            let cf = expected_profit(&closed_form_menu(&s).unwrap(), &s);
            let or = expected_profit(&oracle_menu(&s, 301).unwrap(), &s);
            prop_assert!(cf >= or - 1e-9, "cf={cf} oracle={or}");
        }
    }
}
