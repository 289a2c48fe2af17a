//! CSV tables. Numbers use Rust's shortest round-trip decimal form, switching to
//! exponent notation below 1e-5 and from 1e16 in magnitude.

pub const BREACH_HEADER: [&str; 3] = ["interval", "success_prob", "failure_prob"];
pub const DLC_HEADER: [&str; 3] = ["interval", "hinf_norm", "gains"];
pub const MENU_HEADER: [&str; 6] = ["variant", "q_low", "t_low", "q_high", "t_high", "profit"];
pub const WELFARE_HEADER: [&str; 6] = ["p", "profit", "consumer_surplus", "welfare", "welfare_eq21", "shutdown"];
pub const INSURANCE_MENU_HEADER: [&str; 4] = ["type", "alpha_attack", "alpha_premium", "expected_profit_share"];
pub const COVERAGE_HEADER: [&str; 4] = ["type", "premium_rate", "beta", "kkt_residual"];

pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Gain vectors are stored in one cell, separated by `;`.
pub fn joined(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

/// Renders a header and rows as CSV bytes with `\n` line endings.
pub fn render<const N: usize>(header: [&str; N], rows: &[[String; N]]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}
