//! Product-formula orders, stage counts and the Suzuki recursion.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Order of a product formula: 1, or an even number 2k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Order(u32);

impl Order {
    pub const FIRST: Order = Order(1);
    pub const SECOND: Order = Order(2);
    pub const FOURTH: Order = Order(4);

    pub fn new(n: u32) -> Result<Self> {
        if n == 1 || (n >= 2 && n % 2 == 0 && n <= 20) {
            Ok(Order(n))
        } else {
            Err(Error::InvalidOrder(n))
        }
    }

    /// Requires an even order.
    pub fn even(n: u32) -> Result<Self> {
        match Order::new(n)? {
            Order(1) => Err(Error::InvalidOrder(1)),
            o => Ok(o),
        }
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn is_first(self) -> bool {
        self.0 == 1
    }

    /// `k` for order `2k`; 0 for first order.
    pub fn k(self) -> u32 {
        self.0 / 2
    }

    /// Number of stages: `2·5^{k-1}` for order `2k`, 1 for first order.
    pub fn upsilon(self) -> usize {
        if self.is_first() {
            1
        } else {
            2 * 5usize.pow(self.k() - 1)
        }
    }

    /// Exponent `2k+1` of the leading error term (2 for first order).
    pub fn error_exponent(self) -> i32 {
        if self.is_first() {
            2
        } else {
            self.0 as i32 + 1
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Suzuki coefficient `u_k = 1/(4 − 4^{1/(2k−1)})`.
pub fn suzuki_u(k: u32) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * k as f64 - 1.0)))
}

/// Times of the second-order stages that make up an order-2k formula at
/// time `t`, in application order. Order 2 gives `[t]`.
pub fn second_order_stage_times(order: Order, t: f64) -> Vec<f64> {
    assert!(!order.is_first(), "stage times are defined for even orders");
    fn rec(k: u32, t: f64, out: &mut Vec<f64>) {
        if k == 1 {
            out.push(t);
            return;
        }
        let u = suzuki_u(k);
        rec(k - 1, u * t, out);
        rec(k - 1, u * t, out);
        rec(k - 1, (1.0 - 4.0 * u) * t, out);
        rec(k - 1, u * t, out);
        rec(k - 1, u * t, out);
    }
    let mut out = Vec::with_capacity(order.upsilon() / 2);
    rec(order.k(), t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsilon_values() {
        assert_eq!(Order::FIRST.upsilon(), 1);
        assert_eq!(Order::SECOND.upsilon(), 2);
        assert_eq!(Order::FOURTH.upsilon(), 10);
        assert_eq!(Order::new(6).unwrap().upsilon(), 50);
    }

    #[test]
    fn rejects_odd_orders() {
        assert!(Order::new(3).is_err());
        assert!(Order::new(0).is_err());
        assert!(Order::even(1).is_err());
    }

    #[test]
    fn suzuki_u2() {
        assert!((suzuki_u(2) - 0.414490).abs() < 1e-6);
        assert!(1.0 - 4.0 * suzuki_u(2) < 0.0);
    }

    #[test]
    fn stage_times_telescope() {
        for n in [2, 4, 6] {
            let o = Order::new(n).unwrap();
            let s = second_order_stage_times(o, 0.7);
            assert_eq!(s.len(), o.upsilon() / 2);
            assert!((s.iter().sum::<f64>() - 0.7).abs() < 1e-13);
        }
    }
}
