//! Log-space helpers. Photon counts reach several hundred, so factorials and
//! powers are carried as logarithms until the last moment.

use statrs::function::factorial::ln_factorial as ln_fact_u64;

pub fn ln_factorial(n: usize) -> f64 {
    ln_fact_u64(n as u64)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `k * ln x`, with the convention `0 * ln 0 = 0`.
pub fn xlogy(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * x.ln()
    }
}

/// Stable `ln(sum exp(v))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln( sum_{n in start, start+step, ...} x^n / n! )` for `x >= 0`, carried
/// out until the terms are negligible against the running total.
pub fn ln_residue_series(x: f64, start: usize, step: usize) -> f64 {
    assert!(step > 0);
    if x == 0.0 {
        return if start == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lx = x.ln();
    let term = |n: usize| n as f64 * lx - ln_factorial(n);
    // the summand peaks near n = x; go well past it
    let stop = (x + 12.0 * (x + 1.0).sqrt() + 40.0).ceil() as usize;
    let mut terms = Vec::new();
    let mut n = start;
    while n <= stop.max(start) {
        terms.push(term(n));
        n += step;
    }
    log_sum_exp(&terms)
}

/// Double-double number `hi + lo` (about 32 significant digits), built from
/// the usual error-free transforms. Only what the normalization identity
/// check needs: add, subtract, multiply, divide.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(a: f64, b: f64) -> Self {
        let (hi, lo) = quick_two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        Dd::renorm(p, e)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;
    fn add(self, y: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, y.hi);
        let (t, f) = two_sum(self.lo, y.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl std::ops::Sub for Dd {
    type Output = Dd;
    fn sub(self, y: Dd) -> Dd {
        self + (-y)
    }
}

impl std::ops::Mul for Dd {
    type Output = Dd;
    fn mul(self, y: Dd) -> Dd {
        let p = self.hi * y.hi;
        let e = self.hi.mul_add(y.hi, -p) + (self.hi * y.lo + self.lo * y.hi);
        Dd::renorm(p, e)
    }
}

impl std::ops::Div for Dd {
    type Output = Dd;
    fn div(self, y: Dd) -> Dd {
        let q1 = self.hi / y.hi;
        let r = self - y.mul_f64(q1);
        let q2 = r.hi / y.hi;
        let r = r - y.mul_f64(q2);
        let q3 = r.hi / y.hi;
        Dd::renorm(q1, q2) + Dd::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_series_full_is_exp() {
        for &x in &[0.3, 2.0, 17.5, 150.0] {
            assert!((ln_residue_series(x, 0, 1) - x).abs() < 1e-12 * x.max(1.0));
        }
    }

    #[test]
    fn residue_series_even_odd_is_cosh_sinh() {
        let x: f64 = 1.7;
        assert!((ln_residue_series(x, 0, 2).exp() - x.cosh()).abs() < 1e-14);
        assert!((ln_residue_series(x, 1, 2).exp() - x.sinh()).abs() < 1e-14);
    }

    #[test]
    fn binomial_small() {
        assert!((ln_binomial(10, 3).exp() - 120.0).abs() < 1e-10);
    }

    #[test]
    fn dd_keeps_tiny_increments() {
        let tiny = 2f64.powi(-80);
        let x = Dd::ONE + Dd::from_f64(tiny);
        assert_eq!((x - Dd::ONE).hi, tiny);
    }

    #[test]
    fn dd_division_round_trip() {
        let three = Dd::from_f64(3.0);
        let third = Dd::ONE / three;
        assert!(((third * three) - Dd::ONE).abs().hi < 1e-31);
        // 1/3 to 32 digits: hi is the f64 nearest 1/3, lo carries the rest
        assert!((third.hi - 1.0 / 3.0).abs() == 0.0);
        assert!(third.lo != 0.0);
        let seventh = Dd::ONE / Dd::from_f64(7.0);
        assert!((seventh.mul_f64(7.0) - Dd::ONE).abs().hi < 1e-31);
    }

    #[test]
    fn lse_handles_neg_inf() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
