//! Mobilities f and the matching entropy densities G with G'' = 1/f,
//! normalized by G(1) = G'(1) = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spectral::NodalField;

/// Absolute tolerance for the regularized entropy quadratures.
pub const ENTROPY_QUAD_TOL: f64 = 1e-10;

// Below this distance to n = 1 or n = 2 the limiting closed form is used.
const BRANCH_EPS: f64 = 1e-9;

/// f_ε(s) = s₊ⁿ + ε
pub fn f_eps(s: f64, n: f64, eps: f64) -> f64 {
    if s > 0.0 {
        s.powf(n) + eps
    } else {
        eps
    }
}

/// n s₊^{n−1}; at s = 0 with n = 1 the limit value 1 is used.
pub fn f_eps_prime(s: f64, n: f64) -> f64 {
    if s > 0.0 {
        n * s.powf(n - 1.0)
    } else if s == 0.0 && n == 1.0 {
        1.0
    } else {
        0.0
    }
}

/// f_δ(s) = s^{3+n} / (δ sⁿ + s³), continuous at 0 with value 0.
pub fn f_delta(s: f64, n: f64, delta: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain(format!("f_delta needs s ≥ 0, got {s}")));
    }
    Ok(f_delta_unchecked(s, n, delta))
}

fn f_delta_unchecked(s: f64, n: f64, delta: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    // s^{3+n}/(δ sⁿ + s³) = sⁿ / (δ s^{n−3} + 1)
    s.powf(n) / (delta * s.powf(n - 3.0) + 1.0)
}

/// f_δ'(s) = (3δ s^{2+2n} + n s^{5+n}) / (δ sⁿ + s³)².
pub fn f_delta_prime(s: f64, n: f64, delta: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::Domain(format!("f_delta needs s ≥ 0, got {s}")));
    }
    Ok(f_delta_prime_unchecked(s, n, delta))
}

fn f_delta_prime_unchecked(s: f64, n: f64, delta: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    // Divide numerator and denominator by s^{6}.
    let r = delta * s.powf(n - 3.0);
    let num = 3.0 * r * s.powf(n - 1.0) + n * s.powf(n - 1.0);
    num / ((r + 1.0) * (r + 1.0))
}

/// Closed-form entropy for f(s) = sⁿ:
///
/// ```text
/// G(s) = s·E(1−n, ln s) − E(2−n, ln s),   E(c, L) = (e^{cL} − 1)/c,  E(0, L) = L.
/// ```
///
/// This covers the n = 1, 1 < n < 2, n = 2 and n > 2 cases in one expression
/// without the 1/(n−1) and 1/(2−n) cancellations of the separate formulas.
/// Exponents within 1e−9 of 1 or 2 use the limiting case exactly.
pub fn g_closed(s: f64, n: f64) -> Result<f64> {
    if n < 1.0 || !n.is_finite() {
        return Err(Error::Config(format!("mobility exponent must be ≥ 1, got {n}")));
    }
    let near_two = (n - 2.0).abs() < BRANCH_EPS;
    if s < 0.0 || (s == 0.0 && (near_two || n > 2.0)) {
        return Err(Error::Domain(format!("G undefined at s = {s} for n = {n}")));
    }
    if s == 0.0 {
        return Ok(1.0 / (2.0 - n));
    }
    let snap = |c: f64| if c.abs() < BRANCH_EPS { 0.0 } else { c };
    let e = |c: f64, l: f64| if c == 0.0 { l } else { (c * l).exp_m1() / c };
    let l = s.ln();
    Ok(s * e(snap(1.0 - n), l) - e(snap(2.0 - n), l))
}

/// Which mobility closes the flux f(u) ∂_x I(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    PowerEps,
    BertozziPugh,
    /// f ≡ 1; turns the step into a linear problem. Debug and validation only.
    Constant,
}

/// A mobility together with its entropy family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropySpec {
    PowerEps { n: f64, eps: f64 },
    BertozziPugh { n: f64, delta: f64 },
    Constant,
}

impl EntropySpec {
    pub fn power(n: f64, eps: f64) -> Self {
        EntropySpec::PowerEps { n, eps }
    }

    pub fn bertozzi_pugh(n: f64, delta: f64) -> Self {
        EntropySpec::BertozziPugh { n, delta }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            EntropySpec::PowerEps { n, .. } | EntropySpec::BertozziPugh { n, .. } => Some(n),
            EntropySpec::Constant => None,
        }
    }

    /// Mobility on all reals; the δ-family is evaluated at s₊.
    pub fn f(&self, s: f64) -> f64 {
        match *self {
            EntropySpec::PowerEps { n, eps } => f_eps(s, n, eps),
            EntropySpec::BertozziPugh { n, delta } => f_delta_unchecked(s.max(0.0), n, delta),
            EntropySpec::Constant => 1.0,
        }
    }

    /// Derivative of [`EntropySpec::f`]; zero where the δ-family is clamped.
    pub fn f_prime(&self, s: f64) -> f64 {
        match *self {
            EntropySpec::PowerEps { n, .. } => f_eps_prime(s, n),
            EntropySpec::BertozziPugh { n, delta } => {
                if s > 0.0 {
                    f_delta_prime_unchecked(s, n, delta)
                } else {
                    0.0
                }
            }
            EntropySpec::Constant => 0.0,
        }
    }

    /// G''(s) = 1/f(s); infinite where f vanishes.
    pub fn g_second(&self, s: f64) -> f64 {
        match *self {
            EntropySpec::BertozziPugh { n, delta } if s > 0.0 => {
                delta / (s * s * s) + s.powf(-n)
            }
            _ => 1.0 / self.f(s),
        }
    }

    fn domain_ok(&self, s: f64) -> bool {
        match *self {
            EntropySpec::PowerEps { eps, .. } if eps > 0.0 => true,
            EntropySpec::Constant => true,
            EntropySpec::PowerEps { n, .. } => s > 0.0 || (s == 0.0 && n < 2.0 - BRANCH_EPS),
            EntropySpec::BertozziPugh { n, delta } => {
                s > 0.0 || (s == 0.0 && delta == 0.0 && n < 2.0 - BRANCH_EPS)
            }
        }
    }

    /// G'(s) = ∫_1^s G''(t) dt.
    pub fn g_prime(&self, s: f64) -> Result<f64> {
        if let EntropySpec::Constant = self {
            return Ok(s - 1.0);
        }
        if !self.domain_ok(s) || (s == 0.0 && !self.g_second(0.0).is_finite()) {
            return Err(Error::Domain(format!("G' undefined at s = {s}")));
        }
        self.integrate_split(|t| self.g_second(t), s)
    }

    /// G(s) = ∫_1^s (s − t) G''(t) dt. Closed form when unregularized.
    pub fn g(&self, s: f64) -> Result<f64> {
        match *self {
            EntropySpec::Constant => Ok(0.5 * (s - 1.0) * (s - 1.0)),
            EntropySpec::PowerEps { n, eps: 0.0 } => g_closed(s, n),
            EntropySpec::BertozziPugh { n, delta: 0.0 } => g_closed(s, n),
            _ => g_regularized(s, self),
        }
    }

    // ∫_1^s h, split at t = 0 where s₊ⁿ has a kink.
    fn integrate_split(&self, h: impl Fn(f64) -> f64, s: f64) -> Result<f64> {
        if s < 0.0 {
            let a = quadrature::integrate(&h, 1.0, 0.0, 0.5 * ENTROPY_QUAD_TOL)?;
            let b = quadrature::integrate(&h, 0.0, s, 0.5 * ENTROPY_QUAD_TOL)?;
            Ok(a + b)
        } else {
            quadrature::integrate(h, 1.0, s, ENTROPY_QUAD_TOL)
        }
    }
}

/// G via adaptive quadrature of the reduced integral ∫_1^s (s − t) G''(t) dt.
pub fn g_regularized(s: f64, spec: &EntropySpec) -> Result<f64> {
    if !spec.domain_ok(s) {
        return Err(Error::Domain(format!("entropy undefined at s = {s}")));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    spec.integrate_split(|t| (s - t) * spec.g_second(t), s)
}

/// Midpoint quadrature of ∫_Ω G(u) dx.
pub fn entropy_integral(u: &NodalField, spec: &EntropySpec) -> Result<f64> {
    let mut total = 0.0;
    for (node, &value) in u.values().iter().enumerate() {
        match spec.g(value) {
            Ok(g) => total += g,
            Err(Error::Domain(_)) => return Err(Error::EntropyDomain { node, value }),
            Err(e) => return Err(e),
        }
    }
    Ok(total / u.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_eps_examples() {
        assert_eq!(f_eps(-1.0, 3.0, 0.01), 0.01);
        assert!((f_eps(2.0, 3.0, 0.01) - 8.01).abs() < 1e-15);
        let h = 1e-6;
        let fd = (f_eps(2.0 + h, 3.0, 0.01) - f_eps(2.0 - h, 3.0, 0.01)) / (2.0 * h);
        assert!((f_eps_prime(2.0, 3.0) - 12.0).abs() < 1e-12);
        assert!((fd - 12.0).abs() < 1e-6);
        assert_eq!(f_eps_prime(-0.5, 3.0), 0.0);
        assert_eq!(f_eps_prime(0.0, 1.0), 1.0);
    }

    #[test]
    fn f_delta_examples() {
        let v = f_delta(1.0, 1.5, 0.1).unwrap();
        assert!((v - 1.0 / 1.1).abs() < 1e-15);
        assert_eq!(f_delta(0.0, 1.5, 0.1).unwrap(), 0.0);
        assert!(f_delta(-0.1, 1.5, 0.1).is_err());
        // direct formula
        let (s, n, d) = (0.7_f64, 1.3, 0.05);
        let direct = s.powf(3.0 + n) / (d * s.powf(n) + s.powi(3));
        assert!((f_delta(s, n, d).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn f_delta_prime_matches_finite_differences() {
        for &(s, n, d) in &[(0.3, 1.5, 0.1), (1.7, 1.0, 0.01), (0.05, 1.9, 0.2)] {
            let h = 1e-6 * s;
            let fd = (f_delta(s + h, n, d).unwrap() - f_delta(s - h, n, d).unwrap()) / (2.0 * h);
            let an = f_delta_prime(s, n, d).unwrap();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "s={s} fd={fd} an={an}");
        }
    }

    #[test]
    fn closed_entropy_examples() {
        assert_eq!(g_closed(1.0, 2.0).unwrap(), 0.0);
        assert!((g_closed(2.0, 3.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((g_closed(std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(g_closed(0.0, 3.0).is_err());
        assert!(g_closed(-0.1, 1.5).is_err());
        assert!(g_closed(0.5, 0.5).is_err());
    }

    #[test]
    fn closed_entropy_matches_double_integral() {
        // ∫_1^s (s − t) t^{−n} dt by quadrature
        for &n in &[1.0, 1.5, 2.0, 3.0, 4.5] {
            for &s in &[0.3, 0.9, 2.0, 5.0] {
                let q = quadrature::integrate(|t: f64| (s - t) * t.powf(-n), 1.0, s, 1e-13).unwrap();
                let c = g_closed(s, n).unwrap();
                assert!((q - c).abs() < 1e-11, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn closed_entropy_continuous_across_branches() {
        for &s in &[0.4, 1.7] {
            let at2 = g_closed(s, 2.0).unwrap();
            assert!((g_closed(s, 2.0 + 1e-6).unwrap() - at2).abs() < 1e-5);
            assert!((g_closed(s, 2.0 - 1e-6).unwrap() - at2).abs() < 1e-5);
            let at1 = g_closed(s, 1.0).unwrap();
            assert!((g_closed(s, 1.0 + 1e-6).unwrap() - at1).abs() < 1e-5);
        }
    }

    #[test]
    fn regularized_entropy_vanishes_at_one() {
        for spec in [
            EntropySpec::power(3.0, 1e-3),
            EntropySpec::bertozzi_pugh(1.5, 0.1),
            EntropySpec::Constant,
        ] {
            assert_eq!(spec.g(1.0).unwrap(), 0.0);
            assert!(spec.g_prime(1.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn delta_split_identity() {
        let (n, delta, s) = (1.5, 0.2, 2.0);
        let spec = EntropySpec::bertozzi_pugh(n, delta);
        let quad = spec.g(s).unwrap();
        let split = delta * (1.0 / (2.0 * s) + s / 2.0 - 1.0) + g_closed(s, n).unwrap();
        assert!((quad - split).abs() < 1e-8);
    }

    #[test]
    fn eps_entropy_below_limit_entropy() {
        let s_grid = [0.05, 0.2, 0.5, 0.9, 1.3, 2.0, 4.0];
        for &s in &s_grid {
            let g0 = g_closed(s, 3.0).unwrap();
            let g1 = EntropySpec::power(3.0, 1e-3).g(s).unwrap();
            let g2 = EntropySpec::power(3.0, 1e-2).g(s).unwrap();
            assert!(g1 <= g0 + 1e-10 && g2 <= g1 + 1e-10, "s={s}");
        }
    }

    #[test]
    fn g_second_is_inverse_mobility() {
        let spec = EntropySpec::power(3.0, 1e-2);
        for &s in &[-0.5, 0.2, 0.8, 1.9] {
            let h = 1e-4;
            let fd = (spec.g_prime(s + h).unwrap() - spec.g_prime(s - h).unwrap()) / (2.0 * h);
            assert!((fd - 1.0 / spec.f(s)).abs() < 1e-6 * (1.0 / spec.f(s)), "s={s}");
        }
    }

    #[test]
    fn entropy_integral_examples() {
        let spec = EntropySpec::power(3.0, 0.0);
        let one = NodalField::new(vec![1.0; 8]).unwrap();
        assert_eq!(entropy_integral(&one, &spec).unwrap(), 0.0);
        let two = NodalField::new(vec![2.0; 8]).unwrap();
        assert!((entropy_integral(&two, &spec).unwrap() - 0.25).abs() < 1e-15);
        let bad = NodalField::new(vec![1.0, 0.5, -0.1, 2.0]).unwrap();
        match entropy_integral(&bad, &spec) {
            Err(Error::EntropyDomain { node, value }) => {
                assert_eq!(node, 2);
                assert_eq!(value, -0.1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jensen_for_entropy_integral() {
        let spec = EntropySpec::power(3.0, 1e-3);
        let u = NodalField::new(vec![0.4, 1.2, 2.5, 0.9, 1.7]).unwrap();
        let mean = u.integral();
        let flat = NodalField::new(vec![mean; 5]).unwrap();
        assert!(entropy_integral(&flat, &spec).unwrap() <= entropy_integral(&u, &spec).unwrap());
    }
}
