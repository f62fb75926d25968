//! Wigner 3j and 6j symbols from the Racah sum formulas.
//!
//! Angular momenta are carried as [`Half`], i.e. twice their value, so both
//! integer and half-integer quantum numbers are exact. Factorials enter
//! through a log-factorial table; the alternating Racah sum is accumulated
//! relative to its largest term with Neumaier compensation.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::OnceLock;

/// A half-integer quantum number stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Half(i32);

impl Half {
    pub const ZERO: Half = Half(0);

    /// Integer value `n`.
    pub const fn int(n: i32) -> Self {
        Half(2 * n)
    }

    /// The value `n / 2`.
    pub const fn halves(n: i32) -> Self {
        Half(n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        Half(self.0.abs())
    }

    /// Multiplicity `2j + 1`.
    pub const fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// `-j, -j+1, ..., j`.
    pub fn projections(self) -> impl Iterator<Item = Half> {
        let j = self.0;
        (0..=j).map(move |k| Half(-j + 2 * k))
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, rhs: Half) -> Half {
        Half(self.0 + rhs.0)
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, rhs: Half) -> Half {
        Half(self.0 - rhs.0)
    }
}

impl Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        Half(-self.0)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

const LOG_FACTORIAL_LEN: usize = 512;

/// ln n!, from the directly multiplied factorial while it fits in f64.
fn log_factorial(n: i32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LOG_FACTORIAL_LEN);
        let mut product = 1.0f64;
        t.push(0.0);
        for k in 1..LOG_FACTORIAL_LEN {
            if k <= 170 {
                product *= k as f64;
                t.push(product.ln());
            } else {
                let prev = t[k - 1];
                t.push(prev + (k as f64).ln());
            }
        }
        t
    });
    debug_assert!(n >= 0);
    table[n as usize]
}

/// Double-double number hi + lo for the Racah series.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let v = s - a;
        Dd { hi: s, lo: (a - (s - v)) + (b - v) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        Dd::two_sum(s.hi, lo)
    }

    fn mul(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        Dd::two_sum(p, e)
    }

    fn div(self, b: f64) -> Dd {
        let q = self.hi / b;
        let p = q * b;
        let e = q.mul_add(b, -p);
        let r = (self.hi - p - e + self.lo) / b;
        Dd::two_sum(q, r)
    }
}

/// Σ_{k=k_min}^{k_max} (−1)^{k−k_min} t_k / t_{k_min}, given the exact
/// integer ratios t_{k+1}/t_k = num/den from `step(k)`.
fn alternating_series(k_min: i32, k_max: i32, step: impl Fn(i32) -> (f64, f64)) -> f64 {
    let mut term = Dd { hi: 1.0, lo: 0.0 };
    let mut sum = term;
    for k in k_min..k_max {
        let (num, den) = step(k);
        term = term.mul(-num).div(den);
        sum = sum.add(term);
    }
    sum.hi + sum.lo
}

/// `(-1)^k` for an integer `k`.
fn parity(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Triangle condition on doubled momenta, including integer perimeter.
fn triangle(a: i32, b: i32, c: i32) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// log Δ(abc) = ½ ln[(a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!] on doubled values.
fn log_triangle_coefficient(a: i32, b: i32, c: i32) -> f64 {
    0.5 * (log_factorial((a + b - c) / 2) + log_factorial((a - b + c) / 2)
        + log_factorial((-a + b + c) / 2)
        - log_factorial((a + b + c) / 2 + 1))
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Invalid arguments give 0.
pub fn wigner_3j(j1: Half, j2: Half, j3: Half, m1: Half, m2: Half, m3: Half) -> f64 {
    let (dj1, dj2, dj3) = (j1.twice(), j2.twice(), j3.twice());
    let (dm1, dm2, dm3) = (m1.twice(), m2.twice(), m3.twice());
    if dm1 + dm2 + dm3 != 0 || !triangle(dj1, dj2, dj3) {
        return 0.0;
    }
    if dm1.abs() > dj1 || dm2.abs() > dj2 || dm3.abs() > dj3 {
        return 0.0;
    }
    if (dj1 + dm1) % 2 != 0 || (dj2 + dm2) % 2 != 0 || (dj3 + dm3) % 2 != 0 {
        return 0.0;
    }
    // (j1 j2 j3; 0 0 0) vanishes for odd perimeter
    if dm1 == 0 && dm2 == 0 && dm3 == 0 && ((dj1 + dj2 + dj3) / 2) % 2 != 0 {
        return 0.0;
    }

    let h = |x: i32| x / 2;
    let prefactor = log_triangle_coefficient(dj1, dj2, dj3)
        + 0.5
            * (log_factorial(h(dj1 + dm1))
                + log_factorial(h(dj1 - dm1))
                + log_factorial(h(dj2 + dm2))
                + log_factorial(h(dj2 - dm2))
                + log_factorial(h(dj3 + dm3))
                + log_factorial(h(dj3 - dm3)));

    // k runs over integers keeping all factorial arguments non-negative
    let a1 = h(dj3 - dj2 + dm1); // j3 - j2 + m1
    let a2 = h(dj3 - dj1 - dm2); // j3 - j1 - m2
    let b1 = h(dj1 + dj2 - dj3); // j1 + j2 - j3
    let b2 = h(dj1 - dm1); // j1 - m1
    let b3 = h(dj2 + dm2); // j2 + m2
    let k_min = 0.max(-a1).max(-a2);
    let k_max = b1.min(b2).min(b3);
    if k_min > k_max {
        return 0.0;
    }
    let first = -(log_factorial(k_min)
        + log_factorial(a1 + k_min)
        + log_factorial(a2 + k_min)
        + log_factorial(b1 - k_min)
        + log_factorial(b2 - k_min)
        + log_factorial(b3 - k_min));
    let series = alternating_series(k_min, k_max, |k| {
        (f64::from((b1 - k) * (b2 - k) * (b3 - k)), f64::from((k + 1) * (a1 + k + 1) * (a2 + k + 1)))
    });
    if series == 0.0 {
        return 0.0;
    }
    // phase (-1)^{j1 - j2 - m3}
    let phase = parity(h(dj1 - dj2 - dm3));
    phase * parity(k_min) * series * (prefactor + first).exp()
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Invalid triads give 0.
pub fn wigner_6j(j1: Half, j2: Half, j3: Half, j4: Half, j5: Half, j6: Half) -> f64 {
    let (a, b, c) = (j1.twice(), j2.twice(), j3.twice());
    let (d, e, f) = (j4.twice(), j5.twice(), j6.twice());
    if !(triangle(a, b, c) && triangle(a, e, f) && triangle(d, b, f) && triangle(d, e, c)) {
        return 0.0;
    }
    let prefactor = log_triangle_coefficient(a, b, c)
        + log_triangle_coefficient(a, e, f)
        + log_triangle_coefficient(d, b, f)
        + log_triangle_coefficient(d, e, c);

    let h = |x: i32| x / 2;
    let t1 = h(a + b + c);
    let t2 = h(a + e + f);
    let t3 = h(d + b + f);
    let t4 = h(d + e + c);
    let p1 = h(a + b + d + e);
    let p2 = h(a + c + d + f);
    let p3 = h(b + c + e + f);
    let k_min = t1.max(t2).max(t3).max(t4);
    let k_max = p1.min(p2).min(p3);
    if k_min > k_max {
        return 0.0;
    }
    let first = log_factorial(k_min + 1)
        - (log_factorial(k_min - t1)
            + log_factorial(k_min - t2)
            + log_factorial(k_min - t3)
            + log_factorial(k_min - t4)
            + log_factorial(p1 - k_min)
            + log_factorial(p2 - k_min)
            + log_factorial(p3 - k_min));
    let series = alternating_series(k_min, k_max, |k| {
        let num = f64::from(k + 2) * f64::from((p1 - k) * (p2 - k) * (p3 - k));
        let den = f64::from((k + 1 - t1) * (k + 1 - t2)) * f64::from((k + 1 - t3) * (k + 1 - t4));
        (num, den)
    });
    if series == 0.0 {
        return 0.0;
    }
    parity(k_min) * series * (prefactor + first).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn i(n: i32) -> Half {
        Half::int(n)
    }

    #[test]
    fn three_j_closed_form_coupling_to_zero() {
        // (j j 0; m -m 0) = (-1)^{j-m}/sqrt(2j+1)
        for tj in 0..=12 {
            let j = Half::halves(tj);
            for m in j.projections() {
                let expected = parity((j - m).twice() / 2) / f64::from(j.multiplicity()).sqrt();
                assert_relative_eq!(
                    wigner_3j(j, j, Half::ZERO, m, -m, Half::ZERO),
                    expected,
                    max_relative = 1e-13
                );
            }
        }
        assert_relative_eq!(
            wigner_3j(i(1), i(1), i(0), i(1), i(-1), i(0)),
            1.0 / 3f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn three_j_selection_rules() {
        assert_eq!(wigner_3j(i(1), i(2), i(4), i(0), i(0), i(0)), 0.0);
        assert_eq!(wigner_3j(i(1), i(1), i(1), i(1), i(0), i(0)), 0.0);
        assert_eq!(wigner_3j(i(1), i(1), i(2), i(2), i(-2), i(0)), 0.0);
        assert_eq!(wigner_3j(i(1), i(1), i(1), i(0), i(0), i(0)), 0.0);
    }

    #[test]
    fn three_j_known_values() {
        assert_relative_eq!(
            wigner_3j(i(2), i(2), i(2), i(0), i(0), i(0)),
            -(2.0f64 / 35.0).sqrt(),
            max_relative = 1e-13
        );
        // (1/2 1/2 1; 1/2 -1/2 0) = 1/sqrt(6)
        assert_relative_eq!(
            wigner_3j(
                Half::halves(1),
                Half::halves(1),
                i(1),
                Half::halves(1),
                Half::halves(-1),
                i(0)
            ),
            1.0 / 6f64.sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn six_j_closed_form_with_zero() {
        // {j j 0; j' j' k} = (-1)^{j+j'+k}/sqrt((2j+1)(2j'+1))
        for tj in 0..=8 {
            for tjp in 0..=8 {
                let (j, jp) = (Half::halves(tj), Half::halves(tjp));
                let mut tk = (tj - tjp).abs();
                while tk <= tj + tjp {
                    let k = Half::halves(tk);
                    let expected = parity((j + jp + k).twice() / 2)
                        / (f64::from(j.multiplicity()) * f64::from(jp.multiplicity())).sqrt();
                    assert_relative_eq!(
                        wigner_6j(j, j, Half::ZERO, jp, jp, k),
                        expected,
                        max_relative = 1e-13
                    );
                    tk += 2;
                }
            }
        }
    }

    #[test]
    fn six_j_known_and_invalid() {
        assert_relative_eq!(wigner_6j(i(1), i(1), i(1), i(1), i(1), i(1)), 1.0 / 6.0, max_relative = 1e-13);
        assert_eq!(wigner_6j(i(1), i(1), i(3), i(1), i(1), i(1)), 0.0);
    }

    #[test]
    fn half_display_and_projections() {
        assert_eq!(Half::halves(5).to_string(), "5/2");
        assert_eq!(Half::int(3).to_string(), "3");
        assert_eq!(Half::halves(3).projections().count(), 4);
    }
}
