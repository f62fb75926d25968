//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Factorial of `n / 2` for a non-negative even `n` given in half units.
fn fact(twice: i32) -> BigInt {
    assert!(twice >= 0 && twice % 2 == 0, "factorial of {twice}/2");
    (1..=twice / 2).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn ratio(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

fn triangle_ok(a: i32, b: i32, c: i32) -> bool {
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// Δ(abc) = (a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!, arguments in half units.
fn delta(a: i32, b: i32, c: i32) -> BigRational {
    ratio(fact(a + b - c) * fact(a - b + c) * fact(-a + b + c), fact(a + b + c + 2))
}

/// An exact value sign·√magnitude.
#[derive(Clone, Debug)]
pub struct SignedRoot {
    pub negative: bool,
    pub square: BigRational,
}

impl SignedRoot {
    pub fn zero() -> Self {
        SignedRoot { negative: false, square: BigRational::zero() }
    }

    pub fn to_f64(&self) -> f64 {
        let v = self.square.to_f64().unwrap().sqrt();
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// Racah's closed form for the 3j symbol, all arguments in half units.
pub fn three_j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> SignedRoot {
    if m1 + m2 + m3 != 0 || !triangle_ok(j1, j2, j3) {
        return SignedRoot::zero();
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return SignedRoot::zero();
        }
    }
    let mut sum = BigRational::zero();
    let mut k = 0;
    loop {
        let args = [k, j3 - j2 + k + m1, j3 - j1 + k - m2, j1 + j2 - j3 - k, j1 - k - m1, j2 - k + m2];
        if args[3] < 0 || args[4] < 0 || args[5] < 0 {
            break;
        }
        if args.iter().all(|a| *a >= 0) {
            let den = args.iter().fold(BigInt::one(), |acc, a| acc * fact(*a));
            let term = ratio(BigInt::one(), den);
            if (k / 2) % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        k += 2;
    }
    let prefactor = delta(j1, j2, j3)
        * ratio(
            fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3),
            BigInt::one(),
        );
    let phase_odd = ((j1 - j2 - m3) / 2).rem_euclid(2) == 1;
    let negative = (sum.is_negative()) != phase_odd && !sum.is_zero();
    SignedRoot { negative, square: prefactor * &sum * &sum }
}

/// Racah's closed form for {a b c; d e f}, all arguments in half units.
pub fn six_j(a: i32, b: i32, c: i32, d: i32, e: i32, f: i32) -> SignedRoot {
    let triads = [(a, b, c), (a, e, f), (d, b, f), (d, e, c)];
    if !triads.iter().all(|&(x, y, z)| triangle_ok(x, y, z)) {
        return SignedRoot::zero();
    }
    let lo = triads.iter().map(|&(x, y, z)| x + y + z).max().unwrap();
    let hi = [a + b + d + e, b + c + e + f, c + a + f + d].into_iter().min().unwrap();
    let mut sum = BigRational::zero();
    let mut t = lo;
    while t <= hi {
        let mut den = BigInt::one();
        for &(x, y, z) in &triads {
            den *= fact(t - x - y - z);
        }
        for s in [a + b + d + e, b + c + e + f, c + a + f + d] {
            den *= fact(s - t);
        }
        let term = ratio(fact(t + 2), den);
        if (t / 2) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        t += 2;
    }
    let pre = triads.iter().fold(BigRational::one(), |acc, &(x, y, z)| acc * delta(x, y, z));
    SignedRoot { negative: sum.is_negative(), square: pre * &sum * &sum }
}

/// Gauss–Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (mid + half * x, half * 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss–Legendre rule over consecutive panel edges.
pub fn composite(edges: &[f64], nodes: usize) -> Vec<(f64, f64)> {
    edges.windows(2).flat_map(|w| gauss_legendre(nodes, w[0], w[1])).collect()
}
