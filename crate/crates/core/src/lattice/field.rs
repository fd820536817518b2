//! Real quadratic fields Q(sqrt D) and their rings of integers Z[omega].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element `a + b*omega` of the ring of integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OInt {
    pub a: i64,
    pub b: i64,
}

impl OInt {
    pub const ZERO: OInt = OInt { a: 0, b: 0 };
    pub const ONE: OInt = OInt { a: 1, b: 0 };
    pub const OMEGA: OInt = OInt { a: 0, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        OInt { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn add(self, o: OInt) -> OInt {
        OInt::new(self.a + o.a, self.b + o.b)
    }

    pub fn sub(self, o: OInt) -> OInt {
        OInt::new(self.a - o.a, self.b - o.b)
    }

    pub fn neg(self) -> OInt {
        OInt::new(-self.a, -self.b)
    }
}

/// `Q(sqrt d)` with integral basis `{1, omega}`; omega is a root of
/// `x^2 - trace*x + norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticField {
    pub d: i64,
    pub omega_trace: i64,
    pub omega_norm: i64,
    /// `(sigma_1(omega), sigma_2(omega))`, with `sigma_1` the larger root.
    pub omega: (f64, f64),
    pub fundamental_unit: OInt,
    /// `(sigma_1(eps), sigma_2(eps))`.
    pub unit_embeddings: (f64, f64),
}

fn is_squarefree(d: i64) -> bool {
    let mut p = 2;
    while p * p <= d {
        if d % (p * p) == 0 {
            return false;
        }
        p += 1;
    }
    true
}

fn isqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    (r * r == n).then_some(r)
}

impl QuadraticField {
    pub fn new(d: i64) -> Result<Self> {
        if d <= 1 || !is_squarefree(d) {
            return Err(Error::Config(format!(
                "real quadratic field needs squarefree D > 1, got {d}"
            )));
        }
        let sd = (d as f64).sqrt();
        let (omega_trace, omega_norm, omega) = if d % 4 == 1 {
            (1, (1 - d) / 4, ((1.0 + sd) / 2.0, (1.0 - sd) / 2.0))
        } else {
            (0, -d, (sd, -sd))
        };
        let mut field = QuadraticField {
            d,
            omega_trace,
            omega_norm,
            omega,
            fundamental_unit: OInt::ONE,
            unit_embeddings: (1.0, 1.0),
        };
        field.fundamental_unit = field.find_fundamental_unit(1_000_000)?;
        field.unit_embeddings = field.embed(field.fundamental_unit);
        Ok(field)
    }

    /// Smallest unit with `sigma_1 > 1`, by increasing omega-coefficient.
    fn find_fundamental_unit(&self, max_b: i64) -> Result<OInt> {
        let t = self.omega_trace as i128;
        let n = self.omega_norm as i128;
        for b in 1..=max_b as i128 {
            let mut best: Option<(f64, OInt)> = None;
            for s in [1i128, -1] {
                // a^2 + t a b + n b^2 = s
                let disc = t * t * b * b - 4 * (n * b * b - s);
                if let Some(r) = isqrt(disc) {
                    for num in [-t * b + r, -t * b - r] {
                        if num % 2 == 0 {
                            let cand = OInt::new((num / 2) as i64, b as i64);
                            let e1 = self.embed(cand).0;
                            if e1 > 1.0 + 1e-12 && best.map_or(true, |(v, _)| e1 < v) {
                                best = Some((e1, cand));
                            }
                        }
                    }
                }
            }
            if let Some((_, u)) = best {
                return Ok(u);
            }
        }
        Err(Error::Budget(format!(
            "no fundamental unit with omega-coefficient <= {max_b} for D = {}",
            self.d
        )))
    }

    pub fn embed(&self, x: OInt) -> (f64, f64) {
        (
            x.a as f64 + x.b as f64 * self.omega.0,
            x.a as f64 + x.b as f64 * self.omega.1,
        )
    }

    pub fn embed_i(&self, x: OInt, i: usize) -> f64 {
        let e = self.embed(x);
        if i == 0 {
            e.0
        } else {
            e.1
        }
    }

    pub fn mul(&self, x: OInt, y: OInt) -> OInt {
        // omega^2 = trace*omega - norm
        let be = x.b * y.b;
        OInt::new(
            x.a * y.a - self.omega_norm * be,
            x.a * y.b + x.b * y.a + self.omega_trace * be,
        )
    }

    pub fn conj(&self, x: OInt) -> OInt {
        OInt::new(x.a + self.omega_trace * x.b, -x.b)
    }

    pub fn norm(&self, x: OInt) -> i64 {
        x.a * x.a + self.omega_trace * x.a * x.b + self.omega_norm * x.b * x.b
    }

    pub fn is_unit(&self, x: OInt) -> bool {
        self.norm(x).abs() == 1
    }

    /// `x / y` when it lies in the ring.
    pub fn exact_div(&self, x: OInt, y: OInt) -> Option<OInt> {
        let n = self.norm(y);
        if n == 0 {
            return None;
        }
        let p = self.mul(x, self.conj(y));
        (p.a % n == 0 && p.b % n == 0).then(|| OInt::new(p.a / n, p.b / n))
    }

    pub fn pow(&self, x: OInt, m: u32) -> OInt {
        (0..m).fold(OInt::ONE, |acc, _| self.mul(acc, x))
    }

    /// All ring elements with `|sigma_i(x)| <= bound` in both embeddings.
    pub fn elements_in_box(&self, bound: f64) -> Vec<OInt> {
        let gap = (self.omega.0 - self.omega.1).abs();
        let bmax = (2.0 * bound / gap).floor() as i64;
        let mut out = Vec::new();
        for b in -bmax..=bmax {
            let bf = b as f64;
            let lo = (-bound - bf * self.omega.0).max(-bound - bf * self.omega.1);
            let hi = (bound - bf * self.omega.0).min(bound - bf * self.omega.1);
            if lo > hi {
                continue;
            }
            for a in lo.ceil() as i64..=hi.floor() as i64 {
                out.push(OInt::new(a, b));
            }
        }
        out
    }

    /// Nearest ring element to the point `(x1, x2)` of R^2 in the
    /// Euclidean norm, via rounding in the basis `{(1,1), (w1,w2)}` and a
    /// neighbour search.
    pub fn nearest_element(&self, x1: f64, x2: f64) -> OInt {
        let b = (x1 - x2) / (self.omega.0 - self.omega.1);
        let a = x1 - b * self.omega.0;
        let (a0, b0) = (a.round() as i64, b.round() as i64);
        let mut best = OInt::new(a0, b0);
        let mut best_d = f64::INFINITY;
        for da in -1..=1 {
            for db in -1..=1 {
                let c = OInt::new(a0 + da, b0 + db);
                let (e1, e2) = self.embed(c);
                let dist = (x1 - e1).powi(2) + (x2 - e2).powi(2);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
        }
        best
    }
}
