//! Chebyshev polynomials by three-term recurrence over a small family of
//! scalar types: plain reals, complex numbers, derivative jets and jets
//! carrying a separate binary exponent for arguments far outside the band.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Which seed pair the recurrence p_{m+1} = 2x·p_m − p_{m−1} starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChebyshevKind {
    /// T: T₀ = 1, T₁ = x.
    First,
    /// U: U₀ = 1, U₁ = 2x.
    Second,
    /// V: V₀ = 1, V₁ = 2x − 1.
    Third,
    /// W: W₀ = 1, W₁ = 2x + 1.
    Fourth,
}

pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Complex64 {
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// p_m(x) for the requested kind. Negative orders are not representable;
/// callers that need U_{−1} = 0 handle it themselves.
pub fn cheb_eval<S: Scalar>(kind: ChebyshevKind, m: usize, x: S) -> S {
    let one = S::from_f64(1.0);
    if m == 0 {
        return one;
    }
    let two_x = x.scale(2.0);
    let p1 = match kind {
        ChebyshevKind::First => x,
        ChebyshevKind::Second => two_x,
        ChebyshevKind::Third => two_x - one,
        ChebyshevKind::Fourth => two_x + one,
    };
    let (mut prev, mut cur) = (one, p1);
    for _ in 1..m {
        let next = two_x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn cheb_t<S: Scalar>(m: usize, x: S) -> S {
    cheb_eval(ChebyshevKind::First, m, x)
}

pub fn cheb_u<S: Scalar>(m: usize, x: S) -> S {
    cheb_eval(ChebyshevKind::Second, m, x)
}

/// U_m with the convention U_{−1} = 0.
pub fn cheb_u_signed<S: Scalar>(m: i64, x: S) -> S {
    if m < 0 {
        S::from_f64(0.0)
    } else {
        cheb_u(m as usize, x)
    }
}

pub fn cheb_v<S: Scalar>(m: usize, x: S) -> S {
    cheb_eval(ChebyshevKind::Third, m, x)
}

pub fn cheb_w<S: Scalar>(m: usize, x: S) -> S {
    cheb_eval(ChebyshevKind::Fourth, m, x)
}

/// A value together with its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            ..Default::default()
        }
    }

    /// The independent variable at x.
    pub fn variable(x: f64) -> Self {
        Jet {
            v: x,
            d1: 1.0,
            ..Default::default()
        }
    }

    fn max_abs(&self) -> f64 {
        self.v
            .abs()
            .max(self.d1.abs())
            .max(self.d2.abs())
            .max(self.d3.abs())
    }

    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Jet {
            v: f(self.v),
            d1: f(self.d1),
            d2: f(self.d2),
            d3: f(self.d3),
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, g: Jet) -> Jet {
        let h0 = self.v / g.v;
        let h1 = (self.d1 - h0 * g.d1) / g.v;
        let h2 = (self.d2 - 2.0 * h1 * g.d1 - h0 * g.d2) / g.v;
        let h3 = (self.d3 - 3.0 * h2 * g.d1 - 3.0 * h1 * g.d2 - h0 * g.d3) / g.v;
        Jet {
            v: h0,
            d1: h1,
            d2: h2,
            d3: h3,
        }
    }
}

impl Scalar for Jet {
    fn from_f64(v: f64) -> Self {
        Jet::constant(v)
    }
    fn scale(self, s: f64) -> Self {
        self.map(|c| c * s)
    }
}

/// x·2^e without intermediate overflow of the power.
pub fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// A jet times 2^exp. Keeps Chebyshev values of very high order at
/// |x| ≫ 1 representable; only ratios of such values are ever turned back
/// into plain floats.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScaledJet {
    mantissa: Jet,
    exp: i64,
}

impl ScaledJet {
    const RENORM: f64 = 1e100;

    pub fn new(jet: Jet) -> Self {
        ScaledJet {
            mantissa: jet,
            exp: 0,
        }
        .normalized()
    }

    pub fn variable(x: f64) -> Self {
        ScaledJet::new(Jet::variable(x))
    }

    fn normalized(self) -> Self {
        let m = self.mantissa.max_abs();
        if m == 0.0 || !m.is_finite() || (1.0 / Self::RENORM..Self::RENORM).contains(&m) {
            return self;
        }
        let e = m.log2().floor() as i64;
        ScaledJet {
            mantissa: self.mantissa.map(|c| ldexp(c, -e)),
            exp: self.exp + e,
        }
    }

    /// Back to an ordinary jet; may overflow to infinity.
    pub fn to_jet(self) -> Jet {
        let e = self.exp;
        self.mantissa.map(|c| ldexp(c, e))
    }

    /// The jet with the binary exponent dropped: a positive multiple of the
    /// true value, which is all that sign tests and Newton ratios need.
    pub fn mantissa(self) -> Jet {
        self.mantissa
    }

    /// Binary exponent: the value is mantissa·2^exponent.
    pub fn exponent(self) -> i64 {
        self.exp
    }

    pub fn sign(self) -> f64 {
        if self.mantissa.v == 0.0 {
            0.0
        } else {
            self.mantissa.v.signum()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.max_abs() == 0.0
    }
}

impl Add for ScaledJet {
    type Output = ScaledJet;
    fn add(self, o: ScaledJet) -> ScaledJet {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let e = self.exp.max(o.exp);
        let (ea, eb) = (self.exp - e, o.exp - e);
        ScaledJet {
            mantissa: self.mantissa.map(|c| ldexp(c, ea)) + o.mantissa.map(|c| ldexp(c, eb)),
            exp: e,
        }
        .normalized()
    }
}

impl Sub for ScaledJet {
    type Output = ScaledJet;
    fn sub(self, o: ScaledJet) -> ScaledJet {
        self + (-o)
    }
}

impl Neg for ScaledJet {
    type Output = ScaledJet;
    fn neg(self) -> ScaledJet {
        ScaledJet {
            mantissa: -self.mantissa,
            exp: self.exp,
        }
    }
}

impl Mul for ScaledJet {
    type Output = ScaledJet;
    fn mul(self, o: ScaledJet) -> ScaledJet {
        ScaledJet {
            mantissa: self.mantissa * o.mantissa,
            exp: self.exp + o.exp,
        }
        .normalized()
    }
}

impl Div for ScaledJet {
    type Output = ScaledJet;
    fn div(self, o: ScaledJet) -> ScaledJet {
        ScaledJet {
            mantissa: self.mantissa / o.mantissa,
            exp: self.exp - o.exp,
        }
        .normalized()
    }
}

impl Scalar for ScaledJet {
    fn from_f64(v: f64) -> Self {
        ScaledJet::new(Jet::constant(v))
    }
    fn scale(self, s: f64) -> Self {
        ScaledJet {
            mantissa: self.mantissa.scale(s),
            exp: self.exp,
        }
        .normalized()
    }
}
