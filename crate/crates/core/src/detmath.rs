//! Platform-independent elementary functions.
//!
//! Every routine here is built from IEEE-754 binary64 `+ - * /`, `sqrt`,
//! `floor` and exact bit manipulation, evaluated in a fixed order. Rust never
//! contracts `a * b + c` into an FMA on its own, so the results are
//! bit-identical on every conforming host. Library `ln`/`exp` are not
//! correctly rounded and differ between libm implementations, which is
//! exactly the failure mode this crate exists to contain.

// fdlibm split of ln(2): the high part has enough trailing zeros that
// `k * LN2_HI` is exact for every |k| < 2^11.
const LN2_HI: f64 = 6.931_471_803_691_238e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
const INV_LN2: f64 = std::f64::consts::LOG2_E;
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Taylor coefficients 1/n! for n = 0..=13, highest degree first.
const EXP_TAYLOR: [f64; 14] = [
    1.6059043836821613e-10,
    2.08767569878681e-09,
    2.505210838544172e-08,
    2.755731922398589e-07,
    2.7557319223985893e-06,
    2.48015873015873e-05,
    0.0001984126984126984,
    0.001388888888888889,
    0.008333333333333333,
    0.041666666666666664,
    0.16666666666666666,
    0.5,
    1.0,
    1.0,
];

/// `e^x`.
///
/// Range reduction `x = k ln2 + r` with `|r| <= ln2 / 2`, a 14-term Taylor
/// polynomial for `e^r` in Horner form, then an exact power-of-two scale.
pub fn exp(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 709.782_712_893_384 {
        return f64::INFINITY;
    }
    if x < -745.133_219_101_941_1 {
        return 0.0;
    }
    let k = (x * INV_LN2 + 0.5).floor();
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = EXP_TAYLOR[0];
    for &c in &EXP_TAYLOR[1..] {
        p = p * r + c;
    }
    scale_pow2(p, k as i32)
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

fn scale_pow2(p: f64, k: i32) -> f64 {
    if k > 1023 {
        p * pow2(1023) * pow2(k - 1023)
    } else if k < -1022 {
        // Two steps keep the intermediate normal; the second multiply rounds once
        // into the subnormal range.
        p * pow2(k + 60) * pow2(-60)
    } else {
        p * pow2(k)
    }
}

/// Natural logarithm of a positive finite value.
///
/// Returns NaN for non-positive or NaN input and +inf for +inf.
pub fn ln(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let (mut x, mut e) = (x, 0i32);
    if x < f64::MIN_POSITIVE {
        x *= pow2(54);
        e -= 54;
    }
    let bits = x.to_bits();
    e += ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    if m > SQRT2 {
        m *= 0.5;
        e += 1;
    }
    // ln(m) = 2 atanh(s), s = (m - 1) / (m + 1), |s| <= 0.1716.
    let f = m - 1.0;
    let s = f / (m + 1.0);
    let z = s * s;
    let mut p = 1.0 / 23.0;
    for d in [21.0, 19.0, 17.0, 15.0, 13.0, 11.0, 9.0, 7.0, 5.0, 3.0, 1.0] {
        p = p * z + 1.0 / d;
    }
    let lnm = 2.0 * s * p;
    let e = f64::from(e);
    e * LN2_HI + (e * LN2_LO + lnm)
}

/// [`ln`] as an unevaluated sum `hi + lo`, keeping the rounding error of the
/// final additions.
pub fn ln_dd(x: f64) -> Dd {
    let l = ln(x);
    if !l.is_finite() || x == 1.0 {
        return Dd(l, 0.0);
    }
    let (mut x, mut e) = (x, 0i32);
    if x < f64::MIN_POSITIVE {
        x *= pow2(54);
        e -= 54;
    }
    let bits = x.to_bits();
    e += ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    if m > SQRT2 {
        m *= 0.5;
        e += 1;
    }
    let lnm = ln(m);
    let e = f64::from(e);
    // e * LN2_HI is exact; the remaining terms are tiny next to it.
    Dd::two_sum(e * LN2_HI, lnm).add_f64(e * LN2_LO)
}

/// Double-double value `hi + lo` with `|lo| <= ulp(hi) / 2`, built from
/// error-free transformations (no fused multiply-add).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd(pub f64, pub f64);

impl Dd {
    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd(s, b - (s - a))
    }

    fn split(a: f64) -> (f64, f64) {
        let c = 134_217_729.0 * a;
        let hi = c - (c - a);
        (hi, a - hi)
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        let (ah, al) = Self::split(a);
        let (bh, bl) = Self::split(b);
        Dd(p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
    }

    pub fn add_f64(self, b: f64) -> Dd {
        let s = Self::two_sum(self.0, b);
        Self::quick_two_sum(s.0, s.1 + self.1)
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let p = Self::two_prod(self.0, b);
        Self::quick_two_sum(p.0, p.1 + self.1 * b)
    }

    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.0 / b;
        let r = self + -Self::two_prod(q1, b);
        let q2 = r.0 / b;
        Self::quick_two_sum(q1, q2)
    }

    pub fn to_f64(self) -> f64 {
        self.0 + self.1
    }
}

impl std::ops::Add for Dd {
    type Output = Dd;

    fn add(self, o: Dd) -> Dd {
        let s = Self::two_sum(self.0, o.0);
        Self::quick_two_sum(s.0, s.1 + self.1 + o.1)
    }
}

impl std::ops::Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
}

/// `e^(hi + lo)`, using `e^lo ~ 1 + lo`.
pub fn exp_dd(x: Dd) -> f64 {
    let e = exp(x.0);
    e + e * x.1
}

// Abramowitz & Stegun 7.1.26.
const AS_P: f64 = 0.327_591_1;
const AS_A: [f64; 5] = [
    0.254_829_592,
    -0.284_496_736,
    1.421_413_741,
    -1.453_152_027,
    1.061_405_429,
];

/// Complementary error function for `x >= 0` (absolute error below 1.5e-7).
pub fn erfc(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let t = 1.0 / (1.0 + AS_P * x);
    let mut poly = AS_A[4];
    for &a in AS_A[..4].iter().rev() {
        poly = poly * t + a;
    }
    poly * t * exp(-(x * x))
}

/// Upper tail of the standard normal, `1 - Phi(z)`, for `z >= 0`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Pairwise summation with a fixed split order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Round half away from zero.
pub fn round_half_away(x: f64) -> f64 {
    // f64::round has exactly this tie rule and is a pure bit operation.
    x.round()
}
