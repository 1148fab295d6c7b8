//! Exact double-Fourier polynomials in two angles with action-dependent
//! amplitudes.
//!
//! A polynomial is a finite sum of modes `A_{m1,m2}(I1, I2; w) *
//! exp(-j (m1 phi1 + m2 phi2))`. Each amplitude is a sum of monomials
//! `q * 2^{s/2} * sqrt(I1)^{h1} * sqrt(I2)^{h2} * sqrt(w)^{hw}` with exact
//! rational `q`, so products expand through product-to-sum identities without
//! any floating-point loss. This is deliberately a tiny bespoke layer, not a
//! computer-algebra system: the pipeline only ever needs products,
//! angle/action derivatives, and pointwise evaluation.
//!
//! Half-integer powers of `I2` evaluate on a signed square-root branch:
//! `I2^{k+1/2} = I2^k * branch * sqrt(I2)`.

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Exponents of one amplitude monomial, half-integer powers stored as counts
/// of half-steps. `sqrt_two` is kept normalized to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonoKey {
    pub half_i1: i32,
    pub half_i2: i32,
    pub half_omega: i32,
    pub sqrt_two: u8,
}

impl MonoKey {
    pub const ONE: MonoKey = MonoKey {
        half_i1: 0,
        half_i2: 0,
        half_omega: 0,
        sqrt_two: 0,
    };
}

/// Complex number with exact rational parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CRational {
    pub re: Rational64,
    pub im: Rational64,
}

impl CRational {
    pub const ZERO: CRational = CRational {
        re: Rational64::new_raw(0, 1),
        im: Rational64::new_raw(0, 1),
    };

    pub fn real(n: i64, d: i64) -> Self {
        Self {
            re: Rational64::new(n, d),
            im: Rational64::new_raw(0, 1),
        }
    }

    pub fn imag(n: i64, d: i64) -> Self {
        Self {
            re: Rational64::new_raw(0, 1),
            im: Rational64::new(n, d),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.numer() == &0 && self.im.numer() == &0
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }

    pub fn scale(&self, q: Rational64) -> Self {
        Self {
            re: self.re * q,
            im: self.im * q,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(ratio_to_f64(self.re), ratio_to_f64(self.im))
    }
}

fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Action-dependent amplitude: a sum of exact monomials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Amplitude {
    terms: BTreeMap<MonoKey, CRational>,
}

impl Amplitude {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(key: MonoKey, coef: CRational) -> Self {
        let mut a = Self::default();
        a.add_term(key, coef);
        a
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonoKey, &CRational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, key: MonoKey, coef: CRational) {
        debug_assert!(key.sqrt_two <= 1);
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(key).or_insert(CRational::ZERO);
        *entry = entry.add(&coef);
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in rhs.terms() {
            out.add_term(*k, *c);
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::default();
        for (ka, ca) in self.terms() {
            for (kb, cb) in rhs.terms() {
                let two = ka.sqrt_two as i32 + kb.sqrt_two as i32;
                let mut coef = ca.mul(cb);
                if two >= 2 {
                    coef = coef.scale(Rational64::new(1 << (two / 2), 1));
                }
                let key = MonoKey {
                    half_i1: ka.half_i1 + kb.half_i1,
                    half_i2: ka.half_i2 + kb.half_i2,
                    half_omega: ka.half_omega + kb.half_omega,
                    sqrt_two: (two % 2) as u8,
                };
                out.add_term(key, coef);
            }
        }
        out
    }

    pub fn scale(&self, c: CRational) -> Self {
        let mut out = Self::default();
        for (k, v) in self.terms() {
            out.add_term(*k, v.mul(&c));
        }
        out
    }

    pub fn scale_rational(&self, q: Rational64) -> Self {
        self.scale(CRational {
            re: q,
            im: Rational64::new_raw(0, 1),
        })
    }

    pub fn conj(&self) -> Self {
        let mut out = Self::default();
        for (k, v) in self.terms() {
            out.add_term(*k, v.conj());
        }
        out
    }

    /// Shift every term's power of omega by `half_steps` half-steps.
    pub fn shift_omega(&self, half_steps: i32) -> Self {
        let mut out = Self::default();
        for (k, v) in self.terms() {
            let mut key = *k;
            key.half_omega += half_steps;
            out.add_term(key, *v);
        }
        out
    }

    /// Derivative with respect to the action selected by `which` (1 or 2):
    /// `d/dI [I^{h/2}] = (h/2) I^{h/2 - 1}`.
    pub fn d_action(&self, which: u8) -> Self {
        let mut out = Self::default();
        for (k, v) in self.terms() {
            let h = match which {
                1 => k.half_i1,
                2 => k.half_i2,
                _ => panic!("action index must be 1 or 2"),
            };
            if h == 0 {
                continue;
            }
            let mut key = *k;
            match which {
                1 => key.half_i1 -= 2,
                _ => key.half_i2 -= 2,
            }
            out.add_term(key, v.scale(Rational64::new(h as i64, 2)));
        }
        out
    }

    /// Numeric value with `sqrt(I2)` taken on the signed branch.
    pub fn value(&self, i1: f64, i2: f64, branch2: f64, omega: f64) -> Complex64 {
        let s1 = i1.sqrt();
        let s2 = branch2 * i2.sqrt();
        let sw = omega.sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.terms() {
            let mag = s1.powi(k.half_i1)
                * s2.powi(k.half_i2)
                * sw.powi(k.half_omega)
                * if k.sqrt_two == 1 {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
            acc += c.to_complex() * mag;
        }
        acc
    }
}

/// Finite double-Fourier series with exact amplitudes,
/// `sum A_{m1,m2} exp(-j (m1 phi1 + m2 phi2))`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    modes: BTreeMap<(i32, i32), Amplitude>,
}

/// Borrowed view of one mode.
#[derive(Debug, Clone, Copy)]
pub struct FourierMode<'a> {
    pub m1: i32,
    pub m2: i32,
    pub amplitude: &'a Amplitude,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant polynomial holding a single monomial at mode (0, 0).
    pub fn constant(key: MonoKey, coef: CRational) -> Self {
        let mut p = Self::default();
        p.add_mode(0, 0, Amplitude::monomial(key, coef));
        p
    }

    /// `sin` of one angle (`which` = 1 or 2) times a monomial factor.
    pub fn sin_angle(which: u8, key: MonoKey, coef: CRational) -> Self {
        // sin t = (-j/2) e^{jt} + (j/2) e^{-jt}; e^{jt} is mode -1 here
        let mut p = Self::default();
        let half_mj = coef.mul(&CRational::imag(-1, 2));
        let half_pj = coef.mul(&CRational::imag(1, 2));
        let (m_neg, m_pos) = mode_pair(which);
        p.add_mode(m_neg.0, m_neg.1, Amplitude::monomial(key, half_mj));
        p.add_mode(m_pos.0, m_pos.1, Amplitude::monomial(key, half_pj));
        p
    }

    /// `cos` of one angle times a monomial factor.
    pub fn cos_angle(which: u8, key: MonoKey, coef: CRational) -> Self {
        let mut p = Self::default();
        let half = coef.scale(Rational64::new(1, 2));
        let (m_neg, m_pos) = mode_pair(which);
        p.add_mode(m_neg.0, m_neg.1, Amplitude::monomial(key, half));
        p.add_mode(m_pos.0, m_pos.1, Amplitude::monomial(key, half));
        p
    }

    pub fn add_mode(&mut self, m1: i32, m2: i32, amp: Amplitude) {
        if amp.is_zero() {
            return;
        }
        let slot = self.modes.entry((m1, m2)).or_default();
        *slot = slot.add(&amp);
        if slot.is_zero() {
            self.modes.remove(&(m1, m2));
        }
    }

    pub fn get(&self, m1: i32, m2: i32) -> Option<&Amplitude> {
        self.modes.get(&(m1, m2))
    }

    pub fn modes(&self) -> impl Iterator<Item = FourierMode<'_>> {
        self.modes.iter().map(|((m1, m2), amplitude)| FourierMode {
            m1: *m1,
            m2: *m2,
            amplitude,
        })
    }

    pub fn support(&self) -> Vec<(i32, i32)> {
        self.modes.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for m in rhs.modes() {
            out.add_mode(m.m1, m.m2, m.amplitude.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(CRational::real(-1, 1)))
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::default();
        for a in self.modes() {
            for b in rhs.modes() {
                out.add_mode(a.m1 + b.m1, a.m2 + b.m2, a.amplitude.mul(b.amplitude));
            }
        }
        out
    }

    pub fn scale(&self, c: CRational) -> Self {
        let mut out = Self::default();
        for m in self.modes() {
            out.add_mode(m.m1, m.m2, m.amplitude.scale(c));
        }
        out
    }

    /// Multiply by an integer power of omega.
    pub fn shift_omega(&self, half_steps: i32) -> Self {
        let mut out = Self::default();
        for m in self.modes() {
            out.add_mode(m.m1, m.m2, m.amplitude.shift_omega(half_steps));
        }
        out
    }

    /// Partial derivative with respect to angle 1 or 2.
    pub fn d_phi(&self, which: u8) -> Self {
        let mut out = Self::default();
        for m in self.modes() {
            let mi = match which {
                1 => m.m1,
                2 => m.m2,
                _ => panic!("angle index must be 1 or 2"),
            };
            if mi == 0 {
                continue;
            }
            // d/dphi exp(-j m phi) = -j m exp(-j m phi)
            out.add_mode(
                m.m1,
                m.m2,
                m.amplitude.scale(CRational::imag(-(mi as i64), 1)),
            );
        }
        out
    }

    /// Partial derivative with respect to action 1 or 2.
    pub fn d_action(&self, which: u8) -> Self {
        let mut out = Self::default();
        for m in self.modes() {
            out.add_mode(m.m1, m.m2, m.amplitude.d_action(which));
        }
        out
    }

    /// Amplitudes of (-m1, -m2) are conjugates of (m1, m2) exactly, which is
    /// equivalent to the polynomial being real-valued.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.modes().all(|m| match self.get(-m.m1, -m.m2) {
            Some(other) => *other == m.amplitude.conj(),
            None => false,
        })
    }

    pub fn eval_complex(
        &self,
        phi1: f64,
        phi2: f64,
        i1: f64,
        i2: f64,
        branch2: f64,
        omega: f64,
    ) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in self.modes() {
            let phase = Complex64::from_polar(1.0, -(m.m1 as f64 * phi1 + m.m2 as f64 * phi2));
            acc += m.amplitude.value(i1, i2, branch2, omega) * phase;
        }
        acc
    }

    /// Real value; the imaginary part of a conjugate-symmetric polynomial
    /// cancels exactly.
    pub fn eval(&self, phi1: f64, phi2: f64, i1: f64, i2: f64, branch2: f64, omega: f64) -> f64 {
        self.eval_complex(phi1, phi2, i1, i2, branch2, omega).re
    }
}

fn mode_pair(which: u8) -> ((i32, i32), (i32, i32)) {
    match which {
        1 => ((-1, 0), (1, 0)),
        2 => ((0, -1), (0, 1)),
        _ => panic!("angle index must be 1 or 2"),
    }
}

// Serialized form: exact integers only, so round trips are bit-exact. Omega
// powers are integral in every polynomial the pipeline produces; surd factors
// (sqrt 2, sqrt omega) may appear only in intermediate products and are
// rejected here.

#[derive(Serialize, Deserialize)]
struct TermRepr {
    num: i64,
    den: i64,
    sqrt_i1: i32,
    sqrt_i2: i32,
    omega: i32,
}

#[derive(Serialize, Deserialize)]
struct ModeRepr {
    m1: i32,
    m2: i32,
    re: Vec<TermRepr>,
    im: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    modes: Vec<ModeRepr>,
}

/// Errors from the exact layer's serialized form.
#[derive(Debug, thiserror::Error)]
pub enum TrigError {
    #[error("amplitude carries a surd factor (2^{sqrt_two}/2 * omega^{half_omega}/2); only integral omega powers serialize")]
    SurdInSerialization { sqrt_two: u8, half_omega: i32 },
    #[error("zero denominator in serialized rational")]
    ZeroDenominator,
}

impl TrigPolynomial {
    pub fn to_json(&self) -> Result<String, TrigError> {
        let mut modes = Vec::new();
        for m in self.modes() {
            let mut re = Vec::new();
            let mut im = Vec::new();
            for (k, c) in m.amplitude.terms() {
                if k.sqrt_two != 0 || k.half_omega % 2 != 0 {
                    return Err(TrigError::SurdInSerialization {
                        sqrt_two: k.sqrt_two,
                        half_omega: k.half_omega,
                    });
                }
                for (part, out) in [(c.re, &mut re), (c.im, &mut im)] {
                    if part.numer() != &0 {
                        out.push(TermRepr {
                            num: *part.numer(),
                            den: *part.denom(),
                            sqrt_i1: k.half_i1,
                            sqrt_i2: k.half_i2,
                            omega: k.half_omega / 2,
                        });
                    }
                }
            }
            modes.push(ModeRepr {
                m1: m.m1,
                m2: m.m2,
                re,
                im,
            });
        }
        Ok(serde_json::to_string_pretty(&PolyRepr { modes }).expect("plain data serializes"))
    }

    pub fn from_json(json: &str) -> Result<Self, TrigError> {
        let repr: PolyRepr = serde_json::from_str(json).map_err(|_| TrigError::ZeroDenominator)?;
        let mut poly = Self::default();
        for mode in repr.modes {
            let mut amp = Amplitude::default();
            for (terms, imaginary) in [(&mode.re, false), (&mode.im, true)] {
                for t in terms {
                    if t.den == 0 {
                        return Err(TrigError::ZeroDenominator);
                    }
                    let q = Rational64::new(t.num, t.den);
                    let coef = if imaginary {
                        CRational {
                            re: Rational64::new_raw(0, 1),
                            im: q,
                        }
                    } else {
                        CRational {
                            re: q,
                            im: Rational64::new_raw(0, 1),
                        }
                    };
                    amp.add_term(
                        MonoKey {
                            half_i1: t.sqrt_i1,
                            half_i2: t.sqrt_i2,
                            half_omega: 2 * t.omega,
                            sqrt_two: 0,
                        },
                        coef,
                    );
                }
            }
            poly.add_mode(mode.m1, mode.m2, amp);
        }
        Ok(poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_and_cosine_evaluate() {
        let s = TrigPolynomial::sin_angle(1, MonoKey::ONE, CRational::real(1, 1));
        let c = TrigPolynomial::cos_angle(2, MonoKey::ONE, CRational::real(1, 1));
        for k in 0..12 {
            let t = 0.5 * k as f64;
            assert!((s.eval(t, 0.3, 1.0, 1.0, 1.0, 1.0) - t.sin()).abs() < 1e-14);
            assert!((c.eval(0.3, t, 1.0, 1.0, 1.0, 1.0) - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn product_to_sum_is_exact() {
        // sin a * cos a = sin(2a)/2: the product must have only modes (±2, 0)
        let s = TrigPolynomial::sin_angle(1, MonoKey::ONE, CRational::real(1, 1));
        let c = TrigPolynomial::cos_angle(1, MonoKey::ONE, CRational::real(1, 1));
        let prod = s.mul(&c);
        assert_eq!(prod.support(), vec![(-2, 0), (2, 0)]);
        for k in 0..8 {
            let t = 0.7 * k as f64;
            assert!((prod.eval(t, 0.0, 1.0, 1.0, 1.0, 1.0) - 0.5 * (2.0 * t).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn angle_derivative() {
        let s = TrigPolynomial::sin_angle(1, MonoKey::ONE, CRational::real(1, 1));
        let d = s.d_phi(1);
        for k in 0..8 {
            let t = 0.9 * k as f64;
            assert!((d.eval(t, 0.0, 1.0, 1.0, 1.0, 1.0) - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn action_derivative_of_half_power() {
        // I1^{3/2}: d/dI1 = (3/2) I1^{1/2}
        let key = MonoKey {
            half_i1: 3,
            ..MonoKey::ONE
        };
        let p = TrigPolynomial::constant(key, CRational::real(1, 1));
        let d = p.d_action(1);
        let at = |i1: f64| d.eval(0.0, 0.0, i1, 1.0, 1.0, 1.0);
        assert!((at(4.0) - 3.0).abs() < 1e-14);
        assert!((at(0.25) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn signed_branch_changes_odd_powers_only() {
        let odd = MonoKey {
            half_i2: 3,
            ..MonoKey::ONE
        };
        let even = MonoKey {
            half_i2: 4,
            ..MonoKey::ONE
        };
        let p_odd = TrigPolynomial::constant(odd, CRational::real(1, 1));
        let p_even = TrigPolynomial::constant(even, CRational::real(1, 1));
        let v = |p: &TrigPolynomial, b: f64| p.eval(0.0, 0.0, 1.0, 2.0, b, 1.0);
        assert!((v(&p_odd, 1.0) + v(&p_odd, -1.0)).abs() < 1e-14);
        assert!((v(&p_even, 1.0) - v(&p_even, -1.0)).abs() < 1e-14);
    }

    #[test]
    fn surd_factors_block_serialization() {
        let key = MonoKey {
            sqrt_two: 1,
            ..MonoKey::ONE
        };
        let p = TrigPolynomial::constant(key, CRational::real(1, 1));
        assert!(matches!(
            p.to_json(),
            Err(TrigError::SurdInSerialization { .. })
        ));
    }
}
