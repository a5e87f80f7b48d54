//! Radial power-law interaction potentials.
//!
//! The pair potential is `W(x) = w(|x|)` with radial profile
//!
//! ```text
//! w(r) = r^alpha / alpha - r^beta / beta,      alpha > beta > 0
//! w(r) = -r^beta / beta  (r <= 1),  +inf  (r > 1)   for alpha = +inf
//! ```
//!
//! The first term attracts at long range, the second repels at short range.
//! `w` attains its minimum `1/alpha - 1/beta` at `r = 1` and crosses zero at
//! `R = (alpha/beta)^(1/(alpha-beta))`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::norm;

/// Attraction exponent; `Infinite` is the hard-confinement kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Attraction {
    Finite(f64),
    Infinite,
}

impl Attraction {
    pub fn is_finite(&self) -> bool {
        matches!(self, Attraction::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Attraction::Finite(a) => Some(a),
            Attraction::Infinite => None,
        }
    }
}

impl Serialize for Attraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Attraction::Finite(a) => s.serialize_f64(a),
            Attraction::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Attraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(a) => Ok(Attraction::Finite(a)),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity" | "Infinity") => {
                Ok(Attraction::Infinite)
            }
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\" for alpha, got {t:?}"
            ))),
        }
    }
}

/// Exponent pair of an attractive-repulsive power-law potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PowerLawParams {
    alpha: Attraction,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    alpha: Attraction,
    beta: f64,
}

impl TryFrom<RawParams> for PowerLawParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        match raw.alpha {
            Attraction::Finite(a) if a == raw.beta => PowerLawParams::degenerate(a),
            Attraction::Finite(a) => PowerLawParams::new(a, raw.beta),
            Attraction::Infinite => PowerLawParams::hard(raw.beta),
        }
    }
}

impl From<PowerLawParams> for RawParams {
    fn from(p: PowerLawParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "repulsion exponent must be positive and finite, got beta = {beta}"
        )));
    }
    Ok(())
}

impl PowerLawParams {
    /// Finite exponents with `alpha > beta > 0`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        if alpha == f64::INFINITY {
            return Self::hard(beta);
        }
        if !alpha.is_finite() || alpha <= beta {
            return Err(Error::InvalidParams(format!(
                "need alpha > beta, got alpha = {alpha}, beta = {beta}"
            )));
        }
        Ok(Self {
            alpha: Attraction::Finite(alpha),
            beta,
        })
    }

    /// Hard-confinement kernel `alpha = +inf`.
    pub fn hard(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            alpha: Attraction::Infinite,
            beta,
        })
    }

    /// The null case `alpha = beta`, where the potential vanishes identically.
    pub fn degenerate(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            alpha: Attraction::Finite(beta),
            beta,
        })
    }

    /// Dispatches to [`new`](Self::new), [`hard`](Self::hard) or
    /// [`degenerate`](Self::degenerate).
    pub fn from_attraction(alpha: Attraction, beta: f64) -> Result<Self> {
        Self::try_from(RawParams { alpha, beta })
    }

    pub fn alpha(&self) -> Attraction {
        self.alpha
    }

    /// Finite attraction exponent, or an error for the hard kernel.
    pub fn alpha_finite(&self) -> Result<f64> {
        self.alpha.finite().ok_or_else(|| {
            Error::Domain("operation requires a finite attraction exponent".into())
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_hard(&self) -> bool {
        !self.alpha.is_finite()
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == Attraction::Finite(self.beta)
    }

    /// `alpha > beta >= 2` with finite alpha: gradients and flows are defined.
    pub fn is_mildly_repulsive(&self) -> bool {
        matches!(self.alpha, Attraction::Finite(a) if a > self.beta) && self.beta >= 2.0
    }

    pub(crate) fn require_dynamics(&self) -> Result<f64> {
        let alpha = self.alpha_finite()?;
        if self.beta < 2.0 {
            return Err(Error::Domain(format!(
                "gradient dynamics need beta >= 2, got beta = {}",
                self.beta
            )));
        }
        Ok(alpha)
    }

    /// Radial profile `w(r)`.
    #[inline]
    pub fn eval_w(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self.alpha {
            Attraction::Finite(a) if a == self.beta => 0.0,
            Attraction::Finite(a) => pow(r, a) / a - pow(r, self.beta) / self.beta,
            Attraction::Infinite => {
                if r <= 1.0 {
                    -pow(r, self.beta) / self.beta
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `W(x) = w(|x|)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_w(norm(x))
    }

    /// `w'(r) = r^(alpha-1) - r^(beta-1)`; finite alpha only.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        let a = self.alpha_finite()?;
        Ok(pow(r, a - 1.0) - pow(r, self.beta - 1.0))
    }

    /// `w''(r)`; at `r = 1` this equals `alpha - beta`.
    pub fn second_derivative(&self, r: f64) -> Result<f64> {
        let a = self.alpha_finite()?;
        Ok((a - 1.0) * pow(r, a - 2.0) - (self.beta - 1.0) * pow(r, self.beta - 2.0))
    }

    /// The multiplier `g(r) = w'(r)/r = r^(alpha-2) - r^(beta-2)` with `grad W(x) = g(|x|) x`.
    #[inline]
    pub(crate) fn radial_factor(&self, alpha: f64, r: f64) -> f64 {
        pow(r, alpha - 2.0) - pow(r, self.beta - 2.0)
    }

    /// Gradient `grad W(x) = (|x|^(alpha-2) - |x|^(beta-2)) x`.
    pub fn eval_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let alpha = self.alpha_finite()?;
        let r = norm(x);
        if r == 0.0 {
            if self.beta < 2.0 {
                return Err(Error::Domain(format!(
                    "gradient undefined at the origin for beta = {} < 2",
                    self.beta
                )));
            }
            return Ok(vec![0.0; x.len()]);
        }
        let g = self.radial_factor(alpha, r);
        Ok(x.iter().map(|xi| g * xi).collect())
    }

    /// Zero of the radial profile, `R = (alpha/beta)^(1/(alpha-beta))`.
    ///
    /// For the null case the limit `e^(1/beta)` is returned. The hard kernel
    /// is rejected; use [`PowerLawParams::radius_or_limit`] for its limit value 1.
    pub fn radius_r(&self) -> Result<f64> {
        match self.alpha {
            Attraction::Infinite => Err(Error::Domain(
                "R is undefined for the hard kernel; its limit is 1".into(),
            )),
            Attraction::Finite(a) if a == self.beta => Ok((1.0 / self.beta).exp()),
            Attraction::Finite(a) => Ok(((a / self.beta).ln() / (a - self.beta)).exp()),
        }
    }

    /// Like [`PowerLawParams::radius_r`] but returns the limit 1 for `alpha = +inf`.
    pub fn radius_or_limit(&self) -> f64 {
        self.radius_r().unwrap_or(1.0)
    }

    /// Minimum value `w(1) = 1/alpha - 1/beta`.
    pub fn well_depth(&self) -> f64 {
        self.eval_w(1.0)
    }

    /// Short/long-range split `(w_short, w_long)`: `w_short` clamps at `w(1)`
    /// beyond unit distance and `w_long = w - w_short >= 0`.
    pub fn split_short_long(&self, r: f64) -> Result<(f64, f64)> {
        self.alpha_finite()?;
        if r <= 1.0 {
            Ok((self.eval_w(r), 0.0))
        } else {
            let w1 = self.eval_w(1.0);
            Ok((w1, self.eval_w(r) - w1))
        }
    }
}

/// `r^e` for `r >= 0`, `e > 0`, computed as `exp(e ln r)` with `0^e = 0`.
#[inline]
pub(crate) fn pow(r: f64, e: f64) -> f64 {
    if r == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if e == 2.0 {
        r * r
    } else if e == 0.0 {
        1.0
    } else {
        (e * r.ln()).exp()
    }
}
