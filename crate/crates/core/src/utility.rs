//! Per-viewer utility families and the aggregate campaign objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, BpoError, Result};
use crate::model::{potentials, CampaignInstance};
use crate::scalar::Scalar;

/// Default exponent of the `maxmin` surrogate.
pub const MAXMIN_ALPHA: f64 = 8.0;

/// Utility `U_j` applied to each viewer's potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `delta * w`
    Linear { delta: f64 },
    /// `ln(delta * w + 1)`
    Log { delta: f64 },
    /// `(1 + w)^(1 - alpha) / (1 - alpha)`, and `ln(1 + w)` at `alpha = 1`.
    AlphaFair { alpha: f64 },
    /// `1` if `w > eps`, else `0`. Evaluation only.
    ReachIndicator { eps: f64 },
}

impl UtilitySpec {
    pub fn maxmin() -> Self {
        UtilitySpec::AlphaFair {
            alpha: MAXMIN_ALPHA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            UtilitySpec::Linear { delta } | UtilitySpec::Log { delta } => {
                delta.is_finite() && delta > 0.0
            }
            UtilitySpec::AlphaFair { alpha } => alpha.is_finite() && alpha >= 0.0,
            UtilitySpec::ReachIndicator { eps } => eps.is_finite() && eps >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(BpoError::InvalidParameter(format!("utility {self}")))
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, UtilitySpec::ReachIndicator { .. })
    }

    /// Fails unless the spec is valid and usable by gradient-based solvers.
    pub fn require_differentiable(&self) -> Result<()> {
        self.validate()?;
        if self.is_differentiable() {
            Ok(())
        } else {
            Err(BpoError::NonDifferentiable(self.to_string()))
        }
    }

    /// `U(w)`; rejects negative potentials.
    pub fn eval<T: Scalar>(&self, w: T) -> Result<T> {
        if w < T::zero() {
            return Err(BpoError::NegativePotential(w.as_f64()));
        }
        Ok(self.value(w))
    }

    /// `U'(w)`.
    pub fn deriv<T: Scalar>(&self, w: T) -> Result<T> {
        if w < T::zero() {
            return Err(BpoError::NegativePotential(w.as_f64()));
        }
        if !self.is_differentiable() {
            return Err(BpoError::NonDifferentiable(self.to_string()));
        }
        Ok(self.slope(w))
    }

    /// Unchecked `U(w)` for inner loops.
    #[inline]
    pub(crate) fn value<T: Scalar>(&self, w: T) -> T {
        match *self {
            UtilitySpec::Linear { delta } => T::lit(delta) * w,
            UtilitySpec::Log { delta } => (T::lit(delta) * w).ln_1p(),
            UtilitySpec::AlphaFair { alpha } if alpha == 1.0 => w.ln_1p(),
            UtilitySpec::AlphaFair { alpha } => {
                let e = T::lit(1.0 - alpha);
                (T::one() + w).powf(e) / e
            }
            UtilitySpec::ReachIndicator { eps } => {
                if w > T::lit(eps) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Unchecked `U'(w)`; zero for the indicator.
    #[inline]
    pub(crate) fn slope<T: Scalar>(&self, w: T) -> T {
        match *self {
            UtilitySpec::Linear { delta } => T::lit(delta),
            UtilitySpec::Log { delta } => {
                let d = T::lit(delta);
                d / (d * w + T::one())
            }
            UtilitySpec::AlphaFair { alpha } => (T::one() + w).powf(-T::lit(alpha)),
            UtilitySpec::ReachIndicator { .. } => T::zero(),
        }
    }
}

impl fmt::Display for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Linear { delta } => write!(f, "linear:{delta}"),
            UtilitySpec::Log { delta } => write!(f, "log:{delta}"),
            UtilitySpec::AlphaFair { alpha } => write!(f, "afair:{alpha}"),
            UtilitySpec::ReachIndicator { eps } => write!(f, "reach:{eps}"),
        }
    }
}

impl FromStr for UtilitySpec {
    type Err = BpoError;

    /// Parses `linear:δ`, `log:δ`, `afair:α`, `maxmin[:α]` or `reach:ε`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| {
                BpoError::InvalidParameter(format!("utility `{s}` needs a parameter"))
            })?;
            a.trim()
                .parse::<f64>()
                .map_err(|_| BpoError::InvalidParameter(format!("bad utility parameter `{a}`")))
        };
        let spec = match name.trim() {
            "linear" => UtilitySpec::Linear { delta: num(arg)? },
            "log" => UtilitySpec::Log { delta: num(arg)? },
            "afair" => UtilitySpec::AlphaFair { alpha: num(arg)? },
            "maxmin" => UtilitySpec::AlphaFair {
                alpha: if arg.is_some() {
                    num(arg)?
                } else {
                    MAXMIN_ALPHA
                },
            },
            "reach" => UtilitySpec::ReachIndicator { eps: num(arg)? },
            other => {
                return Err(BpoError::InvalidParameter(format!(
                    "unknown utility `{other}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `U(a) = sum_{j != i} U_j(w_j(a))`.
pub fn total_utility<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    a: &[T],
) -> Result<T> {
    spec.validate()?;
    let omega = potentials(inst, a)?;
    sum_over_viewers(inst.advertiser, spec, &omega)
}

pub(crate) fn sum_over_viewers<T: Scalar>(
    advertiser: usize,
    spec: &UtilitySpec,
    omega: &[T],
) -> Result<T> {
    let mut total = T::zero();
    for (j, &w) in omega.iter().enumerate() {
        if j != advertiser {
            total = total + spec.eval(w)?;
        }
    }
    Ok(total)
}

/// `grad_k = sum_{j != i, k} U'(w_j) p[k -> j]`, one pass over the entries.
pub fn gradient<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    a: &[T],
) -> Result<Vec<T>> {
    spec.require_differentiable()?;
    let omega = potentials(inst, a)?;
    let mut out = vec![T::zero(); inst.dim()];
    gradient_from_potentials(inst, spec, &omega, &mut out);
    Ok(out)
}

/// Aggregate outgoing influence `phi_k = sum_{j != i, k} p[k -> j]` of every
/// decision coordinate.
pub fn influence_scores<T: Scalar>(inst: &CampaignInstance<T>) -> Vec<T> {
    (0..inst.dim())
        .map(|k| {
            inst.impressions
                .source_sum_excluding(inst.user_of(k), inst.advertiser)
        })
        .collect()
}

pub(crate) fn gradient_from_potentials<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    omega: &[T],
    out: &mut [T],
) {
    if let UtilitySpec::Linear { delta } = *spec {
        // constant gradient; shares the summation order of `influence_scores`
        let d = T::lit(delta);
        for (g, phi) in out.iter_mut().zip(influence_scores(inst)) {
            *g = d * phi;
        }
        return;
    }
    let mut slope: Vec<T> = omega.iter().map(|&w| spec.slope(w)).collect();
    slope[inst.advertiser] = T::zero();
    for (k, g) in out.iter_mut().enumerate() {
        *g = inst
            .impressions
            .by_source(inst.user_of(k))
            .fold(T::zero(), |acc, (j, p)| acc + slope[j] * p);
    }
}

/// Value and gradient sharing one potentials pass.
pub fn value_and_gradient<T: Scalar>(
    inst: &CampaignInstance<T>,
    spec: &UtilitySpec,
    a: &[T],
    grad: &mut [T],
) -> Result<T> {
    spec.require_differentiable()?;
    check_len(inst.dim(), grad.len())?;
    let omega = potentials(inst, a)?;
    gradient_from_potentials(inst, spec, &omega, grad);
    sum_over_viewers(inst.advertiser, spec, &omega)
}
