use crate::error::{check_len, Result};
use crate::model::{CampaignInstance, ParticipationVector};
use crate::oracle::FeasibleSet;
use crate::scalar::Scalar;

/// Euclidean projection onto `{0 <= a <= r, sum rho a <= B}`.
pub fn project_onto_feasible<T: Scalar>(
    inst: &CampaignInstance<T>,
    x: &[T],
) -> Result<ParticipationVector<T>> {
    check_len(inst.dim(), x.len())?;
    Ok(ParticipationVector(project(&inst.feasible_set(), x)))
}

/// Projection onto a [`FeasibleSet`].
///
/// The KKT conditions give `a(theta) = clip(x - theta rho, 0, r)` for the
/// budget multiplier `theta >= 0`; spend is nonincreasing in `theta`, so the
/// multiplier is found by bisection. The returned point always sits on the
/// feasible side of the bracket.
pub fn project<T: Scalar>(set: &FeasibleSet<T>, x: &[T]) -> Vec<T> {
    let at = |theta: T| -> Vec<T> {
        x.iter()
            .zip(&set.unit_costs)
            .zip(&set.caps)
            .map(|((&v, &rho), &cap)| (v - theta * rho).max(T::zero()).min(cap))
            .collect()
    };
    let clipped = at(T::zero());
    if set.spend(&clipped) <= set.budget {
        return clipped;
    }
    // at theta_hi every paying coordinate is clipped to zero
    let mut hi = x
        .iter()
        .zip(&set.unit_costs)
        .filter(|&(_, &rho)| rho > T::zero())
        .fold(T::zero(), |m, (&v, &rho)| m.max(v / rho));
    let mut lo = T::zero();
    let mut best = at(hi);
    // bisect down to floating-point resolution of theta
    for _ in 0..300 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let a = at(mid);
        if set.spend(&a) > set.budget {
            lo = mid;
        } else {
            hi = mid;
            best = a;
        }
    }
    best
}
