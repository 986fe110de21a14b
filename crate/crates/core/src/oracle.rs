//! Linear maximization over the budget-capped box
//! `{ 0 <= s <= r, sum rho_n s_n <= B }`.
//!
//! The maximizer is a fractional knapsack fill: users that cost nothing are
//! taken at their cap whenever their coefficient is positive, paying users
//! with a positive coefficient are taken in decreasing order of
//! coefficient-per-cost until the budget runs out, with at most one user
//! receiving a fractional share.

use std::cmp::Ordering;

use crate::error::{check_len, BpoError, Result};
use crate::scalar::{dot, Scalar};

/// The budget/box polytope of a campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleSet<T> {
    /// Money per unit of participation, `rho_n = c_n * lambda_n`.
    pub unit_costs: Vec<T>,
    pub caps: Vec<T>,
    pub budget: T,
}

/// Constraint violations of a point; zero when feasible.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residuals<T> {
    pub budget_excess: T,
    pub box_excess: T,
}

impl<T: Scalar> FeasibleSet<T> {
    pub fn dim(&self) -> usize {
        self.caps.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_len(self.unit_costs.len(), self.caps.len())?;
        if !(self.budget >= T::zero()) {
            return Err(BpoError::InvalidParameter(format!(
                "budget must be nonnegative (got {})",
                self.budget
            )));
        }
        if let Some(k) = self.unit_costs.iter().position(|&r| !(r >= T::zero())) {
            return Err(BpoError::InvalidParameter(format!(
                "unit cost of coordinate {k} must be nonnegative"
            )));
        }
        if let Some(k) = self
            .caps
            .iter()
            .position(|&r| !(r >= T::zero() && r <= T::one()))
        {
            return Err(BpoError::InvalidParameter(format!(
                "cap of coordinate {k} outside [0,1]"
            )));
        }
        Ok(())
    }

    pub fn spend(&self, a: &[T]) -> T {
        dot(&self.unit_costs, a)
    }

    pub fn residuals(&self, a: &[T]) -> Residuals<T> {
        let box_excess = a.iter().zip(&self.caps).fold(T::zero(), |m, (&x, &r)| {
            // `-0.0` must not win over the zero start
            let worst = (-x).max(x - r);
            if worst > m {
                worst
            } else {
                m
            }
        });
        Residuals {
            budget_excess: (self.spend(a) - self.budget).max(T::zero()),
            box_excess,
        }
    }
}

/// Coefficients plus polytope of one linear sub-problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSubproblem<T> {
    pub k: Vec<T>,
    pub set: FeasibleSet<T>,
}

/// Solves one sub-problem; prefer [`LinearOracle`] for repeated calls.
pub fn solve_linear_subproblem<T: Scalar>(sub: &LinearSubproblem<T>) -> Result<Vec<T>> {
    LinearOracle::new(&sub.set)?.solve(&sub.k)
}

/// Oracle with the free/paying partition computed once per polytope.
#[derive(Clone, Debug)]
pub struct LinearOracle<T> {
    set: FeasibleSet<T>,
    free: Vec<usize>,
    paying: Vec<usize>,
}

impl<T: Scalar> LinearOracle<T> {
    pub fn new(set: &FeasibleSet<T>) -> Result<Self> {
        set.validate()?;
        let (free, paying) = (0..set.dim()).partition(|&k| set.unit_costs[k] == T::zero());
        Ok(Self {
            set: set.clone(),
            free,
            paying,
        })
    }

    pub fn set(&self) -> &FeasibleSet<T> {
        &self.set
    }

    /// Maximizer of `<k, s>` over the polytope.
    pub fn solve(&self, k: &[T]) -> Result<Vec<T>> {
        let mut s = vec![T::zero(); self.set.dim()];
        self.solve_into(k, &mut s)?;
        Ok(s)
    }

    pub fn solve_into(&self, k: &[T], s: &mut [T]) -> Result<()> {
        check_len(self.set.dim(), k.len())?;
        check_len(self.set.dim(), s.len())?;
        s.iter_mut().for_each(|x| *x = T::zero());
        for &n in &self.free {
            if k[n] > T::zero() {
                s[n] = self.set.caps[n];
            }
        }
        let order = self.ranking(k);
        let mut left = self.set.budget;
        for &(n, _) in &order {
            let (rho, cap) = (self.set.unit_costs[n], self.set.caps[n]);
            let cost = rho * cap;
            if cost <= left {
                s[n] = cap;
                left = left - cost;
            } else {
                s[n] = (left / rho).min(cap);
                break;
            }
        }
        Ok(())
    }

    /// Paying coordinates with positive coefficient, by decreasing
    /// coefficient-per-cost; ties keep ascending index.
    fn ranking(&self, k: &[T]) -> Vec<(usize, T)> {
        let mut order: Vec<(usize, T)> = self
            .paying
            .iter()
            .filter(|&&n| k[n] > T::zero())
            .map(|&n| (n, k[n] / self.set.unit_costs[n]))
            .collect();
        order.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(Ordering::Equal));
        order
    }

    /// Dual solution certifying optimality of `s = self.solve(k)`.
    ///
    /// The budget multiplier is the coefficient-per-cost of the first
    /// ranked user left below its cap (zero when every ranked user is
    /// capped); box multipliers are the residual profits of the users held
    /// at their caps.
    pub fn certificate(&self, k: &[T], s: &[T]) -> Result<DualCertificate<T>> {
        check_len(self.set.dim(), k.len())?;
        check_len(self.set.dim(), s.len())?;
        let order = self.ranking(k);
        let y0 = order
            .iter()
            .find(|&&(n, _)| s[n] < self.set.caps[n])
            .map_or(T::zero(), |&(_, ratio)| ratio);
        let mut y = vec![T::zero(); self.set.dim()];
        for n in 0..self.set.dim() {
            if k[n] > T::zero() && s[n] == self.set.caps[n] {
                y[n] = k[n] - self.set.unit_costs[n] * y0;
            }
        }
        let primal = dot(k, s);
        let dual = self.set.budget * y0 + dot(&self.set.caps, &y);
        // worst violation of y >= 0 and y_n >= k_n - rho_n y0
        let infeasibility = (0..self.set.dim()).fold(-y0.min(T::zero()), |m, n| {
            m.max(-y[n]).max(k[n] - self.set.unit_costs[n] * y0 - y[n])
        });
        Ok(DualCertificate {
            y0,
            y,
            primal,
            dual,
            infeasibility,
        })
    }
}

/// Dual variables of the sub-problem with the associated objectives.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCertificate<T> {
    pub y0: T,
    pub y: Vec<T>,
    pub primal: T,
    pub dual: T,
    pub infeasibility: T,
}

impl<T: Scalar> DualCertificate<T> {
    pub fn duality_gap(&self) -> T {
        (self.dual - self.primal).abs()
    }
}

/// Frank-Wolfe gap `<grad, s - a>`.
pub fn fw_gap<T: Scalar>(grad: &[T], s: &[T], a: &[T]) -> Result<T> {
    check_len(grad.len(), s.len())?;
    check_len(grad.len(), a.len())?;
    Ok(grad
        .iter()
        .zip(s.iter().zip(a))
        .fold(T::zero(), |acc, (&g, (&x, &y))| acc + g * (x - y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(rho: &[f64], caps: &[f64], budget: f64) -> FeasibleSet<f64> {
        FeasibleSet {
            unit_costs: rho.to_vec(),
            caps: caps.to_vec(),
            budget,
        }
    }

    /// Best value over all points with every coordinate at 0 or its cap,
    /// plus at most one coordinate absorbing the leftover budget.
    fn brute_force(k: &[f64], fs: &FeasibleSet<f64>) -> f64 {
        let n = k.len();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            let mut x = vec![0.0; n];
            for j in 0..n {
                if mask >> j & 1 == 1 {
                    x[j] = fs.caps[j];
                }
            }
            let spent = fs.spend(&x);
            if spent > fs.budget + 1e-12 {
                continue;
            }
            best = best.max(dot(k, &x));
            for j in 0..n {
                if mask >> j & 1 == 0 && fs.unit_costs[j] > 0.0 {
                    let frac = (fs.budget - spent) / fs.unit_costs[j];
                    if frac <= fs.caps[j] {
                        best = best.max(dot(k, &x) + k[j] * frac);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn zero_budget_keeps_only_free_users() {
        let fs = set(&[0.0, 1.0, 0.0, 2.0], &[0.7, 1.0, 0.4, 1.0], 0.0);
        let s = solve_linear_subproblem(&LinearSubproblem {
            k: vec![1.0, 5.0, -1.0, 3.0],
            set: fs,
        })
        .unwrap();
        assert_eq!(s, vec![0.7, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fractional_fill() {
        let fs = set(&[1.0; 3], &[1.0; 3], 1.5);
        let k = [3.0, 2.0, 1.0];
        let s = LinearOracle::new(&fs).unwrap().solve(&k).unwrap();
        assert_eq!(s, vec![1.0, 0.5, 0.0]);
        assert_eq!(dot(&k, &s), 4.0);
        assert_eq!(brute_force(&k, &fs), 4.0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let fs = set(&[2.0, 1.0, 1.0], &[1.0; 3], 1.0);
        let s = LinearOracle::new(&fs)
            .unwrap()
            .solve(&[2.0, 1.0, 1.0])
            .unwrap();
        assert_eq!(s, vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn negative_coefficients_are_never_bought() {
        let fs = set(&[1.0, 1.0], &[1.0, 1.0], 10.0);
        let s = LinearOracle::new(&fs).unwrap().solve(&[1.0, -1.0]).unwrap();
        assert_eq!(s, vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_negative_inputs() {
        assert!(LinearOracle::new(&set(&[-1.0], &[1.0], 1.0)).is_err());
        assert!(LinearOracle::new(&set(&[1.0], &[1.0], -1.0)).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(fw_gap(&[1.0, 2.0], &[1.0, 1.0], &[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(fw_gap(&[1.0, 2.0], &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
        assert!(fw_gap(&[1.0], &[1.0, 1.0], &[0.0]).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, FeasibleSet<f64>)> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..3.0], n),
                prop::collection::vec(0.0f64..=1.0, n),
                0.0f64..4.0,
            )
                .prop_map(|(k, rho, caps, b)| (k, set(&rho, &caps, b)))
        })
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration((k, fs) in instance()) {
            let s = LinearOracle::new(&fs).unwrap().solve(&k).unwrap();
            let r = fs.residuals(&s);
            prop_assert!(r.box_excess == 0.0 && r.budget_excess <= 1e-12);
            prop_assert!((dot(&k, &s) - brute_force(&k, &fs)).abs() <= 1e-9);
        }

        #[test]
        fn certificate_closes_gap((k, fs) in instance()) {
            let oracle = LinearOracle::new(&fs).unwrap();
            let s = oracle.solve(&k).unwrap();
            let c = oracle.certificate(&k, &s).unwrap();
            prop_assert!(c.infeasibility <= 1e-12);
            prop_assert!(c.duality_gap() <= 1e-9);
        }

        #[test]
        fn at_most_one_fractional_paying_user((k, fs) in instance()) {
            let s = LinearOracle::new(&fs).unwrap().solve(&k).unwrap();
            let fractional = (0..k.len())
                .filter(|&n| fs.unit_costs[n] > 0.0 && s[n] > 0.0 && s[n] < fs.caps[n])
                .count();
            prop_assert!(fractional <= 1);
        }

        #[test]
        fn budget_is_tight_when_it_binds((k, fs) in instance()) {
            let s = LinearOracle::new(&fs).unwrap().solve(&k).unwrap();
            let positive_cost: f64 = (0..k.len())
                .filter(|&n| k[n] > 0.0)
                .map(|n| fs.unit_costs[n] * fs.caps[n])
                .sum();
            if positive_cost >= fs.budget {
                prop_assert!((fs.spend(&s) - fs.budget).abs() <= 1e-12);
            } else {
                for n in 0..k.len() {
                    if k[n] > 0.0 {
                        prop_assert_eq!(s[n], fs.caps[n]);
                    }
                }
            }
        }

        #[test]
        fn relabeling_permutes_output((k, fs) in instance(), shift in 0usize..8) {
            // distinct ratios keep the permutation free of tie effects
            let n = k.len();
            let k: Vec<f64> = k.iter().enumerate().map(|(j, &x)| x + 1e-3 * j as f64).collect();
            let perm: Vec<usize> = (0..n).map(|j| (j + shift) % n).collect();
            let pk: Vec<f64> = perm.iter().map(|&j| k[j]).collect();
            let pfs = set(
                &perm.iter().map(|&j| fs.unit_costs[j]).collect::<Vec<_>>(),
                &perm.iter().map(|&j| fs.caps[j]).collect::<Vec<_>>(),
                fs.budget,
            );
            let s = LinearOracle::new(&fs).unwrap().solve(&k).unwrap();
            let ps = LinearOracle::new(&pfs).unwrap().solve(&pk).unwrap();
            for (i, &j) in perm.iter().enumerate() {
                prop_assert!((ps[i] - s[j]).abs() <= 1e-12);
            }
        }
    }
}
