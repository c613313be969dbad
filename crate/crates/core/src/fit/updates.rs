//! Closed-form block updates of the M-step.

use crate::error::{Error, Result};
use crate::model::{Penalty, PiExponent, Responsibilities};
use crate::scalar::Scalar;
use crate::wavelet::DesignMatrix;

/// Lower bound applied to every mixing proportion.
pub const PI_FLOOR: f64 = 1e-8;

const BISECTION_STEPS: usize = 200;

/// Stage-one M-step objective in `pi`:
/// `-sum_r a_r log pi_r + sum_r b_r pi_r^gamma`, with `a_r` the mean
/// responsibility and `b_r = lambda * sum_q w_{r,q} |phi_{r,q}|`.
pub fn pi_objective<T: Scalar>(a: &[T], b: &[T], gamma: PiExponent, pi: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(pi)
        .map(|((&a, &b), &p)| {
            let pen = if b.is_zero() { T::zero() } else { b * gamma.apply(p) };
            -a * p.ln() + pen
        })
        .sum()
}

/// Mixing-proportion update. Minimizes [`pi_objective`] over the open simplex
/// with the non-intercept coefficients held fixed. `current` is only consulted
/// for `gamma = 1/2`, where the objective is not convex and the update keeps
/// whichever candidate (stationary point, unpenalized proportions, current
/// value) scores lowest.
pub fn update_pi<T: Scalar>(
    resp: &Responsibilities<T>,
    phi: &[Vec<T>],
    penalty: &Penalty<T>,
    current: &[T],
) -> Vec<T> {
    let n = T::from_count(resp.n_obs());
    let c = resp.n_components();
    let a: Vec<T> = (0..c).map(|r| resp.mass(r) / n).collect();
    let b: Vec<T> = (0..c)
        .map(|r| {
            let norm = penalty.component_norm(r, &phi[r]);
            if norm.is_zero() {
                T::zero()
            } else {
                penalty.lambda * norm
            }
        })
        .collect();

    let pi = if b.iter().all(|v| v.is_zero()) || penalty.gamma == PiExponent::Zero {
        normalized(a.clone())
    } else {
        match penalty.gamma {
            PiExponent::One => kkt_linear(&a, &b),
            PiExponent::Half => {
                let mut candidates = vec![normalized(a.clone())];
                if let Some(p) = kkt_sqrt(&a, &b) {
                    candidates.push(p);
                }
                if current.len() == c && current.iter().all(|&v| v > T::zero()) {
                    candidates.push(current.to_vec());
                }
                candidates
                    .into_iter()
                    .map(|p| (pi_objective(&a, &b, PiExponent::Half, &p), p))
                    .fold(None::<(T, Vec<T>)>, |best, (v, p)| match best {
                        Some((bv, _)) if bv <= v => best,
                        _ => Some((v, p)),
                    })
                    .map(|(_, p)| p)
                    .expect("at least one candidate")
            }
            PiExponent::Zero => unreachable!(),
        }
    };
    apply_floor(pi)
}

fn normalized<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    let s: T = v.iter().copied().sum();
    v.iter_mut().for_each(|x| *x = *x / s);
    v
}

fn apply_floor<T: Scalar>(pi: Vec<T>) -> Vec<T> {
    let floor = T::lit(PI_FLOOR);
    if pi.iter().all(|&p| p >= floor) {
        return pi;
    }
    normalized(pi.into_iter().map(|p| p.max(floor)).collect())
}

/// `gamma = 1`: `pi_r = a_r / (nu + b_r)` with `nu` chosen so the sum is 1.
fn kkt_linear<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let min_b = b.iter().copied().fold(T::infinity(), T::min);
    let total = |nu: T| -> T { a.iter().zip(b).map(|(&a, &b)| a / (nu + b)).sum() };
    // total is decreasing on (-min_b, inf); total(1 - min_b) <= sum a = 1.
    let mut lo = -min_b;
    let mut hi = T::one() - min_b;
    for _ in 0..BISECTION_STEPS {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    normalized(a.iter().zip(b).map(|(&a, &b)| a / (hi + b)).collect())
}

/// `gamma = 1/2`: stationary point with positive multiplier, if one exists.
/// With `u = sqrt(pi)`, each component solves `2 nu u^2 + b u - 2 a = 0`.
fn kkt_sqrt<T: Scalar>(a: &[T], b: &[T]) -> Option<Vec<T>> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let sixteen = T::lit(16.0);
    let root = |nu: T, a: T, b: T| -> T { (-b + (b * b + sixteen * nu * a).sqrt()) / (four * nu) };
    let total = |nu: T| -> T { a.iter().zip(b).map(|(&a, &b)| root(nu, a, b).powi(2)).sum() };
    // As nu -> 0+, u_r -> 2 a_r / b_r (infinite when b_r = 0).
    let limit: T = a
        .iter()
        .zip(b)
        .map(|(&a, &b)| if b.is_zero() { T::infinity() } else { (two * a / b).powi(2) })
        .sum();
    if limit <= T::one() {
        return None;
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    while total(hi) > T::one() {
        hi = hi * two;
        if !hi.is_finite() {
            return None;
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = lo + (hi - lo) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(normalized(
        a.iter().zip(b).map(|(&a, &b)| root(hi, a, b).powi(2)).collect(),
    ))
}

/// Positive root of `s rho^2 - b rho - m = 0`, written to avoid cancellation.
pub(crate) fn rho_root<T: Scalar>(inner: T, y_norm_sq: T, mass: T) -> T {
    let four = T::lit(4.0);
    let disc = (inner * inner + four * y_norm_sq * mass).sqrt();
    if inner >= T::zero() {
        (inner + disc) / (T::lit(2.0) * y_norm_sq)
    } else {
        T::lit(2.0) * mass / (disc - inner)
    }
}

fn check_component<T: Scalar>(resp: &Responsibilities<T>, r: usize) -> Result<T> {
    let mass = resp.mass(r);
    if !(mass > T::zero()) {
        return Err(Error::DegenerateComponent {
            component: r,
            reason: "zero responsibility mass".into(),
        });
    }
    Ok(mass)
}

/// Scale update
/// `rho_r = (<Y~, Z~ phi_r> + sqrt(<Y~, Z~ phi_r>^2 + 4 |Y~|^2 sum_i Delta_{i,r})) / (2 |Y~|^2)`
/// with `Y~_i = sqrt(Delta_{i,r}) Y_i` and rows `Z~_i = sqrt(Delta_{i,r}) Z_i`.
pub fn update_rho<T: Scalar>(
    r: usize,
    resp: &Responsibilities<T>,
    y: &[T],
    z: &DesignMatrix<T>,
    phi_r: &[T],
) -> Result<T> {
    let mass = check_component(resp, r)?;
    let fitted = z.mul_vec(phi_r);
    let (mut inner, mut y_norm_sq) = (T::zero(), T::zero());
    for i in 0..y.len() {
        let w = resp.get(i, r);
        inner = inner + w * y[i] * fitted[i];
        y_norm_sq = y_norm_sq + w * y[i] * y[i];
    }
    if !(y_norm_sq > T::zero()) {
        return Err(Error::DegenerateComponent {
            component: r,
            reason: "weighted response norm is zero".into(),
        });
    }
    Ok(rho_root(inner, y_norm_sq, mass))
}

/// Unpenalized intercept update given the new scale and the current
/// non-intercept coefficients (entry 0 of `phi_r` is ignored).
pub fn update_intercept<T: Scalar>(
    r: usize,
    resp: &Responsibilities<T>,
    y: &[T],
    z: &DesignMatrix<T>,
    rho: T,
    phi_r: &[T],
) -> Result<T> {
    let mass = check_component(resp, r)?;
    let mut rest = phi_r.to_vec();
    rest[0] = T::zero();
    let fitted = z.mul_vec(&rest);
    let (mut wy, mut wf) = (T::zero(), T::zero());
    for i in 0..y.len() {
        let w = resp.get(i, r);
        wy = wy + w * y[i];
        wf = wf + w * fitted[i];
    }
    Ok((rho * wy - wf) / mass)
}

/// Result of one soft-thresholded coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateStep<T> {
    pub value: T,
    /// Set when the weighted column vanishes but the score exceeds the threshold.
    pub degenerate: bool,
}

/// Minimizer of `norm_sq / 2 * x^2 + score * x + threshold * |x|`.
#[inline]
pub fn coordinate_update<T: Scalar>(score: T, threshold: T, norm_sq: T) -> CoordinateStep<T> {
    if score.abs() <= threshold {
        return CoordinateStep {
            value: T::zero(),
            degenerate: false,
        };
    }
    if !(norm_sq > T::zero()) {
        return CoordinateStep {
            value: T::zero(),
            degenerate: true,
        };
    }
    let value = if score > threshold {
        (threshold - score) / norm_sq
    } else {
        -(threshold + score) / norm_sq
    };
    CoordinateStep {
        value,
        degenerate: false,
    }
}

/// `S_q = -rho <Z~_q, Y~> + sum_{s != q} phi_s <Z~_q, Z~_s>`, evaluated
/// directly from inner products. `phi` must hold the already-updated values for
/// `s < q` and the previous ones for `s > q`.
pub fn coordinate_score<T: Scalar>(
    r: usize,
    q: usize,
    resp: &Responsibilities<T>,
    y: &[T],
    z: &DesignMatrix<T>,
    rho: T,
    phi: &[T],
) -> T {
    let zq = z.column(q);
    let weighted_dot = |a: &[T], b: &[T]| -> T {
        (0..y.len()).map(|i| resp.get(i, r) * a[i] * b[i]).sum()
    };
    let mut s = -rho * weighted_dot(zq, y);
    for (col, &p) in phi.iter().enumerate() {
        if col != q && !p.is_zero() {
            s = s + p * weighted_dot(zq, z.column(col));
        }
    }
    s
}

/// `|Z~_q|^2 = sum_i Delta_{i,r} Z_{i,q}^2`.
pub fn weighted_column_norm<T: Scalar>(r: usize, q: usize, resp: &Responsibilities<T>, z: &DesignMatrix<T>) -> T {
    z.column(q)
        .iter()
        .enumerate()
        .map(|(i, &v)| resp.get(i, r) * v * v)
        .sum()
}
