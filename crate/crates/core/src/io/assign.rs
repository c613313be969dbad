//! Group assignment, component-wise prediction and leave-one-out relative
//! prediction error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig};
use crate::model::{responsibilities, MixtureParams, Responsibilities};
use crate::scalar::Scalar;
use crate::wavelet::DesignMatrix;

/// Index of the largest entry of each row; ties go to the lower index.
pub fn assign_groups<T: Scalar>(resp: &Responsibilities<T>) -> Vec<usize> {
    (0..resp.n_obs()).map(|i| argmax(resp.row(i))).collect()
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (r, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = r;
        }
    }
    best
}

/// Which component's mean predicts an observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    /// Highest posterior responsibility given the observed response.
    MaxResponsibility,
    /// Responses below `threshold` use one component, the rest another.
    /// `None` roles pick the component with the largest coefficient function
    /// for `below` and the smallest for `at_or_above`.
    Threshold {
        threshold: f64,
        below: Option<usize>,
        at_or_above: Option<usize>,
    },
}

impl AssignmentRule {
    /// Parses `max-resp`, `threshold:T` or `threshold:T:BELOW:ABOVE`
    /// (component numbers 1-based).
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown assignment rule '{text}'"));
        if text == "max-resp" {
            return Ok(Self::MaxResponsibility);
        }
        let rest = text.strip_prefix("threshold:").ok_or_else(bad)?;
        let parts: Vec<&str> = rest.split(':').collect();
        let threshold: f64 = parts[0].parse().map_err(|_| bad())?;
        if !threshold.is_finite() {
            return Err(bad());
        }
        let role = |s: &str| match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(bad()),
        };
        match parts.len() {
            1 => Ok(Self::Threshold {
                threshold,
                below: None,
                at_or_above: None,
            }),
            3 => Ok(Self::Threshold {
                threshold,
                below: Some(role(parts[1])?),
                at_or_above: Some(role(parts[2])?),
            }),
            _ => Err(bad()),
        }
    }
}

/// Components ordered by the size of their coefficient vectors `beta_r`
/// (intercept excluded): `(largest, smallest)`, ties to the lower index.
pub fn signal_roles<T: Scalar>(params: &MixtureParams<T>) -> (usize, usize) {
    let norms: Vec<T> = params
        .phi
        .iter()
        .zip(&params.rho)
        .map(|(p, &rho)| p[1..].iter().map(|v| (*v / rho).powi(2)).sum::<T>())
        .collect();
    let mut largest = 0;
    let mut smallest = 0;
    for (r, &v) in norms.iter().enumerate() {
        if v > norms[largest] {
            largest = r;
        }
        if v < norms[smallest] {
            smallest = r;
        }
    }
    (largest, smallest)
}

/// Component labels for `y` under `rule`.
pub fn assign<T: Scalar>(
    params: &MixtureParams<T>,
    y: &[T],
    z: &DesignMatrix<T>,
    rule: AssignmentRule,
) -> Result<Vec<usize>> {
    match rule {
        AssignmentRule::MaxResponsibility => Ok(assign_groups(&responsibilities(params, y, z)?)),
        AssignmentRule::Threshold {
            threshold,
            below,
            at_or_above,
        } => {
            let (large, small) = signal_roles(params);
            let below = below.unwrap_or(large);
            let above = at_or_above.unwrap_or(small);
            let c = params.n_components();
            if below >= c || above >= c {
                return Err(Error::InvalidConfig(format!("rule names a component beyond C = {c}")));
            }
            let t = T::lit(threshold);
            Ok(y.iter().map(|&v| if v < t { below } else { above }).collect())
        }
    }
}

/// `Z_i beta_{label_i}`, the assigned component's mean at each row.
pub fn predict_assigned<T: Scalar>(params: &MixtureParams<T>, z: &DesignMatrix<T>, labels: &[usize]) -> Result<Vec<T>> {
    if labels.len() != z.rows() {
        return Err(Error::InvalidShape(format!("{} labels for {} rows", labels.len(), z.rows())));
    }
    if params.width() != z.cols() {
        return Err(Error::InvalidShape("model does not match the design".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&r| r >= params.n_components()) {
        return Err(Error::InvalidConfig(format!("label {bad} out of range")));
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &r)| z.row_dot(i, &params.phi[r]) / params.rho[r])
        .collect())
}

/// `sum_r pi_r Z_i beta_r`, the marginal mean.
pub fn mixture_mean<T: Scalar>(params: &MixtureParams<T>, z: &DesignMatrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); z.rows()];
    for r in 0..params.n_components() {
        for (o, m) in out.iter_mut().zip(params.component_means(z, r)) {
            *o = *o + params.pi[r] * m;
        }
    }
    out
}

/// `sum (y - yhat)^2 / sum y^2`.
pub fn relative_prediction_error<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    if y.len() != yhat.len() {
        return Err(Error::InvalidShape(format!("{} responses, {} predictions", y.len(), yhat.len())));
    }
    let total: T = y.iter().map(|v| *v * *v).sum();
    if total.is_zero() {
        return Err(Error::UndefinedMetric("all responses are zero".into()));
    }
    let err: T = y.iter().zip(yhat).map(|(a, b)| (*a - *b).powi(2)).sum();
    Ok(err / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvrpeReport<T> {
    pub value: T,
    /// Leave-one-out prediction of each response.
    pub predictions: Vec<T>,
    /// Component used for each prediction.
    pub labels: Vec<usize>,
}

/// Leave-one-out CVRPE where `protocol` fits the model on the retained rows.
pub fn cvrpe_with<T, F>(y: &[T], z: &DesignMatrix<T>, rule: AssignmentRule, protocol: F) -> Result<CvrpeReport<T>>
where
    T: Scalar,
    F: Fn(&[T], &DesignMatrix<T>) -> Result<MixtureParams<T>> + Sync,
{
    let n = y.len();
    if n < 2 {
        return Err(Error::TooFewObservations { n, components: 2 });
    }
    if z.rows() != n {
        return Err(Error::InvalidShape(format!("{n} responses for {} design rows", z.rows())));
    }
    if y.iter().all(|v| v.is_zero()) {
        return Err(Error::UndefinedMetric("all responses are zero".into()));
    }
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            let y_train: Vec<T> = keep.iter().map(|&k| y[k]).collect();
            let params = protocol(&y_train, &z.select_rows(&keep))?;
            let zi = z.select_rows(&[i]);
            let label = assign(&params, &y[i..=i], &zi, rule)?[0];
            Ok((predict_assigned(&params, &zi, &[label])?[0], label))
        })
        .collect::<Result<Vec<(T, usize)>>>()?;
    let (predictions, labels): (Vec<T>, Vec<usize>) = out.into_iter().unzip();
    Ok(CvrpeReport {
        value: relative_prediction_error(y, &predictions)?,
        predictions,
        labels,
    })
}

/// Leave-one-out CVRPE refitting with `config` each time.
pub fn cvrpe<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>, rule: AssignmentRule) -> Result<CvrpeReport<T>> {
    cvrpe_with(y, z, rule, |yt, zt| fit::fit(yt, zt, config).map(|f| f.params))
}
