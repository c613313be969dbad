//! Penalized EM for the wavelet-domain mixture of regressions.
//!
//! Each EM iteration computes responsibilities at the current parameters and
//! then runs a two-stage M-step: the mixing proportions are updated with the
//! coefficients fixed, after which every component refreshes its scale and
//! intercept and performs one coordinate-descent sweep over its penalized
//! coefficients. Ten of every eleven sweeps visit only the active set.

mod updates;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{e_step, Penalty, PenaltyWeights, Responsibilities};
use crate::scalar::Scalar;
use crate::wavelet::DesignMatrix;

pub use crate::model::{MixtureParams, PiExponent};
pub use updates::{
    coordinate_score, coordinate_update, pi_objective, update_intercept, update_pi, update_rho,
    weighted_column_norm, CoordinateStep, PI_FLOOR,
};

/// Iterations a component may stay below the mass threshold before it is
/// reported degenerate.
const DEGENERATE_STREAK: usize = 20;
const DEGENERATE_MASS_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig<T> {
    pub components: usize,
    pub lambda: T,
    pub tol: T,
    pub max_em_iters: usize,
    /// Sweep schedule: `period - 1` active-set iterations, then one full sweep.
    pub active_set_period: usize,
    pub seed: u64,
    pub adaptive: bool,
    pub adaptive_eps: T,
    pub gamma: PiExponent,
}

impl<T: Scalar> FitConfig<T> {
    pub fn new(components: usize, lambda: T) -> Self {
        Self {
            components,
            lambda,
            tol: T::lit(1e-6),
            max_em_iters: 500,
            active_set_period: 11,
            seed: 0,
            adaptive: false,
            adaptive_eps: T::lit(0.001),
            gamma: PiExponent::One,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_components(mut self, components: usize) -> Self {
        self.components = components;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_em_iters = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::InvalidConfig("C must be at least 1".into()));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidPenalty(self.lambda.as_f64()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.active_set_period == 0 {
            return Err(Error::InvalidConfig("active-set period must be >= 1".into()));
        }
        if !(self.adaptive_eps > T::zero()) {
            return Err(Error::InvalidConfig("adaptive epsilon must be positive".into()));
        }
        Ok(())
    }

    fn penalty(&self, weights: PenaltyWeights<T>) -> Penalty<T> {
        Penalty {
            lambda: self.lambda,
            gamma: self.gamma,
            weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub params: MixtureParams<T>,
    /// Responsibilities evaluated at `params`.
    pub responsibilities: Responsibilities<T>,
    /// Penalized objective `-ell/n + penalty` after initialization and after
    /// every EM iteration.
    pub objective_trace: Vec<T>,
    pub log_likelihood: T,
    pub n_iters: usize,
    pub converged: bool,
    pub active_counts: Vec<usize>,
    /// Zero non-intercept coefficients summed over components.
    pub q0: usize,
    /// Components whose responsibility mass stayed negligible.
    pub degenerate: Vec<usize>,
    /// Coordinates skipped because their weighted column vanished.
    pub degenerate_columns: usize,
    pub lambda: T,
    pub weights: PenaltyWeights<T>,
    pub n_obs: usize,
}

impl<T: Scalar> FitResult<T> {
    pub fn n_components(&self) -> usize {
        self.params.n_components()
    }

    /// `N`, the number of wavelet-domain coefficients per component.
    pub fn n_coefficients(&self) -> usize {
        self.params.width() - 1
    }

    /// `(N + 3) C - 1 - q0`.
    pub fn effective_params(&self) -> isize {
        ((self.n_coefficients() + 3) * self.n_components()) as isize - 1 - self.q0 as isize
    }

    pub fn final_objective(&self) -> T {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

/// Random 0.9/0.1 class weights followed by one full M-step from
/// `phi = 0`, `rho = 2`, `pi = 1/C`. Returns the parameters after that M-step
/// and the initial weights.
// TODO: optional best-of-k random starts; a single start can stall in a poor
// local optimum on the bumpy setting.
pub fn initialize<T: Scalar>(
    y: &[T],
    z: &DesignMatrix<T>,
    config: &FitConfig<T>,
) -> Result<(MixtureParams<T>, Responsibilities<T>)> {
    let weights = PenaltyWeights::uniform(config.components, z.n_coefficients());
    let mut engine = Engine::new(y, z, config, config.penalty(weights), Mode::Fit)?;
    let init = engine.initial_weights();
    let params = engine.initial_params(&init);
    Ok((params, init))
}

/// Penalized EM with unit penalty weights.
pub fn em_fit<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    let weights = PenaltyWeights::uniform(config.components, z.n_coefficients());
    em_fit_weighted(y, z, config, weights)
}

/// Penalized EM with caller-supplied penalty weights.
pub fn em_fit_weighted<T: Scalar>(
    y: &[T],
    z: &DesignMatrix<T>,
    config: &FitConfig<T>,
    weights: PenaltyWeights<T>,
) -> Result<FitResult<T>> {
    check_weights(&weights, config.components, z.n_coefficients())?;
    let mut engine = Engine::new(y, z, config, config.penalty(weights), Mode::Fit)?;
    let init = engine.initial_weights();
    let start = engine.initial_params(&init);
    engine.run(start)
}

/// Penalized EM started from given parameters (no random initialization).
pub fn em_fit_from<T: Scalar>(
    y: &[T],
    z: &DesignMatrix<T>,
    config: &FitConfig<T>,
    weights: PenaltyWeights<T>,
    start: MixtureParams<T>,
) -> Result<FitResult<T>> {
    check_weights(&weights, config.components, z.n_coefficients())?;
    start.validate()?;
    if start.n_components() != config.components || start.width() != z.cols() {
        return Err(Error::InvalidShape("warm start does not match the problem".into()));
    }
    let mut engine = Engine::new(y, z, config, config.penalty(weights), Mode::Fit)?;
    engine.run(start)
}

/// Two-stage adaptive fit: a unit-weight fit, then a refit warm-started from
/// it with weights `1 / (|phi~_{r,q}| + eps)`.
pub fn adaptive_fit<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    let pilot = em_fit(y, z, config)?;
    let weights = adaptive_weights(&pilot.params, config.adaptive_eps);
    em_fit_from(y, z, config, weights, pilot.params)
}

/// Dispatches on `config.adaptive`.
pub fn fit<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>) -> Result<FitResult<T>> {
    if config.adaptive {
        adaptive_fit(y, z, config)
    } else {
        em_fit(y, z, config)
    }
}

/// `w_{r,q} = 1 / (|phi_{r,q}| + eps)` over the non-intercept entries.
pub fn adaptive_weights<T: Scalar>(pilot: &MixtureParams<T>, eps: T) -> PenaltyWeights<T> {
    PenaltyWeights {
        weights: pilot
            .phi
            .iter()
            .map(|phi| phi[1..].iter().map(|p| (p.abs() + eps).recip()).collect())
            .collect(),
    }
}

/// Smallest penalty at which every coordinate update along the EM trajectory
/// from the seeded initialization returns zero, so a fit at any
/// `lambda >= lambda_max` keeps all non-intercept coefficients at exactly 0.
pub fn lambda_max<T: Scalar>(y: &[T], z: &DesignMatrix<T>, config: &FitConfig<T>) -> Result<T> {
    let signal = (1..z.cols()).any(|q| z.column(q).iter().any(|v| !v.is_zero()));
    if !signal {
        return Err(Error::InvalidDesign("all predictor columns are zero".into()));
    }
    let probe = FitConfig {
        lambda: T::zero(),
        ..config.clone()
    };
    let weights = PenaltyWeights::uniform(config.components, z.n_coefficients());
    let mut engine = Engine::new(y, z, &probe, probe.penalty(weights), Mode::Probe)?;
    let init = engine.initial_weights();
    let start = engine.initial_params(&init);
    engine.run(start)?;
    let max = engine.probe_max;
    if !(max > T::zero()) || !max.is_finite() {
        return Err(Error::InvalidDesign("responses carry no signal for the predictors".into()));
    }
    // Guard the |S| <= n lambda pi w comparison against rounding.
    Ok(max * (T::one() + T::lit(16.0) * T::epsilon()))
}

fn check_weights<T: Scalar>(w: &PenaltyWeights<T>, c: usize, n_coef: usize) -> Result<()> {
    if w.weights.len() != c || w.weights.iter().any(|v| v.len() != n_coef) {
        return Err(Error::InvalidShape(format!("penalty weights must be {c} x {n_coef}")));
    }
    PenaltyWeights::new(w.weights.clone()).map(|_| ())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Fit,
    /// Coefficients stay frozen at zero; record the largest `|S_q| / (n pi^gamma)`.
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Full,
    Active,
}

struct Engine<'a, T: Scalar> {
    y: &'a [T],
    z: &'a DesignMatrix<T>,
    config: &'a FitConfig<T>,
    penalty: Penalty<T>,
    mode: Mode,
    n: usize,
    active: Vec<Vec<usize>>,
    low_mass_streak: Vec<usize>,
    degenerate: Vec<bool>,
    degenerate_columns: usize,
    probe_max: T,
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(
        y: &'a [T],
        z: &'a DesignMatrix<T>,
        config: &'a FitConfig<T>,
        penalty: Penalty<T>,
        mode: Mode,
    ) -> Result<Self> {
        config.validate()?;
        let n = y.len();
        if n != z.rows() {
            return Err(Error::InvalidShape(format!(
                "{n} responses for {} design rows",
                z.rows()
            )));
        }
        if n < config.components {
            return Err(Error::TooFewObservations {
                n,
                components: config.components,
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("responses must be finite".into()));
        }
        let c = config.components;
        Ok(Self {
            y,
            z,
            config,
            penalty,
            mode,
            n,
            active: vec![Vec::new(); c],
            low_mass_streak: vec![0; c],
            degenerate: vec![false; c],
            degenerate_columns: 0,
            probe_max: T::zero(),
        })
    }

    fn initial_weights(&self) -> Responsibilities<T> {
        let c = self.config.components;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let hi = T::lit(0.9);
        let lo = T::lit(0.1);
        let total = hi + lo * T::from_count(c - 1);
        let mut data = Vec::with_capacity(self.n * c);
        for _ in 0..self.n {
            let class = rng.random_range(0..c);
            data.extend((0..c).map(|r| if r == class { hi / total } else { lo / total }));
        }
        Responsibilities::from_raw(self.n, c, data)
    }

    fn initial_params(&mut self, init: &Responsibilities<T>) -> MixtureParams<T> {
        let c = self.config.components;
        let c_t = T::from_count(c);
        let mut params = MixtureParams {
            phi: vec![vec![T::zero(); self.z.cols()]; c],
            rho: vec![T::lit(2.0); c],
            pi: vec![T::one() / c_t; c],
        };
        self.m_step(init, &mut params, Sweep::Full);
        self.refresh_active(&params);
        params
    }

    fn refresh_active(&mut self, params: &MixtureParams<T>) {
        for (act, phi) in self.active.iter_mut().zip(&params.phi) {
            act.clear();
            act.extend((1..phi.len()).filter(|&q| !phi[q].is_zero()));
        }
    }

    fn m_step(&mut self, resp: &Responsibilities<T>, params: &mut MixtureParams<T>, sweep: Sweep) {
        params.pi = update_pi(resp, &params.phi, &self.penalty, &params.pi);
        for r in 0..params.n_components() {
            self.update_component(r, resp, params, sweep);
        }
    }

    fn update_component(&mut self, r: usize, resp: &Responsibilities<T>, params: &mut MixtureParams<T>, sweep: Sweep) {
        let (y, z, n) = (self.y, self.z, self.n);
        let weights = resp.column(r);
        let mass: T = weights.iter().copied().sum();
        if mass < T::lit(DEGENERATE_MASS_FRACTION) * T::from_count(n) {
            self.low_mass_streak[r] += 1;
            if self.low_mass_streak[r] >= DEGENERATE_STREAK {
                self.degenerate[r] = true;
            }
        } else {
            self.low_mass_streak[r] = 0;
        }

        let phi = &mut params.phi[r];
        let fitted = z.mul_vec(phi);
        let (mut inner, mut y_norm_sq, mut wy, mut wf) = (T::zero(), T::zero(), T::zero(), T::zero());
        for i in 0..n {
            let w = weights[i];
            inner = inner + w * y[i] * fitted[i];
            y_norm_sq = y_norm_sq + w * y[i] * y[i];
            wy = wy + w * y[i];
            wf = wf + w * fitted[i];
        }
        if !(mass > T::zero()) || !(y_norm_sq > T::zero()) {
            // Nothing identifies this component; leave it unchanged.
            return;
        }
        let rho = updates::rho_root(inner, y_norm_sq, mass);
        params.rho[r] = rho;

        let old_intercept = phi[0];
        let intercept = (rho * wy - (wf - mass * old_intercept)) / mass;
        phi[0] = intercept;
        let shift = intercept - old_intercept;

        let mut residual: Vec<T> = (0..n).map(|i| rho * y[i] - (fitted[i] + shift)).collect();
        let n_t = T::from_count(n);
        let pi_factor = self.penalty.gamma.apply(params.pi[r]);
        let base = n_t * self.penalty.lambda * pi_factor;

        let full: Vec<usize>;
        let coords: &[usize] = match (self.mode, sweep) {
            (Mode::Fit, Sweep::Active) => &self.active[r],
            _ => {
                full = (1..phi.len()).collect();
                &full
            }
        };
        for &q in coords {
            let col = z.column(q);
            let mut norm_sq = T::zero();
            let mut dot = T::zero();
            for i in 0..n {
                let wz = weights[i] * col[i];
                norm_sq = norm_sq + wz * col[i];
                dot = dot + wz * residual[i];
            }
            let old = phi[q];
            let score = -dot - old * norm_sq;
            let w = self.penalty.weights.get(r, q - 1);
            if self.mode == Mode::Probe {
                if w > T::zero() {
                    let ratio = score.abs() / (n_t * pi_factor * w);
                    if ratio > self.probe_max {
                        self.probe_max = ratio;
                    }
                }
                continue;
            }
            let step = coordinate_update(score, base * w, norm_sq);
            if step.degenerate {
                self.degenerate_columns += 1;
            }
            let delta = step.value - old;
            if !delta.is_zero() {
                for i in 0..n {
                    residual[i] = residual[i] - col[i] * delta;
                }
                phi[q] = step.value;
            }
        }
    }

    fn run(&mut self, start: MixtureParams<T>) -> Result<FitResult<T>> {
        let n_t = T::from_count(self.n);
        let tol = self.config.tol;
        let sqrt_tol = tol.sqrt();
        let period = self.config.active_set_period;

        let mut params = start;
        self.refresh_active(&params);
        let (mut resp, mut loglik) = e_step(&params, self.y, self.z)?;
        let mut objective = -loglik / n_t + self.penalty.value(&params);
        let mut trace = vec![objective.as_f64()];
        let mut trace_t = vec![objective];
        if !objective.is_finite() {
            return Err(numerical_failure(0, trace));
        }

        let mut converged = false;
        let mut pending_check = false;
        let mut iters = 0;
        for m in 1..=self.config.max_em_iters {
            iters = m;
            let sweep = if pending_check || m % period == 0 {
                Sweep::Full
            } else {
                Sweep::Active
            };
            let mut next = params.clone();
            self.m_step(&resp, &mut next, sweep);
            let (next_resp, next_loglik) = e_step(&next, self.y, self.z)?;
            let next_objective = -next_loglik / n_t + self.penalty.value(&next);
            trace.push(next_objective.as_f64());
            trace_t.push(next_objective);
            if !next_objective.is_finite() {
                return Err(numerical_failure(m, trace));
            }

            let objective_change = (next_objective - objective).abs() / (T::one() + next_objective.abs());
            let param_change = max_relative_change(&params, &next);
            let small = objective_change <= tol && param_change <= sqrt_tol;

            params = next;
            resp = next_resp;
            loglik = next_loglik;
            objective = next_objective;

            if sweep == Sweep::Full {
                self.refresh_active(&params);
                if small {
                    converged = true;
                    break;
                }
                pending_check = false;
            } else if small {
                pending_check = true;
            }
        }

        Ok(FitResult {
            active_counts: params.active_counts(),
            q0: params.zero_count(),
            responsibilities: resp,
            objective_trace: trace_t,
            log_likelihood: loglik,
            n_iters: iters,
            converged,
            degenerate: (0..self.degenerate.len()).filter(|&r| self.degenerate[r]).collect(),
            degenerate_columns: self.degenerate_columns,
            lambda: self.penalty.lambda,
            weights: self.penalty.weights.clone(),
            n_obs: self.n,
            params,
        })
    }
}

fn numerical_failure(iteration: usize, trace: Vec<f64>) -> Error {
    Error::NumericalFailure {
        iteration,
        reason: "penalized objective is not finite".into(),
        trace,
    }
}

fn max_relative_change<T: Scalar>(old: &MixtureParams<T>, new: &MixtureParams<T>) -> T {
    let rel = |a: T, b: T| (b - a).abs() / (T::one() + b.abs());
    let phi = old
        .phi
        .iter()
        .flatten()
        .zip(new.phi.iter().flatten())
        .map(|(&a, &b)| rel(a, b));
    let rho = old.rho.iter().zip(&new.rho).map(|(&a, &b)| rel(a, b));
    let pi = old.pi.iter().zip(&new.pi).map(|(&a, &b)| rel(a, b));
    phi.chain(rho).chain(pi).fold(T::zero(), T::max)
}
