//! Cox proportional-hazards regression by Newton-Raphson on the log partial
//! likelihood.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};

/// Two-sided 95% normal quantile used for Wald intervals.
pub const Z95: f64 = 1.959964;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoxError {
    #[error("no events in the data")]
    NoEvents,
    #[error("covariate `{0}` is constant")]
    ConstantCovariate(String),
    #[error("monotone likelihood: coefficient `{0}` diverges (complete separation)")]
    MonotoneLikelihood(String),
    #[error("information matrix is singular")]
    SingularHessian,
    #[error("fit did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("input lengths differ: {rows} design rows, {times} times, {events} events")]
    LengthMismatch { rows: usize, times: usize, events: usize },
    #[error("design matrix needs at least one covariate")]
    NoCovariates,
    #[error("coefficient index {0} out of range")]
    BadIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ties {
    #[default]
    Efron,
    Breslow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    pub ties: Ties,
    pub max_iter: usize,
    /// Convergence bound on the max-norm of the score.
    pub tol: f64,
    pub max_halvings: usize,
    /// Any |beta| beyond this during iteration is reported as separation.
    pub divergence_bound: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions { ties: Ties::Efron, max_iter: 50, tol: 1e-8, max_halvings: 10, divergence_bound: 50.0 }
    }
}

/// Row-major `n x p` covariate matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    names: Vec<String>,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Self {
        let n = columns.first().map_or(0, |c| c.1.len());
        let p = columns.len();
        assert!(columns.iter().all(|c| c.1.len() == n), "design columns must have equal length");
        let mut data = vec![0.0; n * p];
        for (j, (_, col)) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                data[i * p + j] = *v;
            }
        }
        DesignMatrix { n, names: columns.into_iter().map(|c| c.0).collect(), data }
    }

    pub fn single(name: &str, column: Vec<f64>) -> Self {
        Self::from_columns(vec![(String::from(name), column)])
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.cols();
        &self.data[i * p..(i + 1) * p]
    }
}

/// Value, score and observed information of the log partial likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loglik: f64,
    pub score: Vec<f64>,
    /// Negative Hessian, row-major `p x p`.
    pub information: Vec<f64>,
}

/// Log partial likelihood of a fixed data set, ready to evaluate at any beta.
/// Covariates are centered internally; that leaves value, score and
/// information unchanged and keeps `exp` in range.
#[derive(Debug, Clone)]
pub struct PartialLikelihood {
    p: usize,
    x: Vec<f64>,
    /// Groups of subject indices sharing a time, latest time first.
    groups: Vec<Vec<usize>>,
    events: Vec<bool>,
    ties: Ties,
}

impl PartialLikelihood {
    pub fn new(design: &DesignMatrix, times: &[f64], events: &[bool], ties: Ties) -> Result<Self, CoxError> {
        let n = design.rows();
        if times.len() != n || events.len() != n {
            return Err(CoxError::LengthMismatch { rows: n, times: times.len(), events: events.len() });
        }
        let p = design.cols();
        if p == 0 {
            return Err(CoxError::NoCovariates);
        }
        let mut means = vec![0.0; p];
        for i in 0..n {
            for j in 0..p {
                means[j] += design.get(i, j);
            }
        }
        means.iter_mut().for_each(|m| *m /= n.max(1) as f64);
        let mut x = vec![0.0; n * p];
        for i in 0..n {
            for j in 0..p {
                x[i * p + j] = design.get(i, j) - means[j];
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if times[g[0]] == times[i] => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        Ok(PartialLikelihood { p, x, groups, events: events.to_vec(), ties })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn evaluate(&self, beta: &[f64]) -> Evaluation {
        let p = self.p;
        let mut loglik = 0.0;
        let mut score = vec![0.0; p];
        let mut info = vec![0.0; p * p];

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        let mut d1 = vec![0.0; p];
        let mut d2 = vec![0.0; p * p];
        let mut mean = vec![0.0; p];

        for group in &self.groups {
            let mut deaths = 0usize;
            let mut d0 = 0.0;
            d1.iter_mut().for_each(|v| *v = 0.0);
            d2.iter_mut().for_each(|v| *v = 0.0);
            for &i in group {
                let xi = &self.x[i * p..(i + 1) * p];
                let eta: f64 = xi.iter().zip(beta).map(|(a, b)| a * b).sum();
                let w = libm::exp(eta);
                s0 += w;
                for j in 0..p {
                    s1[j] += w * xi[j];
                    for k in 0..p {
                        s2[j * p + k] += w * xi[j] * xi[k];
                    }
                }
                if self.events[i] {
                    deaths += 1;
                    loglik += eta;
                    d0 += w;
                    for j in 0..p {
                        score[j] += xi[j];
                        d1[j] += w * xi[j];
                        for k in 0..p {
                            d2[j * p + k] += w * xi[j] * xi[k];
                        }
                    }
                }
            }
            if deaths == 0 {
                continue;
            }
            match self.ties {
                Ties::Breslow => {
                    let d = deaths as f64;
                    loglik -= d * libm::log(s0);
                    for j in 0..p {
                        mean[j] = s1[j] / s0;
                    }
                    for j in 0..p {
                        score[j] -= d * mean[j];
                        for k in 0..p {
                            info[j * p + k] += d * (s2[j * p + k] / s0 - mean[j] * mean[k]);
                        }
                    }
                }
                Ties::Efron => {
                    for r in 0..deaths {
                        let frac = r as f64 / deaths as f64;
                        let denom = s0 - frac * d0;
                        loglik -= libm::log(denom);
                        for j in 0..p {
                            mean[j] = (s1[j] - frac * d1[j]) / denom;
                        }
                        for j in 0..p {
                            score[j] -= mean[j];
                            for k in 0..p {
                                info[j * p + k] += (s2[j * p + k] - frac * d2[j * p + k]) / denom - mean[j] * mean[k];
                            }
                        }
                    }
                }
            }
        }
        Evaluation { loglik, score, information: info }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub hr: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub loglik: f64,
    /// Log partial likelihood at beta = 0.
    pub loglik_null: f64,
    pub score: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ties: Ties,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fits `h(t | x) = h0(t) exp(x . beta)`. A run that uses up `max_iter`
/// returns the last iterate with `converged == false`.
pub fn cox_fit(design: &DesignMatrix, times: &[f64], events: &[bool], options: CoxOptions) -> Result<CoxFit, CoxError> {
    let lik = PartialLikelihood::new(design, times, events, options.ties)?;
    if !events.iter().any(|&e| e) {
        return Err(CoxError::NoEvents);
    }
    let p = lik.dim();
    for j in 0..p {
        let first = design.get(0, j);
        if (0..design.rows()).all(|i| design.get(i, j) == first) {
            return Err(CoxError::ConstantCovariate(design.names()[j].clone()));
        }
    }
    let diverged = |beta: &[f64]| -> Option<CoxError> {
        beta.iter()
            .position(|b| !(b.abs() <= options.divergence_bound))
            .map(|j| CoxError::MonotoneLikelihood(design.names()[j].clone()))
    };

    let mut beta = vec![0.0; p];
    let mut current = lik.evaluate(&beta);
    let loglik_null = current.loglik;
    let mut iterations = 0;
    let mut converged = max_abs(&current.score) <= options.tol;
    while !converged && iterations < options.max_iter {
        iterations += 1;
        let l = cholesky(&current.information, p).ok_or(CoxError::SingularHessian)?;
        let mut step = cholesky_solve(&l, p, &current.score);
        let mut candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
        if let Some(e) = diverged(&candidate) {
            return Err(e);
        }
        let mut next = lik.evaluate(&candidate);
        let mut halvings = 0;
        let slack = 1e-12 * (1.0 + current.loglik.abs());
        while !(next.loglik >= current.loglik - slack) && halvings < options.max_halvings {
            halvings += 1;
            step.iter_mut().for_each(|s| *s *= 0.5);
            candidate = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            next = lik.evaluate(&candidate);
        }
        beta = candidate;
        current = next;
        converged = max_abs(&current.score) <= options.tol;
    }

    let l = cholesky(&current.information, p);
    if converged {
        let l = l.as_ref().ok_or(CoxError::SingularHessian)?;
        // A vanishing score with a Newton step that is still large means the
        // likelihood keeps rising as |beta| grows.
        let remaining = cholesky_solve(l, p, &current.score);
        if let Some(j) = (0..p).find(|&j| remaining[j].abs() > 1e-4 * beta[j].abs().max(1.0)) {
            return Err(CoxError::MonotoneLikelihood(design.names()[j].clone()));
        }
    }
    let se: Vec<f64> = match &l {
        Some(l) => {
            let inv = cholesky_inverse(l, p);
            (0..p).map(|j| libm::sqrt(inv[j * p + j])).collect()
        }
        None => vec![f64::NAN; p],
    };
    let hr: Vec<f64> = beta.iter().map(|b| libm::exp(*b)).collect();
    let ci95 = beta.iter().zip(&se).map(|(b, s)| wald_interval(*b, *s, Z95)).collect();
    Ok(CoxFit {
        names: design.names().to_vec(),
        beta,
        se,
        hr,
        ci95,
        loglik: current.loglik,
        loglik_null,
        score: current.score,
        iterations,
        converged,
        ties: options.ties,
    })
}

/// `(exp(beta - z se), exp(beta + z se))`
pub fn wald_interval(beta: f64, se: f64, z: f64) -> (f64, f64) {
    (libm::exp(beta - z * se), libm::exp(beta + z * se))
}

/// Hazard ratio and Wald 95% interval of coefficient `index`.
pub fn hr_report(fit: &CoxFit, index: usize) -> Result<(f64, f64, f64), CoxError> {
    hr_report_with(fit, index, Z95)
}

/// As [`hr_report`] with an arbitrary normal quantile.
pub fn hr_report_with(fit: &CoxFit, index: usize, z: f64) -> Result<(f64, f64, f64), CoxError> {
    if !fit.converged {
        return Err(CoxError::NotConverged(fit.iterations));
    }
    let beta = *fit.beta.get(index).ok_or(CoxError::BadIndex(index))?;
    let (lo, hi) = wald_interval(beta, fit.se[index], z);
    Ok((libm::exp(beta), lo, hi))
}

impl CoxFit {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for j in 0..self.beta.len() {
            s += &format!(
                "{}: beta={:.4} se={:.4} hr={:.3} ({:.3}-{:.3})\n",
                self.names[j], self.beta[j], self.se[j], self.hr[j], self.ci95[j].0, self.ci95[j].1
            );
        }
        s
    }
}
