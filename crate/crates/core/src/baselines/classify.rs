//! Closed-form classifiers for the baseline comparison.
//!
//! All five are deterministic given their inputs: GNB (per-class diagonal
//! Gaussians with a shared variance floor), LDA (pooled covariance + diagonal
//! ridge), QDA (per-class covariance + the same ridge), L2-regularised
//! logistic regression solved by damped Newton iterations, and KNN with
//! index-ordered tie breaking.

use ndarray::Array2;

use crate::error::{Error, Result};

const RIDGE: f64 = 1e-6;
const GNB_VAR_SMOOTHING: f64 = 1e-9;
const LR_LAMBDA: f64 = 1.0;
const LR_TOLERANCE: f64 = 1e-6;
const LR_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Gnb,
    Lda,
    Qda,
    Lr,
    Knn { k: usize },
}

impl ClassifierKind {
    pub fn name(&self) -> String {
        match self {
            ClassifierKind::Gnb => "gnb".into(),
            ClassifierKind::Lda => "lda".into(),
            ClassifierKind::Qda => "qda".into(),
            ClassifierKind::Lr => "lr".into(),
            ClassifierKind::Knn { k } => format!("knn{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<ClassifierKind> {
        match s {
            "gnb" => Ok(ClassifierKind::Gnb),
            "lda" => Ok(ClassifierKind::Lda),
            "qda" => Ok(ClassifierKind::Qda),
            "lr" => Ok(ClassifierKind::Lr),
            "knn" => Ok(ClassifierKind::Knn { k: 5 }),
            other => {
                if let Some(k) = other.strip_prefix("knn") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad knn spec '{other}'")))?;
                    if k == 0 {
                        return Err(Error::Invalid("knn needs k >= 1".into()));
                    }
                    return Ok(ClassifierKind::Knn { k });
                }
                Err(Error::Invalid(format!("unknown classifier '{other}'")))
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Fitted {
    Gnb {
        priors: [f64; 2],
        means: [Vec<f64>; 2],
        vars: [Vec<f64>; 2],
    },
    Lda {
        /// Per-class weight vector and offset of the linear discriminant.
        weights: [Vec<f64>; 2],
        offsets: [f64; 2],
    },
    Qda {
        chol: [Array2<f64>; 2],
        means: [Vec<f64>; 2],
        /// `ln(prior) - 0.5 * logdet` per class.
        constants: [f64; 2],
    },
    Lr {
        /// Feature weights plus trailing intercept.
        weights: Vec<f64>,
    },
    Knn {
        k: usize,
        train: Array2<f64>,
        labels: Vec<u8>,
    },
}

#[derive(Debug, Clone)]
pub struct ClassifierModel {
    pub kind: ClassifierKind,
    n_features: usize,
    fitted: Fitted,
}

pub fn fit_classifier(
    kind: ClassifierKind,
    features: &Array2<f64>,
    labels: &[u8],
) -> Result<ClassifierModel> {
    let (n, d) = features.dim();
    if labels.len() != n || n == 0 || d == 0 {
        return Err(Error::Shape(format!(
            "fit: {n} rows x {d} features, {} labels",
            labels.len()
        )));
    }
    let n0 = labels.iter().filter(|&&l| l == 0).count();
    let n1 = n - n0;
    if n0 == 0 || n1 == 0 {
        return Err(Error::Invalid("need at least one sample per class".into()));
    }
    let fitted = match kind {
        ClassifierKind::Gnb => fit_gnb(features, labels, n0, n1),
        ClassifierKind::Lda => fit_lda(features, labels, n0, n1)?,
        ClassifierKind::Qda => fit_qda(features, labels, n0, n1)?,
        ClassifierKind::Lr => fit_lr(features, labels)?,
        ClassifierKind::Knn { k } => {
            if k == 0 {
                return Err(Error::Invalid("knn needs k >= 1".into()));
            }
            Fitted::Knn {
                k,
                train: features.clone(),
                labels: labels.to_vec(),
            }
        }
    };
    Ok(ClassifierModel {
        kind,
        n_features: d,
        fitted,
    })
}

impl ClassifierModel {
    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<u8>> {
        let (n, d) = features.dim();
        if d != self.n_features {
            return Err(Error::Shape(format!(
                "predict: {d} features, model trained on {}",
                self.n_features
            )));
        }
        let mut out = Vec::with_capacity(n);
        for row in features.rows() {
            let x = row.as_slice().unwrap();
            out.push(self.predict_one(x));
        }
        Ok(out)
    }

    fn predict_one(&self, x: &[f64]) -> u8 {
        match &self.fitted {
            Fitted::Gnb {
                priors,
                means,
                vars,
            } => {
                let mut scores = [0.0f64; 2];
                for c in 0..2 {
                    let mut ll = priors[c].ln();
                    for (f, &v) in x.iter().enumerate() {
                        let var = vars[c][f];
                        let diff = v - means[c][f];
                        ll += -0.5 * (std::f64::consts::TAU * var).ln() - 0.5 * diff * diff / var;
                    }
                    scores[c] = ll;
                }
                u8::from(scores[1] > scores[0])
            }
            Fitted::Lda { weights, offsets } => {
                let score = |c: usize| -> f64 {
                    offsets[c] + weights[c].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                };
                u8::from(score(1) > score(0))
            }
            Fitted::Qda {
                chol,
                means,
                constants,
            } => {
                let score = |c: usize| -> f64 {
                    let diff: Vec<f64> = x.iter().zip(&means[c]).map(|(v, m)| v - m).collect();
                    // Mahalanobis via the Cholesky factor: ||L^-1 d||^2.
                    let z = forward_substitute(&chol[c], &diff);
                    let maha: f64 = z.iter().map(|v| v * v).sum();
                    constants[c] - 0.5 * maha
                };
                u8::from(score(1) > score(0))
            }
            Fitted::Lr { weights } => {
                let d = weights.len() - 1;
                let z = weights[d] + weights[..d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                u8::from(z > 0.0)
            }
            Fitted::Knn { k, train, labels } => {
                let mut scored: Vec<(f64, usize)> = train
                    .rows()
                    .into_iter()
                    .enumerate()
                    .map(|(i, row)| {
                        let d2 = row
                            .iter()
                            .zip(x)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>();
                        (d2, i)
                    })
                    .collect();
                // Distance ties resolve toward the smaller training index.
                scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let votes = scored
                    .iter()
                    .take(*k)
                    .filter(|(_, i)| labels[*i] == 1)
                    .count();
                u8::from(2 * votes > *k)
            }
        }
    }
}

fn class_means(features: &Array2<f64>, labels: &[u8], n0: usize, n1: usize) -> [Vec<f64>; 2] {
    let d = features.ncols();
    let mut means = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in features.rows().into_iter().zip(labels) {
        let m = &mut means[label as usize];
        for (slot, &v) in m.iter_mut().zip(row) {
            *slot += v;
        }
    }
    for (c, count) in [(0usize, n0), (1, n1)] {
        for slot in means[c].iter_mut() {
            *slot /= count as f64;
        }
    }
    means
}

fn fit_gnb(features: &Array2<f64>, labels: &[u8], n0: usize, n1: usize) -> Fitted {
    let (n, d) = features.dim();
    let means = class_means(features, labels, n0, n1);
    let mut vars = [vec![0.0; d], vec![0.0; d]];
    for (row, &label) in features.rows().into_iter().zip(labels) {
        let c = label as usize;
        for (f, &v) in row.iter().enumerate() {
            let diff = v - means[c][f];
            vars[c][f] += diff * diff;
        }
    }
    for (c, count) in [(0usize, n0), (1, n1)] {
        for slot in vars[c].iter_mut() {
            *slot /= count as f64;
        }
    }
    // Floor: a fraction of the largest overall feature variance.
    let mut overall_max = 0.0f64;
    for f in 0..d {
        let col: Vec<f64> = features.column(f).to_vec();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        overall_max = overall_max.max(var);
    }
    let floor = (GNB_VAR_SMOOTHING * overall_max).max(f64::MIN_POSITIVE);
    for c in 0..2 {
        for slot in vars[c].iter_mut() {
            *slot = slot.max(floor);
        }
    }
    Fitted::Gnb {
        priors: [n0 as f64 / n as f64, n1 as f64 / n as f64],
        means,
        vars,
    }
}

fn fit_lda(features: &Array2<f64>, labels: &[u8], n0: usize, n1: usize) -> Result<Fitted> {
    let (n, d) = features.dim();
    let means = class_means(features, labels, n0, n1);
    let mut cov = Array2::zeros((d, d));
    for (row, &label) in features.rows().into_iter().zip(labels) {
        let m = &means[label as usize];
        let diff: Vec<f64> = row.iter().zip(m).map(|(v, mu)| v - mu).collect();
        accumulate_outer(&mut cov, &diff);
    }
    cov.mapv_inplace(|v| v / (n - 2) as f64);
    for i in 0..d {
        cov[[i, i]] += RIDGE;
    }
    let chol = cholesky(&cov)?;
    let priors = [n0 as f64 / n as f64, n1 as f64 / n as f64];
    let mut weights: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut offsets = [0.0f64; 2];
    for c in 0..2 {
        let a = cholesky_solve(&chol, &means[c]);
        let quad: f64 = means[c].iter().zip(&a).map(|(m, w)| m * w).sum();
        offsets[c] = -0.5 * quad + priors[c].ln();
        weights[c] = a;
    }
    Ok(Fitted::Lda { weights, offsets })
}

fn fit_qda(features: &Array2<f64>, labels: &[u8], n0: usize, n1: usize) -> Result<Fitted> {
    let (n, d) = features.dim();
    let means = class_means(features, labels, n0, n1);
    let priors = [n0 as f64 / n as f64, n1 as f64 / n as f64];
    let mut chols: Vec<Array2<f64>> = Vec::with_capacity(2);
    let mut constants = [0.0f64; 2];
    for (c, count) in [(0usize, n0), (1, n1)] {
        let mut cov = Array2::zeros((d, d));
        for (row, &label) in features.rows().into_iter().zip(labels) {
            if label as usize != c {
                continue;
            }
            let diff: Vec<f64> = row.iter().zip(&means[c]).map(|(v, mu)| v - mu).collect();
            accumulate_outer(&mut cov, &diff);
        }
        let denom = (count.max(2) - 1) as f64;
        cov.mapv_inplace(|v| v / denom);
        for i in 0..d {
            cov[[i, i]] += RIDGE;
        }
        let chol = cholesky(&cov)?;
        let logdet: f64 = 2.0 * (0..d).map(|i| chol[[i, i]].ln()).sum::<f64>();
        constants[c] = priors[c].ln() - 0.5 * logdet;
        chols.push(chol);
    }
    let chol1 = chols.pop().unwrap();
    let chol0 = chols.pop().unwrap();
    Ok(Fitted::Qda {
        chol: [chol0, chol1],
        means,
        constants,
    })
}

fn fit_lr(features: &Array2<f64>, labels: &[u8]) -> Result<Fitted> {
    let (_, d) = features.dim();
    // Weights plus intercept; only the weights carry the L2 penalty.
    let mut w = vec![0.0f64; d + 1];
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();

    let logistic_loss = |w: &[f64]| -> f64 {
        let mut loss = 0.0;
        for (row, &yi) in features.rows().into_iter().zip(&y) {
            let z = w[d] + row.iter().zip(&w[..d]).map(|(x, wi)| x * wi).sum::<f64>();
            // ln(1 + e^z) - y*z, computed stably.
            loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z;
        }
        loss + 0.5 * LR_LAMBDA * w[..d].iter().map(|v| v * v).sum::<f64>()
    };

    let mut loss = logistic_loss(&w);
    for _ in 0..LR_MAX_ITER {
        // Gradient and Hessian at w.
        let mut grad = vec![0.0f64; d + 1];
        let mut hess = Array2::zeros((d + 1, d + 1));
        for (row, &yi) in features.rows().into_iter().zip(&y) {
            let x = row.as_slice().unwrap();
            let z = w[d] + x.iter().zip(&w[..d]).map(|(x, wi)| x * wi).sum::<f64>();
            let p = sigmoid(z);
            let err = p - yi;
            let r = (p * (1.0 - p)).max(1e-12);
            for f in 0..d {
                grad[f] += err * x[f];
            }
            grad[d] += err;
            for a in 0..d {
                let ra = r * x[a];
                for b in a..d {
                    hess[[a, b]] += ra * x[b];
                }
                hess[[a, d]] += ra;
            }
            hess[[d, d]] += r;
        }
        for f in 0..d {
            grad[f] += LR_LAMBDA * w[f];
            hess[[f, f]] += LR_LAMBDA;
        }
        hess[[d, d]] += 1e-10; // keep the intercept block invertible
        for a in 0..=d {
            for b in 0..a {
                hess[[a, b]] = hess[[b, a]];
            }
        }

        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= LR_TOLERANCE {
            return Ok(Fitted::Lr { weights: w });
        }

        let chol = cholesky(&hess)?;
        let step = cholesky_solve(&chol, &grad);
        // Damped Newton: halve until the loss decreases.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w
                .iter()
                .zip(&step)
                .map(|(wi, si)| wi - scale * si)
                .collect();
            let trial_loss = logistic_loss(&trial);
            if trial_loss <= loss {
                w = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No descent direction left at double precision: accept the
            // stationary point only if the gradient is already tiny.
            if grad_norm <= 1e-4 {
                return Ok(Fitted::Lr { weights: w });
            }
            return Err(Error::Numerical(format!(
                "logistic regression line search stalled at gradient norm {grad_norm:.3e}"
            )));
        }
    }
    let final_grad_ok = {
        let mut grad = vec![0.0f64; d + 1];
        for (row, &yi) in features.rows().into_iter().zip(&y) {
            let x = row.as_slice().unwrap();
            let z = w[d] + x.iter().zip(&w[..d]).map(|(x, wi)| x * wi).sum::<f64>();
            let p = sigmoid(z);
            for f in 0..d {
                grad[f] += (p - yi) * x[f];
            }
            grad[d] += p - yi;
        }
        for f in 0..d {
            grad[f] += LR_LAMBDA * w[f];
        }
        grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= LR_TOLERANCE
    };
    if final_grad_ok {
        Ok(Fitted::Lr { weights: w })
    } else {
        Err(Error::Numerical(format!(
            "logistic regression did not reach gradient norm {LR_TOLERANCE} in {LR_MAX_ITER} iterations"
        )))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn accumulate_outer(cov: &mut Array2<f64>, diff: &[f64]) {
    let d = diff.len();
    for a in 0..d {
        let da = diff[a];
        for b in a..d {
            cov[[a, b]] += da * diff[b];
        }
    }
    // Only the upper triangle is accumulated; mirror on demand.
    for a in 0..d {
        for b in 0..a {
            cov[[a, b]] = cov[[b, a]];
        }
    }
}

/// Lower-triangular Cholesky factor; fails on non-positive-definite input.
fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let d = a.nrows();
    let mut l: Array2<f64> = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Numerical(
                        "covariance not positive definite despite ridge".into(),
                    ));
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `L z = b`.
fn forward_substitute(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let mut z = vec![0.0; d];
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * z[k];
        }
        z[i] = sum / l[[i, i]];
    }
    z
}

/// Solve `(L L^T) x = b`.
fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let d = b.len();
    let z = forward_substitute(l, b);
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let mut sum = z[i];
        for k in i + 1..d {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}
