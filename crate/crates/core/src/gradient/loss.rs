use crate::data::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Lower bound applied to probabilities before taking logs.
    pub clamp_eps: f64,
}

impl LossSpec {
    pub fn mse() -> Self {
        LossSpec {
            kind: LossKind::Mse,
            clamp_eps: 1e-12,
        }
    }

    pub fn cross_entropy() -> Self {
        LossSpec {
            kind: LossKind::CrossEntropy,
            clamp_eps: 1e-12,
        }
    }

    /// MSE for regression, cross-entropy for classification.
    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::Regression => Self::mse(),
            TaskKind::Classification => Self::cross_entropy(),
        }
    }

    pub fn matches(&self, task: TaskKind) -> bool {
        matches!(
            (self.kind, task),
            (LossKind::Mse, TaskKind::Regression) | (LossKind::CrossEntropy, TaskKind::Classification)
        )
    }

    /// Post-processes a raw (possibly importance-weighted) ensemble output in
    /// place: class vectors are renormalized to sum to one, then clamped.
    pub fn finalize(&self, raw: &mut [f64]) {
        if self.kind != LossKind::CrossEntropy {
            return;
        }
        let s: f64 = raw.iter().sum();
        if s > 0.0 && s.is_finite() {
            raw.iter_mut().for_each(|p| *p /= s);
        } else {
            let u = 1.0 / raw.len() as f64;
            raw.iter_mut().for_each(|p| *p = u);
        }
        raw.iter_mut().for_each(|p| *p = p.clamp(self.clamp_eps, 1.0));
    }

    /// Loss value for target `y` (class index for cross-entropy) and the
    /// derivative with respect to every component of `prediction`, written
    /// into `dloss`.
    pub fn loss_and_dloss(&self, y: f64, prediction: &[f64], dloss: &mut [f64]) -> f64 {
        match self.kind {
            LossKind::Mse => {
                let r = y - prediction[0];
                dloss[0] = -2.0 * r;
                r * r
            }
            LossKind::CrossEntropy => {
                let c = y as usize;
                let p = prediction[c].max(self.clamp_eps);
                dloss.fill(0.0);
                dloss[c] = -1.0 / p;
                -p.ln()
            }
        }
    }

    pub fn value(&self, y: f64, prediction: &[f64]) -> f64 {
        let mut d = vec![0.0; prediction.len()];
        self.loss_and_dloss(y, prediction, &mut d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let l = LossSpec::mse();
        let mut d = [0.0];
        assert_eq!(l.loss_and_dloss(1.0, &[1.0], &mut d), 0.0);
        assert_eq!(d[0], 0.0);
        assert_eq!(l.loss_and_dloss(0.0, &[2.0], &mut d), 4.0);
        assert_eq!(d[0], 4.0);
    }

    #[test]
    fn cross_entropy_example() {
        let l = LossSpec::cross_entropy();
        let mut d = [9.0, 9.0];
        let v = l.loss_and_dloss(0.0, &[0.5, 0.5], &mut d);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(d, [-2.0, 0.0]);
    }

    #[test]
    fn clamping_keeps_log_finite() {
        let l = LossSpec::cross_entropy();
        let mut p = [0.0, 1.0];
        l.finalize(&mut p);
        let v = l.value(0.0, &p);
        assert!(v.is_finite());
        assert!((v - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn finalize_renormalizes() {
        let l = LossSpec::cross_entropy();
        let mut p = [0.2, 0.6];
        l.finalize(&mut p);
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let mut z = [0.0, 0.0, 0.0];
        l.finalize(&mut z);
        assert!(z.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }
}
