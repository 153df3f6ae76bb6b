use rand::seq::SliceRandom;

use crate::data::{Dataset, Prediction, Target};
use crate::error::{Error, Result};
use crate::eval::test_error;
use crate::rng::StreamRng;

/// Fold index for every sample. Classification folds are stratified: each
/// class is shuffled and dealt round-robin, continuing where the previous
/// class stopped so fold sizes differ by at most one.
pub fn fold_assignment(target: &Target, k: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
    let n = target.len();
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!("{k} folds cannot split {n} samples")));
    }
    let mut folds = vec![0; n];
    let groups: Vec<Vec<usize>> = match target {
        Target::Regression(_) => vec![(0..n).collect()],
        Target::Classification { labels, n_classes } => {
            let mut g = vec![Vec::new(); *n_classes];
            for (i, &l) in labels.iter().enumerate() {
                g[l].push(i);
            }
            g
        }
    };
    let mut next = 0;
    for mut g in groups {
        g.shuffle(rng);
        for i in g {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

/// (train rows, held-out rows) for each fold.
pub fn fold_splits(folds: &[usize], k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..folds.len()).partition(|&i| folds[i] == f);
            (train, test)
        })
        .collect()
}

/// Pooled cross-validation error: every sample is predicted once by the
/// model fitted without its fold, then the error is taken over all of them.
pub fn cross_val_error(
    data: &Dataset,
    splits: &[(Vec<usize>, Vec<usize>)],
    mut fit_predict: impl FnMut(&[usize], &[usize]) -> Vec<Prediction>,
) -> Result<f64> {
    let mut preds: Vec<Option<Prediction>> = vec![None; data.n_samples()];
    for (train, test) in splits {
        let p = fit_predict(train, test);
        if p.len() != test.len() {
            return Err(Error::LengthMismatch {
                expected: test.len(),
                actual: p.len(),
            });
        }
        for (&i, v) in test.iter().zip(p) {
            preds[i] = Some(v);
        }
    }
    let rows: Vec<usize> = (0..data.n_samples()).filter(|&i| preds[i].is_some()).collect();
    let p: Vec<Prediction> = rows.iter().map(|&i| preds[i].take().unwrap()).collect();
    test_error(&p, &data.target().select(&rows))
}
