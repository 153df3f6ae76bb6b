use crate::data::{Prediction, Target};
use crate::error::{Error, Result};

/// Feature indices by decreasing importance; ties keep ascending index order.
pub fn rank_features(alpha: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    idx.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]));
    idx
}

/// Average precision of a ranked hit sequence: the mean, over the
/// `n_relevant` relevant items, of precision at the rank where each is hit.
/// Relevant items that never appear contribute zero.
pub fn average_precision(hits: impl IntoIterator<Item = bool>, n_relevant: usize) -> Result<f64> {
    if n_relevant == 0 {
        return Err(Error::EmptyRelevantSet);
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (pos, hit) in hits.into_iter().enumerate() {
        if hit {
            found += 1;
            sum += found as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / n_relevant as f64)
}

/// Area under the precision-recall curve of a ranking of `m` features
/// against a known relevant set (average-precision form).
pub fn aupr(ranking: &[usize], relevant: &[usize], m: usize) -> Result<f64> {
    let mut is_rel = vec![false; m];
    for &r in relevant {
        if r >= m {
            return Err(Error::InvalidConfig(format!("relevant index {r} out of range for {m} features")));
        }
        is_rel[r] = true;
    }
    let n_rel = is_rel.iter().filter(|&&b| b).count();
    if let Some(&bad) = ranking.iter().find(|&&i| i >= m) {
        return Err(Error::InvalidConfig(format!("ranked index {bad} out of range for {m} features")));
    }
    average_precision(ranking.iter().map(|&i| is_rel[i]), n_rel)
}

pub fn mean_squared_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_len(predictions.len(), targets.len())?;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / targets.len() as f64)
}

pub fn misclassification_rate(predicted: &[usize], labels: &[usize]) -> Result<f64> {
    check_len(predicted.len(), labels.len())?;
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// MSE for regression, misclassification rate (argmax, ties to the lowest
/// class) for classification.
pub fn test_error(predictions: &[Prediction], target: &Target) -> Result<f64> {
    check_len(predictions.len(), target.len())?;
    match target {
        Target::Regression(y) => {
            let p: Vec<f64> = predictions.iter().map(Prediction::point).collect();
            mean_squared_error(&p, y)
        }
        Target::Classification { labels, .. } => {
            let p: Vec<usize> = predictions.iter().map(|p| p.point() as usize).collect();
            misclassification_rate(&p, labels)
        }
    }
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if expected == 0 {
        return Err(Error::EmptyDataset);
    }
    if actual != expected {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}
