use crate::data::{Dataset, Target};

/// k-nearest neighbours over the selected columns, Euclidean distance.
///
/// Bootstrap duplicates count as separate neighbours. Distance ties go to the
/// lower original sample index, then to the earlier bootstrap position.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    k: usize,
    columns: Vec<usize>,
    /// Restricted training rows, `rows.len() / columns.len()` of them.
    points: Vec<f64>,
    sample_ids: Vec<usize>,
    targets: KnnTargets,
}

#[derive(Debug, Clone, PartialEq)]
enum KnnTargets {
    Regression(Vec<f64>),
    Classification { labels: Vec<usize>, n_classes: usize },
}

impl Knn {
    pub fn fit(data: &Dataset, columns: &[usize], rows: &[usize], k: usize) -> Self {
        let mut points = Vec::with_capacity(rows.len() * columns.len());
        for &i in rows {
            let x = data.row(i);
            points.extend(columns.iter().map(|&j| x[j]));
        }
        let targets = match data.target() {
            Target::Regression(y) => KnnTargets::Regression(rows.iter().map(|&i| y[i]).collect()),
            Target::Classification { labels, n_classes } => KnnTargets::Classification {
                labels: rows.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
        };
        Knn {
            k: k.clamp(1, rows.len().max(1)),
            columns: columns.to_vec(),
            points,
            sample_ids: rows.to_vec(),
            targets,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn output_dim(&self) -> usize {
        match &self.targets {
            KnnTargets::Regression(_) => 1,
            KnnTargets::Classification { n_classes, .. } => *n_classes,
        }
    }

    fn n_points(&self) -> usize {
        self.sample_ids.len()
    }

    /// Positions of the k nearest stored points.
    fn neighbours(&self, x: &[f64]) -> Vec<usize> {
        let d = self.columns.len();
        let q: Vec<f64> = self.columns.iter().map(|&j| x[j]).collect();
        let mut dist: Vec<(f64, usize, usize)> = (0..self.n_points())
            .map(|p| {
                let row = &self.points[p * d..(p + 1) * d];
                let s: f64 = row.iter().zip(&q).map(|(v, w)| (v - w) * (v - w)).sum();
                (s, self.sample_ids[p], p)
            })
            .collect();
        let cmp = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        };
        let k = self.k;
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.into_iter().map(|(_, _, p)| p).collect()
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let nn = self.neighbours(x);
        let k = nn.len() as f64;
        match &self.targets {
            KnnTargets::Regression(y) => {
                out[0] = nn.iter().map(|&p| y[p]).sum::<f64>() / k;
            }
            KnnTargets::Classification { labels, .. } => {
                out.fill(0.0);
                for &p in &nn {
                    out[labels[p]] += 1.0;
                }
                for v in out.iter_mut() {
                    *v /= k;
                }
            }
        }
    }
}
