use crate::data::{Dataset, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CartParams {
    /// `None` grows the tree until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        offset: usize,
    },
}

/// CART tree: variance reduction for regression, Gini for classification.
///
/// Candidate thresholds are midpoints between consecutive distinct values.
/// Among equally good splits the lowest feature index wins, then the lowest
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CartTree {
    nodes: Vec<Node>,
    leaf_values: Vec<f64>,
    dim: usize,
}

/// Bootstrap samples are copied into column-contiguous buffers and every
/// column is sorted once; each split then stably partitions the per-column
/// orders so children stay sorted without re-sorting.
struct Builder<'a> {
    columns: &'a [usize],
    params: &'a CartParams,
    dim: usize,
    /// `values[c][k]`: value of column `columns[c]` for local sample k.
    values: Vec<Vec<f64>>,
    y: Vec<f64>,
    labels: Vec<usize>,
    /// `order[c]`: local samples sorted by (value, source row) within each node range.
    order: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    buf: Vec<u32>,
    nodes: Vec<Node>,
    leaf_values: Vec<f64>,
}

struct BestSplit {
    column: usize,
    threshold: f64,
    score: f64,
}

impl CartTree {
    pub fn fit(data: &Dataset, columns: &[usize], rows: &[usize], params: &CartParams) -> Self {
        let dim = data.output_dim();
        let n = rows.len();
        // Sorted rows make the local index order agree with the source row
        // order, so ties on value break by row without a second lookup.
        let mut rows = rows.to_vec();
        rows.sort_unstable();
        let values: Vec<Vec<f64>> = columns
            .iter()
            .map(|&f| rows.iter().map(|&i| data.row(i)[f]).collect())
            .collect();
        let (y, labels) = match data.target() {
            Target::Regression(y) => (rows.iter().map(|&i| y[i]).collect(), Vec::new()),
            Target::Classification { labels, .. } => (Vec::new(), rows.iter().map(|&i| labels[i]).collect()),
        };
        let mut keys: Vec<u128> = Vec::with_capacity(n);
        let order = values
            .iter()
            .map(|v| {
                keys.clear();
                keys.extend(v.iter().enumerate().map(|(k, &x)| ((total_order_bits(x) as u128) << 32) | k as u128));
                keys.sort_unstable();
                keys.iter().map(|&key| key as u32).collect()
            })
            .collect();
        let mut b = Builder {
            columns,
            params,
            dim,
            values,
            y,
            labels,
            order,
            goes_left: vec![false; n],
            buf: Vec::with_capacity(n),
            nodes: Vec::new(),
            leaf_values: Vec::new(),
        };
        if columns.is_empty() {
            // No features: a single leaf over all samples.
            let samples: Vec<u32> = (0..n as u32).collect();
            b.push_leaf_value(&samples);
            b.nodes.push(Node::Leaf { offset: 0 });
        } else {
            b.grow(0, n, 0);
        }
        CartTree {
            nodes: b.nodes,
            leaf_values: b.leaf_values,
            dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.dim
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_values.len() / self.dim
    }

    pub fn predict_into(&self, x: &[f64], out: &mut [f64]) {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { offset } => {
                    out.copy_from_slice(&self.leaf_values[*offset..*offset + self.dim]);
                    return;
                }
            }
        }
    }
}

/// Maps an f64 to a u64 whose unsigned order matches `f64::total_cmp`.
fn total_order_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

impl Builder<'_> {
    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        let split = if depth_ok && hi - lo >= self.params.min_samples_split.max(2) && !self.is_pure(lo, hi) {
            self.best_split(lo, hi)
        } else {
            None
        };
        let Some(split) = split else {
            let offset = self.leaf_values.len();
            let samples = self.order[0][lo..hi].to_vec();
            self.push_leaf_value(&samples);
            self.nodes.push(Node::Leaf { offset });
            return id;
        };
        self.nodes.push(Node::Leaf { offset: usize::MAX });
        let col = &self.values[split.column];
        let mut n_left = 0;
        for &k in &self.order[split.column][lo..hi] {
            let left = col[k as usize] <= split.threshold;
            self.goes_left[k as usize] = left;
            n_left += left as usize;
        }
        for order in &mut self.order {
            let seg = &mut order[lo..hi];
            self.buf.clear();
            let mut w = 0;
            for r in 0..seg.len() {
                let k = seg[r];
                if self.goes_left[k as usize] {
                    seg[w] = k;
                    w += 1;
                } else {
                    self.buf.push(k);
                }
            }
            seg[w..].copy_from_slice(&self.buf);
        }
        let mid = lo + n_left;
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature: self.columns[split.column],
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn is_pure(&self, lo: usize, hi: usize) -> bool {
        let s = &self.order[0][lo..hi];
        let first = s[0] as usize;
        if self.labels.is_empty() {
            s.iter().all(|&k| self.y[k as usize] == self.y[first])
        } else {
            s.iter().all(|&k| self.labels[k as usize] == self.labels[first])
        }
    }

    fn push_leaf_value(&mut self, samples: &[u32]) {
        let n = samples.len() as f64;
        if self.labels.is_empty() {
            self.leaf_values
                .push(samples.iter().map(|&k| self.y[k as usize]).sum::<f64>() / n);
        } else {
            let start = self.leaf_values.len();
            self.leaf_values.resize(start + self.dim, 0.0);
            for &k in samples {
                self.leaf_values[start + self.labels[k as usize]] += 1.0;
            }
            for v in &mut self.leaf_values[start..] {
                *v /= n;
            }
        }
    }

    /// Maximizes sum_L^2/n_L + sum_R^2/n_R (regression, equivalent to
    /// minimal child SSE) or sum_c (cL_c^2/n_L + cR_c^2/n_R) (equivalent to
    /// minimal weighted Gini).
    fn best_split(&self, lo: usize, hi: usize) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        let n = hi - lo;
        let classify = !self.labels.is_empty();
        let mut left_counts = vec![0.0; self.dim];
        let mut total_counts = vec![0.0; self.dim];
        let mut total_sum = 0.0;
        for &k in &self.order[0][lo..hi] {
            if classify {
                total_counts[self.labels[k as usize]] += 1.0;
            } else {
                total_sum += self.y[k as usize];
            }
        }
        for (c, values) in self.values.iter().enumerate() {
            let seg = &self.order[c][lo..hi];
            if values[seg[0] as usize] == values[seg[n - 1] as usize] {
                continue;
            }
            let mut left_sum = 0.0;
            left_counts.iter_mut().for_each(|v| *v = 0.0);
            for pos in 0..n - 1 {
                let k = seg[pos] as usize;
                let value = values[k];
                if classify {
                    left_counts[self.labels[k]] += 1.0;
                } else {
                    left_sum += self.y[k];
                }
                let next = values[seg[pos + 1] as usize];
                if next == value {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = (n - pos - 1) as f64;
                let score = if classify {
                    left_counts
                        .iter()
                        .zip(&total_counts)
                        .map(|(&l, &t)| l * l / nl + (t - l) * (t - l) / nr)
                        .sum()
                } else {
                    let right_sum = total_sum - left_sum;
                    left_sum * left_sum / nl + right_sum * right_sum / nr
                };
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = value + (next - value) / 2.0;
                    // Midpoint can round up onto `next` for adjacent floats.
                    if threshold >= next {
                        threshold = value;
                    }
                    best = Some(BestSplit {
                        column: c,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}
