/// Iteration cap for [`kmeans_two`].
pub const MAX_ITERATIONS: usize = 100;

/// Outcome of two-cluster Lloyd iterations on scalar values.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMeans {
    /// 0 for the low-centroid cluster, 1 for the high one.
    pub labels: Vec<u8>,
    pub centroids: [f64; 2],
    /// Set when all values are equal; every label is then 0.
    pub single_cluster: bool,
    pub iterations: usize,
    /// Within-cluster sum of squares after each update step.
    pub sse_trace: Vec<f64>,
}

fn assign(values: &[f64], c: [f64; 2]) -> Vec<u8> {
    values
        .iter()
        .map(|&v| u8::from((v - c[0]).abs() > (v - c[1]).abs()))
        .collect()
}

fn update(values: &[f64], labels: &[u8], previous: [f64; 2]) -> [f64; 2] {
    let mut sum = [0.0; 2];
    let mut count = [0usize; 2];
    for (&v, &l) in values.iter().zip(labels) {
        sum[l as usize] += v;
        count[l as usize] += 1;
    }
    // An emptied cluster keeps its previous centroid.
    std::array::from_fn(|k| if count[k] > 0 { sum[k] / count[k] as f64 } else { previous[k] })
}

pub fn sse(values: &[f64], labels: &[u8], centroids: [f64; 2]) -> f64 {
    values
        .iter()
        .zip(labels)
        .map(|(&v, &l)| (v - centroids[l as usize]).powi(2))
        .sum()
}

/// Lloyd iterations from `centroids` until the assignment repeats or
/// [`MAX_ITERATIONS`] updates have run. Appends to `trace`.
fn lloyd(values: &[f64], mut centroids: [f64; 2], trace: &mut Vec<f64>) -> (Vec<u8>, [f64; 2], usize) {
    let mut labels = assign(values, centroids);
    centroids = update(values, &labels, centroids);
    trace.push(sse(values, &labels, centroids));
    let mut iterations = 1;
    while iterations < MAX_ITERATIONS {
        let next = assign(values, centroids);
        if next == labels {
            break;
        }
        labels = next;
        centroids = update(values, &labels, centroids);
        trace.push(sse(values, &labels, centroids));
        iterations += 1;
    }
    (labels, centroids, iterations)
}

/// Centroids of the best threshold partition of the sorted values. In 1-D
/// the optimal 2-means partition is always such a split.
fn best_split_centroids(values: &[f64]) -> [f64; 2] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Shifting by the mean keeps the sum-of-squares formula well conditioned.
    let shift = sorted.iter().sum::<f64>() / n as f64;
    let (mut s, mut q) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    for (i, v) in sorted.iter().enumerate() {
        let d = v - shift;
        s[i + 1] = s[i] + d;
        q[i + 1] = q[i] + d * d;
    }
    let mut best: Option<(f64, usize)> = None;
    for cut in 1..n {
        if sorted[cut - 1] == sorted[cut] {
            continue;
        }
        let (n0, n1) = (cut as f64, (n - cut) as f64);
        let (s1, q1) = (s[n] - s[cut], q[n] - q[cut]);
        let cost = (q[cut] - s[cut] * s[cut] / n0) + (q1 - s1 * s1 / n1);
        if best.is_none_or(|(b, _)| cost < b) {
            best = Some((cost, cut));
        }
    }
    let cut = best.expect("at least two distinct values").1;
    [
        shift + s[cut] / cut as f64,
        shift + (s[n] - s[cut]) / (n - cut) as f64,
    ]
}

/// Lloyd's algorithm with k = 2, seeded at the minimum and maximum value.
/// Distance ties go to the low cluster; each run stops when assignments
/// repeat or after [`MAX_ITERATIONS`] updates.
///
/// Min/max seeding can stall in a local optimum. If the best threshold
/// split of the sorted values has a strictly lower sum of squares, Lloyd is
/// restarted from that split's centroids, so the result is the global
/// optimum and the SSE trace stays non-increasing.
///
/// # Panics
/// If `values` is empty.
pub fn kmeans_two(values: &[f64]) -> TwoMeans {
    assert!(!values.is_empty(), "kmeans_two needs at least one value");
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return TwoMeans {
            labels: vec![0; values.len()],
            centroids: [min, min],
            single_cluster: true,
            iterations: 0,
            sse_trace: vec![0.0],
        };
    }
    let mut sse_trace = Vec::new();
    let (mut labels, mut centroids, mut iterations) = lloyd(values, [min, max], &mut sse_trace);
    let local = *sse_trace.last().expect("one update at least");

    let seeds = best_split_centroids(values);
    let split_labels = assign(values, seeds);
    let split_sse = sse(values, &split_labels, update(values, &split_labels, seeds));
    if split_sse < local - 1e-12 * local.max(1.0) {
        let (l, c, it) = lloyd(values, seeds, &mut sse_trace);
        labels = l;
        centroids = c;
        iterations += it;
    }
    TwoMeans {
        labels,
        centroids,
        single_cluster: false,
        iterations,
        sse_trace,
    }
}
