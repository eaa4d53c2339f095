use crate::model::TypeDistribution;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassAssignment {
    /// Class index of every agent, sorted by class.
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
    pub empirical_weights: Vec<f64>,
    /// `max_k |F_n(k) − F(k)|`
    pub epsilon_n: f64,
}

impl ClassAssignment {
    pub fn n_agents(&self) -> usize {
        self.labels.len()
    }
}

/// Largest-remainder rounding of `n·F(k)`.
///
/// Every class first gets `floor(n·F(k))` agents; the leftover agents go to
/// the classes with the largest fractional parts, ties to the lower index.
pub fn assign_classes(n: usize, dist: &TypeDistribution) -> ClassAssignment {
    let k = dist.weights.len();
    let exact: Vec<f64> = dist.weights.iter().map(|w| n as f64 * w).collect();
    // tolerate representation error such as 10 × 0.7 = 6.999…
    let mut counts: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remainder = n.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..k).collect();
    let frac = |i: usize| (exact[i] - counts[i] as f64).max(0.0);
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if remainder == 0 {
            break;
        }
        counts[i] += 1;
        remainder -= 1;
    }
    while counts.iter().sum::<usize>() > n {
        // only reachable if the weights overshoot by rounding
        let i = (0..k).max_by_key(|&i| counts[i]).unwrap_or(0);
        counts[i] -= 1;
    }

    let labels = counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c)).collect();
    let empirical_weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect();
    let epsilon_n = empirical_weights.iter().zip(&dist.weights).map(|(e, w)| (e - w).abs()).fold(0.0, f64::max);
    ClassAssignment { labels, counts, empirical_weights, epsilon_n }
}
