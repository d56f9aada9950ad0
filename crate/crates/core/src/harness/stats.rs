/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl SeedStats {
    pub fn of(xs: &[f64]) -> Self {
        SeedStats {
            mean: mean(xs),
            sd: sample_sd(xs),
            n: xs.len(),
        }
    }
}

/// Lengths of maximal runs of equal consecutive items.
pub fn run_lengths<T: PartialEq>(items: impl IntoIterator<Item = T>) -> Vec<u64> {
    let mut out = Vec::new();
    let mut current: Option<(T, u64)> = None;
    for x in items {
        current = match current {
            Some((prev, n)) if prev == x => Some((prev, n + 1)),
            Some((_, n)) => {
                out.push(n);
                Some((x, 1))
            }
            None => Some((x, 1)),
        };
    }
    if let Some((_, n)) = current {
        out.push(n);
    }
    out
}

/// Nearest-rank percentile: the smallest value with at least `p` of the
/// sample at or below it.
pub fn nearest_rank(values: &[u64], p: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}
