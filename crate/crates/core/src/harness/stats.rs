//! Order statistics with the lower-median convention.

/// Element at rank `floor(q * (n - 1))` of the sorted sample. For even `n`
/// and `q = 0.5` this is the lower of the two middle values.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64).floor() as usize;
    Some(sorted[rank])
}

pub fn lower_median(sorted: &[f64]) -> Option<f64> {
    quantile(sorted, 0.5)
}

/// Five-number summary of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            n: v.len(),
            min: *v.first()?,
            q1: quantile(&v, 0.25)?,
            median: lower_median(&v)?,
            q3: quantile(&v, 0.75)?,
            max: *v.last()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let s = Summary::of(&[3.5]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (3.5, 3.5, 3.5, 3.5, 3.5));
    }

    #[test]
    fn lower_median_for_even_counts() {
        assert_eq!(lower_median(&[1.0, 2.0, 3.0, 4.0]), Some(2.0));
        assert_eq!(lower_median(&[1.0, 2.0, 3.0]), Some(2.0));
        assert_eq!(lower_median(&[]), None);
    }

    #[test]
    fn quartiles_of_eleven() {
        let v: Vec<f64> = (0..11).map(f64::from).collect();
        let s = Summary::of(&v).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 5.0, 7.0));
    }

    #[test]
    fn unsorted_input() {
        let s = Summary::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.min, s.median, s.max), (1.0, 3.0, 5.0));
    }
}
