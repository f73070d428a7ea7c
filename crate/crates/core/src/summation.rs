//! Compensated summation.

/// Neumaier's variant of Kahan summation.
///
/// The running compensation also captures the low bits lost when an addend
/// is larger in magnitude than the partial sum, which happens at the start
/// of every lattice shell sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another accumulator in, keeping both compensation terms.
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        acc.extend(iter);
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_low_bits() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(xs.iter().copied().collect::<NeumaierSum>().value(), 2.0);
    }

    #[test]
    fn many_small_terms() {
        let acc: NeumaierSum = std::iter::repeat(0.1).take(1_000_000).collect();
        assert!((acc.value() - 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (1..2000).map(|i| 1.0 / i as f64).collect();
        let whole: NeumaierSum = xs.iter().copied().collect();
        let mut left: NeumaierSum = xs[..700].iter().copied().collect();
        let right: NeumaierSum = xs[700..].iter().copied().collect();
        left.merge(&right);
        assert!((whole.value() - left.value()).abs() < 1e-15);
    }
}
