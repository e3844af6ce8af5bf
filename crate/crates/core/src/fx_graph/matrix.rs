/// Dense `n x n` rate table with missing entries; the diagonal is always 1.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n: usize,
    v: Vec<f64>,
}

impl RateMatrix {
    pub fn new(n: usize) -> Self {
        let mut v = vec![f64::NAN; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        Self { n, v }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let x = self.v[i * self.n + j];
        (!x.is_nan()).then_some(x)
    }

    /// Like [`get`](Self::get) but panics on a missing entry.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
            .unwrap_or_else(|| panic!("rate ({i}, {j}) missing"))
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        assert!(i != j, "diagonal is fixed at 1");
        self.v[i * self.n + j] = x;
    }

    pub fn clear(&mut self, i: usize, j: usize) {
        if i != j {
            self.v[i * self.n + j] = f64::NAN;
        }
    }

    /// Present off-diagonal entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        self.v
            .iter()
            .enumerate()
            .filter(move |(k, x)| k / n != k % n && !x.is_nan())
            .map(move |(k, x)| (k / n, k % n, *x))
    }

    pub fn count(&self) -> usize {
        self.iter().count()
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().filter(|x| !x.is_nan()).fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl PartialEq for RateMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.v.iter().zip(&other.v).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
