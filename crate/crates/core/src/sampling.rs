//! Deterministic quasi-random points (Halton sequence) in a box.

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    out
}

/// `count` Halton points in the box `[lo_i, hi_i]`, skipping the first
/// `skip` sequence elements. Supports up to 16 dimensions.
pub fn halton(lo: &[f64], hi: &[f64], count: usize, skip: usize) -> Vec<Vec<f64>> {
    assert_eq!(lo.len(), hi.len());
    assert!(lo.len() <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    (0..count)
        .map(|k| {
            let idx = (k + skip + 1) as u64;
            lo.iter()
                .zip(hi)
                .zip(PRIMES)
                .map(|((&a, &b), p)| a + (b - a) * radical_inverse(idx, p))
                .collect()
        })
        .collect()
}

/// Simple linear congruential stream for reproducible start vectors.
#[derive(Debug, Clone)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed ^ 0x9E37_79B9_7F4A_7C15)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6_364_136_223_846_793_005)
            .wrapping_add(1_442_695_040_888_963_407);
        self.0
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_signed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_halton_points() {
        let p = halton(&[0.0, 0.0], &[1.0, 1.0], 3, 0);
        assert_eq!(p[0], vec![0.5, 1.0 / 3.0]);
        assert_eq!(p[1], vec![0.25, 2.0 / 3.0]);
        assert_eq!(p[2], vec![0.75, 1.0 / 9.0]);
    }

    #[test]
    fn points_stay_in_box() {
        for p in halton(&[-2.0, 1.0, -7.0], &[3.0, 1.5, 7.0], 500, 10) {
            assert!(p[0] >= -2.0 && p[0] < 3.0);
            assert!(p[1] >= 1.0 && p[1] < 1.5);
            assert!(p[2] >= -7.0 && p[2] < 7.0);
        }
    }

    #[test]
    fn lcg_is_reproducible_and_bounded() {
        let mut a = Lcg::new(7);
        let mut b = Lcg::new(7);
        for _ in 0..1000 {
            let x = a.next_signed();
            assert_eq!(x, b.next_signed());
            assert!((-1.0..1.0).contains(&x));
        }
        assert_ne!(Lcg::new(1).next_u64(), Lcg::new(2).next_u64());
    }
}
