/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// One compensated accumulator per column.
#[derive(Debug, Clone)]
pub(crate) struct CompensatedVec(Vec<CompensatedSum>);

impl CompensatedVec {
    pub(crate) fn new(width: usize) -> Self {
        Self(vec![CompensatedSum::default(); width])
    }

    pub(crate) fn add(&mut self, values: &[f64]) {
        for (acc, &v) in self.0.iter_mut().zip(values) {
            acc.add(v);
        }
    }

    pub(crate) fn write(&self, out: &mut [f64]) {
        for (o, acc) in out.iter_mut().zip(&self.0) {
            *o = acc.value();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn adding_zero_is_exact() {
        let mut s = CompensatedSum::default();
        s.add(0.1);
        s.add(0.2);
        let before = s.value();
        s.add(0.0);
        assert_eq!(before.to_bits(), s.value().to_bits());
    }
}
