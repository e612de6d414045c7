//! Piecewise-constant open-loop controls. Measurable controls are replaced
//! throughout by these: a sorted breakpoint list and one action index per
//! segment. Controls are right-continuous; the final segment is closed at
//! its right end.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ControlSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControl {
    /// Breakpoints t₀ < t₁ < … < t_K; segment i applies on [tᵢ, tᵢ₊₁).
    times: Vec<f64>,
    /// Action index per segment; `times.len() - 1` entries.
    indices: Vec<usize>,
}

impl PiecewiseControl {
    pub fn new(times: Vec<f64>, indices: Vec<usize>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Argument(
                "a control needs at least two breakpoints".into(),
            ));
        }
        if times.len() != indices.len() + 1 {
            return Err(Error::Argument(format!(
                "control with {} breakpoints needs {} segment actions, got {}",
                times.len(),
                times.len() - 1,
                indices.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("control breakpoints must be finite".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(
                "control breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, indices })
    }

    /// One action on the whole of [t0, t1].
    pub fn constant(index: usize, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![t0, t1], vec![index])
    }

    /// A control with `segments` random pieces on [t0, t1]: breakpoints drawn
    /// uniformly, actions drawn uniformly from `set_len` indices.
    pub fn random<R: Rng>(
        rng: &mut R,
        set_len: usize,
        t0: f64,
        t1: f64,
        segments: usize,
    ) -> Result<Self> {
        if set_len == 0 {
            return Err(Error::Argument("control set is empty".into()));
        }
        let segments = segments.max(1);
        let mut cuts: Vec<f64> = (0..segments - 1)
            .map(|_| rng.gen_range(t0..t1))
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        // Drop cuts that collide with the endpoints after rounding.
        cuts.retain(|c| *c > t0 && *c < t1);
        let mut times = Vec::with_capacity(cuts.len() + 2);
        times.push(t0);
        times.extend(cuts);
        times.push(t1);
        let indices = (0..times.len() - 1)
            .map(|_| rng.gen_range(0..set_len))
            .collect();
        Self::new(times, indices)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Whether the control is defined on all of [t0, t1].
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        let (a, b) = self.span();
        a <= t0 + 1e-12 && b >= t1 - 1e-12
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    pub fn segments(&self) -> usize {
        self.indices.len()
    }

    pub fn segment_index(&self, segment: usize) -> usize {
        self.indices[segment]
    }

    /// Action index in effect at time t. Right-continuous; the last segment
    /// also covers the final breakpoint.
    pub fn index_at(&self, t: f64) -> usize {
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => self.indices[i.min(self.indices.len() - 1)],
            Err(0) => self.indices[0],
            Err(i) => self.indices[(i - 1).min(self.indices.len() - 1)],
        }
    }

    /// Check that every index points into `set`.
    pub fn validate_for(&self, set: &ControlSet) -> Result<()> {
        for &i in &self.indices {
            if i >= set.len() {
                return Err(Error::ActionIndex {
                    set: set.label().to_string(),
                    index: i,
                    len: set.len(),
                });
            }
        }
        Ok(())
    }

    /// Copy of this control truncated to [span.0, t_cut], used when checking
    /// that strategies ignore the future: two controls equal up to t_cut
    /// produce bitwise-equal prefixes of play.
    pub fn truncated(&self, t_cut: f64) -> Result<Self> {
        let mut times = Vec::new();
        let mut indices = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            if t < t_cut - 1e-12 {
                times.push(t);
                if i < self.indices.len() {
                    indices.push(self.indices[i]);
                }
            }
        }
        times.push(t_cut);
        Self::new(times, indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_right_continuous() {
        let c = PiecewiseControl::new(vec![0.0, 0.25, 0.5, 1.0], vec![3, 1, 2]).unwrap();
        assert_eq!(c.index_at(0.0), 3);
        assert_eq!(c.index_at(0.25), 1);
        assert_eq!(c.index_at(0.3), 1);
        assert_eq!(c.index_at(0.5), 2);
        assert_eq!(c.index_at(1.0), 2); // closed final segment
    }

    #[test]
    fn rejects_misaligned_segments() {
        assert!(PiecewiseControl::new(vec![0.0, 1.0], vec![0, 1]).is_err());
        assert!(PiecewiseControl::new(vec![0.0, 0.0, 1.0], vec![0, 1]).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let c = PiecewiseControl::new(vec![0.0, 0.25, 0.5, 1.0], vec![3, 1, 2]).unwrap();
        let p = c.truncated(0.4).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 0.25, 0.4]);
        assert_eq!(p.index_at(0.1), 3);
        assert_eq!(p.index_at(0.3), 1);
    }
}
