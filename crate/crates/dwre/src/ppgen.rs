//! Independently marked Poisson samples and the two-layer sprinkling split.
//!
//! Point `i` of a sample under `seed` draws, from its own stream and in this
//! order: `d` uniform coordinates, one mark uniform, one thinning uniform.
//! The split therefore reuses exactly the points of the unsplit sample.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{BoxRegion, Dir, Mark, MarkedConfiguration, MarkedPoint, Position};
use crate::rng::{stream, COUNT_STREAM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarkLaw {
    /// `pi[k-1]` is the probability of rank `k`.
    Rank { pi: Vec<f64> },
    /// Uniform over the four axis directions.
    Direction,
}

impl MarkLaw {
    pub fn uniform_rank(k: usize) -> Self {
        MarkLaw::Rank { pi: vec![1.0 / k as f64; k] }
    }

    pub fn validate(&self) -> Result<()> {
        if let MarkLaw::Rank { pi } = self {
            if pi.is_empty() {
                return Err(invalid!("rank law needs at least one entry"));
            }
            if pi.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(invalid!("rank probabilities must be nonnegative"));
            }
            let total: f64 = pi.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(invalid!("rank probabilities sum to {total}, not 1"));
            }
        }
        Ok(())
    }

    fn draw(&self, u: f64) -> Mark {
        match self {
            MarkLaw::Direction => Mark::Direction(Dir::ALL[((u * 4.0) as usize).min(3)]),
            MarkLaw::Rank { pi } => {
                let mut acc = 0.0;
                for (i, p) in pi.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Mark::Rank(i as u32 + 1);
                    }
                }
                // u lands above the rounded total: last rank with positive mass
                let last = pi.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                Mark::Rank(last as u32 + 1)
            }
        }
    }
}

/// Bulk layer `x1` and sparse layer `x2` of one unit-intensity sample.
#[derive(Debug, Clone)]
pub struct SprinkleSplit {
    pub x1: MarkedConfiguration,
    pub x2: MarkedConfiguration,
    pub s: f64,
    pub base_intensity: f64,
}

impl SprinkleSplit {
    /// Probability that a point lands in the sparse layer: `s^(-d-1)`.
    pub fn sparse_fraction(s: f64, dim: usize) -> f64 {
        s.powi(-(dim as i32) - 1)
    }

    pub fn full(&self) -> MarkedConfiguration {
        self.x1.union(&self.x2, self.x1.window().clone()).expect("layers of one sample are disjoint")
    }
}

struct Draw {
    position: Position,
    mark: Mark,
    thin: f64,
}

fn draw_point(window: &BoxRegion, law: &MarkLaw, seed: u64, i: u64) -> Draw {
    let mut rng = stream(seed, i);
    let d = window.dim();
    let mut c = [0.0f64; 8];
    for (k, slot) in c.iter_mut().enumerate().take(d) {
        let u: f64 = rng.random();
        let lo = window.lo(k);
        let hi = window.hi(k);
        let mut x = lo + u * window.side;
        if x >= hi {
            x = hi.next_down();
        }
        *slot = x;
    }
    let mark = law.draw(rng.random());
    let thin = rng.random();
    Draw { position: Position::from_slice_unchecked(&c[..d]), mark, thin }
}

fn draw_count(window: &BoxRegion, lambda: f64, seed: u64) -> Result<u64> {
    let mean = lambda * window.volume();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(invalid!("mean point count {mean} is not positive and finite"));
    }
    let dist = Poisson::new(mean).map_err(|e| invalid!("poisson mean {mean}: {e}"))?;
    let n: f64 = dist.sample(&mut stream(seed, COUNT_STREAM));
    Ok(n as u64)
}

fn validate(window: &BoxRegion, lambda: f64, law: &MarkLaw) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid!("intensity must be positive, got {lambda}"));
    }
    if window.dim() > 8 || window.dim() < 1 {
        return Err(invalid!("dimension {} unsupported", window.dim()));
    }
    law.validate()
}

/// Poisson sample with intensity `lambda` in `window`; ids are `0..n`.
pub fn sample_poisson(window: &BoxRegion, lambda: f64, law: &MarkLaw, seed: u64) -> Result<MarkedConfiguration> {
    validate(window, lambda, law)?;
    let n = draw_count(window, lambda, seed)?;
    let pts = (0..n)
        .map(|i| {
            let d = draw_point(window, law, seed, i);
            MarkedPoint::new(i, d.position, d.mark)
        })
        .collect();
    MarkedConfiguration::new(pts, window.clone())
}

/// Splits the sample of `sample_poisson(window, base_intensity, law, seed)`
/// by independent thinning: a point joins `x2` with probability `s^(-d-1)`.
pub fn sprinkle_split(
    window: &BoxRegion,
    s: f64,
    law: &MarkLaw,
    seed: u64,
    base_intensity: f64,
) -> Result<SprinkleSplit> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(invalid!("sprinkling scale must exceed 1, got {s}"));
    }
    validate(window, base_intensity, law)?;
    let n = draw_count(window, base_intensity, seed)?;
    let p2 = SprinkleSplit::sparse_fraction(s, window.dim());
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..n {
        let d = draw_point(window, law, seed, i);
        let pt = MarkedPoint::new(i, d.position, d.mark);
        if d.thin < p2 {
            b.push(pt);
        } else {
            a.push(pt);
        }
    }
    Ok(SprinkleSplit {
        x1: MarkedConfiguration::new(a, window.clone())?,
        x2: MarkedConfiguration::new(b, window.clone())?,
        s,
        base_intensity,
    })
}
