#![allow(dead_code)]

use dwre::geom::{BoxRegion, MarkedConfiguration};
use dwre::ppgen::{sample_poisson, MarkLaw};

pub fn lily_sample(side: f64, seed: u64) -> MarkedConfiguration {
    sample_poisson(&BoxRegion::centered(2, side).unwrap(), 1.0, &MarkLaw::Direction, seed).unwrap()
}

pub fn knn_sample(side: f64, k: usize, seed: u64) -> MarkedConfiguration {
    sample_poisson(&BoxRegion::centered(2, side).unwrap(), 1.0, &MarkLaw::uniform_rank(k), seed).unwrap()
}
