//! Shared fixtures for the benchmarks: the default two-user setup with
//! uniform codebooks.

use anoma_core::{uniform_codebook, ChannelDistribution, QuantizerCodebook, SystemParams};

pub struct Fixture {
    pub params: SystemParams,
    pub dist1: ChannelDistribution,
    pub dist2: ChannelDistribution,
    pub codebook1: QuantizerCodebook,
    pub codebook2: QuantizerCodebook,
}

impl Fixture {
    pub fn new(bits: u32) -> Self {
        Self {
            params: SystemParams::new(10.0, 0.5).unwrap(),
            dist1: ChannelDistribution::new(0.5).unwrap(),
            dist2: ChannelDistribution::new(1.0).unwrap(),
            codebook1: uniform_codebook(0.5, bits).unwrap(),
            codebook2: uniform_codebook(1.0, bits).unwrap(),
        }
    }
}
