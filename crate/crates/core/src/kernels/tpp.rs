//! Theoretical peak performance: `tpp = clock · throughput · values per register`.
//!
//! A dense fp32 update is one FMA per value. A binary update needs three
//! vector instructions (xor, popcount, add) spread over the same ports, so
//! 512-bit registers on two ports give `2·512/3 ≈ 341` binary updates per
//! cycle against `2·512/32 = 32` fp32 ones. Masked routines scale that down:
//! 1/2 issues twice the work of 1/1, 2/2 eight times.

use crate::error::{Error, Result};

/// Instructions per binary update on the popcount path.
pub const BINARY_UPDATE_INSTRUCTIONS: f64 = 3.0;

/// Weight/activation bit widths of a routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Fp32,
    W1A1,
    W1A2,
    W2A2,
}

impl Precision {
    pub const ALL: [Precision; 4] = [Precision::Fp32, Precision::W1A1, Precision::W1A2, Precision::W2A2];

    pub fn label(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::W1A1 => "1/1",
            Precision::W1A2 => "1/2",
            Precision::W2A2 => "2/2",
        }
    }

    /// Bits per packed value in a register.
    pub fn operand_bits(self) -> u32 {
        match self {
            Precision::Fp32 => 32,
            _ => 1,
        }
    }

    /// Work multiplier relative to the 1/1 routine.
    pub fn binary_cost(self) -> Option<f64> {
        match self {
            Precision::Fp32 => None,
            Precision::W1A1 => Some(1.0),
            Precision::W1A2 => Some(2.0),
            Precision::W2A2 => Some(8.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TppModel {
    pub clock_ghz: f64,
    /// Vector instructions retired per cycle (execution ports).
    pub fma_throughput: u32,
    pub lane_bits: u32,
    pub precision: Precision,
}

impl TppModel {
    /// AVX-512 with two FMA ports.
    pub fn avx512(clock_ghz: f64, precision: Precision) -> Self {
        Self {
            clock_ghz,
            fma_throughput: 2,
            lane_bits: 512,
            precision,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TppReport {
    pub values_per_cycle: f64,
    /// How much more work per update than the 1/1 routine.
    pub cost_ratio_vs_1x1: f64,
    pub speedup_vs_fp32: f64,
    /// Peak updates per second, in units of 1e9.
    pub peak_gups: f64,
}

fn values_per_cycle(tp: f64, lane: f64, precision: Precision) -> f64 {
    match precision.binary_cost() {
        None => tp * lane / f64::from(precision.operand_bits()),
        Some(cost) => tp * lane / BINARY_UPDATE_INSTRUCTIONS / cost,
    }
}

pub fn tpp_model(m: &TppModel) -> Result<TppReport> {
    if !(m.clock_ghz.is_finite() && m.clock_ghz > 0.0) || m.fma_throughput == 0 || m.lane_bits == 0 {
        return Err(Error::InvalidParameter(format!(
            "tpp model needs positive clock, throughput and lane width: {m:?}"
        )));
    }
    let (tp, lane) = (f64::from(m.fma_throughput), f64::from(m.lane_bits));
    let vpc = values_per_cycle(tp, lane, m.precision);
    let one_one = values_per_cycle(tp, lane, Precision::W1A1);
    let fp32 = values_per_cycle(tp, lane, Precision::Fp32);
    Ok(TppReport {
        values_per_cycle: vpc,
        cost_ratio_vs_1x1: one_one / vpc,
        speedup_vs_fp32: vpc / fp32,
        peak_gups: vpc * m.clock_ghz,
    })
}
