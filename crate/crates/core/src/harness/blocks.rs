//! Price-block analysis of a controller's setpoint schedule.
//!
//! Finds the cheapest and priciest contiguous hour-of-day blocks (averaged
//! across the evaluated days, wrapping around midnight) and reports the
//! mean setpoint commanded inside each. A load-shifting controller shows a
//! lower setpoint in the cheap block than in the expensive one.

use chrono::Timelike;

use crate::env::SimStepRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BlockContrast {
    /// First hour of the cheapest block (0..=23).
    pub cheap_start_hour: u32,
    pub cheap_mean_price: f64,
    pub cheap_mean_setpoint_c: f64,
    /// First hour of the priciest block (0..=23).
    pub dear_start_hour: u32,
    pub dear_mean_price: f64,
    pub dear_mean_setpoint_c: f64,
}

impl BlockContrast {
    /// Setpoint in the expensive block minus setpoint in the cheap block.
    /// Positive values mean the controller cools harder when energy is
    /// cheap.
    pub fn setpoint_contrast_c(&self) -> f64 {
        self.dear_mean_setpoint_c - self.cheap_mean_setpoint_c
    }
}

/// Compute the contrast over `block_hours`-long windows. Every hour of the
/// day must be covered by at least one record. Ties pick the earliest
/// start hour.
pub fn price_block_contrast(records: &[SimStepRecord], block_hours: u32) -> Result<BlockContrast> {
    if !(1..=24).contains(&block_hours) {
        return Err(Error::config(format!(
            "block length must be 1..=24 hours, got {block_hours}"
        )));
    }
    let mut price_sum = [0.0f64; 24];
    let mut setp_sum = [0.0f64; 24];
    let mut count = [0usize; 24];
    for rec in records {
        let h = rec.timestamp.hour() as usize;
        price_sum[h] += rec.price;
        setp_sum[h] += rec.setpoint_c;
        count[h] += 1;
    }
    if let Some(h) = (0..24).find(|&h| count[h] == 0) {
        return Err(Error::run(format!(
            "hour {h} has no records; a full daily cycle is required"
        )));
    }

    let window = |start: u32| -> (f64, f64) {
        let mut p = 0.0;
        let mut s = 0.0;
        let mut n = 0usize;
        for k in 0..block_hours {
            let h = ((start + k) % 24) as usize;
            p += price_sum[h];
            s += setp_sum[h];
            n += count[h];
        }
        (p / n as f64, s / n as f64)
    };

    let mut cheap = 0u32;
    let mut dear = 0u32;
    let (mut cheap_p, cheap_s) = window(0);
    let (mut dear_p, dear_s) = window(0);
    let mut cheap_setp = cheap_s;
    let mut dear_setp = dear_s;
    for start in 1..24 {
        let (p, s) = window(start);
        if p < cheap_p {
            cheap = start;
            cheap_p = p;
            cheap_setp = s;
        }
        if p > dear_p {
            dear = start;
            dear_p = p;
            dear_setp = s;
        }
    }
    Ok(BlockContrast {
        cheap_start_hour: cheap,
        cheap_mean_price: cheap_p,
        cheap_mean_setpoint_c: cheap_setp,
        dear_start_hour: dear,
        dear_mean_price: dear_p,
        dear_mean_setpoint_c: dear_setp,
    })
}
