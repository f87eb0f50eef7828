//! Multiply counts of the learned direct and cascaded estimators.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerCount {
    pub layer: &'static str,
    pub multiplies: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub direct_layers: Vec<LayerCount>,
    pub cascaded_layers: Vec<LayerCount>,
    pub direct_total: u128,
    pub cascaded_total: u128,
}

/// Per-layer counts; totals are `48384KN + 4K²N` and `14400KN + 2K²N²`.
pub fn complexity(k: u64, n: u64) -> Result<ComplexityReport> {
    if k == 0 || n == 0 || k % 8 != 0 || n % 8 != 0 {
        return Err(Error::Config(format!(
            "K = {k} and N = {n} must be positive multiples of 8"
        )));
    }
    let (k, n) = (k as u128, n as u128);
    let kn = k * n;
    let layer = |layer, multiplies| LayerCount { layer, multiplies };
    let direct_layers = vec![
        layer("C_d1", 2304 * kn),
        layer("C_d3", 36864 * kn),
        layer("C_d5", 9216 * kn),
        layer("C_d7", 4 * k * k * n),
    ];
    let cascaded_layers = vec![
        layer("C_c1", 1152 * kn),
        layer("C_c3", 9216 * kn),
        layer("C_c5", 2304 * kn),
        layer("C_c7", 576 * kn),
        layer("C_c8", 576 * kn),
        layer("C_c9", 576 * kn),
        layer("C_c10", 2 * k * k * n * n),
    ];
    let total = |v: &[LayerCount]| v.iter().map(|l| l.multiplies).sum();
    Ok(ComplexityReport {
        k: k as u64,
        n: n as u64,
        direct_total: total(&direct_layers),
        cascaded_total: total(&cascaded_layers),
        direct_layers,
        cascaded_layers,
    })
}
