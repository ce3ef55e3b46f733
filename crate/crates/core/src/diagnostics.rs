use std::collections::BTreeMap;

/// One sampled diagnostics row of an evolution run. Named metrics ride in
/// a sorted map so emitted tables are deterministic.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub plain_mass: f64,
    pub fractional_mass: f64,
    pub min_value: f64,
    pub l2_norm: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.plain_mass,
            self.fractional_mass,
            self.min_value,
            self.l2_norm,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.metrics.values().all(|v| v.is_finite())
    }
}

/// Time stamps must be monotone non-decreasing and every metric finite.
pub fn validate_series(records: &[DiagnosticsRecord]) -> bool {
    records.windows(2).all(|w| w[0].time <= w[1].time)
        && records.iter().all(DiagnosticsRecord::is_finite)
}
