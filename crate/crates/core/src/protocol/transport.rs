use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Ble,
    Wifi,
}

/// Timing model of a point-to-point wireless link.
///
/// Default bandwidths are calibrated so that one enrollment transfer of the
/// secure profile (d = 128, 16 439-byte frame) takes about 10 s over BLE and
/// about 2 s over WiFi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportProfile {
    pub kind: LinkKind,
    /// Bytes per second, > 0.
    pub bandwidth: f64,
    /// Fixed per-message latency in seconds.
    pub latency: f64,
    /// Probability that a message is lost.
    #[serde(default)]
    pub drop_probability: f64,
}

impl TransportProfile {
    pub const BLE_BANDWIDTH: f64 = 1_644.0;
    pub const WIFI_BANDWIDTH: f64 = 8_220.0;

    pub fn ble() -> Self {
        Self {
            kind: LinkKind::Ble,
            bandwidth: Self::BLE_BANDWIDTH,
            latency: 0.05,
            drop_probability: 0.0,
        }
    }

    pub fn wifi() -> Self {
        Self {
            kind: LinkKind::Wifi,
            bandwidth: Self::WIFI_BANDWIDTH,
            latency: 0.01,
            drop_probability: 0.0,
        }
    }

    pub fn for_kind(kind: LinkKind) -> Self {
        match kind {
            LinkKind::Ble => Self::ble(),
            LinkKind::Wifi => Self::wifi(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.bandwidth > 0.0
            && self.bandwidth.is_finite()
            && self.latency >= 0.0
            && (0.0..=1.0).contains(&self.drop_probability)
    }

    /// `latency + bytes / bandwidth`, in seconds.
    pub fn simulate_transfer(&self, bytes: usize) -> f64 {
        self.latency + bytes as f64 / self.bandwidth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_bytes_is_latency() {
        assert_eq!(TransportProfile::ble().simulate_transfer(0), 0.05);
        assert_eq!(TransportProfile::wifi().simulate_transfer(0), 0.01);
    }

    #[test]
    fn linear_in_size() {
        let p = TransportProfile::wifi();
        let a = p.simulate_transfer(1000) - p.latency;
        let b = p.simulate_transfer(2000) - p.latency;
        assert!((2.0 * a - b).abs() < 1e-12);
    }
}
