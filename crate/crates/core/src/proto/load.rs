use crate::error::ConfigError;
use crate::sim::SimTime;

use super::config::LoadPattern;

/// Arrival stream derived from a [`LoadPattern`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OfferedLoad {
    Periodic { gap: SimTime },
    Poisson { packets_per_sec: f64 },
    Backlog { packets: u64, last_packet_bytes: u32 },
}

/// Number of packets a file of `size_bytes` occupies; the last may be partial.
pub fn file_packet_count(size_bytes: u64, packet_size: u32) -> u64 {
    size_bytes.div_ceil(u64::from(packet_size))
}

pub fn offer_load(load: &LoadPattern, packet_size: u32) -> Result<OfferedLoad, ConfigError> {
    if packet_size == 0 {
        return Err(ConfigError::Invalid("packet size must be positive".into()));
    }
    let bits = f64::from(packet_size) * 8.0;
    match *load {
        LoadPattern::ConstantRate { rate_bps } => {
            check_rate(rate_bps)?;
            Ok(OfferedLoad::Periodic {
                gap: SimTime::from_secs_f64(bits / rate_bps),
            })
        }
        LoadPattern::Poisson { rate_bps } => {
            check_rate(rate_bps)?;
            Ok(OfferedLoad::Poisson {
                packets_per_sec: rate_bps / bits,
            })
        }
        LoadPattern::File { size_bytes } => {
            if size_bytes == 0 {
                return Err(ConfigError::Invalid("file size must be positive".into()));
            }
            let packets = file_packet_count(size_bytes, packet_size);
            let rem = (size_bytes % u64::from(packet_size)) as u32;
            Ok(OfferedLoad::Backlog {
                packets,
                last_packet_bytes: if rem == 0 { packet_size } else { rem },
            })
        }
    }
}

fn check_rate(rate_bps: f64) -> Result<(), ConfigError> {
    if rate_bps > 0.0 && rate_bps.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NonPositiveRate(rate_bps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_megabit_constant_gap() {
        let load = offer_load(&LoadPattern::ConstantRate { rate_bps: 50e6 }, 1500).unwrap();
        assert_eq!(
            load,
            OfferedLoad::Periodic {
                gap: SimTime::from_micros(240)
            }
        );
    }

    #[test]
    fn ten_megabyte_file() {
        let load = offer_load(
            &LoadPattern::File {
                size_bytes: 10_000_000,
            },
            1500,
        )
        .unwrap();
        assert_eq!(
            load,
            OfferedLoad::Backlog {
                packets: 6667,
                last_packet_bytes: 1000
            }
        );
        assert_eq!(file_packet_count(3000, 1500), 2);
    }

    #[test]
    fn rejects_bad_loads() {
        assert!(offer_load(&LoadPattern::Poisson { rate_bps: 0.0 }, 1500).is_err());
        assert!(offer_load(&LoadPattern::File { size_bytes: 0 }, 1500).is_err());
        assert!(offer_load(&LoadPattern::ConstantRate { rate_bps: 1e6 }, 0).is_err());
    }
}
