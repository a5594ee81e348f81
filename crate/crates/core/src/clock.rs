use chrono::{DateTime, Duration, TimeZone, Utc};
use std::sync::atomic::{AtomicI64, Ordering};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: starts at a fixed instant and advances one second per reading.
#[derive(Debug)]
pub struct LogicalClock {
    start: DateTime<Utc>,
    ticks: AtomicI64,
}

impl LogicalClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        LogicalClock { start, ticks: AtomicI64::new(0) }
    }
}

impl Default for LogicalClock {
    fn default() -> Self {
        Self::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap())
    }
}

impl Clock for LogicalClock {
    fn now(&self) -> DateTime<Utc> {
        let t = self.ticks.fetch_add(1, Ordering::SeqCst);
        self.start + Duration::seconds(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logical_clock_advances() {
        let c = LogicalClock::default();
        let a = c.now();
        let b = c.now();
        assert_eq!(b - a, Duration::seconds(1));
    }
}
