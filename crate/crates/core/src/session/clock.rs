use std::time::{Duration, Instant};

/// Session time in milliseconds since the session started.
pub trait Clock: Send {
    fn now_ms(&self) -> u64;
    /// Blocks (or jumps, for simulated clocks) until `at_ms`. Past instants
    /// return immediately.
    fn sleep_until(&mut self, at_ms: u64);
}

/// Simulated time: sleeping advances the counter and returns at once.
#[derive(Debug, Clone, Default)]
pub struct SimClock {
    now: u64,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Clock for SimClock {
    fn now_ms(&self) -> u64 {
        self.now
    }

    fn sleep_until(&mut self, at_ms: u64) {
        self.now = self.now.max(at_ms);
    }
}

#[derive(Debug, Clone)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self { start: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    fn sleep_until(&mut self, at_ms: u64) {
        let target = self.start + Duration::from_millis(at_ms);
        let now = Instant::now();
        if target > now {
            std::thread::sleep(target - now);
        }
    }
}
