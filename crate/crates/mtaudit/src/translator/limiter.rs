//! Request pacing for the live backend: a minimum-interval rate limiter and a
//! counting semaphore bounding in-flight requests.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Spaces request starts at least 1/rps apart, so no one-second window ever
/// sees more than `rps` starts.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next_at: Mutex<Instant>,
}

impl RateLimiter {
    pub fn new(requests_per_second: u32) -> RateLimiter {
        assert!(requests_per_second > 0, "rate must be positive");
        RateLimiter {
            min_interval: Duration::from_secs_f64(1.0 / f64::from(requests_per_second)),
            next_at: Mutex::new(Instant::now()),
        }
    }

    /// Blocks until a request may start.
    pub fn acquire(&self) {
        let wait = {
            let mut next_at = self.next_at.lock().unwrap();
            let now = Instant::now();
            let slot = (*next_at).max(now);
            *next_at = slot + self.min_interval;
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Counting semaphore; a guard holds one slot until dropped.
#[derive(Debug)]
pub struct ConcurrencyGate {
    max: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl ConcurrencyGate {
    pub fn new(max: usize) -> ConcurrencyGate {
        assert!(max > 0, "concurrency bound must be positive");
        ConcurrencyGate {
            max,
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn limit(&self) -> usize {
        self.max
    }

    pub fn acquire(&self) -> GateGuard<'_> {
        let mut in_flight = self.in_flight.lock().unwrap();
        while *in_flight >= self.max {
            in_flight = self.freed.wait(in_flight).unwrap();
        }
        *in_flight += 1;
        GateGuard { gate: self }
    }
}

pub struct GateGuard<'a> {
    gate: &'a ConcurrencyGate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut in_flight = self.gate.in_flight.lock().unwrap();
        *in_flight -= 1;
        drop(in_flight);
        self.gate.freed.notify_one();
    }
}
