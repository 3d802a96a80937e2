//! Fixed-step simulation clock.

/// Tick counter with a fixed step. Time is always derived from the tick count
/// so that long runs accumulate no floating-point drift.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SimClock {
    pub tick: u64,
    pub dt: f64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0);
        Self { tick: 0, dt }
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    #[inline]
    pub fn advance(&mut self) {
        self.tick += 1;
    }
}
