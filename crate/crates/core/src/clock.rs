use std::time::Duration;

#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
type Mark = std::time::Instant;
#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
type Mark = ();

/// Wall clock that reads zero where no clock exists (bare wasm).
pub(crate) struct Stopwatch(Mark);

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch(mark())
    }

    /// Time since start or the previous lap.
    pub(crate) fn lap(&mut self) -> Duration {
        let now = mark();
        let d = between(&self.0, &now);
        self.0 = now;
        d
    }
}

#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn mark() -> Mark {
    std::time::Instant::now()
}

#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn between(a: &Mark, b: &Mark) -> Duration {
    b.duration_since(*a)
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn mark() -> Mark {}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn between(_: &Mark, _: &Mark) -> Duration {
    Duration::ZERO
}
