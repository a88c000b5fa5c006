use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BackendError;

/// Attempt budget with exponential backoff between attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub initial_backoff: Duration,
    pub multiplier: f64,
    #[serde(with = "millis")]
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            initial_backoff: Duration::from_millis(200),
            multiplier: 2.0,
            max_backoff: Duration::from_secs(5),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, where `attempt` counts from 1.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(attempt.saturating_sub(1) as i32);
        self.initial_backoff.mul_f64(factor).min(self.max_backoff)
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// attempt budget is spent.
    pub fn run<T, F>(&self, mut op: F) -> Result<T, BackendError>
    where
        F: FnMut(u32) -> Result<T, BackendError>,
    {
        let max = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if !e.is_retryable() => return Err(e),
                Err(e) if attempt >= max => {
                    return Err(BackendError::Exhausted { attempts: attempt, last: Box::new(e) })
                }
                Err(e) => {
                    log::warn!("attempt {attempt}/{max} failed: {e}; retrying");
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(max_attempts: u32) -> RetryPolicy {
        RetryPolicy { max_attempts, initial_backoff: Duration::from_millis(1), ..Default::default() }
    }

    #[test]
    fn backoff_grows_exponentially_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_millis(200));
        assert_eq!(p.backoff(2), Duration::from_millis(400));
        assert_eq!(p.backoff(3), Duration::from_millis(800));
        assert_eq!(p.backoff(20), Duration::from_secs(5));
    }

    #[test]
    fn succeeds_after_transient_failures() {
        let r = quick(3).run(|attempt| {
            if attempt < 3 {
                Err(BackendError::Unreachable("down".into()))
            } else {
                Ok(attempt)
            }
        });
        assert_eq!(r, Ok(3));
    }

    #[test]
    fn exhausts_budget() {
        let mut calls = 0;
        let r: Result<(), _> = quick(3).run(|_| {
            calls += 1;
            Err(BackendError::Timeout("slow".into()))
        });
        assert_eq!(calls, 3);
        assert!(matches!(r, Err(BackendError::Exhausted { attempts: 3, .. })));
    }

    #[test]
    fn permanent_errors_are_not_retried() {
        let mut calls = 0;
        let r: Result<(), _> = quick(3).run(|_| {
            calls += 1;
            Err(BackendError::Status { code: 400, body: "bad".into() })
        });
        assert_eq!(calls, 1);
        assert!(matches!(r, Err(BackendError::Status { code: 400, .. })));
    }
}
