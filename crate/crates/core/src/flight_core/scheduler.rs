use thiserror::Error;

use crate::time::VirtualTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("tick at {now} does not advance past previous tick {previous}")]
    NonMonotonicClock { previous: VirtualTime, now: VirtualTime },
    #[error("rate group period must be positive")]
    ZeroPeriod,
    #[error("at least one rate group is required")]
    NoGroups,
}

/// Members executed together every `period`. Member order is fixed at
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateGroup<C> {
    period: VirtualTime,
    members: Vec<C>,
}

impl<C> RateGroup<C> {
    pub fn new(period: VirtualTime, members: Vec<C>) -> Result<Self, SchedulerError> {
        if period.0 == 0 {
            return Err(SchedulerError::ZeroPeriod);
        }
        Ok(Self { period, members })
    }

    pub fn period(&self) -> VirtualTime {
        self.period
    }

    pub fn members(&self) -> &[C] {
        &self.members
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Activation<C> {
    pub group: usize,
    pub component: C,
    /// The period boundary this activation belongs to.
    pub due: VirtualTime,
}

/// Rate-group scheduler over virtual time. Groups are kept shortest-period
/// first; a tick that spans several period boundaries runs each due group
/// once per boundary crossed.
#[derive(Debug, Clone)]
pub struct Scheduler<C> {
    groups: Vec<RateGroup<C>>,
    last_tick: VirtualTime,
    runs: Vec<u64>,
}

impl<C: Copy> Scheduler<C> {
    pub fn new(mut groups: Vec<RateGroup<C>>) -> Result<Self, SchedulerError> {
        if groups.is_empty() {
            return Err(SchedulerError::NoGroups);
        }
        groups.sort_by_key(|g| g.period);
        let runs = vec![0; groups.len()];
        Ok(Self {
            groups,
            last_tick: VirtualTime::ZERO,
            runs,
        })
    }

    pub fn groups(&self) -> &[RateGroup<C>] {
        &self.groups
    }

    /// Executions per group so far, in group order.
    pub fn run_counts(&self) -> &[u64] {
        &self.runs
    }

    pub fn last_tick(&self) -> VirtualTime {
        self.last_tick
    }

    /// Greatest common divisor of all periods: ticking on multiples of it
    /// never skips a boundary.
    pub fn quantum(&self) -> VirtualTime {
        fn gcd(a: u64, b: u64) -> u64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        VirtualTime(self.groups.iter().fold(0, |acc, g| gcd(acc, g.period.0)))
    }

    pub fn tick(&mut self, now: VirtualTime) -> Result<Vec<Activation<C>>, SchedulerError> {
        if now <= self.last_tick {
            return Err(SchedulerError::NonMonotonicClock {
                previous: self.last_tick,
                now,
            });
        }
        let mut out = Vec::new();
        for (gi, group) in self.groups.iter().enumerate() {
            let p = group.period.0;
            let first = self.last_tick.0 / p + 1;
            let last = now.0 / p;
            for k in first..=last {
                for &component in &group.members {
                    out.push(Activation {
                        group: gi,
                        component,
                        due: VirtualTime(k * p),
                    });
                }
                self.runs[gi] += 1;
            }
        }
        self.last_tick = now;
        Ok(out)
    }
}
