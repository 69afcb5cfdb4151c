//! Operation counters for the group facade.
//!
//! Every exponentiation, pairing and hash in the scheme goes through
//! [`crate::group`], which reports to the [`Meter`] installed on the calling
//! thread (if any). Scheme code labels its phases with [`section`], so one
//! metered run yields a tally per phase.
//!
//! Source-group exponentiations are counted once per dual element (the
//! symmetric-group view); the raw count of curve multiplications is twice
//! that. A product of `k` exponentiations evaluated as one multi-exponentiation
//! adds `k` to the naive counter and `1` to the collapsed counter.

use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

#[derive(Debug, Default)]
pub struct OpCounters {
    source_exp: AtomicU64,
    source_exp_collapsed: AtomicU64,
    target_exp: AtomicU64,
    target_exp_collapsed: AtomicU64,
    pairings: AtomicU64,
    hashes: AtomicU64,
}

/// Point-in-time copy of an [`OpCounters`].
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTally {
    pub source_exp: u64,
    pub source_exp_collapsed: u64,
    pub target_exp: u64,
    pub target_exp_collapsed: u64,
    pub pairings: u64,
    pub hashes: u64,
}

impl OpTally {
    /// Exponentiations in either group, one per formula term.
    pub fn exps(&self) -> u64 {
        self.source_exp + self.target_exp
    }

    /// Exponentiations with each multi-exponentiation counted once.
    pub fn exps_collapsed(&self) -> u64 {
        self.source_exp_collapsed + self.target_exp_collapsed
    }

    /// Curve scalar multiplications actually performed (both halves of every
    /// dual element) plus target-group exponentiations.
    pub fn exps_raw(&self) -> u64 {
        2 * self.source_exp + self.target_exp
    }

    pub fn merge(&self, other: &OpTally) -> OpTally {
        OpTally {
            source_exp: self.source_exp + other.source_exp,
            source_exp_collapsed: self.source_exp_collapsed + other.source_exp_collapsed,
            target_exp: self.target_exp + other.target_exp,
            target_exp_collapsed: self.target_exp_collapsed + other.target_exp_collapsed,
            pairings: self.pairings + other.pairings,
            hashes: self.hashes + other.hashes,
        }
    }
}

impl OpCounters {
    pub fn tally(&self) -> OpTally {
        OpTally {
            source_exp: self.source_exp.load(Ordering::Relaxed),
            source_exp_collapsed: self.source_exp_collapsed.load(Ordering::Relaxed),
            target_exp: self.target_exp.load(Ordering::Relaxed),
            target_exp_collapsed: self.target_exp_collapsed.load(Ordering::Relaxed),
            pairings: self.pairings.load(Ordering::Relaxed),
            hashes: self.hashes.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        for c in [
            &self.source_exp,
            &self.source_exp_collapsed,
            &self.target_exp,
            &self.target_exp_collapsed,
            &self.pairings,
            &self.hashes,
        ] {
            c.store(0, Ordering::Relaxed);
        }
    }
}

/// A set of named per-phase counters.
#[derive(Debug, Default)]
pub struct Meter {
    sections: Mutex<Vec<(String, Arc<OpCounters>)>>,
}

struct Active {
    meter: Arc<Meter>,
    current: Arc<OpCounters>,
}

thread_local! {
    static ACTIVE: RefCell<Option<Active>> = const { RefCell::new(None) };
}

impl Meter {
    pub fn new() -> Arc<Meter> {
        Arc::new(Meter::default())
    }

    fn counters(&self, name: &str) -> Arc<OpCounters> {
        let mut sections = self.sections.lock().expect("meter lock poisoned");
        if let Some((_, c)) = sections.iter().find(|(n, _)| n == name) {
            return c.clone();
        }
        let c = Arc::new(OpCounters::default());
        sections.push((name.to_string(), c.clone()));
        c
    }

    /// Runs `f` with this meter installed on the current thread. Operations
    /// outside any nested [`section`] are charged to `name`.
    pub fn run<R>(self: &Arc<Self>, name: &str, f: impl FnOnce() -> R) -> R {
        let next = Active {
            meter: self.clone(),
            current: self.counters(name),
        };
        let prev = ACTIVE.with(|a| a.borrow_mut().replace(next));
        let _restore = Restore(Some(prev));
        f()
    }

    pub fn tally(&self, name: &str) -> OpTally {
        let sections = self.sections.lock().expect("meter lock poisoned");
        sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.tally())
            .unwrap_or_default()
    }

    /// All sections in first-use order.
    pub fn sections(&self) -> Vec<(String, OpTally)> {
        let sections = self.sections.lock().expect("meter lock poisoned");
        sections.iter().map(|(n, c)| (n.clone(), c.tally())).collect()
    }

    pub fn total(&self) -> OpTally {
        self.sections()
            .iter()
            .fold(OpTally::default(), |acc, (_, t)| acc.merge(t))
    }

    pub fn reset(&self) {
        let sections = self.sections.lock().expect("meter lock poisoned");
        for (_, c) in sections.iter() {
            c.reset();
        }
    }
}

struct Restore(Option<Option<Active>>);

impl Drop for Restore {
    fn drop(&mut self) {
        if let Some(prev) = self.0.take() {
            ACTIVE.with(|a| *a.borrow_mut() = prev);
        }
    }
}

/// Charges the operations performed by `f` to section `name` of the meter
/// active on this thread. Without an active meter this is just `f()`.
pub fn section<R>(name: &str, f: impl FnOnce() -> R) -> R {
    let meter = ACTIVE.with(|a| a.borrow().as_ref().map(|a| a.meter.clone()));
    match meter {
        Some(meter) => meter.run(name, f),
        None => f(),
    }
}

fn record(f: impl FnOnce(&OpCounters)) {
    ACTIVE.with(|a| {
        if let Some(active) = a.borrow().as_ref() {
            f(&active.current);
        }
    });
}

pub(crate) fn source_exp(terms: u64) {
    record(|c| {
        c.source_exp.fetch_add(terms, Ordering::Relaxed);
        c.source_exp_collapsed.fetch_add(1, Ordering::Relaxed);
    });
}

pub(crate) fn target_exp(terms: u64) {
    record(|c| {
        c.target_exp.fetch_add(terms, Ordering::Relaxed);
        c.target_exp_collapsed.fetch_add(1, Ordering::Relaxed);
    });
}

pub(crate) fn pairings(n: u64) {
    record(|c| {
        c.pairings.fetch_add(n, Ordering::Relaxed);
    });
}

pub(crate) fn hash() {
    record(|c| {
        c.hashes.fetch_add(1, Ordering::Relaxed);
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_sections_are_tallied_separately() {
        let meter = Meter::new();
        meter.run("outer", || {
            source_exp(1);
            section("inner", || {
                target_exp(2);
                pairings(3);
            });
            hash();
        });
        let outer = meter.tally("outer");
        let inner = meter.tally("inner");
        assert_eq!(outer.source_exp, 1);
        assert_eq!(outer.hashes, 1);
        assert_eq!(outer.target_exp, 0);
        assert_eq!(inner.target_exp, 2);
        assert_eq!(inner.target_exp_collapsed, 1);
        assert_eq!(inner.pairings, 3);
        assert_eq!(meter.total().exps(), 3);
    }

    #[test]
    fn nothing_recorded_without_meter() {
        let meter = Meter::new();
        source_exp(1);
        section("x", || pairings(1));
        assert_eq!(meter.total(), OpTally::default());
    }

    #[test]
    fn meters_are_per_thread() {
        let meter = Meter::new();
        meter.run("main", || {
            std::thread::spawn(|| source_exp(5)).join().unwrap();
            source_exp(1);
        });
        assert_eq!(meter.tally("main").source_exp, 1);
    }

    #[test]
    fn reset_zeroes_all_sections() {
        let meter = Meter::new();
        meter.run("a", || pairings(2));
        meter.reset();
        assert_eq!(meter.tally("a").pairings, 0);
    }
}
