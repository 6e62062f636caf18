use std::collections::HashMap;
use std::ops::{Deref, DerefMut};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::tactics::{apply_tactic, ProofState, TacticConfig, TacticError, TacticOutcome};
use crate::syntax::TacticNode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PoolError {
    #[error("no session became available within {0:?}")]
    Exhausted(Duration),
    #[error("pool is shut down")]
    ShutDown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub spawned: u64,
    pub reused: u64,
    pub acquisitions: u64,
    pub live: usize,
    pub in_use: usize,
    pub peak_live: usize,
    pub peak_in_use: usize,
}

struct Slot<T> {
    id: u64,
    value: T,
}

struct Inner<T> {
    idle: Vec<Slot<T>>,
    /// session id -> lease token of its current holder
    held: HashMap<u64, u64>,
    stats: PoolStats,
    shut: bool,
}

type Factory<T> = Box<dyn Fn(u64) -> T + Send + Sync>;

/// A bounded pool of reusable sessions. Grows on demand up to `max`.
pub struct EnvPool<T> {
    inner: Mutex<Inner<T>>,
    freed: Condvar,
    factory: Factory<T>,
    max: usize,
    timeout: Duration,
    next_id: AtomicU64,
    next_token: AtomicU64,
}

impl<T> EnvPool<T> {
    pub fn new(max: usize, timeout: Duration, factory: impl Fn(u64) -> T + Send + Sync + 'static) -> Arc<Self> {
        Arc::new(EnvPool {
            inner: Mutex::new(Inner { idle: Vec::new(), held: HashMap::new(), stats: PoolStats::default(), shut: false }),
            freed: Condvar::new(),
            factory: Box::new(factory),
            max: max.max(1),
            timeout,
            next_id: AtomicU64::new(0),
            next_token: AtomicU64::new(0),
        })
    }

    pub fn max_size(&self) -> usize {
        self.max
    }

    pub fn stats(&self) -> PoolStats {
        self.inner.lock().unwrap().stats
    }

    pub fn shutdown(&self) {
        self.inner.lock().unwrap().shut = true;
        self.freed.notify_all();
    }

    pub fn acquire(self: &Arc<Self>) -> Result<Lease<T>, PoolError> {
        let mut g = self.inner.lock().unwrap();
        let mut deadline = None;
        let slot = loop {
            if g.shut {
                return Err(PoolError::ShutDown);
            }
            if let Some(s) = g.idle.pop() {
                g.stats.reused += 1;
                break s;
            }
            if g.stats.live < self.max {
                g.stats.live += 1;
                g.stats.spawned += 1;
                g.stats.peak_live = g.stats.peak_live.max(g.stats.live);
                let id = self.next_id.fetch_add(1, Ordering::Relaxed);
                // spawning happens outside the lock
                drop(g);
                let value = (self.factory)(id);
                g = self.inner.lock().unwrap();
                break Slot { id, value };
            }
            let now = std::time::Instant::now();
            let deadline = *deadline.get_or_insert(now + self.timeout);
            if now >= deadline {
                return Err(PoolError::Exhausted(self.timeout));
            }
            g = self.freed.wait_timeout(g, deadline - now).unwrap().0;
        };
        let token = self.next_token.fetch_add(1, Ordering::Relaxed);
        let prev = g.held.insert(slot.id, token);
        assert!(prev.is_none(), "session {} leased twice", slot.id);
        g.stats.acquisitions += 1;
        g.stats.in_use += 1;
        g.stats.peak_in_use = g.stats.peak_in_use.max(g.stats.in_use);
        Ok(Lease { pool: Arc::clone(self), slot: Some(slot), token })
    }

    fn release(&self, slot: Slot<T>, token: u64) {
        let mut g = self.inner.lock().unwrap();
        let held = g.held.remove(&slot.id);
        assert_eq!(held, Some(token), "session {} released by a stale lease", slot.id);
        g.stats.in_use -= 1;
        g.idle.push(slot);
        drop(g);
        self.freed.notify_one();
    }
}

/// Exclusive use of one pooled session; returned to the pool on drop.
pub struct Lease<T> {
    pool: Arc<EnvPool<T>>,
    slot: Option<Slot<T>>,
    token: u64,
}

impl<T> Lease<T> {
    pub fn session_id(&self) -> u64 {
        self.slot.as_ref().unwrap().id
    }

    pub fn token(&self) -> u64 {
        self.token
    }
}

impl<T> Deref for Lease<T> {
    type Target = T;
    fn deref(&self) -> &T {
        &self.slot.as_ref().unwrap().value
    }
}

impl<T> DerefMut for Lease<T> {
    fn deref_mut(&mut self) -> &mut T {
        &mut self.slot.as_mut().unwrap().value
    }
}

impl<T> Drop for Lease<T> {
    fn drop(&mut self) {
        if let Some(slot) = self.slot.take() {
            self.pool.release(slot, self.token);
        }
    }
}

/// A prover worker: applies tactics to snapshots under one configuration.
#[derive(Debug, Clone)]
pub struct ProverSession {
    pub id: u64,
    pub applied: u64,
    pub config: TacticConfig,
}

impl ProverSession {
    pub fn new(id: u64, config: TacticConfig) -> Self {
        ProverSession { id, applied: 0, config }
    }

    pub fn apply(&mut self, state: &ProofState, tactic: &TacticNode) -> Result<TacticOutcome, TacticError> {
        self.applied += 1;
        apply_tactic(state, tactic, &self.config)
    }
}

pub fn session_pool(max: usize, config: TacticConfig) -> Arc<EnvPool<ProverSession>> {
    EnvPool::new(max, Duration::from_secs(30), move |id| ProverSession::new(id, config.clone()))
}
