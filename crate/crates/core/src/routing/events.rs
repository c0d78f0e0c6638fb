//! Machine-readable event log.
//!
//! One JSON object per line, always starting with the logical time `t` and the
//! event name, followed by the event's fields:
//!
//! | event         | fields                                              |
//! |---------------|-----------------------------------------------------|
//! | `SUBSCRIBE`   | `client`, `router`, `code`                          |
//! | `UNSUBSCRIBE` | `client`, `router`                                  |
//! | `HANDOFF`     | `client`, `from`, `to`, `code`, `messages`          |
//! | `DISSEMINATE` | `msg`, `origin`, `rect`, `routers`                  |
//! | `DELIVER`     | `msg`, `client`, `router`                           |
//! | `ROUTER_FAIL` | `router`, `clients`                                 |
//!
//! Codes are bit strings (`"0110"`, `""` for the empty prefix); rectangles are
//! objects with inclusive `x_min`, `x_max`, `y_min`, `y_max`.

use std::io::{self, Write};

use serde::Serialize;

use crate::routing::Origin;
use crate::zorder::{Rect, ZCode};
use crate::{ClientId, RouterId};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Subscribe {
        client: ClientId,
        router: RouterId,
        code: ZCode,
    },
    Unsubscribe {
        client: ClientId,
        router: RouterId,
    },
    Handoff {
        client: ClientId,
        from: Vec<RouterId>,
        to: Vec<RouterId>,
        code: ZCode,
        messages: u32,
    },
    Disseminate {
        msg: u64,
        origin: Origin,
        rect: Rect,
        routers: Vec<RouterId>,
    },
    Deliver {
        msg: u64,
        client: ClientId,
        router: RouterId,
    },
    RouterFail {
        router: RouterId,
        clients: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Append-only event sink stamped with the current logical time.
///
/// A disabled log drops everything; baselines and oracle runs use one.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    now: u64,
    enabled: bool,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn set_time(&mut self, t: u64) {
        self.now = t;
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn push(&mut self, kind: EventKind) {
        if self.enabled {
            self.events.push(Event { t: self.now, kind });
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
