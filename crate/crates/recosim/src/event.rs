use serde::{Deserialize, Serialize};

/// Organic or bandit, the `z` column of a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Organic view of a product.
    Organic { product: usize },
    /// An ad for `action` was shown; `click` records the response.
    Bandit { action: usize, click: bool },
}

/// One row of an event log. Organic rows carry only a viewed product and
/// bandit rows only an action and a click, so the field exclusivity of the
/// log schema holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub user: u64,
    pub t: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn organic(user: u64, t: u64, product: usize) -> Self {
        Self { user, t, kind: EventKind::Organic { product } }
    }

    pub fn bandit(user: u64, t: u64, action: usize, click: bool) -> Self {
        Self { user, t, kind: EventKind::Bandit { action, click } }
    }

    pub fn is_organic(&self) -> bool {
        matches!(self.kind, EventKind::Organic { .. })
    }

    pub fn is_bandit(&self) -> bool {
        !self.is_organic()
    }

    pub fn viewed(&self) -> Option<usize> {
        match self.kind {
            EventKind::Organic { product } => Some(product),
            EventKind::Bandit { .. } => None,
        }
    }

    pub fn action(&self) -> Option<usize> {
        match self.kind {
            EventKind::Bandit { action, .. } => Some(action),
            EventKind::Organic { .. } => None,
        }
    }

    pub fn click(&self) -> Option<bool> {
        match self.kind {
            EventKind::Bandit { click, .. } => Some(click),
            EventKind::Organic { .. } => None,
        }
    }
}

/// Most recent organic view in a per-user history.
pub fn last_organic_product(history: &[Event]) -> Option<usize> {
    history.iter().rev().find_map(Event::viewed)
}

/// Events ordered by user, then time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<Event>) -> Self {
        Self { events }
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn extend<I: IntoIterator<Item = Event>>(&mut self, events: I) {
        self.events.extend(events);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    pub fn bandit_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_bandit()).count()
    }

    pub fn organic_count(&self) -> usize {
        self.events.len() - self.bandit_count()
    }

    /// Contiguous per-user slices, in log order.
    pub fn users(&self) -> impl Iterator<Item = &[Event]> {
        self.events.chunk_by(|a, b| a.user == b.user)
    }

    /// Prefix of the log ending at the `n`-th bandit row (inclusive).
    ///
    /// The prefix is a valid log: the last user may be cut mid-episode but
    /// keeps consecutive time indices. Logs with fewer than `n` bandit rows are
    /// returned whole.
    pub fn truncate_to_bandit_events(&self, n: usize) -> EventLog {
        if n == 0 {
            let end = self.events.iter().position(Event::is_bandit).unwrap_or(self.events.len());
            return Self::from_events(self.events[..end].to_vec());
        }
        let mut seen = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.is_bandit() {
                seen += 1;
                if seen == n {
                    return Self::from_events(self.events[..=i].to_vec());
                }
            }
        }
        self.clone()
    }

    /// Every organic row plus only the first `n` bandit rows.
    ///
    /// Used to vary the amount of bandit feedback while holding the organic
    /// data fixed. The result can have gaps in per-user time indices, so it is
    /// a training set rather than a writable log.
    pub fn with_bandit_budget(&self, n: usize) -> EventLog {
        let mut kept = 0;
        let events = self
            .events
            .iter()
            .filter(|e| {
                if e.is_organic() {
                    true
                } else if kept < n {
                    kept += 1;
                    true
                } else {
                    false
                }
            })
            .copied()
            .collect();
        Self::from_events(events)
    }

    /// Drops every bandit row.
    pub fn organic_only(&self) -> EventLog {
        Self::from_events(self.events.iter().filter(|e| e.is_organic()).copied().collect())
    }
}

impl<'a> IntoIterator for &'a EventLog {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

impl FromIterator<Event> for EventLog {
    fn from_iter<I: IntoIterator<Item = Event>>(iter: I) -> Self {
        Self::from_events(iter.into_iter().collect())
    }
}
