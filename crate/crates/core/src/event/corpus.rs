use std::collections::HashMap;

use super::emoji::contains_emoji;
use super::{ActivityClass, Event, EventType};

/// Comment payload status, resolved once at ingestion so bodies need not be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum CommentKind {
    NotComment,
    /// A comment whose body was not recorded.
    NoBody,
    Plain,
    Emoji,
}

/// Interned event: indices into the corpus name tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompactEvent {
    pub ts: i64,
    pub repo: u32,
    pub actor: u32,
    pub kind: EventType,
    pub comment: CommentKind,
}

impl CompactEvent {
    pub fn class(&self) -> ActivityClass {
        self.kind.class()
    }

    pub fn is_contribution(&self) -> bool {
        self.class() == ActivityClass::Contribution
    }
}

/// All events of a run, interned and sorted by `(repo, ts, actor, kind)`.
///
/// Repo and actor indices follow the lexicographic order of their names, so a
/// corpus built from any permutation of the same events is identical.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    repo_names: Vec<String>,
    actor_names: Vec<String>,
    repo_lookup: HashMap<String, u32>,
    actor_lookup: HashMap<String, u32>,
    events: Vec<CompactEvent>,
    repo_offsets: Vec<usize>,
    first_push: Vec<Option<i64>>,
}

/// Incremental corpus construction for streamed ingestion.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    repos: HashMap<String, u32>,
    actors: HashMap<String, u32>,
    events: Vec<CompactEvent>,
}

fn intern(table: &mut HashMap<String, u32>, name: &str) -> u32 {
    if let Some(&id) = table.get(name) {
        return id;
    }
    let id = table.len() as u32;
    table.insert(name.to_string(), id);
    id
}

fn sorted_names(table: HashMap<String, u32>) -> (Vec<String>, Vec<u32>) {
    let mut pairs: Vec<(String, u32)> = table.into_iter().collect();
    pairs.sort();
    let mut remap = vec![0u32; pairs.len()];
    for (new, (_, old)) in pairs.iter().enumerate() {
        remap[*old as usize] = new as u32;
    }
    (pairs.into_iter().map(|(n, _)| n).collect(), remap)
}

impl CorpusBuilder {
    pub fn push(&mut self, event: &Event) {
        let repo = intern(&mut self.repos, &event.repo_id);
        let actor = intern(&mut self.actors, &event.actor_id);
        let comment = if !event.event_type.is_comment() {
            CommentKind::NotComment
        } else {
            match &event.body {
                None => CommentKind::NoBody,
                Some(b) if contains_emoji(b) => CommentKind::Emoji,
                Some(_) => CommentKind::Plain,
            }
        };
        self.events.push(CompactEvent { ts: event.timestamp.timestamp(), repo, actor, kind: event.event_type, comment });
    }

    pub fn finish(self) -> Corpus {
        let (repo_names, repo_remap) = sorted_names(self.repos);
        let (actor_names, actor_remap) = sorted_names(self.actors);
        let mut events = self.events;
        for e in &mut events {
            e.repo = repo_remap[e.repo as usize];
            e.actor = actor_remap[e.actor as usize];
        }
        events.sort_unstable_by_key(|e| (e.repo, e.ts, e.actor, e.kind, e.comment));

        let mut repo_offsets = vec![0usize; repo_names.len() + 1];
        for e in &events {
            repo_offsets[e.repo as usize + 1] += 1;
        }
        for i in 1..repo_offsets.len() {
            repo_offsets[i] += repo_offsets[i - 1];
        }
        let mut first_push = vec![None::<i64>; actor_names.len()];
        for e in events.iter().filter(|e| e.kind == EventType::Push) {
            let slot = &mut first_push[e.actor as usize];
            *slot = Some(slot.map_or(e.ts, |t: i64| t.min(e.ts)));
        }
        let repo_lookup = repo_names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        let actor_lookup = actor_names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        Corpus { repo_names, actor_names, repo_lookup, actor_lookup, events, repo_offsets, first_push }
    }
}

impl Corpus {
    pub fn builder() -> CorpusBuilder {
        CorpusBuilder::default()
    }

    pub fn from_events<'a, I: IntoIterator<Item = &'a Event>>(events: I) -> Corpus {
        let mut b = CorpusBuilder::default();
        for e in events {
            b.push(e);
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_repos(&self) -> usize {
        self.repo_names.len()
    }

    pub fn n_actors(&self) -> usize {
        self.actor_names.len()
    }

    pub fn repo_name(&self, repo: u32) -> &str {
        &self.repo_names[repo as usize]
    }

    pub fn actor_name(&self, actor: u32) -> &str {
        &self.actor_names[actor as usize]
    }

    pub fn repo_index(&self, name: &str) -> Option<u32> {
        self.repo_lookup.get(name).copied()
    }

    pub fn actor_index(&self, name: &str) -> Option<u32> {
        self.actor_lookup.get(name).copied()
    }

    pub fn events(&self) -> &[CompactEvent] {
        &self.events
    }

    /// Events of one repository in time order.
    pub fn repo_events(&self, repo: u32) -> &[CompactEvent] {
        let r = repo as usize;
        &self.events[self.repo_offsets[r]..self.repo_offsets[r + 1]]
    }

    /// Timestamp of the actor's first push anywhere in the corpus.
    pub fn first_push(&self, actor: u32) -> Option<i64> {
        self.first_push[actor as usize]
    }

    pub fn time_span(&self) -> Option<(i64, i64)> {
        let min = self.events.iter().map(|e| e.ts).min()?;
        let max = self.events.iter().map(|e| e.ts).max()?;
        Some((min, max))
    }
}
