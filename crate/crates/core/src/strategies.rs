//! The four attack strategies, run against an offline simulation oracle
//! under a request budget.
//!
//! Breadth-first and depth-first sweep a wordlist. The probabilistic
//! strategy pops (parent, word, probability) candidates off a max-heap fed
//! from a weighted tree, falling back to breadth-first when the tree runs
//! dry. The language-model strategy feeds the same heap from top-k next
//! token predictions and ends when the heap empties. Every strategy is
//! deterministic: heap ties break by shallower depth, then word, then
//! insertion order.

use crate::dataset::Wordlist;
use crate::fstree::{SiteTree, WeightedTree};
use crate::lm::LanguageModel;
use crate::url_model::{PathSeq, Segment};
use serde::{Deserialize, Serialize};
use std::collections::{BinaryHeap, HashSet, VecDeque};

/// Request cap per simulated attack.
pub const DEFAULT_BUDGET: u64 = 100_000;
/// Recursion cap for the depth-first strategy.
pub const DEFAULT_DEPTH_CAP: usize = 16;

/// Offline stand-in for sending an HTTP request: a hit means the path
/// exists in the target's reconstructed site tree.
pub struct SimOracle<'a> {
    site: &'a SiteTree,
    budget: u64,
    requests_sent: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryResult {
    Hit,
    Miss,
    OutOfBudget,
}

impl<'a> SimOracle<'a> {
    pub fn new(site: &'a SiteTree, budget: u64) -> Self {
        SimOracle { site, budget, requests_sent: 0 }
    }

    /// Counts and answers one request, or reports budget exhaustion
    /// without counting.
    pub fn query(&mut self, path: &PathSeq) -> QueryResult {
        if self.requests_sent == self.budget {
            return QueryResult::OutOfBudget;
        }
        self.requests_sent += 1;
        if self.site.contains(path) {
            QueryResult::Hit
        } else {
            QueryResult::Miss
        }
    }

    pub fn requests_sent(&self) -> u64 {
        self.requests_sent
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }
}

/// One simulated request in issue order; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestEvent {
    pub index: u64,
    pub path: PathSeq,
    pub hit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// The request budget ran out.
    Budget,
    /// The strategy had nothing left to try.
    Exhausted,
}

/// Ordered log of one strategy's simulated requests on one site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackTrace {
    pub events: Vec<RequestEvent>,
    pub successes: u64,
    pub terminated_by: Termination,
}

impl AttackTrace {
    pub fn request_count(&self) -> u64 {
        self.events.len() as u64
    }

    /// 1-based request indices of the hits.
    pub fn hit_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.events.iter().filter(|e| e.hit).map(|e| e.index)
    }
}

/// Shared bookkeeping: issues deduplicated requests and accumulates the
/// trace. The root URL itself is never requested and never counts.
struct Session<'o, 'a> {
    oracle: &'o mut SimOracle<'a>,
    events: Vec<RequestEvent>,
    successes: u64,
    visited: HashSet<PathSeq>,
    discovered: Vec<PathSeq>,
    out_of_budget: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Hit,
    Miss,
    /// Already requested earlier; spent no budget.
    Skipped,
    Exhausted,
}

impl<'o, 'a> Session<'o, 'a> {
    fn new(oracle: &'o mut SimOracle<'a>) -> Self {
        Session {
            oracle,
            events: Vec::new(),
            successes: 0,
            visited: HashSet::new(),
            discovered: Vec::new(),
            out_of_budget: false,
        }
    }

    fn request(&mut self, path: PathSeq, dedupe: bool) -> Outcome {
        if dedupe && self.visited.contains(&path) {
            return Outcome::Skipped;
        }
        match self.oracle.query(&path) {
            QueryResult::OutOfBudget => {
                self.out_of_budget = true;
                Outcome::Exhausted
            }
            QueryResult::Hit => {
                self.visited.insert(path.clone());
                self.events.push(RequestEvent {
                    index: self.oracle.requests_sent(),
                    path: path.clone(),
                    hit: true,
                });
                self.successes += 1;
                self.discovered.push(path);
                Outcome::Hit
            }
            QueryResult::Miss => {
                self.visited.insert(path.clone());
                self.events.push(RequestEvent {
                    index: self.oracle.requests_sent(),
                    path,
                    hit: false,
                });
                Outcome::Miss
            }
        }
    }

    fn finish(self) -> AttackTrace {
        let terminated_by = if self.oracle.requests_sent() == self.oracle.budget() {
            Termination::Budget
        } else {
            Termination::Exhausted
        };
        AttackTrace { events: self.events, successes: self.successes, terminated_by }
    }
}

/// Breadth-first sweep: a FIFO queue of discovered directories, each
/// expanded with every wordlist word in file order.
pub fn run_breadth(oracle: &mut SimOracle, wordlist: &Wordlist) -> AttackTrace {
    let mut session = Session::new(oracle);
    breadth_from(&mut session, VecDeque::from([PathSeq::root()]), wordlist.words(), false);
    session.finish()
}

fn breadth_from(
    session: &mut Session,
    mut queue: VecDeque<PathSeq>,
    words: &[Segment],
    dedupe: bool,
) {
    'outer: while let Some(parent) = queue.pop_front() {
        for word in words {
            let child = parent.child(word.clone());
            match session.request(child.clone(), dedupe) {
                Outcome::Exhausted => break 'outer,
                Outcome::Hit => queue.push_back(child),
                Outcome::Miss | Outcome::Skipped => {}
            }
        }
    }
}

/// Depth-first sweep with the default recursion cap.
pub fn run_depth(oracle: &mut SimOracle, wordlist: &Wordlist) -> AttackTrace {
    run_depth_capped(oracle, wordlist, DEFAULT_DEPTH_CAP)
}

/// Depth-first sweep: every hit is exhaustively brute-forced with the full
/// wordlist before the current level resumes. `depth_cap` bounds the
/// recursion so adversarial fixtures terminate.
pub fn run_depth_capped(
    oracle: &mut SimOracle,
    wordlist: &Wordlist,
    depth_cap: usize,
) -> AttackTrace {
    fn descend(
        session: &mut Session,
        base: &PathSeq,
        words: &[Segment],
        depth_cap: usize,
    ) -> bool {
        for word in words {
            let child = base.child(word.clone());
            match session.request(child.clone(), false) {
                Outcome::Exhausted => return false,
                Outcome::Hit => {
                    if child.depth() < depth_cap && !descend(session, &child, words, depth_cap) {
                        return false;
                    }
                }
                Outcome::Miss | Outcome::Skipped => {}
            }
        }
        true
    }
    let mut session = Session::new(oracle);
    descend(&mut session, &PathSeq::root(), wordlist.words(), depth_cap);
    session.finish()
}

/// A frontier entry: try `word` under `parent` with the given priority.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub parent: PathSeq,
    pub word: Segment,
    pub priority: f64,
    seq: u64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // max-heap: higher priority first; ties prefer shallower paths,
        // then lexicographically smaller words, then earlier insertion.
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.parent.depth().cmp(&self.parent.depth()))
            .then_with(|| other.word.cmp(&self.word))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// The probability of each child of `parent` in the tree: its weight
/// divided by the sum of all sibling weights, in deterministic child order.
pub fn candidate_probabilities(tree: &WeightedTree, parent: &PathSeq) -> Vec<(Segment, f64)> {
    let children = tree.children_with_weights(parent);
    let total: u64 = children.iter().map(|(_, w)| w).sum();
    if total == 0 {
        return Vec::new();
    }
    children
        .into_iter()
        .map(|(seg, w)| (seg, w as f64 / total as f64))
        .collect()
}

struct Frontier {
    heap: BinaryHeap<Candidate>,
    next_seq: u64,
}

impl Frontier {
    fn new() -> Self {
        Frontier { heap: BinaryHeap::new(), next_seq: 0 }
    }

    fn push(&mut self, parent: PathSeq, word: Segment, priority: f64) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Candidate { parent, word, priority, seq });
    }

    fn pop(&mut self) -> Option<Candidate> {
        self.heap.pop()
    }
}

/// Probabilistic strategy: a max-heap of tree candidates ordered by
/// conditional probability; when the tree is exhausted with budget left, a
/// breadth-first fallback over `fallback` resumes from everything already
/// discovered, skipping already-requested URLs at no cost. The fallback
/// wordlist is reordered by descending global weight in the tree, file
/// order on ties.
pub fn run_probabilistic(
    oracle: &mut SimOracle,
    tree: &WeightedTree,
    fallback: &Wordlist,
) -> AttackTrace {
    let mut session = Session::new(oracle);
    let mut frontier = Frontier::new();
    for (word, priority) in candidate_probabilities(tree, &PathSeq::root()) {
        frontier.push(PathSeq::root(), word, priority);
    }
    let mut exhausted = false;
    while let Some(candidate) = frontier.pop() {
        let path = candidate.parent.child(candidate.word.clone());
        match session.request(path.clone(), true) {
            Outcome::Exhausted => {
                exhausted = true;
                break;
            }
            Outcome::Hit => {
                for (word, priority) in candidate_probabilities(tree, &path) {
                    frontier.push(path.clone(), word, priority);
                }
            }
            Outcome::Miss | Outcome::Skipped => {}
        }
    }

    if !exhausted {
        // Fallback sweep: prior knowledge first, then file order.
        let mut indexed: Vec<(usize, &Segment)> = fallback.words().iter().enumerate().collect();
        indexed.sort_by_key(|(idx, word)| (std::cmp::Reverse(tree.global_weight(word)), *idx));
        let ordered: Vec<Segment> = indexed.into_iter().map(|(_, w)| w.clone()).collect();
        let mut queue = VecDeque::with_capacity(session.discovered.len() + 1);
        queue.push_back(PathSeq::root());
        queue.extend(session.discovered.iter().cloned());
        breadth_from(&mut session, queue, &ordered, true);
    }
    session.finish()
}

/// Language-model strategy: the frontier holds top-`top_predicts`
/// next-directory predictions with their conditional probabilities; every
/// hit is expanded with fresh predictions. No fallback: the attack ends
/// when the heap empties or the budget runs out.
pub fn run_lm(oracle: &mut SimOracle, model: &LanguageModel, top_predicts: usize) -> AttackTrace {
    let mut session = Session::new(oracle);
    let mut frontier = Frontier::new();
    for (word, priority) in model.predict_topk(&PathSeq::root(), top_predicts) {
        frontier.push(PathSeq::root(), word, priority);
    }
    while let Some(candidate) = frontier.pop() {
        let path = candidate.parent.child(candidate.word.clone());
        match session.request(path.clone(), true) {
            Outcome::Exhausted => break,
            Outcome::Hit => {
                for (word, priority) in model.predict_topk(&path, top_predicts) {
                    frontier.push(path.clone(), word, priority);
                }
            }
            Outcome::Miss | Outcome::Skipped => {}
        }
    }
    session.finish()
}
