//! Exact distinct-substring counting over sets of messages.
//!
//! The emote metric needs, per chunk, the number of distinct substrings of
//! bounded length across all messages. Materializing every substring is
//! quadratic in message length and dominates the whole pipeline, so the
//! counter is a generalized suffix automaton built over the chunk's
//! messages: construction is linear in total characters and the bounded
//! count falls out of the state lengths.
//!
//! Substrings are counted over Unicode scalar values, never raw bytes, so
//! multi-byte text cannot split a character.
//!
//! Layout notes: most states carry a single outgoing transition, so the
//! first transition is stored inline in the state record; higher degrees
//! spill into per-state vectors drawn from a recycled pool. [`clear`]
//! keeps all capacity, so a counter reused across chunks stops allocating
//! once warm.
//!
//! [`clear`]: SubstringCounter::clear

const NONE: u32 = u32::MAX;
const ROOT: u32 = 0;
const EMPTY_KEY: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct State {
    /// Length of the longest substring in this state's class.
    len: u32,
    /// Suffix link.
    link: u32,
    /// Inline first transition; `EMPTY_KEY` when the state has none.
    first_key: u32,
    first_target: u32,
    /// Index into the spill pool for transitions beyond the first.
    spill: u32,
}

/// Suffix-automaton-backed counter for distinct substrings of a string set.
/// Substrings never span two inserted strings.
#[derive(Debug)]
pub struct SubstringCounter {
    states: Vec<State>,
    /// Number of live states; slots beyond this are recycled storage.
    live: usize,
    spill: Vec<Vec<(u32, u32)>>,
    spill_live: usize,
}

impl Default for SubstringCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl SubstringCounter {
    pub fn new() -> Self {
        let mut counter =
            SubstringCounter { states: Vec::new(), live: 0, spill: Vec::new(), spill_live: 0 };
        counter.clear();
        counter
    }

    pub fn clear(&mut self) {
        self.live = 0;
        self.spill_live = 0;
        self.add_state(0, NONE);
    }

    /// Adds one string to the set.
    pub fn insert(&mut self, text: &str) {
        let mut last = ROOT;
        for c in text.chars() {
            last = self.extend(last, c as u32);
        }
    }

    #[inline]
    fn trans(&self, state: u32, key: u32) -> Option<u32> {
        let s = &self.states[state as usize];
        if s.first_key == key {
            return Some(s.first_target);
        }
        if s.spill != NONE {
            for &(k, target) in &self.spill[s.spill as usize] {
                if k == key {
                    return Some(target);
                }
            }
        }
        None
    }

    fn set_trans(&mut self, state: u32, key: u32, target: u32) {
        let s = &mut self.states[state as usize];
        if s.first_key == key {
            s.first_target = target;
            return;
        }
        if s.first_key == EMPTY_KEY {
            s.first_key = key;
            s.first_target = target;
            return;
        }
        if s.spill == NONE {
            let idx = self.spill_live;
            self.spill_live += 1;
            if idx == self.spill.len() {
                self.spill.push(Vec::with_capacity(4));
            } else {
                self.spill[idx].clear();
            }
            self.states[state as usize].spill = idx as u32;
            self.spill[idx].push((key, target));
            return;
        }
        let spill = &mut self.spill[s.spill as usize];
        for entry in spill.iter_mut() {
            if entry.0 == key {
                entry.1 = target;
                return;
            }
        }
        spill.push((key, target));
    }

    fn add_state(&mut self, len: u32, link: u32) -> u32 {
        let idx = self.live;
        self.live += 1;
        let state = State { len, link, first_key: EMPTY_KEY, first_target: NONE, spill: NONE };
        if idx == self.states.len() {
            self.states.push(state);
        } else {
            self.states[idx] = state;
        }
        idx as u32
    }

    /// Online extension supporting repeated inserts: when the transition
    /// already exists the target (or a clone of it) is reused instead of
    /// creating a duplicate state.
    fn extend(&mut self, last: u32, key: u32) -> u32 {
        if let Some(q) = self.trans(last, key) {
            if self.states[q as usize].len == self.states[last as usize].len + 1 {
                return q;
            }
            return self.clone_through(last, q, key);
        }

        let cur = self.add_state(self.states[last as usize].len + 1, NONE);
        let mut p = last;
        while p != NONE && self.trans(p, key).is_none() {
            self.set_trans(p, key, cur);
            p = self.states[p as usize].link;
        }
        if p == NONE {
            self.states[cur as usize].link = ROOT;
            return cur;
        }
        let q = self.trans(p, key).expect("transition exists by loop exit");
        if self.states[q as usize].len == self.states[p as usize].len + 1 {
            self.states[cur as usize].link = q;
        } else {
            let clone = self.clone_through(p, q, key);
            self.states[cur as usize].link = clone;
        }
        cur
    }

    /// Clones `q` at length `len(p) + 1`, redirecting the suffix-chain
    /// transitions of `p` that pointed at `q`.
    fn clone_through(&mut self, p: u32, q: u32, key: u32) -> u32 {
        let clone = self.add_state(self.states[p as usize].len + 1, self.states[q as usize].link);
        // Copy q's transitions onto the clone.
        let (first_key, first_target, q_spill) = {
            let q_state = &self.states[q as usize];
            (q_state.first_key, q_state.first_target, q_state.spill)
        };
        if first_key != EMPTY_KEY {
            self.set_trans(clone, first_key, first_target);
        }
        if q_spill != NONE {
            for i in 0..self.spill[q_spill as usize].len() {
                let (k, target) = self.spill[q_spill as usize][i];
                self.set_trans(clone, k, target);
            }
        }
        self.states[q as usize].link = clone;
        let mut p = p;
        while p != NONE && self.trans(p, key) == Some(q) {
            self.set_trans(p, key, clone);
            p = self.states[p as usize].link;
        }
        clone
    }

    /// Number of distinct substrings with length in `1..=k` across every
    /// inserted string. Each state contributes its class's length range,
    /// capped at `k`.
    pub fn distinct_up_to(&self, k: usize) -> u64 {
        let k = k as u32;
        let mut total: u64 = 0;
        for state in &self.states[1..self.live] {
            let hi = state.len.min(k);
            let lo = self.states[state.link as usize].len.min(k);
            total += (hi - lo) as u64;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Oracle: double-loop enumeration of all bounded-length substrings.
    fn brute_distinct(texts: &[&str], k: usize) -> u64 {
        let mut set: HashSet<String> = HashSet::new();
        for text in texts {
            let chars: Vec<char> = text.chars().collect();
            for i in 0..chars.len() {
                for len in 1..=k.min(chars.len() - i) {
                    set.insert(chars[i..i + len].iter().collect());
                }
            }
        }
        set.len() as u64
    }

    fn counted(texts: &[&str], k: usize) -> u64 {
        let mut counter = SubstringCounter::new();
        for t in texts {
            counter.insert(t);
        }
        counter.distinct_up_to(k)
    }

    #[test]
    fn kappa_has_thirteen_shingles() {
        assert_eq!(counted(&["Kappa"], 24), 13);
        assert_eq!(brute_distinct(&["Kappa"], 24), 13);
    }

    #[test]
    fn repetition_collapses() {
        assert_eq!(counted(&["aaa"], 24), 3);
        assert_eq!(counted(&["aaa"], 2), 2);
    }

    #[test]
    fn empty_and_degenerate_inputs() {
        assert_eq!(counted(&[], 24), 0);
        assert_eq!(counted(&[""], 24), 0);
        assert_eq!(counted(&["x"], 24), 1);
    }

    #[test]
    fn multiple_strings_union() {
        // "ab" and "ba" share single characters but not pairs.
        assert_eq!(counted(&["ab", "ba"], 24), 4);
        assert_eq!(counted(&["ab", "ab"], 24), 3);
    }

    #[test]
    fn substrings_do_not_span_strings() {
        // If spanning were possible, "ab" would appear here.
        assert_eq!(counted(&["a", "b"], 24), 2);
    }

    #[test]
    fn unicode_counts_scalar_values() {
        assert_eq!(counted(&["éé"], 24), 2); // "é" and "éé"
    }

    #[test]
    fn matches_brute_force_on_random_inputs() {
        let mut rng = crate::rng::Rng::seed_from_u64(1234);
        for round in 0..400 {
            let alphabet: Vec<char> = match round % 3 {
                0 => vec!['a', 'b'],
                1 => vec!['a', 'b', 'c', 'd'],
                _ => vec!['K', 'a', 'p', ' ', 'é'],
            };
            let n_strings = rng.range_usize(1, 4);
            let texts: Vec<String> = (0..n_strings)
                .map(|_| {
                    let len = rng.range_usize(0, 60);
                    (0..len).map(|_| alphabet[rng.range_usize(0, alphabet.len() - 1)]).collect()
                })
                .collect();
            let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
            for k in [1, 2, 5, 24, 100] {
                assert_eq!(counted(&refs, k), brute_distinct(&refs, k), "texts {refs:?} k {k}");
            }
        }
    }

    #[test]
    fn reused_counter_matches_fresh_counter() {
        // Reuse across many inputs must behave exactly like fresh builds.
        let mut rng = crate::rng::Rng::seed_from_u64(77);
        let mut reused = SubstringCounter::new();
        for _ in 0..200 {
            let n_texts: usize = rng.range_usize(1, 5);
            let texts: Vec<String> = (0..n_texts)
                .map(|_| {
                    let len = rng.range_usize(0, 40);
                    (0..len).map(|_| ['a', 'b', 'K', 'p'][rng.range_usize(0, 3)]).collect()
                })
                .collect();
            let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
            reused.clear();
            for t in &refs {
                reused.insert(t);
            }
            assert_eq!(reused.distinct_up_to(24), counted(&refs, 24));
        }
    }

    #[test]
    fn clear_resets_the_set() {
        let mut counter = SubstringCounter::new();
        counter.insert("abcabc");
        assert!(counter.distinct_up_to(24) > 0);
        counter.clear();
        assert_eq!(counter.distinct_up_to(24), 0);
        counter.insert("xy");
        assert_eq!(counter.distinct_up_to(24), 3);
    }
}
