//! `Int`/`Part` words as strand diagrams.
//!
//! `I_i` splits the strand at position `i` into two, `D_i` marks the strand
//! at position `i`. Letters touching unrelated strands commute, so a word up
//! to those commutations is a partial order of events; the remaining
//! relations are searched on that quotient.

use std::collections::{HashSet, VecDeque};

use super::{id_relations, letter_key, word_key, Direction, Gen, GenKind};

#[derive(Clone, Copy, Debug)]
enum Ev {
    D(usize),
    I(usize, usize, usize),
}

/// Events in application order (rightmost letter first).
struct Diagram {
    events: Vec<Ev>,
    below: Vec<u64>,
    above: Vec<u64>,
    init: usize,
}

pub(super) const MAX_EVENTS: usize = 64;

impl Diagram {
    #[allow(clippy::needless_range_loop)]
    fn build(w: &[Gen]) -> Diagram {
        let n = w.len();
        let init = w.iter().map(|g| g.index as usize).max().unwrap_or(0) + 1;
        let mut config: Vec<usize> = (0..init).collect();
        let mut next = init;
        let mut creator: Vec<Option<usize>> = vec![None; init + 2 * n];
        let mut marks: Vec<u64> = vec![0; init + 2 * n];
        let mut events = Vec::with_capacity(n);
        let mut below = vec![0u64; n];
        for g in w.iter().rev() {
            let p = g.index as usize - 1;
            let s = config[p];
            let e = events.len();
            let mut direct = creator[s].map_or(0, |c| 1u64 << c);
            if g.kind == GenKind::Int {
                direct |= marks[s];
                events.push(Ev::I(s, next, next + 1));
                config.splice(p..=p, [next, next + 1]);
                creator[next] = Some(e);
                creator[next + 1] = Some(e);
                next += 2;
            } else {
                events.push(Ev::D(s));
                marks[s] |= 1 << e;
            }
            let mut b = direct;
            for d in 0..e {
                if direct >> d & 1 == 1 {
                    b |= below[d];
                }
            }
            below[e] = b;
        }
        let mut above = vec![0u64; n];
        for e in 0..n {
            for d in 0..e {
                if below[e] >> d & 1 == 1 {
                    above[d] |= 1 << e;
                }
            }
        }
        Diagram {
            events,
            below,
            above,
            init,
        }
    }

    /// The word read off a linear extension given in application order.
    fn word(&self, order: &[usize]) -> Vec<Gen> {
        let mut config: Vec<usize> = (0..self.init).collect();
        let mut out = Vec::with_capacity(order.len());
        for &e in order {
            match self.events[e] {
                Ev::D(s) => {
                    let p = config.iter().position(|&x| x == s).expect("live strand");
                    out.push(Gen::part(p as u32 + 1));
                }
                Ev::I(s, a, b) => {
                    let p = config.iter().position(|&x| x == s).expect("live strand");
                    config.splice(p..=p, [a, b]);
                    out.push(Gen::int(p as u32 + 1));
                }
            }
        }
        out.reverse();
        out
    }

    /// Least word among the linear extensions, built greedily from the left.
    fn canonical(&self) -> Vec<Gen> {
        let n = self.events.len();
        let mut config: Vec<usize> = (0..self.init).collect();
        for e in &self.events {
            if let Ev::I(s, a, b) = *e {
                let p = config.iter().position(|&x| x == s).expect("live strand");
                config.splice(p..=p, [a, b]);
            }
        }
        let mut left: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut out = Vec::with_capacity(n);
        while left != 0 {
            let mut best: Option<(usize, Gen, usize)> = None;
            for e in 0..n {
                if left >> e & 1 == 0 || self.above[e] & left != 0 {
                    continue;
                }
                let (g, p) = match self.events[e] {
                    Ev::D(s) => {
                        let p = config.iter().position(|&x| x == s).expect("live strand");
                        (Gen::part(p as u32 + 1), p)
                    }
                    Ev::I(_, a, _) => {
                        let p = config.iter().position(|&x| x == a).expect("live strand");
                        (Gen::int(p as u32 + 1), p)
                    }
                };
                if best.is_none_or(|(_, bg, _)| letter_key(&g) < letter_key(&bg)) {
                    best = Some((e, g, p));
                }
            }
            let (e, g, p) = best.expect("a maximal event exists");
            if let Ev::I(s, _, _) = self.events[e] {
                config.splice(p..p + 2, [s]);
            }
            left &= !(1 << e);
            out.push(g);
        }
        out
    }

    fn comparable(&self, a: usize, b: usize) -> bool {
        (self.below[a] | self.above[a]) >> b & 1 == 1
    }

    /// Canonical words one relation step away, skipping two-letter windows
    /// (those are commutations and stay inside the diagram).
    fn neighbours(&self, out: &mut Vec<Vec<Gen>>) {
        let n = self.events.len();
        for r in id_relations() {
            for dir in [Direction::Forward, Direction::Backward] {
                let (src, _) = r.sides(dir);
                if src.len() < 3 {
                    continue;
                }
                // application order reverses the pattern
                let kinds: Vec<GenKind> = src.iter().rev().map(|p| p.kind).collect();
                let mut tuple = Vec::with_capacity(kinds.len());
                self.windows(&kinds, &mut tuple, n, &mut |t| {
                    let w_mask: u64 = t.iter().fold(0, |m, &e| m | 1 << e);
                    let down = t.iter().fold(0, |m, &e| m | self.below[e]) & !w_mask;
                    let mut order: Vec<usize> = (0..n).filter(|e| down >> e & 1 == 1).collect();
                    let pre = order.len();
                    order.extend_from_slice(t);
                    order.extend((0..n).filter(|e| (down | w_mask) >> e & 1 == 0));
                    let word = self.word(&order);
                    let start = n - pre - t.len();
                    let window = &word[start..start + t.len()];
                    if let Some(rep) = r.rewrite(window, dir) {
                        let mut next = word[..start].to_vec();
                        next.extend(rep);
                        next.extend_from_slice(&word[start + t.len()..]);
                        out.push(Diagram::build(&next).canonical());
                    }
                });
            }
        }
    }

    /// Ordered event tuples that can sit consecutively in some linear
    /// extension, with the given kinds, connected by comparability.
    fn windows(
        &self,
        kinds: &[GenKind],
        tuple: &mut Vec<usize>,
        n: usize,
        f: &mut dyn FnMut(&[usize]),
    ) {
        let l = tuple.len();
        if l == kinds.len() {
            f(tuple);
            return;
        }
        for e in 0..n {
            let kind_ok = matches!(
                (self.events[e], kinds[l]),
                (Ev::D(_), GenKind::Part) | (Ev::I(..), GenKind::Int)
            );
            if !kind_ok || tuple.contains(&e) {
                continue;
            }
            if l > 0 && !tuple.iter().any(|&t| self.comparable(t, e)) {
                continue;
            }
            // nothing chosen earlier may come after e
            if tuple.iter().any(|&t| self.below[t] >> e & 1 == 1) {
                continue;
            }
            // no outside event strictly between the chosen ones and e
            let mut w_mask = 1u64 << e;
            let mut up = self.above[e];
            let mut down = self.below[e];
            for &t in tuple.iter() {
                w_mask |= 1 << t;
                up |= self.above[t];
                down |= self.below[t];
            }
            if up & down & !w_mask != 0 {
                continue;
            }
            tuple.push(e);
            self.windows(kinds, tuple, n, f);
            tuple.pop();
        }
    }
}

fn encode(w: &[Gen]) -> Vec<u16> {
    w.iter()
        .map(|g| ((g.kind == GenKind::Int) as u16) << 15 | g.index as u16)
        .collect()
}

/// Least word of the class of an `Int`/`Part` word, searching diagrams.
/// Returns `false` when the search was cut off at `cap` diagrams.
pub(super) fn class_min(w: &[Gen], cap: usize) -> (Vec<Gen>, bool) {
    let start = Diagram::build(w).canonical();
    let mut seen: HashSet<Vec<u16>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(encode(&start));
    let mut best_key = word_key(&start);
    let mut best = start.clone();
    queue.push_back(start);
    let mut complete = true;
    let mut buf = Vec::new();
    while let Some(cur) = queue.pop_front() {
        let k = word_key(&cur);
        if k < best_key {
            best_key = k;
            best = cur.clone();
        }
        buf.clear();
        Diagram::build(&cur).neighbours(&mut buf);
        for next in buf.drain(..) {
            let code = encode(&next);
            if seen.contains(&code) {
                continue;
            }
            if seen.len() >= cap {
                complete = false;
                continue;
            }
            seen.insert(code);
            queue.push_back(next);
        }
    }
    (best, complete)
}
