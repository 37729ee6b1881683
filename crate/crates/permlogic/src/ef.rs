//! Exact solver for k-move Ehrenfeucht–Fraïssé games on finite structures.
//!
//! Spoiler picks an element of either structure, Duplicator answers in the
//! other; Duplicator wins when the chosen tuples induce isomorphic
//! substructures after k rounds. Positions are canonicalized for the memo
//! table by the set of chosen pairs (move order is irrelevant), which
//! collapses symmetric branches.

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::Structure;

type Memo = HashMap<(Vec<(u16, u16)>, u8), bool>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EfError {
    #[error("structures are over different signatures ({0} vs {1})")]
    SignatureMismatch(String, String),
    #[error("relation `{0}` has arity {1}; the game solver supports arity <= 2")]
    ArityTooLarge(String, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Duplicator,
    Spoiler,
}

struct Tables {
    /// Per relation: arity and dense lookup for both structures.
    rels: Vec<(usize, Vec<bool>, Vec<bool>)>,
    na: usize,
    nb: usize,
}

impl Tables {
    fn new(a: &Structure, b: &Structure) -> Result<Self, EfError> {
        if a.signature() != b.signature() {
            return Err(EfError::SignatureMismatch(
                a.signature().name().to_string(),
                b.signature().name().to_string(),
            ));
        }
        let (na, nb) = (a.domain_size(), b.domain_size());
        let mut rels = Vec::new();
        for (sym, arity) in a.signature().relations() {
            match arity {
                1 => {
                    let mut ta = vec![false; na + 1];
                    let mut tb = vec![false; nb + 1];
                    for t in a.tuples(sym) {
                        ta[t[0]] = true;
                    }
                    for t in b.tuples(sym) {
                        tb[t[0]] = true;
                    }
                    rels.push((1, ta, tb));
                }
                2 => {
                    let mut ta = vec![false; (na + 1) * (na + 1)];
                    let mut tb = vec![false; (nb + 1) * (nb + 1)];
                    for t in a.tuples(sym) {
                        ta[t[0] * (na + 1) + t[1]] = true;
                    }
                    for t in b.tuples(sym) {
                        tb[t[0] * (nb + 1) + t[1]] = true;
                    }
                    rels.push((2, ta, tb));
                }
                other => return Err(EfError::ArityTooLarge(sym.clone(), *other)),
            }
        }
        Ok(Tables { rels, na, nb })
    }

    /// Whether adding the pair `(x, y)` keeps the partial map a partial
    /// isomorphism.
    fn extends(&self, pairs: &[(u16, u16)], x: u16, y: u16) -> bool {
        for &(u, v) in pairs {
            if (u == x) != (v == y) {
                return false;
            }
        }
        for (arity, ta, tb) in &self.rels {
            if *arity == 1 {
                if ta[x as usize] != tb[y as usize] {
                    return false;
                }
                continue;
            }
            let look = |t: &[bool], n: usize, p: usize, q: usize| t[p * (n + 1) + q];
            if look(ta, self.na, x as usize, x as usize) != look(tb, self.nb, y as usize, y as usize)
            {
                return false;
            }
            for &(u, v) in pairs {
                if look(ta, self.na, x as usize, u as usize)
                    != look(tb, self.nb, y as usize, v as usize)
                    || look(ta, self.na, u as usize, x as usize)
                        != look(tb, self.nb, v as usize, y as usize)
                {
                    return false;
                }
            }
        }
        true
    }
}

fn duplicator_wins(
    t: &Tables,
    pairs: &mut Vec<(u16, u16)>,
    moves_left: usize,
    memo: &mut Memo,
) -> bool {
    if moves_left == 0 {
        return true;
    }
    let mut key: Vec<(u16, u16)> = pairs.clone();
    key.sort_unstable();
    key.dedup();
    if let Some(&cached) = memo.get(&(key.clone(), moves_left as u8)) {
        return cached;
    }
    let mut result = true;
    // Spoiler picks in A, Duplicator answers in B.
    'outer: for side in 0..2 {
        let (sn, dn) = if side == 0 { (t.na, t.nb) } else { (t.nb, t.na) };
        for s in 1..=sn {
            let mut answered = false;
            for d in 1..=dn {
                let (x, y) = if side == 0 { (s as u16, d as u16) } else { (d as u16, s as u16) };
                if !t.extends(pairs, x, y) {
                    continue;
                }
                pairs.push((x, y));
                let ok = duplicator_wins(t, pairs, moves_left - 1, memo);
                pairs.pop();
                if ok {
                    answered = true;
                    break;
                }
            }
            if !answered {
                result = false;
                break 'outer;
            }
        }
    }
    memo.insert((key, moves_left as u8), result);
    result
}

/// Decides the k-move game exactly. Requires structures over the same
/// signature with relations of arity at most 2.
pub fn ef_winner(a: &Structure, b: &Structure, k: usize) -> Result<Winner, EfError> {
    let t = Tables::new(a, b)?;
    let mut memo = Memo::new();
    let win = duplicator_wins(&t, &mut Vec::new(), k, &mut memo);
    Ok(if win { Winner::Duplicator } else { Winner::Spoiler })
}

/// As [`ef_winner`], exploring the top-level Spoiler choices on up to
/// `threads` OS threads, each with its own memo table.
pub fn ef_winner_parallel(a: &Structure, b: &Structure, k: usize, threads: usize) -> Result<Winner, EfError> {
    if threads <= 1 || k == 0 {
        return ef_winner(a, b, k);
    }
    let t = Tables::new(a, b)?;
    // Top-level Spoiler choices: (side, element).
    let choices: Vec<(usize, usize)> = (1..=t.na)
        .map(|s| (0, s))
        .chain((1..=t.nb).map(|s| (1, s)))
        .collect();
    let chunk = choices.len().div_ceil(threads);
    let all_answered = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for part in choices.chunks(chunk.max(1)) {
            let t = &t;
            handles.push(scope.spawn(move || {
                let mut memo = HashMap::new();
                part.iter().all(|&(side, s)| {
                    let dn = if side == 0 { t.nb } else { t.na };
                    (1..=dn).any(|d| {
                        let (x, y) =
                            if side == 0 { (s as u16, d as u16) } else { (d as u16, s as u16) };
                        t.extends(&[], x, y)
                            && duplicator_wins(t, &mut vec![(x, y)], k - 1, &mut memo)
                    })
                })
            }));
        }
        handles.into_iter().all(|h| h.join().expect("game thread panicked"))
    });
    Ok(if all_answered { Winner::Duplicator } else { Winner::Spoiler })
}
