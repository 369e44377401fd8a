//! Brute-force reference implementations used to cross-check the SAT-based
//! pipeline: explicit-state reachability, exhaustive k-induction, projected
//! CNF enumeration, and a seeded generator of small stratified circuits.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{lit_value, Circuit, CircuitBuilder, Lit};
use crate::encode::CnfFormula;
use crate::trace::Trace;

/// Default limit on latches plus inputs for explicit enumeration.
pub const DEFAULT_BIT_BOUND: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{bits} state and input bits exceed the enumeration bound of {bound}")]
    TooLarge { bits: usize, bound: usize },
}

/// Explicit transition table: for every state and input vector, the
/// successor state and whether the property holds.
pub struct StateSpace {
    num_latches: usize,
    num_inputs: usize,
    next: Vec<u32>,
    good: Vec<bool>,
    reset: Vec<bool>,
}

fn bits_of(value: u32, width: usize) -> Vec<bool> {
    (0..width).map(|j| value >> j & 1 == 1).collect()
}

fn value_of(bits: &[bool]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (j, &b)| acc | (u32::from(b) << j))
}

impl StateSpace {
    pub fn new(c: &Circuit) -> Result<StateSpace, OracleError> {
        StateSpace::with_bound(c, DEFAULT_BIT_BOUND)
    }

    pub fn with_bound(c: &Circuit, bound: usize) -> Result<StateSpace, OracleError> {
        let (nl, ni) = (c.latches().len(), c.inputs().len());
        if nl + ni > bound || nl + ni > 24 {
            return Err(OracleError::TooLarge { bits: nl + ni, bound });
        }
        let (states, inputs) = (1usize << nl, 1usize << ni);
        let mut next = Vec::with_capacity(states * inputs);
        let mut good = Vec::with_capacity(states * inputs);
        let mut reset = Vec::with_capacity(states);
        for s in 0..states {
            let latches = bits_of(s as u32, nl);
            reset.push(c.is_reset_state(&latches));
            for x in 0..inputs {
                let values = c.eval(&bits_of(x as u32, ni), &latches);
                next.push(value_of(&c.next_state(&values)));
                good.push(lit_value(&values, c.property()));
            }
        }
        Ok(StateSpace {
            num_latches: nl,
            num_inputs: ni,
            next,
            good,
            reset,
        })
    }

    pub fn num_states(&self) -> usize {
        1 << self.num_latches
    }

    pub fn num_input_vectors(&self) -> usize {
        1 << self.num_inputs
    }

    pub fn is_reset(&self, s: usize) -> bool {
        self.reset[s]
    }

    pub fn step(&self, s: usize, x: usize) -> usize {
        self.next[s * self.num_input_vectors() + x] as usize
    }

    pub fn good(&self, s: usize, x: usize) -> bool {
        self.good[s * self.num_input_vectors() + x]
    }

    /// Good for every input vector.
    pub fn state_good(&self, s: usize) -> bool {
        (0..self.num_input_vectors()).all(|x| self.good(s, x))
    }

    fn trace(&self, frames: &[(usize, usize)]) -> Trace {
        Trace {
            inputs: frames
                .iter()
                .map(|&(_, x)| bits_of(x as u32, self.num_inputs))
                .collect(),
            latches: frames
                .iter()
                .map(|&(s, _)| bits_of(s as u32, self.num_latches))
                .collect(),
        }
    }
}

/// Breadth-first search from all reset states. Returns a shortest trace to a
/// property violation, or `None` when the circuit is safe.
pub fn reachable_unsafe(c: &Circuit) -> Result<Option<Trace>, OracleError> {
    let space = StateSpace::new(c)?;
    Ok(shortest_violation(&space))
}

fn shortest_violation(space: &StateSpace) -> Option<Trace> {
    let n = space.num_states();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    for (s, seen) in visited.iter_mut().enumerate() {
        if space.is_reset(s) {
            *seen = true;
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if let Some(x) = (0..space.num_input_vectors()).find(|&x| !space.good(s, x)) {
            let mut frames = vec![(s, x)];
            let mut cur = s;
            while let Some((prev, input)) = parent[cur] {
                frames.push((prev, input));
                cur = prev;
            }
            frames.reverse();
            return Some(space.trace(&frames));
        }
        for x in 0..space.num_input_vectors() {
            let t = space.step(s, x);
            if !visited[t] {
                visited[t] = true;
                parent[t] = Some((s, x));
                queue.push_back(t);
            }
        }
    }
    None
}

/// Both k-induction conditions by exhaustive evaluation over explicit state
/// sets: every state within `k - 1` steps of reset is good, and no path of
/// `k` good frames reaches a bad frame.
pub fn kinductive_bruteforce(c: &Circuit, k: usize) -> Result<bool, OracleError> {
    assert!(k >= 1, "k must be positive");
    let space = StateSpace::new(c)?;
    let n = space.num_states();
    let inputs = space.num_input_vectors();

    let mut layer: Vec<bool> = (0..n).map(|s| space.is_reset(s)).collect();
    let mut seen = layer.clone();
    for depth in 0..k {
        if (0..n).any(|s| layer[s] && !space.state_good(s)) {
            return Ok(false);
        }
        if depth + 1 == k {
            break;
        }
        let mut next = vec![false; n];
        for s in (0..n).filter(|&s| layer[s]) {
            for x in 0..inputs {
                let t = space.step(s, x);
                if !seen[t] {
                    seen[t] = true;
                    next[t] = true;
                }
            }
        }
        layer = next;
    }

    // States that end a path of i frames whose property held in every frame.
    let mut ends = vec![true; n];
    for _ in 0..k {
        let mut next = vec![false; n];
        for s in (0..n).filter(|&s| ends[s]) {
            for x in (0..inputs).filter(|&x| space.good(s, x)) {
                next[space.step(s, x)] = true;
            }
        }
        ends = next;
    }
    Ok((0..n).all(|s| !ends[s] || space.state_good(s)))
}

/// The same verdict as [`kinductive_bruteforce`] by literal enumeration of
/// every input and state sequence. Exponential in `k`; for tiny circuits.
pub fn kinductive_by_paths(c: &Circuit, k: usize) -> Result<bool, OracleError> {
    let space = StateSpace::new(c)?;
    let (n, inputs) = (space.num_states(), space.num_input_vectors());
    let sequences = inputs.pow(k as u32 + 1);
    for s0 in 0..n {
        for seq in 0..sequences {
            let xs: Vec<usize> = (0..=k).map(|i| seq / inputs.pow(i as u32) % inputs).collect();
            let mut states = vec![s0];
            for i in 0..k {
                states.push(space.step(states[i], xs[i]));
            }
            let good: Vec<bool> = (0..=k).map(|i| space.good(states[i], xs[i])).collect();
            if space.is_reset(s0) && !good[..k].iter().all(|&g| g) {
                return Ok(false);
            }
            if good[..k].iter().all(|&g| g) && !good[k] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Decides `f` by enumerating the variables in `projection` and deciding the
/// rest by unit propagation plus case splitting. Sound and complete for any
/// projection; fast when the remaining variables are determined by the
/// projected ones, as with Tseitin variables over primary inputs.
///
/// The enumeration is depth-first over `projection` in order; a subtree is
/// skipped once the assignment so far (with the units it forces) falsifies a
/// clause, since no completion of it can satisfy `f`.
pub fn brute_force_sat(f: &CnfFormula, projection: &[u32], bound: usize) -> Result<bool, OracleError> {
    if projection.len() > bound {
        return Err(OracleError::TooLarge {
            bits: projection.len(),
            bound,
        });
    }
    let assign = vec![0i8; f.num_vars() as usize + 1];
    Ok(enumerate(f, projection, assign))
}

fn enumerate(f: &CnfFormula, projection: &[u32], mut assign: Vec<i8>) -> bool {
    if !propagate(f, &mut assign) {
        return false;
    }
    let Some((&v, rest)) = projection.split_first() else {
        return split(f, assign);
    };
    if assign[v as usize] != 0 {
        return enumerate(f, rest, assign);
    }
    [1i8, -1].iter().any(|&value| {
        let mut branch = assign.clone();
        branch[v as usize] = value;
        enumerate(f, rest, branch)
    })
}

fn lit_state(assign: &[i8], lit: i32) -> i8 {
    let a = assign[lit.unsigned_abs() as usize];
    if lit > 0 {
        a
    } else {
        -a
    }
}

/// Assigns unit-implied literals to a fixpoint; false on a falsified clause.
fn propagate(f: &CnfFormula, assign: &mut [i8]) -> bool {
    loop {
        let mut changed = false;
        for clause in f.clauses() {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for &l in clause {
                match lit_state(assign, l) {
                    1 => {
                        satisfied = true;
                        break;
                    }
                    0 => {
                        open += 1;
                        unassigned = Some(l);
                    }
                    _ => {}
                }
            }
            if satisfied {
                continue;
            }
            match (open, unassigned) {
                (0, _) => return false,
                (1, Some(l)) => {
                    assign[l.unsigned_abs() as usize] = if l > 0 { 1 } else { -1 };
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

/// True if the propagated `assign` has a total satisfying extension, found
/// by splitting on the lowest unassigned variable.
fn split(f: &CnfFormula, assign: Vec<i8>) -> bool {
    match (1..assign.len()).find(|&v| assign[v] == 0) {
        None => true,
        Some(v) => [1i8, -1].iter().any(|&value| {
            let mut branch = assign.clone();
            branch[v] = value;
            propagate(f, &mut branch) && split(f, branch)
        }),
    }
}

/// Size parameters of [`random_stratified_circuit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub latches: usize,
    pub inputs: usize,
    /// Upper bound on AND gates.
    pub gates: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            latches: 4,
            inputs: 2,
            gates: 16,
        }
    }
}

/// A small random circuit with stratified resets, deterministic in `seed`.
///
/// Resets are a mix of constants, self resets (uninitialized latches) and
/// functions of strictly lower-indexed latches. The property is mostly a
/// negated conjunction over latches so that deeper induction is needed more
/// often than with uniformly random properties.
pub fn random_stratified_circuit(seed: u64, params: GenParams) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let inputs: Vec<Lit> = (0..params.inputs).map(|_| b.input(None)).collect();
    let latches: Vec<Lit> = (0..params.latches).map(|_| b.latch(None)).collect();
    let budget = params.gates;
    let signed = |rng: &mut ChaCha8Rng, l: Lit| l.negate_if(rng.gen_bool(0.5));

    for (j, &l) in latches.iter().enumerate() {
        let roll = rng.gen_range(0..100);
        let reset = if roll < 45 || (j == 0 && roll >= 60) {
            Lit::from_code(rng.gen_range(0..2))
        } else if roll < 60 {
            l
        } else {
            let a = latches[rng.gen_range(0..j)];
            let a = signed(&mut rng, a);
            if j >= 2 && rng.gen_bool(0.5) && b.num_gates() < budget {
                let c = latches[rng.gen_range(0..j)];
                let c = signed(&mut rng, c);
                b.and(a, c)
            } else {
                a
            }
        };
        b.set_reset(l, reset);
    }

    // Property first, so it gets its share of the gate budget.
    let mut pool: Vec<Lit> = inputs.iter().chain(&latches).copied().collect();
    let property = if latches.is_empty() || rng.gen_bool(0.1) {
        !pool.choose(&mut rng).copied().unwrap_or(Lit::FALSE)
    } else {
        let width = rng.gen_range(latches.len().min(2)..=latches.len().min(4));
        let mut chosen: Vec<Lit> = latches
            .choose_multiple(&mut rng, width)
            .map(|&l| signed(&mut rng, l))
            .collect();
        if !inputs.is_empty() && rng.gen_bool(0.15) {
            let x = *inputs.choose(&mut rng).unwrap();
            chosen.push(signed(&mut rng, x));
        }
        let mut bad = chosen[0];
        for &x in &chosen[1..] {
            if b.num_gates() >= budget {
                break;
            }
            bad = b.and(bad, x);
        }
        !bad
    };

    let mut attempts = 0;
    while b.num_gates() < budget && attempts < 4 * budget {
        attempts += 1;
        if pool.is_empty() {
            break;
        }
        let x = *pool.choose(&mut rng).unwrap();
        let x = signed(&mut rng, x);
        let y = *pool.choose(&mut rng).unwrap();
        let y = signed(&mut rng, y);
        let g = b.and(x, y);
        if !g.is_const() && !pool.contains(&g.regular()) {
            pool.push(g.regular());
        }
        if b.num_gates() >= budget.saturating_sub(params.latches) {
            break;
        }
    }
    for &l in &latches {
        let next = if pool.is_empty() || rng.gen_bool(0.1) {
            Lit::from_code(rng.gen_range(0..2))
        } else {
            // Prefer recent gates so that most of the logic is used.
            let lo = pool.len().saturating_sub(pool.len() / 2 + 1);
            let pick = if rng.gen_bool(0.6) {
                rng.gen_range(lo..pool.len())
            } else {
                rng.gen_range(0..pool.len())
            };
            signed(&mut rng, pool[pick])
        };
        b.set_next(l, next);
    }
    b.finish(property)
}

/// Random circuit with optional symbols, in file order (inputs, latches,
/// gates), for format fuzzing. With `function_resets`, resets may be
/// arbitrary and possibly cyclic functions over the latches; otherwise they
/// are constants or self resets.
pub fn random_format_circuit(seed: u64, function_resets: bool) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let name = |rng: &mut ChaCha8Rng, prefix: &str, j: usize| {
        rng.gen_bool(0.5).then(|| format!("{prefix}{j}_{}", rng.gen::<u16>()))
    };
    let inputs: Vec<Lit> = (0..rng.gen_range(0..4))
        .map(|j| {
            let n = name(&mut rng, "in", j);
            b.input(n.as_deref())
        })
        .collect();
    let latches: Vec<Lit> = (0..rng.gen_range(0..5))
        .map(|j| {
            let n = name(&mut rng, "reg", j);
            b.latch(n.as_deref())
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng, pool: &[Lit]| -> Lit {
        if pool.is_empty() || rng.gen_bool(0.1) {
            Lit::from_code(rng.gen_range(0..2))
        } else {
            pool[rng.gen_range(0..pool.len())].negate_if(rng.gen())
        }
    };
    let mut reset_pool = latches.clone();
    if function_resets {
        for _ in 0..rng.gen_range(0..3) {
            let (x, y) = (pick(&mut rng, &latches), pick(&mut rng, &latches));
            reset_pool.push(b.and(x, y));
        }
    }
    let mut pool: Vec<Lit> = inputs.iter().chain(&latches).copied().collect();
    for _ in 0..rng.gen_range(0..12) {
        let (x, y) = (pick(&mut rng, &pool), pick(&mut rng, &pool));
        pool.push(b.and(x, y));
    }
    for &l in &latches {
        let reset = match rng.gen_range(0..4) {
            0 => Lit::FALSE,
            1 => Lit::TRUE,
            2 => l,
            _ if function_resets => pick(&mut rng, &reset_pool),
            _ => Lit::FALSE,
        };
        let next = pick(&mut rng, &pool);
        b.set_latch(l, reset, next);
    }
    let property = pick(&mut rng, &pool);
    b.finish(property)
}
