use std::collections::{BTreeMap, HashMap};

use super::{AndGate, Circuit, LatchDef, Lit, NodeKind};

/// Incremental circuit construction with constant folding and structural
/// hashing of AND gates.
///
/// Nodes are numbered in allocation order, so any gate created by
/// [`CircuitBuilder::and`] only reads nodes that already exist.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    num_nodes: usize,
    inputs: Vec<usize>,
    latches: Vec<LatchDef>,
    gates: Vec<AndGate>,
    names: BTreeMap<usize, String>,
    latch_pos: HashMap<usize, usize>,
    strash: HashMap<(Lit, Lit), Lit>,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CircuitBuilder {
    pub fn new() -> CircuitBuilder {
        CircuitBuilder {
            num_nodes: 1,
            inputs: Vec::new(),
            latches: Vec::new(),
            gates: Vec::new(),
            names: BTreeMap::new(),
            latch_pos: HashMap::new(),
            strash: HashMap::new(),
        }
    }

    /// Starts from an existing circuit, keeping its node numbering. New
    /// gates are appended after the existing nodes.
    pub fn from_circuit(c: &Circuit) -> CircuitBuilder {
        let mut b = CircuitBuilder {
            num_nodes: c.num_nodes(),
            inputs: c.inputs().to_vec(),
            latches: c.latches().to_vec(),
            gates: c.gates().to_vec(),
            names: c.names().clone(),
            latch_pos: HashMap::new(),
            strash: HashMap::new(),
        };
        for (i, l) in b.latches.iter().enumerate() {
            b.latch_pos.insert(l.node, i);
        }
        for g in &b.gates {
            b.strash.insert(ordered(g.lhs, g.rhs), Lit::positive(g.node));
        }
        b
    }

    fn alloc(&mut self, name: Option<&str>) -> usize {
        let node = self.num_nodes;
        self.num_nodes += 1;
        if let Some(name) = name {
            self.names.insert(node, name.to_owned());
        }
        node
    }

    pub fn input(&mut self, name: Option<&str>) -> Lit {
        let node = self.alloc(name);
        self.inputs.push(node);
        Lit::positive(node)
    }

    /// Adds a latch with reset FALSE that holds its value; use
    /// [`CircuitBuilder::set_latch`] to define it.
    pub fn latch(&mut self, name: Option<&str>) -> Lit {
        let node = self.alloc(name);
        self.latch_pos.insert(node, self.latches.len());
        self.latches.push(LatchDef {
            node,
            reset: Lit::FALSE,
            next: Lit::positive(node),
        });
        Lit::positive(node)
    }

    pub fn set_latch(&mut self, latch: Lit, reset: Lit, next: Lit) {
        let pos = self.latch_pos[&latch.node()];
        self.latches[pos].reset = reset;
        self.latches[pos].next = next;
    }

    pub fn set_reset(&mut self, latch: Lit, reset: Lit) {
        let pos = self.latch_pos[&latch.node()];
        self.latches[pos].reset = reset;
    }

    pub fn set_next(&mut self, latch: Lit, next: Lit) {
        let pos = self.latch_pos[&latch.node()];
        self.latches[pos].next = next;
    }

    pub fn set_name(&mut self, node: usize, name: &str) {
        self.names.insert(node, name.to_owned());
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == Lit::FALSE || b == Lit::FALSE || a == !b {
            return Lit::FALSE;
        }
        if a == Lit::TRUE || a == b {
            return b;
        }
        if b == Lit::TRUE {
            return a;
        }
        let key = ordered(a, b);
        if let Some(&lit) = self.strash.get(&key) {
            return lit;
        }
        let node = self.alloc(None);
        self.gates.push(AndGate {
            node,
            lhs: key.0,
            rhs: key.1,
        });
        let lit = Lit::positive(node);
        self.strash.insert(key, lit);
        lit
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn implies(&mut self, a: Lit, b: Lit) -> Lit {
        self.or(!a, b)
    }

    /// Exclusive or from three AND gates.
    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a == b {
            return Lit::FALSE;
        }
        if a == !b {
            return Lit::TRUE;
        }
        let left = self.and(a, !b);
        let right = self.and(!a, b);
        self.or(left, right)
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    /// Balanced conjunction; the empty conjunction is TRUE.
    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let mut layer: Vec<Lit> = lits.into_iter().collect();
        if layer.is_empty() {
            return Lit::TRUE;
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                next.push(match *pair {
                    [a, b] => self.and(a, b),
                    [a] => a,
                    _ => unreachable!(),
                });
            }
            layer = next;
        }
        layer[0]
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        let negated: Vec<Lit> = lits.into_iter().map(|l| !l).collect();
        !self.and_all(negated)
    }

    /// Copies the cone of `root` from `source` into this builder. `map`
    /// binds source nodes to literals here and must cover every input and
    /// latch in the cone; translated gates are memoized into it.
    pub fn import(&mut self, source: &Circuit, root: Lit, map: &mut HashMap<usize, Lit>) -> Lit {
        map.insert(0, Lit::FALSE);
        let mut stack = vec![root.node()];
        while let Some(&node) = stack.last() {
            if map.contains_key(&node) {
                stack.pop();
                continue;
            }
            match source.kind(node) {
                NodeKind::And(g) => {
                    let gate = source.gates()[g];
                    let pending: Vec<usize> = [gate.lhs.node(), gate.rhs.node()]
                        .into_iter()
                        .filter(|n| !map.contains_key(n))
                        .collect();
                    if pending.is_empty() {
                        let lhs = map[&gate.lhs.node()].negate_if(gate.lhs.is_negated());
                        let rhs = map[&gate.rhs.node()].negate_if(gate.rhs.is_negated());
                        let lit = self.and(lhs, rhs);
                        map.insert(node, lit);
                        stack.pop();
                    } else {
                        stack.extend(pending);
                    }
                }
                kind => panic!("import: node {node} ({kind:?}) is not bound in the map"),
            }
        }
        map[&root.node()].negate_if(root.is_negated())
    }

    pub fn finish(self, property: Lit) -> Circuit {
        Circuit::from_parts(
            self.num_nodes,
            self.inputs,
            self.latches,
            self.gates,
            property,
            self.names,
        )
    }
}

/// Operand order used for hashing and printing: larger literal first.
fn ordered(a: Lit, b: Lit) -> (Lit, Lit) {
    if a >= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_and_hashing() {
        let mut b = CircuitBuilder::new();
        let x = b.input(None);
        let y = b.input(None);
        assert_eq!(b.and(x, Lit::FALSE), Lit::FALSE);
        assert_eq!(b.and(Lit::TRUE, y), y);
        assert_eq!(b.and(x, x), x);
        assert_eq!(b.and(x, !x), Lit::FALSE);
        let g = b.and(x, y);
        assert_eq!(b.and(y, x), g);
        assert_eq!(b.num_gates(), 1);
    }

    #[test]
    fn xor_uses_three_gates() {
        let mut b = CircuitBuilder::new();
        let x = b.input(None);
        let y = b.input(None);
        let z = b.xor(x, y);
        assert_eq!(b.num_gates(), 3);
        let c = b.finish(z);
        for (vx, vy) in [(false, false), (false, true), (true, false), (true, true)] {
            let values = c.eval(&[vx, vy], &[]);
            assert_eq!(super::super::lit_value(&values, z), vx ^ vy);
        }
    }

    #[test]
    fn import_copies_cone_under_a_renaming() {
        let mut src = CircuitBuilder::new();
        let a = src.input(None);
        let l = src.latch(None);
        let g = src.and(a, !l);
        let source = src.finish(g);

        let mut dst = CircuitBuilder::new();
        let p = dst.input(None);
        let q = dst.input(None);
        let mut map = HashMap::from([(a.node(), q), (l.node(), p)]);
        let root = dst.import(&source, !g, &mut map);
        let c = dst.finish(root);
        let values = c.eval(&[false, true], &[]);
        // !(q & !p) with p = false, q = true
        assert!(!super::super::lit_value(&values, root));
    }
}
