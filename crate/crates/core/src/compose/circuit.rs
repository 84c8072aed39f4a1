//! A small boolean circuit representation for decision algorithms: enough to
//! compile micro decision predicates into gates, restrict them at fixed
//! inputs, and record decision complexity.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    Input(usize),
    Const(bool),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Xor(usize, usize),
}

/// Gates in topological order; wire i is the output of gates[i].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_inputs: usize,
    pub gates: Vec<Gate>,
    pub output: usize,
}

impl Circuit {
    pub fn eval(&self, inputs: &[bool]) -> bool {
        assert_eq!(inputs.len(), self.num_inputs);
        let mut wires: Vec<bool> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match *g {
                Gate::Input(i) => inputs[i],
                Gate::Const(b) => b,
                Gate::Not(a) => !wires[a],
                Gate::And(a, b) => wires[a] && wires[b],
                Gate::Or(a, b) => wires[a] || wires[b],
                Gate::Xor(a, b) => wires[a] ^ wires[b],
            };
            wires.push(v);
        }
        wires[self.output]
    }

    /// Gate count, recorded as the decision complexity.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Hard-wire a subset of inputs; remaining inputs keep their indices.
    pub fn restrict(&self, fixed: &[(usize, bool)]) -> Circuit {
        let fixed_map: std::collections::HashMap<usize, bool> =
            fixed.iter().copied().collect();
        let gates = self
            .gates
            .iter()
            .map(|g| match *g {
                Gate::Input(i) => match fixed_map.get(&i) {
                    Some(&b) => Gate::Const(b),
                    None => Gate::Input(i),
                },
                other => other,
            })
            .collect();
        Circuit {
            num_inputs: self.num_inputs,
            gates,
            output: self.output,
        }
    }
}

/// Straight-line builder.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder {
            num_inputs,
            gates: Vec::new(),
        }
    }

    fn push(&mut self, g: Gate) -> usize {
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn input(&mut self, i: usize) -> usize {
        assert!(i < self.num_inputs);
        self.push(Gate::Input(i))
    }

    pub fn constant(&mut self, b: bool) -> usize {
        self.push(Gate::Const(b))
    }

    pub fn not(&mut self, a: usize) -> usize {
        self.push(Gate::Not(a))
    }

    pub fn and(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::And(a, b))
    }

    pub fn or(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Or(a, b))
    }

    pub fn xor(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Xor(a, b))
    }

    pub fn and_tree(&mut self, wires: &[usize]) -> usize {
        match wires.len() {
            0 => self.constant(true),
            1 => wires[0],
            _ => {
                let mid = wires.len() / 2;
                let l = self.and_tree(&wires[..mid]);
                let r = self.and_tree(&wires[mid..]);
                self.and(l, r)
            }
        }
    }

    pub fn or_tree(&mut self, wires: &[usize]) -> usize {
        match wires.len() {
            0 => self.constant(false),
            1 => wires[0],
            _ => {
                let mid = wires.len() / 2;
                let l = self.or_tree(&wires[..mid]);
                let r = self.or_tree(&wires[mid..]);
                self.or(l, r)
            }
        }
    }

    /// Equality of two bit groups: XOR each pair, NOR the tree.
    pub fn eq_bits(&mut self, a: &[usize], b: &[usize]) -> usize {
        assert_eq!(a.len(), b.len());
        let xors: Vec<usize> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| self.xor(x, y))
            .collect();
        let any = self.or_tree(&xors);
        self.not(any)
    }

    pub fn finish(self, output: usize) -> Circuit {
        Circuit {
            num_inputs: self.num_inputs,
            gates: self.gates,
            output,
        }
    }
}

/// Compile an arbitrary decision function on up to 16 inputs into gates by
/// truth-table expansion (an OR over minterm AND-trees). Exact but not
/// small; decision complexity is recorded from the result.
pub fn decision_to_circuit(d: impl Fn(&[bool]) -> bool, num_inputs: usize) -> Circuit {
    assert!(num_inputs <= 16, "truth-table compilation caps at 16 inputs");
    let mut b = CircuitBuilder::new(num_inputs);
    let in_wires: Vec<usize> = (0..num_inputs).map(|i| b.input(i)).collect();
    let neg_wires: Vec<usize> = in_wires.iter().map(|&w| b.not(w)).collect();
    let mut minterms = Vec::new();
    for code in 0..1usize << num_inputs {
        let bits: Vec<bool> = (0..num_inputs).map(|i| (code >> i) & 1 == 1).collect();
        if d(&bits) {
            let lits: Vec<usize> = (0..num_inputs)
                .map(|i| if bits[i] { in_wires[i] } else { neg_wires[i] })
                .collect();
            minterms.push(b.and_tree(&lits));
        }
    }
    let out = b.or_tree(&minterms);
    b.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_circuit() {
        // Equality of two 4-bit field elements: XOR-tree plus NOR.
        let mut b = CircuitBuilder::new(8);
        let a: Vec<usize> = (0..4).map(|i| b.input(i)).collect();
        let c: Vec<usize> = (4..8).map(|i| b.input(i)).collect();
        let out = b.eq_bits(&a, &c);
        let circuit = b.finish(out);
        for x in 0..16u32 {
            for y in 0..16u32 {
                let mut inputs = Vec::new();
                for i in 0..4 {
                    inputs.push((x >> i) & 1 == 1);
                }
                for i in 0..4 {
                    inputs.push((y >> i) & 1 == 1);
                }
                assert_eq!(circuit.eval(&inputs), x == y);
            }
        }
    }

    #[test]
    fn truth_table_compilation_agrees_exhaustively() {
        // A mildly irregular predicate on 10 inputs, checked on all 2^10.
        let d = |bits: &[bool]| {
            let ones = bits.iter().filter(|&&b| b).count();
            ones % 3 == 1 || (bits[0] && !bits[9])
        };
        let c = decision_to_circuit(d, 10);
        for code in 0..1usize << 10 {
            let bits: Vec<bool> = (0..10).map(|i| (code >> i) & 1 == 1).collect();
            assert_eq!(c.eval(&bits), d(&bits));
        }
    }

    #[test]
    fn restriction_hardwires_inputs() {
        let d = |bits: &[bool]| bits[0] ^ bits[1];
        let c = decision_to_circuit(d, 2);
        let r = c.restrict(&[(0, true)]);
        assert!(!r.eval(&[true, true]));
        assert!(r.eval(&[false /* ignored */, false]));
        // size recorded
        assert!(r.size() >= 1);
    }
}
