//! Reader and writer for the `.qc` circuit format (the subset used by
//! T-depth optimizers: `.v/.i/.o` headers, a `BEGIN`/`END` body, `tof`
//! and single-qubit Clifford+T gates).

use std::fmt::Write as _;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Gate tokens accepted with exactly one wire and passed through untouched.
const SINGLE_QUBIT: &[&str] = &["H", "X", "Y", "Z", "S", "S*", "T", "T*", "x"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QcCircuit {
    pub wires: Vec<String>,
    pub inputs: Option<Vec<String>>,
    pub outputs: Option<Vec<String>>,
    pub circuit: Circuit,
    /// Extra `#` lines emitted after `END`.
    pub trailer: Vec<String>,
}

impl QcCircuit {
    pub fn new(wires: Vec<String>, circuit: Circuit) -> Self {
        assert_eq!(wires.len(), circuit.n_wires());
        QcCircuit {
            wires,
            inputs: None,
            outputs: None,
            circuit,
            trailer: Vec::new(),
        }
    }

    /// Wires named `q0, q1, ...`.
    pub fn with_default_names(circuit: Circuit) -> Self {
        let wires = (0..circuit.n_wires()).map(|i| format!("q{i}")).collect();
        QcCircuit::new(wires, circuit)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut wires: Option<Vec<String>> = None;
        let mut inputs = None;
        let mut outputs = None;
        let mut gates = Vec::new();
        let mut state = 0; // 0 header, 1 body, 2 after END
        for (idx, raw) in text.lines().enumerate() {
            let ln = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or_default();
            let args: Vec<&str> = toks.collect();
            match state {
                0 => match head {
                    ".v" => {
                        let names: Vec<String> = args.iter().map(|s| s.to_string()).collect();
                        let mut sorted = names.clone();
                        sorted.sort();
                        sorted.dedup();
                        if sorted.len() != names.len() {
                            return Err(err(ln, "duplicate wire in .v".into()));
                        }
                        wires = Some(names);
                    }
                    ".i" | ".o" => {
                        let declared = wires
                            .as_ref()
                            .ok_or_else(|| err(ln, format!("{head} before .v")))?;
                        if let Some(bad) = args.iter().find(|a| !declared.iter().any(|w| w == *a)) {
                            return Err(err(ln, format!("undeclared wire `{bad}`")));
                        }
                        let list = Some(args.iter().map(|s| s.to_string()).collect());
                        if head == ".i" {
                            inputs = list;
                        } else {
                            outputs = list;
                        }
                    }
                    "BEGIN" => {
                        if wires.is_none() {
                            return Err(err(ln, "BEGIN before .v".into()));
                        }
                        state = 1;
                    }
                    other => return Err(err(ln, format!("unexpected header token `{other}`"))),
                },
                1 => {
                    if head == "END" {
                        state = 2;
                        continue;
                    }
                    let names = wires.as_ref().expect("checked at BEGIN");
                    let index = |name: &str| {
                        names
                            .iter()
                            .position(|w| w == name)
                            .ok_or_else(|| err(ln, format!("unknown wire `{name}`")))
                    };
                    let ws = args.iter().map(|a| index(a)).collect::<Result<Vec<_>>>()?;
                    let gate = match (head, ws.len()) {
                        ("tof" | "cnot", 2) => {
                            if ws[0] == ws[1] {
                                return Err(err(ln, "CNOT control equals target".into()));
                            }
                            Gate::cnot(ws[0], ws[1])
                        }
                        ("tof", 1) => Gate::other("tof", ws),
                        ("tof", _) => {
                            return Err(err(ln, "multi-controlled tof is not supported".into()))
                        }
                        (t, 1) if SINGLE_QUBIT.contains(&t) => Gate::other(t, ws),
                        (t, k) if SINGLE_QUBIT.contains(&t) || t == "cnot" => {
                            return Err(err(ln, format!("`{t}` takes a different arity than {k}")))
                        }
                        (t, _) => return Err(err(ln, format!("unknown gate `{t}`"))),
                    };
                    gates.push(gate);
                }
                _ => return Err(err(ln, format!("content after END: `{line}`"))),
            }
        }
        if state != 2 {
            return Err(err(
                text.lines().count().max(1),
                "missing BEGIN/END body".into(),
            ));
        }
        let wires = wires.expect("state 2 implies .v");
        Ok(QcCircuit {
            circuit: Circuit::from_gates(wires.len(), gates),
            wires,
            inputs,
            outputs,
            trailer: Vec::new(),
        })
    }

    /// Records where each wire's value ends up (`map.apply(v)` carries wire
    /// `v`) as an `out-perm:` trailer line; nothing for the identity.
    pub fn push_out_perm(&mut self, map: &crate::gf2::Permutation) {
        if map.is_identity() {
            return;
        }
        let names: Vec<&str> = map
            .image()
            .iter()
            .map(|&w| self.wires[w].as_str())
            .collect();
        self.trailer.push(format!("out-perm: {}", names.join(" ")));
    }

    pub fn write(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, ".v {}", self.wires.join(" "));
        if let Some(i) = &self.inputs {
            let _ = writeln!(s, ".i {}", i.join(" "));
        }
        if let Some(o) = &self.outputs {
            let _ = writeln!(s, ".o {}", o.join(" "));
        }
        s.push('\n');
        s.push_str("BEGIN\n");
        for g in self.circuit.gates() {
            match g {
                Gate::Cnot { control, target } => {
                    let _ = writeln!(s, "tof {} {}", self.wires[*control], self.wires[*target]);
                }
                Gate::Other { name, wires } => {
                    let names: Vec<&str> = wires.iter().map(|&w| self.wires[w].as_str()).collect();
                    let _ = writeln!(s, "{} {}", name, names.join(" "));
                }
            }
        }
        s.push_str("END\n");
        for t in &self.trailer {
            let _ = writeln!(s, "# {t}");
        }
        s
    }
}
