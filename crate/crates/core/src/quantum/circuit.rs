use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{invalid, Error, Result};
use crate::sign::SignVector;

/// One operator from the simulated gate set. Qubit indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// Rotation `[[cos pi/8, -sin pi/8], [sin pi/8, cos pi/8]]`.
    RPi8(usize),
    /// Diagonal sign oracle on the contiguous block starting at `start`,
    /// `ceil(log2 signs.len())` qubits wide.
    Oracle {
        signs: SignVector,
        start: usize,
    },
    Measure(usize),
}

impl Gate {
    pub fn oracle(signs: SignVector, start: usize) -> Self {
        Gate::Oracle { signs, start }
    }

    /// Block width of an oracle over `len` signs.
    pub fn oracle_width(len: usize) -> usize {
        len.next_power_of_two().trailing_zeros() as usize
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q < qubits {
                Ok(())
            } else {
                Err(invalid(format!(
                    "qubit {q} out of range for {qubits} qubits"
                )))
            }
        };
        match self {
            Gate::Hadamard(q) | Gate::RPi8(q) | Gate::Measure(q) => check(*q),
            Gate::Cnot { control, target } => {
                check(*control)?;
                check(*target)?;
                if control == target {
                    return Err(invalid("CNOT control equals target"));
                }
                Ok(())
            }
            Gate::Oracle { signs, start } => {
                if signs.is_empty() {
                    return Err(invalid("oracle over an empty sign vector"));
                }
                let end = start + Gate::oracle_width(signs.len());
                if end > qubits {
                    return Err(invalid(format!(
                        "oracle block {start}..{end} exceeds {qubits} qubits"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::Measure(_))
    }
}

/// Ordered gate list over a fixed register. Its size is the gate count.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

/// Outcome of [`Circuit::run`].
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRun {
    /// `(qubit, ±1 label)` per measurement, in circuit order.
    pub outcomes: Vec<(usize, i8)>,
    /// Number of operators applied; always equals the circuit size.
    pub applied: usize,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self {
            qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(qubits);
        c.extend(gates)?;
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Runs every gate on `state`. The state is checked once up front;
    /// gates were validated on insertion.
    pub fn run<R: RngCore + ?Sized>(
        &self,
        state: &mut StateVector,
        rng: &mut R,
    ) -> Result<CircuitRun> {
        if state.qubits() != self.qubits {
            return Err(invalid(format!(
                "circuit on {} qubits applied to a {}-qubit state",
                self.qubits,
                state.qubits()
            )));
        }
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::ContractViolation(format!(
                "state is not normalized: |psi|^2 = {norm}"
            )));
        }
        let mut outcomes = Vec::new();
        for gate in &self.gates {
            if let Some(label) = state.apply_validated(gate, rng) {
                if let Gate::Measure(q) = gate {
                    outcomes.push((*q, label));
                }
            }
        }
        Ok(CircuitRun {
            outcomes,
            applied: self.gates.len(),
        })
    }

    /// JSON gate list, e.g. `[{"kind":"H","q":3},{"kind":"CNOT","c":0,"t":4}]`.
    pub fn to_json(&self) -> String {
        let list: Vec<GateJson> = self.gates.iter().map(GateJson::from).collect();
        serde_json::to_string(&list).expect("plain data serializes")
    }

    pub fn from_json(qubits: usize, text: &str) -> Result<Self> {
        let list: Vec<GateJson> =
            serde_json::from_str(text).map_err(|e| Error::Encoding(e.to_string()))?;
        let gates = list
            .into_iter()
            .map(Gate::try_from)
            .collect::<Result<Vec<_>>>()?;
        Self::from_gates(qubits, gates)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum GateJson {
    #[serde(rename = "H")]
    H { q: usize },
    #[serde(rename = "CNOT")]
    Cnot { c: usize, t: usize },
    #[serde(rename = "R_PI8")]
    RPi8 { q: usize },
    #[serde(rename = "MEASURE")]
    Measure { q: usize },
    /// `block` is the half-open qubit range; `n` the number of signs.
    #[serde(rename = "ORACLE")]
    Oracle {
        block: [usize; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        signs: String,
    },
}

impl From<&Gate> for GateJson {
    fn from(g: &Gate) -> Self {
        match g {
            Gate::Hadamard(q) => GateJson::H { q: *q },
            Gate::Cnot { control, target } => GateJson::Cnot {
                c: *control,
                t: *target,
            },
            Gate::RPi8(q) => GateJson::RPi8 { q: *q },
            Gate::Measure(q) => GateJson::Measure { q: *q },
            Gate::Oracle { signs, start } => GateJson::Oracle {
                block: [*start, start + Gate::oracle_width(signs.len())],
                n: Some(signs.len()),
                signs: signs.to_base64(),
            },
        }
    }
}

impl TryFrom<GateJson> for Gate {
    type Error = Error;

    fn try_from(g: GateJson) -> Result<Self> {
        Ok(match g {
            GateJson::H { q } => Gate::Hadamard(q),
            GateJson::Cnot { c, t } => Gate::Cnot {
                control: c,
                target: t,
            },
            GateJson::RPi8 { q } => Gate::RPi8(q),
            GateJson::Measure { q } => Gate::Measure(q),
            GateJson::Oracle { block, n, signs } => {
                let [start, end] = block;
                if end < start || end - start >= usize::BITS as usize {
                    return Err(Error::Encoding(format!("bad oracle block {start}..{end}")));
                }
                let len = n.unwrap_or(1 << (end - start));
                let signs = SignVector::from_base64(len, &signs)?;
                if Gate::oracle_width(len) != end - start {
                    return Err(Error::Encoding(format!(
                        "oracle block {start}..{end} does not match {len} signs"
                    )));
                }
                Gate::Oracle { signs, start }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn oracle_width_is_ceil_log2() {
        assert_eq!(Gate::oracle_width(1), 0);
        assert_eq!(Gate::oracle_width(8), 3);
        assert_eq!(Gate::oracle_width(9), 4);
    }

    #[test]
    fn invalid_gates_are_rejected_on_push() {
        let mut c = Circuit::new(3);
        assert!(c
            .push(Gate::Cnot {
                control: 1,
                target: 1
            })
            .is_err());
        assert!(c.push(Gate::Hadamard(3)).is_err());
        assert!(c.push(Gate::oracle(SignVector::ones(8), 1)).is_err());
        assert!(c.push(Gate::oracle(SignVector::ones(8), 0)).is_ok());
        assert_eq!(c.size(), 1);
    }

    #[test]
    fn run_reports_size_and_outcomes() {
        let c = Circuit::from_gates(
            2,
            vec![
                Gate::Hadamard(0),
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Measure(0),
                Gate::Measure(1),
            ],
        )
        .unwrap();
        let mut s = StateVector::zero(2).unwrap();
        let run = c.run(&mut s, &mut stream(1, 0)).unwrap();
        assert_eq!(run.applied, c.size());
        assert_eq!(run.outcomes.len(), 2);
        // Bell pair: both labels agree
        assert_eq!(run.outcomes[0].1, run.outcomes[1].1);
    }

    #[test]
    fn json_shape() {
        let c = Circuit::from_gates(
            5,
            vec![
                Gate::Hadamard(3),
                Gate::Cnot {
                    control: 0,
                    target: 4,
                },
                Gate::oracle(SignVector::from_signs(&[1, -1, 1, 1]).unwrap(), 1),
            ],
        )
        .unwrap();
        let text = c.to_json();
        assert!(text.starts_with(
            r#"[{"kind":"H","q":3},{"kind":"CNOT","c":0,"t":4},{"kind":"ORACLE","block":[1,3]"#
        ));
        assert_eq!(Circuit::from_json(5, &text).unwrap(), c);
    }

    #[test]
    fn json_oracle_without_length_fills_block() {
        let text = r#"[{"kind":"ORACLE","block":[0,3],"signs":"Ag=="},{"kind":"R_PI8","q":1},{"kind":"MEASURE","q":2}]"#;
        let c = Circuit::from_json(3, text).unwrap();
        match &c.gates()[0] {
            Gate::Oracle { signs, start } => {
                assert_eq!(*start, 0);
                assert_eq!(signs.len(), 8);
                assert_eq!(signs.get(1), -1);
            }
            other => panic!("{other:?}"),
        }
        assert!(Circuit::from_json(2, text).is_err());
    }
}
