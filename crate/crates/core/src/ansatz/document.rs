use serde::{Deserialize, Serialize};

use super::{LayerOrder, LayeredCircuit};
use crate::error::{Result, SimError};

/// Serialized trained circuit, reusable across experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub layout: Vec<LayerOrder>,
    pub params: Vec<f64>,
    pub seed: u64,
    pub cost: f64,
}

impl CircuitDocument {
    pub fn new(circuit: &LayeredCircuit, seed: u64, cost: f64) -> Self {
        Self {
            n_qubits: circuit.n_qubits(),
            n_layers: circuit.n_layers(),
            layout: circuit.layout().to_vec(),
            params: circuit.params.clone(),
            seed,
            cost,
        }
    }

    pub fn circuit(&self) -> Result<LayeredCircuit> {
        if self.layout.len() != self.n_layers {
            return Err(SimError::DimensionMismatch { expected: self.n_layers, got: self.layout.len() });
        }
        LayeredCircuit::from_parts(self.n_qubits, self.layout.clone(), self.params.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SimError::InvalidArgument(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut c = LayeredCircuit::new(3, 2);
        c.params.iter_mut().enumerate().for_each(|(k, p)| *p = 0.01 * k as f64 - 0.3);
        let doc = CircuitDocument::new(&c, 42, 1.5e-4);
        let back = CircuitDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.circuit().unwrap(), c);
    }

    #[test]
    fn inconsistent_document_is_rejected() {
        let mut doc = CircuitDocument::new(&LayeredCircuit::new(2, 1), 0, 0.0);
        doc.params.pop();
        assert!(doc.circuit().is_err());
        assert!(CircuitDocument::from_json("{").is_err());
    }
}
