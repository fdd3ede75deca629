use num_complex::Complex64;

use super::{LayeredCircuit, Step};
use crate::dilation::DilatedUnitary;
use crate::error::{Result, SimError};
use crate::qstate::{adjoint2, ecr_matrix, u3_derivatives, u3_matrix, GateOp, Mat2, Statevector};

/// `F(a, b) = |<a|b>|`.
pub fn overlap_fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// A training target: make `V|input>` match `target` up to global phase.
/// Every cost in this module is `1 - F(V|input>, target)`.
#[derive(Debug, Clone)]
pub struct Objective {
    pub input: Statevector,
    pub target: Statevector,
}

impl Objective {
    pub fn new(input: Statevector, mut target: Statevector) -> Result<Self> {
        if input.n_qubits() != target.n_qubits() {
            return Err(SimError::DimensionMismatch { expected: input.n_qubits(), got: target.n_qubits() });
        }
        target.normalize();
        Ok(Self { input, target })
    }

    /// Target `U|ψ>`.
    pub fn unitary(u: &GateOp, input: &Statevector) -> Result<Self> {
        Self::new(input.clone(), input.clone().with_gate(u)?)
    }

    /// Target `Post[U_imag |ψ>|0_A>]`.
    pub fn postselected(dilated: &DilatedUnitary, input: &Statevector) -> Result<Self> {
        let (target, _) = dilated.postselected(input)?;
        Self::new(input.clone(), target)
    }

    /// Target `U_QAE Post[U_imag |ψ>|0_A>]`. `u_qae` acts on the postselected register.
    pub fn qae(dilated: &DilatedUnitary, u_qae: &GateOp, input: &Statevector) -> Result<Self> {
        let (post, _) = dilated.postselected(input)?;
        Self::new(input.clone(), post.with_gate(u_qae)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.input.n_qubits()
    }

    pub fn cost(&self, circuit: &LayeredCircuit) -> Result<f64> {
        self.cost_at(circuit, &circuit.params)
    }

    pub(crate) fn cost_at(&self, circuit: &LayeredCircuit, params: &[f64]) -> Result<f64> {
        let out = circuit.evaluate_with(params, &self.input)?;
        Ok(1.0 - overlap_fidelity(&self.target, &out)?)
    }

    pub fn cost_and_gradient(&self, circuit: &LayeredCircuit) -> Result<(f64, Vec<f64>)> {
        self.cost_and_gradient_at(circuit, &circuit.params)
    }

    /// Cost and its exact gradient from one forward and one adjoint sweep.
    pub(crate) fn cost_and_gradient_at(
        &self,
        circuit: &LayeredCircuit,
        params: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let steps = circuit.steps();
        let mut phi = circuit.evaluate_with(params, &self.input)?;
        let overlap = self.target.inner(&phi)?;
        let mut lambda = self.target.clone();
        let mut d_overlap = vec![Complex64::new(0.0, 0.0); params.len()];
        let ecr = ecr_matrix();

        for step in steps.iter().rev() {
            match *step {
                Step::Ecr(a, b) => {
                    // ECR is Hermitian, so it is its own adjoint.
                    phi.apply_2q(a, b, &ecr);
                    lambda.apply_2q(a, b, &ecr);
                }
                Step::U3 { qubit, offset } => {
                    let p = &params[offset..offset + 3];
                    let g_adj = adjoint2(&u3_matrix(p[0], p[1], p[2]));
                    phi.apply_1q(qubit, &g_adj);
                    let r = local_overlap(&lambda, &phi, qubit);
                    for (k, dg) in u3_derivatives(p[0], p[1], p[2]).iter().enumerate() {
                        d_overlap[offset + k] = contract(dg, &r);
                    }
                    lambda.apply_1q(qubit, &g_adj);
                }
            }
        }

        let mag = overlap.norm();
        let cost = 1.0 - mag.min(1.0);
        let grad = if mag > 1e-300 {
            d_overlap.iter().map(|d| -(overlap.conj() * d).re / mag).collect()
        } else {
            vec![0.0; params.len()]
        };
        Ok((cost, grad))
    }
}

/// `R[r][c] = Σ conj(λ_r) φ_c` over all index pairs differing in `qubit`.
fn local_overlap(lambda: &Statevector, phi: &Statevector, qubit: usize) -> Mat2 {
    let l = lambda.amplitudes();
    let f = phi.amplitudes();
    let stride = 1usize << qubit;
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut base = 0;
    while base < l.len() {
        for i in base..base + stride {
            let (l0, l1) = (l[i].conj(), l[i + stride].conj());
            let (f0, f1) = (f[i], f[i + stride]);
            r[0][0] += l0 * f0;
            r[0][1] += l0 * f1;
            r[1][0] += l1 * f0;
            r[1][1] += l1 * f1;
        }
        base += stride << 1;
    }
    r
}

fn contract(m: &Mat2, r: &Mat2) -> Complex64 {
    m[0][0] * r[0][0] + m[0][1] * r[0][1] + m[1][0] * r[1][0] + m[1][1] * r[1][1]
}

/// `1 - F(V|ψ>, U|ψ>)`.
pub fn cost_unitary(circuit: &LayeredCircuit, u: &GateOp, input: &Statevector) -> Result<f64> {
    Objective::unitary(u, input)?.cost(circuit)
}

/// `1 - F(V|ψ>, Post[U_imag|ψ>])`.
pub fn cost_postselected(
    circuit: &LayeredCircuit,
    dilated: &DilatedUnitary,
    input: &Statevector,
) -> Result<f64> {
    Objective::postselected(dilated, input)?.cost(circuit)
}

/// `1 - F(V|ψ>, U_QAE Post[U_imag|ψ>])`.
pub fn cost_qae(
    circuit: &LayeredCircuit,
    dilated: &DilatedUnitary,
    u_qae: &GateOp,
    input: &Statevector,
) -> Result<f64> {
    Objective::qae(dilated, u_qae, input)?.cost(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::dilate;
    use crate::dilation::ScalePolicy;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn randomize(c: &mut LayeredCircuit, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        c.params.iter_mut().for_each(|p| *p = rng.gen_range(-3.0..3.0));
    }

    #[test]
    fn fidelity_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let psi = Statevector::random(2, &mut rng);
        assert!((overlap_fidelity(&psi, &psi).unwrap() - 1.0).abs() < 1e-14);
        let zero = Statevector::zero(1);
        let one = Statevector::basis(1, 1);
        assert_eq!(overlap_fidelity(&zero, &one).unwrap(), 0.0);
        let mut phased = psi.clone();
        phased.amplitudes_mut().iter_mut().for_each(|a| *a *= Complex64::from_polar(1.0, 0.7));
        assert!((overlap_fidelity(&psi, &phased).unwrap() - 1.0).abs() < 1e-14);
        assert!(overlap_fidelity(&zero, &psi).is_err());
    }

    #[test]
    fn exact_compilation_has_zero_cost() {
        let mut c = LayeredCircuit::new(2, 2);
        randomize(&mut c, 3);
        let psi = Statevector::plus(2);
        let u = GateOp::unitary(vec![0, 1], {
            let mut m = DMatrix::identity(4, 4);
            for g in c.gates() {
                let full = match g.targets.as_slice() {
                    [q] => {
                        let one = g.matrix();
                        let id = DMatrix::identity(2, 2);
                        if *q == 0 { id.kronecker(&one) } else { one.kronecker(&id) }
                    }
                    _ => g.matrix(),
                };
                m = full * m;
            }
            m
        })
        .unwrap();
        assert!(cost_unitary(&c, &u, &psi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn orthogonal_target_has_unit_cost() {
        let c = LayeredCircuit::new(1, 1);
        let x = GateOp::x(0);
        assert!((cost_unitary(&c, &x, &Statevector::zero(1)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_two_qubit_cost_is_strictly_inside() {
        let mut c = LayeredCircuit::new(2, 1);
        randomize(&mut c, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let target = Statevector::random(2, &mut rng);
        let obj = Objective::new(Statevector::zero(2), target.clone()).unwrap();
        let cost = obj.cost(&c).unwrap();
        // Direct evaluation as the oracle.
        let direct = 1.0 - target.inner(&c.evaluate(&Statevector::zero(2)).unwrap()).unwrap().norm();
        assert!((cost - direct).abs() < 1e-14);
        assert!(cost > 0.0 && cost < 1.0);
    }

    #[test]
    fn postselected_and_qae_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DMatrix::from_fn(4, 4, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let d = dilate(&m, ScalePolicy::default()).unwrap();
        let psi = Statevector::plus(2);
        let (post, _) = d.postselected(&psi).unwrap();

        // Orthogonal target: flip everything so the identity circuit misses.
        let c = LayeredCircuit::new(2, 0);
        let cost = cost_postselected(&c, &d, &psi).unwrap();
        let direct = 1.0 - post.inner(&psi).unwrap().norm();
        assert!((cost - direct).abs() < 1e-14);
        assert!(cost > 0.0 && cost < 1.0);

        let h = GateOp::hadamard(1);
        let cost_q = cost_qae(&c, &d, &h, &psi).unwrap();
        let direct_q = 1.0 - post.with_gate(&h).unwrap().inner(&psi).unwrap().norm();
        assert!((cost_q - direct_q).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for seed in 0..4 {
            let mut c = LayeredCircuit::new(3, 2);
            randomize(&mut c, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let obj = Objective::new(Statevector::random(3, &mut rng), Statevector::random(3, &mut rng)).unwrap();
            let (_, grad) = obj.cost_and_gradient(&c).unwrap();
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..c.n_params() {
                let mut p = c.params.clone();
                p[k] += h;
                let up = obj.cost_at(&c, &p).unwrap();
                p[k] -= 2.0 * h;
                let down = obj.cost_at(&c, &p).unwrap();
                let fd = (up - down) / (2.0 * h);
                worst = worst.max((fd - grad[k]).abs());
                scale = scale.max(fd.abs());
            }
            assert!(worst / scale < 1e-5, "relative error {}", worst / scale);
        }
    }
}
