//! Dense state-vector simulator used as a ground-truth oracle.
//!
//! Amplitudes are little-endian: bit `q` of the basis index is qubit `q`.
//! Sampling uses [`rand_chacha::ChaCha8Rng`], so transcripts are
//! reproducible across platforms for a fixed seed.

use crate::ops::{Pauli, PhasePolyOp};
use num_complex::Complex;
use num_traits::Float;
use rand::Rng;

/// Environment variable overriding [`DEFAULT_QUBIT_BUDGET`].
pub const BUDGET_ENV: &str = "GAUGEFORGE_QUBIT_BUDGET";
pub const DEFAULT_QUBIT_BUDGET: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("{0} qubits exceeds the budget of {1}")]
    Budget(usize, usize),
    #[error("qubit {0} out of range for {1} qubits")]
    Index(usize, usize),
    #[error("gate targets must be distinct")]
    Distinct,
    #[error("size mismatch: {0} vs {1}")]
    Size(usize, usize),
    #[error("outcome has zero probability")]
    ZeroProbability,
}

/// Current qubit budget, read from the environment.
#[must_use]
pub fn qubit_budget() -> usize {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_QUBIT_BUDGET)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Cz(usize, usize),
    Ccz(usize, usize, usize),
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
    Cswap { control: usize, a: usize, b: usize },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Self::H(q) | Self::X(q) | Self::Z(q) => vec![q],
            Self::Cz(a, b) | Self::Swap(a, b) => vec![a, b],
            Self::Cnot { control, target } => vec![control, target],
            Self::Ccz(a, b, c) => vec![a, b, c],
            Self::Cswap { control, a, b } => vec![control, a, b],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Float> {
    n: usize,
    amps: Vec<Complex<T>>,
}

fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("float conversion")
}

fn bit(b: usize, q: usize) -> bool {
    (b >> q) & 1 == 1
}

impl<T: Float> StateVector<T> {
    fn check_budget(n: usize) -> Result<(), StateError> {
        let budget = qubit_budget();
        if n > budget {
            return Err(StateError::Budget(n, budget));
        }
        Ok(())
    }

    /// Computational basis state `|mask>`.
    pub fn basis(n: usize, mask: usize) -> Result<Self, StateError> {
        Self::check_budget(n)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[mask & ((1 << n) - 1)] = Complex::new(T::one(), T::zero());
        Ok(Self { n, amps })
    }

    pub fn zero(n: usize) -> Result<Self, StateError> {
        Self::basis(n, 0)
    }

    /// `|+>^n`.
    pub fn plus(n: usize) -> Result<Self, StateError> {
        Self::check_budget(n)?;
        let a = c::<T>(1.0) / c::<T>((1u64 << n) as f64).sqrt();
        Ok(Self {
            n,
            amps: vec![Complex::new(a, T::zero()); 1 << n],
        })
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self, StateError> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(StateError::Size(amps.len(), 1 << n));
        }
        Self::check_budget(n)?;
        let mut s = Self { n, amps };
        s.normalize()?;
        Ok(s)
    }

    /// Haar-ish random state (Gaussian amplitudes, normalized).
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<Self, StateError> {
        Self::check_budget(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        for _ in 0..1usize << n {
            // Box-Muller
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = std::f64::consts::TAU * u2;
            amps.push(Complex::new(c(r * t.cos()), c(r * t.sin())));
        }
        Self::from_amplitudes(amps)
    }

    #[must_use]
    pub const fn n(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    #[must_use]
    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    fn normalize(&mut self) -> Result<(), StateError> {
        let nrm = self.norm();
        if nrm <= T::epsilon() {
            return Err(StateError::ZeroProbability);
        }
        for a in &mut self.amps {
            *a = *a / nrm;
        }
        Ok(())
    }

    fn check_qubits(&self, qs: &[usize]) -> Result<(), StateError> {
        for (k, &q) in qs.iter().enumerate() {
            if q >= self.n {
                return Err(StateError::Index(q, self.n));
            }
            if qs[..k].contains(&q) {
                return Err(StateError::Distinct);
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: Gate) -> Result<(), StateError> {
        self.check_qubits(&gate.qubits())?;
        let dim = self.amps.len();
        match gate {
            Gate::H(q) => {
                let s = c::<T>(std::f64::consts::FRAC_1_SQRT_2);
                for b in 0..dim {
                    if !bit(b, q) {
                        let b1 = b | 1 << q;
                        let (a0, a1) = (self.amps[b], self.amps[b1]);
                        self.amps[b] = (a0 + a1) * s;
                        self.amps[b1] = (a0 - a1) * s;
                    }
                }
            }
            Gate::X(q) => {
                for b in 0..dim {
                    if !bit(b, q) {
                        self.amps.swap(b, b | 1 << q);
                    }
                }
            }
            Gate::Z(q) => self.phase_where(|b| bit(b, q)),
            Gate::Cz(a, b0) => self.phase_where(|b| bit(b, a) && bit(b, b0)),
            Gate::Ccz(a, b0, c0) => self.phase_where(|b| bit(b, a) && bit(b, b0) && bit(b, c0)),
            Gate::Cnot { control, target } => {
                for b in 0..dim {
                    if bit(b, control) && !bit(b, target) {
                        self.amps.swap(b, b | 1 << target);
                    }
                }
            }
            Gate::Swap(a, b0) => self.swap_where(a, b0, |_| true),
            Gate::Cswap { control, a, b } => self.swap_where(a, b, |x| bit(x, control)),
        }
        Ok(())
    }

    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<(), StateError> {
        gates.iter().try_for_each(|&g| self.apply(g))
    }

    fn phase_where(&mut self, pred: impl Fn(usize) -> bool) {
        for (b, a) in self.amps.iter_mut().enumerate() {
            if pred(b) {
                *a = -*a;
            }
        }
    }

    fn swap_where(&mut self, a: usize, b: usize, pred: impl Fn(usize) -> bool) {
        for x in 0..self.amps.len() {
            if bit(x, a) && !bit(x, b) && pred(x) {
                self.amps.swap(x, x ^ (1 << a) ^ (1 << b));
            }
        }
    }

    fn mask_of(v: &crate::f2core::F2Vector) -> usize {
        v.iter_ones().fold(0usize, |acc, q| acc | 1 << q)
    }

    /// Dense action of a phase-polynomial operator.
    pub fn apply_phase_poly(&mut self, op: &PhasePolyOp) -> Result<(), StateError> {
        if op.n() != self.n {
            return Err(StateError::Size(op.n(), self.n));
        }
        let xm = Self::mask_of(op.x_part());
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let t = b ^ xm;
            out[t] = if op.phase_at_mask(t as u64) { -*a } else { *a };
        }
        self.amps = out;
        Ok(())
    }

    /// Dense action of `i^phase X^x Z^z`.
    pub fn apply_pauli(&mut self, p: &Pauli) -> Result<(), StateError> {
        if p.n() != self.n {
            return Err(StateError::Size(p.n(), self.n));
        }
        let xm = Self::mask_of(&p.x);
        let zm = Self::mask_of(&p.z);
        let ph = match p.phase % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        };
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let s = if (b & zm).count_ones() % 2 == 1 { -*a } else { *a };
            out[b ^ xm] = s * ph;
        }
        self.amps = out;
        Ok(())
    }

    /// `(1 + P)/2 + Q (1 - P)/2` for commuting Hermitian Paulis.
    pub fn apply_controlled_pauli(&mut self, control: &Pauli, target: &Pauli) -> Result<(), StateError> {
        let mut p = self.clone();
        p.apply_pauli(control)?;
        let half = c::<T>(0.5);
        let plus: Vec<Complex<T>> = self.amps.iter().zip(&p.amps).map(|(a, b)| (a + b) * half).collect();
        let mut minus = Self {
            n: self.n,
            amps: self.amps.iter().zip(&p.amps).map(|(a, b)| (a - b) * half).collect(),
        };
        minus.apply_pauli(target)?;
        self.amps = plus.iter().zip(&minus.amps).map(|(a, b)| a + b).collect();
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, StateError> {
        if self.n != other.n {
            return Err(StateError::Size(self.n, other.n));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b))
    }

    pub fn fidelity(&self, other: &Self) -> Result<T, StateError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `<psi|O|psi>` for a phase-polynomial operator (complex in general).
    pub fn expectation_complex(&self, op: &PhasePolyOp) -> Result<Complex<T>, StateError> {
        let mut o = self.clone();
        o.apply_phase_poly(op)?;
        self.inner(&o)
    }

    /// Real part of `<psi|O|psi>`.
    pub fn expectation(&self, op: &PhasePolyOp) -> Result<T, StateError> {
        Ok(self.expectation_complex(op)?.re)
    }

    pub fn expectation_pauli(&self, p: &Pauli) -> Result<T, StateError> {
        let mut o = self.clone();
        o.apply_pauli(p)?;
        Ok(self.inner(&o)?.re)
    }

    /// Probability that qubit `q` reads `outcome` (+1 or -1) in `basis`.
    pub fn probability(&self, basis: Basis, q: usize, outcome: i8) -> Result<T, StateError> {
        self.check_qubits(&[q])?;
        let mut s = self.clone();
        if basis == Basis::X {
            s.apply(Gate::H(q))?;
        }
        let want = outcome < 0;
        Ok(s
            .amps
            .iter()
            .enumerate()
            .filter(|(b, _)| bit(*b, q) == want)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()))
    }

    /// Projects qubit `q` onto `outcome` and renormalizes; returns the
    /// outcome probability.
    pub fn project(&mut self, basis: Basis, q: usize, outcome: i8) -> Result<T, StateError> {
        self.check_qubits(&[q])?;
        if basis == Basis::X {
            self.apply(Gate::H(q))?;
        }
        let want = outcome < 0;
        let mut p = T::zero();
        for (b, a) in self.amps.iter_mut().enumerate() {
            if bit(b, q) == want {
                p = p + a.norm_sqr();
            } else {
                *a = Complex::new(T::zero(), T::zero());
            }
        }
        let r = self.normalize();
        if basis == Basis::X {
            self.apply(Gate::H(q))?;
        }
        r.map(|()| p)
    }

    /// Born-rule measurement, returning `+1` or `-1`.
    pub fn measure<R: Rng>(&mut self, basis: Basis, q: usize, rng: &mut R) -> Result<i8, StateError> {
        let p_plus = self.probability(basis, q, 1)?;
        let u: f64 = rng.gen();
        let outcome = if c::<T>(u) < p_plus { 1 } else { -1 };
        self.project(basis, q, outcome)?;
        Ok(outcome)
    }

    /// Debug dump as a JSON array of `[re, im]` pairs.
    #[must_use]
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.amps
                .iter()
                .map(|a| serde_json::json!([a.re.to_f64(), a.im.to_f64()]))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type S = StateVector<f64>;

    #[test]
    fn hadamard_on_zero() {
        let mut s = S::zero(1).unwrap();
        s.apply(Gate::H(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - r).abs() < 1e-15);
        assert!((s.amplitudes()[1].re - r).abs() < 1e-15);
    }

    #[test]
    fn ccz_leaves_110() {
        let mut s = S::basis(3, 0b011).unwrap();
        s.apply(Gate::Ccz(0, 1, 2)).unwrap();
        assert_eq!(s, S::basis(3, 0b011).unwrap());
        let mut t = S::basis(3, 0b111).unwrap();
        t.apply(Gate::Ccz(0, 1, 2)).unwrap();
        assert!((t.amplitudes()[7].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_indices() {
        let mut s = S::zero(2).unwrap();
        assert_eq!(s.apply(Gate::Cz(0, 0)), Err(StateError::Distinct));
        assert_eq!(s.apply(Gate::X(2)), Err(StateError::Index(2, 2)));
        assert!(matches!(S::zero(64), Err(StateError::Budget(64, _))));
    }

    #[test]
    fn z_measure_zero_is_plus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut s = S::zero(1).unwrap();
            assert_eq!(s.measure(Basis::Z, 0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn x_measure_zero_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let shots = 2000;
        let plus = (0..shots)
            .filter(|_| S::zero(1).unwrap().measure(Basis::X, 0, &mut rng).unwrap() == 1)
            .count();
        let f = plus as f64 / f64::from(shots);
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn cz_on_plus_plus() {
        let s = S::plus(2).unwrap();
        let e = s.expectation(&PhasePolyOp::cz(2, 0, 1)).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn magic_state_is_cz_eigenstate() {
        let one = num_complex::Complex::new(1.0, 0.0);
        let zero = num_complex::Complex::new(0.0, 0.0);
        let s = S::from_amplitudes(vec![one, one, one, zero]).unwrap();
        assert!((s.expectation(&PhasePolyOp::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.expectation(&PhasePolyOp::cz(2, 0, 1)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gates_match_phase_polys() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = S::random(3, &mut rng).unwrap();
        let cases = [
            (Gate::Ccz(0, 1, 2), PhasePolyOp::ccz(3, 0, 1, 2)),
            (Gate::Cz(2, 0), PhasePolyOp::cz(3, 0, 2)),
            (Gate::X(1), PhasePolyOp::x(3, &[1])),
            (Gate::Z(2), PhasePolyOp::z(3, &[2])),
        ];
        for (g, op) in cases {
            let mut a = s.clone();
            a.apply(g).unwrap();
            let mut b = s.clone();
            b.apply_phase_poly(&op).unwrap();
            assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-12);
            assert!((a.inner(&b).unwrap().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn controlled_pauli_is_cnot() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = S::random(2, &mut rng).unwrap();
        let mut a = s.clone();
        a.apply(Gate::Cnot { control: 0, target: 1 }).unwrap();
        let mut b = s;
        b.apply_controlled_pauli(&Pauli::z_on(2, &[0]), &Pauli::x_on(2, &[1])).unwrap();
        assert!((a.inner(&b).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cswap_and_swap() {
        let mut s = S::basis(3, 0b011).unwrap();
        s.apply(Gate::Cswap { control: 0, a: 1, b: 2 }).unwrap();
        assert_eq!(s, S::basis(3, 0b101).unwrap());
        s.apply(Gate::Swap(0, 1)).unwrap();
        assert_eq!(s, S::basis(3, 0b110).unwrap());
    }

    #[test]
    fn single_precision() {
        let mut s = StateVector::<f32>::plus(2).unwrap();
        s.apply(Gate::H(0)).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-6);
    }
}
