//! Linear algebra on the four-dimensional two-spin Hilbert space.
//!
//! Amplitudes are stored in the product basis in the fixed order
//! `(↑↑, ↑↓, ↓↑, ↓↓)`. The energy-zero eigenspace of the Hamiltonian is
//! spanned by the middle two basis vectors and is parameterized by the
//! sphere coordinates `(θ, φ)`:
//!
//! ```text
//! |θ,φ⟩ = cos(θ/2) |↑↓⟩ + e^{iφ} sin(θ/2) |↓↑⟩
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DIM: usize = 4;

/// Index of each product basis vector in the amplitude array.
pub const UP_UP: usize = 0;
pub const UP_DOWN: usize = 1;
pub const DOWN_UP: usize = 2;
pub const DOWN_DOWN: usize = 3;

pub const BASIS_LABELS: [&str; DIM] = ["↑↑", "↑↓", "↓↑", "↓↓"];

/// Largest accepted deviation of an input norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Tolerance for structural invariants (normalization, Hermiticity).
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Largest imaginary part tolerated in an expectation value.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;
/// Largest amplitude allowed outside the degenerate subspace by
/// [`bloch_coordinates`].
pub const SUBSPACE_TOLERANCE: f64 = 1e-6;
/// Below this distance from a pole the azimuth is reported as 0.
pub const POLE_TOLERANCE: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalized pure state of the two spins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(Vector4<Complex64>);

impl StateVector {
    /// Normalizes `amplitudes` without any tolerance check. The caller must
    /// pass a nonzero vector.
    pub(crate) fn normalized(amplitudes: Vector4<Complex64>) -> Self {
        Self(amplitudes.unscale(amplitudes.norm()))
    }

    pub fn basis(index: usize) -> Self {
        let mut amplitudes = Vector4::from_element(ZERO);
        amplitudes[index] = ONE;
        Self(amplitudes)
    }

    pub fn amplitudes(&self) -> &Vector4<Complex64> {
        &self.0
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn to_array(&self) -> [Complex64; DIM] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability of each product basis vector.
    pub fn populations(&self) -> [f64; DIM] {
        [
            self.0[0].norm_sqr(),
            self.0[1].norm_sqr(),
            self.0[2].norm_sqr(),
            self.0[3].norm_sqr(),
        ]
    }

    /// Projects onto the span of the given basis vectors, renormalized.
    /// Returns `None` together with the squared norm of the projection when
    /// that norm is below `threshold`.
    pub fn project_onto(&self, indices: &[usize], threshold: f64) -> (f64, Option<StateVector>) {
        let mut projected = Vector4::from_element(ZERO);
        for &i in indices {
            projected[i] = self.0[i];
        }
        let weight = projected.norm_squared();
        if weight.sqrt() < threshold {
            (weight, None)
        } else {
            (weight, Some(Self::normalized(projected)))
        }
    }
}

/// Serialized as four `[re, im]` pairs in basis order.
impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let pairs: [[f64; 2]; DIM] = std::array::from_fn(|i| [self.0[i].re, self.0[i].im]);
        pairs.serialize(serializer)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .zip(BASIS_LABELS)
            .filter(|(a, _)| a.norm() > 0.0)
            .map(|(a, label)| format!("({:.6}{:+.6}i)|{label}⟩", a.re, a.im))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Builds a state from raw amplitudes, renormalizing exactly.
pub fn make_state(amplitudes: [Complex64; DIM]) -> Result<StateVector> {
    let v = Vector4::from(amplitudes);
    let norm = v.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Norm {
            norm,
            tolerance: NORM_TOLERANCE,
        });
    }
    Ok(StateVector::normalized(v))
}

/// The prepared state `½(|↑↑⟩ + |↓↓⟩ + |↑↓⟩ − |↓↑⟩)`.
pub fn initial_state() -> StateVector {
    StateVector(Vector4::new(
        Complex64::new(0.5, 0.0),
        Complex64::new(0.5, 0.0),
        Complex64::new(-0.5, 0.0),
        Complex64::new(0.5, 0.0),
    ))
}

/// Spin singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn singlet() -> StateVector {
    StateVector(Vector4::new(
        ZERO,
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(-FRAC_1_SQRT_2, 0.0),
        ZERO,
    ))
}

/// The `S_z = 0` triplet `(|↑↓⟩ + |↓↑⟩)/√2`.
pub fn triplet_zero() -> StateVector {
    StateVector(Vector4::new(
        ZERO,
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        ZERO,
    ))
}

/// One of the three eigenvalues of [`hamiltonian`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EnergyLevel {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "-1")]
    Minus,
}

impl EnergyLevel {
    pub const ALL: [EnergyLevel; 3] = [EnergyLevel::Plus, EnergyLevel::Zero, EnergyLevel::Minus];

    pub fn value(self) -> f64 {
        match self {
            EnergyLevel::Plus => 1.0,
            EnergyLevel::Zero => 0.0,
            EnergyLevel::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        self.value() as i8
    }

    pub fn label(self) -> &'static str {
        match self {
            EnergyLevel::Plus => "+1",
            EnergyLevel::Zero => "0",
            EnergyLevel::Minus => "-1",
        }
    }

    /// Basis vectors spanning the eigenspace.
    pub fn eigenspace(self) -> &'static [usize] {
        match self {
            EnergyLevel::Plus => &[UP_UP],
            EnergyLevel::Zero => &[UP_DOWN, DOWN_UP],
            EnergyLevel::Minus => &[DOWN_DOWN],
        }
    }

    pub fn nearest(energy: f64) -> Self {
        if energy >= 0.5 {
            EnergyLevel::Plus
        } else if energy <= -0.5 {
            EnergyLevel::Minus
        } else {
            EnergyLevel::Zero
        }
    }
}

impl fmt::Display for EnergyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A Hermitian operator on the two-spin space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observable {
    matrix: Matrix4<Complex64>,
    // Real diagonal of the matrix when it has no other nonzero entries.
    diagonal: Option<[f64; DIM]>,
}

impl Observable {
    /// Wraps a matrix after checking Hermiticity to [`IDENTITY_TOLERANCE`].
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let deviation = max_abs_entry(&(matrix - matrix.adjoint()));
        if !deviation.is_finite() || deviation > IDENTITY_TOLERANCE {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::from_matrix(matrix))
    }

    fn from_matrix(matrix: Matrix4<Complex64>) -> Self {
        let off_diagonal = (0..DIM)
            .flat_map(|i| (0..DIM).map(move |j| (i, j)))
            .any(|(i, j)| i != j && matrix[(i, j)] != ZERO);
        let imaginary = (0..DIM).any(|i| matrix[(i, i)].im != 0.0);
        let diagonal =
            (!off_diagonal && !imaginary).then(|| std::array::from_fn(|i| matrix[(i, i)].re));
        Self { matrix, diagonal }
    }

    /// Builds a real diagonal observable.
    pub fn diagonal(entries: [f64; DIM]) -> Self {
        Self {
            matrix: Matrix4::from_diagonal(&Vector4::from(entries.map(|x| Complex64::new(x, 0.0)))),
            diagonal: Some(entries),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, state: &StateVector) -> Vector4<Complex64> {
        self.apply_to(&state.0)
    }

    /// Matrix-vector product on raw amplitudes.
    #[inline]
    pub fn apply_to(&self, v: &Vector4<Complex64>) -> Vector4<Complex64> {
        match &self.diagonal {
            Some(d) => Vector4::new(v[0] * d[0], v[1] * d[1], v[2] * d[2], v[3] * d[3]),
            None => self.matrix * v,
        }
    }
}

/// `Ĥ = diag(+1, 0, 0, −1)`: energies +1 for ↑↑, −1 for ↓↓ and a
/// two-fold degenerate 0 spanned by ↑↓ and ↓↑.
pub fn hamiltonian() -> Observable {
    Observable::diagonal([1.0, 0.0, 0.0, -1.0])
}

/// z-spin of the first particle with eigenvalues ±1.
pub fn sigma_1z() -> Observable {
    Observable::diagonal([1.0, 1.0, -1.0, -1.0])
}

/// z-spin of the second particle with eigenvalues ±1.
pub fn sigma_2z() -> Observable {
    Observable::diagonal([1.0, -1.0, 1.0, -1.0])
}

/// Total spin squared: eigenvalue 2 on the triplet, 0 on the singlet.
pub fn s_squared() -> Observable {
    let mut m = Matrix4::from_diagonal(&Vector4::new(
        Complex64::new(2.0, 0.0),
        ONE,
        ONE,
        Complex64::new(2.0, 0.0),
    ));
    m[(UP_DOWN, DOWN_UP)] = ONE;
    m[(DOWN_UP, UP_DOWN)] = ONE;
    Observable::from_matrix(m)
}

/// Polar and azimuthal angle on the sphere of energy-zero states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereCoordinates {
    pub theta: f64,
    pub phi: f64,
}

impl SphereCoordinates {
    /// Accepts any finite angles, folding `phi` into `[0, 2π)`. `theta` must
    /// lie in `[0, π]`.
    pub fn new(theta: f64, phi: f64) -> Option<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return None;
        }
        Some(Self {
            theta,
            phi: wrap_azimuth(phi),
        })
    }

    pub fn cos_theta(&self) -> f64 {
        self.theta.cos()
    }
}

fn wrap_azimuth(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

pub fn theta_phi_state(coords: SphereCoordinates) -> StateVector {
    let half = 0.5 * coords.theta;
    StateVector(Vector4::new(
        ZERO,
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), coords.phi),
        ZERO,
    ))
}

/// Inverse of [`theta_phi_state`] up to global phase. The phase is fixed by
/// taking the ↑↓ amplitude real and nonnegative.
pub fn bloch_coordinates(state: &StateVector) -> Result<SphereCoordinates> {
    let leak = state.0[UP_UP].norm().max(state.0[DOWN_DOWN].norm());
    if leak >= SUBSPACE_TOLERANCE {
        return Err(Error::Subspace { magnitude: leak });
    }
    let alpha = state.0[UP_DOWN];
    let beta = state.0[DOWN_UP];
    let theta = 2.0 * beta.norm().atan2(alpha.norm());
    let phi = if theta < POLE_TOLERANCE || PI - theta < POLE_TOLERANCE {
        0.0
    } else {
        wrap_azimuth(beta.arg() - alpha.arg())
    };
    Ok(SphereCoordinates { theta, phi })
}

/// `⟨ψ|A|ψ⟩`, rejected if the imaginary part is not negligible.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    let value = state.0.dotc(&obs.apply_to(&state.0));
    if value.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::Hermiticity {
            imaginary: value.im,
        });
    }
    Ok(value.re)
}

/// `⟨A²⟩ − ⟨A⟩²`, evaluated as `‖(A − ⟨A⟩)ψ‖²` so it is never negative.
pub fn variance(state: &StateVector, obs: &Observable) -> Result<f64> {
    let mean = expectation(state, obs)?;
    let centered = obs.apply_to(&state.0) - state.0.scale(mean);
    Ok(centered.norm_squared())
}

/// Largest entry magnitude of `AB − BA`.
pub fn commutator_norm(a: &Observable, b: &Observable) -> f64 {
    max_abs_entry(&(a.matrix * b.matrix - b.matrix * a.matrix))
}

fn max_abs_entry(m: &Matrix4<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
