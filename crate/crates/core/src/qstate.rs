//! Dense complex linear algebra for small systems of spin-½ particles.
//!
//! Amplitude ordering is fixed crate-wide: party 0 is the most significant
//! bit of the basis index, and a bit value of 0 means spin up along z.
//! Every matrix here is at most 16×16, so everything is stored densely.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Norm tolerance accepted by readers before renormalization.
pub const READ_NORM_TOL: f64 = 1e-9;

/// Tolerance for unitarity and projector-resolution checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Outcome of a projective spin measurement along some direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    /// Column of the direction unitary that carries this outcome.
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// Eigenvalue convention for correlations: up = +1, down = −1.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    /// Box output bit: up = 1, down = 0.
    pub fn bit(self) -> u8 {
        match self {
            Spin::Up => 1,
            Spin::Down => 0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Spin::Up => "u",
            Spin::Down => "d",
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Coordinate axes with named eigenkets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn direction(self) -> MeasurementDirection {
        match self {
            Axis::X => MeasurementDirection::x(),
            Axis::Y => MeasurementDirection::y(),
            Axis::Z => MeasurementDirection::z(),
        }
    }
}

/// Local spin measurement direction: polar angle `omega`, azimuth `phi`.
///
/// Both angles are stored reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirection")]
pub struct MeasurementDirection {
    omega: f64,
    phi: f64,
}

#[derive(Deserialize)]
struct RawDirection {
    omega: f64,
    phi: f64,
}

impl TryFrom<RawDirection> for MeasurementDirection {
    type Error = Error;

    fn try_from(raw: RawDirection) -> Result<Self> {
        MeasurementDirection::new(raw.omega, raw.phi)
    }
}

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

impl MeasurementDirection {
    pub fn new(omega: f64, phi: f64) -> Result<Self> {
        if !omega.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "direction angles must be finite (omega={omega}, phi={phi})"
            )));
        }
        Ok(Self {
            omega: wrap_angle(omega),
            phi: wrap_angle(phi),
        })
    }

    /// Infallible constructor for angles already known to be finite.
    pub(crate) fn from_angles(omega: f64, phi: f64) -> Self {
        debug_assert!(omega.is_finite() && phi.is_finite());
        Self {
            omega: wrap_angle(omega),
            phi: wrap_angle(phi),
        }
    }

    pub fn z() -> Self {
        Self::from_angles(0.0, 0.0)
    }

    pub fn x() -> Self {
        Self::from_angles(PI / 2.0, 0.0)
    }

    pub fn y() -> Self {
        Self::from_angles(PI / 2.0, PI / 2.0)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Uniform sample on the sphere: `cos ω` uniform in `[−1, 1]`, `φ` uniform.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..TAU);
        Self::from_angles(c.acos(), phi)
    }

    /// Equivalent direction with `omega` folded into `[0, π]`.
    ///
    /// `(ω, φ)` and `(2π − ω, φ + π)` give kets that differ by a global sign,
    /// hence identical projectors.
    pub fn folded(&self) -> Self {
        if self.omega > PI {
            Self::from_angles(TAU - self.omega, self.phi + PI)
        } else {
            *self
        }
    }

    /// Bloch vector of the "up" eigenket.
    pub fn bloch(&self) -> [f64; 3] {
        [
            self.omega.sin() * self.phi.cos(),
            self.omega.sin() * self.phi.sin(),
            self.omega.cos(),
        ]
    }

    pub fn unitary(&self) -> Unitary2 {
        direction_unitary(self)
    }

    /// Eigenket `V|s⟩` of the local spin measurement along this direction.
    pub fn eigenket(&self, spin: Spin) -> [C64; 2] {
        self.unitary().column(spin.index())
    }
}

/// 2×2 unitary acting on one spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[C64; 2]; 2]", into = "[[C64; 2]; 2]")]
pub struct Unitary2 {
    m: [[C64; 2]; 2],
}

impl TryFrom<[[C64; 2]; 2]> for Unitary2 {
    type Error = Error;

    fn try_from(m: [[C64; 2]; 2]) -> Result<Self> {
        Unitary2::new(m)
    }
}

impl From<Unitary2> for [[C64; 2]; 2] {
    fn from(u: Unitary2) -> Self {
        u.m
    }
}

impl Unitary2 {
    /// Checks `U·U† = I` within [`STRUCTURE_TOL`].
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        let u = Self { m };
        let err = u.unitarity_error();
        if !(err <= STRUCTURE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not unitary (deviation {err:e})"
            )));
        }
        Ok(u)
    }

    pub(crate) fn from_matrix_unchecked(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    /// Builds the unitary whose columns are `c0` and `c1`.
    pub fn from_columns(c0: [C64; 2], c1: [C64; 2]) -> Result<Self> {
        Self::new([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn pauli_x() -> Self {
        Self {
            m: [[ZERO, ONE], [ONE, ZERO]],
        }
    }

    /// `(1/√2)·[[1, 1], [−1, 1]]`, the sign convention used by the swapping protocol.
    pub fn hadamard() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            m: [[h, h], [-h, h]],
        }
    }

    pub fn entries(&self) -> &[[C64; 2]; 2] {
        &self.m
    }

    pub fn column(&self, k: usize) -> [C64; 2] {
        [self.m[0][k], self.m[1][k]]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    pub fn mul(&self, rhs: &Unitary2) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m: out }
    }

    pub fn apply(&self, v: &[C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `max |(U·U† − I)_{ij}|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.mul(&self.dagger());
        let mut err = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { ONE } else { ZERO };
                err = err.max((p.m[i][j] - target).norm());
            }
        }
        err
    }
}

/// The spin-rotation matrix parameterizing a local measurement direction:
///
/// ```text
/// [ cos(ω/2)          −e^{−iφ} sin(ω/2) ]
/// [ e^{iφ} sin(ω/2)    cos(ω/2)         ]
/// ```
pub fn direction_unitary(d: &MeasurementDirection) -> Unitary2 {
    let (s, c) = (d.omega / 2.0).sin_cos();
    let e = C64::from_polar(1.0, d.phi);
    Unitary2::from_matrix_unchecked([[C64::new(c, 0.0), -e.conj() * s], [e * s, C64::new(c, 0.0)]])
}

/// Normalized pure state of `num_parties` spin-½ particles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct PureState {
    num_parties: usize,
    amplitudes: Vec<C64>,
}

#[derive(Deserialize)]
struct RawState {
    num_parties: usize,
    amplitudes: Vec<C64>,
}

impl TryFrom<RawState> for PureState {
    type Error = Error;

    fn try_from(raw: RawState) -> Result<Self> {
        PureState::new(raw.num_parties, raw.amplitudes)
    }
}

fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dimension(num_parties: usize) -> usize {
    1usize << num_parties
}

/// Bit of party `k` inside a basis index.
#[inline]
pub(crate) fn party_bit(num_parties: usize, k: usize) -> usize {
    1usize << (num_parties - 1 - k)
}

impl PureState {
    /// Validates length and normalization (within [`READ_NORM_TOL`]) and
    /// renormalizes the amplitudes exactly.
    pub fn new(num_parties: usize, amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_shape(num_parties, &amplitudes)?;
        let norm = l2_norm(&amplitudes);
        if !((norm - 1.0).abs() <= READ_NORM_TOL) {
            return Err(Error::InvalidState(format!(
                "amplitudes are not normalized (norm {norm})"
            )));
        }
        Ok(Self::rescaled(num_parties, amplitudes, norm))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(num_parties: usize, amplitudes: Vec<C64>) -> Result<Self> {
        Self::check_shape(num_parties, &amplitudes)?;
        let norm = l2_norm(&amplitudes);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState(format!(
                "cannot normalize vector of norm {norm}"
            )));
        }
        Ok(Self::rescaled(num_parties, amplitudes, norm))
    }

    fn check_shape(num_parties: usize, amplitudes: &[C64]) -> Result<()> {
        if num_parties == 0 || num_parties > 16 {
            return Err(Error::InvalidState(format!(
                "num_parties must be in 1..=16, got {num_parties}"
            )));
        }
        if amplitudes.len() != dimension(num_parties) {
            return Err(Error::InvalidState(format!(
                "expected {} amplitudes for {num_parties} parties, got {}",
                dimension(num_parties),
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        Ok(())
    }

    fn rescaled(num_parties: usize, mut amplitudes: Vec<C64>, norm: f64) -> Self {
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self {
            num_parties,
            amplitudes,
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_parties: usize, index: usize) -> Result<Self> {
        let dim = dimension(num_parties);
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(num_parties, amps)
    }

    pub fn up() -> Self {
        Self::single([ONE, ZERO])
    }

    pub fn down() -> Self {
        Self::single([ZERO, ONE])
    }

    /// One-particle state from a 2-component spinor (normalized on the way in).
    pub fn single(spinor: [C64; 2]) -> Self {
        Self::normalized(1, spinor.to_vec()).expect("spinor must be nonzero")
    }

    /// Eigenket `V(d)|s⟩` of the spin measurement along `d`.
    pub fn spin(d: &MeasurementDirection, s: Spin) -> Self {
        Self::single(d.eigenket(s))
    }

    /// Named axis eigenkets with fixed phase conventions:
    /// `|↑ₓ⟩ = (1, 1)/√2`, `|↓ₓ⟩ = (1, −1)/√2`,
    /// `|↑ᵧ⟩ = (1, i)/√2`, `|↓ᵧ⟩ = (i, 1)/√2`, and the z kets.
    ///
    /// The y kets are the columns of the direction unitary at `(π/2, π/2)`.
    pub fn axis(axis: Axis, s: Spin) -> Self {
        let h = FRAC_1_SQRT_2;
        let spinor = match (axis, s) {
            (Axis::Z, Spin::Up) => [ONE, ZERO],
            (Axis::Z, Spin::Down) => [ZERO, ONE],
            (Axis::X, Spin::Up) => [C64::new(h, 0.0), C64::new(h, 0.0)],
            (Axis::X, Spin::Down) => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            (Axis::Y, Spin::Up) => [C64::new(h, 0.0), C64::new(0.0, h)],
            (Axis::Y, Spin::Down) => [C64::new(0.0, h), C64::new(h, 0.0)],
        };
        Self::single(spinor)
    }

    pub fn num_parties(&self) -> usize {
        self.num_parties
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        tensor(self, other)
    }

    /// Multiplies every amplitude by `e^{iγ}`.
    pub fn with_global_phase(&self, gamma: f64) -> PureState {
        let e = C64::from_polar(1.0, gamma);
        PureState {
            num_parties: self.num_parties,
            amplitudes: self.amplitudes.iter().map(|a| a * e).collect(),
        }
    }

    /// Applies a single-particle unitary to party `k`.
    pub fn apply_local(&self, k: usize, u: &Unitary2) -> Result<PureState> {
        check_party(self.num_parties, k)?;
        let mut amps = self.amplitudes.clone();
        apply_single(&mut amps, self.num_parties, k, u.entries());
        Ok(PureState {
            num_parties: self.num_parties,
            amplitudes: amps,
        })
    }

    /// `min_γ max_k |a_k − e^{iγ} b_k|`: distance between the rays of two states.
    pub fn phase_distance(&self, other: &PureState) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        phase_distance(&self.amplitudes, &other.amplitudes)
    }

    pub fn equal_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        self.phase_distance(other) <= tol
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.num_parties;
        let mut first = true;
        for (i, a) in self.amplitudes.iter().enumerate() {
            if a.norm() < 1e-12 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let label: String = (0..n)
                .map(|k| {
                    if i & party_bit(n, k) == 0 {
                        '↑'
                    } else {
                        '↓'
                    }
                })
                .collect();
            write!(f, "({:.6}{:+.6}i)|{label}⟩", a.re, a.im)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn max_diff_at_phase(a: &[C64], b: &[C64], gamma: f64) -> f64 {
    let e = C64::from_polar(1.0, gamma);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - e * y).norm())
        .fold(0.0, f64::max)
}

/// Minimizes the max-norm difference over a global phase: coarse scan of the
/// circle plus the overlap phase, then golden-section polishing.
pub(crate) fn phase_distance(a: &[C64], b: &[C64]) -> f64 {
    let overlap = inner(b, a);
    let mut candidates: Vec<f64> = (0..360).map(|i| i as f64 * TAU / 360.0).collect();
    if overlap.norm() > 0.0 {
        candidates.push(overlap.arg());
    }
    let mut best_gamma = candidates[0];
    let mut best = f64::INFINITY;
    for &g in &candidates {
        let v = max_diff_at_phase(a, b, g);
        if v < best {
            best = v;
            best_gamma = g;
        }
    }
    let step = TAU / 360.0;
    let (mut lo, mut hi) = (best_gamma - step, best_gamma + step);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - inv_phi * (hi - lo);
        let m2 = lo + inv_phi * (hi - lo);
        if max_diff_at_phase(a, b, m1) < max_diff_at_phase(a, b, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(max_diff_at_phase(a, b, 0.5 * (lo + hi)))
}

pub(crate) fn check_party(num_parties: usize, k: usize) -> Result<()> {
    if k >= num_parties {
        Err(Error::PartyOutOfRange {
            index: k,
            num_parties,
        })
    } else {
        Ok(())
    }
}

/// In-place application of a 2×2 matrix on party `k`.
pub(crate) fn apply_single(amps: &mut [C64], num_parties: usize, k: usize, m: &[[C64; 2]; 2]) {
    let bit = party_bit(num_parties, k);
    for i in 0..amps.len() {
        if i & bit != 0 {
            continue;
        }
        let j = i | bit;
        let (a0, a1) = (amps[i], amps[j]);
        amps[i] = m[0][0] * a0 + m[0][1] * a1;
        amps[j] = m[1][0] * a0 + m[1][1] * a1;
    }
}

/// `|v⟩⟨v|` as a 2×2 matrix.
pub(crate) fn outer(v: &[C64; 2]) -> [[C64; 2]; 2] {
    [
        [v[0] * v[0].conj(), v[0] * v[1].conj()],
        [v[1] * v[0].conj(), v[1] * v[1].conj()],
    ]
}

/// Tensor product; the left factor's parties come first.
pub fn tensor(a: &PureState, b: &PureState) -> PureState {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amplitudes {
        for y in &b.amplitudes {
            amps.push(x * y);
        }
    }
    PureState {
        num_parties: a.num_parties + b.num_parties,
        amplitudes: amps,
    }
}

/// Dense square operator on the `2^n`-dimensional space of `n` parties.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    num_parties: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(num_parties: usize) -> Self {
        let dim = dimension(num_parties);
        Self {
            num_parties,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(num_parties: usize) -> Self {
        let mut op = Self::zeros(num_parties);
        for i in 0..op.dim() {
            op.set(i, i, ONE);
        }
        op
    }

    pub fn num_parties(&self) -> usize {
        self.num_parties
    }

    pub fn dim(&self) -> usize {
        dimension(self.num_parties)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    fn set(&mut self, row: usize, col: usize, v: C64) {
        let dim = self.dim();
        self.data[row * dim + col] = v;
    }

    /// Rank-one projector `|ψ⟩⟨ψ|`.
    pub fn projector(state: &PureState) -> Self {
        let mut op = Self::zeros(state.num_parties());
        let a = state.amplitudes();
        for i in 0..a.len() {
            for j in 0..a.len() {
                op.set(i, j, a[i] * a[j].conj());
            }
        }
        op
    }

    /// Embeds an operator acting on `parties` (in the listed order) into the
    /// full space, with identity on every other party.
    pub fn embed(num_parties: usize, parties: &[usize], local: &Operator) -> Result<Self> {
        if local.num_parties() != parties.len() {
            return Err(Error::InvalidArgument(format!(
                "local operator acts on {} parties but {} were listed",
                local.num_parties(),
                parties.len()
            )));
        }
        for (i, &p) in parties.iter().enumerate() {
            check_party(num_parties, p)?;
            if parties[..i].contains(&p) {
                return Err(Error::InvalidArgument(format!("party {p} listed twice")));
            }
        }
        let mask: usize = parties.iter().map(|&p| party_bit(num_parties, p)).sum();
        let sub_index = |full: usize| -> usize {
            parties.iter().fold(0, |acc, &p| {
                (acc << 1) | usize::from(full & party_bit(num_parties, p) != 0)
            })
        };
        let mut op = Self::zeros(num_parties);
        let dim = op.dim();
        for r in 0..dim {
            for c in 0..dim {
                if r & !mask != c & !mask {
                    continue;
                }
                op.set(r, c, local.get(sub_index(r), sub_index(c)));
            }
        }
        Ok(op)
    }

    pub fn local(num_parties: usize, k: usize, m: &[[C64; 2]; 2]) -> Result<Self> {
        let mut one = Self::zeros(1);
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                one.set(i, j, *v);
            }
        }
        Self::embed(num_parties, &[k], &one)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| {
                self.data[i * dim..(i + 1) * dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn mul(&self, rhs: &Operator) -> Operator {
        let dim = self.dim();
        let mut out = Self::zeros(self.num_parties);
        for i in 0..dim {
            for k in 0..dim {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..dim {
                    out.data[i * dim + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Operator) -> Operator {
        Operator {
            num_parties: self.num_parties,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn dagger(&self) -> Operator {
        let dim = self.dim();
        let mut out = Self::zeros(self.num_parties);
        for i in 0..dim {
            for j in 0..dim {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Entrywise max-norm distance.
    pub fn max_distance(&self, rhs: &Operator) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `V|s⟩⟨s|V†` on party `k`, identity elsewhere.
pub fn local_projector(
    num_parties: usize,
    k: usize,
    d: &MeasurementDirection,
    outcome: Spin,
) -> Result<Operator> {
    check_party(num_parties, k)?;
    Operator::local(num_parties, k, &outer(&d.eigenket(outcome)))
}

/// Labels of the four Bell states, in the order returned by [`bell_basis`].
pub const BELL_LABELS: [&str; 4] = ["phi+", "phi-", "psi+", "psi-"];

/// `φ⁺, φ⁻, ψ⁺, ψ⁻` with `φ± = (|↑↑⟩ ± |↓↓⟩)/√2`, `ψ± = (|↑↓⟩ ± |↓↑⟩)/√2`.
pub fn bell_basis() -> [PureState; 4] {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let mk = |a: [C64; 4]| PureState::new(2, a.to_vec()).expect("Bell state is normalized");
    [
        mk([h, ZERO, ZERO, h]),
        mk([h, ZERO, ZERO, -h]),
        mk([ZERO, h, h, ZERO]),
        mk([ZERO, h, -h, ZERO]),
    ]
}

/// Schmidt form `e^{iγ}(s₀|a₀⟩|b₀⟩ + e^{iθ} s₁|a₁⟩|b₁⟩)` of a two-party state.
///
/// `basis_a` and `basis_b` hold the local Schmidt vectors as columns. Each
/// column is phase-fixed so that its largest component (lowest index on
/// ties) is real and positive.
#[derive(Clone, Debug, Serialize)]
pub struct SchmidtDecomposition {
    pub coefficients: [f64; 2],
    pub basis_a: Unitary2,
    pub basis_b: Unitary2,
    pub global_phase: f64,
    pub relative_phase: f64,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> PureState {
        let a0 = PureState::single(self.basis_a.column(0));
        let a1 = PureState::single(self.basis_a.column(1));
        let b0 = PureState::single(self.basis_b.column(0));
        let b1 = PureState::single(self.basis_b.column(1));
        let t0 = tensor(&a0, &b0);
        let t1 = tensor(&a1, &b1);
        let g = C64::from_polar(1.0, self.global_phase);
        let c0 = g * self.coefficients[0];
        let c1 = g * C64::from_polar(self.coefficients[1], self.relative_phase);
        let amps = t0
            .amplitudes()
            .iter()
            .zip(t1.amplitudes())
            .map(|(x, y)| c0 * x + c1 * y)
            .collect();
        PureState {
            num_parties: 2,
            amplitudes: amps,
        }
    }
}

/// Gap `s₀² − s₁²` below which the spectrum counts as degenerate and the
/// computational basis is used for party A.
const SCHMIDT_DEGENERACY_GAP: f64 = 1e-11;

fn phase_fix(v: [C64; 2]) -> [C64; 2] {
    let (n0, n1) = (v[0].norm(), v[1].norm());
    let pivot = if n1 > n0 + 1e-12 { v[1] } else { v[0] };
    if pivot.norm() == 0.0 {
        return v;
    }
    let rot = pivot.conj() / pivot.norm();
    [v[0] * rot, v[1] * rot]
}

fn normalize2(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn orthogonal_complement(v: [C64; 2]) -> [C64; 2] {
    [-v[1].conj(), v[0].conj()]
}

pub fn schmidt_decompose(s: &PureState) -> Result<SchmidtDecomposition> {
    if s.num_parties() != 2 {
        return Err(Error::InvalidArgument(format!(
            "Schmidt decomposition needs 2 parties, got {}",
            s.num_parties()
        )));
    }
    let a = s.amplitudes();
    // M[x][y] = amplitude of |x⟩_A |y⟩_B; H = M·M† is A's reduced density matrix.
    let m = [[a[0], a[1]], [a[2], a[3]]];
    let h00 = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let h11 = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let h01 = m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj();
    let gap = ((h00 - h11).powi(2) + 4.0 * h01.norm_sqr()).sqrt();

    let u0 = if gap < SCHMIDT_DEGENERACY_GAP {
        [ONE, ZERO]
    } else {
        let lambda0 = 0.5 * (h00 + h11 + gap);
        // Two candidate eigenvectors; take the better-conditioned one.
        let c1 = [h01, C64::new(lambda0 - h00, 0.0)];
        let c2 = [C64::new(lambda0 - h11, 0.0), h01.conj()];
        let pick = if c1[0].norm_sqr() + c1[1].norm_sqr() >= c2[0].norm_sqr() + c2[1].norm_sqr() {
            c1
        } else {
            c2
        };
        phase_fix(normalize2(pick))
    };
    let u1 = phase_fix(orthogonal_complement(u0));

    // B-side vectors w_k[y] = Σ_x conj(u_k[x]) M[x][y].
    let project = |u: [C64; 2]| -> [C64; 2] {
        [
            u[0].conj() * m[0][0] + u[1].conj() * m[1][0],
            u[0].conj() * m[0][1] + u[1].conj() * m[1][1],
        ]
    };
    let w0 = project(u0);
    let w1 = project(u1);
    let n0 = (w0[0].norm_sqr() + w0[1].norm_sqr()).sqrt();
    let b0 = phase_fix(normalize2(w0));
    let b1 = phase_fix(orthogonal_complement(b0));
    let c0 = b0[0].conj() * w0[0] + b0[1].conj() * w0[1];
    let c1 = b1[0].conj() * w1[0] + b1[1].conj() * w1[1];
    debug_assert!((c0.norm() - n0).abs() < 1e-9);

    let global_phase = wrap_angle(c0.arg());
    let relative_phase = if c1.norm() > 1e-14 {
        wrap_angle(c1.arg() - c0.arg())
    } else {
        0.0
    };
    Ok(SchmidtDecomposition {
        coefficients: [c0.norm(), c1.norm()],
        basis_a: Unitary2::from_matrix_unchecked([[u0[0], u1[0]], [u0[1], u1[1]]]),
        basis_b: Unitary2::from_matrix_unchecked([[b0[0], b1[0]], [b0[1], b1[1]]]),
        global_phase,
        relative_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(rng: &mut ChaCha8Rng, n: usize) -> PureState {
        let amps = (0..dimension(n))
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        PureState::normalized(n, amps).unwrap()
    }

    fn assert_close(a: C64, b: C64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn tensor_of_basis_kets() {
        let t = tensor(&PureState::up(), &PureState::up());
        assert_eq!(t.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let plus = PureState::axis(Axis::X, Spin::Up);
        let t = tensor(&PureState::up(), &plus);
        let h = FRAC_1_SQRT_2;
        for (a, b) in t.amplitudes().iter().zip([h, h, 0.0, 0.0]) {
            assert_close(*a, c(b, 0.0), 1e-15);
        }
    }

    #[test]
    fn tensor_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let na = rng.gen_range(1..=2);
            let nb = rng.gen_range(1..=2);
            let a = random_state(&mut rng, na);
            let b = random_state(&mut rng, nb);
            let t = tensor(&a, &b);
            assert_eq!(t.num_parties(), na + nb);
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (a, b, d) = (
            random_state(&mut rng, 1),
            random_state(&mut rng, 2),
            random_state(&mut rng, 1),
        );
        let left = tensor(&tensor(&a, &b), &d);
        let right = tensor(&a, &tensor(&b, &d));
        for (x, y) in left.amplitudes().iter().zip(right.amplitudes()) {
            assert_close(*x, *y, 1e-12);
        }
        let basis = [PureState::up(), PureState::down(), PureState::up()];
        let l = tensor(&tensor(&basis[0], &basis[1]), &basis[2]);
        let r = tensor(&basis[0], &tensor(&basis[1], &basis[2]));
        assert_eq!(l, r);
    }

    #[test]
    fn direction_unitary_matches_closed_form() {
        let id = direction_unitary(&MeasurementDirection::z());
        assert_eq!(id, Unitary2::identity());

        let u = direction_unitary(&MeasurementDirection::new(PI, 0.0).unwrap());
        let want = [[c(0.0, 0.0), c(-1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert_close(u.entries()[i][j], want[i][j], 1e-15);
            }
        }

        // (π/2, π/2): −e^{−iπ/2}/√2 = i/√2 and e^{iπ/2}/√2 = i/√2.
        let u = direction_unitary(&MeasurementDirection::new(PI / 2.0, PI / 2.0).unwrap());
        let h = FRAC_1_SQRT_2;
        let want = [[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert_close(u.entries()[i][j], want[i][j], 1e-15);
            }
        }
    }

    #[test]
    fn direction_unitary_is_unitary_for_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let d =
                MeasurementDirection::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))
                    .unwrap();
            assert!(d.unitary().unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn direction_rejects_non_finite() {
        assert!(MeasurementDirection::new(f64::NAN, 0.0).is_err());
        assert!(MeasurementDirection::new(0.0, f64::INFINITY).is_err());
        let d = MeasurementDirection::new(-0.5, 7.0).unwrap();
        assert!((0.0..TAU).contains(&d.omega()));
        assert!((0.0..TAU).contains(&d.phi()));
    }

    #[test]
    fn folding_keeps_the_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let d = MeasurementDirection::new(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU))
                .unwrap();
            let f = d.folded();
            assert!(f.omega() <= PI);
            for s in Spin::BOTH {
                let p = local_projector(1, 0, &d, s).unwrap();
                let q = local_projector(1, 0, &f, s).unwrap();
                assert!(p.max_distance(&q) < 1e-12);
            }
        }
    }

    #[test]
    fn local_projector_examples() {
        let p = local_projector(1, 0, &MeasurementDirection::z(), Spin::Up).unwrap();
        assert_eq!(p.get(0, 0), ONE);
        assert_eq!(p.get(1, 1), ZERO);
        let p = local_projector(2, 1, &MeasurementDirection::z(), Spin::Down).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j && i % 2 == 1 { ONE } else { ZERO };
                assert_close(p.get(i, j), want, 1e-15);
            }
        }
        assert!(matches!(
            local_projector(2, 2, &MeasurementDirection::z(), Spin::Up),
            Err(Error::PartyOutOfRange { .. })
        ));
    }

    #[test]
    fn local_projectors_are_idempotent_and_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let k = rng.gen_range(0..n);
            let d = MeasurementDirection::random(&mut rng);
            let up = local_projector(n, k, &d, Spin::Up).unwrap();
            let down = local_projector(n, k, &d, Spin::Down).unwrap();
            assert!(up.mul(&up).max_distance(&up) < 1e-12);
            assert!(up.dagger().max_distance(&up) < 1e-12);
            assert!(up.add(&down).max_distance(&Operator::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        let b = bell_basis();
        let h = FRAC_1_SQRT_2;
        for (a, w) in b[0].amplitudes().iter().zip([h, 0.0, 0.0, h]) {
            assert_close(*a, c(w, 0.0), 1e-15);
        }
        assert!(b[0].inner(&b[3]).norm() < 1e-15);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { ONE } else { ZERO };
                assert_close(b[i].inner(&b[j]), want, 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_of_product_and_maximal_states() {
        let s = schmidt_decompose(&tensor(&PureState::up(), &PureState::up())).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-15);
        assert!(s.coefficients[1].abs() < 1e-15);

        let s = schmidt_decompose(&bell_basis()[0]).unwrap();
        assert!((s.coefficients[0] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.coefficients[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        // degenerate spectrum: A keeps the computational basis
        assert_eq!(s.basis_a, Unitary2::identity());
    }

    #[test]
    fn schmidt_reconstructs_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..1000 {
            let s = random_state(&mut rng, 2);
            let dec = schmidt_decompose(&s).unwrap();
            let [s0, s1] = dec.coefficients;
            assert!(s0 >= s1 && s1 >= 0.0);
            assert!((s0 * s0 + s1 * s1 - 1.0).abs() < 1e-12);
            assert!(dec.basis_a.unitarity_error() < 1e-12);
            assert!(dec.basis_b.unitarity_error() < 1e-12);
            let r = dec.reconstruct();
            let err = r
                .amplitudes()
                .iter()
                .zip(s.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "reconstruction error {err}");
        }
    }

    #[test]
    fn schmidt_near_degenerate_still_reconstructs() {
        let eps = 1e-13_f64;
        let a = (0.5 + eps).sqrt();
        let b = (0.5 - eps).sqrt();
        let s = PureState::normalized(2, vec![c(a, 0.0), ZERO, ZERO, c(0.0, b)]).unwrap();
        let dec = schmidt_decompose(&s).unwrap();
        assert!(dec.reconstruct().phase_distance(&s) < 1e-10);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = random_state(&mut rng, 2);
        assert!(s.phase_distance(&s.with_global_phase(2.1)) < 1e-12);
        let t = random_state(&mut rng, 2);
        assert!(s.phase_distance(&t) > 1e-3);
    }

    #[test]
    fn json_reader_validates() {
        let s = bell_basis()[3].clone();
        let back = PureState::from_json(&s.to_json()).unwrap();
        assert!(back.phase_distance(&s) < 1e-15);
        assert!(
            PureState::from_json(r#"{"num_parties":2,"amplitudes":[[1,0],[0,0],[0,0]]}"#).is_err()
        );
        assert!(PureState::from_json(r#"{"num_parties":1,"amplitudes":[[1,0],[0.1,0]]}"#).is_err());
        let ok =
            PureState::from_json(r#"{"num_parties":1,"amplitudes":[[0.6,0],[0,0.8000000001]]}"#)
                .unwrap();
        assert!((ok.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_json_rejects_non_unitary() {
        assert!(serde_json::from_str::<Unitary2>("[[[1,0],[1,0]],[[0,0],[1,0]]]").is_err());
        let h: Unitary2 =
            serde_json::from_str(&serde_json::to_string(&Unitary2::hadamard()).unwrap()).unwrap();
        assert_eq!(h, Unitary2::hadamard());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state_strategy(n: usize) -> impl Strategy<Value = PureState> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dimension(n)).prop_filter_map(
                "nonzero",
                move |v| {
                    PureState::normalized(n, v.into_iter().map(|(a, b)| c(a, b)).collect()).ok()
                },
            )
        }

        proptest! {
            #[test]
            fn schmidt_squares_sum_to_one(s in state_strategy(2)) {
                let dec = schmidt_decompose(&s).unwrap();
                let [a, b] = dec.coefficients;
                prop_assert!((a * a + b * b - 1.0).abs() < 1e-12);
                prop_assert!(dec.reconstruct().phase_distance(&s) < 1e-10);
            }

            #[test]
            fn json_round_trip(s in state_strategy(3)) {
                let back = PureState::from_json(&s.to_json()).unwrap();
                prop_assert!(back.phase_distance(&s) < 1e-15);
            }
        }
    }
}
