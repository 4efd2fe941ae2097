//! Plane-stress finite elements with constant-strain triangles, and the
//! photosynthetic-algorithm inversion of per-element `(E, ν)` from measured
//! displacements.
//!
//! The benchmark beam is a 10 × 5 rectangle (unit thickness) with nodes
//!
//! ```text
//!   2 (0,5) ------------------ 3 (10,5)
//!     |  \        top (4)      / |
//!     |    \                 /   |
//!     | left  5 (5,2.5)   right  |
//!     |  (1) /          \  (3)   |
//!     |    /   bottom (2) \      |
//!   1 (0,0) ------------------ 4 (10,0)
//! ```
//!
//! and four triangles joining each rectangle edge to the centre node 5:
//! element 1 = (1, 2, 5), 2 = (1, 4, 5), 3 = (4, 3, 5), 4 = (3, 2, 5).
//! Nodes 1 and 2 are clamped and node 4 carries a unit load in −y.
//! Node and element numbers above are 1-based; the API is 0-based.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix};
use thiserror::Error;

use crate::encoding::FieldSpec;
use crate::pa::{pa_optimize, PaConfig, PaError};
use crate::problems::Problem;
use crate::rng::RandomSource;
use crate::trace::RunTrace;

pub type ElementStiffness = SMatrix<f64, 6, 6>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("element {element}: triangle has zero area")]
    DegenerateElement { element: usize },
    #[error("element {element} references invalid or repeated nodes")]
    Connectivity { element: usize },
    #[error("element {element}: need E > 0 and 0 < ν < 0.5, got E = {modulus}, ν = {poisson}")]
    Material { element: usize, modulus: f64, poisson: f64 },
    #[error("constrained stiffness matrix is singular")]
    Singular,
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("measured displacement must be zero at fixed degree of freedom {0}")]
    FixedDofNotZero(usize),
    #[error("expected {expected} displacement components, got {actual}")]
    DisplacementLength { expected: usize, actual: usize },
    #[error(transparent)]
    Pa(#[from] PaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoad {
    pub node: usize,
    pub axis: Axis,
    pub magnitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    /// Counter-clockwise after construction.
    pub nodes: [usize; 3],
    pub modulus: f64,
    pub poisson: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FemModel {
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    fixed_nodes: Vec<usize>,
    loads: Vec<PointLoad>,
}

/// `(E1, ν1, E2, ν2, E3, ν3, E4, ν4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialVector(pub [f64; 8]);

impl MaterialVector {
    /// The benchmark's generating material set.
    pub const TARGET: MaterialVector = MaterialVector([600.0, 0.25, 400.0, 0.35, 450.0, 0.30, 350.0, 0.32]);

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        <[f64; 8]>::try_from(v).ok().map(MaterialVector)
    }

    pub fn modulus(&self, element: usize) -> f64 {
        self.0[2 * element]
    }

    pub fn poisson(&self, element: usize) -> f64 {
        self.0[2 * element + 1]
    }
}

/// Search box for the inversion.
pub const MODULUS_BOUNDS: (f64, f64) = (100.0, 1000.0);
pub const POISSON_BOUNDS: (f64, f64) = (0.05, 0.45);

/// Nodal displacements `(u1, v1, …, un, vn)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementVector(pub Vec<f64>);

impl DisplacementVector {
    /// Reference displacements for the beam benchmark. Comparison only.
    pub const PUBLISHED: [f64; 10] = [0.0, 0.0, 0.0, 0.0, -0.0066, -0.0246, 0.0828, -0.2606, 0.0002, -0.0110];

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn signed_double_area(c: &[[f64; 2]; 3]) -> f64 {
    (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1])
}

/// Plane-stress constitutive matrix.
fn plane_stress(modulus: f64, poisson: f64) -> Matrix3<f64> {
    let s = modulus / (1.0 - poisson * poisson);
    Matrix3::new(s, s * poisson, 0.0, s * poisson, s, 0.0, 0.0, 0.0, s * (1.0 - poisson) / 2.0)
}

/// Constant-strain triangle stiffness `Bᵀ D B · area` (unit thickness), DOFs
/// ordered `(u_a, v_a, u_b, v_b, u_c, v_c)`. Either orientation is accepted.
pub fn element_stiffness(coords: [[f64; 2]; 3], modulus: f64, poisson: f64) -> Result<ElementStiffness, FemError> {
    let a2 = signed_double_area(&coords);
    let scale = coords.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if a2.abs() <= 1e-12 * scale * scale {
        return Err(FemError::DegenerateElement { element: 0 });
    }
    let [[x1, y1], [x2, y2], [x3, y3]] = coords;
    let b = [y2 - y3, y3 - y1, y1 - y2];
    let g = [x3 - x2, x1 - x3, x2 - x1];
    let mut strain = SMatrix::<f64, 3, 6>::zeros();
    for i in 0..3 {
        strain[(0, 2 * i)] = b[i] / a2;
        strain[(1, 2 * i + 1)] = g[i] / a2;
        strain[(2, 2 * i)] = g[i] / a2;
        strain[(2, 2 * i + 1)] = b[i] / a2;
    }
    let k = strain.transpose() * plane_stress(modulus, poisson) * strain * (a2.abs() / 2.0);
    // exact symmetry
    Ok((k + k.transpose()) * 0.5)
}

impl FemModel {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<Element>,
        fixed_nodes: Vec<usize>,
        loads: Vec<PointLoad>,
    ) -> Result<Self, FemError> {
        let mut elements = elements;
        for (i, e) in elements.iter_mut().enumerate() {
            let [a, b, c] = e.nodes;
            if a == b || b == c || a == c || e.nodes.iter().any(|&n| n >= nodes.len()) {
                return Err(FemError::Connectivity { element: i });
            }
            if !(e.modulus > 0.0 && e.modulus.is_finite() && e.poisson > 0.0 && e.poisson < 0.5) {
                return Err(FemError::Material { element: i, modulus: e.modulus, poisson: e.poisson });
            }
            let area = signed_double_area(&[nodes[a], nodes[b], nodes[c]]);
            if area.abs() <= 1e-12 {
                return Err(FemError::DegenerateElement { element: i });
            }
            if area < 0.0 {
                e.nodes.swap(1, 2);
            }
        }
        if let Some(&n) = fixed_nodes.iter().find(|&&n| n >= nodes.len()) {
            return Err(FemError::UnknownNode(n));
        }
        if let Some(l) = loads.iter().find(|l| l.node >= nodes.len()) {
            return Err(FemError::UnknownNode(l.node));
        }
        Ok(Self { nodes, elements, fixed_nodes, loads })
    }

    /// The five-node, four-element benchmark beam with the given materials.
    pub fn beam(material: &MaterialVector) -> Result<Self, FemError> {
        Self::beam_with_load(material, -1.0)
    }

    pub fn beam_with_load(material: &MaterialVector, load: f64) -> Result<Self, FemError> {
        let nodes = vec![[0.0, 0.0], [0.0, 5.0], [10.0, 5.0], [10.0, 0.0], [5.0, 2.5]];
        let connectivity = [[0, 1, 4], [0, 3, 4], [3, 2, 4], [2, 1, 4]];
        let elements = connectivity
            .iter()
            .enumerate()
            .map(|(i, &nodes)| Element { nodes, modulus: material.modulus(i), poisson: material.poisson(i) })
            .collect();
        Self::new(nodes, elements, vec![0, 1], vec![PointLoad { node: 3, axis: Axis::Y, magnitude: load }])
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn dof_count(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn is_fixed_dof(&self, dof: usize) -> bool {
        self.fixed_nodes.contains(&(dof / 2))
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.dof_count()).filter(|&d| !self.is_fixed_dof(d)).collect()
    }

    pub fn load_vector(&self) -> DVector<f64> {
        let mut f = DVector::zeros(self.dof_count());
        for l in &self.loads {
            let dof = 2 * l.node + usize::from(l.axis == Axis::Y);
            f[dof] += l.magnitude;
        }
        f
    }
}

/// Global stiffness before boundary conditions.
pub fn assemble(model: &FemModel) -> Result<DMatrix<f64>, FemError> {
    let n = model.dof_count();
    let mut k = DMatrix::zeros(n, n);
    for (i, e) in model.elements.iter().enumerate() {
        let coords = e.nodes.map(|node| model.nodes[node]);
        let ke =
            element_stiffness(coords, e.modulus, e.poisson).map_err(|_| FemError::DegenerateElement { element: i })?;
        let dofs: Vec<usize> = e.nodes.iter().flat_map(|&node| [2 * node, 2 * node + 1]).collect();
        for (a, &ga) in dofs.iter().enumerate() {
            for (b, &gb) in dofs.iter().enumerate() {
                k[(ga, gb)] += ke[(a, b)];
            }
        }
    }
    Ok(k)
}

/// Stiffness restricted to the free degrees of freedom.
pub fn constrained_stiffness(model: &FemModel) -> Result<DMatrix<f64>, FemError> {
    let k = assemble(model)?;
    let free = model.free_dofs();
    Ok(DMatrix::from_fn(free.len(), free.len(), |i, j| k[(free[i], free[j])]))
}

/// Solves `K U = F` on the free DOFs by LU with partial pivoting.
pub fn solve_displacements(model: &FemModel) -> Result<DisplacementVector, FemError> {
    let free = model.free_dofs();
    let k = constrained_stiffness(model)?;
    let f_all = model.load_vector();
    let f = DVector::from_iterator(free.len(), free.iter().map(|&d| f_all[d]));
    let u_free = k.lu().solve(&f).ok_or(FemError::Singular)?;
    if u_free.iter().any(|v| !v.is_finite()) {
        return Err(FemError::Singular);
    }
    let mut u = vec![0.0; model.dof_count()];
    for (i, &d) in free.iter().enumerate() {
        u[d] = u_free[i];
    }
    Ok(DisplacementVector(u))
}

/// Least-squares misfit of the beam's free displacements against a
/// measurement, as a function of the 8 material parameters.
#[derive(Clone, Debug)]
pub struct BeamInverse {
    measured: DisplacementVector,
    free: Vec<usize>,
}

impl BeamInverse {
    pub fn new(measured: DisplacementVector) -> Result<Self, FemError> {
        let model = FemModel::beam(&MaterialVector::TARGET)?;
        if measured.0.len() != model.dof_count() {
            return Err(FemError::DisplacementLength { expected: model.dof_count(), actual: measured.0.len() });
        }
        if let Some(d) = (0..model.dof_count()).find(|&d| model.is_fixed_dof(d) && measured.0[d] != 0.0) {
            return Err(FemError::FixedDofNotZero(d));
        }
        Ok(Self { free: model.free_dofs(), measured })
    }

    /// `Σ_free (U_computed − U_measured)²`; `NaN` when the model is invalid
    /// or singular.
    pub fn misfit(&self, material: &MaterialVector) -> f64 {
        let Ok(u) = FemModel::beam(material).and_then(|m| solve_displacements(&m)) else {
            return f64::NAN;
        };
        self.free.iter().map(|&d| (u.0[d] - self.measured.0[d]).powi(2)).sum()
    }
}

impl Problem for BeamInverse {
    fn name(&self) -> &str {
        "fem-inverse"
    }

    fn dimension(&self) -> usize {
        8
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        (0..4).flat_map(|_| [MODULUS_BOUNDS, POISSON_BOUNDS]).collect()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        match MaterialVector::from_slice(x) {
            Some(m) => self.misfit(&m),
            None => f64::NAN,
        }
    }
}

/// Recovers the material vector from measured displacements with the
/// photosynthetic algorithm, one `string_bits`-wide string per parameter.
pub fn fem_inverse(
    measured: &DisplacementVector,
    cfg: &PaConfig,
    src: &mut RandomSource,
) -> Result<(MaterialVector, RunTrace), FemError> {
    let problem = BeamInverse::new(measured.clone())?;
    let fields = problem
        .bounds()
        .into_iter()
        .map(|(lo, hi)| FieldSpec::continuous(cfg.string_bits, lo, hi))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PaError::from)?;
    let trace = pa_optimize(&problem, &fields, cfg, src)?;
    let estimate = MaterialVector::from_slice(&trace.best.decoded).expect("8 decoded parameters");
    Ok((estimate, trace))
}
