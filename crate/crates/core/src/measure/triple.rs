use serde::Serialize;
use sha2::{Digest, Sha256};

use super::index::index_beta;
use super::jump::{JumpAtom, JumpMeasure};
use super::sphere::{check_dim, dot, norm, projection_mean_norm, Direction, SphericalMeasure};
use crate::error::{Error, Result};

/// Projections with norm below this are dropped during traces.
pub const TRACE_DROP_TOL: f64 = 1e-12;

/// Characteristic triple `(a, μ, ν)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharTriple {
    dim: usize,
    drift: Vec<f64>,
    gaussian: SphericalMeasure,
    jump: JumpMeasure,
}

impl CharTriple {
    pub fn new(drift: Vec<f64>, gaussian: SphericalMeasure, jump: JumpMeasure) -> Result<Self> {
        let dim = drift.len();
        check_dim(dim)?;
        if drift.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("drift must be finite".into()));
        }
        for got in [gaussian.dim(), jump.dim()] {
            if got != dim {
                return Err(Error::DimMismatch { expected: dim, got });
            }
        }
        jump.validate()?;
        jump.check_levy()?;
        Ok(Self { dim, drift, gaussian, jump })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            drift: vec![0.0; dim],
            gaussian: SphericalMeasure::zero(dim),
            jump: JumpMeasure::zero(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn gaussian(&self) -> &SphericalMeasure {
        &self.gaussian
    }

    pub fn jump(&self) -> &JumpMeasure {
        &self.jump
    }

    /// SHA-256 of the canonical JSON encoding, lowercase hex.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("triple serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Spectrum predicted for the field with triple `triple` at exponent `h`.
pub fn theoretical_spectrum(triple: &CharTriple, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!("exponent {h} must be nonnegative")));
    }
    let beta = index_beta(&triple.jump)?;
    if beta == 0.0 {
        return Err(Error::ZeroIndex(
            "finite-activity jump measure: the field is piecewise affine off finitely many \
             hyperplanes; use the compound-Poisson description instead"
                .into(),
        ));
    }
    let d = triple.dim as f64;
    let line = d - 1.0 + beta * h;
    Ok(if triple.gaussian.is_zero() {
        if h <= 1.0 / beta {
            line
        } else {
            f64::NEG_INFINITY
        }
    } else if h < 0.5 {
        line
    } else if h == 0.5 {
        d
    } else {
        f64::NEG_INFINITY
    })
}

/// How the uniform part of a spherical measure is pushed through a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsotropicPushforward {
    /// Closed form: the image of a uniform measure is uniform with mass scaled
    /// by `E‖p(s)‖`.
    #[default]
    Exact,
    /// Replace the uniform part by this many equal-weight half-atoms first.
    Discretized { half_atoms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceOptions {
    pub isotropic: IsotropicPushforward,
}

/// Orthonormal frame `e_1..e_{d'}` in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: Vec<Vec<f64>>,
}

impl Basis {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let sub = vectors.len();
        let dim = vectors.first().map_or(0, Vec::len);
        check_dim(dim).map_err(|_| Error::NonOrthonormalBasis(format!("ambient dimension {dim}")))?;
        if sub == 0 || sub > dim || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::NonOrthonormalBasis(format!(
                "{sub} vectors of mixed or invalid length for dimension {dim}"
            )));
        }
        for (i, u) in vectors.iter().enumerate() {
            for (k, v) in vectors.iter().enumerate() {
                let want = if i == k { 1.0 } else { 0.0 };
                let got = dot(u, v);
                if (got - want).abs() > 1e-10 {
                    return Err(Error::NonOrthonormalBasis(format!(
                        "<e{}, e{}> = {got}, expected {want}",
                        i + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(Self { vectors })
    }

    pub fn identity(dim: usize) -> Self {
        Self { vectors: (0..dim).map(|i| Direction::axis(dim, i).into()).collect() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn sub_dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|e| dot(e, v)).collect()
    }

    /// Image of a direction: `(p(s)/‖p(s)‖, ‖p(s)‖)`, or `None` when the
    /// projection vanishes.
    fn project_direction(&self, s: &Direction) -> Option<(Direction, f64)> {
        let p = self.project(s.coords());
        let n = norm(&p);
        if n < TRACE_DROP_TOL {
            None
        } else if (n - 1.0).abs() <= 1e-12 {
            Some((Direction::new(p).expect("unit within tolerance"), 1.0))
        } else {
            Some((Direction::normalized(p).expect("nonzero"), n))
        }
    }
}

fn push_sphere(mu: &SphericalMeasure, basis: &Basis, opts: &TraceOptions) -> SphericalMeasure {
    let (iso, source) = match opts.isotropic {
        IsotropicPushforward::Exact => (
            mu.isotropic_mass() * projection_mean_norm(mu.dim(), basis.sub_dim()),
            mu.atoms().to_vec(),
        ),
        IsotropicPushforward::Discretized { half_atoms } => (0.0, mu.discretized(half_atoms)),
    };
    let atoms = source
        .iter()
        .filter_map(|(s, w)| basis.project_direction(s).map(|(p, n)| (p, w * n)))
        .collect();
    SphericalMeasure::new(basis.sub_dim(), iso, atoms).expect("pushforward of a valid measure")
}

/// Characteristic triple of the restriction of the field to the span of
/// `basis`, expressed in the coordinates of that basis.
pub fn trace_triple(triple: &CharTriple, basis: &Basis, opts: &TraceOptions) -> Result<CharTriple> {
    if basis.ambient_dim() != triple.dim {
        return Err(Error::DimMismatch { expected: triple.dim, got: basis.ambient_dim() });
    }
    let drift = basis.project(&triple.drift);
    let gaussian = push_sphere(&triple.gaussian, basis, opts);
    let jump = match &triple.jump {
        JumpMeasure::Product { directional, radial } => JumpMeasure::Product {
            directional: push_sphere(directional, basis, opts),
            radial: radial.clone(),
        },
        JumpMeasure::AtomList { atoms, .. } => JumpMeasure::AtomList {
            dim: basis.sub_dim(),
            atoms: atoms
                .iter()
                .filter_map(|a| {
                    basis.project_direction(&a.direction).map(|(p, n)| JumpAtom {
                        direction: p,
                        x: a.x,
                        weight: a.weight * n,
                    })
                })
                .collect(),
        },
    };
    CharTriple::new(drift, gaussian, jump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::radial::RadialFamily;
    use proptest::prelude::*;

    fn stable_triple(dim: usize, alpha: f64, gauss: f64) -> CharTriple {
        CharTriple::new(
            vec![0.0; dim],
            SphericalMeasure::isotropic(dim, gauss).unwrap(),
            JumpMeasure::product(
                SphericalMeasure::isotropic(dim, 1.0).unwrap(),
                RadialFamily::Stable { alpha, scale: 1.0 },
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn spectrum_examples() {
        let t = stable_triple(2, 1.2, 0.0);
        assert!((theoretical_spectrum(&t, 0.5).unwrap() - 1.6).abs() < 1e-15);
        assert_eq!(theoretical_spectrum(&t, 1.0).unwrap(), f64::NEG_INFINITY);
        let g = stable_triple(2, 1.2, 1.0);
        assert_eq!(theoretical_spectrum(&g, 0.5).unwrap(), 2.0);
        assert_eq!(theoretical_spectrum(&g, 0.6).unwrap(), f64::NEG_INFINITY);
        let finite = CharTriple::new(
            vec![0.0],
            SphericalMeasure::zero(1),
            JumpMeasure::product(
                SphericalMeasure::isotropic(1, 1.0).unwrap(),
                RadialFamily::FiniteAtoms { atoms: vec![(2.0, 1.0)] },
            )
            .unwrap(),
        )
        .unwrap();
        assert!(matches!(theoretical_spectrum(&finite, 0.3), Err(Error::ZeroIndex(_))));
    }

    #[test]
    fn identity_trace_is_unchanged() {
        let mut t = stable_triple(3, 1.2, 0.5);
        t.drift = vec![1.0, -2.0, 0.5];
        t.gaussian = SphericalMeasure::new(
            3,
            0.5,
            vec![(Direction::normalized(vec![1.0, 2.0, 2.0]).unwrap(), 0.3)],
        )
        .unwrap();
        let out = trace_triple(&t, &Basis::identity(3), &TraceOptions::default()).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn orthogonal_atom_vanishes() {
        let t = CharTriple::new(
            vec![0.0, 0.0],
            SphericalMeasure::zero(2),
            JumpMeasure::atom_list(
                2,
                vec![JumpAtom { direction: Direction::axis(2, 0), x: 0.5, weight: 1.0 }],
            )
            .unwrap(),
        )
        .unwrap();
        let b = Basis::new(vec![vec![0.0, 1.0]]).unwrap();
        let out = trace_triple(&t, &b, &TraceOptions::default()).unwrap();
        assert!(out.jump().is_zero());
    }

    #[test]
    fn isotropic_trace_preserves_index() {
        let t = stable_triple(3, 1.3, 1.0);
        let b = Basis::new(vec![vec![0.6, 0.8, 0.0]]).unwrap();
        for opts in [
            TraceOptions::default(),
            TraceOptions { isotropic: IsotropicPushforward::Discretized { half_atoms: 2048 } },
        ] {
            let out = trace_triple(&t, &b, &opts).unwrap();
            assert_eq!(index_beta(out.jump()).unwrap(), index_beta(t.jump()).unwrap());
        }
    }

    #[test]
    fn exact_and_discretized_pushforwards_agree() {
        let t = stable_triple(2, 1.0, 2.0);
        let b = Basis::new(vec![vec![0.8, -0.6]]).unwrap();
        let exact = trace_triple(&t, &b, &TraceOptions::default()).unwrap();
        let disc = trace_triple(
            &t,
            &b,
            &TraceOptions { isotropic: IsotropicPushforward::Discretized { half_atoms: 720 } },
        )
        .unwrap();
        let rel = disc.gaussian().total_mass() / exact.gaussian().total_mass() - 1.0;
        assert!(rel.abs() < 1e-5, "{rel}");
        assert!((exact.gaussian().total_mass() - 2.0 * 2.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn bad_basis_rejected() {
        assert!(Basis::new(vec![vec![1.0, 0.1]]).is_err());
        assert!(Basis::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(Basis::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = stable_triple(2, 1.2, 0.0);
        assert_eq!(a.fingerprint(), stable_triple(2, 1.2, 0.0).fingerprint());
        assert_ne!(a.fingerprint(), stable_triple(2, 1.3, 0.0).fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    fn rotation3(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let (sc, cc) = c.sin_cos();
        let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
        let ry = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cc, -sc], [0.0, sc, cc]];
        let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
                }
            }
            r
        };
        mul(mul(rz, ry), rx)
    }

    proptest! {
        #[test]
        fn traces_compose(a in 0.0f64..6.0, b in 0.0f64..6.0, c in 0.0f64..6.0, phi in 0.0f64..6.0) {
            let r = rotation3(a, b, c);
            let e1 = r[0].to_vec();
            let e2 = r[1].to_vec();
            let atoms = vec![
                JumpAtom { direction: Direction::normalized(vec![1.0, 2.0, 3.0]).unwrap(), x: 0.4, weight: 1.0 },
                JumpAtom { direction: Direction::normalized(vec![-1.0, 0.5, 0.2]).unwrap(), x: -2.0, weight: 0.3 },
            ];
            let t = CharTriple::new(
                vec![0.3, -0.2, 1.0],
                SphericalMeasure::new(3, 1.0, vec![(Direction::normalized(vec![0.0, 1.0, 1.0]).unwrap(), 0.7)]).unwrap(),
                JumpMeasure::atom_list(3, atoms).unwrap(),
            ).unwrap();
            let b2 = Basis::new(vec![e1.clone(), e2.clone()]).unwrap();
            let (sp, cp) = phi.sin_cos();
            let b21 = Basis::new(vec![vec![cp, sp]]).unwrap();
            let direct_vec: Vec<f64> = (0..3).map(|i| cp * e1[i] + sp * e2[i]).collect();
            let b1 = Basis::new(vec![direct_vec]).unwrap();
            let o = TraceOptions::default();
            let two_step = trace_triple(&trace_triple(&t, &b2, &o).unwrap(), &b21, &o).unwrap();
            let direct = trace_triple(&t, &b1, &o).unwrap();
            prop_assert!((two_step.drift()[0] - direct.drift()[0]).abs() < 1e-10);
            prop_assert!((two_step.gaussian().isotropic_mass() - direct.gaussian().isotropic_mass()).abs() < 1e-10);
            let (JumpMeasure::AtomList { atoms: x, .. }, JumpMeasure::AtomList { atoms: y, .. }) =
                (two_step.jump(), direct.jump()) else { panic!() };
            prop_assert_eq!(x.len(), y.len());
            for (p, q) in x.iter().zip(y) {
                prop_assert!((p.weight - q.weight).abs() < 1e-10);
                prop_assert!((p.direction.coords()[0] - q.direction.coords()[0]).abs() < 1e-10);
            }
            for (p, q) in two_step.gaussian().atoms().iter().zip(direct.gaussian().atoms()) {
                prop_assert!((p.1 - q.1).abs() < 1e-10);
                prop_assert!((p.0.coords()[0] - q.0.coords()[0]).abs() < 1e-10);
            }
        }
    }
}
