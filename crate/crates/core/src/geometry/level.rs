//! Scalar level functions describing implicit obstacles `{g(x) > 0}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::real::Real;
use crate::vector::Vector;

/// User supplied smooth field for obstacles without a builtin description.
///
/// Implementors must be twice continuously differentiable. The default
/// derivatives use central differences.
pub trait LevelField<T: Real>: Send + Sync {
    fn value(&self, x: &[T]) -> T;

    fn gradient(&self, x: &[T]) -> Vector<T> {
        let h = T::epsilon().cbrt();
        let mut probe = x.to_vec();
        Vector::new((0..x.len()).map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = self.value(&probe);
            probe[i] = xi - h;
            let down = self.value(&probe);
            probe[i] = xi;
            (up - down) / (h + h)
        }))
    }

    fn hessian(&self, x: &[T]) -> Vec<Vec<T>> {
        let h = T::epsilon().powf(T::lit(0.25));
        let n = x.len();
        let mut probe = x.to_vec();
        let mut rows = vec![vec![T::zero(); n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = self.gradient(&probe);
            probe[i] = xi - h;
            let down = self.gradient(&probe);
            probe[i] = xi;
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (up[j] - down[j]) / (h + h);
            }
        }
        rows
    }

    /// Global bound on `‖∇g‖`, when one is known.
    fn lipschitz(&self) -> Option<T> {
        None
    }
}

/// Which side of a sinusoidal wall is occupied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallSide {
    /// Obstacle is `x₂ < a·sin(x₁) − c`, i.e. `g = a·sin(x₁) − x₂ − c`.
    Below,
    /// Obstacle is `x₂ > c − a·sin(x₁)`, i.e. `g = a·sin(x₁) + x₂ − c`.
    Above,
}

impl WallSide {
    fn sign<T: Real>(self) -> T {
        match self {
            WallSide::Below => -T::one(),
            WallSide::Above => T::one(),
        }
    }
}

#[derive(Clone)]
pub struct CustomLevel<T: Real>(pub Arc<dyn LevelField<T>>);

impl<T: Real> fmt::Debug for CustomLevel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomLevel(..)")
    }
}

/// Level function of an implicit obstacle; the obstacle is where it is positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub enum LevelFunction<T: Real> {
    /// Half-space `normal·x > offset` with unit `normal`.
    Plane { normal: Vector<T>, offset: T },
    /// Planar sinusoidal wall `amplitude·sin(x₁) ± x₂ − offset`.
    SineWall { amplitude: T, offset: T, side: WallSide },
    #[serde(skip)]
    Custom(CustomLevel<T>),
}

impl<T: Real> LevelFunction<T> {
    /// Half-space with the given (not necessarily unit) outward normal.
    pub fn plane(normal: Vector<T>, offset: T) -> Option<Self> {
        let norm = normal.norm();
        let unit = normal.normalized()?;
        Some(Self::Plane {
            normal: unit,
            offset: offset / norm,
        })
    }

    pub fn custom(field: impl LevelField<T> + 'static) -> Self {
        Self::Custom(CustomLevel(Arc::new(field)))
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            Self::Plane { normal, offset } => dot_slice(normal.as_slice(), x) - *offset,
            Self::SineWall {
                amplitude,
                offset,
                side,
            } => *amplitude * x[0].sin() + side.sign::<T>() * x[1] - *offset,
            Self::Custom(c) => c.0.value(x),
        }
    }

    /// Value of `g(origin + t·direction)` without allocating.
    pub fn value_along(&self, origin: &[T], direction: &[T], t: T) -> T {
        match self {
            Self::Plane { normal, offset } => {
                let n = normal.as_slice();
                let mut acc = T::zero();
                for i in 0..n.len() {
                    acc = acc + n[i] * (origin[i] + t * direction[i]);
                }
                acc - *offset
            }
            Self::SineWall {
                amplitude,
                offset,
                side,
            } => {
                let x1 = origin[0] + t * direction[0];
                let x2 = origin[1] + t * direction[1];
                *amplitude * x1.sin() + side.sign::<T>() * x2 - *offset
            }
            Self::Custom(c) => {
                let p: Vec<T> = origin.iter().zip(direction).map(|(&o, &d)| o + t * d).collect();
                c.0.value(&p)
            }
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vector<T> {
        match self {
            Self::Plane { normal, .. } => normal.clone(),
            Self::SineWall { amplitude, side, .. } => {
                let mut g = Vector::zeros(x.len());
                g[0] = *amplitude * x[0].cos();
                g[1] = side.sign();
                g
            }
            Self::Custom(c) => c.0.gradient(x),
        }
    }

    pub fn hessian(&self, x: &[T]) -> Vec<Vec<T>> {
        let n = x.len();
        match self {
            Self::Plane { .. } => vec![vec![T::zero(); n]; n],
            Self::SineWall { amplitude, .. } => {
                let mut h = vec![vec![T::zero(); n]; n];
                h[0][0] = -*amplitude * x[0].sin();
                h
            }
            Self::Custom(c) => c.0.hessian(x),
        }
    }

    /// Global bound on `‖∇g‖`.
    pub fn lipschitz(&self) -> Option<T> {
        match self {
            Self::Plane { .. } => Some(T::one()),
            Self::SineWall { amplitude, .. } => Some((*amplitude * *amplitude + T::one()).sqrt()),
            Self::Custom(c) => c.0.lipschitz(),
        }
    }

    /// Bound on `|d/dt g(x + t·v)|` for the given direction.
    pub fn directional_lipschitz(&self, direction: &[T]) -> Option<T> {
        match self {
            Self::Plane { normal, .. } => Some(dot_slice(normal.as_slice(), direction).abs()),
            Self::SineWall { amplitude, .. } => {
                Some(amplitude.abs() * direction[0].abs() + direction[1].abs())
            }
            Self::Custom(c) => c.0.lipschitz(),
        }
    }

    /// Smallest ambient dimension the function is defined in.
    pub fn min_dim(&self) -> usize {
        match self {
            Self::Plane { normal, .. } => normal.dim(),
            Self::SineWall { .. } => 2,
            Self::Custom(_) => 1,
        }
    }

    pub(crate) fn is_plane(&self) -> bool {
        matches!(self, Self::Plane { .. })
    }
}

#[inline]
pub(crate) fn dot_slice<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
