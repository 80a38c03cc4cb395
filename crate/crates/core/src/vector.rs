//! Small dense vectors of runtime dimension.
//!
//! Points and velocities share the same representation. Storage is inline up
//! to four coordinates, which covers every scene the simulator builds.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector<T: Real> {
    coords: SmallVec<[T; 4]>,
}

/// Positions are plain coordinate vectors.
pub type Point<T> = Vector<T>;

impl<T: Real> Vector<T> {
    pub fn new(coords: impl IntoIterator<Item = T>) -> Self {
        Self {
            coords: coords.into_iter().collect(),
        }
    }

    pub fn from_slice(coords: &[T]) -> Self {
        Self {
            coords: SmallVec::from_slice(coords),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: smallvec::smallvec![T::zero(); dim],
        }
    }

    /// Unit vector along axis `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coords[axis] = T::one();
        v
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Self::new(coords.iter().map(|&c| T::lit(c)))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64_lossy()).collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.coords.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.coords.iter().map(|&c| c * factor))
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: T, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + factor * b),
        )
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self.scaled(T::one() / n))
        } else {
            None
        }
    }

    pub fn max_abs(&self) -> T {
        self.coords.iter().fold(T::zero(), |acc, &c| acc.max(c.abs()))
    }
}

impl<T: Real> Index<usize> for Vector<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

impl<T: Real> IndexMut<usize> for Vector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.coords[i]
    }
}

impl<T: Real> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Self::new(v)
    }
}

impl<T: Real, const N: usize> From<[T; N]> for Vector<T> {
    fn from(v: [T; N]) -> Self {
        Self::new(v)
    }
}

impl<'a, T: Real> Add<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: &'a Vector<T>) -> Vector<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector::new(self.coords.iter().zip(&rhs.coords).map(|(&a, &b)| a + b))
    }
}

impl<'a, T: Real> Sub<&'a Vector<T>> for &'a Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: &'a Vector<T>) -> Vector<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        Vector::new(self.coords.iter().zip(&rhs.coords).map(|(&a, &b)| a - b))
    }
}

impl<T: Real> Add for Vector<T> {
    type Output = Vector<T>;
    fn add(self, rhs: Vector<T>) -> Vector<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for Vector<T> {
    type Output = Vector<T>;
    fn sub(self, rhs: Vector<T>) -> Vector<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul<T> for &Vector<T> {
    type Output = Vector<T>;
    fn mul(self, rhs: T) -> Vector<T> {
        self.scaled(rhs)
    }
}

impl<T: Real> Mul<T> for Vector<T> {
    type Output = Vector<T>;
    fn mul(self, rhs: T) -> Vector<T> {
        self.scaled(rhs)
    }
}

impl<T: Real> Neg for &Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        Vector::new(self.coords.iter().map(|&c| -c))
    }
}

impl<T: Real> Neg for Vector<T> {
    type Output = Vector<T>;
    fn neg(self) -> Vector<T> {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Vector::<f64>::from([1.0, 2.0, 2.0]);
        let b = Vector::<f64>::from([0.0, 1.0, -1.0]);
        assert_eq!(a.norm(), 3.0);
        assert_eq!(a.dot(&b), 0.0);
        assert_eq!(&a - &b, Vector::from([1.0, 1.0, 3.0]));
        assert_eq!(a.add_scaled(2.0, &b), Vector::from([1.0, 4.0, 0.0]));
        assert_eq!(a.distance(&b), (1.0f64 + 1.0 + 9.0).sqrt());
        assert!(Vector::<f64>::zeros(3).normalized().is_none());
    }

    #[test]
    fn serializes_as_plain_array() {
        let a = Vector::<f64>::from([1.5, -2.0]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[1.5,-2.0]");
        let back: Vector<f64> = serde_json::from_str("[1.5,-2.0]").unwrap();
        assert_eq!(back, a);
    }
}
