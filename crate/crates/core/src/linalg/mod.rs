//! Linear-algebra kernels used by the solvers: tridiagonal (Thomas)
//! factorizations for the compact line systems, a CSR matrix with ILU(0),
//! a banded LU with partial pivoting for the finite-element system and a
//! right-preconditioned BiCGStab.

pub mod banded;
pub mod krylov;
pub mod sparse;
pub mod tridiag;

pub use banded::BandedLu;
pub use krylov::{bicgstab, KrylovStats};
pub use sparse::{CsrMatrix, Ilu0, TripletBuilder};
pub use tridiag::Tridiagonal;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
