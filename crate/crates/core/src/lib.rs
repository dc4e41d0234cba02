//! Exact computations with idealistic exponents: pairs `(J, b)` over
//! `Q`, `F_p` and `F_p(lam)`, their transforms under blowups, tangent
//! cones, directrix and ridge, coefficient pairs, ridge decompositions with
//! replayable certificates, and the resolution of generic determinantal
//! varieties.

pub mod field;
pub mod poly;
pub mod linalg;
pub mod gb;
pub mod pair;
pub mod cone;
pub mod reduce;
pub mod detres;
pub mod sample;

pub use num_rational::BigRational;
