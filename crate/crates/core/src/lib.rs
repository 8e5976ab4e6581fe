//! Exact computations for motivic integration on quotient stacks.
//!
//! * [`grothendieck`]: Laurent polynomials in `L^{1/m}` and the point-count realization.
//! * [`series`], [`smith`]: power series modulo `t^N`, Smith normal form, Fitting orders.
//! * [`heights`]: arc pullbacks of the three-term cotangent complex and their heights.
//! * [`jets`]: finite-field jet enumeration, groupoid counts and cylinder measures.
//! * [`crepant`]: divisor calculus and crepant stack descriptors for SNC data.
//! * [`parse`]: text grammar for motivic expressions.

pub mod crepant;
pub mod grothendieck;
pub mod heights;
pub mod jets;
pub mod parse;
pub mod scalar;
pub mod series;
pub mod smith;
