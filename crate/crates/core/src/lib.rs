#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod classify;
pub mod expr;
pub mod integrate;
pub mod ode;
pub mod quadrature;
pub mod verify;
