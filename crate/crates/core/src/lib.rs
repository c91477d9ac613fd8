//! Protection design for mesh networks using diversity coding over GF(2).
//!
//! [`tree`] builds coding trees for a static demand set through the MIP in
//! [`ip`]; [`dynamic`] places connections one at a time into coding groups;
//! [`failure`] fails every span against either kind of design and checks
//! that each destination can still decode.

pub mod demand;
pub mod dynamic;
pub mod failure;
pub mod gf2;
pub mod graph;
pub mod ip;
pub mod routing;
pub mod run;
pub mod traffic;
pub mod tree;
