//! Crate-internal imports shared between `std` and `no_std` builds.

pub(crate) use alloc::{
    format,
    string::{String, ToString},
    vec,
    vec::Vec,
};

#[allow(unused_imports)]
pub(crate) use num_traits::Float as _;
