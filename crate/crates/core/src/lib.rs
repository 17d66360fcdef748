#![cfg_attr(not(feature = "std"), no_std)]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod codec;
pub mod command;
pub mod dlog;
pub mod embedding;
pub mod group;
pub mod he;
pub mod protocol;
pub mod zkp;
