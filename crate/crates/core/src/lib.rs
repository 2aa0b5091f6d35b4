//! Core of a scanner that fingerprints third-party native libraries shipped
//! in Android apps, matches them against a purpose-built CVE database and
//! rates each library and app on a qualitative risk scale.
//!
//! Everything here is `no_std` + `alloc`: byte buffers and text in, plain
//! data out. File access, archives, feeds and the command line live in the
//! `nativerisk` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod apk;
pub mod cve;
pub mod elf;
pub mod fingerprint;
pub mod pipeline;
pub mod report;
pub mod risk;
pub mod version;
