//! File formats, archive access, parallel scanning and the command line
//! around `nativerisk-core`.

pub mod apk;
pub mod cli;
pub mod dbfile;
pub mod feed;
pub mod metadata;
pub mod report_io;
pub mod scan;
