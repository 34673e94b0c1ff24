//! Stderr logging gated by the `MVGEO_LOG` environment variable.
//!
//! Levels: `quiet` (nothing), default (progress and resolved configuration),
//! `debug` (adds per-step traces). The variable only changes what is printed
//! to stderr; stdout and all output files are unaffected.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Quiet,
    Info,
    Debug,
}

pub fn level() -> Level {
    match std::env::var("MVGEO_LOG").ok().as_deref() {
        Some("quiet") | Some("off") | Some("0") => Level::Quiet,
        Some("debug") | Some("2") => Level::Debug,
        _ => Level::Info,
    }
}

pub fn info(msg: &str) {
    if level() >= Level::Info {
        eprintln!("{msg}");
    }
}

pub fn debug(msg: &str) {
    if level() >= Level::Debug {
        eprintln!("{msg}");
    }
}

/// Echoes a resolved configuration block: a comment header followed by the
/// final `key = value` pairs after merging defaults, file and flags.
pub fn resolved(title: &str, pairs: &[(String, String)]) {
    if level() < Level::Info {
        return;
    }
    eprintln!("# resolved {title}");
    for (key, value) in pairs {
        eprintln!("{key} = {value}");
    }
}
