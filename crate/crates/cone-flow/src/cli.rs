//! Command-line front end (stub; filled in after the core).
