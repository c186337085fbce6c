pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;
pub mod verify;
