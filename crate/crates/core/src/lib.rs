pub mod aero;
pub mod cli;
pub mod compare;
pub mod config;
pub mod dynamics;
pub mod export;
pub mod linkage;
pub mod loadcell;
pub mod math;
pub mod sim;
pub mod wake;
pub mod wing;
