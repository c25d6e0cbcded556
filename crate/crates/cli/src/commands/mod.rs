pub mod anb_cycles;
pub mod montecarlo;
pub mod sweep;
pub mod trajectory;
pub mod verify;
