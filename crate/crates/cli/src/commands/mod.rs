mod firstbest;
mod simulate;
mod solve;

pub use firstbest::firstbest;
pub use simulate::simulate;
pub use solve::solve;
