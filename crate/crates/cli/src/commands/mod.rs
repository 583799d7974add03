pub mod dataset;
pub mod evaluate;
pub mod identify;
pub mod mission;
pub mod template;
