pub mod determining;
pub mod expr;
pub mod fpe;
pub mod jet;
pub mod catalog;
pub mod solutions;
pub mod numeric;
pub mod report;
