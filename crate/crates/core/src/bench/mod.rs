mod experiment;
mod order;
mod pca;
mod report;

pub use experiment::*;
pub use order::{order_study, OrderRow, OrderRule, OrderStudy};
pub use pca::{hull_mask, pca_2d, write_points, PcaPoint, Projection};
pub use report::*;
