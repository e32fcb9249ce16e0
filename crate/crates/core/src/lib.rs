//! Kinematics, quasi-static contact simulation and grasp statics for
//! slot-constrained adaptive linkage (SCAL) grippers.

pub mod contact;
pub mod drive;
pub mod geometry;
pub mod io;
pub mod linkage;
pub mod statics;
pub mod validate;
