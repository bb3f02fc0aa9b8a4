//! Executable checks of the distance estimates, the distortion bound and
//! the dimension bookkeeping.

mod bounds;
mod constants;
mod eta;
mod plan;
mod qs;
mod report;
pub(crate) mod sampling;

pub use bounds::{bounds_report, BoundsMode, BoundsOptions};
pub use constants::{constants, Constants, ConstantsSummary};
pub use eta::{eta_bound, EtaCurve};
pub use plan::{
    choose_parameters, content_table, ContentOptions, ContentRow, ContentTable, DimensionPlan,
    EmpiricalContent, ParameterChoice, PlanCheck, SearchOptions,
};
pub use qs::{qs_scatter, QsOptions, QsResult, QsRow};
pub(crate) use report::ReportParts;
pub use report::{BoundsReport, Margins, MARGIN_SLACK};
