//! End-to-end transmit power minimization for a full-duplex MISO SWIPT
//! downlink/uplink pair.

pub mod linalg;
pub mod model;
pub mod harness;
pub mod jbps;
pub mod sdp;
pub mod uplink;
pub mod zf;

pub use linalg::{ComplexMatrix, HermitianEig};
pub use model::{ChannelRealization, RobustBounds, SystemParams};
pub use harness::{ExperimentConfig, JointSolution, Method, SweepResult};
pub use jbps::DownlinkSolution;
pub use sdp::{ConicProblem, ConicSolution, SolveStatus};
pub use uplink::UplinkSolution;
pub use zf::ZfSolution;
