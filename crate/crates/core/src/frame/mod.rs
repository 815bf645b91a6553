//! Frame partitioning, DL-MAP accounting and SDMA-OFDMA burst packing.

mod baseline;
mod construct;
mod geometry;
mod map;
mod packing;
mod render;

pub use baseline::fd_baseline;
pub use construct::{
    frame_construction, initial_step_size, map_star, min_slot_size, ExtensionPolicy, MapRegion,
    OfdmaFrame, PackingParams, PackingStats, StepRule,
};
pub use geometry::{partition_frame, FrameGeometry, SubbandSpec};
pub use map::{initial_vertical_limit, predict_map_size, MapConfig, MapModel};
pub use packing::{
    pack_group_area, plan_group_area, slots_for, Burst, BurstKey, FreezeRegistry, MemberAllocation,
};
pub use render::{render_frame, slot_map};

/// DL-MAP size of a constructed frame in slots.
pub fn map_size_slots(frame: &OfdmaFrame, model: &MapModel) -> usize {
    let ies: usize = frame.bursts.iter().map(Burst::ie_count).sum();
    model.size_slots(ies)
}
