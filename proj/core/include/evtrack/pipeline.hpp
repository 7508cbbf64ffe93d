#pragma once

#include <vector>

#include "evtrack/dataset.hpp"
#include "evtrack/evaluation.hpp"
#include "evtrack/tracker.hpp"

namespace evtrack {

struct SequenceTrack {
    std::vector<TrackRecord> records;  ///< one per window of the sequence
    TrackerState final_state;
};

/// Initializes from the sequence's initialization segment (when `use_init` is set and the
/// segment exists) or from its first window, then steps over every window. The initial box
/// is the ground truth at the sequence start. Throws InitializationError when the chosen
/// segment has no events inside the target region.
SequenceTrack track_sequence(const Tracker& tracker, const Sequence& sequence, bool use_init = true);

/// Pairs each record with the ground truth interpolated at its window end.
TrackRun make_track_run(const Sequence& sequence, const std::vector<TrackRecord>& records);

}  // namespace evtrack
