#include "evtrack/pipeline.hpp"

namespace evtrack {

SequenceTrack track_sequence(const Tracker& tracker, const Sequence& sequence, bool use_init) {
    const TimeUs window_us = tracker.config().window_us;
    const auto windows = sequence.windows(window_us);
    if (sequence.groundtruth.empty()) throw InvalidArgument("sequence " + sequence.manifest.name + " has no ground truth");
    const BoundingBox first_box = sequence.groundtruth_at(sequence.manifest.start_us);

    SequenceTrack result;
    if (use_init && sequence.init) {
        result.final_state = tracker.init_target(*sequence.init, first_box);
    } else {
        if (windows.empty()) throw InitializationError("sequence " + sequence.manifest.name + " is shorter than one window");
        result.final_state = tracker.init_target(sequence.window(windows.front().first, windows.front().second), first_box);
    }
    result.records.reserve(windows.size());
    for (const auto& [t0, t1] : windows) {
        const StepResult step = tracker.step(result.final_state, sequence.window(t0, t1));
        result.records.push_back({t0, t1, step.box, step.skipped});
    }
    return result;
}

TrackRun make_track_run(const Sequence& sequence, const std::vector<TrackRecord>& records) {
    TrackRun run;
    run.sequence = sequence.manifest.name;
    std::vector<TimeUs> ends;
    ends.reserve(records.size());
    for (const TrackRecord& r : records) {
        ends.push_back(r.t_end);
        run.predicted.push_back(r.box);
    }
    run.groundtruth = align_groundtruth(sequence.gt_times, sequence.groundtruth, ends);
    return run;
}

}  // namespace evtrack
