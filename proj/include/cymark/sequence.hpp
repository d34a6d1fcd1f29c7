#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cymark/error.hpp"
#include "cymark/time.hpp"

namespace cymark {

// Sentinel for an unobserved minute.
constexpr int kMissingValue = -1;

// One gap-free run of minute-resolution availability counts for a resource
// cluster. Values are counts in [0..cluster_size] or kMissingValue. Alignment
// to cycle positions always goes through the start timestamp, never through
// the array index alone, so sequences can begin anywhere in the cycle.
struct ObservationSequence {
    std::string cluster_id;
    int cluster_size = 0;  // M; states are 0..M
    Timestamp start = 0;   // absolute minute of values[0]
    std::vector<int> values;

    int length() const { return static_cast<int>(values.size()); }
    Timestamp time_of(int k) const { return start + k; }
    bool is_missing(int k) const { return values[k] < 0; }

    // 1-based cycle position of step k for period p.
    int position_of(int k, int p) const { return cycle_position_of(start + k, p); }
    int start_cycle_position(int p) const { return position_of(0, p); }

    int observed_count() const {
        int n = 0;
        for (int v : values)
            if (v >= 0) ++n;
        return n;
    }

    bool complete() const {
        for (int v : values)
            if (v < 0) return false;
        return true;
    }

    // Throws schema_error on out-of-range values or an unusable shape.
    void validate() const {
        if (cluster_size < 1)
            throw schema_error("sequence '" + cluster_id + "': cluster_size must be >= 1");
        if (values.empty())
            throw schema_error("sequence '" + cluster_id + "': empty");
        for (size_t k = 0; k < values.size(); ++k) {
            int v = values[k];
            if (v != kMissingValue && (v < 0 || v > cluster_size))
                throw schema_error("sequence '" + cluster_id + "': value " + std::to_string(v) +
                                   " at step " + std::to_string(k) + " outside [0.." +
                                   std::to_string(cluster_size) + "]");
        }
    }
};

// Convenience for synthetic data: anchor the sequence so that its first step
// falls on the requested 1-based cycle position (for any p dividing 1440).
inline Timestamp anchor_for_position(int start_position, int p) {
    if (start_position < 1 || start_position > p)
        throw domain_error("anchor_for_position: position out of range");
    return static_cast<Timestamp>(start_position - 1);
}

}  // namespace cymark
