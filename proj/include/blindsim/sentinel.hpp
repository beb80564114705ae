#pragma once

// Bias-current monitor: flags sustained current far above what legitimate
// single-photon operation draws.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "blindsim/circuit_model.hpp"

namespace blindsim {

enum class MonitorMode {
    inter_gate,   ///< sample the DC current between gates
    full_average, ///< sample the gate-period average, avalanche recharge included
};

const char* to_string(MonitorMode m);

inline constexpr double kDefaultSafetyFactor = 10.0;

struct MonitorConfig {
    double sample_interval = 0.0;  ///< [s]; one sample per gate period
    std::uint32_t window = 32;     ///< samples in the sliding mean
    double threshold = 0.0;        ///< [A]
    MonitorMode mode = MonitorMode::inter_gate;

    void validate() const;

    /// Inter-gate monitoring at kDefaultSafetyFactor for this detector.
    static MonitorConfig defaults_for(const DetectorConfig& cfg);
};

struct CurrentSample {
    std::uint64_t index = 0;
    double current = 0.0;  ///< [A]
};

struct Alarm {
    std::uint64_t sample_index = 0;  ///< sample at which the window mean first exceeded the threshold
    double window_mean = 0.0;        ///< [A]
};

/// Current drawn by legitimate operation times `safety_factor`.
double derive_threshold(const DetectorConfig& cfg, double safety_factor,
                        MonitorMode mode = MonitorMode::inter_gate);

/// Sliding-window mean over the trace; one Alarm per contiguous excursion
/// above threshold, evaluated once the window is full.
std::vector<Alarm> scan_current_trace(std::span<const CurrentSample> trace, const MonitorConfig& mcfg);

void write_alarms_csv(std::ostream& os, std::span<const Alarm> alarms);

}  // namespace blindsim
