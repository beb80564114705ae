#include "blindsim/sentinel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "blindsim/errors.hpp"

namespace blindsim {

const char* to_string(MonitorMode m) {
    return m == MonitorMode::full_average ? "full_average" : "inter_gate";
}

void MonitorConfig::validate() const {
    if (window < 1) {
        throw ParameterError("monitor window must be >= 1");
    }
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw ParameterError("monitor threshold must be > 0");
    }
    if (!(sample_interval >= 0.0)) {
        throw ParameterError("monitor sample interval must be >= 0");
    }
}

MonitorConfig MonitorConfig::defaults_for(const DetectorConfig& cfg) {
    MonitorConfig m;
    m.sample_interval = 1.0 / cfg.gate_rate;
    m.mode = MonitorMode::inter_gate;
    m.threshold = derive_threshold(cfg, kDefaultSafetyFactor, m.mode);
    return m;
}

double derive_threshold(const DetectorConfig& cfg, double safety_factor, MonitorMode mode) {
    if (!(safety_factor > 1.0) || !std::isfinite(safety_factor)) {
        throw ParameterError("derive_threshold: safety factor must be > 1");
    }
    double legitimate = cfg.dark_leakage;
    if (mode == MonitorMode::full_average) {
        const double full_rate_charge =
            avalanche_charge(cfg, cfg.v_dc + cfg.gate_amplitude, cfg.v_breakdown_ref);
        legitimate += full_rate_charge * cfg.gate_rate;
    }
    const double threshold = safety_factor * legitimate;
    if (!(threshold > 0.0)) {
        throw ParameterError("derive_threshold: legitimate current is zero; set dark_leakage > 0");
    }
    return threshold;
}

std::vector<Alarm> scan_current_trace(std::span<const CurrentSample> trace, const MonitorConfig& mcfg) {
    mcfg.validate();
    if (trace.empty()) {
        throw ParameterError("scan_current_trace: empty trace");
    }
    std::vector<Alarm> alarms;
    const std::size_t w = mcfg.window;
    // Kahan-compensated running sum keeps long traces drift-free.
    double sum = 0.0;
    double comp = 0.0;
    auto add = [&](double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    bool in_excursion = false;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        add(trace[i].current);
        if (i >= w) {
            add(-trace[i - w].current);
        }
        if (i + 1 < w) {
            continue;
        }
        const double mean = sum / static_cast<double>(w);
        if (mean > mcfg.threshold) {
            if (!in_excursion) {
                alarms.push_back({trace[i].index, mean});
                in_excursion = true;
            }
        } else {
            in_excursion = false;
        }
    }
    return alarms;
}

void write_alarms_csv(std::ostream& os, std::span<const Alarm> alarms) {
    os << "sample_index,window_mean_a\n";
    char buf[64];
    for (const Alarm& a : alarms) {
        std::snprintf(buf, sizeof buf, "%llu,%.10g\n", static_cast<unsigned long long>(a.sample_index),
                      a.window_mean);
        os << buf;
    }
}

}  // namespace blindsim
