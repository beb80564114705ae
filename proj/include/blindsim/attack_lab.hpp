#pragma once

#include <iosfwd>
#include <optional>

#include "blindsim/circuit_model.hpp"

namespace blindsim {

/// Default scan range: brackets every power of interest by two decades.
inline constexpr double kScanPowerMin = 1e-12;
inline constexpr double kScanPowerMax = 100e-3;

/// Default bracket ratio at which window edges stop being refined.
inline constexpr double kWindowEdgePrecision = 1.01;

/// CW power interval over which the detector is blind to single photons.
struct BlindingWindow {
    double p_min = 0.0;
    double p_max = 0.0;

    double geometric_midpoint() const;
    double log10_width() const;
};

/// Coarse log sweep (>= 25 points per decade) followed by edge bisection to
/// `edge_precision` (ratio; 1.01 = 1%). Returns the first contiguous blind run, or nullopt
/// if no sampled power is blind.
std::optional<BlindingWindow> find_blinding_window(const DetectorConfig& cfg,
                                                   double p_lo = kScanPowerMin,
                                                   double p_hi = kScanPowerMax,
                                                   int points_per_decade = 25,
                                                   double edge_precision = kWindowEdgePrecision);

enum class AttackMode { cw_blind_faked_state, thermal };

const char* to_string(AttackMode m);

struct AttackScenario {
    double p_blind = 0.0;       ///< CW component [W]
    double p_trigger = 0.0;     ///< extra power during targeted gates [W]
    double trigger_width = 0.0; ///< [s], at most the gate width
    AttackMode mode = AttackMode::cw_blind_faked_state;

    void validate(const DetectorConfig& cfg) const;
};

enum class TriggerStatus { ok, not_blind, no_classical_threshold, no_gap };

const char* to_string(TriggerStatus s);

struct TriggerDesign {
    std::optional<double> p_trigger;
    TriggerStatus status = TriggerStatus::not_blind;
    double click_threshold = 0.0;  ///< smallest pulse that fires the classical route
};

/// Faked-state trigger: a pulse that clicks the blinded detector at full power
/// but not at half power (the share each detector gets on a basis mismatch).
TriggerDesign design_trigger_pulse(const DetectorConfig& cfg, double p_blind);

/// Full scenario for a blinded detector: window midpoint as blinding power
/// plus the designed trigger. nullopt if the detector cannot be attacked.
std::optional<AttackScenario> design_faked_state_attack(const DetectorConfig& cfg);

struct ThermalAttackReport {
    double p_cw = 0.0;
    double p_heat = 0.0;
    double t_junction = 0.0;
    double v_b_effective = 0.0;
    double count_prob = 0.0;
    bool still_counting = false;
    bool blinded_thermally = false;
};

ThermalAttackReport assess_thermal_attack(const DetectorConfig& cfg, double p_cw);

void write_window_report(std::ostream& os, const std::optional<BlindingWindow>& w);
void write_thermal_report(std::ostream& os, const ThermalAttackReport& r);

}  // namespace blindsim
