#pragma once

// Per-gate click logic. A gate registers a click either through a Geiger
// avalanche (only while the gate peak exceeds breakdown) or through the
// "classical" linear-mode route: gating modulates the photocurrent gain and
// the resulting swing on the sense resistor, on top of the capacitive
// transient, crosses the discrimination level.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <utility>
#include <span>
#include <string>
#include <vector>

#include "blindsim/circuit_model.hpp"

namespace blindsim {

/// Lowest discrimination level that rejects the capacitive gate transient.
inline constexpr double kDiscriminationFloorMargin = 1.1;

inline double discrimination_floor(const DetectorConfig& cfg) {
    return kDiscriminationFloorMargin * cfg.v_cap_transient;
}

/// Copy of cfg with L set to `multiple` times the discrimination floor.
DetectorConfig with_discrimination_multiple(DetectorConfig cfg, double multiple);

enum class ClickMechanism { none, geiger, classical };

const char* to_string(ClickMechanism m);

struct ClickRecord {
    std::uint64_t gate_index = 0;
    bool clicked = false;
    ClickMechanism mechanism = ClickMechanism::none;
    double delta_v_sense = 0.0;
    double v_gate_peak = 0.0;
    double i_avg = 0.0;        ///< time-averaged bias current
    double i_inter_gate = 0.0; ///< DC current flowing between gates (photocurrent + leakage)
};

struct SweepPoint {
    double p_cw = 0.0;
    double count_prob = 0.0;
    double geiger_component = 0.0;
    int classical_component = 0;
    bool blinded = false;
    bool geiger_armed = false;
    double v_apd_off = 0.0;
    double i_avg = 0.0;
};

struct SweepCurve {
    DetectorConfig config;
    std::vector<SweepPoint> points;
};

/// Steady state under constant CW light, including the operating point the
/// per-gate logic needs.
struct SteadyState {
    SweepPoint point;
    OperatingPoint op;
    ThermalState thermal;
};

/// Mean photon number arriving within one gate for a power during the gate.
double photons_per_gate(const DetectorConfig& cfg, double p_during_gate);

/// Optical power during the gate carrying `mean_photons` per gate.
double power_for_photons_per_gate(const DetectorConfig& cfg, double mean_photons);

double geiger_click_probability(const DetectorConfig& cfg, double p_cw, bool armed);

struct ClassicalClick {
    bool fired = false;
    double delta_v_sense = 0.0;
};

ClassicalClick classical_click(const DetectorConfig& cfg, const OperatingPoint& op_off,
                               double p_during_gate, const ThermalState& thermal);

/// classical_click restricted to gates whose peak stays below breakdown; an
/// armed gate is decided by the Geiger route alone.
ClassicalClick linear_mode_click(const DetectorConfig& cfg, const OperatingPoint& op_off,
                                 double p_during_gate, const ThermalState& thermal);

SteadyState solve_steady_state(const DetectorConfig& cfg, double p_cw);

SweepPoint count_probability(const DetectorConfig& cfg, double p_cw);

SweepCurve sweep_power(const DetectorConfig& cfg, double p_min, double p_max, int points_per_decade);

/// Log-spaced grid with exact endpoints and at least `points_per_decade`
/// points per decade.
std::vector<double> log_power_grid(double p_min, double p_max, int points_per_decade);

/// Zero counts, not armed, and still no Geiger response with one extra photon
/// per gate.
bool detector_blind(const DetectorConfig& cfg, double p_cw);

/// Light reaching the detector during one gate.
struct GateIllumination {
    double p_cw = 0.0;    ///< continuous component, also present between gates
    double p_pulse = 0.0; ///< extra power confined to the gate
};

/// Sequential per-gate Monte Carlo. Owns its generator; the steady state is
/// recomputed whenever the CW component changes.
class GateSimulator {
public:
    GateSimulator(DetectorConfig cfg, std::uint64_t seed);

    ClickRecord step(const GateIllumination& light);

    const DetectorConfig& config() const { return cfg_; }
    const SteadyState& steady_state() const { return steady_; }

private:
    double uniform();

    DetectorConfig cfg_;
    std::mt19937_64 rng_;
    std::uint64_t gate_index_ = 0;
    bool have_steady_ = false;
    double steady_cw_ = 0.0;
    SteadyState steady_;
};

std::vector<ClickRecord> simulate_gates(const DetectorConfig& cfg,
                                        std::span<const GateIllumination> timeline,
                                        std::uint64_t n_gates, std::uint64_t seed);

void write_sweep_csv(std::ostream& os, const SweepCurve& curve);

}  // namespace blindsim
