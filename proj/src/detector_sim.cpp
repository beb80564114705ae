#include "blindsim/detector_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "blindsim/errors.hpp"

namespace blindsim {

DetectorConfig with_discrimination_multiple(DetectorConfig cfg, double multiple) {
    cfg.discrimination_level = multiple * discrimination_floor(cfg);
    return cfg;
}

const char* to_string(ClickMechanism m) {
    switch (m) {
        case ClickMechanism::geiger: return "geiger";
        case ClickMechanism::classical: return "classical";
        case ClickMechanism::none: break;
    }
    return "none";
}

double photons_per_gate(const DetectorConfig& cfg, double p_during_gate) {
    return p_during_gate * cfg.gate_width / photon_energy(cfg.wavelength);
}

double power_for_photons_per_gate(const DetectorConfig& cfg, double mean_photons) {
    return mean_photons * photon_energy(cfg.wavelength) / cfg.gate_width;
}

double geiger_click_probability(const DetectorConfig& cfg, double p_cw, bool armed) {
    if (!(p_cw >= 0.0)) {
        throw ParameterError("geiger_click_probability: optical power must be >= 0");
    }
    if (!armed) {
        return 0.0;
    }
    const double mu = photons_per_gate(cfg, p_cw);
    return 1.0 - (1.0 - cfg.dark_prob) * std::exp(-cfg.pde * mu);
}

ClassicalClick classical_click(const DetectorConfig& cfg, const OperatingPoint& op_off,
                               double p_during_gate, const ThermalState& thermal) {
    ClassicalClick c;
    c.delta_v_sense = sense_pulse_amplitude(cfg, op_off, p_during_gate, thermal);
    c.fired = cfg.v_cap_transient + c.delta_v_sense > cfg.discrimination_level;
    return c;
}

ClassicalClick linear_mode_click(const DetectorConfig& cfg, const OperatingPoint& op_off,
                                 double p_during_gate, const ThermalState& thermal) {
    if (op_off.geiger_armed) {
        // Above breakdown the gain law is clamped and the Geiger route owns the gate.
        return {};
    }
    return classical_click(cfg, op_off, p_during_gate, thermal);
}

SteadyState solve_steady_state(const DetectorConfig& cfg, double p_cw) {
    if (!(p_cw >= 0.0)) {
        throw ParameterError("count_probability: optical power must be >= 0");
    }
    constexpr int kMaxIter = 1000;
    constexpr double kTol = 1e-6;
    constexpr double kDamping = 0.5;

    // Start fully clicking: the detector enters the attack from normal operation.
    double p = 1.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        const HeatedOperatingPoint hp = solve_heated_point(cfg, p_cw, p);
        const double g = geiger_click_probability(cfg, p_cw, hp.op.geiger_armed);
        const ClassicalClick cl = linear_mode_click(cfg, hp.op, p_cw, hp.thermal);
        const double p_next = std::max(g, cl.fired ? 1.0 : 0.0);
        if (std::abs(p_next - p) <= kTol) {
            SteadyState s;
            s.op = hp.op;
            s.thermal = hp.thermal;
            s.point.p_cw = p_cw;
            s.point.count_prob = p_next;
            s.point.geiger_component = g;
            s.point.classical_component = cl.fired ? 1 : 0;
            s.point.geiger_armed = hp.op.geiger_armed;
            s.point.blinded = p_next == 0.0 && !hp.op.geiger_armed;
            s.point.v_apd_off = hp.op.v_apd;
            s.point.i_avg = hp.op.i_total;
            return s;
        }
        p = kDamping * p + (1.0 - kDamping) * p_next;
    }
    std::ostringstream msg;
    msg << "count_probability: click-rate fixed point did not converge at p_cw=" << p_cw << " W";
    throw NumericError(msg.str(), p);
}

SweepPoint count_probability(const DetectorConfig& cfg, double p_cw) {
    return solve_steady_state(cfg, p_cw).point;
}

std::vector<double> log_power_grid(double p_min, double p_max, int points_per_decade) {
    if (!(p_min > 0.0 && p_max > p_min) || points_per_decade < 1) {
        throw ParameterError("power sweep requires 0 < p_min < p_max and points_per_decade >= 1");
    }
    const double decades = std::log10(p_max / p_min);
    const auto n = static_cast<int>(std::ceil(decades * points_per_decade - 1e-9));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        grid.push_back(i == n ? p_max : p_min * std::pow(p_max / p_min, static_cast<double>(i) / n));
    }
    return grid;
}

SweepCurve sweep_power(const DetectorConfig& cfg, double p_min, double p_max, int points_per_decade) {
    SweepCurve curve;
    curve.config = cfg;
    for (double p : log_power_grid(p_min, p_max, points_per_decade)) {
        curve.points.push_back(count_probability(cfg, p));
    }
    return curve;
}

bool detector_blind(const DetectorConfig& cfg, double p_cw) {
    const SweepPoint sp = count_probability(cfg, p_cw);
    if (sp.count_prob != 0.0 || sp.geiger_armed) {
        return false;
    }
    const double one_photon = power_for_photons_per_gate(cfg, 1.0);
    return geiger_click_probability(cfg, p_cw + one_photon, sp.geiger_armed) == 0.0;
}

GateSimulator::GateSimulator(DetectorConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.validate();
}

double GateSimulator::uniform() {
    // 53 random mantissa bits; identical on every standard library.
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

ClickRecord GateSimulator::step(const GateIllumination& light) {
    if (!(light.p_cw >= 0.0) || !(light.p_pulse >= 0.0)) {
        throw ParameterError("gate illumination must be >= 0");
    }
    if (!have_steady_ || light.p_cw != steady_cw_) {
        steady_ = solve_steady_state(cfg_, light.p_cw);
        steady_cw_ = light.p_cw;
        have_steady_ = true;
    }
    const OperatingPoint& op = steady_.op;
    const double p_gate = light.p_cw + light.p_pulse;

    ClickRecord rec;
    rec.gate_index = gate_index_++;
    rec.v_gate_peak = op.v_apd + cfg_.gate_amplitude;
    rec.i_avg = op.i_total;
    rec.i_inter_gate = op.i_photo + cfg_.dark_leakage;

    const double pg = geiger_click_probability(cfg_, p_gate, op.geiger_armed);
    const double u = uniform();  // drawn every gate so the stream does not depend on the light
    const ClassicalClick cl = linear_mode_click(cfg_, op, p_gate, steady_.thermal);
    rec.delta_v_sense = cl.delta_v_sense;
    if (u < pg) {
        rec.clicked = true;
        rec.mechanism = ClickMechanism::geiger;
    } else if (cl.fired) {
        rec.clicked = true;
        rec.mechanism = ClickMechanism::classical;
    }
    return rec;
}

std::vector<ClickRecord> simulate_gates(const DetectorConfig& cfg,
                                        std::span<const GateIllumination> timeline,
                                        std::uint64_t n_gates, std::uint64_t seed) {
    if (n_gates < 1) {
        throw ParameterError("simulate_gates: n_gates must be >= 1");
    }
    if (timeline.size() < n_gates) {
        throw ParameterError("simulate_gates: timeline shorter than n_gates");
    }
    GateSimulator sim(cfg, seed);
    std::vector<ClickRecord> out;
    out.reserve(n_gates);
    for (std::uint64_t i = 0; i < n_gates; ++i) {
        out.push_back(sim.step(timeline[i]));
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const SweepCurve& curve) {
    os << "power_w,count_prob,geiger_component,classical_component,blinded,v_apd_off,i_avg_a\n";
    char buf[256];
    for (const SweepPoint& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%.6e,%.10g,%.10g,%d,%d,%.10g,%.10g\n", p.p_cw,
                      p.count_prob, p.geiger_component, p.classical_component, p.blinded ? 1 : 0,
                      p.v_apd_off, p.i_avg);
        os << buf;
    }
}

}  // namespace blindsim
