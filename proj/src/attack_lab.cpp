#include "blindsim/attack_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "blindsim/detector_sim.hpp"
#include "blindsim/errors.hpp"

namespace blindsim {

double BlindingWindow::geometric_midpoint() const { return std::sqrt(p_min * p_max); }

double BlindingWindow::log10_width() const { return std::log10(p_max / p_min); }

namespace {

// Bisection in log power between a non-blind and a blind sample; returns the
// blind-side end once the bracket ratio is below `precision`.
double refine_edge(const DetectorConfig& cfg, double p_clear, double p_blind, double precision) {
    while (std::max(p_clear, p_blind) / std::min(p_clear, p_blind) > precision) {
        const double mid = std::sqrt(p_clear * p_blind);
        (detector_blind(cfg, mid) ? p_blind : p_clear) = mid;
    }
    return p_blind;
}

}  // namespace

std::optional<BlindingWindow> find_blinding_window(const DetectorConfig& cfg, double p_lo,
                                                   double p_hi, int points_per_decade,
                                                   double edge_precision) {
    if (points_per_decade < 25) {
        throw ParameterError("find_blinding_window: coarse scan needs >= 25 points per decade");
    }
    if (!(edge_precision > 1.0)) {
        throw ParameterError("find_blinding_window: edge precision must be > 1");
    }
    const std::vector<double> grid = log_power_grid(p_lo, p_hi, points_per_decade);
    std::size_t first = grid.size();
    std::size_t last = grid.size();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool blind = detector_blind(cfg, grid[i]);
        if (blind && first == grid.size()) {
            first = i;
        }
        if (first != grid.size()) {
            if (!blind) {
                break;
            }
            last = i;
        }
    }
    if (first == grid.size()) {
        return std::nullopt;
    }
    BlindingWindow w;
    w.p_min = first == 0 ? grid.front() : refine_edge(cfg, grid[first - 1], grid[first], edge_precision);
    w.p_max = last + 1 == grid.size() ? grid.back() : refine_edge(cfg, grid[last + 1], grid[last], edge_precision);
    if (w.p_max <= w.p_min) {
        // Single isolated blind sample: widen to the refined bracket around it.
        w.p_max = w.p_min * edge_precision;
    }
    return w;
}

const char* to_string(AttackMode m) {
    return m == AttackMode::thermal ? "thermal" : "cw_blind_faked_state";
}

void AttackScenario::validate(const DetectorConfig& cfg) const {
    if (!(p_blind >= 0.0 && p_trigger >= 0.0 && trigger_width >= 0.0)) {
        throw ParameterError("attack scenario powers and width must be >= 0");
    }
    if (trigger_width > cfg.gate_width) {
        throw ParameterError("trigger pulse must fit inside the gate");
    }
}

const char* to_string(TriggerStatus s) {
    switch (s) {
        case TriggerStatus::ok: return "ok";
        case TriggerStatus::not_blind: return "not_blind";
        case TriggerStatus::no_classical_threshold: return "no_classical_threshold";
        case TriggerStatus::no_gap: return "no_gap";
    }
    return "unknown";
}

TriggerDesign design_trigger_pulse(const DetectorConfig& cfg, double p_blind) {
    TriggerDesign out;
    if (!detector_blind(cfg, p_blind)) {
        out.status = TriggerStatus::not_blind;
        return out;
    }
    const SteadyState s = solve_steady_state(cfg, p_blind);
    auto clicks = [&](double p_pulse) {
        return classical_click(cfg, s.op, p_blind + p_pulse, s.thermal).fired;
    };

    constexpr double kMaxPulse = 10.0;
    double lo = 0.0;
    double hi = std::max(p_blind, 1e-12);
    while (!clicks(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > kMaxPulse) {
            out.status = TriggerStatus::no_classical_threshold;
            return out;
        }
    }
    while (hi - lo > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        (clicks(mid) ? hi : lo) = mid;
    }
    out.click_threshold = hi;

    // Any pulse in [threshold, 2 * threshold) clicks at full power and stays
    // silent at half power; take the geometric centre of that interval.
    const double p_t = std::sqrt(2.0) * hi;
    if (clicks(p_t) && !clicks(0.5 * p_t)) {
        out.p_trigger = p_t;
        out.status = TriggerStatus::ok;
    } else {
        out.status = TriggerStatus::no_gap;
    }
    return out;
}

std::optional<AttackScenario> design_faked_state_attack(const DetectorConfig& cfg) {
    const auto window = find_blinding_window(cfg);
    if (!window) {
        return std::nullopt;
    }
    const double p_blind = window->geometric_midpoint();
    const TriggerDesign t = design_trigger_pulse(cfg, p_blind);
    if (!t.p_trigger) {
        return std::nullopt;
    }
    return AttackScenario{p_blind, *t.p_trigger, cfg.gate_width, AttackMode::cw_blind_faked_state};
}

ThermalAttackReport assess_thermal_attack(const DetectorConfig& cfg, double p_cw) {
    const SteadyState s = solve_steady_state(cfg, p_cw);
    ThermalAttackReport r;
    r.p_cw = p_cw;
    r.p_heat = s.thermal.p_heat;
    r.t_junction = s.thermal.t_junction;
    r.v_b_effective = s.thermal.v_b_effective;
    r.count_prob = s.point.count_prob;
    r.still_counting = s.point.count_prob >= 0.99;
    r.blinded_thermally = detector_blind(cfg, p_cw);
    return r;
}

void write_window_report(std::ostream& os, const std::optional<BlindingWindow>& w) {
    if (!w) {
        os << "window: none\n";
        return;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "window: [%.6e, %.6e]\n", w->p_min, w->p_max);
    os << buf;
    std::snprintf(buf, sizeof buf, "p_min_w: %.6e\np_max_w: %.6e\nlog10_width: %.6f\n", w->p_min,
                  w->p_max, w->log10_width());
    os << buf;
}

void write_thermal_report(std::ostream& os, const ThermalAttackReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "p_cw_w: %.6e\np_heat_w: %.6e\nt_junction_k: %.6f\nv_b_effective_v: %.6f\n"
                  "count_prob: %.6f\nstill_counting: %s\nblinded_thermally: %s\n",
                  r.p_cw, r.p_heat, r.t_junction, r.v_b_effective, r.count_prob,
                  r.still_counting ? "true" : "false", r.blinded_thermally ? "true" : "false");
    os << buf;
}

}  // namespace blindsim
