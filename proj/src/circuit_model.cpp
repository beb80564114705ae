#include "blindsim/circuit_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "blindsim/errors.hpp"

namespace blindsim {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw ParameterError(std::string("invalid detector config: ") + what);
    }
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void DetectorConfig::validate() const {
    const double fields[] = {r_bias,          r_sense,       c_filter,     c_diode,
                             v_dc,            gate_amplitude, gate_width,  gate_rate,
                             v_breakdown_ref, t_ref,          beta_vb,     theta_thermal,
                             gain_exponent,   gain_cap,       unity_responsivity,
                             pde,             dark_prob,      dark_leakage, v_cap_transient,
                             discrimination_level, wavelength, t_ambient};
    for (double f : fields) {
        require(finite(f), "non-finite field");
    }
    require(r_bias >= 0.0, "r_bias must be >= 0");
    require(r_sense > 0.0, "r_sense must be > 0");
    require(c_filter >= 0.0, "c_filter must be >= 0");
    require(c_diode > 0.0, "c_diode must be > 0");
    require(gate_width > 0.0 && gate_rate > 0.0, "gate width and rate must be > 0");
    require(gate_width * gate_rate < 1.0, "gate duty cycle must be below 1");
    require(gate_amplitude > 0.0, "gate_amplitude must be > 0");
    require(v_dc > 0.0 && v_breakdown_ref > 0.0, "voltages must be > 0");
    require(t_ref > 0.0 && t_ambient > 0.0, "temperatures must be > 0 K");
    const double vb = breakdown_at_temperature(*this, t_ambient);
    require(v_dc < vb, "v_dc must be below breakdown (gated counting regime)");
    require(v_dc + gate_amplitude > vb, "gate peak must exceed breakdown (gated counting regime)");
    require(pde >= 0.0 && pde <= 1.0, "pde must be in [0, 1]");
    require(dark_prob >= 0.0 && dark_prob <= 1.0, "dark_prob must be in [0, 1]");
    require(discrimination_level > 0.0, "discrimination_level must be > 0");
    require(v_cap_transient >= 0.0, "v_cap_transient must be >= 0");
    require(gain_cap > 1.0, "gain_cap must be > 1");
    require(gain_exponent > 0.0, "gain_exponent must be > 0");
    require(unity_responsivity >= 0.0, "unity_responsivity must be >= 0");
    require(dark_leakage >= 0.0, "dark_leakage must be >= 0");
    require(theta_thermal >= 0.0, "theta_thermal must be >= 0");
    require(wavelength > 0.0, "wavelength must be > 0");
}

ThermalState ambient_thermal_state(const DetectorConfig& cfg) {
    return {cfg.t_ambient, breakdown_at_temperature(cfg, cfg.t_ambient), 0.0};
}

double multiplication_gain(double v, double v_b, const DetectorConfig& cfg) {
    if (!(v >= 0.0) || !(v_b > 0.0)) {
        throw ParameterError("multiplication_gain: requires v >= 0 and v_b > 0");
    }
    if (v >= v_b) {
        return cfg.gain_cap;
    }
    const double x = std::pow(v / v_b, cfg.gain_exponent);
    if (x >= 1.0) {
        return cfg.gain_cap;
    }
    return std::clamp(1.0 / (1.0 - x), 1.0, cfg.gain_cap);
}

double unity_photocurrent(double p_opt, const DetectorConfig& cfg) {
    if (!(p_opt >= 0.0)) {
        throw ParameterError("unity_photocurrent: optical power must be >= 0");
    }
    return cfg.unity_responsivity * p_opt;
}

double avalanche_charge(const DetectorConfig& cfg, double v_gate_peak, double v_b_eff) {
    return cfg.c_diode * std::max(0.0, v_gate_peak - v_b_eff);
}

namespace {

struct BiasCurrents {
    double gain;
    double i_photo;
    double i_avalanche;
    double total() const { return i_photo + i_avalanche; }
};

BiasCurrents bias_currents(const DetectorConfig& cfg, double i0, double click_prob, double v_b,
                           double v) {
    BiasCurrents c{};
    c.gain = multiplication_gain(v, v_b, cfg);
    c.i_photo = c.gain * i0;
    c.i_avalanche = click_prob * avalanche_charge(cfg, v + cfg.gate_amplitude, v_b) * cfg.gate_rate;
    return c;
}

void check_solver_inputs(double p_cw, double click_prob) {
    if (!(p_cw >= 0.0)) {
        throw ParameterError("optical power must be >= 0");
    }
    if (!(click_prob >= 0.0 && click_prob <= 1.0)) {
        throw ParameterError("click probability must be in [0, 1]");
    }
}

}  // namespace

double quiescent_mismatch(const DetectorConfig& cfg, double p_cw, double click_prob,
                          const ThermalState& thermal, double v) {
    const double i0 = unity_photocurrent(p_cw, cfg);
    const BiasCurrents c = bias_currents(cfg, i0, click_prob, thermal.v_b_effective, v);
    return v - cfg.v_dc + (c.total() + cfg.dark_leakage) * cfg.total_series_resistance();
}

OperatingPoint solve_quiescent_point(const DetectorConfig& cfg, double p_cw, double click_prob,
                                     const ThermalState& thermal) {
    check_solver_inputs(p_cw, click_prob);
    const double i0 = unity_photocurrent(p_cw, cfg);
    const double r_total = cfg.total_series_resistance();
    const double v_b = thermal.v_b_effective;
    const double tol = 1e-9 * cfg.v_dc;

    auto mismatch = [&](double v) {
        return v - cfg.v_dc + (bias_currents(cfg, i0, click_prob, v_b, v).total() + cfg.dark_leakage) * r_total;
    };

    double v = 0.0;
    const double g_lo = mismatch(0.0);
    const double g_hi = mismatch(cfg.v_dc);
    if (g_lo >= 0.0) {
        v = 0.0;  // drop exceeds the supply; bias node clamps at zero
    } else if (g_hi <= 0.0) {
        v = cfg.v_dc;
    } else {
        double lo = 0.0;
        double hi = cfg.v_dc;
        constexpr int kMaxIter = 2000;
        int iter = 0;
        for (; iter < kMaxIter; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;  // bracket at adjacent doubles
            }
            const double g = mismatch(mid);
            if (std::abs(g) <= tol) {
                lo = hi = mid;
                break;
            }
            (g > 0.0 ? hi : lo) = mid;
        }
        if (iter == kMaxIter) {
            throw NumericError("solve_quiescent_point: bisection did not converge",
                               std::abs(mismatch(0.5 * (lo + hi))));
        }
        v = std::abs(mismatch(lo)) <= std::abs(mismatch(hi)) ? lo : hi;
    }

    const BiasCurrents c = bias_currents(cfg, i0, click_prob, v_b, v);
    OperatingPoint op;
    op.v_apd = v;
    op.gain = c.gain;
    op.i_photo = c.i_photo;
    op.i_avalanche_avg = c.i_avalanche;
    op.i_total = c.total() + cfg.dark_leakage;
    op.geiger_armed = v + cfg.gate_amplitude > v_b;
    const double rhs = std::clamp(cfg.v_dc - op.i_total * r_total, 0.0, cfg.v_dc);
    op.residual = std::abs(v - rhs);
    return op;
}

double sense_pulse_amplitude(const DetectorConfig& cfg, const OperatingPoint& op_off,
                             double p_during_gate, const ThermalState& thermal) {
    const double v_gate_peak = op_off.v_apd + cfg.gate_amplitude;
    const double gain_on = multiplication_gain(v_gate_peak, thermal.v_b_effective, cfg);
    const double i_on = gain_on * unity_photocurrent(p_during_gate, cfg);
    return std::max(0.0, (i_on - op_off.i_photo) * cfg.r_sense);
}

double breakdown_at_temperature(const DetectorConfig& cfg, double t) {
    return cfg.v_breakdown_ref + cfg.beta_vb * (t - cfg.t_ref);
}

HeatedOperatingPoint solve_heated_point(const DetectorConfig& cfg, double p_cw, double click_prob) {
    check_solver_inputs(p_cw, click_prob);
    ThermalState th = ambient_thermal_state(cfg);
    OperatingPoint op = solve_quiescent_point(cfg, p_cw, click_prob, th);
    th.p_heat = op.i_total * op.v_apd;
    if (cfg.theta_thermal == 0.0) {
        return {op, th};
    }

    constexpr int kMaxIter = 10000;
    constexpr double kRelTol = 1e-10;
    // Start from the heating at ambient breakdown; weak coupling then
    // converges on the first pass. Plain iteration while the update shrinks,
    // halving the step whenever it stops shrinking.
    double t = cfg.t_ambient + cfg.theta_thermal * th.p_heat;
    double damping = 1.0;
    double last_step = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < kMaxIter; ++iter) {
        th.t_junction = t;
        th.v_b_effective = breakdown_at_temperature(cfg, t);
        op = solve_quiescent_point(cfg, p_cw, click_prob, th);
        th.p_heat = op.i_total * op.v_apd;
        const double t_next = cfg.t_ambient + cfg.theta_thermal * th.p_heat;
        const double step = std::abs(t_next - t);
        if (step <= kRelTol * t) {
            return {op, th};
        }
        if (step >= last_step) {
            damping = std::max(damping * 0.5, 1.0 / 64.0);
        }
        last_step = step;
        t += damping * (t_next - t);
    }
    throw NumericError("thermal_equilibrium: damped iteration did not converge",
                       std::abs(cfg.t_ambient + cfg.theta_thermal * th.p_heat - t) / t);
}

ThermalState thermal_equilibrium(const DetectorConfig& cfg, double p_cw, double click_prob) {
    return solve_heated_point(cfg, p_cw, click_prob).thermal;
}

}  // namespace blindsim
