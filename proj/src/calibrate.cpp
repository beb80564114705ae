#include "blindsim/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "blindsim/attack_lab.hpp"
#include "blindsim/detector_sim.hpp"

namespace blindsim {

const char* to_string(Observable o) {
    switch (o) {
        case Observable::blind_onset: return "blind_onset";
        case Observable::recovery: return "recovery";
        case Observable::blind_at: return "blind_at";
        case Observable::never_blind: return "never_blind";
    }
    return "unknown";
}

const char* to_string(Discrimination d) { return d == Discrimination::l0 ? "L0" : "2L0"; }

const char* to_string(FreeParam p) {
    switch (p) {
        case FreeParam::gain_exponent: return "gain_exponent";
        case FreeParam::unity_responsivity: return "unity_responsivity";
        case FreeParam::c_diode: return "c_diode";
        case FreeParam::v_breakdown_ref: return "v_breakdown_ref";
        case FreeParam::theta_thermal: return "theta_thermal";
    }
    return "unknown";
}

FreeParam parse_free_param(const std::string& name) {
    for (FreeParam p : {FreeParam::gain_exponent, FreeParam::unity_responsivity, FreeParam::c_diode,
                        FreeParam::v_breakdown_ref, FreeParam::theta_thermal}) {
        if (name == to_string(p)) {
            return p;
        }
    }
    throw UsageError("unknown calibration parameter '" + name + "'");
}

std::vector<CalibrationTarget> reference_targets() {
    constexpr double kClavisCap = 35e-3;
    return {
        {680e3, Observable::blind_onset, 22e-9, Discrimination::two_l0, std::nullopt},
        {330e3, Observable::blind_onset, 350e-9, Discrimination::two_l0, std::nullopt},
        {100e3, Observable::blind_onset, 2.4e-6, Discrimination::two_l0, std::nullopt},
        {680e3, Observable::recovery, 20e-6, Discrimination::two_l0, std::nullopt},
        {1e3, Observable::blind_at, 260e-6, Discrimination::two_l0, kClavisCap},
        {1e3, Observable::never_blind, 0.0, Discrimination::l0, kClavisCap},
    };
}

DetectorConfig target_config(const DetectorConfig& base, const CalibrationTarget& t) {
    DetectorConfig c = base;
    c.r_bias = t.r_bias;
    if (t.v_cap_transient) {
        c.v_cap_transient = *t.v_cap_transient;
    }
    return with_discrimination_multiple(c, t.discrimination == Discrimination::l0 ? 1.0 : 2.0);
}

namespace {

// Residual charged when the observable does not exist (no window where one is
// expected, or a window where none may be): a factor-1000 miss.
const double kMissingPenalty = std::log(1000.0);

void check_targets(std::span<const CalibrationTarget> targets) {
    if (targets.empty()) {
        throw UsageError("calibrate: no targets");
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        if (t.observable != Observable::never_blind && !(t.power > 0.0)) {
            throw UsageError("calibrate: target power must be > 0");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (targets[j] == t) {
                throw UsageError("calibrate: duplicate target");
            }
        }
    }
}

TargetResidual residual_for(const CalibrationTarget& t, const std::optional<BlindingWindow>& w) {
    TargetResidual r;
    r.target = t;
    switch (t.observable) {
        case Observable::never_blind:
            r.ratio = 1.0;
            if (w) {
                r.achieved = w->p_min;
                r.log_error = kMissingPenalty;
            }
            return r;
        case Observable::blind_onset:
        case Observable::recovery:
            if (!w) {
                r.log_error = kMissingPenalty;
                return r;
            }
            r.achieved = t.observable == Observable::blind_onset ? w->p_min : w->p_max;
            r.ratio = *r.achieved / t.power;
            r.log_error = std::log(r.ratio);
            return r;
        case Observable::blind_at:
            if (!w) {
                r.log_error = kMissingPenalty;
                return r;
            }
            // Distance from the target power to the window; zero inside.
            if (t.power < w->p_min) {
                r.achieved = w->p_min;
            } else if (t.power > w->p_max) {
                r.achieved = w->p_max;
            } else {
                r.achieved = t.power;
            }
            r.ratio = *r.achieved / t.power;
            r.log_error = std::log(r.ratio);
            return r;
    }
    return r;
}

double objective_of(std::span<const TargetResidual> rs) {
    double f = 0.0;
    for (const auto& r : rs) {
        f += r.log_error * r.log_error;
    }
    return f;
}

struct Axis {
    FreeParam param;
    bool logarithmic;
    double lo;
    double hi;
    double step;  ///< initial simplex edge in search coordinates
};

Axis axis_for(FreeParam p) {
    switch (p) {
        case FreeParam::gain_exponent: return {p, true, 1.0, 4.0, 0.3};
        case FreeParam::unity_responsivity: return {p, true, 1.0, 1000.0, 0.5};
        case FreeParam::c_diode: return {p, true, 1e-13, 1e-11, 0.5};
        case FreeParam::v_breakdown_ref: return {p, false, 40.0, 70.0, 2.0};
        case FreeParam::theta_thermal: return {p, true, 1.0, 1000.0, 0.5};
    }
    return {p, true, 1.0, 1.0, 0.1};
}

double to_search(const Axis& a, double v) { return a.logarithmic ? std::log(v) : v; }
double from_search(const Axis& a, double x) { return a.logarithmic ? std::exp(x) : x; }

class Problem {
public:
    Problem(std::span<const CalibrationTarget> targets, std::span<const FreeParam> params,
            const DetectorConfig& base, const CalibrationOptions& opt)
        : targets_(targets), base_(base), opt_(opt) {
        for (FreeParam p : params) {
            axes_.push_back(axis_for(p));
        }
    }

    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t i) const { return axes_[i]; }

    DetectorConfig config_at(const std::vector<double>& x) const {
        DetectorConfig c = base_;
        for (std::size_t i = 0; i < axes_.size(); ++i) {
            const double v = from_search(axes_[i], x[i]);
            switch (axes_[i].param) {
                case FreeParam::gain_exponent: c.gain_exponent = v; break;
                case FreeParam::unity_responsivity: c.unity_responsivity = v; break;
                case FreeParam::c_diode: c.c_diode = v; break;
                case FreeParam::v_breakdown_ref:
                    // Keep the excess bias: shift the DC bias with the breakdown.
                    c.v_dc += v - c.v_breakdown_ref;
                    c.v_breakdown_ref = v;
                    break;
                case FreeParam::theta_thermal: c.theta_thermal = v; break;
            }
        }
        return c;
    }

    double operator()(const std::vector<double>& x) {
        ++evaluations;
        try {
            const DetectorConfig c = config_at(x);
            c.validate();
            return objective_of(evaluate_targets(targets_, c, opt_));
        } catch (const std::exception&) {
            // Outside the valid or solvable domain.
            return std::numeric_limits<double>::max();
        }
    }

    int evaluations = 0;

private:
    std::span<const CalibrationTarget> targets_;
    DetectorConfig base_;
    CalibrationOptions opt_;
    std::vector<Axis> axes_;
};

struct Vertex {
    std::vector<double> x;
    double f;
};

struct SearchOutcome {
    Vertex best;
    bool converged;
};

SearchOutcome nelder_mead(Problem& fn, std::vector<double> x0, double f0, const CalibrationOptions& opt) {
    const std::size_t n = x0.size();
    std::vector<Vertex> s{{x0, f0}};
    for (std::size_t i = 0; i < n; ++i) {
        auto x = x0;
        x[i] += fn.axis(i).step;
        s.push_back({x, fn(x)});
    }
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                d = std::max(d, std::abs(s[v].x[i] - s[0].x[i]));
            }
        }
        return d;
    };
    const int budget_end = fn.evaluations + opt.max_evaluations;
    while (true) {
        std::stable_sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
        if (diameter() < opt.x_tolerance) {
            return {s[0], true};
        }
        if (fn.evaluations >= budget_end) {
            return {s[0], false};
        }
        std::vector<double> c(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                c[i] += s[v].x[i] / static_cast<double>(n);
            }
        }
        auto along = [&](double t) {
            std::vector<double> y(n);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = c[i] + t * (s[n].x[i] - c[i]);
            }
            return y;
        };
        Vertex r{along(-1.0), 0.0};
        r.f = fn(r.x);
        if (r.f < s[0].f) {
            Vertex e{along(-2.0), 0.0};
            e.f = fn(e.x);
            s[n] = e.f < r.f ? e : r;
            continue;
        }
        if (r.f < s[n - 1].f) {
            s[n] = r;
            continue;
        }
        Vertex k{along(r.f < s[n].f ? -0.5 : 0.5), 0.0};
        k.f = fn(k.x);
        if (k.f < std::min(r.f, s[n].f)) {
            s[n] = k;
            continue;
        }
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                s[v].x[i] = s[0].x[i] + 0.5 * (s[v].x[i] - s[0].x[i]);
            }
            s[v].f = fn(s[v].x);
        }
    }
}

}  // namespace

std::vector<TargetResidual> evaluate_targets(std::span<const CalibrationTarget> targets,
                                             const DetectorConfig& cfg, const CalibrationOptions& opt) {
    check_targets(targets);
    std::vector<std::pair<DetectorConfig, std::optional<BlindingWindow>>> cache;
    std::vector<TargetResidual> out;
    for (const auto& t : targets) {
        const DetectorConfig c = target_config(cfg, t);
        auto it = std::find_if(cache.begin(), cache.end(), [&](const auto& e) { return e.first == c; });
        if (it == cache.end()) {
            cache.emplace_back(c, find_blinding_window(c, kScanPowerMin, kScanPowerMax,
                                                       opt.points_per_decade, opt.edge_precision));
            it = cache.end() - 1;
        }
        out.push_back(residual_for(t, it->second));
    }
    return out;
}

CalibrationResult calibrate(std::span<const CalibrationTarget> targets,
                            std::span<const FreeParam> free_params, const DetectorConfig& base,
                            const CalibrationOptions& opt) {
    check_targets(targets);
    if (free_params.empty()) {
        throw UsageError("calibrate: no free parameters");
    }
    for (std::size_t i = 0; i < free_params.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (free_params[i] == free_params[j]) {
                throw UsageError("calibrate: duplicate free parameter");
            }
        }
    }
    if (opt.grid_per_axis < 1 || opt.restarts < 1 || opt.max_evaluations < 1) {
        throw UsageError("calibrate: grid, restarts and evaluation budget must be >= 1");
    }
    base.validate();

    Problem fn(targets, free_params, base, opt);
    const std::size_t n = fn.dim();

    // Multi-start grid: grid_per_axis points per axis spanning each range.
    std::vector<Vertex> starts;
    std::vector<int> idx(n, 0);
    while (true) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Axis& a = fn.axis(i);
            const double lo = to_search(a, a.lo);
            const double hi = to_search(a, a.hi);
            const double t = opt.grid_per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (opt.grid_per_axis - 1);
            x[i] = lo + t * (hi - lo);
        }
        starts.push_back({x, fn(x)});
        std::size_t k = 0;
        while (k < n && ++idx[k] == opt.grid_per_axis) {
            idx[k++] = 0;
        }
        if (k == n) {
            break;
        }
    }
    std::stable_sort(starts.begin(), starts.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

    SearchOutcome best{starts.front(), false};
    bool have = false;
    const auto restarts = std::min<std::size_t>(static_cast<std::size_t>(opt.restarts), starts.size());
    for (std::size_t r = 0; r < restarts; ++r) {
        const SearchOutcome o = nelder_mead(fn, starts[r].x, starts[r].f, opt);
        if (!have || o.best.f < best.best.f) {
            best = o;
            have = true;
        }
    }

    CalibrationResult result;
    result.fitted = fn.config_at(best.best.x);
    result.evaluations = fn.evaluations;
    result.converged = best.converged;
    result.residuals = evaluate_targets(targets, result.fitted, opt);
    result.objective = objective_of(result.residuals);
    if (!result.converged) {
        throw CalibrationFailure("calibrate: Nelder-Mead did not converge within the evaluation budget",
                                 std::move(result));
    }
    return result;
}

void write_calibration_report(std::ostream& os, const CalibrationResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "objective: %.6e\nevaluations: %d\nconverged: %s\n", r.objective,
                  r.evaluations, r.converged ? "true" : "false");
    os << buf;
    std::snprintf(buf, sizeof buf, "gain_exponent: %.17g\nunity_responsivity: %.17g\nc_diode: %.17g\n"
                  "v_breakdown_ref: %.17g\ntheta_thermal: %.17g\n",
                  r.fitted.gain_exponent, r.fitted.unity_responsivity, r.fitted.c_diode,
                  r.fitted.v_breakdown_ref, r.fitted.theta_thermal);
    os << buf;
    os << "target,r_bias_ohm,discrimination,target_w,achieved_w,ratio\n";
    for (const auto& t : r.residuals) {
        char achieved[32] = "none";
        if (t.achieved) {
            std::snprintf(achieved, sizeof achieved, "%.6e", *t.achieved);
        }
        std::snprintf(buf, sizeof buf, "%s,%.6g,%s,%.6e,%s,%.6f\n", to_string(t.target.observable),
                      t.target.r_bias, to_string(t.target.discrimination), t.target.power, achieved,
                      t.ratio);
        os << buf;
    }
}

}  // namespace blindsim
