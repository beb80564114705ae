#pragma once

// Fit selected DetectorConfig parameters so the simulated blinding windows
// reproduce measured threshold powers. Objective: sum of squared natural-log
// ratios between simulated and target powers, minimised by Nelder-Mead from
// the best points of a fixed multi-start grid.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blindsim/circuit_model.hpp"
#include "blindsim/errors.hpp"

namespace blindsim {

enum class Observable { blind_onset, recovery, blind_at, never_blind };
enum class Discrimination { l0, two_l0 };

const char* to_string(Observable o);
const char* to_string(Discrimination d);

struct CalibrationTarget {
    double r_bias = 0.0;
    Observable observable = Observable::blind_onset;
    double power = 0.0;  ///< [W]; ignored for never_blind
    Discrimination discrimination = Discrimination::two_l0;
    /// Overrides the base capacitive transient (detectors of another make).
    std::optional<double> v_cap_transient;

    friend bool operator==(const CalibrationTarget&, const CalibrationTarget&) = default;
};

enum class FreeParam { gain_exponent, unity_responsivity, c_diode, v_breakdown_ref, theta_thermal };

const char* to_string(FreeParam p);
FreeParam parse_free_param(const std::string& name);

/// The six published data points: three onsets, the common recovery power,
/// the 1 kOhm / 2L0 blind point and the 1 kOhm / L0 immunity.
std::vector<CalibrationTarget> reference_targets();

/// Detector the target refers to: base with r_bias, L and transient applied.
DetectorConfig target_config(const DetectorConfig& base, const CalibrationTarget& t);

struct CalibrationOptions {
    int points_per_decade = 25;
    double edge_precision = 1.002;
    int grid_per_axis = 4;
    int restarts = 2;           ///< best grid points refined by Nelder-Mead
    int max_evaluations = 400;  ///< per restart
    double x_tolerance = 1e-4;  ///< simplex diameter in log-parameter space
};

struct TargetResidual {
    CalibrationTarget target;
    std::optional<double> achieved;  ///< simulated power; empty if no window
    double ratio = 0.0;              ///< achieved / target (1 when satisfied for set-type targets)
    double log_error = 0.0;          ///< signed residual entering the objective
};

struct CalibrationResult {
    DetectorConfig fitted;
    double objective = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<TargetResidual> residuals;
};

/// Nelder-Mead ran out of evaluations; carries the best point found.
class CalibrationFailure : public NumericError {
public:
    CalibrationFailure(const std::string& what, CalibrationResult best)
        : NumericError(what, best.objective), best_(std::move(best)) {}
    const CalibrationResult& best() const noexcept { return best_; }

private:
    CalibrationResult best_;
};

/// Residuals of `cfg` against the targets without fitting anything.
std::vector<TargetResidual> evaluate_targets(std::span<const CalibrationTarget> targets,
                                             const DetectorConfig& cfg,
                                             const CalibrationOptions& opt = {});

/// Throws UsageError for an empty or duplicated target list or no free
/// parameters, CalibrationFailure if no restart converges.
CalibrationResult calibrate(std::span<const CalibrationTarget> targets,
                            std::span<const FreeParam> free_params, const DetectorConfig& base,
                            const CalibrationOptions& opt = {});

void write_calibration_report(std::ostream& os, const CalibrationResult& r);

}  // namespace blindsim
