// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blindsim/attack_lab.hpp"
#include "blindsim/calibrate.hpp"
#include "blindsim/config_io.hpp"
#include "blindsim/detector_sim.hpp"
#include "blindsim/qkd_harness.hpp"

using namespace blindsim;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within_factor(double x, double ref, double f) { return x >= ref / f && x <= ref * f; }

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string window_str(const std::optional<BlindingWindow>& w) {
    return w ? fmt("[%.3g, %.3g] W", w->p_min, w->p_max) : std::string("none");
}

// Preset with the gain law replaced by a fitted one.
DetectorConfig fitted_preset(const char* name, const DetectorConfig& fit) {
    DetectorConfig c = *find_preset(name);
    c.gain_exponent = fit.gain_exponent;
    c.unity_responsivity = fit.unity_responsivity;
    return c;
}

}  // namespace

int main() {
    // 1: calibrate from the uncalibrated gain law, then locate the windows.
    auto t0 = Clock::now();
    DetectorConfig start = calibrated_base();
    start.gain_exponent = 1.0;
    start.unity_responsivity = 1.0;
    const auto targets = reference_targets();
    const std::vector<FreeParam> free{FreeParam::gain_exponent, FreeParam::unity_responsivity};
    std::optional<CalibrationResult> fit;
    std::string cal_error;
    try {
        fit = calibrate(targets, free, start);
    } catch (const std::exception& e) {
        cal_error = e.what();
    }
    if (!fit) {
        report(1, "calibrated blinding thresholds", false, "calibration failed: " + cal_error);
        std::printf("remaining criteria need a calibrated detector; aborting\n");
        return 1;
    }
    const DetectorConfig& g = fit->fitted;
    const DetectorConfig c680 = fitted_preset("paper-680k", g);
    const DetectorConfig c330 = fitted_preset("paper-330k", g);
    const DetectorConfig c100 = fitted_preset("paper-100k", g);
    const DetectorConfig c1k2 = fitted_preset("clavis2-like-2L0", g);
    const DetectorConfig c1k1 = fitted_preset("clavis2-like-L0", g);
    const DetectorConfig czero = fitted_preset("zero-rbias", g);
    const auto w680 = find_blinding_window(c680);
    const auto w330 = find_blinding_window(c330);
    const auto w100 = find_blinding_window(c100);
    const auto w1k2 = find_blinding_window(c1k2);
    const double t1 = seconds_since(t0);
    {
        const bool onsets = w680 && w330 && w100 && within_factor(w680->p_min, 22e-9, 3.0) &&
                            within_factor(w330->p_min, 350e-9, 3.0) && within_factor(w100->p_min, 2.4e-6, 3.0);
        const bool at260 = w1k2 && w1k2->p_min <= 3.0 * 260e-6 && w1k2->p_max >= 260e-6 / 3.0;
        const bool pass = onsets && at260 && t1 < 60.0;
        report(1, "calibrated blinding thresholds", pass,
               fmt("n=%.4f R0=%.4g A/W; onset 680k %.3g W (x%.2f), 330k %.3g W (x%.2f), 100k %.3g W (x%.2f); "
                   "1k/2L0 window %s vs 260 uW; %.1f s (limit 60 s)",
                   g.gain_exponent, g.unity_responsivity, w680 ? w680->p_min : 0.0,
                   w680 ? w680->p_min / 22e-9 : 0.0, w330 ? w330->p_min : 0.0, w330 ? w330->p_min / 350e-9 : 0.0,
                   w100 ? w100->p_min : 0.0, w100 ? w100->p_min / 2.4e-6 : 0.0, window_str(w1k2).c_str(), t1));
    }

    // 2: ordering across r_bias.
    {
        const bool pass = w680 && w330 && w100 && w100->p_min > w330->p_min && w330->p_min > w680->p_min &&
                          w100->log10_width() < w330->log10_width() && w330->log10_width() < w680->log10_width();
        report(2, "threshold ordering", pass,
               w680 && w330 && w100
                   ? fmt("onset 100k %.3g > 330k %.3g > 680k %.3g W; log10 width 100k %.3f < 330k %.3f < 680k %.3f",
                         w100->p_min, w330->p_min, w680->p_min, w100->log10_width(), w330->log10_width(),
                         w680->log10_width())
                   : std::string("missing window"));
    }

    // 3: recovery near 20 uW whatever r_bias.
    {
        bool pass = w680 && w330 && w100;
        std::string detail = "missing window";
        if (pass) {
            const double hi = std::max({w680->p_max, w330->p_max, w100->p_max});
            const double lo = std::min({w680->p_max, w330->p_max, w100->p_max});
            pass = within_factor(w680->p_max, 20e-6, 3.0) && within_factor(w330->p_max, 20e-6, 3.0) &&
                   within_factor(w100->p_max, 20e-6, 3.0) && hi / lo <= 3.0;
            detail = fmt("upper edges 680k %.3g, 330k %.3g, 100k %.3g W; spread x%.3f", w680->p_max,
                         w330->p_max, w100->p_max, hi / lo);
        }
        report(3, "recovery universality", pass, detail);
    }

    // 4: immunity.
    {
        const auto wz = find_blinding_window(czero, 1e-12, 100e-3);
        const auto wl0 = find_blinding_window(c1k1, 1e-12, 100e-3);
        report(4, "immunity cases", !wz && !wl0,
               "zero-rbias window " + window_str(wz) + "; 1k/L0 window " + window_str(wl0) + " (1 pW - 100 mW)");
    }

    // 5: thermal attack at 17.8 mW.
    {
        t0 = Clock::now();
        const ThermalAttackReport r = assess_thermal_attack(c1k1, 17.8e-3);
        const double t5 = seconds_since(t0);
        const bool heat = within_factor(r.p_heat, 500e-3, 2.0);
        report(5, "thermal attack", r.still_counting && !r.blinded_thermally && heat && t5 < 5.0,
               fmt("clavis2-like-L0: still_counting=%s blinded_thermally=%s count_prob=%.3f; "
                   "p_heat=%.3g W (target 0.5 W within x2: %s); T_j=%.2f K; %.2f s (limit 5 s)",
                   r.still_counting ? "true" : "false", r.blinded_thermally ? "true" : "false", r.count_prob,
                   r.p_heat, heat ? "yes" : "no", r.t_junction, t5));
    }

    // 6: faked-state attack on the vulnerable detector.
    const auto scenario = design_faked_state_attack(c680);
    {
        t0 = Clock::now();
        bool pass = scenario.has_value();
        std::string detail = "no attack could be designed";
        if (scenario) {
            const EveStrategy eve{*scenario};
            const SessionStats bare = run_bb84({}, {c680, c680}, 100000, eve, std::nullopt, 1);
            const SessionStats watched =
                run_bb84({}, {c680, c680}, 100000, eve, MonitorConfig::defaults_for(c680), 1);
            const double t6 = seconds_since(t0);
            const Verdict v = summarize_session(watched);
            pass = bare.qber < 0.01 && bare.eve_information > 0.99 && watched.alarms > 0 &&
                   v.label() == "attack_detected" && t6 < 120.0;
            detail = fmt("p_blind=%.3g W p_trigger=%.3g W; no monitor: qber=%.4f eve_info=%.4f sifted=%llu; "
                         "monitor: alarms=%llu verdict=%s; %.2f s (limit 120 s)",
                         scenario->p_blind, scenario->p_trigger, bare.qber, bare.eve_information,
                         static_cast<unsigned long long>(bare.sifted_length),
                         static_cast<unsigned long long>(watched.alarms), v.label().c_str(), t6);
        }
        report(6, "QKD attack reproduction", pass, detail);
    }

    // 7: the same Eve against the L0 detector.
    {
        bool pass = scenario.has_value();
        std::string detail = "no attack could be designed";
        if (scenario) {
            const SessionStats s = run_bb84({}, {c1k1, c1k1}, 100000, EveStrategy{*scenario}, std::nullopt, 1);
            const Verdict v = summarize_session(s);
            pass = (s.always_click_rate > 0.5 || s.double_click_rate > 0.25) && v.label() == "attack_detected";
            detail = fmt("clavis2-like-L0: always_click=%.4f double_click=%.4f qber=%.4f eve_info=%.4f verdict=%s",
                         s.always_click_rate, s.double_click_rate, s.qber, s.eve_information, v.label().c_str());
        }
        report(7, "QKD attack failure", pass, detail);
    }

    // 8: property suites (the doctest binaries built alongside).
    {
        t0 = Clock::now();
        const std::vector<std::string> suites{BLINDSIM_SUITES};
        int passed = 0;
        std::string failed;
        for (const auto& s : suites) {
            const int status = std::system((s + " > /dev/null 2>&1").c_str());
            if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
                ++passed;
            } else {
                failed += " " + s.substr(s.find_last_of('/') + 1);
            }
        }
        const double t8 = seconds_since(t0);
        report(8, "property suites", passed == static_cast<int>(suites.size()) && t8 < 600.0,
               fmt("%d/%zu suites passed%s%s; %.1f s (limit 600 s)", passed, suites.size(),
                   failed.empty() ? "" : "; failed:", failed.c_str(), t8));
    }

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
