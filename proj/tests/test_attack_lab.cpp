#include <cmath>
#include <sstream>

#include "blindsim/attack_lab.hpp"
#include "blindsim/config_io.hpp"
#include "blindsim/detector_sim.hpp"
#include "blindsim/errors.hpp"
#include "doctest.h"

using namespace blindsim;

namespace {

bool within_factor(double x, double ref, double f) { return x >= ref / f && x <= ref * f; }

}  // namespace

TEST_CASE("680k 2L0 window spans the published threshold and recovery") {
    const auto w = find_blinding_window(*find_preset("paper-680k"));
    REQUIRE(w);
    CHECK(within_factor(w->p_min, 22e-9, 3.0));
    CHECK(within_factor(w->p_max, 20e-6, 3.0));
    CHECK(w->geometric_midpoint() == doctest::Approx(std::sqrt(w->p_min * w->p_max)));
}

TEST_CASE("window edges are resolved to the requested precision") {
    const DetectorConfig c = *find_preset("paper-330k");
    const auto w = find_blinding_window(c);
    REQUIRE(w);
    CHECK(detector_blind(c, w->p_min));
    CHECK(detector_blind(c, w->p_max));
    CHECK_FALSE(detector_blind(c, w->p_min / 1.01));
    CHECK_FALSE(detector_blind(c, w->p_max * 1.01));
}

TEST_CASE("no window without r_bias or at L0 on the 1k detector") {
    CHECK_FALSE(find_blinding_window(*find_preset("zero-rbias")));
    CHECK_FALSE(find_blinding_window(*find_preset("clavis2-like-L0")));
    std::ostringstream os;
    write_window_report(os, std::nullopt);
    CHECK(os.str() == "window: none\n");
}

TEST_CASE("onset falls and the window widens as r_bias grows") {
    const auto w100 = find_blinding_window(*find_preset("paper-100k"));
    const auto w330 = find_blinding_window(*find_preset("paper-330k"));
    const auto w680 = find_blinding_window(*find_preset("paper-680k"));
    REQUIRE(w100);
    REQUIRE(w330);
    REQUIRE(w680);
    CHECK(w100->p_min > w330->p_min);
    CHECK(w330->p_min > w680->p_min);
    CHECK(w100->log10_width() < w330->log10_width());
    CHECK(w330->log10_width() < w680->log10_width());
}

TEST_CASE("window search validates its inputs") {
    const DetectorConfig c = *find_preset("paper-680k");
    CHECK_THROWS_AS(find_blinding_window(c, 1e-12, 0.1, 10), ParameterError);
    CHECK_THROWS_AS(find_blinding_window(c, 1e-3, 1e-6), ParameterError);
    CHECK_THROWS_AS(find_blinding_window(c, 1e-12, 0.1, 25, 1.0), ParameterError);
}

TEST_CASE("faked-state trigger at 1 uW on 680k, checked against a power-grid scan") {
    const DetectorConfig c = *find_preset("paper-680k");
    const double p_blind = 1e-6;
    const TriggerDesign t = design_trigger_pulse(c, p_blind);
    REQUIRE(t.status == TriggerStatus::ok);
    REQUIRE(t.p_trigger);

    const SteadyState s = solve_steady_state(c, p_blind);
    auto clicks = [&](double pulse) { return classical_click(c, s.op, p_blind + pulse, s.thermal).fired; };
    CHECK(clicks(*t.p_trigger));
    CHECK_FALSE(clicks(0.5 * *t.p_trigger));

    // Exhaustive scan, 200 points per decade from 1 fW to 1 W: the first
    // clicking pulse must bracket the designed threshold, and everything above
    // it must click (single threshold).
    double first = 0.0;
    for (int i = 0; i <= 3000; ++i) {
        const double p = 1e-15 * std::pow(10.0, i / 200.0);
        const bool k = clicks(p);
        if (k && first == 0.0) {
            first = p;
        }
        if (first != 0.0) {
            REQUIRE(k);
        }
    }
    REQUIRE(first > 0.0);
    CHECK(t.click_threshold <= first);
    CHECK(t.click_threshold >= first / std::pow(10.0, 1.0 / 200.0));
    CHECK(*t.p_trigger >= t.click_threshold);
    CHECK(*t.p_trigger < 2.0 * t.click_threshold);
}

TEST_CASE("no trigger for a detector that is not blind") {
    const TriggerDesign t = design_trigger_pulse(*find_preset("paper-680k"), 1e-12);
    CHECK(t.status == TriggerStatus::not_blind);
    CHECK_FALSE(t.p_trigger);
    CHECK_FALSE(design_faked_state_attack(*find_preset("clavis2-like-L0")));
    const auto sc = design_faked_state_attack(*find_preset("paper-680k"));
    REQUIRE(sc);
    CHECK(detector_blind(*find_preset("paper-680k"), sc->p_blind));
}

TEST_CASE("17.8 mW does not blind thermally") {
    for (const char* name : {"clavis2-like-L0", "zero-rbias", "paper-680k"}) {
        const ThermalAttackReport r = assess_thermal_attack(*find_preset(name), 17.8e-3);
        CAPTURE(name);
        CHECK(r.still_counting);
        CHECK_FALSE(r.blinded_thermally);
        CHECK(r.t_junction >= find_preset(name)->t_ambient);
    }
}

TEST_CASE("attack scenario validation") {
    const DetectorConfig c = *find_preset("paper-680k");
    AttackScenario s{1e-6, 1e-7, c.gate_width, AttackMode::cw_blind_faked_state};
    CHECK_NOTHROW(s.validate(c));
    s.p_blind = -1.0;
    CHECK_THROWS_AS(s.validate(c), ParameterError);
    s.p_blind = 1e-6;
    s.trigger_width = 2.0 * c.gate_width;
    CHECK_THROWS_AS(s.validate(c), ParameterError);
}
