// blindsim: command-line front end for the gated-APD blinding simulator.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blindsim/attack_lab.hpp"
#include "blindsim/calibrate.hpp"
#include "blindsim/config_io.hpp"
#include "blindsim/detector_sim.hpp"
#include "blindsim/errors.hpp"
#include "blindsim/qkd_harness.hpp"
#include "blindsim/sentinel.hpp"
#include "manifest.hpp"

namespace {

using namespace blindsim;

constexpr int kExitInvalid = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitCheck = 3;

struct Common {
    std::string config = "paper-680k";
    std::string out;
    std::uint64_t seed = 1;
    bool check = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "preset name or config file")->capture_default_str();
    sub->add_option("--out", c.out, "output file (stdout if omitted); a manifest is written beside it");
    sub->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
    sub->add_flag("--check", c.check, "exit 3 if the run violates the expected behaviour");
}

bool parse_on_off(const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw UsageError("expected on|off, got '" + v + "'");
}

class Run {
public:
    Run(std::string command, const Common& c, int argc, char** argv)
        : common_(c), cfg_(load_config(c.config)) {
        manifest_.command = std::move(command);
        manifest_.config_source = c.config;
        manifest_.config_sha256 = tools::sha256_hex(serialize_config(cfg_));
        manifest_.seed = c.seed;
        for (int i = 1; i < argc; ++i) {
            manifest_.arguments.emplace_back(argv[i]);
        }
    }

    const DetectorConfig& config() const { return cfg_; }

    /// Main output: to --out if given, else stdout.
    void emit(const std::string& text) {
        if (common_.out.empty()) {
            std::cout << text;
            return;
        }
        write_file(common_.out, text);
    }

    void write_file(const std::string& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw UsageError("cannot write '" + path + "'");
        }
        f << text;
        f.close();
        manifest_.outputs.push_back(path);
    }

    int finish(bool check_ok, const std::string& what) {
        if (!common_.out.empty()) {
            manifest_.write(common_.out + ".manifest.json");
        }
        if (common_.check && !check_ok) {
            std::cerr << "check failed: " << what << "\n";
            return kExitCheck;
        }
        return 0;
    }

private:
    Common common_;
    DetectorConfig cfg_;
    tools::Manifest manifest_;
};

int cmd_sweep(Run& run, double pmin, double pmax, int ppd) {
    const SweepCurve curve = sweep_power(run.config(), pmin, pmax, ppd);
    std::ostringstream os;
    write_sweep_csv(os, curve);
    run.emit(os.str());

    int runs = 0;
    bool in_blind = false;
    bool in_range = true;
    for (const auto& p : curve.points) {
        in_range = in_range && p.count_prob >= 0.0 && p.count_prob <= 1.0;
        if (p.blinded && !in_blind) {
            ++runs;
        }
        in_blind = p.blinded;
    }
    return run.finish(in_range && runs <= 1, "count probability out of range or more than one blind run");
}

int cmd_window(Run& run, double pmin, double pmax, int ppd) {
    const auto w = find_blinding_window(run.config(), pmin, pmax, ppd);
    std::ostringstream os;
    write_window_report(os, w);
    run.emit(os.str());
    const bool ok = !w || (w->p_min < w->p_max && detector_blind(run.config(), w->geometric_midpoint()));
    return run.finish(ok, "window midpoint is not blind");
}

int cmd_thermal(Run& run, double p_cw) {
    const ThermalAttackReport r = assess_thermal_attack(run.config(), p_cw);
    std::ostringstream os;
    write_thermal_report(os, r);
    run.emit(os.str());
    return run.finish(r.still_counting && !r.blinded_thermally, "detector stopped counting");
}

int cmd_qkd(Run& run, std::uint64_t seed, std::uint64_t pulses, bool eve_on, bool monitor_on,
            const std::string& eve_design, const AliceConfig& alice) {
    const DetectorConfig& cfg = run.config();
    std::optional<EveStrategy> eve;
    if (eve_on) {
        const DetectorConfig target = eve_design.empty() ? cfg : load_config(eve_design);
        const auto scenario = design_faked_state_attack(target);
        if (!scenario) {
            throw UsageError("eve: no blinding window for the design config; pass --eve-design");
        }
        eve = EveStrategy{*scenario};
    }
    std::optional<MonitorConfig> monitor;
    if (monitor_on) {
        monitor = MonitorConfig::defaults_for(cfg);
    }
    const SessionStats s = run_bb84(alice, {cfg, cfg}, pulses, eve, monitor, seed);
    std::ostringstream csv;
    write_session_csv(csv, s);
    run.emit(csv.str());
    write_session_report(std::cerr, s);
    return run.finish(!summarize_session(s).attack_successful, "undetected successful attack");
}

int cmd_monitor_demo(Run& run, std::uint64_t seed, std::uint64_t gates, double attack_power) {
    const DetectorConfig& cfg = run.config();
    if (gates < 2) {
        throw UsageError("monitor-demo needs at least 2 gates");
    }
    AttackScenario sc;
    if (const auto designed = design_faked_state_attack(cfg)) {
        sc = *designed;
    }
    if (attack_power > 0.0) {
        sc.p_blind = attack_power;
    } else if (sc.p_blind == 0.0) {
        sc.p_blind = 1e-6;  // undesignable detector: still show the current it would draw
    }
    // First half legitimate (0.5 photons per gate), second half under attack.
    const std::uint64_t onset = gates / 2;
    std::vector<GateIllumination> timeline(gates);
    for (std::uint64_t i = 0; i < gates; ++i) {
        timeline[i] = i < onset ? GateIllumination{0.0, power_for_photons_per_gate(cfg, 0.5)}
                                : GateIllumination{sc.p_blind, sc.p_trigger};
    }
    const auto records = simulate_gates(cfg, timeline, gates, seed);
    std::vector<CurrentSample> trace;
    trace.reserve(gates);
    for (const auto& r : records) {
        trace.push_back({r.gate_index, r.i_inter_gate});
    }
    const MonitorConfig mcfg = MonitorConfig::defaults_for(cfg);
    const auto alarms = scan_current_trace(trace, mcfg);
    std::ostringstream os;
    write_alarms_csv(os, alarms);
    run.emit(os.str());

    std::uint64_t legit = 0;
    std::uint64_t attack = 0;
    for (const auto& a : alarms) {
        (a.sample_index < onset ? legit : attack) += 1;
    }
    std::cerr << "threshold_a: " << mcfg.threshold << "\nattack_onset_gate: " << onset
              << "\nblinding_power_w: " << sc.p_blind << "\nlegitimate_alarms: " << legit
              << "\nattack_alarms: " << attack << "\n";
    return run.finish(legit == 0 && attack > 0, "monitor missed the attack or raised a false alarm");
}

int cmd_calibrate(Run& run, const std::vector<std::string>& free_names, const CalibrationOptions& opt) {
    std::vector<FreeParam> free;
    for (const auto& n : free_names) {
        free.push_back(parse_free_param(n));
    }
    const auto targets = reference_targets();
    CalibrationResult r;
    try {
        r = calibrate(targets, free, run.config(), opt);
    } catch (const CalibrationFailure& e) {
        write_calibration_report(std::cerr, e.best());
        throw;
    }
    write_calibration_report(std::cerr, r);
    run.emit(serialize_config(r.fitted));
    bool ok = true;
    for (const auto& t : r.residuals) {
        ok = ok && t.log_error * t.log_error <= std::log(3.0) * std::log(3.0) * (1 + 1e-12);
    }
    return run.finish(ok, "a target is missed by more than a factor of 3");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gated APD detector-blinding simulator"};
    app.require_subcommand(1);

    Common common;
    double pmin = kScanPowerMin;
    double pmax = kScanPowerMax;
    int ppd = 25;
    std::uint64_t pulses = 100000;
    std::string eve = "off";
    std::string monitor = "off";
    std::string eve_design;
    AliceConfig alice;
    double thermal_power = 17.8e-3;
    double attack_power = 0.0;
    std::vector<std::string> free_params{"gain_exponent", "unity_responsivity"};
    CalibrationOptions cal_opt;

    auto* sweep = app.add_subcommand("sweep", "count probability vs CW power (CSV)");
    auto* window = app.add_subcommand("window", "locate the CW blinding window");
    for (auto* sub : {sweep, window}) {
        add_common(sub, common);
        sub->add_option("--pmin", pmin, "lowest CW power [W]")->capture_default_str();
        sub->add_option("--pmax", pmax, "highest CW power [W]")->capture_default_str();
        sub->add_option("--points-per-decade", ppd)->capture_default_str();
    }
    auto* qkd = app.add_subcommand("qkd", "BB84 session with optional Eve and current monitor");
    add_common(qkd, common);
    qkd->add_option("--pulses", pulses)->capture_default_str();
    qkd->add_option("--eve", eve, "on|off")->capture_default_str();
    qkd->add_option("--monitor", monitor, "on|off")->capture_default_str();
    qkd->add_option("--eve-design", eve_design, "config Eve designs her attack against (default: --config)");
    qkd->add_option("--mu", alice.mean_photon_number, "Alice mean photon number")->capture_default_str();
    qkd->add_option("--loss-db", alice.channel_loss_db, "channel loss [dB]")->capture_default_str();
    auto* thermal = app.add_subcommand("thermal", "thermal blinding assessment");
    add_common(thermal, common);
    thermal->add_option("--power", thermal_power, "CW power [W]")->capture_default_str();
    auto* demo = app.add_subcommand("monitor-demo", "bias-current monitor on a legitimate-then-attacked trace");
    add_common(demo, common);
    demo->add_option("--pulses", pulses, "gates simulated")->capture_default_str();
    demo->add_option("--attack-power", attack_power, "CW blinding power [W] (default: designed)");
    auto* cal = app.add_subcommand("calibrate", "fit the gain law to the published thresholds");
    add_common(cal, common);
    cal->add_option("--free", free_params, "parameters to fit")->capture_default_str();
    cal->add_option("--max-evals", cal_opt.max_evaluations, "Nelder-Mead evaluations per restart")
        ->capture_default_str();
    auto* show = app.add_subcommand("show-config", "print a resolved config or preset");
    add_common(show, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        Run run(name, common, argc, argv);
        if (name == "sweep") return cmd_sweep(run, pmin, pmax, ppd);
        if (name == "window") return cmd_window(run, pmin, pmax, ppd);
        if (name == "thermal") return cmd_thermal(run, thermal_power);
        if (name == "qkd") {
            return cmd_qkd(run, common.seed, pulses, parse_on_off(eve), parse_on_off(monitor), eve_design,
                           alice);
        }
        if (name == "monitor-demo") return cmd_monitor_demo(run, common.seed, pulses, attack_power);
        if (name == "calibrate") return cmd_calibrate(run, free_params, cal_opt);
        run.emit(serialize_config(run.config()));
        return run.finish(true, "");
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << " (residual " << e.residual() << ")\n";
        return kExitNumeric;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const ParameterError& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kExitInvalid;
    }
}
