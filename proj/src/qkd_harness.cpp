#include "blindsim/qkd_harness.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "blindsim/detector_sim.hpp"
#include "blindsim/errors.hpp"

namespace blindsim {

void AliceConfig::validate() const {
    if (!(mean_photon_number >= 0.0) || !std::isfinite(mean_photon_number)) {
        throw ParameterError("mean photon number must be >= 0");
    }
    if (!(channel_loss_db >= 0.0) || !std::isfinite(channel_loss_db)) {
        throw ParameterError("channel loss must be >= 0 dB");
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class ProtocolRng {
public:
    explicit ProtocolRng(std::uint64_t seed) : gen_(splitmix64(seed)) {}
    int bit() { return static_cast<int>(gen_() >> 63); }
    Basis basis(bool swap) {
        const auto b = static_cast<Basis>(bit());
        if (!swap) {
            return b;
        }
        return b == Basis::rectilinear ? Basis::diagonal : Basis::rectilinear;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace

SessionStats run_bb84(const AliceConfig& alice, const std::array<DetectorConfig, 2>& bob_detectors,
                      std::uint64_t n_pulses, const std::optional<EveStrategy>& eve,
                      const std::optional<MonitorConfig>& monitor, std::uint64_t seed) {
    if (n_pulses < 1) {
        throw ParameterError("run_bb84: n_pulses must be >= 1");
    }
    alice.validate();
    for (const auto& d : bob_detectors) {
        d.validate();
    }
    if (eve) {
        eve->scenario.validate(bob_detectors[0]);
    }
    if (monitor) {
        monitor->validate();
    }

    ProtocolRng rng(seed);
    std::array<GateSimulator, 2> det{GateSimulator(bob_detectors[0], splitmix64(seed ^ 0xd0)),
                                     GateSimulator(bob_detectors[1], splitmix64(seed ^ 0xd1))};
    const double transmission = std::pow(10.0, -alice.channel_loss_db / 10.0);

    std::array<std::vector<CurrentSample>, 2> traces;
    if (monitor) {
        traces[0].reserve(n_pulses);
        traces[1].reserve(n_pulses);
    }

    SessionStats s;
    s.pulses_sent = n_pulses;
    std::uint64_t doubles = 0;
    std::uint64_t any_click = 0;
    std::uint64_t eve_matches = 0;

    for (std::uint64_t i = 0; i < n_pulses; ++i) {
        const Bb84Pulse pulse{rng.bit(), rng.basis(alice.swap_bases), alice.mean_photon_number};
        const Basis bob_basis = rng.basis(alice.swap_bases);

        std::array<GateIllumination, 2> light{};
        int eve_bit = -1;
        if (eve) {
            const AttackScenario& sc = eve->scenario;
            const Basis eve_basis = rng.basis(alice.swap_bases);
            const int coin = rng.bit();
            eve_bit = eve_basis == pulse.basis ? pulse.bit : coin;
            for (auto& l : light) {
                l.p_cw = sc.p_blind;
            }
            if (bob_basis == eve_basis) {
                light[eve_bit].p_pulse = sc.p_trigger;
            } else {
                light[0].p_pulse = light[1].p_pulse = 0.5 * sc.p_trigger;
            }
        } else {
            const double mu = pulse.mean_photon_number * transmission;
            if (bob_basis == pulse.basis) {
                light[pulse.bit].p_pulse = power_for_photons_per_gate(bob_detectors[pulse.bit], mu);
            } else {
                for (int d = 0; d < 2; ++d) {
                    light[d].p_pulse = power_for_photons_per_gate(bob_detectors[d], 0.5 * mu);
                }
            }
        }

        std::array<ClickRecord, 2> rec;
        try {
            for (int d = 0; d < 2; ++d) {
                rec[d] = det[d].step(light[d]);
            }
        } catch (const NumericError& e) {
            std::ostringstream msg;
            msg << "run_bb84: pulse " << i << ": " << e.what();
            throw NumericError(msg.str(), e.residual());
        }
        if (monitor) {
            for (int d = 0; d < 2; ++d) {
                const double current =
                    monitor->mode == MonitorMode::inter_gate ? rec[d].i_inter_gate : rec[d].i_avg;
                traces[d].push_back({i, current});
            }
        }

        const bool c0 = rec[0].clicked;
        const bool c1 = rec[1].clicked;
        if (c0 || c1) {
            ++any_click;
        }
        if (c0 && c1) {
            ++doubles;
            continue;
        }
        if (!(c0 || c1) || bob_basis != pulse.basis) {
            continue;
        }
        const int bob_bit = c1 ? 1 : 0;
        ++s.sifted_length;
        if (bob_bit != pulse.bit) {
            ++s.sifted_errors;
        }
        if (eve && bob_bit == eve_bit) {
            ++eve_matches;
        }
    }

    const auto n = static_cast<double>(n_pulses);
    s.double_click_rate = static_cast<double>(doubles) / n;
    s.always_click_rate = static_cast<double>(any_click) / n;
    if (s.sifted_length > 0) {
        const auto sifted = static_cast<double>(s.sifted_length);
        s.qber = static_cast<double>(s.sifted_errors) / sifted;
        s.eve_information = static_cast<double>(eve_matches) / sifted;
    }
    if (monitor) {
        for (const auto& t : traces) {
            s.alarms += scan_current_trace(t, *monitor).size();
        }
    }
    return s;
}

std::string Verdict::label() const {
    if (attack_successful) {
        return "attack_successful";
    }
    if (attack_detected) {
        return "attack_detected";
    }
    return "no_attack_evident";
}

Verdict summarize_session(const SessionStats& stats) {
    Verdict v;
    v.attack_successful = stats.qber < kQberAbort && stats.eve_information > 0.9 && stats.alarms == 0;
    v.attack_detected = stats.alarms > 0 || stats.qber >= kQberAbort || stats.double_click_rate >= 0.05;
    v.detector_safe = !v.attack_successful;
    return v;
}

bool detector_safe(std::span<const SessionStats> sessions) {
    for (const auto& s : sessions) {
        if (summarize_session(s).attack_successful) {
            return false;
        }
    }
    return true;
}

void write_session_report(std::ostream& os, const SessionStats& s) {
    const Verdict v = summarize_session(s);
    char buf[640];
    std::snprintf(buf, sizeof buf,
                  "pulses_sent: %llu\nsifted_length: %llu\nqber: %.6f\neve_information: %.6f\n"
                  "double_click_rate: %.6f\nalways_click_rate: %.6f\nalarms: %llu\n"
                  "attack_successful: %s\nattack_detected: %s\nverdict: %s\n",
                  static_cast<unsigned long long>(s.pulses_sent),
                  static_cast<unsigned long long>(s.sifted_length), s.qber, s.eve_information,
                  s.double_click_rate, s.always_click_rate, static_cast<unsigned long long>(s.alarms),
                  v.attack_successful ? "true" : "false", v.attack_detected ? "true" : "false",
                  v.label().c_str());
    os << buf;
}

void write_session_csv(std::ostream& os, const SessionStats& s, bool with_header) {
    if (with_header) {
        os << "pulses,sifted,qber,eve_info,double_click_rate,always_click_rate,alarms,verdict\n";
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%llu,%llu,%.8f,%.8f,%.8f,%.8f,%llu,%s\n",
                  static_cast<unsigned long long>(s.pulses_sent),
                  static_cast<unsigned long long>(s.sifted_length), s.qber, s.eve_information,
                  s.double_click_rate, s.always_click_rate, static_cast<unsigned long long>(s.alarms),
                  summarize_session(s).label().c_str());
    os << buf;
}

}  // namespace blindsim
