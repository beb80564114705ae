#pragma once

// Seeded BB84 Monte Carlo. Bob uses passive 50/50 basis choice and two
// detector channels, one per bit value (basis-multiplexed). An optional Eve
// intercepts every pulse and resends a faked state: CW blinding light on both
// detectors plus a bright trigger pulse encoding her result in her basis.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "blindsim/attack_lab.hpp"
#include "blindsim/circuit_model.hpp"
#include "blindsim/sentinel.hpp"

namespace blindsim {

enum class Basis : std::uint8_t { rectilinear = 0, diagonal = 1 };

struct Bb84Pulse {
    int bit = 0;
    Basis basis = Basis::rectilinear;
    double mean_photon_number = 0.0;
};

struct AliceConfig {
    double mean_photon_number = 0.5;
    double channel_loss_db = 0.0;
    /// Relabel the two bases everywhere; statistics must not change.
    bool swap_bases = false;

    void validate() const;
};

struct EveStrategy {
    AttackScenario scenario;
};

struct SessionStats {
    std::uint64_t pulses_sent = 0;
    std::uint64_t sifted_length = 0;
    std::uint64_t sifted_errors = 0;
    double qber = 0.0;
    double eve_information = 0.0;
    double double_click_rate = 0.0;
    double always_click_rate = 0.0;
    std::uint64_t alarms = 0;

    friend bool operator==(const SessionStats&, const SessionStats&) = default;
};

SessionStats run_bb84(const AliceConfig& alice, const std::array<DetectorConfig, 2>& bob_detectors,
                      std::uint64_t n_pulses, const std::optional<EveStrategy>& eve,
                      const std::optional<MonitorConfig>& monitor, std::uint64_t seed);

/// Conventional BB84 abort threshold on the sifted-key error rate.
inline constexpr double kQberAbort = 0.11;

struct Verdict {
    bool attack_successful = false;
    bool attack_detected = false;
    bool detector_safe = true;

    std::string label() const;
};

Verdict summarize_session(const SessionStats& stats);

/// True when no session of an experiment let the attack through unnoticed.
bool detector_safe(std::span<const SessionStats> sessions);

void write_session_report(std::ostream& os, const SessionStats& s);
void write_session_csv(std::ostream& os, const SessionStats& s, bool with_header = true);

}  // namespace blindsim
