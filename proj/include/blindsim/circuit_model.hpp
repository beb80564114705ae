#pragma once

// Quasi-static electrical and thermal model of one gated Geiger-mode APD
// channel. The supply V_dc feeds the APD through R_bias; the APD's low side
// returns through the sense resistor R_s, whose voltage the discriminator
// compares against the discrimination level L. Gate pulses of height
// gate_amplitude are AC-coupled onto the bias node.
//
// Units are SI throughout (V, A, ohm, F, W, s, K, Hz).

#include <cmath>

namespace blindsim {

struct DetectorConfig {
    double r_bias = 0.0;                ///< series biasing resistor [ohm]
    double r_sense = 50.0;              ///< sensing resistor [ohm]
    double c_filter = 100e-12;          ///< bias-node decoupling capacitance [F]
    double c_diode = 1e-12;             ///< junction + stray capacitance [F]
    double v_dc = 48.5;                 ///< DC bias between gates [V]
    double gate_amplitude = 4.0;        ///< gate pulse height [V]
    double gate_width = 3.5e-9;         ///< [s]
    double gate_rate = 2e6;             ///< [Hz]
    double v_breakdown_ref = 50.0;      ///< breakdown at t_ref [V]
    double t_ref = 243.15;              ///< [K]
    double beta_vb = 0.1;               ///< dV_b/dT [V/K]
    double theta_thermal = 0.0;         ///< junction-to-sink thermal resistance [K/W]
    double gain_exponent = 1.0;         ///< exponent n of the gain law
    double gain_cap = 1e4;              ///< clamp on linear-mode gain
    double unity_responsivity = 1.0;    ///< primary photocurrent per optical watt [A/W]
    double pde = 0.10;                  ///< Geiger detection efficiency per photon
    double dark_prob = 1e-5;            ///< dark count probability per gate
    double dark_leakage = 1e-10;        ///< DC leakage current of the unlit APD [A]
    double v_cap_transient = 35e-3;     ///< capacitive gate-edge signal at the sense node [V]
    double discrimination_level = 77e-3;///< comparator threshold L [V]
    double wavelength = 1.55e-6;        ///< [m]
    double t_ambient = 243.15;          ///< heat-sink temperature [K]

    /// Throws ParameterError naming the first violated invariant.
    void validate() const;

    double excess_bias() const { return v_dc + gate_amplitude - v_breakdown_ref; }
    double total_series_resistance() const { return r_bias + r_sense; }

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct ThermalState {
    double t_junction = 0.0;
    double v_b_effective = 0.0;
    double p_heat = 0.0;
};

/// Junction at the heat-sink temperature with no dissipation.
ThermalState ambient_thermal_state(const DetectorConfig& cfg);

struct OperatingPoint {
    double v_apd = 0.0;            ///< APD voltage at the bias node between gates
    double i_photo = 0.0;          ///< multiplied linear-mode photocurrent
    double i_avalanche_avg = 0.0;  ///< Geiger avalanche current averaged over gate periods
    double i_total = 0.0;          ///< i_photo + i_avalanche_avg + dark leakage
    double gain = 1.0;             ///< linear gain at v_apd
    bool geiger_armed = false;     ///< gate-peak voltage above effective breakdown
    double residual = 0.0;         ///< |v - rhs(v)| of the bias balance at the solution
};

/// Empirical gain law M(v) = 1 / (1 - (v/v_b)^n), clamped to gain_cap.
/// For v >= v_b the linear model no longer applies and gain_cap is returned.
double multiplication_gain(double v, double v_b, const DetectorConfig& cfg);

/// Primary (unity-gain) photocurrent for an optical power.
double unity_photocurrent(double p_opt, const DetectorConfig& cfg);

/// Charge removed from the junction capacitance by one Geiger avalanche.
double avalanche_charge(const DetectorConfig& cfg, double v_gate_peak, double v_b_eff);

/// Bias-node balance  v = v_dc - I(v) * (r_bias + r_sense)  with
/// I(v) = M(v) I0 + click_prob Q(v) f_gate + i_leak, solved by bisection on
/// the monotone mismatch v - rhs(v) over [0, v_dc].
OperatingPoint solve_quiescent_point(const DetectorConfig& cfg, double p_cw, double click_prob,
                                     const ThermalState& thermal);

/// Mismatch v - rhs(v) of the bias balance. Nondecreasing in v; exposed so
/// tests can check the solver against an independent scan.
double quiescent_mismatch(const DetectorConfig& cfg, double p_cw, double click_prob,
                          const ThermalState& thermal, double v);

/// Sense-node swing produced by gating the photocurrent: the bias node is
/// frozen for the duration of one gate, so the APD sees op_off.v_apd +
/// gate_amplitude while the light during the gate is p_during_gate.
double sense_pulse_amplitude(const DetectorConfig& cfg, const OperatingPoint& op_off,
                             double p_during_gate, const ThermalState& thermal);

double breakdown_at_temperature(const DetectorConfig& cfg, double t);

/// Joint fixed point of the operating point and junction self-heating.
ThermalState thermal_equilibrium(const DetectorConfig& cfg, double p_cw, double click_prob);

/// Convenience: operating point at the thermal fixed point.
struct HeatedOperatingPoint {
    OperatingPoint op;
    ThermalState thermal;
};
HeatedOperatingPoint solve_heated_point(const DetectorConfig& cfg, double p_cw, double click_prob);

namespace constants {
inline constexpr double planck = 6.62607015e-34;
inline constexpr double speed_of_light = 299792458.0;
}  // namespace constants

inline double photon_energy(double wavelength) {
    return constants::planck * constants::speed_of_light / wavelength;
}

}  // namespace blindsim
