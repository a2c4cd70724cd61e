// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>

namespace otfs {

/// CODATA speed of light. The lab default for all physical conversions.
constexpr double kSpeedOfLight = 299792458.0;
/// Rounded value used by many textbook link budgets; selecting it makes the
/// derived figures match published numbers digit for digit.
constexpr double kSpeedOfLightCompat = 3.0e8;

/// Geometry of one OTFS frame: an M x N delay-Doppler grid carried by N
/// multicarrier slots of M subcarriers each. Critical sampling (T * delta_f
/// = 1) is enforced at construction.
struct FrameParams {
    int m = 0;               // delay bins / subcarriers
    int n = 0;               // Doppler bins / time slots
    double delta_f = 0.0;    // subcarrier spacing, Hz
    double slot_t = 0.0;     // slot duration T, seconds (payload only)
    double fc = 0.0;         // carrier frequency, Hz
    int cp_len = 0;          // cyclic prefix, samples

    static FrameParams make(int m, int n, double delta_f, double fc,
                            int cp_len);
    /// Variant taking an explicit T; rejects T * delta_f != 1.
    static FrameParams make_with_slot(int m, int n, double delta_f, double t,
                                      double fc, int cp_len);

    double sample_rate() const { return m * delta_f; }
    double sample_period() const { return 1.0 / (m * delta_f); }
    double frame_duration() const { return n * slot_t; }
    double bandwidth() const { return m * delta_f; }
    int slot_samples() const { return m + cp_len; }      // incl. CP
    int frame_samples() const { return n * (m + cp_len); }
    int grid_size() const { return m * n; }

    /// Delay-bin width in seconds.
    double delay_resolution() const { return sample_period(); }
    /// Doppler-bin width in Hz. One bin corresponds to one cycle per frame
    /// of the transmitted waveform, CP included, so that integer-bin paths
    /// land exactly on the received Doppler grid.
    double doppler_resolution() const {
        return 1.0 / (static_cast<double>(n) * slot_samples() * sample_period());
    }

    bool operator==(const FrameParams&) const = default;
};

struct MobilityParams {
    double speed_mps = 0.0;
    double c = kSpeedOfLight;

    double wavelength(double fc) const { return c / fc; }
};

/// nu_max = fc * v / c.
double max_doppler_shift(double fc_hz, double v_mps, double c = kSpeedOfLight);

/// Coherence time approximation 1 / (4 nu_max).
double coherence_time(double nu_max_hz);

/// Duration of one multicarrier symbol including its CP fraction.
double symbol_duration(double delta_f_hz, double cp_fraction);

/// Whole multicarrier symbols that fit in one coherence interval.
int symbols_per_coherence(double coh_time_s, double delta_f_hz,
                          double cp_fraction);

/// (1 - eta) * Rc * log2(M) in bit/s/Hz.
double spectral_efficiency(double eta, double code_rate, int mod_order);

struct CompactnessResult {
    double product = 0.0;  // 4 * tau_max * nu_max
    bool satisfied = false;
};

/// Underspread test 4 * tau_max * nu_max <= 1 (inclusive).
CompactnessResult compactness_check(double tau_max_s, double nu_max_hz);

}  // namespace otfs
