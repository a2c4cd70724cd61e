// SPDX-License-Identifier: Apache-2.0
#include "otfs/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace otfs {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

FrameParams FrameParams::make(int m, int n, double delta_f, double fc,
                              int cp_len) {
    require(delta_f > 0 && finite(delta_f), "frame: delta_f must be positive");
    return make_with_slot(m, n, delta_f, 1.0 / delta_f, fc, cp_len);
}

FrameParams FrameParams::make_with_slot(int m, int n, double delta_f, double t,
                                        double fc, int cp_len) {
    require(m >= 2, "frame: M must be >= 2");
    require(n >= 1, "frame: N must be >= 1");
    require(delta_f > 0 && finite(delta_f), "frame: delta_f must be positive");
    require(t > 0 && finite(t), "frame: T must be positive");
    require(std::abs(t * delta_f - 1.0) <= 1e-12,
            "frame: T * delta_f must equal 1 (critical sampling)");
    require(fc > 0 && finite(fc), "frame: fc must be positive");
    require(cp_len >= 0, "frame: cp_len must be >= 0");
    require(cp_len < m, "frame: cp_len must be < M");
    FrameParams p;
    p.m = m;
    p.n = n;
    p.delta_f = delta_f;
    p.slot_t = t;
    p.fc = fc;
    p.cp_len = cp_len;
    return p;
}

double max_doppler_shift(double fc_hz, double v_mps, double c) {
    require(finite(fc_hz) && fc_hz > 0, "max_doppler_shift: fc must be > 0");
    require(finite(v_mps) && v_mps >= 0, "max_doppler_shift: v must be >= 0");
    require(finite(c) && c > 0, "max_doppler_shift: c must be > 0");
    return fc_hz * v_mps / c;
}

double coherence_time(double nu_max_hz) {
    require(finite(nu_max_hz) && nu_max_hz > 0,
            "coherence_time: nu_max must be > 0");
    return 1.0 / (4.0 * nu_max_hz);
}

double symbol_duration(double delta_f_hz, double cp_fraction) {
    require(finite(delta_f_hz) && delta_f_hz > 0,
            "symbol_duration: delta_f must be > 0");
    require(finite(cp_fraction) && cp_fraction >= 0 && cp_fraction < 1,
            "symbol_duration: cp_fraction must be in [0, 1)");
    return (1.0 / delta_f_hz) * (1.0 + cp_fraction);
}

int symbols_per_coherence(double coh_time_s, double delta_f_hz,
                          double cp_fraction) {
    require(finite(coh_time_s) && coh_time_s > 0,
            "symbols_per_coherence: coherence time must be > 0");
    const double dur = symbol_duration(delta_f_hz, cp_fraction);
    // Guard against 2.9999999... when the ratio is an exact integer.
    const double ratio = coh_time_s / dur;
    return static_cast<int>(std::floor(ratio * (1.0 + 1e-12)));
}

double spectral_efficiency(double eta, double code_rate, int mod_order) {
    require(finite(eta) && eta >= 0 && eta < 1,
            "spectral_efficiency: eta must be in [0, 1)");
    require(finite(code_rate) && code_rate > 0 && code_rate <= 1,
            "spectral_efficiency: code rate must be in (0, 1]");
    require(mod_order >= 2, "spectral_efficiency: mod order must be >= 2");
    return (1.0 - eta) * code_rate * std::log2(static_cast<double>(mod_order));
}

CompactnessResult compactness_check(double tau_max_s, double nu_max_hz) {
    require(finite(tau_max_s) && tau_max_s >= 0,
            "compactness_check: tau_max must be >= 0");
    require(finite(nu_max_hz) && nu_max_hz >= 0,
            "compactness_check: nu_max must be >= 0");
    CompactnessResult r;
    r.product = 4.0 * tau_max_s * nu_max_hz;
    r.satisfied = r.product <= 1.0;
    return r;
}

}  // namespace otfs
