// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include "otfs/params.hpp"

namespace otfs {

using cd = std::complex<double>;

/// Delay-Doppler grid x[l, k]; l in [0, M) indexes delay, k in [0, N)
/// indexes Doppler. Flat storage is Doppler-major: index = k * M + l, the
/// same vectorization the effective channel matrix uses.
struct DdGrid {
    FrameParams params;
    std::vector<cd> values;

    DdGrid() = default;
    explicit DdGrid(const FrameParams& p)
        : params(p), values(static_cast<std::size_t>(p.m) * p.n) {}

    cd& at(int l, int k) { return values[static_cast<std::size_t>(k) * params.m + l]; }
    const cd& at(int l, int k) const {
        return values[static_cast<std::size_t>(k) * params.m + l];
    }
    static int flat(const FrameParams& p, int l, int k) { return k * p.m + l; }

    /// Doppler index folded to the symmetric range: k for k <= N/2, k - N
    /// otherwise.
    int sym_doppler(int k) const { return k <= params.n / 2 ? k : k - params.n; }
};

/// Time-frequency grid X[m, n]; m indexes subcarrier, n indexes slot.
/// Flat storage is slot-major: index = n * M + m.
struct TfGrid {
    FrameParams params;
    std::vector<cd> values;

    TfGrid() = default;
    explicit TfGrid(const FrameParams& p)
        : params(p), values(static_cast<std::size_t>(p.m) * p.n) {}

    cd& at(int m, int n) { return values[static_cast<std::size_t>(n) * params.m + m]; }
    const cd& at(int m, int n) const {
        return values[static_cast<std::size_t>(n) * params.m + m];
    }
};

/// Baseband samples at rate M * delta_f; length N * (M + cp_len).
struct TimeSignal {
    FrameParams params;
    std::vector<cd> samples;

    TimeSignal() = default;
    explicit TimeSignal(const FrameParams& p)
        : params(p), samples(static_cast<std::size_t>(p.frame_samples())) {}
};

double grid_energy(const std::vector<cd>& v);

}  // namespace otfs
