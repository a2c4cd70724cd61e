// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/grids.hpp"

namespace otfs {

/// Gray-labeled constellation with unit average symbol energy. The point
/// index is the bit label (MSB first), so points[i] carries the bit pattern
/// of i under the Gray map built into the point ordering.
struct Constellation {
    int order = 0;
    int bits_per_symbol = 0;
    std::vector<cd> points;

    static Constellation bpsk();
    static Constellation qpsk();
    static Constellation qam16();
    static Constellation from_order(int order);  // 2, 4 or 16

    int nearest(cd v) const;
    int bit(int point_index, int bit_pos) const {
        return (point_index >> (bits_per_symbol - 1 - bit_pos)) & 1;
    }
};

struct MpaConfig {
    int max_iters = 30;
    double damping = 0.6;     // in (0, 1]; 1 disables damping
    double tol = 1e-6;
    int doppler_halfwidth = 0;  // sparse-graph truncation for fractional paths
};

struct CdidConfig {
    int max_iters = 10;
    double tol = 1e-6;
};

struct DetectionResult {
    DdGrid hard;
    std::vector<double> posteriors;  // grid_size * order, cell-major
    std::vector<double> llrs;        // grid_size * bits_per_symbol
    std::vector<cd> equalized;       // soft symbol estimates feeding decisions
    int iterations_used = 1;
    bool converged = true;
    bool regularized = false;
    double flops = 0.0;  // coarse arithmetic cost model

    int hard_index(int cell, int order) const;
};

/// LLR_b = log(sum_{bit b = 0} p / sum_{bit b = 1} p), clamped to +-30.
std::vector<double> soft_demap(const std::vector<double>& posteriors,
                               const Constellation& c);

/// x_hat = (H^H H + sigma^2 I)^-1 H^H y with per-stream Gaussian posteriors
/// from the post-equalization bias/variance. sigma^2 = 0 falls back to 1e-12
/// regularization (flagged).
DetectionResult detect_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                             double noise_var, const Constellation& c,
                             const FrameParams& params);

/// Exact symbol-wise marginals by exhaustive enumeration. Requires
/// order^(MN) <= 2^20. Ties go to the lowest constellation index.
DetectionResult detect_map(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                           double noise_var, const Constellation& c,
                           const FrameParams& params);

/// Gaussian-approximation message passing on the sparse delay-Doppler factor
/// graph given by `rows` (see effective_dd_sparse_rows).
DetectionResult detect_mpa(const DdGrid& y,
                           const std::vector<std::vector<SparseEntry>>& rows,
                           double noise_var, const Constellation& c,
                           const MpaConfig& cfg);

/// Convenience overload building the sparse graph from a realization.
DetectionResult detect_mpa(const DdGrid& y, const ChannelRealization& ch,
                           double noise_var, const Constellation& c,
                           const MpaConfig& cfg);

/// Cross-domain iterative detection: per-slot time-domain L-MMSE over the
/// block-diagonal banded channel, symbol-by-symbol denoising in the DD
/// domain, extrinsic Gaussian messages exchanged through the unitary
/// DD <-> time map.
DetectionResult detect_cdid(const TimeSignal& received, const ChannelRealization& ch,
                            double noise_var, const Constellation& c,
                            const CdidConfig& cfg);

/// Per-cell scalar MMSE for plain multicarrier transmission:
/// x_hat = conj(H) y / (|H|^2 + sigma^2).
DetectionResult detect_ofdm_onetap(const TfGrid& y, const TfGrid& h_est,
                                   double noise_var, const Constellation& c);

/// Cost of one dense MN x MN LMMSE solve under the same flop model the
/// detectors report; reference point for complexity assertions.
double dense_lmmse_flops(int n);

}  // namespace otfs
