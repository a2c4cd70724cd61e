// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "otfs/grids.hpp"
#include "otfs/rng.hpp"
#include "otfs/transforms.hpp"

namespace otfs {

/// One propagation path. Delay is integer in samples (tau = delay_tap * Ts);
/// Doppler is in grid-bin units, possibly fractional. One Doppler bin is one
/// cycle per transmitted frame (CP included), i.e. kappa translates to
/// kappa * doppler_resolution() Hz, so integer-bin paths land exactly on the
/// received Doppler grid.
struct PathSpec {
    cd gain{0.0, 0.0};
    int delay_tap = 0;
    double kappa = 0.0;
};

enum class DopplerLaw { UniformBins, JakesCosine };
enum class PowerProfileKind { Uniform, ExponentialDecay };

struct PowerProfile {
    PowerProfileKind kind = PowerProfileKind::Uniform;
    double decay_rate = 0.0;  // per delay tap, ExponentialDecay only
};

struct ChannelConfig {
    int paths = 1;
    int l_max = 0;
    double kappa_max = 0.0;
    bool fractional_doppler = false;
    DopplerLaw doppler_law = DopplerLaw::UniformBins;
    PowerProfile power_profile{};
};

struct ChannelRealization {
    FrameParams params;
    std::vector<PathSpec> paths;
    std::uint64_t seed = 0;

    /// Physical Doppler of a path in Hz.
    double doppler_hz(const PathSpec& p) const {
        return p.kappa * params.doppler_resolution();
    }
    double tau_of(const PathSpec& p) const {
        return p.delay_tap * params.sample_period();
    }

    std::string to_text() const;
    static ChannelRealization from_text(const std::string& text,
                                        const FrameParams& params);
};

void validate_channel_config(const ChannelConfig& cfg, const FrameParams& p);

/// Draw one realization. First path sits at delay 0; the remaining P-1
/// delay taps are distinct draws from [1, l_max]. Doppler follows the
/// configured law (rounded to integers unless fractional mode); gains are
/// i.i.d. complex Gaussian with the profile's per-path variance, scaled so
/// the ensemble mean of sum |g_i|^2 is 1.
ChannelRealization sample_channel(const ChannelConfig& cfg,
                                  const FrameParams& params, Rng& rng);

/// r[t] = sum_i g_i * exp(j 2 pi kappa_i (t - l_i) / (N (M + cp))) * s[t - l_i],
/// s taken as zero outside its support.
TimeSignal apply_channel_time(const TimeSignal& ts, const ChannelRealization& ch);

/// Adds CN(0, sigma^2) noise, sigma^2 = es / 10^(es_n0_db / 10). An infinite
/// es_n0_db is the no-noise sentinel.
TimeSignal add_awgn(const TimeSignal& ts, double es_n0_db, Rng& rng,
                    double es = 1.0);

/// Noise variance implied by an Es/N0 operating point (0 when es_n0_db is
/// the +inf sentinel).
double noise_variance(double es_n0_db, double es = 1.0);

/// Complex channel transfer function sampled at subcarrier frequencies and
/// slot payload midpoints: H[m,n] = sum_i g_i exp(j2pi nu_i t_n) exp(-j2pi f_m tau_i).
TfGrid ctf_grid(const ChannelRealization& ch);

/// Phase the delay-Doppler pipeline attaches to a path observed at output
/// delay l_out: exp(j 2 pi kappa (cp + l_out - l_tap) / (N (M + cp))).
cd path_phase(const FrameParams& p, double kappa, int l_out, int l_tap);

/// D_N(x) = (1/N) sum_n exp(j 2 pi n x / N); 1 at integer multiples of N,
/// a Dirichlet kernel otherwise. N-periodic.
cd dirichlet_kernel(double x, int n);

/// Dense MN x MN delay-Doppler input-output operator obtained by probing the
/// full transform/channel/inverse-transform pipeline with unit impulses.
/// Column (k*M + l) is the response to an impulse at DD cell (l, k). This
/// construction is authoritative; analytic forms must agree with it.
/// Throws resource_limit_error when M*N exceeds the cap.
Eigen::MatrixXcd effective_dd_matrix(const ChannelRealization& ch,
                                     const WindowSpec& w = WindowSpec::rectangular(),
                                     int cap = 4096);

/// Matrix-free form of the same operator (one pipeline pass).
DdGrid apply_effective_channel(const DdGrid& x, const ChannelRealization& ch,
                               const WindowSpec& w = WindowSpec::rectangular());

/// Closed-form effective operator for rectangular windows and sufficient CP
/// (cp_len >= every delay tap): a 2D circular shift by (l_i, kappa_i) per
/// path with gain g_i * path_phase, spread across Doppler by the Dirichlet
/// kernel when kappa_i is fractional.
Eigen::MatrixXcd effective_dd_matrix_analytic(const ChannelRealization& ch,
                                              int cap = 4096);

/// One nonzero of the sparse effective operator: observation row (l', k')
/// couples to variable column ((l' - delay) mod M, k) with weight `coef`.
struct SparseEntry {
    int col = 0;
    cd coef{0.0, 0.0};
};

/// Per-row sparse form of the analytic operator, for message-passing
/// detection. Fractional-Doppler paths are truncated to the strongest
/// 2*doppler_halfwidth+1 Doppler taps; integer paths keep exactly one tap.
/// Entries hitting the same (row, col) pair are merged.
std::vector<std::vector<SparseEntry>> effective_dd_sparse_rows(
    const FrameParams& params, const std::vector<PathSpec>& paths,
    int doppler_halfwidth);

/// Smallest half-width whose truncated Dirichlet taps keep at least
/// `energy_fraction` of a fractional path's energy.
int doppler_truncation_halfwidth(const FrameParams& params, double kappa,
                                 double energy_fraction = 0.99);

/// Canonical dense M x N delay-Doppler response of the channel under a
/// window: the pipeline's response to a unit impulse at the origin with the
/// known per-cell path phase removed, so an integer-bin path (g, l, kappa)
/// renders as g at cell (l, kappa).
DdGrid dense_dd_response(const ChannelRealization& ch,
                         const WindowSpec& w = WindowSpec::rectangular());

/// Exact per-slot payload-to-payload channel blocks B_0..B_{N-1} (each M x M)
/// of the time-domain model. Valid when cp_len >= every delay tap, in which
/// case the frame model is block-diagonal: r_slot = B_n s_slot + noise.
std::vector<Eigen::MatrixXcd> time_domain_slot_blocks(const ChannelRealization& ch);

}  // namespace otfs
