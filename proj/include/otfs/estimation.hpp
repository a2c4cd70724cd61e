// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/grids.hpp"
#include "otfs/transforms.hpp"

namespace otfs {

/// Embedded pilot with a zeroed guard box. Guard widths are circular
/// half-widths around the pilot cell; the detection search region defaults
/// to the guard box but can be widened for guard-free schemes.
struct PilotScheme {
    int pilot_l = 0;
    int pilot_k = 0;
    double amplitude = 1.0;
    int guard_delay = 0;    // half-width, delay bins
    int guard_doppler = 0;  // half-width, Doppler bins
    int search_delay = -1;
    int search_doppler = -1;

    int effective_search_delay() const {
        return search_delay >= 0 ? search_delay : guard_delay;
    }
    int effective_search_doppler() const {
        return search_doppler >= 0 ? search_doppler : guard_doppler;
    }

    /// Training overhead: guard box area (pilot included) over MN.
    double eta(const FrameParams& p) const;

    /// Default sizing for a channel: delay half-width l_max, Doppler
    /// half-width 2*kappa_max (plus ceil(N/16) margin under fractional
    /// Doppler), pilot amplitude sqrt(MN) * 10^(boost_db/20).
    static PilotScheme for_channel(const FrameParams& p, const ChannelConfig& cfg,
                                   double boost_db = 0.0);
};

struct EstimatedTap {
    cd gain{0.0, 0.0};
    int delay_tap = 0;
    double kappa = 0.0;
};

/// Channel knowledge recovered by an estimator. `dense` is the canonical
/// M x N delay-Doppler response (same convention as dense_dd_response), so
/// estimates from different domains compare on one footing.
struct ChannelEstimate {
    std::vector<EstimatedTap> taps;
    DdGrid dense;
    WindowSpec window_used;
    double noise_var_est = 0.0;
    bool decision_directed = false;

    std::vector<PathSpec> to_paths() const;
    static ChannelEstimate from_taps(const FrameParams& p,
                                     const std::vector<EstimatedTap>& taps,
                                     const WindowSpec& w);
    static ChannelEstimate from_dense(const DdGrid& dense, const WindowSpec& w);

    std::string to_text() const;
    static ChannelEstimate from_text(const std::string& text, const FrameParams& p);
};

/// Mask of cells consumed by the pilot and its guard box (1 = reserved).
std::vector<std::uint8_t> pilot_region_mask(const FrameParams& p,
                                            const PilotScheme& scheme);

/// Place the pilot, zero the guard box, keep data cells untouched.
DdGrid embed_pilot(const DdGrid& data, const PilotScheme& scheme);

/// Threshold detection in the pilot neighborhood. Cells whose magnitude
/// exceeds threshold_factor * sigma_hat become taps; sigma_hat comes from
/// guard cells at negative delay offsets (outside the causal channel
/// support), falling back to a median estimate for guard-free schemes.
ChannelEstimate estimate_dd(const DdGrid& received, const PilotScheme& scheme,
                            double threshold_factor, const WindowSpec& w);

/// Regular TF pilot lattice with the given strides.
std::vector<std::uint8_t> make_tf_pilot_lattice(const FrameParams& p,
                                                int stride_m, int stride_n);

/// Least squares at pilot cells, bilinear interpolation (edge-clamped)
/// elsewhere. Returns the full CTF estimate.
TfGrid estimate_tf(const TfGrid& received_tf, const std::vector<std::uint8_t>& pilot_mask,
                   const TfGrid& known_pilots);

/// Canonical delay-Doppler rendering of a CTF estimate, comparable with
/// DD-domain estimates and dense_dd_response.
ChannelEstimate estimate_from_ctf(const TfGrid& ctf_estimate);

/// Decision-directed refinement: symbols with reliability >= threshold act
/// as virtual pilots; tap gains are re-fit by least squares on the sparse
/// delay-Doppler input-output relation over equations whose contributors are
/// all known. Returns the prior unchanged (decision_directed = false) when
/// no usable equations exist.
ChannelEstimate ddce_refine(const DdGrid& received, const DdGrid& detected,
                            const std::vector<double>& reliabilities,
                            const ChannelEstimate& prior, double reliability_threshold);

/// ||est - truth||^2 / ||truth||^2 over canonical dense DD responses; the
/// truth is rendered under the estimate's window.
double nmse(const ChannelEstimate& est, const ChannelRealization& truth);

}  // namespace otfs
