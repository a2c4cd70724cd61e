// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "otfs/grids.hpp"

namespace otfs {

/// Unitary DFT of x in place; inverse=true applies the conjugate kernel.
/// Radix-2 fast path for power-of-two lengths, direct evaluation otherwise.
void dft_unitary(std::vector<cd>& x, bool inverse);

/// DD -> TF. X[m,n] = (1/sqrt(MN)) sum_{l,k} x[l,k] exp(+j2pi(nk/N - ml/M)).
TfGrid isfft(const DdGrid& dd);

/// TF -> DD, exact inverse of isfft.
DdGrid sfft(const TfGrid& tf);

/// TF grid to baseband: per slot, unitary length-M inverse DFT of the
/// subcarrier column, cyclic prefix prepended, slots concatenated in time.
TimeSignal heisenberg_modulate(const TfGrid& tf);

/// Inverse of heisenberg_modulate: per slot, drop the CP and apply the
/// unitary length-M DFT.
TfGrid wigner_demodulate(const TimeSignal& ts);

enum class WindowKind { Rectangular, DolphChebyshev };
enum class WindowSide { Transmitter, Receiver };

struct WindowSpec {
    WindowKind kind = WindowKind::Rectangular;
    double attenuation_db = 60.0;  // Dolph-Chebyshev sidelobe level
    WindowSide applied_at = WindowSide::Receiver;

    static WindowSpec rectangular() { return {}; }
    static WindowSpec dolph_chebyshev(double atten_db,
                                      WindowSide side = WindowSide::Receiver) {
        return {WindowKind::DolphChebyshev, atten_db, side};
    }
};

/// Dolph-Chebyshev taper with equiripple sidelobes at -attenuation_db,
/// normalized to peak 1. Symmetric. length >= 2, attenuation in [20, 120].
std::vector<double> dolph_chebyshev_window(int length, double attenuation_db);

/// Separable 2D taper W[m,n] = wf[m] * wt[n] scaled so ||W||_F^2 = MN.
/// Rectangular kind is the identity.
std::vector<double> tf_window_gains(const FrameParams& p, const WindowSpec& w);

/// Elementwise multiply by tf_window_gains. Identity for Rectangular.
TfGrid apply_tf_window(const TfGrid& tf, const WindowSpec& w);

/// Peak-to-average power ratio in dB. Rejects all-zero input.
double papr_db(const TimeSignal& ts);

}  // namespace otfs
