// SPDX-License-Identifier: Apache-2.0
#include "otfs/coding.hpp"

#include <bit>
#include <stdexcept>

namespace otfs {

namespace {

// Shift-register window: newest bit at bit 6, oldest at bit 0.
inline std::uint8_t parity7(unsigned w) {
    return static_cast<std::uint8_t>(std::popcount(w) & 1);
}

}  // namespace

Bits conv_encode(const Bits& bits, const ConvCode& code) {
    if (bits.empty()) throw std::invalid_argument("conv_encode: empty input");
    Bits out;
    out.reserve(2 * (bits.size() + static_cast<std::size_t>(code.tail_bits())));
    unsigned state = 0;
    const auto push = [&](unsigned b) {
        const unsigned w = (b << 6) | state;
        out.push_back(parity7(w & code.g0));
        out.push_back(parity7(w & code.g1));
        state = w >> 1;
    };
    for (std::uint8_t b : bits) push(b & 1u);
    for (int i = 0; i < code.tail_bits(); ++i) push(0);
    return out;
}

Bits viterbi_decode(const std::vector<double>& llrs, int msg_len,
                    const ConvCode& code) {
    if (msg_len < 1) throw std::invalid_argument("viterbi_decode: msg_len must be >= 1");
    const int steps = msg_len + code.tail_bits();
    if (llrs.size() != static_cast<std::size_t>(2 * steps))
        throw std::invalid_argument("viterbi_decode: llr length must be 2*(msg_len+6)");

    constexpr int kStates = 64;
    constexpr double kNegInf = -1e300;

    // Per-state branch outputs for input bit b: out[b][state].
    std::uint8_t out0[2][kStates], out1[2][kStates];
    for (int s = 0; s < kStates; ++s) {
        for (unsigned b = 0; b < 2; ++b) {
            const unsigned w = (b << 6) | static_cast<unsigned>(s);
            out0[b][s] = parity7(w & code.g0);
            out1[b][s] = parity7(w & code.g1);
        }
    }

    std::vector<double> pm(kStates, kNegInf), npm(kStates);
    pm[0] = 0.0;
    std::vector<std::uint8_t> pred(static_cast<std::size_t>(steps) * kStates);

    for (int t = 0; t < steps; ++t) {
        const double l0 = llrs[static_cast<std::size_t>(2 * t)];
        const double l1 = llrs[static_cast<std::size_t>(2 * t) + 1];
        std::fill(npm.begin(), npm.end(), kNegInf);
        std::uint8_t* pt = pred.data() + static_cast<std::size_t>(t) * kStates;
        for (int ns = 0; ns < kStates; ++ns) {
            const unsigned b = static_cast<unsigned>(ns) >> 5;
            const int p0 = (ns & 31) << 1;
            for (int which = 0; which < 2; ++which) {
                const int sp = p0 | which;
                if (pm[sp] == kNegInf) continue;
                const double metric =
                    pm[sp] + l0 * (1.0 - 2.0 * out0[b][sp]) + l1 * (1.0 - 2.0 * out1[b][sp]);
                // Strict > keeps the lower predecessor on ties.
                if (metric > npm[ns]) {
                    npm[ns] = metric;
                    pt[ns] = static_cast<std::uint8_t>(which);
                }
            }
        }
        pm.swap(npm);
    }

    Bits decoded(static_cast<std::size_t>(steps));
    int s = 0;  // zero tail terminates in state 0
    for (int t = steps - 1; t >= 0; --t) {
        decoded[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(s >> 5);
        const int p0 = (s & 31) << 1;
        s = p0 | pred[static_cast<std::size_t>(t) * kStates + s];
    }
    decoded.resize(static_cast<std::size_t>(msg_len));
    return decoded;
}

Interleaver Interleaver::make(std::size_t length, std::uint64_t seed) {
    Interleaver il;
    il.seed = seed;
    il.perm.resize(length);
    for (std::size_t i = 0; i < length; ++i) il.perm[i] = static_cast<std::uint32_t>(i);
    Rng rng(seed);
    rng.shuffle(il.perm);
    return il;
}

Interleaver Interleaver::identity(std::size_t length) {
    Interleaver il;
    il.perm.resize(length);
    for (std::size_t i = 0; i < length; ++i) il.perm[i] = static_cast<std::uint32_t>(i);
    return il;
}

}  // namespace otfs
