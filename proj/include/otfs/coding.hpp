// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "otfs/rng.hpp"

namespace otfs {

using Bits = std::vector<std::uint8_t>;

/// Rate-1/2 constraint-length-7 convolutional code, generators 171/133
/// (octal), zero-tailed.
struct ConvCode {
    int constraint_length = 7;
    unsigned g0 = 0171;
    unsigned g1 = 0133;

    int tail_bits() const { return constraint_length - 1; }
    int coded_length(int msg_len) const { return 2 * (msg_len + tail_bits()); }
    double rate() const { return 0.5; }
};

/// Zero-tailed encoding; output holds the two generator streams interleaved
/// (g0 bit first), length 2 * (len + 6).
Bits conv_encode(const Bits& bits, const ConvCode& code = {});

/// Soft-input Viterbi decoding maximizing sum llr * (1 - 2 bit); positive
/// LLR favors bit 0. Input length must be 2 * (msg_len + 6); the tail is
/// stripped from the returned message. Metric ties prefer the branch on the
/// all-zero side (lower predecessor state).
Bits viterbi_decode(const std::vector<double>& llrs, int msg_len,
                    const ConvCode& code = {});

/// Seeded random bit-interleaver; a fixed seed gives the same permutation on
/// every run.
struct Interleaver {
    std::vector<std::uint32_t> perm;
    std::uint64_t seed = 0;

    static Interleaver make(std::size_t length, std::uint64_t seed);
    static Interleaver identity(std::size_t length);
};

template <typename T>
std::vector<T> interleave(const std::vector<T>& x, const Interleaver& il) {
    if (x.size() != il.perm.size())
        throw std::invalid_argument("interleave: length mismatch");
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[il.perm[i]] = x[i];
    return out;
}

template <typename T>
std::vector<T> deinterleave(const std::vector<T>& x, const Interleaver& il) {
    if (x.size() != il.perm.size())
        throw std::invalid_argument("deinterleave: length mismatch");
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[il.perm[i]];
    return out;
}

}  // namespace otfs
