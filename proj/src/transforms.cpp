// SPDX-License-Identifier: Apache-2.0
#include "otfs/transforms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace otfs {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<cd>& x, bool inverse) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cd wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cd u = x[i + j];
                const cd v = x[i + j + len / 2] * w;
                x[i + j] = u + v;
                x[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void dft_direct(std::vector<cd>& x, bool inverse) {
    const std::size_t n = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cd> out(n, cd(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t t = 0; t < n; ++t) {
            const double ang =
                sign * 2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            out[k] += x[t] * cd(std::cos(ang), std::sin(ang));
        }
    }
    x.swap(out);
}

void check_dd(const DdGrid& g) {
    if (g.values.size() != static_cast<std::size_t>(g.params.grid_size()))
        throw std::invalid_argument("DD grid size does not match frame params");
}

void check_tf(const TfGrid& g) {
    if (g.values.size() != static_cast<std::size_t>(g.params.grid_size()))
        throw std::invalid_argument("TF grid size does not match frame params");
}

}  // namespace

double grid_energy(const std::vector<cd>& v) {
    double e = 0.0;
    for (const cd& x : v) e += std::norm(x);
    return e;
}

void dft_unitary(std::vector<cd>& x, bool inverse) {
    const std::size_t n = x.size();
    if (n <= 1) return;
    if (is_pow2(n)) {
        fft_radix2(x, inverse);
    } else {
        dft_direct(x, inverse);
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (cd& v : x) v *= s;
}

TfGrid isfft(const DdGrid& dd) {
    check_dd(dd);
    const int m = dd.params.m;
    const int n = dd.params.n;
    TfGrid tf(dd.params);

    // Factored form: inverse DFT along Doppler (k -> n), forward DFT along
    // delay (l -> m). Equals the direct double sum with the symmetric
    // 1/sqrt(MN) scaling.
    std::vector<cd> col(static_cast<std::size_t>(n));
    std::vector<cd> work(dd.values.size());
    for (int l = 0; l < m; ++l) {
        for (int k = 0; k < n; ++k) col[k] = dd.at(l, k);
        dft_unitary(col, true);
        for (int s = 0; s < n; ++s) work[static_cast<std::size_t>(s) * m + l] = col[s];
    }
    std::vector<cd> row(static_cast<std::size_t>(m));
    for (int s = 0; s < n; ++s) {
        for (int l = 0; l < m; ++l) row[l] = work[static_cast<std::size_t>(s) * m + l];
        dft_unitary(row, false);
        for (int q = 0; q < m; ++q) tf.at(q, s) = row[q];
    }
    return tf;
}

DdGrid sfft(const TfGrid& tf) {
    check_tf(tf);
    const int m = tf.params.m;
    const int n = tf.params.n;
    DdGrid dd(tf.params);

    std::vector<cd> row(static_cast<std::size_t>(m));
    std::vector<cd> work(tf.values.size());
    for (int s = 0; s < n; ++s) {
        for (int q = 0; q < m; ++q) row[q] = tf.at(q, s);
        dft_unitary(row, true);
        for (int l = 0; l < m; ++l) work[static_cast<std::size_t>(s) * m + l] = row[l];
    }
    std::vector<cd> col(static_cast<std::size_t>(n));
    for (int l = 0; l < m; ++l) {
        for (int s = 0; s < n; ++s) col[s] = work[static_cast<std::size_t>(s) * m + l];
        dft_unitary(col, false);
        for (int k = 0; k < n; ++k) dd.at(l, k) = col[k];
    }
    return dd;
}

TimeSignal heisenberg_modulate(const TfGrid& tf) {
    check_tf(tf);
    const int m = tf.params.m;
    const int n = tf.params.n;
    const int cp = tf.params.cp_len;
    TimeSignal ts(tf.params);

    std::vector<cd> slot(static_cast<std::size_t>(m));
    for (int s = 0; s < n; ++s) {
        for (int q = 0; q < m; ++q) slot[q] = tf.at(q, s);
        dft_unitary(slot, true);
        cd* out = ts.samples.data() + static_cast<std::size_t>(s) * (m + cp);
        for (int i = 0; i < cp; ++i) out[i] = slot[m - cp + i];
        for (int i = 0; i < m; ++i) out[cp + i] = slot[i];
    }
    return ts;
}

TfGrid wigner_demodulate(const TimeSignal& ts) {
    if (ts.samples.size() != static_cast<std::size_t>(ts.params.frame_samples()))
        throw std::invalid_argument("time signal length does not match frame params");
    const int m = ts.params.m;
    const int n = ts.params.n;
    const int cp = ts.params.cp_len;
    TfGrid tf(ts.params);

    std::vector<cd> slot(static_cast<std::size_t>(m));
    for (int s = 0; s < n; ++s) {
        const cd* in = ts.samples.data() + static_cast<std::size_t>(s) * (m + cp) + cp;
        for (int i = 0; i < m; ++i) slot[i] = in[i];
        dft_unitary(slot, false);
        for (int q = 0; q < m; ++q) tf.at(q, s) = slot[q];
    }
    return tf;
}

std::vector<double> dolph_chebyshev_window(int length, double attenuation_db) {
    if (length < 2) throw std::invalid_argument("dolph_chebyshev_window: length must be >= 2");
    if (!(attenuation_db >= 20.0 && attenuation_db <= 120.0))
        throw std::invalid_argument("dolph_chebyshev_window: attenuation must be in [20, 120] dB");

    const int order = length - 1;
    const double ripple = std::pow(10.0, attenuation_db / 20.0);
    const double beta = std::cosh(std::acosh(ripple) / order);

    // Chebyshev polynomial samples of the window spectrum.
    std::vector<cd> spec(static_cast<std::size_t>(length));
    for (int k = 0; k < length; ++k) {
        const double x = beta * std::cos(kPi * k / length);
        double t;
        if (x > 1.0) {
            t = std::cosh(order * std::acosh(x));
        } else if (x < -1.0) {
            t = (length % 2 == 0 ? -1.0 : 1.0) * std::cosh(order * std::acosh(-x));
        } else {
            t = std::cos(order * std::acos(x));
        }
        spec[k] = cd(t, 0.0);
        if (length % 2 == 0) {
            // Half-sample shift keeps even-length windows symmetric.
            const double ang = kPi * k / length;
            spec[k] *= cd(std::cos(ang), std::sin(ang));
        }
    }
    dft_unitary(spec, false);

    std::vector<double> w(static_cast<std::size_t>(length));
    if (length % 2 == 1) {
        const int h = (length + 1) / 2;
        for (int i = 0; i < h; ++i) w[h - 1 - i] = spec[i].real();
        for (int i = 1; i < h; ++i) w[h - 1 + i] = spec[i].real();
    } else {
        const int h = length / 2 + 1;
        std::vector<double> half(static_cast<std::size_t>(h));
        for (int i = 0; i < h; ++i) half[i] = spec[i].real();
        for (int i = 0; i < h - 1; ++i) w[i] = half[h - 1 - i];
        for (int i = 1; i < h; ++i) w[h - 2 + i] = half[i];
    }
    double peak = 0.0;
    for (double v : w) peak = std::max(peak, std::abs(v));
    for (double& v : w) v /= peak;
    return w;
}

std::vector<double> tf_window_gains(const FrameParams& p, const WindowSpec& w) {
    std::vector<double> gains(static_cast<std::size_t>(p.grid_size()), 1.0);
    if (w.kind == WindowKind::Rectangular) return gains;

    const auto taper = [&](int len) {
        if (len < 2) return std::vector<double>{1.0};
        return dolph_chebyshev_window(len, w.attenuation_db);
    };
    const std::vector<double> wf = taper(p.m);
    const std::vector<double> wt = taper(p.n);
    double e = 0.0;
    for (int n = 0; n < p.n; ++n)
        for (int m = 0; m < p.m; ++m) e += wf[m] * wf[m] * wt[n] * wt[n];
    const double scale = std::sqrt(static_cast<double>(p.grid_size()) / e);
    for (int n = 0; n < p.n; ++n)
        for (int m = 0; m < p.m; ++m)
            gains[static_cast<std::size_t>(n) * p.m + m] = scale * wf[m] * wt[n];
    return gains;
}

TfGrid apply_tf_window(const TfGrid& tf, const WindowSpec& w) {
    check_tf(tf);
    if (w.kind == WindowKind::Rectangular) return tf;
    TfGrid out = tf;
    const std::vector<double> gains = tf_window_gains(tf.params, w);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= gains[i];
    return out;
}

double papr_db(const TimeSignal& ts) {
    double peak = 0.0;
    double sum = 0.0;
    for (const cd& s : ts.samples) {
        const double p = std::norm(s);
        peak = std::max(peak, p);
        sum += p;
    }
    if (sum <= 0.0) throw std::invalid_argument("papr_db: signal is identically zero");
    const double mean = sum / static_cast<double>(ts.samples.size());
    return 10.0 * std::log10(peak / mean);
}

}  // namespace otfs
