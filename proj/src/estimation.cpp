// SPDX-License-Identifier: Apache-2.0
#include "otfs/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace otfs {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

int wrap(int v, int n) { return ((v % n) + n) % n; }

}  // namespace

double PilotScheme::eta(const FrameParams& p) const {
    const int area = (2 * guard_delay + 1) * (2 * guard_doppler + 1);
    return static_cast<double>(area) / p.grid_size();
}

PilotScheme PilotScheme::for_channel(const FrameParams& p, const ChannelConfig& cfg,
                                     double boost_db) {
    PilotScheme s;
    s.pilot_l = p.m / 2;
    s.pilot_k = p.n / 2;
    s.amplitude = std::sqrt(static_cast<double>(p.grid_size())) *
                  std::pow(10.0, boost_db / 20.0);
    s.guard_delay = cfg.l_max;
    int gk = static_cast<int>(std::ceil(2.0 * cfg.kappa_max));
    if (cfg.fractional_doppler) gk += (p.n + 15) / 16;
    s.guard_doppler = std::min(gk, (p.n - 1) / 2);
    return s;
}

std::vector<std::uint8_t> pilot_region_mask(const FrameParams& p,
                                            const PilotScheme& scheme) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(p.grid_size()), 0);
    for (int dk = -scheme.guard_doppler; dk <= scheme.guard_doppler; ++dk) {
        for (int dl = -scheme.guard_delay; dl <= scheme.guard_delay; ++dl) {
            const int l = wrap(scheme.pilot_l + dl, p.m);
            const int k = wrap(scheme.pilot_k + dk, p.n);
            mask[static_cast<std::size_t>(DdGrid::flat(p, l, k))] = 1;
        }
    }
    return mask;
}

DdGrid embed_pilot(const DdGrid& data, const PilotScheme& scheme) {
    const FrameParams& p = data.params;
    require(scheme.pilot_l >= 0 && scheme.pilot_l < p.m &&
                scheme.pilot_k >= 0 && scheme.pilot_k < p.n,
            "embed_pilot: pilot position outside grid");
    require(scheme.amplitude > 0, "embed_pilot: pilot amplitude must be > 0");
    require(2 * scheme.guard_delay + 1 <= p.m && 2 * scheme.guard_doppler + 1 <= p.n,
            "embed_pilot: guard box does not fit the grid");

    DdGrid out = data;
    const auto mask = pilot_region_mask(p, scheme);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.values[i] = cd(0.0, 0.0);
    out.at(scheme.pilot_l, scheme.pilot_k) = cd(scheme.amplitude, 0.0);
    return out;
}

ChannelEstimate estimate_dd(const DdGrid& received, const PilotScheme& scheme,
                            double threshold_factor, const WindowSpec& w) {
    const FrameParams& p = received.params;
    require(threshold_factor > 0, "estimate_dd: threshold factor must be > 0");
    const int sd = std::min(scheme.effective_search_delay(), p.m - 1);
    const int sk = std::min(scheme.effective_search_doppler(), (p.n - 1) / 2);

    // Noise level from guard cells at negative delay offsets: the channel is
    // causal, so they carry no pilot response.
    double sigma2 = 0.0;
    int ncells = 0;
    for (int dl = -scheme.guard_delay; dl < 0; ++dl) {
        for (int dk = -scheme.guard_doppler; dk <= scheme.guard_doppler; ++dk) {
            const int l = wrap(scheme.pilot_l + dl, p.m);
            const int k = wrap(scheme.pilot_k + dk, p.n);
            sigma2 += std::norm(received.at(l, k));
            ++ncells;
        }
    }
    if (ncells > 0) {
        sigma2 /= ncells;
    } else {
        // Guard-free scheme: robust median over the search region. For an
        // exponential |cell|^2 the median is sigma^2 * ln 2.
        std::vector<double> mags;
        for (int dl = 0; dl <= sd; ++dl)
            for (int dk = -sk; dk <= sk; ++dk)
                mags.push_back(std::norm(
                    received.at(wrap(scheme.pilot_l + dl, p.m),
                                wrap(scheme.pilot_k + dk, p.n))));
        std::sort(mags.begin(), mags.end());
        sigma2 = mags.empty() ? 0.0 : mags[mags.size() / 2] / std::numbers::ln2;
    }

    const double threshold = threshold_factor * std::sqrt(sigma2);
    std::vector<EstimatedTap> taps;
    for (int dl = 0; dl <= sd; ++dl) {
        for (int dk = -sk; dk <= sk; ++dk) {
            const int l = wrap(scheme.pilot_l + dl, p.m);
            const int k = wrap(scheme.pilot_k + dk, p.n);
            const cd v = received.at(l, k);
            if (std::abs(v) <= threshold) continue;
            const cd phase = path_phase(p, dk, l, dl);
            taps.push_back({v / (scheme.amplitude * phase), dl, static_cast<double>(dk)});
        }
    }
    ChannelEstimate est = ChannelEstimate::from_taps(p, taps, w);
    est.noise_var_est = sigma2;
    return est;
}

std::vector<PathSpec> ChannelEstimate::to_paths() const {
    std::vector<PathSpec> paths;
    paths.reserve(taps.size());
    for (const EstimatedTap& t : taps) paths.push_back({t.gain, t.delay_tap, t.kappa});
    return paths;
}

ChannelEstimate ChannelEstimate::from_taps(const FrameParams& p,
                                           const std::vector<EstimatedTap>& taps,
                                           const WindowSpec& w) {
    ChannelEstimate est;
    est.taps = taps;
    est.window_used = w;
    est.dense = DdGrid(p);
    for (const EstimatedTap& t : taps) {
        require(t.delay_tap >= 0 && t.delay_tap < p.m, "estimate: tap delay outside grid");
        est.dense.at(t.delay_tap, wrap(static_cast<int>(std::lround(t.kappa)), p.n)) +=
            t.gain;
    }
    return est;
}

ChannelEstimate ChannelEstimate::from_dense(const DdGrid& dense, const WindowSpec& w) {
    ChannelEstimate est;
    est.dense = dense;
    est.window_used = w;
    return est;
}

std::vector<std::uint8_t> make_tf_pilot_lattice(const FrameParams& p,
                                                int stride_m, int stride_n) {
    require(stride_m >= 1 && stride_n >= 1, "pilot lattice: strides must be >= 1");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(p.grid_size()), 0);
    for (int n = 0; n < p.n; n += stride_n)
        for (int m = 0; m < p.m; m += stride_m)
            mask[static_cast<std::size_t>(n) * p.m + m] = 1;
    return mask;
}

TfGrid estimate_tf(const TfGrid& received_tf, const std::vector<std::uint8_t>& pilot_mask,
                   const TfGrid& known_pilots) {
    const FrameParams& p = received_tf.params;
    require(pilot_mask.size() == static_cast<std::size_t>(p.grid_size()),
            "estimate_tf: mask size mismatch");
    require(known_pilots.params == p, "estimate_tf: pilot grid params mismatch");

    TfGrid h(p);
    std::vector<std::uint8_t> filled(static_cast<std::size_t>(p.grid_size()), 0);
    bool any = false;
    for (int n = 0; n < p.n; ++n) {
        for (int m = 0; m < p.m; ++m) {
            const std::size_t i = static_cast<std::size_t>(n) * p.m + m;
            if (!pilot_mask[i]) continue;
            const cd x = known_pilots.values[i];
            require(std::norm(x) > 0, "estimate_tf: zero-valued pilot");
            h.values[i] = received_tf.values[i] / x;
            filled[i] = 1;
            any = true;
        }
    }
    require(any, "estimate_tf: empty pilot mask");

    // Pass 1: along subcarriers within pilot-bearing slots.
    std::vector<int> pilot_slots;
    for (int n = 0; n < p.n; ++n) {
        std::vector<int> rows;
        for (int m = 0; m < p.m; ++m)
            if (filled[static_cast<std::size_t>(n) * p.m + m]) rows.push_back(m);
        if (rows.empty()) continue;
        pilot_slots.push_back(n);
        for (int m = 0; m < p.m; ++m) {
            if (filled[static_cast<std::size_t>(n) * p.m + m]) continue;
            const auto hi = std::lower_bound(rows.begin(), rows.end(), m);
            cd v;
            if (hi == rows.begin()) {
                v = h.at(rows.front(), n);  // clamp low edge
            } else if (hi == rows.end()) {
                v = h.at(rows.back(), n);  // clamp high edge
            } else {
                const int m1 = *hi;
                const int m0 = *(hi - 1);
                const double t = static_cast<double>(m - m0) / (m1 - m0);
                v = (1.0 - t) * h.at(m0, n) + t * h.at(m1, n);
            }
            h.at(m, n) = v;
        }
    }

    // Pass 2: along slots, between fully interpolated pilot slots.
    for (int m = 0; m < p.m; ++m) {
        for (int n = 0; n < p.n; ++n) {
            if (std::find(pilot_slots.begin(), pilot_slots.end(), n) != pilot_slots.end())
                continue;
            const auto hi = std::lower_bound(pilot_slots.begin(), pilot_slots.end(), n);
            cd v;
            if (hi == pilot_slots.begin()) {
                v = h.at(m, pilot_slots.front());
            } else if (hi == pilot_slots.end()) {
                v = h.at(m, pilot_slots.back());
            } else {
                const int n1 = *hi;
                const int n0 = *(hi - 1);
                const double t = static_cast<double>(n - n0) / (n1 - n0);
                v = (1.0 - t) * h.at(m, n0) + t * h.at(m, n1);
            }
            h.at(m, n) = v;
        }
    }
    return h;
}

ChannelEstimate estimate_from_ctf(const TfGrid& ctf_estimate) {
    const FrameParams& p = ctf_estimate.params;
    DdGrid dd = sfft(ctf_estimate);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.grid_size()));
    const double cps = 1.0 / (static_cast<double>(p.n) * p.slot_samples());
    for (int k = 0; k < p.n; ++k) {
        const double ksym = k <= p.n / 2 ? k : k - p.n;
        const double ang = -2.0 * std::numbers::pi * ksym * (p.cp_len + 0.5 * p.m) * cps;
        const cd strip(std::cos(ang), std::sin(ang));
        for (int l = 0; l < p.m; ++l) dd.at(l, k) *= scale * strip;
    }
    return ChannelEstimate::from_dense(dd, WindowSpec::rectangular());
}

ChannelEstimate ddce_refine(const DdGrid& received, const DdGrid& detected,
                            const std::vector<double>& reliabilities,
                            const ChannelEstimate& prior, double reliability_threshold) {
    const FrameParams& p = received.params;
    require(detected.params == p, "ddce_refine: params mismatch");
    require(reliabilities.size() == static_cast<std::size_t>(p.grid_size()),
            "ddce_refine: reliability grid size mismatch");

    ChannelEstimate out = prior;
    out.decision_directed = false;
    if (prior.taps.empty()) return out;

    std::vector<std::uint8_t> known(reliabilities.size());
    for (std::size_t i = 0; i < reliabilities.size(); ++i)
        known[i] = reliabilities[i] >= reliability_threshold ? 1 : 0;

    const int t = static_cast<int>(prior.taps.size());
    std::vector<Eigen::VectorXcd> arows;
    std::vector<cd> b;
    Eigen::VectorXcd row(t);
    for (int ko = 0; ko < p.n; ++ko) {
        for (int lo = 0; lo < p.m; ++lo) {
            bool usable = true;
            for (int j = 0; j < t && usable; ++j) {
                const EstimatedTap& tap = prior.taps[static_cast<std::size_t>(j)];
                const int ks = static_cast<int>(std::lround(tap.kappa));
                const int li = wrap(lo - tap.delay_tap, p.m);
                const int ki = wrap(ko - ks, p.n);
                const std::size_t src = static_cast<std::size_t>(DdGrid::flat(p, li, ki));
                if (!known[src]) {
                    usable = false;
                    break;
                }
                row(j) = path_phase(p, tap.kappa, lo, tap.delay_tap) * detected.values[src];
            }
            if (!usable) continue;
            arows.push_back(row);
            b.push_back(received.at(lo, ko));
        }
    }
    if (static_cast<int>(arows.size()) < t) return out;

    Eigen::MatrixXcd a(static_cast<int>(arows.size()), t);
    Eigen::VectorXcd bv(static_cast<int>(b.size()));
    for (std::size_t i = 0; i < arows.size(); ++i) {
        a.row(static_cast<int>(i)) = arows[i].transpose();
        bv(static_cast<int>(i)) = b[i];
    }
    const Eigen::VectorXcd g = a.colPivHouseholderQr().solve(bv);

    std::vector<EstimatedTap> taps = prior.taps;
    for (int j = 0; j < t; ++j) taps[static_cast<std::size_t>(j)].gain = g(j);
    ChannelEstimate refined = ChannelEstimate::from_taps(p, taps, prior.window_used);
    refined.decision_directed = true;
    const Eigen::VectorXcd resid = bv - a * g;
    refined.noise_var_est =
        resid.squaredNorm() / std::max<int>(1, static_cast<int>(arows.size()) - t);
    return refined;
}

double nmse(const ChannelEstimate& est, const ChannelRealization& truth) {
    const DdGrid truth_dense = dense_dd_response(truth, est.window_used);
    require(est.dense.values.size() == truth_dense.values.size(),
            "nmse: estimate and truth sizes differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth_dense.values.size(); ++i) {
        num += std::norm(est.dense.values[i] - truth_dense.values[i]);
        den += std::norm(truth_dense.values[i]);
    }
    require(den > 0, "nmse: zero-energy truth");
    return num / den;
}

std::string ChannelEstimate::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "estimate v1\n";
    os << "window " << (window_used.kind == WindowKind::Rectangular ? "rect" : "dc")
       << " " << window_used.attenuation_db << " "
       << (window_used.applied_at == WindowSide::Transmitter ? "tx" : "rx") << "\n";
    os << "noise_var " << noise_var_est << "\n";
    os << "taps " << taps.size() << "\n";
    for (const EstimatedTap& t : taps)
        os << t.gain.real() << " " << t.gain.imag() << " " << t.delay_tap << " "
           << t.kappa << "\n";
    return os.str();
}

ChannelEstimate ChannelEstimate::from_text(const std::string& text,
                                           const FrameParams& p) {
    std::istringstream is(text);
    std::string word, version;
    is >> word >> version;
    if (word != "estimate" || version != "v1")
        throw std::invalid_argument("estimate record: bad header");
    WindowSpec w;
    double nv = 0.0;
    std::vector<EstimatedTap> taps;
    while (is >> word) {
        if (word == "window") {
            std::string kind, side;
            double atten;
            is >> kind >> atten >> side;
            w.kind = kind == "dc" ? WindowKind::DolphChebyshev : WindowKind::Rectangular;
            w.attenuation_db = atten;
            w.applied_at = side == "tx" ? WindowSide::Transmitter : WindowSide::Receiver;
        } else if (word == "noise_var") {
            is >> nv;
        } else if (word == "taps") {
            std::size_t count = 0;
            is >> count;
            taps.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                double re, im;
                if (!(is >> re >> im >> taps[i].delay_tap >> taps[i].kappa))
                    throw std::invalid_argument("estimate record: truncated tap list");
                taps[i].gain = cd(re, im);
            }
        } else {
            throw std::invalid_argument("estimate record: unknown field " + word);
        }
    }
    ChannelEstimate est = ChannelEstimate::from_taps(p, taps, w);
    est.noise_var_est = nv;
    return est;
}

}  // namespace otfs
