// SPDX-License-Identifier: Apache-2.0
#include "otfs/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "otfs/errors.hpp"

namespace otfs {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double path_variance(const PowerProfile& prof, int delay_tap) {
    if (prof.kind == PowerProfileKind::Uniform) return 1.0;
    return std::exp(-prof.decay_rate * delay_tap);
}

}  // namespace

void validate_channel_config(const ChannelConfig& cfg, const FrameParams& p) {
    require(cfg.paths >= 1, "channel: path count must be >= 1");
    require(cfg.l_max >= 0 && cfg.l_max <= p.m - 1,
            "channel: l_max must be in [0, M-1]");
    require(cfg.kappa_max >= 0 && cfg.kappa_max <= static_cast<double>(p.n),
            "channel: kappa_max must be in [0, N]");
    require(cfg.paths - 1 <= cfg.l_max,
            "channel: P-1 distinct nonzero delays require P-1 <= l_max");
    if (cfg.power_profile.kind == PowerProfileKind::ExponentialDecay)
        require(cfg.power_profile.decay_rate >= 0.0,
                "channel: exponential decay rate must be >= 0");
}

ChannelRealization sample_channel(const ChannelConfig& cfg,
                                  const FrameParams& params, Rng& rng) {
    validate_channel_config(cfg, params);
    ChannelRealization ch;
    ch.params = params;
    ch.seed = rng.seed();
    ch.paths.resize(static_cast<std::size_t>(cfg.paths));

    // Delays: tap 0 fixed, remaining distinct draws from [1, l_max].
    std::vector<int> pool;
    for (int l = 1; l <= cfg.l_max; ++l) pool.push_back(l);
    rng.shuffle(pool);
    ch.paths[0].delay_tap = 0;
    for (int i = 1; i < cfg.paths; ++i) ch.paths[i].delay_tap = pool[i - 1];

    for (auto& p : ch.paths) {
        double kappa = 0.0;
        switch (cfg.doppler_law) {
            case DopplerLaw::UniformBins:
                kappa = rng.uniform(-cfg.kappa_max, cfg.kappa_max);
                break;
            case DopplerLaw::JakesCosine:
                kappa = cfg.kappa_max * std::cos(rng.uniform(0.0, kTwoPi));
                break;
        }
        if (!cfg.fractional_doppler) kappa = std::round(kappa);
        p.kappa = kappa;
    }

    double total_var = 0.0;
    std::vector<double> var(ch.paths.size());
    for (std::size_t i = 0; i < ch.paths.size(); ++i) {
        var[i] = path_variance(cfg.power_profile, ch.paths[i].delay_tap);
        total_var += var[i];
    }
    for (std::size_t i = 0; i < ch.paths.size(); ++i) {
        ch.paths[i].gain = rng.cgaussian() * std::sqrt(var[i] / total_var);
    }
    return ch;
}

TimeSignal apply_channel_time(const TimeSignal& ts, const ChannelRealization& ch) {
    require(ts.params == ch.params, "apply_channel_time: frame params mismatch");
    const auto& s = ts.samples;
    const int len = static_cast<int>(s.size());
    TimeSignal out(ts.params);
    const double cycles_per_sample_unit =
        1.0 / (static_cast<double>(ch.params.n) * ch.params.slot_samples());

    for (const PathSpec& p : ch.paths) {
        const double step = kTwoPi * p.kappa * cycles_per_sample_unit;
        for (int t = p.delay_tap; t < len; ++t) {
            const double ang = step * (t - p.delay_tap);
            out.samples[t] += p.gain * cd(std::cos(ang), std::sin(ang)) * s[t - p.delay_tap];
        }
    }
    return out;
}

double noise_variance(double es_n0_db, double es) {
    if (std::isinf(es_n0_db) && es_n0_db > 0) return 0.0;
    return es / std::pow(10.0, es_n0_db / 10.0);
}

TimeSignal add_awgn(const TimeSignal& ts, double es_n0_db, Rng& rng, double es) {
    const double var = noise_variance(es_n0_db, es);
    if (var == 0.0) return ts;
    TimeSignal out = ts;
    const double sigma = std::sqrt(var);
    for (cd& v : out.samples) v += sigma * rng.cgaussian();
    return out;
}

TfGrid ctf_grid(const ChannelRealization& ch) {
    const FrameParams& p = ch.params;
    TfGrid h(p);
    const double ts = p.sample_period();
    for (int n = 0; n < p.n; ++n) {
        const double t_mid = (static_cast<double>(n) * p.slot_samples() + p.cp_len +
                              0.5 * p.m) * ts;
        for (int m = 0; m < p.m; ++m) {
            const double fm = m * p.delta_f;
            cd acc(0.0, 0.0);
            for (const PathSpec& path : ch.paths) {
                const double ang = kTwoPi * (ch.doppler_hz(path) * t_mid -
                                             fm * ch.tau_of(path));
                acc += path.gain * cd(std::cos(ang), std::sin(ang));
            }
            h.at(m, n) = acc;
        }
    }
    return h;
}

cd path_phase(const FrameParams& p, double kappa, int l_out, int l_tap) {
    const double ang = kTwoPi * kappa *
                       static_cast<double>(p.cp_len + l_out - l_tap) /
                       (static_cast<double>(p.n) * p.slot_samples());
    return {std::cos(ang), std::sin(ang)};
}

cd dirichlet_kernel(double x, int n) {
    const double frac = x - n * std::round(x / n);
    if (std::abs(frac) < 1e-12) return {1.0, 0.0};
    const double num = std::sin(std::numbers::pi * frac);
    const double den = n * std::sin(std::numbers::pi * frac / n);
    const double ang = std::numbers::pi * (n - 1) * frac / n;
    return cd(std::cos(ang), std::sin(ang)) * (num / den);
}

DdGrid apply_effective_channel(const DdGrid& x, const ChannelRealization& ch,
                               const WindowSpec& w) {
    TfGrid tf = isfft(x);
    if (w.kind != WindowKind::Rectangular && w.applied_at == WindowSide::Transmitter)
        tf = apply_tf_window(tf, w);
    TimeSignal tx = heisenberg_modulate(tf);
    TimeSignal rx = apply_channel_time(tx, ch);
    TfGrid ytf = wigner_demodulate(rx);
    if (w.kind != WindowKind::Rectangular && w.applied_at == WindowSide::Receiver)
        ytf = apply_tf_window(ytf, w);
    return sfft(ytf);
}

Eigen::MatrixXcd effective_dd_matrix(const ChannelRealization& ch,
                                     const WindowSpec& w, int cap) {
    const int mn = ch.params.grid_size();
    if (mn > cap)
        throw resource_limit_error("effective_dd_matrix: M*N exceeds cap; use the operator form");
    Eigen::MatrixXcd h(mn, mn);
    DdGrid impulse(ch.params);
    for (int j = 0; j < mn; ++j) {
        std::fill(impulse.values.begin(), impulse.values.end(), cd(0.0, 0.0));
        impulse.values[static_cast<std::size_t>(j)] = cd(1.0, 0.0);
        const DdGrid resp = apply_effective_channel(impulse, ch, w);
        for (int i = 0; i < mn; ++i) h(i, j) = resp.values[static_cast<std::size_t>(i)];
    }
    return h;
}

Eigen::MatrixXcd effective_dd_matrix_analytic(const ChannelRealization& ch, int cap) {
    const FrameParams& p = ch.params;
    const int mn = p.grid_size();
    if (mn > cap)
        throw resource_limit_error("effective_dd_matrix_analytic: M*N exceeds cap");
    for (const PathSpec& path : ch.paths)
        require(path.delay_tap <= p.cp_len,
                "effective_dd_matrix_analytic: needs cp_len >= every delay tap");

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(mn, mn);
    for (const PathSpec& path : ch.paths) {
        for (int lo = 0; lo < p.m; ++lo) {
            const int li = (lo - path.delay_tap % p.m + p.m) % p.m;
            const cd base = path.gain * path_phase(p, path.kappa, lo, path.delay_tap);
            for (int ko = 0; ko < p.n; ++ko) {
                for (int ki = 0; ki < p.n; ++ki) {
                    const cd d = dirichlet_kernel(path.kappa + ki - ko, p.n);
                    if (std::norm(d) == 0.0) continue;
                    h(DdGrid::flat(p, lo, ko), DdGrid::flat(p, li, ki)) += base * d;
                }
            }
        }
    }
    return h;
}

int doppler_truncation_halfwidth(const FrameParams& params, double kappa,
                                 double energy_fraction) {
    const int n = params.n;
    if (std::abs(kappa - std::round(kappa)) < 1e-12) return 0;
    std::vector<double> e(static_cast<std::size_t>(n));
    double total = 0.0;
    const int center = static_cast<int>(std::lround(kappa));
    for (int d = 0; d < n; ++d) {
        // offset from the rounded center, circular
        e[d] = std::norm(dirichlet_kernel(kappa - center - (d <= n / 2 ? d : d - n), n));
        total += e[d];
    }
    double kept = e[0];
    int w = 0;
    while (kept < energy_fraction * total && w < n / 2) {
        ++w;
        kept += e[w];
        const int mirror = n - w;
        if (mirror != w && mirror < n) kept += e[static_cast<std::size_t>(mirror)];
    }
    return w;
}

std::vector<std::vector<SparseEntry>> effective_dd_sparse_rows(
    const FrameParams& params, const std::vector<PathSpec>& paths,
    int doppler_halfwidth) {
    const int m = params.m;
    const int n = params.n;
    const int mn = m * n;
    std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(mn));
    for (const PathSpec& path : paths) {
        require(path.delay_tap <= params.cp_len,
                "effective_dd_sparse_rows: needs cp_len >= every delay tap");
        const bool fractional = std::abs(path.kappa - std::round(path.kappa)) >= 1e-12;
        const int hw = fractional ? std::min(doppler_halfwidth, n / 2) : 0;
        // Window of at most n distinct Doppler residues around the peak.
        const int off_hi = std::min(hw, n - 1 - hw);
        const int kc = static_cast<int>(std::lround(path.kappa));
        for (int lo = 0; lo < m; ++lo) {
            const int li = (lo - path.delay_tap % m + m) % m;
            const cd base = path.gain * path_phase(params, path.kappa, lo, path.delay_tap);
            for (int ko = 0; ko < n; ++ko) {
                for (int off = -hw; off <= off_hi; ++off) {
                    // variable Doppler index ki with ko ~ ki + kappa
                    const int ki = ((ko - kc - off) % n + n) % n;
                    const cd coef = base * dirichlet_kernel(path.kappa + ki - ko, n);
                    if (std::norm(coef) == 0.0) continue;
                    auto& row = rows[static_cast<std::size_t>(DdGrid::flat(params, lo, ko))];
                    const int col = DdGrid::flat(params, li, ki);
                    bool merged = false;
                    for (SparseEntry& e : row) {
                        if (e.col == col) {
                            e.coef += coef;
                            merged = true;
                            break;
                        }
                    }
                    if (!merged) row.push_back({col, coef});
                }
            }
        }
    }
    return rows;
}

DdGrid dense_dd_response(const ChannelRealization& ch, const WindowSpec& w) {
    const FrameParams& p = ch.params;
    DdGrid impulse(p);
    impulse.values[0] = cd(1.0, 0.0);
    DdGrid resp = apply_effective_channel(impulse, ch, w);
    for (int k = 0; k < p.n; ++k) {
        const double ksym = k <= p.n / 2 ? k : k - p.n;
        for (int l = 0; l < p.m; ++l) {
            // probe sits at the origin, so the assumed tap delay equals the
            // observed delay and the phase reduces to the CP term
            resp.at(l, k) /= path_phase(p, ksym, l, l);
        }
    }
    return resp;
}

std::vector<Eigen::MatrixXcd> time_domain_slot_blocks(const ChannelRealization& ch) {
    const FrameParams& p = ch.params;
    for (const PathSpec& path : ch.paths)
        require(path.delay_tap <= p.cp_len,
                "time_domain_slot_blocks: needs cp_len >= every delay tap");
    std::vector<Eigen::MatrixXcd> blocks;
    blocks.reserve(static_cast<std::size_t>(p.n));
    const double cps = 1.0 / (static_cast<double>(p.n) * p.slot_samples());
    for (int s = 0; s < p.n; ++s) {
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(p.m, p.m);
        for (const PathSpec& path : ch.paths) {
            const double step = kTwoPi * path.kappa * cps;
            for (int q = 0; q < p.m; ++q) {
                const int t = s * p.slot_samples() + p.cp_len + q;
                const double ang = step * (t - path.delay_tap);
                b(q, (q - path.delay_tap % p.m + p.m) % p.m) +=
                    path.gain * cd(std::cos(ang), std::sin(ang));
            }
        }
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::string ChannelRealization::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "channel v1\n";
    os << "seed " << seed << "\n";
    os << "paths " << paths.size() << "\n";
    for (const PathSpec& p : paths) {
        os << p.gain.real() << " " << p.gain.imag() << " " << p.delay_tap << " "
           << p.kappa << "\n";
    }
    return os.str();
}

ChannelRealization ChannelRealization::from_text(const std::string& text,
                                                 const FrameParams& params) {
    std::istringstream is(text);
    std::string word, version;
    is >> word >> version;
    if (word != "channel" || version != "v1")
        throw std::invalid_argument("channel record: bad header");
    ChannelRealization ch;
    ch.params = params;
    std::size_t count = 0;
    while (is >> word) {
        if (word == "seed") {
            is >> ch.seed;
        } else if (word == "paths") {
            is >> count;
            ch.paths.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                double re, im;
                if (!(is >> re >> im >> ch.paths[i].delay_tap >> ch.paths[i].kappa))
                    throw std::invalid_argument("channel record: truncated path list");
                ch.paths[i].gain = cd(re, im);
            }
        } else {
            throw std::invalid_argument("channel record: unknown field " + word);
        }
    }
    if (ch.paths.empty()) throw std::invalid_argument("channel record: no paths");
    return ch;
}

}  // namespace otfs
