// SPDX-License-Identifier: Apache-2.0
#include "otfs/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "otfs/errors.hpp"
#include "otfs/transforms.hpp"

namespace otfs {

namespace {

constexpr double kLlrClamp = 30.0;
constexpr double kVarFloor = 1e-15;

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

int gray_to_binary(int g) {
    int b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

/// Per-axis Gray-labeled PAM levels with unit-mean-square pair energy left
/// to the caller.
std::vector<double> pam_levels(int bits) {
    const int levels = 1 << bits;
    std::vector<double> v(static_cast<std::size_t>(levels));
    for (int g = 0; g < levels; ++g) {
        const int b = gray_to_binary(g);
        v[g] = static_cast<double>(2 * b - (levels - 1));
    }
    return v;
}

/// Normalize log weights into probabilities.
void log_normalize(const double* logw, int n, double* out) {
    double mx = logw[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, logw[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(logw[i] - mx);
        sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
}

int argmax_strict(const double* p, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

void finalize_from_posteriors(DetectionResult& r, const Constellation& c,
                              const FrameParams& params) {
    const int cells = params.grid_size();
    r.hard = DdGrid(params);
    for (int j = 0; j < cells; ++j) {
        const double* p = r.posteriors.data() + static_cast<std::size_t>(j) * c.order;
        r.hard.values[static_cast<std::size_t>(j)] = c.points[argmax_strict(p, c.order)];
    }
    r.llrs = soft_demap(r.posteriors, c);
    if (r.equalized.empty()) {
        r.equalized.resize(static_cast<std::size_t>(cells));
        for (int j = 0; j < cells; ++j) {
            cd mean(0.0, 0.0);
            const double* p = r.posteriors.data() + static_cast<std::size_t>(j) * c.order;
            for (int a = 0; a < c.order; ++a) mean += p[a] * c.points[a];
            r.equalized[static_cast<std::size_t>(j)] = mean;
        }
    }
}

}  // namespace

Constellation Constellation::bpsk() {
    Constellation c;
    c.order = 2;
    c.bits_per_symbol = 1;
    c.points = {cd(-1.0, 0.0), cd(1.0, 0.0)};
    return c;
}

Constellation Constellation::qpsk() {
    Constellation c;
    c.order = 4;
    c.bits_per_symbol = 2;
    const double s = 1.0 / std::sqrt(2.0);
    // bit 0 -> I axis, bit 1 -> Q axis; Gray per axis.
    c.points.resize(4);
    const std::vector<double> lv = pam_levels(1);
    for (int i = 0; i < 4; ++i) {
        const int bi = (i >> 1) & 1;
        const int bq = i & 1;
        c.points[i] = cd(lv[bi] * s, lv[bq] * s);
    }
    return c;
}

Constellation Constellation::qam16() {
    Constellation c;
    c.order = 16;
    c.bits_per_symbol = 4;
    const double s = 1.0 / std::sqrt(10.0);
    c.points.resize(16);
    const std::vector<double> lv = pam_levels(2);
    for (int i = 0; i < 16; ++i) {
        const int gi = (i >> 2) & 3;
        const int gq = i & 3;
        c.points[i] = cd(lv[gi] * s, lv[gq] * s);
    }
    return c;
}

Constellation Constellation::from_order(int order) {
    switch (order) {
        case 2: return bpsk();
        case 4: return qpsk();
        case 16: return qam16();
        default: throw std::invalid_argument("constellation: supported orders are 2, 4, 16");
    }
}

int Constellation::nearest(cd v) const {
    int best = 0;
    double bd = std::norm(v - points[0]);
    for (int i = 1; i < order; ++i) {
        const double d = std::norm(v - points[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

int DetectionResult::hard_index(int cell, int order) const {
    const double* p = posteriors.data() + static_cast<std::size_t>(cell) * order;
    return argmax_strict(p, order);
}

std::vector<double> soft_demap(const std::vector<double>& posteriors,
                               const Constellation& c) {
    const int cells = static_cast<int>(posteriors.size()) / c.order;
    std::vector<double> llrs(static_cast<std::size_t>(cells) * c.bits_per_symbol);
    for (int j = 0; j < cells; ++j) {
        const double* p = posteriors.data() + static_cast<std::size_t>(j) * c.order;
        for (int b = 0; b < c.bits_per_symbol; ++b) {
            double p0 = 0.0, p1 = 0.0;
            for (int a = 0; a < c.order; ++a) {
                if (c.bit(a, b) == 0)
                    p0 += p[a];
                else
                    p1 += p[a];
            }
            double llr;
            if (p1 <= 0.0 && p0 > 0.0)
                llr = kLlrClamp;
            else if (p0 <= 0.0 && p1 > 0.0)
                llr = -kLlrClamp;
            else
                llr = std::clamp(std::log(p0 / p1), -kLlrClamp, kLlrClamp);
            llrs[static_cast<std::size_t>(j) * c.bits_per_symbol + b] = llr;
        }
    }
    return llrs;
}

double dense_lmmse_flops(int n) {
    const double nn = static_cast<double>(n);
    return 8.0 / 3.0 * nn * nn * nn + 16.0 * nn * nn;
}

DetectionResult detect_lmmse(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                             double noise_var, const Constellation& c,
                             const FrameParams& params) {
    const int n = static_cast<int>(y.size());
    require(h.rows() == n && h.cols() == n, "detect_lmmse: dimension mismatch");
    require(params.grid_size() == n, "detect_lmmse: params do not match vector length");
    require(noise_var >= 0.0, "detect_lmmse: noise_var must be >= 0");

    DetectionResult r;
    double s2 = noise_var;
    if (s2 <= 0.0) {
        s2 = 1e-12;
        r.regularized = true;
    }
    Eigen::MatrixXcd a = h.adjoint() * h;
    a.diagonal().array() += s2;
    const Eigen::MatrixXcd k = a.inverse();
    const Eigen::VectorXcd xhat = k * (h.adjoint() * y);

    r.posteriors.assign(static_cast<std::size_t>(n) * c.order, 0.0);
    r.equalized.resize(static_cast<std::size_t>(n));
    std::vector<double> logw(static_cast<std::size_t>(c.order));
    for (int j = 0; j < n; ++j) {
        const double mu = std::clamp(1.0 - s2 * k(j, j).real(), 1e-12, 1.0 - 1e-15);
        const double v = std::max(mu * (1.0 - mu), kVarFloor);
        for (int aa = 0; aa < c.order; ++aa)
            logw[aa] = -std::norm(xhat(j) - mu * c.points[aa]) / v;
        log_normalize(logw.data(), c.order,
                      r.posteriors.data() + static_cast<std::size_t>(j) * c.order);
        r.equalized[static_cast<std::size_t>(j)] = xhat(j);
    }
    r.flops = dense_lmmse_flops(n);
    finalize_from_posteriors(r, c, params);
    return r;
}

DetectionResult detect_map(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& h,
                           double noise_var, const Constellation& c,
                           const FrameParams& params) {
    const int n = static_cast<int>(y.size());
    require(h.rows() == n && h.cols() == n, "detect_map: dimension mismatch");
    require(params.grid_size() == n, "detect_map: params do not match vector length");
    if (static_cast<double>(n) * c.bits_per_symbol > 20.0)
        throw resource_limit_error("detect_map: order^(MN) exceeds 2^20");

    const double s2 = noise_var > 0.0 ? noise_var : 1e-12;
    const std::size_t total = static_cast<std::size_t>(1) << (n * c.bits_per_symbol);

    // Two incremental enumeration passes: first for the reference distance,
    // then for the marginal accumulation.
    std::vector<int> digits(static_cast<std::size_t>(n));
    Eigen::VectorXcd resid(n);

    const auto reset = [&]() {
        std::fill(digits.begin(), digits.end(), 0);
        resid = y;
        for (int j = 0; j < n; ++j) resid -= h.col(j) * c.points[0];
    };
    const auto advance = [&]() -> bool {
        for (int j = 0; j < n; ++j) {
            const int a = digits[j];
            if (a + 1 < c.order) {
                digits[j] = a + 1;
                resid -= h.col(j) * (c.points[a + 1] - c.points[a]);
                return true;
            }
            digits[j] = 0;
            resid -= h.col(j) * (c.points[0] - c.points[a]);
        }
        return false;
    };

    reset();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < total; ++it) {
        dmin = std::min(dmin, resid.squaredNorm());
        if (it + 1 < total) advance();
    }

    DetectionResult r;
    r.posteriors.assign(static_cast<std::size_t>(n) * c.order, 0.0);
    reset();
    for (std::size_t it = 0; it < total; ++it) {
        const double w = std::exp(-(resid.squaredNorm() - dmin) / s2);
        for (int j = 0; j < n; ++j)
            r.posteriors[static_cast<std::size_t>(j) * c.order + digits[j]] += w;
        if (it + 1 < total) advance();
    }
    for (int j = 0; j < n; ++j) {
        double* p = r.posteriors.data() + static_cast<std::size_t>(j) * c.order;
        double sum = 0.0;
        for (int a = 0; a < c.order; ++a) sum += p[a];
        for (int a = 0; a < c.order; ++a) p[a] /= sum;
    }
    r.flops = 2.0 * static_cast<double>(total) * n * 8.0;
    finalize_from_posteriors(r, c, params);
    return r;
}

DetectionResult detect_mpa(const DdGrid& y,
                           const std::vector<std::vector<SparseEntry>>& rows,
                           double noise_var, const Constellation& c,
                           const MpaConfig& cfg) {
    const FrameParams& params = y.params;
    const int cells = params.grid_size();
    require(static_cast<int>(rows.size()) == cells, "detect_mpa: row count mismatch");
    require(cfg.damping > 0.0 && cfg.damping <= 1.0, "detect_mpa: damping must be in (0, 1]");
    require(cfg.max_iters >= 1, "detect_mpa: max_iters must be >= 1");
    require(c.order <= 16, "detect_mpa: constellation order capped at 16");
    const double s2 = std::max(noise_var, kVarFloor);

    // Edge storage parallels `rows`.
    struct Edge {
        double q[16];  // variable -> observation beliefs
        double loglik[16];
        cd mean;
        double var;
    };
    std::vector<std::vector<Edge>> edges(rows.size());
    std::vector<std::vector<std::pair<int, int>>> var_edges(static_cast<std::size_t>(cells));
    cd prior_mean(0.0, 0.0);
    double prior_e2 = 0.0;
    for (int a = 0; a < c.order; ++a) {
        prior_mean += c.points[a];
        prior_e2 += std::norm(c.points[a]);
    }
    prior_mean /= static_cast<double>(c.order);
    prior_e2 /= static_cast<double>(c.order);
    const double prior_var = prior_e2 - std::norm(prior_mean);

    int max_row_degree = 0;
    for (std::size_t rI = 0; rI < rows.size(); ++rI) {
        edges[rI].resize(rows[rI].size());
        max_row_degree = std::max(max_row_degree, static_cast<int>(rows[rI].size()));
        for (std::size_t i = 0; i < rows[rI].size(); ++i) {
            Edge& e = edges[rI][i];
            for (int a = 0; a < c.order; ++a) e.q[a] = 1.0 / c.order;
            e.mean = prior_mean;
            e.var = prior_var;
            var_edges[static_cast<std::size_t>(rows[rI][i].col)].push_back(
                {static_cast<int>(rI), static_cast<int>(i)});
        }
    }

    DetectionResult r;
    r.posteriors.assign(static_cast<std::size_t>(cells) * c.order, 1.0 / c.order);
    std::vector<double> belief(static_cast<std::size_t>(c.order));
    std::vector<double> logsum(static_cast<std::size_t>(c.order));
    std::vector<double> qnew(static_cast<std::size_t>(c.order));
    double flops = 0.0;
    r.converged = false;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // Observation update: Gaussian interference approximation.
        for (std::size_t rI = 0; rI < rows.size(); ++rI) {
            const auto& row = rows[rI];
            if (row.empty()) continue;
            cd tot_mean(0.0, 0.0);
            double tot_var = s2;
            for (std::size_t i = 0; i < row.size(); ++i) {
                tot_mean += row[i].coef * edges[rI][i].mean;
                tot_var += std::norm(row[i].coef) * edges[rI][i].var;
            }
            const cd yr = y.values[rI];
            for (std::size_t i = 0; i < row.size(); ++i) {
                Edge& e = edges[rI][i];
                const cd mu = tot_mean - row[i].coef * e.mean;
                const double v =
                    std::max(tot_var - std::norm(row[i].coef) * e.var, kVarFloor);
                for (int a = 0; a < c.order; ++a)
                    e.loglik[a] = -std::norm(yr - mu - row[i].coef * c.points[a]) / v;
            }
            flops += static_cast<double>(row.size()) * (10.0 + 12.0 * c.order);
        }

        // Variable update: beliefs and damped extrinsic messages.
        double delta = 0.0;
        for (int cell = 0; cell < cells; ++cell) {
            const auto& ve = var_edges[static_cast<std::size_t>(cell)];
            double* post = r.posteriors.data() + static_cast<std::size_t>(cell) * c.order;
            if (ve.empty()) continue;
            std::fill(logsum.begin(), logsum.end(), 0.0);
            for (const auto& [rI, i] : ve)
                for (int a = 0; a < c.order; ++a) logsum[a] += edges[rI][i].loglik[a];
            log_normalize(logsum.data(), c.order, belief.data());
            for (int a = 0; a < c.order; ++a) {
                delta = std::max(delta, std::abs(belief[a] - post[a]));
                post[a] = belief[a];
            }
            for (const auto& [rI, i] : ve) {
                Edge& e = edges[rI][i];
                for (int a = 0; a < c.order; ++a) qnew[a] = logsum[a] - e.loglik[a];
                log_normalize(qnew.data(), c.order, qnew.data());
                cd mean(0.0, 0.0);
                double e2 = 0.0;
                for (int a = 0; a < c.order; ++a) {
                    e.q[a] = cfg.damping * qnew[a] + (1.0 - cfg.damping) * e.q[a];
                    mean += e.q[a] * c.points[a];
                    e2 += e.q[a] * std::norm(c.points[a]);
                }
                e.mean = mean;
                e.var = std::max(e2 - std::norm(mean), 0.0);
            }
            flops += static_cast<double>(ve.size()) * 14.0 * c.order;
        }

        r.iterations_used = iter;
        if (max_row_degree <= 1) {
            // No interference anywhere: the first sweep is exact.
            r.converged = true;
            break;
        }
        if (delta < cfg.tol) {
            r.converged = true;
            break;
        }
    }
    r.flops = flops;
    finalize_from_posteriors(r, c, params);
    return r;
}

DetectionResult detect_mpa(const DdGrid& y, const ChannelRealization& ch,
                           double noise_var, const Constellation& c,
                           const MpaConfig& cfg) {
    int hw = cfg.doppler_halfwidth;
    for (const PathSpec& p : ch.paths)
        hw = std::max(hw, doppler_truncation_halfwidth(ch.params, p.kappa));
    const auto rows = effective_dd_sparse_rows(ch.params, ch.paths, hw);
    return detect_mpa(y, rows, noise_var, c, cfg);
}

DetectionResult detect_cdid(const TimeSignal& received, const ChannelRealization& ch,
                            double noise_var, const Constellation& c,
                            const CdidConfig& cfg) {
    const FrameParams& p = received.params;
    require(p == ch.params, "detect_cdid: frame params mismatch");
    require(cfg.max_iters >= 1, "detect_cdid: max_iters must be >= 1");
    const int m = p.m;
    const int n = p.n;
    const int cells = m * n;

    DetectionResult r;
    double s2 = noise_var;
    if (s2 <= 0.0) {
        s2 = 1e-12;
        r.regularized = true;
    }

    const std::vector<Eigen::MatrixXcd> blocks = time_domain_slot_blocks(ch);

    // Received payload, CP stripped; flat index n*M + p.
    Eigen::VectorXcd ypay(cells);
    for (int s = 0; s < n; ++s)
        for (int q = 0; q < m; ++q)
            ypay(s * m + q) =
                received.samples[static_cast<std::size_t>(s) * p.slot_samples() + p.cp_len + q];

    // Unitary DD <-> time-payload map: per delay row, IDFT across Doppler.
    const auto to_time = [&](const Eigen::VectorXcd& dd) {
        Eigen::VectorXcd out(cells);
        std::vector<cd> line(static_cast<std::size_t>(n));
        for (int l = 0; l < m; ++l) {
            for (int k = 0; k < n; ++k) line[k] = dd(k * m + l);
            dft_unitary(line, true);
            for (int s = 0; s < n; ++s) out(s * m + l) = line[s];
        }
        return out;
    };
    const auto to_dd = [&](const Eigen::VectorXcd& time) {
        Eigen::VectorXcd out(cells);
        std::vector<cd> line(static_cast<std::size_t>(n));
        for (int l = 0; l < m; ++l) {
            for (int s = 0; s < n; ++s) line[s] = time(s * m + l);
            dft_unitary(line, false);
            for (int k = 0; k < n; ++k) out(k * m + l) = line[k];
        }
        return out;
    };

    // Denoiser extrinsics (DD domain), initialized to the symbol prior.
    Eigen::VectorXcd md = Eigen::VectorXcd::Zero(cells);
    Eigen::VectorXd vd = Eigen::VectorXd::Ones(cells);

    Eigen::VectorXcd mu_post = Eigen::VectorXcd::Zero(cells);
    Eigen::VectorXcd me_dd(cells);
    Eigen::VectorXd ve_dd(cells);
    r.posteriors.assign(static_cast<std::size_t>(cells) * c.order, 1.0 / c.order);
    std::vector<double> logw(static_cast<std::size_t>(c.order));
    double flops = 0.0;
    r.converged = false;

    constexpr double kVarCap = 1e9;
    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        // Time-domain prior from the DD extrinsics.
        const Eigen::VectorXcd ms = to_time(md);
        Eigen::VectorXd vs(m);  // per-delay prior variance, equal across slots
        for (int l = 0; l < m; ++l) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += vd(k * m + l);
            vs(l) = std::max(acc / n, kVarFloor);
        }

        // Per-slot LMMSE with diagonal prior.
        Eigen::VectorXcd mhat(cells);
        Eigen::VectorXd vhat(cells);
        for (int s = 0; s < n; ++s) {
            const Eigen::MatrixXcd& b = blocks[static_cast<std::size_t>(s)];
            Eigen::MatrixXcd gram = b * vs.asDiagonal() * b.adjoint();
            gram.diagonal().array() += s2;
            const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
            const Eigen::VectorXcd innov =
                ypay.segment(s * m, m) - b * ms.segment(s * m, m);
            const Eigen::VectorXcd sol = llt.solve(innov);
            const Eigen::MatrixXcd cinv = llt.solve(b);  // gram^-1 B
            for (int q = 0; q < m; ++q) {
                const cd corr = b.col(q).dot(sol);
                mhat(s * m + q) = ms(s * m + q) + vs(q) * corr;
                const double quad = std::real(b.col(q).dot(cinv.col(q)));
                vhat(s * m + q) = std::clamp(vs(q) - vs(q) * vs(q) * quad,
                                             kVarFloor, kVarCap);
            }
        }
        flops += n * (8.0 / 3.0 * m * m * m + 16.0 * m * m);

        // Posterior back to DD; variances mix as per-delay averages under
        // the unitary map (the time blocks are slot-diagonal).
        const Eigen::VectorXcd mdd = to_dd(mhat);
        Eigen::VectorXd vdd(cells);
        for (int l = 0; l < m; ++l) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s) acc += vhat(s * m + l);
            const double v = acc / n;
            for (int k = 0; k < n; ++k) vdd(k * m + l) = v;
        }

        // Extrinsic of the equalizer.
        for (int j = 0; j < cells; ++j) {
            const double inv = 1.0 / vdd(j) - 1.0 / vd(j);
            if (inv <= 1.0 / kVarCap) {
                ve_dd(j) = kVarCap;
                me_dd(j) = cd(0.0, 0.0);
            } else {
                ve_dd(j) = 1.0 / inv;
                me_dd(j) = ve_dd(j) * (mdd(j) / vdd(j) - md(j) / vd(j));
            }
        }

        // Symbol-by-symbol DD denoiser.
        double delta = 0.0;
        Eigen::VectorXd phi(cells);
        for (int j = 0; j < cells; ++j) {
            for (int a = 0; a < c.order; ++a)
                logw[a] = -std::norm(me_dd(j) - c.points[a]) / ve_dd(j);
            double* post = r.posteriors.data() + static_cast<std::size_t>(j) * c.order;
            log_normalize(logw.data(), c.order, post);
            cd mean(0.0, 0.0);
            double e2 = 0.0;
            for (int a = 0; a < c.order; ++a) {
                mean += post[a] * c.points[a];
                e2 += post[a] * std::norm(c.points[a]);
            }
            delta = std::max(delta, std::abs(mean - mu_post(j)));
            mu_post(j) = mean;
            phi(j) = std::clamp(e2 - std::norm(mean), kVarFloor, kVarCap);
        }
        flops += 14.0 * cells * c.order;

        r.iterations_used = iter;
        if (delta < cfg.tol) {
            r.converged = true;
            break;
        }
        if (iter == cfg.max_iters) break;

        // Denoiser extrinsic feeding the next equalization.
        for (int j = 0; j < cells; ++j) {
            const double inv = 1.0 / phi(j) - 1.0 / ve_dd(j);
            if (inv <= 1.0 / kVarCap) {
                vd(j) = kVarCap;
                md(j) = cd(0.0, 0.0);
            } else {
                const double v = 1.0 / inv;
                vd(j) = v;
                md(j) = v * (mu_post(j) / phi(j) - me_dd(j) / ve_dd(j));
            }
        }
    }

    r.flops = flops;
    r.equalized.assign(me_dd.data(), me_dd.data() + cells);
    finalize_from_posteriors(r, c, p);
    return r;
}

DetectionResult detect_ofdm_onetap(const TfGrid& y, const TfGrid& h_est,
                                   double noise_var, const Constellation& c) {
    const FrameParams& p = y.params;
    require(h_est.params == p, "detect_ofdm_onetap: params mismatch");
    require(noise_var >= 0.0, "detect_ofdm_onetap: noise_var must be >= 0");
    const int cells = p.grid_size();

    DetectionResult r;
    r.posteriors.assign(static_cast<std::size_t>(cells) * c.order, 0.0);
    r.equalized.resize(static_cast<std::size_t>(cells));
    std::vector<double> logw(static_cast<std::size_t>(c.order));
    for (int j = 0; j < cells; ++j) {
        const cd h = h_est.values[static_cast<std::size_t>(j)];
        const double denom = std::norm(h) + noise_var;
        double* post = r.posteriors.data() + static_cast<std::size_t>(j) * c.order;
        if (denom < 1e-30) {
            for (int a = 0; a < c.order; ++a) post[a] = 1.0 / c.order;
            r.equalized[static_cast<std::size_t>(j)] = cd(0.0, 0.0);
            continue;
        }
        const cd xhat = std::conj(h) * y.values[static_cast<std::size_t>(j)] / denom;
        const double mu = std::clamp(std::norm(h) / denom, 1e-12, 1.0 - 1e-15);
        const double v = std::max(mu * (1.0 - mu), kVarFloor);
        for (int a = 0; a < c.order; ++a)
            logw[a] = -std::norm(xhat - mu * c.points[a]) / v;
        log_normalize(logw.data(), c.order, post);
        r.equalized[static_cast<std::size_t>(j)] = xhat;
    }
    r.flops = 20.0 * cells * c.order;
    finalize_from_posteriors(r, c, p);
    return r;
}

}  // namespace otfs
