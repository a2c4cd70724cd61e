// SPDX-License-Identifier: Apache-2.0
#include "otfs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "otfs/coding.hpp"
#include "otfs/transforms.hpp"

namespace otfs {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t curve_stream(const SimConfig& cfg) {
    return mix_seed(cfg.seed, hash_label(cfg.label + "/" + cfg.curve));
}

std::vector<int> data_cells_of(const FrameParams& p,
                               const std::vector<std::uint8_t>* reserved) {
    std::vector<int> cells;
    cells.reserve(static_cast<std::size_t>(p.grid_size()));
    for (int i = 0; i < p.grid_size(); ++i)
        if (!reserved || !(*reserved)[static_cast<std::size_t>(i)]) cells.push_back(i);
    return cells;
}

Bits random_bits(Rng& rng, std::size_t count) {
    Bits b(count);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng.uniform_int(2));
    return b;
}

int bits_to_index(const Bits& bits, std::size_t offset, int bps) {
    int idx = 0;
    for (int j = 0; j < bps; ++j) idx = (idx << 1) | bits[offset + static_cast<std::size_t>(j)];
    return idx;
}

/// Transmit-side payload description shared by the coded and uncoded paths.
struct TxFrame {
    Bits msg;        // message bits (coded) or raw payload bits (uncoded)
    Bits cell_bits;  // bits as mapped onto cells, post interleaving
    std::vector<int> cells;
};

TxFrame draw_payload(const SimConfig& cfg, const FrameParams& p,
                     const std::vector<std::uint8_t>* reserved,
                     const Constellation& cnst, Rng& rng) {
    TxFrame tx;
    tx.cells = data_cells_of(p, reserved);
    const std::size_t total_bits = tx.cells.size() * static_cast<std::size_t>(cnst.bits_per_symbol);
    if (!cfg.coded) {
        tx.msg = random_bits(rng, total_bits);
        tx.cell_bits = tx.msg;
        return tx;
    }
    const long msg_len = static_cast<long>(total_bits) / 2 - 6;
    require(msg_len >= 1, "coded frame: grid too small for the rate-1/2 zero-tailed code");
    require(total_bits % 2 == 0, "coded frame: cell bit count must be even");
    tx.msg = random_bits(rng, static_cast<std::size_t>(msg_len));
    const Bits coded = conv_encode(tx.msg);
    const Interleaver il =
        Interleaver::make(coded.size(), mix_seed(cfg.seed, hash_label("interleaver")));
    tx.cell_bits = interleave(coded, il);
    return tx;
}

void map_symbols(DdGrid& grid, const TxFrame& tx, const Constellation& cnst) {
    const int bps = cnst.bits_per_symbol;
    for (std::size_t i = 0; i < tx.cells.size(); ++i) {
        const int idx = bits_to_index(tx.cell_bits, i * static_cast<std::size_t>(bps), bps);
        grid.values[static_cast<std::size_t>(tx.cells[i])] = cnst.points[idx];
    }
}

/// Count errors and (for coded frames) run the decoder.
void score_frame(const SimConfig& cfg, const TxFrame& tx, const Constellation& cnst,
                 const DetectionResult& res, FrameRecord& rec) {
    const int bps = cnst.bits_per_symbol;
    if (!cfg.coded) {
        long long errs = 0;
        for (std::size_t i = 0; i < tx.cells.size(); ++i) {
            const int got = res.hard_index(tx.cells[i], cnst.order);
            const int want = bits_to_index(tx.cell_bits, i * static_cast<std::size_t>(bps), bps);
            for (int b = 0; b < bps; ++b)
                errs += ((got >> b) ^ (want >> b)) & 1;
        }
        rec.bits = static_cast<long long>(tx.msg.size());
        rec.bit_errors = errs;
        rec.frame_error = errs > 0;
        return;
    }
    std::vector<double> llrs(tx.cells.size() * static_cast<std::size_t>(bps));
    for (std::size_t i = 0; i < tx.cells.size(); ++i)
        for (int b = 0; b < bps; ++b)
            llrs[i * static_cast<std::size_t>(bps) + b] =
                res.llrs[static_cast<std::size_t>(tx.cells[i]) * bps + b];
    const Interleaver il =
        Interleaver::make(llrs.size(), mix_seed(cfg.seed, hash_label("interleaver")));
    const std::vector<double> dellrs = deinterleave(llrs, il);
    const Bits decoded = viterbi_decode(dellrs, static_cast<int>(tx.msg.size()));
    long long errs = 0;
    for (std::size_t i = 0; i < tx.msg.size(); ++i) errs += decoded[i] != tx.msg[i];
    rec.bits = static_cast<long long>(tx.msg.size());
    rec.bit_errors = errs;
    rec.frame_error = errs > 0;
}

FrameRecord run_detect_frame(const SimConfig& cfg, const FrameParams& p,
                             double snr_db, Rng& rng) {
    const Constellation cnst = Constellation::from_order(cfg.mod_order);
    const double s2 = noise_variance(snr_db);
    FrameRecord rec;

    ChannelRealization ch = sample_channel(cfg.channel, p, rng);

    if (cfg.detector == DetectorKind::OfdmOneTap) {
        // Plain multicarrier transmission: QAM straight onto the TF grid.
        TxFrame tx = draw_payload(cfg, p, nullptr, cnst, rng);
        DdGrid cells(p);
        map_symbols(cells, tx, cnst);
        TfGrid x(p);
        x.values = cells.values;
        const TimeSignal txsig = heisenberg_modulate(x);
        const TimeSignal rx = add_awgn(apply_channel_time(txsig, ch), snr_db, rng);
        const TfGrid y = wigner_demodulate(rx);
        const DetectionResult res = detect_ofdm_onetap(y, ctf_grid(ch), s2, cnst);
        score_frame(cfg, tx, cnst, res, rec);
        rec.papr_db = papr_db(txsig);
        return rec;
    }

    const bool pilot_csi = cfg.csi == CsiMode::Pilot;
    PilotScheme scheme;
    std::vector<std::uint8_t> reserved;
    if (pilot_csi) {
        scheme = cfg.pilot_scheme();
        reserved = pilot_region_mask(p, scheme);
    }
    TxFrame tx = draw_payload(cfg, p, pilot_csi ? &reserved : nullptr, cnst, rng);
    DdGrid grid(p);
    map_symbols(grid, tx, cnst);
    if (pilot_csi) grid = embed_pilot(grid, scheme);

    TfGrid tf = isfft(grid);
    if (cfg.window.kind != WindowKind::Rectangular &&
        cfg.window.applied_at == WindowSide::Transmitter)
        tf = apply_tf_window(tf, cfg.window);
    const TimeSignal txsig = heisenberg_modulate(tf);
    const TimeSignal rx = add_awgn(apply_channel_time(txsig, ch), snr_db, rng);
    TfGrid ytf = wigner_demodulate(rx);
    if (cfg.window.kind != WindowKind::Rectangular &&
        cfg.window.applied_at == WindowSide::Receiver)
        ytf = apply_tf_window(ytf, cfg.window);
    const DdGrid y = sfft(ytf);

    std::vector<PathSpec> csi_paths;
    if (pilot_csi) {
        const ChannelEstimate est =
            estimate_dd(y, scheme, cfg.threshold_factor, cfg.window);
        csi_paths = est.to_paths();
    } else {
        csi_paths = ch.paths;
    }

    DetectionResult res;
    switch (cfg.detector) {
        case DetectorKind::Lmmse: {
            Eigen::Map<const Eigen::VectorXcd> yv(y.values.data(),
                                                  static_cast<int>(y.values.size()));
            Eigen::MatrixXcd h;
            if (pilot_csi) {
                ChannelRealization chest;
                chest.params = p;
                chest.paths = csi_paths;
                h = effective_dd_matrix_analytic(chest);
            } else {
                h = effective_dd_matrix(ch, cfg.window);
            }
            res = detect_lmmse(yv, h, s2, cnst, p);
            break;
        }
        case DetectorKind::MapOracle: {
            Eigen::Map<const Eigen::VectorXcd> yv(y.values.data(),
                                                  static_cast<int>(y.values.size()));
            const Eigen::MatrixXcd h = effective_dd_matrix(ch, cfg.window);
            res = detect_map(yv, h, s2, cnst, p);
            break;
        }
        case DetectorKind::Mpa: {
            int hw = cfg.mpa.doppler_halfwidth;
            for (const PathSpec& path : csi_paths)
                hw = std::max(hw, doppler_truncation_halfwidth(p, path.kappa));
            const auto rows = effective_dd_sparse_rows(p, csi_paths, hw);
            res = detect_mpa(y, rows, s2, cnst, cfg.mpa);
            break;
        }
        case DetectorKind::Cdid: {
            ChannelRealization chd = ch;
            if (pilot_csi) chd.paths = csi_paths;
            res = detect_cdid(rx, chd, s2, cnst, cfg.cdid);
            break;
        }
        default:
            throw std::invalid_argument("run_frame: unsupported detector for OTFS frames");
    }
    score_frame(cfg, tx, cnst, res, rec);
    rec.papr_db = papr_db(txsig);
    return rec;
}

FrameRecord run_estimate_frame(const SimConfig& cfg, const FrameParams& p,
                               double snr_db, Rng& rng) {
    const Constellation cnst = Constellation::from_order(cfg.mod_order);
    const double s2 = noise_variance(snr_db);
    FrameRecord rec;

    ChannelRealization ch = sample_channel(cfg.channel, p, rng);

    if (cfg.estimator == EstimatorKind::TfLattice) {
        // TF-domain training: a pilot lattice overlaid on TF-domain data.
        int sm = cfg.tf_stride_m;
        int sn = cfg.tf_stride_n;
        if (sm < 1 || sn < 1) {
            const PilotScheme dd_scheme = cfg.pilot_scheme();
            const int target = static_cast<int>(
                std::ceil(dd_scheme.eta(p) * p.grid_size()));
            // Densest lattice not exceeding a comparable cell budget, but
            // never below the DD overhead.
            int best_count = p.grid_size() + 1;
            for (int trym = 1; trym <= p.m; ++trym) {
                for (int tryn = 1; tryn <= p.n; ++tryn) {
                    const int count = ((p.m + trym - 1) / trym) * ((p.n + tryn - 1) / tryn);
                    if (count >= target && count < best_count) {
                        best_count = count;
                        sm = trym;
                        sn = tryn;
                    }
                }
            }
        }
        const auto mask = make_tf_pilot_lattice(p, sm, sn);
        TfGrid x(p);
        for (int i = 0; i < p.grid_size(); ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            if (mask[ii]) {
                // unit-power pilot with a pseudorandom QPSK phase
                const double ang = std::numbers::pi *
                                   (0.25 + 0.5 * static_cast<double>(rng.uniform_int(4)));
                x.values[ii] = cd(std::cos(ang), std::sin(ang));
            } else {
                x.values[ii] = cnst.points[rng.uniform_int(static_cast<std::uint64_t>(cnst.order))];
            }
        }
        const TimeSignal txsig = heisenberg_modulate(x);
        const TimeSignal rx = add_awgn(apply_channel_time(txsig, ch), snr_db, rng);
        const TfGrid y = wigner_demodulate(rx);
        const TfGrid hest = estimate_tf(y, mask, x);
        rec.nmse = nmse(estimate_from_ctf(hest), ch);
        rec.papr_db = papr_db(txsig);
        return rec;
    }

    PilotScheme scheme = cfg.pilot_scheme();
    DdGrid data(p);
    for (auto& v : data.values)
        v = cnst.points[rng.uniform_int(static_cast<std::uint64_t>(cnst.order))];
    const DdGrid frame = embed_pilot(data, scheme);

    TfGrid tf = isfft(frame);
    if (cfg.window.kind != WindowKind::Rectangular &&
        cfg.window.applied_at == WindowSide::Transmitter)
        tf = apply_tf_window(tf, cfg.window);
    const TimeSignal txsig = heisenberg_modulate(tf);
    const TimeSignal rx = add_awgn(apply_channel_time(txsig, ch), snr_db, rng);
    TfGrid ytf = wigner_demodulate(rx);
    if (cfg.window.kind != WindowKind::Rectangular &&
        cfg.window.applied_at == WindowSide::Receiver)
        ytf = apply_tf_window(ytf, cfg.window);
    const DdGrid y = sfft(ytf);

    const ChannelEstimate est0 =
        estimate_dd(y, scheme, cfg.threshold_factor, cfg.window);

    if (cfg.estimator == EstimatorKind::DdPilot) {
        rec.nmse = nmse(est0, ch);
        rec.papr_db = papr_db(txsig);
        return rec;
    }

    // Decision-directed refinement.
    rec.nmse_init = nmse(est0, ch);
    rec.nmse = rec.nmse_init;
    if (!est0.taps.empty()) {
        int hw = 0;
        for (const EstimatedTap& t : est0.taps)
            hw = std::max(hw, doppler_truncation_halfwidth(p, t.kappa));
        const auto rows = effective_dd_sparse_rows(p, est0.to_paths(), hw);
        const DetectionResult det = detect_mpa(y, rows, s2, cnst, cfg.mpa);
        DdGrid detected = det.hard;
        std::vector<double> reliability(static_cast<std::size_t>(p.grid_size()));
        for (int i = 0; i < p.grid_size(); ++i) {
            const double* post =
                det.posteriors.data() + static_cast<std::size_t>(i) * cnst.order;
            reliability[static_cast<std::size_t>(i)] = *std::max_element(post, post + cnst.order);
        }
        const auto mask = pilot_region_mask(p, scheme);
        for (int i = 0; i < p.grid_size(); ++i) {
            if (!mask[static_cast<std::size_t>(i)]) continue;
            detected.values[static_cast<std::size_t>(i)] = frame.values[static_cast<std::size_t>(i)];
            reliability[static_cast<std::size_t>(i)] = 1.0;
        }
        const ChannelEstimate refined =
            ddce_refine(y, detected, reliability, est0, cfg.ddce_reliability);
        rec.nmse = nmse(refined, ch);
    }
    rec.papr_db = papr_db(txsig);
    return rec;
}

FrameRecord run_papr_frame(const SimConfig& cfg, const FrameParams& p, Rng& rng) {
    const Constellation cnst = Constellation::from_order(cfg.mod_order);
    FrameRecord rec;
    TfGrid tf(p);
    if (cfg.papr_waveform == PaprWaveform::Otfs) {
        DdGrid dd(p);
        for (auto& v : dd.values)
            v = cnst.points[rng.uniform_int(static_cast<std::uint64_t>(cnst.order))];
        tf = isfft(dd);
    } else {
        for (auto& v : tf.values)
            v = cnst.points[rng.uniform_int(static_cast<std::uint64_t>(cnst.order))];
    }
    rec.papr_db = papr_db(heisenberg_modulate(tf));
    return rec;
}

}  // namespace

FrameParams SimConfig::frame_params() const {
    const int cp = cp_len >= 0 ? cp_len : channel.l_max;
    return FrameParams::make(m, n, delta_f, fc, cp);
}

PilotScheme SimConfig::pilot_scheme() const {
    PilotScheme s = PilotScheme::for_channel(frame_params(), channel, pilot_boost_db);
    if (guard_delay >= 0) s.guard_delay = guard_delay;
    if (guard_doppler >= 0) s.guard_doppler = guard_doppler;
    s.search_delay = search_delay;
    s.search_doppler = search_doppler;
    return s;
}

FrameRecord run_frame(const SimConfig& cfg, double snr_db, int snr_index,
                      long frame_index) {
    const FrameParams p = cfg.frame_params();
    const std::uint64_t sub = mix_seed(
        mix_seed(curve_stream(cfg), static_cast<std::uint64_t>(snr_index)),
        static_cast<std::uint64_t>(frame_index));
    Rng rng(sub);
    switch (cfg.task) {
        case SimTask::Detect: return run_detect_frame(cfg, p, snr_db, rng);
        case SimTask::Estimate: return run_estimate_frame(cfg, p, snr_db, rng);
        case SimTask::Papr: return run_papr_frame(cfg, p, rng);
    }
    throw std::logic_error("run_frame: unreachable");
}

Interval wilson_interval(long long successes, long long trials) {
    if (trials <= 0) return {0.0, 0.0};
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

const SnrRecord* SimResult::at_snr(double snr_db) const {
    for (const SnrRecord& r : records)
        if (std::abs(r.snr_db - snr_db) < 1e-9) return &r;
    return nullptr;
}

SimResult run_sweep(const SimConfig& cfg, int workers) {
    require(!cfg.snr_db.empty(), "run_sweep: empty SNR sweep");
    require(cfg.stop_frame_errors > 0 && cfg.max_frames > 0,
            "run_sweep: stop rule must be positive");
    validate_channel_config(cfg.channel, cfg.frame_params());
    workers = std::max(1, workers);

    const auto t0 = std::chrono::steady_clock::now();
    SimResult result;
    result.config = cfg;

    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = cfg.snr_db[si];
        std::vector<FrameRecord> recs;
        long done = 0;
        long frame_errors = 0;
        long batch = 256;
        while (true) {
            const long want = std::min<long>(batch, cfg.max_frames - done);
            if (want <= 0) break;
            recs.resize(static_cast<std::size_t>(done + want));
            std::atomic<long> next(done);
            const auto worker = [&]() {
                while (true) {
                    const long i = next.fetch_add(1);
                    if (i >= done + want) break;
                    recs[static_cast<std::size_t>(i)] =
                        run_frame(cfg, snr, static_cast<int>(si), i);
                }
            };
            if (workers == 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }
            done += want;
            frame_errors = 0;
            for (const FrameRecord& r : recs) frame_errors += r.frame_error ? 1 : 0;
            if (cfg.task == SimTask::Detect && frame_errors >= cfg.stop_frame_errors) break;
            if (done >= cfg.max_frames) break;
            batch = std::min<long>(batch * 2, 8192);
        }

        SnrRecord rec;
        rec.snr_db = snr;
        rec.frames = done;
        rec.frame_errors = frame_errors;
        rec.substream_seed = mix_seed(curve_stream(cfg), static_cast<std::uint64_t>(si));
        double nmse_sum = 0.0, nmse_init_sum = 0.0;
        long nmse_n = 0, nmse_init_n = 0;
        std::vector<double> paprs;
        for (const FrameRecord& r : recs) {
            rec.bits += r.bits;
            rec.bit_errors += r.bit_errors;
            if (!std::isnan(r.nmse)) {
                nmse_sum += r.nmse;
                ++nmse_n;
            }
            if (!std::isnan(r.nmse_init)) {
                nmse_init_sum += r.nmse_init;
                ++nmse_init_n;
            }
            if (!std::isnan(r.papr_db)) paprs.push_back(r.papr_db);
        }
        rec.ber = rec.bits > 0 ? static_cast<double>(rec.bit_errors) / rec.bits : 0.0;
        const Interval ci = wilson_interval(rec.bit_errors, rec.bits);
        rec.ber_ci_lo = ci.lo;
        rec.ber_ci_hi = ci.hi;
        rec.fer = rec.frames > 0 ? static_cast<double>(rec.frame_errors) / rec.frames : 0.0;
        if (nmse_n > 0) rec.nmse = nmse_sum / nmse_n;
        if (nmse_init_n > 0) rec.nmse_init = nmse_init_sum / nmse_init_n;
        if (!paprs.empty()) {
            std::sort(paprs.begin(), paprs.end());
            rec.papr_p50 = paprs[(paprs.size() - 1) / 2];
            rec.papr_p99 = paprs[std::min(paprs.size() - 1,
                                          static_cast<std::size_t>(std::ceil(
                                              0.99 * static_cast<double>(paprs.size()))) -
                                              1)];
        }
        result.records.push_back(rec);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::string SimConfig::echo() const {
    std::ostringstream os;
    os.precision(17);
    os << "label = " << label << "\n";
    os << "curve = " << curve << "\n";
    os << "task = "
       << (task == SimTask::Detect ? "detect"
                                   : task == SimTask::Estimate ? "estimate" : "papr")
       << "\n";
    os << "M = " << m << "\nN = " << n << "\n";
    os << "delta_f = " << delta_f << "\nfc = " << fc << "\n";
    os << "cp_len = " << frame_params().cp_len << "\n";
    os << "modulation = " << (mod_order == 2 ? "bpsk" : mod_order == 4 ? "qpsk" : "qam16")
       << "\n";
    os << "paths = " << channel.paths << "\nl_max = " << channel.l_max
       << "\nkappa_max = " << channel.kappa_max << "\n";
    os << "fractional_doppler = " << (channel.fractional_doppler ? "true" : "false")
       << "\n";
    os << "doppler_law = "
       << (channel.doppler_law == DopplerLaw::UniformBins ? "uniform" : "jakes") << "\n";
    if (channel.power_profile.kind == PowerProfileKind::Uniform)
        os << "power_profile = uniform\n";
    else
        os << "power_profile = exp:" << channel.power_profile.decay_rate << "\n";
    os << "detector = "
       << (detector == DetectorKind::OfdmOneTap
               ? "ofdm"
               : detector == DetectorKind::Lmmse
                     ? "lmmse"
                     : detector == DetectorKind::Mpa
                           ? "mpa"
                           : detector == DetectorKind::Cdid ? "cdid" : "map")
       << "\n";
    os << "csi = " << (csi == CsiMode::Genie ? "genie" : "pilot") << "\n";
    os << "coded = " << (coded ? "true" : "false") << "\n";
    os << "window = ";
    if (window.kind == WindowKind::Rectangular)
        os << "rect\n";
    else
        os << "dc:" << window.attenuation_db << "\n";
    os << "window_at = " << (window.applied_at == WindowSide::Transmitter ? "tx" : "rx")
       << "\n";
    os << "estimator = "
       << (estimator == EstimatorKind::DdPilot
               ? "dd"
               : estimator == EstimatorKind::TfLattice ? "tf" : "ddce")
       << "\n";
    os << "mpa_iters = " << mpa.max_iters << "\nmpa_damping = " << mpa.damping << "\n";
    os << "cdid_iters = " << cdid.max_iters << "\n";
    os << "threshold_factor = " << threshold_factor << "\n";
    os << "pilot_boost_db = " << pilot_boost_db << "\n";
    if (task == SimTask::Estimate || csi == CsiMode::Pilot) {
        const PilotScheme s = pilot_scheme();
        os << "pilot_pos = " << s.pilot_l << "," << s.pilot_k << "\n";
        os << "guard_delay = " << s.guard_delay << "\n";
        os << "guard_doppler = " << s.guard_doppler << "\n";
        os << "eta = " << s.eta(frame_params()) << "\n";
    }
    os << "snr_list = ";
    for (std::size_t i = 0; i < snr_db.size(); ++i)
        os << (i ? "," : "") << snr_db[i];
    os << "\n";
    os << "stop_frame_errors = " << stop_frame_errors << "\n";
    os << "max_frames = " << max_frames << "\n";
    os << "seed = " << seed << "\n";
    if (!note.empty()) os << "note = " << note << "\n";
    return os.str();
}

}  // namespace otfs
