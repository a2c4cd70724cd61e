// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "otfs/channel.hpp"
#include "otfs/detection.hpp"
#include "otfs/estimation.hpp"
#include "otfs/params.hpp"

namespace otfs {

enum class SimTask { Detect, Estimate, Papr };
enum class DetectorKind { OfdmOneTap, Lmmse, Mpa, Cdid, MapOracle };
enum class CsiMode { Genie, Pilot };
enum class EstimatorKind { DdPilot, TfLattice, Ddce };
enum class PaprWaveform { Otfs, Ofdm };

/// One experiment curve: a full description of frame generation, channel,
/// receiver and sweep. A config file defines a base plus named curve
/// overrides.
struct SimConfig {
    std::string label = "run";
    std::string curve = "";

    SimTask task = SimTask::Detect;
    int m = 16;
    int n = 8;
    double delta_f = 15e3;
    double fc = 4e9;
    int cp_len = -1;  // -1: auto (max delay tap)
    int mod_order = 4;

    ChannelConfig channel{};

    // Pilot scheme (pilot CSI and the estimate task); -1 means auto sizing.
    double pilot_boost_db = 0.0;
    int guard_delay = -1;
    int guard_doppler = -1;
    int search_delay = -1;
    int search_doppler = -1;
    double threshold_factor = 3.0;

    EstimatorKind estimator = EstimatorKind::DdPilot;
    int tf_stride_m = -1;  // -1: auto from the DD scheme's overhead
    int tf_stride_n = -1;
    double ddce_reliability = 0.99;

    WindowSpec window{};

    DetectorKind detector = DetectorKind::Mpa;
    CsiMode csi = CsiMode::Genie;
    MpaConfig mpa{};
    CdidConfig cdid{};
    bool coded = false;

    PaprWaveform papr_waveform = PaprWaveform::Otfs;

    std::vector<double> snr_db{};
    int stop_frame_errors = 200;
    long max_frames = 200000;
    std::uint64_t seed = 1;
    std::string note = "";

    FrameParams frame_params() const;
    PilotScheme pilot_scheme() const;
    std::string echo() const;  // resolved flat key=value form
};

struct Experiment {
    std::string label;
    std::vector<SimConfig> curves;
};

/// Parse the flat key=value config format. Unknown keys are errors.
Experiment parse_experiment(const std::string& text);
/// Apply a single "key=value" or "curve.<name>.key=value" override.
void apply_override(Experiment& exp, const std::string& assignment);

const std::map<std::string, std::string>& preset_configs();
/// Load a config from a file path or a preset name.
Experiment load_experiment(const std::string& path_or_preset);

struct FrameRecord {
    long long bits = 0;
    long long bit_errors = 0;
    bool frame_error = false;
    double nmse = std::numeric_limits<double>::quiet_NaN();
    double nmse_init = std::numeric_limits<double>::quiet_NaN();
    double papr_db = std::numeric_limits<double>::quiet_NaN();
};

/// Deterministic function of (config seed, label, snr index, frame index).
FrameRecord run_frame(const SimConfig& cfg, double snr_db, int snr_index,
                      long frame_index);

struct SnrRecord {
    double snr_db = 0.0;
    long frames = 0;
    long long bits = 0;
    long long bit_errors = 0;
    long frame_errors = 0;
    double ber = 0.0;
    double ber_ci_lo = 0.0;
    double ber_ci_hi = 0.0;
    double fer = 0.0;
    double nmse = std::numeric_limits<double>::quiet_NaN();
    double nmse_init = std::numeric_limits<double>::quiet_NaN();
    double papr_p50 = std::numeric_limits<double>::quiet_NaN();
    double papr_p99 = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t substream_seed = 0;
};

struct SimResult {
    SimConfig config;
    std::vector<SnrRecord> records;
    double wall_seconds = 0.0;

    const SnrRecord* at_snr(double snr_db) const;
};

/// Runs frames per SNR point in fixed-size batches until the stop rule is
/// met. Batch boundaries are worker-independent, so results are bit-identical
/// for any worker count.
SimResult run_sweep(const SimConfig& cfg, int workers = 1);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// Wilson 95% score interval for a binomial proportion.
Interval wilson_interval(long long successes, long long trials);

void emit_csv(const SimResult& result, const std::string& path);
std::vector<SnrRecord> parse_csv(const std::string& path);
void emit_plot(const std::vector<SimResult>& results, const std::string& path,
               const std::string& title);
void write_manifest(const std::vector<SimResult>& results, const std::string& path);

/// Derived link-budget table for `otfs-lab info`.
std::string link_budget_report(const SimConfig& cfg, bool paper_compat_c = false);

}  // namespace otfs
