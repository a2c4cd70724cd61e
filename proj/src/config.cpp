// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "otfs/harness.hpp"

namespace otfs {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool parse_bool(const std::string& v, const std::string& key) {
    const std::string s = lower(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

double parse_num(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

int parse_int_or_auto(const std::string& v, const std::string& key) {
    if (lower(v) == "auto") return -1;
    return static_cast<int>(parse_num(v, key));
}

/// Assign one key to a curve config. Returns false for unknown keys.
bool assign(SimConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "label") {
        c.label = v;
    } else if (key == "note") {
        c.note = v;
    } else if (key == "task") {
        const std::string s = lower(v);
        if (s == "detect") c.task = SimTask::Detect;
        else if (s == "estimate") c.task = SimTask::Estimate;
        else if (s == "papr") c.task = SimTask::Papr;
        else throw std::invalid_argument("config: unknown task " + v);
    } else if (key == "m") {
        c.m = static_cast<int>(parse_num(v, key));
    } else if (key == "n") {
        c.n = static_cast<int>(parse_num(v, key));
    } else if (key == "delta_f") {
        c.delta_f = parse_num(v, key);
    } else if (key == "fc") {
        c.fc = parse_num(v, key);
    } else if (key == "cp_len") {
        c.cp_len = parse_int_or_auto(v, key);
    } else if (key == "modulation") {
        const std::string s = lower(v);
        if (s == "bpsk") c.mod_order = 2;
        else if (s == "qpsk") c.mod_order = 4;
        else if (s == "qam16" || s == "16qam") c.mod_order = 16;
        else throw std::invalid_argument("config: unknown modulation " + v);
    } else if (key == "paths") {
        c.channel.paths = static_cast<int>(parse_num(v, key));
    } else if (key == "l_max") {
        c.channel.l_max = static_cast<int>(parse_num(v, key));
    } else if (key == "kappa_max") {
        c.channel.kappa_max = parse_num(v, key);
    } else if (key == "fractional_doppler") {
        c.channel.fractional_doppler = parse_bool(v, key);
    } else if (key == "doppler_law") {
        const std::string s = lower(v);
        if (s == "uniform") c.channel.doppler_law = DopplerLaw::UniformBins;
        else if (s == "jakes") c.channel.doppler_law = DopplerLaw::JakesCosine;
        else throw std::invalid_argument("config: unknown doppler_law " + v);
    } else if (key == "power_profile") {
        const std::string s = lower(v);
        if (s == "uniform") {
            c.channel.power_profile = {PowerProfileKind::Uniform, 0.0};
        } else if (s.rfind("exp:", 0) == 0) {
            c.channel.power_profile = {PowerProfileKind::ExponentialDecay,
                                       parse_num(s.substr(4), key)};
        } else {
            throw std::invalid_argument("config: unknown power_profile " + v);
        }
    } else if (key == "pilot_boost_db") {
        c.pilot_boost_db = parse_num(v, key);
    } else if (key == "guard_delay") {
        c.guard_delay = parse_int_or_auto(v, key);
    } else if (key == "guard_doppler") {
        c.guard_doppler = parse_int_or_auto(v, key);
    } else if (key == "search_delay") {
        c.search_delay = parse_int_or_auto(v, key);
    } else if (key == "search_doppler") {
        c.search_doppler = parse_int_or_auto(v, key);
    } else if (key == "threshold_factor") {
        c.threshold_factor = parse_num(v, key);
    } else if (key == "estimator") {
        const std::string s = lower(v);
        if (s == "dd") c.estimator = EstimatorKind::DdPilot;
        else if (s == "tf") c.estimator = EstimatorKind::TfLattice;
        else if (s == "ddce") c.estimator = EstimatorKind::Ddce;
        else throw std::invalid_argument("config: unknown estimator " + v);
    } else if (key == "tf_stride_m") {
        c.tf_stride_m = parse_int_or_auto(v, key);
    } else if (key == "tf_stride_n") {
        c.tf_stride_n = parse_int_or_auto(v, key);
    } else if (key == "ddce_reliability") {
        c.ddce_reliability = parse_num(v, key);
    } else if (key == "window") {
        const std::string s = lower(v);
        if (s == "rect") {
            c.window.kind = WindowKind::Rectangular;
        } else if (s.rfind("dc:", 0) == 0) {
            c.window.kind = WindowKind::DolphChebyshev;
            c.window.attenuation_db = parse_num(s.substr(3), key);
        } else {
            throw std::invalid_argument("config: unknown window " + v);
        }
    } else if (key == "window_at") {
        const std::string s = lower(v);
        if (s == "tx") c.window.applied_at = WindowSide::Transmitter;
        else if (s == "rx") c.window.applied_at = WindowSide::Receiver;
        else throw std::invalid_argument("config: unknown window_at " + v);
    } else if (key == "detector") {
        const std::string s = lower(v);
        if (s == "ofdm") c.detector = DetectorKind::OfdmOneTap;
        else if (s == "lmmse") c.detector = DetectorKind::Lmmse;
        else if (s == "mpa") c.detector = DetectorKind::Mpa;
        else if (s == "cdid") c.detector = DetectorKind::Cdid;
        else if (s == "map") c.detector = DetectorKind::MapOracle;
        else throw std::invalid_argument("config: unknown detector " + v);
    } else if (key == "csi") {
        const std::string s = lower(v);
        if (s == "genie") c.csi = CsiMode::Genie;
        else if (s == "pilot") c.csi = CsiMode::Pilot;
        else throw std::invalid_argument("config: unknown csi mode " + v);
    } else if (key == "mpa_iters") {
        c.mpa.max_iters = static_cast<int>(parse_num(v, key));
    } else if (key == "mpa_damping") {
        c.mpa.damping = parse_num(v, key);
    } else if (key == "cdid_iters") {
        c.cdid.max_iters = static_cast<int>(parse_num(v, key));
    } else if (key == "coded") {
        c.coded = parse_bool(v, key);
    } else if (key == "papr_waveform") {
        const std::string s = lower(v);
        if (s == "otfs") c.papr_waveform = PaprWaveform::Otfs;
        else if (s == "ofdm") c.papr_waveform = PaprWaveform::Ofdm;
        else throw std::invalid_argument("config: unknown papr_waveform " + v);
    } else if (key == "snr_start" || key == "snr_stop" || key == "snr_step") {
        return false;  // handled by the experiment-level parser
    } else if (key == "snr_list") {
        c.snr_db.clear();
        std::stringstream ss(v);
        std::string tok;
        while (std::getline(ss, tok, ',')) c.snr_db.push_back(parse_num(trim(tok), key));
    } else if (key == "stop_frame_errors") {
        c.stop_frame_errors = static_cast<int>(parse_num(v, key));
    } else if (key == "max_frames") {
        c.max_frames = static_cast<long>(parse_num(v, key));
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(parse_num(v, key));
    } else {
        return false;
    }
    return true;
}

struct SweepSpec {
    double start = 0.0, stop = 20.0, step = 2.5;
    bool touched = false;
};

std::vector<double> expand_sweep(const SweepSpec& sw) {
    std::vector<double> out;
    if (sw.step <= 0) throw std::invalid_argument("config: snr_step must be > 0");
    for (double s = sw.start; s <= sw.stop + 1e-9; s += sw.step) out.push_back(s);
    return out;
}

}  // namespace

Experiment parse_experiment(const std::string& text) {
    SimConfig base;
    SweepSpec base_sweep;
    // curve name -> (overrides in file order)
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
        curves;

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));

        if (key.rfind("curve.", 0) == 0) {
            const std::string rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": expected curve.<name>.<key>");
            const std::string name = rest.substr(0, dot);
            const std::string ckey = rest.substr(dot + 1);
            auto it = std::find_if(curves.begin(), curves.end(),
                                   [&](const auto& c) { return c.first == name; });
            if (it == curves.end()) {
                curves.push_back({name, {}});
                it = curves.end() - 1;
            }
            it->second.push_back({ckey, value});
            continue;
        }

        if (key == "snr_start") {
            base_sweep.start = parse_num(value, key);
            base_sweep.touched = true;
        } else if (key == "snr_stop") {
            base_sweep.stop = parse_num(value, key);
            base_sweep.touched = true;
        } else if (key == "snr_step") {
            base_sweep.step = parse_num(value, key);
            base_sweep.touched = true;
        } else if (!assign(base, key, value)) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key " + key);
        }
    }
    if (base.snr_db.empty() || base_sweep.touched) base.snr_db = expand_sweep(base_sweep);

    Experiment exp;
    exp.label = base.label;
    if (curves.empty()) {
        base.curve = base.label;
        exp.curves.push_back(base);
        return exp;
    }
    for (const auto& [name, overrides] : curves) {
        SimConfig c = base;
        c.curve = name;
        SweepSpec sweep = base_sweep;
        bool sweep_touched = false;
        for (const auto& [k, v] : overrides) {
            if (k == "snr_start") {
                sweep.start = parse_num(v, k);
                sweep_touched = true;
            } else if (k == "snr_stop") {
                sweep.stop = parse_num(v, k);
                sweep_touched = true;
            } else if (k == "snr_step") {
                sweep.step = parse_num(v, k);
                sweep_touched = true;
            } else if (!assign(c, k, v)) {
                throw std::invalid_argument("config: unknown curve key " + k);
            }
        }
        if (sweep_touched) c.snr_db = expand_sweep(sweep);
        exp.curves.push_back(c);
    }
    return exp;
}

void apply_override(Experiment& exp, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override: expected key=value, got " + assignment);
    std::string key = lower(trim(assignment.substr(0, eq)));
    const std::string value = trim(assignment.substr(eq + 1));

    if (key.rfind("curve.", 0) == 0) {
        const std::string rest = key.substr(6);
        const auto dot = rest.find('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("override: expected curve.<name>.<key>");
        const std::string name = rest.substr(0, dot);
        const std::string ckey = rest.substr(dot + 1);
        for (SimConfig& c : exp.curves) {
            if (c.curve != name) continue;
            if (!assign(c, ckey, value))
                throw std::invalid_argument("override: unknown key " + ckey);
            return;
        }
        throw std::invalid_argument("override: no curve named " + name);
    }
    for (SimConfig& c : exp.curves) {
        if (key == "snr_start" || key == "snr_stop" || key == "snr_step") {
            throw std::invalid_argument(
                "override: use snr_list=... to replace the sweep");
        }
        if (!assign(c, key, value))
            throw std::invalid_argument("override: unknown key " + key);
    }
    if (key == "label") exp.label = exp.curves.front().label;
}

namespace {

const char* kFig4 = R"(# DD vs TF channel estimation, windowing and decision-directed refinement.
# Grid and channel follow the estimation experiment: 5 paths, kappa_max = 2,
# l_max = 4 on a 32 x 32 grid. Unstated knobs are lab decisions: integer
# uniform-bin Doppler for the DD/TF comparison, fractional Doppler for the
# windowing and DDCE studies, receiver-side windowing, QPSK data around the
# pilot, 3-sigma thresholding.
label = fig4_ce
task = estimate
M = 32
N = 32
delta_f = 15e3
fc = 4e9
cp_len = auto
modulation = qpsk
paths = 5
l_max = 4
kappa_max = 2
doppler_law = uniform
fractional_doppler = false
snr_start = 0
snr_stop = 20
snr_step = 2.5
max_frames = 400
seed = 1

curve.dd.estimator = dd
curve.tf.estimator = tf
curve.dd_frac_rect.estimator = dd
curve.dd_frac_rect.fractional_doppler = true
curve.dd_frac_dc.estimator = dd
curve.dd_frac_dc.fractional_doppler = true
curve.dd_frac_dc.window = dc:60
curve.dd_frac_dc.window_at = rx
curve.ddce.estimator = ddce
curve.ddce.guard_delay = 0
curve.ddce.guard_doppler = 0
curve.ddce.search_delay = 4
curve.ddce.search_doppler = 2
)";

const char* kFig5 = R"(# Detector comparison on the detection-experiment grid: N = 8, M = 16,
# 4 paths, l_max = 3, kappa_max = 3 (150 km/h) or 6 (300 km/h). Unstated
# knobs are lab decisions: QPSK, genie CSI, Jakes cosine integer Doppler.
label = fig5_det
task = detect
M = 16
N = 8
delta_f = 15e3
fc = 4e9
cp_len = auto
modulation = qpsk
csi = genie
coded = false
paths = 4
l_max = 3
kappa_max = 3
doppler_law = jakes
fractional_doppler = false
snr_start = 0
snr_stop = 20
snr_step = 2.5
stop_frame_errors = 200
max_frames = 200000
seed = 1

curve.mpa_150.detector = mpa
curve.mpa_150.kappa_max = 3
curve.mpa_300.detector = mpa
curve.mpa_300.kappa_max = 6
curve.cdid_150.detector = cdid
curve.cdid_150.kappa_max = 3
curve.cdid_300.detector = cdid
curve.cdid_300.kappa_max = 6
curve.lmmse_300.detector = lmmse
curve.lmmse_300.kappa_max = 6
curve.ofdm_150.detector = ofdm
curve.ofdm_150.kappa_max = 3
curve.ofdm_300.detector = ofdm
curve.ofdm_300.kappa_max = 6
)";

const char* kFig6 = R"(# Coded vs uncoded OTFS/OFDM and the diversity/coding-gain trade-off:
# N = 8, M = 16, kappa_max = 3, l_max = 5. Unstated knobs are lab decisions:
# QPSK, genie CSI, MPA detection for OTFS, Jakes cosine integer Doppler,
# rate-1/2 (171,133) convolutional code with a seeded random interleaver.
# Single-path curves sweep further to reach the diversity-1 waterfall.
label = fig6_coded
task = detect
M = 16
N = 8
delta_f = 15e3
fc = 4e9
cp_len = auto
modulation = qpsk
csi = genie
detector = mpa
paths = 4
l_max = 5
kappa_max = 3
doppler_law = jakes
fractional_doppler = false
snr_start = 0
snr_stop = 20
snr_step = 2.5
stop_frame_errors = 200
max_frames = 200000
seed = 1

curve.otfs_coded_p4.coded = true
curve.otfs_uncoded_p4.coded = false
curve.ofdm_coded_p4.detector = ofdm
curve.ofdm_coded_p4.coded = true
curve.ofdm_uncoded_p4.detector = ofdm
curve.otfs_coded_p1.coded = true
curve.otfs_coded_p1.paths = 1
curve.otfs_uncoded_p1.paths = 1
curve.otfs_uncoded_p1.snr_start = 0
curve.otfs_uncoded_p1.snr_stop = 30
curve.otfs_uncoded_p1.snr_step = 2.5
)";

}  // namespace

const std::map<std::string, std::string>& preset_configs() {
    static const std::map<std::string, std::string> presets = {
        {"fig4_ce", kFig4},
        {"fig5_det", kFig5},
        {"fig6_coded", kFig6},
    };
    return presets;
}

Experiment load_experiment(const std::string& path_or_preset) {
    const auto& presets = preset_configs();
    if (const auto it = presets.find(path_or_preset); it != presets.end())
        return parse_experiment(it->second);
    std::ifstream in(path_or_preset);
    if (!in)
        throw std::runtime_error("cannot open config file or preset: " + path_or_preset);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str());
}

}  // namespace otfs
