#include "trc/synth.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trc/common.hpp"
#include "trc/wire.hpp"

namespace trc {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'C', '1'};
constexpr double kTau = 6.283185307179586476925;

// Smooth per-sequence motif: a low-order random Fourier series over the
// cycle phase, one series per channel, amplitudes decaying with harmonic
// order. RMS-normalized so every sequence carries a comparable signal level.
struct Motif {
    int c_in = 0;
    int order = 0;
    std::vector<double> a, b;  // [c_in x order] each

    static Motif draw(Rng& rng, int c_in, int order) {
        Motif m;
        m.c_in = c_in;
        m.order = order;
        m.a.resize(static_cast<std::size_t>(c_in) * order);
        m.b.resize(static_cast<std::size_t>(c_in) * order);
        double sq = 0.0;
        for (int c = 0; c < c_in; ++c)
            for (int k = 0; k < order; ++k) {
                const double decay = 1.0 / (k + 1);
                const std::size_t idx = static_cast<std::size_t>(c) * order + k;
                m.a[idx] = decay * rng.normal();
                m.b[idx] = decay * rng.normal();
                sq += 0.5 * (m.a[idx] * m.a[idx] + m.b[idx] * m.b[idx]);
            }
        const double rms = std::sqrt(sq / c_in);
        if (rms > 1e-12)
            for (std::size_t i = 0; i < m.a.size(); ++i) {
                m.a[i] /= rms;
                m.b[i] /= rms;
            }
        return m;
    }

    double at(int channel, double phase) const {
        double v = 0.0;
        for (int k = 0; k < order; ++k) {
            const std::size_t idx = static_cast<std::size_t>(channel) * order + k;
            v += a[idx] * std::sin(kTau * (k + 1) * phase) +
                 b[idx] * std::cos(kTau * (k + 1) * phase);
        }
        return v;
    }
};

}  // namespace

PeriodClass classify_period(double mean_frames) {
    if (mean_frames < 30.0) return PeriodClass::kShort;
    if (mean_frames > 60.0) return PeriodClass::kLong;
    return PeriodClass::kMedium;
}

const char* period_class_name(PeriodClass c) {
    switch (c) {
        case PeriodClass::kShort: return "short";
        case PeriodClass::kMedium: return "medium";
        case PeriodClass::kLong: return "long";
    }
    return "?";
}

void check_generator_config(const GeneratorConfig& cfg) {
    if (cfg.t < 2 || cfg.c_in < 1) throw ValidationError("generator: bad sequence shape");
    if (cfg.count_min < 1 || cfg.count_max < cfg.count_min)
        throw ValidationError("generator: bad count range");
    if (cfg.period_min < 2 || cfg.period_max < cfg.period_min)
        throw ValidationError("generator: bad period range");
    if (cfg.motif_dim < 1) throw ValidationError("generator: motif order must be positive");
    if (cfg.noise_std < 0 || cfg.background_drift_std < 0)
        throw ValidationError("generator: noise levels must be nonnegative");
    if (!(cfg.interruption_probability >= 0.0 && cfg.interruption_probability <= 1.0))
        throw ValidationError("generator: interruption probability outside [0,1]");
    if (static_cast<long>(cfg.count_max) * cfg.period_min > cfg.t)
        throw ValidationError("generator: count_max cycles cannot fit into T frames");
}

SequenceSample generate_sample(const GeneratorConfig& cfg, std::uint64_t index) {
    check_generator_config(cfg);
    const std::uint64_t seed = mix_seed(cfg.master_seed, index);
    Rng rng(seed);

    const int n = rng.uniform_int(cfg.count_min, cfg.count_max);

    // Per-instance periods around a shared base, then shrink the largest
    // until everything (plus one separating frame between cycles) fits.
    const int base = rng.uniform_int(cfg.period_min, cfg.period_max);
    std::vector<int> periods(n);
    for (int& p : periods) {
        p = static_cast<int>(std::lround(base * rng.uniform(0.85, 1.15)));
        p = std::clamp(p, cfg.period_min, cfg.period_max);
    }
    const int budget = cfg.t - (n - 1);
    while (std::accumulate(periods.begin(), periods.end(), 0) > budget) {
        auto longest = std::max_element(periods.begin(), periods.end());
        if (*longest <= cfg.period_min)
            throw ValidationError("generator: cycles exceed the sequence even at minimum period");
        --*longest;
    }

    // Distribute the leftover frames over the n+1 gaps (before, between,
    // after) proportionally to random weights.
    int slack = budget - std::accumulate(periods.begin(), periods.end(), 0);
    std::vector<int> gaps(n + 1, 0);
    std::vector<double> w(n + 1);
    double wsum = 0.0;
    for (double& x : w) wsum += (x = rng.uniform(0.1, 1.0));
    int assigned = 0;
    for (int i = 0; i < n; ++i) {
        gaps[i] = static_cast<int>(std::floor(slack * w[i] / wsum));
        assigned += gaps[i];
    }
    gaps[n] = slack - assigned;
    for (int i = 1; i < n; ++i) gaps[i] += 1;  // the separating frame

    std::vector<int> starts(n);
    int cursor = gaps[0];
    for (int i = 0; i < n; ++i) {
        starts[i] = cursor;
        cursor += periods[i] + gaps[i + 1];
    }

    const Motif motif = Motif::draw(rng, cfg.c_in, cfg.motif_dim);

    // Optional one-off distractor segment in the widest gap; it looks like
    // motion but never repeats and never gets an annotation.
    const Motif distractor = Motif::draw(rng, cfg.c_in, cfg.motif_dim);
    const bool interrupt = rng.uniform() < cfg.interruption_probability;
    int int_start = -1, int_len = 0;
    if (interrupt) {
        int best_gap = -1, best_len = 0, gap_start = 0;
        for (int i = 0; i <= n; ++i) {
            const int g = gaps[i] - (i > 0 && i < n ? 1 : 0);
            const int s = i == 0 ? 0 : starts[i - 1] + periods[i - 1] + 1;
            if (g > best_len) {
                best_len = g;
                best_gap = i;
                gap_start = i == 0 ? 0 : s;
            }
        }
        if (best_gap >= 0 && best_len >= 6) {
            int_len = std::min(best_len - 2, cfg.period_max);
            int_start = gap_start + (best_len - int_len) / 2;
        }
    }

    // Assemble: drifting background everywhere, the motif inside each cycle,
    // the distractor inside its segment, white noise on top. Quantizing to
    // f32 here makes the on-disk round trip byte exact.
    std::vector<double> f(static_cast<std::size_t>(cfg.t) * cfg.c_in, 0.0);
    std::vector<double> walk(cfg.c_in, 0.0);
    for (double& x : walk) x = cfg.background_drift_std * rng.normal();
    for (int t = 0; t < cfg.t; ++t)
        for (int c = 0; c < cfg.c_in; ++c) {
            walk[c] = 0.95 * walk[c] + 0.3 * cfg.background_drift_std * rng.normal();
            f[static_cast<std::size_t>(t) * cfg.c_in + c] = walk[c];
        }
    for (int i = 0; i < n; ++i)
        for (int t = starts[i]; t < starts[i] + periods[i]; ++t) {
            const double phase = (t - starts[i] + 0.5) / periods[i];
            for (int c = 0; c < cfg.c_in; ++c)
                f[static_cast<std::size_t>(t) * cfg.c_in + c] += motif.at(c, phase);
        }
    if (int_len > 0)
        for (int t = int_start; t < int_start + int_len; ++t) {
            const double phase = (t - int_start + 0.5) / int_len;
            for (int c = 0; c < cfg.c_in; ++c)
                f[static_cast<std::size_t>(t) * cfg.c_in + c] += distractor.at(c, phase);
        }
    if (cfg.noise_std > 0)
        for (double& x : f) x += cfg.noise_std * rng.normal();
    for (double& x : f) x = static_cast<double>(static_cast<float>(x));

    SequenceSample s;
    s.features = Tensor::from({cfg.t, cfg.c_in}, std::move(f));
    s.seed = seed;
    double mean_period = 0.0;
    for (int i = 0; i < n; ++i) {
        const double mid = (starts[i] + periods[i] / 2.0) / cfg.t;
        s.cycles.push_back({mid, static_cast<double>(periods[i]) / cfg.t});
        mean_period += periods[i];
    }
    s.period_class = classify_period(mean_period / n);
    return s;
}

SplitSet generate_split(const GeneratorConfig& cfg, int n_train, int n_val, int n_test) {
    if (n_train < 0 || n_val < 0 || n_test < 0)
        throw ValidationError("generator: split sizes must be nonnegative");
    SplitSet out;
    std::uint64_t index = 0;
    for (int i = 0; i < n_train; ++i) out.train.push_back(generate_sample(cfg, index++));
    for (int i = 0; i < n_val; ++i) out.val.push_back(generate_sample(cfg, index++));
    for (int i = 0; i < n_test; ++i) out.test.push_back(generate_sample(cfg, index++));
    return out;
}

void write_dataset(const std::vector<SequenceSample>& samples, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 4);
    wire::put_u32(buf, static_cast<std::uint32_t>(samples.size()));
    for (const SequenceSample& s : samples) {
        const std::size_t record_start = buf.size();
        wire::put_u32(buf, static_cast<std::uint32_t>(s.features.rows()));
        wire::put_u32(buf, static_cast<std::uint32_t>(s.features.cols()));
        wire::put_u32(buf, static_cast<std::uint32_t>(s.cycles.size()));
        wire::put_u64(buf, s.seed);
        wire::put_u8(buf, static_cast<std::uint8_t>(s.period_class));
        for (const Interval& c : s.cycles) {
            wire::put_f64(buf, c.m);
            wire::put_f64(buf, c.d);
        }
        for (double v : s.features.values()) wire::put_f32(buf, static_cast<float>(v));
        const std::uint32_t crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(buf.data()) + record_start,
                  static_cast<uInt>(buf.size() - record_start)));
        wire::put_u32(buf, crc);
    }
    wire::write_file(path, buf);
}

std::vector<SequenceSample> read_dataset(const std::string& path) {
    const std::string buf = wire::read_file(path);
    wire::Reader r(buf);
    if (r.bytes(4) != std::string(kMagic, 4)) throw FormatError("not a dataset file");
    const std::uint32_t count = r.u32();
    std::vector<SequenceSample> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t record_start = r.offset();
        const int t = static_cast<int>(r.u32());
        const int c_in = static_cast<int>(r.u32());
        const std::uint32_t n = r.u32();
        SequenceSample s;
        s.seed = r.u64();
        const std::uint8_t cls = r.u8();
        if (t < 1 || c_in < 1 || cls > 2) throw FormatError("bad dataset record header");
        s.period_class = static_cast<PeriodClass>(cls);
        for (std::uint32_t k = 0; k < n; ++k) {
            Interval c;
            c.m = r.f64();
            c.d = r.f64();
            s.cycles.push_back(c);
        }
        std::vector<double> f(static_cast<std::size_t>(t) * c_in);
        for (double& v : f) v = static_cast<double>(r.f32());
        s.features = Tensor::from({t, c_in}, std::move(f));
        const std::size_t record_end = r.offset();
        const std::uint32_t stored = r.u32();
        const std::uint32_t actual = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(buf.data()) + record_start,
                  static_cast<uInt>(record_end - record_start)));
        if (stored != actual) throw FormatError("dataset record checksum mismatch");
        out.push_back(std::move(s));
    }
    if (!r.exhausted()) throw FormatError("trailing bytes after dataset records");
    return out;
}

}  // namespace trc
