#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trc/interval.hpp"
#include "trc/tensor.hpp"

namespace trc {

enum class PeriodClass : std::uint8_t { kShort = 0, kMedium = 1, kLong = 2 };

/// Mean cycle length in frames decides the class: under 30 is short, over 60
/// is long, everything between is medium.
PeriodClass classify_period(double mean_frames);
const char* period_class_name(PeriodClass c);

/// One synthetic sequence: features plus its own ground truth. The generator
/// is the annotator, so true_count is exact by construction.
struct SequenceSample {
    Tensor features;               // [T x C_in], constant
    std::vector<Interval> cycles;  // non-overlapping, sorted by midpoint
    PeriodClass period_class = PeriodClass::kMedium;
    std::uint64_t seed = 0;

    int true_count() const { return static_cast<int>(cycles.size()); }
};

struct GeneratorConfig {
    int t = 128;
    int c_in = 16;
    int count_min = 2;
    int count_max = 8;
    int period_min = 8;   // frames
    int period_max = 40;  // frames
    int motif_dim = 4;    // Fourier order of the per-sequence motif
    double noise_std = 0.05;
    double interruption_probability = 0.3;
    double background_drift_std = 0.3;
    std::uint64_t master_seed = 1;
};

void check_generator_config(const GeneratorConfig& cfg);

/// Fully determined by (cfg.master_seed, index). Throws ValidationError when
/// the requested cycles cannot fit into T frames.
SequenceSample generate_sample(const GeneratorConfig& cfg, std::uint64_t index);

/// Disjoint index ranges; every sequence owns a fresh motif, so test-set
/// motifs are unseen during training by construction.
struct SplitSet {
    std::vector<SequenceSample> train, val, test;
};
SplitSet generate_split(const GeneratorConfig& cfg, int n_train, int n_val, int n_test);

// Dataset file: "TRC1" | u32 record count | records. Each record:
//   u32 T | u32 C_in | u32 count | u64 seed | u8 period_class
//   | count x (f64 midpoint, f64 duration) | T*C_in f32 features (row-major)
//   | u32 crc32 over the record bytes before it.
// Features are quantized to f32 at generation time, so the round trip is
// byte exact.
void write_dataset(const std::vector<SequenceSample>& samples, const std::string& path);
std::vector<SequenceSample> read_dataset(const std::string& path);

}  // namespace trc
