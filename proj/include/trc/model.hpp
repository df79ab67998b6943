#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trc/prediction.hpp"
#include "trc/tensor.hpp"

namespace trc {

struct ModelConfig {
    int t = 128;       // frames per sequence (training-time; forward accepts any T)
    int c_in = 16;     // input feature width
    int c = 64;        // model width
    int heads = 4;     // attention heads
    int l_enc = 2;     // encoder layers
    int l_dec = 2;     // decoder layers
    int q = 16;        // query count
    int window = 16;   // encoder attention half-window, in frames
    int ffn_mult = 4;  // feed-forward hidden width multiplier
    double alpha = 0.2;
    bool use_daq = true;
    bool use_icl = true;
};

void check_model_config(const ModelConfig& cfg);

struct EncoderOutput {
    Tensor act;  // [T x C]
    Tensor pos;  // [T x C]
};

/// Encoder–selection–decoder set predictor. All parameters are created at
/// construction in a fixed order (the checkpoint manifest order) and
/// initialized deterministically from the seed.
class QueryModel {
public:
    QueryModel(const ModelConfig& cfg, std::uint64_t seed);

    struct Selection {
        Tensor e_act;              // [Q x C] selected encoder action features
        Tensor e_pos;              // [Q x C] selected encoder position features
        std::vector<int> indices;  // chosen token indices, confidence-ranked
        PredictionSet aux;         // head outputs over all T tokens
    };

    struct ForwardResult {
        PredictionSet final;             // last decoder layer
        std::vector<PredictionSet> aux;  // non-final decoder layers, depth order
        PredictionSet encoder_aux;
        Tensor decoder_act;              // final-layer D^act, feeds the ICL term
    };

    ForwardResult forward(const Tensor& features) const;

    // Pipeline stages, exposed for focused tests.
    Tensor embed_input(const Tensor& features) const;
    EncoderOutput encode(const Tensor& embedded) const;
    Selection select_queries(const EncoderOutput& enc) const;
    // Per layer: (D^act, D^pos). e_pos is part of the selection contract but
    // the decoder's position queries are a learned table, so it is unused.
    std::vector<std::pair<Tensor, Tensor>> decode(const Tensor& e_act, const Tensor& e_pos,
                                                  const EncoderOutput& memory) const;
    PredictionSet predict_heads(const Tensor& d_act, const Tensor& d_pos, int t_frames,
                                const std::string& tag) const;

    static int count(const std::vector<double>& probs, double alpha);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<std::pair<std::string, Tensor>>& named_parameters() const { return params_; }
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;  // total scalar parameters
    const Tensor& param(const std::string& name) const;

private:
    Tensor mlp3(const Tensor& x, const std::string& prefix) const;
    Tensor windowed_mha(const Tensor& x, const std::string& prefix) const;
    // Shared-logit dual-stream attention: one softmax from the summed
    // streams, separate value/output projections so the streams stay apart.
    std::pair<Tensor, Tensor> dual_mha(const Tensor& q_in, const Tensor& k_in,
                                       const Tensor& v_act_src, const Tensor& v_pos_src,
                                       const std::string& prefix) const;

    ModelConfig cfg_;
    std::vector<std::pair<std::string, Tensor>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Exact multiply-accumulate count of one forward pass at sequence length
// t_frames; mirrors the instrumented counter term by term.
std::uint64_t count_macs(const ModelConfig& cfg, int t_frames);

}  // namespace trc
