#include "trc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "trc/common.hpp"
#include "trc/ops.hpp"

namespace trc {

namespace {

// Lookup table built once per model; avoids a linear scan per access.
std::unordered_map<std::string, std::size_t> build_index(
    const std::vector<std::pair<std::string, Tensor>>& params) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < params.size(); ++i) idx.emplace(params[i].first, i);
    return idx;
}

}  // namespace

void check_model_config(const ModelConfig& cfg) {
    if (cfg.t < 1 || cfg.c_in < 1 || cfg.c < 1 || cfg.heads < 1 || cfg.l_enc < 1 ||
        cfg.l_dec < 1 || cfg.q < 1 || cfg.window < 1 || cfg.ffn_mult < 1)
        throw std::invalid_argument("model config: dimensions must be positive");
    if (cfg.c % cfg.heads != 0)
        throw std::invalid_argument("model config: width must divide evenly across heads");
    if (cfg.q > cfg.t) throw std::invalid_argument("model config: more queries than frames");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw std::invalid_argument("model config: alpha must lie in (0,1)");
}

QueryModel::QueryModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    check_model_config(cfg);
    Rng rng(mix_seed(seed, 0x6d6f64656cULL));  // "model" stream

    auto add = [&](const std::string& name, Tensor t) { params_.emplace_back(name, t); };
    auto xavier = [&](int in, int out) {
        const double bound = std::sqrt(6.0 / (in + out));
        std::vector<double> v(static_cast<std::size_t>(in) * out);
        for (double& x : v) x = rng.uniform(-bound, bound);
        return Tensor::from({in, out}, std::move(v), true);
    };
    auto linear = [&](const std::string& name, int in, int out) {
        add(name + ".w", xavier(in, out));
        add(name + ".b", Tensor::zeros({out}, true));
    };
    auto norm = [&](const std::string& name) {
        add(name + ".g", Tensor::full({cfg.c}, 1.0, true));
        add(name + ".b", Tensor::zeros({cfg.c}, true));
    };
    auto table = [&](const std::string& name, int rows) {
        std::vector<double> v(static_cast<std::size_t>(rows) * cfg.c);
        for (double& x : v) x = 0.02 * rng.normal();
        add(name, Tensor::from({rows, cfg.c}, std::move(v), true));
    };

    const int c = cfg.c, f = cfg.ffn_mult * cfg.c;

    linear("embed", cfg.c_in, c);
    for (int l = 0; l < cfg.l_enc; ++l) {
        const std::string p = "enc" + std::to_string(l);
        for (const char* proj : {".attn.q", ".attn.k", ".attn.v", ".attn.o"})
            linear(p + proj, c, c);
        norm(p + ".ln1");
        linear(p + ".ffn.lin1", c, f);
        linear(p + ".ffn.lin2", f, c);
        norm(p + ".ln2");
    }
    linear("enc_out.act", c, c);
    linear("enc_out.pos", c, c);

    for (int l = 0; l < cfg.l_dec; ++l) {
        const std::string p = "dec" + std::to_string(l);
        for (const char* stage : {".sa", ".ca"}) {
            for (const char* proj : {".q", ".k", ".v_act", ".v_pos", ".o_act", ".o_pos"})
                linear(p + stage + proj, c, c);
        }
        norm(p + ".ln_act1");
        norm(p + ".ln_pos1");
        norm(p + ".ln_act2");
        norm(p + ".ln_pos2");
        linear(p + ".ffn_act.lin1", c, f);
        linear(p + ".ffn_act.lin2", f, c);
        linear(p + ".ffn_pos.lin1", c, f);
        linear(p + ".ffn_pos.lin2", f, c);
        norm(p + ".ln_act3");
        norm(p + ".ln_pos3");
    }

    // The static table exists in every variant so checkpoints stay
    // layout-compatible across the DAQ ablation.
    table("queries.pos", cfg.q);
    table("queries.act_static", cfg.q);

    for (const char* head : {"head.act", "head.pos"}) {
        linear(std::string(head) + ".lin1", c, c);
        linear(std::string(head) + ".lin2", c, c);
        linear(std::string(head) + ".lin3", c, 2);
    }

    index_ = build_index(params_);
}

const Tensor& QueryModel::param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return params_[it->second].second;
}

std::vector<Tensor> QueryModel::parameters() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
}

std::size_t QueryModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

Tensor QueryModel::mlp3(const Tensor& x, const std::string& prefix) const {
    Tensor h1 = relu(add_bias(matmul(x, param(prefix + ".lin1.w")), param(prefix + ".lin1.b")));
    Tensor h2 = relu(add_bias(matmul(h1, param(prefix + ".lin2.w")), param(prefix + ".lin2.b")));
    return add_bias(matmul(h2, param(prefix + ".lin3.w")), param(prefix + ".lin3.b"));
}

Tensor QueryModel::windowed_mha(const Tensor& x, const std::string& prefix) const {
    const int dh = cfg_.c / cfg_.heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor q = add_bias(matmul(x, param(prefix + ".q.w")), param(prefix + ".q.b"));
    Tensor k = add_bias(matmul(x, param(prefix + ".k.w")), param(prefix + ".k.b"));
    Tensor v = add_bias(matmul(x, param(prefix + ".v.w")), param(prefix + ".v.b"));
    std::vector<Tensor> heads;
    for (int h = 0; h < cfg_.heads; ++h) {
        Tensor qh = scale(slice_cols(q, h * dh, (h + 1) * dh), sc);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        Tensor attn = softmax(windowed_scores(qh, kh, cfg_.window), 1);
        heads.push_back(windowed_weighted_sum(attn, vh, cfg_.window));
    }
    return add_bias(matmul(concat_cols(heads), param(prefix + ".o.w")), param(prefix + ".o.b"));
}

std::pair<Tensor, Tensor> QueryModel::dual_mha(const Tensor& q_in, const Tensor& k_in,
                                               const Tensor& v_act_src, const Tensor& v_pos_src,
                                               const std::string& prefix) const {
    const int dh = cfg_.c / cfg_.heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
    Tensor q = add_bias(matmul(q_in, param(prefix + ".q.w")), param(prefix + ".q.b"));
    Tensor k = add_bias(matmul(k_in, param(prefix + ".k.w")), param(prefix + ".k.b"));
    Tensor va = add_bias(matmul(v_act_src, param(prefix + ".v_act.w")), param(prefix + ".v_act.b"));
    Tensor vp = add_bias(matmul(v_pos_src, param(prefix + ".v_pos.w")), param(prefix + ".v_pos.b"));
    std::vector<Tensor> act_heads, pos_heads;
    for (int h = 0; h < cfg_.heads; ++h) {
        Tensor qh = scale(slice_cols(q, h * dh, (h + 1) * dh), sc);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        // One attention pattern per head, shared by both streams.
        Tensor attn = softmax(matmul(qh, transpose(kh)), 1);
        act_heads.push_back(matmul(attn, slice_cols(va, h * dh, (h + 1) * dh)));
        pos_heads.push_back(matmul(attn, slice_cols(vp, h * dh, (h + 1) * dh)));
    }
    Tensor out_act = add_bias(matmul(concat_cols(act_heads), param(prefix + ".o_act.w")),
                              param(prefix + ".o_act.b"));
    Tensor out_pos = add_bias(matmul(concat_cols(pos_heads), param(prefix + ".o_pos.w")),
                              param(prefix + ".o_pos.b"));
    return {out_act, out_pos};
}

Tensor QueryModel::embed_input(const Tensor& features) const {
    if (features.rank() != 2 || features.cols() != cfg_.c_in)
        throw std::invalid_argument("embed_input: expected [T x C_in] features");
    const int t = features.rows(), c = cfg_.c;
    Tensor proj = add_bias(matmul(features, param("embed.w")), param("embed.b"));

    // Fixed sinusoidal position encoding; constant, so it carries no grads.
    std::vector<double> pe(static_cast<std::size_t>(t) * c);
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < c; j += 2) {
            const double rate = std::pow(10000.0, -static_cast<double>(j) / c);
            pe[static_cast<std::size_t>(i) * c + j] = std::sin(i * rate);
            if (j + 1 < c) pe[static_cast<std::size_t>(i) * c + j + 1] = std::cos(i * rate);
        }
    return add(proj, Tensor::from({t, c}, std::move(pe)));
}

EncoderOutput QueryModel::encode(const Tensor& embedded) const {
    Tensor x = embedded;
    for (int l = 0; l < cfg_.l_enc; ++l) {
        const std::string p = "enc" + std::to_string(l);
        Tensor attn = windowed_mha(x, p + ".attn");
        x = layer_norm(add(x, attn), param(p + ".ln1.g"), param(p + ".ln1.b"), 1e-5);
        Tensor h = relu(
            add_bias(matmul(x, param(p + ".ffn.lin1.w")), param(p + ".ffn.lin1.b")));
        Tensor ff = add_bias(matmul(h, param(p + ".ffn.lin2.w")), param(p + ".ffn.lin2.b"));
        x = layer_norm(add(x, ff), param(p + ".ln2.g"), param(p + ".ln2.b"), 1e-5);
    }
    EncoderOutput out;
    out.act = add_bias(matmul(x, param("enc_out.act.w")), param("enc_out.act.b"));
    out.pos = add_bias(matmul(x, param("enc_out.pos.w")), param("enc_out.pos.b"));
    return out;
}

QueryModel::Selection QueryModel::select_queries(const EncoderOutput& enc) const {
    const int t = enc.act.rows();
    if (cfg_.q > t) throw std::invalid_argument("select_queries: more queries than tokens");
    Selection sel;
    sel.aux = predict_heads(enc.act, enc.pos, t, "encoder");

    // Rank all tokens by repetitive confidence; stable sort keeps the
    // earlier frame on ties. The ranking itself carries no gradients.
    std::vector<int> order(t);
    std::iota(order.begin(), order.end(), 0);
    const std::vector<double>& probs = sel.aux.probs.values();
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a] > probs[b]; });
    sel.indices.assign(order.begin(), order.begin() + cfg_.q);

    sel.e_act = select_rows(enc.act, sel.indices);
    sel.e_pos = select_rows(enc.pos, sel.indices);
    return sel;
}

std::vector<std::pair<Tensor, Tensor>> QueryModel::decode(const Tensor& e_act,
                                                          const Tensor& e_pos,
                                                          const EncoderOutput& memory) const {
    (void)e_pos;  // position queries are a learned table by design
    Tensor x_act = cfg_.use_daq ? e_act : param("queries.act_static");
    Tensor x_pos = param("queries.pos");
    Tensor mem_sum = add(memory.act, memory.pos);

    std::vector<std::pair<Tensor, Tensor>> layers;
    for (int l = 0; l < cfg_.l_dec; ++l) {
        const std::string p = "dec" + std::to_string(l);

        Tensor sum_q = add(x_act, x_pos);
        auto [sa_act, sa_pos] = dual_mha(sum_q, sum_q, x_act, x_pos, p + ".sa");
        x_act = layer_norm(add(x_act, sa_act), param(p + ".ln_act1.g"), param(p + ".ln_act1.b"), 1e-5);
        x_pos = layer_norm(add(x_pos, sa_pos), param(p + ".ln_pos1.g"), param(p + ".ln_pos1.b"), 1e-5);

        Tensor cross_q = add(x_act, x_pos);
        auto [ca_act, ca_pos] = dual_mha(cross_q, mem_sum, memory.act, memory.pos, p + ".ca");
        x_act = layer_norm(add(x_act, ca_act), param(p + ".ln_act2.g"), param(p + ".ln_act2.b"), 1e-5);
        x_pos = layer_norm(add(x_pos, ca_pos), param(p + ".ln_pos2.g"), param(p + ".ln_pos2.b"), 1e-5);

        for (const char* stream : {"act", "pos"}) {
            Tensor& x = *stream == 'a' ? x_act : x_pos;
            const std::string fp = p + ".ffn_" + stream;
            Tensor h = relu(add_bias(matmul(x, param(fp + ".lin1.w")), param(fp + ".lin1.b")));
            Tensor ff = add_bias(matmul(h, param(fp + ".lin2.w")), param(fp + ".lin2.b"));
            const std::string lp = p + ".ln_" + stream + "3";
            x = layer_norm(add(x, ff), param(lp + ".g"), param(lp + ".b"), 1e-5);
        }
        layers.emplace_back(x_act, x_pos);
    }
    return layers;
}

PredictionSet QueryModel::predict_heads(const Tensor& d_act, const Tensor& d_pos, int t_frames,
                                        const std::string& tag) const {
    if (d_act.rank() != 2 || d_pos.rank() != 2 || d_act.rows() != d_pos.rows() ||
        d_act.cols() != cfg_.c || d_pos.cols() != cfg_.c)
        throw std::invalid_argument("predict_heads: expected matching [N x C] streams");
    const int n = d_act.rows();

    Tensor logits = mlp3(d_act, "head.act");          // [N x 2]: (others, repetitive)
    Tensor probs2 = softmax(logits, 1);
    Tensor probs = reshape(slice_cols(probs2, 1, 2), {n});

    Tensor raw = mlp3(d_pos, "head.pos");             // [N x 2]: (midpoint, duration)
    Tensor m = sigmoid(slice_cols(raw, 0, 1));
    // Duration floored at one frame so intervals can never degenerate.
    const double floor = 1.0 / t_frames;
    Tensor d = add_scalar(scale(sigmoid(slice_cols(raw, 1, 2)), 1.0 - floor), floor);

    PredictionSet out;
    out.probs = probs;
    out.locations = concat_cols({m, d});
    out.layer_tag = tag;
    return out;
}

QueryModel::ForwardResult QueryModel::forward(const Tensor& features) const {
    const int t = features.rows();
    EncoderOutput enc = encode(embed_input(features));
    Selection sel = select_queries(enc);
    auto layers = decode(sel.e_act, sel.e_pos, enc);

    ForwardResult res;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        PredictionSet ps = predict_heads(layers[l].first, layers[l].second, t,
                                         "dec" + std::to_string(l));
        if (l + 1 == layers.size())
            res.final = ps;
        else
            res.aux.push_back(ps);
    }
    res.encoder_aux = sel.aux;
    res.decoder_act = layers.back().first;
    return res;
}

int QueryModel::count(const std::vector<double>& probs, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("count: alpha must lie in (0,1)");
    int n = 0;
    for (double p : probs)
        if (p > alpha) ++n;
    return n;
}

std::uint64_t count_macs(const ModelConfig& cfg, int t_frames) {
    check_model_config(cfg);
    if (t_frames < cfg.q) throw std::invalid_argument("count_macs: fewer frames than queries");
    const std::uint64_t t = t_frames, c = cfg.c, q = cfg.q, f_dim =
        static_cast<std::uint64_t>(cfg.ffn_mult) * cfg.c;
    const std::uint64_t valid = windowed_valid_pairs(t_frames, cfg.window);

    std::uint64_t total = t * cfg.c_in * c;                            // input projection
    total += cfg.l_enc * (4 * t * c * c + 2 * valid * c + 2 * t * c * f_dim);
    total += 2 * t * c * c;                                            // act/pos projections
    total += 4 * t * c * c + 4 * t * c;                                // heads over all tokens
    total += cfg.l_dec * (9 * q * c * c + 3 * q * q * c               // self-attention
                          + 3 * t * c * c + 3 * q * t * c             // cross-attention
                          + 4 * q * c * f_dim);                       // two feed-forwards
    total += cfg.l_dec * (4 * q * c * c + 4 * q * c);                 // heads per layer
    return total;
}

}  // namespace trc
