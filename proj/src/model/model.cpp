#include "panseg/model/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "panseg/core/rng.hpp"
#include "panseg/core/tensor_io.hpp"
#include "panseg/kernels/kernels.hpp"

namespace panseg::model {

namespace {

// out(y,x,oc) = b[oc] + sum_ky dot(kernel_row, input_row_segment); zero pad.
void conv3x3_forward(const ConvLayer& layer, const RasterF32& in, RasterF32& out) {
    const int h = in.height, w = in.width, ic = in.channels;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int x0 = x > 0 ? x - 1 : 0;
            int x1 = x < w - 1 ? x + 1 : w - 1;
            int koff = x0 - (x - 1);
            std::size_t len = static_cast<std::size_t>(x1 - x0 + 1) * ic;
            float* dst = &out.data[(static_cast<std::size_t>(y) * w + x) * layer.out_c];
            for (int oc = 0; oc < layer.out_c; ++oc) {
                float acc = layer.b[oc];
                for (int ky = 0; ky < 3; ++ky) {
                    int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    const float* in_row = &in.data[(static_cast<std::size_t>(sy) * w + x0) * ic];
                    acc += kernels::dot(layer.row(oc, ky) + koff * ic, in_row, len);
                }
                dst[oc] = acc;
            }
        }
    }
}

// Accumulates input and weight gradients for one layer.
void conv3x3_backward(const ConvLayer& layer, const RasterF32& in, const RasterF32& gout,
                      RasterF32* gin, ConvLayer& glayer) {
    const int h = in.height, w = in.width, ic = in.channels;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int x0 = x > 0 ? x - 1 : 0;
            int x1 = x < w - 1 ? x + 1 : w - 1;
            int koff = x0 - (x - 1);
            std::size_t len = static_cast<std::size_t>(x1 - x0 + 1) * ic;
            const float* g = &gout.data[(static_cast<std::size_t>(y) * w + x) * layer.out_c];
            for (int oc = 0; oc < layer.out_c; ++oc) {
                float go = g[oc];
                if (go == 0.0f) continue;
                glayer.b[oc] += go;
                for (int ky = 0; ky < 3; ++ky) {
                    int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    std::size_t off = (static_cast<std::size_t>(sy) * w + x0) * ic;
                    kernels::axpy(go, &in.data[off], glayer.row(oc, ky) + koff * ic, len);
                    if (gin != nullptr)
                        kernels::axpy(go, layer.row(oc, ky) + koff * ic, &gin->data[off], len);
                }
            }
        }
    }
}

void tanh_inplace(RasterF32& r) {
    for (float& v : r.data) v = std::tanh(v);
}

// Inverted dropout: kept activations are scaled by 1/(1-rate).
void dropout_forward(const RasterF32& in, float rate, std::uint64_t seed, int layer_id,
                     RasterF32& out, std::vector<std::uint8_t>& mask) {
    out = in;
    mask.assign(in.data.size(), 1);
    if (rate <= 0.0f) return;
    Pcg32 rng(seed, /*stream=*/0xd0 + static_cast<std::uint64_t>(layer_id));
    float scale = 1.0f / (1.0f - rate);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (rng.uniform01() < rate) {
            out.data[i] = 0.0f;
            mask[i] = 0;
        } else {
            out.data[i] *= scale;
        }
    }
}

} // namespace

std::size_t ModelParams::parameter_count() const {
    auto n = [](const ConvLayer& l) { return l.w.size() + l.b.size(); };
    return n(conv1) + n(conv2) + n(sem_head) + n(inst_head);
}

ModelParams init_model(int classes, int trunk_channels, float dropout_rate, std::uint64_t seed) {
    require(classes >= 2, Errc::invalid_argument, "need at least two classes");
    require(trunk_channels >= 1, Errc::invalid_argument, "trunk_channels must be >= 1");
    require(dropout_rate >= 0.0f && dropout_rate < 1.0f, Errc::invalid_argument,
            "dropout rate must be in [0,1)");
    ModelParams p;
    p.classes = classes;
    p.trunk_channels = trunk_channels;
    p.dropout_rate = dropout_rate;
    p.conv1 = ConvLayer(3, trunk_channels);
    p.conv2 = ConvLayer(trunk_channels, trunk_channels);
    p.sem_head = ConvLayer(trunk_channels, classes);
    p.inst_head = ConvLayer(trunk_channels, 5);

    Pcg32 rng(seed, /*stream=*/0x1417);
    auto init_layer = [&](ConvLayer& l) {
        float std_dev = std::sqrt(1.0f / static_cast<float>(9 * l.in_c)); // Xavier-ish for tanh
        for (float& v : l.w) v = std_dev * static_cast<float>(rng.normal());
    };
    init_layer(p.conv1);
    init_layer(p.conv2);
    init_layer(p.sem_head);
    init_layer(p.inst_head);
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    auto zero = [](ConvLayer& l) {
        std::fill(l.w.begin(), l.w.end(), 0.0f);
        std::fill(l.b.begin(), l.b.end(), 0.0f);
    };
    zero(z.conv1);
    zero(z.conv2);
    zero(z.sem_head);
    zero(z.inst_head);
    return z;
}

ForwardResult forward(const ModelParams& params, const RasterF32& img, RunMode mode,
                      std::uint64_t seed) {
    require(img.channels == 3, Errc::invalid_argument, "model input must be RGB");
    const int h = img.height, w = img.width;
    const bool drop = mode != RunMode::eval && params.dropout_rate > 0.0f;

    ForwardResult r;
    r.a1 = RasterF32(h, w, params.trunk_channels);
    conv3x3_forward(params.conv1, img, r.a1);
    tanh_inplace(r.a1);
    if (drop)
        dropout_forward(r.a1, params.dropout_rate, seed, 1, r.d1, r.mask1);
    else
        r.d1 = r.a1;

    r.a2 = RasterF32(h, w, params.trunk_channels);
    conv3x3_forward(params.conv2, r.d1, r.a2);
    tanh_inplace(r.a2);
    if (drop)
        dropout_forward(r.a2, params.dropout_rate, seed, 2, r.d2, r.mask2);
    else
        r.d2 = r.a2;

    r.sem_logits = RasterF32(h, w, params.classes);
    conv3x3_forward(params.sem_head, r.d2, r.sem_logits);

    RasterF32 inst(h, w, 5);
    conv3x3_forward(params.inst_head, r.d2, inst);
    r.tri_logits = RasterF32(h, w, 3);
    r.vec_planes = RasterF32(h, w, 2);
    for (std::size_t p = 0; p < inst.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c) r.tri_logits.data[p * 3 + c] = inst.data[p * 5 + c];
        for (int c = 0; c < 2; ++c) r.vec_planes.data[p * 2 + c] = inst.data[p * 5 + 3 + c];
    }
    return r;
}

LossBreakdown backward(const ModelParams& params, const RasterF32& img, const SemanticMap& sem,
                       const targets::ThreeLabelTarget& tri,
                       const targets::CenterVectorField& vec,
                       const std::vector<std::uint8_t>& fg_mask,
                       const loss::LossWeights& weights, RunMode mode, std::uint64_t seed,
                       float instance_loss_weight, ModelParams& grads) {
    ForwardResult f = forward(params, img, mode, seed);
    const int h = img.height, w = img.width;

    loss::CeResult sem_res = loss::weighted_smoothed_ce(f.sem_logits, sem, weights);
    loss::InstanceLossResult inst_res =
        loss::instance_loss(f.tri_logits, tri, f.vec_planes, vec, fg_mask);

    LossBreakdown lb;
    lb.sem_ce = sem_res.loss;
    lb.tri_ce = inst_res.ce_term;
    lb.vec_l2 = inst_res.l2_term;
    lb.total = sem_res.loss + instance_loss_weight * inst_res.loss;

    // head gradients; the instance head planes are re-fused [tri|vec]
    RasterF32 ginst(h, w, 5);
    for (std::size_t p = 0; p < ginst.pixel_count(); ++p) {
        for (int c = 0; c < 3; ++c)
            ginst.data[p * 5 + c] = instance_loss_weight * inst_res.grad_tri.data[p * 3 + c];
        for (int c = 0; c < 2; ++c)
            ginst.data[p * 5 + 3 + c] = instance_loss_weight * inst_res.grad_vec.data[p * 2 + c];
    }

    RasterF32 gd2(h, w, params.trunk_channels);
    conv3x3_backward(params.sem_head, f.d2, sem_res.grad_logits, &gd2, grads.sem_head);
    conv3x3_backward(params.inst_head, f.d2, ginst, &gd2, grads.inst_head);

    // back through dropout2 + tanh2
    const bool drop = mode != RunMode::eval && params.dropout_rate > 0.0f;
    const float keep_scale = drop ? 1.0f / (1.0f - params.dropout_rate) : 1.0f;
    RasterF32 gz2 = std::move(gd2);
    for (std::size_t i = 0; i < gz2.data.size(); ++i) {
        float g = gz2.data[i];
        if (drop) g = f.mask2[i] ? g * keep_scale : 0.0f;
        float a = f.a2.data[i];
        gz2.data[i] = g * (1.0f - a * a);
    }

    RasterF32 gd1(h, w, params.trunk_channels);
    conv3x3_backward(params.conv2, f.d1, gz2, &gd1, grads.conv2);

    RasterF32 gz1 = std::move(gd1);
    for (std::size_t i = 0; i < gz1.data.size(); ++i) {
        float g = gz1.data[i];
        if (drop) g = f.mask1[i] ? g * keep_scale : 0.0f;
        float a = f.a1.data[i];
        gz1.data[i] = g * (1.0f - a * a);
    }
    conv3x3_backward(params.conv1, img, gz1, nullptr, grads.conv1);
    return lb;
}

std::pair<RasterF32, RasterF32> predict_probs(const ModelParams& params, const RasterF32& img,
                                              std::optional<std::uint64_t> dropout_seed) {
    ForwardResult f = forward(params, img,
                              dropout_seed.has_value() ? RunMode::mc_dropout : RunMode::eval,
                              dropout_seed.value_or(0));
    auto softmax_planes = [](RasterF32& r) {
        const int c = r.channels;
        std::vector<float> tmp(static_cast<std::size_t>(c));
        for (std::size_t p = 0; p < r.pixel_count(); ++p) {
            float* z = r.data.data() + p * c;
            float mx = kernels::max_value(z, static_cast<std::size_t>(c));
            float total = 0.0f;
            for (int k = 0; k < c; ++k) {
                tmp[k] = std::exp(z[k] - mx);
                total += tmp[k];
            }
            for (int k = 0; k < c; ++k) z[k] = tmp[k] / total;
        }
    };
    softmax_planes(f.sem_logits);
    softmax_planes(f.tri_logits);
    return {std::move(f.sem_logits), std::move(f.tri_logits)};
}

AdamWState make_optimizer(const ModelParams& params) {
    AdamWState s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    s.step = 0;
    return s;
}

void adamw_update(ModelParams& params, const ModelParams& grads, AdamWState& state, float lr,
                  float beta1, float beta2, float eps, float weight_decay) {
    state.step += 1;
    float inv_bias1 =
        1.0f / (1.0f - std::pow(beta1, static_cast<float>(state.step)));
    float inv_bias2 =
        1.0f / (1.0f - std::pow(beta2, static_cast<float>(state.step)));
    auto update = [&](std::vector<float>& p, const std::vector<float>& g, std::vector<float>& m,
                      std::vector<float>& v) {
        kernels::adamw_step(p.data(), g.data(), m.data(), v.data(), p.size(), beta1, beta2, eps,
                            lr, weight_decay, inv_bias1, inv_bias2);
    };
    auto layer = [&](ConvLayer& p, const ConvLayer& g, ConvLayer& m, ConvLayer& v) {
        update(p.w, g.w, m.w, v.w);
        update(p.b, g.b, m.b, v.b);
    };
    layer(params.conv1, grads.conv1, state.m.conv1, state.v.conv1);
    layer(params.conv2, grads.conv2, state.m.conv2, state.v.conv2);
    layer(params.sem_head, grads.sem_head, state.m.sem_head, state.v.sem_head);
    layer(params.inst_head, grads.inst_head, state.m.inst_head, state.v.inst_head);
}

double cosine_lr(std::int64_t t, std::int64_t horizon, double lr_base, double lr_min) {
    if (horizon <= 0) return lr_base;
    if (t < 0) t = 0;
    if (t > horizon) t = horizon;
    double cosine = std::cos(3.14159265358979323846 * static_cast<double>(t) /
                             static_cast<double>(horizon));
    return lr_min + 0.5 * (lr_base - lr_min) * (1.0 + cosine);
}

namespace {

RasterF32 layer_tensor(const ConvLayer& l) {
    RasterF32 r(l.out_c, 3, 3 * l.in_c);
    r.data = l.w;
    return r;
}

void save_layer(const ConvLayer& l, const std::filesystem::path& dir, const std::string& name) {
    write_raster(layer_tensor(l), dir / (name + "_w.tns"));
    RasterF32 b(1, 1, l.out_c);
    b.data = l.b;
    write_raster(b, dir / (name + "_b.tns"));
}

ConvLayer load_layer(const std::filesystem::path& dir, const std::string& name) {
    RasterF32 w = read_raster(dir / (name + "_w.tns"));
    RasterF32 b = read_raster(dir / (name + "_b.tns"));
    ConvLayer l(w.channels / 3, w.height);
    require(static_cast<int>(b.data.size()) == l.out_c, Errc::invalid_argument,
            "checkpoint bias size mismatch");
    l.w = w.data;
    l.b = b.data;
    return l;
}

} // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& dir,
                     const std::map<std::string, std::string>& extra) {
    std::filesystem::create_directories(dir);
    save_layer(params.conv1, dir, "conv1");
    save_layer(params.conv2, dir, "conv2");
    save_layer(params.sem_head, dir, "sem_head");
    save_layer(params.inst_head, dir, "inst_head");

    std::ofstream os(dir / "manifest.txt", std::ios::trunc);
    if (!os) fail(Errc::io, "cannot write checkpoint manifest in " + dir.string());
    os << "format = panseg-checkpoint-v1\n";
    os << "classes = " << params.classes << "\n";
    os << "trunk_channels = " << params.trunk_channels << "\n";
    os << "dropout_rate = " << params.dropout_rate << "\n";
    os << "parameters = " << params.parameter_count() << "\n";
    for (const auto& [k, v] : extra) os << k << " = " << v << "\n";
}

ModelParams load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.txt");
    if (!is) fail(Errc::io, "cannot read checkpoint manifest in " + dir.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        auto pos = line.find('=');
        if (pos == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t a = s.find_first_not_of(" \t");
            std::size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, pos))] = trim(line.substr(pos + 1));
    }
    ModelParams p;
    p.conv1 = load_layer(dir, "conv1");
    p.conv2 = load_layer(dir, "conv2");
    p.sem_head = load_layer(dir, "sem_head");
    p.inst_head = load_layer(dir, "inst_head");
    p.classes = p.sem_head.out_c;
    p.trunk_channels = p.conv1.out_c;
    if (auto it = kv.find("dropout_rate"); it != kv.end())
        p.dropout_rate = std::stof(it->second);
    require(kv.count("classes") == 0 || std::stoi(kv["classes"]) == p.classes,
            Errc::invalid_argument, "checkpoint manifest disagrees with tensors");
    return p;
}

} // namespace panseg::model
