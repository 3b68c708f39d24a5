#include "panseg/augment/augment.hpp"

#include <algorithm>
#include <cmath>

#include "panseg/core/parallel.hpp"
#include "panseg/core/rng.hpp"
#include "panseg/kernels/kernels.hpp"

namespace panseg::augment {

namespace {

struct Mapping {
    int out_h, out_w;
    // maps input (y,x) to output (y,x)
    int (*oy)(int y, int x, int h, int w);
    int (*ox)(int y, int x, int h, int w);
};

Mapping mapping_for(Dihedral t, int h, int w) {
    switch (t) {
        case Dihedral::identity:
            return {h, w, [](int y, int, int, int) { return y; },
                    [](int, int x, int, int) { return x; }};
        case Dihedral::rot90: // clockwise
            return {w, h, [](int, int x, int, int) { return x; },
                    [](int y, int, int hh, int) { return hh - 1 - y; }};
        case Dihedral::rot180:
            return {h, w, [](int y, int, int hh, int) { return hh - 1 - y; },
                    [](int, int x, int, int ww) { return ww - 1 - x; }};
        case Dihedral::rot270:
            return {w, h, [](int, int x, int, int ww) { return ww - 1 - x; },
                    [](int y, int, int, int) { return y; }};
        case Dihedral::flip_h:
            return {h, w, [](int y, int, int, int) { return y; },
                    [](int, int x, int, int ww) { return ww - 1 - x; }};
        case Dihedral::flip_v:
            return {h, w, [](int y, int, int hh, int) { return hh - 1 - y; },
                    [](int, int x, int, int) { return x; }};
        case Dihedral::transpose:
            return {w, h, [](int, int x, int, int) { return x; },
                    [](int y, int, int, int) { return y; }};
        case Dihedral::anti_transpose:
            return {w, h, [](int, int x, int, int ww) { return ww - 1 - x; },
                    [](int y, int, int hh, int) { return hh - 1 - y; }};
    }
    fail(Errc::invalid_argument, "unknown dihedral transform");
}

} // namespace

Dihedral inverse(Dihedral t) {
    if (t == Dihedral::rot90) return Dihedral::rot270;
    if (t == Dihedral::rot270) return Dihedral::rot90;
    return t; // all others are involutions
}

RasterF32 apply_dihedral(const RasterF32& in, Dihedral t) {
    Mapping m = mapping_for(t, in.height, in.width);
    RasterF32 out(m.out_h, m.out_w, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            const float* src = &in.data[(static_cast<std::size_t>(y) * in.width + x) *
                                        in.channels];
            float* dst = &out.data[(static_cast<std::size_t>(m.oy(y, x, in.height, in.width)) *
                                        m.out_w +
                                    m.ox(y, x, in.height, in.width)) *
                                   in.channels];
            for (int c = 0; c < in.channels; ++c) dst[c] = src[c];
        }
    return out;
}

InstanceMap apply_dihedral(const InstanceMap& in, Dihedral t) {
    Mapping m = mapping_for(t, in.height, in.width);
    InstanceMap out(m.out_h, m.out_w);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            out.at(m.oy(y, x, in.height, in.width), m.ox(y, x, in.height, in.width)) =
                in.at(y, x);
    return out;
}

SemanticMap apply_dihedral(const SemanticMap& in, Dihedral t) {
    Mapping m = mapping_for(t, in.height, in.width);
    SemanticMap out(m.out_h, m.out_w);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            out.at(m.oy(y, x, in.height, in.width), m.ox(y, x, in.height, in.width)) =
                in.at(y, x);
    return out;
}

targets::CenterVectorField apply_dihedral(const targets::CenterVectorField& in, Dihedral t) {
    Mapping m = mapping_for(t, in.height, in.width);
    targets::CenterVectorField out(m.out_h, m.out_w);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            std::size_t src = in.index(y, x);
            float dy = in.dy[src], dx = in.dx[src];
            float ny = 0.0f, nx = 0.0f;
            switch (t) {
                case Dihedral::identity: ny = dy, nx = dx; break;
                case Dihedral::rot90: ny = dx, nx = -dy; break;
                case Dihedral::rot180: ny = -dy, nx = -dx; break;
                case Dihedral::rot270: ny = -dx, nx = dy; break;
                case Dihedral::flip_h: ny = dy, nx = -dx; break;
                case Dihedral::flip_v: ny = -dy, nx = dx; break;
                case Dihedral::transpose: ny = dx, nx = dy; break;
                case Dihedral::anti_transpose: ny = -dx, nx = -dy; break;
            }
            std::size_t dst =
                static_cast<std::size_t>(m.oy(y, x, in.height, in.width)) * m.out_w +
                m.ox(y, x, in.height, in.width);
            out.dy[dst] = ny;
            out.dx[dst] = nx;
        }
    return out;
}

namespace {

void gaussian_blur_inplace(RasterF32& img, float sigma) {
    if (sigma <= 0.0f) return;
    int radius = std::max(1, static_cast<int>(std::ceil(2.5f * sigma)));
    std::vector<float> k(static_cast<std::size_t>(2 * radius + 1));
    float total = 0.0f;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5f * (i * i) / (sigma * sigma));
        total += k[i + radius];
    }
    for (float& v : k) v /= total;

    RasterF32 tmp(img.height, img.width, img.channels);
    auto clamp = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    for (int y = 0; y < img.height; ++y) // horizontal
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * img.at(y, clamp(x + i, img.width - 1), c);
                tmp.at(y, x, c) = acc;
            }
    for (int y = 0; y < img.height; ++y) // vertical
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * tmp.at(clamp(y + i, img.height - 1), x, c);
                img.at(y, x, c) = acc;
            }
}

} // namespace

Sample augment_train(const Sample& in, const TrainAugmentConfig& cfg, std::uint64_t seed) {
    if (!cfg.enabled) return in;
    Pcg32 rng(seed, /*stream=*/0xa36);
    Sample out = in;

    // photometric, image only; draw order is part of the determinism contract
    if (cfg.hed_jitter > 0.0f) {
        std::array<float, 3> scales;
        for (float& s : scales) s = rng.uniformf(1.0f - cfg.hed_jitter, 1.0f + cfg.hed_jitter);
        out.image = scale_hed_channels(out.image, cfg.basis, scales);
    }
    if (cfg.rgb_jitter > 0.0f) {
        float mult[3], add[3];
        for (int c = 0; c < 3; ++c) mult[c] = rng.uniformf(1.0f - cfg.rgb_jitter, 1.0f + cfg.rgb_jitter);
        for (int c = 0; c < 3; ++c) add[c] = rng.uniformf(-cfg.rgb_jitter, cfg.rgb_jitter);
        for (std::size_t p = 0; p < out.image.pixel_count(); ++p)
            for (int c = 0; c < 3; ++c) {
                float& v = out.image.data[p * 3 + c];
                v = v * mult[c] + add[c];
            }
    }
    if (cfg.blur_sigma_max > 0.0f && rng.chance(cfg.blur_probability))
        gaussian_blur_inplace(out.image, rng.uniformf(0.0f, cfg.blur_sigma_max));
    if (cfg.noise_std_max > 0.0f) {
        float std_dev = rng.uniformf(0.0f, cfg.noise_std_max);
        for (float& v : out.image.data) v += std_dev * static_cast<float>(rng.normal());
    }
    for (float& v : out.image.data) v = std::clamp(v, 0.0f, 1.0f);

    // spatial, exact integer ops on image and maps together
    if (cfg.dihedral) {
        Dihedral t = static_cast<Dihedral>(rng.uniform_int(0, 7));
        out.image = apply_dihedral(out.image, t);
        out.inst = apply_dihedral(out.inst, t);
        out.sem = apply_dihedral(out.sem, t);
    }
    if (cfg.translate_max > 0) {
        int ty = rng.uniform_int(-cfg.translate_max, cfg.translate_max);
        int tx = rng.uniform_int(-cfg.translate_max, cfg.translate_max);
        if (ty != 0 || tx != 0) {
            const int h = out.image.height, w = out.image.width;
            RasterF32 img(h, w, out.image.channels);
            InstanceMap inst(h, w);
            SemanticMap sem(h, w);
            auto clamp = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    int sy = y - ty, sx = x - tx;
                    // image replicates edges; maps fill with background
                    for (int c = 0; c < img.channels; ++c)
                        img.at(y, x, c) =
                            out.image.at(clamp(sy, h - 1), clamp(sx, w - 1), c);
                    if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                        inst.at(y, x) = out.inst.at(sy, sx);
                        sem.at(y, x) = out.sem.at(sy, sx);
                    }
                }
            out.image = std::move(img);
            out.inst = std::move(inst);
            out.sem = std::move(sem);
        }
    }
    return out;
}

std::vector<TTAPass> make_tta_plan(int passes, int num_models, float hed_jitter,
                                   bool test_time_dropout, std::uint64_t seed) {
    require(passes >= 1, Errc::invalid_argument, "TTA plan needs at least one pass");
    require(num_models >= 1, Errc::invalid_argument, "TTA plan needs at least one model");
    Pcg32 rng(seed, /*stream=*/0x77a);
    std::vector<TTAPass> plan(static_cast<std::size_t>(passes));
    for (int i = 0; i < passes; ++i) {
        TTAPass& p = plan[i];
        p.transform = static_cast<Dihedral>(i % 8);
        for (float& s : p.hed_scales)
            s = hed_jitter > 0.0f ? rng.uniformf(1.0f - hed_jitter, 1.0f + hed_jitter) : 1.0f;
        if (test_time_dropout)
            p.dropout_seed = (static_cast<std::uint64_t>(rng.next_u32()) << 32) | rng.next_u32();
        p.model_index = i % num_models;
    }
    return plan;
}

TtaResult tta_average(const std::vector<ModelFn>& models, const RasterF32& image,
                      const std::vector<TTAPass>& plan, const StainBasis& basis, int threads) {
    require(!plan.empty(), Errc::invalid_argument, "TTA plan is empty");
    require(!models.empty(), Errc::invalid_argument, "TTA needs at least one model");
    for (const TTAPass& p : plan)
        require(p.model_index >= 0 && p.model_index < static_cast<int>(models.size()),
                Errc::invalid_argument, "TTA pass references a missing model");

    // Passes run independently; accumulation is sequential in plan order so
    // the result does not depend on the thread count.
    std::vector<TtaResult> per_pass(plan.size());
    parallel_for(plan.size(), threads, [&](std::size_t i) {
        const TTAPass& p = plan[i];
        RasterF32 transformed = apply_dihedral(image, p.transform);
        bool scaled = p.hed_scales[0] != 1.0f || p.hed_scales[1] != 1.0f ||
                      p.hed_scales[2] != 1.0f;
        if (scaled) transformed = scale_hed_channels(transformed, basis, p.hed_scales);
        auto [sem, tri] = models[p.model_index](transformed, p.dropout_seed);
        Dihedral inv = inverse(p.transform);
        per_pass[i].sem_probs = apply_dihedral(sem, inv);
        per_pass[i].tri_probs = apply_dihedral(tri, inv);
    });

    TtaResult out = per_pass[0];
    for (std::size_t i = 1; i < per_pass.size(); ++i) {
        require(per_pass[i].sem_probs.same_shape(out.sem_probs) &&
                    per_pass[i].tri_probs.same_shape(out.tri_probs),
                Errc::invalid_argument, "TTA pass output shape mismatch");
        kernels::axpy(1.0f, per_pass[i].sem_probs.data.data(), out.sem_probs.data.data(),
                      out.sem_probs.data.size());
        kernels::axpy(1.0f, per_pass[i].tri_probs.data.data(), out.tri_probs.data.data(),
                      out.tri_probs.data.size());
    }
    float inv_n = 1.0f / static_cast<float>(plan.size());
    kernels::scale(out.sem_probs.data.data(), inv_n, out.sem_probs.data.size());
    kernels::scale(out.tri_probs.data.data(), inv_n, out.tri_probs.data.size());
    return out;
}

} // namespace panseg::augment
