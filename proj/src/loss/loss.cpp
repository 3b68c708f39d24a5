#include "panseg/loss/loss.hpp"

#include <cmath>

#include "panseg/kernels/kernels.hpp"

namespace panseg::loss {

ClassPrior make_prior(std::span<const float> initial, float decay) {
    require(decay >= 0.0f && decay < 1.0f, Errc::invalid_argument, "decay must be in [0,1)");
    ClassPrior p;
    p.value.assign(initial.begin(), initial.end());
    p.decay = decay;
    for (float v : p.value)
        require(v >= 0.0f && v <= 1.0f, Errc::invalid_argument, "prior values must be in [0,1]");
    return p;
}

ClassPrior ema_update(const ClassPrior& prior, std::span<const float> batch_occupancy) {
    require(batch_occupancy.size() == prior.value.size(), Errc::invalid_argument,
            "occupancy size mismatch");
    ClassPrior out = prior;
    const float g = prior.decay;
    for (std::size_t c = 0; c < out.value.size(); ++c) {
        float x = batch_occupancy[c];
        require(x >= 0.0f && x <= 1.0f, Errc::invalid_argument,
                "batch occupancy must be in [0,1]");
        out.value[c] = g * prior.value[c] + (1.0f - g) * x;
    }
    return out;
}

LossWeights class_weights(const ClassPrior& prior, float rho) {
    require(rho >= 0.0f, Errc::invalid_argument, "rho must be >= 0");
    LossWeights lw;
    lw.rho = rho;
    lw.w.resize(prior.value.size());
    for (std::size_t c = 0; c < lw.w.size(); ++c)
        lw.w[c] = std::pow(1.0f - prior.value[c], rho);
    return lw;
}

LossWeights uniform_weights(int num_classes, float smoothing) {
    LossWeights lw;
    lw.w.assign(static_cast<std::size_t>(num_classes), 1.0f);
    lw.smoothing = smoothing;
    return lw;
}

std::vector<float> occupancy_counts(const SemanticMap& sem, int num_classes) {
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (std::uint8_t c : sem.classes) {
        require(c < num_classes, Errc::invalid_argument, "class index out of range");
        counts[c] += 1.0;
    }
    std::vector<float> out(counts.size());
    double inv = sem.classes.empty() ? 0.0 : 1.0 / static_cast<double>(sem.classes.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        out[c] = static_cast<float>(counts[c] * inv);
    return out;
}

namespace {

// softmax in double so losses and gradients keep full precision over f32
// logits (finite-difference checks rely on this).
inline void softmax_row(const float* logits, int c, double* probs) {
    float mx = kernels::max_value(logits, static_cast<std::size_t>(c));
    double total = 0.0;
    for (int k = 0; k < c; ++k) {
        probs[k] = std::exp(static_cast<double>(logits[k]) - mx);
        total += probs[k];
    }
    double inv = 1.0 / total;
    for (int k = 0; k < c; ++k) probs[k] *= inv;
}

} // namespace

CeResult weighted_smoothed_ce(const RasterF32& logits, const SemanticMap& target,
                              const LossWeights& weights, float focal_gamma) {
    const int C = logits.channels;
    require(logits.height == target.height && logits.width == target.width,
            Errc::invalid_argument, "logits/target shape mismatch");
    require(static_cast<int>(weights.w.size()) == C, Errc::invalid_argument,
            "weights size mismatch");
    const float eps = weights.smoothing;
    require(eps >= 0.0f && eps < 1.0f, Errc::invalid_argument, "smoothing must be in [0,1)");
    for (float v : logits.data)
        require(std::isfinite(v), Errc::invalid_argument, "non-finite logits");

    CeResult res;
    res.grad_logits = RasterF32(logits.height, logits.width, C);
    const std::size_t n_pix = logits.pixel_count();
    const double inv_n = 1.0 / static_cast<double>(n_pix);
    const double off = static_cast<double>(eps) / C;

    std::vector<double> probs(static_cast<std::size_t>(C));
    double total = 0.0;
    for (std::size_t p = 0; p < n_pix; ++p) {
        const float* z = logits.data.data() + p * C;
        float* g = res.grad_logits.data.data() + p * C;
        int t = target.classes[p];
        double wt = weights.w[t];
        softmax_row(z, C, probs.data());

        // loss uses log p computed from the stabilized softmax
        double pix_loss = 0.0;
        for (int c = 0; c < C; ++c) {
            double q = off + (c == t ? 1.0 - eps : 0.0);
            if (q > 0.0) pix_loss -= q * std::log(probs[c]);
        }

        if (focal_gamma > 0.0f) {
            double pt = probs[t];
            double f = std::pow(1.0 - pt, static_cast<double>(focal_gamma));
            // d/dz_c [w f L]: f*(p_c - q_c) + L * gamma*(1-pt)^(g-1) * pt * (p_c - [c==t])
            double fprime =
                focal_gamma * std::pow(1.0 - pt, static_cast<double>(focal_gamma) - 1.0) * pt;
            for (int c = 0; c < C; ++c) {
                double q = off + (c == t ? 1.0 - eps : 0.0);
                double delta = c == t ? 1.0 : 0.0;
                g[c] = static_cast<float>(
                    wt * inv_n * (f * (probs[c] - q) + pix_loss * fprime * (probs[c] - delta)));
            }
            total += wt * f * pix_loss;
        } else {
            for (int c = 0; c < C; ++c) {
                double q = off + (c == t ? 1.0 - eps : 0.0);
                g[c] = static_cast<float>(wt * inv_n * (probs[c] - q));
            }
            total += wt * pix_loss;
        }
    }
    res.loss = total / static_cast<double>(n_pix);
    return res;
}

InstanceLossResult instance_loss(const RasterF32& tri_logits,
                                 const targets::ThreeLabelTarget& tri_target,
                                 const RasterF32& vec_pred,
                                 const targets::CenterVectorField& vec_target,
                                 const std::vector<std::uint8_t>& fg_mask) {
    require(tri_logits.channels == 3, Errc::invalid_argument, "tri logits must have 3 planes");
    require(vec_pred.channels == 2, Errc::invalid_argument, "vector head must have 2 planes");
    require(tri_logits.height == tri_target.height && tri_logits.width == tri_target.width,
            Errc::invalid_argument, "tri shape mismatch");
    require(vec_pred.height == vec_target.height && vec_pred.width == vec_target.width,
            Errc::invalid_argument, "vector shape mismatch");
    require(fg_mask.size() == tri_logits.pixel_count(), Errc::invalid_argument,
            "fg mask size mismatch");

    InstanceLossResult res;
    res.grad_tri = RasterF32(tri_logits.height, tri_logits.width, 3);
    res.grad_vec = RasterF32(vec_pred.height, vec_pred.width, 2);

    const std::size_t n_pix = tri_logits.pixel_count();
    const double inv_n = 1.0 / static_cast<double>(n_pix);
    double probs[3];
    double ce = 0.0;
    for (std::size_t p = 0; p < n_pix; ++p) {
        const float* z = tri_logits.data.data() + p * 3;
        float* g = res.grad_tri.data.data() + p * 3;
        int t = tri_target.labels[p];
        softmax_row(z, 3, probs);
        ce -= std::log(probs[t]);
        for (int c = 0; c < 3; ++c)
            g[c] = static_cast<float>(inv_n * (probs[c] - (c == t ? 1.0 : 0.0)));
    }
    res.ce_term = ce / static_cast<double>(n_pix);

    std::size_t n_fg = 0;
    for (std::uint8_t m : fg_mask) n_fg += m != 0;
    double l2 = 0.0;
    if (n_fg > 0) {
        const double inv_fg = 1.0 / static_cast<double>(n_fg);
        for (std::size_t p = 0; p < n_pix; ++p) {
            if (!fg_mask[p]) continue;
            double ey = static_cast<double>(vec_pred.data[p * 2 + 0]) - vec_target.dy[p];
            double ex = static_cast<double>(vec_pred.data[p * 2 + 1]) - vec_target.dx[p];
            l2 += ey * ey + ex * ex;
            res.grad_vec.data[p * 2 + 0] = static_cast<float>(2.0 * ey * inv_fg);
            res.grad_vec.data[p * 2 + 1] = static_cast<float>(2.0 * ex * inv_fg);
        }
        l2 /= static_cast<double>(n_fg);
    }
    res.l2_term = l2;
    res.loss = res.ce_term + res.l2_term;
    return res;
}

} // namespace panseg::loss
