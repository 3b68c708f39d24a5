#include "panseg/sampler/sampler.hpp"

#include <algorithm>

#include "panseg/core/rng.hpp"

namespace panseg::sampler {

ClassOccupancy occupancy(const std::vector<SemanticMap>& maps, int num_classes) {
    require(!maps.empty(), Errc::invalid_argument, "occupancy needs at least one image");
    require(num_classes >= 1, Errc::invalid_argument, "num_classes must be >= 1");
    ClassOccupancy occ;
    occ.num_images = static_cast<int>(maps.size());
    occ.num_classes = num_classes;
    occ.x.assign(maps.size() * static_cast<std::size_t>(num_classes), 0.0);

    const int h = maps[0].height, w = maps[0].width;
    for (int n = 0; n < occ.num_images; ++n) {
        const SemanticMap& m = maps[n];
        require(m.height == h && m.width == w, Errc::invalid_argument,
                "all maps must share one size");
        for (std::uint8_t c : m.classes) {
            require(c < num_classes, Errc::invalid_argument, "class index out of range");
            occ.at(n, c) += 1.0;
        }
        double inv = 1.0 / (static_cast<double>(h) * w);
        for (int c = 0; c < num_classes; ++c) occ.at(n, c) *= inv;
    }
    return occ;
}

std::vector<double> sampling_distribution(const ClassOccupancy& occ) {
    const int n_img = occ.num_images, n_cls = occ.num_classes;
    std::vector<double> class_total(n_cls, 0.0);
    for (int n = 0; n < n_img; ++n)
        for (int c = 0; c < n_cls; ++c) class_total[c] += occ.at(n, c);

    // Classes with zero dataset-wide occupancy would divide by zero; they are
    // excluded from the class average.
    int present = 0;
    for (int c = 0; c < n_cls; ++c)
        if (class_total[c] > 0.0) ++present;
    require(present > 0, Errc::invalid_argument, "occupancy table is all zero");

    std::vector<double> p(n_img, 0.0);
    double total = 0.0;
    for (int n = 0; n < n_img; ++n) {
        double acc = 0.0;
        for (int c = 0; c < n_cls; ++c)
            if (class_total[c] > 0.0) acc += occ.at(n, c) / class_total[c];
        p[n] = acc / present;
        total += p[n];
    }
    // The per-class terms each sum to 1 over images, so total == present/present == 1
    // up to rounding; normalize away the rounding.
    for (double& v : p) v /= total;
    return p;
}

std::vector<int> draw_epoch(const std::vector<double>& dist, int epoch_size, std::uint64_t seed) {
    require(epoch_size >= 1, Errc::invalid_argument, "epoch_size must be >= 1");
    require(!dist.empty(), Errc::invalid_argument, "empty distribution");

    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        require(dist[i] >= 0.0, Errc::invalid_argument, "negative probability");
        acc += dist[i];
        cdf[i] = acc;
    }
    require(acc > 0.0, Errc::invalid_argument, "distribution sums to zero");

    Pcg32 rng(seed, /*stream=*/0x5a6d);
    std::vector<int> out(static_cast<std::size_t>(epoch_size));
    for (int i = 0; i < epoch_size; ++i) {
        double u = rng.uniform01() * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        out[i] = static_cast<int>(it - cdf.begin());
    }
    return out;
}

} // namespace panseg::sampler
