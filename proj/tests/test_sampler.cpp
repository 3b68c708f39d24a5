#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "panseg/sampler/sampler.hpp"

using namespace panseg;
using namespace panseg::sampler;

namespace {

SemanticMap map_of(int h, int w, const std::vector<int>& classes) {
    SemanticMap m(h, w);
    for (std::size_t i = 0; i < classes.size(); ++i)
        m.classes[i] = static_cast<std::uint8_t>(classes[i]);
    return m;
}

} // namespace

TEST_CASE("occupancy counts pixel fractions per class") {
    // single-class image
    ClassOccupancy occ = occupancy({map_of(2, 2, {0, 0, 0, 0})}, 3);
    CHECK(occ.at(0, 0) == doctest::Approx(1.0));
    CHECK(occ.at(0, 1) == doctest::Approx(0.0));

    // mixed 2x2: classes {0,0,1,2}
    occ = occupancy({map_of(2, 2, {0, 0, 1, 2})}, 3);
    CHECK(occ.at(0, 0) == doctest::Approx(0.5));
    CHECK(occ.at(0, 1) == doctest::Approx(0.25));
    CHECK(occ.at(0, 2) == doctest::Approx(0.25));

    // rows sum to 1 on random maps (classes partition the pixels)
    Pcg32 rng(5);
    std::vector<SemanticMap> maps;
    for (int n = 0; n < 8; ++n) {
        SemanticMap m(6, 6);
        for (auto& c : m.classes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 4));
        maps.push_back(m);
    }
    occ = occupancy(maps, 5);
    for (int n = 0; n < occ.num_images; ++n) {
        double row = 0.0;
        for (int c = 0; c < occ.num_classes; ++c) row += occ.at(n, c);
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(occupancy({}, 3), Error);
}

TEST_CASE("sampling distribution reproduces direct evaluation of the formula") {
    // identical rows -> uniform
    std::vector<SemanticMap> same = {map_of(2, 2, {0, 0, 1, 1}), map_of(2, 2, {0, 0, 1, 1})};
    std::vector<double> p = sampling_distribution(occupancy(same, 2));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    // single image -> probability 1
    p = sampling_distribution(occupancy({map_of(2, 2, {0, 1, 1, 0})}, 2));
    CHECK(p[0] == doctest::Approx(1.0));

    // 3 images, only image 2 contains class 3; evaluate the formula by hand
    std::vector<SemanticMap> maps = {
        map_of(2, 2, {0, 0, 1, 1}),
        map_of(2, 2, {0, 1, 1, 1}),
        map_of(2, 2, {0, 1, 3, 3}),
    };
    ClassOccupancy occ = occupancy(maps, 4);
    p = sampling_distribution(occ);
    // class totals: X_0 = .5+.25+.25 = 1, X_1 = .5+.75+.25 = 1.5, X_3 = .5
    // class 2 is absent from the whole set and is dropped from the average
    double p0 = (0.5 / 1.0 + 0.5 / 1.5 + 0.0 / 0.5) / 3.0;
    double p1 = (0.25 / 1.0 + 0.75 / 1.5 + 0.0 / 0.5) / 3.0;
    double p2 = (0.25 / 1.0 + 0.25 / 1.5 + 0.5 / 0.5) / 3.0;
    double norm = p0 + p1 + p2;
    CHECK(p[0] == doctest::Approx(p0 / norm).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(p1 / norm).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(p2 / norm).epsilon(1e-12));
    CHECK(p[2] > p[0]);
    CHECK(p[2] > p[1]);

    // all-zero occupancy is rejected
    ClassOccupancy zero;
    zero.num_images = 2;
    zero.num_classes = 2;
    zero.x.assign(4, 0.0);
    CHECK_THROWS_AS(sampling_distribution(zero), Error);
}

TEST_CASE("sampling distribution sums to one and favors rare-class images") {
    Pcg32 rng(31);
    for (int iter = 0; iter < 50; ++iter) {
        int n_img = rng.uniform_int(2, 12), n_cls = rng.uniform_int(2, 6);
        std::vector<SemanticMap> maps;
        for (int n = 0; n < n_img; ++n) {
            SemanticMap m(5, 5);
            for (auto& c : m.classes)
                c = static_cast<std::uint8_t>(rng.uniform_int(0, n_cls - 1));
            maps.push_back(m);
        }
        std::vector<double> p = sampling_distribution(occupancy(maps, n_cls));
        double total = 0.0;
        for (double v : p) total += v;
        CHECK(std::abs(total - 1.0) < 1e-9);
        for (double v : p) CHECK(v >= 0.0);
    }

    // monotonicity: growing a globally rare class's share in one image can
    // only raise that image's draw probability
    std::vector<SemanticMap> maps = {
        map_of(4, 4, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1}),
        map_of(4, 4, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1}),
        map_of(4, 4, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}),
    };
    std::vector<double> before = sampling_distribution(occupancy(maps, 3));
    maps[0] = map_of(4, 4, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 2, 2, 1});
    std::vector<double> after = sampling_distribution(occupancy(maps, 3));
    CHECK(after[0] >= before[0]);
}

TEST_CASE("draw_epoch is deterministic and follows the distribution") {
    // degenerate distribution
    std::vector<int> idx = draw_epoch({1.0}, 10, 1);
    for (int v : idx) CHECK(v == 0);

    // same seed, same sequence; different seed differs somewhere
    std::vector<double> dist = {0.2, 0.3, 0.5};
    CHECK(draw_epoch(dist, 100, 7) == draw_epoch(dist, 100, 7));
    CHECK(draw_epoch(dist, 100, 7) != draw_epoch(dist, 100, 8));

    // law of large numbers: 1e5 draws from {0.9, 0.1}
    std::vector<int> big = draw_epoch({0.9, 0.1}, 100000, 3);
    double share0 = 0.0;
    for (int v : big) share0 += v == 0;
    share0 /= static_cast<double>(big.size());
    CHECK(share0 == doctest::Approx(0.9).epsilon(0.012));

    // chi-square goodness of fit at desk scale, 3 dof -> 99% quantile 11.34
    std::vector<int> draws = draw_epoch({0.1, 0.2, 0.3, 0.4}, 40000, 5);
    std::vector<double> expect = {4000, 8000, 12000, 16000};
    std::vector<double> got(4, 0.0);
    for (int v : draws) got[v] += 1.0;
    double chi2 = 0.0;
    for (int c = 0; c < 4; ++c) chi2 += (got[c] - expect[c]) * (got[c] - expect[c]) / expect[c];
    CHECK(chi2 < 11.34);
}
