#include "doctest.h"

#include "oracles.hpp"
#include "panseg/targets/targets.hpp"

using namespace panseg;
using namespace panseg::targets;

namespace {

// Chebyshev-distance oracle: boundary iff some in-image pixel within radius w
// is outside the instance.
ThreeLabelTarget chebyshev_oracle(const InstanceMap& inst, int width, bool others_outside) {
    ThreeLabelTarget out(inst.height, inst.width);
    for (int y = 0; y < inst.height; ++y)
        for (int x = 0; x < inst.width; ++x) {
            std::int32_t l = inst.at(y, x);
            if (l == 0) continue;
            bool boundary = false;
            for (int ny = 0; ny < inst.height; ++ny)
                for (int nx = 0; nx < inst.width; ++nx) {
                    int cheb = std::max(std::abs(ny - y), std::abs(nx - x));
                    if (cheb > width) continue;
                    std::int32_t o = inst.at(ny, nx);
                    if (others_outside ? o != l : o == 0) boundary = true;
                }
            out.at(y, x) = boundary ? 2 : 1;
        }
    return out;
}

InstanceMap random_instances(Pcg32& rng, int h, int w, int count) {
    InstanceMap inst(h, w);
    for (int i = 1; i <= count; ++i) {
        int cy = rng.uniform_int(1, h - 2), cx = rng.uniform_int(1, w - 2);
        int ry = rng.uniform_int(1, 3), rx = rng.uniform_int(1, 3);
        for (int y = std::max(0, cy - ry); y <= std::min(h - 1, cy + ry); ++y)
            for (int x = std::max(0, cx - rx); x <= std::min(w - 1, cx + rx); ++x)
                if (inst.at(y, x) == 0) inst.at(y, x) = i;
    }
    return inst;
}

} // namespace

TEST_CASE("three-label encoding hand cases") {
    // empty map -> all background
    InstanceMap empty(4, 4);
    ThreeLabelTarget t = encode_three_label(empty, 2);
    for (auto v : t.labels) CHECK(v == 0);

    // single 3x3 instance, width 1: ring of 8 boundary pixels, 1 interior
    InstanceMap inst(5, 5);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) inst.at(y, x) = 1;
    t = encode_three_label(inst, 1);
    int interior = 0, boundary = 0;
    for (auto v : t.labels) {
        interior += v == 1;
        boundary += v == 2;
    }
    CHECK(boundary == 8);
    CHECK(interior == 1);
    CHECK(t.at(2, 2) == 1);

    // two instances sharing an edge both get boundary along it
    InstanceMap pair(4, 6);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 3; ++x) pair.at(y, x) = 1;
        for (int x = 3; x < 6; ++x) pair.at(y, x) = 2;
    }
    t = encode_three_label(pair, 1);
    for (int y = 0; y < 4; ++y) {
        CHECK(t.at(y, 2) == 2);
        CHECK(t.at(y, 3) == 2);
    }
    // with boundary_from_other_instances=false the shared edge is interior
    ThreeLabelTarget merged = encode_three_label(pair, 1, false);
    CHECK(merged.at(1, 2) == 1);
    CHECK(merged.at(1, 3) == 1);
}

TEST_CASE("three-label encoding matches the Chebyshev oracle on random maps") {
    Pcg32 rng(17);
    for (int iter = 0; iter < 50; ++iter) {
        int h = rng.uniform_int(4, 14), w = rng.uniform_int(4, 14);
        InstanceMap inst = random_instances(rng, h, w, rng.uniform_int(1, 4));
        int width = rng.uniform_int(1, 3);
        bool others = rng.chance(0.5);
        ThreeLabelTarget got = encode_three_label(inst, width, others);
        ThreeLabelTarget want = chebyshev_oracle(inst, width, others);
        REQUIRE(got.labels == want.labels);

        // partition property: interior+boundary pixels == instance pixels
        std::size_t fg = 0, labeled = 0;
        for (std::size_t i = 0; i < inst.labels.size(); ++i) {
            fg += inst.labels[i] > 0;
            labeled += got.labels[i] != 0;
        }
        CHECK(fg == labeled);
    }
}

TEST_CASE("center vectors point at instance centroids") {
    // single pixel: zero vector
    InstanceMap dot(3, 3);
    dot.at(1, 1) = 1;
    CenterVectorField f = encode_center_vectors(dot);
    CHECK(f.dy[f.index(1, 1)] == 0.0f);
    CHECK(f.dx[f.index(1, 1)] == 0.0f);

    // horizontal 1x3 instance: vectors (0,+1),(0,0),(0,-1)
    InstanceMap bar(1, 3);
    bar.at(0, 0) = bar.at(0, 1) = bar.at(0, 2) = 1;
    f = encode_center_vectors(bar);
    CHECK(f.dx[0] == doctest::Approx(1.0f));
    CHECK(f.dx[1] == doctest::Approx(0.0f));
    CHECK(f.dx[2] == doctest::Approx(-1.0f));
    CHECK(f.dy[0] == doctest::Approx(0.0f));

    // background stays exactly zero
    InstanceMap sparse(4, 4);
    sparse.at(0, 0) = 1;
    f = encode_center_vectors(sparse);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            if (!(y == 0 && x == 0)) {
                CHECK(f.dy[f.index(y, x)] == 0.0f);
                CHECK(f.dx[f.index(y, x)] == 0.0f);
            }
}

TEST_CASE("center vectors sum to zero per instance and translate equivariantly") {
    Pcg32 rng(23);
    for (int iter = 0; iter < 30; ++iter) {
        int h = rng.uniform_int(6, 16), w = rng.uniform_int(6, 16);
        InstanceMap inst = random_instances(rng, h, w, rng.uniform_int(1, 3));
        CenterVectorField f = encode_center_vectors(inst);

        for (const Region& r : instance_regions(inst)) {
            double sy = 0.0, sx = 0.0;
            for (const Pixel& p : r.pixels) {
                sy += f.dy[f.index(p.y, p.x)];
                sx += f.dx[f.index(p.y, p.x)];
            }
            CHECK(std::abs(sy) < 1e-4);
            CHECK(std::abs(sx) < 1e-4);
        }

        // translation equivariance: shift the map so nothing clips, re-encode
        int ty = rng.uniform_int(0, 2), tx = rng.uniform_int(0, 2);
        InstanceMap shifted(h + 3, w + 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) shifted.at(y + ty, x + tx) = inst.at(y, x);
        CenterVectorField g = encode_center_vectors(shifted);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (inst.at(y, x) == 0) continue;
                CHECK(g.dy[g.index(y + ty, x + tx)] ==
                      doctest::Approx(f.dy[f.index(y, x)]).epsilon(1e-5));
                CHECK(g.dx[g.index(y + ty, x + tx)] ==
                      doctest::Approx(f.dx[f.index(y, x)]).epsilon(1e-5));
            }
    }
}

TEST_CASE("thin instances keep no interior but stay recoverable via boundary") {
    InstanceMap thin(3, 8);
    for (int x = 1; x < 7; ++x) thin.at(1, x) = 1; // 1-px-thick line, width 2 ring
    ThreeLabelTarget t = encode_three_label(thin, 2);
    for (int x = 1; x < 7; ++x) CHECK(t.at(1, x) == 2);
}
