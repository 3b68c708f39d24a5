#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "panseg/augment/augment.hpp"
#include "panseg/targets/targets.hpp"

using namespace panseg;
using namespace panseg::augment;

namespace {

RasterF32 random_rgb(Pcg32& rng, int h, int w, float lo = 0.05f, float hi = 1.0f) {
    RasterF32 img(h, w, 3);
    for (auto& v : img.data) v = rng.uniformf(lo, hi);
    return img;
}

} // namespace

TEST_CASE("stain deconvolution round-trips and recognizes pure stains") {
    StainBasis basis = StainBasis::hed();

    // white pixel has zero optical density
    RasterF32 white(1, 1, 3, 1.0f);
    RasterF32 hed = rgb_to_hed(white, basis);
    for (float v : hed.data) CHECK(std::abs(v) < 1e-5);

    // rgb -> hed -> rgb within 1e-4 on [0.05, 1]
    Pcg32 rng(2);
    RasterF32 img = random_rgb(rng, 8, 8);
    RasterF32 back = hed_to_rgb(rgb_to_hed(img, basis), basis);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-4));

    // a pure-stain pixel lands on a single HED axis (Beer-Lambert synthesis)
    for (int stain = 0; stain < 3; ++stain) {
        const double k = 0.8;
        RasterF32 pure(1, 1, 3);
        for (int j = 0; j < 3; ++j)
            pure.data[j] = static_cast<float>(std::exp(-k * basis.od[stain][j]));
        RasterF32 dec = rgb_to_hed(pure, basis);
        for (int c = 0; c < 3; ++c) {
            if (c == stain)
                CHECK(dec.data[c] == doctest::Approx(k).epsilon(1e-4));
            else
                CHECK(std::abs(dec.data[c]) < 1e-4);
        }
    }

    // scaling by 1.0 is identity within 1e-5
    RasterF32 scaled = scale_hed_channels(img, basis, {1.0f, 1.0f, 1.0f});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(scaled.data[i] == doctest::Approx(img.data[i]).epsilon(1e-5));

    // singular basis is rejected
    CHECK_THROWS_AS(
        StainBasis::from_rows({{{1, 0, 0}, {1, 0, 0}, {0, 0, 1}}}), Error);
}

TEST_CASE("dihedral transforms invert exactly on every data type") {
    Pcg32 rng(4);
    RasterF32 img = random_rgb(rng, 5, 7);
    InstanceMap inst(5, 7);
    SemanticMap sem(5, 7);
    for (auto& v : inst.labels) v = rng.uniform_int(0, 4);
    for (auto& v : sem.classes) v = static_cast<std::uint8_t>(rng.uniform_int(0, 3));

    for (int t = 0; t < 8; ++t) {
        Dihedral d = static_cast<Dihedral>(t);
        RasterF32 ri = apply_dihedral(apply_dihedral(img, d), inverse(d));
        CHECK(ri.data == img.data);
        InstanceMap rinst = apply_dihedral(apply_dihedral(inst, d), inverse(d));
        CHECK(rinst.labels == inst.labels);
        SemanticMap rsem = apply_dihedral(apply_dihedral(sem, d), inverse(d));
        CHECK(rsem.classes == sem.classes);
    }
}

TEST_CASE("vector fields transform consistently with re-encoding") {
    // rot90 hand rule: (dy,dx) -> (dx,-dy)
    targets::CenterVectorField f(1, 1);
    f.dy[0] = 2.0f;
    f.dx[0] = 3.0f;
    targets::CenterVectorField r = apply_dihedral(f, Dihedral::rot90);
    CHECK(r.dy[0] == doctest::Approx(3.0f));
    CHECK(r.dx[0] == doctest::Approx(-2.0f));

    // for every transform: transforming the encoded field equals encoding the
    // transformed instance map
    Pcg32 rng(6);
    for (int iter = 0; iter < 20; ++iter) {
        InstanceMap inst(rng.uniform_int(4, 9), rng.uniform_int(4, 9));
        for (auto& v : inst.labels) v = rng.uniform_int(0, 2);
        targets::CenterVectorField encoded = targets::encode_center_vectors(inst);
        for (int t = 0; t < 8; ++t) {
            Dihedral d = static_cast<Dihedral>(t);
            targets::CenterVectorField direct = apply_dihedral(encoded, d);
            targets::CenterVectorField re = targets::encode_center_vectors(apply_dihedral(inst, d));
            REQUIRE(direct.dy.size() == re.dy.size());
            for (std::size_t i = 0; i < re.dy.size(); ++i) {
                CHECK(direct.dy[i] == doctest::Approx(re.dy[i]).epsilon(1e-5));
                CHECK(direct.dx[i] == doctest::Approx(re.dx[i]).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("augment_train is deterministic and identity when disabled") {
    Pcg32 rng(10);
    Sample s;
    s.image = random_rgb(rng, 12, 12);
    s.inst = InstanceMap(12, 12);
    s.sem = SemanticMap(12, 12);
    for (int y = 4; y < 8; ++y)
        for (int x = 4; x < 8; ++x) {
            s.inst.at(y, x) = 1;
            s.sem.at(y, x) = 2;
        }

    TrainAugmentConfig off;
    off.enabled = false;
    Sample same = augment_train(s, off, 99);
    CHECK(same.image.data == s.image.data);
    CHECK(same.inst.labels == s.inst.labels);

    TrainAugmentConfig cfg; // defaults on
    Sample a = augment_train(s, cfg, 1234);
    Sample b = augment_train(s, cfg, 1234);
    CHECK(a.image.data == b.image.data);
    CHECK(a.inst.labels == b.inst.labels);
    CHECK(a.sem.classes == b.sem.classes);
    Sample c = augment_train(s, cfg, 1235);
    CHECK(a.image.data != c.image.data);

    // spatial ops keep image and maps aligned: instance pixels keep their class
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x)
            CHECK((a.inst.at(y, x) > 0) == (a.sem.at(y, x) > 0));
}

TEST_CASE("tta_average reproduces hand-computable cases") {
    StainBasis basis = StainBasis::hed();
    Pcg32 rng(11);
    RasterF32 img = random_rgb(rng, 6, 6);

    // constant model: any plan yields the constant
    ModelFn constant = [](const RasterF32& in, std::optional<std::uint64_t>) {
        RasterF32 sem(in.height, in.width, 3, 0.0f);
        RasterF32 tri(in.height, in.width, 3, 0.0f);
        for (std::size_t p = 0; p < sem.pixel_count(); ++p) {
            sem.data[p * 3 + 0] = 0.2f;
            sem.data[p * 3 + 1] = 0.3f;
            sem.data[p * 3 + 2] = 0.5f;
            tri.data[p * 3 + 0] = 0.6f;
            tri.data[p * 3 + 1] = 0.3f;
            tri.data[p * 3 + 2] = 0.1f;
        }
        return std::make_pair(sem, tri);
    };
    std::vector<TTAPass> plan = make_tta_plan(16, 1, 0.1f, true, 3);
    CHECK(plan.size() == 16);
    TtaResult res = tta_average({constant}, img, plan, basis);
    for (std::size_t p = 0; p < res.sem_probs.pixel_count(); ++p) {
        CHECK(res.sem_probs.data[p * 3 + 0] == doctest::Approx(0.2f).epsilon(1e-5));
        CHECK(res.sem_probs.data[p * 3 + 2] == doctest::Approx(0.5f).epsilon(1e-5));
    }

    // two identity passes of the same model equal a single pass
    ModelFn echo = [](const RasterF32& in, std::optional<std::uint64_t>) {
        RasterF32 sem(in.height, in.width, 2, 0.0f);
        RasterF32 tri(in.height, in.width, 3, 0.0f);
        for (std::size_t p = 0; p < sem.pixel_count(); ++p) {
            float v = in.data[p * 3];
            sem.data[p * 2 + 0] = v;
            sem.data[p * 2 + 1] = 1.0f - v;
            tri.data[p * 3 + 0] = 1.0f;
        }
        return std::make_pair(sem, tri);
    };
    std::vector<TTAPass> two(2);
    TtaResult twice = tta_average({echo}, img, two, basis);
    std::vector<TTAPass> one(1);
    TtaResult once = tta_average({echo}, img, one, basis);
    CHECK(twice.sem_probs.data == once.sem_probs.data);

    // two passes producing 0.2 and 0.4 average to 0.3
    int call = 0;
    ModelFn flip = [&call](const RasterF32& in, std::optional<std::uint64_t>) {
        float v = call++ == 0 ? 0.2f : 0.4f;
        RasterF32 sem(in.height, in.width, 1, v);
        RasterF32 tri(in.height, in.width, 1, v);
        return std::make_pair(sem, tri);
    };
    TtaResult avg = tta_average({flip}, img, two, basis);
    CHECK(avg.sem_probs.data[0] == doctest::Approx(0.3f).epsilon(1e-6));

    // empty plan is an error
    CHECK_THROWS_AS(tta_average({constant}, img, {}, basis), Error);
}

TEST_CASE("tta_average keeps probabilities on the simplex") {
    StainBasis basis = StainBasis::hed();
    Pcg32 rng(14);
    RasterF32 img = random_rgb(rng, 8, 8);
    // model emitting random simplex points (arbitrary function of input)
    ModelFn noisy = [](const RasterF32& in, std::optional<std::uint64_t> seed) {
        Pcg32 local(seed.value_or(0) + 1);
        RasterF32 sem(in.height, in.width, 4, 0.0f);
        RasterF32 tri(in.height, in.width, 3, 0.0f);
        auto fill = [&](RasterF32& r) {
            int c = r.channels;
            for (std::size_t p = 0; p < r.pixel_count(); ++p) {
                float total = 0.0f;
                for (int k = 0; k < c; ++k) {
                    r.data[p * c + k] = local.uniformf(0.01f, 1.0f);
                    total += r.data[p * c + k];
                }
                for (int k = 0; k < c; ++k) r.data[p * c + k] /= total;
            }
        };
        fill(sem);
        fill(tri);
        return std::make_pair(sem, tri);
    };
    std::vector<TTAPass> plan = make_tta_plan(16, 1, 0.1f, true, 77);
    TtaResult res = tta_average({noisy}, img, plan, basis, 2);
    for (std::size_t p = 0; p < res.sem_probs.pixel_count(); ++p) {
        float total = 0.0f;
        for (int c = 0; c < 4; ++c) total += res.sem_probs.data[p * 4 + c];
        CHECK(total == doctest::Approx(1.0f).epsilon(1e-5));
    }

    // ensemble plans spread passes over the models round-robin
    std::vector<TTAPass> ens = make_tta_plan(16, 2, 0.1f, false, 5);
    int first = 0, second = 0;
    for (const auto& p : ens) (p.model_index == 0 ? first : second)++;
    CHECK(first == 8);
    CHECK(second == 8);
}
