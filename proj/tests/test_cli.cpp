#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "panseg/core/tensor_io.hpp"

namespace fs = std::filesystem;

namespace {

const char* binary() {
    const char* env = std::getenv("PANSEG_BIN");
    return env ? env : PANSEG_BIN;
}

int run(const std::string& args) {
    std::string cmd = std::string(binary()) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempTree {
    fs::path root;
    TempTree() {
        root = fs::temp_directory_path() /
               ("panseg_cli_" + std::to_string(::getpid()));
        fs::create_directories(root);
    }
    ~TempTree() { fs::remove_all(root); }
    std::string operator/(const std::string& s) const { return (root / s).string(); }
};

// tiny corpus settings shared by the cases below
const std::string kTiny =
    " -s synth.tiles=5 -s synth.tile_height=40 -s synth.tile_width=40 -s synth.density=0.22";

} // namespace

TEST_CASE("cli: evaluate on gt-as-prediction reports a perfect score") {
    TempTree tmp;
    REQUIRE(run(std::string("synth") + kTiny + " -o " + (tmp / "corpus")) == 0);

    // forge predictions from the ground truth itself
    fs::create_directories(tmp.root / "pred");
    std::ofstream classes(tmp.root / "pred" / "pred_classes.csv");
    classes << "image_id,label,class\n";
    for (int i = 0; i < 5; ++i) {
        char base[32];
        std::snprintf(base, sizeof(base), "tile_%04d", i);
        panseg::InstanceMap inst =
            panseg::read_instance(tmp.root / "corpus" / (std::string(base) + "_inst.tns"));
        panseg::SemanticMap sem =
            panseg::read_semantic(tmp.root / "corpus" / (std::string(base) + "_sem.tns"));
        panseg::write_instance(inst, tmp.root / "pred" / (std::string(base) + "_pred.tns"));
        std::vector<int> cls(static_cast<std::size_t>(inst.max_label()) + 1, 0);
        for (std::size_t k = 0; k < inst.labels.size(); ++k)
            if (inst.labels[k] > 0) cls[inst.labels[k]] = sem.classes[k];
        for (std::size_t l = 1; l < cls.size(); ++l)
            classes << i << "," << l << "," << cls[l] << "\n";
    }
    classes.close();

    REQUIRE(run("evaluate --pred " + (tmp / "pred") + " --gt " + (tmp / "corpus") + " -o " +
                (tmp / "report")) == 0);
    std::string csv = slurp(tmp.root / "report" / "report.csv");
    CHECK(csv.find("mPQ+,1\n") != std::string::npos);
    CHECK(csv.find("R2,1\n") != std::string::npos);
}

TEST_CASE("cli: missing input maps to the IO exit code and names the path") {
    TempTree tmp;
    std::string cmd = std::string(binary()) + " sample-stats --corpus " + (tmp / "nowhere") +
                      " -o " + (tmp / "out.csv") + " 2> " + (tmp / "err.txt");
    int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 3);
    CHECK(slurp(tmp.root / "err.txt").find("nowhere") != std::string::npos);
}

TEST_CASE("cli: config errors map to the config exit code") {
    TempTree tmp;
    std::ofstream bad(tmp.root / "bad.ini");
    bad << "[train]\nnonsense_key = 7\n";
    bad.close();
    CHECK(run("-c " + (tmp / "bad.ini") + " synth -o " + (tmp / "x")) == 2);
    CHECK(run("-s train.lr_base=oops synth -o " + (tmp / "y")) == 2);
}

TEST_CASE("cli: full pipeline smoke run end-to-end on a small corpus") {
    TempTree tmp;
    std::string shared = " -s model.trunk_channels=6 -s train.steps=30 -s train.batch_size=2"
                         " -s train.val_interval=15 -s tta.passes=4";

    REQUIRE(run(std::string("synth") + kTiny + " -o " + (tmp / "corpus")) == 0);
    REQUIRE(run(std::string("encode-targets") + kTiny + " --corpus " + (tmp / "corpus") +
                " -o " + (tmp / "targets")) == 0);
    REQUIRE(run(std::string("sample-stats") + kTiny + " --corpus " + (tmp / "corpus") + " -o " +
                (tmp / "stats.csv")) == 0);
    REQUIRE(run(std::string("train") + kTiny + shared + " --corpus " + (tmp / "corpus") +
                " -o " + (tmp / "run")) == 0);
    REQUIRE(run(std::string("infer") + kTiny + shared + " --checkpoint " + (tmp / "run/best") +
                " --corpus " + (tmp / "corpus") + " -o " + (tmp / "probs")) == 0);
    REQUIRE(run(std::string("postprocess") + kTiny + " --probs " + (tmp / "probs") + " -o " +
                (tmp / "preds")) == 0);
    REQUIRE(run(std::string("tune") + kTiny +
                " -s tune.seed_thresholds=0.3,0.5 -s tune.fg_thresholds=0.25"
                " -s tune.min_areas=5 -s tune.max_areas=2000 -s tune.min_solidities=0"
                " -s tune.per_class=false --probs " +
                (tmp / "probs") + " --gt " + (tmp / "corpus") + " -o " + (tmp / "tuned")) == 0);
    REQUIRE(run(std::string("evaluate") + kTiny + " --pred " + (tmp / "preds") + " --gt " +
                (tmp / "corpus") + " -o " + (tmp / "report")) == 0);

    // all expected artifacts exist
    for (const char* f :
         {"corpus/tile_0000.png", "corpus/counts.csv", "corpus/config.ini",
          "targets/tile_0000_tri.tns", "targets/tile_0000_vec.tns", "stats.csv",
          "run/best/manifest.txt", "run/train_log.csv", "probs/tile_0000_semprob.tns",
          "preds/tile_0000_pred.tns", "preds/pred_classes.csv", "tuned/best_config.ini",
          "tuned/scores.csv", "report/report.csv", "report/report.txt"})
        CHECK(fs::exists(tmp.root / f));

    // targets tensors have the advertised shapes
    panseg::Tensor tri = panseg::read_tensor(tmp.root / "targets" / "tile_0000_tri.tns");
    CHECK(tri.dtype == panseg::Dtype::u8);
    CHECK(tri.dims == std::vector<std::uint32_t>{40, 40});
    panseg::Tensor vec = panseg::read_tensor(tmp.root / "targets" / "tile_0000_vec.tns");
    CHECK(vec.dtype == panseg::Dtype::f32);
    CHECK(vec.dims == std::vector<std::uint32_t>{40, 40, 2});

    // sample-stats CSV: header + one row per tile, p_n column sums to 1
    std::istringstream stats(slurp(tmp.root / "stats.csv"));
    std::string line;
    std::getline(stats, line);
    CHECK(line == "image_id,X_0,X_1,X_2,X_3,X_4,X_5,X_6,p_n");
    double total_p = 0.0;
    int rows = 0;
    while (std::getline(stats, line)) {
        if (line.empty()) continue;
        total_p += std::stod(line.substr(line.rfind(',') + 1));
        ++rows;
    }
    CHECK(rows == 5);
    CHECK(std::abs(total_p - 1.0) < 1e-9);
}

TEST_CASE("cli: identical seeds give byte-identical artifacts, thread count ignored") {
    TempTree tmp;
    std::string shared = kTiny + " -s model.trunk_channels=6 -s train.steps=12"
                                 " -s train.batch_size=2 -s train.val_interval=6"
                                 " -s tta.passes=4";

    for (const char* rep : {"a", "b"}) {
        std::string r = tmp / rep;
        REQUIRE(run("synth" + shared + " -o " + r + "/corpus") == 0);
        REQUIRE(run("train" + shared + " --corpus " + r + "/corpus -o " + r + "/run") == 0);
        REQUIRE(run("infer" + shared + " --checkpoint " + r + "/run/best --corpus " + r +
                    "/corpus -o " + r + "/probs") == 0);
        // second replica post-processes with a different thread count
        std::string threads = std::string(rep) == "a" ? " -s pipeline.threads=1"
                                                      : " -s pipeline.threads=2";
        REQUIRE(run("postprocess" + shared + threads + " --probs " + r + "/probs -o " + r +
                    "/preds") == 0);
        REQUIRE(run("evaluate" + shared + threads + " --pred " + r + "/preds --gt " + r +
                    "/corpus -o " + r + "/report") == 0);
    }

    for (const char* f : {"corpus/tile_0003.png", "corpus/tile_0003_inst.tns", "corpus/counts.csv",
                          "run/best/conv1_w.tns", "run/best/sem_head_w.tns", "run/train_log.csv",
                          "probs/tile_0002_semprob.tns", "preds/tile_0002_pred.tns",
                          "preds/pred_classes.csv", "report/report.csv"}) {
        CHECK_MESSAGE(slurp(tmp.root / "a" / f) == slurp(tmp.root / "b" / f), f);
        CHECK_MESSAGE(!slurp(tmp.root / "a" / f).empty(), f);
    }
}
