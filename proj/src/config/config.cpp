#include "panseg/config/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace panseg::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

// Tracks which keys were consumed so leftovers can be rejected.
class Reader {
public:
    explicit Reader(const ConfigFile& file) : file_(file) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = file_.sections.find(sec);
        return s != file_.sections.end() && s->second.count(key) > 0;
    }

    std::string raw(const std::string& sec, const std::string& key) {
        consumed_[sec].insert(key);
        return file_.sections.at(sec).at(key);
    }

    void get(const std::string& sec, const std::string& key, std::string& out) {
        if (has(sec, key)) out = raw(sec, key);
    }
    void get(const std::string& sec, const std::string& key, bool& out) {
        if (!has(sec, key)) return;
        std::string v = raw(sec, key);
        if (v == "true" || v == "1" || v == "yes")
            out = true;
        else if (v == "false" || v == "0" || v == "no")
            out = false;
        else
            fail(Errc::config, "config: boolean expected for " + sec + "." + key);
    }
    void get(const std::string& sec, const std::string& key, int& out) {
        if (has(sec, key)) out = parse_ll(sec, key);
    }
    void get(const std::string& sec, const std::string& key, std::uint64_t& out) {
        if (has(sec, key)) out = static_cast<std::uint64_t>(parse_ll(sec, key));
    }
    void get(const std::string& sec, const std::string& key, float& out) {
        if (has(sec, key)) out = static_cast<float>(parse_double(sec, key));
    }
    void get(const std::string& sec, const std::string& key, double& out) {
        if (has(sec, key)) out = parse_double(sec, key);
    }
    void get_list(const std::string& sec, const std::string& key, std::vector<float>& out) {
        if (!has(sec, key)) return;
        out.clear();
        for (const std::string& item : split(raw(sec, key), ','))
            out.push_back(std::stof(item));
    }
    void get_list(const std::string& sec, const std::string& key, std::vector<double>& out) {
        if (!has(sec, key)) return;
        out.clear();
        for (const std::string& item : split(raw(sec, key), ','))
            out.push_back(std::stod(item));
    }
    void get_list(const std::string& sec, const std::string& key, std::vector<int>& out) {
        if (!has(sec, key)) return;
        out.clear();
        for (const std::string& item : split(raw(sec, key), ','))
            out.push_back(std::stoi(item));
    }
    void get_list(const std::string& sec, const std::string& key,
                  std::vector<std::string>& out) {
        if (!has(sec, key)) return;
        out = split(raw(sec, key), ',');
    }

    void reject_unknown() const {
        for (const auto& [sec, keys] : file_.sections) {
            auto c = consumed_.find(sec);
            for (const auto& [key, value] : keys) {
                (void)value;
                if (c == consumed_.end() || c->second.count(key) == 0)
                    fail(Errc::config, "config: unknown key [" + sec + "] " + key);
            }
        }
    }

private:
    long long parse_ll(const std::string& sec, const std::string& key) {
        try {
            return std::stoll(raw(sec, key));
        } catch (const std::exception&) {
            fail(Errc::config, "config: integer expected for " + sec + "." + key);
        }
    }
    double parse_double(const std::string& sec, const std::string& key) {
        try {
            return std::stod(raw(sec, key));
        } catch (const std::exception&) {
            fail(Errc::config, "config: number expected for " + sec + "." + key);
        }
    }

    const ConfigFile& file_;
    std::map<std::string, std::set<std::string>> consumed_;
};

} // namespace

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile file;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(Errc::config, origin + ":" + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            file.sections[section]; // ensure section exists even if empty
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(Errc::config, origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            fail(Errc::config, origin + ":" + std::to_string(lineno) + ": empty key");
        file.sections[section][key] = value;
    }
    return file;
}

ConfigFile ConfigFile::parse(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::io, "cannot open config file: " + path.string());
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str(), path.string());
}

void ConfigFile::set_override(const std::string& keyval) {
    std::size_t eq = keyval.find('=');
    std::size_t dot = keyval.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        fail(Errc::config, "override must look like section.key=value: " + keyval);
    std::string sec = trim(keyval.substr(0, dot));
    std::string key = trim(keyval.substr(dot + 1, eq - dot - 1));
    std::string value = trim(keyval.substr(eq + 1));
    sections[sec][key] = value;
}

postprocess::PostprocessConfig PipelineConfig::default_postprocess() {
    postprocess::PostprocessConfig p;
    p.watershed.seed_threshold = {0.3f};
    p.watershed.fg_threshold = {0.25f};
    p.watershed.min_seed_area = 2;
    p.filter.enabled = true;
    p.filter.min_area = {10};
    p.filter.max_area = {20000};
    p.filter.min_solidity = {0.0f};
    p.split_cc = true;
    return p;
}

postprocess::TuneGrids PipelineConfig::default_tune_grids() {
    postprocess::TuneGrids g;
    g.seed_thresholds = {0.15f, 0.25f, 0.35f, 0.45f, 0.55f};
    g.fg_thresholds = {0.15f, 0.25f, 0.35f};
    g.min_areas = {5, 10, 20, 30};
    g.max_areas = {2000, 20000};
    g.min_solidities = {0.0f, 0.5f, 0.75f, 0.85f};
    g.sweeps = 1;
    g.per_class = true;
    return g;
}

PipelineConfig PipelineConfig::from_file(const ConfigFile& file) {
    PipelineConfig cfg;
    Reader r(file);

    r.get("pipeline", "classes", cfg.classes);
    r.get_list("pipeline", "class_names", cfg.class_names);
    r.get("pipeline", "threads", cfg.threads);
    r.get("pipeline", "rng", cfg.rng);
    r.get("pipeline", "seed", cfg.seed);
    require(cfg.rng == "pcg32", Errc::config, "config: the only supported rng is pcg32");
    require(cfg.classes >= 2, Errc::config, "config: classes must be >= 2");
    require(static_cast<int>(cfg.class_names.size()) == cfg.classes, Errc::config,
            "config: class_names must list one name per class");

    r.get("synth", "tiles", cfg.synth_tiles);
    r.get("synth", "tile_height", cfg.scene.height);
    r.get("synth", "tile_width", cfg.scene.width);
    r.get("synth", "density", cfg.scene.density);
    r.get("synth", "notch_probability", cfg.scene.notch_probability);
    r.get("synth", "min_gap", cfg.scene.min_gap);
    {
        std::vector<double> freqs, means, stds;
        r.get_list("synth", "class_frequencies", freqs);
        r.get_list("synth", "mean_areas", means);
        r.get_list("synth", "std_areas", stds);
        cfg.scene.classes.resize(static_cast<std::size_t>(cfg.classes));
        auto fit = [&](const std::vector<double>& v, const char* what) {
            require(v.empty() || static_cast<int>(v.size()) == cfg.classes - 1, Errc::config,
                    std::string("config: ") + what + " must list one value per nucleus class");
        };
        fit(freqs, "class_frequencies");
        fit(means, "mean_areas");
        fit(stds, "std_areas");
        for (int c = 1; c < cfg.classes; ++c) {
            if (!freqs.empty()) cfg.scene.classes[c].frequency = freqs[c - 1];
            if (!means.empty()) cfg.scene.classes[c].mean_area = means[c - 1];
            if (!stds.empty()) cfg.scene.classes[c].std_area = stds[c - 1];
        }
        double total = 0.0;
        for (int c = 1; c < cfg.classes; ++c) total += cfg.scene.classes[c].frequency;
        require(total > 0.0, Errc::config, "config: class frequencies sum to zero");
        for (int c = 1; c < cfg.classes; ++c) cfg.scene.classes[c].frequency /= total;
    }

    r.get("targets", "boundary_width", cfg.boundary_width);
    r.get("targets", "boundary_from_other_instances", cfg.boundary_from_other_instances);

    r.get("sampler", "epoch_size", cfg.epoch_size);

    r.get("loss", "rho", cfg.rho);
    r.get("loss", "label_smoothing", cfg.label_smoothing);
    r.get("loss", "ema_decay", cfg.ema_decay);
    r.get("loss", "focal_gamma", cfg.focal_gamma);

    r.get("model", "trunk_channels", cfg.trunk_channels);
    r.get("model", "dropout", cfg.dropout);

    r.get("train", "steps", cfg.steps);
    r.get("train", "batch_size", cfg.batch_size);
    r.get("train", "lr_base", cfg.lr_base);
    r.get("train", "lr_min", cfg.lr_min);
    r.get("train", "weight_decay", cfg.weight_decay);
    r.get("train", "val_interval", cfg.val_interval);
    r.get("train", "importance_sampling", cfg.importance_sampling);
    r.get("train", "loss_weighting", cfg.loss_weighting);
    r.get("train", "instance_loss_weight", cfg.instance_loss_weight);
    r.get("train", "val_fraction", cfg.val_fraction);

    r.get("augment", "enabled", cfg.aug.enabled);
    r.get("augment", "hed_jitter", cfg.aug.hed_jitter);
    r.get("augment", "rgb_jitter", cfg.aug.rgb_jitter);
    r.get("augment", "blur_sigma_max", cfg.aug.blur_sigma_max);
    r.get("augment", "blur_probability", cfg.aug.blur_probability);
    r.get("augment", "noise_std_max", cfg.aug.noise_std_max);
    r.get("augment", "dihedral", cfg.aug.dihedral);
    r.get("augment", "translate_max", cfg.aug.translate_max);

    r.get("tta", "passes", cfg.tta_passes);
    r.get("tta", "hed_jitter", cfg.tta_hed_jitter);
    r.get("tta", "dropout", cfg.tta_dropout);

    r.get_list("postprocess", "seed_threshold", cfg.post.watershed.seed_threshold);
    r.get_list("postprocess", "fg_threshold", cfg.post.watershed.fg_threshold);
    r.get("postprocess", "min_seed_area", cfg.post.watershed.min_seed_area);
    r.get("postprocess", "split_cc", cfg.post.split_cc);
    r.get("postprocess", "filter", cfg.post.filter.enabled);
    r.get_list("postprocess", "min_area", cfg.post.filter.min_area);
    r.get_list("postprocess", "max_area", cfg.post.filter.max_area);
    r.get_list("postprocess", "min_solidity", cfg.post.filter.min_solidity);

    r.get_list("tune", "seed_thresholds", cfg.tune_grids.seed_thresholds);
    r.get_list("tune", "fg_thresholds", cfg.tune_grids.fg_thresholds);
    r.get_list("tune", "min_areas", cfg.tune_grids.min_areas);
    r.get_list("tune", "max_areas", cfg.tune_grids.max_areas);
    r.get_list("tune", "min_solidities", cfg.tune_grids.min_solidities);
    r.get("tune", "sweeps", cfg.tune_grids.sweeps);
    r.get("tune", "per_class", cfg.tune_grids.per_class);
    r.get("tune", "objective", cfg.tune_objective);
    require(cfg.tune_objective == "mpq" || cfg.tune_objective == "r2", Errc::config,
            "config: tune objective must be mpq or r2");

    r.get("evaluate", "count_crop", cfg.count_crop);

    r.reject_unknown();

    // cross-field checks mirrored from the module validators
    cfg.post.watershed.validate(cfg.classes);
    cfg.post.filter.validate(cfg.classes);
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides) {
    ConfigFile file = path.empty() ? ConfigFile{} : ConfigFile::parse(path);
    for (const std::string& o : overrides) file.set_override(o);
    return from_file(file);
}

model::TrainConfig PipelineConfig::train_config() const {
    model::TrainConfig t;
    t.steps = steps;
    t.batch_size = batch_size;
    t.lr_base = lr_base;
    t.lr_min = lr_min;
    t.weight_decay = weight_decay;
    t.val_interval = val_interval;
    t.seed = seed;
    t.importance_sampling = importance_sampling;
    t.loss_weighting = loss_weighting;
    t.rho = rho;
    t.smoothing = label_smoothing;
    t.ema_decay = ema_decay;
    t.focal_gamma = focal_gamma;
    t.instance_loss_weight = instance_loss_weight;
    t.epoch_size = epoch_size;
    t.boundary_width = boundary_width;
    t.boundary_from_other_instances = boundary_from_other_instances;
    t.num_classes = classes;
    t.trunk_channels = trunk_channels;
    t.dropout = dropout;
    t.threads = threads;
    t.aug = aug;
    return t;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}
std::string fmt(float v) { return fmt(static_cast<double>(v)); }

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        if constexpr (std::is_floating_point_v<T>)
            os << fmt(v[i]);
        else
            os << v[i];
    }
    return os.str();
}

} // namespace

std::string PipelineConfig::to_text() const {
    std::ostringstream os;
    os << "[pipeline]\n";
    os << "classes = " << classes << "\n";
    os << "class_names = " << join(class_names) << "\n";
    os << "threads = " << threads << "\n";
    os << "rng = " << rng << "\n";
    os << "seed = " << seed << "\n\n";

    os << "[synth]\n";
    os << "tiles = " << synth_tiles << "\n";
    os << "tile_height = " << scene.height << "\n";
    os << "tile_width = " << scene.width << "\n";
    os << "density = " << fmt(scene.density) << "\n";
    os << "notch_probability = " << fmt(scene.notch_probability) << "\n";
    os << "min_gap = " << fmt(scene.min_gap) << "\n";
    std::vector<double> freqs, means, stds;
    for (int c = 1; c < classes; ++c) {
        freqs.push_back(scene.classes[c].frequency);
        means.push_back(scene.classes[c].mean_area);
        stds.push_back(scene.classes[c].std_area);
    }
    os << "class_frequencies = " << join(freqs) << "\n";
    os << "mean_areas = " << join(means) << "\n";
    os << "std_areas = " << join(stds) << "\n\n";

    os << "[targets]\n";
    os << "boundary_width = " << boundary_width << "\n";
    os << "boundary_from_other_instances = " << (boundary_from_other_instances ? "true" : "false")
       << "\n\n";

    os << "[sampler]\n";
    os << "epoch_size = " << epoch_size << "\n\n";

    os << "[loss]\n";
    os << "rho = " << fmt(rho) << "\n";
    os << "label_smoothing = " << fmt(label_smoothing) << "\n";
    os << "ema_decay = " << fmt(ema_decay) << "\n";
    os << "focal_gamma = " << fmt(focal_gamma) << "\n\n";

    os << "[model]\n";
    os << "trunk_channels = " << trunk_channels << "\n";
    os << "dropout = " << fmt(dropout) << "\n\n";

    os << "[train]\n";
    os << "steps = " << steps << "\n";
    os << "batch_size = " << batch_size << "\n";
    os << "lr_base = " << fmt(lr_base) << "\n";
    os << "lr_min = " << fmt(lr_min) << "\n";
    os << "weight_decay = " << fmt(weight_decay) << "\n";
    os << "val_interval = " << val_interval << "\n";
    os << "importance_sampling = " << (importance_sampling ? "true" : "false") << "\n";
    os << "loss_weighting = " << (loss_weighting ? "true" : "false") << "\n";
    os << "instance_loss_weight = " << fmt(instance_loss_weight) << "\n";
    os << "val_fraction = " << fmt(val_fraction) << "\n\n";

    os << "[augment]\n";
    os << "enabled = " << (aug.enabled ? "true" : "false") << "\n";
    os << "hed_jitter = " << fmt(aug.hed_jitter) << "\n";
    os << "rgb_jitter = " << fmt(aug.rgb_jitter) << "\n";
    os << "blur_sigma_max = " << fmt(aug.blur_sigma_max) << "\n";
    os << "blur_probability = " << fmt(aug.blur_probability) << "\n";
    os << "noise_std_max = " << fmt(aug.noise_std_max) << "\n";
    os << "dihedral = " << (aug.dihedral ? "true" : "false") << "\n";
    os << "translate_max = " << aug.translate_max << "\n\n";

    os << "[tta]\n";
    os << "passes = " << tta_passes << "\n";
    os << "hed_jitter = " << fmt(tta_hed_jitter) << "\n";
    os << "dropout = " << (tta_dropout ? "true" : "false") << "\n\n";

    os << "[postprocess]\n";
    os << "seed_threshold = " << join(post.watershed.seed_threshold) << "\n";
    os << "fg_threshold = " << join(post.watershed.fg_threshold) << "\n";
    os << "min_seed_area = " << post.watershed.min_seed_area << "\n";
    os << "split_cc = " << (post.split_cc ? "true" : "false") << "\n";
    os << "filter = " << (post.filter.enabled ? "true" : "false") << "\n";
    os << "min_area = " << join(post.filter.min_area) << "\n";
    os << "max_area = " << join(post.filter.max_area) << "\n";
    os << "min_solidity = " << join(post.filter.min_solidity) << "\n\n";

    os << "[tune]\n";
    os << "objective = " << tune_objective << "\n";
    os << "seed_thresholds = " << join(tune_grids.seed_thresholds) << "\n";
    os << "fg_thresholds = " << join(tune_grids.fg_thresholds) << "\n";
    os << "min_areas = " << join(tune_grids.min_areas) << "\n";
    os << "max_areas = " << join(tune_grids.max_areas) << "\n";
    os << "min_solidities = " << join(tune_grids.min_solidities) << "\n";
    os << "sweeps = " << tune_grids.sweeps << "\n";
    os << "per_class = " << (tune_grids.per_class ? "true" : "false") << "\n\n";

    os << "[evaluate]\n";
    os << "count_crop = " << count_crop << "\n";
    return os.str();
}

void PipelineConfig::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(Errc::io, "cannot write config: " + path.string());
    os << to_text();
}

} // namespace panseg::config
