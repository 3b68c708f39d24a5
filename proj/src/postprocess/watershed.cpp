#include "panseg/postprocess/postprocess.hpp"

#include <algorithm>
#include <queue>

#include "panseg/core/morphology.hpp"

namespace panseg::postprocess {

namespace {

float threshold_for(const std::vector<float>& t, std::uint8_t cls) {
    return cls < t.size() ? t[cls] : t.back();
}

struct FloodEntry {
    float elevation;
    std::uint64_t sequence;
    std::int32_t index;
    std::int32_t label;

    bool operator>(const FloodEntry& o) const {
        if (elevation != o.elevation) return elevation > o.elevation;
        return sequence > o.sequence;
    }
};

} // namespace

namespace {

// lists broadcast: either one entry for all classes or one per class
template <typename T>
void check_list_size(const std::vector<T>& v, int num_classes, const char* what) {
    require(!v.empty(), Errc::config, std::string(what) + " missing");
    require(static_cast<int>(v.size()) == 1 || static_cast<int>(v.size()) == num_classes,
            Errc::config, std::string(what) + " must have 1 or num_classes entries");
}

template <typename T>
T broadcast_at(const std::vector<T>& v, int cls) {
    return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(cls)];
}

} // namespace

void WatershedConfig::validate(int num_classes) const {
    check_list_size(seed_threshold, num_classes, "seed threshold");
    check_list_size(fg_threshold, num_classes, "fg threshold");
    for (int c = 0; c < num_classes; ++c) {
        float ts = broadcast_at(seed_threshold, c);
        float tf = broadcast_at(fg_threshold, c);
        require(ts > 0.0f && ts < 1.0f, Errc::config, "seed threshold out of (0,1)");
        require(tf > 0.0f && tf < 1.0f, Errc::config, "fg threshold out of (0,1)");
        require(ts >= tf, Errc::config, "seed threshold below fg threshold");
    }
    require(min_seed_area >= 1, Errc::config, "min_seed_area must be >= 1");
}

void FilterConfig::validate(int num_classes) const {
    check_list_size(min_area, num_classes, "min_area");
    check_list_size(max_area, num_classes, "max_area");
    check_list_size(min_solidity, num_classes, "min_solidity");
    for (int c = 0; c < num_classes; ++c) {
        int lo = broadcast_at(min_area, c);
        int hi = broadcast_at(max_area, c);
        float sol = broadcast_at(min_solidity, c);
        require(lo >= 0 && lo < hi, Errc::config, "need min_area < max_area");
        require(sol >= 0.0f && sol <= 1.0f, Errc::config, "solidity threshold out of [0,1]");
    }
}

InstanceMap watershed_instances(const RasterF32& p_interior, const RasterF32& p_boundary,
                                const SemanticMap& class_map, const WatershedConfig& cfg) {
    const int h = p_interior.height, w = p_interior.width;
    require(p_interior.channels == 1 && p_boundary.channels == 1, Errc::invalid_argument,
            "probability planes must be single-channel");
    require(p_boundary.height == h && p_boundary.width == w && class_map.height == h &&
                class_map.width == w,
            Errc::invalid_argument, "plane shapes disagree");
    int num_classes = 0;
    for (std::uint8_t c : class_map.classes) num_classes = std::max(num_classes, c + 1);
    cfg.validate(std::max(num_classes, static_cast<int>(cfg.seed_threshold.size())));

    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<std::uint8_t> seed_mask(n), fg_mask(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t cls = class_map.classes[i];
        float pi = p_interior.data[i];
        seed_mask[i] = pi >= threshold_for(cfg.seed_threshold, cls);
        fg_mask[i] = (pi + p_boundary.data[i]) >= threshold_for(cfg.fg_threshold, cls);
    }

    // Seeds: 8-connected components of the seed mask, tiny ones dropped.
    InstanceMap seeds = connected_components_mask(seed_mask, h, w, 8);
    if (cfg.min_seed_area > 1) {
        std::vector<int> area(static_cast<std::size_t>(seeds.max_label()) + 1, 0);
        for (std::int32_t v : seeds.labels)
            if (v > 0) ++area[v];
        std::vector<std::int32_t> remap(area.size(), 0);
        std::int32_t next = 0;
        for (std::size_t l = 1; l < area.size(); ++l)
            if (area[l] >= cfg.min_seed_area) remap[l] = ++next;
        for (std::int32_t& v : seeds.labels) v = v > 0 ? remap[v] : 0;
    }

    InstanceMap out(h, w);
    // Priority flood from the seeds, ascending elevation -p_interior, with an
    // insertion sequence number breaking ties deterministically.
    std::priority_queue<FloodEntry, std::vector<FloodEntry>, std::greater<FloodEntry>> pq;
    std::vector<std::uint8_t> visited(n, 0);
    std::uint64_t sequence = 0;

    constexpr int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    constexpr int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            std::int32_t s = seeds.labels[i];
            if (s > 0 && fg_mask[i]) {
                out.labels[i] = s;
                visited[i] = 1;
            }
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!visited[i]) continue;
            for (int k = 0; k < 8; ++k) {
                int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (visited[j] || !fg_mask[j]) continue;
                pq.push({-p_interior.data[j], sequence++, static_cast<std::int32_t>(j),
                         out.labels[i]});
            }
        }

    while (!pq.empty()) {
        FloodEntry e = pq.top();
        pq.pop();
        std::size_t i = static_cast<std::size_t>(e.index);
        if (visited[i]) continue;
        visited[i] = 1;
        out.labels[i] = e.label;
        int y = e.index / w, x = e.index % w;
        for (int k = 0; k < 8; ++k) {
            int ny = y + dy[k], nx = x + dx[k];
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            std::size_t j = static_cast<std::size_t>(ny) * w + nx;
            if (visited[j] || !fg_mask[j]) continue;
            pq.push({-p_interior.data[j], sequence++, static_cast<std::int32_t>(j), e.label});
        }
    }
    return out;
}

InstanceMap split_disconnected(const InstanceMap& inst) {
    const int h = inst.height, w = inst.width;
    InstanceMap out(h, w);
    std::vector<std::uint8_t> visited(inst.labels.size(), 0);
    std::vector<std::int32_t> stack;
    std::int32_t next = 0;
    constexpr int dy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    constexpr int dx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};

    // BFS per same-label component, components numbered in raster order of
    // their first pixel.
    for (std::size_t start = 0; start < inst.labels.size(); ++start) {
        if (inst.labels[start] <= 0 || visited[start]) continue;
        std::int32_t label = inst.labels[start];
        std::int32_t id = ++next;
        visited[start] = 1;
        stack.assign(1, static_cast<std::int32_t>(start));
        while (!stack.empty()) {
            std::int32_t i = stack.back();
            stack.pop_back();
            out.labels[i] = id;
            int y = i / w, x = i % w;
            for (int k = 0; k < 8; ++k) {
                int ny = y + dy[k], nx = x + dx[k];
                if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (!visited[j] && inst.labels[j] == label) {
                    visited[j] = 1;
                    stack.push_back(static_cast<std::int32_t>(j));
                }
            }
        }
    }
    return out;
}

std::vector<int> assign_classes(const InstanceMap& inst, const RasterF32& sem_probs) {
    require(sem_probs.height == inst.height && sem_probs.width == inst.width,
            Errc::invalid_argument, "probability stack shape mismatch");
    const int C = sem_probs.channels;
    std::int32_t max_label = inst.max_label();
    // score[label][class], background class excluded from the argmax
    std::vector<double> score(static_cast<std::size_t>(max_label + 1) * C, 0.0);
    for (std::size_t i = 0; i < inst.labels.size(); ++i) {
        std::int32_t l = inst.labels[i];
        if (l <= 0) continue;
        const float* p = sem_probs.data.data() + i * C;
        double* s = score.data() + static_cast<std::size_t>(l) * C;
        for (int c = 0; c < C; ++c) s[c] += p[c];
    }
    std::vector<int> classes(static_cast<std::size_t>(max_label + 1), 0);
    for (std::int32_t l = 1; l <= max_label; ++l) {
        const double* s = score.data() + static_cast<std::size_t>(l) * C;
        int best = 1;
        for (int c = 2; c < C; ++c)
            if (s[c] > s[best]) best = c;
        classes[l] = best;
    }
    return classes;
}

SemanticMap argmax_classes(const RasterF32& sem_probs) {
    SemanticMap out(sem_probs.height, sem_probs.width);
    const int C = sem_probs.channels;
    for (std::size_t i = 0; i < out.classes.size(); ++i) {
        const float* p = sem_probs.data.data() + i * C;
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (p[c] > p[best]) best = c;
        out.classes[i] = static_cast<std::uint8_t>(best);
    }
    return out;
}

} // namespace panseg::postprocess
