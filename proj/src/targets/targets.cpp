#include "panseg/targets/targets.hpp"

#include <algorithm>

namespace panseg::targets {

ThreeLabelTarget encode_three_label(const InstanceMap& inst, int boundary_width,
                                    bool other_instances_are_outside) {
    require(boundary_width >= 1, Errc::invalid_argument, "boundary_width must be >= 1");
    ThreeLabelTarget out(inst.height, inst.width);
    const int w = boundary_width;
    for (int y = 0; y < inst.height; ++y) {
        for (int x = 0; x < inst.width; ++x) {
            std::int32_t label = inst.at(y, x);
            if (label == 0) continue;
            bool boundary = false;
            int y0 = std::max(0, y - w), y1 = std::min(inst.height - 1, y + w);
            int x0 = std::max(0, x - w), x1 = std::min(inst.width - 1, x + w);
            for (int ny = y0; ny <= y1 && !boundary; ++ny) {
                for (int nx = x0; nx <= x1; ++nx) {
                    std::int32_t other = inst.at(ny, nx);
                    bool outside = other_instances_are_outside ? other != label : other == 0;
                    if (outside) {
                        boundary = true;
                        break;
                    }
                }
            }
            out.at(y, x) = boundary ? 2 : 1;
        }
    }
    return out;
}

CenterVectorField encode_center_vectors(const InstanceMap& inst) {
    CenterVectorField out(inst.height, inst.width);
    for (const Region& region : instance_regions(inst)) {
        double cy = 0.0, cx = 0.0;
        for (const Pixel& p : region.pixels) {
            cy += p.y;
            cx += p.x;
        }
        cy /= static_cast<double>(region.pixels.size());
        cx /= static_cast<double>(region.pixels.size());
        for (const Pixel& p : region.pixels) {
            std::size_t i = out.index(p.y, p.x);
            out.dy[i] = static_cast<float>(cy - p.y);
            out.dx[i] = static_cast<float>(cx - p.x);
        }
    }
    return out;
}

std::vector<std::uint8_t> foreground_mask(const InstanceMap& inst) {
    std::vector<std::uint8_t> mask(inst.labels.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = inst.labels[i] > 0;
    return mask;
}

} // namespace panseg::targets
