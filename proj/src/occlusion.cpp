#include "voe/occlusion.hpp"

#include <algorithm>

namespace voe::scene {

OcclusionMeasure occlusion_measure(const WorldState& state,
                                   const CameraSpec& camera, int target_id,
                                   std::span<const int> occluder_ids, int width,
                                   int height) {
    const render::Camera cam = render::make_camera(camera);

    WorldState without = state;
    for (auto& bs : without.bodies)
        if (std::find(occluder_ids.begin(), occluder_ids.end(), bs.body.id) !=
            occluder_ids.end())
            bs.visible = false;

    const auto ids_with = render::visibility_buffer(state, cam, width, height);
    const auto ids_without = render::visibility_buffer(without, cam, width, height);

    OcclusionMeasure m;
    std::size_t hidden = 0;
    for (std::size_t i = 0; i < ids_without.size(); ++i) {
        if (ids_without[i] != target_id) continue;
        ++m.base_pixels;
        if (ids_with[i] != target_id) ++hidden;
    }
    m.fraction = m.base_pixels == 0
                     ? 1.0  // unobservable target
                     : static_cast<double>(hidden) / static_cast<double>(m.base_pixels);
    return m;
}

double occlusion_test_multi(const WorldState& state, const CameraSpec& camera,
                            int target_id, std::span<const int> occluder_ids,
                            int width, int height) {
    return occlusion_measure(state, camera, target_id, occluder_ids, width, height)
        .fraction;
}

double occlusion_test(const WorldState& state, const CameraSpec& camera,
                      int target_id, int occluder_id, int width, int height) {
    const int ids[1] = {occluder_id};
    return occlusion_test_multi(state, camera, target_id, std::span<const int>(ids, 1),
                                width, height);
}

}  // namespace voe::scene
