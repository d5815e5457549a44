#pragma once

// Occlusion measurement from visibility buffers: how much of a target
// body the camera cannot see because of a given occluder.

#include <span>

#include "voe/render.hpp"
#include "voe/scene.hpp"

namespace voe::scene {

// Fraction of the target's projected pixels hidden by the occluder, from
// two visibility passes (with the occluder present vs removed). A target
// with no projected pixels even without the occluder (off-frame, absent
// or vanished) is unobservable and counts as fully occluded (1.0).
double occlusion_test(const WorldState& state, const CameraSpec& camera,
                      int target_id, int occluder_id, int width, int height);

// Same measure against a composite occluder (e.g. a screen plus pillars);
// the listed bodies are removed together for the reference pass.
double occlusion_test_multi(const WorldState& state, const CameraSpec& camera,
                            int target_id, std::span<const int> occluder_ids,
                            int width, int height);

// Raw measurement: base_pixels is the target's visible footprint with the
// occluder removed. Generators use this to tell "hidden by this occluder"
// (fraction 1, base > 0) apart from "not observable at all" (base == 0).
struct OcclusionMeasure {
    double fraction = 0.0;
    std::size_t base_pixels = 0;
};
OcclusionMeasure occlusion_measure(const WorldState& state,
                                   const CameraSpec& camera, int target_id,
                                   std::span<const int> occluder_ids, int width,
                                   int height);

}  // namespace voe::scene
