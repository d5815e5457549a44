#pragma once

// SceneScript <-> canonical JSON. The serialized form lives inside every
// video's metadata sidecar and must re-simulate to the exact same video,
// so generators snap all continuous values to 9 significant digits.

#include "voe/canonical_json.hpp"
#include "voe/scene.hpp"

namespace voe::io {

Json script_to_json(const scene::SceneScript& s);
scene::SceneScript script_from_json(const Json& j);

}  // namespace voe::io
