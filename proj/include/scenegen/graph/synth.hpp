// Copyright (c) 2026 Scenegen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "scenegen/core/rng.hpp"
#include "scenegen/graph/scene.hpp"

namespace scenegen::graph {

/// Options for the synthetic scene sampler used by tests, demos and the
/// evaluation harness. Scenes are desk-scale stand-ins for real layouts:
/// furniture boxes resting on the ground plane, occasional stacked small
/// objects, and per-node style attributes.
struct SynthOptions {
    int min_objects = 3;
    int max_objects = 8;
    double room_extent = 3.0;  // centers drawn from [-extent, extent]^2
    bool include_floor = false;
    int rotation_bins = 24;
    double stack_probability = 0.35;  // chance of placing a small object on a large one
};

Scene random_scene(Rng& rng, const Vocabulary& vocab, const SynthOptions& opt = {});

}  // namespace scenegen::graph
