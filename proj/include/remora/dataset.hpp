#pragma once

#include <cstdint>
#include <vector>

#include "remora/config.hpp"
#include "remora/rmr.hpp"
#include "remora/synthflow.hpp"

namespace remora {

// Rendered motion specs kept inside the block-search budget so block matching
// stays well-posed (translations up to ~2.5 px with fractional parts,
// rotations |theta| <= 0.06, zooms within ~6%).
MotionSpec random_safe_spec(Rng& rng);
MotionSpec random_safe_spec_of_kind(int kind_index, Rng& rng);

// (block_match motion field, analytic flow) pairs from rendered clips:
// `clips` clips of `frames_per_clip` frames each, every consecutive pair
// contributing one sample.
std::vector<FlowSample> make_flow_dataset(const PipelineConfig& cfg, std::uint64_t seed,
                                          int clips, int frames_per_clip = 4);

// A deterministic multi-GOP stream for pipeline tests/benchmarks: `gops`
// scenes separated by hard content swaps.
GopStream make_demo_stream(const PipelineConfig& cfg, std::uint64_t seed, int gops,
                           int frames_per_gop);

}  // namespace remora
