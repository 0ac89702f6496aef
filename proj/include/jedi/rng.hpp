#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace jedi {

using Rng = std::mt19937_64;

// Every random decision in a run derives from one 64-bit root seed through a
// named sub-stream, optionally indexed (e.g. by teaching step). Indexed
// streams make draws replayable without carrying generator state around.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0);

inline Rng make_stream(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

namespace streams {
inline constexpr std::string_view kLearnerInit = "learner-init";
inline constexpr std::string_view kNoise = "noise";
inline constexpr std::string_view kTieBreak = "tie-break";
inline constexpr std::string_view kTeacher = "teacher";
inline constexpr std::string_view kSgd = "sgd";
inline constexpr std::string_view kDataset = "dataset";
inline constexpr std::string_view kSplit = "split";
inline constexpr std::string_view kEvaluation = "evaluation";
}  // namespace streams

// Uniform index in [0, n) from the given generator.
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace jedi
