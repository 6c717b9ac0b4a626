#pragma once

// Procedural train/test splits used for desk-scale training runs.

#include <cstdio>
#include <string>
#include <vector>

#include "egospan/training.hpp"

namespace egospan {

inline std::string recipe_name(const SequenceRecipe& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_s%04llu", static_cast<unsigned long long>(r.seed));
  return std::string(motion_name(r.motion)) + buf;
}

inline const std::vector<ProceduralMotion>& seen_motions() {
  static const std::vector<ProceduralMotion> m = {ProceduralMotion::kStand, ProceduralMotion::kSit,
                                                  ProceduralMotion::kSquatCycle, ProceduralMotion::kWalkCycle,
                                                  ProceduralMotion::kArmWave};
  return m;
}

struct Split {
  std::vector<SequenceRecipe> train, test;
};

// Training sequences of each motion use seeds base .. base + n - 1; every
// seen motion gets one held-out sequence at base + 1000, and the unseen lean
// motion appears only in the test set.
inline Split motion_split(const std::vector<ProceduralMotion>& train_motions, std::size_t seeds_per_motion,
                          std::size_t frames = 120, std::uint64_t base = 100, std::size_t unseen_sequences = 2) {
  Split s;
  for (auto m : train_motions) {
    for (std::size_t i = 0; i < seeds_per_motion; ++i) s.train.push_back({m, base + i, frames, true});
    s.test.push_back({m, base + 1000, frames, true});
  }
  for (std::size_t i = 0; i < unseen_sequences; ++i)
    s.test.push_back({ProceduralMotion::kLean, base + 1000 + i, frames, true});
  return s;
}

// Six motions, about 3600 training frames.
inline Split desk_split(std::uint64_t base = 100) { return motion_split(seen_motions(), 6, 120, base); }

// Stationary standing and sitting only.
inline Split stand_sit_split(std::uint64_t base = 300) {
  return motion_split({ProceduralMotion::kStand, ProceduralMotion::kSit}, 6, 120, base, 0);
}

inline std::vector<FrameSample> build_samples(const std::vector<SequenceRecipe>& recipes, const FisheyeIntrinsics& k,
                                              const SequenceConfig& cfg = {}, bool with_distance = true) {
  std::vector<FrameSample> out;
  for (const auto& r : recipes) {
    const Sequence seq = generate_recipe(r, k, cfg);
    const std::string name = recipe_name(r);
    for (const auto& f : seq.frames) out.push_back(make_sample(name, f, with_distance));
  }
  return out;
}

}  // namespace egospan
