#pragma once

// Overwrite / augmentation analysis over chronologically ordered slices.
// Later ink that covers earlier ink heavily replaces it; later ink that only
// touches earlier ink extends it.

#include <optional>
#include <vector>

#include "clockst/geometry.hpp"
#include "clockst/recognizer.hpp"
#include "clockst/stslice.hpp"

namespace clockst {

struct OverwriteThresholds {
  double overwrite = 0.60;   // theta1
  double augment = 0.05;     // theta2
};

struct OverwriteEvent {
  STSlice removed;
  int by_layer = 0;  // layer of the overwriting slice
  double overlap = 0.0;
  ScoreVector classification;
};

struct AugmentationEvent {
  int base_layer = 0;
  int absorbed_layer = 0;
  std::vector<int> absorbed_strokes;
  double overlap = 0.0;
};

struct OverwriteResult {
  std::vector<STSlice> kept;
  std::vector<OverwriteEvent> overwrites;
  std::vector<AugmentationEvent> augmentations;
};

/// For each pair (i, j), j > i, in order: overlap above theta1 removes s_i
/// (classified first), overlap above theta2 folds s_j into s_i, which is then
/// compared against the remaining later slices. Removed slices are never
/// revisited.
inline OverwriteResult detect_overwrites(std::vector<STSlice> slices, const ClockGeometry& g,
                                         const RecognizerModel& recognizer, const OverwriteThresholds& th = {}) {
  // theta1 above 1 is accepted and simply disables overwrite detection.
  if (!(0.0 <= th.augment && th.augment < th.overwrite))
    throw Error("overwrite thresholds must satisfy 0 <= theta2 < theta1");
  const double buf = g.hull_buffer();
  const std::size_t n = slices.size();
  std::vector<bool> alive(n, true);
  std::vector<std::optional<ConvexPolygon>> hulls(n);
  auto hull = [&](std::size_t k) -> const ConvexPolygon& {
    if (!hulls[k]) hulls[k] = slice_hull(slices[k], buf);
    return *hulls[k];
  };

  OverwriteResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i]) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!alive[j]) continue;
      const double ov = hull_overlap(hull(i), hull(j));
      if (ov > th.overwrite) {
        out.overwrites.push_back({slices[i], slices[j].layer, ov, recognizer.recognize(slices[i].strokes)});
        alive[i] = false;
        break;
      }
      if (ov > th.augment) {
        out.augmentations.push_back({slices[i].layer, slices[j].layer, slices[j].stroke_ids(), ov});
        slices[i] = merge(slices[i], slices[j], g);
        hulls[i].reset();
        alive[j] = false;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (alive[i]) out.kept.push_back(std::move(slices[i]));
  return out;
}

}  // namespace clockst
